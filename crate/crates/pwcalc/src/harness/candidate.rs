//! Black-box binary operations fed to the suites.

use std::fmt;
use std::sync::Arc;

use crate::extended_sa::{ExtendedSelfAdjoint, Finite};
use crate::matrix_core::{hermitian_part, CMatrix, CVector};
use crate::perspectives_means::{connection, parallel_sum, perspective_of};
use crate::pw_calculus::{pw_apply, pw_apply_restricted, HomogeneousFunction, Side, ENDPOINT_TOL};
use crate::scalar_functions::ExtendedFunction;

use super::SuiteError;

pub type BinaryOp = dyn Fn(&CMatrix, &CMatrix) -> Result<ExtendedSelfAdjoint, String> + Send + Sync;

/// Which way the convexity-type inequalities are expected to point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Convex,
    Concave,
}

#[derive(Clone)]
pub struct Candidate {
    name: String,
    op: Arc<BinaryOp>,
    orientation: Orientation,
    homogeneous: Option<HomogeneousFunction>,
    generator: Option<ExtendedFunction>,
}

impl fmt::Debug for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Candidate").field("name", &self.name).field("orientation", &self.orientation).finish()
    }
}

impl Candidate {
    pub fn new(
        name: impl Into<String>,
        orientation: Orientation,
        op: impl Fn(&CMatrix, &CMatrix) -> Result<ExtendedSelfAdjoint, String> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), op: Arc::new(op), orientation, homogeneous: None, generator: None }
    }

    /// (A, B) ↦ φ_f(A, B).
    pub fn perspective(f: &ExtendedFunction) -> Result<Self, SuiteError> {
        let phi = perspective_of(f)?;
        let mut c = Self::pw(phi);
        c.name = format!("perspective({})", f.name());
        c.generator = Some(f.clone());
        Ok(c)
    }

    /// The two-variable calculus of `phi` on the full cone.
    pub fn pw(phi: HomogeneousFunction) -> Self {
        let inner = phi.clone();
        let mut c = Self::new(format!("pw({})", phi.name()), Orientation::Convex, move |a, b| {
            pw_apply(&inner, a, b).map_err(|e| e.to_string())
        });
        c.homogeneous = Some(phi);
        c
    }

    /// The calculus of a restricted-domain `phi`, defined on pairs dominated per `side`.
    pub fn restricted(phi: HomogeneousFunction, side: Side, orientation: Orientation) -> Self {
        let inner = phi.clone();
        let mut c = Self::new(format!("restricted({})", phi.name()), orientation, move |a, b| {
            pw_apply_restricted(&inner, a, b, side).map_err(|e| e.to_string())
        });
        c.homogeneous = Some(phi);
        c
    }

    /// (A, B) ↦ A σ_h B.
    pub fn connection(h: &ExtendedFunction) -> Result<Self, SuiteError> {
        perspective_of(h)?;
        let inner = h.clone();
        Ok(Self::new(format!("connection({})", h.name()), Orientation::Concave, move |a, b| {
            let m = connection(&inner, a, b).map_err(|e| e.to_string())?;
            ExtendedSelfAdjoint::bounded(&m).map_err(|e| e.to_string())
        }))
    }

    pub fn parallel_sum() -> Self {
        Self::new("parallel-sum", Orientation::Concave, |a, b| {
            let m = parallel_sum(a, b).map_err(|e| e.to_string())?;
            ExtendedSelfAdjoint::bounded(&m).map_err(|e| e.to_string())
        })
    }

    /// (A, B) ↦ AB + BA.
    pub fn anticommutator() -> Self {
        Self::new("anticommutator", Orientation::Convex, |a, b| {
            ExtendedSelfAdjoint::bounded(&hermitian_part(&(a * b + b * a))).map_err(|e| e.to_string())
        })
    }

    /// φ_f(A, B) + vv* for a fixed vector v (padded or cut to the dimension at hand).
    pub fn biased(f: &ExtendedFunction, v: CVector) -> Result<Self, SuiteError> {
        let base = Self::perspective(f)?;
        let op = base.op.clone();
        Ok(Self::new(format!("biased({})", f.name()), Orientation::Convex, move |a, b| {
            let n = a.nrows();
            let w = CVector::from_fn(n, |i, _| if i < v.len() { v[i] } else { Default::default() });
            let bias = ExtendedSelfAdjoint::bounded(&(&w * w.adjoint())).map_err(|e| e.to_string())?;
            op(a, b)?.add(&bias).map_err(|e| e.to_string())
        }))
    }

    /// (A, B) ↦ -Φ(A, B) for a bounded-valued candidate; flips the orientation.
    pub fn negated(inner: Candidate) -> Self {
        let op = inner.op.clone();
        let orientation = match inner.orientation {
            Orientation::Convex => Orientation::Concave,
            Orientation::Concave => Orientation::Convex,
        };
        Self::new(format!("negated({})", inner.name), orientation, move |a, b| {
            let v = op(a, b)?;
            let m = v.to_matrix().ok_or_else(|| "cannot negate a value with an infinite part".to_string())?;
            ExtendedSelfAdjoint::bounded(&(-m)).map_err(|e| e.to_string())
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn homogeneous(&self) -> Option<&HomogeneousFunction> {
        self.homogeneous.as_ref()
    }

    pub fn generator(&self) -> Option<&ExtendedFunction> {
        self.generator.as_ref()
    }

    pub fn apply(&self, a: &CMatrix, b: &CMatrix) -> Result<ExtendedSelfAdjoint, String> {
        (self.op)(a, b)
    }

    /// Whether the generating φ is known to be ℝ-valued and continuous on the
    /// closed diagonal, judged on a 1001-point grid.
    pub fn is_real_valued(&self) -> bool {
        let Some(phi) = &self.homogeneous else { return false };
        let corners_finite = matches!(phi.one_zero(), Some(Finite(_))) && matches!(phi.zero_one(), Some(Finite(_)));
        corners_finite
            && (0..=1000).all(|i| matches!(phi.diagonal_value(i as f64 / 1000.0, ENDPOINT_TOL), Ok(Finite(v)) if v.is_finite()))
    }

    /// φ(1, 0) when known.
    pub fn one_zero(&self) -> Option<f64> {
        self.homogeneous.as_ref().and_then(|p| p.one_zero()).map(|v| v.to_f64())
    }
}

/// The restricted y log(x/y) of the concave examples, for pairs with A ≥ αB.
pub fn restricted_ylogxy() -> Result<Candidate, SuiteError> {
    let phi = HomogeneousFunction::restricted_ge("ylogxy", crate::scalar_functions::ylogxy_diagonal(), Finite(0.0))?;
    Ok(Candidate::restricted(phi, Side::Ge, Orientation::Concave))
}
