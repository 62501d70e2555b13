//! Two-variable functional calculus φ(A, B) for positive semidefinite pairs
//! and homogeneous φ, built on the compatible representation of (A, B).

use thiserror::Error;

use crate::extended_sa::{ExtendedError, ExtendedReal, ExtendedSelfAdjoint, Finite, Infinite};
use crate::matrix_core::{
    check_psd, eigh, hermitian_part, identity, op_norm, pinv_sqrt, positive_spectrum, psd_sqrt, range_of, CMatrix,
    LinalgError, Subspace,
};
use crate::scalar_functions::{calculus, ExtendedFunction, FunctionError, Interval};

/// Eigenvalues of R within this distance of 0 or 1 take the corner values.
pub const ENDPOINT_TOL: f64 = 1e-10;

/// Commutator tolerance relative to ‖A‖‖B‖ for the commuting oracle.
pub const COMMUTING_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PwError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("`{name}` has no value at t = {t}")]
    BadDiagonal { name: String, t: f64 },
    #[error("`{name}` has no corner value at t = {t}")]
    MissingCorner { name: String, t: f64 },
    #[error("corner value {corner} disagrees with diagonal value {diagonal} at t = {t}")]
    CornerMismatch { t: f64, corner: ExtendedReal, diagonal: ExtendedReal },
    #[error("pair does not commute: ‖AB - BA‖ = {deviation:e}")]
    NotCommuting { deviation: f64 },
    #[error("neither A nor B is invertible")]
    NotInvertible,
    #[error("domination fails: {which} has eigenvalue {eigenvalue:e} within {tol:e} of the excluded endpoint")]
    NotDominated { which: &'static str, eigenvalue: f64, tol: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Extended(#[from] ExtendedError),
    #[error(transparent)]
    Function(#[from] FunctionError),
}

/// Where the diagonal t ↦ φ(t, 1-t) is defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalDomain {
    /// [0, 1]
    Closed,
    /// (0, 1], used on pairs with A ≥ αB
    OpenAtZero,
    /// [0, 1), used on pairs with B ≥ αA
    OpenAtOne,
}

/// φ: [0,∞)² → (-∞, ∞], positively homogeneous, with φ(0,0) = 0.
#[derive(Debug, Clone)]
pub struct HomogeneousFunction {
    name: String,
    diagonal: ExtendedFunction,
    one_zero: Option<ExtendedReal>,
    zero_one: Option<ExtendedReal>,
    domain: DiagonalDomain,
}

impl HomogeneousFunction {
    /// Full-domain φ given by its diagonal and the corners φ(1,0), φ(0,1).
    pub fn new(
        name: impl Into<String>,
        diagonal: ExtendedFunction,
        one_zero: ExtendedReal,
        zero_one: ExtendedReal,
    ) -> Result<Self, PwError> {
        Self::build(name.into(), diagonal, Some(one_zero), Some(zero_one), DiagonalDomain::Closed)
    }

    /// Diagonal on (0, 1]: only φ(1,0) is needed.
    pub fn restricted_ge(name: impl Into<String>, diagonal: ExtendedFunction, one_zero: ExtendedReal) -> Result<Self, PwError> {
        Self::build(name.into(), diagonal, Some(one_zero), None, DiagonalDomain::OpenAtZero)
    }

    /// Diagonal on [0, 1): only φ(0,1) is needed.
    pub fn restricted_le(name: impl Into<String>, diagonal: ExtendedFunction, zero_one: ExtendedReal) -> Result<Self, PwError> {
        Self::build(name.into(), diagonal, None, Some(zero_one), DiagonalDomain::OpenAtOne)
    }

    fn build(
        name: String,
        diagonal: ExtendedFunction,
        one_zero: Option<ExtendedReal>,
        zero_one: Option<ExtendedReal>,
        domain: DiagonalDomain,
    ) -> Result<Self, PwError> {
        let j = diagonal.domain();
        for (t, corner, closed) in [(1.0, one_zero, j.hi_closed), (0.0, zero_one, j.lo_closed)] {
            if let (Some(corner), true) = (corner, closed && j.contains(t)) {
                let value = diagonal.eval(t)?;
                let agree = match (corner, value) {
                    (Infinite, Infinite) => true,
                    (Finite(a), Finite(b)) => (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
                    _ => false,
                };
                if !agree {
                    return Err(PwError::CornerMismatch { t, corner, diagonal: value });
                }
            }
        }
        Ok(Self { name, diagonal, one_zero, zero_one, domain })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn diagonal(&self) -> &ExtendedFunction {
        &self.diagonal
    }

    pub fn domain(&self) -> DiagonalDomain {
        self.domain
    }

    /// φ(1, 0).
    pub fn one_zero(&self) -> Option<ExtendedReal> {
        self.one_zero
    }

    /// φ(0, 1).
    pub fn zero_one(&self) -> Option<ExtendedReal> {
        self.zero_one
    }

    /// φ(t, 1-t) with t snapped to a corner when within `tol` of 0 or 1.
    pub fn diagonal_value(&self, t: f64, tol: f64) -> Result<ExtendedReal, PwError> {
        let corner = if t >= 1.0 - tol {
            Some(self.one_zero)
        } else if t <= tol {
            Some(self.zero_one)
        } else {
            None
        };
        match corner {
            Some(Some(v)) => Ok(v),
            Some(None) => Err(PwError::MissingCorner { name: self.name.clone(), t }),
            None => {
                let raw = self.diagonal.raw(t);
                ExtendedReal::new(raw).map_err(|_| PwError::BadDiagonal { name: self.name.clone(), t })
            }
        }
    }

    /// φ(x, y) = (x+y) φ(x/(x+y), y/(x+y)); φ(0, 0) = 0.
    pub fn eval(&self, x: f64, y: f64) -> Result<ExtendedReal, PwError> {
        self.eval_with_tol(x, y, ENDPOINT_TOL)
    }

    pub fn eval_with_tol(&self, x: f64, y: f64, tol: f64) -> Result<ExtendedReal, PwError> {
        let s = x + y;
        if s <= 0.0 {
            return Ok(Finite(0.0));
        }
        Ok(self.diagonal_value((x / s).clamp(0.0, 1.0), tol)?.scale(s)?)
    }

    /// Finite values on grids inside [δ, 1-δ] for shrinking δ.
    pub fn is_locally_bounded_below(&self) -> bool {
        (1..=6).all(|k| {
            let delta = 10f64.powi(-k);
            (0..=200).all(|i| {
                let t = delta + (1.0 - 2.0 * delta) * i as f64 / 200.0;
                let v = self.diagonal.raw(t);
                !v.is_nan() && v != f64::NEG_INFINITY
            })
        })
    }
}

/// (A, B) = (T*RT, T*ST) with R + S = I on the range of A + B.
#[derive(Debug, Clone)]
pub struct CompatibleRepresentation {
    /// Range of A + B in the ambient space.
    pub range: Subspace,
    /// r × n: (A+B)^{1/2} in range coordinates.
    pub t: CMatrix,
    pub r: CMatrix,
    pub s: CMatrix,
}

impl CompatibleRepresentation {
    pub fn rank(&self) -> usize {
        self.range.dim()
    }
}

fn same_dims(a: &CMatrix, b: &CMatrix) -> Result<usize, PwError> {
    let n = crate::matrix_core::check_square(a)?;
    let m = crate::matrix_core::check_square(b)?;
    if n != m {
        return Err(PwError::DimensionMismatch(n, m));
    }
    Ok(n)
}

pub fn compatible_representation(a: &CMatrix, b: &CMatrix) -> Result<CompatibleRepresentation, PwError> {
    same_dims(a, b)?;
    check_psd(a)?;
    check_psd(b)?;
    let spec = positive_spectrum(&hermitian_part(&(a + b)), None)?;
    let v = spec.range.basis();
    let root: Vec<f64> = spec.values.iter().map(|x| x.sqrt()).collect();
    let r_dim = root.len();
    let t = CMatrix::from_fn(r_dim, v.nrows(), |i, j| v[(j, i)].conj() * root[i]);
    let compressed = v.adjoint() * a * v;
    let raw = CMatrix::from_fn(r_dim, r_dim, |i, j| compressed[(i, j)] / (root[i] * root[j]));
    let r = eigh(&raw)?.map(|x| x.clamp(0.0, 1.0));
    let s = identity(r_dim) - &r;
    Ok(CompatibleRepresentation { range: spec.range, t, r, s })
}

/// Result of [`pw_apply_with`] along with the spectrum of R that produced it.
#[derive(Debug, Clone)]
pub struct PwOutput {
    pub value: ExtendedSelfAdjoint,
    pub r_eigenvalues: Vec<f64>,
    /// Eigenvalues of R classified as 0 and as 1.
    pub hits_at_zero: usize,
    pub hits_at_one: usize,
}

fn assemble(phi: &HomogeneousFunction, rep: &CompatibleRepresentation, n: usize, tol: f64) -> Result<PwOutput, PwError> {
    if rep.rank() == 0 {
        return Ok(PwOutput { value: ExtendedSelfAdjoint::zero(n), r_eigenvalues: Vec::new(), hits_at_zero: 0, hits_at_one: 0 });
    }
    let e = eigh(&rep.r)?;
    let mut pairs = Vec::with_capacity(e.dim());
    for (k, &t) in e.values.iter().enumerate() {
        pairs.push((phi.diagonal_value(t, tol)?, e.column(k)));
    }
    let middle = ExtendedSelfAdjoint::make_extended(&pairs)?;
    Ok(PwOutput {
        value: middle.congruence(&rep.t)?,
        hits_at_zero: e.values.iter().filter(|&&t| t <= tol).count(),
        hits_at_one: e.values.iter().filter(|&&t| t >= 1.0 - tol).count(),
        r_eigenvalues: e.values,
    })
}

/// φ(A, B) = T* φ(R, I-R) T, zero on ker(A+B).
pub fn pw_apply(phi: &HomogeneousFunction, a: &CMatrix, b: &CMatrix) -> Result<ExtendedSelfAdjoint, PwError> {
    Ok(pw_apply_with(phi, a, b, ENDPOINT_TOL)?.value)
}

pub fn pw_apply_with(phi: &HomogeneousFunction, a: &CMatrix, b: &CMatrix, endpoint_tol: f64) -> Result<PwOutput, PwError> {
    let n = same_dims(a, b)?;
    let rep = compatible_representation(a, b)?;
    assemble(phi, &rep, n, endpoint_tol)
}

/// Σ φ(x_i, y_i) over a joint eigenbasis of a commuting pair.
pub fn pw_commuting_oracle(phi: &HomogeneousFunction, a: &CMatrix, b: &CMatrix) -> Result<ExtendedSelfAdjoint, PwError> {
    let n = same_dims(a, b)?;
    let (na, nb) = (op_norm(a), op_norm(b));
    let deviation = op_norm(&(a * b - b * a));
    if deviation > COMMUTING_TOL * (na * nb).max(f64::MIN_POSITIVE) {
        return Err(PwError::NotCommuting { deviation });
    }
    let ea = check_psd(a)?;
    let sum_tol = n as f64 * f64::EPSILON * (na + nb);
    let cluster_tol = 1e-8 * na.max(1.0);
    let mut pairs = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && ea.values[end] - ea.values[end - 1] <= cluster_tol {
            end += 1;
        }
        let block = ea.vectors.columns(start, end - start).into_owned();
        let eb = eigh(&(block.adjoint() * b * &block))?;
        for k in 0..eb.dim() {
            let v = &block * eb.column(k);
            let x = v.dotc(&(a * &v)).re.max(0.0);
            let y = v.dotc(&(b * &v)).re.max(0.0);
            let value = if x + y <= sum_tol { Finite(0.0) } else { phi.eval(x, y)? };
            pairs.push((value, v));
        }
        start = end;
    }
    if pairs.is_empty() {
        return Ok(ExtendedSelfAdjoint::zero(0));
    }
    Ok(ExtendedSelfAdjoint::make_extended(&pairs)?)
}

/// φ(A, αI), φ(αI, A) and φ(αA, βA) by the one-variable calculus.
#[derive(Debug, Clone)]
pub struct SpecialValues {
    pub with_scalar_second: ExtendedSelfAdjoint,
    pub with_scalar_first: ExtendedSelfAdjoint,
    pub scaled_pair: ExtendedSelfAdjoint,
}

fn slice_function(phi: &HomogeneousFunction, name: String, f: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> ExtendedFunction {
    let phi = phi.clone();
    ExtendedFunction::new(name, Interval::NONNEGATIVE, move |t| {
        let (x, y) = f(t);
        phi.eval(x, y).map_or(f64::NAN, ExtendedReal::to_f64)
    })
}

pub fn special_values(phi: &HomogeneousFunction, a: &CMatrix, alpha: f64, beta: f64) -> Result<SpecialValues, PwError> {
    let second = slice_function(phi, format!("{}(t, {alpha})", phi.name), move |t| (t, alpha));
    let first = slice_function(phi, format!("{}({alpha}, t)", phi.name), move |t| (alpha, t));
    let corner = phi.eval(alpha, beta)?.to_f64();
    let scaled = ExtendedFunction::new("t·φ(α,β)", Interval::NONNEGATIVE, move |t| if t == 0.0 { 0.0 } else { t * corner });
    Ok(SpecialValues {
        with_scalar_second: calculus(&second, a)?,
        with_scalar_first: calculus(&first, a)?,
        scaled_pair: calculus(&scaled, a)?,
    })
}

fn is_invertible(m: &CMatrix) -> Result<bool, PwError> {
    let e = check_psd(m)?;
    Ok(e.values.first().is_some_and(|&low| low > e.default_rank_tol()))
}

/// B^{1/2} φ(B^{-1/2}AB^{-1/2}, I) B^{1/2} when B is invertible, otherwise the
/// mirrored formula through A.
pub fn invertible_formula(phi: &HomogeneousFunction, a: &CMatrix, b: &CMatrix) -> Result<ExtendedSelfAdjoint, PwError> {
    same_dims(a, b)?;
    let (outer, inner, first_slot) = if is_invertible(b)? {
        (b, a, true)
    } else if is_invertible(a)? {
        (a, b, false)
    } else {
        return Err(PwError::NotInvertible);
    };
    let root = psd_sqrt(outer)?;
    let inv_root = pinv_sqrt(outer, None)?.matrix;
    let x = hermitian_part(&(&inv_root * inner * &inv_root));
    let g = if first_slot {
        slice_function(phi, format!("{}(t, 1)", phi.name), |t| (t, 1.0))
    } else {
        slice_function(phi, format!("{}(1, t)", phi.name), |t| (1.0, t))
    };
    Ok(calculus(&g, &x)?.congruence(&root)?)
}

#[derive(Debug, Clone)]
pub enum HomogeneityReport {
    Skipped { reason: String },
    Checked {
        holds: bool,
        /// Largest eigenvalue deviation of the finite parts; `None` when the ∞-parts differ.
        deviation: Option<f64>,
    },
}

impl HomogeneityReport {
    pub fn holds(&self) -> Option<bool> {
        match self {
            Self::Skipped { .. } => None,
            Self::Checked { holds, .. } => Some(*holds),
        }
    }
}

/// φ(C*AC, C*BC) against C*φ(A,B)C for C: K → H with range(A+B) ⊆ range(C).
pub fn check_homogeneity(phi: &HomogeneousFunction, a: &CMatrix, b: &CMatrix, c: &CMatrix, slack: f64) -> Result<HomogeneityReport, PwError> {
    let n = same_dims(a, b)?;
    if c.nrows() != n {
        return Err(PwError::DimensionMismatch(n, c.nrows()));
    }
    let norm_c = op_norm(c);
    let range_c = range_of(c, 16.0 * n.max(c.ncols()) as f64 * f64::EPSILON * norm_c);
    let range_sum = positive_spectrum(&hermitian_part(&(a + b)), None)?.range;
    if range_c.contains(&range_sum, crate::extended_sa::CONTAINMENT_TOL).is_err() {
        return Ok(HomogeneityReport::Skipped { reason: "range(A+B) is not contained in range(C)".into() });
    }
    let ca = hermitian_part(&(c.adjoint() * a * c));
    let cb = hermitian_part(&(c.adjoint() * b * c));
    let lhs = pw_apply(phi, &ca, &cb)?;
    let rhs = pw_apply(phi, a, b)?.congruence(c)?;
    Ok(HomogeneityReport::Checked { holds: lhs.approx_eq(&rhs, slack), deviation: lhs.finite_distance(&rhs) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// A ≥ αB for some α > 0.
    Ge,
    /// B ≥ αA for some α > 0.
    Le,
}

/// φ(A, B) for φ defined only on the restricted cone of `side`.
pub fn pw_apply_restricted(phi: &HomogeneousFunction, a: &CMatrix, b: &CMatrix, side: Side) -> Result<ExtendedSelfAdjoint, PwError> {
    let n = same_dims(a, b)?;
    let rep = compatible_representation(a, b)?;
    if rep.rank() > 0 {
        let e = eigh(&rep.r)?;
        match side {
            Side::Ge => {
                let low = e.values[0];
                if low <= ENDPOINT_TOL {
                    return Err(PwError::NotDominated { which: "R", eigenvalue: low, tol: ENDPOINT_TOL });
                }
            }
            Side::Le => {
                let low = 1.0 - e.values[e.dim() - 1];
                if low <= ENDPOINT_TOL {
                    return Err(PwError::NotDominated { which: "S", eigenvalue: low, tol: ENDPOINT_TOL });
                }
            }
        }
    }
    Ok(assemble(phi, &rep, n, ENDPOINT_TOL)?.value)
}

/// Whether the restricted diagonal stays finite and bounded on [δ, 1]
/// (or [0, 1-δ]) for δ down to 1e-6: refining the grid eightfold must not
/// blow up the supremum.
pub fn check_restricted_bounded(phi: &HomogeneousFunction) -> bool {
    const COARSE: usize = 200;
    let sup = |delta: f64, points: usize| -> Option<f64> {
        let mut best = 0.0f64;
        for i in 0..=points {
            let u = i as f64 / points as f64;
            let t = match phi.domain {
                DiagonalDomain::OpenAtOne => (1.0 - delta) * u,
                _ => delta + (1.0 - delta) * u,
            };
            match phi.diagonal_value(t, ENDPOINT_TOL) {
                Ok(Finite(v)) if v.is_finite() => best = best.max(v.abs()),
                _ => return None,
            }
        }
        Some(best)
    };
    (1..=6).all(|k| {
        let delta = 10f64.powi(-k);
        match (sup(delta, COARSE), sup(delta, 8 * COARSE)) {
            (Some(coarse), Some(fine)) => fine <= 2.0 * coarse + 1.0,
            _ => false,
        }
    })
}
