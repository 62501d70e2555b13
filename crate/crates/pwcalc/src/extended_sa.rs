//! Extended self-adjoint values: a Hermitian operator on an essential subspace
//! and +∞ on its orthogonal complement, identified with lower semibounded
//! quadratic forms and with additive functionals on states.

use std::fmt;
use std::ops::Add;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::matrix_core::{
    eigh, hermitian_part, kernel_of, op_norm, subspace_meet, CMatrix, CVector, ComplexGrid, LinalgError,
    MatrixFileError, State, Subspace, C64, ORTHONORMAL_TOL,
};

/// Containment tolerance on principal-angle cosines used by [`ExtendedSelfAdjoint::form_leq`].
pub const CONTAINMENT_TOL: f64 = 1e-8;

/// A state whose weight on the ∞-part is at most this fraction of its trace evaluates finite.
pub const STATE_INFINITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtendedError {
    #[error("NaN is not an extended real")]
    NotANumber,
    #[error("-inf is not an extended real")]
    NegativeInfinity,
    #[error("inf - inf is undefined")]
    InfinityMinusInfinity,
    #[error("scale factor must be non-negative, got {0}")]
    NegativeScale(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("eigenvectors are not orthonormal: Gram entry ({row}, {col}) is off by {deviation:e}")]
    NotOrthonormal { row: usize, col: usize, deviation: f64 },
    #[error("expected {expected} eigenpairs spanning the space, got {found}")]
    IncompleteBasis { expected: usize, found: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A value in (-∞, +∞]. NaN and -∞ are unrepresentable.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

pub use ExtendedReal::{Finite, Infinite};

impl ExtendedReal {
    pub const ZERO: ExtendedReal = Finite(0.0);

    pub fn new(x: f64) -> Result<Self, ExtendedError> {
        if x.is_nan() {
            Err(ExtendedError::NotANumber)
        } else if x == f64::INFINITY {
            Ok(Infinite)
        } else if x == f64::NEG_INFINITY {
            Err(ExtendedError::NegativeInfinity)
        } else {
            Ok(Finite(x))
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Finite(x) => Some(x),
            Infinite => None,
        }
    }

    /// As an IEEE double, with +∞ for the infinite value.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// α · x for α ≥ 0 with 0 · ∞ = 0.
    pub fn scale(self, alpha: f64) -> Result<Self, ExtendedError> {
        if alpha.is_nan() || alpha < 0.0 {
            return Err(ExtendedError::NegativeScale(alpha));
        }
        Ok(match self {
            Finite(x) => Finite(alpha * x),
            Infinite if alpha == 0.0 => Finite(0.0),
            Infinite => Infinite,
        })
    }

    /// Multiplication by a finite real of either sign; ∞ only tolerates c ≥ 0.
    pub fn mul_real(self, c: f64) -> Result<Self, ExtendedError> {
        match self {
            Finite(x) => Self::new(c * x),
            Infinite => self.scale(c),
        }
    }

    pub fn checked_sub(self, other: Self) -> Result<Self, ExtendedError> {
        match (self, other) {
            (Finite(a), Finite(b)) => Ok(Finite(a - b)),
            (Infinite, Finite(_)) => Ok(Infinite),
            (_, Infinite) => Err(ExtendedError::InfinityMinusInfinity),
        }
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Finite(a), Finite(b)) => Finite(a + b),
            _ => Infinite,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finite(x) => write!(f, "{x}"),
            Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Finite(x) => s.serialize_f64(*x),
            Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(x) => ExtendedReal::new(x).map_err(de::Error::custom),
            Repr::Text(t) if t == "inf" => Ok(Infinite),
            Repr::Text(t) => Err(de::Error::custom(format!("expected a number or \"inf\", found {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Bounded,
    /// Not produced in finite dimension, where a dense domain is the whole space.
    DenseDomain,
    ProperInfinityPart,
}

/// Outcome of a form comparison T₁ ≤ T₂.
#[derive(Debug, Clone)]
pub struct FormComparison {
    pub holds: bool,
    /// Set when ess(T₂) ⊄ ess(T₁).
    pub domain_violation: bool,
    /// Smallest eigenvalue of q₂ - q₁ on ess(T₂) (∞ if that space is zero).
    pub min_gap: f64,
    /// ξ with q₁(ξ) > q₂(ξ) + slack when the comparison fails.
    pub witness: Option<CVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedSelfAdjoint {
    essential: Subspace,
    finite_part: CMatrix,
    lower_bound: f64,
}

impl ExtendedSelfAdjoint {
    /// Hermitian `finite_part` given in the coordinates of `essential`.
    pub fn from_parts(essential: Subspace, finite_part: CMatrix) -> Result<Self, ExtendedError> {
        let k = essential.dim();
        if finite_part.nrows() != k || finite_part.ncols() != k {
            return Err(ExtendedError::DimensionMismatch { expected: k, found: finite_part.nrows() });
        }
        let finite_part = hermitian_part(&finite_part);
        let lower_bound = if k == 0 { 0.0 } else { eigh(&finite_part)?.values[0] };
        Ok(Self { essential, finite_part, lower_bound })
    }

    pub fn bounded(m: &CMatrix) -> Result<Self, ExtendedError> {
        let n = crate::matrix_core::check_square(m)?;
        Self::from_parts(Subspace::full(n), m.clone())
    }

    pub fn zero(n: usize) -> Self {
        Self { essential: Subspace::full(n), finite_part: CMatrix::zeros(n, n), lower_bound: 0.0 }
    }

    /// +∞ on `part`, 0 on its complement.
    pub fn infinite_on(part: &Subspace) -> Self {
        let essential = part.complement();
        let k = essential.dim();
        Self { essential, finite_part: CMatrix::zeros(k, k), lower_bound: 0.0 }
    }

    /// Σ λ_i ξ_i ξ_i* over an orthonormal eigenbasis, with λ_i = ∞ allowed.
    pub fn make_extended(pairs: &[(ExtendedReal, CVector)]) -> Result<Self, ExtendedError> {
        let n = pairs.first().map_or(0, |(_, v)| v.len());
        if pairs.len() != n {
            return Err(ExtendedError::IncompleteBasis { expected: n, found: pairs.len() });
        }
        for (i, (_, u)) in pairs.iter().enumerate() {
            if u.len() != n {
                return Err(ExtendedError::DimensionMismatch { expected: n, found: u.len() });
            }
            for (j, (_, v)) in pairs.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                let deviation = (u.dotc(v) - C64::new(target, 0.0)).norm();
                if deviation > ORTHONORMAL_TOL {
                    return Err(ExtendedError::NotOrthonormal { row: i, col: j, deviation });
                }
            }
        }
        let finite: Vec<(f64, &CVector)> = pairs.iter().filter_map(|(l, v)| l.finite().map(|x| (x, v))).collect();
        let basis = CMatrix::from_fn(n, finite.len(), |i, j| finite[j].1[i]);
        let values: Vec<f64> = finite.iter().map(|(x, _)| *x).collect();
        let lower_bound = values.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            essential: Subspace::from_orthonormal(basis),
            finite_part: crate::matrix_core::diag(&values),
            lower_bound: if values.is_empty() { 0.0 } else { lower_bound },
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.essential.ambient_dim()
    }

    pub fn essential(&self) -> &Subspace {
        &self.essential
    }

    pub fn infinity_part(&self) -> Subspace {
        self.essential.complement()
    }

    pub fn infinity_dim(&self) -> usize {
        self.ambient_dim() - self.essential.dim()
    }

    pub fn finite_part(&self) -> &CMatrix {
        &self.finite_part
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn is_bounded(&self) -> bool {
        self.infinity_dim() == 0
    }

    /// E F E*: the finite part as an operator on the ambient space, zero on the ∞-part.
    pub fn embedded_finite_part(&self) -> CMatrix {
        let e = self.essential.basis();
        hermitian_part(&(e * &self.finite_part * e.adjoint()))
    }

    /// The operator itself when bounded.
    pub fn to_matrix(&self) -> Option<CMatrix> {
        self.is_bounded().then(|| self.embedded_finite_part())
    }

    pub fn classify(&self) -> Classification {
        if self.is_bounded() {
            Classification::Bounded
        } else {
            Classification::ProperInfinityPart
        }
    }

    pub fn trace(&self) -> ExtendedReal {
        if self.is_bounded() {
            Finite(self.finite_part.trace().re)
        } else {
            Infinite
        }
    }

    /// Operator norm, ∞ when there is an ∞-part.
    pub fn norm(&self) -> ExtendedReal {
        if self.is_bounded() {
            Finite(op_norm(&self.finite_part))
        } else {
            Infinite
        }
    }

    fn check_dim(&self, n: usize) -> Result<(), ExtendedError> {
        if n != self.ambient_dim() {
            return Err(ExtendedError::DimensionMismatch { expected: self.ambient_dim(), found: n });
        }
        Ok(())
    }

    /// Tr(ρ E F E*) if ρ gives weight ≤ 1e-12 · Tr ρ to the ∞-part, else ∞.
    pub fn evaluate_state(&self, rho: &State) -> Result<ExtendedReal, ExtendedError> {
        self.check_dim(rho.dim())?;
        let e = self.essential.basis();
        let compressed = e.adjoint() * rho.density() * e;
        let weight_infinite = rho.trace() - compressed.trace().re;
        if weight_infinite > STATE_INFINITY_TOL * rho.trace() {
            return Ok(Infinite);
        }
        Ok(Finite((compressed * &self.finite_part).trace().re))
    }

    pub fn quadratic_form(&self, xi: &CVector) -> Result<ExtendedReal, ExtendedError> {
        self.check_dim(xi.len())?;
        let norm2 = xi.norm_squared();
        if norm2 == 0.0 {
            return Ok(Finite(0.0));
        }
        let coords = self.essential.basis().adjoint() * xi;
        if norm2 - coords.norm_squared() > STATE_INFINITY_TOL * norm2 {
            return Ok(Infinite);
        }
        Ok(Finite(coords.dotc(&(&self.finite_part * &coords)).re))
    }

    /// Form sum: essential parts intersect, finite forms add on the intersection.
    pub fn add(&self, other: &Self) -> Result<Self, ExtendedError> {
        self.check_dim(other.ambient_dim())?;
        let meet = subspace_meet(&self.essential, &other.essential);
        let m = meet.basis();
        let sum = m.adjoint() * (self.embedded_finite_part() + other.embedded_finite_part()) * m;
        Self::from_parts(meet, sum)
    }

    pub fn scale(&self, alpha: f64) -> Result<Self, ExtendedError> {
        if alpha.is_nan() || alpha < 0.0 {
            return Err(ExtendedError::NegativeScale(alpha));
        }
        if alpha == 0.0 {
            return Ok(Self::zero(self.ambient_dim()));
        }
        Self::from_parts(self.essential.clone(), self.finite_part.scale(alpha))
    }

    /// C*TC for C: K → H given as an (dim H) × (dim K) matrix.
    pub fn congruence(&self, c: &CMatrix) -> Result<Self, ExtendedError> {
        let tol = 16.0 * c.nrows().max(c.ncols()) as f64 * f64::EPSILON * op_norm(c);
        self.congruence_with_tol(c, tol)
    }

    /// As [`Self::congruence`], with the singular-value cut for ker(P_∞ C) supplied.
    pub fn congruence_with_tol(&self, c: &CMatrix, tol: f64) -> Result<Self, ExtendedError> {
        self.check_dim(c.nrows())?;
        let m = c.ncols();
        let infinite = self.infinity_part();
        let essential = if infinite.is_zero() {
            Subspace::full(m)
        } else {
            kernel_of(&(infinite.basis().adjoint() * c), tol)
        };
        let g = self.essential.basis().adjoint() * c * essential.basis();
        let finite = g.adjoint() * &self.finite_part * g;
        Self::from_parts(essential, finite)
    }

    /// Block-diagonal T₁ ⊕ T₂.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let essential = self.essential.direct_sum(&other.essential);
        let (k1, k2) = (self.essential.dim(), other.essential.dim());
        let mut f = CMatrix::zeros(k1 + k2, k1 + k2);
        f.view_mut((0, 0), (k1, k1)).copy_from(&self.finite_part);
        f.view_mut((k1, k1), (k2, k2)).copy_from(&other.finite_part);
        Self { essential, finite_part: f, lower_bound: self.lower_bound.min(other.lower_bound) }
    }

    /// Form order: ess(T₂) ⊆ ess(T₁) and q₁ ≤ q₂ + slack on ess(T₂).
    pub fn form_leq(&self, other: &Self, slack: f64) -> FormComparison {
        assert_eq!(self.ambient_dim(), other.ambient_dim(), "form_leq: ambient dimensions differ");
        if let Err(direction) = self.essential.contains(&other.essential, CONTAINMENT_TOL) {
            return FormComparison { holds: false, domain_violation: true, min_gap: f64::NEG_INFINITY, witness: Some(direction) };
        }
        let e2 = other.essential.basis();
        if e2.ncols() == 0 {
            return FormComparison { holds: true, domain_violation: false, min_gap: f64::INFINITY, witness: None };
        }
        let gap = &other.finite_part - e2.adjoint() * self.embedded_finite_part() * e2;
        let e = eigh(&gap).expect("gap eigendecomposition");
        let min_gap = e.values[0];
        let holds = min_gap >= -slack;
        FormComparison { holds, domain_violation: false, min_gap, witness: (!holds).then(|| e2 * e.column(0)) }
    }

    /// Mutual form order with slack.
    pub fn approx_eq(&self, other: &Self, slack: f64) -> bool {
        self.form_leq(other, slack).holds && other.form_leq(self, slack).holds
    }

    /// Largest |eigenvalue| of the difference of finite parts when the essential
    /// parts coincide; `None` when they differ.
    pub fn finite_distance(&self, other: &Self) -> Option<f64> {
        if !self.essential.same_as(&other.essential, CONTAINMENT_TOL) {
            return None;
        }
        let e = self.essential.basis();
        if e.ncols() == 0 {
            return Some(0.0);
        }
        let diff = e.adjoint() * (self.embedded_finite_part() - other.embedded_finite_part()) * e;
        Some(eigh(&diff).expect("difference eigendecomposition").max_abs())
    }

    pub fn to_json(&self) -> String {
        let doc = ExtendedDocument {
            n: self.ambient_dim(),
            essential_basis: ComplexGrid::from_matrix(self.essential.basis()),
            finite_part: ComplexGrid::from_matrix(&self.finite_part),
        };
        serde_json::to_string(&doc).expect("extended value serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, ExtendedParseError> {
        let doc: ExtendedDocument = serde_json::from_str(text).map_err(MatrixFileError::from)?;
        let k = doc.essential_basis.re.first().map_or(0, |r| r.len());
        let basis = doc.essential_basis.to_matrix(doc.n, k, "essential_basis")?;
        let finite = doc.finite_part.to_matrix(k, k, "finite_part")?;
        Ok(Self::from_parts(Subspace::new(basis)?, finite)?)
    }
}

#[derive(Debug, Error)]
pub enum ExtendedParseError {
    #[error(transparent)]
    File(#[from] MatrixFileError),
    #[error(transparent)]
    Value(#[from] ExtendedError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Serialize, Deserialize)]
struct ExtendedDocument {
    n: usize,
    essential_basis: ComplexGrid,
    finite_part: ComplexGrid,
}
