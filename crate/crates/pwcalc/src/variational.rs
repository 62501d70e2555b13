//! Evaluating φ_f(A, B)(ρ) from integral representations of f through
//! parallel sums, the two-projection closed form, and variational lower
//! bounds built from piecewise-constant splittings ξ = η(t) + ζ(t).

use rand::Rng;
use thiserror::Error;

use crate::extended_sa::{ExtendedError, ExtendedReal, ExtendedSelfAdjoint, Finite, Infinite};
use crate::harness::generators::random_vector;
use crate::matrix_core::{
    check_hermitian, eigh, hermitian_part, max_abs_entry, op_norm, pinv_psd, range_of, subspace_meet, CMatrix, CVector,
    LinalgError, State, Subspace,
};
use crate::perspectives_means::{parallel_sum, perspective_apply, PerspectiveError};
use crate::pw_calculus::{compatible_representation, ENDPOINT_TOL};
use crate::scalar_functions::{approximants, power, ExtendedFunction, FunctionError, IntegralRepr77, IntegralRepr97, Measure};

/// Idempotence and Hermiticity tolerance for projection inputs.
pub const PROJECTION_TOL: f64 = 1e-10;

/// Allowed |η + ζ - ξ| on each piece, relative to 1 + ‖ξ‖.
pub const SPLIT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum VariationalError {
    #[error("input is not an orthogonal projection (deviation {0:e})")]
    NotProjection(f64),
    #[error("quadrature needs at least 16 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("t^α quadrature needs α in (1, 2), got {0}")]
    BadExponent(f64),
    #[error("decomposition pieces do not partition [{lo}, {hi}]")]
    NotPartition { lo: f64, hi: f64 },
    #[error("η + ζ differs from ξ by {deviation:e} on piece {piece}")]
    BadSplit { piece: usize, deviation: f64 },
    #[error("no piece covers t = {0}")]
    Uncovered(f64),
    #[error("splitting parameter must be positive, got {0}")]
    BadParameter(f64),
    #[error(transparent)]
    Perspective(#[from] PerspectiveError),
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error(transparent)]
    Extended(#[from] ExtendedError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Ranges where R = 1 and where R = 0, mapped back to the ambient space:
/// the directions on which φ_f is ∞ when f′(∞) = ∞, resp. f(0⁺) = ∞.
fn endpoint_ranges(a: &CMatrix, b: &CMatrix) -> Result<(Subspace, Subspace), VariationalError> {
    let n = a.nrows();
    let rep = compatible_representation(a, b).map_err(PerspectiveError::from)?;
    if rep.rank() == 0 {
        return Ok((Subspace::zero(n), Subspace::zero(n)));
    }
    let e = eigh(&rep.r)?;
    let tol = 16.0 * n as f64 * f64::EPSILON * op_norm(&rep.t);
    let pick = |keep: &dyn Fn(f64) -> bool| {
        let cols: Vec<usize> = (0..e.dim()).filter(|&k| keep(e.values[k])).collect();
        let p = CMatrix::from_fn(e.dim(), cols.len(), |i, j| e.vectors[(i, cols[j])]);
        range_of(&(rep.t.adjoint() * p), tol)
    };
    Ok((pick(&|t| t >= 1.0 - ENDPOINT_TOL), pick(&|t| t <= ENDPOINT_TOL)))
}

fn hits(part: &Subspace, rho: &State) -> Result<bool, VariationalError> {
    Ok(ExtendedSelfAdjoint::infinite_on(part).evaluate_state(rho)? == Infinite)
}

fn t2_term(coef: f64, a: &CMatrix, b: &CMatrix, rho: &State) -> Result<ExtendedReal, VariationalError> {
    if coef == 0.0 {
        return Ok(Finite(0.0));
    }
    let value = perspective_apply(&power(2.0)?, a, b)?.value.evaluate_state(rho)?;
    Ok(value.scale(coef)?)
}

/// φ_f(A, B)(ρ) for f = a + b(t-1) + c(t-1)² + d(t-1)²/t + ∫ (t-1)²/(t+λ) dμ, as
///
/// ```text
/// a₀ρ(A) + b₀ρ(B) + cφ_{t²}(A,B)(ρ) + dφ_{t²}(B,A)(ρ)
///   + ∫ [ρ(A) + ρ(B)/λ - ((1+λ)/λ)² ρ(A:λB)] dμ(λ)
/// ```
///
/// with a₀ = b - 2c + d and b₀ = a - b + c - 2d.
pub fn integral_eval_91(r: &IntegralRepr77, a: &CMatrix, b: &CMatrix, rho: &State) -> Result<ExtendedReal, VariationalError> {
    r.validate()?;
    let (ra, rb) = (rho.expect(a), rho.expect(b));
    if r.mu.diverges_at_infinity || r.mu.inverse_diverges_at_zero {
        let (at_one, at_zero) = endpoint_ranges(a, b)?;
        if (r.mu.diverges_at_infinity && hits(&at_one, rho)?) || (r.mu.inverse_diverges_at_zero && hits(&at_zero, rho)?) {
            return Ok(Infinite);
        }
    }
    let a0 = r.b - 2.0 * r.c + r.d;
    let b0 = r.a - r.b + r.c - 2.0 * r.d;
    let mut integral = 0.0;
    for &(lambda, w) in &r.mu.atoms {
        let ps = rho.expect(&parallel_sum(a, &b.scale(lambda))?);
        let k = (1.0 + lambda) / lambda;
        integral += w * (ra + rb / lambda - k * k * ps);
    }
    let linear = Finite(a0 * ra + b0 * rb + integral);
    Ok(linear + t2_term(r.c, a, b, rho)? + t2_term(r.d, b, a, rho)?)
}

/// φ_f(A, B)(ρ) for f = f(0⁺) + f′(0⁺)t + ct² + ∫ t²/(t+λ) dν, as
/// f′(0⁺)ρ(A) + f(0⁺)ρ(B) + cφ_{t²}(A,B)(ρ) + ∫ [ρ(A) - ρ(A:λB)] dν(λ).
pub fn integral_eval_92(r: &IntegralRepr97, a: &CMatrix, b: &CMatrix, rho: &State) -> Result<ExtendedReal, VariationalError> {
    let ra = rho.expect(a);
    if r.nu.diverges_at_infinity {
        let (at_one, _) = endpoint_ranges(a, b)?;
        if hits(&at_one, rho)? {
            return Ok(Infinite);
        }
    }
    let mut integral = 0.0;
    for &(lambda, w) in &r.nu.atoms {
        integral += w * (ra - rho.expect(&parallel_sum(a, &b.scale(lambda))?));
    }
    let linear = Finite(r.fp0 * ra + r.f0 * rho.expect(b) + integral);
    Ok(linear + t2_term(r.c, a, b, rho)?)
}

fn check_projection(p: &CMatrix) -> Result<(), VariationalError> {
    check_hermitian(p, PROJECTION_TOL).map_err(|_| VariationalError::NotProjection(crate::matrix_core::hermitian_deviation(p).0))?;
    let deviation = max_abs_entry(&(p * p - p));
    if deviation > PROJECTION_TOL {
        return Err(VariationalError::NotProjection(deviation));
    }
    Ok(())
}

fn projection_range(p: &CMatrix) -> Subspace {
    range_of(p, 0.5)
}

fn weighted(coef: ExtendedReal, part: &Subspace) -> Result<ExtendedSelfAdjoint, VariationalError> {
    Ok(match coef {
        Infinite => ExtendedSelfAdjoint::infinite_on(part),
        Finite(c) => ExtendedSelfAdjoint::bounded(&part.projector().scale(c))?,
    })
}

/// f(1)(P∧Q) + f′(∞)(P - P∧Q) + f(0⁺)(Q - P∧Q) as a form sum.
pub fn two_projections(f: &ExtendedFunction, p: &CMatrix, q: &CMatrix) -> Result<ExtendedSelfAdjoint, VariationalError> {
    check_projection(p)?;
    check_projection(q)?;
    let (Some(beta), Some(alpha)) = (f.at_zero_plus(), f.slope_at_infinity()) else {
        return Err(PerspectiveError::MissingBoundary(f.name().to_string()).into());
    };
    let (pr, qr) = (projection_range(p), projection_range(q));
    let meet = subspace_meet(&pr, &qr);
    let m = meet.projector();
    let only_p = projection_range(&hermitian_part(&(p - &m)));
    let only_q = projection_range(&hermitian_part(&(q - &m)));
    let total = weighted(f.at_one()?, &meet)?.add(&weighted(alpha, &only_p)?)?;
    Ok(total.add(&weighted(beta, &only_q)?)?)
}

/// The minimizer of ⟨Aη,η⟩ + t⟨Bζ,ζ⟩ over η + ζ = ξ: ζ = (A+tB)⁺Aξ, η = ξ - ζ.
/// Directions in ker(A+tB) stay in η.
pub fn optimal_decomposition(a: &CMatrix, b: &CMatrix, xi: &CVector, t: f64) -> Result<(CVector, CVector), VariationalError> {
    if !(t > 0.0) {
        return Err(VariationalError::BadParameter(t));
    }
    let pinv = pinv_psd(&hermitian_part(&(a + b.scale(t))), None)?;
    let zeta = pinv * (a * xi);
    Ok((xi - &zeta, zeta))
}

/// ⟨Aη,η⟩ + t⟨Bζ,ζ⟩.
pub fn split_cost(a: &CMatrix, b: &CMatrix, eta: &CVector, zeta: &CVector, t: f64) -> f64 {
    eta.dotc(&(a * eta)).re + t * zeta.dotc(&(b * zeta)).re
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    /// [lo, hi), closed at the right end of the last piece.
    pub lo: f64,
    pub hi: f64,
    pub eta: CVector,
    pub zeta: CVector,
}

/// A piecewise-constant splitting ξ = η(t) + ζ(t) over [lo, hi].
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    lo: f64,
    hi: f64,
    target: CVector,
    pieces: Vec<Piece>,
}

impl Decomposition {
    pub fn new(lo: f64, hi: f64, target: CVector, pieces: Vec<Piece>) -> Result<Self, VariationalError> {
        let partition = !pieces.is_empty()
            && pieces[0].lo == lo
            && pieces[pieces.len() - 1].hi == hi
            && pieces.windows(2).all(|w| w[0].hi == w[1].lo)
            && pieces.iter().all(|p| p.lo < p.hi || (lo == hi && p.lo == p.hi));
        if !partition {
            return Err(VariationalError::NotPartition { lo, hi });
        }
        let tol = SPLIT_TOL * (1.0 + target.norm());
        for (i, p) in pieces.iter().enumerate() {
            let deviation = (&p.eta + &p.zeta - &target).norm();
            if deviation > tol {
                return Err(VariationalError::BadSplit { piece: i, deviation });
            }
        }
        Ok(Self { lo, hi, target, pieces })
    }

    /// η ≡ ξ, ζ ≡ 0.
    pub fn trivial(lo: f64, hi: f64, xi: &CVector) -> Self {
        let zero = CVector::zeros(xi.len());
        let piece = Piece { lo, hi, eta: xi.clone(), zeta: zero };
        Self { lo, hi, target: xi.clone(), pieces: vec![piece] }
    }

    /// One piece per point of `at`, each carrying the minimizer at that point;
    /// breakpoints at midpoints between consecutive points.
    pub fn optimal(a: &CMatrix, b: &CMatrix, xi: &CVector, lo: f64, hi: f64, at: &[f64]) -> Result<Self, VariationalError> {
        let mut points: Vec<f64> = at.iter().copied().filter(|&t| t >= lo && t <= hi).collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        if points.is_empty() {
            return Ok(Self::trivial(lo, hi, xi));
        }
        let mut pieces = Vec::with_capacity(points.len());
        for (k, &t) in points.iter().enumerate() {
            let start = if k == 0 { lo } else { 0.5 * (points[k - 1] + t) };
            let end = if k + 1 == points.len() { hi } else { 0.5 * (t + points[k + 1]) };
            let (eta, zeta) = optimal_decomposition(a, b, xi, t)?;
            pieces.push(Piece { lo: start, hi: end, eta, zeta });
        }
        Self::new(lo, hi, xi.clone(), pieces)
    }

    /// Random breakpoints and random splittings.
    pub fn random(rng: &mut impl Rng, xi: &CVector, lo: f64, hi: f64, pieces: usize) -> Self {
        let cuts_wanted = if lo < hi { pieces.max(1) } else { 1 };
        let mut cuts: Vec<f64> = (1..cuts_wanted).map(|_| rng.gen_range(lo..hi)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut bounds = vec![lo];
        bounds.extend(cuts.into_iter().filter(|&c| c > lo && c < hi));
        bounds.push(hi);
        let out = bounds
            .windows(2)
            .map(|w| {
                let zeta = random_vector(rng, xi.len());
                Piece { lo: w[0], hi: w[1], eta: xi - &zeta, zeta }
            })
            .collect();
        Self { lo, hi, target: xi.clone(), pieces: out }
    }

    pub fn target(&self) -> &CVector {
        &self.target
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn piece_at(&self, t: f64) -> Result<&Piece, VariationalError> {
        if t == self.hi {
            return Ok(&self.pieces[self.pieces.len() - 1]);
        }
        self.pieces.iter().find(|p| p.lo <= t && t < p.hi).ok_or(VariationalError::Uncovered(t))
    }
}

/// α_n⟨Aξ,ξ⟩ + β_n⟨Bξ,ξ⟩ - ∫ ((1+t)/t)(⟨Aη(t),η(t)⟩ + t⟨Bζ(t),ζ(t)⟩) dν_n(t),
/// a lower bound for φ_f(A, B)(ω_ξ).
pub fn variational_bound_94(
    r: &IntegralRepr77,
    a: &CMatrix,
    b: &CMatrix,
    n: usize,
    decomposition: &Decomposition,
) -> Result<f64, VariationalError> {
    let ap = approximants(r, n)?;
    let (lo, hi) = decomposition.interval();
    let nf = n as f64;
    if lo > 1.0 / nf || hi < nf {
        return Err(VariationalError::NotPartition { lo: 1.0 / nf, hi: nf });
    }
    let xi = decomposition.target();
    let mut value = ap.alpha_n * xi.dotc(&(a * xi)).re + ap.beta_n * xi.dotc(&(b * xi)).re;
    for &(t, w) in &ap.nu_n.atoms {
        let piece = decomposition.piece_at(t)?;
        value -= w * (1.0 + t) / t * split_cost(a, b, &piece.eta, &piece.zeta, t);
    }
    Ok(value)
}

/// The n-th variational value with the pointwise-optimal splitting at the atoms of ν_n.
pub fn optimal_bound(r: &IntegralRepr77, a: &CMatrix, b: &CMatrix, xi: &CVector, n: usize) -> Result<f64, VariationalError> {
    let ap = approximants(r, n)?;
    let nf = n as f64;
    let at: Vec<f64> = ap.nu_n.atoms.iter().map(|&(t, _)| t).collect();
    let d = Decomposition::optimal(a, b, xi, 1.0 / nf, nf, &at)?;
    variational_bound_94(r, a, b, n, &d)
}

/// (n, optimal bound) along `ns`; nondecreasing in n and bounded by φ_f(A,B)(ω_ξ).
pub fn supremum_envelope(r: &IntegralRepr77, a: &CMatrix, b: &CMatrix, xi: &CVector, ns: &[usize]) -> Result<Vec<(usize, f64)>, VariationalError> {
    ns.iter().map(|&n| Ok((n, optimal_bound(r, a, b, xi, n)?))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureKind {
    /// sin((α-1)π)/π · λ^{α-2} dλ, representing t^α for α ∈ (1, 2).
    TAlpha(f64),
    /// Lebesgue measure dλ: t log t = ∫ (t/(1+λ) - t/(t+λ)) dλ.
    TLogT,
}

pub fn make_quadrature(kind: QuadratureKind, nodes: usize) -> Result<Measure, VariationalError> {
    if nodes < 16 {
        return Err(VariationalError::TooFewNodes(nodes));
    }
    let m = match kind {
        QuadratureKind::TAlpha(alpha) => {
            if !(alpha > 1.0 && alpha < 2.0) {
                return Err(VariationalError::BadExponent(alpha));
            }
            let k = ((alpha - 1.0) * std::f64::consts::PI).sin() / std::f64::consts::PI;
            Measure::from_density(|l| k * l.powf(alpha - 2.0), nodes)
        }
        QuadratureKind::TLogT => Measure::from_density(|_| 1.0, nodes),
    };
    Ok(m.with_tails(true, true))
}

/// t^α = ∫ t²/(t+λ) dν with ν from [`make_quadrature`].
pub fn t_alpha_repr97(alpha: f64, nodes: usize) -> Result<IntegralRepr97, VariationalError> {
    Ok(IntegralRepr97::new(0.0, 0.0, 0.0, make_quadrature(QuadratureKind::TAlpha(alpha), nodes)?)?)
}

/// t log t = (t-1) + ∫ (t-1)²/(t+λ) · λ/(1+λ)² dλ.
pub fn tlogt_repr77(nodes: usize) -> Result<IntegralRepr77, VariationalError> {
    if nodes < 16 {
        return Err(VariationalError::TooFewNodes(nodes));
    }
    let mu = Measure::from_density(|l| l / (1.0 + l).powi(2), nodes).with_tails(true, false);
    Ok(IntegralRepr77::new(0.0, 1.0, 0.0, 0.0, mu)?)
}
