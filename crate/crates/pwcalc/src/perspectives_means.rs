//! Operator perspectives of operator convex functions, Kubo–Ando style
//! connections, parallel sums, the Lebesgue decomposition of A with respect
//! to B, and boundedness tests for perspectives of powers.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::extended_sa::{Classification, ExtendedError, ExtendedReal, ExtendedSelfAdjoint, Finite, Infinite};
use crate::harness::generators::{random_density, random_unit_vector, rng_for};
use crate::matrix_core::{
    check_psd, eigh, hermitian_part, identity, kernel_of, op_norm, pinv_psd, pinv_sqrt, positive_spectrum, psd_power,
    CMatrix, CVector, LinalgError, State, Subspace,
};
use crate::pw_calculus::{
    compatible_representation, pw_apply, pw_apply_with, HomogeneousFunction, PwError, ENDPOINT_TOL,
};
use crate::scalar_functions::{ExtendedFunction, FunctionError, Interval};

/// ε-regularization schedule used when none is given.
pub const DEFAULT_EPSILONS: [f64; 8] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

/// State values above this multiple of the scale at ε = 1e-8 count as diverging.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

/// Relative size of K*XK (K spanning ker B) below which ker B ⊆ ker X.
pub const KERNEL_CONTAINMENT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PerspectiveError {
    #[error("`{0}` lacks f(0+) or f'(inf) metadata")]
    MissingBoundary(String),
    #[error("connection of `{0}` came out unbounded")]
    UnboundedConnection(String),
    #[error("ε schedule must be positive and strictly decreasing")]
    BadSchedule,
    #[error("Kraus operators map C^{expected} but the pair lives on C^{found}")]
    KrausDimension { expected: usize, found: usize },
    #[error(transparent)]
    Pw(#[from] PwError),
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error(transparent)]
    Extended(#[from] ExtendedError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// φ_f(x, y) = y f(x/y), with φ_f(x, 0) = f′(∞) x and φ_f(0, y) = f(0⁺) y.
pub fn perspective_of(f: &ExtendedFunction) -> Result<HomogeneousFunction, PerspectiveError> {
    let (Some(beta), Some(alpha)) = (f.at_zero_plus(), f.slope_at_infinity()) else {
        return Err(PerspectiveError::MissingBoundary(f.name().to_string()));
    };
    let inner = f.clone();
    let (at_one, at_zero) = (alpha.to_f64(), beta.to_f64());
    let diagonal = ExtendedFunction::new(format!("persp({})", f.name()), Interval::UNIT, move |t| {
        if t >= 1.0 {
            at_one
        } else if t <= 0.0 {
            at_zero
        } else {
            (1.0 - t) * inner.raw(t / (1.0 - t))
        }
    });
    Ok(HomogeneousFunction::new(format!("persp({})", f.name()), diagonal, alpha, beta)?)
}

#[derive(Debug, Clone)]
pub struct PerspectiveResult {
    pub value: ExtendedSelfAdjoint,
    pub r_eigenvalues: Vec<f64>,
    pub hits_at_zero: usize,
    pub hits_at_one: usize,
    pub classification: Classification,
}

pub fn perspective_apply(f: &ExtendedFunction, a: &CMatrix, b: &CMatrix) -> Result<PerspectiveResult, PerspectiveError> {
    perspective_apply_with(f, a, b, ENDPOINT_TOL)
}

pub fn perspective_apply_with(
    f: &ExtendedFunction,
    a: &CMatrix,
    b: &CMatrix,
    endpoint_tol: f64,
) -> Result<PerspectiveResult, PerspectiveError> {
    let out = pw_apply_with(&perspective_of(f)?, a, b, endpoint_tol)?;
    Ok(PerspectiveResult {
        classification: out.value.classify(),
        value: out.value,
        r_eigenvalues: out.r_eigenvalues,
        hits_at_zero: out.hits_at_zero,
        hits_at_one: out.hits_at_one,
    })
}

/// B_ε^{1/2} f(B_ε^{-1/2} A_ε B_ε^{-1/2}) B_ε^{1/2} with X_ε = X + εI, per ε.
///
/// Evaluated as T (1-R) f(R/(1-R)) T through the compatible representation of
/// (A_ε, B_ε): the inner matrix above has condition number near ‖A‖‖B‖/ε² when
/// A or B is singular, while the spectrum of R stays in [δ, 1-δ] with
/// δ = ε / (‖A‖ + ‖B‖ + 2ε).
pub fn epsilon_limit(f: &ExtendedFunction, a: &CMatrix, b: &CMatrix, schedule: &[f64]) -> Result<Vec<(f64, CMatrix)>, PerspectiveError> {
    if schedule.iter().any(|&e| !(e > 0.0)) || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(PerspectiveError::BadSchedule);
    }
    let n = a.nrows();
    let mut out = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let shift = identity(n).scale(eps);
        let (ae, be) = (hermitian_part(&(a + &shift)), hermitian_part(&(b + &shift)));
        let rep = compatible_representation(&ae, &be)?;
        let floor = eps / (op_norm(a) + op_norm(b) + 2.0 * eps);
        let e = eigh(&rep.r)?;
        let middle = e.map(|r| {
            let r = r.clamp(floor, 1.0 - floor);
            (1.0 - r) * f.raw(r / (1.0 - r))
        });
        if middle.iter().any(|z| !z.re.is_finite()) {
            return Err(PerspectiveError::UnboundedConnection(f.name().to_string()));
        }
        out.push((eps, hermitian_part(&(rep.t.adjoint() * middle * &rep.t))));
    }
    Ok(out)
}

/// ρ-values along an ε schedule are nondecreasing (up to `slack`).
pub fn is_nondecreasing(entries: &[(f64, CMatrix)], rho: &State, slack: f64) -> bool {
    let values: Vec<f64> = entries.iter().map(|(_, m)| rho.expect(m)).collect();
    values.windows(2).all(|w| w[1] >= w[0] - slack * (1.0 + w[0].abs()))
}

/// Whether the last ρ-value exceeds `threshold · scale`.
pub fn diverges(entries: &[(f64, CMatrix)], rho: &State, threshold: f64, scale: f64) -> bool {
    entries.last().is_some_and(|(_, m)| rho.expect(m) >= threshold * scale)
}

/// A σ_h B = A^{1/2} h(A^{-1/2} B A^{-1/2}) A^{1/2}, through the perspective of h.
pub fn connection(h: &ExtendedFunction, a: &CMatrix, b: &CMatrix) -> Result<CMatrix, PerspectiveError> {
    let value = pw_apply(&perspective_of(h)?, b, a)?;
    value.to_matrix().ok_or_else(|| PerspectiveError::UnboundedConnection(h.name().to_string()))
}

/// A : B = A - A(A+B)⁺A.
pub fn parallel_sum(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, PerspectiveError> {
    check_psd(a)?;
    check_psd(b)?;
    let pinv = pinv_psd(&hermitian_part(&(a + b)), None)?;
    Ok(hermitian_part(&(a - a * pinv * a)))
}

#[derive(Debug, Clone)]
pub struct LebesgueDecomposition {
    /// [B]A
    pub ac_part: CMatrix,
    /// A - [B]A
    pub singular_part: CMatrix,
}

/// Splits A along the eigenvalue-1 spectral projection of R.
pub fn lebesgue_decomposition(a: &CMatrix, b: &CMatrix) -> Result<LebesgueDecomposition, PerspectiveError> {
    let rep = compatible_representation(a, b)?;
    let n = a.nrows();
    if rep.rank() == 0 {
        return Ok(LebesgueDecomposition { ac_part: CMatrix::zeros(n, n), singular_part: CMatrix::zeros(n, n) });
    }
    let e = eigh(&rep.r)?;
    let ones: Vec<usize> = (0..e.dim()).filter(|&k| e.values[k] >= 1.0 - ENDPOINT_TOL).collect();
    let p = CMatrix::from_fn(e.dim(), ones.len(), |i, j| e.vectors[(i, ones[j])]);
    let w = p.adjoint() * &rep.t;
    let singular_part = hermitian_part(&(w.adjoint() * w));
    Ok(LebesgueDecomposition { ac_part: hermitian_part(&(a - &singular_part)), singular_part })
}

/// max eig R < 1 - τ_end.
pub fn is_absolutely_continuous(a: &CMatrix, b: &CMatrix) -> Result<bool, PerspectiveError> {
    let rep = compatible_representation(a, b)?;
    if rep.rank() == 0 {
        return Ok(true);
    }
    let e = eigh(&rep.r)?;
    Ok(e.values[e.dim() - 1] < 1.0 - ENDPOINT_TOL)
}

/// Tr φ_f(A, B), ∞ when the perspective has an ∞-part.
pub fn max_f_divergence(f: &ExtendedFunction, a: &CMatrix, b: &CMatrix) -> Result<ExtendedReal, PerspectiveError> {
    Ok(perspective_apply(f, a, b)?.value.trace())
}

pub fn essential_part(f: &ExtendedFunction, a: &CMatrix, b: &CMatrix) -> Result<Subspace, PerspectiveError> {
    Ok(perspective_apply(f, a, b)?.value.essential().clone())
}

/// Whether ker B ⊆ ker X: ‖K*XK‖ ≤ tol · ‖X‖ with K spanning ker B.
fn kernel_contained(b: &CMatrix, x: &CMatrix) -> Result<bool, PerspectiveError> {
    let rank_tol = positive_spectrum(b, None)?.rank_tol;
    let k = kernel_of(b, rank_tol.max(f64::MIN_POSITIVE));
    if k.is_zero() {
        return Ok(true);
    }
    let basis = k.basis();
    Ok(op_norm(&(basis.adjoint() * x * basis)) <= KERNEL_CONTAINMENT_TOL * op_norm(x))
}

/// min{λ : X ≤ λ Y} via ‖Y^{+1/2} X Y^{+1/2}‖, ∞ when ker Y ⊄ ker X.
fn dominating_constant(x: &CMatrix, y: &CMatrix) -> Result<ExtendedReal, PerspectiveError> {
    if !kernel_contained(y, x)? {
        return Ok(Infinite);
    }
    let root = pinv_sqrt(y, None)?.matrix;
    Ok(Finite(op_norm(&hermitian_part(&(&root * x * &root)))))
}

#[derive(Debug, Clone, Serialize)]
pub struct T2Bound {
    pub bounded: bool,
    /// min{λ ≥ 0 : A² ≤ λB}.
    pub lambda_min: ExtendedReal,
    /// A² ≤ λ*B holds and A² ≤ (1 - 1e-4)λ*B fails.
    pub certified: bool,
}

fn form_leq_matrix(x: &CMatrix, y: &CMatrix, slack: f64) -> Result<bool, PerspectiveError> {
    let e = eigh(&hermitian_part(&(y - x)))?;
    Ok(e.values.first().is_none_or(|&low| low >= -slack))
}

pub fn t2_bound(a: &CMatrix, b: &CMatrix) -> Result<T2Bound, PerspectiveError> {
    if !is_absolutely_continuous(a, b)? {
        return Ok(T2Bound { bounded: false, lambda_min: Infinite, certified: true });
    }
    let root = pinv_sqrt(b, None)?.matrix;
    let lambda = op_norm(&(a * root)).powi(2);
    let a2 = a * a;
    let scale = 1.0 + op_norm(&a2) + lambda * op_norm(b);
    let holds = form_leq_matrix(&a2, &b.scale(lambda), 1e-8 * scale)?;
    let tight = lambda == 0.0 || !form_leq_matrix(&a2, &b.scale(lambda * (1.0 - 1e-4)), 1e-12 * scale)?;
    Ok(T2Bound { bounded: true, lambda_min: Finite(lambda), certified: holds && tight })
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub alpha: f64,
    /// A² ≤ λB
    pub a: bool,
    /// φ_{t^α}(A, B) bounded
    pub b: bool,
    /// A^α ≤ λB^{α-1}
    pub c: bool,
    /// ⟨Aξ,ξ⟩^α ≤ λ⟨Bξ,ξ⟩^{α-1} on unit vectors
    pub d: bool,
    /// A ≤ λB^{(α-1)/α}
    pub e: bool,
    pub violations: Vec<&'static str>,
}

const SCALAR_SAMPLES: u64 = 500;

/// Evaluates the five boundedness conditions for t^α, α ∈ (1, 2], and checks
/// a⇒b⇒d⇒e and a⇒c⇒d on the computed values.
pub fn boundedness_chain(alpha: f64, a: &CMatrix, b: &CMatrix, seed: u64) -> Result<ChainReport, PerspectiveError> {
    let f = crate::scalar_functions::power(alpha)?;
    let n = a.nrows();
    let cond_a = dominating_constant(&(a * a), b)?.is_finite();
    let cond_b = perspective_apply(&f, a, b)?.value.is_bounded();
    let cond_c = dominating_constant(&psd_power(a, alpha)?, &psd_power(b, alpha - 1.0)?)?.is_finite();
    let cond_e = dominating_constant(a, &psd_power(b, (alpha - 1.0) / alpha)?)?.is_finite();

    // candidate directions: random unit vectors, ker B, eigenvectors of A
    let mut probes: Vec<CVector> = Vec::new();
    let mut rng = rng_for(seed, 0);
    for _ in 0..SCALAR_SAMPLES {
        probes.push(random_unit_vector(&mut rng, n));
    }
    let rank_tol = positive_spectrum(b, None)?.rank_tol;
    let kernel = kernel_of(b, rank_tol.max(f64::MIN_POSITIVE));
    probes.extend(kernel.basis().column_iter().map(|c| c.into_owned()));
    let ea = eigh(a)?;
    probes.extend((0..ea.dim()).map(|k| ea.column(k)));
    let (na, nb) = (op_norm(a), op_norm(b));
    let cond_d = probes.iter().all(|xi| {
        let x = xi.dotc(&(a * xi)).re.max(0.0);
        let y = xi.dotc(&(b * xi)).re.max(0.0);
        !(y <= KERNEL_CONTAINMENT_TOL * nb && x > KERNEL_CONTAINMENT_TOL * na)
    });

    let mut violations = Vec::new();
    for (name, premise, conclusion) in
        [("a=>b", cond_a, cond_b), ("b=>d", cond_b, cond_d), ("d=>e", cond_d, cond_e), ("a=>c", cond_a, cond_c), ("c=>d", cond_c, cond_d)]
    {
        if premise && !conclusion {
            violations.push(name);
        }
    }
    Ok(ChainReport { alpha, a: cond_a, b: cond_b, c: cond_c, d: cond_d, e: cond_e, violations })
}

#[derive(Debug, Clone, Serialize)]
pub struct AhEntry {
    pub p: f64,
    /// ‖φ_f(A^p, B^p)‖
    pub lhs: ExtendedReal,
    /// ‖φ_f(A, B)‖^p
    pub rhs: ExtendedReal,
    pub holds: bool,
}

/// ‖φ_f(A^p, B^p)‖ ≤ ‖φ_f(A, B)‖^p for each p, relative slack 1e-7.
pub fn check_ah_inequality(f: &ExtendedFunction, a: &CMatrix, b: &CMatrix, ps: &[f64]) -> Result<Vec<AhEntry>, PerspectiveError> {
    let base = perspective_apply(f, a, b)?.value.norm();
    let mut out = Vec::with_capacity(ps.len());
    for &p in ps {
        let lhs = perspective_apply(f, &psd_power(a, p)?, &psd_power(b, p)?)?.value.norm();
        let rhs = match base {
            Finite(x) => Finite(x.powf(p)),
            Infinite => Infinite,
        };
        let holds = match (lhs, rhs) {
            (_, Infinite) => true,
            (Infinite, Finite(_)) => false,
            (Finite(l), Finite(r)) => l <= r + 1e-7 * r.abs().max(1.0),
        };
        out.push(AhEntry { p, lhs, rhs, holds });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub states: usize,
    /// (ρ index, φ_f(Φ(A),Φ(B))(ρ), φ_f(A,B)(Φ*(ρ))) for each violation.
    pub violations: Vec<(usize, ExtendedReal, ExtendedReal)>,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// φ_f(Φ(A), Φ(B)) ≤ Φ(φ_f(A, B)) for Φ(X) = Σ K X K*, compared at random
/// states ρ with the right side read as φ_f(A, B)(Σ K*ρK).
pub fn check_positive_map_monotonicity(
    f: &ExtendedFunction,
    kraus: &[CMatrix],
    a: &CMatrix,
    b: &CMatrix,
    states: usize,
    seed: u64,
) -> Result<MonotonicityReport, PerspectiveError> {
    let n = a.nrows();
    let m = kraus.first().map_or(n, |k| k.nrows());
    for k in kraus {
        if k.ncols() != n {
            return Err(PerspectiveError::KrausDimension { expected: k.ncols(), found: n });
        }
    }
    let apply = |x: &CMatrix| -> CMatrix {
        let mut acc = CMatrix::zeros(m, m);
        for k in kraus {
            acc += k * x * k.adjoint();
        }
        hermitian_part(&acc)
    };
    let lhs_op = perspective_apply(f, &apply(a), &apply(b))?.value;
    let rhs_op = perspective_apply(f, a, b)?.value;
    let scale = 1.0 + op_norm(a) + op_norm(b);
    let mut violations = Vec::new();
    let mut rng = rng_for(seed, 0);
    for i in 0..states {
        let rho = if rng.gen_bool(0.5) {
            State::new(random_density(&mut rng, m))?
        } else {
            State::vector(&random_unit_vector(&mut rng, m))?
        };
        let pulled = rho.pull_back(kraus);
        let lhs = lhs_op.evaluate_state(&rho)?;
        let rhs = match pulled {
            Ok(s) => rhs_op.evaluate_state(&s)?,
            // Φ*(ρ) = 0, so Φ(T)(ρ) = 0
            Err(LinalgError::NonPositiveTrace { .. }) => Finite(0.0),
            Err(e) => return Err(e.into()),
        };
        let ok = match (lhs, rhs) {
            (_, Infinite) => true,
            (Infinite, Finite(_)) => false,
            (Finite(l), Finite(r)) => l <= r + 1e-8 * scale * (1.0 + r.abs()),
        };
        if !ok {
            violations.push((i, lhs, rhs));
        }
    }
    Ok(MonotonicityReport { states, violations })
}

/// φ_f(ρ(A), ρ(B)) and φ_f(A, B)(ρ).
pub fn state_inequality(f: &ExtendedFunction, a: &CMatrix, b: &CMatrix, rho: &State) -> Result<(ExtendedReal, ExtendedReal), PerspectiveError> {
    let phi = perspective_of(f)?;
    let scalar = phi.eval(rho.expect(a).max(0.0), rho.expect(b).max(0.0))?;
    let value = perspective_apply(f, a, b)?.value.evaluate_state(rho)?;
    Ok((scalar, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generators::{gen_pair, random_psd, random_unitary, real_unit, Profile, RandomSpec};
    use crate::matrix_core::{diag, from_real_rows, max_abs_entry, psd_sqrt, subspace_meet, Subspace};
    use crate::scalar_functions::{calculus, monotone_catalog, neglog, power, tlogt, transpose};

    fn example_712() -> (CMatrix, CMatrix) {
        (from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]), diag(&[1.0, 2.0]))
    }

    fn example_87() -> (CMatrix, CMatrix) {
        (diag(&[1.0, 0.0]), from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]))
    }

    fn close(x: &CMatrix, y: &CMatrix, tol: f64) -> bool {
        max_abs_entry(&(x - y)) <= tol
    }

    #[test]
    fn perspective_diagonals() {
        let p = perspective_of(&power(2.0).unwrap()).unwrap();
        assert!((p.diagonal().raw(0.25) - 0.0625 / 0.75).abs() < 1e-15);
        assert_eq!((p.one_zero(), p.zero_one()), (Some(Infinite), Some(Finite(0.0))));
        let p = perspective_of(&tlogt()).unwrap();
        assert!((p.diagonal().raw(0.25) - 0.25 * (1.0f64 / 3.0).ln()).abs() < 1e-15);
        assert_eq!((p.one_zero(), p.zero_one()), (Some(Infinite), Some(Finite(0.0))));
        let p = perspective_of(&neglog()).unwrap();
        assert!((p.diagonal().raw(0.25) + 0.75 * (1.0f64 / 3.0).ln()).abs() < 1e-15);
        assert_eq!((p.one_zero(), p.zero_one()), (Some(Finite(0.0)), Some(Infinite)));
        let bare = ExtendedFunction::new("bare", Interval::POSITIVE, |t| t);
        assert!(matches!(perspective_of(&bare), Err(PerspectiveError::MissingBoundary(_))));
    }

    #[test]
    fn perspective_examples() {
        let (a, b) = example_712();
        let out = perspective_apply(&power(2.0).unwrap(), &a, &b).unwrap();
        assert!(close(&out.value.to_matrix().unwrap(), &a.scale(1.5), 1e-10));
        assert_eq!(out.classification, Classification::Bounded);

        let x = random_psd(&mut rng_for(3, 0), 3, 2);
        for f in [tlogt(), power(1.5).unwrap(), neglog(), power(-1.0).unwrap()] {
            let v = perspective_apply(&f, &x, &x).unwrap().value;
            let f1 = f.at_one().unwrap().to_f64();
            assert!(close(&v.to_matrix().unwrap(), &x.scale(f1), 1e-10), "{}", f.name());
        }
        let d = diag(&[1.0, 2.0]);
        let v = perspective_apply(&power(2.0).unwrap(), &d, &d).unwrap().value;
        assert!((v.norm().finite().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn transpose_swaps_arguments() {
        let spec = RandomSpec::with_dims(1, 5, Profile::RankDeficient(2), 17);
        for trial in 0..30 {
            let (a, b) = gen_pair(&spec, trial);
            for f in [tlogt(), power(2.0).unwrap(), neglog()] {
                let lhs = perspective_apply(&transpose(&f), &a, &b).unwrap().value;
                let rhs = perspective_apply(&f, &b, &a).unwrap().value;
                assert!(lhs.approx_eq(&rhs, 1e-9 * (1.0 + op_norm(&a) + op_norm(&b))), "trial {trial}");
            }
        }
    }

    #[test]
    fn epsilon_schedule_examples() {
        let (a, b) = example_712();
        let entries = epsilon_limit(&power(2.0).unwrap(), &a, &b, &DEFAULT_EPSILONS).unwrap();
        assert!(close(&entries.last().unwrap().1, &a.scale(1.5), 1e-6));

        let (p, q) = example_87();
        let entries = epsilon_limit(&power(2.0).unwrap(), &p, &q, &DEFAULT_EPSILONS).unwrap();
        let singular = State::vector(&real_unit(2, 0)).unwrap();
        assert!(diverges(&entries, &singular, DIVERGENCE_THRESHOLD, 1.0));

        let (a, b) = gen_pair(&RandomSpec::new(3, Profile::RankDeficient(2), 9), 0);
        let entries = epsilon_limit(&tlogt(), &a, &b, &DEFAULT_EPSILONS).unwrap();
        for trial in 0..10 {
            let rho = State::new(random_density(&mut rng_for(9, trial), 3)).unwrap();
            assert!(is_nondecreasing(&entries, &rho, 1e-9));
        }
        assert!(matches!(epsilon_limit(&tlogt(), &a, &b, &[1e-2, 1e-1]), Err(PerspectiveError::BadSchedule)));
    }

    #[test]
    fn connection_examples() {
        let geo = monotone_catalog("power", &[0.5]).unwrap();
        let m = connection(&geo, &diag(&[1.0, 4.0]), &identity(2)).unwrap();
        assert!(close(&m, &diag(&[1.0, 2.0]), 1e-12));
        let par = monotone_catalog("parallel", &[]).unwrap();
        let m = connection(&par, &diag(&[1.0, 2.0]), &diag(&[2.0, 2.0])).unwrap();
        assert!(close(&m, &diag(&[2.0 / 3.0, 1.0]), 1e-12));
        assert!(close(&parallel_sum(&diag(&[1.0, 2.0]), &diag(&[2.0, 2.0])).unwrap(), &m, 1e-12));
    }

    #[test]
    fn parallel_sum_examples() {
        let m = parallel_sum(&diag(&[1.0, 0.0, 3.0]), &diag(&[1.0, 0.0, 0.0])).unwrap();
        assert!(close(&m, &diag(&[0.5, 0.0, 0.0]), 1e-14));
        let (p, q) = example_87();
        for n in [1.0, 10.0, 1000.0] {
            let m = parallel_sum(&p, &q.scale(n)).unwrap();
            assert!(m.norm() < 1e-12 * n);
        }
        let spec = RandomSpec::with_dims(3, 5, Profile::Projection, 2);
        for trial in 0..20 {
            let (p, q) = gen_pair(&spec, trial);
            let meet = subspace_meet(&Subspace::new(range_basis(&p)).unwrap(), &Subspace::new(range_basis(&q)).unwrap());
            for n in [1.0, 10.0, 1000.0] {
                let m = parallel_sum(&p, &q.scale(n)).unwrap();
                assert!(close(&m, &meet.projector().scale(n / (1.0 + n)), 1e-9), "trial {trial} n {n}");
            }
        }
        let a = from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        for n in [1.0, 10.0, 1e4] {
            assert!(parallel_sum(&a, &diag(&[n, 0.0])).unwrap().norm() < 1e-10);
        }
        let (a, b) = gen_pair(&RandomSpec::new(4, Profile::WellConditioned, 1), 0);
        assert!(close(&parallel_sum(&a, &b).unwrap(), &parallel_sum(&b, &a).unwrap(), 1e-10));
    }

    fn range_basis(m: &CMatrix) -> CMatrix {
        positive_spectrum(m, None).unwrap().range.basis().clone()
    }

    #[test]
    fn lebesgue_examples() {
        let (a, b) = gen_pair(&RandomSpec::new(3, Profile::WellConditioned, 4), 0);
        let d = lebesgue_decomposition(&a, &b).unwrap();
        assert!(d.singular_part.norm() < 1e-9);
        assert!(is_absolutely_continuous(&a, &b).unwrap());

        let a = from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let d = lebesgue_decomposition(&a, &diag(&[1.0, 0.0])).unwrap();
        assert!(close(&d.singular_part, &a, 1e-10));
        assert!(d.ac_part.norm() < 1e-10);

        let (p, q) = example_87();
        let d = lebesgue_decomposition(&p, &q).unwrap();
        assert!(close(&d.singular_part, &p, 1e-10));
        assert!(!is_absolutely_continuous(&p, &q).unwrap());
        assert!(!is_absolutely_continuous(&identity(2), &CMatrix::zeros(2, 2)).unwrap());

        let spec = RandomSpec::with_dims(2, 5, Profile::SingularPair, 6);
        for trial in 0..20 {
            let (a, b) = gen_pair(&spec, trial);
            let d = lebesgue_decomposition(&a, &b).unwrap();
            let limit = parallel_sum(&a, &b.scale(1e8)).unwrap();
            assert!(close(&d.ac_part, &limit, 1e-5 * (1.0 + op_norm(&a))), "trial {trial}");
            assert!(close(&(&d.ac_part + &d.singular_part), &a, 1e-9));
        }
    }

    #[test]
    fn divergence_examples() {
        let rho = random_density(&mut rng_for(5, 0), 3);
        assert!(max_f_divergence(&tlogt(), &rho, &rho).unwrap().finite().unwrap().abs() < 1e-12);
        let v = max_f_divergence(&tlogt(), &diag(&[0.5, 0.5]), &diag(&[0.25, 0.75])).unwrap();
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((v.finite().unwrap() - expected).abs() < 1e-12);
        let (p, q) = example_87();
        assert_eq!(max_f_divergence(&power(2.0).unwrap(), &p, &q).unwrap(), Infinite);

        let (a, b) = gen_pair(&RandomSpec::new(4, Profile::WellConditioned, 8), 0);
        let root = psd_sqrt(&b).unwrap();
        let inv = pinv_sqrt(&b, None).unwrap().matrix;
        let w = calculus(&tlogt(), &hermitian_part(&(&inv * &a * &inv))).unwrap().to_matrix().unwrap();
        let direct = (&root * w * &root).trace().re;
        assert!((max_f_divergence(&tlogt(), &a, &b).unwrap().finite().unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn essential_part_examples() {
        let (p, q) = example_87();
        let ess = essential_part(&power(2.0).unwrap(), &p, &q).unwrap();
        assert!(ess.same_as(&Subspace::coordinate(2, &[1]), 1e-10));
        let (a, b) = gen_pair(&RandomSpec::new(3, Profile::RankDeficient(1), 2), 0);
        let ess = essential_part(&crate::scalar_functions::g_lambda(0.5).unwrap(), &a, &b).unwrap();
        assert_eq!(ess.dim(), 3);
        let b = identity(3);
        assert_eq!(essential_part(&power(2.0).unwrap(), &a, &b).unwrap().dim(), 3);
    }

    #[test]
    fn t2_bound_examples() {
        let d = diag(&[1.0, 2.0]);
        let t = t2_bound(&d, &d).unwrap();
        assert!(t.bounded && t.certified);
        assert!((t.lambda_min.finite().unwrap() - 2.0).abs() < 1e-12);
        let t = t2_bound(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])).unwrap();
        assert!(!t.bounded);
        assert_eq!(t.lambda_min, Infinite);

        for trial in 0..20 {
            let mut rng = rng_for(12, trial);
            let b = random_psd(&mut rng, 4, 3);
            let c = random_psd(&mut rng, 4, 4);
            let root = psd_sqrt(&b).unwrap();
            let a = hermitian_part(&(&root * c * &root));
            let t = t2_bound(&a, &b).unwrap();
            assert!(t.bounded && t.certified, "trial {trial}");
            let norm = perspective_apply(&power(2.0).unwrap(), &a, &b).unwrap().value.norm().finite().unwrap();
            let lambda = t.lambda_min.finite().unwrap();
            assert!((norm - lambda).abs() <= 1e-7 * (1.0 + lambda), "trial {trial}: {norm} vs {lambda}");
        }
    }

    #[test]
    fn chain_examples() {
        let (a, b) = gen_pair(&RandomSpec::new(3, Profile::WellConditioned, 1), 0);
        let r = boundedness_chain(1.5, &a, &b, 1).unwrap();
        assert!(r.a && r.b && r.c && r.d && r.e);
        let (p, q) = example_87();
        let r = boundedness_chain(2.0, &p, &q, 1).unwrap();
        assert!(!r.a && !r.b);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn ah_examples() {
        let (a, b) = example_712();
        let sq = power(2.0).unwrap();
        let r = check_ah_inequality(&sq, &a, &b, &[1.0]).unwrap();
        assert!(r[0].holds);
        assert!((r[0].lhs.to_f64() - r[0].rhs.to_f64()).abs() < 1e-10);
        for trial in 0..10 {
            let (a, b) = gen_pair(&RandomSpec::new(3, Profile::WellConditioned, 13), trial);
            for f in [power(2.0).unwrap(), power(-1.0).unwrap()] {
                assert!(check_ah_inequality(&f, &a, &b, &[0.5, 0.25]).unwrap().iter().all(|e| e.holds));
            }
        }
    }

    #[test]
    fn monotonicity_examples() {
        let (a, b) = gen_pair(&RandomSpec::new(3, Profile::RankDeficient(2), 14), 0);
        let u = random_unitary(&mut rng_for(14, 1), 3);
        let r = check_positive_map_monotonicity(&tlogt(), std::slice::from_ref(&u), &a, &b, 20, 1).unwrap();
        assert!(r.holds());
        let pinching: Vec<CMatrix> = (0..3).map(|i| real_unit(3, i) * real_unit(3, i).adjoint()).collect();
        for f in [tlogt(), power(2.0).unwrap(), neglog()] {
            assert!(check_positive_map_monotonicity(&f, &pinching, &a, &b, 30, 2).unwrap().holds());
        }
        // Φ(X) = ⟨Xξ, ξ⟩ as a map into C
        let xi = random_unit_vector(&mut rng_for(14, 2), 3);
        let functional = [CMatrix::from_fn(1, 3, |_, j| xi[j].conj())];
        assert!(check_positive_map_monotonicity(&tlogt(), &functional, &a, &b, 5, 3).unwrap().holds());
    }

    #[test]
    fn state_inequality_is_strict_on_example() {
        let (a, b) = example_712();
        let e1 = State::vector(&real_unit(2, 0)).unwrap();
        let (lhs, rhs) = state_inequality(&power(2.0).unwrap(), &a, &b, &e1).unwrap();
        assert!(lhs.to_f64() < rhs.to_f64() - 1e-3);
        let rho = State::new(identity(2).scale(0.5)).unwrap();
        let (lhs, rhs) = state_inequality(&power(2.0).unwrap(), &a, &b, &rho).unwrap();
        assert!(lhs.to_f64() <= rhs.to_f64() + 1e-12);
    }
}
