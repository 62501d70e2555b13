//! Randomized falsification suites. Each suite samples inputs, evaluates a
//! list of checks per trial and aggregates the outcomes into a report. A
//! clean report means no counterexample was found, not that the property holds.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::extended_sa::{ExtendedReal, Finite, Infinite};
use crate::matrix_core::{hermitian_part, identity, ComplexGrid, CMatrix, CVector};
use crate::scalar_functions::ExtendedFunction;

use super::candidate::{Candidate, Orientation};
use super::checks::{compare, scale_of, sides, Check, Inputs};
use super::generators::{gen_pair_with, log_uniform, random_complex, random_hermitian, random_isometry, random_psd, random_unit_vector, RandomSpec};
use super::report::{CheckTally, FailureRecord, SuiteReport};
use super::SuiteError;

/// Relative slack for inequalities between exactly computed sides.
pub const INEQUALITY_TOL: f64 = 1e-8;
/// Relative tolerance for limits reached by a finite chain or a small shift.
pub const LIMIT_TOL: f64 = 1e-6;
/// Depth of the decreasing chains Aₙ = A + 2⁻ⁿD.
pub const CHAIN_DEPTH: i32 = 30;
/// Chain depth and tolerance for continuity from above of connections, whose
/// error can decay like the square root of the perturbation.
pub const CONNECTION_CHAIN_DEPTH: i32 = 40;
pub const CONNECTION_LIMIT_TOL: f64 = 1e-5;
/// Shift schedule for the ε-monotonicity checks.
pub const SHIFT_SCHEDULE: [f64; 8] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    Convexity,
    Continuity,
    /// Homogeneity, direct sums and two continuity conditions that single
    /// out the calculus of continuous ℝ-valued φ.
    PwAxioms,
    /// The five conditions characterizing perspectives of operator convex f.
    PerspectiveAxioms,
    /// Concavity, transformer inequality and continuity from above of connections.
    ConnectionAxioms,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 5] =
        [SuiteKind::Convexity, SuiteKind::Continuity, SuiteKind::PwAxioms, SuiteKind::PerspectiveAxioms, SuiteKind::ConnectionAxioms];

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Convexity => "convexity",
            SuiteKind::Continuity => "continuity",
            SuiteKind::PwAxioms => "pw-axioms",
            SuiteKind::PerspectiveAxioms => "perspective-axioms",
            SuiteKind::ConnectionAxioms => "connection-axioms",
        }
    }
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteKind {
    type Err = SuiteError;

    fn from_str(s: &str) -> Result<Self, SuiteError> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| SuiteError::UnknownSuite(s.to_string()))
    }
}

pub fn run_suite(kind: SuiteKind, cand: &Candidate, spec: &RandomSpec, trials: u64) -> SuiteReport {
    match kind {
        SuiteKind::Convexity => suite_convexity(cand, spec, trials),
        SuiteKind::Continuity => suite_continuity(cand, spec, trials),
        SuiteKind::PwAxioms => suite_pw_axioms(cand, spec, trials),
        SuiteKind::PerspectiveAxioms => suite_perspective_axioms(cand, spec, trials),
        SuiteKind::ConnectionAxioms => suite_connection_axioms(cand, spec, trials),
    }
}

/// Per-trial bookkeeping.
struct Trial<'a> {
    cand: &'a Candidate,
    index: u64,
    rng: ChaCha8Rng,
    dim: usize,
    spec: &'a RandomSpec,
    outcomes: Vec<(Check, bool)>,
    failure: Option<FailureRecord>,
    notes: Vec<String>,
}

impl<'a> Trial<'a> {
    fn new(cand: &'a Candidate, spec: &'a RandomSpec, index: u64) -> Self {
        let mut rng = spec.rng(index);
        let dim = rng.gen_range(spec.dim_min..=spec.dim_max);
        Self { cand, index, rng, dim, spec, outcomes: Vec::new(), failure: None, notes: Vec::new() }
    }

    fn pair(&mut self) -> (CMatrix, CMatrix) {
        gen_pair_with(&mut self.rng, self.dim, self.spec.profile)
    }

    fn psd(&mut self) -> CMatrix {
        let rank = self.rng.gen_range(1..=self.dim);
        random_psd(&mut self.rng, self.dim, rank)
    }

    fn unit(&mut self) -> CVector {
        random_unit_vector(&mut self.rng, self.dim)
    }

    fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Evaluates `check` with slack `rel_tol · scale`; returns whether it held.
    fn run(&mut self, check: Check, inputs: Inputs, rel_tol: f64) -> bool {
        let relation = check.relation();
        let xi = inputs.vector("xi").ok();
        let result = sides(check, self.cand, &inputs).and_then(|(lhs, rhs)| {
            let slack = rel_tol * scale_of(&lhs, &rhs);
            Ok((compare(relation, &lhs, &rhs, slack, xi.as_ref())?, slack))
        });
        let failure = match result {
            Ok((None, _)) => None,
            Ok((Some(v), slack)) => Some((Some(v.witness), Some(v.lhs), Some(v.rhs), slack, None)),
            Err(e) => Some((None, None, None, 0.0, Some(e.to_string()))),
        };
        let held = failure.is_none();
        self.outcomes.push((check, held));
        if let (Some((witness, lhs, rhs, slack, error)), None) = (failure, &self.failure) {
            self.failure = Some(FailureRecord {
                trial: self.index,
                check,
                relation,
                inputs: inputs.matrices.iter().map(|(k, m)| (k.clone(), ComplexGrid::from_matrix(m))).collect(),
                params: inputs.params.clone(),
                witness: witness.map(|w: CVector| ComplexGrid::from_matrix(&CMatrix::from_fn(w.len(), 1, |i, _| w[i]))),
                lhs,
                rhs,
                slack,
                error,
            });
        }
        held
    }
}

struct TrialResult {
    outcomes: Vec<(Check, bool)>,
    failure: Option<FailureRecord>,
    notes: Vec<String>,
}

fn run_trials(
    suite: &str,
    cand: &Candidate,
    spec: &RandomSpec,
    trials: u64,
    body: impl Fn(&mut Trial) + Sync,
    extra_notes: Vec<String>,
) -> SuiteReport {
    let start = Instant::now();
    let results: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|index| {
            let mut t = Trial::new(cand, spec, index);
            body(&mut t);
            TrialResult { outcomes: t.outcomes, failure: t.failure, notes: t.notes }
        })
        .collect();
    let mut checks: BTreeMap<String, CheckTally> = BTreeMap::new();
    let mut notes: BTreeMap<String, u64> = BTreeMap::new();
    let mut failures = Vec::new();
    for r in results {
        for (check, held) in r.outcomes {
            let tally = checks.entry(check.label().to_string()).or_default();
            tally.run += 1;
            tally.failed += u64::from(!held);
        }
        for n in r.notes {
            *notes.entry(n).or_default() += 1;
        }
        failures.extend(r.failure);
    }
    for n in extra_notes {
        *notes.entry(n).or_default() += 1;
    }
    failures.sort_by_key(|f| f.trial);
    SuiteReport {
        suite: suite.to_string(),
        candidate: cand.name().to_string(),
        seed: spec.seed,
        trials,
        passes: trials - failures.len() as u64,
        failures,
        checks,
        notes,
        wall_time_ms: start.elapsed().as_millis() as u64,
    }
}

fn chain_step(x: &CMatrix, d: &CMatrix, depth: i32) -> CMatrix {
    hermitian_part(&(x + d.scale(2f64.powi(-depth))))
}

/// Joint subadditivity, congruences by general C and by isometries, and,
/// when φ(1,0) ≤ 0, antitonicity in the first argument. Concave candidates
/// get the reversed inequalities.
pub fn suite_convexity(cand: &Candidate, spec: &RandomSpec, trials: u64) -> SuiteReport {
    let convex = cand.orientation() == Orientation::Convex;
    let antitone = convex && cand.one_zero().is_some_and(|v| v <= 0.0);
    run_trials(
        SuiteKind::Convexity.name(),
        cand,
        spec,
        trials,
        |t| {
            let (a1, b1) = t.pair();
            let (a2, b2) = t.pair();
            let additive = if convex { Check::Subadditive } else { Check::Superadditive };
            t.run(additive, Inputs::new().with("a1", &a1).with("b1", &b1).with("a2", &a2).with("b2", &b2), INEQUALITY_TOL);

            let m = t.rng.gen_range(1..=t.dim + 1);
            let c = random_complex(&mut t.rng, t.dim, m);
            let congruence = if convex { Check::Congruence } else { Check::CongruenceReversed };
            t.run(congruence, Inputs::new().with("a", &a1).with("b", &b1).with("c", &c), INEQUALITY_TOL);

            let k = t.rng.gen_range(1..=t.dim);
            let v = random_isometry(&mut t.rng, t.dim, k);
            let isometry = if convex { Check::Isometry } else { Check::IsometryReversed };
            t.run(isometry, Inputs::new().with("a", &a2).with("b", &b2).with("c", &v), INEQUALITY_TOL);

            if antitone {
                let bump = t.psd();
                let larger = hermitian_part(&(&a1 + bump));
                t.run(Check::Antitone, Inputs::new().with("a1", &a1).with("a2", &larger).with("b", &b1), INEQUALITY_TOL);
            }
        },
        Vec::new(),
    )
}

/// Decreasing chains Aₙ = A + 2⁻ⁿD₁, Bₙ = B + 2⁻ⁿD₂: convergence for
/// ℝ-valued continuous φ, semicontinuity along the chain tail, and
/// monotonicity of the ε-shifted values.
pub fn suite_continuity(cand: &Candidate, spec: &RandomSpec, trials: u64) -> SuiteReport {
    let bounded = cand.is_real_valued();
    let convex = cand.orientation() == Orientation::Convex;
    let probe = scalar_blowup_probe(cand);
    run_trials(
        SuiteKind::Continuity.name(),
        cand,
        spec,
        trials,
        |t| {
            let (a, b) = t.pair();
            let (d1, d2) = (random_psd(&mut t.rng, t.dim, t.dim), random_psd(&mut t.rng, t.dim, t.dim));
            let xi = t.unit();
            if bounded {
                let inputs = Inputs::new()
                    .with("a", &a)
                    .with("b", &b)
                    .with("a_n", &chain_step(&a, &d1, CHAIN_DEPTH))
                    .with("b_n", &chain_step(&b, &d2, CHAIN_DEPTH));
                t.run(Check::ChainConvergence, inputs, LIMIT_TOL);
            }

            let limit = t.cand.apply(&a, &b).ok().and_then(|v| v.quadratic_form(&xi).ok());
            if limit == Some(Infinite) {
                t.note("limit value infinite at the sampled vector; semicontinuity is vacuous at finite depth");
            } else {
                let check = if convex { Check::LowerSemicontinuity } else { Check::UpperSemicontinuity };
                for depth in CHAIN_DEPTH - 4..=CHAIN_DEPTH {
                    let inputs = Inputs::new()
                        .with("a", &a)
                        .with("b", &b)
                        .with("a_n", &chain_step(&a, &d1, depth))
                        .with("b_n", &chain_step(&b, &d2, depth))
                        .with_vector("xi", &xi);
                    if !t.run(check, inputs, LIMIT_TOL) {
                        break;
                    }
                }
            }

            if convex {
                for w in SHIFT_SCHEDULE.windows(2) {
                    let inputs = Inputs::new().with("a", &a).with("b", &b).with_param("eps_hi", w[0]).with_param("eps_lo", w[1]);
                    if !t.run(Check::ShiftMonotone, inputs, INEQUALITY_TOL) {
                        break;
                    }
                }
            }
        },
        probe.into_iter().collect(),
    )
}

/// Φ(2⁻ⁿX, 8⁻ⁿX) on a fixed rank-one X: both arguments decrease to 0 while
/// the values may diverge, which is recorded as an expected divergence.
fn scalar_blowup_probe(cand: &Candidate) -> Option<String> {
    let x = CMatrix::from_fn(2, 2, |_, _| crate::matrix_core::c(0.5));
    let value = |n: i32| -> Option<ExtendedReal> {
        let v = cand.apply(&x.scale(2f64.powi(-n)), &x.scale(8f64.powi(-n))).ok()?;
        Some(v.trace())
    };
    // beyond n = 15 the ratio 4⁻ⁿ of the arguments falls under the endpoint tolerance
    match (value(5), value(15)) {
        (Some(Finite(early)), Some(Finite(late))) if late > 1e2 * early.abs().max(1.0) => Some(format!(
            "expected divergence: trace of value at (2^-n X, 8^-n X) grows from {early:.3e} (n=5) to {late:.3e} (n=15) while both arguments decrease to 0"
        )),
        _ => None,
    }
}

/// Operator homogeneity, direct sums, continuity under perturbations with
/// A+B floored away from 0, and continuity under diagonal shifts.
pub fn suite_pw_axioms(cand: &Candidate, spec: &RandomSpec, trials: u64) -> SuiteReport {
    run_trials(
        SuiteKind::PwAxioms.name(),
        cand,
        spec,
        trials,
        |t| {
            let (a, b) = t.pair();
            let m = t.dim + t.rng.gen_range(0..=1);
            // full row rank with probability one, so range(A+B) ⊆ range(C)
            let c = random_complex(&mut t.rng, t.dim, m);
            t.run(Check::Homogeneity, Inputs::new().with("a", &a).with("b", &b).with("c", &c), INEQUALITY_TOL);

            let (a2, b2) = t.pair();
            t.run(Check::DirectSum, Inputs::new().with("a1", &a).with("b1", &b).with("a2", &a2).with("b2", &b2), INEQUALITY_TOL);

            let floored = hermitian_part(&(&a + identity(t.dim).scale(0.1)));
            let h = random_hermitian(&mut t.rng, t.dim);
            let h = h.unscale(crate::matrix_core::op_norm(&h).max(1e-300));
            let d = random_psd(&mut t.rng, t.dim, t.dim);
            let delta = 1e-9;
            let inputs = Inputs::new()
                .with("a", &floored)
                .with("b", &b)
                .with("a_n", &hermitian_part(&(&floored + h.scale(delta))))
                .with("b_n", &hermitian_part(&(&b + d.scale(delta))));
            t.run(Check::Perturbation, inputs, LIMIT_TOL);

            t.run(Check::ShiftContinuity, Inputs::new().with("a", &a).with("b", &b).with_param("eps", 1e-9), LIMIT_TOL);
        },
        Vec::new(),
    )
}

/// Joint subadditivity, the transformer inequality for PSD C, limits of the
/// ε-shifted values, boundedness of Φ(tI, I), and continuity at (I+Xₙ, I).
pub fn suite_perspective_axioms(cand: &Candidate, spec: &RandomSpec, trials: u64) -> SuiteReport {
    let mut extra = Vec::new();
    if cand.orientation() == Orientation::Concave {
        extra.push("candidate is concave-oriented; convex-side axioms are expected to fail".to_string());
    }
    run_trials(
        SuiteKind::PerspectiveAxioms.name(),
        cand,
        spec,
        trials,
        |t| {
            let (a1, b1) = t.pair();
            let (a2, b2) = t.pair();
            t.run(Check::Subadditive, Inputs::new().with("a1", &a1).with("b1", &b1).with("a2", &a2).with("b2", &b2), INEQUALITY_TOL);

            let c = t.psd();
            t.run(Check::Transformer, Inputs::new().with("a", &a1).with("b", &b1).with("c", &c), INEQUALITY_TOL);

            let xi = t.unit();
            for w in SHIFT_SCHEDULE.windows(2) {
                let inputs = Inputs::new().with("a", &a2).with("b", &b2).with_param("eps_hi", w[0]).with_param("eps_lo", w[1]);
                if !t.run(Check::ShiftMonotone, inputs, INEQUALITY_TOL) {
                    break;
                }
            }
            let limit = t.cand.apply(&a2, &b2).ok().and_then(|v| v.quadratic_form(&xi).ok());
            if limit == Some(Infinite) {
                t.note("limit value infinite at the sampled vector; shift limit checked through monotonicity only");
            } else {
                let last = SHIFT_SCHEDULE[SHIFT_SCHEDULE.len() - 1];
                let inputs = Inputs::new().with("a", &a2).with("b", &b2).with_param("eps", last).with_vector("xi", &xi);
                t.run(Check::ShiftLimit, inputs, LIMIT_TOL);
            }

            let level = log_uniform(&mut t.rng, 1e-2, 1e2);
            let inputs = Inputs::new().with_param("t", level).with_param("dim", t.dim as f64);
            t.run(Check::ScalarBounded, inputs, 1e-9);

            let x = t.psd();
            let inputs = Inputs::new().with("x", &x).with_param("step", 2f64.powi(-CHAIN_DEPTH)).with_vector("xi", &xi);
            t.run(Check::LocalUpperContinuity, inputs, LIMIT_TOL);
        },
        extra,
    )
}

/// Joint concavity, the transformer inequality C(AσB)C ≤ (CAC)σ(CBC), and
/// continuity along decreasing chains.
pub fn suite_connection_axioms(cand: &Candidate, spec: &RandomSpec, trials: u64) -> SuiteReport {
    run_trials(
        SuiteKind::ConnectionAxioms.name(),
        cand,
        spec,
        trials,
        |t| {
            let (a1, b1) = t.pair();
            let (a2, b2) = t.pair();
            t.run(Check::Superadditive, Inputs::new().with("a1", &a1).with("b1", &b1).with("a2", &a2).with("b2", &b2), INEQUALITY_TOL);

            let c = t.psd();
            t.run(Check::TransformerReversed, Inputs::new().with("a", &a1).with("b", &b1).with("c", &c), INEQUALITY_TOL);

            let (d1, d2) = (random_psd(&mut t.rng, t.dim, t.dim), random_psd(&mut t.rng, t.dim, t.dim));
            let inputs = Inputs::new()
                .with("a", &a2)
                .with("b", &b2)
                .with("a_n", &chain_step(&a2, &d1, CONNECTION_CHAIN_DEPTH))
                .with("b_n", &chain_step(&b2, &d2, CONNECTION_CHAIN_DEPTH));
            t.run(Check::ChainConvergence, inputs, CONNECTION_LIMIT_TOL);
        },
        Vec::new(),
    )
}

/// Φ(tI, I) read as a scalar on a `dim`-dimensional space, per t.
pub fn recover_generator(cand: &Candidate, points: &[f64], dim: usize) -> Result<Vec<ExtendedReal>, SuiteError> {
    points
        .iter()
        .map(|&t| {
            let value = cand
                .apply(&identity(dim).scale(t), &identity(dim))
                .map_err(|message| SuiteError::Candidate { name: cand.name().to_string(), message })?;
            Ok(match value.to_matrix() {
                Some(m) => Finite(m.trace().re / dim as f64),
                None => Infinite,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RecoveryReport {
    pub points: Vec<f64>,
    pub recovered: Vec<ExtendedReal>,
    /// Largest |recovered - f(t)| / (1 + |f(t)|).
    pub max_deviation: f64,
    pub worst_point: f64,
}

impl RecoveryReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_deviation <= tol
    }
}

/// Compares Φ(tI, I) with f(t) on `count` log-spaced points of [1e-2, 1e2].
pub fn check_recovery(cand: &Candidate, f: &ExtendedFunction, count: usize) -> Result<RecoveryReport, SuiteError> {
    let points: Vec<f64> = (0..count).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / (count.max(2) - 1) as f64)).collect();
    let recovered = recover_generator(cand, &points, 2)?;
    let mut max_deviation = 0.0f64;
    let mut worst_point = points.first().copied().unwrap_or(1.0);
    for (&t, &r) in points.iter().zip(&recovered) {
        let deviation = match (r, f.eval(t)?) {
            (Finite(x), Finite(y)) => (x - y).abs() / (1.0 + y.abs()),
            (Infinite, Infinite) => 0.0,
            _ => f64::INFINITY,
        };
        if deviation > max_deviation {
            max_deviation = deviation;
            worst_point = t;
        }
    }
    Ok(RecoveryReport { points, recovered, max_deviation, worst_point })
}
