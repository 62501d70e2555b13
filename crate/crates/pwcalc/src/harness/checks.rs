//! Individual inequalities and identities, each a pair of sides built from
//! named inputs. Suites evaluate them; failure records replay them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::extended_sa::{ExtendedReal, ExtendedSelfAdjoint, Finite, Infinite, CONTAINMENT_TOL};
use crate::matrix_core::{eigh, hermitian_part, identity, max_abs_entry, op_norm, CMatrix, CVector};

use super::candidate::Candidate;
use super::SuiteError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Φ(A₁+A₂, B₁+B₂) ≤ Φ(A₁,B₁) + Φ(A₂,B₂)
    Subadditive,
    /// Φ(A₁,B₁) + Φ(A₂,B₂) ≤ Φ(A₁+A₂, B₁+B₂)
    Superadditive,
    /// Φ(C*AC, C*BC) ≤ C*Φ(A,B)C for a general C
    Congruence,
    CongruenceReversed,
    /// Φ(V*AV, V*BV) ≤ V*Φ(A,B)V for an isometry V
    Isometry,
    IsometryReversed,
    /// Φ(CAC, CBC) ≤ CΦ(A,B)C for PSD C
    Transformer,
    TransformerReversed,
    /// A₁ ≤ A₂ implies Φ(A₂,B) ≤ Φ(A₁,B)
    Antitone,
    /// Φ(C*AC, C*BC) = C*Φ(A,B)C when range(A+B) ⊆ range(C)
    Homogeneity,
    /// Φ(A₁⊕A₂, B₁⊕B₂) = Φ(A₁,B₁) ⊕ Φ(A₂,B₂)
    DirectSum,
    /// Φ(Aₙ,Bₙ) ≈ Φ(A,B) for a perturbation with A+B ≥ εI
    Perturbation,
    /// Φ(A+εI, B+εI) ≈ Φ(A,B) for small ε
    ShiftContinuity,
    /// Φ(Aₙ,Bₙ) ≈ Φ(A,B) at the end of a decreasing chain
    ChainConvergence,
    /// Φ(A,B)(ρ) ≤ Φ(Aₙ,Bₙ)(ρ) along the tail of a decreasing chain
    LowerSemicontinuity,
    /// Φ(Aₙ,Bₙ)(ρ) ≤ Φ(A,B)(ρ) along the tail of a decreasing chain
    UpperSemicontinuity,
    /// Φ(A+εI, B+εI) ≤ Φ(A+δI, B+δI) + Φ((ε-δ)I, (ε-δ)I) for ε > δ
    ShiftMonotone,
    /// Φ(A+εI, B+εI)(ρ) ≈ Φ(A,B)(ρ) for small ε
    ShiftLimit,
    /// Φ(tI, I) is a bounded multiple of the identity
    ScalarBounded,
    /// Φ(I+Xₙ, I)(ρ) ≈ Φ(I,I)(ρ) for Xₙ ↓ 0
    LocalUpperContinuity,
}

/// How the two sides are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// lhs ≤ rhs as forms
    FormLeq,
    /// lhs = rhs: same ∞-part, finite parts entrywise within slack
    FormEq,
    /// lhs(ρ) ≤ rhs(ρ) for the vector state of input `xi`
    StateLeq,
    /// lhs(ρ) = rhs(ρ) for the vector state of input `xi`
    StateEq,
}

impl Relation {
    pub fn violated(self, lhs: ExtendedReal, rhs: ExtendedReal, slack: f64) -> bool {
        match self {
            Relation::FormLeq | Relation::StateLeq => match (lhs, rhs) {
                (Finite(l), Finite(r)) => l > r + slack,
                (Infinite, Finite(_)) => true,
                (_, Infinite) => false,
            },
            Relation::FormEq | Relation::StateEq => match (lhs, rhs) {
                (Finite(l), Finite(r)) => (l - r).abs() > slack,
                (Infinite, Infinite) => false,
                _ => true,
            },
        }
    }
}

impl Check {
    pub fn relation(self) -> Relation {
        use Check::*;
        match self {
            Subadditive | Superadditive | Congruence | CongruenceReversed | Isometry | IsometryReversed | Transformer
            | TransformerReversed | Antitone | ShiftMonotone => Relation::FormLeq,
            Homogeneity | DirectSum | Perturbation | ShiftContinuity | ChainConvergence | ScalarBounded => Relation::FormEq,
            LowerSemicontinuity | UpperSemicontinuity => Relation::StateLeq,
            ShiftLimit | LocalUpperContinuity => Relation::StateEq,
        }
    }

    pub fn label(self) -> &'static str {
        use Check::*;
        match self {
            Subadditive => "subadditive",
            Superadditive => "superadditive",
            Congruence => "congruence",
            CongruenceReversed => "congruence_reversed",
            Isometry => "isometry",
            IsometryReversed => "isometry_reversed",
            Transformer => "transformer",
            TransformerReversed => "transformer_reversed",
            Antitone => "antitone",
            Homogeneity => "homogeneity",
            DirectSum => "direct_sum",
            Perturbation => "perturbation",
            ShiftContinuity => "shift_continuity",
            ChainConvergence => "chain_convergence",
            LowerSemicontinuity => "lower_semicontinuity",
            UpperSemicontinuity => "upper_semicontinuity",
            ShiftMonotone => "shift_monotone",
            ShiftLimit => "shift_limit",
            ScalarBounded => "scalar_bounded",
            LocalUpperContinuity => "local_upper_continuity",
        }
    }
}

/// Named matrices and scalars a check is built from.
#[derive(Debug, Clone, Default)]
pub struct Inputs {
    pub matrices: BTreeMap<String, CMatrix>,
    pub params: BTreeMap<String, f64>,
}

impl Inputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, m: &CMatrix) -> Self {
        self.matrices.insert(name.to_string(), m.clone());
        self
    }

    pub fn with_vector(self, name: &str, v: &CVector) -> Self {
        let m = CMatrix::from_fn(v.len(), 1, |i, _| v[i]);
        self.with(name, &m)
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn matrix(&self, name: &str) -> Result<&CMatrix, SuiteError> {
        self.matrices.get(name).ok_or_else(|| SuiteError::Record(format!("missing input `{name}`")))
    }

    pub fn vector(&self, name: &str) -> Result<CVector, SuiteError> {
        Ok(self.matrix(name)?.column(0).into_owned())
    }

    pub fn param(&self, name: &str) -> Result<f64, SuiteError> {
        self.params.get(name).copied().ok_or_else(|| SuiteError::Record(format!("missing parameter `{name}`")))
    }
}

/// The two sides of `check` for `cand` on `inputs`.
pub fn sides(check: Check, cand: &Candidate, inputs: &Inputs) -> Result<(ExtendedSelfAdjoint, ExtendedSelfAdjoint), SuiteError> {
    use Check::*;
    let apply = |a: &CMatrix, b: &CMatrix| cand.apply(a, b).map_err(|message| SuiteError::Candidate { name: cand.name().to_string(), message });
    let m = |name: &str| inputs.matrix(name);
    let shifted = |x: &CMatrix, eps: f64| hermitian_part(&(x + identity(x.nrows()).scale(eps)));
    let congruent = |x: &CMatrix, c: &CMatrix| hermitian_part(&(c.adjoint() * x * c));
    Ok(match check {
        Subadditive | Superadditive => {
            let (a1, b1, a2, b2) = (m("a1")?, m("b1")?, m("a2")?, m("b2")?);
            let joint = apply(&hermitian_part(&(a1 + a2)), &hermitian_part(&(b1 + b2)))?;
            let split = apply(a1, b1)?.add(&apply(a2, b2)?)?;
            if check == Subadditive { (joint, split) } else { (split, joint) }
        }
        Congruence | CongruenceReversed | Isometry | IsometryReversed | Transformer | TransformerReversed | Homogeneity => {
            let (a, b, c) = (m("a")?, m("b")?, m("c")?);
            let inner = apply(&congruent(a, c), &congruent(b, c))?;
            let outer = apply(a, b)?.congruence(c)?;
            match check {
                CongruenceReversed | IsometryReversed | TransformerReversed => (outer, inner),
                _ => (inner, outer),
            }
        }
        Antitone => (apply(m("a2")?, m("b")?)?, apply(m("a1")?, m("b")?)?),
        DirectSum => {
            let (a1, b1, a2, b2) = (m("a1")?, m("b1")?, m("a2")?, m("b2")?);
            let joint = apply(&block_diag(a1, a2), &block_diag(b1, b2))?;
            (joint, apply(a1, b1)?.direct_sum(&apply(a2, b2)?))
        }
        Perturbation | ChainConvergence | LowerSemicontinuity | UpperSemicontinuity => {
            let near = apply(m("a_n")?, m("b_n")?)?;
            let limit = apply(m("a")?, m("b")?)?;
            if check == LowerSemicontinuity { (limit, near) } else { (near, limit) }
        }
        ShiftContinuity | ShiftLimit => {
            let eps = inputs.param("eps")?;
            let (a, b) = (m("a")?, m("b")?);
            (apply(&shifted(a, eps), &shifted(b, eps))?, apply(a, b)?)
        }
        ShiftMonotone => {
            let (hi, lo) = (inputs.param("eps_hi")?, inputs.param("eps_lo")?);
            let (a, b) = (m("a")?, m("b")?);
            let gap = identity(a.nrows()).scale(hi - lo);
            let upper = apply(&shifted(a, lo), &shifted(b, lo))?.add(&apply(&gap, &gap)?)?;
            (apply(&shifted(a, hi), &shifted(b, hi))?, upper)
        }
        ScalarBounded => {
            let t = inputs.param("t")?;
            let n = inputs.param("dim")? as usize;
            let value = apply(&identity(n).scale(t), &identity(n))?;
            let level = match value.to_matrix() {
                Some(v) => v.trace().re / n as f64,
                None => 0.0,
            };
            (value, ExtendedSelfAdjoint::bounded(&identity(n).scale(level))?)
        }
        LocalUpperContinuity => {
            let x = m("x")?;
            let n = x.nrows();
            let step = inputs.param("step")?;
            (apply(&shifted(&x.scale(step), 1.0), &identity(n))?, apply(&identity(n), &identity(n))?)
        }
    })
}

fn block_diag(x: &CMatrix, y: &CMatrix) -> CMatrix {
    let (p, q) = (x.nrows(), y.nrows());
    let mut out = CMatrix::zeros(p + q, p + q);
    out.view_mut((0, 0), (p, p)).copy_from(x);
    out.view_mut((p, p), (q, q)).copy_from(y);
    out
}

/// 1 + the larger operator norm of the two finite parts.
pub fn scale_of(lhs: &ExtendedSelfAdjoint, rhs: &ExtendedSelfAdjoint) -> f64 {
    1.0 + op_norm(lhs.finite_part()).max(op_norm(rhs.finite_part()))
}

/// A witness ξ with the two sides at ξ.
#[derive(Debug, Clone)]
pub struct Violation {
    pub witness: CVector,
    pub lhs: ExtendedReal,
    pub rhs: ExtendedReal,
}

/// Compares the sides; `None` when the relation holds within `slack`.
pub fn compare(
    relation: Relation,
    lhs: &ExtendedSelfAdjoint,
    rhs: &ExtendedSelfAdjoint,
    slack: f64,
    state: Option<&CVector>,
) -> Result<Option<Violation>, SuiteError> {
    let at = |w: CVector| -> Result<Option<Violation>, SuiteError> {
        let (l, r) = (lhs.quadratic_form(&w)?, rhs.quadratic_form(&w)?);
        Ok(relation.violated(l, r, slack).then_some(Violation { witness: w, lhs: l, rhs: r }))
    };
    match relation {
        Relation::StateLeq | Relation::StateEq => {
            let xi = state.ok_or_else(|| SuiteError::Record("state comparison without `xi`".into()))?;
            at(xi.clone())
        }
        Relation::FormLeq => {
            let c = lhs.form_leq(rhs, slack);
            match c.witness {
                Some(w) if !c.holds => at(w),
                _ => Ok(None),
            }
        }
        Relation::FormEq => {
            if let Err(w) = lhs.essential().contains(rhs.essential(), CONTAINMENT_TOL) {
                return at(w);
            }
            if let Err(w) = rhs.essential().contains(lhs.essential(), CONTAINMENT_TOL) {
                return at(w);
            }
            let diff = hermitian_part(&(lhs.embedded_finite_part() - rhs.embedded_finite_part()));
            if max_abs_entry(&diff) <= slack {
                return Ok(None);
            }
            // the extreme eigenvector carries the operator norm, which dominates every entry
            let e = eigh(&diff)?;
            let k = if e.values[0].abs() >= e.values[e.dim() - 1].abs() { 0 } else { e.dim() - 1 };
            let w = lhs.essential().project(&e.column(k));
            let w = if w.norm() > 0.5 { w.unscale(w.norm()) } else { e.column(k) };
            Ok(Some(Violation { lhs: lhs.quadratic_form(&w)?, rhs: rhs.quadratic_form(&w)?, witness: w }))
        }
    }
}
