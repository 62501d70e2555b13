//! Suite reports and replay of their failure records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::extended_sa::ExtendedReal;
use crate::matrix_core::{CMatrix, ComplexGrid};

use super::candidate::Candidate;
use super::checks::{sides, Check, Inputs, Relation};
use super::SuiteError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub trial: u64,
    pub check: Check,
    pub relation: Relation,
    pub inputs: BTreeMap<String, ComplexGrid>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    pub witness: Option<ComplexGrid>,
    pub lhs: Option<ExtendedReal>,
    pub rhs: Option<ExtendedReal>,
    pub slack: f64,
    /// Set when the candidate could not be evaluated on these inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl FailureRecord {
    pub fn inputs(&self) -> Result<Inputs, SuiteError> {
        let mut out = Inputs::new();
        for (name, grid) in &self.inputs {
            out.matrices.insert(name.clone(), grid_matrix(grid, name)?);
        }
        out.params = self.params.clone();
        Ok(out)
    }

    pub fn witness(&self) -> Result<Option<CMatrix>, SuiteError> {
        self.witness.as_ref().map(|g| grid_matrix(g, "witness")).transpose()
    }
}

fn grid_matrix(grid: &ComplexGrid, field: &str) -> Result<CMatrix, SuiteError> {
    let rows = grid.re.len();
    let cols = grid.re.first().map_or(0, Vec::len);
    grid.to_matrix(rows, cols, field).map_err(|e| SuiteError::Record(e.to_string()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckTally {
    pub run: u64,
    pub failed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub candidate: String,
    pub seed: u64,
    pub trials: u64,
    pub passes: u64,
    /// One record per failed trial (its first failing check), sorted by trial.
    pub failures: Vec<FailureRecord>,
    pub checks: BTreeMap<String, CheckTally>,
    /// Observations that are not failures, with their counts.
    pub notes: BTreeMap<String, u64>,
    pub wall_time_ms: u64,
}

impl SuiteReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }

    /// Whether `check` ran at least once and never failed.
    pub fn check_passed(&self, check: Check) -> bool {
        self.checks.get(check.label()).is_some_and(|t| t.run > 0 && t.failed == 0)
    }

    pub fn check_failed(&self, check: Check) -> bool {
        self.checks.get(check.label()).is_some_and(|t| t.failed > 0)
    }

    /// Zeroes the timing so reports for identical runs are byte-identical.
    pub fn without_timing(mut self) -> Self {
        self.wall_time_ms = 0;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SuiteError> {
        serde_json::from_str(text).map_err(|e| SuiteError::Record(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub lhs: ExtendedReal,
    pub rhs: ExtendedReal,
    pub violated: bool,
}

/// Re-evaluates a failure record against `cand`. Evaluation failures come
/// back as `SuiteError::Candidate`.
pub fn replay(cand: &Candidate, record: &FailureRecord) -> Result<ReplayOutcome, SuiteError> {
    let inputs = record.inputs()?;
    let (lhs, rhs) = sides(record.check, cand, &inputs)?;
    let witness = match record.relation {
        Relation::StateLeq | Relation::StateEq => inputs.vector("xi")?,
        _ => record.witness()?.ok_or_else(|| SuiteError::Record("record has no witness".into()))?.column(0).into_owned(),
    };
    let (l, r) = (lhs.quadratic_form(&witness)?, rhs.quadratic_form(&witness)?);
    Ok(ReplayOutcome { lhs: l, rhs: r, violated: record.relation.violated(l, r, record.slack) })
}
