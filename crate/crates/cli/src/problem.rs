//! Problem files: one measurement record plus optional solver overrides.
//!
//! ```json
//! {
//!   "dimension": 4,
//!   "basis_probs": [0.0, 0.5, 0.5, 0.0],
//!   "observables": [{"pauli": "XX"}, {"matrix": [[1, 0], [0, 0], ...]}],
//!   "expectations": [-1.0, 0.3],
//!   "solver": {"learning_rate": 0.05, "tolerance": 1e-5}
//! }
//! ```
//!
//! Matrices are row-major lists of `[re, im]` pairs.

use cohest_core::hermitian::C64;
use cohest_core::{HermitianOperator, MeasurementRecord, PauliString, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    pub learning_rate: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_iters: Option<u64>,
    pub line_search: Option<bool>,
    pub prob_floor: Option<f64>,
    pub divergence_bound: Option<f64>,
}

impl SolverOverrides {
    pub fn apply(&self, base: &SolverConfig) -> SolverConfig {
        let mut c = base.clone();
        if let Some(v) = self.learning_rate {
            c.learning_rate = v;
        }
        if let Some(v) = self.tolerance {
            c.tolerance = v;
        }
        if let Some(v) = self.max_iters {
            c.max_iters = v;
        }
        if let Some(v) = self.line_search {
            c.line_search = v;
        }
        if let Some(v) = self.prob_floor {
            c.prob_floor = v;
        }
        if let Some(v) = self.divergence_bound {
            c.divergence_bound = v;
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dimension: usize,
    pub basis_probs: Vec<f64>,
    #[serde(default)]
    pub observables: Vec<ObservableSpec>,
    #[serde(default)]
    pub expectations: Vec<f64>,
    #[serde(default)]
    pub solver: Option<SolverOverrides>,
}

/// Deserializes JSON, reporting the failing field path together with line and column.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let path = if path == "." { "<root>".to_string() } else { path };
        CliError::input(path, inner)
    })
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    fn observable(&self, k: usize) -> Result<HermitianOperator> {
        let spec = &self.observables[k];
        let field = |f: &str| format!("observables[{k}].{f}");
        match (&spec.pauli, &spec.matrix) {
            (Some(label), None) => {
                let p: PauliString = label.parse().map_err(|e| CliError::input(field("pauli"), e))?;
                let op = p.operator();
                if op.dim() != self.dimension {
                    return Err(CliError::input(
                        field("pauli"),
                        format!("{label} acts on dimension {}, expected {}", op.dim(), self.dimension),
                    ));
                }
                Ok(op)
            }
            (None, Some(entries)) => {
                let d = self.dimension;
                if entries.len() != d * d {
                    return Err(CliError::input(
                        field("matrix"),
                        format!("expected {} [re, im] entries, found {}", d * d, entries.len()),
                    ));
                }
                let values: Vec<C64> = entries.iter().map(|[re, im]| C64::new(*re, *im)).collect();
                HermitianOperator::from_row_slice(d, &values).map_err(|e| CliError::input(field("matrix"), e))
            }
            _ => Err(CliError::input(format!("observables[{k}]"), "exactly one of `pauli` or `matrix` is required")),
        }
    }

    pub fn record(&self) -> Result<MeasurementRecord> {
        if self.dimension == 0 {
            return Err(CliError::input("dimension", "must be positive"));
        }
        if self.basis_probs.len() != self.dimension {
            return Err(CliError::input(
                "basis_probs",
                format!("expected {} entries, found {}", self.dimension, self.basis_probs.len()),
            ));
        }
        if self.expectations.len() != self.observables.len() {
            return Err(CliError::input(
                "expectations",
                format!(
                    "expected {} entries (one per observable), found {}",
                    self.observables.len(),
                    self.expectations.len()
                ),
            ));
        }
        let ops = (0..self.observables.len()).map(|k| self.observable(k)).collect::<Result<Vec<_>>>()?;
        MeasurementRecord::new(self.basis_probs.clone(), ops, self.expectations.clone())
            .map_err(|e| CliError::input(record_field(&e), e))
    }

    pub fn solver_config(&self, base: &SolverConfig) -> SolverConfig {
        self.solver.as_ref().map_or_else(|| base.clone(), |o| o.apply(base))
    }
}

fn record_field(e: &cohest_core::CoreError) -> String {
    use cohest_core::CoreError::*;
    match e {
        InfeasibleExpectation { index, .. } => format!("expectations[{index}]"),
        _ => "basis_probs".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pauli_and_matrix_observables() {
        let text = r#"{
            "dimension": 2,
            "basis_probs": [0.5, 0.5],
            "observables": [{"pauli": "X"}, {"matrix": [[0,0],[0,-1],[0,1],[0,0]]}],
            "expectations": [0.2, 0.1],
            "solver": {"tolerance": 1e-7}
        }"#;
        let pf = ProblemFile::parse(text).unwrap();
        let r = pf.record().unwrap();
        assert_eq!(r.observables().len(), 2);
        assert!(r.observables()[1].distance(&HermitianOperator::pauli_y()) < 1e-15);
        assert_eq!(pf.solver_config(&SolverConfig::default()).tolerance, 1e-7);
    }

    #[test]
    fn errors_name_the_field() {
        let bad_type = r#"{"dimension": 2, "basis_probs": [0.5, "x"]}"#;
        let msg = ProblemFile::parse(bad_type).unwrap_err().to_string();
        assert!(msg.starts_with("basis_probs[1]"), "{msg}");
        assert!(msg.contains("line 1"), "{msg}");

        let unknown = r#"{"dimension": 2, "basis_probs": [0.5, 0.5], "extra": 1}"#;
        assert!(ProblemFile::parse(unknown).is_err());

        let wrong_len = r#"{"dimension": 2, "basis_probs": [0.5, 0.5],
            "observables": [{"pauli": "XX"}], "expectations": [0.0]}"#;
        let msg = ProblemFile::parse(wrong_len).unwrap().record().unwrap_err().to_string();
        assert!(msg.starts_with("observables[0].pauli"), "{msg}");

        let both = r#"{"dimension": 2, "basis_probs": [0.5, 0.5],
            "observables": [{}], "expectations": [0.0]}"#;
        let msg = ProblemFile::parse(both).unwrap().record().unwrap_err().to_string();
        assert!(msg.starts_with("observables[0]"), "{msg}");

        let infeasible = r#"{"dimension": 2, "basis_probs": [0.5, 0.5],
            "observables": [{"pauli": "X"}], "expectations": [1.5]}"#;
        let msg = ProblemFile::parse(infeasible).unwrap().record().unwrap_err().to_string();
        assert!(msg.starts_with("expectations[0]"), "{msg}");

        let sum = r#"{"dimension": 2, "basis_probs": [0.5, 0.6]}"#;
        let msg = ProblemFile::parse(sum).unwrap().record().unwrap_err().to_string();
        assert!(msg.starts_with("basis_probs"), "{msg}");
    }
}
