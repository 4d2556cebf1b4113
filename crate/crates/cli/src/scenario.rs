//! Scenario files for `simulate`. Every field is optional:
//!
//! ```json
//! {
//!   "p_values": [0.0, 0.1, 0.2, 0.3333333333333333, 0.4, 0.6, 0.8, 1.0],
//!   "observable_sets": [["ZZ", "XX"], ["ZZ", "XX", "YY"]],
//!   "shots": 100000,
//!   "repetitions": 1000,
//!   "seed": 1592609367,
//!   "noiseless": false,
//!   "warm_start": true,
//!   "solver": {"line_search": true}
//! }
//! ```

use cohest_core::experiment::Setting;
use cohest_core::WernerScenario;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::problem::{parse_json, SolverOverrides};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub p_values: Option<Vec<f64>>,
    pub observable_sets: Option<Vec<Vec<String>>>,
    pub shots: Option<u64>,
    pub repetitions: Option<usize>,
    pub seed: Option<u64>,
    pub noiseless: Option<bool>,
    pub warm_start: Option<bool>,
    pub solver: Option<SolverOverrides>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    pub fn scenario(&self) -> Result<WernerScenario> {
        let mut sc = WernerScenario::default();
        if let Some(ps) = &self.p_values {
            if let Some(i) = ps.iter().position(|p| !(0.0..=1.0).contains(p)) {
                return Err(CliError::input(format!("p_values[{i}]"), "must lie in [0, 1]"));
            }
            sc.p_values = ps.clone();
        }
        if let Some(sets) = &self.observable_sets {
            let mut parsed = Vec::with_capacity(sets.len());
            for (i, set) in sets.iter().enumerate() {
                let mut row = Vec::with_capacity(set.len());
                for (j, label) in set.iter().enumerate() {
                    let s: Setting =
                        label.parse().map_err(|e| CliError::input(format!("observable_sets[{i}][{j}]"), e))?;
                    row.push(s);
                }
                parsed.push(row);
            }
            sc.observable_sets = parsed;
        }
        if let Some(v) = self.shots {
            sc.shots = v;
        }
        if let Some(v) = self.repetitions {
            sc.repetitions = v;
        }
        if let Some(v) = self.seed {
            sc.seed = v;
        }
        if let Some(v) = self.noiseless {
            sc.noiseless = v;
        }
        if let Some(v) = self.warm_start {
            sc.warm_start = v;
        }
        if let Some(o) = &self.solver {
            sc.solver = o.apply(&sc.solver);
        }
        sc.validate().map_err(|e| CliError::input("<scenario>", e))?;
        Ok(sc)
    }
}
