use serde::{Deserialize, Serialize};

use cslp_core::analysis::EmissionParams;
use cslp_core::instance::SynthSpec;
use cslp_core::scenario::{AdoptionEnvelope, GridIncrements};

/// Run configuration read from TOML. Command-line flags override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub threads: usize,
    pub synth: SynthSpec,
    pub scenarios: ScenarioSection,
    pub solve: SolveSection,
    pub sweep: SweepSection,
    pub detours: DetourSection,
    pub emissions: EmissionParams,
    pub solver: SolverSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            threads: 1,
            synth: SynthSpec::default(),
            scenarios: ScenarioSection::default(),
            solve: SolveSection::default(),
            sweep: SweepSection::default(),
            detours: DetourSection::default(),
            emissions: EmissionParams::default(),
            solver: SolverSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub count: usize,
    /// Synthetic envelope when absent.
    pub envelope: Option<AdoptionEnvelope>,
    pub grid: GridIncrements,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection { count: 10, envelope: None, grid: GridIncrements::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    pub method: String,
    pub gap: f64,
    pub time_limit: Option<f64>,
    pub node_limit: Option<usize>,
    pub warm_start: bool,
    pub valid_inequalities: bool,
    pub root_iterations: usize,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            method: "lshaped".into(),
            gap: 1e-4,
            time_limit: None,
            node_limit: None,
            warm_start: true,
            valid_inequalities: true,
            root_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Budget changes per period; "inf" drops the budget limit.
    pub deltas: Vec<String>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { deltas: ["-20", "-15", "-10", "-5", "0", "5", "10", "15", "20", "inf"].map(String::from).to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetourSection {
    pub bucket_width: f64,
}

impl Default for DetourSection {
    fn default() -> Self {
        DetourSection { bucket_width: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub backend: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { backend: "highs".into() }
    }
}

pub fn parse_delta(s: &str) -> Result<Option<f64>, String> {
    match s.trim() {
        "inf" | "+inf" | "unlimited" => Ok(None),
        t => t.parse::<f64>().map(Some).map_err(|_| format!("bad budget delta '{s}'")),
    }
}
