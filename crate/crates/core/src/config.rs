// SPDX-License-Identifier: Apache-2.0

//! One experiment config file, TOML or JSON, with a section per module.
//!
//! ```toml
//! [concolic]
//! max_solver_calls = 200
//!
//! [oracle]
//! command = ["python3", "golden.py"]
//!
//! [repair]
//! max_functional_iterations = 3
//!
//! [client]
//! form = "command"
//! command = ["./llm.sh"]
//!
//! [metrics]
//! ks = [1, 5]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::concolic::ExploreBudget;
use crate::oracle::ModelSpec;
use crate::repair::{ClientSpec, LoopConfig, RedundancyMode};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub concolic: ExploreBudget,
    pub oracle: Option<ModelSpec>,
    pub diff: DiffSection,
    pub repair: RepairSection,
    pub client: Option<ClientSpec>,
    pub metrics: MetricsSection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffSection {
    pub jobs: usize,
}

impl Default for DiffSection {
    fn default() -> Self {
        DiffSection { jobs: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepairSection {
    pub max_syntax_iterations: usize,
    pub max_functional_iterations: usize,
    pub max_redundancy_iterations: usize,
    pub seed_cycles: usize,
    pub redundancy: RedundancyMode,
}

impl Default for RepairSection {
    fn default() -> Self {
        let d = LoopConfig::default();
        RepairSection {
            max_syntax_iterations: d.max_syntax_iterations,
            max_functional_iterations: d.max_functional_iterations,
            max_redundancy_iterations: d.max_redundancy_iterations,
            seed_cycles: d.seed_cycles,
            redundancy: d.redundancy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub ks: Vec<u64>,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection { ks: vec![1, 5] }
    }
}

impl Config {
    /// Reads `.json` as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Config, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Config::parse(&text, json).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str, json: bool) -> Result<Config, String> {
        let c: Config = if json {
            serde_json::from_str(text).map_err(|e| e.to_string())?
        } else {
            toml::from_str(text).map_err(|e| e.to_string())?
        };
        c.loop_config().validate()?;
        Ok(c)
    }

    pub fn loop_config(&self) -> LoopConfig {
        LoopConfig {
            max_syntax_iterations: self.repair.max_syntax_iterations,
            max_functional_iterations: self.repair.max_functional_iterations,
            max_redundancy_iterations: self.repair.max_redundancy_iterations,
            explore: self.concolic,
            oracle: self.oracle.clone(),
            seed_cycles: self.repair.seed_cycles,
            jobs: self.diff.jobs,
            redundancy: self.repair.redundancy,
        }
    }
}
