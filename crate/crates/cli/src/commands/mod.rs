pub mod analyze;
pub mod evolve;
pub mod qfi;
pub mod reproduce;
pub mod sweep;

use std::path::{Path, PathBuf};

use crate::emit::{Emitter, Format};
use crate::scenario::ScenarioFile;
use crate::CliError;

pub struct LoadedScenario {
    pub file: ScenarioFile,
    pub hash: String,
    /// Directory of the scenario file; referenced paths resolve against it.
    pub dir: PathBuf,
}

/// Everything a command needs, resolved once in `main`.
pub struct RunCtx {
    pub scenario: Option<LoadedScenario>,
    pub seed: u64,
    pub format: Format,
    pub out: PathBuf,
    pub dim_cap: usize,
}

impl RunCtx {
    pub fn scenario(&self) -> Result<&ScenarioFile, CliError> {
        self.scenario
            .as_ref()
            .map(|s| &s.file)
            .ok_or_else(|| CliError::Scenario("this command needs --scenario <path>".into()))
    }

    pub fn scenario_hash(&self) -> &str {
        self.scenario.as_ref().map(|s| s.hash.as_str()).unwrap_or("none")
    }

    pub fn scenario_dir(&self) -> &Path {
        self.scenario
            .as_ref()
            .map(|s| s.dir.as_path())
            .unwrap_or_else(|| Path::new("."))
    }

    pub fn emitter(&self) -> Result<Emitter, CliError> {
        let filter = self
            .scenario
            .as_ref()
            .map(|s| s.file.outputs.clone())
            .unwrap_or_default();
        Emitter::new(self.out.clone(), self.format, filter)
    }
}

/// Default qubit-count grid for `qfi` and `sweep`.
pub fn n_grid(scen: &ScenarioFile) -> Vec<usize> {
    scen.sweep.n.clone().unwrap_or_else(|| vec![1, 2, 4, 8])
}
