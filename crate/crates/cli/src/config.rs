//! Run configuration: a single JSON document, physical-variable data.

use std::path::{Path, PathBuf};

use csd1d_core::{make_grid, CouplingKind, DataSpec, Grid, InitialData, ModelParams, SolverConfig, State};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub model: ModelSection,
    pub data: InitialData,
    /// Defaults: `picard_slab`, `slab_T = 0.25`, `picard_tol = 1e-12`,
    /// `max_picard_iters = 50`, `auto_slab = true`.
    #[serde(default)]
    pub solver: SolverConfig,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub alpha: CouplingKind,
    pub m: f64,
    /// Lebesgue exponent used by the norms and estimate checks.
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(rename = "T_final")]
    pub t_final: f64,
    #[serde(default)]
    pub checks: Vec<Check>,
    /// Mixed into the seed of every `random_bumps` data entry.
    #[serde(default)]
    pub seed: u64,
}

/// Diagnostics that can be requested on a solved trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Charge,
    Intrinsic,
    CorollaryEnvelope,
    Concentration,
    Bilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

fn with_seed(data: &DataSpec, run_seed: u64) -> DataSpec {
    let mut s = data.clone();
    if let DataSpec::RandomBumps { seed, .. } = &mut s {
        *seed = seed.wrapping_add(run_seed);
    }
    s
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<(), CliError> {
        let grid = self.grid()?;
        self.params()?;
        self.solver.validate().map_err(|e| CliError::Config(format!("solver: {e}")))?;
        grid.steps_for(self.run.t_final)
            .map_err(|e| CliError::Config(format!("run.T_final: {e}")))?;
        if self.output.formats.is_empty() {
            return Err(CliError::Config("output.formats must not be empty".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        make_grid(self.grid.x_min, self.grid.x_max, self.grid.n_cells)
            .map_err(|e| CliError::Config(format!("grid: {e}")))
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        ModelParams::new(self.model.alpha, self.model.m, self.model.p)
            .map_err(|e| CliError::Config(format!("model: {e}")))
    }

    /// Same configuration on a grid with `n_cells` cells.
    pub fn with_cells(&self, n_cells: usize) -> Self {
        let mut c = self.clone();
        c.grid.n_cells = n_cells;
        c
    }

    /// Diagonal initial state on the configured grid.
    pub fn initial_state(&self) -> Result<State, CliError> {
        let grid = self.grid()?;
        let data = InitialData {
            psi1: with_seed(&self.data.psi1, self.run.seed),
            psi2: with_seed(&self.data.psi2, self.run.seed),
            a0: with_seed(&self.data.a0, self.run.seed),
            a1: with_seed(&self.data.a1, self.run.seed),
        };
        data.to_state(&grid, self.params()?)
            .map_err(|e| CliError::Config(format!("data: {e}")))
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "grid": {"x_min": -8, "x_max": 8, "n_cells": 256},
        "model": {"alpha": "gamma0", "m": 1.0, "p": 2.0},
        "data": {
            "psi1": {"kind": "gaussian", "center": 0.0, "width": 0.5, "amplitude": 0.1},
            "psi2": {"kind": "zero"},
            "a0": {"kind": "zero"},
            "a1": {"kind": "zero"}
        },
        "run": {"T_final": 1.0}
    }"#;

    #[test]
    fn defaults_are_filled_in() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.solver.picard_tol, 1e-12);
        assert_eq!(c.solver.max_picard_iters, 50);
        assert!(c.solver.auto_slab);
        assert!(c.run.checks.is_empty());
        assert_eq!(c.output.formats, vec![Format::Csv, Format::Json]);
    }

    #[test]
    fn unknown_keys_are_named() {
        let bad = MINIMAL.replace("\"m\": 1.0", "\"m\": 1.0, \"mass\": 2.0");
        let err = RunConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("mass"), "{err}");
        let bad = MINIMAL.replace("\"T_final\": 1.0", "\"T_final\": 1.0, \"checks\": [\"charge\", \"bogus\"]");
        assert!(RunConfig::from_json(&bad).unwrap_err().to_string().contains("bogus"));
    }

    #[test]
    fn missing_keys_are_named() {
        let bad = MINIMAL.replace("\"m\": 1.0, ", "");
        let err = RunConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("`m`"), "{err}");
    }

    #[test]
    fn semantic_errors_are_config_errors() {
        for bad in [
            MINIMAL.replace("256", "1"),
            MINIMAL.replace("\"p\": 2.0", "\"p\": 0.5"),
            MINIMAL.replace("\"T_final\": 1.0", "\"T_final\": 0.01"),
        ] {
            assert!(matches!(RunConfig::from_json(&bad), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert!(text.contains("slab_T"));
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn run_seed_shifts_random_bumps_only() {
        let data = DataSpec::RandomBumps {
            seed: 5,
            count: 2,
            lo: -1.0,
            hi: 1.0,
            min_width: 0.5,
            max_width: 1.0,
            amplitude: 1.0,
        };
        let DataSpec::RandomBumps { seed, .. } = with_seed(&data, 3) else {
            panic!()
        };
        assert_eq!(seed, 8);
        assert_eq!(with_seed(&DataSpec::Zero, 3), DataSpec::Zero);
    }
}
