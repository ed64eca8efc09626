//! TOML run configuration. Every section has defaults, unknown keys are
//! rejected by name, and the resolved struct is echoed verbatim into the
//! output directory of every run.

use crate::CliError;
use exhjb::operators::ProblemSpec;
use exhjb::solver::SolverConfig;
use exhjb::{Grid, Landscape, SdeConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub landscape: LandscapeSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sde: SdeConfig,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSection {
    pub name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub halfwidth: f64,
    pub points: usize,
    pub dim: usize,
}

impl Default for GridSection {
    fn default() -> GridSection {
        GridSection { halfwidth: 3.0, points: 301, dim: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    pub lambda: f64,
    pub rho: f64,
    pub a: f64,
}

impl Default for ProblemSection {
    fn default() -> ProblemSection {
        ProblemSection { lambda: 0.1, rho: 1.0, a: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// `exploratory` or `classical`, for the solve command.
    pub kind: String,
    /// Strictly decreasing list for the sweep command.
    pub lambdas: Vec<f64>,
    /// Measurement-ball radius for the sweep command.
    pub radius: f64,
    pub doubling_control: bool,
    /// Langevin baseline temperature for anneal and stationary.
    pub beta: f64,
    /// Histogram bins for stationary estimates.
    pub bins: usize,
    /// Ball radius for the point-mass check around the minimizer.
    pub delta: f64,
    /// Temperature grid for the Gibbs fit.
    pub beta_grid: Vec<f64>,
    /// Objective threshold for the anneal check.
    pub target_f: f64,
}

impl Default for ExperimentSection {
    fn default() -> ExperimentSection {
        ExperimentSection {
            kind: "exploratory".into(),
            lambdas: vec![0.4, 0.2, 0.1, 0.05, 0.025],
            radius: 1.5,
            doubling_control: true,
            beta: 0.3,
            bins: 120,
            delta: 0.25,
            beta_grid: (0..24).map(|i| 0.05 * 1.2f64.powi(i)).collect(),
            target_f: 0.01,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        if let Some(seed) = seed_override {
            cfg.sde.seed = seed;
        }
        Ok(cfg)
    }

    pub fn landscape(&self) -> Result<Landscape, CliError> {
        Ok(Landscape::builtin(&self.landscape.name)?.with_dim(self.grid.dim)?)
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.grid.dim, self.grid.halfwidth, self.grid.points)?)
    }

    pub fn spec(&self) -> Result<ProblemSpec, CliError> {
        Ok(ProblemSpec::new(self.problem.lambda, self.problem.rho, self.problem.a)?)
    }
}
