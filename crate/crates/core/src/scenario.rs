//! Scenario files: one JSON document describing a network, a mobility model,
//! the evaluation grid, an optional simulation block and where to write output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::default_grid;
use crate::error::{Error, Result};
use crate::model::{linear_grid, log_grid, validate_grid, MobilityParams, NetworkModel, TierParams};
use crate::sim::SimConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub alpha: f64,
    pub tiers: Vec<TierParams>,
}

/// Sojourn times at which curves are evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum GridSpec {
    /// 60 log-spaced points from 1% to 10x the mean sojourn.
    Auto,
    Log { lo: f64, hi: f64, n: usize },
    Linear { lo: f64, hi: f64, n: usize },
    Values(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto
    }
}

impl GridSpec {
    /// Parses the command-line form `a:b:n` (linear spacing).
    pub fn parse_cli(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Scenario(format!("grid must look like a:b:n, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo = parts[0].trim().parse().map_err(|_| bad())?;
        let hi = parts[1].trim().parse().map_err(|_| bad())?;
        let n = parts[2].trim().parse().map_err(|_| bad())?;
        Ok(GridSpec::Linear { lo, hi, n })
    }

    pub fn resolve(&self, net: &NetworkModel, mob: &MobilityParams) -> Result<Vec<f64>> {
        let grid = match self {
            GridSpec::Auto => default_grid(net, mob)?,
            GridSpec::Log { lo, hi, n } => log_grid(*lo, *hi, *n)?,
            GridSpec::Linear { lo, hi, n } => linear_grid(*lo, *hi, *n)?,
            GridSpec::Values(v) => v.clone(),
        };
        validate_grid(&grid)?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default)]
    pub grid: GridSpec,
}

/// Missing fields fall back to [`SimConfig::defaults_for`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub replications: Option<usize>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub guard_epsilon: Option<f64>,
    #[serde(default)]
    pub crossing_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub network: NetworkSection,
    pub mobility: MobilityParams,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub simulation: Option<SimulationSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let net = self.network()?;
        self.mobility.validate()?;
        self.grid(&net)?;
        if self.simulation.is_some() {
            self.sim_config(&net, None)?;
        }
        Ok(())
    }

    pub fn network(&self) -> Result<NetworkModel> {
        NetworkModel::new(self.network.tiers.clone(), self.network.alpha)
    }

    pub fn grid(&self, net: &NetworkModel) -> Result<Vec<f64>> {
        self.analysis.grid.resolve(net, &self.mobility)
    }

    /// Simulation settings, with `seed` overriding the scenario's seed.
    pub fn sim_config(&self, net: &NetworkModel, seed: Option<u64>) -> Result<SimConfig> {
        let section = self.simulation.clone().unwrap_or_default();
        let seed = seed.or(section.seed).unwrap_or(1);
        let mut cfg = SimConfig::defaults_for(net, &self.mobility, seed)?;
        if let Some(r) = section.replications {
            cfg.replications = r;
        }
        if let Some(h) = section.horizon {
            cfg.horizon = h;
        }
        if let Some(e) = section.guard_epsilon {
            cfg.guard_epsilon = e;
        }
        if let Some(t) = section.crossing_tol {
            cfg.crossing_tol = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
