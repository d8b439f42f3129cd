//! Run configuration, read from TOML.
//!
//! ```toml
//! modes = ["internal", "external-correlated"]
//! preset = "paper"
//! learners = ["ridge", "lasso", "cart"]
//! replications = 20
//! master_seed = 7
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{LearnerId, LearnerSettings, LearnerSpec};
use crate::simgen::{Mode, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// The standard benchmark grids; grid tables are rejected.
    #[default]
    Paper,
    /// Grids come from the `[grid]` and `[interaction_grid]` tables.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub mu_delta: Vec<f64>,
    pub rho: Vec<f64>,
    pub p: Vec<usize>,
    pub n: Vec<usize>,
}

impl GridSpec {
    pub fn paper() -> Self {
        GridSpec {
            mu_delta: vec![0.0, 0.25, 0.5],
            rho: vec![0.0, 0.5, 0.95],
            p: vec![5, 15, 45],
            n: vec![250, 500, 750],
        }
    }
}

/// Interaction grid; `p` counts the selected interaction columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionGridSpec {
    pub mu_delta: Vec<f64>,
    pub p: Vec<usize>,
    pub n: Vec<usize>,
}

impl InteractionGridSpec {
    pub fn paper() -> Self {
        InteractionGridSpec {
            mu_delta: vec![0.0, 0.25, 0.5],
            p: vec![5, 15, 45],
            n: vec![500, 750, 1000],
        }
    }
}

fn default_replications() -> usize {
    20
}

fn default_cv_folds() -> usize {
    10
}

fn default_noise_sd() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub preset: Preset,
    pub learners: Vec<String>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Defaults to the number of available cores.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_cv_folds")]
    pub cv_folds: usize,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
    /// Also write population and matched-pair CSVs for replication 0.
    #[serde(default)]
    pub dump: bool,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub interaction_grid: Option<InteractionGridSpec>,
    #[serde(default)]
    pub learner_grids: LearnerSettings,
}

impl RunConfig {
    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn learner_ids(&self) -> Result<Vec<LearnerId>> {
        if self.learners.is_empty() {
            return Err(Error::Config("learners: list is empty".into()));
        }
        let mut ids = Vec::with_capacity(self.learners.len());
        for name in &self.learners {
            let id: LearnerId = name
                .parse()
                .map_err(|_| Error::Config(format!("learners: unknown learner '{name}'")))?;
            if ids.contains(&id) {
                return Err(Error::Config(format!("learners: '{name}' listed twice")));
            }
            ids.push(id);
        }
        Ok(ids)
    }

    pub fn learner_specs(&self) -> Result<Vec<LearnerSpec>> {
        self.learner_ids()?
            .into_iter()
            .map(|id| {
                let spec = LearnerSpec::new(id, &self.learner_grids, self.cv_folds);
                spec.validate().map_err(|e| Error::Config(format!("learner_grids: {e}")))?;
                Ok(spec)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::Config("modes: list is empty".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications: must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers: must be positive".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("cv_folds: must be at least 2".into()));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::Config("noise_sd: must be finite and nonnegative".into()));
        }
        self.learner_specs()?;
        if self.preset == Preset::Paper && (self.grid.is_some() || self.interaction_grid.is_some()) {
            return Err(Error::Config(
                "grid: grid tables require preset = \"custom\"".into(),
            ));
        }
        self.scenarios().map(|_| ())
    }

    fn grid_for(&self, mode: Mode) -> Result<GridSpec> {
        let missing = |table: &str| Error::Config(format!("{table}: required by preset \"custom\" for mode {mode}"));
        match (self.preset, mode) {
            (Preset::Paper, Mode::ExternalInteraction) => Ok(interaction_as_grid(InteractionGridSpec::paper())),
            (Preset::Paper, _) => Ok(GridSpec::paper()),
            (Preset::Custom, Mode::ExternalInteraction) => self
                .interaction_grid
                .clone()
                .map(interaction_as_grid)
                .ok_or_else(|| missing("interaction_grid")),
            (Preset::Custom, _) => self.grid.clone().ok_or_else(|| missing("grid")),
        }
    }

    /// Cartesian product per requested mode, ordered by mode then
    /// `(mu_delta, rho, p, n)` in listed order.
    pub fn scenarios(&self) -> Result<Vec<ScenarioConfig>> {
        let learners = self.learner_ids()?;
        let mut modes = self.modes.clone();
        modes.sort();
        modes.dedup();
        let mut out = Vec::new();
        for mode in modes {
            let g = self.grid_for(mode)?;
            let table = if mode == Mode::ExternalInteraction { "interaction_grid" } else { "grid" };
            if g.mu_delta.is_empty() || g.rho.is_empty() || g.p.is_empty() || g.n.is_empty() {
                return Err(Error::Config(format!("{table}: every axis needs at least one value")));
            }
            for &mu in &g.mu_delta {
                for &rho in &g.rho {
                    for &p in &g.p {
                        for &n in &g.n {
                            let mut s = ScenarioConfig::new(mode, n, p, rho, mu);
                            s.replications = self.replications;
                            s.master_seed = self.master_seed;
                            s.learners = learners.clone();
                            s.cv_folds = self.cv_folds;
                            s.noise_sd = self.noise_sd;
                            s.validate().map_err(|e| Error::Config(format!("{table}: {e}")))?;
                            out.push(s);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn interaction_as_grid(g: InteractionGridSpec) -> GridSpec {
    GridSpec {
        mu_delta: g.mu_delta,
        rho: vec![0.0],
        p: g.p,
        n: g.n,
    }
}
