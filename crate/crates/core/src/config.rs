//! Run configuration read from a flat TOML table:
//!
//! ```toml
//! J = 1.0
//! g0 = 0.3
//! gamma = 10.0
//! delta = 0.0
//! N = 150
//! tMax = 300.0
//! points = 601
//! dt = 1e-3
//! seed = 12345
//! trajectories = 2000
//! ```
//!
//! Every key is optional. Absent keys take the defaults below; an absent `N`
//! is chosen from the light-cone truncation rule for `tMax`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curve::TimeGrid;
use crate::error::{Error, Result};
use crate::integrate::StepOptions;
use crate::model::{recommended_truncation, ModelParams};

pub const DEFAULT_J: f64 = 1.0;
pub const DEFAULT_G0: f64 = 0.3;
pub const DEFAULT_GAMMA: f64 = 0.0;
pub const DEFAULT_DELTA: f64 = 0.0;
pub const DEFAULT_T_MAX: f64 = 50.0;
pub const DEFAULT_POINTS: usize = 501;
pub const DEFAULT_SEED: u64 = 12345;
pub const DEFAULT_TRAJECTORIES: usize = 2000;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    #[serde(rename = "tMax", skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<usize>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Keys set in `over` replace those in `self`.
    pub fn overridden_by(&self, over: &RunConfig) -> RunConfig {
        RunConfig {
            j: over.j.or(self.j),
            g0: over.g0.or(self.g0),
            gamma: over.gamma.or(self.gamma),
            delta: over.delta.or(self.delta),
            n_sites: over.n_sites.or(self.n_sites),
            t_max: over.t_max.or(self.t_max),
            points: over.points.or(self.points),
            dt: over.dt.or(self.dt),
            seed: over.seed.or(self.seed),
            trajectories: over.trajectories.or(self.trajectories),
        }
    }

    pub fn t_max(&self) -> f64 {
        self.t_max.unwrap_or(DEFAULT_T_MAX)
    }

    pub fn points(&self) -> usize {
        self.points.unwrap_or(DEFAULT_POINTS)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn trajectories(&self) -> usize {
        self.trajectories.unwrap_or(DEFAULT_TRAJECTORIES)
    }

    pub fn grid(&self) -> Result<TimeGrid<f64>> {
        TimeGrid::uniform(self.t_max(), self.points())
    }

    pub fn step_options(&self) -> StepOptions<f64> {
        StepOptions { dt: self.dt, ..StepOptions::default() }
    }

    /// Validated parameters with defaults filled in.
    pub fn model_params(&self) -> Result<ModelParams<f64>> {
        let base = ModelParams::new(
            self.j.unwrap_or(DEFAULT_J),
            self.g0.unwrap_or(DEFAULT_G0),
            self.gamma.unwrap_or(DEFAULT_GAMMA),
            1,
        )?
        .with_delta(self.delta.unwrap_or(DEFAULT_DELTA))?;
        let n = self.n_sites.unwrap_or_else(|| recommended_truncation(&base, self.t_max()));
        base.with_sites(n)
    }
}
