//! Optional TOML configuration document. Keys are the long flag names
//! (`t-maneuver = 5.0`, `measure = "antithesis"`, `h = [0.5, 1, 2]`);
//! unknown keys are rejected and flags given on the command line win.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    // scenario
    pub kind: Option<String>,
    pub t_maneuver: Option<f64>,
    pub initiator_speed: Option<f64>,
    pub responder_gap: Option<f64>,
    pub lane_width: Option<f64>,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
    pub noise_sigma: Option<f64>,
    // surprise and sweep
    pub log: Option<PathBuf>,
    pub measure: Option<String>,
    pub initiator: Option<String>,
    pub responder: Option<String>,
    pub axis: Option<String>,
    pub h: Option<OneOrMany>,
    pub z: Option<OneOrMany>,
    pub bin_size: Option<f64>,
    pub samples: Option<usize>,
    pub threshold_factor: Option<f64>,
    pub baseline_fraction: Option<f64>,
    pub predictions: Option<PathBuf>,
    pub hypotheses: Option<Vec<String>>,
    pub base_sigma: Option<f64>,
    pub growth_rate: Option<f64>,
    pub weight_temperature: Option<f64>,
    pub horizon_step: Option<f64>,
    pub horizon_count: Option<usize>,
    // shared
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}
