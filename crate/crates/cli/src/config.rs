//! Experiment configuration, stored as TOML.
//!
//! ```toml
//! name = "fig2a"
//! environment = "ackley_exp_rastrigin"
//! mode = "full"
//! horizon = 500
//! algorithms = ["doop", "soo", "sequool", "szooming"]
//! seeds = [0, 1, 2]
//! output = "runs/fig2a"
//!
//! [zooming]
//! grid_per_axis = 55
//! ```

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use perfopt::baselines::{BlackBox, FeedbackMode, StoSooParams};
use perfopt::environment::EnvKind;
use perfopt::partition::PartitionConfig;

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Doop,
    Soop,
    Soo,
    #[serde(rename = "stosoo")]
    StoSoo,
    #[serde(rename = "sequool")]
    SequOol,
    #[serde(rename = "stroquool")]
    StroquOol,
    #[serde(rename = "szooming")]
    SZooming,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Doop,
        Algorithm::Soop,
        Algorithm::Soo,
        Algorithm::StoSoo,
        Algorithm::SequOol,
        Algorithm::StroquOol,
        Algorithm::SZooming,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Doop => "doop",
            Algorithm::Soop => "soop",
            Algorithm::Soo => "soo",
            Algorithm::StoSoo => "stosoo",
            Algorithm::SequOol => "sequool",
            Algorithm::StroquOol => "stroquool",
            Algorithm::SZooming => "szooming",
        }
    }

    /// Feedback modes the algorithm runs under.
    pub fn supports(self, mode: FeedbackMode) -> bool {
        match self {
            Algorithm::Doop | Algorithm::Soo | Algorithm::SequOol => mode == FeedbackMode::Full,
            Algorithm::Soop | Algorithm::StoSoo | Algorithm::StroquOol => mode == FeedbackMode::Sampled,
            Algorithm::SZooming => true,
        }
    }

    /// DOOP and SOOP set the deployment budget the others are held to.
    pub fn is_primary(self) -> bool {
        matches!(self, Algorithm::Doop | Algorithm::Soop)
    }

    pub fn black_box(self) -> Option<BlackBox> {
        match self {
            Algorithm::Soo => Some(BlackBox::Soo),
            Algorithm::StoSoo => Some(BlackBox::StoSoo),
            Algorithm::SequOol => Some(BlackBox::SequOol),
            Algorithm::StroquOol => Some(BlackBox::StroquOol),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown algorithm `{s}`")))
    }
}

/// Keyword for a constant taken from the zooming grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKeyword {
    Grid,
}

/// `lz = 1.0` or `lz = "grid"`, the latter meaning the largest difference
/// quotient of the noise mean over grid pairs (the same value as the
/// default `epsilon`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LzSetting {
    Value(f64),
    Keyword(GridKeyword),
}

impl LzSetting {
    pub const GRID: LzSetting = LzSetting::Keyword(GridKeyword::Grid);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZoomingSettings {
    /// Arms per axis of the uniform grid over the decision box.
    pub grid_per_axis: usize,
    /// Lipschitz constant of the loss in `z`.
    pub lz: LzSetting,
    /// Sensitivity of the distribution map. Unset means the largest
    /// difference quotient of the noise mean over grid pairs.
    pub epsilon: Option<f64>,
    pub alpha: f64,
}

impl Default for ZoomingSettings {
    fn default() -> Self {
        Self { grid_per_axis: 55, lz: LzSetting::Value(1.0), epsilon: None, alpha: 1.0 }
    }
}

fn default_m0() -> usize {
    10
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub environment: EnvKind,
    pub mode: FeedbackMode,
    /// Horizon `T`.
    pub horizon: usize,
    #[serde(default = "default_m0")]
    pub m0: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub partition: PartitionConfig,
    #[serde(default)]
    pub zooming: ZoomingSettings,
    #[serde(default)]
    pub stosoo: StoSooParams,
}

impl ExperimentConfig {
    pub fn new(
        name: &str,
        environment: EnvKind,
        mode: FeedbackMode,
        horizon: usize,
        algorithms: Vec<Algorithm>,
    ) -> Self {
        Self {
            name: name.to_string(),
            environment,
            mode,
            horizon,
            m0: default_m0(),
            seeds: default_seeds(),
            algorithms,
            output: default_output(),
            partition: PartitionConfig::default(),
            zooming: ZoomingSettings::default(),
            stosoo: StoSooParams::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Missing(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    /// The algorithm whose deployment count caps the others, if any.
    pub fn primary(&self) -> Option<Algorithm> {
        self.algorithms.iter().copied().find(|a| a.is_primary())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("name `{}` must be non-empty and contain no path separators", self.name));
        }
        if self.horizon < 2 {
            return bad("horizon must be at least 2".into());
        }
        if self.m0 == 0 {
            return bad("m0 must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return bad(format!("algorithm `{a}` is listed twice"));
            }
            if !a.supports(self.mode) {
                return bad(format!("algorithm `{a}` does not run with {:?} feedback", self.mode));
            }
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return bad("seeds must be distinct".into());
        }
        if self.partition.candidates == 0 {
            return bad("partition.candidates must be at least 1".into());
        }
        let z = &self.zooming;
        if z.grid_per_axis < 2 {
            return bad("zooming.grid_per_axis must be at least 2".into());
        }
        if matches!(z.lz, LzSetting::Value(l) if !(l >= 0.0 && l.is_finite()))
            || !(z.alpha > 0.0 && z.alpha.is_finite())
        {
            return bad("zooming.lz must be >= 0 and zooming.alpha > 0".into());
        }
        if z.epsilon.is_some_and(|e| !(e >= 0.0 && e.is_finite())) {
            return bad("zooming.epsilon must be >= 0".into());
        }
        if self.stosoo.k == Some(0) || self.stosoo.delta.is_some_and(|d| !(d > 0.0 && d < 1.0)) {
            return bad("stosoo.k must be >= 1 and stosoo.delta in (0,1)".into());
        }
        Ok(())
    }
}
