//! Run configurations: JSON files merged with command-line flags.

use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use robust_causal::evaluation::MonteCarloConfig;
use robust_causal::timeseries::read_csv;
use robust_causal::{generate, Bins, Dataset, EnsembleConfig, GraphConfig, GroundTruth, PreprocessSpec, SystemKind, SystemSpec};

/// Invalid or missing arguments; mapped to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

/// A synthetic system to generate instead of reading a CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemInput {
    pub kind: SystemKind,
    pub length: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub signal: f64,
    #[serde(default = "one")]
    pub noise: f64,
}

fn default_burn_in() -> usize {
    100
}

fn one() -> f64 {
    1.0
}

impl SystemInput {
    pub fn spec(&self, seed: u64) -> SystemSpec {
        SystemSpec {
            kind: self.kind,
            length: self.length,
            burn_in: self.burn_in,
            rng_seed: seed,
            signal: self.signal,
            noise: self.noise,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub system: Option<SystemInput>,
    pub preprocess: PreprocessSpec,
    pub graph: GraphConfig,
    pub ensemble: Option<EnsembleConfig>,
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Checks the invariants that flags alone cannot enforce and spreads the
    /// run seed into every stochastic component.
    pub fn finalize(mut self) -> anyhow::Result<Self> {
        match (&self.input, &self.system) {
            (Some(_), Some(_)) => return usage("give either --input or --system, not both"),
            (None, None) => return usage("one of --input or --system is required"),
            _ => {}
        }
        let Some(seed) = self.seed else {
            return usage("--seed is required");
        };
        self.graph.surrogate.rng_seed = seed;
        if let Some(e) = self.ensemble.as_mut() {
            e.rng_seed = seed;
        }
        Ok(self)
    }

    /// The analyzed dataset, after preprocessing, plus ground truth when synthetic.
    pub fn load(&self) -> anyhow::Result<(Dataset, Option<GroundTruth>)> {
        let seed = self.seed.unwrap_or_default();
        let (raw, truth) = match (&self.input, &self.system) {
            (Some(path), _) => {
                let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
                (read_csv(BufReader::new(file))?, None)
            }
            (None, Some(sys)) => {
                let (d, t) = generate(&sys.spec(seed))?;
                (d, Some(t))
            }
            (None, None) => return usage("one of --input or --system is required"),
        };
        Ok((self.preprocess.apply(&raw)?, truth))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityConfig {
    #[serde(flatten)]
    pub run: RunConfig,
    #[serde(default)]
    pub center: Bins,
    #[serde(default = "default_radius")]
    pub radius: usize,
}

fn default_radius() -> usize {
    2
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            run: RunConfig::default(),
            center: Bins::Auto,
            radius: default_radius(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateConfig {
    #[serde(flatten)]
    pub rates: MonteCarloConfig,
    /// Subsample count and agreement count of the binomial ensemble columns.
    #[serde(default = "default_ensemble_n")]
    pub ensemble_n: usize,
    #[serde(default = "default_ensemble_k")]
    pub ensemble_k: usize,
}

fn default_ensemble_n() -> usize {
    10
}

fn default_ensemble_k() -> usize {
    9
}

/// Everything needed to rerun a command with byte-identical outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest<C> {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: C,
}

impl<C> Manifest<C> {
    pub fn new(command: &str, config: C) -> Self {
        Self {
            tool: "robust-causal".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
        }
    }
}

/// Reads a config file; a manifest is accepted in place of a bare config.
pub fn read_config<C: DeserializeOwned>(path: &Path) -> anyhow::Result<C> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    if value.get("tool").is_some() {
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
    }
    serde_json::from_value(value).map_err(|e| UsageError(format!("{}: {e}", path.display())).into())
}
