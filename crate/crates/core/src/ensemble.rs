//! Subsample-ensemble robustness check.
//!
//! The series is cut into `n` time-contiguous windows of length `q`; a causal
//! graph is built on each window as a standalone dataset; a link is robust
//! when it is significant in at least `ceil(threshold · n)` windows. Links
//! that arise from small-sample estimation noise appear in few windows and
//! drop out, while real couplings recur.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::binning::BinningSpec;
use crate::error::{Error, Result};
use crate::graph::{
    build_graph, build_graph_with_spec, candidate_keys, CausalLink, GraphConfig, LaggedCausalGraph, LinkKey, Method,
};
use crate::par;
use crate::rng::{self, tag};
use crate::timeseries::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsampleMode {
    /// Start drawn uniformly from `[0, l - q]` per window; windows may overlap.
    RandomContinuous,
    /// Evenly spaced deterministic starts from `0` to `l - q` (first, middle,
    /// last for three windows).
    FixedOverlap,
    /// Back-to-back windows starting at `0, q, 2q, ...`.
    Nonoverlapping,
}

impl std::str::FromStr for SubsampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-continuous" => Ok(Self::RandomContinuous),
            "fixed-overlap" => Ok(Self::FixedOverlap),
            "nonoverlapping" => Ok(Self::Nonoverlapping),
            other => Err(Error::InvalidConfig(format!("unknown subsample mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub n_subsamples: usize,
    pub subsample_length: usize,
    pub mode: SubsampleMode,
    pub threshold: f64,
    pub rng_seed: u64,
    /// Reuse the full-sample binning for every window instead of applying
    /// Scott's rule to each window.
    pub reuse_parent_bins: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_subsamples: 100,
            subsample_length: 200,
            mode: SubsampleMode::RandomContinuous,
            threshold: 0.9,
            rng_seed: 0,
            reuse_parent_bins: false,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subsamples == 0 || self.subsample_length == 0 {
            return Err(Error::InvalidConfig("subsample count and length must be positive".into()));
        }
        check_threshold(self.threshold)
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("threshold must lie in (0, 1], got {threshold}")))
    }
}

/// Smallest appearance count that meets `threshold` out of `n`.
pub fn required_count(threshold: f64, n: usize) -> usize {
    // The epsilon absorbs representation error, e.g. 0.9 * 100.
    ((threshold * n as f64) - 1e-9).ceil().max(0.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub len: usize,
}

/// Window placement for a series of length `l`.
pub fn subsample_windows(l: usize, cfg: &EnsembleConfig) -> Result<Vec<Window>> {
    cfg.validate()?;
    let (n, q) = (cfg.n_subsamples, cfg.subsample_length);
    if q >= l {
        return Err(Error::WindowTooLong { q, len: l });
    }
    let starts: Vec<usize> = match cfg.mode {
        SubsampleMode::RandomContinuous => (0..n)
            .map(|j| rng::stream(cfg.rng_seed, &[tag::WINDOW, j as u64]).random_range(0..=l - q))
            .collect(),
        SubsampleMode::FixedOverlap => {
            if n == 1 {
                vec![0]
            } else {
                let span = (l - q) as f64;
                (0..n)
                    .map(|j| (span * j as f64 / (n - 1) as f64).round() as usize)
                    .collect()
            }
        }
        SubsampleMode::Nonoverlapping => {
            if n * q > l {
                return Err(Error::TooManyWindows { n, q, len: l });
            }
            (0..n).map(|j| j * q).collect()
        }
    };
    Ok(starts.into_iter().map(|start| Window { start, len: q }).collect())
}

/// The windows of [`subsample_windows`] cut out of `d`.
pub fn draw_subsamples(d: &Dataset, cfg: &EnsembleConfig) -> Result<Vec<Dataset>> {
    Ok(subsample_windows(d.len(), cfg)?
        .into_iter()
        .map(|w| d.window(w.start, w.len))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkFrequency {
    pub source: String,
    pub target: String,
    pub lag: usize,
    pub count: usize,
    pub fraction: f64,
    /// Mean strength over the windows where the link was significant.
    pub mean_strength: f64,
}

/// Per-candidate appearance counts over `n` subsample graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkFrequencyTable {
    pub method: Method,
    pub max_lag: usize,
    pub variables: Vec<String>,
    pub n_subsamples: usize,
    /// Every candidate link in sorted key order, including zero counts.
    pub entries: Vec<LinkFrequency>,
}

impl LinkFrequencyTable {
    pub fn get(&self, source: &str, target: &str, lag: usize) -> Option<&LinkFrequency> {
        self.entries
            .iter()
            .find(|e| e.source == source && e.target == target && e.lag == lag)
    }

    pub fn fraction(&self, source: &str, target: &str, lag: usize) -> f64 {
        self.get(source, target, lag).map_or(0.0, |e| e.fraction)
    }

    pub fn max_fraction(&self) -> f64 {
        self.entries.iter().map(|e| e.fraction).fold(0.0, f64::max)
    }

    /// `source,target,lag,count,fraction` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("source,target,lag,count,fraction\n");
        for e in &self.entries {
            let _ = writeln!(s, "{},{},{},{},{}", e.source, e.target, e.lag, e.count, e.fraction);
        }
        s
    }
}

/// Counts, for every candidate link, the subgraphs in which it is significant.
pub fn link_frequencies(subgraphs: &[LaggedCausalGraph]) -> Result<LinkFrequencyTable> {
    let first = subgraphs
        .first()
        .ok_or_else(|| Error::InvalidConfig("no subsample graphs".into()))?;
    if subgraphs
        .iter()
        .any(|g| g.variables() != first.variables() || g.max_lag() != first.max_lag())
    {
        return Err(Error::VariableMismatch);
    }
    let mut tally: BTreeMap<LinkKey, (usize, f64)> = candidate_keys(first.variables(), first.max_lag())
        .into_iter()
        .map(|k| (k, (0, 0.0)))
        .collect();
    for g in subgraphs {
        for l in g.significant_links() {
            let e = tally.get_mut(&l.key()).expect("graph links are candidates");
            e.0 += 1;
            e.1 += l.strength;
        }
    }
    let n = subgraphs.len();
    let entries = tally
        .into_iter()
        .map(|(k, (count, sum))| LinkFrequency {
            source: k.source,
            target: k.target,
            lag: k.lag,
            count,
            fraction: count as f64 / n as f64,
            mean_strength: if count > 0 { sum / count as f64 } else { 0.0 },
        })
        .collect();
    Ok(LinkFrequencyTable {
        method: first.method(),
        max_lag: first.max_lag(),
        variables: first.variables().to_vec(),
        n_subsamples: n,
        entries,
    })
}

/// Links that clear the consistency threshold, with the table behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustGraph {
    pub graph: LaggedCausalGraph,
    pub frequencies: LinkFrequencyTable,
    pub threshold: f64,
    pub required_count: usize,
}

/// Keeps every link with `count >= ceil(threshold · n)`.
pub fn robust_graph(freq: &LinkFrequencyTable, threshold: f64) -> Result<RobustGraph> {
    check_threshold(threshold)?;
    let need = required_count(threshold, freq.n_subsamples);
    let links = freq
        .entries
        .iter()
        .filter(|e| e.count >= need)
        .map(|e| CausalLink {
            source: e.source.clone(),
            target: e.target.clone(),
            lag: e.lag,
            strength: e.mean_strength,
            significant: true,
        })
        .collect();
    Ok(RobustGraph {
        graph: LaggedCausalGraph::new(freq.method, freq.max_lag, freq.variables.clone(), links)?,
        frequencies: freq.clone(),
        threshold,
        required_count: need,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOutcome {
    /// Graph of the whole sample.
    pub full: LaggedCausalGraph,
    pub windows: Vec<Window>,
    pub frequencies: LinkFrequencyTable,
    pub robust: RobustGraph,
}

/// Full-sample graph, per-window graphs, their link frequencies, and the
/// robust graph. Window `j` uses surrogate seed `(seed, j)`, so adding
/// windows never changes the results of earlier ones.
pub fn run_ensemble(d: &Dataset, graph_cfg: &GraphConfig, ens_cfg: &EnsembleConfig) -> Result<EnsembleOutcome> {
    let windows = subsample_windows(d.len(), ens_cfg)?;
    let full = build_graph(d, graph_cfg)?;
    let parent_spec = match (graph_cfg.method, ens_cfg.reuse_parent_bins) {
        (Method::Te, true) => Some(graph_cfg.bins.spec_for(d)?),
        _ => None,
    };
    let jobs: Vec<(usize, Window)> = windows.iter().copied().enumerate().collect();
    let subgraphs = par::map(jobs, |(j, w)| {
        subsample_graph(d, w, j, graph_cfg, parent_spec.as_ref())
    })?;
    let frequencies = link_frequencies(&subgraphs)?;
    let robust = robust_graph(&frequencies, ens_cfg.threshold)?;
    Ok(EnsembleOutcome {
        full,
        windows,
        frequencies,
        robust,
    })
}

fn subsample_graph(
    d: &Dataset,
    w: Window,
    j: usize,
    graph_cfg: &GraphConfig,
    parent_spec: Option<&BinningSpec>,
) -> Result<LaggedCausalGraph> {
    let sub = d.window(w.start, w.len);
    let mut cfg = *graph_cfg;
    cfg.surrogate.rng_seed = rng::derive_seed(graph_cfg.surrogate.rng_seed, &[tag::SUBSAMPLE, j as u64]);
    match parent_spec {
        Some(spec) => build_graph_with_spec(&sub, &cfg, spec),
        None => build_graph(&sub, &cfg),
    }
}
