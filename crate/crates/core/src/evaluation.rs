//! Error-rate estimation, the binomial ensemble-error model, scoring against
//! ground truth, and bin-count sensitivity scans.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Lag;
use crate::graph::{build_graph, diff_graphs, Bins, GraphConfig, LaggedCausalGraph, LinkKey};
use crate::par;
use crate::rng::{self, tag};
use crate::significance::{te_link_test, SurrogateConfig};
use crate::synthetic::{generate, GroundTruth, SystemKind, SystemSpec};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Detected links explained by chains or common drivers; counted here
    /// instead of in `fp` when indirect links are excluded.
    pub indirect: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_ + self.indirect
    }

    /// `fn / (fn + tp)`, 0 when there are no true links.
    pub fn fnr(&self) -> f64 {
        ratio(self.fn_, self.fn_ + self.tp)
    }

    /// `fp / (fp + tn)`, 0 when there are no absent links.
    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Classifies every candidate `(source, target, lag)` of `inferred` against
/// the true links. True links beyond the graph's lag range are ignored.
pub fn score_against_truth(
    inferred: &LaggedCausalGraph,
    truth: &GroundTruth,
    exclude_indirect: bool,
) -> Result<ConfusionCounts> {
    let vars: BTreeSet<&str> = inferred.variables().iter().map(String::as_str).collect();
    let in_vars = |k: &LinkKey| vars.contains(k.source.as_str()) && vars.contains(k.target.as_str());
    let true_keys = truth.true_keys();
    if !true_keys.iter().all(in_vars) {
        return Err(Error::VariableMismatch);
    }
    let indirect = if exclude_indirect {
        truth.indirect_keys()
    } else {
        BTreeSet::new()
    };
    let detected = inferred.link_keys();
    let mut c = ConfusionCounts::default();
    for key in inferred.candidates() {
        let hit = detected.contains(&key);
        match (true_keys.contains(&key), hit) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) if indirect.contains(&key) => c.indirect += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Probability that at least `k_min` of `n` independent subsamples err when
/// each errs with probability `e_s`.
pub fn ensemble_error_binomial(e_s: f64, n: usize, k_min: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&e_s) {
        return Err(Error::InvalidConfig(format!("error rate must lie in [0, 1], got {e_s}")));
    }
    if k_min == 0 || k_min > n {
        return Err(Error::InvalidConfig(format!("k_min must lie in 1..={n}, got {k_min}")));
    }
    if e_s == 0.0 {
        return Ok(0.0);
    }
    if e_s == 1.0 {
        return Ok(1.0);
    }
    let (ln_e, ln_q) = (e_s.ln(), (1.0 - e_s).ln());
    let tail: f64 = (k_min..=n)
        .map(|i| {
            let ln_c = statrs::function::factorial::ln_binomial(n as u64, i as u64);
            (ln_c + i as f64 * ln_e + (n - i) as f64 * ln_q).exp()
        })
        .sum();
    Ok(tail.min(1.0))
}

/// Probability that a link present in each subsample with miss rate `e_s`
/// fails the `k_min`-of-`n` rule, i.e. at least `n - k_min + 1` misses.
pub fn ensemble_miss_binomial(e_s: f64, n: usize, k_min: usize) -> Result<f64> {
    if k_min == 0 || k_min > n {
        return Err(Error::InvalidConfig(format!("k_min must lie in 1..={n}, got {k_min}")));
    }
    ensemble_error_binomial(e_s, n, n - k_min + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRatePoint {
    pub data_length: usize,
    pub m_over_eps: f64,
    pub fnr: f64,
    pub fpr: f64,
    pub n_trials: usize,
}

impl ErrorRatePoint {
    /// Binomial standard error of a rate estimated from `n_trials`.
    pub fn standard_error(rate: f64, n_trials: usize) -> f64 {
        (rate * (1.0 - rate) / n_trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateCurve {
    pub points: Vec<ErrorRatePoint>,
}

impl ErrorRateCurve {
    pub fn point(&self, data_length: usize, m_over_eps: f64) -> Option<&ErrorRatePoint> {
        self.points
            .iter()
            .find(|p| p.data_length == data_length && p.m_over_eps == m_over_eps)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("data_length,m_over_eps,fnr,fpr,n_trials\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{},{},{},{}", p.data_length, p.m_over_eps, p.fnr, p.fpr, p.n_trials);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub kind: SystemKind,
    pub lengths: Vec<usize>,
    pub ratios: Vec<f64>,
    pub n_trials: usize,
    pub seed: u64,
    pub bins: Bins,
    pub surrogate: SurrogateConfig,
}

/// Smallest trial count accepted by [`monte_carlo_rates`].
pub const MIN_TRIALS: usize = 100;

impl MonteCarloConfig {
    pub fn new(kind: SystemKind, lengths: Vec<usize>, ratios: Vec<f64>, n_trials: usize, seed: u64) -> Self {
        Self {
            kind,
            lengths,
            ratios,
            n_trials,
            seed,
            bins: Bins::Auto,
            surrogate: SurrogateConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.kind.is_bivariate() {
            return Err(Error::InvalidConfig("error rates need a bivariate system".into()));
        }
        if self.n_trials < MIN_TRIALS {
            return Err(Error::InvalidConfig(format!(
                "at least {MIN_TRIALS} trials required, got {}",
                self.n_trials
            )));
        }
        if self.lengths.is_empty() || self.ratios.is_empty() {
            return Err(Error::InvalidConfig("lengths and ratios must be non-empty".into()));
        }
        if let Some(l) = self.lengths.iter().find(|&&l| l < 20) {
            return Err(Error::InvalidConfig(format!("data length {l} is too short")));
        }
        if let Some(r) = self.ratios.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::InvalidConfig(format!("invalid m/eps ratio {r}")));
        }
        self.surrogate.validate()
    }
}

/// Per (length, ratio): the fraction of trials missing the true `X → Y` lag-1
/// link (FNR) and the fraction detecting the absent lag-2 link (FPR).
///
/// Trial `t` at length `l` draws its data from `(seed, l, t)` for every ratio,
/// so ratio comparisons share noise realizations.
pub fn monte_carlo_rates(cfg: &MonteCarloConfig) -> Result<ErrorRateCurve> {
    cfg.validate()?;
    let mut points = Vec::new();
    for &length in &cfg.lengths {
        for &ratio in &cfg.ratios {
            let trials: Vec<usize> = (0..cfg.n_trials).collect();
            let outcomes = par::map(trials, |t| run_trial(cfg, length, ratio, t))?;
            let misses = outcomes.iter().filter(|o| !o.0).count();
            let alarms = outcomes.iter().filter(|o| o.1).count();
            points.push(ErrorRatePoint {
                data_length: length,
                m_over_eps: ratio,
                fnr: misses as f64 / cfg.n_trials as f64,
                fpr: alarms as f64 / cfg.n_trials as f64,
                n_trials: cfg.n_trials,
            });
        }
    }
    Ok(ErrorRateCurve { points })
}

/// `(true link detected, spurious lag-2 link detected)` for one trial.
fn run_trial(cfg: &MonteCarloConfig, length: usize, ratio: f64, t: usize) -> Result<(bool, bool)> {
    let trial_seed = rng::derive_seed(cfg.seed, &[tag::TRIAL, length as u64, t as u64]);
    let spec = SystemSpec::bivariate(cfg.kind, length, ratio, 1.0, trial_seed);
    let (d, _) = generate(&spec)?;
    let bins = cfg.bins.spec_for(&d)?;
    let (x, y) = (&d.series()[0], &d.series()[1]);
    let test = |lag: usize| -> Result<bool> {
        let surrogate = cfg
            .surrogate
            .with_seed(rng::derive_seed(trial_seed, &[tag::TE_SURROGATE, lag as u64]));
        Ok(te_link_test(x, y, Lag::new(lag)?, &bins, &surrogate)?.link)
    };
    Ok((test(1)?, test(2)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSensitivityEntry {
    pub bin_count: usize,
    pub graph: LaggedCausalGraph,
    /// Jaccard similarity of the significant link set against the center graph.
    pub jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSensitivityReport {
    pub center: usize,
    pub radius: usize,
    pub entries: Vec<BinSensitivityEntry>,
}

impl BinSensitivityReport {
    pub fn min_jaccard(&self) -> f64 {
        self.entries.iter().map(|e| e.jaccard).fold(1.0, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_count,n_links,jaccard\n");
        for e in &self.entries {
            let _ = writeln!(s, "{},{},{}", e.bin_count, e.graph.n_significant(), e.jaccard);
        }
        s
    }
}

/// TE graphs for every bin count in `center ± radius`, compared with the
/// center graph. `center = None` uses the Scott's-rule count of `d`.
pub fn bin_sensitivity_scan(
    d: &crate::timeseries::Dataset,
    center: Option<usize>,
    radius: usize,
    cfg: &GraphConfig,
) -> Result<BinSensitivityReport> {
    let center = match center {
        Some(c) => c,
        None => crate::binning::system_bin_count(d)?,
    };
    if center < radius + 2 {
        return Err(Error::InvalidConfig(format!(
            "center {center} minus radius {radius} leaves fewer than 2 bins"
        )));
    }
    let counts: Vec<usize> = (center - radius..=center + radius).collect();
    let graphs = counts
        .iter()
        .map(|&b| {
            let cfg = GraphConfig {
                method: crate::graph::Method::Te,
                bins: Bins::Fixed(b),
                ..*cfg
            };
            build_graph(d, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let center_graph = &graphs[radius];
    let entries = counts
        .iter()
        .zip(&graphs)
        .map(|(&bin_count, g)| {
            Ok(BinSensitivityEntry {
                bin_count,
                graph: g.clone(),
                jaccard: diff_graphs(center_graph, g)?.jaccard(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BinSensitivityReport { center, radius, entries })
}
