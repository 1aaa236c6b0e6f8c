//! Shuffled-surrogate significance testing.
//!
//! The source series is randomly permuted `n_surrogates` times, destroying its
//! temporal relation to the target while keeping its distribution. The
//! statistic is recomputed on each surrogate and the observed value is
//! standardized against the surrogate mean and sample standard deviation:
//! `t = (observed - μ) / s`, significant when `t` exceeds the one-sided
//! Student-t critical value with `n_surrogates - 1` degrees of freedom.
//!
//! A transfer-entropy link is only tested when the lag-aligned mutual
//! information `MI(x[t-τ]; y[t])` is itself significant.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::binning::BinningSpec;
use crate::error::{Error, Result};
use crate::estimators::{Lag, LaggedFrame};
use crate::rng::{self, tag};
use crate::timeseries::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub n_surrogates: usize,
    pub confidence: f64,
    pub rng_seed: u64,
    /// When off, a link only needs significant lag-aligned MI.
    pub te_surrogate_test: bool,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            n_surrogates: 100,
            confidence: 0.95,
            rng_seed: 0,
            te_surrogate_test: true,
        }
    }
}

impl SurrogateConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_surrogates < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_surrogates must be at least 2, got {}",
                self.n_surrogates
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub observed: f64,
    pub surrogate_mean: f64,
    pub surrogate_std: f64,
    pub statistic: f64,
    pub significant: bool,
}

/// Outcome of the MI-gated transfer-entropy test for one candidate link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkTest {
    pub link: bool,
    /// Observed TE in bits; 0 when the MI gate fails.
    pub te: f64,
    pub mi: SignificanceResult,
    pub te_test: Option<SignificanceResult>,
}

/// A validated config together with its critical value, reusable across many
/// candidate links.
#[derive(Debug, Clone, Copy)]
pub struct SurrogateTest {
    cfg: SurrogateConfig,
    critical: f64,
}

impl SurrogateTest {
    pub fn new(cfg: SurrogateConfig) -> Result<Self> {
        cfg.validate()?;
        let df = (cfg.n_surrogates - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(Self {
            cfg,
            critical: t.inverse_cdf(cfg.confidence),
        })
    }

    pub fn config(&self) -> &SurrogateConfig {
        &self.cfg
    }

    /// One-sided critical value of the standardized statistic.
    pub fn critical_value(&self) -> f64 {
        self.critical
    }

    /// Standardizes `observed` against `samples` and applies the decision rule.
    pub fn decide(&self, observed: f64, samples: &[f64]) -> SignificanceResult {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
        let std = var.sqrt();
        let tol = 1e-12 * mean.abs().max(1.0);
        let (statistic, significant) = if std <= tol {
            // Degenerate surrogate spread: only a strict excess counts.
            if observed > mean + tol {
                (f64::INFINITY, true)
            } else if observed < mean - tol {
                (f64::NEG_INFINITY, false)
            } else {
                (0.0, false)
            }
        } else {
            let t = (observed - mean) / std;
            (t, t > self.critical)
        };
        SignificanceResult {
            observed,
            surrogate_mean: mean,
            surrogate_std: std,
            statistic,
            significant,
        }
    }

    /// MI-gated TE test on a prepared frame. `key` identifies the candidate
    /// so that its surrogate streams are independent of every other candidate.
    pub(crate) fn link_test(&self, frame: &LaggedFrame, key: &[u64]) -> LinkTest {
        let n = self.cfg.n_surrogates;
        let mut counter = frame.counter();
        let mut buf = frame.source.clone();
        let mut path: Vec<u64> = key.to_vec();
        path.extend([0, 0]);
        let last = path.len() - 1;

        let h_now = counter.entropy_1(&frame.now);
        let observed_mi = frame.source_now_mi(&mut counter, &frame.source, h_now);
        path[last - 1] = tag::MI_SURROGATE;
        let mut samples = Vec::with_capacity(n);
        for r in 0..n {
            path[last] = r as u64;
            buf.copy_from_slice(&frame.source);
            buf.shuffle(&mut rng::stream(self.cfg.rng_seed, &path));
            samples.push(frame.source_now_mi(&mut counter, &buf, h_now));
        }
        let mi = self.decide(observed_mi, &samples);
        if !mi.significant {
            return LinkTest {
                link: false,
                te: 0.0,
                mi,
                te_test: None,
            };
        }

        let fixed = frame.target_entropies(&mut counter);
        let te = frame.transfer_entropy(&mut counter, &frame.source, fixed);
        if !self.cfg.te_surrogate_test {
            return LinkTest {
                link: true,
                te,
                mi,
                te_test: None,
            };
        }
        path[last - 1] = tag::TE_SURROGATE;
        samples.clear();
        for r in 0..n {
            path[last] = r as u64;
            buf.copy_from_slice(&frame.source);
            buf.shuffle(&mut rng::stream(self.cfg.rng_seed, &path));
            samples.push(frame.transfer_entropy(&mut counter, &buf, fixed));
        }
        let te_test = self.decide(te, &samples);
        LinkTest {
            link: te_test.significant,
            te,
            mi,
            te_test: Some(te_test),
        }
    }
}

/// A uniformly random permutation of the series values.
pub fn shuffle_surrogate<R: Rng + ?Sized>(s: &TimeSeries, rng: &mut R) -> TimeSeries {
    let mut values = s.values.clone();
    values.shuffle(rng);
    TimeSeries::new(s.name.clone(), values)
}

/// Surrogate test of `MI(x; y)`, shuffling `x`.
pub fn mi_significance(
    x: &TimeSeries,
    y: &TimeSeries,
    spec: &BinningSpec,
    cfg: &SurrogateConfig,
) -> Result<SignificanceResult> {
    let test = SurrogateTest::new(*cfg)?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            name: y.name.clone(),
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    let xb = spec.discretize(x)?;
    let yb = spec.discretize(y)?;
    let m = spec.bin_count();
    let mut counter = crate::estimators::EntropyCounter::new(m, 2, xb.len());
    let h_y = counter.entropy_1(&yb);
    let mi_of = |c: &mut crate::estimators::EntropyCounter, src: &[u16]| {
        (c.entropy_1(src) + h_y - c.entropy_2(src, &yb, m)).max(0.0)
    };
    let observed = mi_of(&mut counter, &xb);
    let mut buf = xb.clone();
    let samples: Vec<f64> = (0..cfg.n_surrogates)
        .map(|r| {
            buf.copy_from_slice(&xb);
            buf.shuffle(&mut rng::stream(cfg.rng_seed, &[tag::MI_SURROGATE, r as u64]));
            mi_of(&mut counter, &buf)
        })
        .collect();
    Ok(test.decide(observed, &samples))
}

/// MI-gated, surrogate-tested transfer entropy from `x` to `y` at `lag`.
pub fn te_link_test(
    x: &TimeSeries,
    y: &TimeSeries,
    lag: Lag,
    spec: &BinningSpec,
    cfg: &SurrogateConfig,
) -> Result<LinkTest> {
    let test = SurrogateTest::new(*cfg)?;
    let frame = LaggedFrame::new(x, y, lag, spec)?;
    Ok(test.link_test(&frame, &[]))
}
