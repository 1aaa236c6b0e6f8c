//! Benchmark systems with known causal structure.
//!
//! * `A`: four independent standard-normal series (no links).
//! * `B`: linear lagged recursion
//!   `X(t) = 0.4 Z(t-1) + η`, `Y(t) = 0.6 X(t-3) + 0.09 W(t-2) + η`,
//!   `Z(t) = 0.7 Y(t-2) + η`, `W(t) = 0.5 X(t-1) + η`.
//! * `C`: as `B` with `X(t) = 0.4 Z(t-1)² + η`.
//! * bivariate: `Y(t) = m X(t-1) + ε η(t)` (linear) or `m X(t-1)² + ε η(t)`.
//!
//! Every η is an independent standard-normal stream per variable.

use std::collections::BTreeSet;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::LinkKey;
use crate::rng::{self, tag};
use crate::timeseries::{Dataset, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemKind {
    A,
    B,
    C,
    #[serde(rename = "bivariate-linear")]
    BivariateLinear,
    #[serde(rename = "bivariate-nonlinear")]
    BivariateNonlinear,
}

impl std::str::FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Self::A),
            "B" | "b" => Ok(Self::B),
            "C" | "c" => Ok(Self::C),
            "bivariate-linear" => Ok(Self::BivariateLinear),
            "bivariate-nonlinear" => Ok(Self::BivariateNonlinear),
            other => Err(Error::InvalidConfig(format!("unknown system `{other}`"))),
        }
    }
}

impl SystemKind {
    pub fn is_bivariate(self) -> bool {
        matches!(self, Self::BivariateLinear | Self::BivariateNonlinear)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    /// Generated length; B and C return `length - burn_in` values.
    pub length: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    pub rng_seed: u64,
    /// Signal coefficient `m` of the bivariate systems.
    #[serde(default = "one")]
    pub signal: f64,
    /// Noise coefficient `ε` of the bivariate systems.
    #[serde(default = "one")]
    pub noise: f64,
}

fn default_burn_in() -> usize {
    100
}

fn one() -> f64 {
    1.0
}

impl SystemSpec {
    pub fn new(kind: SystemKind, length: usize, rng_seed: u64) -> Self {
        Self {
            kind,
            length,
            burn_in: default_burn_in(),
            rng_seed,
            signal: 1.0,
            noise: 1.0,
        }
    }

    pub fn bivariate(kind: SystemKind, length: usize, signal: f64, noise: f64, rng_seed: u64) -> Self {
        Self {
            signal,
            noise,
            ..Self::new(kind, length, rng_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::InvalidConfig("length must be positive".into()));
        }
        if matches!(self.kind, SystemKind::B | SystemKind::C) && self.length <= self.burn_in {
            return Err(Error::InvalidConfig(format!(
                "length {} must exceed burn-in {}",
                self.length, self.burn_in
            )));
        }
        if self.kind.is_bivariate() {
            if !(self.noise > 0.0 && self.noise.is_finite()) {
                return Err(Error::InvalidConfig(format!("noise coefficient must be positive, got {}", self.noise)));
            }
            if !self.signal.is_finite() {
                return Err(Error::InvalidConfig("signal coefficient must be finite".into()));
            }
        }
        Ok(())
    }

    /// Number of values in the generated dataset.
    pub fn output_length(&self) -> usize {
        match self.kind {
            SystemKind::B | SystemKind::C => self.length - self.burn_in,
            _ => self.length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueLink {
    pub source: String,
    pub target: String,
    pub lag: usize,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub true_links: Vec<TrueLink>,
    /// Links explained by chains or common drivers of true links, up to the
    /// enumeration lag.
    pub indirect_links: Vec<LinkKey>,
}

impl GroundTruth {
    pub fn true_keys(&self) -> BTreeSet<LinkKey> {
        self.true_links
            .iter()
            .map(|l| LinkKey::new(l.source.clone(), l.target.clone(), l.lag))
            .collect()
    }

    pub fn indirect_keys(&self) -> BTreeSet<LinkKey> {
        self.indirect_links.iter().cloned().collect()
    }
}

/// Largest lag enumerated for indirect links; matches the default graph depth.
pub const INDIRECT_MAX_LAG: usize = 4;

fn true_link(source: &str, target: &str, lag: usize, coefficient: f64) -> TrueLink {
    TrueLink {
        source: source.into(),
        target: target.into(),
        lag,
        coefficient,
    }
}

/// `X(t)` of systems B and C from `Z(t-1)` and the noise term.
pub fn x_update(kind: SystemKind, z_prev: f64, eta: f64) -> f64 {
    match kind {
        SystemKind::C => 0.4 * z_prev * z_prev + eta,
        _ => 0.4 * z_prev + eta,
    }
}

/// Generates the dataset and its ground truth.
pub fn generate(spec: &SystemSpec) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let noise = |var: u64, n: usize| -> Vec<f64> {
        let mut rng = rng::stream(spec.rng_seed, &[tag::NOISE, var]);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    };
    let (series, true_links) = match spec.kind {
        SystemKind::A => {
            let series = ["X", "Y", "Z", "W"]
                .iter()
                .enumerate()
                .map(|(i, n)| TimeSeries::new(*n, noise(i as u64, spec.length)))
                .collect();
            (series, Vec::new())
        }
        SystemKind::B | SystemKind::C => {
            let (x, y, z, w) = recursion(spec)?;
            let b = spec.burn_in;
            let series = [("X", x), ("Y", y), ("Z", z), ("W", w)]
                .into_iter()
                .map(|(name, v)| TimeSeries::new(name, v[b..].to_vec()))
                .collect();
            let links = vec![
                true_link("Z", "X", 1, 0.4),
                true_link("X", "Y", 3, 0.6),
                true_link("W", "Y", 2, 0.09),
                true_link("Y", "Z", 2, 0.7),
                true_link("X", "W", 1, 0.5),
            ];
            (series, links)
        }
        SystemKind::BivariateLinear | SystemKind::BivariateNonlinear => {
            let n = spec.length;
            let x = noise(0, n + 1);
            let e = noise(1, n);
            let y = (0..n)
                .map(|t| {
                    let drive = x[t];
                    let signal = if spec.kind == SystemKind::BivariateLinear {
                        drive
                    } else {
                        drive * drive
                    };
                    spec.signal * signal + spec.noise * e[t]
                })
                .collect();
            let series = vec![TimeSeries::new("X", x[1..].to_vec()), TimeSeries::new("Y", y)];
            (series, vec![true_link("X", "Y", 1, spec.signal)])
        }
    };
    let indirect_links = indirect_links(&true_links, INDIRECT_MAX_LAG);
    Ok((
        Dataset::new(series)?,
        GroundTruth {
            true_links,
            indirect_links,
        },
    ))
}

/// Trajectories beyond this magnitude are treated as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Noise redraws allowed before giving up on a diverging system.
pub const MAX_ATTEMPTS: u64 = 1000;

type Trajectories = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

/// Runs the B/C recursion from zero initial conditions.
///
/// The quadratic feedback of system C escapes to infinity for a sizeable
/// share of noise realizations. A diverging draw is discarded and the noise
/// redrawn from the next attempt index, so the returned sample is a
/// realization conditioned on staying bounded. System B never diverges and
/// always uses attempt 0.
fn recursion(spec: &SystemSpec) -> Result<Trajectories> {
    let n = spec.length;
    for attempt in 0..MAX_ATTEMPTS {
        let noise = |var: u64| -> Vec<f64> {
            let mut rng = rng::stream(spec.rng_seed, &[tag::NOISE, var, attempt]);
            (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
        };
        let (ex, ey, ez, ew) = (noise(0), noise(1), noise(2), noise(3));
        let (mut x, mut y, mut z, mut w) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let at = |v: &[f64], t: usize, lag: usize| if t >= lag { v[t - lag] } else { 0.0 };
        let mut bounded = true;
        for t in 0..n {
            // Right-hand sides only reach back to t-1 or earlier.
            x[t] = x_update(spec.kind, at(&z, t, 1), ex[t]);
            y[t] = 0.6 * at(&x, t, 3) + 0.09 * at(&w, t, 2) + ey[t];
            z[t] = 0.7 * at(&y, t, 2) + ez[t];
            w[t] = 0.5 * at(&x, t, 1) + ew[t];
            if !(x[t].abs() < DIVERGENCE_BOUND) {
                bounded = false;
                break;
            }
        }
        if bounded {
            return Ok((x, y, z, w));
        }
    }
    Err(Error::InvalidConfig(format!(
        "system diverged in all {MAX_ATTEMPTS} noise draws"
    )))
}

/// Links induced by true links, excluding the true links themselves.
///
/// A driver `A` reaches `B` at total delay `d` along any chain of true links
/// (and reaches itself at 0). For any two nodes it reaches, `B` at `d_b` and
/// `C` at `d_c > d_b`, the pairwise view shows `B → C` at lag `d_c - d_b`.
/// This covers transitive chains (`A` itself as `B`) and common drivers.
pub fn indirect_links(true_links: &[TrueLink], max_lag: usize) -> Vec<LinkKey> {
    let mut nodes: BTreeSet<&str> = BTreeSet::new();
    for l in true_links {
        nodes.insert(&l.source);
        nodes.insert(&l.target);
    }
    // Chains longer than this cannot produce a lag difference within range
    // without passing through a cycle whose length exceeds max_lag.
    let horizon = 3 * max_lag;
    let truth: BTreeSet<LinkKey> = true_links
        .iter()
        .map(|l| LinkKey::new(l.source.clone(), l.target.clone(), l.lag))
        .collect();
    let mut out = BTreeSet::new();
    for &driver in &nodes {
        let mut reach: BTreeSet<(String, usize)> = BTreeSet::new();
        let mut frontier = vec![(driver.to_string(), 0usize)];
        reach.insert((driver.to_string(), 0));
        while let Some((node, d)) = frontier.pop() {
            for l in true_links.iter().filter(|l| l.source == node) {
                let next = (l.target.clone(), d + l.lag);
                if next.1 <= horizon && reach.insert(next.clone()) {
                    frontier.push(next);
                }
            }
        }
        for (b, db) in &reach {
            for (c, dc) in &reach {
                if b != c && dc > db && dc - db <= max_lag {
                    let key = LinkKey::new(b.clone(), c.clone(), dc - db);
                    if !truth.contains(&key) {
                        out.insert(key);
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}
