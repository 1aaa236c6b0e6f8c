//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers and strings and returns a JSON string, so
//! the page needs no generated type glue beyond `wasm-bindgen`'s.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use robust_causal::ensemble::{run_ensemble, EnsembleConfig, LinkFrequency, SubsampleMode};
use robust_causal::evaluation::{ensemble_error_binomial, ensemble_miss_binomial, score_against_truth, ConfusionCounts};
use robust_causal::graph::CausalLink;
use robust_causal::{generate, te_link_test, Bins, GraphConfig, Lag, SurrogateConfig, SystemKind, SystemSpec};

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(js_err)
}

#[derive(Serialize)]
struct EnsembleView {
    variables: Vec<String>,
    max_lag: usize,
    full: Vec<CausalLink>,
    robust: Vec<CausalLink>,
    frequencies: Vec<LinkFrequency>,
    required_count: usize,
    full_score: ConfusionCounts,
    robust_score: ConfusionCounts,
}

/// Generates a synthetic system and runs the subsample ensemble on it.
///
/// `bins` is `"auto"` or a bin count; `mode` is one of `random-continuous`,
/// `fixed-overlap`, `nonoverlapping`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn analyze_system(
    system: &str,
    length: usize,
    n_subsamples: usize,
    subsample_length: usize,
    mode: &str,
    threshold: f64,
    bins: &str,
    seed: u64,
) -> Result<String, JsError> {
    let kind: SystemKind = system.parse().map_err(js_err)?;
    let (d, truth) = generate(&SystemSpec::new(kind, length, seed)).map_err(js_err)?;
    let graph_cfg = GraphConfig {
        bins: bins.parse::<Bins>().map_err(js_err)?,
        ..GraphConfig::default().with_seed(seed)
    };
    let ens = EnsembleConfig {
        n_subsamples,
        subsample_length,
        mode: mode.parse::<SubsampleMode>().map_err(js_err)?,
        threshold,
        rng_seed: seed,
        reuse_parent_bins: false,
    };
    ens.validate().map_err(js_err)?;
    let out = run_ensemble(&d, &graph_cfg, &ens).map_err(js_err)?;
    to_json(&EnsembleView {
        variables: out.full.variables().to_vec(),
        max_lag: out.full.max_lag(),
        full_score: score_against_truth(&out.full, &truth, true).map_err(js_err)?,
        robust_score: score_against_truth(&out.robust.graph, &truth, true).map_err(js_err)?,
        full: out.full.links().to_vec(),
        robust: out.robust.graph.links().to_vec(),
        frequencies: out.frequencies.entries,
        required_count: out.robust.required_count,
    })
}

#[derive(Serialize)]
struct ErrorPoint {
    e_s: f64,
    false_link: f64,
    missed_link: f64,
}

/// Ensemble error of a `k_min`-of-`n` rule as the per-subsample error rate
/// sweeps `[0, 1]` in `points` steps: the chance a spurious link is kept, and
/// the chance a real link is dropped.
#[wasm_bindgen]
pub fn ensemble_error_curve(n: usize, k_min: usize, points: usize) -> Result<String, JsError> {
    let points = points.max(2);
    let curve = (0..points)
        .map(|i| {
            let e_s = i as f64 / (points - 1) as f64;
            Ok(ErrorPoint {
                e_s,
                false_link: ensemble_error_binomial(e_s, n, k_min).map_err(js_err)?,
                missed_link: ensemble_miss_binomial(e_s, n, k_min).map_err(js_err)?,
            })
        })
        .collect::<Result<Vec<_>, JsError>>()?;
    to_json(&curve)
}

#[derive(Serialize)]
struct PairView {
    lag: usize,
    link: bool,
    te: f64,
    mi_statistic: f64,
    te_statistic: Option<f64>,
}

/// Tests `X → Y` at lags 1 through 4 on one draw of the bivariate system
/// `Y(t) = m·X(t-1) + ε·η` (or `m·X(t-1)²` when `nonlinear`).
#[wasm_bindgen]
pub fn bivariate_links(nonlinear: bool, length: usize, m: f64, eps: f64, seed: u64) -> Result<String, JsError> {
    let kind = if nonlinear {
        SystemKind::BivariateNonlinear
    } else {
        SystemKind::BivariateLinear
    };
    let (d, _) = generate(&SystemSpec::bivariate(kind, length, m, eps, seed)).map_err(js_err)?;
    let spec = Bins::Auto.spec_for(&d).map_err(js_err)?;
    let (x, y) = (&d.series()[0], &d.series()[1]);
    let views = (1..=4)
        .map(|lag| {
            let cfg = SurrogateConfig::default().with_seed(seed.wrapping_add(lag as u64));
            let t = te_link_test(x, y, Lag::new(lag).map_err(js_err)?, &spec, &cfg).map_err(js_err)?;
            Ok(PairView {
                lag,
                link: t.link,
                te: t.te,
                mi_statistic: t.mi.statistic,
                te_statistic: t.te_test.map(|r| r.statistic),
            })
        })
        .collect::<Result<Vec<_>, JsError>>()?;
    to_json(&views)
}
