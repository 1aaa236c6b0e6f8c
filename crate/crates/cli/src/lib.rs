//! `robust-causal` command-line interface.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use robust_causal::ensemble::run_ensemble;
use robust_causal::evaluation::{
    bin_sensitivity_scan, ensemble_error_binomial, ensemble_miss_binomial, monte_carlo_rates, score_against_truth,
    MonteCarloConfig,
};
use robust_causal::timeseries::write_csv;
use robust_causal::{
    build_graph, export_graph, generate, Bins, EnsembleConfig, LaggedCausalGraph, Method, SubsampleMode, SystemKind,
};

pub mod config;

pub use config::{usage, EvaluateConfig, Manifest, RunConfig, SensitivityConfig, SystemInput, UsageError};

#[derive(Debug, Parser)]
#[command(name = "robust-causal", version, about = "Robust causal-link discovery in multivariate time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic system as CSV plus its ground truth.
    Generate(GenerateArgs),
    /// Build the causal graph of a dataset, optionally with the subsample ensemble.
    Analyze(AnalyzeArgs),
    /// Monte Carlo false-negative and false-positive rates of the bivariate systems.
    Evaluate(EvaluateArgs),
    /// Transfer-entropy graphs across a range of bin counts.
    Sensitivity(SensitivityArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub system: Option<SystemKind>,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Signal coefficient of the bivariate systems.
    #[arg(long)]
    pub m: Option<f64>,
    /// Noise coefficient of the bivariate systems.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth JSON path; defaults to `<out>.truth.json`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Data source, preprocessing, and graph flags shared by `analyze` and `sensitivity`.
#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub system: Option<SystemKind>,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub detrend: bool,
    #[arg(long)]
    pub deseasonalize: bool,
    #[arg(long)]
    pub season_period: Option<usize>,
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[arg(long)]
    pub method: Option<Method>,
    /// `auto` or a fixed bin count.
    #[arg(long)]
    pub bins: Option<Bins>,
    #[arg(long)]
    pub surrogates: Option<usize>,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub subsamples: Option<usize>,
    #[arg(long)]
    pub sub_length: Option<usize>,
    #[arg(long)]
    pub mode: Option<SubsampleMode>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Bin every subsample with the full-sample edges.
    #[arg(long)]
    pub reuse_parent_bins: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub system: Option<SystemKind>,
    /// Comma-separated data lengths.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    /// `a..b` (evenly spaced, see --ratio-points) or a comma-separated list.
    #[arg(long)]
    pub ratios: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub ratio_points: usize,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub bins: Option<Bins>,
    #[arg(long)]
    pub surrogates: Option<usize>,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// `auto` (Scott's rule) or a bin count.
    #[arg(long)]
    pub center: Option<Bins>,
    #[arg(long)]
    pub radius: Option<usize>,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sensitivity(a) => cmd_sensitivity(a),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, text)
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_generate(a: GenerateArgs) -> anyhow::Result<()> {
    let file: Option<robust_causal::SystemSpec> = a.config.as_deref().map(config::read_config).transpose()?;
    let kind = match (a.system, file) {
        (Some(k), _) => k,
        (None, Some(f)) => f.kind,
        (None, None) => return usage("--system is required"),
    };
    let Some(seed) = a.seed.or(file.map(|f| f.rng_seed)) else {
        return usage("--seed is required");
    };
    let mut spec = file.unwrap_or_else(|| robust_causal::SystemSpec::new(kind, 0, seed));
    spec.kind = kind;
    spec.rng_seed = seed;
    if let Some(l) = a.length {
        spec.length = l;
    }
    if spec.length == 0 {
        return usage("--length is required");
    }
    if let Some(b) = a.burn_in {
        spec.burn_in = b;
    }
    if let Some(m) = a.m {
        spec.signal = m;
    }
    if let Some(e) = a.eps {
        spec.noise = e;
    }
    if let Err(e) = spec.validate() {
        return usage(e.to_string());
    }
    let (d, truth) = generate(&spec)?;
    let mut csv = Vec::new();
    write_csv(&d, &mut csv)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write(&a.out, csv)?;
    let truth_path = a.truth.unwrap_or_else(|| with_suffix(&a.out, ".truth.json"));
    write_json(&truth_path, &truth)?;
    write_json(&with_suffix(&a.out, ".manifest.json"), &Manifest::new("generate", spec))
}

fn run_config(r: &RunArgs, base: Option<RunConfig>) -> anyhow::Result<RunConfig> {
    let mut c = base.unwrap_or_default();
    if r.input.is_some() && r.system.is_some() {
        return usage("give either --input or --system, not both");
    }
    if let Some(p) = &r.input {
        c.input = Some(p.clone());
        c.system = None;
    }
    if let Some(kind) = r.system {
        let mut sys = c.system.filter(|s| s.kind == kind).unwrap_or(SystemInput {
            kind,
            length: 0,
            burn_in: 100,
            signal: 1.0,
            noise: 1.0,
        });
        sys.kind = kind;
        c.system = Some(sys);
        c.input = None;
    }
    if let Some(sys) = c.system.as_mut() {
        if let Some(l) = r.length {
            sys.length = l;
        }
        if let Some(b) = r.burn_in {
            sys.burn_in = b;
        }
        if let Some(m) = r.m {
            sys.signal = m;
        }
        if let Some(e) = r.eps {
            sys.noise = e;
        }
        if sys.length == 0 {
            return usage("--length is required with --system");
        }
    }
    c.preprocess.detrend |= r.detrend;
    c.preprocess.deseasonalize |= r.deseasonalize;
    if let Some(p) = r.season_period {
        c.preprocess.season_period = p;
    }
    let g = &mut c.graph;
    if let Some(v) = r.max_lag {
        g.max_lag = v;
        // Granger order follows the requested depth unless set explicitly.
        g.granger.order = g.granger.order.max(v);
    }
    if let Some(v) = r.method {
        g.method = v;
    }
    if let Some(v) = r.bins {
        g.bins = v;
    }
    if let Some(v) = r.surrogates {
        g.surrogate.n_surrogates = v;
    }
    if let Some(v) = r.confidence {
        g.surrogate.confidence = v;
    }
    if r.seed.is_some() {
        c.seed = r.seed;
    }
    Ok(c)
}

fn analyze_config(a: &AnalyzeArgs) -> anyhow::Result<RunConfig> {
    let base = a.run.config.as_deref().map(config::read_config).transpose()?;
    let mut c = run_config(&a.run, base)?;
    let wants_ensemble = a.subsamples.is_some()
        || a.sub_length.is_some()
        || a.mode.is_some()
        || a.threshold.is_some()
        || a.reuse_parent_bins;
    if wants_ensemble && c.ensemble.is_none() {
        c.ensemble = Some(EnsembleConfig::default());
    }
    if let Some(e) = c.ensemble.as_mut() {
        if let Some(v) = a.subsamples {
            e.n_subsamples = v;
        }
        if let Some(v) = a.sub_length {
            e.subsample_length = v;
        }
        if let Some(v) = a.mode {
            e.mode = v;
        }
        if let Some(v) = a.threshold {
            e.threshold = v;
        }
        e.reuse_parent_bins |= a.reuse_parent_bins;
        if let Err(err) = e.validate() {
            return usage(err.to_string());
        }
    }
    c.finalize()
}

#[derive(Serialize)]
struct Scores {
    full: robust_causal::evaluation::ConfusionCounts,
    robust: Option<robust_causal::evaluation::ConfusionCounts>,
}

fn write_graph(dir: &Path, stem: &str, g: &LaggedCausalGraph) -> anyhow::Result<()> {
    write(&dir.join(format!("{stem}.json")), export_graph(g, "json")?)?;
    write(&dir.join(format!("{stem}.dot")), export_graph(g, "dot")?)
}

fn cmd_analyze(a: AnalyzeArgs) -> anyhow::Result<()> {
    let cfg = analyze_config(&a)?;
    let (d, truth) = cfg.load()?;
    create_dir(&a.run.out)?;
    let dir = a.run.out.as_path();
    write_json(&dir.join("manifest.json"), &Manifest::new("analyze", &cfg))?;
    let (full, robust) = match &cfg.ensemble {
        Some(ens) => {
            let out = run_ensemble(&d, &cfg.graph, ens)?;
            write(&dir.join("frequencies.csv"), out.frequencies.to_csv())?;
            write_graph(dir, "robust_graph", &out.robust.graph)?;
            (out.full, Some(out.robust.graph))
        }
        None => (build_graph(&d, &cfg.graph)?, None),
    };
    write_graph(dir, "graph", &full)?;
    if let Some(t) = truth {
        let scores = Scores {
            full: score_against_truth(&full, &t, true)?,
            robust: robust.as_ref().map(|g| score_against_truth(g, &t, true)).transpose()?,
        };
        write_json(&dir.join("scores.json"), &scores)?;
    }
    Ok(())
}

/// Parses `a..b` into `points` evenly spaced values, or a comma-separated list.
pub fn parse_ratios(s: &str, points: usize) -> anyhow::Result<Vec<f64>> {
    let num = |t: &str| -> anyhow::Result<f64> {
        t.trim()
            .parse::<f64>()
            .map_err(|_| UsageError(format!("invalid ratio `{t}`")).into())
    };
    if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi) = (num(lo)?, num(hi)?);
        if points == 0 || !(hi >= lo) {
            return usage(format!("invalid ratio range `{s}`"));
        }
        if points == 1 {
            return Ok(vec![lo]);
        }
        let step = (hi - lo) / (points - 1) as f64;
        return Ok((0..points).map(|i| if i + 1 == points { hi } else { lo + step * i as f64 }).collect());
    }
    s.split(',').map(num).collect()
}

fn cmd_evaluate(a: EvaluateArgs) -> anyhow::Result<()> {
    let base: Option<EvaluateConfig> = a.config.as_deref().map(config::read_config).transpose()?;
    let mut c = base.unwrap_or_else(|| EvaluateConfig {
        rates: MonteCarloConfig::new(SystemKind::BivariateLinear, vec![100, 1000], vec![], 1000, 0),
        ensemble_n: 10,
        ensemble_k: 9,
    });
    let from_file = a.config.is_some();
    if let Some(k) = a.system {
        c.rates.kind = k;
    }
    if let Some(l) = &a.lengths {
        c.rates.lengths = l.clone();
    }
    match &a.ratios {
        Some(r) => c.rates.ratios = parse_ratios(r, a.ratio_points)?,
        None if c.rates.ratios.is_empty() => c.rates.ratios = parse_ratios("0.1..2.0", a.ratio_points)?,
        None => {}
    }
    if let Some(t) = a.trials {
        c.rates.n_trials = t;
    }
    if let Some(b) = a.bins {
        c.rates.bins = b;
    }
    if let Some(v) = a.surrogates {
        c.rates.surrogate.n_surrogates = v;
    }
    if let Some(v) = a.confidence {
        c.rates.surrogate.confidence = v;
    }
    match (a.seed, from_file) {
        (Some(s), _) => c.rates.seed = s,
        (None, true) => {}
        (None, false) => return usage("--seed is required"),
    }
    if let Err(e) = c.rates.validate() {
        return usage(e.to_string());
    }
    if c.ensemble_k == 0 || c.ensemble_k > c.ensemble_n {
        return usage("ensemble_k must lie in 1..=ensemble_n");
    }
    let curve = monte_carlo_rates(&c.rates)?;
    create_dir(&a.out)?;
    write_json(&a.out.join("manifest.json"), &Manifest::new("evaluate", &c))?;
    write(&a.out.join("error_rates.csv"), curve.to_csv())?;
    let mut ens = String::from("data_length,m_over_eps,fnr,fpr,ensemble_fpr,ensemble_fnr_tail,ensemble_fnr_complement\n");
    for p in &curve.points {
        let (n, k) = (c.ensemble_n, c.ensemble_k);
        ens.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.data_length,
            p.m_over_eps,
            p.fnr,
            p.fpr,
            ensemble_error_binomial(p.fpr, n, k)?,
            ensemble_error_binomial(p.fnr, n, k)?,
            ensemble_miss_binomial(p.fnr, n, k)?,
        ));
    }
    write(&a.out.join("ensemble_error.csv"), ens)
}

fn cmd_sensitivity(a: SensitivityArgs) -> anyhow::Result<()> {
    let base: Option<SensitivityConfig> = a.run.config.as_deref().map(config::read_config).transpose()?;
    let base = base.unwrap_or_default();
    let mut c = SensitivityConfig {
        run: run_config(&a.run, Some(base.run))?.finalize()?,
        center: a.center.unwrap_or(base.center),
        radius: a.radius.unwrap_or(base.radius),
    };
    c.run.graph.method = Method::Te;
    let (d, _) = c.run.load()?;
    let center = match c.center {
        Bins::Auto => None,
        Bins::Fixed(n) => Some(n),
    };
    let report = match bin_sensitivity_scan(&d, center, c.radius, &c.run.graph) {
        Err(e @ robust_causal::Error::InvalidConfig(_)) => return usage(e.to_string()),
        r => r?,
    };
    create_dir(&a.run.out)?;
    let dir = a.run.out.as_path();
    write_json(&dir.join("manifest.json"), &Manifest::new("sensitivity", &c))?;
    write(&dir.join("sensitivity.csv"), report.to_csv())?;
    write_json(&dir.join("sensitivity.json"), &report)?;
    for e in &report.entries {
        write(&dir.join(format!("graph_bins_{}.dot", e.bin_count)), export_graph(&e.graph, "dot")?)?;
    }
    Ok(())
}

/// Caps the global worker pool from `ROBUST_CAUSAL_THREADS`.
pub fn configure_threads() {
    if let Some(n) = std::env::var("ROBUST_CAUSAL_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Machine-readable description of a failed run.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: String,
    pub message: String,
}

impl ErrorReport {
    pub fn from_error(e: &anyhow::Error) -> Self {
        let kind = if let Some(core) = e.downcast_ref::<robust_causal::Error>() {
            core.kind()
        } else if e.downcast_ref::<UsageError>().is_some() {
            "Usage"
        } else if e.chain().any(|c| c.is::<std::io::Error>()) {
            "Io"
        } else {
            "Other"
        };
        Self {
            error: kind.into(),
            message: format!("{e:#}"),
        }
    }
}

/// Exit code for a finished run: 0 success, 2 usage error, 1 anything else.
pub fn exit_code(result: &anyhow::Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => 2,
        Err(_) => 1,
    }
}
