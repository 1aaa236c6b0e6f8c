//! Lagged causal graphs: pairwise construction over every ordered variable
//! pair and lag, stable serialization, and set comparison.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::binning::BinningSpec;
use crate::error::{Error, Result};
use crate::estimators::LaggedFrame;
use crate::granger::{granger_test, GrangerConfig};
use crate::par;
use crate::significance::{SurrogateConfig, SurrogateTest};
use crate::timeseries::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Binned transfer entropy with surrogate testing.
    Te,
    /// Granger causality F-test.
    Gc,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "te" => Ok(Method::Te),
            "gc" => Ok(Method::Gc),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// How the shared bin count is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Bins {
    /// Minimum Scott's-rule count over the variables of each analyzed sample.
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for Bins {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Bins::Auto);
        }
        s.parse()
            .map(Bins::Fixed)
            .map_err(|_| Error::InvalidConfig(format!("bins must be `auto` or a count, got `{s}`")))
    }
}

impl Serialize for Bins {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bins::Auto => s.serialize_str("auto"),
            Bins::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Bins {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(usize),
            Name(String),
        }
        match Repr::deserialize(d)? {
            Repr::Count(n) => Ok(Bins::Fixed(n)),
            Repr::Name(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl Bins {
    pub fn spec_for(&self, d: &Dataset) -> Result<BinningSpec> {
        match *self {
            Bins::Auto => BinningSpec::scott(d),
            Bins::Fixed(m) => BinningSpec::for_dataset(d, m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub max_lag: usize,
    pub method: Method,
    pub bins: Bins,
    pub surrogate: SurrogateConfig,
    pub granger: GrangerConfig,
    /// Keep non-significant candidates (flagged) for diagnostics.
    pub verbose: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            max_lag: 4,
            method: Method::Te,
            bins: Bins::Auto,
            surrogate: SurrogateConfig::default(),
            granger: GrangerConfig::default(),
            verbose: false,
        }
    }
}

impl GraphConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.surrogate.rng_seed = seed;
        self
    }
}

/// Identity of a candidate edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkKey {
    pub source: String,
    pub target: String,
    pub lag: usize,
}

impl LinkKey {
    pub fn new(source: impl Into<String>, target: impl Into<String>, lag: usize) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
            lag,
        }
    }
}

impl std::fmt::Display for LinkKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}->{}@{}", self.source, self.target, self.lag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalLink {
    pub source: String,
    pub target: String,
    pub lag: usize,
    /// TE in bits, or the F-statistic for Granger causality.
    pub strength: f64,
    pub significant: bool,
}

impl CausalLink {
    pub fn key(&self) -> LinkKey {
        LinkKey::new(self.source.clone(), self.target.clone(), self.lag)
    }
}

/// Directed edges `(source, target, lag)` over a fixed variable set.
///
/// Variables are kept in alphabetical order and links sorted by
/// `(source, target, lag)`, so equal graphs serialize to equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphWire")]
pub struct LaggedCausalGraph {
    method: Method,
    max_lag: usize,
    variables: Vec<String>,
    links: Vec<CausalLink>,
}

#[derive(Deserialize)]
struct GraphWire {
    method: Method,
    max_lag: usize,
    variables: Vec<String>,
    links: Vec<CausalLink>,
}

impl TryFrom<GraphWire> for LaggedCausalGraph {
    type Error = Error;

    fn try_from(w: GraphWire) -> Result<Self> {
        LaggedCausalGraph::new(w.method, w.max_lag, w.variables, w.links)
    }
}

impl LaggedCausalGraph {
    pub fn new(
        method: Method,
        max_lag: usize,
        mut variables: Vec<String>,
        mut links: Vec<CausalLink>,
    ) -> Result<Self> {
        variables.sort();
        if variables.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("duplicate variable in graph".into()));
        }
        let known: HashSet<&str> = variables.iter().map(String::as_str).collect();
        for l in &links {
            if !known.contains(l.source.as_str()) {
                return Err(Error::UnknownVariable(l.source.clone()));
            }
            if !known.contains(l.target.as_str()) {
                return Err(Error::UnknownVariable(l.target.clone()));
            }
            if l.source == l.target {
                return Err(Error::InvalidConfig(format!("self-link on `{}`", l.source)));
            }
            if l.lag == 0 || l.lag > max_lag {
                return Err(Error::InvalidConfig(format!(
                    "link lag {} outside 1..={max_lag}",
                    l.lag
                )));
            }
        }
        links.sort_by_key(CausalLink::key);
        if links.windows(2).any(|w| w[0].key() == w[1].key()) {
            return Err(Error::InvalidConfig("duplicate link in graph".into()));
        }
        Ok(Self {
            method,
            max_lag,
            variables,
            links,
        })
    }

    pub fn empty(method: Method, max_lag: usize, variables: Vec<String>) -> Result<Self> {
        Self::new(method, max_lag, variables, Vec::new())
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Every recorded link, including non-significant ones in verbose graphs.
    pub fn links(&self) -> &[CausalLink] {
        &self.links
    }

    pub fn significant_links(&self) -> impl Iterator<Item = &CausalLink> {
        self.links.iter().filter(|l| l.significant)
    }

    pub fn link_keys(&self) -> BTreeSet<LinkKey> {
        self.significant_links().map(CausalLink::key).collect()
    }

    pub fn contains(&self, source: &str, target: &str, lag: usize) -> bool {
        self.significant_links()
            .any(|l| l.source == source && l.target == target && l.lag == lag)
    }

    pub fn n_significant(&self) -> usize {
        self.significant_links().count()
    }

    /// Number of candidate links `k (k - 1) L`.
    pub fn n_candidates(&self) -> usize {
        let k = self.variables.len();
        k * k.saturating_sub(1) * self.max_lag
    }

    /// Every candidate key in sorted order.
    pub fn candidates(&self) -> Vec<LinkKey> {
        candidate_keys(&self.variables, self.max_lag)
    }
}

pub(crate) fn candidate_keys(variables: &[String], max_lag: usize) -> Vec<LinkKey> {
    let mut out = Vec::new();
    for s in variables {
        for t in variables {
            if s != t {
                out.extend((1..=max_lag).map(|lag| LinkKey::new(s.clone(), t.clone(), lag)));
            }
        }
    }
    out
}

/// Tests every ordered pair `u != v` at every lag `1..=max_lag` and keeps
/// the significant links.
pub fn build_graph(d: &Dataset, cfg: &GraphConfig) -> Result<LaggedCausalGraph> {
    let spec = match cfg.method {
        Method::Te => Some(cfg.bins.spec_for(d)?),
        Method::Gc => None,
    };
    build_graph_with(d, cfg, spec.as_ref())
}

/// [`build_graph`] with an explicit binning spec for the TE method.
pub fn build_graph_with_spec(d: &Dataset, cfg: &GraphConfig, spec: &BinningSpec) -> Result<LaggedCausalGraph> {
    build_graph_with(d, cfg, Some(spec))
}

fn build_graph_with(d: &Dataset, cfg: &GraphConfig, spec: Option<&BinningSpec>) -> Result<LaggedCausalGraph> {
    let l = d.len();
    if cfg.max_lag == 0 {
        return Err(Error::InvalidConfig("max_lag must be at least 1".into()));
    }
    if cfg.max_lag >= l / 4 {
        return Err(Error::InvalidConfig(format!(
            "max_lag {} must stay below a quarter of the series length {l}",
            cfg.max_lag
        )));
    }
    let mut order: Vec<usize> = (0..d.n_vars()).collect();
    order.sort_by(|&a, &b| d.series()[a].name.cmp(&d.series()[b].name));
    let names: Vec<String> = order.iter().map(|&i| d.series()[i].name.clone()).collect();

    let mut jobs = Vec::new();
    for (si, &s) in order.iter().enumerate() {
        for (ti, &t) in order.iter().enumerate() {
            if s != t {
                jobs.extend((1..=cfg.max_lag).map(|lag| (si, s, ti, t, lag)));
            }
        }
    }

    let links: Vec<CausalLink> = match cfg.method {
        Method::Te => {
            let spec = spec.ok_or_else(|| Error::InvalidConfig("TE needs a binning spec".into()))?;
            let test = SurrogateTest::new(cfg.surrogate)?;
            let bins = d
                .series()
                .iter()
                .map(|s| spec.discretize(s))
                .collect::<Result<Vec<_>>>()?;
            let m = spec.bin_count();
            par::map(jobs, |(si, s, ti, t, lag)| {
                let frame = LaggedFrame::from_bins(&bins[s], &bins[t], lag, m)?;
                let r = test.link_test(&frame, &[si as u64, ti as u64, lag as u64]);
                Ok(CausalLink {
                    source: names[si].clone(),
                    target: names[ti].clone(),
                    lag,
                    strength: r.te,
                    significant: r.link,
                })
            })?
        }
        Method::Gc => {
            if cfg.max_lag > cfg.granger.order {
                return Err(Error::InvalidConfig(format!(
                    "max_lag {} exceeds gc order {}",
                    cfg.max_lag, cfg.granger.order
                )));
            }
            let series = d.series();
            par::map(jobs, |(si, s, ti, t, lag)| {
                let (strength, significant) = match granger_test(&series[s], &series[t], lag, &cfg.granger) {
                    Ok(r) => (r.f_statistic, r.link),
                    // A degenerate regression carries no evidence for a link.
                    Err(Error::SingularDesign(_)) => (0.0, false),
                    Err(e) => return Err(e),
                };
                Ok(CausalLink {
                    source: names[si].clone(),
                    target: names[ti].clone(),
                    lag,
                    strength,
                    significant,
                })
            })?
        }
    };
    let links = links
        .into_iter()
        .filter(|l| cfg.verbose || l.significant)
        .collect();
    LaggedCausalGraph::new(cfg.method, cfg.max_lag, names, links)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Dot,
    Csv,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ExportFormat::Json),
            "dot" => Ok(ExportFormat::Dot),
            "csv" => Ok(ExportFormat::Csv),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Serializes a graph as `json`, `dot` or `csv`.
pub fn export_graph(g: &LaggedCausalGraph, format: &str) -> Result<String> {
    Ok(match format.parse::<ExportFormat>()? {
        ExportFormat::Json => {
            let mut s = serde_json::to_string_pretty(g).map_err(|e| Error::Parse(e.to_string()))?;
            s.push('\n');
            s
        }
        ExportFormat::Dot => to_dot(g),
        ExportFormat::Csv => {
            let mut s = String::from("source,target,lag,strength,significant\n");
            for l in g.links() {
                let _ = writeln!(s, "{},{},{},{},{}", l.source, l.target, l.lag, l.strength, l.significant);
            }
            s
        }
    })
}

/// Parses the JSON form written by [`export_graph`].
pub fn import_graph(json: &str) -> Result<LaggedCausalGraph> {
    serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))
}

fn dot_id(name: &str) -> String {
    let plain = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

fn to_dot(g: &LaggedCausalGraph) -> String {
    let mut s = String::from("digraph causal {\n");
    for v in g.variables() {
        let _ = writeln!(s, "  {};", dot_id(v));
    }
    for l in g.significant_links() {
        let _ = writeln!(
            s,
            "  {} -> {} [label=\"lag {}\"];",
            dot_id(&l.source),
            dot_id(&l.target),
            l.lag
        );
    }
    s.push_str("}\n");
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GraphDiff {
    pub only_a: BTreeSet<LinkKey>,
    pub only_b: BTreeSet<LinkKey>,
    pub both: BTreeSet<LinkKey>,
}

impl GraphDiff {
    /// `|both| / |union|`; 1 when both graphs are empty.
    pub fn jaccard(&self) -> f64 {
        let union = self.only_a.len() + self.only_b.len() + self.both.len();
        if union == 0 {
            1.0
        } else {
            self.both.len() as f64 / union as f64
        }
    }
}

/// Partitions the significant link triples of two graphs over the same variables.
pub fn diff_graphs(a: &LaggedCausalGraph, b: &LaggedCausalGraph) -> Result<GraphDiff> {
    if a.variables != b.variables {
        return Err(Error::VariableMismatch);
    }
    let ka = a.link_keys();
    let kb = b.link_keys();
    Ok(GraphDiff {
        only_a: ka.difference(&kb).cloned().collect(),
        only_b: kb.difference(&ka).cloned().collect(),
        both: ka.intersection(&kb).cloned().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::TimeSeries;
    use proptest::prelude::*;

    fn link(s: &str, t: &str, lag: usize, strength: f64) -> CausalLink {
        CausalLink {
            source: s.into(),
            target: t.into(),
            lag,
            strength,
            significant: true,
        }
    }

    fn vars(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_graph_json_keeps_variables() {
        let g = LaggedCausalGraph::empty(Method::Te, 4, vars(&["Y", "X"])).unwrap();
        let json = export_graph(&g, "json").unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["variables"], serde_json::json!(["X", "Y"]));
        assert_eq!(v["links"], serde_json::json!([]));
        assert_eq!(v["method"], "te");
        assert_eq!(v["max_lag"], 4);
        assert_eq!(import_graph(&json).unwrap(), g);
    }

    #[test]
    fn dot_edge_format() {
        let g = LaggedCausalGraph::new(Method::Te, 4, vars(&["X", "Y"]), vec![link("X", "Y", 3, 0.2)]).unwrap();
        let dot = export_graph(&g, "dot").unwrap();
        assert!(dot.starts_with("digraph causal {"));
        assert!(dot.contains("X -> Y [label=\"lag 3\"]"), "{dot}");
        let odd = LaggedCausalGraph::empty(Method::Te, 1, vars(&["soil temp", "P"])).unwrap();
        assert!(export_graph(&odd, "dot").unwrap().contains("\"soil temp\";"));
    }

    #[test]
    fn csv_and_unknown_format() {
        let g = LaggedCausalGraph::new(Method::Gc, 2, vars(&["A", "B"]), vec![link("B", "A", 2, 7.5)]).unwrap();
        assert_eq!(
            export_graph(&g, "csv").unwrap(),
            "source,target,lag,strength,significant\nB,A,2,7.5,true\n"
        );
        assert_eq!(export_graph(&g, "xml"), Err(Error::UnknownFormat("xml".into())));
    }

    #[test]
    fn invariants_are_enforced() {
        let v = vars(&["X", "Y"]);
        assert!(LaggedCausalGraph::new(Method::Te, 4, v.clone(), vec![link("X", "X", 1, 0.0)]).is_err());
        assert!(LaggedCausalGraph::new(Method::Te, 4, v.clone(), vec![link("X", "Q", 1, 0.0)]).is_err());
        assert!(LaggedCausalGraph::new(Method::Te, 4, v.clone(), vec![link("X", "Y", 5, 0.0)]).is_err());
        assert!(LaggedCausalGraph::new(
            Method::Te,
            4,
            v,
            vec![link("X", "Y", 1, 0.0), link("X", "Y", 1, 0.5)]
        )
        .is_err());
    }

    #[test]
    fn diff_partitions() {
        let v = vars(&["X", "Y", "Z"]);
        let a = LaggedCausalGraph::new(Method::Te, 4, v.clone(), vec![link("X", "Y", 1, 0.1), link("Y", "Z", 2, 0.1)]).unwrap();
        let d = diff_graphs(&a, &a).unwrap();
        assert!(d.only_a.is_empty() && d.only_b.is_empty());
        assert_eq!(d.both, a.link_keys());
        assert_eq!(d.jaccard(), 1.0);

        let b = LaggedCausalGraph::new(Method::Te, 4, v, vec![link("Z", "X", 3, 0.1)]).unwrap();
        let d = diff_graphs(&a, &b).unwrap();
        assert_eq!(d.only_a, a.link_keys());
        assert_eq!(d.only_b, b.link_keys());
        assert!(d.both.is_empty());
        assert_eq!(d.jaccard(), 0.0);

        let c = LaggedCausalGraph::empty(Method::Te, 4, vars(&["X", "Y"])).unwrap();
        assert_eq!(diff_graphs(&a, &c), Err(Error::VariableMismatch));
    }

    #[test]
    fn constant_plus_noise_gives_empty_graph() {
        let noise: Vec<f64> = (0..300).map(|i| ((i * 7919) % 293) as f64 / 293.0).collect();
        let d = Dataset::new(vec![
            TimeSeries::new("c", vec![1.0; 300]),
            TimeSeries::new("n", noise),
        ])
        .unwrap();
        let cfg = GraphConfig {
            bins: Bins::Fixed(8),
            verbose: true,
            ..GraphConfig::default().with_seed(3)
        };
        let g = build_graph(&d, &cfg).unwrap();
        assert_eq!(g.n_significant(), 0);
        assert_eq!(g.links().len(), g.n_candidates());
        assert_eq!(g.n_candidates(), 2 * 4);
    }

    #[test]
    fn max_lag_guard() {
        let d = Dataset::new(vec![
            TimeSeries::new("a", (0..12).map(f64::from).collect()),
            TimeSeries::new("b", (0..12).map(|i| f64::from(i * i % 5)).collect()),
        ])
        .unwrap();
        let cfg = GraphConfig { max_lag: 3, ..Default::default() };
        assert!(matches!(build_graph(&d, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn bins_serde() {
        assert_eq!(serde_json::to_string(&Bins::Auto).unwrap(), "\"auto\"");
        assert_eq!(serde_json::from_str::<Bins>("12").unwrap(), Bins::Fixed(12));
        assert_eq!(serde_json::from_str::<Bins>("\"auto\"").unwrap(), Bins::Auto);
        assert!(serde_json::from_str::<Bins>("\"many\"").is_err());
    }

    fn arb_graph() -> impl Strategy<Value = LaggedCausalGraph> {
        let names = ["A", "B", "C", "D", "E"];
        (2usize..=5, 1usize..=4).prop_flat_map(move |(k, max_lag)| {
            let v: Vec<String> = names[..k].iter().map(|s| s.to_string()).collect();
            let keys = candidate_keys(&v, max_lag);
            let n = keys.len();
            (
                Just(v),
                Just(max_lag),
                prop::sample::subsequence(keys, 0..=n),
                prop::collection::vec((any::<f64>(), any::<bool>()), n),
                any::<bool>(),
            )
                .prop_map(|(v, max_lag, keys, attrs, gc)| {
                    let links = keys
                        .into_iter()
                        .zip(attrs)
                        .map(|(k, (s, sig))| CausalLink {
                            source: k.source,
                            target: k.target,
                            lag: k.lag,
                            strength: if s.is_finite() { s } else { 0.0 },
                            significant: sig,
                        })
                        .collect();
                    let method = if gc { Method::Gc } else { Method::Te };
                    LaggedCausalGraph::new(method, max_lag, v, links).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn json_round_trip_is_lossless(g in arb_graph()) {
            let json = export_graph(&g, "json").unwrap();
            let back = import_graph(&json).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(export_graph(&back, "json").unwrap(), json);
        }
    }
}
