//! Causal-link discovery in multivariate time series.
//!
//! Binned transfer entropy and Granger causality over lagged variable pairs,
//! surrogate significance testing, and a subsample-ensemble consistency check
//! that separates robust links from small-sample artifacts. Synthetic systems
//! with known structure and Monte Carlo error-rate tools are included for
//! validation.

pub mod binning;
pub mod ensemble;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod granger;
pub mod graph;
mod par;
pub mod rng;
pub mod significance;
pub mod synthetic;
pub mod timeseries;

pub use binning::BinningSpec;
pub use ensemble::{run_ensemble, EnsembleConfig, EnsembleOutcome, LinkFrequencyTable, RobustGraph, SubsampleMode};
pub use error::{Error, Result};
pub use estimators::{mutual_information, transfer_entropy, Lag};
pub use granger::{granger_test, GrangerConfig, GrangerResult};
pub use graph::{build_graph, export_graph, import_graph, Bins, CausalLink, GraphConfig, LaggedCausalGraph, LinkKey, Method};
pub use significance::{te_link_test, SurrogateConfig};
pub use synthetic::{generate, GroundTruth, SystemKind, SystemSpec};
pub use timeseries::{Dataset, PreprocessSpec, TimeSeries};
