//! Workload forecasting with an evolutionary quantum-inspired neural network.
//!
//! The network is a three-layer `n-p-1` qubit network whose signals and
//! weights are phase angles ([`qubit`], [`model`]). It is trained by
//! self-balanced adaptive differential evolution ([`sbade`]) on sliding
//! windows of a normalized workload series ([`data`], [`forecast`]), and
//! scored with the metrics in [`eval`].

pub mod data;
pub mod error;
pub mod eval;
pub mod forecast;
pub mod model;
pub mod persist;
pub mod qubit;
pub mod sbade;
pub mod synth;

pub use data::{
    aggregate, ingest, make_windows, normalize, prepare, AggMode, NormalizationScope, Normalizer,
    RawTrace, SplitFractions, TraceFormat, WindowedDataset,
};
pub use error::{Error, Result};
pub use eval::{friedman, mae, rmse, MetricReport, RankTable};
pub use forecast::{train_network, Forecaster, WindowObjective};
pub use model::{CompiledNetwork, DecodedNetwork, Genome, Topology};
pub use persist::ModelFile;
pub use qubit::{Complex, QubitPhase};
pub use sbade::{train, Objective, OptimizerConfig, Strategy, StrategyStats, TrainOutcome};
