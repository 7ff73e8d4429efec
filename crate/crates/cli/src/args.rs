use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use eqnn::{AggMode, SplitFractions};

use crate::config::{parse_split, Overrides};

#[derive(Debug, Parser)]
#[command(
    name = "eqnn",
    version,
    about = "Evolutionary quantum-inspired neural network workload forecaster"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic `timestamp,value` trace (scaled sine + trend + noise).
    Synth(SynthArgs),
    /// Train a network and write the model, history, report and manifest.
    Train(ExperimentArgs),
    /// Forecast the next value(s) from the tail of a trace or an explicit window.
    Predict(PredictArgs),
    /// Score a saved model on the test split of a trace.
    Evaluate(EvaluateArgs),
    /// Train one network per (input, hidden) pair and tabulate test RMSE.
    Sweep(SweepArgs),
}

fn parse_agg(s: &str) -> Result<AggMode, String> {
    s.parse().map_err(|e: eqnn::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    /// Period in samples.
    #[arg(long, default_value_t = 24.0)]
    pub period: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.0)]
    pub offset: f64,
    /// Added per sample.
    #[arg(long, default_value_t = 0.0)]
    pub trend: f64,
    /// Standard deviation of the Gaussian noise.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Timestamp of the first sample (epoch seconds).
    #[arg(long, default_value_t = 0)]
    pub start: i64,
    /// Seconds between samples.
    #[arg(long, default_value_t = 300)]
    pub interval: i64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Flags shared by commands that build an experiment from a trace.
#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// TOML config file; command-line flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV trace with `timestamp,value` columns (`.gz` accepted).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Aggregation interval in seconds [default: 300].
    #[arg(long)]
    pub interval: Option<i64>,
    /// `sum` for arrival counts, `mean` for utilization.
    #[arg(long, value_parser = parse_agg)]
    pub agg_mode: Option<AggMode>,
    /// Input nodes n, the window length [default: 10].
    #[arg(long)]
    pub window: Option<usize>,
    /// Hidden nodes p [default: 7].
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Maximum generations [default: 250].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Population size [default: 15].
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Training fraction (`0.75`) or `train,validation,test`.
    #[arg(long, value_parser = parse_split)]
    pub split: Option<SplitFractions>,
    /// Output directory [default: eqnn-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also score the persistence and linear autoregressive baselines.
    #[arg(long)]
    pub baselines: bool,
    /// Generations without validation improvement before stopping [default: 50].
    #[arg(long, conflicts_with = "no_early_stop")]
    pub patience: Option<usize>,
    /// Always run the full number of generations.
    #[arg(long)]
    pub no_early_stop: bool,
    /// Fit the normalizer on the whole series instead of the training part.
    #[arg(long)]
    pub global_norm: bool,
    /// Width of the absolute-error histogram bins.
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Report metrics in original units instead of normalized units.
    #[arg(long)]
    pub denormalized: bool,
}

impl ExperimentArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            trace: self.trace.clone(),
            out: self.out.clone(),
            seed: self.seed,
            interval: self.interval,
            agg_mode: self.agg_mode,
            window: self.window,
            hidden: self.hidden,
            epochs: self.epochs,
            population: self.population,
            patience: self.patience,
            no_early_stop: self.no_early_stop,
            split: self.split,
            global_norm: self.global_norm,
            baselines: self.baselines,
            bin_width: self.bin_width,
            denormalized: self.denormalized,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Trace whose most recent values form the input window.
    #[arg(long, conflicts_with = "values", required_unless_present = "values")]
    pub trace: Option<PathBuf>,
    /// Explicit history in original units, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Option<Vec<f64>>,
    /// Aggregation interval for `--trace` [default: the model's].
    #[arg(long)]
    pub interval: Option<i64>,
    #[arg(long, value_parser = parse_agg)]
    pub agg_mode: Option<AggMode>,
    /// Forecast this many steps by feeding predictions back as inputs.
    #[arg(long)]
    pub rolling: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub trace: PathBuf,
    /// Aggregation interval [default: the model's].
    #[arg(long)]
    pub interval: Option<i64>,
    #[arg(long, value_parser = parse_agg)]
    pub agg_mode: Option<AggMode>,
    /// Must match the split used in training to score unseen data.
    #[arg(long, value_parser = parse_split)]
    pub split: Option<SplitFractions>,
    #[arg(long)]
    pub baselines: bool,
    #[arg(long)]
    pub bin_width: Option<f64>,
    #[arg(long)]
    pub denormalized: bool,
    /// Directory for report and histogram files; the report is always printed.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Input node counts, e.g. `7,10,15,20,25`.
    #[arg(long, value_delimiter = ',', default_value = "7,10,15,20,25")]
    pub inputs: Vec<usize>,
    /// Hidden node counts, paired element-wise with `--inputs`.
    #[arg(long, value_delimiter = ',', default_value = "4,7,10,14,18")]
    pub hiddens: Vec<usize>,
    /// Use every combination instead of element-wise pairs.
    #[arg(long)]
    pub grid: bool,
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn canonical_flags_parse() {
        let cli = Cli::try_parse_from([
            "eqnn",
            "train",
            "--trace",
            "t.csv",
            "--interval",
            "60",
            "--agg-mode",
            "mean",
            "--window",
            "8",
            "--hidden",
            "5",
            "--epochs",
            "20",
            "--population",
            "9",
            "--seed",
            "4",
            "--split",
            "0.8",
            "--out",
            "o",
            "--baselines",
            "--config",
            "c.toml",
        ])
        .unwrap();
        let Command::Train(a) = cli.command else {
            panic!("not train")
        };
        assert_eq!(a.agg_mode, Some(AggMode::Mean));
        assert_eq!(
            (a.window, a.hidden, a.epochs, a.population),
            (Some(8), Some(5), Some(20), Some(9))
        );
        assert!(a.baselines);
    }
}
