use std::fs;
use std::path::{Path, PathBuf};

use eqnn::{AggMode, NormalizationScope, OptimizerConfig, SplitFractions};
use serde::{Deserialize, Serialize};

use crate::error::{io_error, CliError, CliResult};

pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_HIDDEN: usize = 7;
pub const DEFAULT_INTERVAL: i64 = 300;
pub const DEFAULT_BIN_WIDTH: f64 = eqnn::eval::DEFAULT_BIN_WIDTH;
/// Allowed range for both input and hidden node counts.
pub const NODE_RANGE: std::ops::RangeInclusive<usize> = 2..=64;

/// Contents of a `--config` file. Every field is optional; missing ones fall
/// back to defaults and any of them can be overridden on the command line.
///
/// ```toml
/// trace = "cpu.csv"
/// out = "runs/cpu"
/// seed = 7
///
/// [aggregation]
/// interval = 300
/// mode = "mean"
///
/// [network]
/// window = 10
/// hidden = 7
///
/// [optimizer]
/// population_size = 15
/// max_generations = 250
///
/// [split]
/// train = 0.75
/// validation = 0.125
/// test = 0.125
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub trace: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub aggregation: Option<FileAggregation>,
    pub network: Option<FileNetwork>,
    pub optimizer: Option<OptimizerConfig>,
    pub split: Option<SplitFractions>,
    pub normalization: Option<NormalizationScope>,
    pub evaluation: Option<FileEvaluation>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileAggregation {
    pub interval: Option<i64>,
    pub mode: Option<AggMode>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileNetwork {
    pub window: Option<usize>,
    pub hidden: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEvaluation {
    pub baselines: Option<bool>,
    pub bin_width: Option<f64>,
    pub denormalized: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub trace: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub interval: Option<i64>,
    pub agg_mode: Option<AggMode>,
    pub window: Option<usize>,
    pub hidden: Option<usize>,
    pub epochs: Option<usize>,
    pub population: Option<usize>,
    pub patience: Option<usize>,
    pub no_early_stop: bool,
    pub split: Option<SplitFractions>,
    pub global_norm: bool,
    pub baselines: bool,
    pub bin_width: Option<f64>,
    pub denormalized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregationConfig {
    pub interval: i64,
    pub mode: AggMode,
}

/// Fully resolved experiment settings. Serialized verbatim into run manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub trace: PathBuf,
    pub aggregation: AggregationConfig,
    pub window: usize,
    pub hidden: usize,
    pub optimizer: OptimizerConfig,
    pub split: SplitFractions,
    pub normalization: NormalizationScope,
    pub out: PathBuf,
    pub seed: u64,
    pub baselines: bool,
    pub bin_width: f64,
    pub denormalized: bool,
}

impl ExperimentConfig {
    /// Merges command line over file over defaults and validates the result.
    pub fn resolve(file: FileConfig, cli: Overrides) -> CliResult<Self> {
        let agg = file.aggregation.unwrap_or_default();
        let net = file.network.unwrap_or_default();
        let ev = file.evaluation.unwrap_or_default();
        let file_seed = file.seed.or(file.optimizer.as_ref().map(|o| o.seed));
        let mut optimizer = file.optimizer.unwrap_or_default();

        let trace = cli.trace.or(file.trace).ok_or_else(|| {
            CliError::config("no trace given (use --trace or `trace` in the config file)")
        })?;
        let mode = cli.agg_mode.or(agg.mode).ok_or_else(|| {
            CliError::config(
                "aggregation mode is required (use --agg-mode sum|mean or [aggregation] mode)",
            )
        })?;
        let seed = cli.seed.or(file_seed).unwrap_or(0);

        optimizer.seed = seed;
        if let Some(m) = cli.epochs {
            optimizer.max_generations = m;
        }
        if let Some(n) = cli.population {
            optimizer.population_size = n;
        }
        if cli.no_early_stop {
            optimizer.patience = None;
        } else if let Some(p) = cli.patience {
            optimizer.patience = Some(p);
        }

        let normalization = if cli.global_norm {
            NormalizationScope::Global
        } else {
            file.normalization.unwrap_or_default()
        };

        let cfg = ExperimentConfig {
            trace,
            aggregation: AggregationConfig {
                interval: cli.interval.or(agg.interval).unwrap_or(DEFAULT_INTERVAL),
                mode,
            },
            window: cli.window.or(net.window).unwrap_or(DEFAULT_WINDOW),
            hidden: cli.hidden.or(net.hidden).unwrap_or(DEFAULT_HIDDEN),
            optimizer,
            split: cli.split.or(file.split).unwrap_or_default(),
            normalization,
            out: cli
                .out
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("eqnn-out")),
            seed,
            baselines: cli.baselines || ev.baselines.unwrap_or(false),
            bin_width: cli.bin_width.or(ev.bin_width).unwrap_or(DEFAULT_BIN_WIDTH),
            denormalized: cli.denormalized || ev.denormalized.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        check_nodes("window", self.window)?;
        check_nodes("hidden", self.hidden)?;
        if self.aggregation.interval <= 0 {
            return Err(CliError::config(format!(
                "interval must be positive, got {}",
                self.aggregation.interval
            )));
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return Err(CliError::config(format!(
                "bin width must be positive, got {}",
                self.bin_width
            )));
        }
        SplitFractions::new(self.split.train, self.split.validation, self.split.test)?;
        self.optimizer.validate()?;
        Ok(())
    }
}

pub fn check_nodes(name: &str, value: usize) -> CliResult<()> {
    if NODE_RANGE.contains(&value) {
        Ok(())
    } else {
        Err(CliError::config(format!(
            "{name} must be in [{}, {}], got {value}",
            NODE_RANGE.start(),
            NODE_RANGE.end()
        )))
    }
}

/// Parses `0.75` (remainder halved) or `0.7,0.15,0.15`.
pub fn parse_split(s: &str) -> Result<SplitFractions, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let split = match parts.as_slice() {
        [train] => SplitFractions::from_train(*train),
        [train, val, test] => SplitFractions::new(*train, *val, *test),
        _ => return Err("expected one fraction or three comma-separated fractions".into()),
    };
    split.map_err(|e| e.to_string())
}
