use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use eqnn::eval::{self, ComparisonReport, LinearAr, MetricReport};
use eqnn::persist::{AggregationSpec, TrainingMetadata};
use eqnn::sbade::GenerationRecord;
use eqnn::synth::{self, SynthConfig};
use eqnn::{
    aggregate, ingest, make_windows, prepare, train_network, AggMode, Forecaster, ModelFile,
    Normalizer, OptimizerConfig, SplitFractions, Topology, TraceFormat, TrainOutcome,
    WindowedDataset,
};
use serde::Serialize;

use crate::args::{EvaluateArgs, ExperimentArgs, PredictArgs, SweepArgs, SynthArgs};
use crate::config::{check_nodes, ExperimentConfig, FileConfig, DEFAULT_BIN_WIDTH};
use crate::error::{io_error, CliError, CliResult};

pub const MODEL_FILE: &str = "model.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SWEEP_FILE: &str = "sweep.csv";
/// Method name of the trained network in reports.
pub const MODEL_METHOD: &str = "eqnn";

pub fn synth(args: &SynthArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let cfg = SynthConfig {
        points: args.points,
        period: args.period,
        amplitude: args.amplitude,
        offset: args.offset,
        trend: args.trend,
        noise_sigma: args.noise,
        seed: args.seed,
        start: args.start,
        interval: args.interval,
    };
    let values = synth::generate(&cfg).map_err(|e| CliError::config(e.to_string()))?;
    match &args.out {
        Some(path) => {
            let f = create(path)?;
            synth::write_trace_csv(&values, cfg.start, cfg.interval, BufWriter::new(f))?;
        }
        None => synth::write_trace_csv(&values, cfg.start, cfg.interval, &mut *stdout)?,
    }
    Ok(())
}

fn resolve(args: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    ExperimentConfig::resolve(file, args.overrides())
}

/// Reads and aggregates a trace into an evenly spaced series.
pub fn load_series(path: &Path, interval: i64, mode: AggMode) -> CliResult<Vec<f64>> {
    if !path.is_file() {
        return Err(CliError::input(format!(
            "trace not found: {}",
            path.display()
        )));
    }
    let raw = ingest(path, &TraceFormat::default())?;
    Ok(aggregate(&raw, interval, mode)?.values)
}

/// A trained network together with the data it was fit on.
pub struct Experiment {
    pub dataset: WindowedDataset,
    pub normalizer: Normalizer,
    pub outcome: TrainOutcome,
    pub forecaster: Forecaster,
    pub train_rmse: f64,
    pub validation_rmse: Option<f64>,
    pub test_rmse: f64,
    pub training_time_ms: u128,
}

/// Windows `series`, trains an `n-p-1` network and scores every split.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    series: &[f64],
    topology: Topology,
    optimizer: &OptimizerConfig,
) -> CliResult<Experiment> {
    let (dataset, normalizer) = prepare(series, topology.n_input(), cfg.split, cfg.normalization)?;
    require_test_rows(&dataset)?;
    let started = Instant::now();
    let outcome = train_network(&dataset, topology, optimizer)?;
    let training_time_ms = started.elapsed().as_millis();
    let forecaster = Forecaster::new(outcome.best.clone(), topology)?;
    let train_rmse = forecaster.rmse_on(&dataset, dataset.train_rows())?;
    let val_rows = dataset.validation_rows();
    let validation_rmse = if val_rows.is_empty() {
        None
    } else {
        Some(forecaster.rmse_on(&dataset, val_rows)?)
    };
    let test_rmse = forecaster.rmse_on(&dataset, dataset.test_rows())?;
    Ok(Experiment {
        dataset,
        normalizer,
        outcome,
        forecaster,
        train_rmse,
        validation_rmse,
        test_rmse,
        training_time_ms,
    })
}

fn require_test_rows(ds: &WindowedDataset) -> CliResult<()> {
    if ds.test_rows().is_empty() {
        Err(CliError::input(format!(
            "the test split is empty ({} windows in total); use a longer trace or a smaller training share",
            ds.rows()
        )))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    pub baselines: bool,
    pub bin_width: f64,
    pub denormalized: bool,
}

/// Scores the model (and optionally the baselines) on the test rows.
pub fn test_reports(
    forecaster: &Forecaster,
    ds: &WindowedDataset,
    norm: &Normalizer,
    opts: ReportOptions,
) -> CliResult<Vec<MetricReport>> {
    require_test_rows(ds)?;
    let rows = ds.test_rows();
    let scale = |v: Vec<f64>| -> Vec<f64> {
        if opts.denormalized {
            v.iter().map(|&x| norm.invert(x)).collect()
        } else {
            v
        }
    };
    let actual = scale(ds.targets()[rows.clone()].to_vec());
    let mut methods = vec![(MODEL_METHOD, forecaster.predict_rows(ds, rows.clone())?)];
    if opts.baselines {
        methods.push(("persistence", eval::baseline_persistence(ds, rows.clone())));
        let ar = LinearAr::fit(ds)?;
        methods.push((
            "linear_ar",
            rows.clone().map(|k| ar.predict(ds.row(k))).collect(),
        ));
    }
    methods
        .into_iter()
        .map(|(name, pred)| {
            Ok(MetricReport::compute(
                name,
                &actual,
                &scale(pred),
                opts.bin_width,
            )?)
        })
        .collect()
}

#[derive(Serialize)]
struct ReportFile<'a> {
    scale: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitSummary>,
    comparison: &'a ComparisonReport,
}

#[derive(Serialize)]
struct FitSummary {
    train_rmse: f64,
    validation_rmse: Option<f64>,
    test_rmse: f64,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a C,
    outputs: Vec<String>,
}

fn write_manifest<C: Serialize>(
    dir: &Path,
    command: &'static str,
    config: &C,
    outputs: Vec<String>,
) -> CliResult<()> {
    let manifest = Manifest {
        tool: "eqnn",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        outputs,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(eqnn::Error::from)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn create(path: &Path) -> CliResult<File> {
    File::create(path).map_err(|e| io_error(path, e))
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| io_error(path, e))
}

/// Writes `report.csv`, `report.json` and one histogram per method into `dir`.
fn write_reports(
    dir: &Path,
    reports: &[MetricReport],
    comparison: &ComparisonReport,
    denormalized: bool,
    fit: Option<FitSummary>,
) -> CliResult<Vec<String>> {
    let mut outputs = vec![REPORT_CSV.to_string(), REPORT_JSON.to_string()];
    comparison.write_csv(BufWriter::new(create(&dir.join(REPORT_CSV))?))?;
    let file = ReportFile {
        scale: if denormalized {
            "denormalized"
        } else {
            "normalized"
        },
        fit,
        comparison,
    };
    write_json(&dir.join(REPORT_JSON), &file)?;
    for r in reports {
        let name = format!("histogram_{}.csv", r.method);
        r.histogram
            .write_csv(BufWriter::new(create(&dir.join(&name))?))?;
        outputs.push(name);
    }
    Ok(outputs)
}

fn write_history(path: &Path, history: &[GenerationRecord]) -> CliResult<()> {
    let mut w = BufWriter::new(create(path)?);
    let io = |e| io_error(path, e);
    writeln!(
        w,
        "generation,best_rmse,mean_rmse,validation_rmse,gamma1,gamma2,gamma3,gamma4,cr_mean"
    )
    .map_err(io)?;
    for r in history {
        let val = r.validation.map(|v| v.to_string()).unwrap_or_default();
        let [g1, g2, g3, g4] = r.gamma;
        writeln!(
            w,
            "{},{},{},{val},{g1},{g2},{g3},{g4},{}",
            r.generation, r.best_fitness, r.mean_fitness, r.cr_mean
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn topology(n: usize, p: usize) -> CliResult<Topology> {
    check_nodes("window", n)?;
    check_nodes("hidden", p)?;
    Ok(Topology::new(n, p)?)
}

pub fn train(args: &ExperimentArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let cfg = resolve(args)?;
    let series = load_series(&cfg.trace, cfg.aggregation.interval, cfg.aggregation.mode)?;
    let topo = topology(cfg.window, cfg.hidden)?;
    let run = run_experiment(&cfg, &series, topo, &cfg.optimizer)?;

    create_dir(&cfg.out)?;
    let model = ModelFile::new(
        topo,
        run.outcome.best.clone(),
        run.normalizer,
        Some(AggregationSpec {
            interval: cfg.aggregation.interval,
            mode: cfg.aggregation.mode,
        }),
        TrainingMetadata {
            optimizer: cfg.optimizer.clone(),
            normalization: cfg.normalization,
            generations_run: run.outcome.history.len() - 1,
            best_generation: run.outcome.best_generation,
            stopped_early: run.outcome.stopped_early,
            train_rmse: run.train_rmse,
            validation_rmse: run.validation_rmse,
        },
    )?;
    model.save(&cfg.out.join(MODEL_FILE))?;
    write_history(&cfg.out.join(HISTORY_FILE), &run.outcome.history)?;

    let opts = ReportOptions {
        baselines: cfg.baselines,
        bin_width: cfg.bin_width,
        denormalized: cfg.denormalized,
    };
    let reports = test_reports(&run.forecaster, &run.dataset, &run.normalizer, opts)?;
    let comparison = ComparisonReport::new(&reports)?;
    let fit = FitSummary {
        train_rmse: run.train_rmse,
        validation_rmse: run.validation_rmse,
        test_rmse: run.test_rmse,
    };
    let mut outputs = vec![MODEL_FILE.to_string(), HISTORY_FILE.to_string()];
    outputs.extend(write_reports(
        &cfg.out,
        &reports,
        &comparison,
        cfg.denormalized,
        Some(fit),
    )?);
    write_manifest(&cfg.out, "train", &cfg, outputs)?;

    let val = run
        .validation_rmse
        .map(|v| format!("{v:.6}"))
        .unwrap_or_else(|| "none".into());
    let say = |e| CliError::input(format!("stdout: {e}"));
    writeln!(stdout, "train_rmse={:.6}", run.train_rmse).map_err(say)?;
    writeln!(stdout, "validation_rmse={val}").map_err(say)?;
    writeln!(stdout, "test_rmse={:.6}", run.test_rmse).map_err(say)?;
    writeln!(
        stdout,
        "generations={} best_generation={}",
        run.outcome.history.len() - 1,
        run.outcome.best_generation
    )
    .map_err(say)?;
    writeln!(stdout, "model={}", cfg.out.join(MODEL_FILE).display()).map_err(say)?;
    Ok(())
}

fn aggregation_for(
    model: &ModelFile,
    interval: Option<i64>,
    mode: Option<AggMode>,
) -> CliResult<(i64, AggMode)> {
    let stored = model.aggregation;
    let interval = interval.or(stored.map(|a| a.interval));
    let mode = mode.or(stored.map(|a| a.mode));
    match (interval, mode) {
        (Some(i), Some(m)) if i > 0 => Ok((i, m)),
        (Some(i), Some(_)) => Err(CliError::config(format!(
            "interval must be positive, got {i}"
        ))),
        _ => Err(CliError::config(
            "the model stores no aggregation settings; pass --interval and --agg-mode",
        )),
    }
}

pub fn predict(args: &PredictArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = ModelFile::load(&args.model)?;
    let history = match (&args.values, &args.trace) {
        (Some(values), _) => values.clone(),
        (None, Some(trace)) => {
            let (interval, mode) = aggregation_for(&model, args.interval, args.agg_mode)?;
            load_series(trace, interval, mode)?
        }
        (None, None) => return Err(CliError::config("give --trace or --values")),
    };
    let n = model.topology.n_input();
    if history.len() < n {
        return Err(CliError::window(format!(
            "the model needs the last {n} values, got {}",
            history.len()
        )));
    }
    if let Some(bad) = history.iter().find(|v| !v.is_finite()) {
        return Err(CliError::input(format!(
            "history contains a non-finite value: {bad}"
        )));
    }
    let steps = match args.rolling {
        None => 1,
        Some(0) => return Err(CliError::config("--rolling needs at least one step")),
        Some(k) => k,
    };
    let norm = model.normalizer;
    let normalized: Vec<f64> = history[history.len() - n..]
        .iter()
        .map(|&x| norm.apply(x))
        .collect();
    let forecaster = Forecaster::new(model.genome, model.topology)?;
    for y in forecaster.predict_rolling(&normalized, steps)? {
        writeln!(stdout, "{}", norm.invert(y))
            .map_err(|e| CliError::input(format!("stdout: {e}")))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvaluateConfig<'a> {
    model: &'a Path,
    trace: &'a Path,
    interval: i64,
    agg_mode: AggMode,
    split: SplitFractions,
    baselines: bool,
    bin_width: f64,
    denormalized: bool,
}

pub fn evaluate(args: &EvaluateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = ModelFile::load(&args.model)?;
    let (interval, mode) = aggregation_for(&model, args.interval, args.agg_mode)?;
    let bin_width = args.bin_width.unwrap_or(DEFAULT_BIN_WIDTH);
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(CliError::config(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let split = args.split.unwrap_or_default();
    let series = load_series(&args.trace, interval, mode)?;
    let norm = model.normalizer;
    let normalized: Vec<f64> = series.iter().map(|&x| norm.apply(x)).collect();
    let ds = make_windows(&normalized, model.topology.n_input(), split)?;
    let forecaster = Forecaster::new(model.genome.clone(), model.topology)?;
    let opts = ReportOptions {
        baselines: args.baselines,
        bin_width,
        denormalized: args.denormalized,
    };
    let reports = test_reports(&forecaster, &ds, &norm, opts)?;
    let comparison = ComparisonReport::new(&reports)?;
    comparison.write_csv(&mut *stdout)?;

    if let Some(dir) = &args.out {
        create_dir(dir)?;
        let outputs = write_reports(dir, &reports, &comparison, args.denormalized, None)?;
        let cfg = EvaluateConfig {
            model: &args.model,
            trace: &args.trace,
            interval,
            agg_mode: mode,
            split,
            baselines: args.baselines,
            bin_width,
            denormalized: args.denormalized,
        };
        write_manifest(dir, "evaluate", &cfg, outputs)?;
    }
    Ok(())
}

/// Seed of one sweep cell, independent of which other cells run.
pub fn cell_seed(seed: u64, n: usize, p: usize) -> u64 {
    let mut z = seed ^ ((n as u64) << 32 | p as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `(n, p)` cells sorted by `n` then `p`, duplicates removed.
pub fn sweep_cells(
    inputs: &[usize],
    hiddens: &[usize],
    grid: bool,
) -> CliResult<Vec<(usize, usize)>> {
    if inputs.is_empty() || hiddens.is_empty() {
        return Err(CliError::config("sweep lists must be nonempty"));
    }
    let mut cells: Vec<(usize, usize)> = if grid {
        inputs
            .iter()
            .flat_map(|&n| hiddens.iter().map(move |&p| (n, p)))
            .collect()
    } else if inputs.len() == hiddens.len() {
        inputs
            .iter()
            .copied()
            .zip(hiddens.iter().copied())
            .collect()
    } else {
        return Err(CliError::config(format!(
            "--inputs has {} entries but --hiddens has {}; pair them up or pass --grid",
            inputs.len(),
            hiddens.len()
        )));
    };
    cells.sort_unstable();
    cells.dedup();
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub input_nodes: usize,
    pub hidden_nodes: usize,
    pub rmse: Option<f64>,
    pub training_time_ms: Option<u128>,
    pub generations_to_best: Option<usize>,
    /// `ok` or the error tag of a failed cell.
    pub status: String,
}

fn write_sweep<W: Write>(rows: &[SweepRow], out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "input_nodes",
        "hidden_nodes",
        "rmse",
        "training_time_ms",
        "generations_to_best",
        "status",
    ])
    .map_err(eqnn::Error::from)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        w.write_record([
            r.input_nodes.to_string(),
            r.hidden_nodes.to_string(),
            opt(r.rmse.map(|v| v.to_string())),
            opt(r.training_time_ms.map(|v| v.to_string())),
            opt(r.generations_to_best.map(|v| v.to_string())),
            r.status.clone(),
        ])
        .map_err(eqnn::Error::from)?;
    }
    w.flush().map_err(|e| CliError::input(e.to_string()))
}

#[derive(Serialize)]
struct SweepConfig<'a> {
    experiment: &'a ExperimentConfig,
    cells: &'a [(usize, usize)],
    cell_seeds: Vec<u64>,
}

pub fn sweep(args: &SweepArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let cfg = resolve(&args.experiment)?;
    let cells = sweep_cells(&args.inputs, &args.hiddens, args.grid)?;
    let series = load_series(&cfg.trace, cfg.aggregation.interval, cfg.aggregation.mode)?;

    let mut rows = Vec::with_capacity(cells.len());
    for &(n, p) in &cells {
        let optimizer = OptimizerConfig {
            seed: cell_seed(cfg.seed, n, p),
            ..cfg.optimizer.clone()
        };
        let result =
            topology(n, p).and_then(|topo| run_experiment(&cfg, &series, topo, &optimizer));
        rows.push(match result {
            Ok(run) => SweepRow {
                input_nodes: n,
                hidden_nodes: p,
                rmse: Some(run.test_rmse),
                training_time_ms: Some(run.training_time_ms),
                generations_to_best: Some(run.outcome.best_generation),
                status: "ok".into(),
            },
            Err(e) => SweepRow {
                input_nodes: n,
                hidden_nodes: p,
                rmse: None,
                training_time_ms: None,
                generations_to_best: None,
                status: e.tag.into(),
            },
        });
    }

    create_dir(&cfg.out)?;
    write_sweep(&rows, BufWriter::new(create(&cfg.out.join(SWEEP_FILE))?))?;
    let manifest_cfg = SweepConfig {
        experiment: &cfg,
        cells: &cells,
        cell_seeds: cells
            .iter()
            .map(|&(n, p)| cell_seed(cfg.seed, n, p))
            .collect(),
    };
    write_manifest(
        &cfg.out,
        "sweep",
        &manifest_cfg,
        vec![SWEEP_FILE.to_string()],
    )?;
    write_sweep(&rows, &mut *stdout)
}
