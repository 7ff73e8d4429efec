//! Trace ingestion, aggregation, normalization and windowing.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::ops::Range;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of malformed rows above which ingestion aborts.
pub const MAX_MALFORMED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub value: f64,
}

/// Time-sorted workload observations.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrace {
    pub records: Vec<Record>,
    /// 1-based line numbers of rows that were skipped.
    pub malformed_lines: Vec<usize>,
}

impl RawTrace {
    /// Builds a trace from in-memory records, sorting them by timestamp.
    pub fn from_records(mut records: Vec<Record>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Degenerate("trace contains no records".into()));
        }
        if let Some(r) = records
            .iter()
            .find(|r| !(r.value.is_finite() && r.value >= 0.0))
        {
            return Err(Error::Domain(format!(
                "trace values must be finite and non-negative, got {} at t={}",
                r.value, r.timestamp
            )));
        }
        records.sort_by_key(|r| r.timestamp);
        Ok(RawTrace {
            records,
            malformed_lines: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Column layout of a trace CSV. Files must carry a header row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceFormat {
    pub timestamp_column: String,
    pub value_column: String,
    pub delimiter: u8,
}

impl Default for TraceFormat {
    fn default() -> Self {
        TraceFormat {
            timestamp_column: "timestamp".into(),
            value_column: "value".into(),
            delimiter: b',',
        }
    }
}

/// Reads a `timestamp,value` CSV (optionally gzip-compressed, detected by the
/// `.gz` extension). Timestamps may be integer epoch seconds or ISO-8601.
pub fn ingest(path: &Path, format: &TraceFormat) -> Result<RawTrace> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(BufReader::new(file)))
    } else {
        Box::new(BufReader::new(file))
    };
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = csv.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Format(format!("{}: missing column `{name}`", path.display())))
    };
    let ts_col = column(&format.timestamp_column)?;
    let value_col = column(&format.value_column)?;

    let mut records = Vec::new();
    let mut malformed = Vec::new();
    let mut total = 0usize;
    for (k, row) in csv.records().enumerate() {
        total += 1;
        // header is line 1
        let line = k + 2;
        let parsed = row.ok().and_then(|row| {
            let timestamp = parse_timestamp(row.get(ts_col)?)?;
            let value: f64 = row.get(value_col)?.parse().ok()?;
            (value.is_finite() && value >= 0.0).then_some(Record { timestamp, value })
        });
        match parsed {
            Some(r) => records.push(r),
            None => malformed.push(line),
        }
    }

    if malformed.len() as f64 > MAX_MALFORMED_FRACTION * total as f64 {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            count: malformed.len(),
            total,
            lines: malformed,
        });
    }
    if records.is_empty() {
        return Err(Error::Degenerate(format!(
            "{}: trace contains no records",
            path.display()
        )));
    }
    records.sort_by_key(|r| r.timestamp);
    Ok(RawTrace {
        records,
        malformed_lines: malformed,
    })
}

/// Integer epoch seconds, RFC 3339, or a naive ISO-8601 date-time (read as UTC).
pub fn parse_timestamp(s: &str) -> Option<i64> {
    if let Ok(t) = s.parse::<i64>() {
        return Some(t);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
        .map(|dt| dt.and_utc().timestamp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggMode {
    /// Arrival counts (web request logs).
    Sum,
    /// Utilization samples (cluster and VM traces).
    Mean,
}

impl std::str::FromStr for AggMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(AggMode::Sum),
            "mean" => Ok(AggMode::Mean),
            other => Err(Error::Config(format!(
                "aggregation mode must be `sum` or `mean`, got `{other}`"
            ))),
        }
    }
}

/// What an interval without observations contributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyBucket {
    Zero,
    ForwardFill,
}

impl AggMode {
    pub fn default_fill(self) -> EmptyBucket {
        match self {
            AggMode::Sum => EmptyBucket::Zero,
            AggMode::Mean => EmptyBucket::ForwardFill,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedSeries {
    /// Bucket width in seconds.
    pub interval: i64,
    pub values: Vec<f64>,
}

pub fn aggregate(trace: &RawTrace, interval: i64, mode: AggMode) -> Result<AggregatedSeries> {
    aggregate_with(trace, interval, mode, mode.default_fill())
}

/// Buckets records by `⌊(t − t₀) / interval⌋`.
pub fn aggregate_with(
    trace: &RawTrace,
    interval: i64,
    mode: AggMode,
    fill: EmptyBucket,
) -> Result<AggregatedSeries> {
    if interval <= 0 {
        return Err(Error::Config(format!(
            "aggregation interval must be positive, got {interval}"
        )));
    }
    let (first, last) = match (trace.records.first(), trace.records.last()) {
        (Some(f), Some(l)) => (f.timestamp, l.timestamp),
        _ => return Err(Error::Degenerate("cannot aggregate an empty trace".into())),
    };
    let buckets = ((last - first) / interval) as usize + 1;
    let mut sums = vec![0.0; buckets];
    let mut counts = vec![0usize; buckets];
    for r in &trace.records {
        let b = ((r.timestamp - first) / interval) as usize;
        sums[b] += r.value;
        counts[b] += 1;
    }

    let mut values = Vec::with_capacity(buckets);
    for (sum, count) in sums.into_iter().zip(counts) {
        let v = if count > 0 {
            match mode {
                AggMode::Sum => sum,
                AggMode::Mean => sum / count as f64,
            }
        } else {
            match fill {
                EmptyBucket::Zero => 0.0,
                EmptyBucket::ForwardFill => values.last().copied().unwrap_or(0.0),
            }
        };
        values.push(v);
    }
    Ok(AggregatedSeries { interval, values })
}

/// Min-max scaling to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub d_min: f64,
    pub d_max: f64,
}

impl Normalizer {
    pub fn fit(values: &[f64]) -> Result<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in values {
            if !v.is_finite() {
                return Err(Error::Domain(format!(
                    "series contains non-finite value {v}"
                )));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi.is_nan() || hi <= lo {
            return Err(Error::Degenerate(
                "series needs at least two distinct values to normalize".into(),
            ));
        }
        Ok(Normalizer {
            d_min: lo,
            d_max: hi,
        })
    }

    pub fn range(&self) -> f64 {
        self.d_max - self.d_min
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.d_min) / self.range()
    }

    #[inline]
    pub fn invert(&self, y: f64) -> f64 {
        y * self.range() + self.d_min
    }
}

pub fn normalize(series: &[f64]) -> Result<(Vec<f64>, Normalizer)> {
    let norm = Normalizer::fit(series)?;
    Ok((series.iter().map(|&x| norm.apply(x)).collect(), norm))
}

pub fn denormalize(values: &[f64], norm: &Normalizer) -> Vec<f64> {
    values.iter().map(|&y| norm.invert(y)).collect()
}

/// Chronological train / validation / test proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions::from_train(0.75).expect("valid default")
    }
}

impl SplitFractions {
    const TOLERANCE: f64 = 1e-9;

    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let parts = [train, validation, test];
        if parts.iter().any(|f| !(0.0..=1.0).contains(f)) || train <= 0.0 {
            return Err(Error::Config(format!(
                "split fractions must lie in [0, 1] with a positive training share, got {parts:?}"
            )));
        }
        let total: f64 = parts.iter().sum();
        if (total - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::Config(format!(
                "split fractions must sum to 1, got {total}"
            )));
        }
        Ok(SplitFractions {
            train,
            validation,
            test,
        })
    }

    /// Training share with the remainder halved between validation and test.
    pub fn from_train(train: f64) -> Result<Self> {
        let rest = (1.0 - train) / 2.0;
        Self::new(train, rest, rest)
    }

    /// `(train_end, val_end)` row boundaries for `m` rows.
    pub fn bounds(&self, m: usize) -> (usize, usize) {
        let cut = |f: f64| ((m as f64 * f + Self::TOLERANCE).floor() as usize).min(m);
        (cut(self.train), cut(self.train + self.validation))
    }
}

/// Sliding windows over a normalized series with stride 1.
///
/// Row `k` holds `series[k..k+n]` and its target is `series[k+n]`. Rows are
/// views into the series, so the `m × n` input matrix is never materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    series: Vec<f64>,
    window: usize,
    train_end: usize,
    val_end: usize,
}

pub fn make_windows(
    normalized: &[f64],
    n: usize,
    split: SplitFractions,
) -> Result<WindowedDataset> {
    if n == 0 {
        return Err(Error::Config("window length must be at least 1".into()));
    }
    if normalized.len() <= n + 2 {
        return Err(Error::TooShort {
            needed: n + 2,
            actual: normalized.len(),
        });
    }
    let m = normalized.len() - n;
    let (train_end, val_end) = split.bounds(m);
    if !(0 < train_end && train_end < val_end && val_end <= m) {
        return Err(Error::Config(format!(
            "split {split:?} of {m} rows leaves an empty training or validation part \
             (train_end {train_end}, val_end {val_end})"
        )));
    }
    Ok(WindowedDataset {
        series: normalized.to_vec(),
        window: n,
        train_end,
        val_end,
    })
}

impl WindowedDataset {
    pub fn window(&self) -> usize {
        self.window
    }

    /// Number of rows `m`.
    pub fn rows(&self) -> usize {
        self.series.len() - self.window
    }

    pub fn series(&self) -> &[f64] {
        &self.series
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.series[k..k + self.window]
    }

    pub fn target(&self, k: usize) -> f64 {
        self.series[k + self.window]
    }

    pub fn targets(&self) -> &[f64] {
        &self.series[self.window..]
    }

    pub fn split(&self) -> (usize, usize) {
        (self.train_end, self.val_end)
    }

    pub fn train_rows(&self) -> Range<usize> {
        0..self.train_end
    }

    pub fn validation_rows(&self) -> Range<usize> {
        self.train_end..self.val_end
    }

    pub fn test_rows(&self) -> Range<usize> {
        self.val_end..self.rows()
    }

    pub fn inputs_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.rows()).map(|k| self.row(k).to_vec()).collect()
    }

    /// Dumps the windowed matrix as CSV: `x1..xn,target,split`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.window).map(|i| format!("x{i}")).collect();
        header.push("target".into());
        header.push("split".into());
        w.write_record(&header)?;
        for k in 0..self.rows() {
            let part = if k < self.train_end {
                "train"
            } else if k < self.val_end {
                "validation"
            } else {
                "test"
            };
            let mut rec: Vec<String> = self.row(k).iter().map(|v| v.to_string()).collect();
            rec.push(self.target(k).to_string());
            rec.push(part.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<dataset csv>", e))?;
        Ok(())
    }
}

/// Which values the normalizer is fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationScope {
    /// Only values visible to training rows; later values may fall outside `[0, 1]`.
    #[default]
    TrainOnly,
    /// The whole series.
    Global,
}

/// Normalizes a raw series and windows it.
pub fn prepare(
    raw: &[f64],
    n: usize,
    split: SplitFractions,
    scope: NormalizationScope,
) -> Result<(WindowedDataset, Normalizer)> {
    if raw.len() <= n + 2 {
        return Err(Error::TooShort {
            needed: n + 2,
            actual: raw.len(),
        });
    }
    let (train_end, _) = split.bounds(raw.len() - n);
    let fit_on = match scope {
        NormalizationScope::TrainOnly => &raw[..(train_end + n).min(raw.len())],
        NormalizationScope::Global => raw,
    };
    let norm = Normalizer::fit(fit_on)?;
    let normalized: Vec<f64> = raw.iter().map(|&x| norm.apply(x)).collect();
    Ok((make_windows(&normalized, n, split)?, norm))
}
