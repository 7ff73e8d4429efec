//! Forecast accuracy metrics, error histograms, Friedman ranks and two
//! reference predictors.

use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::data::WindowedDataset;
use crate::error::{Error, Result};

/// Default histogram bin width in normalized units.
pub const DEFAULT_BIN_WIDTH: f64 = 0.01;

/// Ridge term added to the autoregression normal equations.
pub const AR_RIDGE: f64 = 1e-8;

fn check_pair(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::Shape {
            context: "actual vs predicted",
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::Degenerate(
            "cannot score an empty prediction set".into(),
        ));
    }
    Ok(())
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let sse: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).powi(2))
        .sum();
    Ok((sse / actual.len() as f64).sqrt())
}

pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let sae: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).abs())
        .sum();
    Ok(sae / actual.len() as f64)
}

/// Mean signed error `actual − predicted`.
pub fn mean_error(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let s: f64 = actual.iter().zip(predicted).map(|(a, p)| a - p).sum();
    Ok(s / actual.len() as f64)
}

/// Divides every score by `scores[reference]`.
pub fn normalized_rmse(scores: &[f64], reference: usize) -> Result<Vec<f64>> {
    let r = *scores.get(reference).ok_or(Error::Shape {
        context: "reference method index",
        expected: scores.len(),
        actual: reference,
    })?;
    if r.is_nan() || r <= 0.0 {
        return Err(Error::Degenerate(format!(
            "reference RMSE must be positive to normalize, got {r}"
        )));
    }
    Ok(scores
        .iter()
        .enumerate()
        .map(|(i, &s)| if i == reference { 1.0 } else { s / r })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub count: usize,
}

/// Frequencies of signed errors in bins of width `w` centred on multiples
/// of `w`, so one bin is centred exactly on zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// Two-column CSV: `bin_lower,count`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_lower", "count"])?;
        for b in &self.bins {
            w.write_record([b.lower.to_string(), b.count.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<histogram csv>", e))?;
        Ok(())
    }
}

pub fn error_histogram(actual: &[f64], predicted: &[f64], bin_width: f64) -> Result<Histogram> {
    check_pair(actual, predicted)?;
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::Config(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    // f64::round rounds half away from zero, which keeps the binning symmetric.
    let index = |e: f64| (e / bin_width).round() as i64;
    let errors: Vec<f64> = actual.iter().zip(predicted).map(|(a, p)| a - p).collect();
    if let Some(bad) = errors.iter().find(|e| !e.is_finite()) {
        return Err(Error::Domain(format!(
            "prediction error {bad} is not finite"
        )));
    }
    let lo = errors.iter().map(|&e| index(e)).min().unwrap_or(0);
    let hi = errors.iter().map(|&e| index(e)).max().unwrap_or(0);
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &e in &errors {
        counts[(index(e) - lo) as usize] += 1;
    }
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lower: ((lo + k as i64) as f64 - 0.5) * bin_width,
            count,
        })
        .collect();
    Ok(Histogram { bin_width, bins })
}

/// Accuracy of one method on one evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub method: String,
    pub rmse: f64,
    pub mae: f64,
    pub n_points: usize,
    pub histogram: Histogram,
}

impl MetricReport {
    pub fn compute(
        method: impl Into<String>,
        actual: &[f64],
        predicted: &[f64],
        bin_width: f64,
    ) -> Result<Self> {
        Ok(MetricReport {
            method: method.into(),
            rmse: rmse(actual, predicted)?,
            mae: mae(actual, predicted)?,
            n_points: actual.len(),
            histogram: error_histogram(actual, predicted, bin_width)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub rmse: f64,
    pub mae: f64,
    pub normalized_rmse: f64,
    pub n_points: usize,
}

/// Several methods scored on the same points, RMSE normalized against the
/// first (reference) method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub reference: String,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn new(reports: &[MetricReport]) -> Result<Self> {
        let first = reports
            .first()
            .ok_or_else(|| Error::Degenerate("comparison needs at least one method".into()))?;
        let scores: Vec<f64> = reports.iter().map(|r| r.rmse).collect();
        let normalized = normalized_rmse(&scores, 0)?;
        Ok(ComparisonReport {
            reference: first.method.clone(),
            rows: reports
                .iter()
                .zip(normalized)
                .map(|(r, nr)| ComparisonRow {
                    method: r.method.clone(),
                    rmse: r.rmse,
                    mae: r.mae,
                    normalized_rmse: nr,
                    n_points: r.n_points,
                })
                .collect(),
        })
    }

    /// CSV with columns `method,rmse,mae,normalized_rmse`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "rmse", "mae", "normalized_rmse"])?;
        for r in &self.rows {
            w.write_record([
                r.method.clone(),
                r.rmse.to_string(),
                r.mae.to_string(),
                format!("{:.2}", r.normalized_rmse),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<report csv>", e))?;
        Ok(())
    }
}

/// Per-dataset ranks and the Friedman χ² statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    /// `methods × datasets`.
    pub scores: Vec<Vec<f64>>,
    pub ranks: Vec<Vec<f64>>,
    pub mean_ranks: Vec<f64>,
    pub friedman_statistic: f64,
}

/// Ranks methods within each dataset (1 = lowest score, ties share the
/// average rank) and computes
/// `χ² = 12n / (k(k+1)) · [Σ_j R̄_j² − k(k+1)²/4]`.
pub fn friedman(scores: &[Vec<f64>]) -> Result<RankTable> {
    let k = scores.len();
    if k < 2 {
        return Err(Error::Degenerate(format!(
            "Friedman test needs at least 2 methods, got {k}"
        )));
    }
    let n = scores[0].len();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "Friedman test needs at least 2 datasets, got {n}"
        )));
    }
    if let Some(row) = scores.iter().find(|r| r.len() != n) {
        return Err(Error::Shape {
            context: "Friedman score table row",
            expected: n,
            actual: row.len(),
        });
    }
    if scores.iter().flatten().any(|s| s.is_nan()) {
        return Err(Error::Domain("Friedman scores must not be NaN".into()));
    }

    let mut ranks = vec![vec![0.0; n]; k];
    for d in 0..n {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| scores[a][d].total_cmp(&scores[b][d]));
        let mut start = 0;
        while start < k {
            let mut end = start + 1;
            while end < k && scores[order[end]][d] == scores[order[start]][d] {
                end += 1;
            }
            // positions start..end share ranks start+1..=end
            let avg = (start + 1 + end) as f64 / 2.0;
            for &m in &order[start..end] {
                ranks[m][d] = avg;
            }
            start = end;
        }
    }

    let mean_ranks: Vec<f64> = ranks
        .iter()
        .map(|r| r.iter().sum::<f64>() / n as f64)
        .collect();
    let (kf, nf) = (k as f64, n as f64);
    let sum_sq: f64 = mean_ranks.iter().map(|r| r * r).sum();
    let stat = 12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0);
    Ok(RankTable {
        scores: scores.to_vec(),
        ranks,
        mean_ranks,
        // rounding can leave a tiny negative value for all-tie tables
        friedman_statistic: stat.max(0.0),
    })
}

/// Last observed value of each window.
pub fn baseline_persistence(ds: &WindowedDataset, rows: Range<usize>) -> Vec<f64> {
    rows.map(|k| *ds.row(k).last().expect("window is non-empty"))
        .collect()
}

/// Least-squares autoregression with intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearAr {
    pub intercept: f64,
    /// One coefficient per lag, oldest first.
    pub coefficients: Vec<f64>,
}

impl LinearAr {
    /// Fits on the training rows via ridge-regularized normal equations.
    pub fn fit(ds: &WindowedDataset) -> Result<Self> {
        let rows = ds.train_rows();
        let xs: Vec<&[f64]> = rows.clone().map(|k| ds.row(k)).collect();
        let ys: Vec<f64> = rows.map(|k| ds.target(k)).collect();
        Self::fit_rows(&xs, &ys)
    }

    pub fn fit_rows(xs: &[&[f64]], ys: &[f64]) -> Result<Self> {
        let n = xs.first().map_or(0, |x| x.len());
        if xs.len() < n + 1 {
            return Err(Error::TooShort {
                needed: n,
                actual: xs.len(),
            });
        }
        let d = n + 1;
        let mut ata = vec![vec![0.0; d]; d];
        let mut atb = vec![0.0; d];
        let mut feat = vec![0.0; d];
        for (x, &y) in xs.iter().zip(ys) {
            feat[0] = 1.0;
            feat[1..].copy_from_slice(x);
            for a in 0..d {
                atb[a] += feat[a] * y;
                for b in 0..d {
                    ata[a][b] += feat[a] * feat[b];
                }
            }
        }
        for (a, row) in ata.iter_mut().enumerate().skip(1) {
            row[a] += AR_RIDGE;
        }
        let beta = solve_linear(ata, atb)?;
        Ok(LinearAr {
            intercept: beta[0],
            coefficients: beta[1..].to_vec(),
        })
    }

    pub fn predict(&self, window: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(window)
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }
}

/// Fits on the training split and predicts `rows`.
pub fn baseline_linear_ar(ds: &WindowedDataset, rows: Range<usize>) -> Result<Vec<f64>> {
    let model = LinearAr::fit(ds)?;
    Ok(rows.map(|k| model.predict(ds.row(k))).collect())
}

/// Gaussian elimination with partial pivoting.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Degenerate("singular linear system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (dst, src) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *dst -= factor * src;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::data::{make_windows, SplitFractions};

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[0.0, 1.0], &[0.5, 0.5]).unwrap(), 0.5);
        assert!(matches!(
            rmse(&[0.0], &[0.0, 1.0]),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(rmse(&[], &[]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[0.2, 0.7], &[0.2, 0.7]).unwrap(), 0.0);
        assert_eq!(mae(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mae(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert!(mae(&[], &[]).is_err());
    }

    #[test]
    fn normalized_rmse_examples() {
        let out = normalized_rmse(&[0.02, 0.04, 0.01], 0).unwrap();
        assert_eq!(out, vec![1.0, 2.0, 0.5]);
        assert!(matches!(
            normalized_rmse(&[0.0, 0.1], 0),
            Err(Error::Degenerate(_))
        ));
        assert!(normalized_rmse(&[0.1], 3).is_err());
    }

    #[test]
    fn histogram_examples() {
        let h = error_histogram(&[0.5; 7], &[0.5; 7], 0.01).unwrap();
        assert_eq!(h.bins.len(), 1);
        assert_eq!(h.bins[0].count, 7);
        assert_abs_diff_eq!(h.bins[0].lower, -0.005, epsilon = 1e-15);

        let h = error_histogram(&[0.0, 0.2], &[0.1, 0.1], 0.1).unwrap();
        let nonzero: Vec<_> = h.bins.iter().filter(|b| b.count > 0).collect();
        assert_eq!(nonzero.len(), 2);
        assert_eq!(nonzero[0].count, 1);
        assert_eq!(nonzero[1].count, 1);
        // centres at −0.1 and +0.1
        assert_abs_diff_eq!(nonzero[0].lower + 0.05, -0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(nonzero[1].lower + 0.05, 0.1, epsilon = 1e-12);
        assert!(error_histogram(&[0.0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn histogram_csv() {
        let h = error_histogram(&[0.0, 0.2], &[0.1, 0.1], 0.1).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("bin_lower,count\n"));
        assert_eq!(text.lines().count(), 1 + h.bins.len());
    }

    #[test]
    fn friedman_two_methods() {
        // A always wins: mean ranks (1, 2); 12·4/6 · (1 + 4 − 4.5) = 4.
        let t = friedman(&[vec![0.1, 0.2, 0.3, 0.4], vec![0.5, 0.6, 0.7, 0.8]]).unwrap();
        assert_eq!(t.ranks[0], vec![1.0; 4]);
        assert_eq!(t.ranks[1], vec![2.0; 4]);
        assert_eq!(t.mean_ranks, vec![1.0, 2.0]);
        assert_abs_diff_eq!(t.friedman_statistic, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn friedman_all_ties() {
        let t = friedman(&[vec![1.0; 3], vec![1.0; 3], vec![1.0; 3]]).unwrap();
        assert!(t.ranks.iter().flatten().all(|&r| r == 2.0));
        assert_eq!(t.friedman_statistic, 0.0);
    }

    #[test]
    fn friedman_partial_ties() {
        let t = friedman(&[vec![1.0, 3.0], vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(t.ranks[0], vec![1.5, 3.0]);
        assert_eq!(t.ranks[1], vec![1.5, 1.0]);
        assert_eq!(t.ranks[2], vec![3.0, 2.0]);
    }

    #[test]
    fn friedman_shapes() {
        assert!(friedman(&[vec![1.0, 2.0]]).is_err());
        assert!(friedman(&[vec![1.0], vec![2.0]]).is_err());
        assert!(matches!(
            friedman(&[vec![1.0, 2.0], vec![2.0]]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn persistence_baseline() {
        let s: Vec<f64> = (0..20).map(|i| 0.05 * f64::from(i)).collect();
        let ds = make_windows(&s, 3, SplitFractions::default()).unwrap();
        let rows = 0..ds.rows();
        let p = baseline_persistence(&ds, rows.clone());
        for (k, y) in rows.zip(p) {
            assert_eq!(y, s[k + 2]);
            assert_abs_diff_eq!(ds.target(k) - y, 0.05, epsilon = 1e-12);
        }
        let flat = [0.4; 12];
        let ds = make_windows(&flat, 3, SplitFractions::default()).unwrap();
        let p = baseline_persistence(&ds, ds.test_rows());
        assert_eq!(rmse(&ds.targets()[ds.test_rows()], &p).unwrap(), 0.0);
    }

    #[test]
    fn linear_ar_exact_recurrence() {
        let mut s = vec![0.3, 0.8];
        for t in 2..120 {
            let next = 0.9 * s[t - 1] - 0.5 * s[t - 2] + 0.2;
            s.push(next);
        }
        let ds = make_windows(&s, 2, SplitFractions::default()).unwrap();
        let p = baseline_linear_ar(&ds, ds.test_rows()).unwrap();
        let err = rmse(&ds.targets()[ds.test_rows()], &p).unwrap();
        assert!(err <= 1e-8, "test rmse {err}");
    }

    #[test]
    fn linear_ar_constant_series() {
        let ds = make_windows(&[3.5; 40], 4, SplitFractions::default()).unwrap();
        let p = baseline_linear_ar(&ds, ds.test_rows()).unwrap();
        for y in p {
            assert_abs_diff_eq!(y, 3.5, epsilon = 1e-6);
        }
    }

    #[test]
    fn linear_ar_needs_rows() {
        let rows: Vec<&[f64]> = vec![&[1.0, 2.0], &[2.0, 3.0]];
        assert!(LinearAr::fit_rows(&rows, &[3.0, 4.0]).is_err());
    }

    #[test]
    fn solver_small_system() {
        let x = solve_linear(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert_abs_diff_eq!(x[0], 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 1.4, epsilon = 1e-14);
        assert!(solve_linear(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn rmse_bounds_and_symmetry(
            pairs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..60),
            shift in -5.0f64..5.0,
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let r = rmse(&a, &p).unwrap();
            prop_assert!(r >= mean_error(&a, &p).unwrap().abs() - 1e-12);
            prop_assert!(mae(&a, &p).unwrap() >= 0.0);
            prop_assert!((r - rmse(&p, &a).unwrap()).abs() <= 1e-15);
            let a2: Vec<f64> = a.iter().map(|x| x + shift).collect();
            let p2: Vec<f64> = p.iter().map(|x| x + shift).collect();
            prop_assert!((r - rmse(&a2, &p2).unwrap()).abs() <= 1e-12);
        }

        #[test]
        fn histogram_conserves_counts(
            pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..100),
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            prop_assert_eq!(error_histogram(&a, &p, DEFAULT_BIN_WIDTH).unwrap().total(), a.len());
        }

        #[test]
        fn friedman_zero_iff_all_tied(scores in prop::collection::vec(prop::collection::vec(0u8..3, 3), 3)) {
            let table: Vec<Vec<f64>> = scores.iter().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect();
            let t = friedman(&table).unwrap();
            let ranks_equal = t.mean_ranks.iter().all(|&r| (r - t.mean_ranks[0]).abs() < 1e-12);
            prop_assert_eq!(t.friedman_statistic.abs() < 1e-12, ranks_equal);
        }
    }
}
