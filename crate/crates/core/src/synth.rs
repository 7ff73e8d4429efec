//! Seeded synthetic workload: scaled sine plus linear trend plus Gaussian noise.

use std::f64::consts::PI;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub points: usize,
    /// Period of the sine, in samples.
    pub period: f64,
    /// Peak-to-peak height of the sine; the clean signal spans
    /// `[offset, offset + amplitude]`.
    pub amplitude: f64,
    pub offset: f64,
    /// Added per sample.
    pub trend: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Timestamp of the first sample, epoch seconds.
    pub start: i64,
    /// Seconds between samples.
    pub interval: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            points: 1000,
            period: 24.0,
            amplitude: 1.0,
            offset: 0.0,
            trend: 0.0,
            noise_sigma: 0.05,
            seed: 0,
            start: 0,
            interval: 300,
        }
    }
}

/// `offset + amplitude·(1 + sin(2πt/period))/2 + trend·t + ε_t`, `ε ~ N(0, σ²)`.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<f64>> {
    if cfg.period.is_nan()
        || cfg.period <= 0.0
        || cfg.noise_sigma < 0.0
        || !cfg.noise_sigma.is_finite()
    {
        return Err(Error::Config(format!(
            "synthetic trace needs period > 0 and noise sigma >= 0, got {} and {}",
            cfg.period, cfg.noise_sigma
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    Ok((0..cfg.points)
        .map(|t| {
            let t = t as f64;
            let clean =
                cfg.offset + cfg.amplitude * 0.5 * (1.0 + (2.0 * PI * t / cfg.period).sin());
            clean + cfg.trend * t + noise.sample(&mut rng)
        })
        .collect())
}

/// Writes `timestamp,value` rows. Negative values are clipped to zero since
/// workloads cannot be negative.
pub fn write_trace_csv<W: Write>(values: &[f64], start: i64, interval: i64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "value"])?;
    for (k, v) in values.iter().enumerate() {
        let ts = start + interval * k as i64;
        w.write_record([ts.to_string(), v.max(0.0).to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<trace csv>", e))?;
    Ok(())
}
