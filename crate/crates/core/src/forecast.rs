//! Training and applying the qubit network on windowed series.

use std::ops::Range;

use crate::data::WindowedDataset;
use crate::error::{Error, Result};
use crate::eval::rmse;
use crate::model::{encode_input, CompiledNetwork, Genome, Topology};
use crate::qubit::{phasor, Complex};
use crate::sbade::{self, Objective, OptimizerConfig, TrainOutcome};

/// Input state `f(π/2·d)` of a normalized value. Values outside `[0, 1]`
/// (possible after train-only normalization) are clamped first.
#[inline]
fn input_state(d: f64) -> Complex {
    phasor(std::f64::consts::FRAC_PI_2 * d.clamp(0.0, 1.0))
}

/// Training RMSE on the training rows; validation RMSE on the validation
/// rows. Input states are shared by every genome evaluated.
pub struct WindowObjective<'a> {
    dataset: &'a WindowedDataset,
    topology: Topology,
    states: Vec<Complex>,
}

impl<'a> WindowObjective<'a> {
    pub fn new(dataset: &'a WindowedDataset, topology: Topology) -> Result<Self> {
        if dataset.window() != topology.n_input() {
            return Err(Error::Shape {
                context: "dataset window vs network inputs",
                expected: topology.n_input(),
                actual: dataset.window(),
            });
        }
        Ok(WindowObjective {
            dataset,
            topology,
            states: dataset.series().iter().map(|&d| input_state(d)).collect(),
        })
    }

    pub fn rmse_on(&self, genome: &[f64], rows: Range<usize>) -> f64 {
        let Ok(net) = CompiledNetwork::new(genome, self.topology) else {
            return f64::NAN;
        };
        let n = self.topology.n_input();
        let len = rows.len();
        let sse: f64 = rows
            .map(|k| {
                let e = self.dataset.target(k) - net.predict_states(&self.states[k..k + n]);
                e * e
            })
            .sum();
        (sse / len as f64).sqrt()
    }
}

impl Objective for WindowObjective<'_> {
    fn fitness(&self, genome: &[f64]) -> f64 {
        self.rmse_on(genome, self.dataset.train_rows())
    }

    fn validation(&self, genome: &[f64]) -> Option<f64> {
        let rows = self.dataset.validation_rows();
        (!rows.is_empty()).then(|| self.rmse_on(genome, rows))
    }
}

/// Trains a network of the given topology on the training rows of `dataset`.
pub fn train_network(
    dataset: &WindowedDataset,
    topology: Topology,
    config: &OptimizerConfig,
) -> Result<TrainOutcome> {
    let objective = WindowObjective::new(dataset, topology)?;
    sbade::train(&objective, topology.genome_length(), config)
}

/// A trained network ready to forecast.
#[derive(Debug, Clone)]
pub struct Forecaster {
    topology: Topology,
    genome: Genome,
    compiled: CompiledNetwork,
}

impl Forecaster {
    pub fn new(genome: Genome, topology: Topology) -> Result<Self> {
        let compiled = CompiledNetwork::new(genome.phases(), topology)?;
        Ok(Forecaster {
            topology,
            genome,
            compiled,
        })
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn genome(&self) -> &Genome {
        &self.genome
    }

    /// One-step forecast from the last `n` normalized values. Values are
    /// clamped to `[0, 1]` before encoding.
    pub fn predict_window(&self, window: &[f64]) -> Result<f64> {
        let n = self.topology.n_input();
        if window.len() != n {
            return Err(Error::Shape {
                context: "input window",
                expected: n,
                actual: window.len(),
            });
        }
        let clamped: Vec<f64> = window.iter().map(|d| d.clamp(0.0, 1.0)).collect();
        let states: Vec<Complex> = encode_input(&clamped)?.into_iter().map(phasor).collect();
        Ok(self.compiled.predict_states(&states))
    }

    pub fn predict_rows(&self, dataset: &WindowedDataset, rows: Range<usize>) -> Result<Vec<f64>> {
        rows.map(|k| self.predict_window(dataset.row(k))).collect()
    }

    /// Forecasts `steps` values ahead from the tail of `history`, feeding
    /// each prediction back as input.
    pub fn predict_rolling(&self, history: &[f64], steps: usize) -> Result<Vec<f64>> {
        let n = self.topology.n_input();
        if history.len() < n {
            return Err(Error::TooShort {
                needed: n - 1,
                actual: history.len(),
            });
        }
        let mut window = history[history.len() - n..].to_vec();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let y = self.predict_window(&window)?;
            out.push(y);
            window.remove(0);
            window.push(y);
        }
        Ok(out)
    }

    pub fn rmse_on(&self, dataset: &WindowedDataset, rows: Range<usize>) -> Result<f64> {
        let pred = self.predict_rows(dataset, rows.clone())?;
        rmse(&dataset.targets()[rows], &pred)
    }
}
