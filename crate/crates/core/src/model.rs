//! Three-layer qubit network: topology, genome layout and forward pass.
//!
//! Genome layout, in order:
//!
//! | slice            | length | meaning                                        |
//! |------------------|--------|------------------------------------------------|
//! | input weights    | n·p    | `Φ_in[i][j]`, row-major by input node `i`      |
//! | hidden biases    | p      | `Ω[j]`, one threshold phase per hidden neuron  |
//! | output weights   | p      | `Φ_hd[j]`                                      |
//! | hidden deltas    | p      | `δ_hd[j]`, C-NOT control via `sigmoid(δ)`      |
//! | output delta     | 1      | `δ_op`                                         |
//!
//! The first `p(n + 2)` genes are the weight-and-bias block; the trailing
//! `p + 1` reversal parameters are trained alongside them.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{phase_of, phasor, Complex};

/// `n-p-1` network architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Topology {
    n_input: usize,
    p_hidden: usize,
}

impl Topology {
    pub const OUTPUTS: usize = 1;

    pub fn new(n_input: usize, p_hidden: usize) -> Result<Self> {
        if n_input == 0 || p_hidden == 0 {
            return Err(Error::Config(format!(
                "topology needs at least one input and one hidden node, got {n_input}-{p_hidden}-1"
            )));
        }
        Ok(Topology { n_input, p_hidden })
    }

    pub fn n_input(&self) -> usize {
        self.n_input
    }

    pub fn p_hidden(&self) -> usize {
        self.p_hidden
    }

    pub fn q_output(&self) -> usize {
        Self::OUTPUTS
    }

    /// Weights plus hidden biases: `(n + 1)·p + p·q`.
    pub fn weight_count(&self) -> usize {
        (self.n_input + 1) * self.p_hidden + self.p_hidden * Self::OUTPUTS
    }

    /// Weight count plus one reversal parameter per hidden and output neuron.
    pub fn genome_length(&self) -> usize {
        self.weight_count() + self.p_hidden + Self::OUTPUTS
    }
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}-{}", self.n_input, self.p_hidden, Self::OUTPUTS)
    }
}

/// Flat vector of phases encoding one candidate network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome(Vec<f64>);

impl Genome {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if let Some(bad) = phases.iter().position(|p| !p.is_finite()) {
            return Err(Error::Domain(format!(
                "genome entry {bad} is not finite ({})",
                phases[bad]
            )));
        }
        Ok(Genome(phases))
    }

    pub fn phases(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Genome {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Genome split into named parameter blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedNetwork {
    pub topology: Topology,
    /// `n × p`, row-major by input node.
    pub input_weights: Vec<f64>,
    pub hidden_biases: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub hidden_deltas: Vec<f64>,
    pub output_delta: f64,
}

impl DecodedNetwork {
    pub fn input_weight(&self, input: usize, hidden: usize) -> f64 {
        self.input_weights[input * self.topology.p_hidden + hidden]
    }
}

pub fn decode(genome: &[f64], topo: Topology) -> Result<DecodedNetwork> {
    if genome.len() != topo.genome_length() {
        return Err(Error::Shape {
            context: "genome length",
            expected: topo.genome_length(),
            actual: genome.len(),
        });
    }
    let n = topo.n_input;
    let p = topo.p_hidden;
    let mut rest = genome;
    let mut take = |len: usize| {
        let (head, tail) = rest.split_at(len);
        rest = tail;
        head.to_vec()
    };
    let input_weights = take(n * p);
    let hidden_biases = take(p);
    let output_weights = take(p);
    let hidden_deltas = take(p);
    let output_delta = take(1)[0];
    Ok(DecodedNetwork {
        topology: topo,
        input_weights,
        hidden_biases,
        output_weights,
        hidden_deltas,
        output_delta,
    })
}

pub fn encode(net: &DecodedNetwork) -> Genome {
    let mut phases = Vec::with_capacity(net.topology.genome_length());
    phases.extend_from_slice(&net.input_weights);
    phases.extend_from_slice(&net.hidden_biases);
    phases.extend_from_slice(&net.output_weights);
    phases.extend_from_slice(&net.hidden_deltas);
    phases.push(net.output_delta);
    Genome(phases)
}

/// Maps normalized values in `[0, 1]` to input phases `π/2 · d`.
pub fn encode_input(normalized: &[f64]) -> Result<Vec<f64>> {
    normalized
        .iter()
        .map(|&d| {
            if (0.0..=1.0).contains(&d) {
                Ok(FRAC_PI_2 * d)
            } else {
                Err(Error::Domain(format!(
                    "normalized input must lie in [0, 1], got {d}"
                )))
            }
        })
        .collect()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Hidden-layer phases `Θ_hd[j] = π/2·sigmoid(δ_hd[j]) − arg(ϑ_j)` with
/// `ϑ_j = Σ_i f(Φ_in[i][j])·f(Θ_in[i]) − f(Ω[j])`.
pub fn hidden_layer(inputs: &[f64], net: &DecodedNetwork) -> Result<Vec<f64>> {
    let n = net.topology.n_input;
    let p = net.topology.p_hidden;
    if inputs.len() != n {
        return Err(Error::Shape {
            context: "hidden layer inputs",
            expected: n,
            actual: inputs.len(),
        });
    }
    let input_states: Vec<Complex> = inputs.iter().map(|&t| phasor(t)).collect();
    Ok((0..p)
        .map(|j| {
            let mut acc = Complex::new(0.0, 0.0);
            for (i, x) in input_states.iter().enumerate() {
                acc += phasor(net.input_weight(i, j)) * x;
            }
            acc -= phasor(net.hidden_biases[j]);
            FRAC_PI_2 * sigmoid(net.hidden_deltas[j]) - phase_of(acc)
        })
        .collect())
}

/// Output phase `Θ_op = π/2·sigmoid(δ_op) − arg(Σ_j f(Φ_hd[j])·f(Θ_hd[j]))`.
pub fn output_layer(hidden_phases: &[f64], net: &DecodedNetwork) -> Result<f64> {
    let p = net.topology.p_hidden;
    if hidden_phases.len() != p {
        return Err(Error::Shape {
            context: "output layer inputs",
            expected: p,
            actual: hidden_phases.len(),
        });
    }
    let acc = hidden_phases
        .iter()
        .zip(&net.output_weights)
        .fold(Complex::new(0.0, 0.0), |acc, (&h, &w)| {
            acc + phasor(w) * phasor(h)
        });
    Ok(FRAC_PI_2 * sigmoid(net.output_delta) - phase_of(acc))
}

/// Maps the output phase to a prediction in `[0, 1]`: the probability
/// `sin²θ` of observing `|1⟩`.
#[inline]
pub fn output_to_unit(theta_op: f64) -> f64 {
    let s = theta_op.sin();
    s * s
}

/// Full forward pass for one window of normalized values.
pub fn predict(genome: &[f64], topo: Topology, window: &[f64]) -> Result<f64> {
    let net = decode(genome, topo)?;
    if window.len() != topo.n_input {
        return Err(Error::Shape {
            context: "input window",
            expected: topo.n_input,
            actual: window.len(),
        });
    }
    let inputs = encode_input(window)?;
    let hidden = hidden_layer(&inputs, &net)?;
    output_layer(&hidden, &net).map(output_to_unit)
}

/// A genome with every per-network trigonometric term evaluated once.
///
/// Uses `f(a − arg z) = f(a)·z̄/|z|`, so a forward pass needs only complex
/// products and `p + 1` square roots. Input phasors are supplied by the
/// caller and can be shared across all genomes.
#[derive(Debug, Clone)]
pub struct CompiledNetwork {
    n: usize,
    p: usize,
    /// `p × n`, row-major by hidden node.
    input_weights: Vec<Complex>,
    biases: Vec<Complex>,
    /// `f(Φ_hd[j]) · f(π/2·sigmoid(δ_hd[j]))`.
    hidden_out: Vec<Complex>,
    /// `f(π/2·sigmoid(δ_op))`.
    output_control: Complex,
}

impl CompiledNetwork {
    pub fn new(genome: &[f64], topo: Topology) -> Result<Self> {
        let net = decode(genome, topo)?;
        let n = topo.n_input;
        let p = topo.p_hidden;
        let mut input_weights = Vec::with_capacity(n * p);
        for j in 0..p {
            for i in 0..n {
                input_weights.push(phasor(net.input_weight(i, j)));
            }
        }
        let hidden_out = net
            .output_weights
            .iter()
            .zip(&net.hidden_deltas)
            .map(|(&w, &d)| phasor(w) * phasor(FRAC_PI_2 * sigmoid(d)))
            .collect();
        Ok(CompiledNetwork {
            n,
            p,
            input_weights,
            biases: net.hidden_biases.iter().map(|&b| phasor(b)).collect(),
            hidden_out,
            output_control: phasor(FRAC_PI_2 * sigmoid(net.output_delta)),
        })
    }

    /// Forward pass over pre-encoded input states `f(π/2·d_i)`.
    #[inline]
    pub fn predict_states(&self, states: &[Complex]) -> f64 {
        debug_assert_eq!(states.len(), self.n);
        let mut out = Complex::new(0.0, 0.0);
        for j in 0..self.p {
            let row = &self.input_weights[j * self.n..(j + 1) * self.n];
            let mut acc = Complex::new(0.0, 0.0);
            for (w, x) in row.iter().zip(states) {
                acc += w * x;
            }
            acc -= self.biases[j];
            out += self.hidden_out[j] * unit_conj(acc);
        }
        (self.output_control * unit_conj(out)).im.powi(2)
    }

    pub fn predict(&self, window: &[f64]) -> Result<f64> {
        if window.len() != self.n {
            return Err(Error::Shape {
                context: "input window",
                expected: self.n,
                actual: window.len(),
            });
        }
        let states: Vec<Complex> = encode_input(window)?.into_iter().map(phasor).collect();
        Ok(self.predict_states(&states))
    }
}

/// `f(−arg z) = z̄/|z|`, with `f(−arg 0) = 1`.
#[inline]
fn unit_conj(z: Complex) -> Complex {
    let r = z.norm();
    if r == 0.0 {
        Complex::new(1.0, 0.0)
    } else {
        Complex::new(z.re / r, -z.im / r)
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    fn topo(n: usize, p: usize) -> Topology {
        Topology::new(n, p).unwrap()
    }

    /// δ with sigmoid(δ) = 0.5.
    const HALF: f64 = 0.0;

    #[test]
    fn genome_lengths() {
        let t = topo(2, 2);
        assert_eq!(t.genome_length(), 11);
        let net = decode(&[0.0; 11], t).unwrap();
        assert_eq!(net.input_weights.len(), 4);
        assert_eq!(net.hidden_biases.len(), 2);
        assert_eq!(net.output_weights.len(), 2);
        assert_eq!(net.hidden_deltas.len(), 2);
        assert_eq!(topo(10, 7).weight_count(), 84);
        assert_eq!(topo(10, 7).genome_length(), 92);
        assert_eq!(topo(10, 7).q_output(), 1);
    }

    #[test]
    fn invalid_topology() {
        assert!(Topology::new(0, 3).is_err());
        assert!(Topology::new(3, 0).is_err());
    }

    #[test]
    fn decode_length_mismatch() {
        assert!(matches!(
            decode(&[0.0; 10], topo(2, 2)),
            Err(Error::Shape {
                expected: 11,
                actual: 10,
                ..
            })
        ));
    }

    #[test]
    fn decode_order() {
        let g: Vec<f64> = (0..11).map(f64::from).collect();
        let net = decode(&g, topo(2, 2)).unwrap();
        assert_eq!(net.input_weights, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(net.input_weight(1, 0), 2.0);
        assert_eq!(net.hidden_biases, vec![4.0, 5.0]);
        assert_eq!(net.output_weights, vec![6.0, 7.0]);
        assert_eq!(net.hidden_deltas, vec![8.0, 9.0]);
        assert_eq!(net.output_delta, 10.0);
    }

    #[test]
    fn input_encoding() {
        assert_eq!(encode_input(&[0.0]).unwrap(), vec![0.0]);
        assert_eq!(encode_input(&[1.0]).unwrap(), vec![FRAC_PI_2]);
        assert_eq!(
            encode_input(&[0.5, 0.25]).unwrap(),
            vec![FRAC_PI_4, FRAC_PI_8]
        );
        assert!(encode_input(&[1.01]).is_err());
        assert!(encode_input(&[-0.01]).is_err());
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(40.0) >= 1.0 - 1e-17);
        assert_abs_diff_eq!(sigmoid(-2.0), 0.119_202_92, epsilon = 1e-8);
    }

    #[test]
    fn hidden_layer_hand_case() {
        // ϑ = f(0)·f(0) − f(π) = 2, so Θ_hd = π/4 − 0.
        let net = decode(&[0.0, PI, 0.0, HALF, HALF], topo(1, 1)).unwrap();
        let h = hidden_layer(&[0.0], &net).unwrap();
        assert_abs_diff_eq!(h[0], FRAC_PI_4, epsilon = 1e-15);
    }

    #[test]
    fn hidden_layer_zero_accumulation() {
        // f(0)·f(0) − f(0) = 0 exactly; arg contributes nothing.
        let delta = 1.3;
        let net = decode(&[0.0, 0.0, 0.0, delta, HALF], topo(1, 1)).unwrap();
        let h = hidden_layer(&[0.0], &net).unwrap();
        assert_eq!(h[0], FRAC_PI_2 * sigmoid(delta));
    }

    #[test]
    fn layer_shape_errors() {
        let net = decode(&[0.0; 11], topo(2, 2)).unwrap();
        assert!(hidden_layer(&[0.0], &net).is_err());
        assert!(output_layer(&[0.0; 3], &net).is_err());
        assert!(predict(&[0.0; 11], topo(2, 2), &[0.1]).is_err());
    }

    #[test]
    fn output_layer_hand_case() {
        let net = decode(&[0.0, 0.0, 0.0, HALF, HALF], topo(1, 1)).unwrap();
        let o = output_layer(&[0.0], &net).unwrap();
        assert_abs_diff_eq!(o, FRAC_PI_4, epsilon = 1e-15);
    }

    #[test]
    fn output_weight_rotation_shifts_phase() {
        let base = decode(&[0.0, 0.0, 0.2, HALF, HALF], topo(1, 1)).unwrap();
        let mut rotated = base.clone();
        let c = 0.4;
        rotated.output_weights[0] += c;
        let o0 = output_layer(&[0.3], &base).unwrap();
        let o1 = output_layer(&[0.3], &rotated).unwrap();
        assert_abs_diff_eq!(o0 - o1, c, epsilon = 1e-12);
    }

    #[test]
    fn output_mapping_bounds() {
        assert_eq!(output_to_unit(0.0), 0.0);
        assert_abs_diff_eq!(output_to_unit(FRAC_PI_2), 1.0, epsilon = 1e-16);
    }

    #[test]
    fn compiled_handles_zero_accumulation() {
        let g = [0.0, 0.0, 0.0, 1.3, -0.7];
        let t = topo(1, 1);
        let slow = predict(&g, t, &[0.0]).unwrap();
        let fast = CompiledNetwork::new(&g, t)
            .unwrap()
            .predict(&[0.0])
            .unwrap();
        assert_abs_diff_eq!(slow, fast, epsilon = 1e-15);
    }

    fn genome_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>)> {
        (1usize..6, 1usize..6).prop_flat_map(|(n, p)| {
            let len = topo(n, p).genome_length();
            (
                Just(n),
                Just(p),
                prop::collection::vec(-6.0f64..6.0, len),
                prop::collection::vec(0.0f64..=1.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn decode_encode_round_trip((n, p, g, _w) in genome_strategy()) {
            let genome = Genome::new(g.clone()).unwrap();
            let net = decode(genome.phases(), topo(n, p)).unwrap();
            prop_assert_eq!(encode(&net), genome);
        }

        #[test]
        fn prediction_in_unit_interval((n, p, g, w) in genome_strategy()) {
            let y = predict(&g, topo(n, p), &w).unwrap();
            prop_assert!((0.0..=1.0).contains(&y));
        }

        #[test]
        fn compiled_matches_layerwise((n, p, g, w) in genome_strategy()) {
            let t = topo(n, p);
            let slow = predict(&g, t, &w).unwrap();
            let fast = CompiledNetwork::new(&g, t).unwrap().predict(&w).unwrap();
            prop_assert!((slow - fast).abs() <= 1e-12, "{} vs {}", slow, fast);
        }
    }
}
