//! Phase arithmetic for qubit-style neurons.
//!
//! A qubit is represented by a single phase angle `θ`; its amplitude pair is
//! `(cos θ, sin θ)` and its complex form is the unit phasor `cos θ + i sin θ`.
//! Weights, biases and signals of the network are all phases, and the two
//! gate operations used by the network are:
//!
//! ```text
//! rotation   R(φ)·(cos φ₀, sin φ₀) = (cos(φ + φ₀), sin(φ + φ₀))
//! C-NOT      f(π/2·η − φ)          η = 1: sin φ + i cos φ   (reverse rotation)
//!                                  η = 0: cos φ − i sin φ   (non-rotation)
//! ```
//!
//! Phases are never wrapped inside gate math; only [`phase_of`] returns a
//! canonical angle in `(−π, π]`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex number used for qubit states and accumulated neuron inputs.
pub type Complex = num_complex::Complex64;

/// Unit-modulus tolerance accepted by [`rotate`].
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// A phase angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QubitPhase(f64);

impl QubitPhase {
    pub fn new(phase: f64) -> Result<Self> {
        ensure_finite(phase, "qubit phase")?;
        Ok(QubitPhase(phase))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Probability amplitudes `(α, β) = (cos θ, sin θ)` of `|0⟩` and `|1⟩`.
    pub fn amplitudes(self) -> (f64, f64) {
        let (s, c) = self.0.sin_cos();
        (c, s)
    }

    pub fn state(self) -> Complex {
        phasor(self.0)
    }
}

/// `cos θ + i sin θ` without a finiteness check. Used on hot paths where the
/// phase is already known to be finite.
#[inline]
pub fn phasor(phase: f64) -> Complex {
    let (s, c) = phase.sin_cos();
    Complex::new(c, s)
}

/// The unit phasor `cos θ + i sin θ`.
pub fn qubit_state(phase: f64) -> Result<Complex> {
    ensure_finite(phase, "qubit phase")?;
    Ok(phasor(phase))
}

/// Applies the rotation gate `R(φ)` to a unit-modulus state.
pub fn rotate(state: Complex, phi: f64) -> Result<Complex> {
    ensure_finite(state.re, "state (re)")?;
    ensure_finite(state.im, "state (im)")?;
    ensure_finite(phi, "rotation angle")?;
    let modulus = state.norm();
    if (modulus - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::Domain(format!(
            "rotation expects a unit-modulus state, got |z| = {modulus}"
        )));
    }
    let (s, c) = phi.sin_cos();
    // [c −s; s c] · [re; im]
    Ok(Complex::new(
        c * state.re - s * state.im,
        s * state.re + c * state.im,
    ))
}

/// C-NOT style activation `f(π/2·η − φ)` with continuous control `η ∈ [0, 1]`.
pub fn cnot_activation(eta: f64, phi: f64) -> Result<Complex> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!(
            "C-NOT control must lie in [0, 1], got {eta}"
        )));
    }
    ensure_finite(phi, "C-NOT phase")?;
    Ok(phasor(FRAC_PI_2 * eta - phi))
}

/// Principal argument in `(−π, π]`; the argument of zero is 0.
#[inline]
pub fn phase_of(z: Complex) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        return 0.0;
    }
    let a = z.im.atan2(z.re);
    // atan2(−0, x<0) yields −π, which lies outside the half-open range.
    if a == -PI {
        PI
    } else {
        a
    }
}

fn ensure_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be finite, got {x}")))
    }
}
