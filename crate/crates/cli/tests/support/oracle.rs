//! Straight-line reference evaluation of the qubit network forward pass.
//!
//! Uses plain `(re, im)` tuples and `atan2`, independent of the library's
//! complex type and its precomputed fast path. Genome layout:
//! `[Φ_in (n×p, row-major by input) | Ω (p) | Φ_hd (p) | δ_hd (p) | δ_op]`.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

type C = (f64, f64);

fn f(theta: f64) -> C {
    (theta.cos(), theta.sin())
}

fn mul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn arg(z: C) -> f64 {
    if z.0 == 0.0 && z.1 == 0.0 {
        0.0
    } else {
        let a = z.1.atan2(z.0);
        if a == -PI {
            PI
        } else {
            a
        }
    }
}

fn g(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn genome_len(n: usize, p: usize) -> usize {
    (n + 1) * p + p + (p + 1)
}

/// Returns the scalar prediction sin²(Θ_op) for a window of values in [0, 1].
pub fn predict(genome: &[f64], n: usize, p: usize, window: &[f64]) -> f64 {
    assert_eq!(genome.len(), genome_len(n, p));
    assert_eq!(window.len(), n);
    let w_in = &genome[0..n * p];
    let bias = &genome[n * p..n * p + p];
    let w_hd = &genome[n * p + p..n * p + 2 * p];
    let d_hd = &genome[n * p + 2 * p..n * p + 3 * p];
    let d_op = genome[n * p + 3 * p];

    let theta_in: Vec<f64> = window.iter().map(|d| FRAC_PI_2 * d).collect();

    let mut theta_hd = vec![0.0; p];
    for j in 0..p {
        let mut acc = (0.0, 0.0);
        for i in 0..n {
            let t = mul(f(w_in[i * p + j]), f(theta_in[i]));
            acc = (acc.0 + t.0, acc.1 + t.1);
        }
        let b = f(bias[j]);
        acc = (acc.0 - b.0, acc.1 - b.1);
        theta_hd[j] = FRAC_PI_2 * g(d_hd[j]) - arg(acc);
    }

    let mut acc = (0.0, 0.0);
    for j in 0..p {
        let t = mul(f(w_hd[j]), f(theta_hd[j]));
        acc = (acc.0 + t.0, acc.1 + t.1);
    }
    let theta_op = FRAC_PI_2 * g(d_op) - arg(acc);
    theta_op.sin().powi(2)
}
