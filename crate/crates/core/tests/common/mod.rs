//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use magnoconv::environments::{spectral_density, SpectralDensity};
use magnoconv::quadrature::Rule;
use magnoconv::{CMatrix, C64};

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let norm: f64 = m.iter().map(|z| z.norm()).sum();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = m / C64::new(2f64.powi(squarings as i32), 0.0);
    let mut term = CMatrix::identity(n, n);
    let mut sum = CMatrix::identity(n, n);
    for k in 1..=30 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(-i H t)`.
pub fn evolution(h: &CMatrix, t: f64) -> CMatrix {
    expm(&(h * C64::new(0.0, -t)))
}

/// Spin-`N/2` `S_x` in the basis `m = N/2, N/2 - 1, ..., -N/2`.
pub fn spin_x(n_excitations: usize) -> CMatrix {
    let s = n_excitations as f64 / 2.0;
    let dim = n_excitations + 1;
    let mut out = CMatrix::zeros(dim, dim);
    for i in 0..n_excitations {
        let m = s - i as f64;
        // <m-1| S_- |m> = sqrt(s(s+1) - m(m-1))
        let v = 0.5 * (s * (s + 1.0) - m * (m - 1.0)).sqrt();
        out[(i + 1, i)] = C64::new(v, 0.0);
        out[(i, i + 1)] = C64::new(v, 0.0);
    }
    out
}

/// `∫ J(ω) e^{-iωt} dω` by composite Gauss–Legendre on `rule`.
pub fn kernel_by_quadrature(model: &SpectralDensity, rule: &Rule, t: f64) -> C64 {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&w, &q)| C64::from_polar(q * spectral_density(model, w).unwrap(), -w * t))
        .sum()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
