//! Bath models: spectral densities, their time-domain correlation kernels,
//! Bose–Einstein occupations and Markovian decay rates.
//!
//! Kernels follow `f(t) = ∫ dω J(ω) e^{-iωt}` with no `1/2π`. With a frame
//! shift `ω_ref` the phase becomes `e^{-i(ω - ω_ref)t}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::fock::C64;
use crate::parallel;
use crate::quadrature::Rule;
use crate::{Error, Result};

/// Upper frequency limit, in units of the cutoff, used when an Ohmic density
/// has to be integrated numerically.
pub const OHMIC_CUTOFF_MULTIPLE: f64 = 40.0;

/// Default Gauss–Legendre node count for band-limited densities.
pub const DEFAULT_BAND_NODES: usize = 2000;

const GL_ORDER: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum SpectralDensity {
    /// `J(ω) = η ω (ω/ω0)^(s-1) e^(-ω/ω0)`.
    Ohmic { eta: f64, omega0: f64, s: f64 },
    /// `J(ω) = C ω^k` on `[omega_min, omega_max]`, zero outside.
    BandPowerLaw { c: f64, k: f64, omega_min: f64, omega_max: f64 },
    /// Structureless bath with decay rate `kappa`.
    Markovian { kappa: f64 },
}

impl SpectralDensity {
    pub fn ohmic(eta: f64, omega0: f64, s: f64) -> Self {
        Self::Ohmic { eta, omega0, s }
    }

    /// `1/f`-like phonon bath on the default band `[0.1, 2] ω_b`.
    pub fn one_over_f(c: f64, k: f64) -> Self {
        Self::BandPowerLaw { c, k, omega_min: 0.1, omega_max: 2.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Ohmic { eta, omega0, s } => {
                if !(eta >= 0.0 && omega0 > 0.0 && s > 0.0) {
                    return Err(Error::InvalidArgument(format!("Ohmic needs eta >= 0, omega0 > 0, s > 0 (got {eta}, {omega0}, {s})")));
                }
            }
            Self::BandPowerLaw { c, k, omega_min, omega_max } => {
                if !(c > 0.0 && k.is_finite() && omega_min > 0.0 && omega_max > omega_min) {
                    return Err(Error::InvalidArgument(format!(
                        "band power law needs C > 0 and 0 < omega_min < omega_max (got {c}, {k}, [{omega_min}, {omega_max}])"
                    )));
                }
            }
            Self::Markovian { kappa } => {
                if !(kappa >= 0.0) {
                    return Err(Error::InvalidArgument(format!("Markovian rate must be >= 0, got {kappa}")));
                }
            }
        }
        Ok(())
    }

    /// Frequency interval carrying the density (Ohmic truncated at
    /// `40 ω0`). `None` for the Markovian variant.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Ohmic { omega0, .. } => Some((0.0, OHMIC_CUTOFF_MULTIPLE * omega0)),
            Self::BandPowerLaw { omega_min, omega_max, .. } => Some((omega_min, omega_max)),
            Self::Markovian { .. } => None,
        }
    }

    pub fn is_markovian(&self) -> bool {
        matches!(self, Self::Markovian { .. })
    }
}

/// Evaluate `J(ω)`. The Markovian variant has the flat density `κ / 2π`
/// matching a local damping `-κ/2`.
pub fn spectral_density(model: &SpectralDensity, omega: f64) -> Result<f64> {
    if omega < 0.0 || omega.is_nan() {
        return Err(Error::Domain(format!("spectral density needs omega >= 0, got {omega}")));
    }
    Ok(density_unchecked(model, omega))
}

fn density_unchecked(model: &SpectralDensity, omega: f64) -> f64 {
    match *model {
        SpectralDensity::Ohmic { eta, omega0, s } => {
            if omega == 0.0 {
                return 0.0;
            }
            let x = omega / omega0;
            eta * omega * x.powf(s - 1.0) * (-x).exp()
        }
        SpectralDensity::BandPowerLaw { c, k, omega_min, omega_max } => {
            if omega < omega_min || omega > omega_max {
                0.0
            } else {
                c * omega.powf(k)
            }
        }
        SpectralDensity::Markovian { kappa } => kappa / (2.0 * PI),
    }
}

/// Uniform time grid `t_i = i dt`, `i = 0..len`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, len: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || len < 2 {
            return Err(Error::Grid(format!("need dt > 0 and at least 2 samples (dt = {dt}, len = {len})")));
        }
        Ok(Self { dt, len })
    }

    /// Grid covering `[0, t_max]` with step `dt`.
    pub fn spanning(t_max: f64, dt: f64) -> Result<Self> {
        Self::new(dt, (t_max / dt).ceil() as usize + 1)
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.time(self.len - 1)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.time(i)).collect()
    }
}

/// How kernels are sampled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    /// Replace `e^{-iωt}` by `e^{-i(ω - ω_ref)t}` when set.
    pub shift: Option<f64>,
    /// Gauss–Legendre nodes for band-limited densities.
    pub band_nodes: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { shift: None, band_nodes: DEFAULT_BAND_NODES }
    }
}

/// Sampled correlation function `f(t_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationKernel {
    pub grid: TimeGrid,
    pub values: Vec<C64>,
    pub source: SpectralDensity,
    pub shift: Option<f64>,
}

impl CorrelationKernel {
    pub fn at_zero(&self) -> C64 {
        self.values[0]
    }
}

/// Quadrature rule used for band-limited kernels and spectral integrals of
/// that density.
pub fn band_rule(omega_min: f64, omega_max: f64, nodes: usize) -> Rule {
    let panels = (nodes / GL_ORDER).max(1);
    Rule::uniform(omega_min, omega_max, panels, GL_ORDER)
}

pub fn correlation_kernel(model: &SpectralDensity, grid: TimeGrid, options: KernelOptions) -> Result<CorrelationKernel> {
    model.validate()?;
    let shift = options.shift.unwrap_or(0.0);
    let values = match *model {
        SpectralDensity::Ohmic { eta, omega0, s } => {
            let amp = eta * gamma(s + 1.0) * omega0 * omega0;
            (0..grid.len)
                .map(|i| {
                    let t = grid.time(i);
                    let base = C64::new(1.0, omega0 * t).powf(-(s + 1.0)) * amp;
                    base * C64::from_polar(1.0, shift * t)
                })
                .collect()
        }
        SpectralDensity::BandPowerLaw { omega_min, omega_max, .. } => {
            if options.band_nodes < GL_ORDER {
                return Err(Error::InvalidArgument(format!("need at least {GL_ORDER} band nodes")));
            }
            let rule = band_rule(omega_min, omega_max, options.band_nodes);
            let weights: Vec<f64> = rule.nodes.iter().zip(&rule.weights).map(|(&w, &q)| q * density_unchecked(model, w)).collect();
            let freqs: Vec<f64> = rule.nodes.iter().map(|&w| w - shift).collect();
            fourier_sum(&freqs, &weights, grid)
        }
        SpectralDensity::Markovian { .. } => {
            return Err(Error::Variant("a Markovian bath has no sampled kernel; use a local damping term".into()))
        }
    };
    Ok(CorrelationKernel { grid, values, source: *model, shift: options.shift })
}

/// `Σ_j w_j e^{-i ν_j t_i}` on every grid time. Each chunk of times starts
/// from exact phases and advances them by a fixed rotation.
fn fourier_sum(freqs: &[f64], weights: &[f64], grid: TimeGrid) -> Vec<C64> {
    let steps: Vec<C64> = freqs.iter().map(|&nu| C64::from_polar(1.0, -nu * grid.dt)).collect();
    let chunks = parallel::chunked(grid.len, |range| {
        let t0 = grid.time(range.start);
        let mut phases: Vec<C64> = freqs.iter().map(|&nu| C64::from_polar(1.0, -nu * t0)).collect();
        let mut out = Vec::with_capacity(range.len());
        for _ in range {
            let mut acc = C64::new(0.0, 0.0);
            for ((p, &w), s) in phases.iter_mut().zip(weights).zip(&steps) {
                acc += *p * w;
                *p *= s;
            }
            out.push(acc);
        }
        out
    });
    // chunked() only parallelises long grids; short ones already ran inline
    chunks.into_iter().flatten().collect()
}

/// Convention mapping a spectral density to a Markovian rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateConvention {
    /// `κ = J(ω)/2`.
    #[default]
    HalfDensity,
    /// `κ = 2π J(ω)`, the golden-rule population decay for
    /// `f = ∫ J e^{-iωt} dω`.
    GoldenRule,
}

/// Markovian decay rate at the resonance `omega_res`.
pub fn markov_rate(model: &SpectralDensity, omega_res: f64, convention: RateConvention) -> Result<f64> {
    if let SpectralDensity::Markovian { kappa } = *model {
        return Ok(kappa);
    }
    let j = spectral_density(model, omega_res)?;
    Ok(match convention {
        RateConvention::HalfDensity => 0.5 * j,
        RateConvention::GoldenRule => 2.0 * PI * j,
    })
}

/// Bose–Einstein occupation with `ħ = k_B = 1`.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("thermal occupation needs omega > 0, got {omega}")));
    }
    if temperature < 0.0 {
        return Err(Error::Domain(format!("negative temperature {temperature}")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega / temperature).exp_m1())
}
