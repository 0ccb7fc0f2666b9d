//! Non-Markovian Heisenberg–Langevin dynamics of the photon–phonon pair.
//!
//! The 2x2 Green's function obeys
//! `U'(t) = -i M U(t) - ∫_0^t F(t - τ) U(τ) dτ`, `U(0) = 1`, with
//! `M = [[0, G̃], [G̃, 0]]` and `F = diag(f_a, f_b)`. Rows and columns are
//! ordered (photon, phonon). A Markovian channel replaces its memory
//! integral by the local damping `-(κ/2) U`.

use std::f64::consts::PI;

use crate::environments::{spectral_density, CorrelationKernel, SpectralDensity, TimeGrid};
use crate::fock::C64;
use crate::parallel;
use crate::quadrature::Rule;
use crate::{Error, Result};

/// Any entry above this magnitude is treated as a numerical blow-up.
pub const DIVERGENCE_BOUND: f64 = 1.05;

const PHOTON: usize = 0;
const PHONON: usize = 1;

/// Coupling of one system mode to its bath.
#[derive(Clone, Debug, PartialEq)]
pub enum BathChannel {
    /// Memory integral against a sampled kernel.
    Structured(CorrelationKernel),
    /// Local damping `-(κ/2) U`.
    Markovian { kappa: f64 },
    /// No bath.
    Isolated,
}

impl BathChannel {
    fn damping(&self) -> f64 {
        match self {
            Self::Markovian { kappa } => 0.5 * kappa,
            _ => 0.0,
        }
    }

    fn validate(&self, grid: &TimeGrid) -> Result<()> {
        match self {
            Self::Markovian { kappa } if !(*kappa >= 0.0) => {
                Err(Error::InvalidArgument(format!("Markovian rate must be >= 0, got {kappa}")))
            }
            Self::Structured(kernel) => stride(kernel, grid).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Kernel resampled onto the solver grid, or `None` for local channels.
    fn resampled(&self, grid: &TimeGrid) -> Result<Option<Vec<C64>>> {
        match self {
            Self::Structured(kernel) => {
                let step = stride(kernel, grid)?;
                Ok(Some((0..grid.len).map(|i| kernel.values[i * step]).collect()))
            }
            _ => Ok(None),
        }
    }
}

/// Integer ratio between the solver step and the kernel step.
fn stride(kernel: &CorrelationKernel, grid: &TimeGrid) -> Result<usize> {
    let ratio = grid.dt / kernel.grid.dt;
    let step = ratio.round();
    if step < 1.0 || (ratio - step).abs() > 1e-9 * ratio {
        return Err(Error::Grid(format!(
            "solver step {} is not a whole multiple of the kernel step {}",
            grid.dt, kernel.grid.dt
        )));
    }
    let step = step as usize;
    if (grid.len - 1) * step + 1 > kernel.values.len() {
        return Err(Error::Grid(format!(
            "kernel covers t <= {} but the solver needs t <= {}",
            kernel.grid.t_max(),
            grid.t_max()
        )));
    }
    Ok(step)
}

/// Sampled Green's function `U(t_i)`.
#[derive(Clone, Debug)]
pub struct GreenTrajectory {
    pub grid: TimeGrid,
    pub gtilde: f64,
    pub photon: BathChannel,
    pub phonon: BathChannel,
    /// `entries[row][col][i]`.
    entries: [[Vec<C64>; 2]; 2],
    /// Memory term `(f_row ⋆ U_row,col)(t_i)` for structured rows, else empty.
    memory: [[Vec<C64>; 2]; 2],
}

impl GreenTrajectory {
    pub fn len(&self) -> usize {
        self.grid.len
    }

    pub fn is_empty(&self) -> bool {
        self.grid.len == 0
    }

    pub fn entry(&self, row: usize, col: usize) -> &[C64] {
        &self.entries[row][col]
    }

    pub fn at(&self, i: usize) -> [[C64; 2]; 2] {
        let e = &self.entries;
        [[e[0][0][i], e[0][1][i]], [e[1][0][i], e[1][1][i]]]
    }

    pub fn max_magnitude(&self) -> f64 {
        self.entries.iter().flatten().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Series of complex values stored as split real/imaginary parts.
struct Split {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Split {
    fn zeros(n: usize) -> Self {
        Self { re: vec![0.0; n], im: vec![0.0; n] }
    }

    fn set(&mut self, i: usize, z: C64) {
        self.re[i] = z.re;
        self.im[i] = z.im;
    }

    fn reversed(values: &[C64]) -> Self {
        Self { re: values.iter().rev().map(|z| z.re).collect(), im: values.iter().rev().map(|z| z.im).collect() }
    }
}

/// `Σ_j k[j] a[j]` and `Σ_j k[j] b[j]` over equal-length slices.
fn dot_pair(kr: &[f64], ki: &[f64], a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> (C64, C64) {
    let partials = parallel::chunked(kr.len(), |r| {
        let first = dot_serial(&kr[r.clone()], &ki[r.clone()], &a.0[r.clone()], &a.1[r.clone()]);
        let second = dot_serial(&kr[r.clone()], &ki[r.clone()], &b.0[r.clone()], &b.1[r]);
        (first, second)
    });
    partials.into_iter().fold((C64::new(0.0, 0.0), C64::new(0.0, 0.0)), |(sa, sb), (pa, pb)| (sa + pa, sb + pb))
}

/// `Σ_j k[j] u[j]`.
fn dot(kr: &[f64], ki: &[f64], ur: &[f64], ui: &[f64]) -> C64 {
    parallel::chunked(kr.len(), |r| dot_serial(&kr[r.clone()], &ki[r.clone()], &ur[r.clone()], &ui[r]))
        .into_iter()
        .sum()
}

const LANES: usize = 16;

fn dot_serial(kr: &[f64], ki: &[f64], ur: &[f64], ui: &[f64]) -> C64 {
    // independent lanes so the loop is not bound by add latency
    let mut re = [0.0f64; LANES];
    let mut im = [0.0f64; LANES];
    let split = kr.len() / LANES * LANES;
    for (((k_r, k_i), u_r), u_i) in kr[..split]
        .chunks_exact(LANES)
        .zip(ki[..split].chunks_exact(LANES))
        .zip(ur[..split].chunks_exact(LANES))
        .zip(ui[..split].chunks_exact(LANES))
    {
        for l in 0..LANES {
            re[l] += k_r[l] * u_r[l] - k_i[l] * u_i[l];
            im[l] += k_r[l] * u_i[l] + k_i[l] * u_r[l];
        }
    }
    for j in split..kr.len() {
        re[0] += kr[j] * ur[j] - ki[j] * ui[j];
        im[0] += kr[j] * ui[j] + ki[j] * ur[j];
    }
    C64::new(pairwise(&re), pairwise(&im))
}

fn pairwise(v: &[f64]) -> f64 {
    if v.len() == 1 {
        v[0]
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise(a) + pairwise(b)
    }
}

/// Trapezoidal convolution `dt (½ k_i u_0 + Σ_{j=1}^{i-1} k_{i-j} u_j)`
/// for a row pair, without the `j = i` end point.
fn memory_history(krev: &Split, i: usize, dt: f64, k_i: C64, row: &[Split; 2]) -> [C64; 2] {
    let n = krev.re.len();
    if i == 0 {
        return [C64::new(0.0, 0.0); 2];
    }
    let (kr, ki) = (&krev.re[n - i..n - 1], &krev.im[n - i..n - 1]);
    let (sa, sb) = dot_pair(kr, ki, (&row[0].re[1..i], &row[0].im[1..i]), (&row[1].re[1..i], &row[1].im[1..i]));
    let u0 = [C64::new(row[0].re[0], row[0].im[0]), C64::new(row[1].re[0], row[1].im[0])];
    [(sa + k_i * u0[0] * 0.5) * dt, (sb + k_i * u0[1] * 0.5) * dt]
}

/// Solve the Dyson equations on `grid`: trapezoidal convolution quadrature
/// for the memory integral and a trapezoidal step in time.
pub fn solve_dyson(gtilde: f64, photon: &BathChannel, phonon: &BathChannel, grid: TimeGrid) -> Result<GreenTrajectory> {
    if !gtilde.is_finite() {
        return Err(Error::InvalidArgument(format!("coupling must be finite, got {gtilde}")));
    }
    photon.validate(&grid)?;
    phonon.validate(&grid)?;
    let n = grid.len;
    let dt = grid.dt;
    let kernels = [photon.resampled(&grid)?, phonon.resampled(&grid)?];
    let reversed: [Option<Split>; 2] = [kernels[0].as_deref().map(Split::reversed), kernels[1].as_deref().map(Split::reversed)];
    let damping = [photon.damping(), phonon.damping()];
    let coupling = C64::new(0.0, -gtilde);

    let mut split: [[Split; 2]; 2] = [[Split::zeros(n), Split::zeros(n)], [Split::zeros(n), Split::zeros(n)]];
    let mut entries: [[Vec<C64>; 2]; 2] = Default::default();
    let mut memory: [[Vec<C64>; 2]; 2] = Default::default();
    for row in 0..2 {
        for col in 0..2 {
            entries[row][col] = vec![C64::new(0.0, 0.0); n];
            if kernels[row].is_some() {
                memory[row][col] = vec![C64::new(0.0, 0.0); n];
            }
        }
    }

    // right-hand side given the state and the memory history at this step
    let rhs = |u: &[[C64; 2]; 2], hist: &[[C64; 2]; 2], k0: [C64; 2]| -> [[C64; 2]; 2] {
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for row in 0..2 {
            for col in 0..2 {
                let mem = hist[row][col] + k0[row] * u[row][col] * (0.5 * dt);
                out[row][col] = coupling * u[1 - row][col] - mem - u[row][col] * damping[row];
            }
        }
        out
    };
    let k0 = [0, 1].map(|x| kernels[x].as_ref().map_or(C64::new(0.0, 0.0), |k| k[0]));

    let mut u = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]];
    let zero_hist = [[C64::new(0.0, 0.0); 2]; 2];
    let mut slope = rhs(&u, &zero_hist, k0);
    store(&mut entries, &mut split, 0, &u);
    for row in 0..2 {
        if kernels[row].is_some() {
            for col in 0..2 {
                memory[row][col][0] = k0[row] * u[row][col] * (0.5 * dt);
            }
        }
    }

    for i in 1..n {
        let mut hist = zero_hist;
        for row in 0..2 {
            if let (Some(krev), Some(k)) = (&reversed[row], &kernels[row]) {
                hist[row] = memory_history(krev, i, dt, k[i], &split[row]);
            }
        }
        // trapezoidal corrector; it is linear in the new value, so the
        // predictor-corrector fixed point is solved for directly
        let h = 0.5 * dt;
        let own = [0, 1].map(|r| C64::new(1.0 + h * damping[r], 0.0) + k0[r] * (h * h));
        let cross = -coupling * h;
        let det = own[0] * own[1] - cross * cross;
        for col in 0..2 {
            let b = [0, 1].map(|r| u[r][col] + (slope[r][col] - hist[r][col]) * h);
            u[0][col] = (b[0] * own[1] - cross * b[1]) / det;
            u[1][col] = (own[0] * b[1] - cross * b[0]) / det;
        }
        slope = rhs(&u, &hist, k0);
        for row in 0..2 {
            for col in 0..2 {
                let magnitude = u[row][col].norm();
                if !(magnitude <= DIVERGENCE_BOUND) {
                    return Err(Error::Divergence { t: grid.time(i), magnitude });
                }
                if kernels[row].is_some() {
                    memory[row][col][i] = hist[row][col] + k0[row] * u[row][col] * (0.5 * dt);
                }
            }
        }
        store(&mut entries, &mut split, i, &u);
    }

    Ok(GreenTrajectory { grid, gtilde, photon: photon.clone(), phonon: phonon.clone(), entries, memory })
}

fn store(entries: &mut [[Vec<C64>; 2]; 2], split: &mut [[Split; 2]; 2], i: usize, u: &[[C64; 2]; 2]) {
    for row in 0..2 {
        for col in 0..2 {
            entries[row][col][i] = u[row][col];
            split[row][col].set(i, u[row][col]);
        }
    }
}

/// `|U21(t)|` at every sample.
pub fn transfer_fidelity(traj: &GreenTrajectory) -> Vec<f64> {
    traj.entry(PHONON, PHOTON).iter().map(|z| z.norm()).collect()
}

/// Noise-channel statistics of the phonon output.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseChannelStats {
    /// `[V2, V2†](t)`.
    pub commutator: Vec<f64>,
    /// `⟨V2† V2⟩(t)`.
    pub occupation: Vec<f64>,
    /// `|U21|² + |U22|² + [V2, V2†] - 1`.
    pub sum_rule_residual: Vec<f64>,
}

impl NoiseChannelStats {
    pub fn max_residual(&self) -> f64 {
        self.sum_rule_residual.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }
}

/// Trapezoidal convolution `(k ⋆ u)(t_i)` at every grid point.
fn convolve(kernel: &[C64], series: &[C64], dt: f64) -> Vec<C64> {
    let n = series.len();
    let krev = Split::reversed(kernel);
    let s = Split { re: series.iter().map(|z| z.re).collect(), im: series.iter().map(|z| z.im).collect() };
    let indices: Vec<usize> = (0..n).collect();
    parallel::map(&indices, |&i| {
        if i == 0 {
            return C64::new(0.0, 0.0);
        }
        let (kr, ki) = (&krev.re[n - i..n - 1], &krev.im[n - i..n - 1]);
        let inner = dot(kr, ki, &s.re[1..i], &s.im[1..i]);
        (inner + (kernel[i] * series[0] + kernel[0] * series[i]) * 0.5) * dt
    })
}

/// Accumulated bath contribution `∫_0^t 2 Re[conj(u) (f ⋆ u)] ds` of one
/// channel, with `u` the phonon-row entry driven by that bath.
fn channel_commutator(channel: &BathChannel, series: &[C64], conv: Option<&[C64]>, dt: f64) -> Vec<f64> {
    let rate: Vec<f64> = match channel {
        BathChannel::Isolated => vec![0.0; series.len()],
        BathChannel::Markovian { kappa } => series.iter().map(|z| kappa * z.norm_sqr()).collect(),
        BathChannel::Structured(_) => {
            let conv = conv.expect("structured channel needs its convolution");
            series.iter().zip(conv).map(|(u, c)| 2.0 * (u.conj() * c).re).collect()
        }
    };
    cumulative_trapezoid(&rate, dt)
}

fn cumulative_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Commutator, occupation and sum-rule residual of the phonon noise
/// operator. The photon bath is at zero temperature; the phonon bath has a
/// flat occupation `nbar_b` over its support.
pub fn noise_stats(traj: &GreenTrajectory, nbar_b: f64) -> Result<NoiseChannelStats> {
    if !(nbar_b >= 0.0) {
        return Err(Error::InvalidArgument(format!("occupation must be >= 0, got {nbar_b}")));
    }
    let dt = traj.grid.dt;
    let u21 = traj.entry(PHONON, PHOTON);
    let u22 = traj.entry(PHONON, PHONON);
    let photon_conv = match &traj.photon {
        BathChannel::Structured(_) => {
            let kernel = traj.photon.resampled(&traj.grid)?.expect("structured");
            Some(convolve(&kernel, u21, dt))
        }
        _ => None,
    };
    let photon_part = channel_commutator(&traj.photon, u21, photon_conv.as_deref(), dt);
    let phonon_conv = (!traj.memory[PHONON][PHONON].is_empty()).then(|| traj.memory[PHONON][PHONON].as_slice());
    let phonon_part = channel_commutator(&traj.phonon, u22, phonon_conv, dt);

    let commutator: Vec<f64> = photon_part.iter().zip(&phonon_part).map(|(a, b)| a + b).collect();
    let occupation: Vec<f64> = phonon_part.iter().map(|b| nbar_b * b).collect();
    let sum_rule_residual =
        (0..traj.len()).map(|i| u21[i].norm_sqr() + u22[i].norm_sqr() + commutator[i] - 1.0).collect();
    Ok(NoiseChannelStats { commutator, occupation, sum_rule_residual })
}

/// Frequency-domain evaluation of the commutator at sample `index`:
/// `Σ_x ∫ dω J_x(ω) |∫_0^t u_x(s) e^{i(ω - ω_ref)s} ds|²`, with the inner
/// integral by the trapezoidal rule on the trajectory grid. Markovian
/// channels contribute `κ ∫_0^t |u_x|² ds`.
///
/// `rules` gives the frequency quadrature for each structured channel.
pub fn spectral_commutator(traj: &GreenTrajectory, index: usize, rules: [Option<&Rule>; 2]) -> Result<f64> {
    if index >= traj.len() {
        return Err(Error::Grid(format!("sample {index} outside a trajectory of {} points", traj.len())));
    }
    let dt = traj.grid.dt;
    let channels = [(&traj.photon, traj.entry(PHONON, PHOTON)), (&traj.phonon, traj.entry(PHONON, PHONON))];
    let mut total = 0.0;
    for (x, (channel, series)) in channels.into_iter().enumerate() {
        let series = &series[..=index];
        match channel {
            BathChannel::Isolated => {}
            BathChannel::Markovian { kappa } => {
                let sq: Vec<f64> = series.iter().map(|z| z.norm_sqr()).collect();
                total += kappa * cumulative_trapezoid(&sq, dt)[index];
            }
            BathChannel::Structured(kernel) => {
                let rule = rules[x].ok_or_else(|| Error::InvalidArgument("missing frequency rule".into()))?;
                total += spectral_overlap(&kernel.source, kernel.shift.unwrap_or(0.0), series, dt, rule)?;
            }
        }
    }
    Ok(total)
}

fn spectral_overlap(density: &SpectralDensity, shift: f64, series: &[C64], dt: f64, rule: &Rule) -> Result<f64> {
    let weights: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&w, &q)| spectral_density(density, w).map(|j| q * j))
        .collect::<Result<_>>()?;
    let last = series.len() - 1;
    let terms = parallel::map(&rule.nodes, |&omega| {
        let step = C64::from_polar(1.0, (omega - shift) * dt);
        let mut phase = C64::new(1.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for (j, u) in series.iter().enumerate() {
            let w = if j == 0 || j == last { 0.5 } else { 1.0 };
            acc += *u * phase * w;
            phase *= step;
        }
        (acc * dt).norm_sqr()
    });
    Ok(weights.iter().zip(&terms).map(|(w, t)| w * t).sum())
}

/// `⟨b†b⟩(t) = |U21|² n_a0 + |U22|² n_b0 + ⟨V2†V2⟩(t)`.
pub fn phonon_number(traj: &GreenTrajectory, n_a0: f64, n_b0: f64, stats: &NoiseChannelStats) -> Result<Vec<f64>> {
    if !(n_a0 >= 0.0 && n_b0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("initial occupations must be >= 0 (got {n_a0}, {n_b0})")));
    }
    if stats.occupation.len() != traj.len() {
        return Err(Error::Grid(format!("stats have {} samples, trajectory {}", stats.occupation.len(), traj.len())));
    }
    let u21 = traj.entry(PHONON, PHOTON);
    let u22 = traj.entry(PHONON, PHONON);
    Ok((0..traj.len()).map(|i| u21[i].norm_sqr() * n_a0 + u22[i].norm_sqr() * n_b0 + stats.occupation[i]).collect())
}

/// Rabi period `π / |G̃|` of the transfer fidelity.
pub fn transfer_period(gtilde: f64) -> f64 {
    PI / gtilde.abs()
}

/// Maximum of `values` within each window `[k P, (k+1) P)`, `k < count`.
pub fn period_peaks(values: &[f64], grid: &TimeGrid, period: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let (lo, hi) = (k as f64 * period, (k + 1) as f64 * period);
            values
                .iter()
                .enumerate()
                .filter(|(i, _)| {
                    let t = grid.time(*i);
                    t >= lo && t < hi
                })
                .map(|(_, &v)| v)
                .fold(f64::NAN, f64::max)
        })
        .collect()
}
