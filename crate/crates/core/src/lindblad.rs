//! Markovian master-equation propagation and state fidelity.

use nalgebra::DMatrix;

use crate::fock::{hermitian_eigenvalues, max_abs, CMatrix, OperatorMatrix, StateVector, C64};
use crate::{Error, Result};

/// Default fixed step, in units of `1 / ω_b`. Fourth-order Runge–Kutta is
/// not positivity preserving; at `1e-2` a pure initial state picks up
/// eigenvalues near `-1e-8` within three Rabi periods of the full model.
pub const DEFAULT_STEP: f64 = 5e-3;

/// Trace drift tolerated over a run before the step is rejected.
pub const TRACE_DRIFT_TOL: f64 = 1e-6;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;
const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::InvalidDimension(format!("density matrix must be square, got {}x{}", entries.nrows(), entries.ncols())));
        }
        let herm = max_abs(&(&entries - entries.adjoint()));
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("density matrix not Hermitian (deviation {herm:.3e})")));
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("density matrix trace {trace} differs from 1")));
        }
        let symmetric = (&entries + entries.adjoint()) * C64::new(0.5, 0.0);
        let min = hermitian_eigenvalues(&symmetric).into_iter().fold(f64::INFINITY, f64::min);
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("density matrix has eigenvalue {min:.3e}")));
        }
        Ok(Self { entries })
    }

    pub fn pure(state: &StateVector) -> Self {
        let psi = state.amplitudes();
        Self { entries: psi * psi.adjoint() }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("dimension must be positive".into()));
        }
        Ok(Self { entries: CMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0) })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        let diff = &self.entries - &other.entries;
        Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum::<f64>())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecayRates {
    pub kappa_a: f64,
    pub kappa_m: f64,
    pub gamma_b: f64,
}

impl DecayRates {
    pub fn new(kappa_a: f64, kappa_m: f64, gamma_b: f64) -> Result<Self> {
        let rates = Self { kappa_a, kappa_m, gamma_b };
        rates.validate()?;
        Ok(rates)
    }

    /// `κ_a = κ_m = κ`, `γ_b = ratio κ`.
    pub fn uniform(kappa: f64, phonon_ratio: f64) -> Result<Self> {
        Self::new(kappa, kappa, phonon_ratio * kappa)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kappa_a", self.kappa_a), ("kappa_m", self.kappa_m), ("gamma_b", self.gamma_b)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be a finite rate >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn check_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidDimension(format!("dimension mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// `(2 O ρ O† - O†O ρ - ρ O†O) / 2`.
pub fn dissipator(op: &OperatorMatrix, rho: &DensityMatrix) -> Result<CMatrix> {
    check_dim(op.dim(), rho.dim())?;
    let o = op.entries();
    let od = o.adjoint();
    let number = &od * o;
    let r = rho.entries();
    Ok((o * r * &od) - (&number * r + r * &number) * C64::new(0.5, 0.0))
}

/// Nonzero entries of a jump operator.
struct SparseJump {
    rate: f64,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseJump {
    fn new(op: &CMatrix, rate: f64) -> Self {
        let mut entries = Vec::new();
        for c in 0..op.ncols() {
            for r in 0..op.nrows() {
                let v = op[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    entries.push((r, c, v));
                }
            }
        }
        Self { rate, entries }
    }

    /// `out += rate O ρ O†`.
    fn add_sandwich(&self, rho: &CMatrix, scratch: &mut CMatrix, out: &mut CMatrix) {
        let d = rho.nrows();
        scratch.fill(C64::new(0.0, 0.0));
        // scratch = O ρ
        for &(i, k, v) in &self.entries {
            for col in 0..d {
                scratch[(i, col)] += v * rho[(k, col)];
            }
        }
        // out += rate scratch O†, with (X O†)_{ij} = Σ_l X_il conj(O_jl)
        for &(j, l, w) in &self.entries {
            let w = w.conj() * self.rate;
            for row in 0..d {
                out[(row, j)] += scratch[(row, l)] * w;
            }
        }
    }
}

struct Liouvillian {
    effective: CMatrix,
    jumps: Vec<SparseJump>,
}

impl Liouvillian {
    fn new(h: &OperatorMatrix, collapse: &[(OperatorMatrix, f64)]) -> Self {
        let mut effective = h.entries().clone();
        let mut jumps = Vec::new();
        for (op, rate) in collapse {
            if *rate == 0.0 {
                continue;
            }
            let o = op.entries();
            effective -= (o.adjoint() * o) * C64::new(0.0, 0.5 * rate);
            jumps.push(SparseJump::new(o, *rate));
        }
        Self { effective, jumps }
    }

    /// `-i (H_eff ρ - ρ H_eff†) + Σ κ O ρ O†`.
    fn apply(&self, rho: &CMatrix, scratch: &mut CMatrix, out: &mut CMatrix) {
        let a = &self.effective * rho;
        let minus_i = C64::new(0.0, -1.0);
        out.copy_from(&((&a - a.adjoint()) * minus_i));
        for jump in &self.jumps {
            jump.add_sandwich(rho, scratch, out);
        }
    }
}

fn check_times(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Grid("empty time grid".into()));
    }
    if t_grid[0] < 0.0 || !t_grid.iter().all(|t| t.is_finite()) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Grid("times must be finite, >= 0 and strictly ascending".into()));
    }
    Ok(())
}

/// Fourth-order Runge–Kutta propagation of
/// `ρ' = -i[H, ρ] + Σ κ_i L[O_i] ρ`, sampled at `t_grid` (starting from
/// `rho0` at `t = 0`). Steps are at most `dt`, shortened so that every sample
/// falls on a step boundary.
pub fn evolve_master(
    h: &OperatorMatrix,
    collapse: &[(OperatorMatrix, f64)],
    rho0: &DensityMatrix,
    t_grid: &[f64],
    dt: f64,
) -> Result<Vec<DensityMatrix>> {
    check_dim(h.dim(), rho0.dim())?;
    for (op, rate) in collapse {
        check_dim(op.dim(), rho0.dim())?;
        if !(*rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("collapse rate must be >= 0, got {rate}")));
        }
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {dt}")));
    }
    check_times(t_grid)?;

    let lv = Liouvillian::new(h, collapse);
    let d = rho0.dim();
    let zero = || DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    let (mut k1, mut k2, mut k3, mut k4) = (zero(), zero(), zero(), zero());
    let mut scratch = zero();
    let mut stage = zero();
    let mut rho = rho0.entries.clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                lv.apply(&rho, &mut scratch, &mut k1);
                stage.copy_from(&rho);
                add_scaled(&mut stage, C64::new(0.5 * h, 0.0), &k1);
                lv.apply(&stage, &mut scratch, &mut k2);
                stage.copy_from(&rho);
                add_scaled(&mut stage, C64::new(0.5 * h, 0.0), &k2);
                lv.apply(&stage, &mut scratch, &mut k3);
                stage.copy_from(&rho);
                add_scaled(&mut stage, C64::new(h, 0.0), &k3);
                lv.apply(&stage, &mut scratch, &mut k4);
                let w = C64::new(h / 6.0, 0.0);
                add_scaled(&mut rho, w, &k1);
                add_scaled(&mut rho, w * 2.0, &k2);
                add_scaled(&mut rho, w * 2.0, &k3);
                add_scaled(&mut rho, w, &k4);
            }
        }
        t = target;
        let drift = (rho.trace() - C64::new(1.0, 0.0)).norm();
        if drift > TRACE_DRIFT_TOL {
            return Err(Error::StepSize { drift });
        }
        out.push(DensityMatrix::new(rho.clone())?);
    }
    Ok(out)
}

/// `dst += alpha src`.
fn add_scaled(dst: &mut CMatrix, alpha: C64, src: &CMatrix) {
    dst.iter_mut().zip(src.iter()).for_each(|(d, s)| *d += *s * alpha);
}

/// `√⟨φ|ρ|φ⟩`.
pub fn state_fidelity(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    check_dim(rho.dim(), target.dim())?;
    let phi = target.amplitudes();
    let value = (phi.adjoint() * rho.entries() * phi)[(0, 0)].re;
    Ok(value.max(0.0).sqrt().min(1.0))
}

/// `exp(-iHt) ρ exp(iHt)` by eigendecomposition.
pub fn unitary_evolve(h: &OperatorMatrix, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    check_dim(h.dim(), rho0.dim())?;
    let eig = crate::fock::hermitian_eigs(h)?;
    let u = eig.propagator(t);
    let rho = &u * rho0.entries() * u.adjoint();
    DensityMatrix::new((&rho + rho.adjoint()) * C64::new(0.5, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{annihilation, embed, FockConfig};
    use crate::hamiltonians::build_effective;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn random_density(dim: usize, seed: &[f64]) -> DensityMatrix {
        let mut a = CMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                let k = (r * dim + c) * 2;
                a[(r, c)] = C64::new(seed[k % seed.len()], seed[(k + 1) % seed.len()]);
            }
        }
        let mut rho = &a * a.adjoint() + CMatrix::identity(dim, dim) * C64::new(1e-3, 0.0);
        let tr = rho.trace();
        rho /= tr;
        DensityMatrix::new((&rho + rho.adjoint()) * C64::new(0.5, 0.0)).unwrap()
    }

    #[test]
    fn dissipator_examples() {
        let a = annihilation(2).unwrap();
        let vac = DensityMatrix::pure(&StateVector::basis(2, 0).unwrap());
        assert!(max_abs(&dissipator(&a, &vac).unwrap()) == 0.0);
        let one = DensityMatrix::pure(&StateVector::basis(2, 1).unwrap());
        let d = dissipator(&a, &one).unwrap();
        assert_abs_diff_eq!(d[(0, 0)].re, 1.0);
        assert_abs_diff_eq!(d[(1, 1)].re, -1.0);
        assert_eq!(d[(0, 1)], C64::new(0.0, 0.0));
        let three = annihilation(3).unwrap();
        assert!(matches!(dissipator(&three, &one), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn fidelity_examples() {
        let phi = StateVector::basis(4, 2).unwrap();
        assert_abs_diff_eq!(state_fidelity(&DensityMatrix::pure(&phi), &phi).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(state_fidelity(&DensityMatrix::maximally_mixed(4).unwrap(), &phi).unwrap(), 0.5, epsilon = 1e-15);
        let other = DensityMatrix::pure(&StateVector::basis(4, 1).unwrap());
        assert_eq!(state_fidelity(&other, &phi).unwrap(), 0.0);
        assert!(state_fidelity(&other, &StateVector::basis(3, 0).unwrap()).is_err());
    }

    #[test]
    fn density_invariants_enforced() {
        let mut m = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(1, 0)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_ok());
        let neg = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.1, 0.0), C64::new(-0.1, 0.0)]));
        assert!(DensityMatrix::new(neg).is_err());
        assert!(DensityMatrix::new(CMatrix::identity(2, 2)).is_err());
        assert!(DecayRates::new(1e-3, -1e-3, 0.0).is_err());
    }

    #[test]
    fn closed_rabi_transfer() {
        let g = 0.02;
        let cfg = FockConfig::two_mode(2, 2).unwrap();
        let h = build_effective(g, &cfg).unwrap();
        let start = DensityMatrix::pure(&cfg.basis_state(&[1, 0]).unwrap());
        let target = cfg.basis_state(&[0, 1]).unwrap();
        let t = std::f64::consts::PI / (2.0 * g);
        let traj = evolve_master(&h, &[], &start, &[t], DEFAULT_STEP).unwrap();
        assert!(state_fidelity(&traj[0], &target).unwrap() >= 1.0 - 1e-6);
    }

    #[test]
    fn zero_rates_match_unitary() {
        let g = 0.05;
        let cfg = FockConfig::two_mode(3, 3).unwrap();
        let h = build_effective(g, &cfg).unwrap();
        let start = random_density(9, &[0.3, -0.2, 0.7, 0.1, -0.5, 0.9, 0.4]);
        let a = embed(&annihilation(3).unwrap(), 0, &cfg).unwrap();
        let period = std::f64::consts::PI / g;
        let times: Vec<f64> = (1..=12).map(|k| k as f64 * period / 4.0).collect();
        let traj = evolve_master(&h, &[(a, 0.0)], &start, &times, DEFAULT_STEP).unwrap();
        for (rho, &t) in traj.iter().zip(&times) {
            let exact = unitary_evolve(&h, &start, t).unwrap();
            assert!(rho.trace_distance(&exact).unwrap() <= 1e-6);
        }
    }

    #[test]
    fn single_mode_decay() {
        let kappa = 0.1;
        let cfg = FockConfig::new(&[3]).unwrap();
        let a = annihilation(3).unwrap();
        let h = OperatorMatrix::identity(3).unwrap();
        let start = DensityMatrix::pure(&cfg.basis_state(&[1]).unwrap());
        let times = [1.0, 5.0, 10.0];
        let traj = evolve_master(&h, &[(a, kappa)], &start, &times, DEFAULT_STEP).unwrap();
        for (rho, t) in traj.iter().zip(times) {
            assert_abs_diff_eq!(rho.entries()[(1, 1)].re, (-kappa * t).exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let h = OperatorMatrix::identity(2).unwrap();
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(matches!(evolve_master(&h, &[], &rho, &[1.0, 0.5], 0.01), Err(Error::Grid(_))));
        assert!(matches!(evolve_master(&h, &[], &rho, &[], 0.01), Err(Error::Grid(_))));
        let big = OperatorMatrix::identity(3).unwrap();
        assert!(matches!(evolve_master(&big, &[], &rho, &[1.0], 0.01), Err(Error::InvalidDimension(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn dissipator_is_traceless(seed in proptest::collection::vec(-1.0f64..1.0, 32)) {
            let rho = random_density(4, &seed);
            let a = annihilation(4).unwrap();
            let d = dissipator(&a, &rho).unwrap();
            prop_assert!(d.trace().norm() < 1e-12);
            let d = dissipator(&a.dagger(), &rho).unwrap();
            prop_assert!(d.trace().norm() < 1e-12);
        }

        #[test]
        fn damped_evolution_stays_physical(seed in proptest::collection::vec(-1.0f64..1.0, 24), kappa in 0.0f64..0.2) {
            let cfg = FockConfig::two_mode(2, 2).unwrap();
            let h = build_effective(0.1, &cfg).unwrap();
            let a = embed(&annihilation(2).unwrap(), 0, &cfg).unwrap();
            let rho = random_density(4, &seed);
            let traj = evolve_master(&h, &[(a, kappa)], &rho, &[5.0, 10.0], 0.05).unwrap();
            for r in &traj {
                prop_assert!((r.trace().re - 1.0).abs() < 1e-10);
            }
        }
    }
}
