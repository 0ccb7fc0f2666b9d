//! Hamiltonian builders for the photon-magnon-phonon system and its
//! effective photon-phonon reductions.

use serde::{Deserialize, Serialize};

use crate::fock::{annihilation, embed, mode_operators, CMatrix, FockConfig, OperatorMatrix, C64, MAGNON, PHONON, PHOTON};
use crate::{Error, Result};

/// Drive frequency used when parameters are specified directly by their
/// rotating-frame detunings. Only differences from it enter the models.
pub const REFERENCE_DRIVE_FREQUENCY: f64 = 1000.0;

/// Largest coupling (in units of omega_b) for which the second-order results
/// are considered valid.
pub const PERTURBATIVE_COUPLING_MAX: f64 = 0.15;

/// Required ratio |omega_b - Delta_m| / max(g, G).
pub const PERTURBATIVE_SEPARATION: f64 = 3.0;

/// Default dense cap for the spin-chain Hilbert space.
pub const SPIN_CHAIN_CAP: usize = 1 << 12;

/// Physical parameters, all in units of omega_b.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_a: f64,
    pub omega_m: f64,
    pub omega_b: f64,
    pub omega_d: f64,
    /// Photon-magnon coupling `g_ma`.
    pub g_ma: f64,
    /// Single-magnon magnomechanical coupling `g_mb`.
    pub g_mb: f64,
    /// Magnon drive amplitude.
    pub drive: f64,
    /// Linearization amplitude `M = |<m>|`.
    pub linearization: f64,
    /// Kerr coefficient.
    pub kerr: f64,
}

impl SystemParams {
    /// Parameters given by their rotating-frame detunings and the couplings
    /// `g` and `G` of the linearized model (with `M = 1`, so `g_mb = G`).
    pub fn from_detunings(delta_a: f64, delta_m: f64, g: f64, big_g: f64) -> Self {
        Self {
            omega_a: REFERENCE_DRIVE_FREQUENCY + delta_a,
            omega_m: REFERENCE_DRIVE_FREQUENCY + delta_m,
            omega_b: 1.0,
            omega_d: REFERENCE_DRIVE_FREQUENCY,
            g_ma: g,
            g_mb: big_g,
            drive: 0.0,
            linearization: 1.0,
            kerr: 0.0,
        }
    }

    pub fn delta_a(&self) -> f64 {
        self.omega_a - self.omega_d
    }

    pub fn delta_m(&self) -> f64 {
        self.omega_m - self.omega_d
    }

    pub fn g(&self) -> f64 {
        self.g_ma
    }

    /// Effective magnomechanical coupling `G = M g_mb`.
    pub fn big_g(&self) -> f64 {
        self.linearization * self.g_mb
    }

    pub fn with_delta_a(mut self, delta_a: f64) -> Self {
        self.omega_a = self.omega_d + delta_a;
        self
    }

    pub fn with_delta_m(mut self, delta_m: f64) -> Self {
        self.omega_m = self.omega_d + delta_m;
        self
    }

    /// Replace the magnon detuning by its Kerr-shifted value at the given
    /// magnon occupation.
    pub fn with_kerr_shift(self, magnon_occupation: f64) -> Self {
        let shifted = kerr_detuning(&self, magnon_occupation);
        self.with_delta_m(shifted)
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("omega_a", self.omega_a),
            ("omega_m", self.omega_m),
            ("omega_b", self.omega_b),
            ("omega_d", self.omega_d),
        ];
        for (name, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.linearization >= 0.0) {
            return Err(Error::InvalidArgument(format!("linearization amplitude must be >= 0, got {}", self.linearization)));
        }
        if (self.omega_b - self.delta_m()).abs() == 0.0 {
            return Err(Error::DegenerateDetuning("omega_b == Delta_m".into()));
        }
        Ok(())
    }

    pub fn is_perturbative(&self) -> bool {
        self.check_perturbative().is_ok()
    }

    pub fn check_perturbative(&self) -> Result<()> {
        let g = self.g().abs();
        let big_g = self.big_g().abs();
        let max = g.max(big_g);
        if max > PERTURBATIVE_COUPLING_MAX * self.omega_b * (1.0 + 1e-12) {
            return Err(Error::NonPerturbative(format!("max(g, G) = {max} > {PERTURBATIVE_COUPLING_MAX}")));
        }
        let sep = (self.omega_b - self.delta_m()).abs();
        if sep < PERTURBATIVE_SEPARATION * max {
            return Err(Error::NonPerturbative(format!(
                "|omega_b - Delta_m| = {sep} < {PERTURBATIVE_SEPARATION} max(g, G)"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubspaceKind {
    SingleExciton,
    DoubleExciton,
    NExciton(usize),
}

/// Photon-phonon conversion subspace with the magnon in vacuum, ordered by
/// descending photon number: `{|N00>, |(N-1)01>, ..., |00N>}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceSpec {
    pub kind: SubspaceKind,
    pub basis: Vec<[usize; 3]>,
}

impl SubspaceSpec {
    pub fn new(kind: SubspaceKind) -> Result<Self> {
        let n = match kind {
            SubspaceKind::SingleExciton => 1,
            SubspaceKind::DoubleExciton => 2,
            SubspaceKind::NExciton(n) if n >= 1 => n,
            SubspaceKind::NExciton(n) => {
                return Err(Error::InvalidArgument(format!("exciton number must be >= 1, got {n}")))
            }
        };
        let basis = (0..=n).map(|k| [n - k, 0, k]).collect();
        Ok(Self { kind, basis })
    }

    pub fn single() -> Self {
        Self::new(SubspaceKind::SingleExciton).expect("valid kind")
    }

    pub fn double() -> Self {
        Self::new(SubspaceKind::DoubleExciton).expect("valid kind")
    }

    pub fn excitations(&self) -> usize {
        self.basis[0][0] + self.basis[0][2]
    }

    pub fn indices(&self, config: &FockConfig) -> Result<Vec<usize>> {
        self.basis.iter().map(|labels| config.index(labels)).collect()
    }
}

fn check_three_mode(config: &FockConfig) -> Result<()> {
    if config.modes() != 3 {
        return Err(Error::InvalidDimension(format!("expected 3 modes (a, m, b), got {}", config.modes())));
    }
    Ok(())
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Free part `Delta_a a†a + Delta_m m†m + omega_b b†b` plus the
/// photon-magnon beam splitter, shared by both three-mode builders.
fn free_and_beam_splitter(params: &SystemParams, ops: &[OperatorMatrix]) -> CMatrix {
    let a = ops[PHOTON].entries();
    let m = ops[MAGNON].entries();
    let b = ops[PHONON].entries();
    let ad = a.adjoint();
    let md = m.adjoint();
    let bd = b.adjoint();
    (&ad * a) * re(params.delta_a())
        + (&md * m) * re(params.delta_m())
        + (&bd * b) * re(params.omega_b)
        + (a * &md + &ad * m) * re(params.g())
}

/// Rotating-frame Hamiltonian with the drive made time independent.
pub fn build_rotating(params: &SystemParams, config: &FockConfig) -> Result<OperatorMatrix> {
    check_three_mode(config)?;
    params.validate()?;
    let ops = mode_operators(config)?;
    let m = ops[MAGNON].entries();
    let b = ops[PHONON].entries();
    let md = m.adjoint();
    let h = free_and_beam_splitter(params, &ops)
        + (&md * m) * (b + b.adjoint()) * re(params.g_mb)
        + (&md - m) * C64::new(0.0, params.drive);
    OperatorMatrix::hermitian(h)
}

/// Linearized Hamiltonian `H0 + G(m† + m)(b + b†) + g(a m† + a† m)`.
pub fn build_linearized(params: &SystemParams, config: &FockConfig) -> Result<OperatorMatrix> {
    check_three_mode(config)?;
    params.validate()?;
    let ops = mode_operators(config)?;
    let m = ops[MAGNON].entries();
    let b = ops[PHONON].entries();
    let h = free_and_beam_splitter(params, &ops) + (m.adjoint() + m) * (b + b.adjoint()) * re(params.big_g());
    OperatorMatrix::hermitian(h)
}

/// Effective photon-phonon exchange `G̃(a b† + b a†)` on a two-mode space.
pub fn build_effective(gtilde: f64, config_ab: &FockConfig) -> Result<OperatorMatrix> {
    if config_ab.modes() != 2 {
        return Err(Error::InvalidDimension(format!("expected 2 modes (a, b), got {}", config_ab.modes())));
    }
    let a = embed(&annihilation(config_ab.dims()[0])?, 0, config_ab)?.into_entries();
    let b = embed(&annihilation(config_ab.dims()[1])?, 1, config_ab)?.into_entries();
    let h = (&a * b.adjoint() + &b * a.adjoint()) * re(gtilde);
    OperatorMatrix::hermitian(h)
}

/// Hopping amplitude between `|N-n+1, n-1>` and `|N-n, n>` in units of G̃.
pub fn block_coupling(n_excitations: usize, n: usize) -> f64 {
    ((n * (n_excitations + 1 - n)) as f64).sqrt()
}

/// The `(N+1)`-dimensional block of the effective Hamiltonian with `N`
/// photon+phonon excitations, in the basis `{|N0>, |(N-1)1>, ..., |0N>}`.
/// It equals `2 G̃ S_x` for spin `S = N/2`.
pub fn effective_block(n_excitations: usize, gtilde: f64) -> Result<OperatorMatrix> {
    if n_excitations < 1 {
        return Err(Error::InvalidArgument("exciton number must be >= 1".into()));
    }
    let dim = n_excitations + 1;
    let mut h = CMatrix::zeros(dim, dim);
    for n in 1..=n_excitations {
        let v = re(gtilde * block_coupling(n_excitations, n));
        h[(n - 1, n)] = v;
        h[(n, n - 1)] = v;
    }
    OperatorMatrix::new(h, true)
}

/// Open-ended XY chain with `N+1` sites and bond couplings `G̃ L_n / 2` on
/// `σx σx + σy σy`. Site `j` is bit `j` of the basis index; a raised bit
/// marks an excitation.
pub fn spin_chain(n_excitations: usize, gtilde: f64) -> Result<OperatorMatrix> {
    spin_chain_with_cap(n_excitations, gtilde, SPIN_CHAIN_CAP)
}

pub fn spin_chain_with_cap(n_excitations: usize, gtilde: f64, cap: usize) -> Result<OperatorMatrix> {
    if n_excitations < 1 {
        return Err(Error::InvalidArgument("exciton number must be >= 1".into()));
    }
    let sites = n_excitations + 1;
    if sites >= usize::BITS as usize || (1usize << sites) > cap {
        return Err(Error::Capacity(format!("2^{sites} exceeds the dense cap {cap}")));
    }
    let dim = 1usize << sites;
    let mut h = CMatrix::zeros(dim, dim);
    for state in 0..dim {
        for n in 1..=n_excitations {
            let (i, j) = (n - 1, n);
            let bi = (state >> i) & 1;
            let bj = (state >> j) & 1;
            if bi != bj {
                // (σxσx + σyσy)/2 = σ+σ- + σ-σ+ swaps antiparallel neighbours
                let flipped = state ^ (1 << i) ^ (1 << j);
                h[(flipped, state)] += re(gtilde * block_coupling(n_excitations, n));
            }
        }
    }
    OperatorMatrix::new(h, true)
}

/// Kerr-shifted magnon detuning `Delta_m + 2 K <m†m>`.
pub fn kerr_detuning(params: &SystemParams, magnon_occupation: f64) -> f64 {
    params.delta_m() + 2.0 * params.kerr * magnon_occupation
}
