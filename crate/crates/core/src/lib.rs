//! Simulation toolkit for magnon-assisted photon-phonon conversion in a
//! cavity magnomechanical system.
//!
//! The crate is organised bottom-up:
//!
//! - [`fock`]: truncated Fock spaces, ladder operators, tensor embedding and
//!   Hermitian eigendecomposition.
//! - [`hamiltonians`]: rotating-frame, linearized and effective Hamiltonians,
//!   N-exciton blocks, the equivalent XY spin chain and the Kerr-shifted
//!   magnon detuning.
//! - [`perturbation`]: second-order shifts and couplings, plus an
//!   avoided-crossing scanner on the full Hamiltonian.
//! - [`lindblad`]: Markovian master-equation propagation and state fidelity.
//! - [`environments`]: spectral densities, correlation kernels, thermal
//!   occupations and Markovian rates.
//! - [`langevin`]: non-Markovian Dyson equations for the 2x2 Green's function,
//!   transfer fidelity, noise channel and phonon-number reconstruction.
//! - [`scenarios`]: the preset parameter sets used by the figure runners.
//!
//! All energies, rates and couplings are in units of the phonon frequency
//! (`omega_b = 1`); times are in units of `1 / omega_b`.
//!
//! Data-parallel loops (grid scans, scenario sets, long memory sums) run on
//! rayon when the default `parallel` feature is enabled and fall back to plain
//! iterators otherwise. Both paths produce bit-identical results.

pub mod environments;
pub mod error;
pub mod fock;
pub mod hamiltonians;
pub mod langevin;
pub mod lindblad;
pub mod parallel;
pub mod perturbation;
pub mod quadrature;
pub mod scenarios;

pub use error::{Error, Result};
pub use fock::{C64, CMatrix};
