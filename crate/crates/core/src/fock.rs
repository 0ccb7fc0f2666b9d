//! Truncated multimode Fock spaces and dense operators on them.
//!
//! Mode order is fixed as (photon `a`, magnon `m`, phonon `b`) for the full
//! model and (photon, phonon) for the effective model. Basis states are laid
//! out row-major: the last mode varies fastest.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Absolute Hermiticity tolerance for operators flagged Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub const PHOTON: usize = 0;
pub const MAGNON: usize = 1;
pub const PHONON: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockConfig {
    dims: Vec<usize>,
}

impl FockConfig {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidDimension("a Fock space needs at least one mode".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension(format!("mode truncation {d} < 2")));
        }
        Ok(Self { dims: dims.to_vec() })
    }

    /// Photon, magnon, phonon truncations.
    pub fn three_mode(a: usize, m: usize, b: usize) -> Result<Self> {
        Self::new(&[a, m, b])
    }

    /// Photon, phonon truncations for the effective model.
    pub fn two_mode(a: usize, b: usize) -> Result<Self> {
        Self::new(&[a, b])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn modes(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Flat index of the occupation labels `labels` (one per mode).
    pub fn index(&self, labels: &[usize]) -> Result<usize> {
        if labels.len() != self.dims.len() {
            return Err(Error::InvalidDimension(format!(
                "{} labels for a {}-mode space",
                labels.len(),
                self.dims.len()
            )));
        }
        let mut idx = 0;
        for (&n, &d) in labels.iter().zip(&self.dims) {
            if n >= d {
                return Err(Error::InvalidDimension(format!("occupation {n} exceeds truncation {d}")));
            }
            idx = idx * d + n;
        }
        Ok(idx)
    }

    pub fn labels(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub fn basis_state(&self, labels: &[usize]) -> Result<StateVector> {
        StateVector::basis(self.total_dim(), self.index(labels)?)
    }
}

/// Dense complex square operator.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    entries: CMatrix,
    hermitian_hint: bool,
}

impl OperatorMatrix {
    /// Wrap `entries`; when `hermitian_hint` is set the matrix must be
    /// Hermitian within [`HERMITIAN_TOL`].
    pub fn new(entries: CMatrix, hermitian_hint: bool) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidDimension(format!(
                "operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(Error::InvalidDimension("empty operator".into()));
        }
        let op = Self { entries, hermitian_hint };
        if hermitian_hint {
            let err = op.hermiticity_error();
            if err > HERMITIAN_TOL {
                return Err(Error::ContractViolation(format!(
                    "operator flagged Hermitian deviates by {err:.3e}"
                )));
            }
        }
        Ok(op)
    }

    /// Build a Hermitian operator, symmetrising away rounding noise first.
    pub(crate) fn hermitian(entries: CMatrix) -> Result<Self> {
        let sym = (&entries + entries.adjoint()).scale(0.5);
        let skew = max_abs(&(&entries - entries.adjoint()));
        if skew > HERMITIAN_TOL {
            return Err(Error::ContractViolation(format!("builder produced non-Hermitian matrix ({skew:.3e})")));
        }
        Self::new(sym, true)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim, dim), true)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    /// max |A - A†|.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.entries - self.entries.adjoint()))
    }

    pub fn dagger(&self) -> Self {
        Self { entries: self.entries.adjoint(), hermitian_hint: self.hermitian_hint }
    }

    pub fn commutator(&self, other: &Self) -> Result<CMatrix> {
        self.check_same_dim(other)?;
        Ok(&self.entries * &other.entries - &other.entries * &self.entries)
    }

    pub fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidDimension(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(())
    }

    /// Submatrix on the given basis indices, in the given order.
    pub fn restrict(&self, basis: &[usize]) -> CMatrix {
        CMatrix::from_fn(basis.len(), basis.len(), |i, j| self.entries[(basis[i], basis[j])])
    }
}

/// Normalised complex state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("state vector must have a finite nonzero norm".into()));
        }
        Ok(Self { amplitudes: amplitudes.unscale(norm) })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidDimension(format!("basis index {index} >= {dim}")));
        }
        let mut v = CVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidDimension(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }
}

/// Truncated ladder operator with `(n, n+1)` entries `sqrt(n+1)`.
pub fn annihilation(dim: usize) -> Result<OperatorMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("ladder operator needs dim >= 2, got {dim}")));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for n in 0..dim - 1 {
        m[(n, n + 1)] = C64::new(((n + 1) as f64).sqrt(), 0.0);
    }
    OperatorMatrix::new(m, false)
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Embed a single-mode operator at `mode_index` of `config`.
pub fn embed(op: &OperatorMatrix, mode_index: usize, config: &FockConfig) -> Result<OperatorMatrix> {
    let dims = config.dims();
    if mode_index >= dims.len() {
        return Err(Error::IndexOutOfRange { index: mode_index, modes: dims.len() });
    }
    if op.dim() != dims[mode_index] {
        return Err(Error::InvalidDimension(format!(
            "operator dim {} does not match mode {mode_index} truncation {}",
            op.dim(),
            dims[mode_index]
        )));
    }
    let mut out = CMatrix::identity(1, 1);
    for (i, &d) in dims.iter().enumerate() {
        let factor = if i == mode_index { op.entries().clone() } else { CMatrix::identity(d, d) };
        out = kron(&out, &factor);
    }
    OperatorMatrix::new(out, op.hermitian_hint())
}

/// Embedded annihilation operators for every mode of `config`.
pub fn mode_operators(config: &FockConfig) -> Result<Vec<OperatorMatrix>> {
    config
        .dims()
        .iter()
        .enumerate()
        .map(|(i, &d)| embed(&annihilation(d)?, i, config))
        .collect()
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector
/// columns.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigensystem {
    /// `exp(-i H t)` assembled from the spectral decomposition.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let phases = CVector::from_iterator(self.values.len(), self.values.iter().map(|&e| C64::from_polar(1.0, -e * t)));
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        scaled * self.vectors.adjoint()
    }
}

pub fn hermitian_eigs(op: &OperatorMatrix) -> Result<Eigensystem> {
    let err = op.hermiticity_error();
    if !op.hermitian_hint() || err > HERMITIAN_TOL {
        return Err(Error::ContractViolation(format!(
            "hermitian_eigs needs a Hermitian operator (hint = {}, deviation {err:.3e})",
            op.hermitian_hint()
        )));
    }
    let eig = SymmetricEigen::new(op.entries().clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(op.dim(), op.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigensystem { values, vectors })
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn re(m: &CMatrix) -> DMatrix<f64> {
        m.map(|z| z.re)
    }

    #[test]
    fn annihilation_small_cases() {
        let a2 = annihilation(2).unwrap();
        assert_eq!(re(a2.entries()), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let a3 = annihilation(3).unwrap();
        assert_abs_diff_eq!(a3.get(0, 1).re, 1.0);
        assert_abs_diff_eq!(a3.get(1, 2).re, 2f64.sqrt());
        let nonzero = a3.entries().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 2);
        assert!(matches!(annihilation(1), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn number_operator_spectrum() {
        let a = annihilation(4).unwrap();
        let n = OperatorMatrix::new(a.entries().adjoint() * a.entries(), true).unwrap();
        let eig = hermitian_eigs(&n).unwrap();
        for (k, v) in eig.values.iter().enumerate() {
            assert_abs_diff_eq!(*v, k as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn truncated_canonical_commutator() {
        let d = 6;
        let a = annihilation(d).unwrap();
        let comm = a.commutator(&a.dagger()).unwrap();
        for i in 0..d - 1 {
            for j in 0..d - 1 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(comm[(i, j)].re, want, epsilon = 1e-12);
                assert_abs_diff_eq!(comm[(i, j)].im, 0.0);
            }
        }
        // only the top level feels the truncation
        assert_abs_diff_eq!(comm[(d - 1, d - 1)].re, -((d - 1) as f64), epsilon = 1e-12);
    }

    #[test]
    fn embed_identity_and_basis_action() {
        let cfg = FockConfig::three_mode(2, 2, 2).unwrap();
        let id = embed(&OperatorMatrix::identity(2).unwrap(), 1, &cfg).unwrap();
        assert_eq!(id.entries(), &CMatrix::identity(8, 8));

        let b = embed(&annihilation(2).unwrap(), PHONON, &cfg).unwrap();
        let ket001 = cfg.basis_state(&[0, 0, 1]).unwrap();
        let out = b.entries() * ket001.amplitudes();
        let ket000 = cfg.basis_state(&[0, 0, 0]).unwrap();
        assert_abs_diff_eq!((out - ket000.amplitudes()).norm(), 0.0);
    }

    #[test]
    fn distinct_modes_commute() {
        let cfg = FockConfig::three_mode(3, 2, 4).unwrap();
        let ops = mode_operators(&cfg).unwrap();
        let c = ops[PHOTON].commutator(&ops[PHONON]).unwrap();
        assert_eq!(max_abs(&c), 0.0);
    }

    #[test]
    fn embed_errors() {
        let cfg = FockConfig::three_mode(2, 3, 2).unwrap();
        let a = annihilation(2).unwrap();
        assert!(matches!(embed(&a, 3, &cfg), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(embed(&a, 1, &cfg), Err(Error::InvalidDimension(_))));
        assert!(FockConfig::new(&[2, 1]).is_err());
    }

    #[test]
    fn index_roundtrip() {
        let cfg = FockConfig::three_mode(3, 4, 5).unwrap();
        assert_eq!(cfg.total_dim(), 60);
        for i in 0..cfg.total_dim() {
            assert_eq!(cfg.index(&cfg.labels(i)).unwrap(), i);
        }
        assert_eq!(cfg.index(&[1, 0, 0]).unwrap(), 20);
    }

    #[test]
    fn pauli_x_and_diagonal_eigs() {
        let sx = OperatorMatrix::new(
            CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
            true,
        )
        .unwrap();
        let e = hermitian_eigs(&sx).unwrap();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);

        let diag = [3.0, -1.0, 2.5, 0.0];
        let d = OperatorMatrix::new(CMatrix::from_diagonal(&CVector::from_iterator(4, diag.iter().map(|&x| C64::new(x, 0.0)))), true).unwrap();
        let e = hermitian_eigs(&d).unwrap();
        assert_eq!(e.values, vec![-1.0, 0.0, 2.5, 3.0]);
    }

    #[test]
    fn non_hermitian_rejected() {
        let a = annihilation(3).unwrap();
        assert!(matches!(hermitian_eigs(&a), Err(Error::ContractViolation(_))));
        let bad = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.0)]);
        assert!(OperatorMatrix::new(bad, true).is_err());
    }

    #[test]
    fn state_vector_normalises() {
        let v = StateVector::new(CVector::from_vec(vec![C64::new(3.0, 0.0), C64::new(0.0, 4.0)])).unwrap();
        assert_abs_diff_eq!(v.amplitudes().norm(), 1.0, epsilon = 1e-15);
        assert!(StateVector::new(CVector::zeros(3)).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_matrix(dim: usize, seed: &[f64]) -> CMatrix {
            CMatrix::from_fn(dim, dim, |i, j| {
                let k = (i * dim + j) * 2;
                C64::new(seed[k % seed.len()], seed[(k + 1) % seed.len()])
            })
        }

        proptest! {
            #[test]
            fn embed_preserves_adjoint(seed in prop::collection::vec(-1.0f64..1.0, 18), mode in 0usize..3) {
                let cfg = FockConfig::three_mode(3, 3, 2).unwrap();
                let d = cfg.dims()[mode];
                let op = OperatorMatrix::new(random_matrix(d, &seed), false).unwrap();
                let lhs = embed(&op, mode, &cfg).unwrap().dagger();
                let rhs = embed(&op.dagger(), mode, &cfg).unwrap();
                prop_assert!(max_abs(&(lhs.entries() - rhs.entries())) < 1e-15);
            }

            #[test]
            fn eigs_reconstruct(seed in prop::collection::vec(-1.0f64..1.0, 72)) {
                let m = random_matrix(6, &seed);
                let h = OperatorMatrix::new((&m + m.adjoint()).scale(0.5), true).unwrap();
                let e = hermitian_eigs(&h).unwrap();
                prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
                let v = &e.vectors;
                let ortho = max_abs(&(v.adjoint() * v - CMatrix::identity(6, 6)));
                prop_assert!(ortho < 1e-10);
                let lam = CMatrix::from_diagonal(&CVector::from_iterator(6, e.values.iter().map(|&x| C64::new(x, 0.0))));
                let rec = v * lam * v.adjoint();
                let rel = (&rec - h.entries()).norm() / h.entries().norm().max(1e-300);
                prop_assert!(rel < 1e-9);
                let scale = e.values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                for (i, &l) in e.values.iter().enumerate() {
                    let col = v.column(i);
                    let resid = (h.entries() * col - col * C64::new(l, 0.0)).norm();
                    prop_assert!(resid <= 1e-9 * scale.max(1.0));
                }
            }
        }
    }
}
