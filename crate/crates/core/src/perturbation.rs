//! Second-order perturbative results for the linearized Hamiltonian and their
//! numerical validation from avoided crossings of the full spectrum.

use crate::fock::{hermitian_eigs, CMatrix, CVector, FockConfig, StateVector, C64};
use crate::hamiltonians::{build_linearized, SubspaceSpec, SystemParams};
use crate::parallel;
use crate::{Error, Result};

/// Denominators smaller than this are treated as degenerate.
const DEGENERACY_EPS: f64 = 1e-12;

/// Default Δ_a grid for crossing scans.
pub const DEFAULT_GRID: (f64, f64, usize) = (0.9, 1.1, 401);

/// Golden-section tolerance on Δ_a. Well below 1e-6 so that δ stays
/// resolved in the weak-coupling regime, where |δ| ~ 1e-5.
pub const GOLDEN_TOL: f64 = 1e-9;

fn denom(x: f64, what: &str) -> Result<f64> {
    if x.abs() < DEGENERACY_EPS {
        return Err(Error::DegenerateDetuning(format!("{what} vanishes")));
    }
    Ok(x)
}

/// Second-order shifts `(ε1, ε2)` of `|n l k>` and `|(n-1) l (k+1)>`.
///
/// The counter-rotating term of ε2 uses `(k + l + 2)`, the count obtained by
/// summing the two magnon-phonon pair paths out of `|(n-1) l (k+1)>`.
pub fn energy_shifts(params: &SystemParams, n: usize, l: usize, k: usize) -> Result<(f64, f64)> {
    params.check_perturbative()?;
    let g2 = params.g().powi(2);
    let big_g2 = params.big_g().powi(2);
    let wb = params.omega_b;
    let dam = denom(params.delta_a() - params.delta_m(), "Delta_a - Delta_m")?;
    let bm = denom(wb - params.delta_m(), "omega_b - Delta_m")?;
    let bp = denom(wb + params.delta_m(), "omega_b + Delta_m")?;
    let (n, l, k) = (n as f64, l as f64, k as f64);
    let eps1 = (n - l) * g2 / dam + (k - l) * big_g2 / bm - (l + k + 1.0) * big_g2 / bp;
    let eps2 = (n - l - 1.0) * g2 / dam + (k - l + 1.0) * big_g2 / bm - (k + l + 2.0) * big_g2 / bp;
    Ok((eps1, eps2))
}

/// Fock-independent offset δ of the avoided crossing from Δ_a = ω_b.
pub fn crossing_shift(params: &SystemParams) -> Result<f64> {
    params.check_perturbative()?;
    let wb = params.omega_b;
    let bm = denom(wb - params.delta_m(), "omega_b - Delta_m")?;
    let bp = denom(wb + params.delta_m(), "omega_b + Delta_m")?;
    let (g2, big_g2) = (params.g().powi(2), params.big_g().powi(2));
    Ok((big_g2 - g2) / bm - big_g2 / bp)
}

/// Effective photon-phonon coupling `G̃ = G g / (ω_b - Δ_m)` (signed).
pub fn gtilde(params: &SystemParams) -> Result<f64> {
    params.check_perturbative()?;
    let bm = denom(params.omega_b - params.delta_m(), "omega_b - Delta_m")?;
    Ok(params.big_g() * params.g() / bm)
}

/// Coupling between `|n l k>` and `|(n-1) l (k+1)>`: `sqrt(n (k+1)) G̃`.
pub fn effective_coupling(params: &SystemParams, n: usize, k: usize) -> Result<f64> {
    Ok(((n * (k + 1)) as f64).sqrt() * gtilde(params)?)
}

/// Amplitude `<00N| exp(-i H_eff^(N) t) |N00>` for the `N`-excitation block,
/// `(-i sin(G̃ t))^N`.
pub fn transfer_amplitude(n_excitations: usize, gtilde: f64, t: f64) -> C64 {
    let base = C64::new(0.0, -(gtilde * t).sin());
    base.powu(n_excitations as u32)
}

/// Closed-form `exp(-i H_eff^(2) t)` in the basis `{|200>, |101>, |002>}`.
pub fn double_exciton_propagator(gtilde: f64, t: f64) -> CMatrix {
    let (s, c) = (2.0 * gtilde * t).sin_cos();
    let edge = C64::new(0.0, -s / std::f64::consts::SQRT_2);
    let half = |x: f64| C64::new(0.5 * x, 0.0);
    CMatrix::from_row_slice(
        3,
        3,
        &[half(c + 1.0), edge, half(c - 1.0), edge, half(2.0 * c), edge, half(c - 1.0), edge, half(c + 1.0)],
    )
}

/// Zero-energy state `(|002> - |200>)/√2` of the double-exciton block.
pub fn double_exciton_dark_state() -> StateVector {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::new(CVector::from_vec(vec![C64::new(-r, 0.0), C64::new(0.0, 0.0), C64::new(r, 0.0)]))
        .expect("normalised by construction")
}

/// Avoided-crossing measurement on the full linearized Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossingResult {
    /// Δ_a* − ω_b.
    pub delta_num: f64,
    /// Half the minimal gap between the outermost tracked branches.
    pub gtilde_num: f64,
    /// Eigenlevel indices (ascending energy) of the two branches at Δ_a*.
    pub branch_indices: (usize, usize),
}

#[derive(Clone, Debug)]
struct PointSpectrum {
    values: Vec<f64>,
    overlaps: Vec<f64>,
}

#[derive(Clone, Debug)]
struct Branches {
    selected: Vec<usize>,
    gap: f64,
    min_overlap: f64,
}

fn spectrum_at(params: &SystemParams, delta_a: f64, config: &FockConfig, basis: &[usize]) -> Result<PointSpectrum> {
    let h = build_linearized(&params.with_delta_a(delta_a), config)?;
    let eig = hermitian_eigs(&h)?;
    let overlaps = (0..eig.values.len())
        .map(|j| basis.iter().map(|&s| eig.vectors[(s, j)].norm_sqr()).sum())
        .collect();
    Ok(PointSpectrum { values: eig.values, overlaps })
}

/// Pick the `k` levels with the largest subspace weight, preferring the
/// previous selection among near-ties.
fn select(spec: &PointSpectrum, k: usize, previous: Option<&[usize]>) -> Branches {
    let mut order: Vec<usize> = (0..spec.overlaps.len()).collect();
    let tie = 1e-9;
    order.sort_by(|&i, &j| spec.overlaps[j].total_cmp(&spec.overlaps[i]).then(i.cmp(&j)));
    // near-ties straddling the cut keep the previous branch
    if let Some(prev) = previous {
        let cut = spec.overlaps[order[k - 1]];
        let near = |i: usize| (spec.overlaps[i] - cut).abs() <= tie;
        let band: Vec<usize> = order.iter().copied().filter(|&i| near(i)).collect();
        let first = order.iter().position(|&i| near(i)).expect("cut level is in the band");
        let mut ranked = band.clone();
        ranked.sort_by_key(|i| !prev.contains(i));
        order[first..first + band.len()].copy_from_slice(&ranked);
    }
    let mut selected: Vec<usize> = order[..k].to_vec();
    selected.sort_unstable();
    let lo = selected[0];
    let hi = *selected.last().expect("k >= 2");
    let min_overlap = selected.iter().map(|&i| spec.overlaps[i]).fold(f64::INFINITY, f64::min);
    Branches { gap: spec.values[hi] - spec.values[lo], selected, min_overlap }
}

fn branches_at(
    params: &SystemParams,
    delta_a: f64,
    config: &FockConfig,
    basis: &[usize],
    previous: Option<&[usize]>,
) -> Result<Branches> {
    let spec = spectrum_at(params, delta_a, config, basis)?;
    let br = select(&spec, basis.len(), previous);
    if br.min_overlap < 0.5 {
        return Err(Error::Identification { delta_a, overlap: br.min_overlap });
    }
    Ok(br)
}

fn golden_section(mut lo: f64, mut hi: f64, tol: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Uniform Δ_a grid.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

/// Locate the avoided crossing of the subspace branches along `delta_a_grid`
/// and refine it by golden section.
pub fn scan_crossing(
    params: &SystemParams,
    delta_a_grid: &[f64],
    subspace: &SubspaceSpec,
    config: &FockConfig,
) -> Result<CrossingResult> {
    if delta_a_grid.len() < 3 || delta_a_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Grid("Delta_a grid must be strictly ascending with >= 3 points".into()));
    }
    params.validate()?;
    let basis = subspace.indices(config)?;
    let spectra = parallel::try_map(delta_a_grid, |&x| spectrum_at(params, x, config, &basis))?;

    let mut previous: Option<Vec<usize>> = None;
    let mut gaps = Vec::with_capacity(spectra.len());
    for (spec, &x) in spectra.iter().zip(delta_a_grid) {
        let br = select(spec, basis.len(), previous.as_deref());
        if br.min_overlap < 0.5 {
            return Err(Error::Identification { delta_a: x, overlap: br.min_overlap });
        }
        gaps.push(br.gap);
        previous = Some(br.selected);
    }
    let imin = gaps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    if imin == 0 || imin == gaps.len() - 1 {
        return Err(Error::Bracket { index: imin });
    }
    let gap = |x: f64| branches_at(params, x, config, &basis, None).map(|b| b.gap);
    let x_star = golden_section(delta_a_grid[imin - 1], delta_a_grid[imin + 1], GOLDEN_TOL, gap)?;
    let br = branches_at(params, x_star, config, &basis, None)?;
    let result = CrossingResult {
        delta_num: x_star - params.omega_b,
        gtilde_num: 0.5 * br.gap,
        branch_indices: (br.selected[0], *br.selected.last().expect("two branches")),
    };
    if !(result.gtilde_num >= 0.0) || result.delta_num.abs() >= 0.5 {
        return Err(Error::ContractViolation(format!("implausible crossing {result:?}")));
    }
    Ok(result)
}

/// Full eigenvalue spectrum at every grid point.
pub fn scan_spectrum(params: &SystemParams, delta_a_grid: &[f64], config: &FockConfig) -> Result<Vec<Vec<f64>>> {
    parallel::try_map(delta_a_grid, |&x| {
        let h = build_linearized(&params.with_delta_a(x), config)?;
        Ok(hermitian_eigs(&h)?.values)
    })
}

/// Which bare coupling a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweptCoupling {
    /// Photon-magnon coupling `g`.
    PhotonMagnon,
    /// Effective magnomechanical coupling `G`.
    MagnonPhonon,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub coupling: f64,
    pub gtilde_analytic: f64,
    pub gtilde_numeric: f64,
    pub delta_analytic: f64,
    pub delta_numeric: f64,
}

impl SweepPoint {
    pub fn gtilde_relative_error(&self) -> f64 {
        (self.gtilde_numeric - self.gtilde_analytic).abs() / self.gtilde_analytic.abs()
    }

    pub fn delta_relative_error(&self) -> f64 {
        (self.delta_numeric - self.delta_analytic).abs() / self.delta_analytic.abs()
    }
}

/// Analytic vs numeric `|G̃|` and δ over a range of one coupling.
pub fn coupling_sweep(
    base: &SystemParams,
    swept: SweptCoupling,
    values: &[f64],
    delta_a_grid: &[f64],
    subspace: &SubspaceSpec,
    config: &FockConfig,
) -> Result<Vec<SweepPoint>> {
    parallel::try_map(values, |&v| {
        let mut p = *base;
        match swept {
            SweptCoupling::PhotonMagnon => p.g_ma = v,
            SweptCoupling::MagnonPhonon => p.g_mb = v / p.linearization,
        }
        let cr = scan_crossing(&p, delta_a_grid, subspace, config)?;
        Ok(SweepPoint {
            coupling: v,
            gtilde_analytic: gtilde(&p)?.abs(),
            gtilde_numeric: cr.gtilde_num,
            delta_analytic: crossing_shift(&p)?,
            delta_numeric: cr.delta_num,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::max_abs;
    use crate::hamiltonians::effective_block;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    /// `V` restricted to couplings of `|i>`: second-order shift obtained by
    /// summing `|V_mi|^2 / (E_i - E_m)` over the bare basis of `config`.
    fn numeric_second_order_shift(params: &SystemParams, config: &FockConfig, labels: [usize; 3]) -> Result<f64> {
        let h = build_linearized(params, config)?;
        let i = config.index(&labels)?;
        let diag: DVector<f64> = DVector::from_iterator(h.dim(), (0..h.dim()).map(|j| h.get(j, j).re));
        let mut shift = 0.0;
        for m in 0..h.dim() {
            let v = h.get(m, i);
            if m == i || v.norm() == 0.0 {
                continue;
            }
            shift += v.norm_sqr() / (diag[i] - diag[m]);
        }
        Ok(shift)
    }

    #[test]
    fn double_exciton_closed_form() {
        let g = -0.0143;
        let eig = hermitian_eigs(&effective_block(2, g).unwrap()).unwrap();
        assert_abs_diff_eq!(eig.values[0], -2.0 * g.abs(), epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[2], 2.0 * g.abs(), epsilon = 1e-14);
        let dark = double_exciton_dark_state();
        for k in 0..20 {
            let t = 7.3 * k as f64;
            let exact = eig.propagator(t);
            assert!(max_abs(&(double_exciton_propagator(g, t) - &exact)) <= 1e-12);
            let survival = (dark.amplitudes().adjoint() * &exact * dark.amplitudes())[(0, 0)].norm();
            assert_abs_diff_eq!(survival, 1.0, epsilon = 1e-12);
        }
    }

    fn fig3() -> SystemParams {
        SystemParams::from_detunings(1.0, 1.7, 0.1, 0.1)
    }

    #[test]
    fn zero_coupling_has_no_shift() {
        let p = SystemParams::from_detunings(1.0, 1.7, 0.0, 0.0);
        assert_eq!(energy_shifts(&p, 2, 1, 3).unwrap(), (0.0, 0.0));
        assert_eq!(crossing_shift(&p).unwrap(), 0.0);
    }

    #[test]
    fn single_exciton_shift_value() {
        // 0.01/(1 − 1.7) − 0.01/2.7
        let (e1, _) = energy_shifts(&fig3(), 1, 0, 0).unwrap();
        assert_abs_diff_eq!(e1, -0.017_989_417_989_418, epsilon = 1e-15);
    }

    #[test]
    fn shifts_match_numeric_second_order() {
        let cfg = FockConfig::three_mode(6, 6, 6).unwrap();
        let p = SystemParams::from_detunings(1.0, 1.7, 0.08, 0.06);
        for (n, l, k) in [(1, 0, 0), (2, 1, 1), (3, 2, 0), (1, 1, 2)] {
            let (e1, e2) = energy_shifts(&p, n, l, k).unwrap();
            let num1 = numeric_second_order_shift(&p, &cfg, [n, l, k]).unwrap();
            let num2 = numeric_second_order_shift(&p, &cfg, [n - 1, l, k + 1]).unwrap();
            assert_abs_diff_eq!(e1, num1, epsilon = 1e-14);
            assert_abs_diff_eq!(e2, num2, epsilon = 1e-14);
        }
    }

    #[test]
    fn shift_difference_is_crossing_shift() {
        let p = SystemParams::from_detunings(1.0, 1.7, 0.12, 0.07);
        let d = crossing_shift(&p).unwrap();
        for (n, l, k) in [(1, 0, 0), (2, 0, 0), (3, 1, 2), (5, 4, 3)] {
            let (e1, e2) = energy_shifts(&p, n, l, k).unwrap();
            assert_abs_diff_eq!(e2 - e1, d, epsilon = 1e-15);
        }
    }

    #[test]
    fn crossing_shift_values() {
        let d = crossing_shift(&fig3()).unwrap();
        assert_abs_diff_eq!(d, -0.01 / 2.7, epsilon = 1e-16);
        assert!(d < 0.0);
    }

    #[test]
    fn effective_coupling_values() {
        let g = gtilde(&fig3()).unwrap();
        // detunings are stored relative to a large drive frequency, so ~1e-13 of
        // absolute precision is lost in the subtraction
        assert_abs_diff_eq!(g, -0.01 / 0.7, epsilon = 1e-13);
        assert_abs_diff_eq!(effective_coupling(&fig3(), 1, 0).unwrap(), g);
        assert_abs_diff_eq!(effective_coupling(&fig3(), 2, 1).unwrap(), 2.0 * g, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_and_regime_errors() {
        let p = SystemParams::from_detunings(1.7, 1.7, 0.1, 0.1);
        assert!(matches!(energy_shifts(&p, 1, 0, 0), Err(Error::DegenerateDetuning(_))));
        let p = SystemParams::from_detunings(1.0, 1.7, 0.3, 0.1);
        assert!(matches!(gtilde(&p), Err(Error::NonPerturbative(_))));
    }

    #[test]
    fn transfer_amplitude_cases() {
        let g = 0.02;
        for n in 2..6 {
            assert_eq!(transfer_amplitude(n, g, 0.0).norm(), 0.0);
        }
        for n in 1..7 {
            let t = std::f64::consts::PI / (2.0 * g);
            assert_abs_diff_eq!(transfer_amplitude(n, g, t).norm(), 1.0, epsilon = 1e-14);
        }
        // N = 3, G̃t = π/4: (−i/√2)^3 = i/(2√2)
        let a = transfer_amplitude(3, 1.0, std::f64::consts::FRAC_PI_4);
        assert_abs_diff_eq!(a.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.im, 0.5f64.powf(1.5), epsilon = 1e-15);
    }

    #[test]
    fn scan_rejects_unbracketed_grid() {
        let cfg = FockConfig::three_mode(3, 3, 3).unwrap();
        let grid = linear_grid(1.02, 1.1, 41);
        let err = scan_crossing(&fig3(), &grid, &SubspaceSpec::single(), &cfg);
        assert!(matches!(err, Err(Error::Bracket { .. })));
    }

    #[test]
    fn weak_coupling_scan_matches() {
        let cfg = FockConfig::three_mode(4, 4, 4).unwrap();
        let p = SystemParams::from_detunings(1.0, 1.7, 0.01, 0.01);
        let grid = linear_grid(0.99, 1.01, 201);
        let cr = scan_crossing(&p, &grid, &SubspaceSpec::single(), &cfg).unwrap();
        let gt = gtilde(&p).unwrap().abs();
        let d = crossing_shift(&p).unwrap();
        assert!((cr.gtilde_num - gt).abs() / gt < 5e-3, "{cr:?} vs {gt}");
        assert!((cr.delta_num - d).abs() / d.abs() < 5e-3, "{cr:?} vs {d}");
    }
}
