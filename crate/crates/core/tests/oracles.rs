mod common;

use magnoconv::environments::{correlation_kernel, KernelOptions, SpectralDensity, TimeGrid};
use magnoconv::hamiltonians::{effective_block, spin_chain};
use magnoconv::langevin::{solve_dyson, BathChannel};
use magnoconv::perturbation::{double_exciton_propagator, transfer_amplitude};
use magnoconv::quadrature::Rule;
use magnoconv::{CMatrix, C64};
use proptest::prelude::*;

#[test]
fn block_matches_scaled_spin() {
    for n in 1..=8 {
        let block = effective_block(n, 0.3).unwrap();
        let want = common::spin_x(n) * C64::new(0.6, 0.0);
        assert!(common::max_abs(&(block.entries() - want)) < 1e-14, "N = {n}");
    }
}

#[test]
fn band_kernel_matches_direct_sum() {
    let model = SpectralDensity::one_over_f(1e-4, -1.0);
    let grid = TimeGrid::new(0.5, 400).unwrap();
    let kernel = correlation_kernel(&model, grid, KernelOptions::default()).unwrap();
    let rule = Rule::uniform(0.1, 2.0, 2000, 8);
    for i in (0..grid.len).step_by(37) {
        let oracle = common::kernel_by_quadrature(&model, &rule, grid.time(i));
        assert!((kernel.values[i] - oracle).norm() < 1e-10 * kernel.at_zero().norm(), "t = {}", grid.time(i));
    }
}

#[test]
fn shifted_kernel_is_a_phase_rotation() {
    let model = SpectralDensity::ohmic(1e-4, 5.0, 1.0);
    let grid = TimeGrid::new(0.25, 200).unwrap();
    let plain = correlation_kernel(&model, grid, KernelOptions::default()).unwrap();
    let shifted = correlation_kernel(&model, grid, KernelOptions { shift: Some(1.0), ..Default::default() }).unwrap();
    for i in 0..grid.len {
        let rotated = plain.values[i] * C64::from_polar(1.0, grid.time(i));
        assert!((shifted.values[i] - rotated).norm() < 1e-15);
    }
}

#[test]
fn markovian_dyson_matches_non_hermitian_exponential() {
    let (g, kappa_a, kappa_b) = (0.02, 4e-3, 1e-3);
    let grid = TimeGrid::spanning(300.0, 5e-3).unwrap();
    let traj = solve_dyson(g, &BathChannel::Markovian { kappa: kappa_a }, &BathChannel::Markovian { kappa: kappa_b }, grid).unwrap();
    let m = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, -kappa_a / 2.0), C64::new(g, 0.0), C64::new(g, 0.0), C64::new(0.0, -kappa_b / 2.0)]);
    for i in (0..grid.len).step_by(4000) {
        let exact = common::evolution(&m, grid.time(i));
        let got = traj.at(i);
        for r in 0..2 {
            for c in 0..2 {
                assert!((got[r][c] - exact[(r, c)]).norm() < 1e-8, "t = {}", grid.time(i));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transfer_amplitude_matches_block_exponential(n in 1usize..7, g in -0.1f64..0.1, t in 0.0f64..200.0) {
        let u = common::evolution(effective_block(n, g).unwrap().entries(), t);
        prop_assert!((u[(n, 0)] - transfer_amplitude(n, g, t)).norm() < 1e-9);
    }

    #[test]
    fn double_exciton_propagator_matches_exponential(g in -0.1f64..0.1, t in 0.0f64..200.0) {
        let u = common::evolution(effective_block(2, g).unwrap().entries(), t);
        prop_assert!(common::max_abs(&(double_exciton_propagator(g, t) - u)) < 1e-9);
    }

    #[test]
    fn chain_sector_reproduces_block(n in 1usize..7, g in -0.5f64..0.5) {
        let sector: Vec<usize> = (0..=n).map(|j| 1 << j).collect();
        let chain = spin_chain(n, g).unwrap().restrict(&sector);
        prop_assert!(common::max_abs(&(chain - effective_block(n, g).unwrap().entries())) < 1e-14);
    }

    #[test]
    fn ohmic_kernel_matches_quadrature(s in 0.6f64..3.0, omega0 in 1.0f64..6.0, t in 0.0f64..50.0) {
        let model = SpectralDensity::ohmic(1e-4, omega0, s);
        let kernel = correlation_kernel(&model, TimeGrid::new(t.max(1e-6), 2).unwrap(), KernelOptions::default()).unwrap();
        let rule = Rule::graded_from_zero(40.0 * omega0, 0.01, 30, 8);
        let oracle = common::kernel_by_quadrature(&model, &rule, kernel.grid.time(1));
        prop_assert!((kernel.values[1] - oracle).norm() <= 1e-8 * kernel.at_zero().norm());
    }
}
