//! Experiment runners. Each computes everything first and then writes its
//! data files in one pass.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use magnoconv::environments::KernelOptions;
use magnoconv::fock::FockConfig;
use magnoconv::hamiltonians::{build_linearized, SubspaceKind, SubspaceSpec};
use magnoconv::lindblad::DecayRates;
use magnoconv::perturbation::{coupling_sweep, crossing_shift, gtilde, linear_grid, scan_crossing, scan_spectrum, SweptCoupling};
use magnoconv::scenarios::{run_conversion, run_transfer as solve_transfer, ConversionCase, ConversionSetup, TransferSetup};

use crate::config::{Experiment, RunConfig, Swept};
use crate::manifest::{Check, PeakRecord};

/// What a run produced, short of the manifest itself.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
    pub peaks: Vec<PeakRecord>,
    pub values: BTreeMap<String, f64>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    match cfg.experiment {
        Experiment::Eigs => run_eigs(cfg, out),
        Experiment::CouplingScan => run_coupling_scan(cfg, out),
        Experiment::Lindblad => run_lindblad(cfg, out),
        Experiment::Transfer => run_transfer(cfg, out),
    }
}

/// Twelve significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.11e}")
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.header.len());
            w.write_record(row.iter().map(|&v| fmt_num(v)))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn write_all(out: &Path, tables: Vec<(String, Table)>, outcome: &mut Outcome) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    for (name, table) in tables {
        let path = out.join(name);
        table.write(&path)?;
        outcome.files.push(path);
    }
    Ok(())
}

fn fock_config(dims: [usize; 3]) -> Result<FockConfig> {
    Ok(FockConfig::three_mode(dims[0], dims[1], dims[2])?)
}

fn subspace(excitations: usize) -> Result<SubspaceSpec> {
    Ok(SubspaceSpec::new(SubspaceKind::NExciton(excitations))?)
}

fn hermiticity_check(cfg: &RunConfig, params: &magnoconv::hamiltonians::SystemParams, fock: &FockConfig) -> Result<Check> {
    let h = build_linearized(params, fock)?;
    Ok(Check::at_most("hamiltonian_hermiticity", h.hermiticity_error(), cfg.checks.max_hermiticity_error))
}

pub fn run_eigs(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let n = &cfg.numerics;
    let params = cfg.params.system();
    let fock = fock_config(n.dims)?;
    let grid = linear_grid(n.grid_min, n.grid_max, n.grid_points);
    let spectra = scan_spectrum(&params, &grid, &fock)?;
    let crossing = scan_crossing(&params, &grid, &subspace(n.excitations)?, &fock)?;

    let levels = spectra[0].len();
    let mut header = vec!["delta_a_over_wb".to_string()];
    header.extend((1..=levels).map(|i| format!("E_{i}")));
    let mut energies = Table::new(header);
    for (&x, spectrum) in grid.iter().zip(&spectra) {
        let mut row = vec![x / params.omega_b];
        row.extend(spectrum.iter().map(|e| e / params.omega_b));
        energies.rows.push(row);
    }

    let delta_analytic = crossing_shift(&params)?;
    let gtilde_analytic = gtilde(&params)?.abs();
    let ratio = if crossing.gtilde_num > 0.0 { crossing.delta_num / crossing.gtilde_num } else { 0.0 };
    let mut annotation = Table::new(
        ["excitations", "delta_numeric", "gtilde_numeric", "delta_over_gtilde", "delta_analytic", "gtilde_analytic"]
            .map(String::from)
            .to_vec(),
    );
    annotation.rows.push(vec![n.excitations as f64, crossing.delta_num, crossing.gtilde_num, ratio, delta_analytic, gtilde_analytic]);

    let mut outcome = Outcome::default();
    outcome.checks.push(hermiticity_check(cfg, &params.with_delta_a(params.omega_b + crossing.delta_num), &fock)?);
    outcome.values.insert("delta_numeric".into(), crossing.delta_num);
    outcome.values.insert("gtilde_numeric".into(), crossing.gtilde_num);
    outcome.values.insert("delta_analytic".into(), delta_analytic);
    outcome.values.insert("gtilde_analytic".into(), gtilde_analytic);
    write_all(out, vec![("energies.csv".into(), energies), ("crossing.csv".into(), annotation)], &mut outcome)?;
    Ok(outcome)
}

pub fn run_coupling_scan(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let n = &cfg.numerics;
    let scan = cfg.coupling_scan.as_ref().context("missing [coupling_scan] section")?;
    let params = cfg.params.system();
    let fock = fock_config(n.dims)?;
    let grid = linear_grid(n.grid_min, n.grid_max, n.grid_points);
    let space = subspace(n.excitations)?;

    let mut outcome = Outcome::default();
    outcome.checks.push(hermiticity_check(cfg, &params, &fock)?);
    let mut tables = Vec::new();
    for &swept in &scan.swept {
        let which = match swept {
            Swept::PhotonMagnon => SweptCoupling::PhotonMagnon,
            Swept::MagnonPhonon => SweptCoupling::MagnonPhonon,
        };
        let points = coupling_sweep(&params, which, &scan.values, &grid, &space, &fock)
            .with_context(|| format!("sweep over {}", swept.column()))?;
        let mut table = Table::new(
            [swept.column(), "gtilde_analytic", "gtilde_numeric", "delta_analytic", "delta_numeric"].map(String::from).to_vec(),
        );
        for p in &points {
            table.rows.push(vec![p.coupling, p.gtilde_analytic, p.gtilde_numeric, p.delta_analytic, p.delta_numeric]);
            outcome.values.insert(format!("{}={}:gtilde_relative_error", swept.column(), p.coupling), p.gtilde_relative_error());
        }
        tables.push((format!("{}.csv", swept.file_stem()), table));
    }
    write_all(out, tables, &mut outcome)?;
    Ok(outcome)
}

pub fn run_lindblad(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let n = &cfg.numerics;
    let section = cfg.lindblad.as_ref().context("missing [lindblad] section")?;
    let setup = ConversionSetup {
        params: cfg.params.system(),
        dims: n.dims,
        direction: section.direction,
        dt: n.dt,
        sample_dt: n.sample_dt,
        periods: n.periods,
    };
    let cases: Vec<ConversionCase> = section
        .cases
        .iter()
        .map(|c| Ok(ConversionCase { label: c.label.clone(), rates: DecayRates::new(c.kappa_a, c.kappa_m, c.gamma_b)? }))
        .collect::<Result<_>>()?;
    let run = run_conversion(&setup, &cases)?;

    let mut header = vec!["t".to_string()];
    for c in &run.curves {
        header.push(format!("F_full:{}", c.label));
        header.push(format!("F_eff:{}", c.label));
    }
    let mut table = Table::new(header);
    for (i, &t) in run.times.iter().enumerate() {
        let mut row = vec![t];
        for c in &run.curves {
            row.push(c.full[i]);
            row.push(c.effective[i]);
        }
        table.rows.push(row);
    }

    let count = n.periods.ceil() as usize;
    let mut outcome = Outcome::default();
    for c in &run.curves {
        outcome.checks.push(Check::at_most(&format!("trace_drift:{}", c.label), c.max_trace_drift, cfg.checks.max_trace_drift));
        outcome.checks.push(Check::at_most(
            &format!("hermiticity:{}", c.label),
            c.max_hermiticity_error,
            cfg.checks.max_hermiticity_error,
        ));
        outcome.peaks.push(PeakRecord { label: format!("full:{}", c.label), peaks: run.peaks(&c.full, count) });
        outcome.peaks.push(PeakRecord { label: format!("effective:{}", c.label), peaks: run.peaks(&c.effective, count) });
    }
    outcome.values.insert("gtilde".into(), run.gtilde);
    outcome.values.insert("delta".into(), run.delta);
    outcome.values.insert("period".into(), run.period);
    write_all(out, vec![("fidelity.csv".into(), table)], &mut outcome)?;
    Ok(outcome)
}

pub fn run_transfer(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let n = &cfg.numerics;
    let section = cfg.transfer.as_ref().context("missing [transfer] section")?;
    let setup = TransferSetup {
        gtilde: section.gtilde,
        dt: n.dt,
        periods: n.periods,
        kernel: KernelOptions { shift: n.kernel_shift, band_nodes: n.band_nodes },
        nbar_b: section.nbar_b,
    };
    let run = solve_transfer(&setup, &section.scenarios)?;

    let mut header = vec!["t".to_string()];
    header.extend(run.outcomes.iter().map(|o| format!("F:{}", o.label)));
    header.extend(run.outcomes.iter().map(|o| format!("sum_rule_residual:{}", o.label)));
    let mut fidelity = Table::new(header);
    let mut header = vec!["t".to_string()];
    header.extend(run.outcomes.iter().map(|o| format!("n_b:{}", o.label)));
    let mut occupation = Table::new(header);
    for i in (0..run.grid.len).step_by(n.write_stride) {
        let t = run.grid.time(i);
        let mut row = vec![t];
        row.extend(run.outcomes.iter().map(|o| o.fidelity[i]));
        row.extend(run.outcomes.iter().map(|o| o.sum_rule_residual[i]));
        fidelity.rows.push(row);
        let mut row = vec![t];
        row.extend(run.outcomes.iter().map(|o| o.phonon_number[i]));
        occupation.rows.push(row);
    }

    let mut outcome = Outcome::default();
    for o in &run.outcomes {
        outcome.checks.push(Check::at_most(&format!("sum_rule:{}", o.label), o.max_residual, cfg.checks.max_sum_rule_residual));
        outcome.peaks.push(PeakRecord { label: o.label.clone(), peaks: o.peaks.clone() });
    }
    outcome.values.insert("period".into(), run.period);
    write_all(out, vec![("fidelity.csv".into(), fidelity), ("phonon_number.csv".into(), occupation)], &mut outcome)?;
    Ok(outcome)
}
