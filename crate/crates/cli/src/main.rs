use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use magnoconv_cli::config::Experiment;
use magnoconv_cli::manifest::Status;
use magnoconv_cli::{execute, Overrides};

#[derive(Parser)]
#[command(name = "magnoconv", version, about = "Photon-phonon conversion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy levels across the Delta_a scan and the avoided crossing (figures 3, 4).
    Eigs(RunArgs),
    /// Analytic vs numeric effective coupling and crossing shift (figure 5).
    CouplingScan(RunArgs),
    /// Master-equation state fidelity, full and effective models (figure 6).
    Lindblad(RunArgs),
    /// Non-Markovian transfer fidelity under structured baths (figures 7-9).
    Transfer(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration, overlaid on the figure preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Figure preset.
    #[arg(long, value_parser = clap::value_parser!(u8).range(3..=9))]
    figure: Option<u8>,
    /// Output directory [default: $MAGNOCONV_OUT/<run> or runs/<run>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver time step, in units of 1/omega_b.
    #[arg(long)]
    dt: Option<f64>,
    /// Fock truncation as a,m,b.
    #[arg(long, value_parser = parse_dims)]
    dims: Option<[usize; 3]>,
    /// Reference frequency subtracted in the bath kernels.
    #[arg(long, value_name = "OMEGA")]
    kernel_shift: Option<f64>,
}

fn parse_dims(text: &str) -> Result<[usize; 3]> {
    let parts: Vec<usize> = text.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>()?;
    match parts[..] {
        [a, m, b] => Ok([a, m, b]),
        _ => bail!("expected three comma-separated sizes, got {text:?}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Eigs(a) => (Experiment::Eigs, a),
        Command::CouplingScan(a) => (Experiment::CouplingScan, a),
        Command::Lindblad(a) => (Experiment::Lindblad, a),
        Command::Transfer(a) => (Experiment::Transfer, a),
    };
    let overrides = Overrides {
        config: args.config,
        figure: args.figure,
        out: args.out,
        dt: args.dt,
        dims: args.dims,
        kernel_shift: args.kernel_shift,
    };
    let (manifest, dir) = execute(experiment, &overrides);
    if let Err(e) = manifest.write(&dir) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    for p in &manifest.peaks {
        let peaks: Vec<String> = p.peaks.iter().map(|v| format!("{v:.4}")).collect();
        println!("{:28} peaks {}", p.label, peaks.join("  "));
    }
    for c in manifest.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} = {:.3e} > {:.3e}", c.name, c.value, c.threshold);
    }
    println!("{} written to {}", magnoconv_cli::manifest::MANIFEST_FILE, dir.display());
    match manifest.status {
        Status::Passed => ExitCode::SUCCESS,
        Status::ChecksFailed => ExitCode::from(1),
        Status::Error => {
            eprintln!("error: {}", manifest.error.as_deref().unwrap_or("unknown"));
            ExitCode::from(2)
        }
    }
}
