//! Experiment runner for the magnoconv toolkit: one subcommand per figure
//! family, CSV data files and a TOML manifest per run.

pub mod config;
pub mod manifest;
pub mod run;

use std::path::{Path, PathBuf};
use std::time::Instant;

use config::{Experiment, RunConfig};
use manifest::{RunManifest, Status};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_VAR: &str = "MAGNOCONV_OUT";

/// Command-line overrides applied on top of the preset or config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub figure: Option<u8>,
    pub out: Option<PathBuf>,
    pub dt: Option<f64>,
    pub dims: Option<[usize; 3]>,
    pub kernel_shift: Option<f64>,
}

pub fn resolve_config(experiment: Experiment, overrides: &Overrides) -> anyhow::Result<RunConfig> {
    let mut cfg = match &overrides.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
            RunConfig::from_toml(&text, experiment, overrides.figure)?
        }
        None => RunConfig::preset(experiment, overrides.figure)?,
    };
    if let Some(dt) = overrides.dt {
        cfg.numerics.dt = dt;
    }
    if let Some(dims) = overrides.dims {
        cfg.numerics.dims = dims;
    }
    if let Some(shift) = overrides.kernel_shift {
        cfg.numerics.kernel_shift = Some(shift);
    }
    if let Some(out) = &overrides.out {
        cfg.output_dir = Some(out.clone());
    }
    Ok(cfg)
}

/// `--out`, then the config's `output_dir`, then `$MAGNOCONV_OUT/<run>`,
/// then `runs/<run>`.
pub fn output_dir(experiment: Experiment, figure: Option<u8>, cfg: Option<&RunConfig>, overrides: &Overrides) -> PathBuf {
    if let Some(out) = &overrides.out {
        return out.clone();
    }
    if let Some(dir) = cfg.and_then(|c| c.output_dir.clone()) {
        return dir;
    }
    let figure = cfg.map(|c| c.figure).or(figure).unwrap_or(experiment.default_figure());
    let run = format!("{}-fig{figure}", experiment.name());
    let root = std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
    root.join(run)
}

/// Resolve, validate and run, then write the manifest whatever happened.
pub fn execute(experiment: Experiment, overrides: &Overrides) -> (RunManifest, PathBuf) {
    let start = Instant::now();
    let resolved = resolve_config(experiment, overrides);
    let cfg = resolved.as_ref().ok().cloned();
    let dir = output_dir(experiment, overrides.figure, cfg.as_ref(), overrides);
    let mut manifest = RunManifest::new(cfg.clone());
    let result = resolved.and_then(|cfg| {
        cfg.validate()?;
        run::run(&cfg, &dir)
    });
    match result {
        Ok(outcome) => {
            manifest.status = if outcome.passed() { Status::Passed } else { Status::ChecksFailed };
            manifest.files = outcome.files.iter().map(|p| relative_name(p, &dir)).collect();
            manifest.checks = outcome.checks;
            manifest.peaks = outcome.peaks;
            manifest.values = outcome.values;
        }
        Err(e) => manifest.error = Some(format!("{e:#}")),
    }
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    (manifest, dir)
}

fn relative_name(path: &Path, dir: &Path) -> String {
    path.strip_prefix(dir).unwrap_or(path).display().to_string()
}
