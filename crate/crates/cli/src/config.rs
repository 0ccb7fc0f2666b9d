//! Run configuration: per-figure presets, TOML overlays and validation.

use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use magnoconv::hamiltonians::SystemParams;
use magnoconv::lindblad::{DecayRates, DEFAULT_STEP};
use magnoconv::perturbation::DEFAULT_GRID;
use magnoconv::scenarios::{
    calibrated_markov_scenario, conversion_cases, figure7_scenarios, figure8_scenarios, figure9_scenarios, Direction,
    TransferScenario, FIGURE_COUPLING, FIGURE_DELTA_M, FIGURE_GTILDE, SWEEP_VALUES, TRANSFER_STEP,
};
use magnoconv::environments::DEFAULT_BAND_NODES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Eigs,
    CouplingScan,
    Lindblad,
    Transfer,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Eigs => "eigs",
            Self::CouplingScan => "coupling-scan",
            Self::Lindblad => "lindblad",
            Self::Transfer => "transfer",
        }
    }

    pub fn figures(self) -> &'static [u8] {
        match self {
            Self::Eigs => &[3, 4],
            Self::CouplingScan => &[5],
            Self::Lindblad => &[6],
            Self::Transfer => &[7, 8, 9],
        }
    }

    pub fn default_figure(self) -> u8 {
        self.figures()[0]
    }
}

/// System parameters by rotating-frame detuning, in units of `ω_b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub delta_a: f64,
    pub delta_m: f64,
    pub g: f64,
    pub big_g: f64,
    pub kerr: f64,
    /// Magnon occupation entering the Kerr shift.
    pub magnon_occupation: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self { delta_a: 1.0, delta_m: FIGURE_DELTA_M, g: FIGURE_COUPLING, big_g: FIGURE_COUPLING, kerr: 0.0, magnon_occupation: 0.0 }
    }
}

impl ParamsSection {
    pub fn system(&self) -> SystemParams {
        let mut p = SystemParams::from_detunings(self.delta_a, self.delta_m, self.g, self.big_g);
        p.kerr = self.kerr;
        p.with_kerr_shift(self.magnon_occupation)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    /// Time step of the master equation or Dyson solver.
    pub dt: f64,
    /// Fock truncation `(a, m, b)`.
    pub dims: [usize; 3],
    /// `Δ_a` scan grid: lower end, upper end, points.
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
    /// Conversion subspace for crossing scans.
    pub excitations: usize,
    /// Duration in Rabi periods.
    pub periods: f64,
    /// Spacing of the master-equation samples.
    pub sample_dt: f64,
    /// Write every n-th Dyson sample.
    pub write_stride: usize,
    pub band_nodes: usize,
    pub kernel_shift: Option<f64>,
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            dt: TRANSFER_STEP,
            dims: [4, 4, 4],
            grid_min: DEFAULT_GRID.0,
            grid_max: DEFAULT_GRID.1,
            grid_points: DEFAULT_GRID.2,
            excitations: 1,
            periods: 3.0,
            sample_dt: 0.1,
            write_stride: 20,
            band_nodes: DEFAULT_BAND_NODES,
            kernel_shift: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Swept {
    #[serde(rename = "g")]
    PhotonMagnon,
    #[serde(rename = "G")]
    MagnonPhonon,
}

impl Swept {
    pub fn column(self) -> &'static str {
        match self {
            Self::PhotonMagnon => "g",
            Self::MagnonPhonon => "G",
        }
    }

    pub fn file_stem(self) -> &'static str {
        match self {
            Self::PhotonMagnon => "scan_photon_magnon",
            Self::MagnonPhonon => "scan_magnon_phonon",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub swept: Vec<Swept>,
    pub values: Vec<f64>,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self { swept: vec![Swept::PhotonMagnon, Swept::MagnonPhonon], values: SWEEP_VALUES.to_vec() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LindbladCase {
    pub label: String,
    pub kappa_a: f64,
    pub kappa_m: f64,
    pub gamma_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LindbladSection {
    pub direction: Direction,
    pub cases: Vec<LindbladCase>,
}

impl Default for LindbladSection {
    fn default() -> Self {
        let cases = conversion_cases()
            .into_iter()
            .map(|c| LindbladCase { label: c.label, kappa_a: c.rates.kappa_a, kappa_m: c.rates.kappa_m, gamma_b: c.rates.gamma_b })
            .collect();
        Self { direction: Direction::PhotonToPhonon, cases }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSection {
    pub gtilde: f64,
    /// Flat phonon-bath occupation.
    pub nbar_b: f64,
    pub scenarios: Vec<TransferScenario>,
}

impl TransferSection {
    fn for_figure(figure: u8) -> Self {
        let scenarios = match figure {
            7 => {
                let mut s = figure7_scenarios();
                s.push(calibrated_markov_scenario(FIGURE_GTILDE));
                s
            }
            8 => figure8_scenarios(),
            _ => figure9_scenarios(),
        };
        Self { gtilde: FIGURE_GTILDE, nbar_b: 0.0, scenarios }
    }
}

/// Health thresholds that decide the exit code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    pub max_sum_rule_residual: f64,
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self { max_sum_rule_residual: 1e-3, max_trace_drift: 1e-6, max_hermiticity_error: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub figure: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub params: ParamsSection,
    pub numerics: NumericsSection,
    pub checks: ChecksSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_scan: Option<ScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lindblad: Option<LindbladSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferSection>,
}

impl RunConfig {
    /// Built-in parameter set of a figure.
    pub fn preset(experiment: Experiment, figure: Option<u8>) -> Result<Self> {
        let figure = figure.unwrap_or(experiment.default_figure());
        ensure!(
            experiment.figures().contains(&figure),
            "figure {figure} is not produced by `{}` (choose one of {:?})",
            experiment.name(),
            experiment.figures()
        );
        let mut cfg = Self {
            experiment,
            figure,
            output_dir: None,
            params: ParamsSection::default(),
            numerics: NumericsSection::default(),
            checks: ChecksSection::default(),
            coupling_scan: None,
            lindblad: None,
            transfer: None,
        };
        match experiment {
            Experiment::Eigs => cfg.numerics.excitations = if figure == 4 { 2 } else { 1 },
            Experiment::CouplingScan => cfg.coupling_scan = Some(ScanSection::default()),
            Experiment::Lindblad => {
                cfg.numerics.dims = [3, 3, 3];
                cfg.numerics.dt = DEFAULT_STEP;
                cfg.lindblad = Some(LindbladSection::default());
            }
            Experiment::Transfer => cfg.transfer = Some(TransferSection::for_figure(figure)),
        }
        Ok(cfg)
    }

    /// Preset for the file's experiment and figure, overlaid by the file.
    /// `experiment` and `figure` from the command line take precedence.
    pub fn from_toml(text: &str, experiment: Experiment, figure: Option<u8>) -> Result<Self> {
        let overlay: toml::Table = toml::from_str(text).context("config is not valid TOML")?;
        if let Some(v) = overlay.get("experiment") {
            let named: Experiment = v.clone().try_into().context("unknown experiment in config")?;
            ensure!(named == experiment, "config is for `{}` but `{}` was requested", named.name(), experiment.name());
        }
        let file_figure = match overlay.get("figure") {
            Some(v) => Some(u8::try_from(v.as_integer().context("figure must be an integer")?).context("figure out of range")?),
            None => None,
        };
        let mut base = toml::Table::try_from(Self::preset(experiment, figure.or(file_figure))?)?;
        let figure_value = base["figure"].clone();
        merge(&mut base, overlay);
        base.insert("figure".into(), figure_value);
        base.insert("experiment".into(), toml::Value::String(experiment.name().into()));
        toml::Value::Table(base).try_into().context("config does not match the run schema")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Check every numeric field before any computation starts.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        for (name, v) in [("delta_a", p.delta_a), ("delta_m", p.delta_m), ("g", p.g), ("big_g", p.big_g), ("kerr", p.kerr)] {
            ensure!(v.is_finite(), "params.{name} must be finite, got {v}");
        }
        ensure!(p.g >= 0.0 && p.big_g >= 0.0, "couplings must be >= 0");
        ensure!(p.magnon_occupation >= 0.0, "params.magnon_occupation must be >= 0");
        self.params.system().validate()?;

        let n = &self.numerics;
        ensure!(n.dt > 0.0 && n.dt.is_finite(), "numerics.dt must be positive, got {}", n.dt);
        ensure!(n.dims.iter().all(|&d| d >= 2), "numerics.dims must be >= 2 per mode, got {:?}", n.dims);
        ensure!(
            n.grid_min < n.grid_max && n.grid_points >= 3,
            "scan grid needs grid_min < grid_max and >= 3 points"
        );
        ensure!(n.excitations >= 1, "numerics.excitations must be >= 1");
        ensure!(n.periods > 0.0 && n.periods.is_finite(), "numerics.periods must be positive");
        ensure!(n.sample_dt > 0.0 && n.sample_dt >= n.dt, "numerics.sample_dt must be >= dt");
        ensure!(n.write_stride >= 1, "numerics.write_stride must be >= 1");
        ensure!(n.band_nodes >= 8, "numerics.band_nodes must be >= 8");
        if let Some(w) = n.kernel_shift {
            ensure!(w.is_finite(), "numerics.kernel_shift must be finite");
        }

        let c = &self.checks;
        ensure!(
            [c.max_sum_rule_residual, c.max_trace_drift, c.max_hermiticity_error].iter().all(|v| *v >= 0.0),
            "check thresholds must be >= 0"
        );

        match self.experiment {
            Experiment::Eigs => {
                let limit = n.excitations + 1;
                ensure!(n.dims[0] >= limit && n.dims[2] >= limit, "dims too small for {}-exciton states", n.excitations);
            }
            Experiment::CouplingScan => {
                let scan = self.coupling_scan.as_ref().context("missing [coupling_scan] section")?;
                ensure!(!scan.swept.is_empty() && !scan.values.is_empty(), "coupling_scan needs swept couplings and values");
                ensure!(scan.values.iter().all(|v| v.is_finite() && *v > 0.0), "coupling_scan.values must be positive");
                ensure!(n.dims[0] > n.excitations && n.dims[2] > n.excitations, "dims too small for the scan subspace");
            }
            Experiment::Lindblad => {
                let section = self.lindblad.as_ref().context("missing [lindblad] section")?;
                ensure!(!section.cases.is_empty(), "lindblad needs at least one case");
                for case in &section.cases {
                    DecayRates::new(case.kappa_a, case.kappa_m, case.gamma_b).with_context(|| format!("case {}", case.label))?;
                }
                unique_labels(section.cases.iter().map(|c| c.label.as_str()))?;
            }
            Experiment::Transfer => {
                let section = self.transfer.as_ref().context("missing [transfer] section")?;
                ensure!(section.gtilde != 0.0 && section.gtilde.is_finite(), "transfer.gtilde must be nonzero");
                ensure!(section.nbar_b >= 0.0, "transfer.nbar_b must be >= 0");
                ensure!(!section.scenarios.is_empty(), "transfer needs at least one scenario");
                for sc in &section.scenarios {
                    use magnoconv::scenarios::ChannelSpec;
                    for spec in [&sc.photon, &sc.phonon] {
                        match spec {
                            ChannelSpec::Environment { density } | ChannelSpec::MarkovLimit { density, .. } => {
                                density.validate().with_context(|| format!("scenario {}", sc.label))?
                            }
                            ChannelSpec::Isolated => {}
                        }
                    }
                }
                unique_labels(section.scenarios.iter().map(|s| s.label.as_str()))?;
            }
        }
        Ok(())
    }
}

fn unique_labels<'a>(labels: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for label in labels {
        if label.is_empty() || label.contains(',') {
            bail!("labels must be non-empty and free of commas, got {label:?}");
        }
        ensure!(seen.insert(label), "duplicate label {label:?}");
    }
    Ok(())
}

/// Tables merge key by key; anything else in `overlay` replaces `base`.
fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}
