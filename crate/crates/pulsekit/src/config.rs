//! Run configuration: a single TOML (or JSON) file with one section per
//! subcommand. All user-facing numbers are ordinary frequencies in MHz and
//! times in ns/µs; the 2π conversion to internal angular units happens
//! here and nowhere else.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use pulsekit_core::model::TransmonParams;
use pulsekit_core::pulses::{builtin_pulse, BuiltinPulse, DragPulse, Pulse};
use pulsekit_core::units::{mhz_to_rad, ns_to_s, us_to_s};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    pub anharmonicity_mhz: f64,
    pub rabi_max_mhz: f64,
    #[serde(default)]
    pub t1_us: Option<f64>,
    #[serde(default)]
    pub tphi_us: Option<f64>,
    /// Qubit transition frequency; metadata only, echoed into manifests.
    #[serde(default)]
    pub f01_ghz: Option<f64>,
}

impl QubitConfig {
    pub fn params(&self) -> Result<TransmonParams> {
        TransmonParams::new(
            mhz_to_rad(self.anharmonicity_mhz),
            mhz_to_rad(self.rabi_max_mhz),
            self.t1_us.map(us_to_s),
            self.tphi_us.map(us_to_s),
        )
        .map_err(|e| anyhow::anyhow!("invalid qubit parameters: {e}"))
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    /// "frog", "arog", "drag", "ideal", or a path to a pulse file.
    pub source: String,
    #[serde(default = "default_dt_ns")]
    pub dt_ns: f64,
    /// Gate time of the reference Gaussian pulse.
    #[serde(default = "default_drag_gate_time_ns")]
    pub drag_gate_time_ns: f64,
    /// Derivative coefficient β (ns); −1/α when absent.
    #[serde(default)]
    pub drag_beta_ns: Option<f64>,
    /// Run an amplitude sweep and rescale the pulse before use.
    #[serde(default)]
    pub calibrate_amplitude: bool,
}

fn default_dt_ns() -> f64 {
    0.5
}

fn default_drag_gate_time_ns() -> f64 {
    128.0
}

/// What the pulse section resolves to.
pub enum PulseSource {
    Builtin(BuiltinPulse),
    Drag,
    /// The exact target unitary instead of a physical pulse.
    Ideal,
    File(PathBuf),
}

impl PulseConfig {
    pub fn source(&self, config_dir: &Path) -> Result<PulseSource> {
        match self.source.to_ascii_lowercase().as_str() {
            "drag" => Ok(PulseSource::Drag),
            "ideal" => Ok(PulseSource::Ideal),
            other => {
                if let Ok(b) = BuiltinPulse::from_str(other) {
                    return Ok(PulseSource::Builtin(b));
                }
                let path = config_dir.join(&self.source);
                if !path.is_file() {
                    bail!(
                        "pulse source {:?} is neither a builtin name nor an existing file",
                        self.source
                    );
                }
                Ok(PulseSource::File(path))
            }
        }
    }

    pub fn dt(&self) -> Result<f64> {
        if self.dt_ns <= 0.0 {
            bail!("dt_ns must be positive");
        }
        Ok(ns_to_s(self.dt_ns))
    }

    /// Materialize the configured pulse (None for the ideal-gate source).
    pub fn resolve(&self, params: &TransmonParams, config_dir: &Path) -> Result<Option<Pulse>> {
        match self.source(config_dir)? {
            PulseSource::Ideal => Ok(None),
            PulseSource::Builtin(b) => Ok(Some(Pulse::Fourier(builtin_pulse(b)))),
            PulseSource::Drag => {
                let beta = self
                    .drag_beta_ns
                    .map(ns_to_s)
                    .unwrap_or_else(|| DragPulse::default_beta(params.anharmonicity_alpha));
                let drag = DragPulse::x_pi_half(ns_to_s(self.drag_gate_time_ns), beta)
                    .map_err(|e| anyhow::anyhow!("invalid reference pulse: {e}"))?;
                Ok(Some(Pulse::Drag(drag)))
            }
            PulseSource::File(path) => {
                let pulse = crate::pulsefile::read_pulse_file(&path)
                    .with_context(|| format!("reading pulse file {}", path.display()))?;
                Ok(Some(Pulse::Fourier(pulse)))
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub gate_time_ns: f64,
    pub eta: f64,
    pub delta_mhz: [f64; 2],
    pub n_delta: usize,
    pub gamma_mhz: [f64; 2],
    pub n_gamma: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_grad_tolerance")]
    pub grad_tolerance: f64,
    pub seed: u64,
    #[serde(default = "default_random_starts")]
    pub random_starts: usize,
    #[serde(default = "default_true")]
    pub half_sine_start: bool,
}

fn default_max_iters() -> usize {
    500
}

fn default_grad_tolerance() -> f64 {
    1e-8
}

fn default_random_starts() -> usize {
    4
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RbConfig {
    pub lengths: Vec<usize>,
    pub n_random: usize,
    pub seed: u64,
    #[serde(default = "default_noise")]
    pub noise: String,
    #[serde(default)]
    pub delta_mhz: f64,
    #[serde(default)]
    pub gamma_mhz: f64,
}

fn default_noise() -> String {
    "unitary".into()
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfigFile {
    pub delta_mhz: [f64; 2],
    pub gamma_mhz: [f64; 2],
    pub grid: [usize; 2],
    #[serde(default = "default_n_c")]
    pub n_c: usize,
    #[serde(default = "default_scan_random")]
    pub n_random: usize,
    pub seed: u64,
    #[serde(default = "default_noise")]
    pub noise: String,
    #[serde(default = "default_fit_a")]
    pub fit_a: f64,
    #[serde(default = "default_fit_b")]
    pub fit_b: f64,
}

fn default_n_c() -> usize {
    60
}

fn default_scan_random() -> usize {
    10
}

fn default_fit_a() -> f64 {
    pulsekit_core::benchmarking::DEFAULT_FIT_A
}

fn default_fit_b() -> f64 {
    pulsekit_core::benchmarking::DEFAULT_FIT_B
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    #[serde(default = "default_scale_range")]
    pub scale_range: [f64; 2],
    #[serde(default = "default_n_scales")]
    pub n_scales: usize,
    #[serde(default = "default_max_reps")]
    pub error_amp_max_n: usize,
    #[serde(default = "default_ramsey_max_us")]
    pub ramsey_max_us: f64,
    #[serde(default = "default_ramsey_points")]
    pub ramsey_points: usize,
    #[serde(default = "default_artificial_detuning_mhz")]
    pub artificial_detuning_mhz: f64,
    #[serde(default = "default_t1_max_us")]
    pub t1_max_us: f64,
    #[serde(default = "default_t1_points")]
    pub t1_points: usize,
    #[serde(default)]
    pub delta_mhz: f64,
    #[serde(default)]
    pub gamma_mhz: f64,
}

fn default_scale_range() -> [f64; 2] {
    [0.4, 1.6]
}

fn default_n_scales() -> usize {
    13
}

fn default_max_reps() -> usize {
    69
}

fn default_ramsey_max_us() -> f64 {
    10.0
}

fn default_ramsey_points() -> usize {
    40
}

fn default_artificial_detuning_mhz() -> f64 {
    pulsekit_core::calibration::RAMSEY_ARTIFICIAL_DETUNING_MHZ
}

fn default_t1_max_us() -> f64 {
    100.0
}

fn default_t1_points() -> usize {
    40
}

/// λ for the drift regression: a number, or "loo" for leave-one-out
/// selection over the default grid.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum LambdaChoice {
    Fixed(f64),
    Named(String),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub scenario: String,
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default = "default_lambda")]
    pub lambda: LambdaChoice,
    #[serde(default = "default_drift_lengths")]
    pub lengths: Vec<usize>,
    #[serde(default = "default_drift_random")]
    pub n_random: usize,
}

fn default_lambda() -> LambdaChoice {
    LambdaChoice::Named("loo".into())
}

fn default_drift_lengths() -> Vec<usize> {
    vec![1, 25, 60, 120, 200, 320, 450, 600]
}

fn default_drift_random() -> usize {
    12
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub qubit: QubitConfig,
    #[serde(default)]
    pub pulse: Option<PulseConfig>,
    #[serde(default)]
    pub optimize: Option<OptimizeConfig>,
    #[serde(default)]
    pub rb: Option<RbConfig>,
    #[serde(default)]
    pub scan: Option<ScanConfigFile>,
    #[serde(default)]
    pub calibrate: Option<CalibrateConfig>,
    #[serde(default)]
    pub drift: Option<DriftConfig>,
}

impl RunConfig {
    /// Parse TOML (default) or JSON (by extension) from disk.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).context("parsing JSON config")?
        } else {
            toml::from_str(&text).context("parsing TOML config")?
        };
        Ok(config)
    }

    pub fn pulse(&self) -> Result<&PulseConfig> {
        self.pulse
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("config is missing the [pulse] section"))
    }
}

/// Section accessors returning a usage-level error when absent.
macro_rules! section {
    ($name:ident, $field:ident, $ty:ty) => {
        impl RunConfig {
            pub fn $name(&self) -> Result<&$ty> {
                self.$field.as_ref().ok_or_else(|| {
                    anyhow::anyhow!(concat!(
                        "config is missing the [",
                        stringify!($field),
                        "] section"
                    ))
                })
            }
        }
    };
}

section!(optimize_section, optimize, OptimizeConfig);
section!(rb_section, rb, RbConfig);
section!(scan_section, scan, ScanConfigFile);
section!(calibrate_section, calibrate, CalibrateConfig);
section!(drift_section, drift, DriftConfig);
