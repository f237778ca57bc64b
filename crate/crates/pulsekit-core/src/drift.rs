//! Synthetic drift campaigns and the sensitivity regression.
//!
//! A campaign is a time series of (γ, Γ_φ, Γ₁) triples — slow amplitude
//! ramps with small fluctuations, episodic coherence dips — with the
//! per-gate errors evaluated by dissipative randomized benchmarking at
//! each sample. The ridge regression maps normalized features to gate
//! errors in closed form and rescales the weights back to physical units
//! (per-MHz sensitivities).

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::benchmarking::{derive_seed, simulate_rb, BenchmarkError, NoiseModel, RbRun};
use crate::calibration::{amplitude_sweep, CalibrationError};
use crate::linalg::solve_real;
use crate::model::{ErrorPoint, ModelError, TransmonParams};
use crate::pulses::{
    builtin_pulse, sample_pulse, BuiltinPulse, DragPulse, Pulse, PulseError, SampledPulse,
};
use crate::units::{mhz_to_rad, ns_to_s, rad_to_mhz, rate_to_mhz, us_to_s};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DriftError {
    Benchmark(BenchmarkError),
    Calibration(CalibrationError),
    Pulse(PulseError),
    Model(ModelError),
    /// The regression needs at least four samples.
    TooFewSamples {
        got: usize,
    },
    /// Unregularized normal equations are singular (collinear features).
    SingularDesign,
    /// All features are constant; nothing to regress.
    DegenerateFeatures,
    /// Scenario name not recognized.
    UnknownScenario,
}

impl From<BenchmarkError> for DriftError {
    fn from(e: BenchmarkError) -> Self {
        DriftError::Benchmark(e)
    }
}

impl From<CalibrationError> for DriftError {
    fn from(e: CalibrationError) -> Self {
        DriftError::Calibration(e)
    }
}

impl From<PulseError> for DriftError {
    fn from(e: PulseError) -> Self {
        DriftError::Pulse(e)
    }
}

impl From<ModelError> for DriftError {
    fn from(e: ModelError) -> Self {
        DriftError::Model(e)
    }
}

impl core::fmt::Display for DriftError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DriftError::Benchmark(e) => write!(f, "{e}"),
            DriftError::Calibration(e) => write!(f, "{e}"),
            DriftError::Pulse(e) => write!(f, "{e}"),
            DriftError::Model(e) => write!(f, "{e}"),
            DriftError::TooFewSamples { got } => {
                write!(f, "regression needs at least 4 samples, got {got}")
            }
            DriftError::SingularDesign => {
                write!(
                    f,
                    "normal equations singular at lambda = 0 (collinear features)"
                )
            }
            DriftError::DegenerateFeatures => write!(f, "all features are constant"),
            DriftError::UnknownScenario => write!(f, "unknown drift scenario"),
        }
    }
}

impl core::error::Error for DriftError {}

/// The three benchmarked gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    Drag,
    Frog,
    Arog,
}

pub const GATES: [GateKind; 3] = [GateKind::Drag, GateKind::Frog, GateKind::Arog];

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Drag => "drag",
            GateKind::Frog => "frog",
            GateKind::Arog => "arog",
        }
    }

    pub fn gate_time(&self) -> f64 {
        match self {
            GateKind::Frog => ns_to_s(112.0),
            GateKind::Drag | GateKind::Arog => ns_to_s(128.0),
        }
    }
}

/// One time point of the campaign: drive amplitude error, dephasing and
/// relaxation rates, and the per-gate errors measured at that point.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftSample {
    pub timestamp: usize,
    /// Amplitude error γ (rad/s).
    pub gamma: f64,
    /// Pure dephasing rate Γ_φ (1/s).
    pub gamma_phi_rate: f64,
    /// Relaxation rate Γ₁ (1/s).
    pub gamma_1_rate: f64,
    /// Gate error per gate, indexed like [`GATES`].
    pub gate_errors: [f64; 3],
}

impl DriftSample {
    pub fn gate_error(&self, gate: GateKind) -> f64 {
        self.gate_errors[GATES.iter().position(|g| *g == gate).unwrap()]
    }
}

/// Drift phenomenology presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// Every sample identical (baseline).
    Constant,
    /// Coherence collapse in the middle of the run: T_φ floors at 1 µs,
    /// T₁ dips in sympathy, amplitude stays put.
    Day6DephasingDip,
    /// Slow drive-amplitude ramp peaking at γ/(2π) = 0.88 MHz with small
    /// fluctuations; coherence stays at baseline.
    Day10AmplitudeRamp,
    /// Relaxation-only variation (T₁ swept over its observed range);
    /// everything else constant.
    Gamma1Sweep,
}

impl core::str::FromStr for Scenario {
    type Err = DriftError;
    fn from_str(s: &str) -> Result<Self, DriftError> {
        match s.to_ascii_lowercase().as_str() {
            "constant" => Ok(Scenario::Constant),
            "day6-dephasing-dip" => Ok(Scenario::Day6DephasingDip),
            "day10-amplitude-ramp" => Ok(Scenario::Day10AmplitudeRamp),
            "gamma1-sweep" => Ok(Scenario::Gamma1Sweep),
            _ => Err(DriftError::UnknownScenario),
        }
    }
}

/// Parameter triple before gate errors are attached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftPoint {
    pub gamma: f64,
    pub gamma_phi_rate: f64,
    pub gamma_1_rate: f64,
}

const BASELINE_T1_US: f64 = 45.5;
const BASELINE_TPHI_US: f64 = 20.6;

fn normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller on two uniforms.
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

/// The (γ, Γ_φ, Γ₁) trajectory of a scenario. Fluctuations ride on the
/// deterministic shape as a stationary AR(1) process.
pub fn generate_trajectory(scenario: Scenario, n_samples: usize, seed: u64) -> Vec<DriftPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_g1 = 1.0 / us_to_s(BASELINE_T1_US);
    let base_gphi = 1.0 / us_to_s(BASELINE_TPHI_US);
    let n = n_samples.max(1);
    let frac = |k: usize| k as f64 / (n - 1).max(1) as f64;

    let rho = (-1.0f64 / 20.0).exp();
    let mut ou = 0.0;
    let mut ar_step = |sigma: f64, rng: &mut ChaCha8Rng| -> f64 {
        ou = rho * ou + sigma * (1.0 - rho * rho).sqrt() * normal(rng);
        ou
    };

    (0..n)
        .map(|k| match scenario {
            Scenario::Constant => DriftPoint {
                gamma: 0.0,
                gamma_phi_rate: base_gphi,
                gamma_1_rate: base_g1,
            },
            Scenario::Day10AmplitudeRamp => {
                // Smooth rise to exactly 0.88 MHz at the end of the run.
                let ramp = 0.88 * (0.5 * core::f64::consts::PI * frac(k)).sin().powi(2);
                let noise = ar_step(0.015, &mut rng);
                DriftPoint {
                    gamma: mhz_to_rad(ramp + noise),
                    gamma_phi_rate: base_gphi,
                    gamma_1_rate: base_g1,
                }
            }
            Scenario::Day6DephasingDip => {
                // Square dip over the middle third with a hard 1 µs floor.
                let in_dip = frac(k) >= 1.0 / 3.0 && frac(k) < 2.0 / 3.0;
                let tphi_us = if in_dip { 1.0 } else { 26.0 };
                let t1_us = if in_dip { 25.0 } else { BASELINE_T1_US };
                let noise = ar_step(0.01, &mut rng);
                DriftPoint {
                    gamma: mhz_to_rad(noise),
                    gamma_phi_rate: 1.0 / us_to_s(tphi_us),
                    gamma_1_rate: 1.0 / us_to_s(t1_us),
                }
            }
            Scenario::Gamma1Sweep => {
                // T₁ swept over the observed 11-80 µs range, nothing else.
                let t1_us = 11.0 + (80.0 - 11.0) * frac(k);
                DriftPoint {
                    gamma: 0.0,
                    gamma_phi_rate: 0.0,
                    gamma_1_rate: 1.0 / us_to_s(t1_us),
                }
            }
        })
        .collect()
}

/// Benchmarking settings for campaign evaluation.
#[derive(Clone, Debug)]
pub struct CampaignSettings {
    pub dt: f64,
    pub lengths: Vec<usize>,
    pub n_random: usize,
    pub seed: u64,
}

impl CampaignSettings {
    pub fn default_with_seed(seed: u64) -> CampaignSettings {
        CampaignSettings {
            dt: ns_to_s(0.5),
            lengths: vec![1, 25, 60, 120, 200, 320, 450, 600],
            n_random: 12,
            seed,
        }
    }
}

/// The three amplitude-calibrated gate pulses, sampled and ready to run.
pub struct GatePulses {
    sampled: [SampledPulse; 3],
}

impl GatePulses {
    /// Calibrate each gate's amplitude at the baseline parameters, as a
    /// campaign's day-zero tune-up would.
    pub fn calibrated(params: &TransmonParams, dt: f64) -> Result<GatePulses, DriftError> {
        let drag = Pulse::Drag(DragPulse::x_pi_half(
            GateKind::Drag.gate_time(),
            DragPulse::default_beta(params.anharmonicity_alpha),
        )?);
        let frog = Pulse::Fourier(builtin_pulse(BuiltinPulse::Frog));
        let arog = Pulse::Fourier(builtin_pulse(BuiltinPulse::Arog));
        let scales: Vec<f64> = (6..=14).map(|k| k as f64 * 0.1).collect();
        let mut sampled = Vec::with_capacity(3);
        for pulse in [drag, frog, arog] {
            let cal = amplitude_sweep(&pulse, params, &scales, dt)?;
            sampled.push(sample_pulse(&pulse.scaled(cal.amplitude_scale), dt)?);
        }
        Ok(GatePulses {
            sampled: sampled.try_into().expect("three gates"),
        })
    }
}

/// Gate errors of one drift point: dissipative RB of each gate at that
/// point's rates and amplitude error. The RB seed is shared across samples
/// so identical points give identical errors.
pub fn evaluate_drift_point(
    point: &DriftPoint,
    timestamp: usize,
    pulses: &GatePulses,
    params: &TransmonParams,
    settings: &CampaignSettings,
) -> Result<DriftSample, DriftError> {
    let sample_params = TransmonParams::new(
        params.anharmonicity_alpha,
        params.rabi_max_omega0,
        Some(if point.gamma_1_rate > 0.0 {
            1.0 / point.gamma_1_rate
        } else {
            f64::INFINITY
        }),
        Some(if point.gamma_phi_rate > 0.0 {
            1.0 / point.gamma_phi_rate
        } else {
            f64::INFINITY
        }),
    )?;
    let err = ErrorPoint::new(0.0, point.gamma)?;
    let run = RbRun {
        lengths: settings.lengths.clone(),
        n_random: settings.n_random,
        noise: NoiseModel::Lindblad,
        seed: derive_seed(settings.seed, 0x9b, 0),
        readout_error: None,
    };
    let mut gate_errors = [0.0; 3];
    for (i, sampled) in pulses.sampled.iter().enumerate() {
        let outcome = simulate_rb(sampled, &sample_params, &err, &run)?;
        gate_errors[i] = outcome.fitted_gate_error;
    }
    Ok(DriftSample {
        timestamp,
        gamma: point.gamma,
        gamma_phi_rate: point.gamma_phi_rate,
        gamma_1_rate: point.gamma_1_rate,
        gate_errors,
    })
}

/// Generate a full campaign: trajectory plus per-sample gate errors.
pub fn generate_campaign(
    params: &TransmonParams,
    scenario: Scenario,
    n_samples: usize,
    seed: u64,
    settings: &CampaignSettings,
) -> Result<Vec<DriftSample>, DriftError> {
    let trajectory = generate_trajectory(scenario, n_samples, seed);
    let pulses = GatePulses::calibrated(params, settings.dt)?;
    trajectory
        .iter()
        .enumerate()
        .map(|(k, point)| evaluate_drift_point(point, k, &pulses, params, settings))
        .collect()
}

/// Ridge regression outcome. Weights are sensitivities in physical units:
/// gate error per MHz of feature change, features ordered (γ, Γ_φ, Γ₁)
/// with γ in ordinary MHz and the rates in 1/µs.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionFit {
    /// weights_physical[gate][feature], gates ordered like [`GATES`].
    pub weights_physical: [[f64; 3]; 3],
    /// Normalized-feature weights, same layout.
    pub weights_normalized: [[f64; 3]; 3],
    pub lambda: f64,
    /// Pooled coefficient of determination over all gates.
    pub r_squared: f64,
    /// Feature means in MHz units.
    pub feature_means: [f64; 3],
    /// Feature standard deviations in MHz units; zero marks a constant
    /// feature that was excluded from the solve.
    pub feature_stds: [f64; 3],
    /// Per-gate mean errors (the prediction baseline).
    pub intercepts: [f64; 3],
}

pub(crate) fn features_mhz(s: &DriftSample) -> [f64; 3] {
    [
        rad_to_mhz(s.gamma),
        rate_to_mhz(s.gamma_phi_rate),
        rate_to_mhz(s.gamma_1_rate),
    ]
}

/// Closed-form ridge solve on normalized features, one independent solve
/// per gate (the vector regression decouples column-wise). Features with
/// zero variance are dropped (their weights report as zero); at λ = 0 a
/// collinear design is an error.
pub fn ridge_fit(samples: &[DriftSample], lambda: f64) -> Result<RegressionFit, DriftError> {
    let m = samples.len();
    if m < 4 {
        return Err(DriftError::TooFewSamples { got: m });
    }
    let x: Vec<[f64; 3]> = samples.iter().map(features_mhz).collect();

    let mut means = [0.0; 3];
    for row in &x {
        for f in 0..3 {
            means[f] += row[f] / m as f64;
        }
    }
    let mut stds = [0.0; 3];
    for row in &x {
        for f in 0..3 {
            stds[f] += (row[f] - means[f]).powi(2) / m as f64;
        }
    }
    for s in &mut stds {
        *s = s.sqrt();
    }
    let active: Vec<usize> = (0..3)
        .filter(|&f| stds[f] > 1e-12 * (1.0 + means[f].abs()))
        .collect();
    if active.is_empty() {
        return Err(DriftError::DegenerateFeatures);
    }
    let na = active.len();

    // Normalized design and its Gram matrix.
    let xn: Vec<Vec<f64>> = x
        .iter()
        .map(|row| {
            active
                .iter()
                .map(|&f| (row[f] - means[f]) / stds[f])
                .collect()
        })
        .collect();
    let mut gram = vec![0.0; na * na];
    for row in &xn {
        for a in 0..na {
            for b in 0..na {
                gram[a * na + b] += row[a] * row[b];
            }
        }
    }

    let mut weights_normalized = [[0.0; 3]; 3];
    let mut weights_physical = [[0.0; 3]; 3];
    let mut intercepts = [0.0; 3];
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (gi, _) in GATES.iter().enumerate() {
        let y: Vec<f64> = samples.iter().map(|s| s.gate_errors[gi]).collect();
        let y_mean = y.iter().sum::<f64>() / m as f64;
        intercepts[gi] = y_mean;
        let mut rhs = vec![0.0; na];
        for (row, &yk) in xn.iter().zip(&y) {
            for a in 0..na {
                rhs[a] += row[a] * (yk - y_mean);
            }
        }
        let mut lhs = gram.clone();
        for a in 0..na {
            lhs[a * na + a] += m as f64 * lambda;
        }
        solve_real(&mut lhs, &mut rhs, na).ok_or(DriftError::SingularDesign)?;
        for (a, &f) in active.iter().enumerate() {
            weights_normalized[gi][f] = rhs[a];
            weights_physical[gi][f] = rhs[a] / stds[f];
        }
        for (row, &yk) in xn.iter().zip(&y) {
            let pred: f64 = y_mean + (0..na).map(|a| row[a] * rhs[a]).sum::<f64>();
            ss_res += (yk - pred).powi(2);
            ss_tot += (yk - y_mean).powi(2);
        }
    }

    Ok(RegressionFit {
        weights_physical,
        weights_normalized,
        lambda,
        r_squared: if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else {
            1.0
        },
        feature_means: means,
        feature_stds: {
            let mut out = [0.0; 3];
            for &f in &active {
                out[f] = stds[f];
            }
            out
        },
        intercepts,
    })
}

/// Default λ grid for leave-one-out selection: zero plus a log-spaced
/// ladder up to 1.
pub fn loo_lambda_grid() -> Vec<f64> {
    vec![0.0, 1e-3, 3.16e-3, 1e-2, 3.16e-2, 1e-1, 3.16e-1, 1.0]
}

/// Pick λ by leave-one-out cross validation over the grid and fit with it.
/// Grid entries whose solve fails (singular at λ = 0) are skipped.
pub fn ridge_fit_loo(
    samples: &[DriftSample],
    lambdas: &[f64],
) -> Result<RegressionFit, DriftError> {
    let m = samples.len();
    if m < 5 {
        return Err(DriftError::TooFewSamples { got: m });
    }
    let mut best: Option<(f64, f64)> = None;
    for &lambda in lambdas {
        let mut press = 0.0;
        let mut ok = true;
        for hold in 0..m {
            let train: Vec<DriftSample> = samples
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != hold)
                .map(|(_, s)| s.clone())
                .collect();
            match ridge_fit(&train, lambda) {
                Ok(fit) => {
                    let f = features_mhz(&samples[hold]);
                    for gi in 0..3 {
                        let mut pred = fit.intercepts[gi];
                        for feat in 0..3 {
                            if fit.feature_stds[feat] > 0.0 {
                                pred += fit.weights_normalized[gi][feat]
                                    * (f[feat] - fit.feature_means[feat])
                                    / fit.feature_stds[feat];
                            }
                        }
                        press += (samples[hold].gate_errors[gi] - pred).powi(2);
                    }
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        if best.is_none_or(|(_, b)| press < b) {
            best = Some((lambda, press));
        }
    }
    let (lambda, _) = best.ok_or(DriftError::SingularDesign)?;
    ridge_fit(samples, lambda)
}

/// Coherence-limit sensitivity of the gate error to the relaxation rate:
/// E ≈ (t_g/3)·Γ₁ gives w_Γ₁ = t_g/3, reported per MHz of Γ₁ (i.e. t_g in
/// µs divided by three).
pub fn analytical_t1_sensitivity(gate_time: f64) -> f64 {
    gate_time * 1e6 / 3.0
}
