//! Simulated calibration sequences: amplitude sweeps to the half-population
//! point, repeated-gate error amplification, Ramsey fringes and decay
//! curves. All populations are exact (infinite shots); fits are
//! deterministic given identical inputs.

use alloc::vec::Vec;

use num_traits::Float;

use crate::fit::levenberg_marquardt;
use crate::linalg::{Mat3, Vec3};
use crate::model::{ErrorPoint, TransmonParams};
use crate::propagation::{
    apply_channel, evolve, frame_phases, idle_channel, x_pi_half_target, PropagationError, Rates,
};
use crate::pulses::{sample_pulse, Pulse, PulseError, SampledPulse};
use crate::units::mhz_to_rad;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CalibrationError {
    Pulse(PulseError),
    Propagation(PropagationError),
    /// The scanned scales never cross the target population.
    NoCrossing,
    /// Too few repetition counts for a stable fit.
    InsufficientRepetitions {
        got: usize,
    },
    /// Delays must span several oscillation periods (Ramsey) or reach the
    /// decay time (relaxation).
    InsufficientSpan,
    /// Input trace carries no information (e.g. all delays zero).
    DegenerateInput,
    /// Nonlinear fit failed to converge.
    FitDiverged,
}

impl From<PulseError> for CalibrationError {
    fn from(e: PulseError) -> Self {
        CalibrationError::Pulse(e)
    }
}

impl From<PropagationError> for CalibrationError {
    fn from(e: PropagationError) -> Self {
        CalibrationError::Propagation(e)
    }
}

impl core::fmt::Display for CalibrationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CalibrationError::Pulse(e) => write!(f, "{e}"),
            CalibrationError::Propagation(e) => write!(f, "{e}"),
            CalibrationError::NoCrossing => write!(f, "no 0.5-population crossing in scan range"),
            CalibrationError::InsufficientRepetitions { got } => {
                write!(f, "need at least 10 repetition counts, got {got}")
            }
            CalibrationError::InsufficientSpan => write!(f, "delay span too short for the fit"),
            CalibrationError::DegenerateInput => write!(f, "input trace carries no information"),
            CalibrationError::FitDiverged => write!(f, "nonlinear fit did not converge"),
        }
    }
}

impl core::error::Error for CalibrationError {}

/// Combined per-gate calibration summary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationResult {
    /// Amplitude multiplier bringing the excited population to 0.5.
    pub amplitude_scale: f64,
    /// Residual amplitude error from error amplification (rad/s).
    pub residual_gamma: f64,
    /// Offset parameter of the amplification fit (½ for a clean gate).
    pub fitted_offset_a: f64,
}

/// Coherence quantities from Ramsey and decay fits. The pure dephasing
/// time satisfies 1/T_φ = 1/T₂* − 1/(2T₁).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherenceEstimate {
    /// Recovered detuning error (rad/s), artificial detuning removed.
    pub frequency_offset: f64,
    pub t2_star: f64,
    pub t1: f64,
    pub tphi: f64,
}

/// Outcome of the amplitude sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeCalibration {
    /// Scale at which the excited population crosses 0.5.
    pub amplitude_scale: f64,
    /// d(population)/d(scale) at the crossing; small for pulses whose
    /// rotation angle plateaus in amplitude.
    pub slope: f64,
}

/// Excited-state population after one pulse from |0⟩ at the nominal error
/// point, as a function of the amplitude scale.
pub fn amplitude_population(
    pulse: &Pulse,
    params: &TransmonParams,
    dt: f64,
    scale: f64,
) -> Result<f64, CalibrationError> {
    let sampled = sample_pulse(&pulse.scaled(scale), dt)?;
    let (u, _) = evolve(&sampled, params, &ErrorPoint::NOMINAL)?;
    let psi = *u.matrix() * Vec3::basis(0);
    Ok(1.0 - psi.e[0].norm_sqr())
}

/// Sweep the pulse amplitude until the excited population reaches 0.5,
/// then refine the crossing by bisection. The supplied scales must bracket
/// the crossing; if the sweep crosses 0.5 more than once (robust pulses
/// have non-monotonic population curves), the crossing nearest the current
/// calibration point (scale 1) is refined.
pub fn amplitude_sweep(
    pulse: &Pulse,
    params: &TransmonParams,
    scales: &[f64],
    dt: f64,
) -> Result<AmplitudeCalibration, CalibrationError> {
    let pops = scales
        .iter()
        .map(|&s| amplitude_population(pulse, params, dt, s))
        .collect::<Result<Vec<_>, _>>()?;
    let bracket = pops
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] - 0.5) * (w[1] - 0.5) <= 0.0)
        .min_by(|(i, _), (j, _)| {
            let di = (0.5 * (scales[*i] + scales[*i + 1]) - 1.0).abs();
            let dj = (0.5 * (scales[*j] + scales[*j + 1]) - 1.0).abs();
            di.partial_cmp(&dj).expect("finite scales")
        })
        .map(|(i, _)| i)
        .ok_or(CalibrationError::NoCrossing)?;
    let (mut lo, mut hi) = (scales[bracket], scales[bracket + 1]);
    let mut f_lo = pops[bracket] - 0.5;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let f_mid = amplitude_population(pulse, params, dt, mid)? - 0.5;
        if f_lo * f_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
        if (hi - lo).abs() < 1e-12 * hi.abs().max(1.0) {
            break;
        }
    }
    let scale = 0.5 * (lo + hi);
    let h = 1e-4 * scale.abs().max(1e-4);
    let slope = (amplitude_population(pulse, params, dt, scale + h)?
        - amplitude_population(pulse, params, dt, scale - h)?)
        / (2.0 * h);
    Ok(AmplitudeCalibration {
        amplitude_scale: scale,
        slope,
    })
}

/// Error-amplification fit outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorAmpFit {
    /// Extracted amplitude error γ (rad/s).
    pub residual_gamma: f64,
    /// Fitted offset a (½ for a perfect gate).
    pub fitted_offset_a: f64,
}

/// Ground-state populations of the repeated-gate sequence pulse^(2n+1)
/// for each n.
pub fn error_amp_populations(
    sampled: &SampledPulse,
    params: &TransmonParams,
    err: &ErrorPoint,
    n_values: &[usize],
) -> Result<Vec<f64>, CalibrationError> {
    let (u, _) = evolve(sampled, params, err)?;
    let u = *u.matrix();
    let max_n = n_values.iter().copied().max().unwrap_or(0);
    // States after odd powers U^(2n+1), built incrementally.
    let mut by_n = Vec::with_capacity(max_n + 1);
    let mut psi = u * Vec3::basis(0);
    by_n.push(psi.e[0].norm_sqr());
    for _ in 1..=max_n {
        psi = u * (u * psi);
        by_n.push(psi.e[0].norm_sqr());
    }
    Ok(n_values.iter().map(|&n| by_n[n]).collect())
}

/// Fit P(|0⟩) = a + ½(−1)ⁿ·cos(π/2 + nπ·γ/Ω₀) to the repeated-gate
/// populations and return the extracted γ. A coarse grid over γ/Ω₀ seeds
/// the nonlinear fit, which keeps it off aliased branches.
pub fn error_amp_extract(
    sampled: &SampledPulse,
    params: &TransmonParams,
    err: &ErrorPoint,
    n_values: &[usize],
) -> Result<ErrorAmpFit, CalibrationError> {
    if n_values.len() < 10 {
        return Err(CalibrationError::InsufficientRepetitions {
            got: n_values.len(),
        });
    }
    let pops = error_amp_populations(sampled, params, err, n_values)?;

    let model_at = |a: f64, g: f64, n: usize| -> f64 {
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        a + 0.5 * sign * (core::f64::consts::FRAC_PI_2 + n as f64 * core::f64::consts::PI * g).cos()
    };

    let a0 = pops.iter().sum::<f64>() / pops.len() as f64;
    let mut best_g = 0.0;
    let mut best_sse = f64::INFINITY;
    let mut k = -600i32;
    while k <= 600 {
        let g = k as f64 * 1e-4;
        let sse: f64 = n_values
            .iter()
            .zip(&pops)
            .map(|(&n, &p)| {
                let r = model_at(a0, g, n) - p;
                r * r
            })
            .sum();
        if sse < best_sse {
            best_sse = sse;
            best_g = g;
        }
        k += 1;
    }

    let mut model = |x: &[f64], out: &mut [f64]| {
        for (i, (&n, &p)) in n_values.iter().zip(&pops).enumerate() {
            out[i] = model_at(x[0], x[1], n) - p;
        }
    };
    let fit = levenberg_marquardt(
        &mut model,
        n_values.len(),
        &[a0, best_g],
        &[0.0, -0.5],
        &[1.0, 0.5],
        200,
    );
    if !fit.converged {
        return Err(CalibrationError::FitDiverged);
    }
    Ok(ErrorAmpFit {
        residual_gamma: fit.params[1] * params.rabi_max_omega0,
        fitted_offset_a: fit.params[0],
    })
}

/// Default artificial detuning applied in Ramsey runs so fringes oscillate
/// even on resonance.
pub const RAMSEY_ARTIFICIAL_DETUNING_MHZ: f64 = 0.5;

/// Ramsey fit outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RamseyFit {
    /// Recovered physical detuning (rad/s), artificial detuning removed.
    pub frequency_offset: f64,
    pub t2_star: f64,
}

fn rho_ground() -> Mat3 {
    let mut m = Mat3::zero();
    m[(0, 0)] = crate::linalg::C64::new(1.0, 0.0);
    m
}

fn apply_unitary(u: &Mat3, rho: &Mat3) -> Mat3 {
    *u * *rho * u.adjoint()
}

/// π/2 – wait(τ) – π/2 with ideal projection pulses and dissipative idles,
/// fitted to a damped cosine. Decoherence rates come from the parameters
/// (absent coherence times mean no decay). Uses the default artificial
/// detuning.
pub fn ramsey_estimate(
    params: &TransmonParams,
    err: &ErrorPoint,
    delays: &[f64],
) -> Result<RamseyFit, CalibrationError> {
    ramsey_estimate_with_detuning(
        params,
        err,
        delays,
        mhz_to_rad(RAMSEY_ARTIFICIAL_DETUNING_MHZ),
    )
}

/// Excited-state populations of the π/2 – wait(τ) – π/2 sequence.
pub fn ramsey_populations(
    params: &TransmonParams,
    err: &ErrorPoint,
    delays: &[f64],
    artificial_detuning: f64,
) -> Result<Vec<f64>, CalibrationError> {
    let omega_total = err.detuning_delta + artificial_detuning;
    let idle_err = ErrorPoint {
        detuning_delta: omega_total,
        amplitude_gamma: err.amplitude_gamma,
    };
    let rates = Rates {
        gamma_1: params.gamma_1(),
        gamma_phi: params.gamma_phi(),
    };
    let pulse = x_pi_half_target();
    let mut traces = Vec::with_capacity(delays.len());
    for &tau in delays {
        let mut rho = apply_unitary(pulse.matrix(), &rho_ground());
        if tau > 0.0 {
            let ch = idle_channel(tau, params, &idle_err, rates)?;
            rho = apply_channel(&ch, &rho);
        }
        rho = apply_unitary(pulse.matrix(), &rho);
        traces.push(1.0 - rho[(0, 0)].re);
    }
    Ok(traces)
}

pub fn ramsey_estimate_with_detuning(
    params: &TransmonParams,
    err: &ErrorPoint,
    delays: &[f64],
    artificial_detuning: f64,
) -> Result<RamseyFit, CalibrationError> {
    let omega_total = err.detuning_delta + artificial_detuning;
    let span = delays.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - delays.iter().cloned().fold(f64::INFINITY, f64::min);
    if span * artificial_detuning.abs() < 3.0 * core::f64::consts::TAU {
        return Err(CalibrationError::InsufficientSpan);
    }
    let traces = ramsey_populations(params, err, delays, artificial_detuning)?;

    // Fit in µs units: p(τ) = A·e^{−rτ}·cos(wτ + φ) + c.
    let xs: Vec<f64> = delays.iter().map(|&t| t * 1e6).collect();
    let mean = traces.iter().sum::<f64>() / traces.len() as f64;
    let amp0 = 0.5
        * (traces.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - traces.iter().cloned().fold(f64::INFINITY, f64::min));
    // Coarse frequency scan around the injected artificial detuning.
    let w_guess = (omega_total.abs() * 1e-6).max(0.05);
    let mut best_w = w_guess;
    let mut best_sse = f64::INFINITY;
    for k in 0..=400 {
        let w = w_guess * (0.5 + 1.5 * k as f64 / 400.0);
        let sse: f64 = xs
            .iter()
            .zip(&traces)
            .map(|(&x, &y)| {
                let r = amp0 * (w * x).cos() + mean - y;
                r * r
            })
            .sum();
        if sse < best_sse {
            best_sse = sse;
            best_w = w;
        }
    }
    let mut model = |p: &[f64], out: &mut [f64]| {
        for (i, (&x, &y)) in xs.iter().zip(&traces).enumerate() {
            out[i] = p[0] * (-p[1] * x).exp() * (p[2] * x + p[3]).cos() + p[4] - y;
        }
    };
    let fit = levenberg_marquardt(
        &mut model,
        xs.len(),
        &[amp0.max(0.05), 0.0, best_w, 0.0, mean],
        &[0.0, 0.0, 0.0, -core::f64::consts::PI, 0.0],
        &[1.0, 100.0, 1e3, core::f64::consts::PI, 1.0],
        400,
    );
    if !fit.converged {
        return Err(CalibrationError::FitDiverged);
    }
    let w_fit = fit.params[2] * 1e6;
    let rate_fit = fit.params[1] * 1e6;
    Ok(RamseyFit {
        frequency_offset: w_fit - artificial_detuning,
        t2_star: if rate_fit > 1e-3 {
            1.0 / rate_fit
        } else {
            f64::INFINITY
        },
    })
}

/// Relaxation fit outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct T1Fit {
    pub t1: f64,
    /// Set when the trace is flat and no decay constant is identifiable.
    pub unbounded: bool,
}

/// Remaining excited-state population after each delay.
pub fn t1_populations(
    params: &TransmonParams,
    delays: &[f64],
) -> Result<Vec<f64>, CalibrationError> {
    let rates = Rates {
        gamma_1: params.gamma_1(),
        gamma_phi: params.gamma_phi(),
    };
    let mut excited = Mat3::zero();
    excited[(1, 1)] = crate::linalg::C64::new(1.0, 0.0);
    let mut traces = Vec::with_capacity(delays.len());
    for &tau in delays {
        let rho = if tau > 0.0 {
            let ch = idle_channel(tau, params, &ErrorPoint::NOMINAL, rates)?;
            apply_channel(&ch, &excited)
        } else {
            excited
        };
        traces.push(rho[(1, 1)].re);
    }
    Ok(traces)
}

/// Excite, wait, measure: exponential fit of the remaining excited
/// population over the given delays.
pub fn t1_estimate(params: &TransmonParams, delays: &[f64]) -> Result<T1Fit, CalibrationError> {
    let span = delays.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if delays.is_empty() || span <= 0.0 {
        return Err(CalibrationError::DegenerateInput);
    }
    if let Some(t1) = params.t1 {
        if t1.is_finite() && span < 2.0 * t1 {
            return Err(CalibrationError::InsufficientSpan);
        }
    }
    let traces = t1_populations(params, delays)?;
    let spread = traces.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - traces.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread < 1e-12 {
        return Ok(T1Fit {
            t1: f64::INFINITY,
            unbounded: true,
        });
    }

    let xs: Vec<f64> = delays.iter().map(|&t| t * 1e6).collect();
    let mut model = |p: &[f64], out: &mut [f64]| {
        for (i, (&x, &y)) in xs.iter().zip(&traces).enumerate() {
            out[i] = p[0] * (-p[1] * x).exp() + p[2] - y;
        }
    };
    let fit = levenberg_marquardt(
        &mut model,
        xs.len(),
        &[1.0, 1.0 / (0.5 * span * 1e6), 0.0],
        &[0.0, 1e-6, -0.5],
        &[1.5, 1e3, 0.5],
        400,
    );
    if !fit.converged {
        return Err(CalibrationError::FitDiverged);
    }
    Ok(T1Fit {
        t1: 1e-6 / fit.params[1],
        unbounded: false,
    })
}

/// Combine Ramsey and relaxation fits; T_φ follows from
/// 1/T_φ = 1/T₂* − 1/(2T₁).
pub fn coherence_estimate(ramsey: &RamseyFit, t1: &T1Fit) -> CoherenceEstimate {
    let inv_tphi = 1.0 / ramsey.t2_star - 0.5 / t1.t1;
    CoherenceEstimate {
        frequency_offset: ramsey.frequency_offset,
        t2_star: ramsey.t2_star,
        t1: t1.t1,
        tphi: if inv_tphi > 0.0 {
            1.0 / inv_tphi
        } else {
            f64::INFINITY
        },
    }
}

/// Final ground-state population of (X_{π/2}·Z_π·X_{π/2}·Z_π)^m·Y_{π/2}
/// for each m, with the Z_π gates folded into the drive phases.
pub fn drag_z_sequence_populations(
    sampled: &SampledPulse,
    params: &TransmonParams,
    err: &ErrorPoint,
    m_values: &[usize],
) -> Result<Vec<f64>, CalibrationError> {
    let (u, _) = evolve(sampled, params, err)?;
    let u = *u.matrix();
    let apply_at = |psi: Vec3, phi: f64| -> Vec3 {
        let d = frame_phases(phi);
        let mut v = psi;
        for k in 0..3 {
            v.e[k] *= d[k];
        }
        v = u * v;
        for k in 0..3 {
            v.e[k] *= d[k].conj();
        }
        v
    };
    let max_m = m_values.iter().copied().max().unwrap_or(0);
    let mut by_m = Vec::with_capacity(max_m + 1);
    let mut psi = Vec3::basis(0);
    let mut frame = 0.0;
    by_m.push(psi);
    for _ in 1..=max_m {
        psi = apply_at(psi, frame);
        frame += core::f64::consts::PI;
        psi = apply_at(psi, frame);
        frame += core::f64::consts::PI;
        by_m.push(psi);
    }
    Ok(m_values
        .iter()
        .map(|&m| {
            // Frame after m units is 2πm; the trailing Y_{π/2} sees it.
            let phi = core::f64::consts::FRAC_PI_2 + m as f64 * core::f64::consts::TAU;
            let final_psi = apply_at(by_m[m], phi);
            final_psi.e[0].norm_sqr()
        })
        .collect())
}
