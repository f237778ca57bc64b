//! Pulse parametrizations and the builtin pulse library.
//!
//! The optimizer's decision variables live in [`FourierPulse`]: five sine
//! coefficients per quadrature, chosen so both controls vanish at the pulse
//! edges, Ω_x is symmetric about the midpoint and Ω_y antisymmetric. The
//! reference pulse is a baseline-subtracted Gaussian with a derivative
//! correction on the second quadrature ([`DragPulse`]).

use alloc::vec::Vec;

use num_traits::Float;

use crate::linalg::C64;
use crate::model::ControlSample;
use crate::units::{mhz_to_rad, ns_to_s};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PulseError {
    /// Evaluation time outside [0, t_g].
    TimeOutOfRange { t: f64, gate_time: f64 },
    /// t_g/dt is not an integer within 1e−9 relative tolerance.
    NonCommensurateStep { gate_time: f64, dt: f64 },
    /// Gate time and widths must be positive, coefficients finite.
    InvalidParameter,
    /// Builtin pulse name not recognized.
    UnknownBuiltin,
}

impl core::fmt::Display for PulseError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PulseError::TimeOutOfRange { t, gate_time } => {
                write!(f, "time {t} outside pulse window [0, {gate_time}]")
            }
            PulseError::NonCommensurateStep { gate_time, dt } => {
                write!(
                    f,
                    "gate time {gate_time} is not an integer multiple of dt {dt}"
                )
            }
            PulseError::InvalidParameter => write!(f, "invalid pulse parameter"),
            PulseError::UnknownBuiltin => write!(f, "unknown builtin pulse name"),
        }
    }
}

impl core::error::Error for PulseError {}

pub const FOURIER_TERMS: usize = 5;

/// Sine-series pulse: Ω_x(t) = Ω₀·Σ aₙ sin((2n−1)πt/t_g),
/// Ω_y(t) = Ω₀·Σ bₙ sin(2nπt/t_g), n = 1..5.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierPulse {
    pub coeffs_a: [f64; FOURIER_TERMS],
    pub coeffs_b: [f64; FOURIER_TERMS],
    /// Gate duration t_g (s).
    pub gate_time_tg: f64,
    /// Amplitude normalization Ω₀ (rad/s).
    pub omega0: f64,
}

/// Odd-harmonic basis function of the x quadrature, n = 1..5.
pub(crate) fn basis_x(n: usize, t: f64, tg: f64) -> f64 {
    ((2 * n - 1) as f64 * core::f64::consts::PI * t / tg).sin()
}

/// Even-harmonic basis function of the y quadrature, n = 1..5.
pub(crate) fn basis_y(n: usize, t: f64, tg: f64) -> f64 {
    (2.0 * n as f64 * core::f64::consts::PI * t / tg).sin()
}

impl FourierPulse {
    pub fn new(
        coeffs_a: [f64; FOURIER_TERMS],
        coeffs_b: [f64; FOURIER_TERMS],
        gate_time_tg: f64,
        omega0: f64,
    ) -> Result<Self, PulseError> {
        let finite = coeffs_a
            .iter()
            .chain(coeffs_b.iter())
            .all(|c| c.is_finite());
        if !finite || !(gate_time_tg > 0.0) || !(omega0 > 0.0) {
            return Err(PulseError::InvalidParameter);
        }
        Ok(FourierPulse {
            coeffs_a,
            coeffs_b,
            gate_time_tg,
            omega0,
        })
    }

    pub fn zero(gate_time_tg: f64, omega0: f64) -> Result<Self, PulseError> {
        Self::new(
            [0.0; FOURIER_TERMS],
            [0.0; FOURIER_TERMS],
            gate_time_tg,
            omega0,
        )
    }

    /// Single-harmonic pulse whose x-area equals a π/2 rotation:
    /// a₁ = π²/(4·Ω₀·t_g), all other coefficients zero.
    pub fn half_sine_pi_half(gate_time_tg: f64, omega0: f64) -> Result<Self, PulseError> {
        let mut a = [0.0; FOURIER_TERMS];
        a[0] = core::f64::consts::PI * core::f64::consts::PI / (4.0 * omega0 * gate_time_tg);
        Self::new(a, [0.0; FOURIER_TERMS], gate_time_tg, omega0)
    }

    pub fn scaled(&self, s: f64) -> FourierPulse {
        let mut p = *self;
        for k in 0..FOURIER_TERMS {
            p.coeffs_a[k] *= s;
            p.coeffs_b[k] *= s;
        }
        p
    }

    /// Uniformly shrink the coefficients until every sample of both
    /// quadratures at step `dt` fits inside ±η·Ω₀. Feasible pulses are
    /// returned unchanged.
    pub fn projected_into(&self, eta: f64, dt: f64) -> Result<FourierPulse, PulseError> {
        let sampled = sample_fourier(self, dt)?;
        let mut peak = 0.0f64;
        for s in &sampled.samples {
            peak = peak.max(s.omega_x.abs()).max(s.omega_y.abs());
        }
        let bound = eta * self.omega0;
        if peak <= bound || peak == 0.0 {
            return Ok(*self);
        }
        // Undercut by 1e-12 so rounding in the rescaled samples cannot
        // land a hair above the bound.
        Ok(self.scaled(bound / peak * (1.0 - 1e-12)))
    }
}

/// Evaluate the Fourier pulse at time t ∈ [0, t_g].
pub fn eval_fourier(pulse: &FourierPulse, t: f64) -> Result<ControlSample, PulseError> {
    let tg = pulse.gate_time_tg;
    if !(0.0..=tg).contains(&t) {
        return Err(PulseError::TimeOutOfRange { t, gate_time: tg });
    }
    let mut ox = 0.0;
    let mut oy = 0.0;
    for n in 1..=FOURIER_TERMS {
        ox += pulse.coeffs_a[n - 1] * basis_x(n, t, tg);
        oy += pulse.coeffs_b[n - 1] * basis_y(n, t, tg);
    }
    Ok(ControlSample {
        omega_x: pulse.omega0 * ox,
        omega_y: pulse.omega0 * oy,
    })
}

/// Gaussian pulse with a derivative-quadrature correction.
///
/// Ω_x is a Gaussian of width σ centered at t_g/2, with the edge value
/// subtracted and the peak rescaled so Ω_x(0) = Ω_x(t_g) = 0 and
/// Ω_x(t_g/2) = peak_amplitude. Ω_y = β·dΩ_x/dt, evaluated analytically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DragPulse {
    /// Peak of the x quadrature (rad/s).
    pub peak_amplitude: f64,
    /// Gaussian width σ (s).
    pub sigma: f64,
    /// Derivative-correction coefficient β (s).
    pub beta: f64,
    /// Gate duration t_g (s).
    pub gate_time_tg: f64,
}

impl DragPulse {
    pub fn new(
        peak_amplitude: f64,
        sigma: f64,
        beta: f64,
        gate_time_tg: f64,
    ) -> Result<Self, PulseError> {
        if !(sigma > 0.0)
            || !(gate_time_tg > 0.0)
            || !peak_amplitude.is_finite()
            || !beta.is_finite()
        {
            return Err(PulseError::InvalidParameter);
        }
        Ok(DragPulse {
            peak_amplitude,
            sigma,
            beta,
            gate_time_tg,
        })
    }

    /// Analytic x-quadrature area ∫Ω_x dt, i.e. the rotation angle the pulse
    /// produces in the linear two-level limit.
    pub fn rotation_area(&self) -> f64 {
        let c = 0.5 * self.gate_time_tg;
        let g0 = (-(c * c) / (2.0 * self.sigma * self.sigma)).exp();
        let gauss_int = self.sigma
            * (2.0 * core::f64::consts::PI).sqrt()
            * libm::erf(c / (self.sigma * core::f64::consts::SQRT_2));
        self.peak_amplitude * (gauss_int - g0 * self.gate_time_tg) / (1.0 - g0)
    }

    /// Gaussian π/2 pulse of duration t_g with σ = t_g/6 and derivative
    /// coefficient β, peak chosen analytically for a π/2 x-area.
    pub fn x_pi_half(gate_time_tg: f64, beta: f64) -> Result<Self, PulseError> {
        let sigma = gate_time_tg / 6.0;
        let unit = DragPulse::new(1.0, sigma, beta, gate_time_tg)?;
        let peak = 0.5 * core::f64::consts::PI / unit.rotation_area();
        DragPulse::new(peak, sigma, beta, gate_time_tg)
    }

    /// Lowest-order leakage-cancelling derivative coefficient, β = −1/α.
    pub fn default_beta(anharmonicity_alpha: f64) -> f64 {
        -1.0 / anharmonicity_alpha
    }

    pub fn scaled(&self, s: f64) -> DragPulse {
        DragPulse {
            peak_amplitude: self.peak_amplitude * s,
            ..*self
        }
    }
}

/// Evaluate the DRAG pulse at time t ∈ [0, t_g].
pub fn eval_drag(pulse: &DragPulse, t: f64) -> Result<ControlSample, PulseError> {
    let tg = pulse.gate_time_tg;
    if !(0.0..=tg).contains(&t) {
        return Err(PulseError::TimeOutOfRange { t, gate_time: tg });
    }
    let c = 0.5 * tg;
    let s2 = pulse.sigma * pulse.sigma;
    let g = (-(t - c) * (t - c) / (2.0 * s2)).exp();
    let g0 = (-(c * c) / (2.0 * s2)).exp();
    let norm = pulse.peak_amplitude / (1.0 - g0);
    let ox = norm * (g - g0);
    let oy = pulse.beta * norm * (-(t - c) / s2) * g;
    Ok(ControlSample {
        omega_x: ox,
        omega_y: oy,
    })
}

/// Piecewise-constant discretization of a pulse: N = t_g/dt samples, sample
/// n holding the value at the interval midpoint (n + ½)·dt.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPulse {
    /// Step duration Δt (s).
    pub dt: f64,
    pub samples: Vec<ControlSample>,
}

impl SampledPulse {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn gate_time(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    /// Midpoint time of step n.
    pub fn step_time(&self, n: usize) -> f64 {
        (n as f64 + 0.5) * self.dt
    }
}

fn step_count(gate_time: f64, dt: f64) -> Result<usize, PulseError> {
    if !(dt > 0.0) {
        return Err(PulseError::InvalidParameter);
    }
    let ratio = gate_time / dt;
    let n = libm::round(ratio);
    if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
        return Err(PulseError::NonCommensurateStep { gate_time, dt });
    }
    Ok(n as usize)
}

/// Sample a Fourier pulse at step dt (midpoint convention).
pub fn sample_fourier(pulse: &FourierPulse, dt: f64) -> Result<SampledPulse, PulseError> {
    let n = step_count(pulse.gate_time_tg, dt)?;
    let samples = (0..n)
        .map(|k| eval_fourier(pulse, (k as f64 + 0.5) * dt))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SampledPulse { dt, samples })
}

/// Sample a DRAG pulse at step dt (midpoint convention).
pub fn sample_drag(pulse: &DragPulse, dt: f64) -> Result<SampledPulse, PulseError> {
    let n = step_count(pulse.gate_time_tg, dt)?;
    let samples = (0..n)
        .map(|k| eval_drag(pulse, (k as f64 + 0.5) * dt))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SampledPulse { dt, samples })
}

/// Either pulse parametrization, for code paths that accept both.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pulse {
    Fourier(FourierPulse),
    Drag(DragPulse),
}

impl Pulse {
    pub fn gate_time(&self) -> f64 {
        match self {
            Pulse::Fourier(p) => p.gate_time_tg,
            Pulse::Drag(p) => p.gate_time_tg,
        }
    }

    pub fn eval(&self, t: f64) -> Result<ControlSample, PulseError> {
        match self {
            Pulse::Fourier(p) => eval_fourier(p, t),
            Pulse::Drag(p) => eval_drag(p, t),
        }
    }

    pub fn scaled(&self, s: f64) -> Pulse {
        match self {
            Pulse::Fourier(p) => Pulse::Fourier(p.scaled(s)),
            Pulse::Drag(p) => Pulse::Drag(p.scaled(s)),
        }
    }
}

/// Sample either pulse kind at step dt.
pub fn sample_pulse(pulse: &Pulse, dt: f64) -> Result<SampledPulse, PulseError> {
    match pulse {
        Pulse::Fourier(p) => sample_fourier(p, dt),
        Pulse::Drag(p) => sample_drag(p, dt),
    }
}

/// Worst amplitude-bound violation over the sampled pulse:
/// max over samples of max(|Ω_x| − ηΩ₀, |Ω_y| − ηΩ₀, 0), in rad/s.
/// Zero means the pulse fits inside the ±ηΩ₀ box.
pub fn check_constraints(pulse: &FourierPulse, eta: f64, dt: f64) -> Result<f64, PulseError> {
    assert!(eta > 0.0, "amplitude bound eta must be positive");
    let sampled = sample_fourier(pulse, dt)?;
    let bound = eta * pulse.omega0;
    let mut worst = 0.0f64;
    for s in &sampled.samples {
        worst = worst
            .max(s.omega_x.abs() - bound)
            .max(s.omega_y.abs() - bound);
    }
    Ok(worst.max(0.0))
}

/// Library pulses with published coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BuiltinPulse {
    /// Frequency-robust gate, t_g = 112 ns.
    Frog,
    /// Amplitude-and-frequency-robust gate, t_g = 128 ns.
    Arog,
}

impl core::str::FromStr for BuiltinPulse {
    type Err = PulseError;
    fn from_str(s: &str) -> Result<Self, PulseError> {
        match s.to_ascii_lowercase().as_str() {
            "frog" => Ok(BuiltinPulse::Frog),
            "arog" => Ok(BuiltinPulse::Arog),
            _ => Err(PulseError::UnknownBuiltin),
        }
    }
}

/// Rabi normalization the builtin coefficients were derived against.
pub const BUILTIN_OMEGA0_MHZ: f64 = 17.7;

const FROG_A: [f64; 5] = [-0.6137, -0.0247, 0.0742, 0.0507, 0.0149];
const FROG_B: [f64; 5] = [-0.0106, 0.0334, 0.0579, 0.0140, -0.0416];
const AROG_A: [f64; 5] = [0.3492, -0.2470, -0.2474, -0.0773, 0.0352];
const AROG_B: [f64; 5] = [0.0859, -0.4581, -0.0206, 0.0213, 0.0614];

/// The published coefficient tables, verbatim, with their gate times and
/// Ω₀/2π = 17.7 MHz. No renormalization is applied.
pub fn builtin_pulse(name: BuiltinPulse) -> FourierPulse {
    let omega0 = mhz_to_rad(BUILTIN_OMEGA0_MHZ);
    match name {
        BuiltinPulse::Frog => FourierPulse::new(FROG_A, FROG_B, ns_to_s(112.0), omega0),
        BuiltinPulse::Arog => FourierPulse::new(AROG_A, AROG_B, ns_to_s(128.0), omega0),
    }
    .expect("builtin coefficients are valid")
}

/// Amplitude bound each builtin pulse was optimized against.
pub fn builtin_eta(name: BuiltinPulse) -> f64 {
    match name {
        BuiltinPulse::Frog => 0.55,
        BuiltinPulse::Arog => 0.46,
    }
}

/// Phase factor e^{iφ} as a complex number (convenience for callers that
/// rotate drive phases).
pub fn phase(phi: f64) -> C64 {
    C64::new(phi.cos(), phi.sin())
}
