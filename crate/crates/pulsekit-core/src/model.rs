//! Physical parameters and the driven three-level Hamiltonian.
//!
//! The qubit is modeled as the lowest three levels of a transmon in a frame
//! rotating at the qubit frequency. Two error channels are threaded through
//! every simulation: a detuning error δ (frequency miscalibration or drift)
//! and a drive amplitude error γ that rescales both control quadratures.

use crate::linalg::{Mat3, C64};

/// Physical constants of the modeled qubit. All frequencies angular (rad/s),
/// times in seconds. Coherence times are optional: purely unitary studies
/// never touch them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransmonParams {
    /// Anharmonicity α (rad/s). Negative for a transmon.
    pub anharmonicity_alpha: f64,
    /// Maximum Rabi rate Ω₀ (rad/s); normalizes pulse coefficients and the
    /// amplitude error γ.
    pub rabi_max_omega0: f64,
    /// Energy relaxation time T₁ (s).
    pub t1: Option<f64>,
    /// Pure dephasing time T_φ (s).
    pub tphi: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelError {
    /// Ω₀ must be strictly positive.
    NonPositiveRabiRate,
    /// T₁ and T_φ must be strictly positive when present.
    NonPositiveCoherenceTime,
    /// Inputs must be finite.
    NonFiniteInput,
}

impl core::fmt::Display for ModelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelError::NonPositiveRabiRate => write!(f, "rabi_max_omega0 must be > 0"),
            ModelError::NonPositiveCoherenceTime => {
                write!(f, "coherence times must be > 0 when present")
            }
            ModelError::NonFiniteInput => write!(f, "model inputs must be finite"),
        }
    }
}

impl core::error::Error for ModelError {}

impl TransmonParams {
    pub fn new(
        anharmonicity_alpha: f64,
        rabi_max_omega0: f64,
        t1: Option<f64>,
        tphi: Option<f64>,
    ) -> Result<Self, ModelError> {
        if !anharmonicity_alpha.is_finite() || !rabi_max_omega0.is_finite() {
            return Err(ModelError::NonFiniteInput);
        }
        if rabi_max_omega0 <= 0.0 {
            return Err(ModelError::NonPositiveRabiRate);
        }
        for t in [t1, tphi].into_iter().flatten() {
            if !(t > 0.0) {
                return Err(ModelError::NonPositiveCoherenceTime);
            }
        }
        Ok(TransmonParams {
            anharmonicity_alpha,
            rabi_max_omega0,
            t1,
            tphi,
        })
    }

    /// Relaxation rate Γ₁ = 1/T₁ (1/s), zero when T₁ is absent.
    pub fn gamma_1(&self) -> f64 {
        self.t1.map(|t| 1.0 / t).unwrap_or(0.0)
    }

    /// Pure dephasing rate Γ_φ = 1/T_φ (1/s), zero when T_φ is absent.
    pub fn gamma_phi(&self) -> f64 {
        self.tphi.map(|t| 1.0 / t).unwrap_or(0.0)
    }
}

/// One point in the (δ, γ) error plane (both angular, rad/s). Scans run
/// well outside the optimization ranges, so no bounds are imposed beyond
/// finiteness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorPoint {
    pub detuning_delta: f64,
    pub amplitude_gamma: f64,
}

impl ErrorPoint {
    pub const NOMINAL: ErrorPoint = ErrorPoint {
        detuning_delta: 0.0,
        amplitude_gamma: 0.0,
    };

    pub fn new(detuning_delta: f64, amplitude_gamma: f64) -> Result<Self, ModelError> {
        if !detuning_delta.is_finite() || !amplitude_gamma.is_finite() {
            return Err(ModelError::NonFiniteInput);
        }
        Ok(ErrorPoint {
            detuning_delta,
            amplitude_gamma,
        })
    }
}

/// Instantaneous value of the two control quadratures (rad/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlSample {
    pub omega_x: f64,
    pub omega_y: f64,
}

impl ControlSample {
    pub const ZERO: ControlSample = ControlSample {
        omega_x: 0.0,
        omega_y: 0.0,
    };

    pub fn new(omega_x: f64, omega_y: f64) -> Result<Self, ModelError> {
        if !omega_x.is_finite() || !omega_y.is_finite() {
            return Err(ModelError::NonFiniteInput);
        }
        Ok(ControlSample { omega_x, omega_y })
    }
}

/// The four constant operator blocks of the Hamiltonian:
/// (σˣ ladder sum, σʸ ladder sum, Σ k|k⟩⟨k|, |2⟩⟨2|). The ladder sums carry
/// the √2 bosonic enhancement on the 1↔2 transition.
pub fn ladder_operators() -> (Mat3, Mat3, Mat3, Mat3) {
    let s2 = core::f64::consts::SQRT_2;
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);

    let sigma_x_sum = Mat3::from_rows([
        [zero, one, zero],
        [one, zero, C64::new(s2, 0.0)],
        [zero, C64::new(s2, 0.0), zero],
    ]);
    let sigma_y_sum = Mat3::from_rows([[zero, -i, zero], [i, zero, -i * s2], [zero, i * s2, zero]]);
    let number_like = Mat3::diag_re(0.0, 1.0, 2.0);
    let leakage_proj = Mat3::diag_re(0.0, 0.0, 1.0);
    (sigma_x_sum, sigma_y_sum, number_like, leakage_proj)
}

/// H = α|2⟩⟨2| + δ·Σk|k⟩⟨k| + (1 + γ/Ω₀)·(Ω_x/2·σˣ + Ω_y/2·σʸ), in rad/s.
pub fn build_hamiltonian(
    params: &TransmonParams,
    err: &ErrorPoint,
    ctrl: &ControlSample,
) -> Result<Mat3, ModelError> {
    if params.rabi_max_omega0 == 0.0 {
        return Err(ModelError::NonPositiveRabiRate);
    }
    let (sx, sy, n, p2) = ladder_operators();
    let amp = 1.0 + err.amplitude_gamma / params.rabi_max_omega0;
    let h = p2.scale_re(params.anharmonicity_alpha)
        + n.scale_re(err.detuning_delta)
        + (sx.scale_re(0.5 * ctrl.omega_x) + sy.scale_re(0.5 * ctrl.omega_y)).scale_re(amp);
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz_to_rad;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> TransmonParams {
        TransmonParams::new(mhz_to_rad(-295.1), mhz_to_rad(17.7), None, None).unwrap()
    }

    #[test]
    fn ladder_entries() {
        let (sx, sy, n, p2) = ladder_operators();
        assert_eq!(sx[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(sx[(1, 2)], C64::new(core::f64::consts::SQRT_2, 0.0));
        for k in 0..3 {
            assert_eq!(sx[(k, k)], C64::new(0.0, 0.0));
            assert_eq!(sy[(k, k)], C64::new(0.0, 0.0));
        }
        assert_eq!(sy[(1, 0)], C64::new(0.0, 1.0));
        assert_eq!(sy[(0, 1)], C64::new(0.0, -1.0));
        assert_eq!(n, Mat3::diag_re(0.0, 1.0, 2.0));
        assert_eq!(p2, Mat3::diag_re(0.0, 0.0, 1.0));
        assert!(sx.hermiticity_defect() < 1e-15);
        assert!(sy.hermiticity_defect() < 1e-15);
    }

    #[test]
    fn drive_free_on_resonance_is_diagonal() {
        let p = params();
        let h = build_hamiltonian(&p, &ErrorPoint::NOMINAL, &ControlSample::ZERO).unwrap();
        let want = Mat3::diag_re(0.0, 0.0, mhz_to_rad(-295.1));
        assert!((h - want).frobenius_norm() < 1e-6);
    }

    #[test]
    fn hermitian_for_random_inputs() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let err = ErrorPoint::new(
                mhz_to_rad(rng.gen_range(-3.0..3.0)),
                mhz_to_rad(rng.gen_range(-3.0..3.0)),
            )
            .unwrap();
            let ctrl = ControlSample::new(
                mhz_to_rad(rng.gen_range(-20.0..20.0)),
                mhz_to_rad(rng.gen_range(-20.0..20.0)),
            )
            .unwrap();
            let h = build_hamiltonian(&p, &err, &ctrl).unwrap();
            assert!(h.hermiticity_defect() < 1e-12);
        }
    }

    #[test]
    fn linear_in_controls() {
        let p = params();
        let err = ErrorPoint::new(mhz_to_rad(0.3), mhz_to_rad(-0.7)).unwrap();
        let c1 = ControlSample::new(mhz_to_rad(4.0), mhz_to_rad(-2.0)).unwrap();
        let c2 = ControlSample::new(mhz_to_rad(-1.5), mhz_to_rad(6.0)).unwrap();
        let csum = ControlSample::new(c1.omega_x + c2.omega_x, c1.omega_y + c2.omega_y).unwrap();
        let h0 = build_hamiltonian(&p, &err, &ControlSample::ZERO).unwrap();
        let h1 = build_hamiltonian(&p, &err, &c1).unwrap();
        let h2 = build_hamiltonian(&p, &err, &c2).unwrap();
        let hs = build_hamiltonian(&p, &err, &csum).unwrap();
        let lhs = hs - h0;
        let rhs = (h1 - h0) + (h2 - h0);
        assert!((lhs - rhs).frobenius_norm() < 1e-9 * lhs.frobenius_norm().max(1.0));
    }

    #[test]
    fn gamma_at_minus_omega0_kills_drive() {
        let p = params();
        let err = ErrorPoint::new(0.0, -p.rabi_max_omega0).unwrap();
        let ctrl = ControlSample::new(mhz_to_rad(9.0), mhz_to_rad(-4.0)).unwrap();
        let h = build_hamiltonian(&p, &err, &ctrl).unwrap();
        let h_free = build_hamiltonian(&p, &ErrorPoint::NOMINAL, &ControlSample::ZERO).unwrap();
        assert_eq!(h, h_free);
    }

    #[test]
    fn invalid_params_rejected() {
        assert_eq!(
            TransmonParams::new(1.0, 0.0, None, None),
            Err(ModelError::NonPositiveRabiRate)
        );
        assert_eq!(
            TransmonParams::new(1.0, 1.0, Some(-2.0), None),
            Err(ModelError::NonPositiveCoherenceTime)
        );
        assert!(ErrorPoint::new(f64::NAN, 0.0).is_err());
    }
}
