//! Time evolution under piecewise-constant controls.
//!
//! Each sample interval is propagated with the exact matrix exponential of
//! its (constant) Hamiltonian, obtained from the Hermitian
//! eigendecomposition, so unitarity holds to machine precision at any step
//! size. The dissipative path exponentiates the full Lindblad generator per
//! step as a 9×9 superoperator, which keeps the trace and Hermiticity of ρ
//! exact and stays valid for arbitrarily long idle segments.

use alloc::vec::Vec;

use num_traits::Float;

use crate::linalg::{expm9, expm_hermitian, kron, unvectorize, vectorize, Mat3, Mat9, Vec9, C64};
use crate::model::{build_hamiltonian, ErrorPoint, ModelError, TransmonParams};
use crate::pulses::SampledPulse;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PropagationError {
    /// Input matrix is not Hermitian to tolerance.
    NonHermitian {
        defect: f64,
    },
    /// Step duration must be positive.
    NonPositiveDt,
    /// Matrix failed the unitarity invariant.
    NotUnitary {
        defect: f64,
    },
    /// Matrix failed the density-matrix invariants.
    NotDensityMatrix,
    /// Dissipative evolution requires T₁ and T_φ in the parameters.
    MissingCoherenceParams,
    /// Trace left the unit value beyond tolerance during integration.
    TraceDrift {
        drift: f64,
    },
    Model(ModelError),
}

impl From<ModelError> for PropagationError {
    fn from(e: ModelError) -> Self {
        PropagationError::Model(e)
    }
}

impl core::fmt::Display for PropagationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PropagationError::NonHermitian { defect } => {
                write!(f, "matrix is not Hermitian (defect {defect:.3e})")
            }
            PropagationError::NonPositiveDt => write!(f, "dt must be positive"),
            PropagationError::NotUnitary { defect } => {
                write!(f, "matrix is not unitary (defect {defect:.3e})")
            }
            PropagationError::NotDensityMatrix => write!(f, "matrix is not a density matrix"),
            PropagationError::MissingCoherenceParams => {
                write!(f, "dissipative evolution requires t1 and tphi")
            }
            PropagationError::TraceDrift { drift } => {
                write!(f, "trace drifted by {drift:.3e} during integration")
            }
            PropagationError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for PropagationError {}

const UNITARITY_TOL: f64 = 1e-10;

/// A 3×3 unitary, checked on construction (U†U = I within 1e−10 Frobenius).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary3(Mat3);

impl Unitary3 {
    pub fn new(m: Mat3) -> Result<Self, PropagationError> {
        let defect = (m.adjoint() * m - Mat3::identity()).frobenius_norm();
        if defect > UNITARITY_TOL {
            return Err(PropagationError::NotUnitary { defect });
        }
        Ok(Unitary3(m))
    }

    pub fn identity() -> Self {
        Unitary3(Mat3::identity())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Unitary3(self.0.adjoint())
    }

    pub fn compose(&self, rhs: &Unitary3) -> Unitary3 {
        Unitary3(self.0 * rhs.0)
    }
}

/// A 3×3 density matrix, checked on construction: Hermitian, unit trace
/// within 1e−10, eigenvalues ≥ −1e−10.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix3(Mat3);

impl DensityMatrix3 {
    pub fn new(m: Mat3) -> Result<Self, PropagationError> {
        if m.hermiticity_defect() > 1e-10 || (m.trace().re - 1.0).abs() > 1e-10 {
            return Err(PropagationError::NotDensityMatrix);
        }
        let (vals, _) = crate::linalg::eigh(&m);
        if vals.iter().any(|&v| v < -1e-10) {
            return Err(PropagationError::NotDensityMatrix);
        }
        Ok(DensityMatrix3(m))
    }

    /// |k⟩⟨k| for k = 0, 1, 2.
    pub fn basis_state(k: usize) -> Self {
        let mut m = Mat3::zero();
        m[(k, k)] = C64::new(1.0, 0.0);
        DensityMatrix3(m)
    }

    /// (|0⟩ + |1⟩)(⟨0| + ⟨1|)/2.
    pub fn plus_state() -> Self {
        let h = C64::new(0.5, 0.0);
        let mut m = Mat3::zero();
        m[(0, 0)] = h;
        m[(0, 1)] = h;
        m[(1, 0)] = h;
        m[(1, 1)] = h;
        DensityMatrix3(m)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn population(&self, k: usize) -> f64 {
        self.0[(k, k)].re
    }
}

/// Exact propagator exp(−i·H·dt) of a Hermitian step Hamiltonian.
pub fn step_propagator(h: &Mat3, dt: f64) -> Result<Unitary3, PropagationError> {
    if !(dt > 0.0) {
        return Err(PropagationError::NonPositiveDt);
    }
    let defect = h.hermiticity_defect();
    if defect > 1e-9 {
        return Err(PropagationError::NonHermitian { defect });
    }
    Unitary3::new(expm_hermitian(h, dt))
}

/// Forward evolution record used by the gradient computation.
pub(crate) struct Evolution {
    /// Step Hamiltonians H_n.
    pub hams: Vec<Mat3>,
    /// Step propagators P_n = exp(−i·H_n·Δt).
    pub props: Vec<Mat3>,
    /// Left partial products U_n = P_n···P_1.
    pub partials: Vec<Mat3>,
}

pub(crate) fn evolve_record(
    sampled: &SampledPulse,
    params: &TransmonParams,
    err: &ErrorPoint,
) -> Result<Evolution, PropagationError> {
    let n = sampled.len();
    let mut hams = Vec::with_capacity(n);
    let mut props = Vec::with_capacity(n);
    let mut partials = Vec::with_capacity(n);
    let mut acc = Mat3::identity();
    for ctrl in &sampled.samples {
        let h = build_hamiltonian(params, err, ctrl)?;
        let p = expm_hermitian(&h, sampled.dt);
        acc = p * acc;
        hams.push(h);
        props.push(p);
        partials.push(acc);
    }
    Ok(Evolution {
        hams,
        props,
        partials,
    })
}

/// Propagate a sampled pulse at one error point. Returns the final
/// propagator U(t_g) = P_N···P_1 together with every left partial product
/// U_n = P_n···P_1 (latest step leftmost), as needed by gradient sweeps.
pub fn evolve(
    sampled: &SampledPulse,
    params: &TransmonParams,
    err: &ErrorPoint,
) -> Result<(Unitary3, Vec<Unitary3>), PropagationError> {
    let record = evolve_record(sampled, params, err)?;
    let intermediates = record
        .partials
        .iter()
        .map(|m| Unitary3::new(*m))
        .collect::<Result<Vec<_>, _>>()?;
    let last = intermediates
        .last()
        .copied()
        .unwrap_or(Unitary3::identity());
    Ok((last, intermediates))
}

/// Qubit-subspace overlap trace Σ_{k=0,1} ⟨k|U_T†·U|k⟩.
pub(crate) fn qubit_overlap(u: &Mat3, target: &Mat3) -> C64 {
    let m = target.adjoint() * *u;
    m[(0, 0)] + m[(1, 1)]
}

/// Gate error E = 1 − ¼·|Σ_{k=0,1} ⟨k|U_T†U|k⟩|², insensitive to global
/// phase and to the content of the |2⟩ row except through unitarity.
pub fn gate_error(u: &Unitary3, target: &Unitary3) -> f64 {
    let s = qubit_overlap(u.matrix(), target.matrix());
    (1.0 - 0.25 * s.norm_sqr()).clamp(0.0, 1.0)
}

/// The target X_{π/2} unitary on the three-level space.
pub fn x_pi_half_target() -> Unitary3 {
    let r = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mi = C64::new(0.0, -core::f64::consts::FRAC_1_SQRT_2);
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    Unitary3::new(Mat3::from_rows([
        [r, mi, zero],
        [mi, r, zero],
        [zero, zero, one],
    ]))
    .expect("target is unitary")
}

/// Ideal π/2 rotation about the equatorial axis at angle φ from x
/// (φ = 0: X_{π/2}, φ = π/2: Y_{π/2}, φ = π: −X_{π/2}, ...), acting on the
/// qubit subspace with |2⟩ untouched.
pub fn ideal_pi_half(axis_phase: f64) -> Unitary3 {
    let c = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    let i = C64::new(0.0, 1.0);
    let em = C64::new(axis_phase.cos(), -axis_phase.sin());
    let ep = em.conj();
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    Unitary3::new(Mat3::from_rows([
        [c, -i * em * c.re, zero],
        [-i * ep * c.re, c, zero],
        [zero, zero, one],
    ]))
    .expect("rotation is unitary")
}

/// Diagonal of the frame rotation R(φ) = diag(1, e^{−iφ}, e^{−2iφ}).
/// Conjugating a propagator by R(φ) is the same as shifting the drive
/// phase of its pulse by φ.
pub fn frame_phases(phi: f64) -> [C64; 3] {
    let e1 = C64::new(phi.cos(), -phi.sin());
    [C64::new(1.0, 0.0), e1, e1 * e1]
}

/// Constant dissipation rates for the open-system path (1/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Rates {
    pub gamma_1: f64,
    pub gamma_phi: f64,
}

impl Rates {
    pub fn from_params(params: &TransmonParams) -> Result<Rates, PropagationError> {
        if params.t1.is_none() || params.tphi.is_none() {
            return Err(PropagationError::MissingCoherenceParams);
        }
        Ok(Rates {
            gamma_1: params.gamma_1(),
            gamma_phi: params.gamma_phi(),
        })
    }
}

/// Lindblad generator as a superoperator on row-major vec(ρ):
/// dρ/dt = −i[H,ρ] + Γ₁·D[|0⟩⟨1|]ρ + 2Γ_φ·D[|1⟩⟨1|]ρ,
/// with D[L]ρ = LρL† − ½{L†L, ρ}. Dissipation acts on the 0–1 subspace
/// only; the |2⟩ level evolves unitarily.
pub(crate) fn lindblad_generator(h: &Mat3, rates: Rates) -> Mat9 {
    let id = Mat3::identity();
    let mut gen = kron(h, &id.transpose());
    gen = gen.scale(C64::new(0.0, -1.0));
    gen.add_scaled(&kron(&id, &h.transpose()), C64::new(0.0, 1.0));

    let mut add_dissipator = |l: &Mat3, rate: f64| {
        if rate == 0.0 {
            return;
        }
        let ldl = l.adjoint() * *l;
        let r = C64::new(rate, 0.0);
        gen.add_scaled(&kron(l, &l.conj()), r);
        gen.add_scaled(&kron(&ldl, &id), C64::new(-0.5 * rate, 0.0));
        gen.add_scaled(&kron(&id, &ldl.transpose()), C64::new(-0.5 * rate, 0.0));
    };

    let mut lowering = Mat3::zero();
    lowering[(0, 1)] = C64::new(1.0, 0.0);
    add_dissipator(&lowering, rates.gamma_1);

    let mut dephase = Mat3::zero();
    dephase[(1, 1)] = C64::new(1.0, 0.0);
    add_dissipator(&dephase, 2.0 * rates.gamma_phi);

    gen
}

/// Quantum channel exp(L·dt) of one constant-Hamiltonian interval.
pub(crate) fn step_channel(h: &Mat3, dt: f64, rates: Rates) -> Mat9 {
    expm9(&lindblad_generator(h, rates).scale(C64::new(dt, 0.0)))
}

/// Channel of a whole sampled pulse: the step channels composed in time
/// order (latest step leftmost).
pub(crate) fn pulse_channel(
    sampled: &SampledPulse,
    params: &TransmonParams,
    err: &ErrorPoint,
    rates: Rates,
) -> Result<Mat9, PropagationError> {
    let mut acc = Mat9::identity();
    for ctrl in &sampled.samples {
        let h = build_hamiltonian(params, err, ctrl)?;
        acc = step_channel(&h, sampled.dt, rates).matmul(&acc);
    }
    Ok(acc)
}

/// Channel of a drive-free wait of the given duration.
pub(crate) fn idle_channel(
    duration: f64,
    params: &TransmonParams,
    err: &ErrorPoint,
    rates: Rates,
) -> Result<Mat9, PropagationError> {
    let h = build_hamiltonian(params, err, &crate::model::ControlSample::ZERO)?;
    Ok(step_channel(&h, duration, rates))
}

pub(crate) fn apply_channel(channel: &Mat9, rho: &Mat3) -> Mat3 {
    unvectorize(&channel.apply(&vectorize(rho)))
}

/// Propagate a density matrix through a sampled pulse under the dissipative
/// model. Requires T₁ and T_φ to be present in the parameters; aborts if
/// the trace drifts by more than 1e−8 at any step.
pub fn lindblad_evolve(
    sampled: &SampledPulse,
    params: &TransmonParams,
    err: &ErrorPoint,
    rho0: &DensityMatrix3,
) -> Result<DensityMatrix3, PropagationError> {
    let rates = Rates::from_params(params)?;
    let mut v: Vec9 = vectorize(rho0.matrix());
    for ctrl in &sampled.samples {
        let h = build_hamiltonian(params, err, ctrl)?;
        v = step_channel(&h, sampled.dt, rates).apply(&v);
        let trace = (v[0] + v[4] + v[8]).re;
        let drift = (trace - 1.0).abs();
        if drift > 1e-8 {
            return Err(PropagationError::TraceDrift { drift });
        }
    }
    DensityMatrix3::new(unvectorize(&v))
}
