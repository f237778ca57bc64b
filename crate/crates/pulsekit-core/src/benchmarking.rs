//! Simulated single-qubit randomized benchmarking.
//!
//! Cliffords are decomposed into at most two π/2 pulses from
//! {X_{π/2}, −X_{π/2}, Y_{π/2}, −Y_{π/2}} plus virtual Z frame rotations.
//! The Y and negative rotations are the same physical pulse at a shifted
//! drive phase, so a sequence needs only one propagator (or one dissipative
//! channel) per error point, conjugated by diagonal frame phases. Sequence
//! survival is fitted to A·p^{N_C} + B; the single-length proxy and its
//! inversion handle robustness-landscape scans.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fit::levenberg_marquardt;
use crate::linalg::{Mat3, Mat9, Vec3, C64};
use crate::model::{ErrorPoint, TransmonParams};
use crate::propagation::{
    apply_channel, evolve, frame_phases, pulse_channel, PropagationError, Rates, Unitary3,
};
use crate::pulses::{PulseError, SampledPulse};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BenchmarkError {
    Propagation(PropagationError),
    Pulse(PulseError),
    /// At least one sequence length is required.
    EmptyLengths,
    /// Grid dimensions must be at least 1×1.
    EmptyGrid,
}

impl From<PropagationError> for BenchmarkError {
    fn from(e: PropagationError) -> Self {
        BenchmarkError::Propagation(e)
    }
}

impl From<PulseError> for BenchmarkError {
    fn from(e: PulseError) -> Self {
        BenchmarkError::Pulse(e)
    }
}

impl core::fmt::Display for BenchmarkError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            BenchmarkError::Propagation(e) => write!(f, "{e}"),
            BenchmarkError::Pulse(e) => write!(f, "{e}"),
            BenchmarkError::EmptyLengths => write!(f, "no sequence lengths given"),
            BenchmarkError::EmptyGrid => write!(f, "landscape grid must be at least 1x1"),
        }
    }
}

impl core::error::Error for BenchmarkError {}

/// Sequence-fidelity offset constants of the readout used for proxy
/// inversion on scans.
pub const DEFAULT_FIT_A: f64 = 0.435;
pub const DEFAULT_FIT_B: f64 = 0.507;

/// The four physical π/2 pulses: one envelope, four drive phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhysOp {
    XPlus,
    XMinus,
    YPlus,
    YMinus,
}

pub const PHYS_OPS: [PhysOp; 4] = [PhysOp::XPlus, PhysOp::XMinus, PhysOp::YPlus, PhysOp::YMinus];

impl PhysOp {
    /// Drive phase of the pulse relative to the x axis.
    pub fn axis_phase(&self) -> f64 {
        match self {
            PhysOp::XPlus => 0.0,
            PhysOp::YPlus => core::f64::consts::FRAC_PI_2,
            PhysOp::XMinus => core::f64::consts::PI,
            PhysOp::YMinus => 3.0 * core::f64::consts::FRAC_PI_2,
        }
    }
}

/// One Clifford element: its group index, the physical pulses that realize
/// it and the frame-rotation angles interleaved around them
/// (`virtual_z_phases.len() == physical_ops.len() + 1`; entry i is applied
/// before op i, the last entry after the final op).
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordElement {
    pub index: usize,
    pub physical_ops: Vec<PhysOp>,
    pub virtual_z_phases: Vec<f64>,
}

impl CliffordElement {
    pub fn op_count(&self) -> usize {
        self.physical_ops.len()
    }
}

// --- 2×2 helpers for the ideal group representation -------------------

#[derive(Clone, Copy, Debug)]
struct M2([[C64; 2]; 2]);

impl M2 {
    fn identity() -> M2 {
        M2([
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        ])
    }

    fn mul(&self, rhs: &M2) -> M2 {
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                out[r][c] = self.0[r][0] * rhs.0[0][c] + self.0[r][1] * rhs.0[1][c];
            }
        }
        M2(out)
    }

    fn adjoint(&self) -> M2 {
        M2([
            [self.0[0][0].conj(), self.0[1][0].conj()],
            [self.0[0][1].conj(), self.0[1][1].conj()],
        ])
    }

    fn trace_with(&self, rhs: &M2) -> C64 {
        let p = self.mul(rhs);
        p.0[0][0] + p.0[1][1]
    }

    /// 1 − |tr(self†·rhs)|/2: zero iff equal up to a global phase.
    fn phase_distance(&self, rhs: &M2) -> f64 {
        1.0 - 0.5 * self.adjoint().trace_with(rhs).norm()
    }
}

fn z_rot(theta: f64) -> M2 {
    M2([
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(theta.cos(), -theta.sin())],
    ])
}

fn pi_half_2x2(axis_phase: f64) -> M2 {
    let c = core::f64::consts::FRAC_1_SQRT_2;
    let em = C64::new(axis_phase.cos(), -axis_phase.sin());
    M2([
        [C64::new(c, 0.0), C64::new(0.0, -c) * em],
        [C64::new(0.0, -c) * em.conj(), C64::new(c, 0.0)],
    ])
}

/// Compose an element's word in time order: Z(θ_k)·P_k···P_1·Z(θ_0).
fn element_unitary(elem: &CliffordElement) -> M2 {
    let mut u = z_rot(elem.virtual_z_phases[0]);
    for (i, op) in elem.physical_ops.iter().enumerate() {
        u = pi_half_2x2(op.axis_phase()).mul(&u);
        u = z_rot(elem.virtual_z_phases[i + 1]).mul(&u);
    }
    u
}

fn phase_normalized_key(u: &M2) -> [i32; 8] {
    // Normalize the global phase against the largest entry, then grid-round.
    let mut best = (0usize, 0usize);
    let mut mag = -1.0;
    for r in 0..2 {
        for c in 0..2 {
            let m = u.0[r][c].norm();
            if m > mag + 1e-9 {
                mag = m;
                best = (r, c);
            }
        }
    }
    let phase = u.0[best.0][best.1] / u.0[best.0][best.1].norm();
    let mut key = [0i32; 8];
    for r in 0..2 {
        for c in 0..2 {
            let z = u.0[r][c] / phase;
            key[4 * r + 2 * c] = libm::round(z.re * 1e4) as i32;
            key[4 * r + 2 * c + 1] = libm::round(z.im * 1e4) as i32;
        }
    }
    key
}

/// The 24 single-qubit Clifford group elements with minimal-pulse
/// decompositions found by exhaustive search over pulse words of length
/// ≤ 2 and frame angles in multiples of π/2. Frame rotations accompany
/// pulses rather than standing alone: the identity is the only pulse-free
/// element, which makes the average pulse count exactly 1.25. Index 0 is
/// the identity; ordering is the deterministic closure order from the
/// {X_{π/2}, Z_{π/2}} generators.
pub struct CliffordTable {
    pub elements: Vec<CliffordElement>,
    unitaries: Vec<M2>,
}

impl CliffordTable {
    /// Ideal qubit-subspace unitary of element `idx`.
    pub fn group_unitary(&self, idx: usize) -> [[C64; 2]; 2] {
        self.unitaries[idx].0
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Average number of physical pulses per element.
    pub fn mean_physical_ops(&self) -> f64 {
        let total: usize = self.elements.iter().map(|e| e.op_count()).sum();
        total as f64 / self.elements.len() as f64
    }

    /// Index of the element matching `target` up to a global phase.
    fn closest_index(&self, target: &M2) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (k, u) in self.unitaries.iter().enumerate() {
            let d = u.phase_distance(target);
            if d < best_dist {
                best_dist = d;
                best = k;
            }
        }
        best
    }
}

/// Build the group and the decomposition table.
pub fn clifford_table() -> CliffordTable {
    // Closure of the group from its generators, in deterministic order.
    let gens = [pi_half_2x2(0.0), z_rot(core::f64::consts::FRAC_PI_2)];
    let mut unitaries: Vec<M2> = vec![M2::identity()];
    let mut keys: Vec<[i32; 8]> = vec![phase_normalized_key(&M2::identity())];
    let mut cursor = 0;
    while cursor < unitaries.len() {
        let base = unitaries[cursor];
        for g in &gens {
            let candidate = g.mul(&base);
            let key = phase_normalized_key(&candidate);
            if !keys.contains(&key) {
                keys.push(key);
                unitaries.push(candidate);
            }
        }
        cursor += 1;
    }
    debug_assert_eq!(unitaries.len(), 24);

    // Exhaustive decomposition search, shortest words first.
    let quarter_turns = [
        0.0,
        core::f64::consts::FRAC_PI_2,
        core::f64::consts::PI,
        3.0 * core::f64::consts::FRAC_PI_2,
    ];
    let mut decomps: Vec<Option<CliffordElement>> = vec![None; unitaries.len()];
    let mut found = 0usize;

    let try_word = |ops: &[PhysOp],
                    phases: &[f64],
                    decomps: &mut Vec<Option<CliffordElement>>,
                    found: &mut usize| {
        let candidate = CliffordElement {
            index: 0,
            physical_ops: ops.to_vec(),
            virtual_z_phases: phases.to_vec(),
        };
        let u = element_unitary(&candidate);
        let key = phase_normalized_key(&u);
        if let Some(idx) = keys.iter().position(|k| *k == key) {
            if decomps[idx].is_none() {
                decomps[idx] = Some(CliffordElement {
                    index: idx,
                    ..candidate
                });
                *found += 1;
            }
        }
    };

    // A bare frame rotation is not a table element on its own; only the
    // identity goes without a pulse.
    try_word(&[], &[0.0], &mut decomps, &mut found);
    for op1 in PHYS_OPS {
        for &t0 in &quarter_turns {
            for &t1 in &quarter_turns {
                try_word(&[op1], &[t0, t1], &mut decomps, &mut found);
            }
        }
    }
    'outer: for op1 in PHYS_OPS {
        for op2 in PHYS_OPS {
            for &t0 in &quarter_turns {
                for &t1 in &quarter_turns {
                    for &t2 in &quarter_turns {
                        try_word(&[op1, op2], &[t0, t1, t2], &mut decomps, &mut found);
                        if found == unitaries.len() {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }

    let elements = decomps
        .into_iter()
        .map(|d| d.expect("every Clifford decomposes within two pulses"))
        .collect();
    CliffordTable {
        elements,
        unitaries,
    }
}

/// Deterministic per-task seed derived from a master seed and two indices.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut z =
        master ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform random sequence of `n_cliffords` elements plus the recovery
/// element that returns the ideal composition to the identity (up to a
/// global phase). Fixed seeds give fixed sequences.
pub fn rb_sequence(
    table: &CliffordTable,
    n_cliffords: usize,
    rng_seed: u64,
) -> (Vec<CliffordElement>, CliffordElement) {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut composition = M2::identity();
    let mut seq = Vec::with_capacity(n_cliffords);
    for _ in 0..n_cliffords {
        let k = rng.gen_range(0..table.elements.len());
        composition = M2(table.group_unitary(k)).mul(&composition);
        seq.push(table.elements[k].clone());
    }
    let inverse = composition.adjoint();
    let recovery = table.elements[table.closest_index(&inverse)].clone();
    (seq, recovery)
}

/// How a sequence is propagated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseModel {
    /// Pure-state propagation with the pulse's unitary.
    Unitary,
    /// Density-matrix propagation including T₁ decay and pure dephasing.
    Lindblad,
}

/// Measurement assignment errors folded onto the ideal survival:
/// reported = (1 − eps0)·P(0) + eps1·(1 − P(0)).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadoutError {
    /// Probability of reading "not 0" on state 0.
    pub eps0: f64,
    /// Probability of reading "0" on excited population.
    pub eps1: f64,
}

impl ReadoutError {
    /// Assignment errors that reproduce given sequence-fidelity constants
    /// A and B for an ideal (A₀ = B₀ = ½) decay.
    pub fn reproducing(a: f64, b: f64) -> ReadoutError {
        ReadoutError {
            eps0: 1.0 - a - b,
            eps1: b - a,
        }
    }

    fn apply(&self, survival: f64) -> f64 {
        (1.0 - self.eps0) * survival + self.eps1 * (1.0 - survival)
    }
}

/// Settings of one RB simulation.
#[derive(Clone, Debug)]
pub struct RbRun {
    pub lengths: Vec<usize>,
    pub n_random: usize,
    pub noise: NoiseModel,
    pub seed: u64,
    /// Assignment-error channel; off by default.
    pub readout_error: Option<ReadoutError>,
}

/// Decay-fit outcome and per-length statistics.
#[derive(Clone, Debug)]
pub struct RbOutcome {
    pub lengths: Vec<usize>,
    pub seq_fidelity_mean: Vec<f64>,
    pub seq_fidelity_std: Vec<f64>,
    /// Per-gate error from the decay constant: (1 − p)(1 − 1/d)/N_g, d = 2.
    pub fitted_gate_error: f64,
    pub fit_a: f64,
    pub fit_b: f64,
    pub fit_p: f64,
    pub fit_converged: bool,
    /// ⟨σ⟩: mean of the per-length standard deviations.
    pub mean_std_over_lengths: f64,
}

enum GateKernel {
    Unitary(Mat3),
    Channel(Box<Mat9>),
}

impl GateKernel {
    /// Ground-state survival of one sequence (with recovery appended),
    /// tracking the virtual-Z frame through the drive phases.
    fn sequence_survival(&self, seq: &[CliffordElement], recovery: &CliffordElement) -> f64 {
        match self {
            GateKernel::Unitary(u) => {
                let mut psi = Vec3::basis(0);
                let mut frame = 0.0;
                let mut run = |elem: &CliffordElement| {
                    for (i, op) in elem.physical_ops.iter().enumerate() {
                        frame += elem.virtual_z_phases[i];
                        let d = frame_phases(op.axis_phase() + frame);
                        // A(φ)·ψ = R(φ)†·U·R(φ)·ψ with R diagonal.
                        let mut v = psi;
                        for k in 0..3 {
                            v.e[k] *= d[k];
                        }
                        v = *u * v;
                        for k in 0..3 {
                            v.e[k] *= d[k].conj();
                        }
                        psi = v;
                    }
                    frame += elem.virtual_z_phases[elem.physical_ops.len()];
                };
                for elem in seq {
                    run(elem);
                }
                run(recovery);
                psi.e[0].norm_sqr()
            }
            GateKernel::Channel(ch) => {
                let mut rho = Mat3::zero();
                rho[(0, 0)] = C64::new(1.0, 0.0);
                let mut frame = 0.0;
                let mut run = |elem: &CliffordElement| {
                    for (i, op) in elem.physical_ops.iter().enumerate() {
                        frame += elem.virtual_z_phases[i];
                        let d = frame_phases(op.axis_phase() + frame);
                        let dc = [d[0].conj(), d[1].conj(), d[2].conj()];
                        // E_φ(ρ) = R(φ)†·E₀(R(φ)·ρ·R(φ)†)·R(φ)
                        let rotated = rho.conjugate_by_diag(dc);
                        let evolved = apply_channel(ch, &rotated);
                        rho = evolved.conjugate_by_diag(d);
                    }
                    frame += elem.virtual_z_phases[elem.physical_ops.len()];
                };
                for elem in seq {
                    run(elem);
                }
                run(recovery);
                rho[(0, 0)].re
            }
        }
    }
}

/// Mean and sample standard deviation of survival over `n_random`
/// sequences at one length, with deterministic per-sequence seeds.
fn survival_stats(
    kernel: &GateKernel,
    table: &CliffordTable,
    length: usize,
    n_random: usize,
    base_seed: u64,
    readout: Option<ReadoutError>,
) -> (f64, f64) {
    let mut values = Vec::with_capacity(n_random);
    for r in 0..n_random {
        let (seq, recovery) = rb_sequence(
            table,
            length,
            derive_seed(base_seed, length as u64, r as u64),
        );
        let mut s = kernel.sequence_survival(&seq, &recovery);
        if let Some(ro) = readout {
            s = ro.apply(s);
        }
        values.push(s);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Decay-fit parameters of F_seq(N) = A·p^N + B.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RbDecayFit {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub converged: bool,
}

/// Nonlinear least squares on (A, B, p) with A, B, p ∈ [0, 1]. Flat traces
/// fit to p = 1 exactly; an unstable fit falls back to fixing B at the
/// tail mean and log-linear regression for A and p.
pub fn fit_rb_decay(lengths: &[usize], means: &[f64]) -> RbDecayFit {
    assert_eq!(lengths.len(), means.len());
    assert!(!lengths.is_empty());
    let spread = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - means.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean_all = means.iter().sum::<f64>() / means.len() as f64;
    if spread < 1e-9 {
        // Flat trace: no decay to fit.
        return RbDecayFit {
            a: 0.0,
            b: mean_all,
            p: 1.0,
            converged: true,
        };
    }

    let b0 = means.last().copied().unwrap_or(0.5).clamp(0.0, 1.0);
    let a0 = (means.first().copied().unwrap_or(1.0) - b0).clamp(0.01, 1.0);
    let mid = lengths.len() / 2;
    let p0 = if lengths[mid] > 0 && means[mid] > b0 {
        ((means[mid] - b0) / a0)
            .max(1e-6)
            .powf(1.0 / lengths[mid] as f64)
            .clamp(0.2, 0.999_999)
    } else {
        0.99
    };

    let mut model = |x: &[f64], out: &mut [f64]| {
        for (i, (&l, &m)) in lengths.iter().zip(means).enumerate() {
            out[i] = x[0] * x[2].powi(l as i32) + x[1] - m;
        }
    };
    let fit = levenberg_marquardt(
        &mut model,
        lengths.len(),
        &[a0, b0, p0],
        &[0.0, 0.0, 0.0],
        &[1.0, 1.0, 1.0],
        300,
    );
    if fit.converged && fit.params[2] > 0.0 {
        // A vanishing decay amplitude leaves p unconstrained; report the
        // trace as decay-free rather than passing through a spurious p.
        if fit.params[0] < 1e-9 {
            return RbDecayFit {
                a: fit.params[0],
                b: fit.params[1],
                p: 1.0,
                converged: true,
            };
        }
        return RbDecayFit {
            a: fit.params[0],
            b: fit.params[1],
            p: fit.params[2],
            converged: true,
        };
    }

    // Fallback: fix B at the tail mean, regress log(mean − B) on length.
    let tail = means.len().saturating_sub(2);
    let b_fix = means[tail..].iter().sum::<f64>() / (means.len() - tail) as f64;
    let pts: Vec<(f64, f64)> = lengths
        .iter()
        .zip(means)
        .filter(|(_, &m)| m - b_fix > 1e-9)
        .map(|(&l, &m)| (l as f64, (m - b_fix).ln()))
        .collect();
    if pts.len() >= 2 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() > 1e-12 {
            let slope = (n * sxy - sx * sy) / denom;
            let intercept = (sy - slope * sx) / n;
            return RbDecayFit {
                a: intercept.exp().clamp(0.0, 1.0),
                b: b_fix.clamp(0.0, 1.0),
                p: slope.exp().clamp(0.0, 1.0),
                converged: false,
            };
        }
    }
    RbDecayFit {
        a: a0,
        b: b_fix,
        p: p0,
        converged: false,
    }
}

fn outcome_from_stats(lengths: Vec<usize>, means: Vec<f64>, stds: Vec<f64>, n_g: f64) -> RbOutcome {
    let fit = fit_rb_decay(&lengths, &means);
    let gate_error = ((1.0 - fit.p) * 0.5 / n_g).max(0.0);
    let mean_std = stds.iter().sum::<f64>() / stds.len().max(1) as f64;
    RbOutcome {
        lengths,
        seq_fidelity_mean: means,
        seq_fidelity_std: stds,
        fitted_gate_error: gate_error,
        fit_a: fit.a,
        fit_b: fit.b,
        fit_p: fit.p,
        fit_converged: fit.converged,
        mean_std_over_lengths: mean_std,
    }
}

fn rb_with_kernel(kernel: &GateKernel, table: &CliffordTable, run: &RbRun) -> RbOutcome {
    let mut means = Vec::with_capacity(run.lengths.len());
    let mut stds = Vec::with_capacity(run.lengths.len());
    for (li, &length) in run.lengths.iter().enumerate() {
        let (mean, std) = survival_stats(
            kernel,
            table,
            length,
            run.n_random,
            derive_seed(run.seed, li as u64, 0x5eed),
            run.readout_error,
        );
        means.push(mean);
        stds.push(std);
    }
    outcome_from_stats(run.lengths.clone(), means, stds, table.mean_physical_ops())
}

/// Simulate RB with the given X_{π/2} pulse at one error point. The ±X and
/// ±Y gates reuse the same envelope at shifted drive phases.
pub fn simulate_rb(
    sampled: &SampledPulse,
    params: &TransmonParams,
    err: &ErrorPoint,
    run: &RbRun,
) -> Result<RbOutcome, BenchmarkError> {
    if run.lengths.is_empty() {
        return Err(BenchmarkError::EmptyLengths);
    }
    let table = clifford_table();
    let kernel = match run.noise {
        NoiseModel::Unitary => {
            let (u, _) = evolve(sampled, params, err)?;
            GateKernel::Unitary(*u.matrix())
        }
        NoiseModel::Lindblad => {
            let rates = Rates::from_params(params)?;
            GateKernel::Channel(Box::new(pulse_channel(sampled, params, err, rates)?))
        }
    };
    Ok(rb_with_kernel(&kernel, &table, run))
}

/// RB with an explicitly given gate unitary (ideal-gate runs and testing).
pub fn simulate_rb_with_unitary(gate: &Unitary3, run: &RbRun) -> Result<RbOutcome, BenchmarkError> {
    if run.lengths.is_empty() {
        return Err(BenchmarkError::EmptyLengths);
    }
    let table = clifford_table();
    Ok(rb_with_kernel(
        &GateKernel::Unitary(*gate.matrix()),
        &table,
        run,
    ))
}

/// Sequence-fidelity proxy F_seq = A·(1 − gate_error)^{N_C·N_g} + B.
pub fn proxy_fidelity(gate_error: f64, n_c: usize, a: f64, b: f64, n_g: f64) -> f64 {
    a * (1.0 - gate_error).powf(n_c as f64 * n_g) + b
}

/// Invert the proxy: the gate error implied by a sequence fidelity at a
/// single length. Clamped to [0, 1] (fidelities above A + B map to 0, at
/// or below B to 1).
pub fn invert_proxy(f_seq: f64, n_c: usize, a: f64, b: f64, n_g: f64) -> f64 {
    let ratio = (f_seq - b) / a;
    if ratio >= 1.0 {
        return 0.0;
    }
    if ratio <= 0.0 {
        return 1.0;
    }
    (1.0 - ratio.powf(1.0 / (n_c as f64 * n_g))).clamp(0.0, 1.0)
}

/// One cell of the robustness landscape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LandscapeCell {
    /// Detuning error (rad/s).
    pub delta: f64,
    /// Amplitude error (rad/s).
    pub gamma: f64,
    /// Mean sequence error 1 − F_seq at the single length.
    pub seq_error_mean: f64,
    pub seq_error_std: f64,
    /// Gate error from inverting the proxy with the scan's A/B constants.
    pub derived_gate_error: f64,
}

/// Scan settings: a single sequence length per cell, proxy constants for
/// the contour inversion, deterministic per-cell seeds.
#[derive(Clone, Debug)]
pub struct ScanConfig {
    pub n_c: usize,
    pub n_random: usize,
    pub noise: NoiseModel,
    pub seed: u64,
    pub fit_a: f64,
    pub fit_b: f64,
    pub readout_error: Option<ReadoutError>,
}

/// Evaluate one landscape cell. `cell_index` feeds the per-cell seed so
/// results are independent of evaluation order.
pub fn scan_cell(
    sampled: &SampledPulse,
    params: &TransmonParams,
    table: &CliffordTable,
    delta: f64,
    gamma: f64,
    cell_index: usize,
    cfg: &ScanConfig,
) -> Result<LandscapeCell, BenchmarkError> {
    let err = ErrorPoint {
        detuning_delta: delta,
        amplitude_gamma: gamma,
    };
    let kernel = match cfg.noise {
        NoiseModel::Unitary => {
            let (u, _) = evolve(sampled, params, &err)?;
            GateKernel::Unitary(*u.matrix())
        }
        NoiseModel::Lindblad => {
            let rates = Rates::from_params(params)?;
            GateKernel::Channel(Box::new(pulse_channel(sampled, params, &err, rates)?))
        }
    };
    let (mean, std) = survival_stats(
        &kernel,
        table,
        cfg.n_c,
        cfg.n_random,
        derive_seed(cfg.seed, cell_index as u64, 0xce11),
        cfg.readout_error,
    );
    let n_g = table.mean_physical_ops();
    Ok(LandscapeCell {
        delta,
        gamma,
        seq_error_mean: 1.0 - mean,
        seq_error_std: std,
        derived_gate_error: invert_proxy(mean, cfg.n_c, cfg.fit_a, cfg.fit_b, n_g),
    })
}

/// Full robustness landscape over an evenly spaced (δ, γ) grid, evaluated
/// cell by cell in row-major order (δ outer).
pub fn landscape_scan(
    sampled: &SampledPulse,
    params: &TransmonParams,
    delta_range: (f64, f64),
    gamma_range: (f64, f64),
    grid: (usize, usize),
    cfg: &ScanConfig,
) -> Result<Vec<LandscapeCell>, BenchmarkError> {
    if grid.0 == 0 || grid.1 == 0 {
        return Err(BenchmarkError::EmptyGrid);
    }
    let deltas = crate::grape::linspace(delta_range.0, delta_range.1, grid.0);
    let gammas = crate::grape::linspace(gamma_range.0, gamma_range.1, grid.1);
    let table = clifford_table();
    let mut cells = Vec::with_capacity(grid.0 * grid.1);
    for (i, &d) in deltas.iter().enumerate() {
        for (j, &g) in gammas.iter().enumerate() {
            let idx = i * gammas.len() + j;
            cells.push(scan_cell(sampled, params, &table, d, g, idx, cfg)?);
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TransmonParams;
    use crate::propagation::ideal_pi_half;
    use crate::pulses::{builtin_pulse, sample_drag, sample_fourier, BuiltinPulse, DragPulse};
    use crate::units::{mhz_to_rad, ns_to_s, us_to_s};

    fn params() -> TransmonParams {
        TransmonParams::new(mhz_to_rad(-295.1), mhz_to_rad(17.7), None, None).unwrap()
    }

    #[test]
    fn table_has_24_verified_elements() {
        let table = clifford_table();
        assert_eq!(table.len(), 24);
        for (k, elem) in table.elements.iter().enumerate() {
            assert_eq!(elem.index, k);
            assert!(elem.op_count() <= 2);
            assert_eq!(elem.virtual_z_phases.len(), elem.op_count() + 1);
            let composed = element_unitary(elem);
            let d = composed.phase_distance(&M2(table.group_unitary(k)));
            assert!(d < 1e-10, "element {k} composes with distance {d}");
        }
    }

    #[test]
    fn table_mean_ops_is_exactly_five_fourths() {
        let table = clifford_table();
        let total: usize = table.elements.iter().map(|e| e.op_count()).sum();
        assert_eq!(total, 30);
        assert!((table.mean_physical_ops() - 1.25).abs() < 1e-15);
        // Identity is reachable with zero pulses, X_{π/2} with one.
        assert_eq!(table.elements[0].op_count(), 0);
        let x_idx = (0..24)
            .find(|&k| M2(table.group_unitary(k)).phase_distance(&pi_half_2x2(0.0)) < 1e-10)
            .unwrap();
        assert_eq!(table.elements[x_idx].op_count(), 1);
    }

    #[test]
    fn group_is_closed_under_composition() {
        let table = clifford_table();
        for a in 0..24 {
            for b in 0..24 {
                let prod = M2(table.group_unitary(a)).mul(&M2(table.group_unitary(b)));
                let hits = (0..24)
                    .filter(|&k| M2(table.group_unitary(k)).phase_distance(&prod) < 1e-9)
                    .count();
                assert_eq!(hits, 1, "product {a}x{b} matches {hits} elements");
            }
        }
    }

    #[test]
    fn sequences_recover_to_identity() {
        let table = clifford_table();
        for seed in [1u64, 7, 99] {
            for n in [1usize, 4, 33] {
                let (seq, recovery) = rb_sequence(&table, n, seed);
                assert_eq!(seq.len(), n);
                let mut comp = M2::identity();
                for elem in &seq {
                    comp = M2(table.group_unitary(elem.index)).mul(&comp);
                }
                comp = M2(table.group_unitary(recovery.index)).mul(&comp);
                let d = comp.phase_distance(&M2::identity());
                assert!(d < 1e-9, "seed {seed} n {n}: distance {d}");
            }
        }
        // Single element: recovery is its inverse.
        let (seq, recovery) = rb_sequence(&table, 1, 5);
        let prod =
            M2(table.group_unitary(recovery.index)).mul(&M2(table.group_unitary(seq[0].index)));
        assert!(prod.phase_distance(&M2::identity()) < 1e-10);
    }

    #[test]
    fn sequences_are_deterministic_per_seed() {
        let table = clifford_table();
        let (s1, r1) = rb_sequence(&table, 20, 1234);
        let (s2, r2) = rb_sequence(&table, 20, 1234);
        assert_eq!(s1, s2);
        assert_eq!(r1, r2);
        let (s3, _) = rb_sequence(&table, 20, 1235);
        assert_ne!(s1, s3);
    }

    #[test]
    fn ideal_gate_survives_every_sequence() {
        let run = RbRun {
            lengths: vec![1, 2, 5, 10, 40],
            n_random: 8,
            noise: NoiseModel::Unitary,
            seed: 3,
            readout_error: None,
        };
        let outcome = simulate_rb_with_unitary(&ideal_pi_half(0.0), &run).unwrap();
        for (m, s) in outcome
            .seq_fidelity_mean
            .iter()
            .zip(&outcome.seq_fidelity_std)
        {
            assert!((m - 1.0).abs() < 1e-10, "survival {m}");
            assert!(*s < 1e-10);
        }
        assert!(outcome.fitted_gate_error.abs() < 1e-12);
        assert!(outcome.fit_converged);
    }

    #[test]
    fn synthetic_depolarizing_decay_is_recovered() {
        // Independent oracle: ideal 2×2 Cliffords with a known depolarizing
        // factor per Clifford, simulated on the qubit density matrix.
        let table = clifford_table();
        let p_true = 0.97;
        let survival = |length: usize, seed: u64| -> f64 {
            let (seq, recovery) = rb_sequence(&table, length, seed);
            let mut rho = [
                [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
                [C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            ];
            let mut apply = |u: &M2, rho: &mut [[C64; 2]; 2], depolarize: bool| {
                let mut out = [[C64::new(0.0, 0.0); 2]; 2];
                for r in 0..2 {
                    for c in 0..2 {
                        let mut acc = C64::new(0.0, 0.0);
                        for k in 0..2 {
                            for l in 0..2 {
                                acc += u.0[r][k] * rho[k][l] * u.0[c][l].conj();
                            }
                        }
                        out[r][c] = acc;
                    }
                }
                if depolarize {
                    let tr = (out[0][0] + out[1][1]).re;
                    for r in 0..2 {
                        for c in 0..2 {
                            out[r][c] = out[r][c] * p_true;
                        }
                        out[r][r] += C64::new((1.0 - p_true) * 0.5 * tr, 0.0);
                    }
                }
                *rho = out;
            };
            for elem in &seq {
                apply(&M2(table.group_unitary(elem.index)), &mut rho, true);
            }
            apply(&M2(table.group_unitary(recovery.index)), &mut rho, false);
            rho[0][0].re
        };
        let lengths = [1usize, 5, 10, 20, 40, 80, 140];
        let means: Vec<f64> = lengths
            .iter()
            .enumerate()
            .map(|(li, &l)| {
                (0..24)
                    .map(|r| survival(l, derive_seed(11, li as u64, r)))
                    .sum::<f64>()
                    / 24.0
            })
            .collect();
        let fit = fit_rb_decay(&lengths, &means);
        assert!(fit.converged);
        assert!(
            (fit.p - p_true).abs() < 1e-3,
            "fitted p {} vs injected {p_true}",
            fit.p
        );
        let e = (1.0 - fit.p) * 0.5 / table.mean_physical_ops();
        assert!((e - (1.0 - p_true) * 0.5 / 1.25).abs() < 1e-3);
    }

    #[test]
    fn proxy_fidelity_values() {
        assert!(
            (proxy_fidelity(0.0, 60, DEFAULT_FIT_A, DEFAULT_FIT_B, 1.25) - 0.942).abs() < 1e-12
        );
        let f = proxy_fidelity(0.01, 60, DEFAULT_FIT_A, DEFAULT_FIT_B, 1.25);
        assert!((f - 0.7117).abs() < 1e-4, "proxy {f}");
        assert!(
            (proxy_fidelity(1.0, 60, DEFAULT_FIT_A, DEFAULT_FIT_B, 1.25) - DEFAULT_FIT_B).abs()
                < 1e-12
        );
    }

    #[test]
    fn proxy_inversion_round_trip() {
        for e in [1e-4, 1e-3, 5e-3, 1e-2, 5e-2] {
            let f = proxy_fidelity(e, 60, DEFAULT_FIT_A, DEFAULT_FIT_B, 1.25);
            let back = invert_proxy(f, 60, DEFAULT_FIT_A, DEFAULT_FIT_B, 1.25);
            assert!((back - e).abs() < 1e-10 * e.max(1e-6));
        }
        assert_eq!(
            invert_proxy(0.99, 60, DEFAULT_FIT_A, DEFAULT_FIT_B, 1.25),
            0.0
        );
        assert_eq!(
            invert_proxy(0.4, 60, DEFAULT_FIT_A, DEFAULT_FIT_B, 1.25),
            1.0
        );
    }

    #[test]
    fn readout_error_reproduces_fit_constants() {
        let ro = ReadoutError::reproducing(DEFAULT_FIT_A, DEFAULT_FIT_B);
        // Perfect gates: survival 1 maps to A + B; depolarized ½ maps to B.
        assert!((ro.apply(1.0) - (DEFAULT_FIT_A + DEFAULT_FIT_B)).abs() < 1e-12);
        assert!((ro.apply(0.5) - DEFAULT_FIT_B).abs() < 1e-12);
        let run = RbRun {
            lengths: vec![1, 5, 20],
            n_random: 4,
            noise: NoiseModel::Unitary,
            seed: 9,
            readout_error: Some(ro),
        };
        let outcome = simulate_rb_with_unitary(&ideal_pi_half(0.0), &run).unwrap();
        for m in &outcome.seq_fidelity_mean {
            assert!((m - 0.942).abs() < 1e-10);
        }
    }

    #[test]
    fn frog_scan_row_stays_under_threshold() {
        let sampled = sample_fourier(&builtin_pulse(BuiltinPulse::Frog), ns_to_s(0.5)).unwrap();
        let cfg = ScanConfig {
            n_c: 60,
            n_random: 10,
            noise: NoiseModel::Unitary,
            seed: 21,
            fit_a: DEFAULT_FIT_A,
            fit_b: DEFAULT_FIT_B,
            readout_error: None,
        };
        let cells = landscape_scan(
            &sampled,
            &params(),
            (mhz_to_rad(-0.5), mhz_to_rad(0.5)),
            (0.0, 0.0),
            (21, 1),
            &cfg,
        )
        .unwrap();
        assert_eq!(cells.len(), 21);
        for c in &cells {
            assert!(
                c.derived_gate_error <= 1e-2,
                "cell at delta {} MHz: derived error {}",
                c.delta / (core::f64::consts::TAU * 1e6),
                c.derived_gate_error
            );
        }
    }

    #[test]
    fn calibrated_drag_is_clean_at_nominal_point() {
        let drag =
            DragPulse::x_pi_half(ns_to_s(128.0), DragPulse::default_beta(mhz_to_rad(-295.1)))
                .unwrap();
        let sampled = sample_drag(&drag, ns_to_s(0.5)).unwrap();
        let cfg = ScanConfig {
            n_c: 60,
            n_random: 10,
            noise: NoiseModel::Unitary,
            seed: 4,
            fit_a: DEFAULT_FIT_A,
            fit_b: DEFAULT_FIT_B,
            readout_error: None,
        };
        let table = clifford_table();
        let cell = scan_cell(&sampled, &params(), &table, 0.0, 0.0, 0, &cfg).unwrap();
        assert!(
            cell.derived_gate_error < 1e-3,
            "derived error {}",
            cell.derived_gate_error
        );
    }

    #[test]
    fn single_cell_grid_matches_direct_evaluation() {
        let sampled = sample_fourier(&builtin_pulse(BuiltinPulse::Frog), ns_to_s(0.5)).unwrap();
        let cfg = ScanConfig {
            n_c: 40,
            n_random: 5,
            noise: NoiseModel::Unitary,
            seed: 77,
            fit_a: DEFAULT_FIT_A,
            fit_b: DEFAULT_FIT_B,
            readout_error: None,
        };
        let p = params();
        let d = mhz_to_rad(0.2);
        let g = mhz_to_rad(-0.4);
        let cells = landscape_scan(&sampled, &p, (d, d), (g, g), (1, 1), &cfg).unwrap();
        assert_eq!(cells.len(), 1);
        let table = clifford_table();
        let direct = scan_cell(&sampled, &p, &table, d, g, 0, &cfg).unwrap();
        assert_eq!(cells[0], direct);
    }

    #[test]
    fn scan_cells_do_not_depend_on_evaluation_order() {
        let sampled = sample_fourier(&builtin_pulse(BuiltinPulse::Arog), ns_to_s(0.5)).unwrap();
        let cfg = ScanConfig {
            n_c: 30,
            n_random: 4,
            noise: NoiseModel::Unitary,
            seed: 13,
            fit_a: DEFAULT_FIT_A,
            fit_b: DEFAULT_FIT_B,
            readout_error: None,
        };
        let p = params();
        let cells = landscape_scan(
            &sampled,
            &p,
            (mhz_to_rad(-0.3), mhz_to_rad(0.3)),
            (mhz_to_rad(-1.0), mhz_to_rad(1.0)),
            (3, 3),
            &cfg,
        )
        .unwrap();
        let table = clifford_table();
        let deltas = crate::grape::linspace(mhz_to_rad(-0.3), mhz_to_rad(0.3), 3);
        let gammas = crate::grape::linspace(mhz_to_rad(-1.0), mhz_to_rad(1.0), 3);
        let direct = scan_cell(&sampled, &p, &table, deltas[1], gammas[2], 5, &cfg).unwrap();
        assert_eq!(cells[5], direct);
    }

    #[test]
    fn lindblad_rb_reaches_t1_limit() {
        // 128 ns pulse, T₁ = 45.5 µs, no pure dephasing: the fitted error
        // approaches t_g·Γ₁/3.
        let p = TransmonParams::new(
            mhz_to_rad(-295.1),
            mhz_to_rad(17.7),
            Some(us_to_s(45.5)),
            Some(f64::INFINITY),
        )
        .unwrap();
        let drag = DragPulse::x_pi_half(
            ns_to_s(128.0),
            DragPulse::default_beta(p.anharmonicity_alpha),
        )
        .unwrap();
        let sampled = sample_drag(&drag, ns_to_s(0.5)).unwrap();
        let run = RbRun {
            lengths: vec![1, 30, 80, 150, 250, 400, 600],
            n_random: 20,
            noise: NoiseModel::Lindblad,
            seed: 8,
            readout_error: None,
        };
        let outcome = simulate_rb(&sampled, &p, &ErrorPoint::NOMINAL, &run).unwrap();
        assert!(outcome.fit_converged);
        let limit = ns_to_s(128.0) / 3.0 / us_to_s(45.5);
        let rel = (outcome.fitted_gate_error - limit).abs() / limit;
        assert!(
            rel < 0.1,
            "fitted {} vs limit {limit} (rel {rel})",
            outcome.fitted_gate_error
        );
    }
}
