//! Acceptance suite: one test per release criterion, each printing a
//! summary line (run with `--nocapture` to see them on success). Criteria
//! with stated runtime budgets assert them.

use std::time::Instant;

use rayon::prelude::*;

use pulsekit_core::benchmarking::{
    clifford_table, landscape_scan, proxy_fidelity, rb_sequence, simulate_rb, NoiseModel, RbRun,
    ScanConfig, DEFAULT_FIT_A, DEFAULT_FIT_B,
};
use pulsekit_core::calibration::{amplitude_sweep, error_amp_extract};
use pulsekit_core::drift::{
    analytical_t1_sensitivity, evaluate_drift_point, generate_trajectory, ridge_fit,
    CampaignSettings, GatePulses, Scenario, GATES,
};
use pulsekit_core::grape::{
    cost_and_grad_fourier, ensemble_cost, linspace, optimize, random_init, ErrorEnsemble,
    GrapeConfig, GrapeResult,
};
use pulsekit_core::linalg::C64;
use pulsekit_core::model::{ErrorPoint, TransmonParams};
use pulsekit_core::propagation::{evolve, gate_error, x_pi_half_target};
use pulsekit_core::pulses::{
    builtin_eta, builtin_pulse, check_constraints, sample_fourier, sample_pulse, BuiltinPulse,
    DragPulse, FourierPulse, Pulse,
};
use pulsekit_core::units::{mhz_to_rad, ns_to_s, rad_to_mhz, us_to_s};

fn device_params() -> TransmonParams {
    TransmonParams::new(mhz_to_rad(-295.1), mhz_to_rad(17.7), None, None).unwrap()
}

fn frog_band_ensemble() -> ErrorEnsemble {
    ErrorEnsemble::grid((mhz_to_rad(-0.5), mhz_to_rad(0.5)), 21, (0.0, 0.0), 1).unwrap()
}

fn grape_cfg(dt_ns: f64, eta: f64, max_iters: usize, seed: u64) -> GrapeConfig {
    GrapeConfig::new(
        x_pi_half_target(),
        ns_to_s(dt_ns),
        eta,
        max_iters,
        1e-8,
        seed,
    )
    .unwrap()
}

fn fd_fourier_gradient(
    pulse: &FourierPulse,
    params: &TransmonParams,
    ens: &ErrorEnsemble,
    cfg: &GrapeConfig,
) -> [f64; 10] {
    let h = 1e-6;
    let mut out = [0.0; 10];
    for k in 0..10 {
        let mut at = |sign: f64| {
            let mut p = *pulse;
            if k < 5 {
                p.coeffs_a[k] += sign * h;
            } else {
                p.coeffs_b[k - 5] += sign * h;
            }
            ensemble_cost(&p, params, ens, cfg).unwrap()
        };
        out[k] = (at(1.0) - at(-1.0)) / (2.0 * h);
    }
    out
}

/// Criterion 1: analytic gradients against the finite-difference oracle on
/// 20 seeded random pulses; the residual is second order in the step.
#[test]
fn criterion_01_gradient_matches_finite_differences() {
    let start = Instant::now();
    let params = device_params();
    let ens = frog_band_ensemble();

    let residual_at = |dt_ns: f64| -> f64 {
        let cfg = grape_cfg(dt_ns, 0.55, 10, 0);
        (0..20u64)
            .into_par_iter()
            .map(|seed| {
                let pulse = random_init(seed, ns_to_s(112.0), params.rabi_max_omega0);
                let (_, analytic) = cost_and_grad_fourier(&pulse, &params, &ens, &cfg).unwrap();
                let fd = fd_fourier_gradient(&pulse, &params, &ens, &cfg);
                let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                (0..10)
                    .map(|k| (analytic[k] - fd[k]).abs() / scale)
                    .fold(0.0f64, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    };

    let coarse = residual_at(0.5);
    let fine = residual_at(0.25);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        coarse < 1e-3,
        "max relative gradient error {coarse:.3e} at dt = 0.5 ns"
    );
    assert!(
        coarse / fine >= 3.0,
        "halving dt reduced the residual only {:.2}x ({coarse:.3e} -> {fine:.3e})",
        coarse / fine
    );
    assert!(elapsed < 60.0, "runtime {elapsed:.1}s exceeds 1 min");
    eprintln!(
        "criterion 1 PASS: max rel gradient error {coarse:.2e} at 0.5 ns, {:.1}x smaller at 0.25 ns, {elapsed:.1}s",
        coarse / fine
    );
}

/// Criterion 2: the builtin coefficient tables satisfy their amplitude
/// bounds exactly and simulate cleanly at the nominal error point.
///
/// The second half holds with margin. The feasibility half does not: the
/// published four-decimal coefficient tables overshoot their stated bounds
/// by 3.6e-3·Ω₀ (η = 0.55 table) and 1.6e-3·Ω₀ (η = 0.46 table), at every
/// discretization, so this criterion fails as specified and the failure is
/// kept visible rather than papered over.
#[test]
fn criterion_02_builtin_tables_round_trip() {
    let start = Instant::now();
    let params = device_params();
    let target = x_pi_half_target();
    let mut violations = Vec::new();
    for name in [BuiltinPulse::Frog, BuiltinPulse::Arog] {
        let pulse = builtin_pulse(name);
        let sampled = sample_fourier(&pulse, ns_to_s(0.5)).unwrap();
        let (u, _) = evolve(&sampled, &params, &ErrorPoint::NOMINAL).unwrap();
        let e = gate_error(&u, &target);
        assert!(e < 1e-3, "{name:?} nominal gate error {e:.3e}");
        let viol = check_constraints(&pulse, builtin_eta(name), ns_to_s(0.5)).unwrap();
        violations.push((name, viol / pulse.omega0, e));
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "runtime {elapsed:.1}s exceeds 10 s");
    eprintln!(
        "criterion 2: nominal gate errors {:.2e} / {:.2e}; bound overshoots {:.2e}·omega0 / {:.2e}·omega0",
        violations[0].2, violations[1].2, violations[0].1, violations[1].1
    );
    for (name, rel_viol, _) in &violations {
        assert!(
            *rel_viol == 0.0,
            "{name:?} violates its amplitude bound by {rel_viol:.3e}·omega0 (published tables \
             exceed their stated bounds; see decision ledger)"
        );
    }
}

/// Criterion 3: the frequency-robust pulse holds gate error at or below
/// 1e-2 across every cell of its optimized detuning band.
#[test]
fn criterion_03_frog_band_holds_threshold() {
    let start = Instant::now();
    let params = device_params();
    let sampled = sample_fourier(&builtin_pulse(BuiltinPulse::Frog), ns_to_s(0.5)).unwrap();
    let cfg = ScanConfig {
        n_c: 60,
        n_random: 10,
        noise: NoiseModel::Unitary,
        seed: 2024,
        fit_a: DEFAULT_FIT_A,
        fit_b: DEFAULT_FIT_B,
        readout_error: None,
    };
    let cells = landscape_scan(
        &sampled,
        &params,
        (mhz_to_rad(-0.5), mhz_to_rad(0.5)),
        (0.0, 0.0),
        (21, 1),
        &cfg,
    )
    .unwrap();
    assert_eq!(cells.len(), 21);
    let mut worst = 0.0f64;
    for c in &cells {
        worst = worst.max(c.derived_gate_error);
        assert!(
            c.derived_gate_error <= 1e-2,
            "cell at {:.2} MHz: derived error {:.3e}",
            rad_to_mhz(c.delta),
            c.derived_gate_error
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "runtime {elapsed:.1}s exceeds 5 min");
    eprintln!(
        "criterion 3 PASS: 21/21 band cells at derived error <= 1e-2 (worst {worst:.2e}), {elapsed:.1}s"
    );
}

fn reoptimize(
    label: &str,
    gate_time_ns: f64,
    eta: f64,
    ens: &ErrorEnsemble,
) -> (GrapeResult, f64, usize) {
    let params = device_params();
    let cfg = grape_cfg(0.5, eta, 120, 42);
    let mut best: Option<(GrapeResult, f64)> = None;
    let mut starts = 0;
    for attempt in 0..5 {
        starts += 1;
        let init = if attempt == 0 {
            FourierPulse::half_sine_pi_half(ns_to_s(gate_time_ns), params.rabi_max_omega0).unwrap()
        } else {
            random_init(
                cfg.seed + attempt,
                ns_to_s(gate_time_ns),
                params.rabi_max_omega0,
            )
        };
        let result = optimize(&init, &params, ens, &cfg).unwrap();
        let j = ensemble_cost(&result.pulse, &params, ens, &cfg).unwrap();
        eprintln!(
            "  {label} start {attempt}: J = {j:.3e}, feasible = {}",
            result.feasible
        );
        let better = best.as_ref().map_or(true, |(b, bj)| {
            (result.feasible && !b.feasible) || (result.feasible == b.feasible && j < *bj)
        });
        if better {
            best = Some((result, j));
        }
        if let Some((b, bj)) = &best {
            if b.feasible && *bj < 5e-3 {
                break;
            }
        }
    }
    let (result, j) = best.unwrap();
    (result, j, starts)
}

/// Criterion 4: fresh ensemble-robust optimizations reach the target cost
/// inside their amplitude bounds for both published gate specifications.
#[test]
fn criterion_04_reoptimization_reaches_target_cost() {
    let start = Instant::now();
    let frog_ens = frog_band_ensemble();
    let (frog, frog_j, frog_starts) = reoptimize("frequency-robust spec", 112.0, 0.55, &frog_ens);
    assert!(frog.feasible, "frequency-robust run infeasible");
    assert!(frog_j < 5e-3, "frequency-robust spec J = {frog_j:.3e}");

    let arog_ens = ErrorEnsemble::grid(
        (mhz_to_rad(-0.25), mhz_to_rad(0.25)),
        21,
        (mhz_to_rad(-1.2), mhz_to_rad(1.2)),
        21,
    )
    .unwrap();
    let (arog, arog_j, arog_starts) =
        reoptimize("amplitude-and-frequency spec", 128.0, 0.46, &arog_ens);
    assert!(arog.feasible, "amplitude-and-frequency run infeasible");
    assert!(
        arog_j < 5e-3,
        "amplitude-and-frequency spec J = {arog_j:.3e}"
    );

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 1800.0, "runtime {elapsed:.0}s exceeds 30 min");
    eprintln!(
        "criterion 4 PASS: J = {frog_j:.2e} ({frog_starts} start(s)) and {arog_j:.2e} ({arog_starts} start(s)), {elapsed:.0}s"
    );
}

/// Criterion 5: the 24-element table composes correctly up to phase and
/// averages exactly 1.25 pulses per element.
#[test]
fn criterion_05_clifford_accounting() {
    let table = clifford_table();
    assert_eq!(table.len(), 24);
    // Composition check through random sequences with recovery: the ideal
    // composition must return to the identity.
    for seed in 0..50u64 {
        let (seq, recovery) = rb_sequence(&table, 16, seed);
        let mut acc = [
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        ];
        let mul = |a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]| {
            let mut out = [[C64::new(0.0, 0.0); 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
                }
            }
            out
        };
        for elem in seq.iter().chain(std::iter::once(&recovery)) {
            acc = mul(&table.group_unitary(elem.index), &acc);
        }
        let trace_mag = (acc[0][0] + acc[1][1]).norm();
        assert!(
            (trace_mag - 2.0).abs() < 1e-9,
            "seed {seed}: |tr| {trace_mag}"
        );
    }
    let total: usize = table.elements.iter().map(|e| e.op_count()).sum();
    assert_eq!(total, 30, "total pulse count over 24 elements");
    assert_eq!(table.mean_physical_ops(), 1.25);
    eprintln!("criterion 5 PASS: 24 elements compose, mean pulse count exactly 1.25");
}

/// Criterion 6: single-length sequence-fidelity proxy values.
#[test]
fn criterion_06_proxy_fidelity_values() {
    let zero = proxy_fidelity(0.0, 60, 0.435, 0.507, 1.25);
    assert!((zero - 0.942).abs() < 1e-12, "proxy(0) = {zero}");
    let one_percent = proxy_fidelity(0.01, 60, 0.435, 0.507, 1.25);
    assert!(
        (one_percent - 0.7117).abs() <= 1e-4,
        "proxy(0.01) = {one_percent}"
    );
    eprintln!("criterion 6 PASS: proxy(0) = {zero}, proxy(0.01) = {one_percent:.5}");
}

/// Criterion 7: dissipative benchmarking of a 128 ns pulse at T1 = 45.5 µs
/// (no pure dephasing) reproduces the coherence-limit error t_g·Γ₁/3.
#[test]
fn criterion_07_relaxation_limited_benchmarking() {
    let params = TransmonParams::new(
        mhz_to_rad(-295.1),
        mhz_to_rad(17.7),
        Some(us_to_s(45.5)),
        Some(f64::INFINITY),
    )
    .unwrap();
    let drag = Pulse::Drag(
        DragPulse::x_pi_half(
            ns_to_s(128.0),
            DragPulse::default_beta(params.anharmonicity_alpha),
        )
        .unwrap(),
    );
    let scales: Vec<f64> = (6..=14).map(|k| k as f64 * 0.1).collect();
    let cal = amplitude_sweep(&drag, &params, &scales, ns_to_s(0.5)).unwrap();
    let sampled = sample_pulse(&drag.scaled(cal.amplitude_scale), ns_to_s(0.5)).unwrap();
    let run = RbRun {
        lengths: vec![1, 30, 80, 150, 250, 400, 600],
        n_random: 24,
        noise: NoiseModel::Lindblad,
        seed: 77,
        readout_error: None,
    };
    let outcome = simulate_rb(&sampled, &params, &ErrorPoint::NOMINAL, &run).unwrap();
    assert!(outcome.fit_converged);
    let limit = ns_to_s(128.0) / 3.0 / us_to_s(45.5);
    let rel = (outcome.fitted_gate_error - limit).abs() / limit;
    assert!(
        rel < 0.10,
        "fitted {:.3e} vs limit {limit:.3e} (rel {rel:.3})",
        outcome.fitted_gate_error
    );
    eprintln!(
        "criterion 7 PASS: fitted error {:.3e} within {:.1}% of limit {limit:.3e}",
        outcome.fitted_gate_error,
        rel * 100.0
    );
}

/// Criterion 8: a 110-sample relaxation-only campaign regressed with the
/// closed-form ridge recovers the analytic per-gate sensitivities.
#[test]
fn criterion_08_sensitivity_pipeline() {
    let params = device_params();
    let settings = CampaignSettings::default_with_seed(314);
    let trajectory = generate_trajectory(Scenario::Gamma1Sweep, 110, 314);
    let pulses = GatePulses::calibrated(&params, settings.dt).unwrap();
    let samples: Vec<_> = trajectory
        .par_iter()
        .enumerate()
        .map(|(k, point)| evaluate_drift_point(point, k, &pulses, &params, &settings).unwrap())
        .collect();
    let fit = ridge_fit(&samples, 0.0).unwrap();
    let mut line = String::new();
    for (gi, gate) in GATES.iter().enumerate() {
        let expect = analytical_t1_sensitivity(gate.gate_time());
        let got = fit.weights_physical[gi][2];
        let rel = (got - expect).abs() / expect;
        line += &format!(
            "{}: {got:.3e} vs {expect:.3e} ({:.1}%); ",
            gate.name(),
            rel * 100.0
        );
        assert!(
            rel < 0.15,
            "{} sensitivity {got:.3e} vs analytic {expect:.3e} (rel {rel:.3})",
            gate.name()
        );
    }
    eprintln!("criterion 8 PASS: {line}");
}

/// Criterion 9: injected amplitude errors are recovered by the
/// error-amplification fit to 2% for every magnitude and sign.
#[test]
fn criterion_09_error_amplification_round_trip() {
    let params = device_params();
    let drag = Pulse::Drag(
        DragPulse::x_pi_half(
            ns_to_s(128.0),
            DragPulse::default_beta(params.anharmonicity_alpha),
        )
        .unwrap(),
    );
    let scales: Vec<f64> = (6..=14).map(|k| k as f64 * 0.1).collect();
    let cal = amplitude_sweep(&drag, &params, &scales, ns_to_s(0.5)).unwrap();
    let sampled = sample_pulse(&drag.scaled(cal.amplitude_scale), ns_to_s(0.5)).unwrap();
    let n_values: Vec<usize> = (0..=69).collect();
    let mut worst = 0.0f64;
    for g in [0.005, 0.01, 0.02, -0.005, -0.01, -0.02] {
        let err = ErrorPoint::new(0.0, g * params.rabi_max_omega0).unwrap();
        let fit = error_amp_extract(&sampled, &params, &err, &n_values).unwrap();
        let rel = (fit.residual_gamma / params.rabi_max_omega0 - g).abs() / g.abs();
        worst = worst.max(rel);
        assert!(
            rel < 0.02,
            "injected {g:+.3}: recovered {:+.5} (rel {rel:.4})",
            fit.residual_gamma / params.rabi_max_omega0
        );
    }
    eprintln!(
        "criterion 9 PASS: worst relative recovery error {:.2}%",
        worst * 100.0
    );
}

/// Criterion 10: device-bound quantities are out of reach by declaration;
/// the qualitative landscape geometry stands in for them. The
/// frequency-robust band is elongated along detuning; the
/// amplitude-and-frequency gate's low-error region is a tilted ellipse
/// (positive detuning-amplitude correlation).
#[test]
fn criterion_10_qualitative_landscape_shapes() {
    let params = device_params();
    let cfg = ScanConfig {
        n_c: 60,
        n_random: 8,
        noise: NoiseModel::Unitary,
        seed: 5,
        fit_a: DEFAULT_FIT_A,
        fit_b: DEFAULT_FIT_B,
        readout_error: None,
    };

    // Elongation: on a full-range grid, the low-error mask spans every
    // detuning row but only the central amplitude columns.
    let frog = sample_fourier(&builtin_pulse(BuiltinPulse::Frog), ns_to_s(0.5)).unwrap();
    let cells = landscape_scan(
        &frog,
        &params,
        (mhz_to_rad(-0.7), mhz_to_rad(0.7)),
        (mhz_to_rad(-2.5), mhz_to_rad(2.5)),
        (9, 9),
        &cfg,
    )
    .unwrap();
    let low: Vec<usize> = (0..81)
        .filter(|&i| cells[i].derived_gate_error <= 1e-2)
        .collect();
    let rows: std::collections::BTreeSet<usize> = low.iter().map(|i| i / 9).collect();
    let cols: std::collections::BTreeSet<usize> = low.iter().map(|i| i % 9).collect();
    assert_eq!(
        rows.len(),
        9,
        "low-error band should span every detuning row"
    );
    assert!(
        (rows.len() as f64) > 1.5 * cols.len() as f64,
        "band not elongated: {} rows vs {} columns",
        rows.len(),
        cols.len()
    );

    // Tilt: positive correlation between detuning and amplitude over the
    // low-error mask.
    let arog = sample_fourier(&builtin_pulse(BuiltinPulse::Arog), ns_to_s(0.5)).unwrap();
    let cells = landscape_scan(
        &arog,
        &params,
        (mhz_to_rad(-0.7), mhz_to_rad(0.7)),
        (mhz_to_rad(-3.5), mhz_to_rad(3.5)),
        (9, 9),
        &cfg,
    )
    .unwrap();
    let mask: Vec<(f64, f64)> = cells
        .iter()
        .filter(|c| c.derived_gate_error <= 1e-2)
        .map(|c| (rad_to_mhz(c.delta) / 0.7, rad_to_mhz(c.gamma) / 3.5))
        .collect();
    assert!(mask.len() >= 10, "tilted region too small: {}", mask.len());
    let n = mask.len() as f64;
    let (md, mg) = (
        mask.iter().map(|m| m.0).sum::<f64>() / n,
        mask.iter().map(|m| m.1).sum::<f64>() / n,
    );
    let cov = mask.iter().map(|m| (m.0 - md) * (m.1 - mg)).sum::<f64>() / n;
    let sd = (mask.iter().map(|m| (m.0 - md).powi(2)).sum::<f64>() / n).sqrt();
    let sg = (mask.iter().map(|m| (m.1 - mg).powi(2)).sum::<f64>() / n).sqrt();
    let corr = cov / (sd * sg).max(1e-12);
    assert!(corr > 0.2, "no tilt: correlation {corr:.3}");
    eprintln!(
        "criterion 10 PASS: band spans 9/9 detuning rows vs {} amplitude columns; tilt correlation {corr:.2}",
        cols.len()
    );
}
