//! Subcommand implementations. Every run writes its artifacts plus a
//! manifest carrying the resolved configuration, package version and seed,
//! which is enough to reproduce the run bit-for-bit on the same platform.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use pulsekit_core::benchmarking::{
    clifford_table, scan_cell, simulate_rb, simulate_rb_with_unitary, LandscapeCell, NoiseModel,
    RbOutcome, RbRun, ScanConfig,
};
use pulsekit_core::calibration::{
    amplitude_population, amplitude_sweep, coherence_estimate, error_amp_extract,
    error_amp_populations, ramsey_estimate_with_detuning, ramsey_populations, t1_estimate,
    t1_populations, CalibrationError,
};
use pulsekit_core::drift::{
    analytical_t1_sensitivity, evaluate_drift_point, generate_trajectory, loo_lambda_grid,
    ridge_fit, ridge_fit_loo, CampaignSettings, DriftSample, GatePulses, RegressionFit, Scenario,
    GATES,
};
use pulsekit_core::grape::{
    ensemble_cost, linspace, optimize_multistart, ErrorEnsemble, GrapeConfig,
};
use pulsekit_core::model::{ErrorPoint, TransmonParams};
use pulsekit_core::propagation::{ideal_pi_half, x_pi_half_target};
use pulsekit_core::pulses::{check_constraints, sample_pulse, Pulse, SampledPulse};
use pulsekit_core::units::{mhz_to_rad, rad_to_mhz, rate_to_mhz, s_to_us, us_to_s};

use crate::config::{LambdaChoice, RunConfig};

/// Error that should exit with the usage/config status (2) rather than the
/// runtime status (1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

pub struct RunContext {
    pub config: RunConfig,
    pub config_dir: PathBuf,
    pub out_dir: PathBuf,
    pub seed_override: Option<u64>,
    pub threads: Option<usize>,
    pub strict: bool,
}

impl RunContext {
    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            builder = builder.num_threads(n.max(1));
        }
        builder.build().context("building worker pool")
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).context("serializing JSON")?;
        self.write(name, &format!("{text}\n"))
    }

    fn manifest(&self, command: &str, seed: u64, artifacts: &[&str]) -> Result<()> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            package_version: &'a str,
            seed: u64,
            threads: Option<usize>,
            strict: bool,
            artifacts: Vec<&'a str>,
            config: &'a RunConfig,
        }
        self.write_json(
            "manifest.json",
            &Manifest {
                command,
                package_version: env!("CARGO_PKG_VERSION"),
                seed,
                threads: self.threads,
                strict: self.strict,
                artifacts: artifacts.to_vec(),
                config: &self.config,
            },
        )
    }

    fn params(&self) -> Result<TransmonParams> {
        self.config.qubit.params().map_err(|e| usage(e.to_string()))
    }

    /// Resolve and (optionally) amplitude-calibrate the configured pulse.
    /// `None` means the ideal-gate source.
    fn resolve_pulse(&self, params: &TransmonParams) -> Result<(Option<Pulse>, f64)> {
        let pc = self.config.pulse().map_err(|e| usage(e.to_string()))?;
        let dt = pc.dt().map_err(|e| usage(e.to_string()))?;
        let pulse = pc
            .resolve(params, &self.config_dir)
            .map_err(|e| usage(e.to_string()))?;
        let pulse = match pulse {
            Some(p) if pc.calibrate_amplitude => {
                let scales: Vec<f64> = (6..=14).map(|k| k as f64 * 0.1).collect();
                let cal = amplitude_sweep(&p, params, &scales, dt)
                    .map_err(|e| anyhow!("amplitude calibration failed: {e}"))?;
                Some(p.scaled(cal.amplitude_scale))
            }
            other => other,
        };
        Ok((pulse, dt))
    }

    fn physical_pulse(&self, params: &TransmonParams) -> Result<(SampledPulse, f64)> {
        let (pulse, dt) = self.resolve_pulse(params)?;
        let pulse =
            pulse.ok_or_else(|| usage("this command needs a physical pulse, not `ideal`"))?;
        let sampled =
            sample_pulse(&pulse, dt).map_err(|e| usage(format!("sampling pulse: {e}")))?;
        Ok((sampled, dt))
    }
}

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        let mut s = format!("{v:?}");
        if s.ends_with(".0") {
            s.truncate(s.len() - 2);
        }
        s
    } else {
        format!("{v}")
    }
}

fn parse_noise(s: &str) -> Result<NoiseModel> {
    match s.to_ascii_lowercase().as_str() {
        "unitary" => Ok(NoiseModel::Unitary),
        "lindblad" => Ok(NoiseModel::Lindblad),
        other => Err(usage(format!("unknown noise model {other:?}"))),
    }
}

// --- optimize ----------------------------------------------------------

pub fn cmd_optimize(ctx: &RunContext) -> Result<()> {
    let params = ctx.params()?;
    let oc = ctx
        .config
        .optimize_section()
        .map_err(|e| usage(e.to_string()))?
        .clone();
    if oc.eta <= 0.0 {
        return Err(usage("optimize.eta must be positive"));
    }
    if oc.n_delta == 0 || oc.n_gamma == 0 {
        return Err(usage("ensemble sizes must be at least 1"));
    }
    if oc.gate_time_ns <= 0.0 {
        return Err(usage("optimize.gate_time_ns must be positive"));
    }
    let dt = match &ctx.config.pulse {
        Some(pc) => pc.dt().map_err(|e| usage(e.to_string()))?,
        None => us_to_s(0.5e-3),
    };
    let seed = ctx.seed_override.unwrap_or(oc.seed);
    let ens = ErrorEnsemble::grid(
        (mhz_to_rad(oc.delta_mhz[0]), mhz_to_rad(oc.delta_mhz[1])),
        oc.n_delta,
        (mhz_to_rad(oc.gamma_mhz[0]), mhz_to_rad(oc.gamma_mhz[1])),
        oc.n_gamma,
    )
    .map_err(|e| usage(format!("invalid ensemble: {e}")))?;
    let cfg = GrapeConfig::new(
        x_pi_half_target(),
        dt,
        oc.eta,
        oc.max_iters,
        oc.grad_tolerance,
        seed,
    )
    .map_err(|e| usage(format!("invalid optimizer settings: {e}")))?;

    let gate_time = oc.gate_time_ns * 1e-9;
    let result = optimize_multistart(
        &params,
        &ens,
        &cfg,
        gate_time,
        params.rabi_max_omega0,
        oc.random_starts,
        oc.half_sine_start,
    )
    .map_err(|e| anyhow!("optimization failed: {e}"))?;

    crate::pulsefile::write_pulse_file(&ctx.out_dir.join("pulse.txt"), &result.pulse)?;
    let sampled = sample_pulse(&Pulse::Fourier(result.pulse), dt)
        .map_err(|e| anyhow!("sampling result: {e}"))?;
    ctx.write(
        "pulse_samples.csv",
        &crate::pulsefile::sampled_to_csv(&sampled),
    )?;
    let mut history = String::from("iteration,cost,grad_norm\n");
    for (k, (c, g)) in result
        .cost_history
        .iter()
        .zip(&result.grad_norm_history)
        .enumerate()
    {
        let _ = writeln!(history, "{k},{},{}", fmt_f64(*c), fmt_f64(*g));
    }
    ctx.write("cost_history.csv", &history)?;

    let final_j = ensemble_cost(&result.pulse, &params, &ens, &cfg)
        .map_err(|e| anyhow!("re-evaluating final cost: {e}"))?;
    let violation = check_constraints(&result.pulse, oc.eta, dt)
        .map_err(|e| anyhow!("constraint check: {e}"))?;
    #[derive(Serialize)]
    struct Summary {
        final_cost: f64,
        ensemble_cost: f64,
        feasible: bool,
        constraint_violation: f64,
        iterations: usize,
    }
    ctx.write_json(
        "optimize_summary.json",
        &Summary {
            final_cost: result.final_cost,
            ensemble_cost: final_j,
            feasible: result.feasible,
            constraint_violation: violation,
            iterations: result.cost_history.len(),
        },
    )?;
    ctx.manifest(
        "optimize",
        seed,
        &[
            "pulse.txt",
            "pulse_samples.csv",
            "cost_history.csv",
            "optimize_summary.json",
        ],
    )?;

    if !result.feasible {
        return Err(anyhow!(
            "optimization finished infeasible (violation {violation:.3e} rad/s)"
        ));
    }
    Ok(())
}

// --- scan --------------------------------------------------------------

pub fn cmd_scan(ctx: &RunContext) -> Result<()> {
    let params = ctx.params()?;
    let sc = ctx
        .config
        .scan_section()
        .map_err(|e| usage(e.to_string()))?
        .clone();
    if sc.grid[0] == 0 || sc.grid[1] == 0 {
        return Err(usage("scan.grid entries must be at least 1"));
    }
    let noise = parse_noise(&sc.noise)?;
    if noise == NoiseModel::Lindblad && (params.t1.is_none() || params.tphi.is_none()) {
        return Err(usage(
            "lindblad noise requires qubit.t1_us and qubit.tphi_us",
        ));
    }
    let (sampled, _) = ctx.physical_pulse(&params)?;
    let seed = ctx.seed_override.unwrap_or(sc.seed);
    let cfg = ScanConfig {
        n_c: sc.n_c,
        n_random: sc.n_random,
        noise,
        seed,
        fit_a: sc.fit_a,
        fit_b: sc.fit_b,
        readout_error: None,
    };

    let deltas = linspace(
        mhz_to_rad(sc.delta_mhz[0]),
        mhz_to_rad(sc.delta_mhz[1]),
        sc.grid[0],
    );
    let gammas = linspace(
        mhz_to_rad(sc.gamma_mhz[0]),
        mhz_to_rad(sc.gamma_mhz[1]),
        sc.grid[1],
    );
    let table = clifford_table();
    let pool = ctx.pool()?;
    let cells: Vec<LandscapeCell> = pool
        .install(|| {
            (0..deltas.len() * gammas.len())
                .into_par_iter()
                .map(|idx| {
                    let (i, j) = (idx / gammas.len(), idx % gammas.len());
                    scan_cell(&sampled, &params, &table, deltas[i], gammas[j], idx, &cfg)
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(|e| anyhow!("scan failed: {e}"))?;

    let mut landscape =
        String::from("delta_mhz,gamma_mhz,seq_error_mean,seq_error_std,derived_gate_error\n");
    let mut masks = String::from("delta_mhz,gamma_mhz,within_5e-3,within_1e-2\n");
    for c in &cells {
        let _ = writeln!(
            landscape,
            "{},{},{},{},{}",
            fmt_f64(rad_to_mhz(c.delta)),
            fmt_f64(rad_to_mhz(c.gamma)),
            fmt_f64(c.seq_error_mean),
            fmt_f64(c.seq_error_std),
            fmt_f64(c.derived_gate_error)
        );
        let _ = writeln!(
            masks,
            "{},{},{},{}",
            fmt_f64(rad_to_mhz(c.delta)),
            fmt_f64(rad_to_mhz(c.gamma)),
            u8::from(c.derived_gate_error <= 5e-3),
            u8::from(c.derived_gate_error <= 1e-2)
        );
    }
    ctx.write("landscape.csv", &landscape)?;
    ctx.write("contour_masks.csv", &masks)?;
    ctx.manifest("scan", seed, &["landscape.csv", "contour_masks.csv"])?;
    Ok(())
}

// --- rb ----------------------------------------------------------------

fn rb_outcome_json(outcome: &RbOutcome) -> impl Serialize + '_ {
    #[derive(Serialize)]
    struct Fit<'a> {
        fitted_gate_error: f64,
        fit_a: f64,
        fit_b: f64,
        fit_p: f64,
        fit_converged: bool,
        mean_std_over_lengths: f64,
        lengths: &'a [usize],
    }
    Fit {
        fitted_gate_error: outcome.fitted_gate_error,
        fit_a: outcome.fit_a,
        fit_b: outcome.fit_b,
        fit_p: outcome.fit_p,
        fit_converged: outcome.fit_converged,
        mean_std_over_lengths: outcome.mean_std_over_lengths,
        lengths: &outcome.lengths,
    }
}

pub fn cmd_rb(ctx: &RunContext) -> Result<()> {
    let params = ctx.params()?;
    let rc = ctx
        .config
        .rb_section()
        .map_err(|e| usage(e.to_string()))?
        .clone();
    if rc.lengths.is_empty() {
        return Err(usage("rb.lengths must not be empty"));
    }
    let noise = parse_noise(&rc.noise)?;
    if noise == NoiseModel::Lindblad && (params.t1.is_none() || params.tphi.is_none()) {
        return Err(usage(
            "lindblad noise requires qubit.t1_us and qubit.tphi_us",
        ));
    }
    let seed = ctx.seed_override.unwrap_or(rc.seed);
    let run = RbRun {
        lengths: rc.lengths.clone(),
        n_random: rc.n_random,
        noise,
        seed,
        readout_error: None,
    };
    let err = ErrorPoint::new(mhz_to_rad(rc.delta_mhz), mhz_to_rad(rc.gamma_mhz))
        .map_err(|e| usage(format!("invalid error point: {e}")))?;

    let (pulse, dt) = ctx.resolve_pulse(&params)?;
    let outcome = match pulse {
        None => simulate_rb_with_unitary(&ideal_pi_half(0.0), &run),
        Some(p) => {
            let sampled =
                sample_pulse(&p, dt).map_err(|e| usage(format!("sampling pulse: {e}")))?;
            simulate_rb(&sampled, &params, &err, &run)
        }
    }
    .map_err(|e| anyhow!("benchmarking failed: {e}"))?;

    let mut curve = String::from("length,survival_mean,survival_std\n");
    for ((l, m), s) in outcome
        .lengths
        .iter()
        .zip(&outcome.seq_fidelity_mean)
        .zip(&outcome.seq_fidelity_std)
    {
        let _ = writeln!(curve, "{l},{},{}", fmt_f64(*m), fmt_f64(*s));
    }
    ctx.write("rb_curve.csv", &curve)?;
    ctx.write_json("rb_fit.json", &rb_outcome_json(&outcome))?;
    ctx.manifest("rb", seed, &["rb_curve.csv", "rb_fit.json"])?;

    if ctx.strict && !outcome.fit_converged {
        return Err(anyhow!("decay fit did not converge (--strict)"));
    }
    Ok(())
}

// --- calibrate ----------------------------------------------------------

pub fn cmd_calibrate(ctx: &RunContext) -> Result<()> {
    let params = ctx.params()?;
    let cc = ctx
        .config
        .calibrate_section()
        .map_err(|e| usage(e.to_string()))?
        .clone();
    let pc = ctx.config.pulse().map_err(|e| usage(e.to_string()))?;
    let dt = pc.dt().map_err(|e| usage(e.to_string()))?;
    let pulse = pc
        .resolve(&params, &ctx.config_dir)
        .map_err(|e| usage(e.to_string()))?
        .ok_or_else(|| usage("calibrate needs a physical pulse, not `ideal`"))?;
    let err = ErrorPoint::new(mhz_to_rad(cc.delta_mhz), mhz_to_rad(cc.gamma_mhz))
        .map_err(|e| usage(format!("invalid error point: {e}")))?;

    let mut failures: Vec<String> = Vec::new();

    // Amplitude sweep with its trace.
    let scales = linspace(cc.scale_range[0], cc.scale_range[1], cc.n_scales.max(2));
    let mut sweep_csv = String::from("scale,population\n");
    for &s in &scales {
        let p = amplitude_population(&pulse, &params, dt, s)
            .map_err(|e| anyhow!("population evaluation: {e}"))?;
        let _ = writeln!(sweep_csv, "{},{}", fmt_f64(s), fmt_f64(p));
    }
    ctx.write("amplitude_sweep.csv", &sweep_csv)?;
    let sweep = match amplitude_sweep(&pulse, &params, &scales, dt) {
        Ok(cal) => Some(cal),
        Err(e) => {
            failures.push(format!("amplitude sweep: {e}"));
            None
        }
    };
    let calibrated = match &sweep {
        Some(cal) => pulse.scaled(cal.amplitude_scale),
        None => pulse,
    };
    let sampled =
        sample_pulse(&calibrated, dt).map_err(|e| usage(format!("sampling pulse: {e}")))?;

    // Error amplification with its trace.
    let n_values: Vec<usize> = (0..=cc.error_amp_max_n).collect();
    let pops = error_amp_populations(&sampled, &params, &err, &n_values)
        .map_err(|e| anyhow!("error amplification: {e}"))?;
    let mut amp_csv = String::from("n,population\n");
    for (n, p) in n_values.iter().zip(&pops) {
        let _ = writeln!(amp_csv, "{n},{}", fmt_f64(*p));
    }
    ctx.write("error_amplification.csv", &amp_csv)?;
    let amp_fit = match error_amp_extract(&sampled, &params, &err, &n_values) {
        Ok(f) => Some(f),
        Err(e) => {
            failures.push(format!("error amplification fit: {e}"));
            None
        }
    };

    // Ramsey.
    let art = mhz_to_rad(cc.artificial_detuning_mhz);
    let delays: Vec<f64> = (0..cc.ramsey_points.max(2))
        .map(|k| us_to_s(cc.ramsey_max_us) * k as f64 / (cc.ramsey_points.max(2) - 1) as f64)
        .collect();
    let ramsey_trace = ramsey_populations(&params, &err, &delays, art)
        .map_err(|e| anyhow!("ramsey simulation: {e}"))?;
    let mut ramsey_csv = String::from("delay_us,population\n");
    for (tau, p) in delays.iter().zip(&ramsey_trace) {
        let _ = writeln!(ramsey_csv, "{},{}", fmt_f64(s_to_us(*tau)), fmt_f64(*p));
    }
    ctx.write("ramsey.csv", &ramsey_csv)?;
    let ramsey = match ramsey_estimate_with_detuning(&params, &err, &delays, art) {
        Ok(f) => Some(f),
        Err(e) => {
            failures.push(format!("ramsey fit: {e}"));
            None
        }
    };

    // Relaxation.
    let t1_delays: Vec<f64> = (0..cc.t1_points.max(2))
        .map(|k| 1e-9 + us_to_s(cc.t1_max_us) * k as f64 / (cc.t1_points.max(2) - 1) as f64)
        .collect();
    let t1_trace =
        t1_populations(&params, &t1_delays).map_err(|e| anyhow!("relaxation simulation: {e}"))?;
    let mut t1_csv = String::from("delay_us,population\n");
    for (tau, p) in t1_delays.iter().zip(&t1_trace) {
        let _ = writeln!(t1_csv, "{},{}", fmt_f64(s_to_us(*tau)), fmt_f64(*p));
    }
    ctx.write("t1_decay.csv", &t1_csv)?;
    let t1 = match t1_estimate(&params, &t1_delays) {
        Ok(f) => Some(f),
        Err(e @ CalibrationError::InsufficientSpan) => {
            failures.push(format!("relaxation fit: {e}"));
            None
        }
        Err(e) => {
            failures.push(format!("relaxation fit: {e}"));
            None
        }
    };

    #[derive(Serialize)]
    struct Summary {
        amplitude_scale: Option<f64>,
        sweep_slope: Option<f64>,
        residual_gamma_mhz: Option<f64>,
        fitted_offset_a: Option<f64>,
        frequency_offset_mhz: Option<f64>,
        t2_star_us: Option<f64>,
        t1_us: Option<f64>,
        t1_unbounded: Option<bool>,
        tphi_us: Option<f64>,
        failures: Vec<String>,
    }
    let coherence = match (&ramsey, &t1) {
        (Some(r), Some(t)) => Some(coherence_estimate(r, t)),
        _ => None,
    };
    ctx.write_json(
        "calibration.json",
        &Summary {
            amplitude_scale: sweep.as_ref().map(|c| c.amplitude_scale),
            sweep_slope: sweep.as_ref().map(|c| c.slope),
            residual_gamma_mhz: amp_fit.as_ref().map(|f| rad_to_mhz(f.residual_gamma)),
            fitted_offset_a: amp_fit.as_ref().map(|f| f.fitted_offset_a),
            frequency_offset_mhz: ramsey.as_ref().map(|f| rad_to_mhz(f.frequency_offset)),
            t2_star_us: ramsey.as_ref().map(|f| s_to_us(f.t2_star)),
            t1_us: t1.as_ref().map(|f| s_to_us(f.t1)),
            t1_unbounded: t1.as_ref().map(|f| f.unbounded),
            tphi_us: coherence.map(|c| s_to_us(c.tphi)),
            failures: failures.clone(),
        },
    )?;
    ctx.manifest(
        "calibrate",
        ctx.seed_override.unwrap_or(0),
        &[
            "amplitude_sweep.csv",
            "error_amplification.csv",
            "ramsey.csv",
            "t1_decay.csv",
            "calibration.json",
        ],
    )?;

    if ctx.strict && !failures.is_empty() {
        return Err(anyhow!(
            "calibration failures (--strict): {}",
            failures.join("; ")
        ));
    }
    Ok(())
}

// --- drift ---------------------------------------------------------------

pub fn cmd_drift(ctx: &RunContext) -> Result<()> {
    let params = ctx.params()?;
    let dc = ctx
        .config
        .drift_section()
        .map_err(|e| usage(e.to_string()))?
        .clone();
    let scenario: Scenario = dc
        .scenario
        .parse()
        .map_err(|_| usage(format!("unknown drift scenario {:?}", dc.scenario)))?;
    if dc.n_samples < 10 {
        return Err(usage("drift.n_samples must be at least 10"));
    }
    let seed = ctx.seed_override.unwrap_or(dc.seed);
    let settings = CampaignSettings {
        dt: 0.5e-9,
        lengths: dc.lengths.clone(),
        n_random: dc.n_random,
        seed,
    };

    let trajectory = generate_trajectory(scenario, dc.n_samples, seed);
    let pulses = GatePulses::calibrated(&params, settings.dt)
        .map_err(|e| anyhow!("gate calibration failed: {e}"))?;
    let pool = ctx.pool()?;
    let samples: Vec<DriftSample> = pool
        .install(|| {
            trajectory
                .par_iter()
                .enumerate()
                .map(|(k, point)| evaluate_drift_point(point, k, &pulses, &params, &settings))
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(|e| anyhow!("campaign evaluation failed: {e}"))?;

    let mut csv =
        String::from("timestamp,gamma_mhz,gamma_phi_mhz,gamma_1_mhz,err_drag,err_frog,err_arog\n");
    for s in &samples {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            s.timestamp,
            fmt_f64(rad_to_mhz(s.gamma)),
            fmt_f64(rate_to_mhz(s.gamma_phi_rate)),
            fmt_f64(rate_to_mhz(s.gamma_1_rate)),
            fmt_f64(s.gate_errors[0]),
            fmt_f64(s.gate_errors[1]),
            fmt_f64(s.gate_errors[2])
        );
    }
    ctx.write("campaign.csv", &csv)?;

    let fit = match &dc.lambda {
        LambdaChoice::Fixed(v) => ridge_fit(&samples, *v),
        LambdaChoice::Named(name) if name.eq_ignore_ascii_case("loo") => {
            ridge_fit_loo(&samples, &loo_lambda_grid())
        }
        LambdaChoice::Named(other) => {
            return Err(usage(format!("unknown lambda choice {other:?}")))
        }
    }
    .map_err(|e| anyhow!("regression failed: {e}"))?;

    #[derive(Serialize)]
    struct FitJson<'a> {
        lambda: f64,
        r_squared: f64,
        feature_names: [&'a str; 3],
        feature_means: [f64; 3],
        feature_stds: [f64; 3],
        gates: Vec<GateFit<'a>>,
    }
    #[derive(Serialize)]
    struct GateFit<'a> {
        gate: &'a str,
        intercept: f64,
        weights_per_mhz: [f64; 3],
        analytical_w_gamma_1: f64,
    }
    let fit_json = FitJson {
        lambda: fit.lambda,
        r_squared: fit.r_squared,
        feature_names: ["gamma", "gamma_phi", "gamma_1"],
        feature_means: fit.feature_means,
        feature_stds: fit.feature_stds,
        gates: GATES
            .iter()
            .enumerate()
            .map(|(gi, g)| GateFit {
                gate: g.name(),
                intercept: fit.intercepts[gi],
                weights_per_mhz: fit.weights_physical[gi],
                analytical_w_gamma_1: analytical_t1_sensitivity(g.gate_time()),
            })
            .collect(),
    };
    ctx.write_json("drift_fit.json", &fit_json)?;
    ctx.write("sensitivity_report.txt", &sensitivity_report(&fit))?;
    ctx.manifest(
        "drift",
        seed,
        &["campaign.csv", "drift_fit.json", "sensitivity_report.txt"],
    )?;
    Ok(())
}

/// Aligned text table of the fitted sensitivities, one row per gate.
pub fn sensitivity_report(fit: &RegressionFit) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:>14} {:>14} {:>14}",
        "gate", "w_gamma", "w_gamma_phi", "w_gamma_1"
    );
    let _ = writeln!(
        out,
        "{:<6} {:>14} {:>14} {:>14}",
        "", "(1/MHz)", "(1/MHz)", "(1/MHz)"
    );
    for (gi, gate) in GATES.iter().enumerate() {
        let w = fit.weights_physical[gi];
        let _ = writeln!(
            out,
            "{:<6} {:>14.4e} {:>14.4e} {:>14.4e}",
            gate.name(),
            w[0],
            w[1],
            w[2]
        );
    }
    let _ = writeln!(
        out,
        "lambda = {:.4e}   R^2 = {:.4}",
        fit.lambda, fit.r_squared
    );
    out
}
