//! Small-dimension nonlinear least squares (Levenberg–Marquardt with a
//! numeric Jacobian and box projection). Callers keep parameters scaled to
//! order unity; every fit in this crate has at most five of them.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::linalg::solve_real;

pub(crate) struct FitResult {
    pub params: Vec<f64>,
    pub converged: bool,
    #[allow(dead_code)]
    pub sse: f64,
}

fn sse(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for k in 0..x.len() {
        x[k] = x[k].clamp(lower[k], upper[k]);
    }
}

/// Minimize Σ rᵢ(x)² over the box [lower, upper].
pub(crate) fn levenberg_marquardt(
    residuals: &mut dyn FnMut(&[f64], &mut [f64]),
    n_resid: usize,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    max_iters: usize,
) -> FitResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);

    let mut r = vec![0.0; n_resid];
    let mut r_trial = vec![0.0; n_resid];
    residuals(&x, &mut r);
    let mut cost = sse(&r);
    let mut lambda = 1e-3;
    let mut converged = false;

    let mut jac = vec![0.0; n_resid * n];
    for _ in 0..max_iters {
        // Central-difference Jacobian.
        for k in 0..n {
            let h = (1e-7 * x[k].abs()).max(1e-9);
            let mut xp = x.clone();
            xp[k] += h;
            residuals(&xp, &mut r_trial);
            let rp = r_trial.clone();
            xp[k] = x[k] - h;
            residuals(&xp, &mut r_trial);
            for i in 0..n_resid {
                jac[i * n + k] = (rp[i] - r_trial[i]) / (2.0 * h);
            }
        }

        // Normal equations with Marquardt damping.
        let mut jtj = vec![0.0; n * n];
        let mut jtr = vec![0.0; n];
        for i in 0..n_resid {
            for a in 0..n {
                jtr[a] += jac[i * n + a] * r[i];
                for b in 0..n {
                    jtj[a * n + b] += jac[i * n + a] * jac[i * n + b];
                }
            }
        }

        let mut improved = false;
        for _ in 0..12 {
            let mut lhs = jtj.clone();
            for a in 0..n {
                lhs[a * n + a] += lambda * jtj[a * n + a].max(1e-12);
            }
            let mut step: Vec<f64> = jtr.iter().map(|v| -v).collect();
            if solve_real(&mut lhs, &mut step, n).is_none() {
                lambda *= 4.0;
                continue;
            }
            let mut x_trial: Vec<f64> = (0..n).map(|k| x[k] + step[k]).collect();
            project(&mut x_trial, lower, upper);
            residuals(&x_trial, &mut r_trial);
            let cost_trial = sse(&r_trial);
            if cost_trial < cost {
                let step_norm: f64 = (0..n)
                    .map(|k| (x_trial[k] - x[k]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let rel_drop = (cost - cost_trial) / cost.max(1e-300);
                x = x_trial;
                core::mem::swap(&mut r, &mut r_trial);
                cost = cost_trial;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if step_norm < 1e-12 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt())
                    || rel_drop < 1e-14
                    || cost < 1e-28
                {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if converged {
            break;
        }
        if !improved {
            // Damping exhausted: treat the current point as stationary.
            converged = cost.is_finite();
            break;
        }
    }

    FitResult {
        params: x,
        converged,
        sse: cost,
    }
}
