//! Dense BFGS with backtracking line search, for the ten-coefficient pulse
//! optimization. Deterministic: no randomness, fixed evaluation order.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

pub(crate) struct BfgsOptions {
    pub max_iters: usize,
    /// Stop when the gradient 2-norm falls below this.
    pub grad_tol: f64,
    /// Stop when the relative cost improvement over `stall_window`
    /// consecutive iterations falls below `stall_rel`.
    pub stall_window: usize,
    pub stall_rel: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum StopReason {
    GradientTolerance,
    MaxIterations,
    Stalled,
    LineSearchFailed,
}

pub(crate) struct BfgsOutcome {
    pub x: Vec<f64>,
    pub cost_history: Vec<f64>,
    pub grad_norm_history: Vec<f64>,
    #[allow(dead_code)]
    pub reason: StopReason,
}

/// Value-and-gradient evaluation of the objective.
pub(crate) type Objective<'a> = dyn FnMut(&[f64]) -> (f64, Vec<f64>) + 'a;

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimize a smooth objective given value-and-gradient evaluations.
/// The accepted-cost history is monotone non-increasing by construction
/// (Armijo backtracking).
pub(crate) fn bfgs_minimize(
    objective: &mut Objective<'_>,
    x0: &[f64],
    opts: &BfgsOptions,
) -> BfgsOutcome {
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = objective(&x);
    let mut hinv = vec![0.0; n * n];
    for k in 0..n {
        hinv[k * n + k] = 1.0;
    }
    let mut cost_history = vec![f];
    let mut grad_norm_history = vec![norm2(&g)];
    let mut first_update = true;
    let mut reason = StopReason::MaxIterations;

    for iter in 0..opts.max_iters {
        let gnorm = norm2(&g);
        if gnorm <= opts.grad_tol {
            reason = StopReason::GradientTolerance;
            break;
        }

        // Search direction d = −Hinv·g, with a steepest-descent reset if the
        // approximation has lost positive definiteness.
        let mut d = vec![0.0; n];
        for r in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                acc += hinv[r * n + c] * g[c];
            }
            d[r] = -acc;
        }
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            for k in 0..n * n {
                hinv[k] = 0.0;
            }
            for k in 0..n {
                hinv[k * n + k] = 1.0;
                d[k] = -g[k];
            }
            slope = -gnorm * gnorm;
            first_update = true;
        }

        // Backtracking Armijo line search.
        let c1 = 1e-4;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..45 {
            let xt: Vec<f64> = (0..n).map(|k| x[k] + t * d[k]).collect();
            let (ft, gt) = objective(&xt);
            if ft.is_finite() && ft <= f + c1 * t * slope {
                accepted = Some((xt, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((xt, ft, gt)) = accepted else {
            reason = StopReason::LineSearchFailed;
            break;
        };

        let s: Vec<f64> = (0..n).map(|k| xt[k] - x[k]).collect();
        let y: Vec<f64> = (0..n).map(|k| gt[k] - g[k]).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();

        x = xt;
        f = ft;
        g = gt;
        cost_history.push(f);
        grad_norm_history.push(norm2(&g));

        if sy > 1e-12 * norm2(&s) * norm2(&y) {
            if first_update {
                // Nocedal's initial scaling of the inverse Hessian.
                let yy: f64 = y.iter().map(|v| v * v).sum();
                if yy > 0.0 {
                    let scale = sy / yy;
                    for k in 0..n * n {
                        hinv[k] = 0.0;
                    }
                    for k in 0..n {
                        hinv[k * n + k] = scale;
                    }
                }
                first_update = false;
            }
            // Hinv ← (I − ρsyᵀ)·Hinv·(I − ρysᵀ) + ρssᵀ
            let rho = 1.0 / sy;
            let mut hy = vec![0.0; n];
            for r in 0..n {
                let mut acc = 0.0;
                for c in 0..n {
                    acc += hinv[r * n + c] * y[c];
                }
                hy[r] = acc;
            }
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for r in 0..n {
                for c in 0..n {
                    hinv[r * n + c] += -rho * (s[r] * hy[c] + hy[r] * s[c])
                        + rho * rho * yhy * s[r] * s[c]
                        + rho * s[r] * s[c];
                }
            }
        }

        // Stall detection over a trailing window.
        if iter + 1 >= opts.stall_window {
            let back = cost_history[cost_history.len() - 1 - opts.stall_window];
            if (back - f).abs() <= opts.stall_rel * back.abs().max(1e-300) {
                reason = StopReason::Stalled;
                break;
            }
        }
    }

    BfgsOutcome {
        x,
        cost_history,
        grad_norm_history,
        reason,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic_bowl() {
        let mut obj = |x: &[f64]| {
            let f = 2.0 * (x[0] - 1.0).powi(2) + 0.5 * (x[1] + 3.0).powi(2);
            (f, vec![4.0 * (x[0] - 1.0), 1.0 * (x[1] + 3.0)])
        };
        let out = bfgs_minimize(
            &mut obj,
            &[5.0, 5.0],
            &BfgsOptions {
                max_iters: 200,
                grad_tol: 1e-10,
                stall_window: 20,
                stall_rel: 1e-10,
            },
        );
        assert_eq!(out.reason, StopReason::GradientTolerance);
        assert!((out.x[0] - 1.0).abs() < 1e-8);
        assert!((out.x[1] + 3.0).abs() < 1e-8);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let mut obj = |x: &[f64]| {
            let (a, b) = (1.0, 100.0);
            let f = (a - x[0]).powi(2) + b * (x[1] - x[0] * x[0]).powi(2);
            let g = vec![
                -2.0 * (a - x[0]) - 4.0 * b * x[0] * (x[1] - x[0] * x[0]),
                2.0 * b * (x[1] - x[0] * x[0]),
            ];
            (f, g)
        };
        let out = bfgs_minimize(
            &mut obj,
            &[-1.2, 1.0],
            &BfgsOptions {
                max_iters: 500,
                grad_tol: 1e-9,
                stall_window: 30,
                stall_rel: 1e-12,
            },
        );
        assert!((out.x[0] - 1.0).abs() < 1e-5, "x = {:?}", out.x);
        assert!((out.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn history_is_monotone_non_increasing() {
        let mut obj = |x: &[f64]| {
            let f = (x[0].powi(2) + 3.0 * x[1].powi(2)).sqrt() + x[0].powi(2);
            let denom = (x[0].powi(2) + 3.0 * x[1].powi(2)).sqrt().max(1e-12);
            (f, vec![x[0] / denom + 2.0 * x[0], 3.0 * x[1] / denom])
        };
        let out = bfgs_minimize(
            &mut obj,
            &[2.0, -1.5],
            &BfgsOptions {
                max_iters: 100,
                grad_tol: 1e-8,
                stall_window: 15,
                stall_rel: 1e-11,
            },
        );
        for w in out.cost_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }
}
