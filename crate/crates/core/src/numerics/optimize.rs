use nalgebra::{DMatrix, DVector};

use crate::config::OptimizerConfig;
use crate::error::{Error, Result};

const ARMIJO_C: f64 = 1e-4;
const NONMONOTONE_MEMORY: usize = 10;
const STALL_ULPS: f64 = 8.0;
const POLISH_ITERS: usize = 100;

/// Result of [`maximize_positive`].
#[derive(Debug, Clone)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Max-norm of the gradient at `x`.
    pub grad_norm: f64,
}

/// Maximizes a smooth objective over the positive orthant.
///
/// `objective(x, grad)` returns the value at `x` and writes ∂f/∂x into `grad`.
/// The search runs in log coordinates (x = exp(u)), so iterates never leave the
/// orthant. Each step is a gradient ascent step on u whose trial length is
/// `cfg.initial_step` at first and the Barzilai-Borwein length afterwards,
/// halved until it passes an Armijo test against the best of the last few
/// accepted values. Once value gains sink to rounding level, a polishing phase
/// keeps stepping while the gradient shrinks and the value stays within
/// rounding of the best, which pins the maximizer down far more tightly than
/// the value alone can. The best point visited is returned.
pub fn maximize_positive<F>(mut objective: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<Maximum>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    if let Some((i, &v)) = x0
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
    {
        return Err(Error::NonFinite {
            coordinate: i,
            value: v,
        });
    }
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut u: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let mut grad = vec![0.0; n];
    let mut value = objective(&x, &mut grad);
    check_finite(value, &grad)?;

    let mut grad_u: Vec<f64> = grad.iter().zip(&x).map(|(g, x)| g * x).collect();
    let mut trial_x = vec![0.0; n];
    let mut trial_u = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];
    let mut best = Maximum {
        x: x.clone(),
        value,
        iterations: 0,
        grad_norm: max_norm(&grad),
    };
    let mut best_u = u.clone();
    let mut best_grad_u = grad_u.clone();
    let mut recent = [value; NONMONOTONE_MEMORY];
    let mut window_start = value;
    let mut step = cfg.initial_step;
    let mut iterations = 0;

    let mut stalled = false;
    while iterations < cfg.max_inner_iters {
        if best.grad_norm <= cfg.abs_grad_tol {
            break;
        }
        let slope: f64 = grad_u.iter().map(|g| g * g).sum();
        if slope == 0.0 {
            break;
        }
        let reference = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = false;
        let mut trial_value = f64::NAN;
        for _ in 0..=cfg.max_halvings {
            let mut positive = true;
            for i in 0..n {
                trial_u[i] = u[i] + step * grad_u[i];
                trial_x[i] = trial_u[i].exp();
                positive &= trial_x[i] > 0.0 && trial_x[i].is_finite();
            }
            if positive {
                trial_value = objective(&trial_x, &mut trial_grad);
                if trial_value.is_finite()
                    && trial_grad.iter().all(|g| g.is_finite())
                    && trial_value >= reference + ARMIJO_C * step * slope
                {
                    accepted = true;
                    break;
                }
            }
            step *= cfg.backtrack_factor;
        }
        if !accepted {
            // no representable improvement left along the gradient
            stalled = true;
            break;
        }
        iterations += 1;

        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..n {
            let s = trial_u[i] - u[i];
            let g_u = trial_grad[i] * trial_x[i];
            ss += s * s;
            sy += s * (g_u - grad_u[i]);
            grad_u[i] = g_u;
        }
        std::mem::swap(&mut u, &mut trial_u);
        std::mem::swap(&mut x, &mut trial_x);
        std::mem::swap(&mut grad, &mut trial_grad);
        value = trial_value;
        recent[iterations % NONMONOTONE_MEMORY] = value;
        if value > best.value {
            best.x.copy_from_slice(&x);
            best.value = value;
            best.grad_norm = max_norm(&grad);
            best_u.copy_from_slice(&u);
            best_grad_u.copy_from_slice(&grad_u);
        }
        if iterations % NONMONOTONE_MEMORY == 0 {
            // gains at the level of rounding error: the value can no longer
            // guide the search
            if best.value - window_start <= STALL_ULPS * f64::EPSILON * best.value.abs().max(1.0) {
                stalled = true;
                break;
            }
            window_start = best.value;
        }
        step = if sy < 0.0 {
            (ss / -sy).clamp(1e-10, 1e10)
        } else {
            cfg.initial_step
        };
    }

    if stalled && best.grad_norm > cfg.abs_grad_tol {
        iterations += polish(&mut objective, &mut best, best_u, best_grad_u, cfg);
    }
    best.iterations = iterations;
    Ok(best)
}

/// Gradient-driven endgame from the best point: BB steps in log coordinates,
/// each accepted only if the log-space gradient's 2-norm drops below that of the
/// current point and the value stays within rounding of `best.value`.
fn polish<F>(
    objective: &mut F,
    best: &mut Maximum,
    mut u: Vec<f64>,
    mut grad_u: Vec<f64>,
    cfg: &OptimizerConfig,
) -> usize
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = u.len();
    let floor = best.value - STALL_ULPS * f64::EPSILON * best.value.abs().max(1.0);
    let mut step = cfg.initial_step;
    let mut norm_u = two_norm(&grad_u);
    let mut trial_u = vec![0.0; n];
    let mut trial_x = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];
    let mut trial_grad_u = vec![0.0; n];
    let mut iterations = 0;
    while iterations < POLISH_ITERS && best.grad_norm > cfg.abs_grad_tol {
        let mut accepted = false;
        for _ in 0..=cfg.max_halvings {
            for i in 0..n {
                trial_u[i] = u[i] + step * grad_u[i];
                trial_x[i] = trial_u[i].exp();
            }
            if trial_x.iter().all(|v| *v > 0.0 && v.is_finite()) {
                let value = objective(&trial_x, &mut trial_grad);
                if value.is_finite() && value >= floor && trial_grad.iter().all(|g| g.is_finite()) {
                    for i in 0..n {
                        trial_grad_u[i] = trial_grad[i] * trial_x[i];
                    }
                    let trial_norm = two_norm(&trial_grad_u);
                    if trial_norm < norm_u {
                        accepted = true;
                        norm_u = trial_norm;
                        best.x.copy_from_slice(&trial_x);
                        best.value = value;
                        best.grad_norm = max_norm(&trial_grad);
                        break;
                    }
                }
            }
            step *= cfg.backtrack_factor;
        }
        if !accepted {
            break;
        }
        iterations += 1;
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..n {
            let s = trial_u[i] - u[i];
            ss += s * s;
            sy += s * (trial_grad_u[i] - grad_u[i]);
        }
        std::mem::swap(&mut u, &mut trial_u);
        std::mem::swap(&mut grad_u, &mut trial_grad_u);
        step = if sy < 0.0 {
            (ss / -sy).clamp(1e-10, 1e10)
        } else {
            cfg.initial_step
        };
    }
    iterations
}

fn check_finite(value: f64, grad: &[f64]) -> Result<()> {
    if let Some((i, &g)) = grad.iter().enumerate().find(|(_, g)| !g.is_finite()) {
        return Err(Error::NonFinite {
            coordinate: i,
            value: g,
        });
    }
    if !value.is_finite() {
        return Err(Error::NonFinite {
            coordinate: 0,
            value,
        });
    }
    Ok(())
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, g| m.max(g.abs()))
}

/// Solves `m x = b` for symmetric positive definite `m` (row-major).
fn cholesky_solve(m: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let chol = DMatrix::from_row_slice(n, n, m).cholesky()?;
    let x = chol.solve(&DVector::from_column_slice(b));
    x.iter()
        .all(|v| v.is_finite())
        .then(|| x.as_slice().to_vec())
}

const NEWTON_ITERS: usize = 20;
const VALUE_SLACK: f64 = 1e-10;

/// Damped Newton steps on a concave objective from `x`, given its negated
/// Hessian. First-order solves leave the point loose along directions of weak
/// curvature; a few exact steps pin it down. A step is taken only if it keeps
/// `x` positive, does not lower the value by more than a relative 1e-10 and
/// shrinks the gradient; the refinement stops at the first step that fails.
pub(crate) fn newton_refine<F, H>(mut f: F, mut neg_hessian: H, x: &mut [f64])
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
    H: FnMut(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut value = f(x, &mut grad);
    for _ in 0..NEWTON_ITERS {
        let gnorm = two_norm(&grad);
        if gnorm == 0.0 || !value.is_finite() {
            return;
        }
        let Some(step) = cholesky_solve(&neg_hessian(x), &grad) else {
            return;
        };
        // Objectives summed over many documents lose several digits to
        // cancellation, so the value test only guards against real losses.
        let noise = VALUE_SLACK * value.abs().max(1.0);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            for ((y, xi), d) in trial.iter_mut().zip(x.iter()).zip(&step) {
                *y = xi + t * d;
            }
            if trial.iter().all(|&y| y > 0.0 && y.is_finite()) {
                let ft = f(&trial, &mut trial_grad);
                if ft >= value - noise && two_norm(&trial_grad) < gnorm {
                    value = ft;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return;
        }
        x.copy_from_slice(&trial);
        grad.copy_from_slice(&trial_grad);
    }
}
