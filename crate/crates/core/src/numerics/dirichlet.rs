use super::special::{lgamma, psi, psi1};
use crate::error::{Error, Result};

/// Σ_d log Dir(· | alpha) in terms of the summed expected log proportions
/// `suff_stats[i] = Σ_d E[log p_i]` over `num_docs` documents.
pub fn dirichlet_mle_objective(alpha: &[f64], suff_stats: &[f64], num_docs: usize) -> f64 {
    let d = num_docs as f64;
    let total: f64 = alpha.iter().sum();
    let mut f = d * lgamma(total);
    for (a, s) in alpha.iter().zip(suff_stats) {
        f += -d * lgamma(*a) + (a - 1.0) * s;
    }
    f
}

/// ∂/∂alpha_i of [`dirichlet_mle_objective`]: D(Ψ(Σα) − Ψ(α_i)) + s_i.
pub fn dirichlet_mle_gradient(alpha: &[f64], suff_stats: &[f64], num_docs: usize) -> Vec<f64> {
    let d = num_docs as f64;
    let psi_total = psi(alpha.iter().sum());
    alpha
        .iter()
        .zip(suff_stats)
        .map(|(a, s)| d * (psi_total - psi(*a)) + s)
        .collect()
}

/// Maximum-likelihood Dirichlet parameters by the linear-time Newton–Raphson
/// iteration. The Hessian is diag(−D Ψ'(α_i)) + D Ψ'(Σα) 11ᵀ, so the Newton
/// step is solved with Sherman–Morrison in O(K). Steps are halved until they
/// keep every coordinate positive and do not lower the objective.
pub fn newton_dirichlet(
    suff_stats: &[f64],
    num_docs: usize,
    alpha0: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    if num_docs == 0 {
        return Err(Error::InvalidArgument(
            "Dirichlet estimation needs at least one document".into(),
        ));
    }
    if suff_stats.len() != alpha0.len() {
        return Err(Error::Dimension(format!(
            "{} sufficient statistics for {} parameters",
            suff_stats.len(),
            alpha0.len()
        )));
    }
    if let Some((i, &a)) = alpha0
        .iter()
        .enumerate()
        .find(|(_, a)| !(**a > 0.0 && a.is_finite()))
    {
        return Err(Error::NonFinite {
            coordinate: i,
            value: a,
        });
    }

    let d = num_docs as f64;
    let k = alpha0.len();
    let mut alpha = alpha0.to_vec();
    let mut value = dirichlet_mle_objective(&alpha, suff_stats, num_docs);
    let mut grad = dirichlet_mle_gradient(&alpha, suff_stats, num_docs);
    let mut delta = vec![0.0; k];
    let mut trial = vec![0.0; k];

    for _ in 0..max_iters {
        let grad_norm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if grad_norm <= tol {
            return Ok(alpha);
        }
        let z = d * psi1(alpha.iter().sum());
        let mut num = 0.0;
        let mut den = 1.0 / z;
        let q: Vec<f64> = alpha.iter().map(|a| -d * psi1(*a)).collect();
        for i in 0..k {
            num += grad[i] / q[i];
            den += 1.0 / q[i];
        }
        let b = num / den;
        for i in 0..k {
            delta[i] = (grad[i] - b) / q[i];
        }

        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let mut positive = true;
            for i in 0..k {
                trial[i] = alpha[i] - t * delta[i];
                positive &= trial[i] > 0.0 && trial[i].is_finite();
            }
            if positive {
                let trial_value = dirichlet_mle_objective(&trial, suff_stats, num_docs);
                let trial_grad = dirichlet_mle_gradient(&trial, suff_stats, num_docs);
                let trial_norm = trial_grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
                // near the optimum the objective is flat to rounding, so a
                // smaller gradient also counts as progress
                if trial_value.is_finite() && (trial_value >= value || trial_norm < grad_norm) {
                    alpha.copy_from_slice(&trial);
                    value = trial_value;
                    grad = trial_grad;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }

    let grad_norm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    if grad_norm <= tol {
        Ok(alpha)
    } else {
        Err(Error::NewtonDiverged {
            iterations: max_iters,
            grad_norm,
        })
    }
}
