//! Levenberg–Marquardt with a finite-difference Jacobian.
//!
//! Only steps that strictly lower the cost are accepted, so the returned cost
//! never exceeds the cost at the starting point.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::solve_dense;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative cost decrease below which the run is considered converged.
    pub cost_tol: f64,
    /// Step-norm tolerance (relative to parameter norm).
    pub step_tol: f64,
    /// Forward-difference step, relative to `max(|p|, 1)`.
    pub fd_step: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 100, cost_tol: 1e-12, step_tol: 1e-12, fd_step: 1e-6, initial_damping: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub params: Vec<f64>,
    /// Half sum of squared residuals at `params`.
    pub cost: f64,
    pub initial_cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn half_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// Minimizes `½‖r(p)‖²`. `residuals(p, out)` must fill `out` (cleared by the
/// caller) with a fixed number of residuals; non-finite residuals mark a
/// parameter vector as infeasible.
pub fn levenberg_marquardt<F>(mut residuals: F, p0: &[f64], opts: &LmOptions) -> LmReport
where
    F: FnMut(&[f64], &mut Vec<f64>),
{
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut r = Vec::new();
    residuals(&p, &mut r);
    let m = r.len();
    let mut cost = half_sq(&r);
    let initial_cost = cost;
    if !cost.is_finite() || n == 0 || m == 0 {
        return LmReport { params: p, cost, initial_cost, iterations: 0, converged: n == 0 };
    }

    let mut lambda = opts.initial_damping;
    let mut jac = vec![0.0; m * n];
    let mut r_probe = Vec::with_capacity(m);
    let mut converged = false;
    let mut iterations = 0;

    'outer: for it in 0..opts.max_iterations {
        iterations = it + 1;
        for j in 0..n {
            let h = opts.fd_step * p[j].abs().max(1.0);
            let saved = p[j];
            p[j] = saved + h;
            r_probe.clear();
            residuals(&p, &mut r_probe);
            p[j] = saved;
            for i in 0..m {
                jac[i * n + j] = (r_probe[i] - r[i]) / h;
            }
        }
        let mut jtj = vec![0.0; n * n];
        let mut jtr = vec![0.0; n];
        for i in 0..m {
            let row = &jac[i * n..(i + 1) * n];
            for a in 0..n {
                jtr[a] += row[a] * r[i];
                for b in a..n {
                    jtj[a * n + b] += row[a] * row[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                jtj[a * n + b] = jtj[b * n + a];
            }
        }
        if jtr.iter().all(|g| g.abs() < 1e-300) {
            converged = true;
            break;
        }

        loop {
            let mut lhs = jtj.clone();
            for a in 0..n {
                let d = jtj[a * n + a];
                lhs[a * n + a] = d + lambda * d.max(1e-12);
            }
            let mut rhs: Vec<f64> = jtr.iter().map(|g| -g).collect();
            let step = match solve_dense(&mut lhs, &mut rhs, n) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        break 'outer;
                    }
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + b).collect();
            r_probe.clear();
            residuals(&trial, &mut r_probe);
            let trial_cost = half_sq(&r_probe);
            if trial_cost.is_finite() && trial_cost < cost {
                let decrease = (cost - trial_cost) / cost.max(1e-300);
                let step_norm = libm::sqrt(step.iter().map(|s| s * s).sum::<f64>());
                let p_norm = libm::sqrt(p.iter().map(|s| s * s).sum::<f64>());
                p = trial;
                core::mem::swap(&mut r, &mut r_probe);
                cost = trial_cost;
                lambda = (lambda * 0.3).max(1e-12);
                if decrease < opts.cost_tol || step_norm < opts.step_tol * (p_norm + opts.step_tol) {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // no descent direction left at this resolution
                converged = true;
                break 'outer;
            }
        }
        if cost == 0.0 {
            converged = true;
            break;
        }
    }

    LmReport { params: p, cost, initial_cost, iterations, converged }
}
