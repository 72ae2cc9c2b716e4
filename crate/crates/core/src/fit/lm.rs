//! Levenberg–Marquardt iteration with Marquardt diagonal scaling.
//!
//! Damping is multiplied by 10 after a rejected step and divided by 10
//! after an accepted one. A step is accepted only if it strictly lowers the
//! objective, so the accepted objective sequence is monotone.

use alloc::vec::Vec;

use crate::linalg::SquareMatrix;

/// A residual vector `r(p)` and its Jacobian `∂r/∂p`.
pub trait LeastSquares {
    fn n_params(&self) -> usize;
    fn n_residuals(&self) -> usize;
    /// Fill `out` with residuals. Returns `false` when `p` is outside the
    /// domain where the residuals are defined.
    fn residuals(&self, p: &[f64], out: &mut [f64]) -> bool;
    /// Fill the row-major `n_residuals × n_params` Jacobian.
    fn jacobian(&self, p: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmSettings {
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the objective by less than this
    /// fraction.
    pub tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        LmSettings {
            max_iterations: 500,
            tolerance: 1e-9,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Relative objective decrease of the last iteration (0 when no step
    /// could be accepted).
    pub last_relative_decrease: f64,
    /// Objective after the start and after every accepted step.
    pub trace: Vec<f64>,
}

const MAX_DAMPING: f64 = 1e16;

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimise `Σ rᵢ(p)²` starting from `start`.
pub fn minimize<P: LeastSquares>(problem: &P, start: &[f64], settings: &LmSettings) -> LmOutcome {
    let n = problem.n_params();
    let m = problem.n_residuals();
    let mut p = start.to_vec();
    let mut r = alloc::vec![0.0; m];
    let mut trial_r = alloc::vec![0.0; m];
    let mut jac = alloc::vec![0.0; m * n];

    if !problem.residuals(&p, &mut r) {
        return LmOutcome {
            params: p,
            objective: f64::INFINITY,
            iterations: 0,
            converged: false,
            last_relative_decrease: 0.0,
            trace: alloc::vec![f64::INFINITY],
        };
    }
    let mut objective = sum_sq(&r);
    let mut trace = alloc::vec![objective];
    let mut damping = settings.initial_damping;
    let mut converged = false;
    let mut last_rel = f64::INFINITY;
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        iterations += 1;
        if objective == 0.0 {
            converged = true;
            last_rel = 0.0;
            break;
        }
        problem.jacobian(&p, &mut jac);
        let (normal, gradient) = normal_equations(&jac, &r, m, n);

        let mut accepted = false;
        while damping <= MAX_DAMPING {
            let mut a = normal.clone();
            for j in 0..n {
                let d = normal.get(j, j);
                a.add(j, j, damping * if d > 0.0 { d } else { 1e-12 });
            }
            if a.cholesky().is_none() {
                damping *= 10.0;
                continue;
            }
            let neg_g: Vec<f64> = gradient.iter().map(|g| -g).collect();
            let step = a.cholesky_solve(&neg_g);
            let trial: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + b).collect();
            if trial.iter().all(|v| v.is_finite()) && problem.residuals(&trial, &mut trial_r) {
                let trial_obj = sum_sq(&trial_r);
                if trial_obj < objective {
                    last_rel = (objective - trial_obj) / objective;
                    p = trial;
                    core::mem::swap(&mut r, &mut trial_r);
                    objective = trial_obj;
                    trace.push(objective);
                    damping = (damping / 10.0).max(1e-15);
                    accepted = true;
                    break;
                }
            }
            damping *= 10.0;
        }
        if !accepted {
            // no descent direction left at any damping: a stationary point
            last_rel = 0.0;
            converged = true;
            break;
        }
        if last_rel < settings.tolerance {
            converged = true;
            break;
        }
    }

    LmOutcome {
        params: p,
        objective,
        iterations,
        converged,
        last_relative_decrease: last_rel,
        trace,
    }
}

fn normal_equations(jac: &[f64], r: &[f64], m: usize, n: usize) -> (SquareMatrix, Vec<f64>) {
    let mut a = SquareMatrix::zeros(n);
    let mut g = alloc::vec![0.0; n];
    for row in 0..m {
        let jr = &jac[row * n..(row + 1) * n];
        for i in 0..n {
            if jr[i] == 0.0 {
                continue;
            }
            g[i] += jr[i] * r[row];
            for j in 0..=i {
                a.add(i, j, jr[i] * jr[j]);
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            a.set(j, i, a.get(i, j));
        }
    }
    (a, g)
}

/// Smallest Cholesky pivot ratio of `JᵀJ` rescaled to unit diagonal, a
/// cheap collinearity measure. `0.0` means some parameter has no effect
/// or the design is singular.
pub fn conditioning<P: LeastSquares>(problem: &P, p: &[f64]) -> f64 {
    let n = problem.n_params();
    let m = problem.n_residuals();
    let mut jac = alloc::vec![0.0; m * n];
    problem.jacobian(p, &mut jac);
    let r = alloc::vec![0.0; m];
    let (a, _) = normal_equations(&jac, &r, m, n);
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    if diag.iter().any(|d| !(*d > 0.0)) {
        return 0.0;
    }
    let mut c = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            c.set(i, j, a.get(i, j) / libm::sqrt(diag[i] * diag[j]));
        }
    }
    c.cholesky().unwrap_or(0.0)
}
