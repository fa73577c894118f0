//! Binary logistic regression with an L2 penalty, fitted by L-BFGS with
//! Armijo backtracking.
//!
//! The objective is the mean logistic loss plus `‖w‖² / (2·C·n)`; the bias
//! is not penalized. Larger `C` means weaker regularization.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

use super::{validate_predict_input, validate_training_input};

const LBFGS_MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegressionConfig {
    /// Inverse regularization strength, must be positive.
    pub c: f64,
    /// Convergence threshold on the gradient's Euclidean norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticRegressionConfig {
    fn default() -> Self {
        LogisticRegressionConfig { c: 1.0, tol: 1e-5, max_iter: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub c: f64,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub n_iters: usize,
    /// Objective value before optimization and after each accepted step.
    pub objective_trace: Vec<f64>,
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

fn log1p_exp_neg(t: f64) -> f64 {
    (-t).max(0.0) + (-t.abs()).exp().ln_1p()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

struct Problem<'a> {
    x: &'a FeatureMatrix,
    y: &'a [u8],
    c: f64,
}

impl Problem<'_> {
    fn n(&self) -> f64 {
        self.y.len() as f64
    }

    fn scores(&self, theta: &[f64]) -> Vec<f64> {
        let v = self.x.n_cols();
        (0..self.x.n_rows())
            .map(|i| {
                let mut s = theta[v];
                for &(j, count) in self.x.row(i) {
                    s += theta[j as usize] * count as f64;
                }
                s
            })
            .collect()
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        let v = self.x.n_cols();
        let n = self.n();
        let loss: f64 = self
            .scores(theta)
            .iter()
            .zip(self.y)
            .map(|(&s, &y)| log1p_exp_neg(if y == 1 { s } else { -s }))
            .sum();
        let penalty = dot(&theta[..v], &theta[..v]) / (2.0 * self.c * n);
        loss / n + penalty
    }

    fn objective_and_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let v = self.x.n_cols();
        let n = self.n();
        let scores = self.scores(theta);
        let mut grad = vec![0.0; v + 1];
        let mut loss = 0.0;
        for (i, (&s, &y)) in scores.iter().zip(self.y).enumerate() {
            loss += log1p_exp_neg(if y == 1 { s } else { -s });
            let residual = sigmoid(s) - y as f64;
            for &(j, count) in self.x.row(i) {
                grad[j as usize] += residual * count as f64;
            }
            grad[v] += residual;
        }
        for g in grad.iter_mut() {
            *g /= n;
        }
        for j in 0..v {
            grad[j] += theta[j] / (self.c * n);
        }
        let penalty = dot(&theta[..v], &theta[..v]) / (2.0 * self.c * n);
        (loss / n + penalty, grad)
    }
}

/// Value of the regularized mean log-loss the solver minimizes, at `theta`
/// laid out as the weight vector followed by the bias.
///
/// Panics if `theta` does not hold `x.n_cols() + 1` entries or if `y` and
/// `x` disagree on the row count.
pub fn objective_value(x: &FeatureMatrix, y: &[u8], c: f64, theta: &[f64]) -> f64 {
    assert_eq!(theta.len(), x.n_cols() + 1, "theta must be weights plus bias");
    assert_eq!(y.len(), x.n_rows(), "one label per row");
    Problem { x, y, c }.objective(theta)
}

/// Analytic gradient of [`objective_value`] at `theta`, in the same layout.
pub fn objective_gradient(x: &FeatureMatrix, y: &[u8], c: f64, theta: &[f64]) -> Vec<f64> {
    assert_eq!(theta.len(), x.n_cols() + 1, "theta must be weights plus bias");
    assert_eq!(y.len(), x.n_rows(), "one label per row");
    Problem { x, y, c }.objective_and_grad(theta).1
}

type Correction = (Vec<f64>, Vec<f64>, f64);

fn lbfgs_direction(history: &VecDeque<Correction>, grad: &[f64]) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, yv, rho) in history.iter().rev() {
        let alpha = rho * dot(s, &q);
        alphas.push(alpha);
        for (qi, yi) in q.iter_mut().zip(yv) {
            *qi -= alpha * yi;
        }
    }
    let gamma = history
        .back()
        .map(|(s, yv, _)| dot(s, yv) / dot(yv, yv))
        .unwrap_or(1.0);
    for qi in q.iter_mut() {
        *qi *= gamma;
    }
    for ((s, yv, rho), &alpha) in history.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(yv, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

impl LogisticRegression {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    pub fn fit(x: &FeatureMatrix, y: &[u8], config: LogisticRegressionConfig) -> Result<Self> {
        validate_training_input(x, y)?;
        if !(config.c > 0.0) {
            return Err(Error::Config(format!("C must be positive, got {}", config.c)));
        }
        if !(config.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", config.tol)));
        }
        if config.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        let problem = Problem { x, y, c: config.c };
        let v = x.n_cols();
        let mut theta = vec![0.0; v + 1];
        let (mut objective, mut grad) = problem.objective_and_grad(&theta);
        let mut trace = vec![objective];
        let mut history: VecDeque<Correction> = VecDeque::with_capacity(LBFGS_MEMORY);
        let mut converged = l2_norm(&grad) <= config.tol;
        let mut n_iters = 0;

        while !converged && n_iters < config.max_iter {
            let mut direction = lbfgs_direction(&history, &grad);
            let mut slope = dot(&grad, &direction);
            if slope >= 0.0 {
                history.clear();
                direction = grad.iter().map(|g| -g).collect();
                slope = -dot(&grad, &grad);
            }

            let mut step = 1.0;
            let mut accepted = None;
            while step >= MIN_STEP {
                let candidate: Vec<f64> =
                    theta.iter().zip(&direction).map(|(t, d)| t + step * d).collect();
                let value = problem.objective(&candidate);
                if value <= objective + ARMIJO_C1 * step * slope {
                    accepted = Some((candidate, value));
                    break;
                }
                step *= 0.5;
            }
            let Some((new_theta, new_objective)) = accepted else {
                log::warn!("line search stalled after {n_iters} iterations; stopping early");
                break;
            };

            let (_, new_grad) = problem.objective_and_grad(&new_theta);
            let s: Vec<f64> = new_theta.iter().zip(&theta).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &yv);
            if sy > 1e-10 {
                if history.len() == LBFGS_MEMORY {
                    history.pop_front();
                }
                history.push_back((s, yv, 1.0 / sy));
            }
            theta = new_theta;
            objective = new_objective;
            grad = new_grad;
            trace.push(objective);
            n_iters += 1;
            converged = l2_norm(&grad) <= config.tol;
        }
        if !converged {
            log::warn!(
                "logistic regression did not converge in {n_iters} iterations \
                 (gradient norm {:.3e}, tol {:.1e})",
                l2_norm(&grad),
                config.tol
            );
        }

        let bias = theta[v];
        theta.truncate(v);
        Ok(LogisticRegression {
            c: config.c,
            weights: theta,
            bias,
            converged,
            n_iters,
            objective_trace: trace,
        })
    }

    /// Linear scores `w·x + b`, one per row.
    pub fn decision_scores(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        validate_predict_input(self.n_features(), x)?;
        Ok((0..x.n_rows())
            .map(|i| {
                let mut s = self.bias;
                for &(j, count) in x.row(i) {
                    s += self.weights[j as usize] * count as f64;
                }
                s
            })
            .collect())
    }

    /// Class 1 when the predicted probability exceeds one half; a score of
    /// exactly zero goes to class 0.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<u8>> {
        Ok(self.decision_scores(x)?.into_iter().map(|s| u8::from(s > 0.0)).collect())
    }
}
