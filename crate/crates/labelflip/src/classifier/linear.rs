//! Primal batch (sub)gradient descent for the two linear kinds.
//!
//! Minimizes `gamma * sum_i V(y_i, w^T x_i + b) + ||w||^2 / 2` with
//! backtracking line search. `V` is the logistic loss for logistic
//! regression and the hinge loss for the linear SVM. Accepted steps always
//! decrease the objective, so the objective trace is monotone by
//! construction.

use ndarray::Array1;

use super::{log1p_exp, sigmoid};
use crate::dataset::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearKind {
    Logistic,
    Hinge,
}

#[derive(Debug, Clone)]
pub struct LinearModel {
    pub kind: LinearKind,
    pub weights: Array1<f64>,
    pub intercept: f64,
    pub gamma: f64,
    /// False when the gradient-norm tolerance was not reached within the
    /// iteration budget. The model is still usable.
    pub converged: bool,
    pub iterations: usize,
}

/// Objective values of the accepted iterates, starting at the zero model.
#[derive(Debug, Clone, Default)]
pub struct FitTrace {
    pub objective: Vec<f64>,
}

fn margin_loss(kind: LinearKind, margin: f64) -> f64 {
    match kind {
        LinearKind::Logistic => log1p_exp(-margin),
        LinearKind::Hinge => (1.0 - margin).max(0.0),
    }
}

/// d loss / d score at the given margin, times the label.
fn margin_residual(kind: LinearKind, label: f64, margin: f64) -> f64 {
    match kind {
        LinearKind::Logistic => -label * sigmoid(-margin),
        LinearKind::Hinge => {
            if 1.0 - margin > 0.0 {
                -label
            } else {
                0.0
            }
        }
    }
}

/// Objective value `gamma * sum_i V(y_i, f(x_i)) + ||w||^2 / 2` at an
/// arbitrary parameter point. Exposed for gradient diagnostics.
pub fn objective_value(
    kind: LinearKind,
    data: &Dataset,
    gamma: f64,
    weights: &Array1<f64>,
    intercept: f64,
) -> f64 {
    let mut loss = 0.0;
    for (i, &y) in data.labels().iter().enumerate() {
        let score = weights.dot(&data.row(i)) + intercept;
        loss += margin_loss(kind, f64::from(y) * score);
    }
    gamma * loss + 0.5 * weights.dot(weights)
}

/// Analytic (sub)gradient of [`objective_value`] with respect to
/// `(weights, intercept)`.
pub fn objective_gradient(
    kind: LinearKind,
    data: &Dataset,
    gamma: f64,
    weights: &Array1<f64>,
    intercept: f64,
) -> (Array1<f64>, f64) {
    let mut grad_w = weights.clone();
    let mut grad_b = 0.0;
    for (i, &y) in data.labels().iter().enumerate() {
        let row = data.row(i);
        let score = weights.dot(&row) + intercept;
        let label = f64::from(y);
        let residual = gamma * margin_residual(kind, label, label * score);
        if residual != 0.0 {
            grad_w.scaled_add(residual, &row);
            grad_b += residual;
        }
    }
    (grad_w, grad_b)
}

pub(crate) fn fit_linear(
    kind: LinearKind,
    data: &Dataset,
    gamma: f64,
    max_iterations: usize,
    tolerance: f64,
) -> (LinearModel, FitTrace) {
    let d = data.dim();
    let mut weights = Array1::zeros(d);
    let mut intercept = 0.0;
    let mut objective = objective_value(kind, data, gamma, &weights, intercept);
    let mut trace = FitTrace {
        objective: vec![objective],
    };
    let mut converged = false;
    let mut iterations = 0;
    let mut step: f64 = 1.0;

    for _ in 0..max_iterations {
        let (grad_w, grad_b) = objective_gradient(kind, data, gamma, &weights, intercept);
        let grad_sq = grad_w.dot(&grad_w) + grad_b * grad_b;
        if grad_sq.sqrt() <= tolerance {
            converged = true;
            break;
        }

        // Backtracking line search (Armijo), warm-started from twice the
        // previously accepted step.
        step = (2.0 * step).min(1.0);
        let mut accepted = false;
        while step >= 1e-15 {
            let trial_w = &weights - &(step * &grad_w);
            let trial_b = intercept - step * grad_b;
            let trial_obj = objective_value(kind, data, gamma, &trial_w, trial_b);
            if trial_obj <= objective - 1e-4 * step * grad_sq {
                weights = trial_w;
                intercept = trial_b;
                objective = trial_obj;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No descent step exists at representable step sizes; for the
            // hinge this is a kink, for the logistic we are at numerical
            // stationarity.
            break;
        }
        iterations += 1;
        trace.objective.push(objective);
    }

    (
        LinearModel {
            kind,
            weights,
            intercept,
            gamma,
            converged,
            iterations,
        },
        trace,
    )
}
