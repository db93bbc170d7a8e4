//! Gaussian naive Bayes with per-class feature moments.

use ndarray::{Array1, ArrayView1};

use crate::dataset::Dataset;

#[derive(Debug, Clone)]
pub struct NbModel {
    log_prior_pos: f64,
    log_prior_neg: f64,
    mean_pos: Array1<f64>,
    mean_neg: Array1<f64>,
    var_pos: Array1<f64>,
    var_neg: Array1<f64>,
}

impl NbModel {
    pub fn dim(&self) -> usize {
        self.mean_pos.len()
    }

    /// `log p(+1 | x) - log p(-1 | x)` up to the shared evidence term.
    pub fn log_posterior_odds(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut odds = self.log_prior_pos - self.log_prior_neg;
        for j in 0..row.len() {
            odds += log_gaussian(row[j], self.mean_pos[j], self.var_pos[j])
                - log_gaussian(row[j], self.mean_neg[j], self.var_neg[j]);
        }
        odds
    }
}

fn log_gaussian(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (std::f64::consts::TAU * var).ln() - (x - mean) * (x - mean) / (2.0 * var)
}

/// Fits per-class means and population variances, with every variance
/// smoothed by `1e-9 * max_j Var[x_j]` (computed over the whole training
/// set) so constant features never produce singular Gaussians.
pub(crate) fn fit_nb(data: &Dataset) -> NbModel {
    let d = data.dim();
    let n = data.n();

    let mut count_pos = 0usize;
    let mut mean_pos = Array1::zeros(d);
    let mut mean_neg = Array1::zeros(d);
    for (i, &y) in data.labels().iter().enumerate() {
        if y == 1 {
            count_pos += 1;
            mean_pos += &data.row(i);
        } else {
            mean_neg += &data.row(i);
        }
    }
    let count_neg = n - count_pos;
    mean_pos /= count_pos as f64;
    mean_neg /= count_neg as f64;

    let mut var_pos = Array1::zeros(d);
    let mut var_neg = Array1::zeros(d);
    for (i, &y) in data.labels().iter().enumerate() {
        let row = data.row(i);
        for j in 0..d {
            if y == 1 {
                let delta = row[j] - mean_pos[j];
                var_pos[j] += delta * delta;
            } else {
                let delta = row[j] - mean_neg[j];
                var_neg[j] += delta * delta;
            }
        }
    }
    var_pos /= count_pos as f64;
    var_neg /= count_neg as f64;

    let mut max_var: f64 = 0.0;
    let features = data.features();
    for j in 0..d {
        let column = features.column(j);
        let mean = column.sum() / n as f64;
        let var = column.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        max_var = max_var.max(var);
    }
    // All-constant features leave nothing to smooth with; fall back to an
    // absolute epsilon.
    let smoothing = if max_var > 0.0 { 1e-9 * max_var } else { 1e-9 };
    var_pos += smoothing;
    var_neg += smoothing;

    NbModel {
        log_prior_pos: (count_pos as f64 / n as f64).ln(),
        log_prior_neg: (count_neg as f64 / n as f64).ln(),
        mean_pos,
        mean_neg,
        var_pos,
        var_neg,
    }
}
