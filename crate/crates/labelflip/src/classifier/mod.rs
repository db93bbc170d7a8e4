//! Binary classifier zoo used for surrogate and victim models.
//!
//! Four self-contained families — regularized logistic regression, linear
//! SVM, Gaussian naive Bayes, and k-nearest neighbors — plus a boosted-tree
//! kind that delegates to [`crate::gbdt`]. Every fitted model exposes the
//! same surface: hard predictions, a real-valued decision score, and a
//! per-instance loss.
//!
//! Prediction is always `sign(decision score)` with the zero-score tie
//! broken to `+1`.

mod knn;
mod linear;
mod naive_bayes;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gbdt::{self, GbdtModel, GbdtParams};

pub use knn::KnnModel;
pub use linear::{objective_gradient, objective_value, FitTrace, LinearKind, LinearModel};
pub use naive_bayes::NbModel;

/// Numerically stable `log(1 + exp(z))`.
pub(crate) fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Numerically stable standard sigmoid.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Hyperparameter bundle selecting one classifier family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClassifierSpec {
    /// Primal L2-regularized logistic regression; `gamma` weights the loss
    /// sum against the `||w||^2 / 2` penalty.
    LogisticRegression {
        gamma: f64,
        max_iterations: usize,
        tolerance: f64,
    },
    /// Primal L2-regularized hinge-loss classifier.
    LinearSvm {
        gamma: f64,
        max_iterations: usize,
        tolerance: f64,
    },
    GaussianNb,
    Knn {
        k_neighbors: usize,
    },
    Gbdt(GbdtParams),
}

impl ClassifierSpec {
    pub fn logistic_regression() -> Self {
        ClassifierSpec::LogisticRegression {
            gamma: 1.0,
            max_iterations: 500,
            tolerance: 1e-6,
        }
    }

    pub fn linear_svm() -> Self {
        ClassifierSpec::LinearSvm {
            gamma: 1.0,
            max_iterations: 500,
            tolerance: 1e-6,
        }
    }

    pub fn gaussian_nb() -> Self {
        ClassifierSpec::GaussianNb
    }

    pub fn knn() -> Self {
        ClassifierSpec::Knn { k_neighbors: 5 }
    }

    pub fn gbdt() -> Self {
        ClassifierSpec::Gbdt(GbdtParams::default())
    }

    /// Stable lowercase identifier, used in reports and seed derivation.
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::LogisticRegression { .. } => "logistic_regression",
            ClassifierSpec::LinearSvm { .. } => "linear_svm",
            ClassifierSpec::GaussianNb => "gaussian_nb",
            ClassifierSpec::Knn { .. } => "knn",
            ClassifierSpec::Gbdt(_) => "gbdt",
        }
    }

    /// Fits this classifier on `data`. LR/SVM/NB/k-NN require both classes
    /// to be present; the boosted-tree kind accepts single-class data.
    pub fn fit(&self, data: &Dataset, seed: u64) -> Result<TrainedModel> {
        match self {
            ClassifierSpec::LogisticRegression {
                gamma,
                max_iterations,
                tolerance,
            } => {
                require_two_classes(data)?;
                let (model, _) = linear::fit_linear(
                    LinearKind::Logistic,
                    data,
                    *gamma,
                    *max_iterations,
                    *tolerance,
                );
                Ok(TrainedModel::Linear(model))
            }
            ClassifierSpec::LinearSvm {
                gamma,
                max_iterations,
                tolerance,
            } => {
                require_two_classes(data)?;
                let (model, _) = linear::fit_linear(
                    LinearKind::Hinge,
                    data,
                    *gamma,
                    *max_iterations,
                    *tolerance,
                );
                Ok(TrainedModel::Linear(model))
            }
            ClassifierSpec::GaussianNb => {
                require_two_classes(data)?;
                Ok(TrainedModel::GaussianNb(naive_bayes::fit_nb(data)))
            }
            ClassifierSpec::Knn { k_neighbors } => {
                require_two_classes(data)?;
                if *k_neighbors == 0 {
                    return Err(Error::InvalidParameter(
                        "k_neighbors must be positive".to_string(),
                    ));
                }
                Ok(TrainedModel::Knn(KnnModel::fit(data, *k_neighbors)))
            }
            ClassifierSpec::Gbdt(params) => {
                let (model, _) = gbdt::train_gbdt(data, params, seed)?;
                Ok(TrainedModel::Gbdt(model))
            }
        }
    }
}

fn require_two_classes(data: &Dataset) -> Result<()> {
    let (pos, neg) = data.class_counts();
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClassTraining);
    }
    Ok(())
}

/// A fitted classifier. Immutable; scoring methods are pure.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Linear(LinearModel),
    GaussianNb(NbModel),
    Knn(KnnModel),
    Gbdt(GbdtModel),
}

impl TrainedModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TrainedModel::Linear(m) => match m.kind {
                LinearKind::Logistic => "logistic_regression",
                LinearKind::Hinge => "linear_svm",
            },
            TrainedModel::GaussianNb(_) => "gaussian_nb",
            TrainedModel::Knn(_) => "knn",
            TrainedModel::Gbdt(_) => "gbdt",
        }
    }

    fn dim(&self) -> usize {
        match self {
            TrainedModel::Linear(m) => m.weights.len(),
            TrainedModel::GaussianNb(m) => m.dim(),
            TrainedModel::Knn(m) => m.dim(),
            TrainedModel::Gbdt(m) => m.dim(),
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }

    fn score_row(&self, row: ArrayView1<'_, f64>) -> f64 {
        match self {
            TrainedModel::Linear(m) => m.weights.dot(&row) + m.intercept,
            TrainedModel::GaussianNb(m) => m.log_posterior_odds(row),
            TrainedModel::Knn(m) => m.neighbor_score(row),
            TrainedModel::Gbdt(m) => m.predict_raw_row(row),
        }
    }

    /// Real-valued decision score per row: `w^T x + b` for linear kinds,
    /// log posterior odds for naive Bayes, `(fraction of +1 neighbors - 0.5)
    /// * 2` for k-NN, and the raw ensemble score for boosted trees.
    pub fn decision_function(&self, features: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        self.check_dim(features.ncols())?;
        Ok(features
            .rows()
            .into_iter()
            .map(|row| self.score_row(row))
            .collect())
    }

    /// Hard `{-1, +1}` predictions: the sign of the decision score, with a
    /// zero score mapped to `+1`.
    pub fn predict(&self, features: ArrayView2<'_, f64>) -> Result<Vec<i8>> {
        Ok(self
            .decision_function(features)?
            .into_iter()
            .map(|score| if score >= 0.0 { 1 } else { -1 })
            .collect())
    }

    /// Loss of a single (row, label) pair: logistic loss for LR, hinge loss
    /// for the SVM, and logistic loss applied to the decision score for the
    /// remaining kinds (which have no native margin loss).
    pub fn instance_loss(&self, row: ArrayView1<'_, f64>, label: i8) -> f64 {
        let score = self.score_row(row);
        let margin = f64::from(label) * score;
        match self {
            TrainedModel::Linear(m) if m.kind == LinearKind::Hinge => (1.0 - margin).max(0.0),
            _ => log1p_exp(-margin),
        }
    }

    /// Per-instance losses over a whole dataset, in row order.
    pub fn per_instance_loss(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_dim(data.dim())?;
        Ok(data
            .labels()
            .iter()
            .enumerate()
            .map(|(i, &y)| self.instance_loss(data.row(i), y))
            .collect())
    }

    /// Mean per-instance loss; the validation signal attacks maximize.
    pub fn mean_loss(&self, data: &Dataset) -> Result<f64> {
        if data.n() == 0 {
            return Err(Error::EmptyDataset);
        }
        let losses = self.per_instance_loss(data)?;
        Ok(losses.iter().sum::<f64>() / losses.len() as f64)
    }

    /// Fraction of rows whose prediction disagrees with the stored label.
    pub fn error_rate(&self, data: &Dataset) -> Result<f64> {
        if data.n() == 0 {
            return Err(Error::EmptyDataset);
        }
        let predictions = self.predict(data.features())?;
        let wrong = predictions
            .iter()
            .zip(data.labels())
            .filter(|(p, y)| p != y)
            .count();
        Ok(wrong as f64 / data.n() as f64)
    }

    /// Diagnostic JSON dump for linear kinds: `{kind, weights, intercept,
    /// hyperparameters}`. Not a stability contract.
    pub fn dump_json(&self) -> Option<serde_json::Value> {
        match self {
            TrainedModel::Linear(m) => Some(serde_json::json!({
                "kind": self.kind_name(),
                "weights": m.weights.to_vec(),
                "intercept": m.intercept,
                "hyperparameters": { "gamma": m.gamma },
            })),
            _ => None,
        }
    }
}
