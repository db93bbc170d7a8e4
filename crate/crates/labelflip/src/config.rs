//! Experiment configuration: one JSON document drives every CLI command.
//!
//! Every field has a default, so `{}` is a valid config (synthetic linear
//! data, logistic-regression self-attack). Each run writes the fully
//! resolved config back out as `manifest.json`; feeding that manifest back
//! through `--config` reproduces all outputs byte-for-byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::{CostScheme, Strategy};
use crate::classifier::ClassifierSpec;
use crate::dataset::{self, Dataset, TrainTestSplit};
use crate::error::{Error, Result};
use crate::evaluation::AttackParams;
use crate::gbdt::GbdtParams;
use crate::seed::derive;

/// Where the data comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        label_column: String,
        positive_value: String,
    },
    SyntheticLinear {
        n: usize,
        noise: f64,
    },
    SyntheticCircular {
        n: usize,
        noise: f64,
    },
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::SyntheticLinear {
            n: 1000,
            noise: 0.9,
        }
    }
}

impl DatasetSource {
    /// Short name used in reports and output files.
    pub fn name(&self) -> String {
        match self {
            DatasetSource::Csv { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".to_string()),
            DatasetSource::SyntheticLinear { .. } => "linear".to_string(),
            DatasetSource::SyntheticCircular { .. } => "circular".to_string(),
        }
    }

    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match self {
            DatasetSource::Csv {
                path,
                label_column,
                positive_value,
            } => dataset::load_csv(path, label_column, positive_value),
            DatasetSource::SyntheticLinear { n, noise } => {
                dataset::generate_linear(*n, *noise, seed)
            }
            DatasetSource::SyntheticCircular { n, noise } => {
                dataset::generate_circular(*n, *noise, seed)
            }
        }
    }
}

/// Classifier hyperparameters applied when materializing spec names.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    /// Loss weight of the regularized linear objective.
    pub gamma: f64,
    pub k_neighbors: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub gbdt: GbdtParams,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            k_neighbors: 5,
            max_iterations: 500,
            tolerance: 1e-6,
            gbdt: GbdtParams::default(),
        }
    }
}

impl ClassifierConfig {
    pub fn spec(&self, name: &str) -> Result<ClassifierSpec> {
        match name {
            "logistic_regression" => Ok(ClassifierSpec::LogisticRegression {
                gamma: self.gamma,
                max_iterations: self.max_iterations,
                tolerance: self.tolerance,
            }),
            "linear_svm" => Ok(ClassifierSpec::LinearSvm {
                gamma: self.gamma,
                max_iterations: self.max_iterations,
                tolerance: self.tolerance,
            }),
            "gaussian_nb" => Ok(ClassifierSpec::GaussianNb),
            "knn" => Ok(ClassifierSpec::Knn {
                k_neighbors: self.k_neighbors,
            }),
            "gbdt" => Ok(ClassifierSpec::Gbdt(self.gbdt.clone())),
            other => Err(Error::InvalidConfig(format!(
                "unknown classifier `{other}`; expected one of logistic_regression, linear_svm, gaussian_nb, knn, gbdt"
            ))),
        }
    }
}

fn default_train_fraction() -> f64 {
    0.7
}
fn default_true() -> bool {
    true
}
fn default_surrogates() -> Vec<String> {
    vec!["logistic_regression".to_string()]
}
fn default_victims() -> Vec<String> {
    vec!["logistic_regression".to_string()]
}
fn default_strategies() -> Vec<String> {
    vec!["ogds".to_string()]
}
fn default_budgets() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.3]
}
fn default_a() -> f64 {
    0.01
}
fn default_b() -> f64 {
    0.49
}
fn default_t_max() -> usize {
    20
}
fn default_seed() -> u64 {
    42
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// The one configuration document. Serialized back out (with every default
/// materialized) as the run manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Subcommand that produced a manifest; informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default)]
    pub dataset: DatasetSource,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_true")]
    pub stratified: bool,
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default = "default_surrogates")]
    pub surrogates: Vec<String>,
    #[serde(default = "default_victims")]
    pub victims: Vec<String>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<String>,
    /// Budget fractions of the training set, ascending.
    #[serde(default = "default_budgets")]
    pub budgets: Vec<f64>,
    /// Large-gradient sampling ratio.
    #[serde(default = "default_a")]
    pub a: f64,
    /// Small-gradient sampling ratio.
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "default_t_max")]
    pub t_max: usize,
    #[serde(default)]
    pub cost: CostScheme,
    /// Master seed; every randomized step derives from it.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub classifier: ClassifierConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config resolves via defaults")
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::DatasetFile {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    /// Validates field ranges and clamps `a + b` to the recommended 0.7
    /// ceiling (warning to stderr when the clamp bites).
    pub fn validate(&mut self) -> Result<()> {
        if self.train_fraction.is_nan() || self.train_fraction <= 0.0 || self.train_fraction >= 1.0
        {
            return Err(Error::InvalidConfig(format!(
                "train_fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        if self.budgets.is_empty() {
            return Err(Error::InvalidConfig("budgets must be non-empty".into()));
        }
        for pair in self.budgets.windows(2) {
            if pair[1] < pair[0] {
                return Err(Error::InvalidConfig(
                    "budgets must be sorted ascending".into(),
                ));
            }
        }
        if self.budgets.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(Error::InvalidConfig(
                "budgets must be fractions in [0, 1]".into(),
            ));
        }
        if self.a.is_nan()
            || self.a < 0.0
            || self.b.is_nan()
            || self.b < 0.0
            || self.a + self.b > 1.0
        {
            return Err(Error::InvalidConfig(format!(
                "sampling ratios must satisfy 0 <= a, 0 <= b, a + b <= 1; got a={}, b={}",
                self.a, self.b
            )));
        }
        if self.a + self.b > 0.7 {
            let clamped_b = (0.7 - self.a).max(0.0);
            let clamped_a = self.a.min(0.7);
            eprintln!(
                "warning: a + b = {} exceeds the recommended 0.7 ceiling; clamping to a={clamped_a}, b={clamped_b}",
                self.a + self.b
            );
            self.a = clamped_a;
            self.b = clamped_b;
        }
        if self.t_max == 0 {
            return Err(Error::InvalidConfig("t_max must be positive".into()));
        }
        if self.surrogates.is_empty() || self.victims.is_empty() || self.strategies.is_empty() {
            return Err(Error::InvalidConfig(
                "surrogates, victims and strategies must be non-empty".into(),
            ));
        }
        for name in self.surrogates.iter().chain(self.victims.iter()) {
            self.classifier.spec(name)?;
        }
        for name in &self.strategies {
            Strategy::parse(name)?;
        }
        if let CostScheme::Varied { large, small } = &self.cost {
            if !(large.is_finite() && *large > 0.0 && small.is_finite() && *small > 0.0) {
                return Err(Error::InvalidConfig(
                    "varied cost values must be positive".into(),
                ));
            }
        }
        if let DatasetSource::Csv { path, .. } = &self.dataset {
            if !path.exists() {
                return Err(Error::DatasetFile {
                    path: path.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                });
            }
        }
        Ok(())
    }

    pub fn surrogate_specs(&self) -> Result<Vec<ClassifierSpec>> {
        self.surrogates
            .iter()
            .map(|n| self.classifier.spec(n))
            .collect()
    }

    pub fn victim_specs(&self) -> Result<Vec<ClassifierSpec>> {
        self.victims
            .iter()
            .map(|n| self.classifier.spec(n))
            .collect()
    }

    pub fn strategy_list(&self) -> Result<Vec<Strategy>> {
        self.strategies.iter().map(|n| Strategy::parse(n)).collect()
    }

    /// Loads, splits and (optionally) standardizes the dataset.
    pub fn prepare_split(&self) -> Result<TrainTestSplit> {
        let data = self.dataset.load(derive(self.seed, &["dataset"]))?;
        let split = dataset::split(
            &data,
            self.train_fraction,
            derive(self.seed, &["split"]),
            self.stratified,
        )?;
        Ok(if self.standardize {
            dataset::standardize(&split)
        } else {
            split
        })
    }

    pub fn attack_params(&self) -> AttackParams {
        AttackParams {
            a: self.a,
            b: self.b,
            t_max: self.t_max,
            cost_scheme: self.cost.clone(),
            master_seed: self.seed,
            gbdt: self.classifier.gbdt.clone(),
        }
    }

    /// Manifest text: the fully resolved config, pretty-printed.
    pub fn manifest_json(&self, command: &str) -> String {
        let mut manifest = self.clone();
        manifest.command = Some(command.to_string());
        let mut text =
            serde_json::to_string_pretty(&manifest).expect("config serializes infallibly");
        text.push('\n');
        text
    }
}
