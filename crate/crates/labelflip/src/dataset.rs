//! Dataset loading, synthesis, splitting, and standardization.
//!
//! Every dataset is a dense `n x d` feature matrix paired with one label per
//! row, stored as `-1` or `+1`. Construction validates the label convention
//! and feature finiteness once, so downstream code can rely on both.
//!
//! All types are immutable after construction and all randomized operations
//! are bit-reproducible given the same seed.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Binary-classification data: real-valued features plus `{-1, +1}` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<i8>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset, validating the label alphabet and feature finiteness.
    ///
    /// Class balance is deliberately not checked here: test sides and poisoned
    /// labelings may be single-class. Trainers enforce the two-class rule.
    pub fn new(
        features: Array2<f64>,
        labels: Vec<i8>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::RowLabelMismatch {
                rows: features.nrows(),
                labels: labels.len(),
            });
        }
        if labels.is_empty() {
            return Err(Error::TooFewRows { min: 1, got: 0 });
        }
        for (row, &label) in labels.iter().enumerate() {
            if label != -1 && label != 1 {
                return Err(Error::InvalidLabel { row, value: label });
            }
        }
        for ((row, column), &value) in features.indexed_iter() {
            if !value.is_finite() {
                return Err(Error::NonFiniteFeature { row, column });
            }
        }
        if let Some(names) = &feature_names {
            if names.len() != features.ncols() {
                return Err(Error::InvalidParameter(format!(
                    "{} feature names for {} columns",
                    names.len(),
                    features.ncols()
                )));
            }
        }
        Ok(Self {
            features,
            labels,
            feature_names,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn row(&self, index: usize) -> ArrayView1<'_, f64> {
        self.features.row(index)
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Number of (+1, -1) labels.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        (pos, self.labels.len() - pos)
    }

    /// Same features and names, different labels. Used to materialize
    /// poisoned labelings without touching the feature matrix.
    pub fn with_labels(&self, labels: Vec<i8>) -> Result<Self> {
        Self::new(self.features.clone(), labels, self.feature_names.clone())
    }

    fn take_rows(&self, indices: &[usize]) -> Self {
        let mut features = Array2::zeros((indices.len(), self.dim()));
        let mut labels = Vec::with_capacity(indices.len());
        for (out_row, &src_row) in indices.iter().enumerate() {
            features
                .row_mut(out_row)
                .assign(&self.features.row(src_row));
            labels.push(self.labels[src_row]);
        }
        Self {
            features,
            labels,
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Disjoint train/test partition of one source dataset.
#[derive(Debug, Clone)]
pub struct TrainTestSplit {
    pub train: Dataset,
    pub test: Dataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

/// Loads a CSV file with a header row, mapping the named label column onto
/// `{-1, +1}`: rows whose label equals `positive_value` become `+1`, the
/// other value becomes `-1`. Exactly two distinct label values must occur.
///
/// Cells are compared and parsed after trimming surrounding whitespace.
pub fn load_csv(path: &Path, label_column: &str, positive_value: &str) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::DatasetFile {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::MalformedCsv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_index = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn {
            column: label_column.to_string(),
            path: path.to_path_buf(),
            available: headers.clone(),
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_index)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    // Distinct label values in order of first appearance.
    let mut seen: Vec<String> = Vec::new();
    for (row_number, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::MalformedCsv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::MalformedCsv {
                path: path.to_path_buf(),
                message: format!(
                    "row {} has {} fields, header has {}",
                    row_number + 1,
                    record.len(),
                    headers.len()
                ),
            });
        }
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (col, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if col == label_index {
                if !seen.iter().any(|s| s == cell) {
                    seen.push(cell.to_string());
                    if seen.len() > 2 {
                        return Err(Error::LabelCardinality(seen));
                    }
                }
                raw_labels.push(cell.to_string());
            } else {
                let value: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                    row: row_number + 1,
                    column: headers[col].clone(),
                    value: cell.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(Error::NonNumericCell {
                        row: row_number + 1,
                        column: headers[col].clone(),
                        value: cell.to_string(),
                    });
                }
                row.push(value);
            }
        }
        rows.push(row);
    }

    if seen.len() != 2 {
        return Err(Error::LabelCardinality(seen));
    }
    if !seen.iter().any(|s| s == positive_value) {
        return Err(Error::PositiveValueAbsent {
            value: positive_value.to_string(),
            found: seen,
        });
    }

    let labels: Vec<i8> = raw_labels
        .iter()
        .map(|v| if v == positive_value { 1 } else { -1 })
        .collect();
    let d = feature_names.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let features = Array2::from_shape_vec((labels.len(), d), flat)
        .expect("row width was checked against the header");
    Dataset::new(features, labels, Some(feature_names))
}

/// Two isotropic 2-D Gaussian clusters at (-1.5, 0) and (+1.5, 0), one per
/// class, with standard deviation `noise`. `noise = 0` collapses each class
/// onto its mean, so the classes are linearly separable.
pub fn generate_linear(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    validate_generator_args(n, noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label: i8 = if i % 2 == 0 { 1 } else { -1 };
        let center = if label == 1 { 1.5 } else { -1.5 };
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        features[[i, 0]] = center + noise * dx;
        features[[i, 1]] = noise * dy;
        labels.push(label);
    }
    Dataset::new(features, labels, None)
}

/// Inner disc (`+1`, base radius in [0, 1)) versus surrounding annulus
/// (`-1`, base radius in [1, 2)) in 2-D. Gaussian noise with standard
/// deviation `noise` perturbs the radius; the result is clamped at zero.
pub fn generate_circular(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    validate_generator_args(n, noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label: i8 = if i % 2 == 0 { 1 } else { -1 };
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let base: f64 = if label == 1 {
            rng.random_range(0.0..1.0)
        } else {
            rng.random_range(1.0..2.0)
        };
        let jitter: f64 = rng.sample(StandardNormal);
        let radius = (base + noise * jitter).max(0.0);
        features[[i, 0]] = radius * angle.cos();
        features[[i, 1]] = radius * angle.sin();
        labels.push(label);
    }
    Dataset::new(features, labels, None)
}

fn validate_generator_args(n: usize, noise: f64) -> Result<()> {
    if n < 4 {
        return Err(Error::TooFewRows { min: 4, got: n });
    }
    if !noise.is_finite() || noise < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise must be a finite nonnegative real, got {noise}"
        )));
    }
    Ok(())
}

/// Converts a fraction of `n` to a count: `floor(fraction * n)` with a small
/// epsilon guard so that e.g. `0.49 * 100` lands on 49 despite binary
/// rounding of the fraction itself.
pub(crate) fn fraction_to_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 + 1e-9).floor() as usize).min(n)
}

/// Splits a dataset into disjoint train/test sides covering the source.
///
/// The train size is `floor(train_fraction * n)`; if either side would be
/// empty, one instance is moved over. With `stratified`, shuffling and the
/// floor rule are applied per class, preserving class proportions within
/// rounding.
pub fn split(
    data: &Dataset,
    train_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<TrainTestSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidFraction(train_fraction));
    }
    let n = data.n();
    if n < 2 {
        return Err(Error::TooFewRows { min: 2, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut train_indices: Vec<usize>;
    if stratified {
        let mut by_class: BTreeMap<i8, Vec<usize>> = BTreeMap::new();
        for (i, &y) in data.labels().iter().enumerate() {
            by_class.entry(y).or_default().push(i);
        }
        train_indices = Vec::new();
        for indices in by_class.values() {
            let mut class_indices = indices.clone();
            class_indices.shuffle(&mut rng);
            let take = fraction_to_count(train_fraction, class_indices.len());
            train_indices.extend_from_slice(&class_indices[..take]);
        }
        train_indices.sort_unstable();
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let take = fraction_to_count(train_fraction, n);
        train_indices = order[..take].to_vec();
        train_indices.sort_unstable();
    }

    // Never leave a side empty: move one instance across if needed.
    if train_indices.is_empty() {
        train_indices.push(0);
    } else if train_indices.len() == n {
        train_indices.pop();
    }

    let in_train: Vec<bool> = {
        let mut mask = vec![false; n];
        for &i in &train_indices {
            mask[i] = true;
        }
        mask
    };
    let test_indices: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();

    let train = data.take_rows(&train_indices);
    let test = data.take_rows(&test_indices);
    let (pos, neg) = train.class_counts();
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateSplit);
    }
    Ok(TrainTestSplit {
        train,
        test,
        train_indices,
        test_indices,
        seed,
    })
}

/// Standardizes a dataset by its own per-feature statistics. Used where no
/// train/test distinction exists (e.g. whole-dataset gradient reports).
pub fn standardize_dataset(data: &Dataset) -> Dataset {
    let trivial = TrainTestSplit {
        train: data.clone(),
        test: data.clone(),
        train_indices: (0..data.n()).collect(),
        test_indices: Vec::new(),
        seed: 0,
    };
    standardize(&trivial).train
}

/// Centers and scales every feature by its *training-side* mean and
/// population standard deviation, applied to both sides. Features whose
/// training variance is (numerically) zero pass through unchanged.
pub fn standardize(split: &TrainTestSplit) -> TrainTestSplit {
    let d = split.train.dim();
    let n = split.train.n() as f64;
    let mut means = vec![0.0; d];
    let mut stds = vec![0.0; d];
    for j in 0..d {
        let column = split.train.features().column(j).to_owned();
        let mean = column.sum() / n;
        let var = column.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        means[j] = mean;
        stds[j] = var.sqrt();
    }
    let scale = |data: &Dataset| -> Dataset {
        let mut features = data.features().to_owned();
        for j in 0..d {
            // Variance indistinguishable from zero: leave the column alone.
            if stds[j] <= 1e-12 * (1.0 + means[j].abs()) {
                continue;
            }
            for value in features.column_mut(j).iter_mut() {
                *value = (*value - means[j]) / stds[j];
            }
        }
        Dataset::new(
            features,
            data.labels().to_vec(),
            data.feature_names().map(<[String]>::to_vec),
        )
        .expect("standardizing a valid dataset keeps it valid")
    };
    TrainTestSplit {
        train: scale(&split.train),
        test: scale(&split.test),
        train_indices: split.train_indices.clone(),
        test_indices: split.test_indices.clone(),
        seed: split.seed,
    }
}
