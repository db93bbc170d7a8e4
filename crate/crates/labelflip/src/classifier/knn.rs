//! k-nearest-neighbors over the stored training set.

use ndarray::{Array2, ArrayView1};

use crate::dataset::Dataset;

#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    features: Array2<f64>,
    labels: Vec<i8>,
}

impl KnnModel {
    pub(crate) fn fit(data: &Dataset, k: usize) -> Self {
        Self {
            k: k.min(data.n()),
            features: data.features().to_owned(),
            labels: data.labels().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `(fraction of +1 labels among the k nearest neighbors - 0.5) * 2`,
    /// in `[-1, 1]`. Neighbors are ordered by squared Euclidean distance
    /// with ties broken by training index, which keeps scoring bit-stable.
    pub fn neighbor_score(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut by_distance: Vec<(f64, usize)> = self
            .features
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, train_row)| {
                let mut dist = 0.0;
                for (a, b) in row.iter().zip(train_row.iter()) {
                    let delta = a - b;
                    dist += delta * delta;
                }
                (dist, i)
            })
            .collect();
        by_distance.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let positive = by_distance[..self.k]
            .iter()
            .filter(|(_, i)| self.labels[*i] == 1)
            .count();
        (positive as f64 / self.k as f64 - 0.5) * 2.0
    }
}
