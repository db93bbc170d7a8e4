//! Gradient-magnitude candidate selection.
//!
//! Training instances are ranked by `|g|` descending. The candidate set for
//! label flipping takes the `floor(b * n)` instances with the *smallest*
//! gradients (the well-trained ones) plus `floor(a * n)` instances sampled
//! uniformly without replacement from the rest, which preserves a trace of
//! the original data distribution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::fraction_to_count;
use crate::error::{Error, Result};

/// Per-instance gradients plus the permutation sorting them by `|g|`
/// descending (ties broken by ascending original index).
#[derive(Debug, Clone)]
pub struct GradientProfile {
    g: Vec<f64>,
    order: Vec<usize>,
}

impl GradientProfile {
    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// The permutation: `order()[0]` is the index with the largest `|g|`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// 1-based rank of instance `index` (1 = largest `|g|`).
    pub fn rank_of(&self, index: usize) -> usize {
        self.order
            .iter()
            .position(|&i| i == index)
            .expect("index in range")
            + 1
    }
}

/// Ranks instances by gradient magnitude. Values must be finite; the input
/// must be non-empty.
pub fn rank_by_gradient(g: &[f64]) -> GradientProfile {
    assert!(!g.is_empty(), "gradient vector must be non-empty");
    debug_assert!(g.iter().all(|v| v.is_finite()));
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        g[b].abs()
            .partial_cmp(&g[a].abs())
            .expect("finite gradients")
            .then(a.cmp(&b))
    });
    GradientProfile {
        g: g.to_vec(),
        order,
    }
}

/// The `k` training indices eligible for flipping.
///
/// `indices` stores the small-gradient block first (in ascending position
/// within the descending-`|g|` order, i.e. from larger to smaller `|g|`),
/// followed by the sampled large-gradient block, so downstream flip walks
/// are stable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub indices: Vec<usize>,
    pub count_large: usize,
    pub count_small: usize,
}

impl CandidateSet {
    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Whether candidate slot `slot` belongs to the small-gradient block,
    /// which occupies the first `count_small` slots.
    pub fn is_small_slot(&self, slot: usize) -> bool {
        slot < self.count_small
    }
}

/// Builds the candidate set from sampling ratios `a` (large-gradient pool)
/// and `b` (small-gradient pool), with `a, b >= 0` and `a + b <= 1`.
///
/// The small block is the tail of the descending order and is identical for
/// every seed; only the large-gradient sample depends on `seed`.
pub fn build_candidate_set(
    profile: &GradientProfile,
    a: f64,
    b: f64,
    seed: u64,
) -> Result<CandidateSet> {
    if a.is_nan() || a < 0.0 || b.is_nan() || b < 0.0 || a + b > 1.0 + 1e-12 {
        return Err(Error::InvalidSamplingRatio { a, b });
    }
    let n = profile.len();
    let count_small = fraction_to_count(b, n);
    let head_len = n - count_small;
    let count_large = fraction_to_count(a, n).min(head_len);

    // Small-gradient block: tail of the descending order, kept in tail order.
    let mut indices: Vec<usize> = profile.order()[head_len..].to_vec();

    // Large-gradient block: uniform sample without replacement from the head,
    // kept in ascending head position.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks: Vec<usize> =
        rand::seq::index::sample(&mut rng, head_len, count_large).into_vec();
    picks.sort_unstable();
    indices.extend(picks.into_iter().map(|p| profile.order()[p]));

    Ok(CandidateSet {
        indices,
        count_large,
        count_small,
    })
}
