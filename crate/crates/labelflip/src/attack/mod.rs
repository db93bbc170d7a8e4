//! Label-flip attack strategies.
//!
//! All strategies share the same shape: reduce the training set to a
//! gradient-ranked candidate set, choose which candidate labels to flip
//! under a budget, retrain the surrogate, and keep the labeling that
//! maximizes validation loss across iterations.
//!
//! * [`gds`] samples flip indicators uniformly at random each iteration.
//! * [`ogds`] selects flips by solving the paired linear program of
//!   [`lp::solve_flip_lp`] against residual errors from the original and
//!   previous-iteration models.
//! * [`sgds`] replaces the linear program with a sort over the per-pair
//!   objective coefficients and a greedy walk; under uniform costs it
//!   reproduces the [`ogds`] selection without solving an LP.
//! * [`linear_flip_baseline`] and [`random_flip_baseline`] are the
//!   comparison strategies: deterministic smallest-gradient flips and
//!   uniform random flips.

mod lp;

pub use lp::{ilp_bruteforce, objective, solve_flip_lp, ErrorVectors, IndicatorVector, LpSolution};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{ClassifierSpec, TrainedModel};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::sampling::{build_candidate_set, CandidateSet, GradientProfile};
use crate::seed::{derive, derive_n};

/// How much flipping one candidate costs against the budget.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum CostScheme {
    /// Every flip costs 1.
    #[default]
    Uniform,
    /// Large-gradient candidates cost `large`, small-gradient candidates
    /// cost `small`.
    Varied { large: f64, small: f64 },
}

impl CostScheme {
    pub fn is_uniform(&self) -> bool {
        matches!(self, CostScheme::Uniform)
    }

    pub fn label(&self) -> String {
        match self {
            CostScheme::Uniform => "uniform".to_string(),
            CostScheme::Varied { large, small } => format!("varied[{large},{small}]"),
        }
    }

    /// Per-candidate cost vector in candidate-slot order.
    pub fn materialize(&self, candidate: &CandidateSet) -> Result<Vec<f64>> {
        match self {
            CostScheme::Uniform => Ok(vec![1.0; candidate.k()]),
            CostScheme::Varied { large, small } => {
                for &c in [large, small] {
                    if !c.is_finite() || c <= 0.0 {
                        return Err(Error::NonPositiveCost(c));
                    }
                }
                Ok((0..candidate.k())
                    .map(|slot| {
                        if candidate.is_small_slot(slot) {
                            *small
                        } else {
                            *large
                        }
                    })
                    .collect())
            }
        }
    }
}

/// Everything an attack invocation needs besides the training data and the
/// gradient profile.
#[derive(Debug, Clone)]
pub struct AttackConfig {
    /// Maximum number of flips (uniform cost) or total flip cost (varied).
    pub budget: usize,
    pub cost_scheme: CostScheme,
    /// Large-gradient sampling ratio.
    pub a: f64,
    /// Small-gradient sampling ratio.
    pub b: f64,
    pub t_max: usize,
    pub seed: u64,
    pub surrogate: ClassifierSpec,
    /// Held-out set scoring each iteration; the attack returns the labeling
    /// with the highest mean surrogate loss on it.
    pub validation: Dataset,
}

impl AttackConfig {
    pub fn new(budget: usize, surrogate: ClassifierSpec, validation: Dataset) -> Self {
        Self {
            budget,
            cost_scheme: CostScheme::Uniform,
            a: 0.01,
            b: 0.49,
            t_max: 20,
            seed: 0,
            surrogate,
            validation,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.t_max == 0 {
            return Err(Error::InvalidParameter("t_max must be positive".into()));
        }
        if self.a.is_nan()
            || self.a < 0.0
            || self.b.is_nan()
            || self.b < 0.0
            || self.a + self.b > 1.0 + 1e-12
        {
            return Err(Error::InvalidSamplingRatio {
                a: self.a,
                b: self.b,
            });
        }
        Ok(())
    }
}

/// Outcome of one attack run. Features are never touched; labels differ
/// from the clean training labels exactly at `flipped_indices`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub strategy: String,
    pub budget: usize,
    pub poisoned_labels: Vec<i8>,
    /// Sorted training indices whose label was flipped.
    pub flipped_indices: Vec<usize>,
    /// Mean surrogate loss on the validation set, one entry per recorded
    /// iteration. Empty for the baselines, which do not iterate.
    pub per_iteration_val_error: Vec<f64>,
    /// Index into `per_iteration_val_error` of the returned labeling.
    pub chosen_iteration: Option<usize>,
    pub count_large_flipped: usize,
    pub count_small_flipped: usize,
    pub candidate: CandidateSet,
}

impl AttackResult {
    pub fn flip_count(&self) -> usize {
        self.flipped_indices.len()
    }

    /// Report view: `{strategy, budget, flipped_indices, t_f, val_errors,
    /// count_large, count_small}`.
    pub fn report_json(&self) -> serde_json::Value {
        serde_json::json!({
            "strategy": self.strategy,
            "budget": self.budget,
            "flipped_indices": self.flipped_indices,
            "t_f": self.chosen_iteration,
            "val_errors": self.per_iteration_val_error,
            "count_large": self.count_large_flipped,
            "count_small": self.count_small_flipped,
        })
    }
}

/// Flips labels where `indicators` is 1, walking candidates in their stored
/// order and stopping once `budget` flips have been made.
pub fn flip(indicators: &[u8], labels: &[i8], candidate: &CandidateSet, budget: usize) -> Vec<i8> {
    assert_eq!(
        indicators.len(),
        candidate.k(),
        "one indicator per candidate"
    );
    let mut poisoned = labels.to_vec();
    let mut flips = 0;
    for (slot, &index) in candidate.indices.iter().enumerate() {
        if flips == budget {
            break;
        }
        if indicators[slot] == 1 {
            poisoned[index] = -poisoned[index];
            flips += 1;
        }
    }
    poisoned
}

fn candidate_for(config: &AttackConfig, gradients: &GradientProfile) -> Result<CandidateSet> {
    build_candidate_set(
        gradients,
        config.a,
        config.b,
        derive(config.seed, &["candidate-sample"]),
    )
}

fn fit_surrogate(config: &AttackConfig, data: &Dataset, iteration: usize) -> Result<TrainedModel> {
    config
        .surrogate
        .fit(
            data,
            derive_n(config.seed, &["surrogate-fit"], iteration as u64),
        )
        .map_err(|source| Error::SurrogateFit {
            iteration,
            source: Box::new(source),
        })
}

/// Residual losses over the `2k` slots: candidate `i` with its original
/// label in slot `i`, with the complement label in slot `i + k`.
fn slot_losses(model: &TrainedModel, train: &Dataset, candidate: &CandidateSet) -> Vec<f64> {
    let k = candidate.k();
    let mut losses = vec![0.0; 2 * k];
    for (slot, &index) in candidate.indices.iter().enumerate() {
        let label = train.labels()[index];
        losses[slot] = model.instance_loss(train.row(index), label);
        losses[slot + k] = model.instance_loss(train.row(index), -label);
    }
    losses
}

/// Materializes the labeling selected by `indicator` on top of the clean
/// labels: pairs choosing their complement slot get flipped.
fn materialize_labels(
    indicator: &IndicatorVector,
    clean: &[i8],
    candidate: &CandidateSet,
) -> Vec<i8> {
    let mut labels = clean.to_vec();
    for pair in indicator.flipped_pairs() {
        let index = candidate.indices[pair];
        labels[index] = -labels[index];
    }
    labels
}

fn finalize(
    strategy: &str,
    train: &Dataset,
    candidate: CandidateSet,
    poisoned_labels: Vec<i8>,
    per_iteration_val_error: Vec<f64>,
    chosen_iteration: Option<usize>,
    budget: usize,
) -> AttackResult {
    let flipped_indices: Vec<usize> = train
        .labels()
        .iter()
        .zip(&poisoned_labels)
        .enumerate()
        .filter(|(_, (clean, poisoned))| clean != poisoned)
        .map(|(i, _)| i)
        .collect();
    let mut count_small = 0;
    let mut count_large = 0;
    for &index in &flipped_indices {
        let slot = candidate
            .indices
            .iter()
            .position(|&c| c == index)
            .expect("flips only touch candidates");
        if candidate.is_small_slot(slot) {
            count_small += 1;
        } else {
            count_large += 1;
        }
    }
    AttackResult {
        strategy: strategy.to_string(),
        budget,
        poisoned_labels,
        flipped_indices,
        per_iteration_val_error,
        chosen_iteration,
        count_large_flipped: count_large,
        count_small_flipped: count_small,
        candidate,
    }
}

fn clean_result(
    strategy: &str,
    train: &Dataset,
    candidate: CandidateSet,
    budget: usize,
) -> AttackResult {
    log::warn!("{strategy}: empty candidate set, returning the clean labeling");
    finalize(
        strategy,
        train,
        candidate,
        train.labels().to_vec(),
        Vec::new(),
        None,
        budget,
    )
}

/// Randomized-search attack: each iteration draws an independent fair
/// Bernoulli indicator per candidate, flips at most `budget` of the
/// indicated labels, refits the surrogate, and records validation loss.
pub fn gds(
    train: &Dataset,
    config: &AttackConfig,
    gradients: &GradientProfile,
) -> Result<AttackResult> {
    config.validate()?;
    let candidate = candidate_for(config, gradients)?;
    if candidate.is_empty() {
        return Ok(clean_result("gds", train, candidate, config.budget));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive(config.seed, &["gds-indicators"]));
    let mut trace = Vec::with_capacity(config.t_max);
    let mut best: Option<(f64, Vec<i8>, usize)> = None;
    for t in 1..=config.t_max {
        let indicators: Vec<u8> = (0..candidate.k())
            .map(|_| u8::from(rng.random_bool(0.5)))
            .collect();
        let labels_t = flip(&indicators, train.labels(), &candidate, config.budget);
        let poisoned = train.with_labels(labels_t.clone())?;
        let model = fit_surrogate(config, &poisoned, t)?;
        let val = model.mean_loss(&config.validation)?;
        trace.push(val);
        if best.as_ref().is_none_or(|(b, _, _)| val > *b) {
            best = Some((val, labels_t, trace.len() - 1));
        }
    }
    let (_, labels, chosen) = best.expect("t_max >= 1 guarantees one iteration");
    Ok(finalize(
        "gds",
        train,
        candidate,
        labels,
        trace,
        Some(chosen),
        config.budget,
    ))
}

/// Shared outer loop of the paired-selection attacks: fit the original
/// model, then iterate (select, materialize, refit, rescore) until the
/// selection reaches a fixed point or `t_max`, returning the labeling with
/// maximal validation loss.
fn iterate_paired_attack<F>(
    strategy: &str,
    train: &Dataset,
    config: &AttackConfig,
    gradients: &GradientProfile,
    mut select: F,
) -> Result<AttackResult>
where
    F: FnMut(&ErrorVectors, &[f64], usize) -> Result<IndicatorVector>,
{
    config.validate()?;
    let candidate = candidate_for(config, gradients)?;
    if candidate.is_empty() {
        return Ok(clean_result(strategy, train, candidate, config.budget));
    }
    let costs = config.cost_scheme.materialize(&candidate)?;

    let original_model = fit_surrogate(config, train, 0)?;
    let mut errs = ErrorVectors::initial(slot_losses(&original_model, train, &candidate))?;

    let mut previous: Option<IndicatorVector> = None;
    let mut trace = Vec::new();
    let mut best: Option<(f64, Vec<i8>, usize)> = None;
    for t in 1..=config.t_max {
        let indicator = select(&errs, &costs, config.budget)?;
        if previous.as_ref() == Some(&indicator) {
            // Fixed point: retraining would reproduce the previous model.
            break;
        }
        let labels_t = materialize_labels(&indicator, train.labels(), &candidate);
        let poisoned = train.with_labels(labels_t.clone())?;
        let model = fit_surrogate(config, &poisoned, t)?;
        errs = errs.with_eps(slot_losses(&model, train, &candidate))?;
        let val = model.mean_loss(&config.validation)?;
        trace.push(val);
        if best.as_ref().is_none_or(|(b, _, _)| val > *b) {
            best = Some((val, labels_t, trace.len() - 1));
        }
        previous = Some(indicator);
    }
    let (_, labels, chosen) = best.expect("t_max >= 1 guarantees one iteration");
    Ok(finalize(
        strategy,
        train,
        candidate,
        labels,
        trace,
        Some(chosen),
        config.budget,
    ))
}

/// Linear-program attack: per iteration, [`solve_flip_lp`] picks the
/// flip set minimizing the paired objective under the budget.
pub fn ogds(
    train: &Dataset,
    config: &AttackConfig,
    gradients: &GradientProfile,
) -> Result<AttackResult> {
    iterate_paired_attack("ogds", train, config, gradients, |errs, costs, budget| {
        Ok(solve_flip_lp(errs, costs, budget as f64)?.indicator)
    })
}

/// Sorting-based greedy selection. Eliminating `q_i = 1 - q_{i+k}` leaves
/// one objective coefficient per pair, `delta_i = (eps_{i+k} - e_{i+k}) -
/// (eps_i - e_i)`; each iteration sorts those coefficients ascending and
/// greedily flips pairs with negative coefficients while the budget lasts.
/// No linear program is solved, yet under uniform costs the walk reproduces
/// the [`ogds`] selection exactly, so both strategies return identical
/// results for identical inputs.
///
/// Requires uniform costs — the greedy/LP equivalence only holds there.
pub fn sgds(
    train: &Dataset,
    config: &AttackConfig,
    gradients: &GradientProfile,
) -> Result<AttackResult> {
    if !config.cost_scheme.is_uniform() {
        return Err(Error::VariedCostUnsupported);
    }
    iterate_paired_attack("sgds", train, config, gradients, |errs, _costs, budget| {
        Ok(sgds_select(errs, budget))
    })
}

fn sgds_select(errs: &ErrorVectors, budget: usize) -> IndicatorVector {
    let k = errs.k();
    let mut pairs: Vec<usize> = (0..k).collect();
    pairs.sort_unstable_by(|&a, &b| {
        errs.pair_delta(a)
            .partial_cmp(&errs.pair_delta(b))
            .expect("finite coefficients")
            .then(a.cmp(&b))
    });
    let mut flips = Vec::new();
    for &pair in &pairs {
        if flips.len() == budget || errs.pair_delta(pair) >= 0.0 {
            break;
        }
        flips.push(pair);
    }
    IndicatorVector::from_flips(k, &flips)
}

/// Deterministic baseline: flips the `budget` training instances with the
/// smallest gradient magnitudes.
pub fn linear_flip_baseline(
    train: &Dataset,
    gradients: &GradientProfile,
    budget: usize,
) -> Result<AttackResult> {
    if budget > train.n() {
        return Err(Error::BudgetTooLarge {
            budget,
            n: train.n(),
        });
    }
    let order = gradients.order();
    let tail = order[order.len() - budget..].to_vec();
    let mut labels = train.labels().to_vec();
    for &index in &tail {
        labels[index] = -labels[index];
    }
    let candidate = CandidateSet {
        indices: tail,
        count_large: 0,
        count_small: budget,
    };
    Ok(finalize(
        "linear_flip",
        train,
        candidate,
        labels,
        Vec::new(),
        None,
        budget,
    ))
}

/// Uniform-random control: flips `budget` distinct indices sampled without
/// replacement.
pub fn random_flip_baseline(train: &Dataset, budget: usize, seed: u64) -> Result<AttackResult> {
    if budget > train.n() {
        return Err(Error::BudgetTooLarge {
            budget,
            n: train.n(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &["random-flip"]));
    let mut picks: Vec<usize> = rand::seq::index::sample(&mut rng, train.n(), budget).into_vec();
    picks.sort_unstable();
    let mut labels = train.labels().to_vec();
    for &index in &picks {
        labels[index] = -labels[index];
    }
    let candidate = CandidateSet {
        indices: picks,
        count_large: budget,
        count_small: 0,
    };
    Ok(finalize(
        "random_flip",
        train,
        candidate,
        labels,
        Vec::new(),
        None,
        budget,
    ))
}

/// Attack strategy selector used by the evaluation protocols and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Gds,
    Ogds,
    Sgds,
    LinearFlip,
    RandomFlip,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Gds,
        Strategy::Ogds,
        Strategy::Sgds,
        Strategy::LinearFlip,
        Strategy::RandomFlip,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Gds => "gds",
            Strategy::Ogds => "ogds",
            Strategy::Sgds => "sgds",
            Strategy::LinearFlip => "linear_flip",
            Strategy::RandomFlip => "random_flip",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown strategy `{name}`; expected one of gds, ogds, sgds, linear_flip, random_flip"
                ))
            })
    }

    pub fn run(
        &self,
        train: &Dataset,
        config: &AttackConfig,
        gradients: &GradientProfile,
    ) -> Result<AttackResult> {
        match self {
            Strategy::Gds => gds(train, config, gradients),
            Strategy::Ogds => ogds(train, config, gradients),
            Strategy::Sgds => sgds(train, config, gradients),
            Strategy::LinearFlip => linear_flip_baseline(train, gradients, config.budget),
            Strategy::RandomFlip => random_flip_baseline(train, config.budget, config.seed),
        }
    }
}
