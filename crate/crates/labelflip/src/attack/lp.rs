//! Flip selection as a paired linear program.
//!
//! For `k` candidates there are `2k` slots: slot `i < k` is candidate `i`
//! with its original label, slot `i + k` the same candidate with the
//! complement label. Given residual losses under the original model (`e`)
//! and under the previous iteration's model (`eps`), the selection problem
//! is
//!
//! ```text
//! min_q  sum_i q_i (eps_i - e_i)
//! s.t.   sum_{i>k} c_i q_i <= B,    q_i + q_{i+k} = 1,    q in {0,1}
//! ```
//!
//! Eliminating `q_i = 1 - q_{i+k}` turns the objective into a constant plus
//! `sum_pairs q_{i+k} * delta_i` with `delta_i = (eps_{i+k} - e_{i+k}) -
//! (eps_i - e_i)`, i.e. a knapsack over pairs with negative `delta`. The LP
//! relaxation is therefore solved analytically by the fractional-knapsack
//! greedy; under uniform costs its optimum is already integral.

use crate::error::{Error, Result};

/// Residual losses over the `2k` slots. `eps` starts as all zeros before
/// the first iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorVectors {
    e: Vec<f64>,
    eps: Vec<f64>,
}

impl ErrorVectors {
    pub fn new(e: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        if e.len() != eps.len() || !e.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "error vectors must share an even length, got {} and {}",
                e.len(),
                eps.len()
            )));
        }
        for value in e.iter().chain(eps.iter()) {
            if !value.is_finite() || *value < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "residual errors must be finite and nonnegative, got {value}"
                )));
            }
        }
        Ok(Self { e, eps })
    }

    /// Fresh vectors for iteration 1: `eps = 0`.
    pub fn initial(e: Vec<f64>) -> Result<Self> {
        let eps = vec![0.0; e.len()];
        Self::new(e, eps)
    }

    pub fn with_eps(&self, eps: Vec<f64>) -> Result<Self> {
        Self::new(self.e.clone(), eps)
    }

    pub fn k(&self) -> usize {
        self.e.len() / 2
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    /// Objective coefficient of slot `i`: `eps_i - e_i`.
    pub fn coefficient(&self, slot: usize) -> f64 {
        self.eps[slot] - self.e[slot]
    }

    /// `delta_i` of pair `i`: coefficient of the complement slot minus the
    /// coefficient of the original slot. Negative means flipping pair `i`
    /// lowers the objective.
    pub fn pair_delta(&self, pair: usize) -> f64 {
        let k = self.k();
        self.coefficient(pair + k) - self.coefficient(pair)
    }
}

/// Paired 0/1 selection: exactly one of `q[i]`, `q[i+k]` is 1 per pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorVector {
    q: Vec<u8>,
}

impl IndicatorVector {
    pub fn new(q: Vec<u8>) -> Result<Self> {
        if !q.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "indicator vector must have even length".into(),
            ));
        }
        let k = q.len() / 2;
        for i in 0..k {
            if q[i] + q[i + k] != 1 {
                return Err(Error::InvalidParameter(format!(
                    "pair {i} violates q_i + q_(i+k) = 1"
                )));
            }
        }
        Ok(Self { q })
    }

    /// All-original selection.
    pub fn originals(k: usize) -> Self {
        let mut q = vec![0u8; 2 * k];
        q[..k].fill(1);
        Self { q }
    }

    pub fn from_flips(k: usize, flipped_pairs: &[usize]) -> Self {
        let mut ind = Self::originals(k);
        for &pair in flipped_pairs {
            ind.q[pair] = 0;
            ind.q[pair + k] = 1;
        }
        ind
    }

    pub fn q(&self) -> &[u8] {
        &self.q
    }

    pub fn k(&self) -> usize {
        self.q.len() / 2
    }

    /// Whether pair `i` selected its complement label.
    pub fn complement_chosen(&self, pair: usize) -> bool {
        self.q[pair + self.k()] == 1
    }

    pub fn flipped_pairs(&self) -> Vec<usize> {
        (0..self.k())
            .filter(|&i| self.complement_chosen(i))
            .collect()
    }

    pub fn flip_cost(&self, costs: &[f64]) -> f64 {
        self.flipped_pairs().iter().map(|&i| costs[i]).sum()
    }
}

/// Objective value `sum_i q_i (eps_i - e_i)`, summed in slot order so equal
/// selections produce bit-identical values.
pub fn objective(errs: &ErrorVectors, indicator: &IndicatorVector) -> f64 {
    indicator
        .q()
        .iter()
        .enumerate()
        .filter(|(_, &q)| q == 1)
        .map(|(slot, _)| errs.coefficient(slot))
        .sum()
}

/// Integral selection plus the true optimum of the LP relaxation (which may
/// include one fractional boundary pair, rounded down in the selection).
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub indicator: IndicatorVector,
    /// Optimal objective value of the relaxation; lower-bounds every
    /// feasible integral selection.
    pub relaxation_objective: f64,
}

/// Solves the relaxed selection problem analytically.
///
/// Pairs with `delta_i < 0` are sorted by `delta_i / c_i` ascending and
/// their complements taken greedily while the budget allows. The pair at
/// the budget boundary — the single coordinate the relaxation would take
/// fractionally — is rounded down to the original label, so the returned
/// selection always satisfies the budget. Under uniform costs no boundary
/// fraction arises and the greedy selection *is* the LP optimum.
pub fn solve_flip_lp(errs: &ErrorVectors, costs: &[f64], budget: f64) -> Result<LpSolution> {
    let k = errs.k();
    if costs.len() != k {
        return Err(Error::InvalidParameter(format!(
            "expected {k} costs, got {}",
            costs.len()
        )));
    }
    for &c in costs {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::NonPositiveCost(c));
        }
    }

    let mut beneficial: Vec<usize> = (0..k).filter(|&i| errs.pair_delta(i) < 0.0).collect();
    beneficial.sort_unstable_by(|&a, &b| {
        let ra = errs.pair_delta(a) / costs[a];
        let rb = errs.pair_delta(b) / costs[b];
        ra.partial_cmp(&rb).expect("finite ratios").then(a.cmp(&b))
    });

    let base: f64 = (0..k).map(|i| errs.coefficient(i)).sum();
    let mut relaxation_objective = base;
    let mut flipped = Vec::new();
    let mut remaining = budget;
    for pair in beneficial {
        let cost = costs[pair];
        let delta = errs.pair_delta(pair);
        if cost <= remaining {
            flipped.push(pair);
            remaining -= cost;
            relaxation_objective += delta;
        } else {
            // Boundary pair: fractional in the relaxation, dropped from the
            // integral selection.
            if remaining > 0.0 {
                relaxation_objective += delta * remaining / cost;
            }
            break;
        }
    }

    Ok(LpSolution {
        indicator: IndicatorVector::from_flips(k, &flipped),
        relaxation_objective,
    })
}

pub const ILP_MAX_K: usize = 20;

/// Exhaustive minimum over all `2^k` feasible pairings. Test oracle only;
/// rejects `k > 20`.
pub fn ilp_bruteforce(errs: &ErrorVectors, costs: &[f64], budget: f64) -> Result<IndicatorVector> {
    let k = errs.k();
    if k > ILP_MAX_K {
        return Err(Error::CandidateSetTooLarge { k, max: ILP_MAX_K });
    }
    if costs.len() != k {
        return Err(Error::InvalidParameter(format!(
            "expected {k} costs, got {}",
            costs.len()
        )));
    }

    let mut best: Option<(f64, IndicatorVector)> = None;
    for mask in 0u32..(1u32 << k) {
        let flipped: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).collect();
        let cost: f64 = flipped.iter().map(|&i| costs[i]).sum();
        if cost > budget {
            continue;
        }
        let indicator = IndicatorVector::from_flips(k, &flipped);
        let value = objective(errs, &indicator);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, indicator));
        }
    }
    Ok(best
        .expect("the all-original selection is always feasible")
        .1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vectors_from_deltas(deltas: &[f64]) -> ErrorVectors {
        // e = 0 on original slots; complement slot carries eps = max(0, delta)
        // or e = -delta, producing the requested pair deltas with valid
        // nonnegative entries.
        let k = deltas.len();
        let mut e = vec![0.0; 2 * k];
        let mut eps = vec![0.0; 2 * k];
        for (i, &d) in deltas.iter().enumerate() {
            if d >= 0.0 {
                eps[i + k] = d;
            } else {
                e[i + k] = -d;
            }
        }
        ErrorVectors::new(e, eps).unwrap()
    }

    #[test]
    fn no_beneficial_flip_keeps_originals() {
        let errs = vectors_from_deltas(&[0.5, 0.0, 2.0]);
        let solution = solve_flip_lp(&errs, &[1.0, 1.0, 1.0], 2.0).unwrap();
        assert!(solution.indicator.flipped_pairs().is_empty());
        assert_eq!(solution.indicator.q(), &[1, 1, 1, 0, 0, 0]);
    }

    #[test]
    fn budget_one_takes_most_negative_delta() {
        let errs = vectors_from_deltas(&[-5.0, -1.0, 2.0]);
        let solution = solve_flip_lp(&errs, &[1.0, 1.0, 1.0], 1.0).unwrap();
        assert_eq!(solution.indicator.flipped_pairs(), vec![0]);
    }

    #[test]
    fn zero_budget_flips_nothing() {
        let errs = vectors_from_deltas(&[-5.0, -1.0]);
        let solution = solve_flip_lp(&errs, &[1.0, 1.0], 0.0).unwrap();
        assert!(solution.indicator.flipped_pairs().is_empty());
        assert_eq!(
            solution.relaxation_objective,
            objective(&errs, &solution.indicator)
        );
    }

    #[test]
    fn ilp_tiny_cases() {
        // k = 1, negative delta, budget covers the cost: complement chosen.
        let errs = vectors_from_deltas(&[-3.0]);
        let best = ilp_bruteforce(&errs, &[1.0], 1.0).unwrap();
        assert!(best.complement_chosen(0));

        // k = 2, zero budget: originals.
        let errs = vectors_from_deltas(&[-3.0, -4.0]);
        let best = ilp_bruteforce(&errs, &[1.0, 1.0], 0.0).unwrap();
        assert!(best.flipped_pairs().is_empty());
    }

    #[test]
    fn ilp_rejects_large_k() {
        let errs = vectors_from_deltas(&[-1.0; 21]);
        assert!(matches!(
            ilp_bruteforce(&errs, &[1.0; 21], 5.0).unwrap_err(),
            Error::CandidateSetTooLarge { .. }
        ));
    }

    fn random_instance(rng: &mut ChaCha8Rng, k: usize) -> (ErrorVectors, Vec<f64>) {
        let e: Vec<f64> = (0..2 * k).map(|_| rng.random_range(0.0..4.0)).collect();
        let eps: Vec<f64> = (0..2 * k).map(|_| rng.random_range(0.0..4.0)).collect();
        let costs: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..3.0)).collect();
        (ErrorVectors::new(e, eps).unwrap(), costs)
    }

    #[test]
    fn uniform_cost_greedy_equals_ilp() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let k = rng.random_range(1..=10);
            let (errs, _) = random_instance(&mut rng, k);
            let costs = vec![1.0; k];
            let budget = rng.random_range(0..=k) as f64;
            let lp = solve_flip_lp(&errs, &costs, budget).unwrap();
            let ilp = ilp_bruteforce(&errs, &costs, budget).unwrap();
            let lp_value = objective(&errs, &lp.indicator);
            let ilp_value = objective(&errs, &ilp);
            assert_eq!(
                lp_value.to_bits(),
                ilp_value.to_bits(),
                "uniform-cost objectives must match exactly"
            );
            assert!((lp.relaxation_objective - lp_value).abs() < 1e-12);
        }
    }

    #[test]
    fn varied_cost_relaxation_lower_bounds_ilp() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..200 {
            let k = rng.random_range(1..=10);
            let (errs, costs) = random_instance(&mut rng, k);
            let budget = rng.random_range(0.0..1.5 * k as f64);
            let lp = solve_flip_lp(&errs, &costs, budget).unwrap();
            let ilp = ilp_bruteforce(&errs, &costs, budget).unwrap();
            let ilp_value = objective(&errs, &ilp);
            assert!(
                lp.relaxation_objective <= ilp_value + 1e-9,
                "relaxation {} must lower-bound ILP {}",
                lp.relaxation_objective,
                ilp_value
            );
            // The rounded-down integral selection stays within budget.
            assert!(lp.indicator.flip_cost(&costs) <= budget + 1e-12);
        }
    }

    #[test]
    fn uniform_selection_is_most_negative_prefix() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..100 {
            let k = rng.random_range(1..=12);
            let (errs, _) = random_instance(&mut rng, k);
            let costs = vec![1.0; k];
            let budget = rng.random_range(0..=k);
            let lp = solve_flip_lp(&errs, &costs, budget as f64).unwrap();
            let mut by_delta: Vec<usize> = (0..k).filter(|&i| errs.pair_delta(i) < 0.0).collect();
            by_delta.sort_by(|&x, &y| {
                errs.pair_delta(x)
                    .partial_cmp(&errs.pair_delta(y))
                    .unwrap()
                    .then(x.cmp(&y))
            });
            by_delta.truncate(budget);
            let mut expected = by_delta;
            expected.sort_unstable();
            assert_eq!(lp.indicator.flipped_pairs(), expected);
        }
    }

    #[test]
    fn indicator_pairing_is_enforced() {
        assert!(IndicatorVector::new(vec![1, 1, 1, 0]).is_err());
        assert!(IndicatorVector::new(vec![1, 0, 0, 1]).is_ok());
        assert!(IndicatorVector::new(vec![1, 0, 0]).is_err());
    }
}
