//! Experiment protocols: budget sweeps, transferability matrices, cost
//! analysis, and susceptibility reports.
//!
//! Every protocol follows the same discipline: the attack only ever touches
//! the training side of a split, reported errors are computed on the
//! held-out test side, and each grid cell derives its seed from the master
//! seed plus the cell coordinates, so any single cell can be re-run in
//! isolation and reproduce its value bit-exactly. Cells are independent and
//! may run in parallel; results are gathered by coordinate.
//!
//! The validation set driving each attack's inner argmax is the same
//! held-out set used for the final reported error — the optimistic-attacker
//! convention.

use rayon::prelude::*;
use serde::Serialize;

use crate::attack::{ogds, AttackConfig, CostScheme, Strategy};
use crate::classifier::ClassifierSpec;
use crate::dataset::{fraction_to_count, TrainTestSplit};
use crate::error::{Error, Result};
use crate::gbdt::{train_gbdt, GbdtParams};
use crate::sampling::{rank_by_gradient, GradientProfile};
use crate::seed::derive;

/// Attack knobs shared by every cell of a protocol run.
#[derive(Debug, Clone)]
pub struct AttackParams {
    pub a: f64,
    pub b: f64,
    pub t_max: usize,
    pub cost_scheme: CostScheme,
    pub master_seed: u64,
    /// Parameters of the boosted-tree gradient engine.
    pub gbdt: GbdtParams,
}

impl Default for AttackParams {
    fn default() -> Self {
        Self {
            a: 0.01,
            b: 0.49,
            t_max: 20,
            cost_scheme: CostScheme::Uniform,
            master_seed: 0,
            gbdt: GbdtParams::default(),
        }
    }
}

/// One clean-data boosted-tree fit supplies the gradients every strategy
/// consumes.
pub fn gradient_profile_for(
    split: &TrainTestSplit,
    params: &AttackParams,
) -> Result<GradientProfile> {
    let (_, grads) = train_gbdt(
        &split.train,
        &params.gbdt,
        derive(params.master_seed, &["gradients"]),
    )?;
    Ok(rank_by_gradient(&grads.g))
}

fn attack_config(
    params: &AttackParams,
    split: &TrainTestSplit,
    surrogate: &ClassifierSpec,
    budget: usize,
    seed: u64,
) -> AttackConfig {
    AttackConfig {
        budget,
        cost_scheme: params.cost_scheme.clone(),
        a: params.a,
        b: params.b,
        t_max: params.t_max,
        seed,
        surrogate: surrogate.clone(),
        validation: split.test.clone(),
    }
}

/// Fits `victim` on the given labels over the train side and reports its
/// test error.
fn victim_error(
    split: &TrainTestSplit,
    victim: &ClassifierSpec,
    labels: &[i8],
    seed: u64,
) -> Result<f64> {
    let train = split.train.with_labels(labels.to_vec())?;
    let model = victim.fit(&train, seed)?;
    model.error_rate(&split.test)
}

fn clean_victim_error(split: &TrainTestSplit, victim: &ClassifierSpec, seed: u64) -> Result<f64> {
    victim_error(split, victim, split.train.labels(), seed)
}

#[derive(Debug, Clone, Serialize)]
pub struct StrategyCurve {
    pub strategy: String,
    pub errors: Vec<f64>,
}

/// Error-versus-budget curves for one victim.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub victim: String,
    pub surrogate: String,
    pub budgets: Vec<f64>,
    pub clean_error: f64,
    pub curves: Vec<StrategyCurve>,
}

impl SweepResult {
    pub fn curve(&self, strategy: Strategy) -> Option<&StrategyCurve> {
        self.curves.iter().find(|c| c.strategy == strategy.name())
    }

    /// One row per (strategy, budget) point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("victim,strategy,budget,error\n");
        for curve in &self.curves {
            for (budget, error) in self.budgets.iter().zip(&curve.errors) {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    self.victim, curve.strategy, budget, error
                ));
            }
        }
        out
    }

    /// Two-column plain-text plot data, one series per strategy.
    pub fn plot_series(&self) -> Vec<(String, String)> {
        self.curves
            .iter()
            .map(|curve| {
                let mut body = String::new();
                for (budget, error) in self.budgets.iter().zip(&curve.errors) {
                    body.push_str(&format!("{budget} {error}\n"));
                }
                (curve.strategy.clone(), body)
            })
            .collect()
    }
}

/// Runs every (strategy, budget) cell: attack the train side, refit the
/// victim on the poisoned labels, record its test error. Budget 0
/// short-circuits to the clean fit. `surrogate` defaults to the victim
/// itself (self-attack).
pub fn budget_sweep(
    split: &TrainTestSplit,
    strategies: &[Strategy],
    victim: &ClassifierSpec,
    budgets: &[f64],
    params: &AttackParams,
    surrogate: Option<&ClassifierSpec>,
) -> Result<SweepResult> {
    validate_budgets(budgets)?;
    let surrogate = surrogate.unwrap_or(victim);
    let profile = gradient_profile_for(split, params)?;
    let n_train = split.train.n();
    let clean_error = clean_victim_error(
        split,
        victim,
        derive(params.master_seed, &["sweep-clean", victim.name()]),
    )?;

    let cells: Vec<(usize, usize)> = (0..strategies.len())
        .flat_map(|s| (0..budgets.len()).map(move |b| (s, b)))
        .collect();
    let results: Vec<((usize, usize), f64)> = cells
        .into_par_iter()
        .map(|(si, bi)| {
            let strategy = strategies[si];
            let fraction = budgets[bi];
            if fraction == 0.0 {
                return Ok(((si, bi), clean_error));
            }
            let budget = fraction_to_count(fraction, n_train);
            let budget_tag = format!("{fraction}");
            let seed = derive(
                params.master_seed,
                &["sweep", strategy.name(), victim.name(), &budget_tag],
            );
            let config = attack_config(params, split, surrogate, budget, seed);
            let attack = strategy.run(&split.train, &config, &profile)?;
            let error = victim_error(split, victim, &attack.poisoned_labels, seed)?;
            Ok(((si, bi), error))
        })
        .collect::<Result<_>>()?;

    let mut curves: Vec<StrategyCurve> = strategies
        .iter()
        .map(|s| StrategyCurve {
            strategy: s.name().to_string(),
            errors: vec![0.0; budgets.len()],
        })
        .collect();
    for ((si, bi), error) in results {
        curves[si].errors[bi] = error;
    }
    Ok(SweepResult {
        victim: victim.name().to_string(),
        surrogate: surrogate.name().to_string(),
        budgets: budgets.to_vec(),
        clean_error,
        curves,
    })
}

fn validate_budgets(budgets: &[f64]) -> Result<()> {
    if budgets.is_empty() {
        return Err(Error::InvalidParameter(
            "budget list must be non-empty".into(),
        ));
    }
    for pair in budgets.windows(2) {
        if pair[1] < pair[0] {
            return Err(Error::InvalidParameter(
                "budgets must be sorted ascending".into(),
            ));
        }
    }
    if budgets.iter().any(|b| !(0.0..=1.0).contains(b)) {
        return Err(Error::InvalidParameter(
            "budget fractions must lie in [0, 1]".into(),
        ));
    }
    Ok(())
}

/// Victim error per (surrogate, victim) pair under the optimized attack.
#[derive(Debug, Clone, Serialize)]
pub struct TransferMatrix {
    pub dataset: String,
    pub budget: f64,
    pub surrogates: Vec<String>,
    pub victims: Vec<String>,
    /// `cells[s][v]` is the test error of victim `v` trained on the labels
    /// poisoned against surrogate `s`.
    pub cells: Vec<Vec<f64>>,
    /// Per surrogate: the victims (all ties) attaining the maximal
    /// off-diagonal error, the usual transferability highlight.
    pub best_transfer: Vec<Vec<String>>,
}

impl TransferMatrix {
    pub fn cell(&self, surrogate: &str, victim: &str) -> Option<f64> {
        let s = self.surrogates.iter().position(|name| name == surrogate)?;
        let v = self.victims.iter().position(|name| name == victim)?;
        Some(self.cells[s][v])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("surrogate,victim,error\n");
        for (s, row) in self.cells.iter().enumerate() {
            for (v, error) in row.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    self.surrogates[s], self.victims[v], error
                ));
            }
        }
        out
    }
}

/// For each surrogate, runs the optimized attack once on the train side at
/// `budget_fraction`, then fits every victim on those poisoned labels.
pub fn transferability_matrix(
    dataset: &str,
    split: &TrainTestSplit,
    surrogates: &[ClassifierSpec],
    victims: &[ClassifierSpec],
    budget_fraction: f64,
    params: &AttackParams,
) -> Result<TransferMatrix> {
    if !(0.0..=1.0).contains(&budget_fraction) {
        return Err(Error::InvalidParameter(format!(
            "budget fraction must lie in [0, 1], got {budget_fraction}"
        )));
    }
    let profile = gradient_profile_for(split, params)?;
    let budget = fraction_to_count(budget_fraction, split.train.n());
    let budget_tag = format!("{budget_fraction}");

    let rows: Vec<Vec<f64>> = surrogates
        .par_iter()
        .map(|surrogate| {
            let seed = derive(
                params.master_seed,
                &["transfer", surrogate.name(), &budget_tag],
            );
            let labels = if budget == 0 {
                split.train.labels().to_vec()
            } else {
                let config = attack_config(params, split, surrogate, budget, seed);
                ogds(&split.train, &config, &profile)?.poisoned_labels
            };
            victims
                .iter()
                .map(|victim| {
                    let fit_seed = derive(
                        params.master_seed,
                        &[
                            "transfer-victim",
                            surrogate.name(),
                            victim.name(),
                            &budget_tag,
                        ],
                    );
                    victim_error(split, victim, &labels, fit_seed)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let best_transfer = rows
        .iter()
        .enumerate()
        .map(|(s, row)| {
            let mut best = f64::NEG_INFINITY;
            for (v, error) in row.iter().enumerate() {
                if victims[v].name() != surrogates[s].name() && *error > best {
                    best = *error;
                }
            }
            row.iter()
                .enumerate()
                .filter(|(v, error)| victims[*v].name() != surrogates[s].name() && **error == best)
                .map(|(v, _)| victims[v].name().to_string())
                .collect()
        })
        .collect();

    Ok(TransferMatrix {
        dataset: dataset.to_string(),
        budget: budget_fraction,
        surrogates: surrogates.iter().map(|s| s.name().to_string()).collect(),
        victims: victims.iter().map(|v| v.name().to_string()).collect(),
        cells: rows,
        best_transfer,
    })
}

/// One cost-analysis configuration and its outcome.
#[derive(Debug, Clone, Serialize)]
pub struct CostAnalysisRow {
    pub cost_scheme: String,
    pub budget: usize,
    pub error: f64,
    pub flips: usize,
    /// Flips from the large-gradient pool.
    pub count_a: usize,
    /// Flips from the small-gradient pool.
    pub count_b: usize,
}

pub fn cost_rows_to_csv(rows: &[CostAnalysisRow]) -> String {
    let mut out = String::from("cost_scheme,budget,error,flips,count_a,count_b\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.cost_scheme, row.budget, row.error, row.flips, row.count_a, row.count_b
        ));
    }
    out
}

/// Runs the optimized attack once per (cost scheme, budget) configuration
/// against `victim` (also used as the surrogate) and reports the victim
/// error plus the flip composition.
pub fn cost_analysis(
    split: &TrainTestSplit,
    configurations: &[(CostScheme, usize)],
    victim: &ClassifierSpec,
    params: &AttackParams,
) -> Result<Vec<CostAnalysisRow>> {
    let profile = gradient_profile_for(split, params)?;
    configurations
        .par_iter()
        .map(|(scheme, budget)| {
            let seed = derive(
                params.master_seed,
                &["cost", &scheme.label(), &budget.to_string(), victim.name()],
            );
            let mut cell_params = params.clone();
            cell_params.cost_scheme = scheme.clone();
            let error;
            let attack;
            if *budget == 0 {
                error = clean_victim_error(split, victim, seed)?;
                attack = None;
            } else {
                let config = attack_config(&cell_params, split, victim, *budget, seed);
                let result = ogds(&split.train, &config, &profile)?;
                error = victim_error(split, victim, &result.poisoned_labels, seed)?;
                attack = Some(result);
            }
            let (flips, count_a, count_b) = attack
                .map(|a| (a.flip_count(), a.count_large_flipped, a.count_small_flipped))
                .unwrap_or((0, 0, 0));
            Ok(CostAnalysisRow {
                cost_scheme: scheme.label(),
                budget: *budget,
                error,
                flips,
                count_a,
                count_b,
            })
        })
        .collect()
}

/// Transfer matrix augmented with each victim's clean error and a ranking
/// by error increase under the strongest surrogate.
#[derive(Debug, Clone, Serialize)]
pub struct SusceptibilityReport {
    pub matrix: TransferMatrix,
    /// Clean test error per victim, aligned with `matrix.victims`.
    pub clean_errors: Vec<f64>,
    pub ranking: Vec<SusceptibilityEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SusceptibilityEntry {
    pub victim: String,
    pub clean_error: f64,
    pub max_attacked_error: f64,
    pub increase: f64,
}

impl SusceptibilityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("victim,clean_error,max_attacked_error,increase\n");
        for entry in &self.ranking {
            out.push_str(&format!(
                "{},{},{},{}\n",
                entry.victim, entry.clean_error, entry.max_attacked_error, entry.increase
            ));
        }
        out
    }
}

pub fn susceptibility_report(
    dataset: &str,
    split: &TrainTestSplit,
    surrogates: &[ClassifierSpec],
    victims: &[ClassifierSpec],
    budget_fraction: f64,
    params: &AttackParams,
) -> Result<SusceptibilityReport> {
    let matrix =
        transferability_matrix(dataset, split, surrogates, victims, budget_fraction, params)?;
    let clean_errors: Vec<f64> = victims
        .iter()
        .map(|victim| {
            let seed = derive(params.master_seed, &["susceptibility-clean", victim.name()]);
            clean_victim_error(split, victim, seed)
        })
        .collect::<Result<_>>()?;

    let mut ranking: Vec<SusceptibilityEntry> = victims
        .iter()
        .enumerate()
        .map(|(v, victim)| {
            let max_attacked_error = matrix
                .cells
                .iter()
                .map(|row| row[v])
                .fold(f64::NEG_INFINITY, f64::max);
            SusceptibilityEntry {
                victim: victim.name().to_string(),
                clean_error: clean_errors[v],
                max_attacked_error,
                increase: max_attacked_error - clean_errors[v],
            }
        })
        .collect();
    ranking.sort_by(|a, b| {
        b.increase
            .partial_cmp(&a.increase)
            .unwrap()
            .then(a.victim.cmp(&b.victim))
    });

    Ok(SusceptibilityReport {
        matrix,
        clean_errors,
        ranking,
    })
}
