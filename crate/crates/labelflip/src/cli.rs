//! Command implementations behind the `labelflip` binary.
//!
//! Each command resolves the experiment config, runs its protocol, and
//! writes reports plus a `manifest.json` capturing the fully resolved
//! config. Re-running the same subcommand from a manifest reproduces every
//! output byte-for-byte.

use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::dataset::{standardize_dataset, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::{
    budget_sweep, cost_analysis, cost_rows_to_csv, gradient_profile_for, susceptibility_report,
};
use crate::gbdt::train_gbdt;
use crate::sampling::rank_by_gradient;
use crate::seed::derive;

fn write_output(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|source| Error::OutputIo {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|source| Error::OutputIo {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize infallibly");
    text.push('\n');
    text
}

/// Runs one attack (first strategy, first budget) and writes the poisoned
/// labels plus the attack report.
pub fn cmd_attack(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let split = config.prepare_split()?;
    let params = config.attack_params();
    let strategy = config.strategy_list()?[0];
    let surrogate = config.surrogate_specs()?.remove(0);
    let fraction = config.budgets[0];
    let budget = crate::dataset::fraction_to_count(fraction, split.train.n());

    let profile = gradient_profile_for(&split, &params)?;
    let seed = derive(
        config.seed,
        &["attack", strategy.name(), &format!("{fraction}")],
    );
    let attack_config = crate::attack::AttackConfig {
        budget,
        cost_scheme: params.cost_scheme.clone(),
        a: params.a,
        b: params.b,
        t_max: params.t_max,
        seed,
        surrogate,
        validation: split.test.clone(),
    };
    let result = strategy.run(&split.train, &attack_config, &profile)?;

    let mut labels_csv = String::from("index,original,poisoned\n");
    for (i, (original, poisoned)) in split
        .train
        .labels()
        .iter()
        .zip(&result.poisoned_labels)
        .enumerate()
    {
        labels_csv.push_str(&format!("{i},{original},{poisoned}\n"));
    }

    let out = &config.output_dir;
    Ok(vec![
        write_output(out, "poisoned_labels.csv", &labels_csv)?,
        write_output(
            out,
            "attack_result.json",
            &pretty_json(&result.report_json()),
        )?,
        write_output(out, "manifest.json", &config.manifest_json("attack"))?,
    ])
}

/// Error-versus-budget curves for every victim, self-attacked by each
/// configured strategy.
pub fn cmd_sweep(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let split = config.prepare_split()?;
    let params = config.attack_params();
    let strategies = config.strategy_list()?;
    let victims = config.victim_specs()?;

    let mut files = Vec::new();
    let out = &config.output_dir;
    let mut sweeps = Vec::new();
    for victim in &victims {
        let sweep = budget_sweep(&split, &strategies, victim, &config.budgets, &params, None)?;
        sweeps.push(sweep);
    }

    let mut csv = String::from("victim,strategy,budget,error\n");
    for sweep in &sweeps {
        for line in sweep.to_csv().lines().skip(1) {
            csv.push_str(line);
            csv.push('\n');
        }
        for (strategy, body) in sweep.plot_series() {
            files.push(write_output(
                out,
                &format!("plot_{}_{}.txt", sweep.victim, strategy),
                &body,
            )?);
        }
    }
    files.push(write_output(out, "sweep.json", &pretty_json(&sweeps))?);
    files.push(write_output(out, "sweep.csv", &csv)?);
    files.push(write_output(
        out,
        "manifest.json",
        &config.manifest_json("sweep"),
    )?);
    Ok(files)
}

/// Transferability matrix over (surrogate, victim) pairs at the last
/// configured budget, plus the susceptibility view (clean-error row and
/// ranking by error increase).
pub fn cmd_transfer(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let split = config.prepare_split()?;
    let params = config.attack_params();
    let surrogates = config.surrogate_specs()?;
    let victims = config.victim_specs()?;
    let budget = *config.budgets.last().expect("validated non-empty");
    let name = config.dataset.name();

    let report = susceptibility_report(&name, &split, &surrogates, &victims, budget, &params)?;

    let out = &config.output_dir;
    Ok(vec![
        write_output(out, "transfer.json", &pretty_json(&report.matrix))?,
        write_output(out, "transfer.csv", &report.matrix.to_csv())?,
        write_output(out, "susceptibility.json", &pretty_json(&report))?,
        write_output(out, "susceptibility.csv", &report.to_csv())?,
        write_output(out, "manifest.json", &config.manifest_json("transfer"))?,
    ])
}

/// Cost-function analysis: the optimized attack under the configured cost
/// scheme (and, for comparison, under uniform costs) at every budget.
pub fn cmd_cost(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let split = config.prepare_split()?;
    let params = config.attack_params();
    let victim = config.victim_specs()?.remove(0);

    let mut configurations = Vec::new();
    for fraction in &config.budgets {
        let budget = crate::dataset::fraction_to_count(*fraction, split.train.n());
        configurations.push((crate::attack::CostScheme::Uniform, budget));
        if let crate::attack::CostScheme::Varied { large, small } = &config.cost {
            // Matching varied-cost row: scale the budget by the dominant
            // (small-pool) cost so the attainable flip count stays level.
            let scaled = (*fraction * *small * split.train.n() as f64 + 1e-9).floor() as usize;
            configurations.push((
                crate::attack::CostScheme::Varied {
                    large: *large,
                    small: *small,
                },
                scaled,
            ));
        }
    }

    let rows = cost_analysis(&split, &configurations, &victim, &params)?;
    let out = &config.output_dir;
    Ok(vec![
        write_output(out, "cost.json", &pretty_json(&rows))?,
        write_output(out, "cost.csv", &cost_rows_to_csv(&rows))?,
        write_output(out, "manifest.json", &config.manifest_json("cost"))?,
    ])
}

/// Per-instance gradient report over the whole dataset (no split): one CSV
/// row per instance with its gradient, hessian, and 1-based magnitude rank.
pub fn cmd_gradients(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let raw = config.dataset.load(derive(config.seed, &["dataset"]))?;
    let data: Dataset = if config.standardize {
        standardize_dataset(&raw)
    } else {
        raw
    };
    let (_, grads) = train_gbdt(
        &data,
        &config.classifier.gbdt,
        derive(config.seed, &["gradients"]),
    )?;
    let profile = rank_by_gradient(&grads.g);
    let mut ranks = vec![0usize; data.n()];
    for (position, &index) in profile.order().iter().enumerate() {
        ranks[index] = position + 1;
    }

    let mut csv = String::from("index,g,h,rank\n");
    for (i, (g, h)) in grads.g.iter().zip(&grads.h).enumerate() {
        csv.push_str(&format!("{i},{g},{h},{}\n", ranks[i]));
    }

    let out = &config.output_dir;
    Ok(vec![
        write_output(out, "gradients.csv", &csv)?,
        write_output(out, "manifest.json", &config.manifest_json("gradients"))?,
    ])
}

/// Dispatches a named subcommand; used by `main` and the integration tests.
pub fn run_command(command: &str, config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    match command {
        "attack" => cmd_attack(config),
        "sweep" => cmd_sweep(config),
        "transfer" => cmd_transfer(config),
        "cost" => cmd_cost(config),
        "gradients" => cmd_gradients(config),
        other => Err(Error::InvalidConfig(format!("unknown command `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::CostScheme;
    use crate::config::DatasetSource;

    fn temp_config(out: &Path) -> ExperimentConfig {
        let mut config = ExperimentConfig::default();
        config.dataset = DatasetSource::SyntheticLinear { n: 120, noise: 1.0 };
        config.train_fraction = 0.5;
        config.budgets = vec![0.0, 0.1];
        config.t_max = 2;
        config.classifier.max_iterations = 60;
        config.classifier.gbdt.num_trees = 8;
        config.output_dir = out.to_path_buf();
        config.validate().unwrap();
        config
    }

    #[test]
    fn attack_with_zero_budget_writes_identical_labels() {
        let dir = tempfile::tempdir().unwrap();
        let config = temp_config(dir.path());
        let files = cmd_attack(&config).unwrap();
        let csv = std::fs::read_to_string(&files[0]).unwrap();
        for line in csv.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[1], fields[2], "budget 0 must not flip: {line}");
        }
        assert!(files.iter().any(|f| f.ends_with("manifest.json")));
    }

    #[test]
    fn gradient_report_ranks_are_a_permutation() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = temp_config(dir.path());
        config.dataset = DatasetSource::SyntheticLinear { n: 10, noise: 1.0 };
        let files = cmd_gradients(&config).unwrap();
        let csv = std::fs::read_to_string(&files[0]).unwrap();
        let mut ranks: Vec<usize> = csv
            .lines()
            .skip(1)
            .map(|line| line.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(ranks.len(), 10);
        ranks.sort_unstable();
        assert_eq!(ranks, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn transfer_single_pair_emits_cell_and_clean_row() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = temp_config(dir.path());
        config.budgets = vec![0.2];
        let files = cmd_transfer(&config).unwrap();
        let matrix: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
        assert_eq!(matrix["cells"].as_array().unwrap().len(), 1);
        assert_eq!(matrix["cells"][0].as_array().unwrap().len(), 1);
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&files[2]).unwrap()).unwrap();
        assert_eq!(report["clean_errors"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn sweep_emits_two_points_per_strategy() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = temp_config(dir.path());
        config.strategies = vec!["ogds".into(), "linear_flip".into()];
        let files = cmd_sweep(&config).unwrap();
        let csv_path = files.iter().find(|f| f.ends_with("sweep.csv")).unwrap();
        let csv = std::fs::read_to_string(csv_path).unwrap();
        assert_eq!(
            csv.lines().count(),
            1 + 2 * 2,
            "header + 2 strategies x 2 budgets"
        );
    }

    #[test]
    fn cost_command_emits_uniform_and_varied_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = temp_config(dir.path());
        config.budgets = vec![0.2];
        config.cost = CostScheme::Varied {
            large: 1.0,
            small: 2.0,
        };
        let files = cmd_cost(&config).unwrap();
        let csv = std::fs::read_to_string(&files[1]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3, "header + uniform + varied");
        assert!(lines[1].starts_with("uniform,"));
        assert!(lines[2].starts_with("varied[1,2],"));
    }
}
