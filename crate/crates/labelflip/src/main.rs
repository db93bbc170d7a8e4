use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use labelflip::cli::run_command;
use labelflip::config::ExperimentConfig;

/// Label-flip data poisoning attacks against binary classifiers.
#[derive(Parser)]
#[command(name = "labelflip", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment config; every field has a default when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override (flag wins over the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Cap on concurrently evaluated grid cells.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Disable feature standardization.
    #[arg(long = "no-standardize", global = true)]
    no_standardize: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one attack and write the poisoned labels.
    Attack,
    /// Error-versus-budget curves per strategy and victim.
    Sweep,
    /// Transferability matrix plus susceptibility report.
    Transfer,
    /// Cost-function analysis rows.
    Cost,
    /// Per-instance gradient/rank report.
    Gradients,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Attack => "attack",
            Command::Sweep => "sweep",
            Command::Transfer => "transfer",
            Command::Cost => "cost",
            Command::Gradients => "gradients",
        }
    }
}

fn run(cli: Cli) -> labelflip::Result<Vec<PathBuf>> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    if cli.no_standardize {
        config.standardize = false;
    }
    config.validate()?;

    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .ok();
    }

    run_command(cli.command.name(), &config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    match run(cli) {
        Ok(files) => {
            for file in files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprint!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                eprint!(": {cause}");
                source = cause.source();
            }
            eprintln!();
            ExitCode::from(e.exit_code())
        }
    }
}
