use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cardio_report::{run, Command, ReportError, RunConfig, RunOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cardio",
    version,
    about = "Run the cardio benchmark pipeline from a TOML config"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the configuration and exit
    Validate(Opts),
    /// Read and clean the input file
    Ingest(Opts),
    /// Ingest, then run the statistics battery
    Stats(Opts),
    /// Fit every learner with its configured hyperparameters
    Train(Opts),
    /// Cross-validated hyperparameter search
    Tune(Opts),
    /// Train, tune and score on the held-out split
    Evaluate(Opts),
    /// Evaluate, then attribute the best-calibrated boosting model
    Explain(Opts),
    /// All stages
    Run(Opts),
}

#[derive(Args)]
struct Opts {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated learner names to keep
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
}

fn load(opts: &Opts) -> Result<(RunConfig, PathBuf), String> {
    let config = RunConfig::load(&opts.config)?;
    let base = opts
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    Ok((config, base))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match cli.command {
        Cmd::Validate(o) => (None, o),
        Cmd::Ingest(o) => (Some(Command::Ingest), o),
        Cmd::Stats(o) => (Some(Command::Stats), o),
        Cmd::Train(o) => (Some(Command::Train), o),
        Cmd::Tune(o) => (Some(Command::Tune), o),
        Cmd::Evaluate(o) => (Some(Command::Evaluate), o),
        Cmd::Explain(o) => (Some(Command::Explain), o),
        Cmd::Run(o) => (Some(Command::Run), o),
    };
    let (mut config, base) = match load(&opts) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let Some(command) = command else {
        if let Some(seed) = opts.seed {
            config.seed = seed;
        }
        return match config.validate(&base, opts.models.as_deref()) {
            Ok(learners) => {
                println!(
                    "configuration OK: {} learner(s), config hash {}",
                    learners.len(),
                    config.hash()
                );
                ExitCode::SUCCESS
            }
            Err(errors) => {
                eprintln!("{}", ReportError::Invalid(errors));
                ExitCode::from(2)
            }
        };
    };
    let run_opts = RunOptions {
        out: opts.out,
        seed: opts.seed,
        models: opts.models,
    };
    match run(&config, &base, command, &run_opts) {
        Ok(outcome) => {
            let secs: f64 = outcome.manifest.timings.iter().map(|t| t.seconds).sum();
            println!(
                "{} complete: {} files in {} ({secs:.1}s)",
                command.name(),
                outcome.manifest.files.len(),
                outcome.dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e @ ReportError::Invalid(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
