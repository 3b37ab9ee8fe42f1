//! `seqlimit`: command-line front end.

mod commands;
mod experiment;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(
    name = "seqlimit",
    version,
    about = "Subsequence densities, word limits and permutons"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Seed for every randomized computation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (falls back to SEQLIMIT_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// JSON file with defaults for seed, threads and format.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    threads: Option<usize>,
    format: Option<Format>,
}

/// Resolved global settings.
#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub seed: u64,
    pub format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Uniformity and quasirandomness diagnostics of a binary word.
    Analyze(commands::AnalyzeArgs),
    /// Subsequence density of a word or limit function.
    Density(commands::DensityArgs),
    /// Distance between two limit functions or words.
    Distance(commands::DistanceArgs),
    /// Random words from a limit, or a tail experiment.
    Sample(commands::SampleArgs),
    /// Weak regularity partition of a limit function.
    Regularize(commands::RegularizeArgs),
    /// Sample-and-check tester for a forbidden-subsequence property.
    Test(commands::TestArgs),
    /// Forcibility certificate of a piecewise-polynomial limit.
    Forcibility(commands::ForcibilityArgs),
    /// Permutation and permuton pattern densities.
    #[command(subcommand)]
    Permuton(commands::PermutonCommand),
    /// Batch of named experiments from a JSON spec.
    Experiment(experiment::ExperimentArgs),
}

/// Error with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2.
    Usage(String),
    /// Exit 1.
    Domain(String),
}

impl From<seqlimit::Error> for CliError {
    fn from(e: seqlimit::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn settings(global: &GlobalArgs) -> CliResult<(Settings, Option<usize>)> {
    let config = match &global.config {
        Some(path) => {
            let text = commands::read_text(path)?;
            serde_json::from_str::<ConfigFile>(&text).map_err(|e| {
                CliError::Usage(format!("{}: line {}: {e}", path.display(), e.line()))
            })?
        }
        None => ConfigFile::default(),
    };
    let env_threads = match std::env::var("SEQLIMIT_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("SEQLIMIT_THREADS={v:?} is not a count")))?,
        ),
        Err(_) => None,
    };
    let threads = global.threads.or(config.threads).or(env_threads);
    Ok((
        Settings {
            seed: global.seed.or(config.seed).unwrap_or(0),
            format: global.format.or(config.format).unwrap_or(Format::Json),
        },
        threads,
    ))
}

fn run(cli: Cli) -> CliResult<String> {
    let (settings, threads) = settings(&cli.global)?;
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let doc = match cli.command {
        Command::Analyze(a) => commands::analyze(a, &settings)?,
        Command::Density(a) => commands::density(a, &settings)?,
        Command::Distance(a) => commands::distance(a, &settings)?,
        Command::Sample(a) => commands::sample(a, &settings)?,
        Command::Regularize(a) => commands::regularize(a, &settings)?,
        Command::Test(a) => commands::test(a, &settings)?,
        Command::Forcibility(a) => commands::forcibility(a, &settings)?,
        Command::Permuton(c) => commands::permuton(c, &settings)?,
        Command::Experiment(a) => experiment::run(a, &settings)?,
    };
    Ok(doc.render(settings.format))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
