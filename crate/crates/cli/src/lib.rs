//! `kgforge`: enrich a knowledge graph with LLM prompts, compose the
//! resulting bundles into a dataset, and compare structure-based models
//! trained on the original and augmented graphs.

pub mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgforge_core::prompt::RelationMode;

/// Bad configuration or arguments; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Some items failed but their bundles were written; exits with status 1.
#[derive(Debug)]
pub struct PartialFailure(pub usize);

impl std::fmt::Display for PartialFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} item(s) failed; rerun with --allow-partial to accept", self.0)
    }
}

impl std::error::Error for PartialFailure {}

#[derive(Debug, Parser)]
#[command(name = "kgforge", version, about = "Knowledge-graph enrichment and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print entity, relation and split counts of a dataset.
    Stats(StatsArgs),
    /// Query the LLM for one or more strategies and write bundles.
    Enrich(EnrichArgs),
    /// Apply bundles to their base dataset.
    Compose(ComposeArgs),
    /// Train on base and augmented datasets and compare link prediction.
    Eval(EvalArgs),
    /// Write a bundled dataset with its replay fixture and a sample config.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub root: PathBuf,
    /// Drop dangling triples instead of failing.
    #[arg(long)]
    pub lenient: bool,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum StrategyArg {
    /// Entity description expansion.
    #[value(name = "E", alias = "e", alias = "entity")]
    E,
    /// Relation explanation.
    #[value(name = "R", alias = "r", alias = "relation")]
    R,
    /// Keyword-based structure extraction.
    #[value(name = "S", alias = "s", alias = "structure")]
    S,
}

#[derive(Debug, Args)]
pub struct EnrichArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long = "strategy", required = true, value_enum)]
    pub strategies: Vec<StrategyArg>,
    /// Partners per entity for S.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, overrides_with = "no_self_loop")]
    pub self_loop: bool,
    #[arg(long)]
    pub no_self_loop: bool,
    /// Relation modes for R, e.g. `global,reverse` or `g,l`.
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<RelationMode>>,
    /// Token budget for E.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit 0 even if some items failed.
    #[arg(long)]
    pub allow_partial: bool,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    /// Base dataset; defaults to the config's dataset root.
    #[arg(long)]
    pub base: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "bundle")]
    pub bundles: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Training settings and seed; defaults apply without one.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub base: PathBuf,
    #[arg(long)]
    pub augmented: PathBuf,
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Where to write comparison.json and comparison.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureKind {
    /// Eight-entity film graph.
    Toy,
    /// 60-entity graph with five planted alias pairs.
    Synthetic,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    #[arg(value_enum)]
    pub kind: FixtureKind,
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs a parsed command line and maps errors to exit codes.
pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Stats(a) => commands::stats(&a),
        Command::Enrich(a) => commands::enrich(&a),
        Command::Compose(a) => commands::compose(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Fixtures(a) => commands::fixtures(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
