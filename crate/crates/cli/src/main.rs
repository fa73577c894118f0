//! Command line front end for the clinical-language pipeline. Every
//! subcommand is a single process that reads and writes the documented file
//! formats, logs to standard error, and exits 0 on success, 1 when the
//! inputs or flags are at fault, and 2 on runtime failure.

mod commands;
mod config;

use std::path::PathBuf;

use care_sd_core::Result;
use clap::{Parser, Subcommand};

use crate::config::FileConfig;

#[derive(Debug, Parser)]
#[command(
    name = "care-sd",
    version,
    about = "Detect stigmatizing and doubt-expressing language in clinical notes",
    propagate_version = true
)]
struct Cli {
    /// Key-value run configuration; flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment a notes CSV into the deduplicated sentence table.
    Ingest(commands::ingest::IngestArgs),
    /// Summarize a corpus: note, sentence, patient, and provider counts.
    Stats(commands::ingest::StatsArgs),
    /// Run one detector over the sentence table.
    Scan(commands::scan::ScanArgs),
    /// Draw annotation batches from scan matches.
    Sample(commands::annotate::SampleArgs),
    /// Score two annotators' sheets against each other.
    Agreement(commands::annotate::AgreementArgs),
    /// Merge annotator sheets into final labels.
    Adjudicate(commands::annotate::AdjudicateArgs),
    /// Concatenate per-batch labels into one training dataset.
    MergeLabels(commands::annotate::MergeLabelsArgs),
    /// Fit the three classifier families with grid-searched parameters.
    Train(commands::train::TrainArgs),
    /// Score saved models on the held-out split with bootstrap intervals.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Extract each model family's most influential n-grams.
    Importance(commands::evaluate::ImportanceArgs),
    /// Tabulate matched terms and quoted n-grams.
    Report(commands::report::ReportArgs),
    /// Manage lexicons: expand, prune, retire noise, compile.
    #[command(subcommand)]
    Lexicon(commands::lexicon::LexiconCommand),
    /// Generate a synthetic corpus with known ground truth.
    Synth(commands::synth::SynthArgs),
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::warn!("could not cap worker threads: {e}");
        }
    }
    let config = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::empty(),
    };
    match cli.command {
        Command::Ingest(args) => commands::ingest::run_ingest(args, &config),
        Command::Stats(args) => commands::ingest::run_stats(args, &config),
        Command::Scan(args) => commands::scan::run(args, &config),
        Command::Sample(args) => commands::annotate::run_sample(args, &config),
        Command::Agreement(args) => commands::annotate::run_agreement(args, &config),
        Command::Adjudicate(args) => commands::annotate::run_adjudicate(args, &config),
        Command::MergeLabels(args) => commands::annotate::run_merge_labels(args, &config),
        Command::Train(args) => commands::train::run(args, &config),
        Command::Evaluate(args) => commands::evaluate::run_evaluate(args, &config),
        Command::Importance(args) => commands::evaluate::run_importance(args, &config),
        Command::Report(args) => commands::report::run(args, &config),
        Command::Lexicon(command) => commands::lexicon::run(command, &config),
        Command::Synth(args) => commands::synth::run(args, &config),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().expect("writing clap output");
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        log::error!("{e}");
        std::process::exit(if e.is_usage() { 1 } else { 2 });
    }
}
