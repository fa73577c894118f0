//! `lexicon` manages term lists: `expand` proposes new candidates from an
//! embedding model, `prune` applies reviewed keep/drop decisions, `noise`
//! retires terms that matched too much irrelevant text, and `compile`
//! validates that a lexicon builds into a matcher.

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use care_sd_core::embedding::{self, EmbeddingModel};
use care_sd_core::lexicon::{Lexicon, PruneDecision, TermOrigin};
use care_sd_core::matcher::CompiledMatcher;
use care_sd_core::{BiasFeature, Error, Result};
use clap::{Args, Subcommand};

use crate::config::{require_path, FileConfig};

#[derive(Debug, Subcommand)]
pub enum LexiconCommand {
    /// Propose expansion candidates for each stem by embedding similarity.
    Expand(ExpandArgs),
    /// Apply reviewed keep/drop decisions to expansion candidates.
    Prune(PruneArgs),
    /// Mark listed terms as noise so the matcher skips them.
    Noise(NoiseArgs),
    /// Compile a lexicon and print what the matcher would search for.
    Compile(CompileArgs),
}

pub fn run(command: LexiconCommand, config: &FileConfig) -> Result<()> {
    match command {
        LexiconCommand::Expand(args) => run_expand(args, config),
        LexiconCommand::Prune(args) => run_prune(args, config),
        LexiconCommand::Noise(args) => run_noise(args, config),
        LexiconCommand::Compile(args) => run_compile(args, config),
    }
}

fn lexicon_path(
    flag: Option<PathBuf>,
    feature: BiasFeature,
    config: &FileConfig,
) -> Result<PathBuf> {
    let key = format!("lexicon.{feature}");
    require_path(flag, config, &key)
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    /// Feature whose lexicon is being grown.
    #[arg(long)]
    feature: BiasFeature,
    /// Lexicon file holding the stems.
    #[arg(long, value_name = "FILE")]
    lexicon: Option<PathBuf>,
    /// Word embeddings in word2vec text format.
    #[arg(long, value_name = "FILE")]
    embeddings: Option<PathBuf>,
    /// Nearest neighbors proposed per stem.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Extra candidate term files (one term per line, # comments).
    #[arg(long = "candidates", value_name = "FILE")]
    candidates: Vec<PathBuf>,
    /// Import the proposals into the lexicon instead of only listing them.
    #[arg(long, requires = "lexicon_out")]
    apply: bool,
    /// Grown lexicon to write when importing.
    #[arg(long, value_name = "FILE", requires = "apply")]
    lexicon_out: Option<PathBuf>,
    /// Candidate edge table to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

fn load_term_list(path: &Path) -> Result<Vec<String>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut terms = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let term = line.trim();
        if term.is_empty() || term.starts_with('#') {
            continue;
        }
        terms.push(term.to_lowercase());
    }
    Ok(terms)
}

fn run_expand(args: ExpandArgs, config: &FileConfig) -> Result<()> {
    let mut lexicon =
        Lexicon::load(lexicon_path(args.lexicon, args.feature, config)?, args.feature)?;
    let stems = lexicon.stems();
    if stems.is_empty() {
        return Err(Error::Invalid(format!(
            "the {} lexicon has no stem entries to expand",
            args.feature
        )));
    }
    let embeddings_path = require_path(args.embeddings, config, "embeddings")?;
    let model = EmbeddingModel::load_word2vec_text(&embeddings_path)?;
    log::info!(
        "loaded {} vectors of dimension {} from {}",
        model.len(),
        model.dim(),
        embeddings_path.display()
    );
    let edges = embedding::expand_with_embeddings(&stems, &model, args.k);
    log::info!("proposed {} candidates from {} stems", edges.len(), stems.len());
    embedding::write_edges_tsv(&args.out, &edges)?;
    log::info!("wrote {}", args.out.display());
    if args.apply {
        let report =
            lexicon.import_expansions(edges.iter().map(|e| (&e.stem, &e.candidate)));
        log::info!(
            "imported {} embedding candidates ({} already present)",
            report.added,
            report.duplicates
        );
        for path in &args.candidates {
            let terms = load_term_list(path)?;
            let report = lexicon.import_candidates(&terms, TermOrigin::Generated);
            log::info!(
                "imported {} terms from {} ({} already present)",
                report.added,
                path.display(),
                report.duplicates
            );
        }
        let out = args.lexicon_out.expect("clap enforces --lexicon-out with --apply");
        lexicon.save(&out)?;
        log::info!("wrote {} ({} active terms)", out.display(), lexicon.active_count());
    } else if !args.candidates.is_empty() {
        return Err(Error::Config(
            "--candidates files are only imported with --apply".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    /// Feature whose lexicon is being pruned.
    #[arg(long)]
    feature: BiasFeature,
    /// Lexicon file to update.
    #[arg(long, value_name = "FILE")]
    lexicon: Option<PathBuf>,
    /// Reviewed decisions: `term<TAB>keep_a<TAB>keep_b<TAB>final_keep`
    /// with header, flags 0 or 1.
    #[arg(long, value_name = "FILE")]
    decisions: PathBuf,
    /// Updated lexicon to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

pub const DECISIONS_TSV_HEADER: &str = "term\tkeep_a\tkeep_b\tfinal_keep";

fn parse_decision_flag(raw: &str, path: &Path, lineno: usize) -> Result<bool> {
    match raw {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::format(
            path,
            lineno,
            format!("decision flags must be 0 or 1, found {other:?}"),
        )),
    }
}

fn load_decisions(path: &Path) -> Result<Vec<PruneDecision>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decisions = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if lineno == 0 {
            if line != DECISIONS_TSV_HEADER {
                return Err(Error::format(
                    path,
                    1,
                    "expected header `term\\tkeep_a\\tkeep_b\\tfinal_keep`",
                ));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::format(
                path,
                lineno + 1,
                format!("expected 4 columns, found {}", fields.len()),
            ));
        }
        decisions.push(PruneDecision {
            term: fields[0].to_string(),
            keep_a: parse_decision_flag(fields[1], path, lineno + 1)?,
            keep_b: parse_decision_flag(fields[2], path, lineno + 1)?,
            final_keep: parse_decision_flag(fields[3], path, lineno + 1)?,
        });
    }
    Ok(decisions)
}

fn run_prune(args: PruneArgs, config: &FileConfig) -> Result<()> {
    let mut lexicon =
        Lexicon::load(lexicon_path(args.lexicon, args.feature, config)?, args.feature)?;
    let decisions = load_decisions(&args.decisions)?;
    let agreement = lexicon.apply_prune_decisions(&decisions)?;
    log::info!(
        "applied {} decisions (reviewers agreed on {:.1}%); {} terms remain active",
        decisions.len(),
        agreement * 100.0,
        lexicon.active_count()
    );
    lexicon.save(&args.out)?;
    log::info!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Feature whose lexicon is being cleaned.
    #[arg(long)]
    feature: BiasFeature,
    /// Lexicon file to update.
    #[arg(long, value_name = "FILE")]
    lexicon: Option<PathBuf>,
    /// Terms to retire, one per line; `#` starts a comment.
    #[arg(long, value_name = "FILE")]
    terms: PathBuf,
    /// Updated lexicon to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

fn run_noise(args: NoiseArgs, config: &FileConfig) -> Result<()> {
    let mut lexicon =
        Lexicon::load(lexicon_path(args.lexicon, args.feature, config)?, args.feature)?;
    let file = std::fs::File::open(&args.terms).map_err(|e| Error::io(&args.terms, e))?;
    let mut terms = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(&args.terms, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        terms.push(trimmed.to_string());
    }
    let unknown = lexicon.remove_noise_terms(&terms);
    log::info!(
        "retired {} of {} listed terms; {} remain active",
        terms.len() - unknown.len(),
        terms.len(),
        lexicon.active_count()
    );
    lexicon.save(&args.out)?;
    log::info!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    /// Feature the lexicon belongs to.
    #[arg(long)]
    feature: BiasFeature,
    /// Lexicon file to check.
    #[arg(long, value_name = "FILE")]
    lexicon: Option<PathBuf>,
}

fn run_compile(args: CompileArgs, config: &FileConfig) -> Result<()> {
    let path = lexicon_path(args.lexicon, args.feature, config)?;
    let lexicon = Lexicon::load(&path, args.feature)?;
    let matcher = CompiledMatcher::compile(&lexicon)?;
    println!(
        "{}: {} entries, {} active, {} patterns compiled",
        args.feature,
        lexicon.entries().len(),
        lexicon.active_count(),
        matcher.patterns().len()
    );
    Ok(())
}
