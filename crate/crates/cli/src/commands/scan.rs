//! `scan` runs one detector over a sentence table and records every match
//! with its byte spans.

use std::path::PathBuf;

use care_sd_core::corpus;
use care_sd_core::detect::{self, ScareQuoteConfig};
use care_sd_core::lexicon::Lexicon;
use care_sd_core::matcher::CompiledMatcher;
use care_sd_core::{BiasFeature, Error, Result};
use clap::Args;

use crate::config::{optional_path, require_path, FileConfig};

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Detector to run: doubt_markers, stigmatizing_labels, or scare_quotes.
    #[arg(long)]
    feature: BiasFeature,
    /// Sentence table produced by `ingest`.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Match table to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Lexicon file (lexicon-backed features only).
    #[arg(long, value_name = "FILE")]
    lexicon: Option<PathBuf>,
    /// Quoted-span boilerplate filter, one fragment per line (scare quotes
    /// only).
    #[arg(long, value_name = "FILE")]
    placeholders: Option<PathBuf>,
    /// Token accepted as a patient reference; repeatable (scare quotes only).
    #[arg(long = "patient-token", value_name = "TOKEN")]
    patient_token: Vec<String>,
    /// Require a patient reference before the opening quote instead of
    /// anywhere in the sentence.
    #[arg(long)]
    require_preceding: bool,
    /// Treat only the ASCII double quote as a quote character.
    #[arg(long)]
    no_typographic_quotes: bool,
}

pub fn run(args: ScanArgs, config: &FileConfig) -> Result<()> {
    let sentences = corpus::load_sentences_tsv(&args.input)?;
    log::info!("scanning {} sentences for {}", sentences.len(), args.feature);

    let records = match args.feature {
        BiasFeature::ScareQuotes => {
            let mut sq = ScareQuoteConfig::default();
            if let Some(path) = optional_path(args.placeholders, config, "placeholders") {
                sq.placeholders = detect::load_placeholder_list(path)?;
            }
            if !args.patient_token.is_empty() {
                sq.patient_tokens = args.patient_token;
            } else if let Some(tokens) = config.get_list("patient_tokens") {
                sq.patient_tokens = tokens;
            }
            sq.require_preceding = args.require_preceding;
            sq.typographic_quotes = !args.no_typographic_quotes;
            let (records, diagnostics) = detect::detect_scare_quote_candidates(&sentences, &sq)?;
            log::info!(
                "{} sentences skipped for unbalanced quotes, {} spans dropped as boilerplate",
                diagnostics.unbalanced_quotes,
                diagnostics.placeholder_spans_removed
            );
            records
        }
        feature => {
            if args.placeholders.is_some() || !args.patient_token.is_empty() {
                return Err(Error::Config(format!(
                    "--placeholders and --patient-token only apply to scare_quotes, not {feature}"
                )));
            }
            let key = format!("lexicon.{feature}");
            let path = require_path(args.lexicon, config, &key)?;
            let lexicon = Lexicon::load(&path, feature)?;
            log::info!(
                "loaded {} with {} active terms",
                path.display(),
                lexicon.active_count()
            );
            let matcher = CompiledMatcher::compile(&lexicon)?;
            detect::scan_lexicon(&sentences, &matcher, feature)
        }
    };

    log::info!("{} sentences matched", records.len());
    detect::write_matches_tsv(&args.out, &records)?;
    log::info!("wrote {}", args.out.display());
    Ok(())
}
