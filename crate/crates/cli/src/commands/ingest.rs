//! `ingest` turns a notes CSV into the deduplicated sentence table the rest
//! of the pipeline works from; `stats` summarizes a corpus.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use care_sd_core::corpus::{
    self, ClinicalNote, SchemaConfig, Sentence,
};
use care_sd_core::report;
use care_sd_core::{Error, Result};
use clap::Args;

use crate::config::{require_path, FileConfig};

#[derive(Debug, Args)]
pub struct SchemaArgs {
    /// CSV column holding the note id.
    #[arg(long, value_name = "COLUMN")]
    pub col_note_id: Option<String>,
    /// CSV column holding the patient id.
    #[arg(long, value_name = "COLUMN")]
    pub col_subject_id: Option<String>,
    /// CSV column holding the admission id; `none` to skip.
    #[arg(long, value_name = "COLUMN")]
    pub col_hadm_id: Option<String>,
    /// CSV column holding the note category.
    #[arg(long, value_name = "COLUMN")]
    pub col_category: Option<String>,
    /// CSV column holding the note description; `none` to skip.
    #[arg(long, value_name = "COLUMN")]
    pub col_description: Option<String>,
    /// CSV column holding the provider id; `none` to skip.
    #[arg(long, value_name = "COLUMN")]
    pub col_provider_id: Option<String>,
    /// CSV column holding the note text.
    #[arg(long, value_name = "COLUMN")]
    pub col_text: Option<String>,
}

impl SchemaArgs {
    pub fn resolve(&self, config: &FileConfig) -> SchemaConfig {
        let mut schema = SchemaConfig::default();
        let pick = |flag: &Option<String>, key: &str, slot: &mut String| {
            if let Some(v) = flag.as_deref().or_else(|| config.get(key)) {
                *slot = v.to_string();
            }
        };
        let pick_optional = |flag: &Option<String>, key: &str, slot: &mut Option<String>| {
            if let Some(v) = flag.as_deref().or_else(|| config.get(key)) {
                *slot = if v == "none" { None } else { Some(v.to_string()) };
            }
        };
        pick(&self.col_note_id, "col.note_id", &mut schema.note_id);
        pick(&self.col_subject_id, "col.subject_id", &mut schema.subject_id);
        pick_optional(&self.col_hadm_id, "col.hadm_id", &mut schema.hadm_id);
        pick(&self.col_category, "col.category", &mut schema.category);
        pick_optional(&self.col_description, "col.description", &mut schema.description);
        pick_optional(&self.col_provider_id, "col.provider_id", &mut schema.provider_id);
        pick(&self.col_text, "col.text", &mut schema.text);
        schema
    }
}

pub fn load_notes(
    path: &PathBuf,
    schema: &SchemaConfig,
    excluded: &[String],
) -> Result<Vec<ClinicalNote>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let outcome = corpus::parse_notes(BufReader::new(file), schema)?;
    if outcome.skipped_empty > 0 {
        log::info!("skipped {} rows with empty text", outcome.skipped_empty);
    }
    for (row, message) in &outcome.row_errors {
        log::warn!("{}: data row {row}: {message}", path.display());
    }
    let before = outcome.notes.len();
    let notes = corpus::filter_categories(outcome.notes, excluded);
    if before != notes.len() {
        log::info!(
            "excluded {} notes in categories {:?}",
            before - notes.len(),
            excluded
        );
    }
    Ok(notes)
}

fn excluded_categories(
    exclude_category: &[String],
    include_all: bool,
    config: &FileConfig,
) -> Vec<String> {
    if include_all {
        return Vec::new();
    }
    if !exclude_category.is_empty() {
        return exclude_category.to_vec();
    }
    config
        .get_list("excluded_categories")
        .unwrap_or_else(corpus::default_excluded_categories)
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Notes CSV to read.
    #[arg(long, value_name = "FILE")]
    notes: Option<PathBuf>,
    /// Sentence table to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Note category to drop; repeatable. Defaults to EEG and Radiology.
    #[arg(long = "exclude-category", value_name = "CATEGORY")]
    exclude_category: Vec<String>,
    /// Keep every note category.
    #[arg(long, conflicts_with = "exclude_category")]
    include_all_categories: bool,
    /// Keep duplicate sentences instead of collapsing them.
    #[arg(long)]
    no_dedup: bool,
    #[command(flatten)]
    schema: SchemaArgs,
}

pub fn run_ingest(args: IngestArgs, config: &FileConfig) -> Result<()> {
    let notes_path = require_path(args.notes, config, "notes")?;
    let schema = args.schema.resolve(config);
    let excluded = excluded_categories(&args.exclude_category, args.include_all_categories, config);
    let notes = load_notes(&notes_path, &schema, &excluded)?;

    let mut sentences: Vec<Sentence> =
        notes.iter().flat_map(corpus::split_sentences).collect();
    let raw = sentences.len();
    if !args.no_dedup {
        sentences = corpus::dedup_sentences(sentences);
        log::info!(
            "{} notes -> {} sentences ({} after deduplication)",
            notes.len(),
            raw,
            sentences.len()
        );
    } else {
        log::info!("{} notes -> {} sentences (duplicates kept)", notes.len(), raw);
    }
    corpus::save_sentences_tsv(&sentences, &args.out)?;
    log::info!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Notes CSV to read.
    #[arg(long, value_name = "FILE")]
    notes: Option<PathBuf>,
    /// Sentence table produced by `ingest`.
    #[arg(long, value_name = "FILE")]
    sentences: PathBuf,
    /// Directory for stats.json.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Note category to drop; repeatable. Defaults to EEG and Radiology.
    #[arg(long = "exclude-category", value_name = "CATEGORY")]
    exclude_category: Vec<String>,
    /// Keep every note category.
    #[arg(long, conflicts_with = "exclude_category")]
    include_all_categories: bool,
    #[command(flatten)]
    schema: SchemaArgs,
}

pub fn run_stats(args: StatsArgs, config: &FileConfig) -> Result<()> {
    let notes_path = require_path(args.notes, config, "notes")?;
    let schema = args.schema.resolve(config);
    let excluded = excluded_categories(&args.exclude_category, args.include_all_categories, config);
    let notes = load_notes(&notes_path, &schema, &excluded)?;
    let sentences = corpus::load_sentences_tsv(&args.sentences)?;
    let stats = corpus::corpus_stats(&notes, &sentences);
    log::info!(
        "{} notes (avg {:.1} words), {} sentences (avg {:.1} words), {} patients, {} providers",
        stats.n_notes,
        stats.avg_note_words,
        stats.n_sentences,
        stats.avg_sentence_words,
        stats.n_patients,
        stats.n_providers
    );
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let path = report::emit_stats(&args.out_dir, &stats)?;
    log::info!("wrote {}", path.display());
    Ok(())
}
