//! `report` assembles the descriptive tables: most frequent matched terms
//! per lexicon feature and the n-grams patients are quoted with.

use std::path::PathBuf;

use care_sd_core::corpus;
use care_sd_core::detect::{self, TermFrequencyReport};
use care_sd_core::report;
use care_sd_core::{BiasFeature, Error, Result};
use clap::Args;

use crate::config::{resolve, FileConfig};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Sentence table the match files reference.
    #[arg(long, value_name = "FILE")]
    sentences: PathBuf,
    /// Match table from `scan --feature doubt_markers`.
    #[arg(long, value_name = "FILE")]
    matches_doubt: Option<PathBuf>,
    /// Match table from `scan --feature stigmatizing_labels`.
    #[arg(long, value_name = "FILE")]
    matches_stigma: Option<PathBuf>,
    /// Match table from `scan --feature scare_quotes`.
    #[arg(long, value_name = "FILE")]
    matches_scare: Option<PathBuf>,
    /// Directory for the tables.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Rows kept per table.
    #[arg(long, value_name = "N")]
    top: Option<usize>,
    /// Longest quoted n-gram to tabulate.
    #[arg(long, value_name = "N")]
    max_gram: Option<usize>,
    /// Also render each table as an SVG bar chart.
    #[arg(long)]
    charts: bool,
}

fn chart_rows(report: &TermFrequencyReport) -> Vec<(String, f64)> {
    report.rows.iter().map(|(term, count)| (term.clone(), *count as f64)).collect()
}

pub fn run(args: ReportArgs, config: &FileConfig) -> Result<()> {
    let top = resolve(args.top, config.get_parsed("top"), 30)?;
    let max_gram = resolve(args.max_gram, config.get_parsed("max_gram"), 3)?;
    if args.matches_doubt.is_none() && args.matches_stigma.is_none() && args.matches_scare.is_none()
    {
        return Err(Error::Config(
            "nothing to report: give at least one --matches-* file".into(),
        ));
    }
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;

    let lexicon_inputs = [
        (BiasFeature::DoubtMarkers, &args.matches_doubt),
        (BiasFeature::StigmatizingLabels, &args.matches_stigma),
    ];
    for (feature, path) in lexicon_inputs {
        let Some(path) = path else { continue };
        let records = detect::read_matches_tsv(path)?;
        let table = detect::top_terms(feature, &records, top);
        log::info!(
            "{feature}: {} matched sentences, {} term occurrences",
            records.len(),
            table.total_occurrences
        );
        for file in report::emit_top_terms(&args.out_dir, &table)? {
            log::info!("wrote {}", file.display());
        }
        if args.charts {
            let file = report::emit_bar_chart(
                &args.out_dir,
                &format!("top_terms_{feature}"),
                &format!("{feature}: most frequent matched terms"),
                &chart_rows(&table),
            )?;
            log::info!("wrote {}", file.display());
        }
    }

    if let Some(path) = &args.matches_scare {
        let records = detect::read_matches_tsv(path)?;
        let sentences = corpus::load_sentences_tsv(&args.sentences)?;
        let tables = detect::quoted_ngrams(&records, &sentences, max_gram, top)?;
        log::info!("scare_quotes: {} matched sentences", records.len());
        for file in report::emit_quoted_ngrams(&args.out_dir, &tables)? {
            log::info!("wrote {}", file.display());
        }
        if args.charts {
            for table in &tables {
                let file = report::emit_bar_chart(
                    &args.out_dir,
                    &format!("quoted_ngrams_scare_quotes_{}", table.gram),
                    &format!("scare quotes: most frequent quoted {}-grams", table.gram),
                    &chart_rows(table),
                )?;
                log::info!("wrote {}", file.display());
            }
        }
    }
    Ok(())
}
