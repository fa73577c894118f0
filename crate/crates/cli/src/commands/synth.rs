//! `synth` generates a synthetic notes corpus with known per-sentence truth,
//! for exercising the pipeline end-to-end without access to real charts.

use std::path::PathBuf;

use care_sd_core::lexicon::Lexicon;
use care_sd_core::synth::{self, SyntheticCorpusSpec};
use care_sd_core::{BiasFeature, Result};
use clap::Args;

use crate::config::{require_path, FileConfig};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Corpus recipe (JSON): note count, planting rates, seed.
    #[arg(long, value_name = "FILE")]
    spec: PathBuf,
    /// Notes CSV to write; per-feature truth tables land next to it.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Lexicon supplying doubt terms to plant.
    #[arg(long, value_name = "FILE")]
    lexicon_doubt: Option<PathBuf>,
    /// Lexicon supplying stigmatizing terms to plant.
    #[arg(long, value_name = "FILE")]
    lexicon_stigma: Option<PathBuf>,
}

pub fn run(args: SynthArgs, config: &FileConfig) -> Result<()> {
    let spec = SyntheticCorpusSpec::load(&args.spec)?;
    let doubt = Lexicon::load(
        require_path(args.lexicon_doubt, config, "lexicon.doubt_markers")?,
        BiasFeature::DoubtMarkers,
    )?;
    let stigma = Lexicon::load(
        require_path(args.lexicon_stigma, config, "lexicon.stigmatizing_labels")?,
        BiasFeature::StigmatizingLabels,
    )?;
    let doubt_terms: Vec<&str> = doubt.active_terms().collect();
    let stigma_terms: Vec<&str> = stigma.active_terms().collect();

    let corpus = synth::synthesize(&spec, &stigma_terms, &doubt_terms)?;
    synth::save_corpus_csv(&args.out, &corpus.notes)?;
    log::info!("wrote {} ({} notes)", args.out.display(), corpus.notes.len());

    let dir = args.out.parent().filter(|p| !p.as_os_str().is_empty()).map_or_else(
        || PathBuf::from("."),
        PathBuf::from,
    );
    for truth in &corpus.truth {
        let positives = truth.rows.iter().filter(|(_, label)| *label == 1).count();
        let path = dir.join(synth::truth_file_name(truth.feature));
        synth::save_truth_tsv(&path, &truth.rows)?;
        log::info!(
            "wrote {} ({} planted sentences, {} positive)",
            path.display(),
            truth.rows.len(),
            positives
        );
    }
    Ok(())
}
