//! Shared fixture construction for the criterion benches.

use std::path::PathBuf;

use care_sd_core::corpus::{self, Sentence};
use care_sd_core::lexicon::{BiasFeature, Lexicon};
use care_sd_core::synth::{self, SyntheticCorpusSpec};

pub fn data_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn load_lexicon(feature: BiasFeature) -> Lexicon {
    let path = match feature {
        BiasFeature::StigmatizingLabels => "data/lexicons/stigmatizing_labels.lex",
        BiasFeature::DoubtMarkers => "data/lexicons/doubt_markers.lex",
        BiasFeature::ScareQuotes => panic!("scare quotes have no lexicon"),
    };
    Lexicon::load(data_path(path), feature).expect("shipped lexicon loads")
}

/// Builds a deterministic sentence corpus with planted detector signal.
pub fn fixture_sentences(n_notes: usize, seed: u64) -> Vec<Sentence> {
    let stigma = load_lexicon(BiasFeature::StigmatizingLabels);
    let doubt = load_lexicon(BiasFeature::DoubtMarkers);
    let stigma_terms: Vec<&str> = stigma.active_terms().collect();
    let doubt_terms: Vec<&str> = doubt.active_terms().collect();
    let spec = SyntheticCorpusSpec {
        n_notes,
        sentences_per_note: (6, 12),
        stigma_rate: 0.05,
        doubt_rate: 0.05,
        scare_rate: 0.03,
        positive_fraction_stigma: 0.439,
        positive_fraction_doubt: 0.310,
        positive_fraction_scare: 0.207,
        p_signal: 1.0,
        seed,
    };
    let generated = synth::synthesize(&spec, &stigma_terms, &doubt_terms).expect("generation");
    let mut sentences = Vec::new();
    for note in &generated.notes {
        sentences.extend(corpus::split_sentences(note));
    }
    corpus::dedup_sentences(sentences)
}
