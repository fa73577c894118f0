//! Detection of stigmatizing labels, doubt markers, and scare quotes in
//! clinical-note text, plus the workflow around it: corpus ingestion and
//! sentence segmentation, lexicon management with embedding-based expansion,
//! high-throughput multi-pattern scanning, annotation sampling with
//! inter-annotator agreement, bag-of-words classifiers, and bootstrap
//! evaluation reports.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`corpus`]: note CSV parsing, category filtering, sentence segmentation,
//!   deduplication, summary statistics
//! - [`lexicon`] and [`matcher`]: term lists with provenance and a compiled
//!   word-boundary-aware multi-pattern matcher
//! - [`embedding`]: nearest-neighbor lexicon expansion over pretrained word
//!   vectors
//! - [`detect`]: corpus scanning for the three bias features and frequency
//!   reports
//! - [`annotate`]: sampling for human labeling, annotation CSV round-trips,
//!   percent agreement and Cohen's kappa, adjudication
//! - [`features`]: tokenization, unigram+bigram vocabularies, count vectors,
//!   stratified splits and folds
//! - [`models`]: Multinomial Naive Bayes, L2 logistic regression, and random
//!   forest, with grid search and JSON persistence
//! - [`eval`]: confusion metrics, bootstrap confidence intervals, feature
//!   importances
//! - [`report`]: deterministic TSV/JSON/SVG report emission
//! - [`synth`]: synthetic corpora with planted, known-label signal for tests
//!   and demos
//!
//! All randomized operations take explicit seeds and are deterministic for a
//! given seed, including under internal parallelism.

pub mod annotate;
pub mod corpus;
pub mod detect;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod features;
pub mod lexicon;
pub mod matcher;
pub mod models;
pub mod report;
pub mod seeding;
pub mod synth;

pub use error::{Error, Result};
pub use lexicon::{BiasFeature, Lexicon, LexiconEntry, TermOrigin, TermStatus};
