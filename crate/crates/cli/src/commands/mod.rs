pub mod annotate;
pub mod evaluate;
pub mod ingest;
pub mod lexicon;
pub mod report;
pub mod scan;
pub mod synth;
pub mod train;
