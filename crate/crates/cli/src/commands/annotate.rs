//! The annotation workflow: `sample` draws review batches from scan output,
//! `agreement` scores two annotators against each other, and `adjudicate`
//! merges their labels into the final dataset.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use care_sd_core::annotate::{self, ResolvedLabel};
use care_sd_core::{corpus, detect};
use care_sd_core::{BiasFeature, Error, Result};
use clap::Args;

use crate::config::{parse_number_list, require_seed, FileConfig};

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Feature the matches belong to.
    #[arg(long)]
    feature: BiasFeature,
    /// Match table produced by `scan`.
    #[arg(long, value_name = "FILE")]
    matches: PathBuf,
    /// Sentence table the matches reference.
    #[arg(long, value_name = "FILE")]
    sentences: PathBuf,
    /// Comma-separated batch sizes; the first batch is annotated by both
    /// reviewers, the rest by one.
    #[arg(long, default_value = "100,400,500")]
    sizes: String,
    /// Sampling seed.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Directory for the annotation sheets.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

pub fn run_sample(args: SampleArgs, config: &FileConfig) -> Result<()> {
    let seed = require_seed(args.seed, config, "seed.sample")?;
    let sizes: Vec<usize> = parse_number_list(&args.sizes, "--sizes")?;
    let records = detect::read_matches_tsv(&args.matches)?;
    let sentences = corpus::load_sentences_tsv(&args.sentences)?;
    let batches = annotate::sample_batches(args.feature, &records, &sizes, seed)?;

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    for (i, batch) in batches.iter().enumerate() {
        let name = format!("batch_{}_{}.csv", i + 1, batch.label());
        let path = args.out_dir.join(&name);
        annotate::export_annotation_csv(&path, &batch.sentence_ids, &sentences)?;
        log::info!("wrote {} ({} sentences)", path.display(), batch.sentence_ids.len());
    }
    let manifest = args.out_dir.join("batches.json");
    let mut json = serde_json::to_string_pretty(&batches)?;
    json.push('\n');
    std::fs::write(&manifest, json).map_err(|e| Error::io(&manifest, e))?;
    log::info!("wrote {}", manifest.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    /// First annotator's filled-in sheet.
    #[arg(long, value_name = "FILE")]
    a: PathBuf,
    /// Second annotator's filled-in sheet.
    #[arg(long, value_name = "FILE")]
    b: PathBuf,
    /// Name recorded for the first annotator.
    #[arg(long, default_value = "a")]
    annotator_a: String,
    /// Name recorded for the second annotator.
    #[arg(long, default_value = "b")]
    annotator_b: String,
    /// Agreement report to write (JSON).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

pub fn run_agreement(args: AgreementArgs, _config: &FileConfig) -> Result<()> {
    let a = annotate::import_annotation_csv(&args.a, &args.annotator_a)?;
    let b = annotate::import_annotation_csv(&args.b, &args.annotator_b)?;
    let report = annotate::agreement(&a, &b)?;
    log::info!(
        "n={} percent_agreement={:.4} kappa={:.4} disagreements={}",
        report.n,
        report.percent_agreement,
        report.kappa,
        report.disagreement_ids.len()
    );
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    std::fs::write(&args.out, json).map_err(|e| Error::io(&args.out, e))?;
    log::info!("wrote {}", args.out.display());
    Ok(())
}

pub const LABELS_TSV_HEADER: &str = "sentence_id\tlabel";

pub fn save_labels_tsv(path: impl AsRef<Path>, labels: &[ResolvedLabel]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{LABELS_TSV_HEADER}").map_err(|e| Error::io(path, e))?;
    for label in labels {
        writeln!(w, "{}\t{}", label.sentence_id, label.label).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn load_resolutions(path: &Path) -> Result<HashMap<String, u8>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut resolutions = HashMap::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if lineno == 0 {
            if line != LABELS_TSV_HEADER {
                return Err(Error::format(path, 1, "expected header `sentence_id\\tlabel`"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (id, raw) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(path, lineno + 1, "expected `sentence_id<TAB>label`"))?;
        let label = match raw {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::format(
                    path,
                    lineno + 1,
                    format!("label must be 0 or 1, found {other:?}"),
                ))
            }
        };
        if resolutions.insert(id.to_string(), label).is_some() {
            return Err(Error::format(path, lineno + 1, format!("duplicate resolution for {id:?}")));
        }
    }
    Ok(resolutions)
}

#[derive(Debug, Args)]
pub struct AdjudicateArgs {
    /// First annotator's filled-in sheet.
    #[arg(long, value_name = "FILE")]
    a: PathBuf,
    /// Second annotator's sheet; omit for a solo batch, whose labels pass
    /// through unchanged.
    #[arg(long, value_name = "FILE")]
    b: Option<PathBuf>,
    /// Tie-break table for disagreements: `sentence_id<TAB>label` with
    /// header. Required when the two sheets disagree anywhere.
    #[arg(long, value_name = "FILE")]
    resolutions: Option<PathBuf>,
    /// Resolved label table to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Sentence table; with --feature and --dataset-out, also assemble the
    /// labeled training dataset.
    #[arg(long, value_name = "FILE", requires = "dataset_out", requires = "feature")]
    sentences: Option<PathBuf>,
    /// Feature recorded in the assembled dataset.
    #[arg(long, requires = "sentences")]
    feature: Option<BiasFeature>,
    /// Labeled dataset to write.
    #[arg(long, value_name = "FILE", requires = "sentences")]
    dataset_out: Option<PathBuf>,
}

pub fn run_adjudicate(args: AdjudicateArgs, _config: &FileConfig) -> Result<()> {
    let a = annotate::import_annotation_csv(&args.a, "a")?;
    let resolved = match &args.b {
        Some(b_path) => {
            let b = annotate::import_annotation_csv(b_path, "b")?;
            let resolutions = match &args.resolutions {
                Some(path) => load_resolutions(path)?,
                None => HashMap::new(),
            };
            annotate::adjudicate(&a, &b, &resolutions)?
        }
        None => {
            if args.resolutions.is_some() {
                return Err(Error::Config(
                    "--resolutions requires --b; a solo batch has no disagreements".into(),
                ));
            }
            annotate::resolve_solo(&a)
        }
    };
    let positives = resolved.iter().filter(|l| l.label == 1).count();
    log::info!("{} labels resolved ({} positive)", resolved.len(), positives);
    save_labels_tsv(&args.out, &resolved)?;
    log::info!("wrote {}", args.out.display());

    if let (Some(sentences_path), Some(feature), Some(dataset_out)) =
        (&args.sentences, args.feature, &args.dataset_out)
    {
        let sentences = corpus::load_sentences_tsv(sentences_path)?;
        let dataset = annotate::assemble_dataset(feature, &resolved, &sentences)?;
        annotate::save_dataset_tsv(dataset_out, &dataset)?;
        log::info!(
            "wrote {} ({} items, {:.1}% positive)",
            dataset_out.display(),
            dataset.len(),
            dataset.positive_fraction() * 100.0
        );
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct MergeLabelsArgs {
    /// Resolved label tables to concatenate; repeatable, order preserved.
    #[arg(long = "labels", value_name = "FILE", required = true)]
    labels: Vec<PathBuf>,
    /// Sentence table the labels reference.
    #[arg(long, value_name = "FILE")]
    sentences: PathBuf,
    /// Feature recorded in the assembled dataset.
    #[arg(long)]
    feature: BiasFeature,
    /// Labeled dataset to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

/// Stitches the per-batch label tables into one training dataset. Duplicate
/// sentence ids across batches are rejected.
pub fn run_merge_labels(args: MergeLabelsArgs, _config: &FileConfig) -> Result<()> {
    let mut resolved: Vec<ResolvedLabel> = Vec::new();
    for path in &args.labels {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if lineno == 0 {
                if line != LABELS_TSV_HEADER {
                    return Err(Error::format(path, 1, "expected header `sentence_id\\tlabel`"));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (id, raw) = line.split_once('\t').ok_or_else(|| {
                Error::format(path, lineno + 1, "expected `sentence_id<TAB>label`")
            })?;
            let label: u8 = raw
                .parse()
                .ok()
                .filter(|l| *l <= 1)
                .ok_or_else(|| {
                    Error::format(path, lineno + 1, format!("label must be 0 or 1, found {raw:?}"))
                })?;
            resolved.push(ResolvedLabel { sentence_id: id.to_string(), label });
        }
    }
    let sentences = corpus::load_sentences_tsv(&args.sentences)?;
    let dataset = annotate::assemble_dataset(args.feature, &resolved, &sentences)?;
    annotate::save_dataset_tsv(&args.out, &dataset)?;
    log::info!(
        "wrote {} ({} items, {:.1}% positive)",
        args.out.display(),
        dataset.len(),
        dataset.positive_fraction() * 100.0
    );
    Ok(())
}
