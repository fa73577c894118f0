//! Annotation workflow: sampling detector output into review batches,
//! exporting and importing label sheets, scoring inter-annotator agreement,
//! and assembling the adjudicated labels into a training dataset.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::detect::MatchRecord;
use crate::error::{Error, Result};
use crate::lexicon::BiasFeature;
use crate::seeding;

/// How a batch is meant to be labeled: `Reliability` batches go to two
/// annotators for an agreement check, `Solo` batches to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchKind {
    Reliability,
    Solo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationBatch {
    pub feature: BiasFeature,
    pub kind: BatchKind,
    pub sentence_ids: Vec<String>,
    pub seed: u64,
}

impl AnnotationBatch {
    /// Human-readable batch label, e.g. `reliability_100` or `solo_400`.
    pub fn label(&self) -> String {
        let kind = match self.kind {
            BatchKind::Reliability => "reliability",
            BatchKind::Solo => "solo",
        };
        format!("{}_{}", kind, self.sentence_ids.len())
    }
}

/// Draws disjoint batches of the requested sizes from the matched sentences,
/// without replacement. The pool is shuffled once with the seed and split
/// into consecutive slices, so each sentence appears in at most one batch.
/// The first batch is the reliability batch; the rest are solo batches.
pub fn sample_batches(
    feature: BiasFeature,
    records: &[MatchRecord],
    sizes: &[usize],
    seed: u64,
) -> Result<Vec<AnnotationBatch>> {
    if sizes.is_empty() {
        return Err(Error::Config("no batch sizes requested".into()));
    }
    let total: usize = sizes.iter().sum();
    let mut pool: Vec<&str> = records.iter().map(|r| r.sentence_id.as_str()).collect();
    if pool.len() < total {
        return Err(Error::Invalid(format!(
            "requested {total} sentences across batches but only {} matched",
            pool.len()
        )));
    }
    let mut rng = seeding::master_rng(seed);
    pool.shuffle(&mut rng);
    let mut batches = Vec::with_capacity(sizes.len());
    let mut offset = 0;
    for (i, &size) in sizes.iter().enumerate() {
        let ids = pool[offset..offset + size].iter().map(|s| s.to_string()).collect();
        offset += size;
        batches.push(AnnotationBatch {
            feature,
            kind: if i == 0 { BatchKind::Reliability } else { BatchKind::Solo },
            sentence_ids: ids,
            seed,
        });
    }
    Ok(batches)
}

pub const ANNOTATION_CSV_HEADER: [&str; 6] =
    ["sentence_id", "text", "label", "close_call", "exemplary", "note"];

/// One annotator's judgment of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationLabel {
    pub sentence_id: String,
    pub annotator_id: String,
    pub label: u8,
    pub close_call: bool,
    pub exemplary: bool,
    pub note: String,
}

/// Writes an annotation sheet with blank label columns for the given batch.
pub fn export_annotation_csv(
    path: impl AsRef<Path>,
    sentence_ids: &[String],
    sentences: &[Sentence],
) -> Result<()> {
    let path = path.as_ref();
    let by_id: HashMap<&str, &Sentence> =
        sentences.iter().map(|s| (s.sentence_id.as_str(), s)).collect();
    let mut writer = csv::Writer::from_path(path).map_err(Error::Csv)?;
    writer.write_record(ANNOTATION_CSV_HEADER).map_err(Error::Csv)?;
    for id in sentence_ids {
        let sentence = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::Invalid(format!("batch references unknown sentence {id:?}")))?;
        writer
            .write_record([id.as_str(), sentence.text.as_str(), "", "", "", ""])
            .map_err(Error::Csv)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn parse_flag(value: &str, column: &str, row: usize, problems: &mut Vec<String>) -> bool {
    match value.trim() {
        "" | "0" => false,
        "1" => true,
        other => {
            problems.push(format!("row {row}: {column} must be empty, 0, or 1, found {other:?}"));
            false
        }
    }
}

/// Reads back a filled-in annotation sheet. Every label must be 0 or 1 and
/// every sentence id unique; all problems are reported together.
pub fn import_annotation_csv(
    path: impl AsRef<Path>,
    annotator_id: &str,
) -> Result<Vec<AnnotationLabel>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(Error::Csv)?;
    let headers = reader.headers().map_err(Error::Csv)?.clone();
    let expected: Vec<&str> = ANNOTATION_CSV_HEADER.to_vec();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::format(
            path,
            1,
            format!("expected header {:?}", ANNOTATION_CSV_HEADER.join(",")),
        ));
    }
    let mut labels = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut problems: Vec<String> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(Error::Csv)?;
        if record.len() != 6 {
            problems.push(format!("row {row}: expected 6 columns, found {}", record.len()));
            continue;
        }
        let sentence_id = record[0].to_string();
        if !seen.insert(sentence_id.clone()) {
            problems.push(format!("row {row}: duplicate sentence id {sentence_id:?}"));
            continue;
        }
        let label = match record[2].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                problems.push(format!("row {row}: label must be 0 or 1, found {other:?}"));
                continue;
            }
        };
        let close_call = parse_flag(&record[3], "close_call", row, &mut problems);
        let exemplary = parse_flag(&record[4], "exemplary", row, &mut problems);
        labels.push(AnnotationLabel {
            sentence_id,
            annotator_id: annotator_id.to_string(),
            label,
            close_call,
            exemplary,
            note: record[5].to_string(),
        });
    }
    if !problems.is_empty() {
        return Err(Error::Invalid(format!(
            "annotation sheet {} has {} problem(s): {}",
            path.display(),
            problems.len(),
            problems.join("; ")
        )));
    }
    Ok(labels)
}

/// Agreement between two annotators over the same sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub n: usize,
    pub percent_agreement: f64,
    pub kappa: f64,
    pub disagreement_ids: Vec<String>,
}

fn paired_labels<'a>(
    a: &'a [AnnotationLabel],
    b: &'a [AnnotationLabel],
) -> Result<Vec<(&'a str, u8, u8)>> {
    let map_a: HashMap<&str, u8> = a.iter().map(|l| (l.sentence_id.as_str(), l.label)).collect();
    let map_b: HashMap<&str, u8> = b.iter().map(|l| (l.sentence_id.as_str(), l.label)).collect();
    if map_a.len() != map_b.len() || map_a.keys().any(|k| !map_b.contains_key(k)) {
        let keys_a: BTreeSet<&str> = map_a.keys().copied().collect();
        let keys_b: BTreeSet<&str> = map_b.keys().copied().collect();
        let only: Vec<&str> = keys_a.symmetric_difference(&keys_b).copied().collect();
        return Err(Error::Invalid(format!(
            "annotators labeled different sentences; unshared ids: {}",
            only.join(", ")
        )));
    }
    Ok(a.iter()
        .map(|l| (l.sentence_id.as_str(), l.label, map_b[l.sentence_id.as_str()]))
        .collect())
}

/// Percent agreement and Cohen's kappa. Kappa uses chance agreement from the
/// two annotators' label marginals; when chance agreement is already perfect
/// the score is reported as 1.0.
pub fn agreement(a: &[AnnotationLabel], b: &[AnnotationLabel]) -> Result<AgreementReport> {
    let pairs = paired_labels(a, b)?;
    let n = pairs.len();
    if n == 0 {
        return Err(Error::Invalid("cannot score agreement on zero sentences".into()));
    }
    let matches = pairs.iter().filter(|(_, la, lb)| la == lb).count();
    let po = matches as f64 / n as f64;
    let a_pos = pairs.iter().filter(|(_, la, _)| *la == 1).count() as f64 / n as f64;
    let b_pos = pairs.iter().filter(|(_, _, lb)| *lb == 1).count() as f64 / n as f64;
    let pe = a_pos * b_pos + (1.0 - a_pos) * (1.0 - b_pos);
    let kappa = if (1.0 - pe).abs() < f64::EPSILON {
        log::warn!("chance agreement is 1.0 (both annotators constant); reporting kappa as 1.0");
        1.0
    } else {
        (po - pe) / (1.0 - pe)
    };
    let disagreement_ids = pairs
        .iter()
        .filter(|(_, la, lb)| la != lb)
        .map(|(id, _, _)| id.to_string())
        .collect();
    Ok(AgreementReport { n, percent_agreement: po, kappa, disagreement_ids })
}

/// A final label for one sentence after adjudication (or a solo pass).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedLabel {
    pub sentence_id: String,
    pub label: u8,
}

/// Merges two annotators' labels. Agreed sentences keep the shared label;
/// every disagreement must have exactly one resolution, and resolutions for
/// sentences that did not disagree are rejected.
pub fn adjudicate(
    a: &[AnnotationLabel],
    b: &[AnnotationLabel],
    resolutions: &HashMap<String, u8>,
) -> Result<Vec<ResolvedLabel>> {
    let pairs = paired_labels(a, b)?;
    let disagreements: HashSet<&str> =
        pairs.iter().filter(|(_, la, lb)| la != lb).map(|(id, _, _)| *id).collect();
    let mut extra: Vec<&str> = resolutions
        .keys()
        .filter(|id| !disagreements.contains(id.as_str()))
        .map(|id| id.as_str())
        .collect();
    extra.sort_unstable();
    if !extra.is_empty() {
        return Err(Error::Invalid(format!(
            "resolutions given for sentences that did not disagree: {}",
            extra.join(", ")
        )));
    }
    let mut missing: Vec<&str> = disagreements
        .iter()
        .filter(|id| !resolutions.contains_key(**id))
        .copied()
        .collect();
    missing.sort_unstable();
    if !missing.is_empty() {
        return Err(Error::Invalid(format!(
            "disagreements without a resolution: {}",
            missing.join(", ")
        )));
    }
    for (id, label) in resolutions {
        if *label > 1 {
            return Err(Error::Invalid(format!("resolution for {id:?} must be 0 or 1")));
        }
    }
    Ok(pairs
        .into_iter()
        .map(|(id, la, _)| ResolvedLabel {
            sentence_id: id.to_string(),
            label: *resolutions.get(id).unwrap_or(&la),
        })
        .collect())
}

/// Passes one annotator's labels through unchanged (solo batches).
pub fn resolve_solo(labels: &[AnnotationLabel]) -> Vec<ResolvedLabel> {
    labels
        .iter()
        .map(|l| ResolvedLabel { sentence_id: l.sentence_id.clone(), label: l.label })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetItem {
    pub sentence_id: String,
    pub label: u8,
    pub text: String,
}

/// Labeled sentences for one feature, ready for model training.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub feature: BiasFeature,
    pub items: Vec<DatasetItem>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.items.iter().map(|i| i.label).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.text.as_str()).collect()
    }

    pub fn positive_fraction(&self) -> f64 {
        if self.items.is_empty() {
            return 0.0;
        }
        let positives = self.items.iter().filter(|i| i.label == 1).count();
        positives as f64 / self.items.len() as f64
    }
}

/// Joins resolved labels with sentence text. Duplicate sentence ids across
/// the label list are rejected.
pub fn assemble_dataset(
    feature: BiasFeature,
    resolved: &[ResolvedLabel],
    sentences: &[Sentence],
) -> Result<LabeledDataset> {
    let by_id: HashMap<&str, &Sentence> =
        sentences.iter().map(|s| (s.sentence_id.as_str(), s)).collect();
    let mut seen: HashSet<&str> = HashSet::new();
    let mut items = Vec::with_capacity(resolved.len());
    for label in resolved {
        if !seen.insert(label.sentence_id.as_str()) {
            return Err(Error::Invalid(format!(
                "sentence {:?} is labeled more than once",
                label.sentence_id
            )));
        }
        let sentence = by_id.get(label.sentence_id.as_str()).ok_or_else(|| {
            Error::Invalid(format!("label references unknown sentence {:?}", label.sentence_id))
        })?;
        items.push(DatasetItem {
            sentence_id: label.sentence_id.clone(),
            label: label.label,
            text: sentence.text.clone(),
        });
    }
    Ok(LabeledDataset { feature, items })
}

pub const DATASET_TSV_HEADER: &str = "sentence_id\tlabel\ttext";

pub fn save_dataset_tsv(path: impl AsRef<Path>, dataset: &LabeledDataset) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{DATASET_TSV_HEADER}").map_err(|e| Error::io(path, e))?;
    for item in &dataset.items {
        writeln!(w, "{}\t{}\t{}", item.sentence_id, item.label, item.text)
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn load_dataset_tsv(path: impl AsRef<Path>, feature: BiasFeature) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut items = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if lineno == 0 {
            if line != DATASET_TSV_HEADER {
                return Err(Error::format(path, 1, "expected header `sentence_id\\tlabel\\ttext`"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let sentence_id = fields
            .next()
            .ok_or_else(|| Error::format(path, lineno + 1, "missing sentence_id"))?
            .to_string();
        let label: u8 = match fields.next() {
            Some("0") => 0,
            Some("1") => 1,
            other => {
                return Err(Error::format(
                    path,
                    lineno + 1,
                    format!("label must be 0 or 1, found {other:?}"),
                ))
            }
        };
        let text = fields
            .next()
            .ok_or_else(|| Error::format(path, lineno + 1, "missing text"))?
            .to_string();
        if !seen.insert(sentence_id.clone()) {
            return Err(Error::format(
                path,
                lineno + 1,
                format!("duplicate sentence id {sentence_id:?}"),
            ));
        }
        items.push(DatasetItem { sentence_id, label, text });
    }
    Ok(LabeledDataset { feature, items })
}
