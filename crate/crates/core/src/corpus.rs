//! Note ingestion: CSV parsing, category filtering, sentence segmentation,
//! deduplication, and corpus summary statistics.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features;

/// One ingested note row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClinicalNote {
    pub note_id: String,
    pub subject_id: String,
    pub hadm_id: Option<String>,
    pub category: String,
    pub description: String,
    pub provider_id: Option<String>,
    pub text: String,
}

/// One segmented sentence with provenance back to its note.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sentence_id: String,
    pub note_id: String,
    pub index: usize,
    pub text: String,
    pub token_count: usize,
}

impl Sentence {
    pub fn id_for(note_id: &str, index: usize) -> String {
        format!("{note_id}:{index}")
    }
}

/// Corpus summary in the shape of the usual dataset table: note and sentence
/// counts, average lengths in words, distinct patients and providers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_notes: usize,
    pub avg_note_words: f64,
    pub n_sentences: usize,
    pub avg_sentence_words: f64,
    pub n_patients: usize,
    pub n_providers: usize,
}

/// Maps logical note fields to CSV column names. `hadm_id`, `description`,
/// and `provider_id` may be unmapped, in which case they are left empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub note_id: String,
    pub subject_id: String,
    pub hadm_id: Option<String>,
    pub category: String,
    pub description: Option<String>,
    pub provider_id: Option<String>,
    pub text: String,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        SchemaConfig {
            note_id: "ROW_ID".into(),
            subject_id: "SUBJECT_ID".into(),
            hadm_id: Some("HADM_ID".into()),
            category: "CATEGORY".into(),
            description: Some("DESCRIPTION".into()),
            provider_id: Some("CGID".into()),
            text: "TEXT".into(),
        }
    }
}

/// Result of parsing a note CSV: the notes plus tallies of skipped and
/// malformed rows (malformed rows do not abort the run).
#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub notes: Vec<ClinicalNote>,
    pub skipped_empty: usize,
    /// (1-based data row number, message) per row the CSV reader rejected.
    pub row_errors: Vec<(u64, String)>,
}

fn required_column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Config(format!("column {name:?} not found in CSV header")))
}

fn optional_column(headers: &csv::StringRecord, name: &Option<String>) -> Result<Option<usize>> {
    match name {
        Some(n) => required_column(headers, n).map(Some),
        None => Ok(None),
    }
}

/// Parses notes from CSV. Rows with empty text are skipped and counted;
/// rows the CSV reader cannot decode are tallied with their row number and
/// processing continues.
pub fn parse_notes<R: Read>(reader: R, schema: &SchemaConfig) -> Result<ParseOutcome> {
    let mut csv_reader = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let col_note_id = required_column(&headers, &schema.note_id)?;
    let col_subject = required_column(&headers, &schema.subject_id)?;
    let col_category = required_column(&headers, &schema.category)?;
    let col_text = required_column(&headers, &schema.text)?;
    let col_hadm = optional_column(&headers, &schema.hadm_id)?;
    let col_description = optional_column(&headers, &schema.description)?;
    let col_provider = optional_column(&headers, &schema.provider_id)?;

    let mut outcome = ParseOutcome::default();
    for (row_idx, record) in csv_reader.records().enumerate() {
        let row_no = row_idx as u64 + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                outcome.row_errors.push((row_no, e.to_string()));
                continue;
            }
        };
        let field = |idx: usize| record.get(idx).unwrap_or("").to_string();
        let opt_field = |idx: Option<usize>| {
            idx.map(|i| record.get(i).unwrap_or("").to_string())
                .filter(|s| !s.is_empty())
        };
        let text = field(col_text);
        if text.trim().is_empty() {
            outcome.skipped_empty += 1;
            continue;
        }
        outcome.notes.push(ClinicalNote {
            note_id: field(col_note_id),
            subject_id: field(col_subject),
            hadm_id: opt_field(col_hadm),
            category: field(col_category),
            description: opt_field(col_description).unwrap_or_default(),
            provider_id: opt_field(col_provider),
            text,
        });
    }
    Ok(outcome)
}

/// Keeps the notes whose category, compared case-insensitively after
/// trimming, is not on the exclusion list.
pub fn filter_categories(notes: Vec<ClinicalNote>, excluded: &[String]) -> Vec<ClinicalNote> {
    let excluded: HashSet<String> = excluded
        .iter()
        .map(|c| c.trim().to_lowercase())
        .filter(|c| !c.is_empty())
        .collect();
    notes
        .into_iter()
        .filter(|note| !excluded.contains(&note.category.trim().to_lowercase()))
        .collect()
}

/// Default category exclusions.
pub fn default_excluded_categories() -> Vec<String> {
    vec!["EEG".into(), "Radiology".into()]
}

/// Dotted abbreviations whose trailing period never ends a sentence.
/// Clinical notes are dense with title and time abbreviations; a period after
/// one of these (compared case-insensitively, with internal periods kept, so
/// "a.m" covers "a.m.") is treated as part of the word.
const PROTECTED_ABBREVIATIONS: &[&str] = &[
    "dr", "mr", "mrs", "ms", "pt", "vs", "st", "approx", "etc", "e.g", "i.e", "a.m", "p.m",
];

fn is_protected_before_period(text: &str, period_pos: usize) -> bool {
    let head = &text[..period_pos];
    let token_start = head
        .char_indices()
        .rev()
        .take_while(|&(_, c)| c.is_alphanumeric() || c == '.')
        .last()
        .map(|(i, _)| i)
        .unwrap_or(period_pos);
    let token = head[token_start..].trim_end_matches('.');
    if token.is_empty() {
        return false;
    }
    // Single uppercase letters protect initials such as "John Q. Public".
    if token.chars().count() == 1 && token.chars().all(|c| c.is_uppercase()) {
        return true;
    }
    let lowered = token.to_lowercase();
    PROTECTED_ABBREVIATIONS.contains(&lowered.as_str())
}

/// Splits around blank lines: runs of whitespace containing two or more
/// newlines.
fn split_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\n' {
            let mut j = i + 1;
            let mut newlines = 1;
            while j < bytes.len() && (bytes[j] as char).is_whitespace() {
                if bytes[j] == b'\n' {
                    newlines += 1;
                }
                j += 1;
            }
            if newlines >= 2 {
                blocks.push(&text[start..i]);
                start = j;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    blocks.push(&text[start..]);
    blocks.into_iter().filter(|b| !b.trim().is_empty()).collect()
}

/// Byte offsets (exclusive) at which sentences end within `block`: after a
/// '.', '!', or '?' that is followed by whitespace and then any further
/// content. Periods after protected abbreviations and periods inside numbers
/// ("10.5") do not split, because no whitespace follows the latter.
fn sentence_end_offsets(block: &str) -> Vec<usize> {
    let mut ends = Vec::new();
    let mut chars = block.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        // Take any run of closing terminators/quotes as part of the sentence.
        let mut end = i + c.len_utf8();
        while let Some(&(j, next)) = chars.peek() {
            if matches!(next, '.' | '!' | '?' | '"' | ')') {
                end = j + next.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        let rest = &block[end..];
        let Some(first) = rest.chars().next() else { continue };
        if !first.is_whitespace() {
            continue;
        }
        if rest.trim_start().is_empty() {
            continue;
        }
        if c == '.' && end == i + 1 && is_protected_before_period(block, i) {
            continue;
        }
        ends.push(end);
    }
    ends
}

fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            in_space = true;
        } else {
            if in_space && !out.is_empty() {
                out.push(' ');
            }
            in_space = false;
            out.push(c);
        }
    }
    out
}

/// Segments a note into sentences. Sentence text is whitespace-normalized
/// (runs collapsed to single spaces). Segments without any letter or digit
/// are merged into their neighbor so every sentence has at least one token;
/// a note with no word characters at all yields no sentences.
pub fn split_sentences(note: &ClinicalNote) -> Vec<Sentence> {
    let mut raw_segments: Vec<String> = Vec::new();
    for block in split_blocks(&note.text) {
        let mut start = 0;
        for end in sentence_end_offsets(block) {
            raw_segments.push(block[start..end].to_string());
            start = end;
        }
        if start < block.len() && !block[start..].trim().is_empty() {
            raw_segments.push(block[start..].to_string());
        }
    }

    let mut merged: Vec<String> = Vec::new();
    for segment in raw_segments {
        let has_word = segment.chars().any(|c| c.is_alphanumeric());
        if has_word {
            merged.push(segment);
        } else if let Some(prev) = merged.last_mut() {
            prev.push(' ');
            prev.push_str(&segment);
        } else {
            merged.push(segment);
        }
    }
    // A tokenless segment at position 0 had no neighbor yet; fold it forward.
    if merged.len() >= 2 && !merged[0].chars().any(|c| c.is_alphanumeric()) {
        let head = merged.remove(0);
        merged[0] = format!("{head} {}", merged[0]);
    }
    if merged.len() == 1 && !merged[0].chars().any(|c| c.is_alphanumeric()) {
        return Vec::new();
    }

    merged
        .into_iter()
        .enumerate()
        .map(|(index, segment)| {
            let text = normalize_whitespace(&segment);
            let token_count = features::word_count(&text);
            Sentence {
                sentence_id: Sentence::id_for(&note.note_id, index),
                note_id: note.note_id.clone(),
                index,
                text,
                token_count,
            }
        })
        .collect()
}

/// Removes duplicate sentences, keeping the first occurrence of each
/// whitespace-normalized text (case-sensitive). Order is otherwise preserved.
pub fn dedup_sentences(sentences: Vec<Sentence>) -> Vec<Sentence> {
    let mut seen: HashSet<String> = HashSet::with_capacity(sentences.len());
    sentences
        .into_iter()
        .filter(|s| seen.insert(normalize_whitespace(&s.text)))
        .collect()
}

/// Summary statistics over notes and their (deduplicated) sentences. Word
/// counts use the feature tokenizer.
pub fn corpus_stats(notes: &[ClinicalNote], sentences: &[Sentence]) -> CorpusStats {
    let note_words: usize = notes.iter().map(|n| features::word_count(&n.text)).sum();
    let sentence_words: usize = sentences.iter().map(|s| s.token_count).sum();
    let patients: HashSet<&str> = notes
        .iter()
        .map(|n| n.subject_id.as_str())
        .filter(|s| !s.is_empty())
        .collect();
    let providers: HashSet<&str> = notes
        .iter()
        .filter_map(|n| n.provider_id.as_deref())
        .filter(|s| !s.is_empty())
        .collect();
    let avg = |total: usize, count: usize| {
        if count == 0 {
            0.0
        } else {
            total as f64 / count as f64
        }
    };
    CorpusStats {
        n_notes: notes.len(),
        avg_note_words: avg(note_words, notes.len()),
        n_sentences: sentences.len(),
        avg_sentence_words: avg(sentence_words, sentences.len()),
        n_patients: patients.len(),
        n_providers: providers.len(),
    }
}

/// Writes the sentence table as TSV: sentence_id, note_id, index, text.
/// Sentence text is whitespace-normalized at segmentation time, so it cannot
/// contain tabs or newlines.
pub fn write_sentences_tsv<W: Write>(sentences: &[Sentence], mut writer: W) -> Result<()> {
    let to_io = |e: std::io::Error| Error::Invalid(format!("sentence table write failed: {e}"));
    writeln!(writer, "sentence_id\tnote_id\tindex\ttext").map_err(to_io)?;
    for s in sentences {
        writeln!(writer, "{}\t{}\t{}\t{}", s.sentence_id, s.note_id, s.index, s.text).map_err(to_io)?;
    }
    Ok(())
}

pub fn save_sentences_tsv(sentences: &[Sentence], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_sentences_tsv(sentences, std::io::BufWriter::new(file))
}

pub fn load_sentences_tsv(path: impl AsRef<Path>) -> Result<Vec<Sentence>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut sentences = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if lineno == 0 {
            if line != "sentence_id\tnote_id\tindex\ttext" {
                return Err(Error::format(path, 1, "expected sentence-table header"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut fields = line.splitn(4, '\t');
        let (Some(sentence_id), Some(note_id), Some(index), Some(text)) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::format(path, lineno + 1, "expected 4 tab-separated fields"));
        };
        let index: usize = index
            .parse()
            .map_err(|_| Error::format(path, lineno + 1, format!("bad index {index:?}")))?;
        sentences.push(Sentence {
            sentence_id: sentence_id.to_string(),
            note_id: note_id.to_string(),
            index,
            text: text.to_string(),
            token_count: features::word_count(text),
        });
    }
    Ok(sentences)
}

/// Looks up sentences by id.
pub fn sentence_index(sentences: &[Sentence]) -> HashMap<&str, &Sentence> {
    sentences.iter().map(|s| (s.sentence_id.as_str(), s)).collect()
}
