//! Sentence-level detection passes.
//!
//! Lexicon features are found by running the compiled matcher over each
//! sentence. Scare-quote candidates are found by a rule: a sentence
//! qualifies when it contains at least one closed quote pair whose content
//! survives the placeholder filter, together with a patient-reference token.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use aho_corasick::{AhoCorasick, AhoCorasickBuilder, MatchKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::features::{is_word_char, tokenize};
use crate::lexicon::BiasFeature;
use crate::matcher::CompiledMatcher;

/// Byte-offset interval into a sentence's text, end exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

/// One sentence that triggered a detector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub sentence_id: String,
    pub feature: BiasFeature,
    /// Lexicon features: `(term, occurrence)` pairs in match order.
    pub matched_terms: Vec<(String, Span)>,
    /// Scare quotes: quoted spans that survived filtering.
    pub quoted_spans: Vec<Span>,
    /// Scare quotes: the first patient-reference token found.
    pub patient_ref: Option<String>,
}

/// Runs the compiled matcher over every sentence and keeps the ones with at
/// least one match. Output order follows input order.
pub fn scan_lexicon(
    sentences: &[Sentence],
    matcher: &CompiledMatcher,
    feature: BiasFeature,
) -> Vec<MatchRecord> {
    sentences
        .par_iter()
        .filter_map(|sentence| {
            let matches = matcher.find_matches(&sentence.text);
            if matches.is_empty() {
                return None;
            }
            let matched_terms = matches
                .into_iter()
                .map(|m| {
                    (
                        matcher.pattern(m.term_index).to_string(),
                        Span { start: m.start, end: m.end },
                    )
                })
                .collect();
            Some(MatchRecord {
                sentence_id: sentence.sentence_id.clone(),
                feature,
                matched_terms,
                quoted_spans: Vec::new(),
                patient_ref: None,
            })
        })
        .collect()
}

/// Settings for the scare-quote rule.
#[derive(Debug, Clone)]
pub struct ScareQuoteConfig {
    /// Word-bounded tokens accepted as a patient reference.
    pub patient_tokens: Vec<String>,
    /// Lowercase fragments; a quoted span whose lowercased content contains
    /// any of them is discarded as template boilerplate.
    pub placeholders: Vec<String>,
    /// When true a patient token must appear before the span's opening
    /// quote; when false it may appear anywhere in the sentence.
    pub require_preceding: bool,
    /// Treat typographic double quotes as quote characters alongside `"`.
    pub typographic_quotes: bool,
}

impl Default for ScareQuoteConfig {
    fn default() -> Self {
        ScareQuoteConfig {
            patient_tokens: ["pt", "patient", "pateint", "he", "she", "they"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            placeholders: Vec::new(),
            require_preceding: false,
            typographic_quotes: true,
        }
    }
}

/// Tallies from a scare-quote pass.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ScanDiagnostics {
    /// Sentences skipped because their quote characters could not be paired.
    pub unbalanced_quotes: u64,
    /// Quoted spans discarded by the placeholder filter.
    pub placeholder_spans_removed: u64,
}

/// Reads a placeholder list: one fragment per line, `#` comments and blank
/// lines ignored, lowercased.
pub fn load_placeholder_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut placeholders = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        placeholders.push(trimmed.to_lowercase());
    }
    Ok(placeholders)
}

fn patient_token_automaton(config: &ScareQuoteConfig) -> Result<AhoCorasick> {
    let tokens: Vec<String> = config.patient_tokens.iter().map(|t| t.to_lowercase()).collect();
    if tokens.is_empty() {
        return Err(Error::Config("scare-quote patient token list is empty".into()));
    }
    AhoCorasickBuilder::new()
        .ascii_case_insensitive(true)
        .match_kind(MatchKind::Standard)
        .build(&tokens)
        .map_err(|e| Error::Invalid(format!("failed to build patient token matcher: {e}")))
}

fn word_bounded_hits(automaton: &AhoCorasick, text: &str) -> Vec<(usize, usize)> {
    automaton
        .find_overlapping_iter(text)
        .filter_map(|m| {
            let (start, end) = (m.start(), m.end());
            let before_ok = text[..start].chars().next_back().map_or(true, |c| !is_word_char(c));
            let after_ok = text[end..].chars().next().map_or(true, |c| !is_word_char(c));
            if before_ok && after_ok {
                Some((start, end))
            } else {
                None
            }
        })
        .collect()
}

fn scare_scan_sentence(
    sentence: &Sentence,
    config: &ScareQuoteConfig,
    placeholders: &[String],
    automaton: &AhoCorasick,
) -> (Option<MatchRecord>, ScanDiagnostics) {
    let text = sentence.text.as_str();
    let mut diagnostics = ScanDiagnostics::default();
    let marks: Vec<(usize, usize)> = text
        .char_indices()
        .filter_map(|(i, c)| {
            let is_quote = c == '"'
                || (config.typographic_quotes && (c == '\u{201c}' || c == '\u{201d}'));
            if is_quote {
                Some((i, c.len_utf8()))
            } else {
                None
            }
        })
        .collect();
    if marks.is_empty() {
        return (None, diagnostics);
    }
    if marks.len() % 2 == 1 {
        diagnostics.unbalanced_quotes = 1;
        return (None, diagnostics);
    }

    let mut spans = Vec::new();
    for pair in marks.chunks(2) {
        let start = pair[0].0 + pair[0].1;
        let end = pair[1].0;
        if start >= end {
            continue;
        }
        let content = text[start..end].to_lowercase();
        if placeholders.iter().any(|p| content.contains(p.as_str())) {
            diagnostics.placeholder_spans_removed += 1;
            continue;
        }
        spans.push(Span { start, end });
    }
    if spans.is_empty() {
        return (None, diagnostics);
    }

    let hits = word_bounded_hits(automaton, text);
    let (surviving, patient_ref) = if config.require_preceding {
        let surviving: Vec<Span> = spans
            .into_iter()
            .filter(|span| hits.iter().any(|&(_, hit_end)| hit_end <= span.start))
            .collect();
        let first = hits
            .iter()
            .filter(|&&(_, hit_end)| surviving.iter().any(|s| hit_end <= s.start))
            .min_by_key(|&&(hit_start, _)| hit_start);
        (surviving, first.map(|&(s, e)| text[s..e].to_string()))
    } else {
        let first = hits.iter().min_by_key(|&&(hit_start, _)| hit_start);
        (spans, first.map(|&(s, e)| text[s..e].to_string()))
    };
    if surviving.is_empty() || patient_ref.is_none() {
        return (None, diagnostics);
    }
    (
        Some(MatchRecord {
            sentence_id: sentence.sentence_id.clone(),
            feature: BiasFeature::ScareQuotes,
            matched_terms: Vec::new(),
            quoted_spans: surviving,
            patient_ref,
        }),
        diagnostics,
    )
}

/// Applies the scare-quote rule to every sentence. Output order follows
/// input order.
pub fn detect_scare_quote_candidates(
    sentences: &[Sentence],
    config: &ScareQuoteConfig,
) -> Result<(Vec<MatchRecord>, ScanDiagnostics)> {
    let placeholders: Vec<String> =
        config.placeholders.iter().map(|p| p.to_lowercase()).collect();
    let automaton = patient_token_automaton(config)?;
    let per_sentence: Vec<(Option<MatchRecord>, ScanDiagnostics)> = sentences
        .par_iter()
        .map(|sentence| scare_scan_sentence(sentence, config, &placeholders, &automaton))
        .collect();
    let mut records = Vec::new();
    let mut totals = ScanDiagnostics::default();
    for (record, diagnostics) in per_sentence {
        totals.unbalanced_quotes += diagnostics.unbalanced_quotes;
        totals.placeholder_spans_removed += diagnostics.placeholder_spans_removed;
        if let Some(record) = record {
            records.push(record);
        }
    }
    Ok((records, totals))
}

/// Frequency table over matched terms or quoted n-grams.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermFrequencyReport {
    pub feature: BiasFeature,
    pub gram: usize,
    /// `(item, count)` rows, count descending then item ascending.
    pub rows: Vec<(String, u64)>,
    pub total_occurrences: u64,
}

/// Counts every term occurrence across the records and keeps the `n` most
/// frequent, ties broken alphabetically.
pub fn top_terms(feature: BiasFeature, records: &[MatchRecord], n: usize) -> TermFrequencyReport {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    let mut total = 0u64;
    for record in records {
        for (term, _) in &record.matched_terms {
            *counts.entry(term.as_str()).or_insert(0) += 1;
            total += 1;
        }
    }
    let mut rows: Vec<(String, u64)> =
        counts.into_iter().map(|(term, count)| (term.to_string(), count)).collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    rows.truncate(n);
    TermFrequencyReport { feature, gram: 1, rows, total_occurrences: total }
}

/// Tokenizes the quoted spans and tallies n-grams for each size from 1 to
/// `max_n`, keeping the `top` most frequent of each size.
pub fn quoted_ngrams(
    records: &[MatchRecord],
    sentences: &[Sentence],
    max_n: usize,
    top: usize,
) -> Result<Vec<TermFrequencyReport>> {
    let by_id: HashMap<&str, &Sentence> =
        sentences.iter().map(|s| (s.sentence_id.as_str(), s)).collect();
    let mut counts: Vec<HashMap<String, u64>> = vec![HashMap::new(); max_n];
    for record in records {
        let sentence = by_id.get(record.sentence_id.as_str()).ok_or_else(|| {
            Error::Invalid(format!("match references unknown sentence {:?}", record.sentence_id))
        })?;
        for span in &record.quoted_spans {
            if span.end > sentence.text.len() {
                return Err(Error::Invalid(format!(
                    "span {}..{} exceeds sentence {:?}",
                    span.start, span.end, record.sentence_id
                )));
            }
            let tokens = tokenize(span.slice(&sentence.text));
            for n in 1..=max_n {
                for window in tokens.windows(n) {
                    *counts[n - 1].entry(window.join(" ")).or_insert(0) += 1;
                }
            }
        }
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, map)| {
            let total: u64 = map.values().sum();
            let mut rows: Vec<(String, u64)> = map.into_iter().collect();
            rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            rows.truncate(top);
            TermFrequencyReport {
                feature: BiasFeature::ScareQuotes,
                gram: i + 1,
                rows,
                total_occurrences: total,
            }
        })
        .collect())
}

fn format_spans(spans: impl Iterator<Item = Span>) -> String {
    spans.map(|s| format!("{}..{}", s.start, s.end)).collect::<Vec<_>>().join(";")
}

fn parse_span(text: &str) -> Option<Span> {
    let (start, end) = text.split_once("..")?;
    Some(Span { start: start.parse().ok()?, end: end.parse().ok()? })
}

pub const MATCH_TSV_HEADER: &str = "sentence_id\tfeature\tterms\tspans";

/// Writes records as `sentence_id<TAB>feature<TAB>terms<TAB>spans`.
/// Lexicon rows join matched terms with `;`; scare-quote rows carry the
/// patient token in the terms column and the quoted spans in the span
/// column.
pub fn write_matches_tsv(path: impl AsRef<Path>, records: &[MatchRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{MATCH_TSV_HEADER}").map_err(|e| Error::io(path, e))?;
    for record in records {
        let (terms, spans) = match record.feature {
            BiasFeature::ScareQuotes => (
                record.patient_ref.clone().unwrap_or_default(),
                format_spans(record.quoted_spans.iter().copied()),
            ),
            _ => (
                record
                    .matched_terms
                    .iter()
                    .map(|(t, _)| t.as_str())
                    .collect::<Vec<_>>()
                    .join(";"),
                format_spans(record.matched_terms.iter().map(|(_, s)| *s)),
            ),
        };
        writeln!(w, "{}\t{}\t{}\t{}", record.sentence_id, record.feature, terms, spans)
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn read_matches_tsv(path: impl AsRef<Path>) -> Result<Vec<MatchRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if lineno == 0 {
            if line != MATCH_TSV_HEADER {
                return Err(Error::format(path, 1, "unexpected match file header"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::format(
                path,
                lineno + 1,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let feature: BiasFeature = fields[1]
            .parse()
            .map_err(|e: Error| Error::format(path, lineno + 1, e.to_string()))?;
        let spans: Vec<Span> = if fields[3].is_empty() {
            Vec::new()
        } else {
            fields[3]
                .split(';')
                .map(|s| {
                    parse_span(s).ok_or_else(|| {
                        Error::format(path, lineno + 1, format!("invalid span {s:?}"))
                    })
                })
                .collect::<Result<_>>()?
        };
        let record = match feature {
            BiasFeature::ScareQuotes => MatchRecord {
                sentence_id: fields[0].to_string(),
                feature,
                matched_terms: Vec::new(),
                quoted_spans: spans,
                patient_ref: if fields[2].is_empty() {
                    None
                } else {
                    Some(fields[2].to_string())
                },
            },
            _ => {
                let terms: Vec<&str> = if fields[2].is_empty() {
                    Vec::new()
                } else {
                    fields[2].split(';').collect()
                };
                if terms.len() != spans.len() {
                    return Err(Error::format(
                        path,
                        lineno + 1,
                        format!("{} terms but {} spans", terms.len(), spans.len()),
                    ));
                }
                MatchRecord {
                    sentence_id: fields[0].to_string(),
                    feature,
                    matched_terms: terms
                        .into_iter()
                        .map(|t| t.to_string())
                        .zip(spans)
                        .collect(),
                    quoted_spans: Vec::new(),
                    patient_ref: None,
                }
            }
        };
        records.push(record);
    }
    Ok(records)
}
