//! Term lists with provenance. Every entry keeps its origin (stem word,
//! embedding neighbor, generated candidate, or manual addition) and a status;
//! pruning and noise removal flip statuses instead of deleting entries, so
//! the full expansion-and-review audit trail stays in the file.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three linguistic bias features the pipeline looks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasFeature {
    DoubtMarkers,
    StigmatizingLabels,
    ScareQuotes,
}

impl BiasFeature {
    pub fn as_str(self) -> &'static str {
        match self {
            BiasFeature::DoubtMarkers => "doubt_markers",
            BiasFeature::StigmatizingLabels => "stigmatizing_labels",
            BiasFeature::ScareQuotes => "scare_quotes",
        }
    }

    /// The two features backed by a lexicon (scare quotes are rule-based).
    pub fn lexicon_features() -> [BiasFeature; 2] {
        [BiasFeature::DoubtMarkers, BiasFeature::StigmatizingLabels]
    }
}

impl fmt::Display for BiasFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BiasFeature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "doubt_markers" => Ok(BiasFeature::DoubtMarkers),
            "stigmatizing_labels" => Ok(BiasFeature::StigmatizingLabels),
            "scare_quotes" => Ok(BiasFeature::ScareQuotes),
            other => Err(Error::Config(format!(
                "unknown feature {other:?}; expected doubt_markers, stigmatizing_labels, or scare_quotes"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermOrigin {
    Stem,
    Embedding,
    Generated,
    Manual,
}

impl TermOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            TermOrigin::Stem => "stem",
            TermOrigin::Embedding => "embedding",
            TermOrigin::Generated => "generated",
            TermOrigin::Manual => "manual",
        }
    }
}

impl FromStr for TermOrigin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stem" => Ok(TermOrigin::Stem),
            "embedding" => Ok(TermOrigin::Embedding),
            "generated" => Ok(TermOrigin::Generated),
            "manual" => Ok(TermOrigin::Manual),
            other => Err(Error::Invalid(format!("unknown term origin {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermStatus {
    Active,
    Pruned,
    NoiseRemoved,
}

impl TermStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TermStatus::Active => "active",
            TermStatus::Pruned => "pruned",
            TermStatus::NoiseRemoved => "noise_removed",
        }
    }
}

impl FromStr for TermStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "active" => Ok(TermStatus::Active),
            "pruned" => Ok(TermStatus::Pruned),
            "noise_removed" => Ok(TermStatus::NoiseRemoved),
            other => Err(Error::Invalid(format!("unknown term status {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub term: String,
    pub origin: TermOrigin,
    pub status: TermStatus,
    pub source_stem: Option<String>,
}

/// A term list for one bias feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub feature: BiasFeature,
    entries: Vec<LexiconEntry>,
}

/// Tally returned by [`Lexicon::import_candidates`].
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ImportReport {
    pub added: usize,
    pub duplicates: usize,
}

/// One reviewed expansion candidate: what each annotator wanted and the
/// adjudicated outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneDecision {
    pub term: String,
    pub keep_a: bool,
    pub keep_b: bool,
    pub final_keep: bool,
}

fn validate_term(term: &str) -> Result<()> {
    if term.is_empty() {
        return Err(Error::Invalid("empty lexicon term".into()));
    }
    if term != term.trim() {
        return Err(Error::Invalid(format!("term {term:?} has surrounding whitespace")));
    }
    if term != term.to_lowercase() {
        return Err(Error::Invalid(format!("term {term:?} is not lowercase")));
    }
    Ok(())
}

impl Lexicon {
    pub fn new(feature: BiasFeature, entries: Vec<LexiconEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for entry in &entries {
            validate_term(&entry.term)?;
            if !seen.insert(entry.term.clone()) {
                return Err(Error::Invalid(format!("duplicate term {:?}", entry.term)));
            }
        }
        Ok(Lexicon { feature, entries })
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn get(&self, term: &str) -> Option<&LexiconEntry> {
        self.entries.iter().find(|e| e.term == term)
    }

    pub fn active_terms(&self) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(|e| e.status == TermStatus::Active)
            .map(|e| e.term.as_str())
    }

    pub fn active_count(&self) -> usize {
        self.active_terms().count()
    }

    pub fn count_with_status(&self, status: TermStatus) -> usize {
        self.entries.iter().filter(|e| e.status == status).count()
    }

    /// Terms with origin `stem`, in file order.
    pub fn stems(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.origin == TermOrigin::Stem)
            .map(|e| e.term.as_str())
            .collect()
    }

    /// Loads a lexicon file: one `term<TAB>origin<TAB>status[<TAB>source_stem]`
    /// per line, `#` comments and blank lines ignored.
    pub fn load(path: impl AsRef<Path>, feature: BiasFeature) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        let mut seen: HashSet<String> = HashSet::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim_end();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() < 3 || fields.len() > 4 {
                return Err(Error::format(
                    path,
                    lineno + 1,
                    format!("expected 3 or 4 tab-separated fields, found {}", fields.len()),
                ));
            }
            let term = fields[0].to_string();
            validate_term(&term).map_err(|e| Error::format(path, lineno + 1, e.to_string()))?;
            if !seen.insert(term.clone()) {
                return Err(Error::format(path, lineno + 1, format!("duplicate term {term:?}")));
            }
            let origin: TermOrigin = fields[1]
                .parse()
                .map_err(|e: Error| Error::format(path, lineno + 1, e.to_string()))?;
            let status: TermStatus = fields[2]
                .parse()
                .map_err(|e: Error| Error::format(path, lineno + 1, e.to_string()))?;
            let source_stem = fields.get(3).map(|s| s.to_string()).filter(|s| !s.is_empty());
            entries.push(LexiconEntry {
                term,
                origin,
                status,
                source_stem,
            });
        }
        Ok(Lexicon { feature, entries })
    }

    /// Saves entries in load order; `load` of the result reproduces the
    /// entries exactly.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        for entry in &self.entries {
            match &entry.source_stem {
                Some(stem) => writeln!(
                    w,
                    "{}\t{}\t{}\t{}",
                    entry.term,
                    entry.origin.as_str(),
                    entry.status.as_str(),
                    stem
                ),
                None => writeln!(
                    w,
                    "{}\t{}\t{}",
                    entry.term,
                    entry.origin.as_str(),
                    entry.status.as_str()
                ),
            }
            .map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    /// Adds candidate terms (normalized to trimmed lowercase) with the given
    /// origin and status `active`. Terms already present are not re-added;
    /// the report counts both outcomes.
    pub fn import_candidates<I, S>(&mut self, candidates: I, origin: TermOrigin) -> ImportReport
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut existing: HashSet<String> = self.entries.iter().map(|e| e.term.clone()).collect();
        let mut report = ImportReport::default();
        for candidate in candidates {
            let term = candidate.as_ref().trim().to_lowercase();
            if term.is_empty() || term.starts_with('#') {
                continue;
            }
            if existing.insert(term.clone()) {
                self.entries.push(LexiconEntry {
                    term,
                    origin,
                    status: TermStatus::Active,
                    source_stem: None,
                });
                report.added += 1;
            } else {
                report.duplicates += 1;
            }
        }
        report
    }

    /// Adds embedding-proposed candidates as `(stem, candidate)` pairs so
    /// each new entry records which stem it expanded from. Normalization and
    /// deduplication match [`Lexicon::import_candidates`]; when the same
    /// candidate is proposed by several stems the first pair wins.
    pub fn import_expansions<I, S, T>(&mut self, pairs: I) -> ImportReport
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut existing: HashSet<String> = self.entries.iter().map(|e| e.term.clone()).collect();
        let mut report = ImportReport::default();
        for (stem, candidate) in pairs {
            let term = candidate.as_ref().trim().to_lowercase();
            if term.is_empty() || term.starts_with('#') {
                continue;
            }
            if existing.insert(term.clone()) {
                self.entries.push(LexiconEntry {
                    term,
                    origin: TermOrigin::Embedding,
                    status: TermStatus::Active,
                    source_stem: Some(stem.as_ref().trim().to_lowercase()),
                });
                report.added += 1;
            } else {
                report.duplicates += 1;
            }
        }
        report
    }

    /// Applies reviewed keep/remove decisions. Terms whose adjudicated action
    /// is remove get status `pruned` (entries are never deleted). Returns the
    /// fraction of decisions on which the two annotators agreed.
    pub fn apply_prune_decisions(&mut self, decisions: &[PruneDecision]) -> Result<f64> {
        let mut index: HashMap<String, usize> = HashMap::new();
        for (i, entry) in self.entries.iter().enumerate() {
            index.insert(entry.term.clone(), i);
        }
        for decision in decisions {
            if !index.contains_key(decision.term.as_str()) {
                return Err(Error::Invalid(format!(
                    "prune decision for unknown term {:?}",
                    decision.term
                )));
            }
        }
        let mut agreements = 0usize;
        for decision in decisions {
            if decision.keep_a == decision.keep_b {
                agreements += 1;
            }
            if !decision.final_keep {
                let idx = index[decision.term.as_str()];
                self.entries[idx].status = TermStatus::Pruned;
            }
        }
        if decisions.is_empty() {
            return Ok(1.0);
        }
        Ok(agreements as f64 / decisions.len() as f64)
    }

    /// Marks the listed terms `noise_removed`. Unknown terms are warned about
    /// and returned, not fatal.
    pub fn remove_noise_terms<S: AsRef<str>>(&mut self, terms: &[S]) -> Vec<String> {
        let mut unknown = Vec::new();
        for term in terms {
            let term = term.as_ref();
            match self.entries.iter_mut().find(|e| e.term == term) {
                Some(entry) => entry.status = TermStatus::NoiseRemoved,
                None => {
                    log::warn!("noise term {term:?} is not in the {} lexicon", self.feature);
                    unknown.push(term.to_string());
                }
            }
        }
        unknown
    }
}
