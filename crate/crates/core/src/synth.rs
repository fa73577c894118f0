//! Synthetic fixture corpora. Real annotated clinical notes cannot ship
//! with this repository, so tests and demos run on generated notes whose
//! labels are a known function of planted tokens: every planted sentence
//! carries a detector-visible term, and the positive ones additionally
//! carry a per-feature marker token. With `p_signal = 1.0` the label is
//! exactly "marker present", which makes the classes separable by
//! construction.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ClinicalNote;
use crate::error::{Error, Result};
use crate::lexicon::BiasFeature;
use crate::seeding;

/// Neutral clinical filler words. Chosen to be disjoint from both shipped
/// lexicons (no filler word equals any active term or any word of a
/// multi-word active term) so a filler-only sentence can never trip a
/// detector.
pub const FILLER_WORDS: &[&str] = &[
    "ambulating", "tolerating", "breakfast", "lunch", "supper", "afebrile", "stable", "vitals",
    "telemetry", "lisinopril", "metoprolol", "furosemide", "insulin", "sliding", "scale",
    "glucose", "potassium", "magnesium", "sodium", "creatinine", "baseline", "oriented", "alert",
    "resting", "comfortable", "repositioned", "turned", "ambulated", "assisted", "bathroom",
    "commode", "voiding", "adequate", "output", "intake", "appetite", "fair", "improved",
    "improving", "continued", "monitor", "monitoring", "oxygen", "cannula", "liters",
    "saturating", "saturation", "respiratory", "effort", "unlabored", "lungs", "auscultation",
    "bilateral", "edema", "trace", "extremities", "warm", "perfused", "pulses", "palpable",
    "abdomen", "soft", "nontender", "bowel", "sounds", "incision", "dressing", "intact",
    "drainage", "scant", "serosanguineous", "changed", "wound", "healing", "margins", "erythema",
    "nausea", "vomiting", "dizziness", "headache", "acetaminophen", "administered", "relief",
    "rested", "overnight", "family", "visited", "bedside", "updated", "plan", "care", "team",
    "rounded", "morning", "afternoon", "evening", "shift", "uneventful", "gait", "steady",
    "walker", "physical", "therapy", "session", "participated", "exercises", "encouraged",
    "incentive", "spirometer", "coughing", "breathing", "fluids", "diet", "advanced", "regular",
    "consistency", "supervision", "discharge", "planning", "social", "consulted", "follow",
    "scheduled", "clinic", "labs", "reviewed", "pending", "tolerated", "repeated",
];

/// Spoken fragments planted inside scare-quote sentences. None contains a
/// placeholder-filter substring, so the detector never discards them.
pub const SCARE_PHRASES: &[&str] = &[
    "i want to leave",
    "too much pain",
    "get me out of here",
    "i need more meds",
    "leave me alone",
    "hurry up",
    "makes it worse",
    "i feel awful",
];

/// The token whose presence defines a positive label for a feature. Marker
/// tokens appear nowhere else: not in the lexicons, the filler vocabulary,
/// or the scare phrases.
pub fn marker_token(feature: BiasFeature) -> &'static str {
    match feature {
        BiasFeature::StigmatizingLabels => "stigcue",
        BiasFeature::DoubtMarkers => "doubtcue",
        BiasFeature::ScareQuotes => "quotecue",
    }
}

fn default_sentences_per_note() -> (usize, usize) {
    (6, 12)
}

fn default_rate() -> f64 {
    0.08
}

fn default_scare_rate() -> f64 {
    0.05
}

fn default_positive_stigma() -> f64 {
    0.439
}

fn default_positive_doubt() -> f64 {
    0.310
}

fn default_positive_scare() -> f64 {
    0.207
}

fn default_p_signal() -> f64 {
    1.0
}

/// Generation parameters. Rates are per-sentence plant probabilities; the
/// positive fractions say how many planted sentences also receive the
/// marker token; `p_signal` is the probability that a marker-bearing
/// sentence is labeled positive (1.0 makes labels deterministic).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCorpusSpec {
    pub n_notes: usize,
    #[serde(default = "default_sentences_per_note")]
    pub sentences_per_note: (usize, usize),
    #[serde(default = "default_rate")]
    pub stigma_rate: f64,
    #[serde(default = "default_rate")]
    pub doubt_rate: f64,
    #[serde(default = "default_scare_rate")]
    pub scare_rate: f64,
    #[serde(default = "default_positive_stigma")]
    pub positive_fraction_stigma: f64,
    #[serde(default = "default_positive_doubt")]
    pub positive_fraction_doubt: f64,
    #[serde(default = "default_positive_scare")]
    pub positive_fraction_scare: f64,
    #[serde(default = "default_p_signal")]
    pub p_signal: f64,
    pub seed: u64,
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_notes == 0 {
            return Err(Error::Config("n_notes must be at least 1".into()));
        }
        let (min, max) = self.sentences_per_note;
        if min == 0 || min > max {
            return Err(Error::Config(format!(
                "sentences_per_note range ({min}, {max}) must satisfy 1 <= min <= max"
            )));
        }
        let unit = |name: &str, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {value}")))
            }
        };
        unit("stigma_rate", self.stigma_rate)?;
        unit("doubt_rate", self.doubt_rate)?;
        unit("scare_rate", self.scare_rate)?;
        unit("positive_fraction_stigma", self.positive_fraction_stigma)?;
        unit("positive_fraction_doubt", self.positive_fraction_doubt)?;
        unit("positive_fraction_scare", self.positive_fraction_scare)?;
        unit("p_signal", self.p_signal)?;
        let total = self.stigma_rate + self.doubt_rate + self.scare_rate;
        if total > 1.0 {
            return Err(Error::Config(format!(
                "plant rates sum to {total}, which exceeds 1"
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: SyntheticCorpusSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    fn positive_fraction(&self, feature: BiasFeature) -> f64 {
        match feature {
            BiasFeature::StigmatizingLabels => self.positive_fraction_stigma,
            BiasFeature::DoubtMarkers => self.positive_fraction_doubt,
            BiasFeature::ScareQuotes => self.positive_fraction_scare,
        }
    }
}

/// Ground-truth labels for the planted sentences of one feature, keyed by
/// exact sentence text.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTruth {
    pub feature: BiasFeature,
    pub rows: Vec<(String, u8)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub notes: Vec<ClinicalNote>,
    pub truth: Vec<FeatureTruth>,
}

const CATEGORIES: &[&str] = &["Nursing", "Physician", "Nursing/other", "General"];
const UNIQUENESS_ATTEMPTS: usize = 64;

#[derive(Clone, Copy)]
enum SentenceKind {
    Filler,
    Planted(BiasFeature),
}

fn draw_filler(rng: &mut ChaCha8Rng, n: usize, out: &mut Vec<&'static str>) {
    out.clear();
    for _ in 0..n {
        out.push(FILLER_WORDS[rng.gen_range(0..FILLER_WORDS.len())]);
    }
}

fn assemble(prefix: &str, tail: &[&str], marker: Option<(&str, usize)>) -> String {
    let mut sentence = String::from(prefix);
    for (i, word) in tail.iter().enumerate() {
        if let Some((token, position)) = marker {
            if position == i {
                sentence.push(' ');
                sentence.push_str(token);
            }
        }
        sentence.push(' ');
        sentence.push_str(word);
    }
    if let Some((token, position)) = marker {
        if position >= tail.len() {
            sentence.push(' ');
            sentence.push_str(token);
        }
    }
    sentence.push('.');
    sentence
}

/// Generates a corpus. `stigma_terms` and `doubt_terms` are the detector
/// vocabularies to plant from (normally the active terms of the shipped
/// lexicons); a feature with a positive plant rate needs a non-empty list.
pub fn synthesize(
    spec: &SyntheticCorpusSpec,
    stigma_terms: &[&str],
    doubt_terms: &[&str],
) -> Result<SyntheticCorpus> {
    spec.validate()?;
    if spec.stigma_rate > 0.0 && stigma_terms.is_empty() {
        return Err(Error::Config("stigma_rate > 0 requires stigma terms to plant".into()));
    }
    if spec.doubt_rate > 0.0 && doubt_terms.is_empty() {
        return Err(Error::Config("doubt_rate > 0 requires doubt terms to plant".into()));
    }

    let mut rng = seeding::master_rng(spec.seed);
    let mut seen: HashSet<String> = HashSet::new();
    let mut notes = Vec::with_capacity(spec.n_notes);
    let mut truth: Vec<FeatureTruth> = [
        BiasFeature::StigmatizingLabels,
        BiasFeature::DoubtMarkers,
        BiasFeature::ScareQuotes,
    ]
    .into_iter()
    .map(|feature| FeatureTruth { feature, rows: Vec::new() })
    .collect();

    let mut tail: Vec<&'static str> = Vec::new();
    for note_idx in 0..spec.n_notes {
        let n_sentences = rng.gen_range(spec.sentences_per_note.0..=spec.sentences_per_note.1);
        let mut body = String::new();
        for _ in 0..n_sentences {
            let roll: f64 = rng.gen();
            let kind = if roll < spec.stigma_rate {
                SentenceKind::Planted(BiasFeature::StigmatizingLabels)
            } else if roll < spec.stigma_rate + spec.doubt_rate {
                SentenceKind::Planted(BiasFeature::DoubtMarkers)
            } else if roll < spec.stigma_rate + spec.doubt_rate + spec.scare_rate {
                SentenceKind::Planted(BiasFeature::ScareQuotes)
            } else {
                SentenceKind::Filler
            };

            let (prefix, feature) = match kind {
                SentenceKind::Filler => (String::new(), None),
                SentenceKind::Planted(feature) => {
                    let prefix = match feature {
                        BiasFeature::StigmatizingLabels => {
                            let term = stigma_terms[rng.gen_range(0..stigma_terms.len())];
                            format!("pt was {term}")
                        }
                        BiasFeature::DoubtMarkers => {
                            let term = doubt_terms[rng.gen_range(0..doubt_terms.len())];
                            format!("pt {term}")
                        }
                        BiasFeature::ScareQuotes => {
                            let phrase = SCARE_PHRASES[rng.gen_range(0..SCARE_PHRASES.len())];
                            format!("pt states \"{phrase}\"")
                        }
                    };
                    (prefix, Some(feature))
                }
            };

            let (marker, label) = match feature {
                Some(feature) if rng.gen::<f64>() < spec.positive_fraction(feature) => {
                    let label = u8::from(rng.gen::<f64>() < spec.p_signal);
                    (Some(marker_token(feature)), label)
                }
                _ => (None, 0),
            };

            let n_tail = rng.gen_range(5..=9);
            let marker_at = marker.map(|token| (token, rng.gen_range(0..=n_tail)));
            let mut sentence = None;
            for _ in 0..UNIQUENESS_ATTEMPTS {
                draw_filler(&mut rng, n_tail, &mut tail);
                let head: &str = if prefix.is_empty() { tail[0] } else { &prefix };
                let rest = if prefix.is_empty() { &tail[1..] } else { &tail[..] };
                let candidate = assemble(head, rest, marker_at);
                if seen.insert(candidate.clone()) {
                    sentence = Some(candidate);
                    break;
                }
            }
            let Some(sentence) = sentence else {
                return Err(Error::Config(
                    "filler vocabulary exhausted while generating unique sentences; \
                     reduce the corpus size"
                        .into(),
                ));
            };

            if let Some(feature) = feature {
                let slot = truth.iter_mut().find(|t| t.feature == feature).unwrap();
                slot.rows.push((sentence.clone(), label));
            }
            if !body.is_empty() {
                body.push('\n');
            }
            body.push_str(&sentence);
        }

        notes.push(ClinicalNote {
            note_id: (note_idx + 1).to_string(),
            subject_id: (10_000 + note_idx % 997).to_string(),
            hadm_id: Some((100_000 + note_idx).to_string()),
            category: CATEGORIES[note_idx % CATEGORIES.len()].to_string(),
            description: "Report".to_string(),
            provider_id: Some((2_000 + note_idx % 211).to_string()),
            text: body,
        });
    }

    Ok(SyntheticCorpus { notes, truth })
}

/// Writes notes in the ingestion schema (ROW_ID, SUBJECT_ID, HADM_ID,
/// CATEGORY, DESCRIPTION, CGID, TEXT).
pub fn save_corpus_csv(path: impl AsRef<Path>, notes: &[ClinicalNote]) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(Error::from)?;
    writer
        .write_record(["ROW_ID", "SUBJECT_ID", "HADM_ID", "CATEGORY", "DESCRIPTION", "CGID", "TEXT"])
        .map_err(Error::from)?;
    for note in notes {
        writer
            .write_record([
                note.note_id.as_str(),
                note.subject_id.as_str(),
                note.hadm_id.as_deref().unwrap_or(""),
                note.category.as_str(),
                note.description.as_str(),
                note.provider_id.as_deref().unwrap_or(""),
                note.text.as_str(),
            ])
            .map_err(Error::from)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn truth_file_name(feature: BiasFeature) -> String {
    format!("truth_{feature}.tsv")
}

pub const TRUTH_TSV_HEADER: &str = "text\tlabel";

pub fn save_truth_tsv(path: impl AsRef<Path>, rows: &[(String, u8)]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{TRUTH_TSV_HEADER}").map_err(|e| Error::io(path, e))?;
    for (text, label) in rows {
        writeln!(w, "{text}\t{label}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn load_truth_tsv(path: impl AsRef<Path>) -> Result<HashMap<String, u8>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = HashMap::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if lineno == 0 {
            if line != TRUTH_TSV_HEADER {
                return Err(Error::format(path, 1, "expected header `text\\tlabel`"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (text, label) = line
            .rsplit_once('\t')
            .ok_or_else(|| Error::format(path, lineno + 1, "expected `text<TAB>label`"))?;
        let label: u8 = match label {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::format(path, lineno + 1, format!("invalid label {other:?}")))
            }
        };
        rows.insert(text.to_string(), label);
    }
    Ok(rows)
}
