//! Golden-file checks for the tokenizer and the sentence segmenter, plus a
//! corpus-statistics cross-check against an independently coded counter.

use std::path::PathBuf;

use care_sd_core::corpus::{self, ClinicalNote};
use care_sd_core::features;
use regex::Regex;

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn tokenizer_matches_the_golden_cases() {
    let text = std::fs::read_to_string(fixture_path("tokenize_cases.tsv")).unwrap();
    let mut n_cases = 0;
    for (lineno, line) in text.lines().enumerate() {
        let (input, expected) = line
            .split_once('\t')
            .unwrap_or_else(|| panic!("fixture line {} lacks a tab", lineno + 1));
        let tokens = features::tokenize(input);
        let rendered = tokens.join("|");
        assert_eq!(
            rendered,
            expected,
            "tokenize({input:?}) mismatch on fixture line {}",
            lineno + 1
        );
        n_cases += 1;
    }
    assert!(n_cases >= 50, "expected at least 50 tokenizer cases, found {n_cases}");
}

struct SegmentationCase {
    name: String,
    raw: String,
    expected: Vec<String>,
}

fn load_segmentation_cases() -> Vec<SegmentationCase> {
    let text = std::fs::read_to_string(fixture_path("segmentation_cases.txt")).unwrap();
    let mut cases: Vec<SegmentationCase> = Vec::new();
    let mut raw_lines: Vec<&str> = Vec::new();
    let mut in_expected = false;
    for line in text.lines() {
        if let Some(name) = line.strip_prefix(">>> ") {
            cases.push(SegmentationCase {
                name: name.to_string(),
                raw: String::new(),
                expected: Vec::new(),
            });
            raw_lines.clear();
            in_expected = false;
        } else if line == "<<< expected" {
            let case = cases.last_mut().expect("expected marker before any note");
            case.raw = raw_lines.join("\n");
            in_expected = true;
        } else if in_expected {
            if !line.is_empty() {
                cases.last_mut().unwrap().expected.push(line.to_string());
            }
        } else {
            raw_lines.push(line);
        }
    }
    cases
}

fn note_from(name: &str, idx: usize, text: &str) -> ClinicalNote {
    ClinicalNote {
        note_id: name.to_string(),
        subject_id: format!("subj{}", idx % 7),
        hadm_id: None,
        category: "Nursing".into(),
        description: String::new(),
        provider_id: None,
        text: text.to_string(),
    }
}

#[test]
fn segmentation_matches_the_golden_cases() {
    let cases = load_segmentation_cases();
    assert!(cases.len() >= 20, "expected at least 20 notes, found {}", cases.len());
    for (idx, case) in cases.iter().enumerate() {
        let note = note_from(&case.name, idx, &case.raw);
        let sentences = corpus::split_sentences(&note);
        let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(texts, case.expected, "segmentation mismatch for {}", case.name);
        for sentence in &sentences {
            assert_eq!(sentence.note_id, case.name);
            assert_eq!(sentence.token_count, features::word_count(&sentence.text));
        }
    }
}

#[test]
fn crlf_line_endings_segment_like_lf() {
    let note = note_from("crlf", 0, "Admitted for CHF.\r\nDiuresis ongoing.");
    let sentences = corpus::split_sentences(&note);
    let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
    assert_eq!(texts, vec!["Admitted for CHF.", "Diuresis ongoing."]);
}

/// Word counter written against the same token definition but with
/// different machinery (a regex over ASCII word characters). The fixture is
/// ASCII apart from typographic quotes, which neither side treats as word
/// characters.
fn independent_word_count(text: &str, re: &Regex) -> usize {
    re.find_iter(text)
        .filter(|m| m.as_str().chars().any(|c| c.is_ascii_alphanumeric()))
        .count()
}

#[test]
fn corpus_stats_agree_with_an_independent_counter() {
    let cases = load_segmentation_cases();
    let notes: Vec<ClinicalNote> = cases
        .iter()
        .enumerate()
        .map(|(idx, case)| note_from(&case.name, idx, &case.raw))
        .collect();
    let mut sentences = Vec::new();
    for note in &notes {
        sentences.extend(corpus::split_sentences(note));
    }
    let n_raw = sentences.len();
    let sentences = corpus::dedup_sentences(sentences);
    assert_eq!(sentences.len(), n_raw, "fixture sentences are all distinct");

    let stats = corpus::corpus_stats(&notes, &sentences);
    let re = Regex::new(r"[A-Za-z0-9'/-]+").unwrap();
    let note_words: usize = notes.iter().map(|n| independent_word_count(&n.text, &re)).sum();
    let sentence_words: usize =
        sentences.iter().map(|s| independent_word_count(&s.text, &re)).sum();

    assert_eq!(stats.n_notes, notes.len());
    assert_eq!(stats.n_sentences, sentences.len());
    assert_eq!(stats.n_patients, 7);
    assert_eq!(stats.n_providers, 0);
    let expected_note_avg = note_words as f64 / notes.len() as f64;
    let expected_sentence_avg = sentence_words as f64 / sentences.len() as f64;
    assert!((stats.avg_note_words - expected_note_avg).abs() < 1e-12);
    assert!((stats.avg_sentence_words - expected_sentence_avg).abs() < 1e-12);
}
