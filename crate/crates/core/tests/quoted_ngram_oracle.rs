//! Cross-checks the quoted-phrase frequency tables against a brute-force
//! recount that tokenizes the recorded quoted spans with an independent
//! regex tokenizer.

use std::collections::HashMap;

use care_sd_core::corpus::Sentence;
use care_sd_core::detect::{detect_scare_quote_candidates, quoted_ngrams, ScareQuoteConfig};
use regex::Regex;

fn sentence(i: usize, text: &str) -> Sentence {
    let note_id = format!("n{i}");
    Sentence {
        sentence_id: Sentence::id_for(&note_id, 0),
        note_id,
        index: 0,
        text: text.to_string(),
        token_count: text.split_whitespace().count(),
    }
}

fn fixture_sentences() -> Vec<Sentence> {
    let subjects = ["pt", "patient", "he", "she", "they"];
    let verbs = ["says", "states", "reports", "yelled", "whispered"];
    let phrases = [
        "i want to go home",
        "too much pain",
        "nobody listens",
        "i need my meds now",
        "leave me alone",
        "it hurts everywhere",
        "you never help",
        "get out",
    ];
    let mut sentences = Vec::new();
    let mut i = 0;
    for (a, subject) in subjects.iter().enumerate() {
        for (b, verb) in verbs.iter().enumerate() {
            let phrase = phrases[(a * 5 + b) % phrases.len()];
            sentences.push(sentence(i, &format!("{subject} {verb} \"{phrase}\" repeatedly.")));
            i += 1;
        }
    }
    for (b, verb) in verbs.iter().enumerate() {
        let p1 = phrases[b % phrases.len()];
        let p2 = phrases[(b + 3) % phrases.len()];
        sentences.push(sentence(i, &format!("pt {verb} \"{p1}\" and later \"{p2}\" again.")));
        i += 1;
    }
    for k in 0..20 {
        sentences.push(sentence(i, &format!("afebrile overnight, dose {k} unchanged.")));
        i += 1;
    }
    sentences.push(sentence(i, "pt said \"this quote never closes."));
    i += 1;
    sentences.push(sentence(i, "patient notes \"name\" on the wristband form."));
    i += 1;
    sentences.push(sentence(i, "she stated \"yes\" to the consent template."));
    i += 1;
    for k in 0..30 {
        let phrase = phrases[k % phrases.len()];
        sentences.push(sentence(i, &format!("nurse overheard pt muttering \"{phrase}\" x{k}.")));
        i += 1;
    }
    sentences.push(sentence(i, "pt shouted \"\" then went quiet."));
    i += 1;
    sentences.push(sentence(i, "he described it as “sharp, stabbing pain” today."));
    sentences
}

fn oracle_tokens(text: &str) -> Vec<String> {
    let re = Regex::new(r"[\p{Alphabetic}\p{Nd}'/-]+").unwrap();
    re.find_iter(&text.to_lowercase())
        .map(|m| m.as_str().trim_matches(|c| matches!(c, '-' | '\'' | '/')).to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

#[test]
fn quoted_ngram_tables_match_a_brute_force_recount() {
    let sentences = fixture_sentences();
    let config = ScareQuoteConfig {
        placeholders: vec!["name".into(), "yes".into()],
        ..ScareQuoteConfig::default()
    };
    let (records, diagnostics) = detect_scare_quote_candidates(&sentences, &config).unwrap();
    assert!(!records.is_empty());
    assert_eq!(diagnostics.unbalanced_quotes, 1);
    assert_eq!(diagnostics.placeholder_spans_removed, 2);

    let max_n = 3;
    let reports = quoted_ngrams(&records, &sentences, max_n, usize::MAX).unwrap();
    assert_eq!(reports.len(), max_n);

    let by_id: HashMap<&str, &Sentence> =
        sentences.iter().map(|s| (s.sentence_id.as_str(), s)).collect();
    let mut expected: Vec<HashMap<String, u64>> = vec![HashMap::new(); max_n];
    for record in &records {
        let text = &by_id[record.sentence_id.as_str()].text;
        for span in &record.quoted_spans {
            let tokens = oracle_tokens(span.slice(text));
            for n in 1..=max_n {
                if tokens.len() < n {
                    continue;
                }
                for start in 0..=(tokens.len() - n) {
                    let gram = tokens[start..start + n].join(" ");
                    *expected[n - 1].entry(gram).or_insert(0) += 1;
                }
            }
        }
    }

    for (report, want) in reports.iter().zip(&expected) {
        let total: u64 = want.values().sum();
        assert_eq!(report.total_occurrences, total, "{}-gram totals differ", report.gram);
        let mut want_rows: Vec<(String, u64)> =
            want.iter().map(|(g, &c)| (g.clone(), c)).collect();
        want_rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        assert_eq!(report.rows, want_rows, "{}-gram rows differ", report.gram);
    }
}

#[test]
fn truncation_keeps_the_top_rows_but_full_totals() {
    let sentences = fixture_sentences();
    let config = ScareQuoteConfig::default();
    let (records, _) = detect_scare_quote_candidates(&sentences, &config).unwrap();
    let full = quoted_ngrams(&records, &sentences, 2, usize::MAX).unwrap();
    let cut = quoted_ngrams(&records, &sentences, 2, 5).unwrap();
    for (f, c) in full.iter().zip(&cut) {
        assert_eq!(c.rows.len(), f.rows.len().min(5));
        assert_eq!(&f.rows[..c.rows.len()], c.rows.as_slice());
        assert_eq!(f.total_occurrences, c.total_occurrences);
    }
}

#[test]
fn unknown_sentence_reference_is_rejected() {
    let sentences = fixture_sentences();
    let config = ScareQuoteConfig::default();
    let (mut records, _) = detect_scare_quote_candidates(&sentences, &config).unwrap();
    records[0].sentence_id = "n999999:0".into();
    let err = quoted_ngrams(&records, &sentences, 2, 10).unwrap_err();
    assert!(err.to_string().contains("n999999:0"), "unexpected message: {err}");
}
