//! Equivalence of the compiled multi-pattern matcher with a brute-force
//! per-term regex scan implementing the same word-boundary and
//! leftmost-longest rules.
//!
//! The generators avoid U+212A (kelvin sign) and U+017F (long s): the regex
//! oracle folds case per Unicode, the compiled matcher per ASCII, and those
//! are the two code points where the foldings of ASCII letters disagree.

use std::path::PathBuf;
use std::sync::OnceLock;

use care_sd_core::lexicon::{BiasFeature, Lexicon};
use care_sd_core::matcher::CompiledMatcher;
use proptest::prelude::*;
use regex::Regex;

fn data_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '-' | '\'' | '/')
}

struct RegexOracle {
    regexes: Vec<Regex>,
}

impl RegexOracle {
    fn new(patterns: &[String]) -> Self {
        let regexes = patterns
            .iter()
            .map(|p| Regex::new(&format!("(?i){}", regex::escape(p))).unwrap())
            .collect();
        RegexOracle { regexes }
    }

    fn find(&self, text: &str) -> Vec<(usize, usize, usize)> {
        let mut hits: Vec<(usize, usize, usize)> = Vec::new();
        for (idx, re) in self.regexes.iter().enumerate() {
            let mut at = 0;
            while at <= text.len() {
                let Some(m) = re.find_at(text, at) else { break };
                let bounded = text[..m.start()].chars().next_back().is_none_or(|c| !word_char(c))
                    && text[m.end()..].chars().next().is_none_or(|c| !word_char(c));
                if bounded {
                    hits.push((idx, m.start(), m.end()));
                }
                let first = text[m.start()..].chars().next().unwrap();
                at = m.start() + first.len_utf8();
            }
        }
        hits.sort_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)));
        let mut selected = Vec::new();
        let mut cursor = 0;
        for hit in hits {
            if hit.1 >= cursor {
                cursor = hit.2;
                selected.push(hit);
            }
        }
        selected
    }
}

struct Fixture {
    matchers: Vec<CompiledMatcher>,
    oracles: Vec<RegexOracle>,
    terms: Vec<String>,
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let lexicons = [
            Lexicon::load(
                data_path("data/lexicons/stigmatizing_labels.lex"),
                BiasFeature::StigmatizingLabels,
            )
            .unwrap(),
            Lexicon::load(
                data_path("data/lexicons/doubt_markers.lex"),
                BiasFeature::DoubtMarkers,
            )
            .unwrap(),
        ];
        let matchers: Vec<CompiledMatcher> =
            lexicons.iter().map(|l| CompiledMatcher::compile(l).unwrap()).collect();
        let oracles: Vec<RegexOracle> =
            matchers.iter().map(|m| RegexOracle::new(m.patterns())).collect();
        let terms: Vec<String> =
            lexicons.iter().flat_map(|l| l.active_terms().map(str::to_string)).collect();
        Fixture { matchers, oracles, terms }
    })
}

fn assert_equivalent(text: &str) {
    let fx = fixture();
    for (matcher, oracle) in fx.matchers.iter().zip(&fx.oracles) {
        let got: Vec<(usize, usize, usize)> =
            matcher.find_matches(text).into_iter().map(|m| (m.term_index, m.start, m.end)).collect();
        let want = oracle.find(text);
        assert_eq!(got, want, "matcher and regex oracle disagree on {text:?}");
    }
}

fn text_strategy() -> impl Strategy<Value = String> {
    let terms = fixture().terms.clone();
    let noise_chars = vec![
        'a', 'e', 'r', 's', 't', 'x', 'D', 'S', '0', '7', ' ', ' ', ' ', '.', ',', '\'', '-',
        '/', '"', '(', ')', '!', '?', ';', ':', '\n', 'é', '“', '”', '–',
    ];
    let noise = prop::collection::vec(prop::sample::select(noise_chars), 0..12)
        .prop_map(|cs| cs.into_iter().collect::<String>());
    let term = prop::sample::select(terms);
    let piece = prop_oneof![
        2 => term.clone(),
        1 => term.prop_map(|t| t.to_uppercase()),
        3 => noise,
    ];
    prop::collection::vec(piece, 0..8).prop_map(|pieces| pieces.join(""))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn compiled_matcher_equals_regex_oracle(text in text_strategy()) {
        assert_equivalent(&text);
    }
}

#[test]
fn corner_cases_agree() {
    let cases = [
        "",
        "pt was agitated.",
        "AGITATED",
        "iv-abuser but not iv-abuserx",
        "the drug seeker and the frequent flier returned",
        "drug  seeker",
        "drug\nseeker",
        "pre-agitated state",
        "agitated-looking",
        "his/agitated/chart",
        "\"agitated\"",
        "“agitated”",
        "pt's chart says noncompliant.",
        "claimed claimed claimed",
        "adamant/belligerent overlap with adamant",
        "supposedly.",
        "unpleasant/annoying vs unpleasant",
        "drug seeker of care",
    ];
    for case in cases {
        assert_equivalent(case);
    }
}

#[test]
fn synthesized_corpus_agrees() {
    use care_sd_core::synth::{self, SyntheticCorpusSpec};

    let fx = fixture();
    let stigma: Vec<&str> = fx.matchers[0].patterns().iter().map(String::as_str).collect();
    let doubt: Vec<&str> = fx.matchers[1].patterns().iter().map(String::as_str).collect();
    let spec = SyntheticCorpusSpec {
        n_notes: 80,
        sentences_per_note: (4, 8),
        stigma_rate: 0.2,
        doubt_rate: 0.2,
        scare_rate: 0.1,
        positive_fraction_stigma: 0.439,
        positive_fraction_doubt: 0.310,
        positive_fraction_scare: 0.207,
        p_signal: 1.0,
        seed: 99,
    };
    let corpus = synth::synthesize(&spec, &stigma, &doubt).unwrap();
    for note in &corpus.notes {
        for sentence in care_sd_core::corpus::split_sentences(note) {
            assert_equivalent(&sentence.text);
        }
    }
}
