//! Multi-pattern term matching over sentence text.
//!
//! All active lexicon terms are compiled into one Aho-Corasick automaton.
//! Raw hits are filtered to word-boundary occurrences (a boundary is the
//! start or end of the text, or an adjacent character that is not a word
//! character as defined by [`crate::features::is_word_char`]), then reduced
//! to a non-overlapping leftmost-longest selection.

use aho_corasick::{AhoCorasick, AhoCorasickBuilder, MatchKind};

use crate::error::{Error, Result};
use crate::features::is_word_char;
use crate::lexicon::Lexicon;

/// One term occurrence. `start..end` are byte offsets into the scanned text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermMatch {
    pub term_index: usize,
    pub start: usize,
    pub end: usize,
}

/// Case-insensitive matcher for a lexicon's active terms.
#[derive(Debug)]
pub struct CompiledMatcher {
    automaton: AhoCorasick,
    patterns: Vec<String>,
}

fn normalize_pattern(term: &str) -> String {
    term.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl CompiledMatcher {
    /// Compiles the lexicon's active terms. Multi-word terms are stored with
    /// single spaces, matching the whitespace-normalized sentence text.
    pub fn compile(lexicon: &Lexicon) -> Result<Self> {
        let patterns: Vec<String> = lexicon.active_terms().map(normalize_pattern).collect();
        if patterns.is_empty() {
            return Err(Error::Invalid(format!(
                "the {} lexicon has no active terms to compile",
                lexicon.feature
            )));
        }
        let automaton = AhoCorasickBuilder::new()
            .ascii_case_insensitive(true)
            .match_kind(MatchKind::Standard)
            .build(&patterns)
            .map_err(|e| Error::Invalid(format!("failed to build matcher: {e}")))?;
        Ok(CompiledMatcher { automaton, patterns })
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    pub fn pattern(&self, term_index: usize) -> &str {
        &self.patterns[term_index]
    }

    /// All word-bounded occurrences, reduced to a non-overlapping selection
    /// that prefers the leftmost match and, among matches starting at the
    /// same offset, the longest.
    pub fn find_matches(&self, text: &str) -> Vec<TermMatch> {
        let mut hits: Vec<TermMatch> = self
            .automaton
            .find_overlapping_iter(text)
            .filter_map(|m| {
                let (start, end) = (m.start(), m.end());
                let before_ok = text[..start].chars().next_back().map_or(true, |c| !is_word_char(c));
                let after_ok = text[end..].chars().next().map_or(true, |c| !is_word_char(c));
                if before_ok && after_ok {
                    Some(TermMatch { term_index: m.pattern().as_usize(), start, end })
                } else {
                    None
                }
            })
            .collect();
        hits.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
        let mut selected = Vec::new();
        let mut cursor = 0usize;
        for hit in hits {
            if hit.start >= cursor {
                cursor = hit.end;
                selected.push(hit);
            }
        }
        selected
    }
}
