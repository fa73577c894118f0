//! Text features for the classifiers: tokenization, unigram+bigram
//! vocabularies, count vectors, and stratified train/test/fold splits.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

/// True for characters that belong inside a token: letters, digits, and the
/// internal punctuation that clinical shorthand glues words with
/// ("drug-seeking", "10/10", "abuser's").
pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '\'' || c == '/'
}

fn trim_token(tok: &str) -> &str {
    tok.trim_matches(|c| matches!(c, '-' | '\'' | '/'))
}

/// Lowercases and splits text into tokens: maximal runs of word characters,
/// with hyphen/apostrophe/slash kept only when internal. Runs without any
/// letter or digit are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if is_word_char(c) {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            push_token(&text[s..i], &mut tokens);
        }
    }
    if let Some(s) = start {
        push_token(&text[s..], &mut tokens);
    }
    tokens
}

fn push_token(run: &str, out: &mut Vec<String>) {
    let tok = trim_token(run);
    if tok.chars().any(|c| c.is_alphanumeric()) {
        out.push(tok.to_lowercase());
    }
}

/// Number of tokens in `text`.
pub fn word_count(text: &str) -> usize {
    tokenize(text).len()
}

/// N-gram vocabulary mapping each kept unigram/bigram to a dense column
/// index. Indices are assigned lexicographically, so two builds over the same
/// corpus agree exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    entries: BTreeMap<String, usize>,
    ngram_min: usize,
    ngram_max: usize,
    min_df: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, ngram: &str) -> Option<usize> {
        self.entries.get(ngram).copied()
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    /// N-grams in index order.
    pub fn ngrams(&self) -> Vec<&str> {
        let mut v: Vec<(&str, usize)> = self
            .entries
            .iter()
            .map(|(ngram, &idx)| (ngram.as_str(), idx))
            .collect();
        v.sort_by_key(|&(_, idx)| idx);
        v.into_iter().map(|(ngram, _)| ngram).collect()
    }

    /// All unigrams and bigrams of `text`, in reading order.
    pub fn extract_ngrams(text: &str) -> Vec<String> {
        let tokens = tokenize(text);
        let mut grams = Vec::with_capacity(tokens.len() * 2);
        grams.extend(tokens.iter().cloned());
        for pair in tokens.windows(2) {
            grams.push(format!("{} {}", pair[0], pair[1]));
        }
        grams
    }

    /// FNV-1a hash over the index-ordered entries; stored in model files so a
    /// model is never applied against the wrong vocabulary.
    pub fn checksum(&self) -> String {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                hash ^= u64::from(b);
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for ngram in self.ngrams() {
            eat(ngram.as_bytes());
            eat(b"\n");
        }
        format!("fnv1a:{hash:016x}")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("ngram\tindex\n");
        for (idx, ngram) in self.ngrams().iter().enumerate() {
            out.push_str(ngram);
            out.push('\t');
            out.push_str(&idx.to_string());
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = BTreeMap::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if lineno == 0 || line.is_empty() {
                continue;
            }
            let (ngram, idx) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(path, lineno + 1, "expected ngram<TAB>index"))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::format(path, lineno + 1, format!("bad index {idx:?}")))?;
            if entries.insert(ngram.to_string(), idx).is_some() {
                return Err(Error::format(path, lineno + 1, format!("duplicate ngram {ngram:?}")));
            }
        }
        let vocab = Vocabulary {
            entries,
            ngram_min: 1,
            ngram_max: 2,
            min_df: 1,
        };
        let indices: HashSet<usize> = vocab.entries.values().copied().collect();
        if indices.len() != vocab.entries.len() || indices.iter().any(|&i| i >= vocab.entries.len()) {
            return Err(Error::Invalid(format!(
                "{}: vocabulary indices are not a bijection onto 0..{}",
                path.display(),
                vocab.entries.len()
            )));
        }
        Ok(vocab)
    }
}

/// Builds the unigram+bigram vocabulary from training texts, keeping n-grams
/// whose document frequency is at least `min_df`.
pub fn build_vocabulary<S: AsRef<str>>(texts: &[S], min_df: usize) -> Result<Vocabulary> {
    if texts.is_empty() {
        return Err(Error::Invalid("cannot build a vocabulary from an empty corpus".into()));
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for text in texts {
        let mut seen: HashSet<String> = HashSet::new();
        for gram in Vocabulary::extract_ngrams(text.as_ref()) {
            seen.insert(gram);
        }
        for gram in seen {
            *df.entry(gram).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<String> = df
        .into_iter()
        .filter(|&(_, count)| count >= min_df)
        .map(|(gram, _)| gram)
        .collect();
    if kept.is_empty() {
        return Err(Error::Invalid(format!(
            "no n-gram reaches the document-frequency floor {min_df}"
        )));
    }
    kept.sort_unstable();
    let entries = kept.into_iter().enumerate().map(|(i, g)| (g, i)).collect();
    Ok(Vocabulary {
        entries,
        ngram_min: 1,
        ngram_max: 2,
        min_df,
    })
}

/// Sparse per-row count vectors over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    n_cols: usize,
    rows: Vec<Vec<(u32, u32)>>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Sorted (column, count) pairs of one row.
    pub fn row(&self, i: usize) -> &[(u32, u32)] {
        &self.rows[i]
    }

    /// Count at (row, col); zero when the cell is not stored.
    pub fn get(&self, row: usize, col: usize) -> u32 {
        let col = col as u32;
        match self.rows[row].binary_search_by_key(&col, |&(c, _)| c) {
            Ok(pos) => self.rows[row][pos].1,
            Err(_) => 0,
        }
    }

    /// Matrix restricted to `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            n_cols: self.n_cols,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn from_rows(rows: Vec<Vec<(u32, u32)>>, n_cols: usize) -> Self {
        FeatureMatrix { n_cols, rows }
    }
}

/// How token occurrences are weighted in the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountWeighting {
    /// Raw occurrence counts.
    #[default]
    Counts,
    /// Presence/absence (each kept n-gram contributes at most 1).
    Binary,
}

/// Counts vocabulary n-grams per text. Out-of-vocabulary n-grams are ignored.
pub fn vectorize<S: AsRef<str>>(texts: &[S], vocab: &Vocabulary) -> FeatureMatrix {
    vectorize_weighted(texts, vocab, CountWeighting::Counts)
}

pub fn vectorize_weighted<S: AsRef<str>>(
    texts: &[S],
    vocab: &Vocabulary,
    weighting: CountWeighting,
) -> FeatureMatrix {
    let rows = texts
        .iter()
        .map(|text| {
            let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
            for gram in Vocabulary::extract_ngrams(text.as_ref()) {
                if let Some(idx) = vocab.index_of(&gram) {
                    let slot = counts.entry(idx as u32).or_insert(0);
                    match weighting {
                        CountWeighting::Counts => *slot += 1,
                        CountWeighting::Binary => *slot = 1,
                    }
                }
            }
            counts.into_iter().collect()
        })
        .collect();
    FeatureMatrix {
        n_cols: vocab.len(),
        rows,
    }
}

/// One cross-validation fold: global dataset indices for its train and test
/// parts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// A stratified 80/20 split plus stratified folds over the training part.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub folds: Vec<Fold>,
    pub seed: u64,
}

impl SplitPlan {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }
}

fn class_indices(y: &[u8]) -> Result<[Vec<usize>; 2]> {
    let mut per_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &label) in y.iter().enumerate() {
        if label > 1 {
            return Err(Error::Invalid(format!("label {label} at index {i} is not binary")));
        }
        per_class[label as usize].push(i);
    }
    Ok(per_class)
}

/// Largest-remainder apportionment of `total` across quotas.
fn apportion(quotas: &[f64], total: usize) -> Vec<usize> {
    let mut base: Vec<usize> = quotas.iter().map(|&q| q.floor() as usize).collect();
    let assigned: usize = base.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &cls in order.iter().take(total.saturating_sub(assigned)) {
        base[cls] += 1;
    }
    base
}

/// Stratified train/test split: per-class test counts are the
/// largest-remainder apportionment of `n * test_fraction`, so every class is
/// within one item of its exact share. Returns (train_ids, test_ids), both
/// sorted ascending.
pub fn stratified_split(y: &[u8], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) || test_fraction <= 0.0 {
        return Err(Error::Invalid(format!(
            "test fraction {test_fraction} must be in (0, 1)"
        )));
    }
    let per_class = class_indices(y)?;
    for (cls, members) in per_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::Invalid(format!(
                "class {cls} has {} item(s); need at least 2 to split",
                members.len()
            )));
        }
    }
    let total_test = (y.len() as f64 * test_fraction).round() as usize;
    let quotas: Vec<f64> = per_class
        .iter()
        .map(|members| members.len() as f64 * test_fraction)
        .collect();
    let test_counts = apportion(&quotas, total_test);

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (cls, members) in per_class.iter().enumerate() {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut seeding::stream_rng(seed, cls as u64));
        let k = test_counts[cls].min(shuffled.len().saturating_sub(1));
        test.extend_from_slice(&shuffled[..k]);
        train.extend_from_slice(&shuffled[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified k-fold over the items named by `train_ids`: per class, members
/// are shuffled and dealt round-robin from a cursor shared across classes, so
/// per-fold class counts stay within one of the proportional share and fold
/// sizes stay within one of each other. Fold test sets partition `train_ids`.
pub fn stratified_kfold(y: &[u8], train_ids: &[usize], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::Invalid(format!("k = {k}; need at least 2 folds")));
    }
    let train_labels: Vec<u8> = train_ids.iter().map(|&i| y[i]).collect();
    let per_class = class_indices(&train_labels)?;
    for (cls, members) in per_class.iter().enumerate() {
        if members.len() < k {
            return Err(Error::Invalid(format!(
                "class {cls} has {} item(s) in the training set; need at least k = {k}",
                members.len()
            )));
        }
    }
    let mut fold_tests: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut cursor = 0usize;
    for (cls, members) in per_class.iter().enumerate() {
        let mut shuffled: Vec<usize> = members.iter().map(|&pos| train_ids[pos]).collect();
        shuffled.shuffle(&mut seeding::stream_rng(seed, 1000 + cls as u64));
        for id in shuffled {
            fold_tests[cursor % k].push(id);
            cursor += 1;
        }
    }
    let folds = fold_tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let test_set: HashSet<usize> = test.iter().copied().collect();
            let train: Vec<usize> = train_ids
                .iter()
                .copied()
                .filter(|id| !test_set.contains(id))
                .collect();
            Fold { train, test }
        })
        .collect();
    Ok(folds)
}

/// Convenience: stratified split plus stratified folds over its training part.
pub fn split_plan(y: &[u8], test_fraction: f64, k: usize, seed: u64) -> Result<SplitPlan> {
    let (train_ids, test_ids) = stratified_split(y, test_fraction, seed)?;
    let folds = stratified_kfold(y, &train_ids, k, seed)?;
    Ok(SplitPlan {
        train_ids,
        test_ids,
        folds,
        seed,
    })
}
