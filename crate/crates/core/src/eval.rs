//! Evaluation: confusion counts, the seven reported metrics, bootstrap
//! percentile confidence intervals, and per-feature importance extraction
//! from the fitted models.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Vocabulary;
use crate::models::{LogisticRegression, RandomForest, TreeNode};
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<Confusion> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Invalid(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Invalid("cannot evaluate zero predictions".into()));
    }
    let mut c = Confusion { true_pos: 0, false_pos: 0, true_neg: 0, false_neg: 0 };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t > 1 || p > 1 {
            return Err(Error::Invalid("labels and predictions must be 0 or 1".into()));
        }
        match (t, p) {
            (1, 1) => c.true_pos += 1,
            (0, 1) => c.false_pos += 1,
            (0, 0) => c.true_neg += 1,
            _ => c.false_neg += 1,
        }
    }
    Ok(c)
}

/// The seven reported metrics. Macro values are unweighted means of the
/// per-class scores, treating each class as positive in turn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision_pos: f64,
    pub recall_pos: f64,
    pub f1_pos: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
}

impl MetricSet {
    pub const NAMES: [&'static str; 7] = [
        "accuracy",
        "precision_pos",
        "recall_pos",
        "f1_pos",
        "precision_macro",
        "recall_macro",
        "f1_macro",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.accuracy,
            self.precision_pos,
            self.recall_pos,
            self.f1_pos,
            self.precision_macro,
            self.recall_macro,
            self.f1_macro,
        ]
    }
}

fn ratio(num: u64, denom: u64) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

/// Harmonic mean of precision and recall; zero when both are zero.
pub fn f1_from_precision_recall(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn metrics(c: &Confusion) -> MetricSet {
    let total = c.true_pos + c.false_pos + c.true_neg + c.false_neg;
    let precision_pos = ratio(c.true_pos, c.true_pos + c.false_pos);
    let recall_pos = ratio(c.true_pos, c.true_pos + c.false_neg);
    let precision_neg = ratio(c.true_neg, c.true_neg + c.false_neg);
    let recall_neg = ratio(c.true_neg, c.true_neg + c.false_pos);
    let f1_pos = f1_from_precision_recall(precision_pos, recall_pos);
    let f1_neg = f1_from_precision_recall(precision_neg, recall_neg);
    MetricSet {
        accuracy: ratio(c.true_pos + c.true_neg, total),
        precision_pos,
        recall_pos,
        f1_pos,
        precision_macro: (precision_pos + precision_neg) / 2.0,
        recall_macro: (recall_pos + recall_neg) / 2.0,
        f1_macro: (f1_pos + f1_neg) / 2.0,
    }
}

/// Point metrics with bootstrap percentile bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCi {
    pub point: MetricSet,
    pub lo: MetricSet,
    pub hi: MetricSet,
    pub n_resamples: usize,
    pub level: f64,
    pub seed: u64,
}

/// Linear-interpolation quantile of pre-sorted values.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile confidence intervals from resampling prediction pairs with
/// replacement. Each resample draws its own RNG stream from the seed, so
/// results are independent of thread scheduling.
pub fn bootstrap_ci(
    y_true: &[u8],
    y_pred: &[u8],
    n_resamples: usize,
    level: f64,
    seed: u64,
) -> Result<MetricCi> {
    let point = metrics(&confusion(y_true, y_pred)?);
    if n_resamples == 0 {
        return Err(Error::Config("bootstrap needs at least one resample".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "confidence level must be inside (0, 1), got {level}"
        )));
    }
    let n = y_true.len();
    let samples: Vec<[f64; 7]> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeding::stream_rng(seed, i as u64);
            let mut c = Confusion { true_pos: 0, false_pos: 0, true_neg: 0, false_neg: 0 };
            for _ in 0..n {
                let k = rng.gen_range(0..n);
                match (y_true[k], y_pred[k]) {
                    (1, 1) => c.true_pos += 1,
                    (0, 1) => c.false_pos += 1,
                    (0, 0) => c.true_neg += 1,
                    _ => c.false_neg += 1,
                }
            }
            metrics(&c).values()
        })
        .collect();

    let alpha = (1.0 - level) / 2.0;
    let mut lo = [0.0; 7];
    let mut hi = [0.0; 7];
    for m in 0..7 {
        let mut column: Vec<f64> = samples.iter().map(|s| s[m]).collect();
        column.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lo[m] = quantile_sorted(&column, alpha);
        hi[m] = quantile_sorted(&column, 1.0 - alpha);
    }
    let pack = |v: [f64; 7]| MetricSet {
        accuracy: v[0],
        precision_pos: v[1],
        recall_pos: v[2],
        f1_pos: v[3],
        precision_macro: v[4],
        recall_macro: v[5],
        f1_macro: v[6],
    };
    Ok(MetricCi { point, lo: pack(lo), hi: pack(hi), n_resamples, level, seed })
}

/// Ranked n-grams from one importance method. Gini importances have only
/// positive rows; coefficient reports carry both signs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub method: String,
    pub positive: Vec<(String, f64)>,
    pub negative: Vec<(String, f64)>,
}

/// Mean decrease in impurity per feature: raw split contributions are summed
/// within each tree, averaged across trees, and the final vector normalized
/// to sum to one. A forest with no splits anywhere reports all zeros.
pub fn gini_importances_full(forest: &RandomForest) -> Vec<f64> {
    let v = forest.n_features;
    let mut sums = vec![0.0f64; v];
    for tree in &forest.trees {
        for node in &tree.nodes {
            if let TreeNode::Split { feature, contribution, .. } = node {
                sums[*feature] += contribution;
            }
        }
    }
    let n_trees = forest.trees.len().max(1) as f64;
    for s in sums.iter_mut() {
        *s /= n_trees;
    }
    let total: f64 = sums.iter().sum();
    if total > 0.0 {
        for s in sums.iter_mut() {
            *s /= total;
        }
    } else {
        log::warn!("forest has no split nodes; importances are all zero");
    }
    sums
}

/// Top nonzero Gini importances, value descending then n-gram ascending.
pub fn gini_importance(
    forest: &RandomForest,
    vocab: &Vocabulary,
    top_n: usize,
) -> Result<ImportanceReport> {
    if vocab.len() != forest.n_features {
        return Err(Error::Invalid(format!(
            "vocabulary has {} entries but the forest was trained on {}",
            vocab.len(),
            forest.n_features
        )));
    }
    let values = gini_importances_full(forest);
    let ngrams = vocab.ngrams();
    let mut rows: Vec<(String, f64)> = values
        .into_iter()
        .enumerate()
        .filter(|&(_, v)| v != 0.0)
        .map(|(j, v)| (ngrams[j].to_string(), v))
        .collect();
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    rows.truncate(top_n);
    Ok(ImportanceReport { method: "gini_mdi".into(), positive: rows, negative: Vec::new() })
}

/// Largest-magnitude logistic-regression coefficients by sign: `positive`
/// holds the strongest evidence for the positive class, `negative` for the
/// negative class (most negative first). Zero weights are excluded.
pub fn logreg_contributions(
    model: &LogisticRegression,
    vocab: &Vocabulary,
    top_n: usize,
) -> Result<ImportanceReport> {
    if vocab.len() != model.n_features() {
        return Err(Error::Invalid(format!(
            "vocabulary has {} entries but the model was trained on {}",
            vocab.len(),
            model.n_features()
        )));
    }
    let ngrams = vocab.ngrams();
    let mut positive: Vec<(String, f64)> = Vec::new();
    let mut negative: Vec<(String, f64)> = Vec::new();
    for (j, &w) in model.weights.iter().enumerate() {
        if w > 0.0 {
            positive.push((ngrams[j].to_string(), w));
        } else if w < 0.0 {
            negative.push((ngrams[j].to_string(), w));
        }
    }
    positive.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    negative.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    positive.truncate(top_n);
    negative.truncate(top_n);
    Ok(ImportanceReport { method: "logreg_coefficients".into(), positive, negative })
}
