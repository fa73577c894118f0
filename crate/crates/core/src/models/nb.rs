//! Multinomial naive Bayes with additive smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

use super::{validate_predict_input, validate_training_input};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultinomialNbConfig {
    /// Additive smoothing strength, must be positive.
    pub alpha: f64,
}

impl Default for MultinomialNbConfig {
    fn default() -> Self {
        MultinomialNbConfig { alpha: 1.0 }
    }
}

/// Fitted multinomial naive Bayes. Class 1 is the feature-positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialNb {
    pub alpha: f64,
    /// Log prior per class, from class document frequencies.
    pub class_log_prior: [f64; 2],
    /// `feature_log_prob[c][j]` is the smoothed log probability of token `j`
    /// under class `c`.
    pub feature_log_prob: [Vec<f64>; 2],
}

impl MultinomialNb {
    pub fn n_features(&self) -> usize {
        self.feature_log_prob[0].len()
    }

    pub fn fit(x: &FeatureMatrix, y: &[u8], config: MultinomialNbConfig) -> Result<Self> {
        validate_training_input(x, y)?;
        if !(config.alpha > 0.0) {
            return Err(Error::Config(format!(
                "smoothing alpha must be positive, got {}",
                config.alpha
            )));
        }
        let v = x.n_cols();
        let n = y.len();
        let mut doc_counts = [0usize; 2];
        let mut token_counts = [vec![0u64; v], vec![0u64; v]];
        for (i, &label) in y.iter().enumerate() {
            let c = label as usize;
            doc_counts[c] += 1;
            for &(j, count) in x.row(i) {
                token_counts[c][j as usize] += count as u64;
            }
        }
        let class_log_prior =
            [0, 1].map(|c| (doc_counts[c] as f64 / n as f64).ln());
        let feature_log_prob = [0, 1].map(|c| {
            let total: u64 = token_counts[c].iter().sum();
            let denom = total as f64 + config.alpha * v as f64;
            token_counts[c]
                .iter()
                .map(|&count| ((count as f64 + config.alpha) / denom).ln())
                .collect()
        });
        Ok(MultinomialNb { alpha: config.alpha, class_log_prior, feature_log_prob })
    }

    /// Joint log likelihood of one row under each class.
    pub fn log_posteriors(&self, row: &[(u32, u32)]) -> [f64; 2] {
        let mut scores = self.class_log_prior;
        for &(j, count) in row {
            let j = j as usize;
            scores[0] += count as f64 * self.feature_log_prob[0][j];
            scores[1] += count as f64 * self.feature_log_prob[1][j];
        }
        scores
    }

    /// Picks the higher-scoring class; exact ties go to class 0.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<u8>> {
        validate_predict_input(self.n_features(), x)?;
        Ok((0..x.n_rows())
            .map(|i| {
                let [s0, s1] = self.log_posteriors(x.row(i));
                u8::from(s1 > s0)
            })
            .collect())
    }
}
