//! Supervised classifiers over bag-of-words count features: multinomial
//! naive Bayes, L2-regularized logistic regression, and a random forest.
//! All three train and predict on the sparse [`FeatureMatrix`] layout and
//! share explicit seeds so repeated runs are identical.

pub mod forest;
pub mod grid;
pub mod logreg;
pub mod nb;
pub mod persist;

pub use forest::{RandomForest, RandomForestConfig, Tree, TreeNode};
pub use grid::{grid_search, CellScore, CvRow, GridSearchResult, GridSpec, RfGridCell};
pub use logreg::{
    objective_gradient, objective_value, LogisticRegression, LogisticRegressionConfig,
};
pub use nb::{MultinomialNb, MultinomialNbConfig};
pub use persist::{load_model, save_model, MODEL_FORMAT_VERSION};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Any of the three trained classifiers.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    NaiveBayes(MultinomialNb),
    LogisticRegression(LogisticRegression),
    RandomForest(RandomForest),
}

impl TrainedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::NaiveBayes(_) => "naive_bayes",
            TrainedModel::LogisticRegression(_) => "logistic_regression",
            TrainedModel::RandomForest(_) => "random_forest",
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::NaiveBayes(m) => m.n_features(),
            TrainedModel::LogisticRegression(m) => m.n_features(),
            TrainedModel::RandomForest(m) => m.n_features(),
        }
    }

    /// Hyperparameters in the `key=value` form used by report tables.
    pub fn params_string(&self) -> String {
        match self {
            TrainedModel::NaiveBayes(m) => format!("alpha={}", m.alpha),
            TrainedModel::LogisticRegression(m) => format!("C={}", m.c),
            TrainedModel::RandomForest(m) => m.config_string(),
        }
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<u8>> {
        match self {
            TrainedModel::NaiveBayes(m) => m.predict(x),
            TrainedModel::LogisticRegression(m) => m.predict(x),
            TrainedModel::RandomForest(m) => m.predict(x),
        }
    }
}

pub(crate) fn validate_training_input(x: &FeatureMatrix, y: &[u8]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::Invalid(format!(
            "feature matrix has {} rows but {} labels were given",
            x.n_rows(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Invalid("cannot train on an empty dataset".into()));
    }
    if x.n_cols() == 0 {
        return Err(Error::Invalid("cannot train with zero features".into()));
    }
    if let Some(bad) = y.iter().find(|&&l| l > 1) {
        return Err(Error::Invalid(format!("labels must be 0 or 1, found {bad}")));
    }
    let positives = y.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::Invalid(
            "training data must contain both classes".into(),
        ));
    }
    Ok(())
}

pub(crate) fn validate_predict_input(n_features: usize, x: &FeatureMatrix) -> Result<()> {
    if x.n_cols() != n_features {
        return Err(Error::Invalid(format!(
            "model expects {} features but the matrix has {}",
            n_features,
            x.n_cols()
        )));
    }
    Ok(())
}
