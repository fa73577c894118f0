//! Hyperparameter selection by stratified k-fold cross-validation, scored
//! on mean macro F1. Every (configuration, fold) score is kept so the full
//! table can be written next to the chosen settings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{confusion, metrics};
use crate::features::{stratified_kfold, FeatureMatrix};
use crate::seeding;

use super::{
    LogisticRegression, LogisticRegressionConfig, MultinomialNb, MultinomialNbConfig,
    RandomForest, RandomForestConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfGridCell {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl RfGridCell {
    pub fn params_string(&self) -> String {
        format!(
            "n_estimators={},max_depth={},min_samples_split={}",
            self.n_estimators,
            self.max_depth.map_or_else(|| "none".to_string(), |d| d.to_string()),
            self.min_samples_split
        )
    }
}

/// Candidate hyperparameters for each model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nb_alpha: Vec<f64>,
    pub logreg_c: Vec<f64>,
    pub rf: Vec<RfGridCell>,
}

impl Default for GridSpec {
    fn default() -> Self {
        let mut rf = Vec::new();
        for &n_estimators in &[100, 200] {
            for &max_depth in &[None, Some(16)] {
                for &min_samples_split in &[2, 5] {
                    rf.push(RfGridCell { n_estimators, max_depth, min_samples_split });
                }
            }
        }
        GridSpec {
            nb_alpha: vec![0.1, 0.5, 1.0],
            logreg_c: vec![0.01, 0.1, 1.0, 10.0],
            rf,
        }
    }
}

/// One (configuration, fold) score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub model: String,
    pub params: String,
    pub fold: usize,
    pub macro_f1: f64,
}

/// One configuration's mean score across folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub model: String,
    pub params: String,
    pub mean_macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub rows: Vec<CvRow>,
    pub cells: Vec<CellScore>,
    pub best_nb_alpha: f64,
    pub best_logreg_c: f64,
    pub best_rf: RfGridCell,
}

struct FoldData {
    x_train: FeatureMatrix,
    y_train: Vec<u8>,
    x_test: FeatureMatrix,
    y_test: Vec<u8>,
}

fn macro_f1(y_test: &[u8], predictions: &[u8]) -> Result<f64> {
    Ok(metrics(&confusion(y_test, predictions)?).f1_macro)
}

/// Evaluates every grid cell on the same stratified folds and picks, per
/// family, the cell with the highest mean macro F1. Ties keep the earlier
/// cell in grid order.
pub fn grid_search(
    x: &FeatureMatrix,
    y: &[u8],
    k: usize,
    grid: &GridSpec,
    seed: u64,
) -> Result<GridSearchResult> {
    if grid.nb_alpha.is_empty() || grid.logreg_c.is_empty() || grid.rf.is_empty() {
        return Err(Error::Config("every model family needs at least one grid cell".into()));
    }
    let all_ids: Vec<usize> = (0..y.len()).collect();
    let folds = stratified_kfold(y, &all_ids, k, seed)?;
    let data: Vec<FoldData> = folds
        .iter()
        .map(|fold| FoldData {
            x_train: x.select(&fold.train),
            y_train: fold.train.iter().map(|&i| y[i]).collect(),
            x_test: x.select(&fold.test),
            y_test: fold.test.iter().map(|&i| y[i]).collect(),
        })
        .collect();

    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let score_cell = |model: &str,
                          params: String,
                          mut fit_predict: Box<dyn FnMut(&FoldData, usize) -> Result<Vec<u8>> + '_>,
                          rows: &mut Vec<CvRow>|
     -> Result<f64> {
        let mut sum = 0.0;
        for (fold_idx, fold) in data.iter().enumerate() {
            let predictions = fit_predict(fold, fold_idx)?;
            let score = macro_f1(&fold.y_test, &predictions)?;
            rows.push(CvRow {
                model: model.to_string(),
                params: params.clone(),
                fold: fold_idx,
                macro_f1: score,
            });
            sum += score;
        }
        Ok(sum / data.len() as f64)
    };

    let mut best_nb: Option<(f64, f64)> = None;
    for &alpha in &grid.nb_alpha {
        let mean = score_cell(
            "naive_bayes",
            format!("alpha={alpha}"),
            Box::new(move |fold, _| {
                MultinomialNb::fit(&fold.x_train, &fold.y_train, MultinomialNbConfig { alpha })?
                    .predict(&fold.x_test)
            }),
            &mut rows,
        )?;
        cells.push(CellScore {
            model: "naive_bayes".into(),
            params: format!("alpha={alpha}"),
            mean_macro_f1: mean,
        });
        if best_nb.map_or(true, |(best, _)| mean > best) {
            best_nb = Some((mean, alpha));
        }
    }

    let mut best_lr: Option<(f64, f64)> = None;
    for &c in &grid.logreg_c {
        let mean = score_cell(
            "logistic_regression",
            format!("C={c}"),
            Box::new(move |fold, _| {
                let config = LogisticRegressionConfig { c, ..Default::default() };
                LogisticRegression::fit(&fold.x_train, &fold.y_train, config)?
                    .predict(&fold.x_test)
            }),
            &mut rows,
        )?;
        cells.push(CellScore {
            model: "logistic_regression".into(),
            params: format!("C={c}"),
            mean_macro_f1: mean,
        });
        if best_lr.map_or(true, |(best, _)| mean > best) {
            best_lr = Some((mean, c));
        }
    }

    let mut best_rf: Option<(f64, RfGridCell)> = None;
    for (cell_idx, &cell) in grid.rf.iter().enumerate() {
        let mean = score_cell(
            "random_forest",
            cell.params_string(),
            Box::new(move |fold, fold_idx| {
                let config = RandomForestConfig {
                    n_estimators: cell.n_estimators,
                    max_depth: cell.max_depth,
                    min_samples_split: cell.min_samples_split,
                    bootstrap: true,
                    seed: seeding::derive_seed2(seed, cell_idx as u64, fold_idx as u64),
                };
                RandomForest::fit(&fold.x_train, &fold.y_train, config)?.predict(&fold.x_test)
            }),
            &mut rows,
        )?;
        cells.push(CellScore {
            model: "random_forest".into(),
            params: cell.params_string(),
            mean_macro_f1: mean,
        });
        if best_rf.as_ref().map_or(true, |(best, _)| mean > *best) {
            best_rf = Some((mean, cell));
        }
    }

    Ok(GridSearchResult {
        rows,
        cells,
        best_nb_alpha: best_nb.expect("nb grid is non-empty").1,
        best_logreg_c: best_lr.expect("logreg grid is non-empty").1,
        best_rf: best_rf.expect("rf grid is non-empty").1,
    })
}
