//! `train` fits all three classifier families on a labeled dataset: it
//! splits off a held-out test set, picks hyperparameters by cross-validated
//! grid search on the training portion, and saves the refit models.
//!
//! The vocabulary is built from the training split only, so nothing about
//! the held-out sentences leaks into feature construction.

use std::path::PathBuf;
use std::time::Instant;

use care_sd_core::annotate;
use care_sd_core::features::{self, FeatureMatrix, Vocabulary};
use care_sd_core::models::{
    grid_search, save_model, GridSpec, LogisticRegression, LogisticRegressionConfig,
    MultinomialNb, MultinomialNbConfig, RandomForest, RandomForestConfig, RfGridCell,
    TrainedModel,
};
use care_sd_core::report::{self, timing_key};
use care_sd_core::{BiasFeature, Error, Result};
use clap::Args;
use serde::Serialize;

use crate::config::{parse_number_list, require_seed, resolve, FileConfig};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled dataset from `adjudicate` (sentence_id, label, text).
    #[arg(long, value_name = "FILE")]
    dataset: PathBuf,
    /// Feature the dataset was labeled for.
    #[arg(long)]
    feature: BiasFeature,
    /// Directory for the vocabulary, split plan, CV table, and model files.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Seed for the train/test split and fold assignment.
    #[arg(long, value_name = "SEED")]
    seed_split: Option<u64>,
    /// Seed for model fitting (random forest draws).
    #[arg(long, value_name = "SEED")]
    seed_models: Option<u64>,
    /// Fraction of the dataset held out for evaluation.
    #[arg(long, value_name = "FRACTION")]
    test_fraction: Option<f64>,
    /// Cross-validation fold count.
    #[arg(long, value_name = "K")]
    folds: Option<usize>,
    /// Drop n-grams seen in fewer training sentences than this.
    #[arg(long, value_name = "N")]
    min_df: Option<usize>,
    /// Naive Bayes smoothing candidates, comma separated.
    #[arg(long, value_name = "LIST")]
    nb_alpha: Option<String>,
    /// Logistic regression inverse-regularization candidates.
    #[arg(long, value_name = "LIST")]
    logreg_c: Option<String>,
    /// Random forest tree-count candidates.
    #[arg(long, value_name = "LIST")]
    rf_trees: Option<String>,
    /// Random forest depth candidates; `none` means unlimited.
    #[arg(long, value_name = "LIST")]
    rf_depths: Option<String>,
    /// Random forest minimum-split-size candidates.
    #[arg(long, value_name = "LIST")]
    rf_min_split: Option<String>,
}

#[derive(Serialize)]
struct SelectedParams {
    nb_alpha: f64,
    logreg_c: f64,
    rf: RfGridCell,
}

fn parse_depth_list(raw: &str) -> Result<Vec<Option<usize>>> {
    let entries: Vec<&str> = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if entries.is_empty() {
        return Err(Error::Config("--rf-depths: empty list".into()));
    }
    entries
        .iter()
        .map(|s| {
            if *s == "none" {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|e| Error::Config(format!("--rf-depths: bad entry {s:?}: {e}")))
            }
        })
        .collect()
}

fn build_grid(args: &TrainArgs, config: &FileConfig) -> Result<GridSpec> {
    let defaults = GridSpec::default();
    let nb_alpha = match args.nb_alpha.as_deref().or_else(|| config.get("grid.nb_alpha")) {
        Some(raw) => parse_number_list(raw, "--nb-alpha")?,
        None => defaults.nb_alpha,
    };
    let logreg_c = match args.logreg_c.as_deref().or_else(|| config.get("grid.logreg_c")) {
        Some(raw) => parse_number_list(raw, "--logreg-c")?,
        None => defaults.logreg_c,
    };
    let trees: Option<Vec<usize>> =
        match args.rf_trees.as_deref().or_else(|| config.get("grid.rf_trees")) {
            Some(raw) => Some(parse_number_list(raw, "--rf-trees")?),
            None => None,
        };
    let depths: Option<Vec<Option<usize>>> =
        match args.rf_depths.as_deref().or_else(|| config.get("grid.rf_depths")) {
            Some(raw) => Some(parse_depth_list(raw)?),
            None => None,
        };
    let min_splits: Option<Vec<usize>> =
        match args.rf_min_split.as_deref().or_else(|| config.get("grid.rf_min_split")) {
            Some(raw) => Some(parse_number_list(raw, "--rf-min-split")?),
            None => None,
        };
    let rf = if trees.is_none() && depths.is_none() && min_splits.is_none() {
        defaults.rf
    } else {
        let trees = trees.unwrap_or_else(|| vec![100, 200]);
        let depths = depths.unwrap_or_else(|| vec![None, Some(16)]);
        let min_splits = min_splits.unwrap_or_else(|| vec![2, 5]);
        let mut cells = Vec::new();
        for &n_estimators in &trees {
            for &max_depth in &depths {
                for &min_samples_split in &min_splits {
                    cells.push(RfGridCell { n_estimators, max_depth, min_samples_split });
                }
            }
        }
        cells
    };
    Ok(GridSpec { nb_alpha, logreg_c, rf })
}

fn fit_timed<M>(fit: impl FnOnce() -> Result<M>) -> Result<(M, f64)> {
    let start = Instant::now();
    let model = fit()?;
    Ok((model, start.elapsed().as_secs_f64()))
}

fn save_timed_model(
    out_dir: &std::path::Path,
    name: &str,
    model: TrainedModel,
    vocab: &Vocabulary,
) -> Result<()> {
    let path = out_dir.join(format!("model_{name}.json"));
    save_model(&path, &model, vocab)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn run(args: TrainArgs, config: &FileConfig) -> Result<()> {
    let seed_split = require_seed(args.seed_split, config, "seed.split")?;
    let seed_models = require_seed(args.seed_models, config, "seed.models")?;
    let test_fraction = resolve(args.test_fraction, config.get_parsed("test_fraction"), 0.2)?;
    let folds = resolve(args.folds, config.get_parsed("folds"), 5)?;
    let min_df = resolve(args.min_df, config.get_parsed("min_df"), 2)?;
    let grid = build_grid(&args, config)?;

    let dataset = annotate::load_dataset_tsv(&args.dataset, args.feature)?;
    let y = dataset.labels();
    log::info!(
        "{} labeled sentences, {:.1}% positive",
        dataset.len(),
        dataset.positive_fraction() * 100.0
    );

    let plan = features::split_plan(&y, test_fraction, folds, seed_split)?;
    let texts = dataset.texts();
    let train_texts: Vec<&str> = plan.train_ids.iter().map(|&i| texts[i]).collect();
    let y_train: Vec<u8> = plan.train_ids.iter().map(|&i| y[i]).collect();
    log::info!(
        "split: {} train / {} test sentences, {} folds",
        plan.train_ids.len(),
        plan.test_ids.len(),
        folds
    );

    let vocab = features::build_vocabulary(&train_texts, min_df)?;
    log::info!("vocabulary: {} n-grams at min_df={}", vocab.len(), min_df);
    let x_train: FeatureMatrix = features::vectorize(&train_texts, &vocab);

    let result = grid_search(&x_train, &y_train, folds, &grid, seed_models)?;
    log::info!(
        "grid search picked alpha={} c={} rf=({})",
        result.best_nb_alpha,
        result.best_logreg_c,
        result.best_rf.params_string()
    );

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    vocab.save(args.out_dir.join("vocabulary.json"))?;
    plan.save(args.out_dir.join("split.json"))?;
    let cv_path = report::emit_cv_table(&args.out_dir, &result)?;
    log::info!("wrote {}", cv_path.display());

    let selected = SelectedParams {
        nb_alpha: result.best_nb_alpha,
        logreg_c: result.best_logreg_c,
        rf: result.best_rf,
    };
    let params_path = args.out_dir.join("selected_params.json");
    let mut json = serde_json::to_string_pretty(&selected)?;
    json.push('\n');
    std::fs::write(&params_path, json).map_err(|e| Error::io(&params_path, e))?;

    let (nb, nb_secs) = fit_timed(|| {
        MultinomialNb::fit(&x_train, &y_train, MultinomialNbConfig { alpha: result.best_nb_alpha })
    })?;
    let (lr, lr_secs) = fit_timed(|| {
        LogisticRegression::fit(
            &x_train,
            &y_train,
            LogisticRegressionConfig { c: result.best_logreg_c, ..Default::default() },
        )
    })?;
    if !lr.converged {
        log::warn!("logistic regression stopped at max_iter without converging");
    }
    let (rf, rf_secs) = fit_timed(|| {
        RandomForest::fit(
            &x_train,
            &y_train,
            RandomForestConfig {
                n_estimators: result.best_rf.n_estimators,
                max_depth: result.best_rf.max_depth,
                min_samples_split: result.best_rf.min_samples_split,
                bootstrap: true,
                seed: seed_models,
            },
        )
    })?;
    log::info!(
        "final fits: naive_bayes {:.3}s, logistic_regression {:.3}s, random_forest {:.3}s",
        nb_secs,
        lr_secs,
        rf_secs
    );

    save_timed_model(&args.out_dir, "naive_bayes", TrainedModel::NaiveBayes(nb), &vocab)?;
    save_timed_model(
        &args.out_dir,
        "logistic_regression",
        TrainedModel::LogisticRegression(lr),
        &vocab,
    )?;
    save_timed_model(&args.out_dir, "random_forest", TrainedModel::RandomForest(rf), &vocab)?;

    let timings = vec![
        (timing_key(args.feature, "naive_bayes"), nb_secs),
        (timing_key(args.feature, "logistic_regression"), lr_secs),
        (timing_key(args.feature, "random_forest"), rf_secs),
    ];
    let timings_path = args.out_dir.join("timings.tsv");
    report::write_timings_tsv(&timings_path, &timings)?;
    log::info!("wrote {}", timings_path.display());
    Ok(())
}
