//! `evaluate` scores saved models on the held-out split with bootstrap
//! confidence intervals; `importance` extracts each model family's most
//! influential n-grams.

use std::path::PathBuf;

use care_sd_core::annotate;
use care_sd_core::eval::{self, bootstrap_ci};
use care_sd_core::features::{self, SplitPlan, Vocabulary};
use care_sd_core::models::{load_model, TrainedModel};
use care_sd_core::report::{self, timing_key, MetricRow};
use care_sd_core::seeding;
use care_sd_core::{BiasFeature, Error, Result};
use clap::Args;

use crate::config::{require_seed, resolve, FileConfig};

pub const MODEL_NAMES: [&str; 3] = ["naive_bayes", "logistic_regression", "random_forest"];

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Labeled dataset the models were trained from.
    #[arg(long, value_name = "FILE")]
    dataset: PathBuf,
    /// Feature the dataset was labeled for.
    #[arg(long)]
    feature: BiasFeature,
    /// Directory holding vocabulary.json, split.json, and the model files.
    #[arg(long, value_name = "DIR")]
    model_dir: PathBuf,
    /// Directory for metrics.tsv and metrics.json.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Seed for bootstrap resampling.
    #[arg(long, value_name = "SEED")]
    seed_bootstrap: Option<u64>,
    /// Bootstrap resample count.
    #[arg(long, value_name = "N")]
    resamples: Option<usize>,
    /// Confidence level for the intervals.
    #[arg(long, value_name = "LEVEL")]
    level: Option<f64>,
    /// Timing table from `train`; matching entries fill the duration
    /// column. Omit it to keep the metric files run-independent.
    #[arg(long, value_name = "FILE")]
    timings: Option<PathBuf>,
}

pub fn run_evaluate(args: EvaluateArgs, config: &FileConfig) -> Result<()> {
    let seed = require_seed(args.seed_bootstrap, config, "seed.bootstrap")?;
    let resamples = resolve(args.resamples, config.get_parsed("resamples"), 1000)?;
    let level = resolve(args.level, config.get_parsed("level"), 0.95)?;

    let dataset = annotate::load_dataset_tsv(&args.dataset, args.feature)?;
    let vocab = Vocabulary::load(args.model_dir.join("vocabulary.json"))?;
    let plan = SplitPlan::load(args.model_dir.join("split.json"))?;
    let texts = dataset.texts();
    let y = dataset.labels();
    if let Some(&bad) = plan.test_ids.iter().chain(&plan.train_ids).find(|&&i| i >= y.len()) {
        return Err(Error::Invalid(format!(
            "split plan references row {bad} but the dataset has {} rows",
            y.len()
        )));
    }
    let test_texts: Vec<&str> = plan.test_ids.iter().map(|&i| texts[i]).collect();
    let y_test: Vec<u8> = plan.test_ids.iter().map(|&i| y[i]).collect();
    let x_test = features::vectorize(&test_texts, &vocab);
    log::info!("evaluating on {} held-out sentences", y_test.len());

    let durations = match &args.timings {
        Some(path) => report::load_timings_tsv(path)?,
        None => Default::default(),
    };

    let mut rows = Vec::with_capacity(MODEL_NAMES.len());
    for (i, name) in MODEL_NAMES.iter().enumerate() {
        let path = args.model_dir.join(format!("model_{name}.json"));
        let model = load_model(&path, Some(&vocab))?;
        let predictions = model.predict(&x_test)?;
        let ci = bootstrap_ci(&y_test, &predictions, resamples, level, seeding::derive_seed(seed, i as u64))?;
        log::info!(
            "{name}: accuracy {:.3} [{:.3}, {:.3}], macro F1 {:.3} [{:.3}, {:.3}]",
            ci.point.accuracy,
            ci.lo.accuracy,
            ci.hi.accuracy,
            ci.point.f1_macro,
            ci.lo.f1_macro,
            ci.hi.f1_macro
        );
        let duration_s =
            durations.get(&timing_key(args.feature, name)).copied().unwrap_or(0.0);
        rows.push(MetricRow { feature: args.feature, model: name.to_string(), ci, duration_s });
    }

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    for path in report::emit_metrics(&args.out_dir, &rows)? {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    /// Feature named in the output files.
    #[arg(long)]
    feature: BiasFeature,
    /// Directory holding vocabulary.json and the model files.
    #[arg(long, value_name = "DIR")]
    model_dir: PathBuf,
    /// Directory for the importance tables.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Rows kept per table.
    #[arg(long, default_value_t = 30)]
    top: usize,
    /// Also render each table as an SVG bar chart.
    #[arg(long)]
    charts: bool,
}

pub fn run_importance(args: ImportanceArgs, _config: &FileConfig) -> Result<()> {
    let vocab = Vocabulary::load(args.model_dir.join("vocabulary.json"))?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;

    let forest = match load_model(args.model_dir.join("model_random_forest.json"), Some(&vocab))? {
        TrainedModel::RandomForest(m) => m,
        other => {
            return Err(Error::Invalid(format!(
                "model_random_forest.json holds a {} model",
                other.kind()
            )))
        }
    };
    let gini = eval::gini_importance(&forest, &vocab, args.top)?;
    for path in report::emit_importances(&args.out_dir, args.feature, &gini)? {
        log::info!("wrote {}", path.display());
    }

    let logreg =
        match load_model(args.model_dir.join("model_logistic_regression.json"), Some(&vocab))? {
            TrainedModel::LogisticRegression(m) => m,
            other => {
                return Err(Error::Invalid(format!(
                    "model_logistic_regression.json holds a {} model",
                    other.kind()
                )))
            }
        };
    let coefficients = eval::logreg_contributions(&logreg, &vocab, args.top)?;
    for path in report::emit_importances(&args.out_dir, args.feature, &coefficients)? {
        log::info!("wrote {}", path.display());
    }

    if args.charts {
        let feature = args.feature;
        let chart = |basename: String, title: String, rows: &[(String, f64)]| -> Result<()> {
            let path = report::emit_bar_chart(&args.out_dir, &basename, &title, rows)?;
            log::info!("wrote {}", path.display());
            Ok(())
        };
        chart(
            format!("importance_{feature}_random_forest"),
            format!("{feature}: random forest Gini importance"),
            &gini.positive,
        )?;
        chart(
            format!("importance_{feature}_logistic_regression_positive"),
            format!("{feature}: strongest positive-class coefficients"),
            &coefficients.positive,
        )?;
        chart(
            format!("importance_{feature}_logistic_regression_negative"),
            format!("{feature}: strongest negative-class coefficients"),
            &coefficients.negative,
        )?;
    }
    Ok(())
}
