//! Report emission. Every writer produces byte-identical output for
//! identical inputs; wall-clock durations live in a separate timings
//! sidecar precisely because they are the one thing that is not
//! reproducible.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStats;
use crate::detect::TermFrequencyReport;
use crate::error::{Error, Result};
use crate::eval::{ImportanceReport, MetricCi};
use crate::lexicon::BiasFeature;
use crate::models::GridSearchResult;

/// One evaluated model for the metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub feature: BiasFeature,
    pub model: String,
    pub ci: MetricCi,
    pub duration_s: f64,
}

pub const METRICS_TSV_HEADER: &str = "feature\tmodel\taccuracy\tacc_lo\tacc_hi\tp_pos\tp_lo\tp_hi\tr_pos\tr_lo\tr_hi\tf1_pos\tf1_lo\tf1_hi\tp_macro\tr_macro\tf1_macro\tf1m_lo\tf1m_hi\tduration_s";

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(file))
}

/// Writes the metrics table. An empty row list still produces the header
/// line so downstream readers always find the schema.
pub fn write_metrics_tsv(path: impl AsRef<Path>, rows: &[MetricRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(w, "{METRICS_TSV_HEADER}").map_err(|e| Error::io(path, e))?;
    for row in rows {
        let p = row.ci.point;
        let lo = row.ci.lo;
        let hi = row.ci.hi;
        writeln!(
            w,
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.3}",
            row.feature,
            row.model,
            p.accuracy,
            lo.accuracy,
            hi.accuracy,
            p.precision_pos,
            lo.precision_pos,
            hi.precision_pos,
            p.recall_pos,
            lo.recall_pos,
            hi.recall_pos,
            p.f1_pos,
            lo.f1_pos,
            hi.f1_pos,
            p.precision_macro,
            p.recall_macro,
            p.f1_macro,
            lo.f1_macro,
            hi.f1_macro,
            row.duration_s,
        )
        .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct MetricsDocument {
    format_version: u32,
    /// Bootstrap intervals resample the prediction pairs with replacement.
    resampling: String,
    rows: Vec<MetricRow>,
}

pub fn write_metrics_json(path: impl AsRef<Path>, rows: &[MetricRow]) -> Result<()> {
    let path = path.as_ref();
    let document = MetricsDocument {
        format_version: 1,
        resampling: "with_replacement".into(),
        rows: rows.to_vec(),
    };
    let mut json = serde_json::to_string_pretty(&document)?;
    json.push('\n');
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn read_metrics_json(path: impl AsRef<Path>) -> Result<Vec<MetricRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let document: MetricsDocument = serde_json::from_str(&text)?;
    if document.format_version != 1 {
        return Err(Error::Invalid(format!(
            "unsupported metrics format version {}",
            document.format_version
        )));
    }
    Ok(document.rows)
}

/// Emits `metrics.tsv` and `metrics.json` into the directory.
pub fn emit_metrics(out_dir: impl AsRef<Path>, rows: &[MetricRow]) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    let tsv = out_dir.join("metrics.tsv");
    let json = out_dir.join("metrics.json");
    write_metrics_tsv(&tsv, rows)?;
    write_metrics_json(&json, rows)?;
    Ok(vec![tsv, json])
}

pub fn write_importance_tsv(
    path: impl AsRef<Path>,
    rows: &[(String, f64)],
    method: &str,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(w, "rank\tngram\tvalue\tmethod").map_err(|e| Error::io(path, e))?;
    for (rank, (ngram, value)) in rows.iter().enumerate() {
        writeln!(w, "{}\t{}\t{:.6}\t{}", rank + 1, ngram, value, method)
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Emits importance tables for one feature. Gini reports become
/// `importance_<feature>_random_forest.tsv`; coefficient reports become a
/// positive and a negative `importance_<feature>_logistic_regression_*` pair.
pub fn emit_importances(
    out_dir: impl AsRef<Path>,
    feature: BiasFeature,
    report: &ImportanceReport,
) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    match report.method.as_str() {
        "gini_mdi" => {
            let path = out_dir.join(format!("importance_{feature}_random_forest.tsv"));
            write_importance_tsv(&path, &report.positive, &report.method)?;
            Ok(vec![path])
        }
        "logreg_coefficients" => {
            let pos = out_dir.join(format!("importance_{feature}_logistic_regression_positive.tsv"));
            let neg = out_dir.join(format!("importance_{feature}_logistic_regression_negative.tsv"));
            write_importance_tsv(&pos, &report.positive, &report.method)?;
            write_importance_tsv(&neg, &report.negative, &report.method)?;
            Ok(vec![pos, neg])
        }
        other => Err(Error::Invalid(format!("unknown importance method {other:?}"))),
    }
}

fn write_frequency_tsv(
    path: &Path,
    item_column: &str,
    report: &TermFrequencyReport,
) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "rank\t{item_column}\tcount").map_err(|e| Error::io(path, e))?;
    for (rank, (item, count)) in report.rows.iter().enumerate() {
        writeln!(w, "{}\t{}\t{}", rank + 1, item, count).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Emits `top_terms_<feature>.tsv` and `.json` for a lexicon feature.
pub fn emit_top_terms(
    out_dir: impl AsRef<Path>,
    report: &TermFrequencyReport,
) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    let tsv = out_dir.join(format!("top_terms_{}.tsv", report.feature));
    let json = out_dir.join(format!("top_terms_{}.json", report.feature));
    write_frequency_tsv(&tsv, "term", report)?;
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
    Ok(vec![tsv, json])
}

/// Emits `quoted_ngrams_scare_quotes_<gram>.tsv` per n-gram size.
pub fn emit_quoted_ngrams(
    out_dir: impl AsRef<Path>,
    reports: &[TermFrequencyReport],
) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    let mut written = Vec::new();
    for report in reports {
        let path = out_dir.join(format!("quoted_ngrams_scare_quotes_{}.tsv", report.gram));
        write_frequency_tsv(&path, "ngram", report)?;
        written.push(path);
    }
    Ok(written)
}

pub fn emit_stats(out_dir: impl AsRef<Path>, stats: &CorpusStats) -> Result<PathBuf> {
    let path = out_dir.as_ref().join("stats.json");
    let mut json = serde_json::to_string_pretty(stats)?;
    json.push('\n');
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the per-fold cross-validation table.
pub fn emit_cv_table(out_dir: impl AsRef<Path>, result: &GridSearchResult) -> Result<PathBuf> {
    let path = out_dir.as_ref().join("cv_table.tsv");
    let mut w = create(&path)?;
    writeln!(w, "model\tparams\tfold\tmacro_f1").map_err(|e| Error::io(&path, e))?;
    for row in &result.rows {
        writeln!(w, "{}\t{}\t{}\t{:.6}", row.model, row.params, row.fold, row.macro_f1)
            .map_err(|e| Error::io(&path, e))?;
    }
    Ok(path)
}

pub fn timing_key(feature: BiasFeature, model: &str) -> String {
    format!("{feature}/{model}")
}

/// Writes wall-clock durations. This file is the single report artifact
/// that legitimately differs between runs.
pub fn write_timings_tsv(path: impl AsRef<Path>, entries: &[(String, f64)]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(w, "key\tduration_s").map_err(|e| Error::io(path, e))?;
    for (key, duration) in entries {
        writeln!(w, "{}\t{:.3}", key, duration).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn load_timings_tsv(path: impl AsRef<Path>) -> Result<HashMap<String, f64>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut timings = HashMap::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if lineno == 0 {
            if line != "key\tduration_s" {
                return Err(Error::format(path, 1, "expected header `key\\tduration_s`"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('\t').ok_or_else(|| {
            Error::format(path, lineno + 1, "expected `key<TAB>duration_s`")
        })?;
        let duration: f64 = value.parse().map_err(|_| {
            Error::format(path, lineno + 1, format!("invalid duration {value:?}"))
        })?;
        timings.insert(key.to_string(), duration);
    }
    Ok(timings)
}

fn escape_xml(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A fixed-layout horizontal bar chart. Same input, same bytes.
pub fn bar_chart_svg(title: &str, rows: &[(String, f64)]) -> String {
    const WIDTH: usize = 720;
    const GUTTER: usize = 240;
    const BAR_MAX: usize = 420;
    const ROW_H: usize = 22;
    const HEADER: usize = 34;
    let height = HEADER + rows.len() * ROW_H + 10;
    let max = rows.iter().map(|(_, v)| v.abs()).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" \
         viewBox=\"0 0 {WIDTH} {height}\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"10\" y=\"22\" font-family=\"monospace\" font-size=\"15\">{}</text>\n",
        escape_xml(title)
    ));
    for (i, (label, value)) in rows.iter().enumerate() {
        let y = HEADER + i * ROW_H;
        let bar = ((value.abs() / max) * BAR_MAX as f64).round() as usize;
        let fill = if *value < 0.0 { "#b55" } else { "#46a" };
        svg.push_str(&format!(
            "  <text x=\"10\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">{}</text>\n",
            y + 14,
            escape_xml(label)
        ));
        svg.push_str(&format!(
            "  <rect x=\"{GUTTER}\" y=\"{}\" width=\"{}\" height=\"14\" fill=\"{}\"/>\n",
            y + 3,
            bar.max(1),
            fill
        ));
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{:.4}</text>\n",
            GUTTER + bar.max(1) + 6,
            y + 14,
            value
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn emit_bar_chart(
    out_dir: impl AsRef<Path>,
    basename: &str,
    title: &str,
    rows: &[(String, f64)],
) -> Result<PathBuf> {
    let path = out_dir.as_ref().join(format!("{basename}.svg"));
    std::fs::write(&path, bar_chart_svg(title, rows)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::MetricSet;

    fn sample_row() -> MetricRow {
        let point = MetricSet {
            accuracy: 0.75,
            precision_pos: 0.7,
            recall_pos: 0.8,
            f1_pos: 0.746667,
            precision_macro: 0.74,
            recall_macro: 0.76,
            f1_macro: 0.749,
        };
        MetricRow {
            feature: BiasFeature::DoubtMarkers,
            model: "naive_bayes".into(),
            ci: MetricCi {
                point,
                lo: point,
                hi: point,
                n_resamples: 1000,
                level: 0.95,
                seed: 7,
            },
            duration_s: 1.2345,
        }
    }

    #[test]
    fn metrics_tsv_has_exactly_twenty_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.tsv");
        write_metrics_tsv(&path, &[sample_row()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert_eq!(header, METRICS_TSV_HEADER);
        assert_eq!(header.split('\t').count(), 20);
        let row = lines.next().unwrap();
        let fields: Vec<&str> = row.split('\t').collect();
        assert_eq!(fields.len(), 20);
        assert_eq!(fields[0], "doubt_markers");
        assert_eq!(fields[2], "0.750000");
        assert_eq!(fields[19], "1.234");
    }

    #[test]
    fn empty_metrics_still_write_the_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.tsv");
        write_metrics_tsv(&path, &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{METRICS_TSV_HEADER}\n"));
    }

    #[test]
    fn metrics_json_declares_the_resampling_scheme() {
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_metrics(dir.path(), &[sample_row()]).unwrap();
        let json = std::fs::read_to_string(&paths[1]).unwrap();
        assert!(json.contains("\"resampling\": \"with_replacement\""));
        let rows = read_metrics_json(&paths[1]).unwrap();
        assert_eq!(rows, vec![sample_row()]);
    }

    #[test]
    fn importance_files_are_ranked_from_one() {
        let dir = tempfile::tempdir().unwrap();
        let report = ImportanceReport {
            method: "gini_mdi".into(),
            positive: vec![("claimed".into(), 0.4), ("supposedly".into(), 0.1)],
            negative: vec![],
        };
        let paths = emit_importances(dir.path(), BiasFeature::DoubtMarkers, &report).unwrap();
        assert_eq!(paths.len(), 1);
        assert!(paths[0].ends_with("importance_doubt_markers_random_forest.tsv"));
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "rank\tngram\tvalue\tmethod");
        assert_eq!(lines[1], "1\tclaimed\t0.400000\tgini_mdi");
        assert_eq!(lines[2], "2\tsupposedly\t0.100000\tgini_mdi");
    }

    #[test]
    fn coefficient_reports_write_both_signs() {
        let dir = tempfile::tempdir().unwrap();
        let report = ImportanceReport {
            method: "logreg_coefficients".into(),
            positive: vec![("claimed".into(), 1.5)],
            negative: vec![("stable".into(), -0.9)],
        };
        let paths =
            emit_importances(dir.path(), BiasFeature::StigmatizingLabels, &report).unwrap();
        assert_eq!(paths.len(), 2);
        let neg = std::fs::read_to_string(&paths[1]).unwrap();
        assert!(neg.contains("stable\t-0.900000\tlogreg_coefficients"));
    }

    #[test]
    fn frequency_reports_use_their_feature_names() {
        let dir = tempfile::tempdir().unwrap();
        let top = TermFrequencyReport {
            feature: BiasFeature::StigmatizingLabels,
            gram: 1,
            rows: vec![("agitated".into(), 9)],
            total_occurrences: 9,
        };
        let paths = emit_top_terms(dir.path(), &top).unwrap();
        assert!(paths[0].ends_with("top_terms_stigmatizing_labels.tsv"));
        let quoted = TermFrequencyReport {
            feature: BiasFeature::ScareQuotes,
            gram: 2,
            rows: vec![("pain pill".into(), 4)],
            total_occurrences: 4,
        };
        let written = emit_quoted_ngrams(dir.path(), &[quoted]).unwrap();
        assert!(written[0].ends_with("quoted_ngrams_scare_quotes_2.tsv"));
        let text = std::fs::read_to_string(&written[0]).unwrap();
        assert!(text.starts_with("rank\tngram\tcount\n"));
    }

    #[test]
    fn timings_round_trip_and_key_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("timings.tsv");
        let entries = vec![
            (timing_key(BiasFeature::DoubtMarkers, "naive_bayes"), 0.5),
            (timing_key(BiasFeature::DoubtMarkers, "random_forest"), 12.75),
        ];
        write_timings_tsv(&path, &entries).unwrap();
        let timings = load_timings_tsv(&path).unwrap();
        assert_eq!(timings["doubt_markers/naive_bayes"], 0.5);
        assert_eq!(timings["doubt_markers/random_forest"], 12.75);
    }

    #[test]
    fn bar_charts_are_deterministic_and_escaped() {
        let rows = vec![("a<b>&c".to_string(), 0.5), ("plain".to_string(), -0.25)];
        let a = bar_chart_svg("title & more", &rows);
        let b = bar_chart_svg("title & more", &rows);
        assert_eq!(a, b);
        assert!(a.contains("a&lt;b&gt;&amp;c"));
        assert!(a.contains("title &amp; more"));
        assert!(a.contains("#b55"), "negative bars use the negative fill");
    }
}
