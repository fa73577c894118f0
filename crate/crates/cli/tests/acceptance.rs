//! Full-system acceptance checks. Each numbered test verifies one release
//! criterion end to end and prints a `criterion NN PASS` line when it holds:
//! shipped lexicon fidelity, detector spans on fixture sentences, recorded
//! metric arithmetic, oracle equivalence for metrics and classifiers,
//! stratification and bootstrap behavior, a planted-signal pipeline driven
//! through the installed binary, scanning throughput, and byte-identical
//! reruns of every pipeline stage.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;
use std::time::Instant;

use care_sd_core::annotate::{agreement, AnnotationLabel};
use care_sd_core::corpus::{split_sentences, Sentence};
use care_sd_core::detect::{detect_scare_quote_candidates, scan_lexicon, MatchRecord, ScareQuoteConfig};
use care_sd_core::eval::{
    bootstrap_ci, confusion, f1_from_precision_recall, gini_importances_full, metrics,
};
use care_sd_core::features::{split_plan, FeatureMatrix};
use care_sd_core::lexicon::{Lexicon, TermStatus};
use care_sd_core::matcher::CompiledMatcher;
use care_sd_core::models::{
    objective_gradient, objective_value, MultinomialNb, MultinomialNbConfig, RandomForest,
    RandomForestConfig,
};
use care_sd_core::synth::{synthesize, SyntheticCorpusSpec};
use care_sd_core::BiasFeature;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use regex::Regex;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn doubt_lexicon() -> Lexicon {
    Lexicon::load(data_dir().join("lexicons/doubt_markers.lex"), BiasFeature::DoubtMarkers)
        .expect("load doubt lexicon")
}

fn stigma_lexicon() -> Lexicon {
    Lexicon::load(
        data_dir().join("lexicons/stigmatizing_labels.lex"),
        BiasFeature::StigmatizingLabels,
    )
    .expect("load stigma lexicon")
}

fn sentence(note: &str, index: usize, text: &str) -> Sentence {
    Sentence {
        sentence_id: Sentence::id_for(note, index),
        note_id: note.to_string(),
        index,
        text: text.to_string(),
        token_count: 0,
    }
}

#[test]
fn criterion_01_shipped_lexicons_load_with_the_recorded_term_counts() {
    const DOUBT_NOISE: [&str; 8] = [
        "suspicion",
        "suspicious",
        "questionable",
        "questioning",
        "uncertain",
        "hesitancy",
        "hesitant",
        "unsure",
    ];
    const STIGMA_NOISE: [&str; 10] = [
        "difficult",
        "suspicious",
        "aggressive",
        "unstable",
        "dramatic",
        "unreliable",
        "entitled",
        "invalid",
        "violent",
        "dangerous",
    ];

    let started = Instant::now();
    let doubt = doubt_lexicon();
    let stigma = stigma_lexicon();
    let elapsed = started.elapsed();

    assert_eq!(doubt.active_count(), 58, "doubt lexicon active terms");
    assert_eq!(stigma.active_count(), 127, "stigma lexicon active terms");
    for term in DOUBT_NOISE {
        let entry = doubt.get(term).unwrap_or_else(|| panic!("doubt lexicon lacks {term:?}"));
        assert_eq!(entry.status, TermStatus::NoiseRemoved, "status of doubt term {term:?}");
    }
    for term in STIGMA_NOISE {
        let entry = stigma.get(term).unwrap_or_else(|| panic!("stigma lexicon lacks {term:?}"));
        assert_eq!(entry.status, TermStatus::NoiseRemoved, "status of stigma term {term:?}");
    }
    assert!(elapsed.as_secs_f64() < 1.0, "lexicon loading took {elapsed:?}");
    println!(
        "criterion 01 PASS: lexicons load with 58 and 127 active terms plus full noise lists in {elapsed:?}"
    );
}

#[test]
fn criterion_02_fixture_sentences_are_flagged_at_their_expected_spans() {
    let stigma_cases = [
        ("Pt very uncooperative, will barely allow any nursing care.", "uncooperative"),
        ("Neuro: Is very needy, needs to be encouraged to do more for herself.", "needy"),
        (
            "Refuses blood draws, calling out, asking for dilaudid despite med not being due, requiring much emotional support.",
            "Refuses",
        ),
    ];
    let doubt_cases = [
        (
            "\u{201c}Pain control (acute pain, chronic pain) Assessment: Pt has chronic abd pain constantly claiming pain scale 10.\u{201d}",
            "claiming",
        ),
        ("\u{201c}His last drink of alcohol was supposedly three weeks ago.\u{201d}", "supposedly"),
        (
            "Insisting on making phone calls becomes very irritated if don't jump to his requests.",
            "Insisting",
        ),
    ];
    let scare_cases: [(&str, Vec<&str>, &str); 3] = [
        (
            "Easily frustrated, especially when asked questions to assess orientation...pt states \"you have already asked me this 100 times\".",
            vec!["you have already asked me this 100 times"],
            "you have already asked me this 100 times",
        ),
        (
            "NO nausea/vomiting although pt states he does not want to eat because he \"fears\" being nauseated.",
            vec!["fears"],
            "fears",
        ),
        (
            "At 10:06, pt put on call light to request \"pain pill\" and then put on the call light 5 more times over the next 8 minutes to make same demand, at one point saying to the nurse responding to the call light, \"What the hell is going on.\"",
            vec!["pain pill", "What the hell is going on."],
            "pain pill",
        ),
    ];

    let check_lexicon = |matcher: &CompiledMatcher, feature: BiasFeature, cases: &[(&str, &str)]| {
        let sentences: Vec<Sentence> =
            cases.iter().enumerate().map(|(i, (text, _))| sentence("fx", i, text)).collect();
        let records = scan_lexicon(&sentences, matcher, feature);
        let by_id: HashMap<&str, &MatchRecord> =
            records.iter().map(|r| (r.sentence_id.as_str(), r)).collect();
        for (i, (text, expected)) in cases.iter().enumerate() {
            let id = Sentence::id_for("fx", i);
            let record = by_id
                .get(id.as_str())
                .unwrap_or_else(|| panic!("{feature} detector missed: {text}"));
            assert_eq!(record.matched_terms.len(), 1, "matches in {text:?}");
            let (_, span) = &record.matched_terms[0];
            assert_eq!(span.slice(text), *expected, "flagged span in {text:?}");
            assert_eq!(span.start, text.find(expected).unwrap(), "span offset in {text:?}");
        }
    };

    check_lexicon(
        &CompiledMatcher::compile(&stigma_lexicon()).unwrap(),
        BiasFeature::StigmatizingLabels,
        &stigma_cases,
    );
    check_lexicon(
        &CompiledMatcher::compile(&doubt_lexicon()).unwrap(),
        BiasFeature::DoubtMarkers,
        &doubt_cases,
    );

    let sentences: Vec<Sentence> = scare_cases
        .iter()
        .enumerate()
        .map(|(i, (text, _, _))| sentence("fx", i, text))
        .collect();
    let (records, _) =
        detect_scare_quote_candidates(&sentences, &ScareQuoteConfig::default()).unwrap();
    let by_id: HashMap<&str, &MatchRecord> =
        records.iter().map(|r| (r.sentence_id.as_str(), r)).collect();
    for (i, (text, all_quoted, underlined)) in scare_cases.iter().enumerate() {
        let id = Sentence::id_for("fx", i);
        let record =
            by_id.get(id.as_str()).unwrap_or_else(|| panic!("scare-quote detector missed: {text}"));
        let slices: Vec<&str> = record.quoted_spans.iter().map(|s| s.slice(text)).collect();
        assert_eq!(&slices, all_quoted, "quoted spans in {text:?}");
        assert!(slices.contains(underlined), "expected span {underlined:?} in {text:?}");
        assert_eq!(record.patient_ref.as_deref(), Some("pt"), "patient reference in {text:?}");
    }
    println!("criterion 02 PASS: all nine fixture sentences flagged at their exact spans");
}

#[test]
fn criterion_03_recorded_f1_agrees_with_its_own_precision_and_recall() {
    // Positive-class (precision, recall, f1) triples from recorded evaluation
    // runs of the three bag-of-words model families on each feature.
    let rows = [
        ("stigmatizing_labels", "random_forest", 0.77, 0.73, 0.75),
        ("stigmatizing_labels", "logistic_regression", 0.75, 0.84, 0.79),
        ("stigmatizing_labels", "naive_bayes", 0.62, 0.86, 0.72),
        ("doubt_markers", "random_forest", 0.76, 0.76, 0.76),
        ("doubt_markers", "logistic_regression", 0.71, 0.89, 0.78),
        ("doubt_markers", "naive_bayes", 0.70, 0.89, 0.78),
        ("scare_quotes", "random_forest", 0.00, 0.00, 0.00),
        ("scare_quotes", "logistic_regression", 0.30, 0.10, 0.14),
        ("scare_quotes", "naive_bayes", 0.43, 0.24, 0.31),
    ];
    for (feature, model, p, r, f1) in rows {
        let computed = f1_from_precision_recall(p, r);
        assert!(
            (computed - f1).abs() <= 0.01 + 1e-9,
            "{feature}/{model}: F1 from P={p} R={r} is {computed:.4}, recorded {f1}"
        );
    }
    println!("criterion 03 PASS: every recorded F1 is within a cent of its own P and R");
}

fn oracle_metrics(y_true: &[u8], y_pred: &[u8]) -> [f64; 7] {
    let (mut tp, mut fp, mut tn, mut fneg) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => tp += 1.0,
            (0, 1) => fp += 1.0,
            (0, 0) => tn += 1.0,
            (1, 0) => fneg += 1.0,
            other => panic!("labels must be 0/1, got {other:?}"),
        }
    }
    let div = |n: f64, d: f64| if d == 0.0 { 0.0 } else { n / d };
    let f1 = |p: f64, r: f64| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    let p_pos = div(tp, tp + fp);
    let r_pos = div(tp, tp + fneg);
    let p_neg = div(tn, tn + fneg);
    let r_neg = div(tn, tn + fp);
    [
        div(tp + tn, tp + fp + tn + fneg),
        p_pos,
        r_pos,
        f1(p_pos, r_pos),
        (p_pos + p_neg) / 2.0,
        (r_pos + r_neg) / 2.0,
        (f1(p_pos, r_pos) + f1(p_neg, r_neg)) / 2.0,
    ]
}

#[test]
fn criterion_04_metrics_match_a_brute_force_recount_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pairs: Vec<(Vec<u8>, Vec<u8>)> = vec![
        (vec![1; 200], vec![1; 200]),
        (vec![0; 200], vec![1; 200]),
        (vec![1; 200], vec![0; 200]),
        (vec![0; 200], vec![0; 200]),
    ];
    for _ in 0..1000 {
        let y_true: Vec<u8> = (0..200).map(|_| rng.gen_bool(0.45) as u8).collect();
        let y_pred: Vec<u8> = (0..200).map(|_| rng.gen_bool(0.5) as u8).collect();
        pairs.push((y_true, y_pred));
    }
    for (y_true, y_pred) in &pairs {
        let ours = metrics(&confusion(y_true, y_pred).unwrap()).values();
        let oracle = oracle_metrics(y_true, y_pred);
        for (i, (a, b)) in ours.iter().zip(oracle).enumerate() {
            assert!((a - b).abs() <= 1e-12, "metric {i} diverges: {a} vs oracle {b}");
        }
    }
    println!("criterion 04 PASS: all seven metrics match the recount on {} pairs", pairs.len());
}

#[test]
fn criterion_05_kappa_hand_cases_are_exact() {
    let labels = |who: &str, values: &[u8]| -> Vec<AnnotationLabel> {
        values
            .iter()
            .enumerate()
            .map(|(i, &label)| AnnotationLabel {
                sentence_id: format!("s{i}"),
                annotator_id: who.to_string(),
                label,
                close_call: false,
                exemplary: false,
                note: String::new(),
            })
            .collect()
    };
    let kappa = |a: &[u8], b: &[u8]| agreement(&labels("a", a), &labels("b", b)).unwrap().kappa;

    assert_eq!(kappa(&[1, 1, 0, 0], &[0, 0, 1, 1]), -1.0);
    assert_eq!(kappa(&[1, 1, 0, 0], &[1, 0, 0, 1]), 0.0);
    assert_eq!(kappa(&[1, 0, 1, 0], &[1, 0, 1, 0]), 1.0);
    println!("criterion 05 PASS: kappa is exactly -1, 0, and 1 on the hand-built cases");
}

#[test]
fn criterion_06_classifier_fits_match_closed_form_checks() {
    // Multinomial model: smoothed per-class token probabilities by hand.
    let x = FeatureMatrix::from_rows(
        vec![vec![(0, 3), (1, 1)], vec![(0, 2), (1, 2)], vec![(1, 4)], vec![(0, 1), (1, 3)]],
        2,
    );
    let y = [0u8, 0, 1, 1];
    let nb = MultinomialNb::fit(&x, &y, MultinomialNbConfig { alpha: 1.0 }).unwrap();
    let expect = |a: f64, b: f64| (a / b).ln();
    assert!((nb.class_log_prior[0] - 0.5f64.ln()).abs() <= 1e-12);
    assert!((nb.class_log_prior[1] - 0.5f64.ln()).abs() <= 1e-12);
    assert!((nb.feature_log_prob[0][0] - expect(6.0, 10.0)).abs() <= 1e-12);
    assert!((nb.feature_log_prob[0][1] - expect(4.0, 10.0)).abs() <= 1e-12);
    assert!((nb.feature_log_prob[1][0] - expect(2.0, 10.0)).abs() <= 1e-12);
    assert!((nb.feature_log_prob[1][1] - expect(8.0, 10.0)).abs() <= 1e-12);
    let row = [(0u32, 2u32), (1u32, 1u32)];
    let scores = nb.log_posteriors(&row);
    let hand0 = 0.5f64.ln() + 2.0 * expect(6.0, 10.0) + expect(4.0, 10.0);
    let hand1 = 0.5f64.ln() + 2.0 * expect(2.0, 10.0) + expect(8.0, 10.0);
    assert!((scores[0] - hand0).abs() <= 1e-12);
    assert!((scores[1] - hand1).abs() <= 1e-12);

    // Logistic objective: analytic gradient against central differences.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for instance in 0..20 {
        let n_rows = rng.gen_range(3..=8);
        let n_cols = rng.gen_range(2..=5);
        let rows: Vec<Vec<(u32, u32)>> = (0..n_rows)
            .map(|_| {
                (0..n_cols as u32)
                    .filter_map(|j| {
                        let count = rng.gen_range(0..4u32);
                        (count > 0).then_some((j, count))
                    })
                    .collect()
            })
            .collect();
        let x = FeatureMatrix::from_rows(rows, n_cols);
        let y: Vec<u8> = (0..n_rows).map(|_| rng.gen_bool(0.5) as u8).collect();
        let c = if instance % 2 == 0 { 0.5 } else { 2.0 };
        let theta: Vec<f64> = (0..n_cols + 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let analytic = objective_gradient(&x, &y, c, &theta);
        let h = 1e-5;
        for j in 0..theta.len() {
            let mut plus = theta.clone();
            plus[j] += h;
            let mut minus = theta.clone();
            minus[j] -= h;
            let numeric =
                (objective_value(&x, &y, c, &plus) - objective_value(&x, &y, c, &minus)) / (2.0 * h);
            let denom = analytic[j].abs().max(numeric.abs()).max(1.0);
            assert!(
                (analytic[j] - numeric).abs() / denom <= 1e-6,
                "instance {instance} coordinate {j}: analytic {} vs numeric {numeric}",
                analytic[j]
            );
        }
    }

    // A single unlimited tree memorizes consistent data.
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let rows: Vec<Vec<(u32, u32)>> = (0..40)
        .map(|_| {
            (0..6u32)
                .filter_map(|j| {
                    let count = rng.gen_range(0..5u32);
                    (count > 0).then_some((j, count))
                })
                .collect()
        })
        .collect();
    let y: Vec<u8> = rows
        .iter()
        .map(|row| {
            let total: u32 =
                row.iter().filter(|(j, _)| *j < 2).map(|&(_, count)| count).sum();
            (total > 4) as u8
        })
        .collect();
    let x = FeatureMatrix::from_rows(rows, 6);
    let tree = RandomForest::fit(
        &x,
        &y,
        RandomForestConfig {
            n_estimators: 1,
            max_depth: None,
            min_samples_split: 2,
            bootstrap: false,
            seed: 9,
        },
    )
    .unwrap();
    assert_eq!(tree.predict(&x).unwrap(), y, "unlimited tree must fit its training data");

    // A depth-one stump puts all importance on its only splitting feature.
    let x = FeatureMatrix::from_rows(vec![vec![], vec![], vec![(0, 1)], vec![(0, 1)]], 1);
    let y = [0u8, 0, 1, 1];
    let stump = RandomForest::fit(
        &x,
        &y,
        RandomForestConfig {
            n_estimators: 1,
            max_depth: Some(1),
            min_samples_split: 2,
            bootstrap: false,
            seed: 9,
        },
    )
    .unwrap();
    let importances = gini_importances_full(&stump);
    assert_eq!(importances.len(), 1);
    assert!((importances[0] - 1.0).abs() <= 1e-12, "stump importance {}", importances[0]);

    println!("criterion 06 PASS: NB, logistic gradient, tree fit, and stump importance all check out");
}

#[test]
fn criterion_07_stratified_splits_preserve_class_balance() {
    for seed in [1u64, 2, 3] {
        let mut y = vec![1u8; 439];
        y.extend(vec![0u8; 561]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        y.shuffle(&mut rng);

        let plan = split_plan(&y, 0.2, 5, seed).unwrap();
        let test_pos = plan.test_ids.iter().filter(|&&i| y[i] == 1).count();
        assert!(
            test_pos == 87 || test_pos == 88,
            "seed {seed}: test split holds {test_pos} positives"
        );
        let pos_counts: Vec<usize> = plan
            .folds
            .iter()
            .map(|fold| fold.test.iter().filter(|&&i| y[i] == 1).count())
            .collect();
        let neg_counts: Vec<usize> = plan
            .folds
            .iter()
            .map(|fold| fold.test.iter().filter(|&&i| y[i] == 0).count())
            .collect();
        let sizes: Vec<usize> = plan.folds.iter().map(|fold| fold.test.len()).collect();
        for counts in [&pos_counts, &neg_counts, &sizes] {
            let min = counts.iter().min().unwrap();
            let max = counts.iter().max().unwrap();
            assert!(max - min <= 1, "seed {seed}: fold counts {counts:?} spread past 1");
        }
    }
    println!("criterion 07 PASS: 87/88 test positives and folds balanced within 1 across seeds");
}

#[test]
fn criterion_08_bootstrap_intervals_are_sound_and_fast() {
    let mut y = vec![1u8; 35];
    y.extend(vec![0u8; 25]);
    let perfect = bootstrap_ci(&y, &y, 200, 0.95, 5).unwrap();
    for ((point, lo), hi) in perfect
        .point
        .values()
        .into_iter()
        .zip(perfect.lo.values())
        .zip(perfect.hi.values())
    {
        assert_eq!(point, 1.0);
        assert_eq!(lo, 1.0);
        assert_eq!(hi, 1.0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let y_true: Vec<u8> = (0..200).map(|_| rng.gen_bool(0.45) as u8).collect();
    let y_pred: Vec<u8> = y_true
        .iter()
        .map(|&label| if rng.gen_bool(0.8) { label } else { 1 - label })
        .collect();
    for seed in 0..100 {
        let ci = bootstrap_ci(&y_true, &y_pred, 1000, 0.95, seed).unwrap();
        for ((point, lo), hi) in
            ci.point.values().into_iter().zip(ci.lo.values()).zip(ci.hi.values())
        {
            assert!(
                lo <= point + 1e-12 && point <= hi + 1e-12,
                "seed {seed}: point {point} outside [{lo}, {hi}]"
            );
        }
    }

    let started = Instant::now();
    bootstrap_ci(&y_true, &y_pred, 1000, 0.95, 999).unwrap();
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "1000 resamples took {elapsed:?}");
    println!("criterion 08 PASS: degenerate and covering intervals verified; 1000 resamples in {elapsed:?}");
}

struct PipelineFixture {
    _keep: tempfile::TempDir,
    sentences_total: usize,
    dataset_rows: usize,
    macro_f1: BTreeMap<String, f64>,
    cv_means: BTreeMap<(String, String), f64>,
    selected: serde_json::Value,
    rerun_mismatches: Vec<String>,
    primary_seconds: f64,
}

fn pipeline() -> &'static PipelineFixture {
    static FIXTURE: OnceLock<PipelineFixture> = OnceLock::new();
    FIXTURE.get_or_init(build_pipeline)
}

fn run_cli(args: &[&str], cwd: &Path) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_care-sd"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn care-sd");
    assert!(
        out.status.success(),
        "care-sd {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn snapshot(path: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    if path.is_file() {
        files.insert(String::new(), fs::read(path).unwrap());
        return files;
    }
    let mut stack = vec![path.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let child = entry.unwrap().path();
            if child.is_dir() {
                stack.push(child);
                continue;
            }
            if child.file_name().is_some_and(|name| name == "timings.tsv") {
                continue;
            }
            let rel = child.strip_prefix(path).unwrap().to_string_lossy().into_owned();
            files.insert(rel, fs::read(&child).unwrap());
        }
    }
    files
}

fn compare_rerun(mismatches: &mut Vec<String>, stage: &str, a: &Path, b: &Path) {
    let (sa, sb) = (snapshot(a), snapshot(b));
    if sa.keys().ne(sb.keys()) {
        mismatches.push(format!(
            "{stage}: file sets differ ({:?} vs {:?})",
            sa.keys().collect::<Vec<_>>(),
            sb.keys().collect::<Vec<_>>()
        ));
        return;
    }
    for (name, bytes) in &sa {
        if sb[name] != *bytes {
            mismatches.push(format!("{stage}: {} differs between reruns", if name.is_empty() { a.display().to_string() } else { name.clone() }));
        }
    }
}

fn tsv_body(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("read {path:?}: {e}"));
    text.lines().skip(1).map(str::to_string).collect()
}

fn flip_for(id: &str) -> bool {
    id.bytes().fold(0u64, |h, b| h.wrapping_mul(131).wrapping_add(b as u64)) % 5 == 0
}

fn write_annotation_csv(path: &Path, rows: &[(String, String, u8)]) {
    let mut writer = csv::Writer::from_path(path).unwrap();
    writer
        .write_record(["sentence_id", "text", "label", "close_call", "exemplary", "note"])
        .unwrap();
    for (id, text, label) in rows {
        writer.write_record([id.as_str(), text.as_str(), &label.to_string(), "", "", ""]).unwrap();
    }
    writer.flush().unwrap();
}

fn build_pipeline() -> PipelineFixture {
    let keep = tempfile::tempdir().unwrap();
    let root = keep.path().to_path_buf();
    let dir_a = root.join("a");
    let dir_b = root.join("b");
    fs::create_dir_all(&dir_a).unwrap();
    fs::create_dir_all(&dir_b).unwrap();
    let data = data_dir();
    let doubt_lex = data.join("lexicons/doubt_markers.lex");
    let stigma_lex = data.join("lexicons/stigmatizing_labels.lex");
    let mut mismatches = Vec::new();
    let mut primary = 0.0f64;
    let s = |p: &Path| p.to_str().unwrap().to_string();

    let spec = serde_json::json!({
        "n_notes": 560,
        "sentences_per_note": [6, 12],
        "stigma_rate": 0.10,
        "doubt_rate": 0.30,
        "scare_rate": 0.05,
        "positive_fraction_doubt": 0.45,
        "p_signal": 1.0,
        "seed": 424242,
    });
    let spec_path = root.join("spec.json");
    fs::write(&spec_path, serde_json::to_vec_pretty(&spec).unwrap()).unwrap();

    let timed = |primary: &mut f64, args: &[&str]| {
        let started = Instant::now();
        run_cli(args, &root);
        *primary += started.elapsed().as_secs_f64();
    };

    // Corpus synthesis, run twice to two locations.
    for dir in [&dir_a, &dir_b] {
        let args = [
            "synth",
            "--spec",
            &s(&spec_path),
            "--out",
            &s(&dir.join("corpus.csv")),
            "--lexicon-doubt",
            &s(&doubt_lex),
            "--lexicon-stigma",
            &s(&stigma_lex),
        ];
        if dir == &dir_a {
            timed(&mut primary, &args.iter().map(|a| &**a).collect::<Vec<_>>());
        } else {
            run_cli(&args.iter().map(|a| &**a).collect::<Vec<_>>(), &root);
        }
    }
    for name in
        ["corpus.csv", "truth_doubt_markers.tsv", "truth_stigmatizing_labels.tsv", "truth_scare_quotes.tsv"]
    {
        compare_rerun(&mut mismatches, &format!("synth/{name}"), &dir_a.join(name), &dir_b.join(name));
    }

    // Everything downstream consumes run A's files so each rerun isolates one stage.
    let corpus = s(&dir_a.join("corpus.csv"));
    let sentences_a = dir_a.join("sentences.tsv");
    let sentences_b = dir_b.join("sentences.tsv");
    timed(&mut primary, &["ingest", "--notes", &corpus, "--out", &s(&sentences_a)]);
    run_cli(&["ingest", "--notes", &corpus, "--out", &s(&sentences_b)], &root);
    compare_rerun(&mut mismatches, "ingest", &sentences_a, &sentences_b);

    for dir in [&dir_a, &dir_b] {
        run_cli(
            &["stats", "--notes", &corpus, "--sentences", &s(&sentences_a), "--out-dir", &s(&dir.join("stats"))],
            &root,
        );
    }
    compare_rerun(&mut mismatches, "stats", &dir_a.join("stats"), &dir_b.join("stats"));

    let sent_arg = s(&sentences_a);
    for (feature, lexicon) in [
        ("doubt_markers", Some(&doubt_lex)),
        ("stigmatizing_labels", Some(&stigma_lex)),
        ("scare_quotes", None),
    ] {
        let file = format!("matches_{}.tsv", feature.split('_').next().unwrap());
        for dir in [&dir_a, &dir_b] {
            let out = s(&dir.join(&file));
            let mut args = vec!["scan", "--feature", feature, "--in", &sent_arg, "--out", &out];
            let lex_str;
            if let Some(lex) = lexicon {
                lex_str = s(lex);
                args.push("--lexicon");
                args.push(&lex_str);
            }
            if dir == &dir_a && feature == "doubt_markers" {
                timed(&mut primary, &args);
            } else {
                run_cli(&args, &root);
            }
        }
        compare_rerun(&mut mismatches, &format!("scan/{feature}"), &dir_a.join(&file), &dir_b.join(&file));
    }

    // Label the scanned doubt sentences from the planted truth table.
    let started = Instant::now();
    let truth: HashMap<String, u8> = tsv_body(&dir_a.join("truth_doubt_markers.tsv"))
        .iter()
        .map(|line| {
            let (text, label) = line.rsplit_once('\t').expect("truth row");
            (text.to_string(), label.parse().expect("truth label"))
        })
        .collect();
    let mut texts: HashMap<String, String> = HashMap::new();
    for line in tsv_body(&sentences_a) {
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        texts.insert(fields[0].to_string(), fields[3].to_string());
    }
    let matched_ids: Vec<String> = tsv_body(&dir_a.join("matches_doubt.tsv"))
        .iter()
        .map(|line| line.split('\t').next().unwrap().to_string())
        .collect();
    let mut labels_file = String::from("sentence_id\tlabel\n");
    for id in &matched_ids {
        let text = &texts[id];
        let label = truth
            .get(text)
            .unwrap_or_else(|| panic!("scanned sentence {id} missing from the planted truth"));
        labels_file.push_str(&format!("{id}\t{label}\n"));
    }
    let labels_path = dir_a.join("labels.tsv");
    fs::write(&labels_path, labels_file).unwrap();
    primary += started.elapsed().as_secs_f64();

    let dataset_a = dir_a.join("dataset.tsv");
    let dataset_b = dir_b.join("dataset.tsv");
    for (out, time_it) in [(&dataset_a, true), (&dataset_b, false)] {
        let args = [
            "merge-labels",
            "--labels",
            &s(&labels_path),
            "--sentences",
            &sent_arg,
            "--feature",
            "doubt_markers",
            "--out",
            &s(out),
        ];
        if time_it {
            timed(&mut primary, &args.iter().map(|a| &**a).collect::<Vec<_>>());
        } else {
            run_cli(&args.iter().map(|a| &**a).collect::<Vec<_>>(), &root);
        }
    }
    compare_rerun(&mut mismatches, "merge-labels", &dataset_a, &dataset_b);

    // Annotation workflow: a sampled batch, two synthetic annotators,
    // agreement scoring, and adjudication of their disagreements.
    let matches_doubt = s(&dir_a.join("matches_doubt.tsv"));
    for dir in [&dir_a, &dir_b] {
        run_cli(
            &[
                "sample", "--feature", "doubt_markers", "--matches", &matches_doubt,
                "--sentences", &sent_arg, "--sizes", "60,100", "--seed", "17",
                "--out-dir", &s(&dir.join("sample")),
            ],
            &root,
        );
    }
    compare_rerun(&mut mismatches, "sample", &dir_a.join("sample"), &dir_b.join("sample"));

    let batch = dir_a.join("sample/batch_1_reliability_60.csv");
    let mut reader = csv::Reader::from_path(&batch).unwrap();
    let mut rows_a = Vec::new();
    let mut rows_b = Vec::new();
    for record in reader.records() {
        let record = record.unwrap();
        let id = record[0].to_string();
        let text = record[1].to_string();
        let label = truth[&text];
        rows_a.push((id.clone(), text.clone(), label));
        let flipped = if flip_for(&id) { 1 - label } else { label };
        rows_b.push((id, text, flipped));
    }
    let annot_a = dir_a.join("annot_a.csv");
    let annot_b = dir_a.join("annot_b.csv");
    write_annotation_csv(&annot_a, &rows_a);
    write_annotation_csv(&annot_b, &rows_b);

    for dir in [&dir_a, &dir_b] {
        run_cli(
            &[
                "agreement", "--a", &s(&annot_a), "--b", &s(&annot_b),
                "--out", &s(&dir.join("agreement.json")),
            ],
            &root,
        );
    }
    compare_rerun(&mut mismatches, "agreement", &dir_a.join("agreement.json"), &dir_b.join("agreement.json"));

    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir_a.join("agreement.json")).unwrap()).unwrap();
    let disagreements: Vec<String> = report["disagreement_ids"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert!(!disagreements.is_empty(), "synthetic annotators never disagreed");
    let mut resolutions = String::from("sentence_id\tlabel\n");
    for id in &disagreements {
        resolutions.push_str(&format!("{id}\t{}\n", truth[&texts[id]]));
    }
    let resolutions_path = dir_a.join("resolutions.tsv");
    fs::write(&resolutions_path, resolutions).unwrap();

    for dir in [&dir_a, &dir_b] {
        let adjud = dir.join("adjud");
        fs::create_dir_all(&adjud).unwrap();
        run_cli(
            &[
                "adjudicate", "--a", &s(&annot_a), "--b", &s(&annot_b),
                "--resolutions", &s(&resolutions_path),
                "--out", &s(&adjud.join("labels.tsv")),
                "--sentences", &sent_arg, "--feature", "doubt_markers",
                "--dataset-out", &s(&adjud.join("dataset.tsv")),
            ],
            &root,
        );
    }
    compare_rerun(&mut mismatches, "adjudicate", &dir_a.join("adjud"), &dir_b.join("adjud"));

    // Model training and evaluation on the planted-label dataset.
    let dataset = s(&dataset_a);
    for dir in [&dir_a, &dir_b] {
        let args = [
            "train", "--dataset", &dataset, "--feature", "doubt_markers",
            "--out-dir", &s(&dir.join("train")),
            "--seed-split", "7", "--seed-models", "13",
            "--nb-alpha", "0.5,1.0", "--logreg-c", "0.1,1.0",
            "--rf-trees", "15,30", "--rf-depths", "none", "--rf-min-split", "2",
        ];
        if dir == &dir_a {
            timed(&mut primary, &args.iter().map(|a| &**a).collect::<Vec<_>>());
        } else {
            run_cli(&args.iter().map(|a| &**a).collect::<Vec<_>>(), &root);
        }
    }
    compare_rerun(&mut mismatches, "train", &dir_a.join("train"), &dir_b.join("train"));

    let model_dir = s(&dir_a.join("train"));
    for dir in [&dir_a, &dir_b] {
        let args = [
            "evaluate", "--dataset", &dataset, "--feature", "doubt_markers",
            "--model-dir", &model_dir, "--out-dir", &s(&dir.join("eval")),
            "--seed-bootstrap", "21", "--resamples", "300",
        ];
        if dir == &dir_a {
            timed(&mut primary, &args.iter().map(|a| &**a).collect::<Vec<_>>());
        } else {
            run_cli(&args.iter().map(|a| &**a).collect::<Vec<_>>(), &root);
        }
    }
    compare_rerun(&mut mismatches, "evaluate", &dir_a.join("eval"), &dir_b.join("eval"));
    run_cli(
        &[
            "evaluate", "--dataset", &dataset, "--feature", "doubt_markers",
            "--model-dir", &model_dir, "--out-dir", &s(&dir_a.join("eval_timed")),
            "--seed-bootstrap", "21", "--resamples", "300",
            "--timings", &s(&dir_a.join("train/timings.tsv")),
        ],
        &root,
    );

    for dir in [&dir_a, &dir_b] {
        run_cli(
            &[
                "importance", "--feature", "doubt_markers", "--model-dir", &model_dir,
                "--out-dir", &s(&dir.join("imp")), "--top", "20", "--charts",
            ],
            &root,
        );
    }
    compare_rerun(&mut mismatches, "importance", &dir_a.join("imp"), &dir_b.join("imp"));

    let matches_stigma = s(&dir_a.join("matches_stigmatizing.tsv"));
    let matches_scare = s(&dir_a.join("matches_scare.tsv"));
    for dir in [&dir_a, &dir_b] {
        run_cli(
            &[
                "report", "--sentences", &sent_arg,
                "--matches-doubt", &matches_doubt,
                "--matches-stigma", &matches_stigma,
                "--matches-scare", &matches_scare,
                "--out-dir", &s(&dir.join("report")), "--top", "10", "--max-gram", "2", "--charts",
            ],
            &root,
        );
    }
    compare_rerun(&mut mismatches, "report", &dir_a.join("report"), &dir_b.join("report"));

    // Lexicon maintenance: expansion with import, pruning, noise removal,
    // and compilation.
    let embeddings = s(&data.join("embeddings/toy_vectors.txt"));
    let decisions_path = root.join("decisions.tsv");
    fs::write(
        &decisions_path,
        "term\tkeep_a\tkeep_b\tfinal_keep\nadamantly\t1\t1\t1\nclaims\t1\t0\t1\n",
    )
    .unwrap();
    let noise_path = root.join("noise.txt");
    fs::write(&noise_path, "claims\n").unwrap();
    let mut compile_outputs = Vec::new();
    for dir in [&dir_a, &dir_b] {
        let grown = dir.join("lex_grown.lex");
        run_cli(
            &[
                "lexicon", "expand", "--feature", "doubt_markers",
                "--lexicon", &s(&doubt_lex), "--embeddings", &embeddings, "--k", "3",
                "--apply", "--lexicon-out", &s(&grown), "--out", &s(&dir.join("edges.tsv")),
            ],
            &root,
        );
        let pruned = dir.join("lex_pruned.lex");
        run_cli(
            &[
                "lexicon", "prune", "--feature", "doubt_markers", "--lexicon", &s(&grown),
                "--decisions", &s(&decisions_path), "--out", &s(&pruned),
            ],
            &root,
        );
        let cleaned = dir.join("lex_final.lex");
        run_cli(
            &[
                "lexicon", "noise", "--feature", "doubt_markers", "--lexicon", &s(&pruned),
                "--terms", &s(&noise_path), "--out", &s(&cleaned),
            ],
            &root,
        );
        let out = run_cli(
            &["lexicon", "compile", "--feature", "doubt_markers", "--lexicon", &s(&cleaned)],
            &root,
        );
        compile_outputs.push(out.stdout);
    }
    for name in ["edges.tsv", "lex_grown.lex", "lex_pruned.lex", "lex_final.lex"] {
        compare_rerun(&mut mismatches, &format!("lexicon/{name}"), &dir_a.join(name), &dir_b.join(name));
    }
    if compile_outputs[0] != compile_outputs[1] {
        mismatches.push("lexicon/compile: stdout differs between reruns".into());
    }

    // Collect the numbers the criteria assert on.
    let sentences_total = tsv_body(&sentences_a).len();
    let dataset_rows = tsv_body(&dataset_a).len();
    let mut macro_f1 = BTreeMap::new();
    for line in tsv_body(&dir_a.join("eval/metrics.tsv")) {
        let fields: Vec<&str> = line.split('\t').collect();
        macro_f1.insert(fields[1].to_string(), fields[16].parse::<f64>().unwrap());
    }
    let mut sums: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    for line in tsv_body(&dir_a.join("train/cv_table.tsv")) {
        let fields: Vec<&str> = line.split('\t').collect();
        let entry = sums.entry((fields[0].to_string(), fields[1].to_string())).or_default();
        entry.0 += fields[3].parse::<f64>().unwrap();
        entry.1 += 1;
    }
    let cv_means =
        sums.into_iter().map(|(key, (sum, n))| (key, sum / n as f64)).collect::<BTreeMap<_, _>>();
    let selected: serde_json::Value =
        serde_json::from_slice(&fs::read(dir_a.join("train/selected_params.json")).unwrap()).unwrap();

    PipelineFixture {
        _keep: keep,
        sentences_total,
        dataset_rows,
        macro_f1,
        cv_means,
        selected,
        rerun_mismatches: mismatches,
        primary_seconds: primary,
    }
}

#[test]
fn criterion_09_planted_signal_pipeline_reaches_high_held_out_f1() {
    let fx = pipeline();
    assert!(
        fx.sentences_total >= 5000,
        "corpus produced only {} sentences",
        fx.sentences_total
    );
    assert!(fx.dataset_rows >= 500, "dataset produced only {} rows", fx.dataset_rows);

    for model in ["naive_bayes", "logistic_regression"] {
        let f1 = fx.macro_f1[model];
        assert!(f1 >= 0.95, "{model} held-out macro F1 {f1}");
    }

    let selected_params = [
        ("naive_bayes", format!("alpha={}", fx.selected["nb_alpha"].as_f64().unwrap())),
        ("logistic_regression", format!("C={}", fx.selected["logreg_c"].as_f64().unwrap())),
        (
            "random_forest",
            format!(
                "n_estimators={},max_depth={},min_samples_split={}",
                fx.selected["rf"]["n_estimators"],
                fx.selected["rf"]["max_depth"]
                    .as_u64()
                    .map_or("none".to_string(), |d| d.to_string()),
                fx.selected["rf"]["min_samples_split"],
            ),
        ),
    ];
    for (model, params) in selected_params {
        let chosen = fx
            .cv_means
            .get(&(model.to_string(), params.clone()))
            .unwrap_or_else(|| panic!("{model} cell {params:?} missing from the CV table"));
        let best = fx
            .cv_means
            .iter()
            .filter(|((m, _), _)| m == model)
            .map(|(_, mean)| *mean)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            (chosen - best).abs() <= 1e-9,
            "{model}: picked cell scores {chosen}, table maximum is {best}"
        );
    }

    assert!(
        fx.primary_seconds < 120.0,
        "primary pipeline path took {:.1}s",
        fx.primary_seconds
    );
    println!(
        "criterion 09 PASS: {} sentences, macro F1 nb={:.3} logreg={:.3}, grid argmax confirmed, {:.1}s",
        fx.sentences_total,
        fx.macro_f1["naive_bayes"],
        fx.macro_f1["logistic_regression"],
        fx.primary_seconds
    );
}

fn oracle_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '-' | '\'' | '/')
}

struct TermOracle {
    patterns: Vec<(String, Regex)>,
}

impl TermOracle {
    fn new(matcher: &CompiledMatcher) -> Self {
        let patterns = matcher
            .patterns()
            .iter()
            .map(|term| {
                (term.clone(), Regex::new(&format!("(?i){}", regex::escape(term))).unwrap())
            })
            .collect();
        TermOracle { patterns }
    }

    fn spans(&self, text: &str) -> Vec<(usize, usize, String)> {
        let mut all = Vec::new();
        for (term, re) in &self.patterns {
            let mut at = 0;
            while let Some(found) = re.find_at(text, at) {
                let (start, end) = (found.start(), found.end());
                let prev_ok = text[..start].chars().next_back().is_none_or(|c| !oracle_word_char(c));
                let next_ok = text[end..].chars().next().is_none_or(|c| !oracle_word_char(c));
                if prev_ok && next_ok {
                    all.push((start, end, term.clone()));
                }
                at = start + text[start..].chars().next().map_or(1, char::len_utf8);
                if at > text.len() {
                    break;
                }
            }
        }
        all.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut kept = Vec::new();
        let mut cursor = 0;
        for (start, end, term) in all {
            if start >= cursor {
                cursor = end;
                kept.push((start, end, term));
            }
        }
        kept
    }
}

fn oracle_scare(text: &str, config: &ScareQuoteConfig) -> Option<(Vec<(usize, usize)>, String)> {
    let mut marks = Vec::new();
    for (i, c) in text.char_indices() {
        let quoting = c == '"' || (config.typographic_quotes && matches!(c, '\u{201c}' | '\u{201d}'));
        if quoting {
            marks.push((i, c.len_utf8()));
        }
    }
    if marks.is_empty() || marks.len() % 2 == 1 {
        return None;
    }
    let mut spans = Vec::new();
    for pair in marks.chunks(2) {
        let start = pair[0].0 + pair[0].1;
        let end = pair[1].0;
        if start < end {
            spans.push((start, end));
        }
    }
    if spans.is_empty() {
        return None;
    }
    let bytes = text.as_bytes();
    let mut earliest: Option<(usize, usize)> = None;
    for token in &config.patient_tokens {
        let needle = token.as_bytes();
        if needle.is_empty() || needle.len() > bytes.len() {
            continue;
        }
        for start in 0..=bytes.len() - needle.len() {
            if !text.is_char_boundary(start) || !text.is_char_boundary(start + needle.len()) {
                continue;
            }
            if !bytes[start..start + needle.len()].eq_ignore_ascii_case(needle) {
                continue;
            }
            let prev_ok = text[..start].chars().next_back().is_none_or(|c| !oracle_word_char(c));
            let next_ok =
                text[start + needle.len()..].chars().next().is_none_or(|c| !oracle_word_char(c));
            if prev_ok && next_ok {
                if earliest.is_none_or(|(s, _)| start < s) {
                    earliest = Some((start, start + needle.len()));
                }
                break;
            }
        }
    }
    let (start, end) = earliest?;
    Some((spans, text[start..end].to_string()))
}

#[test]
fn criterion_10_corpus_scanning_is_fast_and_matches_brute_force() {
    let doubt = doubt_lexicon();
    let stigma = stigma_lexicon();
    let doubt_terms: Vec<&str> = doubt.active_terms().collect();
    let stigma_terms: Vec<&str> = stigma.active_terms().collect();
    let spec = SyntheticCorpusSpec {
        n_notes: 112_000,
        sentences_per_note: (6, 12),
        stigma_rate: 0.08,
        doubt_rate: 0.08,
        scare_rate: 0.05,
        positive_fraction_stigma: 0.439,
        positive_fraction_doubt: 0.310,
        positive_fraction_scare: 0.207,
        p_signal: 1.0,
        seed: 505,
    };
    let corpus = synthesize(&spec, &stigma_terms, &doubt_terms).unwrap();
    let mut sentences: Vec<Sentence> = corpus.notes.iter().flat_map(split_sentences).collect();
    assert!(sentences.len() >= 1_000_000, "generated only {} sentences", sentences.len());
    sentences.truncate(1_000_000);

    let doubt_matcher = CompiledMatcher::compile(&doubt).unwrap();
    let stigma_matcher = CompiledMatcher::compile(&stigma).unwrap();
    let config = ScareQuoteConfig::default();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let started = Instant::now();
    let (doubt_records, stigma_records, scare_records) = pool.install(|| {
        let d = scan_lexicon(&sentences, &doubt_matcher, BiasFeature::DoubtMarkers);
        let s = scan_lexicon(&sentences, &stigma_matcher, BiasFeature::StigmatizingLabels);
        let (q, _) = detect_scare_quote_candidates(&sentences, &config).unwrap();
        (d, s, q)
    });
    let elapsed = started.elapsed().as_secs_f64();
    let rate = sentences.len() as f64 / elapsed;
    assert!(rate >= 50_000.0, "scanned {rate:.0} sentences/second on one core");

    let doubt_by_id: HashMap<&str, &MatchRecord> =
        doubt_records.iter().map(|r| (r.sentence_id.as_str(), r)).collect();
    let stigma_by_id: HashMap<&str, &MatchRecord> =
        stigma_records.iter().map(|r| (r.sentence_id.as_str(), r)).collect();
    let scare_by_id: HashMap<&str, &MatchRecord> =
        scare_records.iter().map(|r| (r.sentence_id.as_str(), r)).collect();
    let doubt_oracle = TermOracle::new(&doubt_matcher);
    let stigma_oracle = TermOracle::new(&stigma_matcher);

    for i in 0..10_000 {
        let sentence = &sentences[i * 100];
        let text = &sentence.text;
        for (oracle, by_id) in [(&doubt_oracle, &doubt_by_id), (&stigma_oracle, &stigma_by_id)] {
            let expected = oracle.spans(text);
            let got: Vec<(usize, usize, String)> = by_id
                .get(sentence.sentence_id.as_str())
                .map(|record| {
                    record
                        .matched_terms
                        .iter()
                        .map(|(term, span)| (span.start, span.end, term.clone()))
                        .collect()
                })
                .unwrap_or_default();
            assert_eq!(got, expected, "lexicon scan disagrees on {text:?}");
        }
        let expected = oracle_scare(text, &config);
        let got = scare_by_id.get(sentence.sentence_id.as_str()).map(|record| {
            (
                record.quoted_spans.iter().map(|s| (s.start, s.end)).collect::<Vec<_>>(),
                record.patient_ref.clone().unwrap_or_default(),
            )
        });
        assert_eq!(got, expected, "scare-quote scan disagrees on {text:?}");
    }
    println!(
        "criterion 10 PASS: {:.0} sentences/second/core over 1,000,000 sentences; 10,000-sentence recount agrees",
        rate
    );
}

#[test]
fn criterion_11_pipeline_stages_rerun_byte_identically() {
    let fx = pipeline();
    assert!(
        fx.rerun_mismatches.is_empty(),
        "stages with nondeterministic output:\n{}",
        fx.rerun_mismatches.join("\n")
    );
    println!("criterion 11 PASS: every stage rerun produced byte-identical files");
}
