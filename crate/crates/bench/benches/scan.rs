use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use care_sd_bench::{fixture_sentences, load_lexicon};
use care_sd_core::detect::{self, ScareQuoteConfig};
use care_sd_core::lexicon::BiasFeature;
use care_sd_core::matcher::CompiledMatcher;

fn bench_lexicon_scan(c: &mut Criterion) {
    let sentences = fixture_sentences(6_000, 17);
    let stigma = CompiledMatcher::compile(&load_lexicon(BiasFeature::StigmatizingLabels)).unwrap();
    let doubt = CompiledMatcher::compile(&load_lexicon(BiasFeature::DoubtMarkers)).unwrap();

    let mut group = c.benchmark_group("lexicon_scan");
    group.throughput(Throughput::Elements(sentences.len() as u64));
    group.bench_with_input(
        BenchmarkId::new("stigmatizing_labels", sentences.len()),
        &sentences,
        |b, sentences| {
            b.iter(|| detect::scan_lexicon(sentences, &stigma, BiasFeature::StigmatizingLabels))
        },
    );
    group.bench_with_input(
        BenchmarkId::new("doubt_markers", sentences.len()),
        &sentences,
        |b, sentences| {
            b.iter(|| detect::scan_lexicon(sentences, &doubt, BiasFeature::DoubtMarkers))
        },
    );
    group.finish();
}

fn bench_scare_quotes(c: &mut Criterion) {
    let sentences = fixture_sentences(6_000, 29);
    let config = ScareQuoteConfig::default();

    let mut group = c.benchmark_group("scare_quote_scan");
    group.throughput(Throughput::Elements(sentences.len() as u64));
    group.bench_with_input(
        BenchmarkId::new("default_config", sentences.len()),
        &sentences,
        |b, sentences| b.iter(|| detect::detect_scare_quote_candidates(sentences, &config).unwrap()),
    );
    group.finish();
}

criterion_group!(benches, bench_lexicon_scan, bench_scare_quotes);
criterion_main!(benches);
