//! Parallel versus sequential inference over a synthetic corpus.
//!
//! Without the `parallel` feature `par_map` falls back to the sequential
//! path, so both arms should time the same.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use elhyb::completion::{completion_vocab, CompletionConfig, CompletionModel};
use elhyb::corpus::{build_vocab, generate_synthetic, SynthConfig, SyntheticCorpus};
use elhyb::exec::{par_map, seq_map};
use elhyb::rng::seeded;
use elhyb::understanding::{DaClassifier, DaConfig, SrlConfig, SrlParser, SrlTagger, TagSet};

fn corpus() -> SyntheticCorpus {
    generate_synthetic(5, 200, &SynthConfig::default()).unwrap()
}

fn da_forward(c: &mut Criterion) {
    let corpus = corpus();
    let vocab = build_vocab(corpus.da.iter().map(|e| e.utterance.as_slice()), 1, None).unwrap();
    let model = DaClassifier::new(DaConfig::default(), vocab, &mut seeded(1)).unwrap();
    let mut g = c.benchmark_group("da_forward");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("sequential", corpus.da.len()), |b| {
        b.iter(|| seq_map(&corpus.da, |e| model.forward(&e.context, &e.utterance).unwrap()))
    });
    g.bench_function(BenchmarkId::new("parallel", corpus.da.len()), |b| {
        b.iter(|| par_map(&corpus.da, |e| model.forward(&e.context, &e.utterance).unwrap()))
    });
    g.finish();
}

fn srl_parse(c: &mut Criterion) {
    let corpus = corpus();
    let vocab = build_vocab(corpus.srl.iter().map(|e| e.utterance.as_slice()), 1, None).unwrap();
    let parser = SrlParser {
        predicates: SrlTagger::new(SrlConfig::default(), vocab.clone(), TagSet::predicate(), &mut seeded(2)).unwrap(),
        arguments: SrlTagger::new(SrlConfig::default(), vocab, TagSet::roles(), &mut seeded(3)).unwrap(),
    };
    let mut g = c.benchmark_group("srl_parse");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("sequential", corpus.srl.len()), |b| {
        b.iter(|| seq_map(&corpus.srl, |e| parser.parse(&e.utterance).unwrap()))
    });
    g.bench_function(BenchmarkId::new("parallel", corpus.srl.len()), |b| {
        b.iter(|| par_map(&corpus.srl, |e| parser.parse(&e.utterance).unwrap()))
    });
    g.finish();
}

fn greedy_completion(c: &mut Criterion) {
    let corpus = corpus();
    let vocab = completion_vocab(&corpus.completion, 2, None).unwrap();
    let model = CompletionModel::new(CompletionConfig::default(), vocab, &mut seeded(4)).unwrap();
    let items = &corpus.completion[..50];
    let max_len = model.config.max_len;
    let mut g = c.benchmark_group("greedy_completion");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("sequential", items.len()), |b| {
        b.iter(|| seq_map(items, |e| model.greedy_decode(&e.context, &e.source, max_len).unwrap()))
    });
    g.bench_function(BenchmarkId::new("parallel", items.len()), |b| {
        b.iter(|| par_map(items, |e| model.greedy_decode(&e.context, &e.source, max_len).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, da_forward, srl_parse, greedy_completion);
criterion_main!(benches);
