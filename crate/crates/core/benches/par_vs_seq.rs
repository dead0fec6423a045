use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hsg_core::cnf::CnfFormula;
use hsg_core::gnn::{build_samples, train_stage, Sample, TrainConfig};
use hsg_core::metrics::corpus_stats;
use hsg_core::par::ExecMode;
use hsg_core::splitter::{build_template, Stage, Template};
use hsg_core::synth::{planted_instance, PlantedParams};

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn templates(n: usize) -> Vec<Template> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = PlantedParams { num_communities: 4, vars_per_community: 8, clauses_per_community: 16, ..PlantedParams::default() };
    (0..n as u64)
        .map(|i| {
            let inst = planted_instance(&p, &mut rng);
            build_template(&inst.formula, &inst.communities, &inst.core, i).unwrap()
        })
        .collect()
}

fn training_epoch(c: &mut Criterion) {
    let samples = build_samples(&templates(10), ExecMode::Sequential).unwrap();
    let in_cmty: Vec<&Sample> = samples.iter().filter(|s| s.stage == Stage::InCmty).collect();
    let mut group = c.benchmark_group("train_one_epoch");
    group.sample_size(10);
    for (name, mode) in MODES {
        let cfg = TrainConfig { epochs: 1, mode, ..TrainConfig::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| black_box(train_stage(&in_cmty, Stage::InCmty, cfg).unwrap()))
        });
    }
    group.finish();
}

fn structure_metrics(c: &mut Criterion) {
    let formulas: Vec<CnfFormula> = templates(16).iter().map(|t| t.original.to_formula().unwrap()).collect();
    let mut group = c.benchmark_group("corpus_structure_stats");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| black_box(corpus_stats(&formulas, 0, mode)))
        });
    }
    group.finish();
}

criterion_group!(benches, training_epoch, structure_metrics);
criterion_main!(benches);
