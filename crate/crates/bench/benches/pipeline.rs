use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use faultline_bench::{corpus_registries, registry};
use faultline_core::absint::{analyze, AnalysisOptions};
use faultline_core::corpus;
use faultline_core::depgraph::build_pdg;
use faultline_core::frontend::build_all;
use faultline_core::instrument::FaultConfig;
use faultline_core::pipeline::{run_selection, PipelineConfig};
use faultline_core::select::count_occurrences;
use faultline_core::symex::{explore, ExploreOptions};

fn analysis(c: &mut Criterion) {
    let mut g = c.benchmark_group("analysis");
    for (name, r) in corpus_registries() {
        let cfgs = build_all(&r.program);
        let all = FaultConfig::all_symbolic(&r);
        g.bench_with_input(BenchmarkId::new("intervals", name), &r, |b, r| {
            b.iter(|| analyze(&r.program, &cfgs, &all, &AnalysisOptions::default()))
        });
        let a = analyze(&r.program, &cfgs, &all, &AnalysisOptions::default());
        g.bench_with_input(BenchmarkId::new("pdg", name), &r, |b, r| b.iter(|| build_pdg(r, &cfgs, &a)));
    }
    g.finish();
}

fn selection(c: &mut Criterion) {
    let mut g = c.benchmark_group("selection");
    let sound = PipelineConfig::sound(1);
    for (name, r) in corpus_registries() {
        let cfgs = build_all(&r.program);
        g.bench_with_input(BenchmarkId::new("sound", name), &r, |b, r| b.iter(|| run_selection(r, &cfgs, &sound).unwrap()));
    }
    let pm = corpus::PRINT_MESSAGE;
    let r = registry(&pm);
    g.bench_function("occurrences/print_message", |b| b.iter(|| count_occurrences(&r, &pm.harness_inputs()).unwrap()));
    g.finish();
}

fn exploration(c: &mut Criterion) {
    let mut g = c.benchmark_group("explore");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    for (name, r) in corpus_registries() {
        let all = FaultConfig::all_symbolic(&r);
        for n in [1, 2] {
            g.bench_with_input(BenchmarkId::new(format!("all_sites_{n}f"), name), &r, |b, r| {
                b.iter(|| explore(r, &all, &ExploreOptions::faults(n)).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, analysis, selection, exploration);
criterion_main!(benches);
