use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rqa_bench::workload;
use rqa_core::corpus::Scenario;
use rqa_core::Mode;

const MODES: [Mode; 3] = [Mode::Forward, Mode::Magic, Mode::Hybrid];

fn run_modes(c: &mut Criterion, group: &str, scenario: Scenario) {
    let w = workload(scenario).expect("scenario loads");
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    for mode in MODES {
        g.bench_with_input(BenchmarkId::new(mode.as_str(), w.scenario.to_string()), &mode, |b, &mode| {
            b.iter(|| w.kb.answer(&w.query, mode).expect("answers"))
        });
    }
    g.finish();
}

fn chain(c: &mut Criterion) {
    run_modes(c, "chain", Scenario::Chain { n: 300 });
}

fn multichain(c: &mut Criterion) {
    run_modes(c, "multichain", Scenario::Multichain { k: 10, l: 100 });
}

fn tc_random(c: &mut Criterion) {
    let w = workload(Scenario::TcRandom {
        nodes: 200,
        edges: 800,
        seed: 0,
    })
    .expect("scenario loads");
    let mut g = c.benchmark_group("tc-random");
    g.sample_size(10);
    g.bench_function("forward", |b| b.iter(|| w.kb.answer(&w.query, Mode::Forward).expect("answers")));
    g.finish();
}

fn crimes(c: &mut Criterion) {
    run_modes(c, "crimes", Scenario::Crimes { scale: 20 });
}

criterion_group!(benches, chain, multichain, tc_random, crimes);
criterion_main!(benches);
