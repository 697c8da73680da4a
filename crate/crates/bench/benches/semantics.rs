use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use glc_core::deno::{denote_comp, Env};
use glc_core::harness::{adequacy_check, gen_program, AdequacyConfig, GenConfig};
use glc_core::monad::trace::observe_stream;
use glc_core::oper::{eval, EvalConfig};
use glc_core::syntax::{parse_program, pretty_program, Program};
use glc_core::typing::check_program;

fn countdown(n: u64) -> Program {
    let src = format!(
        "handleit e:N = {n} in do z <- pred(e); case z of inl _ => ret * | inr m => put(m) & raise_e m"
    );
    parse_program(&src).unwrap()
}

fn corpus(count: u64, depth: usize) -> Vec<Program> {
    (0..count)
        .map(|seed| {
            gen_program(&GenConfig {
                seed,
                max_depth: depth,
                ..GenConfig::default()
            })
            .program
        })
        .collect()
}

fn bench_countdown(c: &mut Criterion) {
    let mut group = c.benchmark_group("countdown");
    for n in [10u64, 100, 1000] {
        let p = countdown(n);
        let cfg = EvalConfig {
            max_events: n as usize + 1,
            ..EvalConfig::default()
        };
        group.throughput(Throughput::Elements(n));
        group.bench_with_input(BenchmarkId::new("operational", n), &p, |b, p| {
            b.iter(|| eval(black_box(&p.main), &cfg))
        });
        group.bench_with_input(BenchmarkId::new("denotational", n), &p, |b, p| {
            b.iter(|| {
                observe_stream(
                    denote_comp(black_box(&p.main), Env::new()),
                    n as usize + 1,
                    100_000,
                )
                .events
                .len()
            })
        });
    }
    group.finish();
}

fn bench_frontend(c: &mut Criterion) {
    let programs = corpus(100, 8);
    let texts: Vec<String> = programs.iter().map(pretty_program).collect();
    let mut group = c.benchmark_group("frontend");
    group.throughput(Throughput::Elements(programs.len() as u64));
    group.bench_function("parse", |b| {
        b.iter(|| {
            texts
                .iter()
                .filter(|t| parse_program(black_box(t)).is_ok())
                .count()
        })
    });
    group.bench_function("check", |b| {
        b.iter(|| {
            programs
                .iter()
                .filter(|p| check_program(black_box(p)).is_ok())
                .count()
        })
    });
    group.bench_function("generate", |b| b.iter(|| corpus(100, 8).len()));
    group.finish();
}

fn bench_adequacy(c: &mut Criterion) {
    let typed: Vec<_> = (0..100)
        .map(|seed| {
            gen_program(&GenConfig {
                seed,
                ..GenConfig::default()
            })
        })
        .collect();
    let cfg = AdequacyConfig::default();
    let mut group = c.benchmark_group("adequacy");
    group.throughput(Throughput::Elements(typed.len() as u64));
    group.bench_function("check-100", |b| {
        b.iter(|| {
            typed
                .iter()
                .filter(|tp| adequacy_check(tp, &cfg).agrees())
                .count()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_countdown, bench_frontend, bench_adequacy);
criterion_main!(benches);
