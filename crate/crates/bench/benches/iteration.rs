use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use glc_core::monad::powerset::{p_iterate, Powerset};
use glc_core::monad::trace::{lazy_iterate, observe_stream, trace_iterate, TraceMonad};
use glc_core::monad::{Elem, GuardedMonad, Obj, Table};

fn bench_powerset(c: &mut Criterion) {
    let mut group = c.benchmark_group("powerset-iterate");
    for n in [3u32, 8, 16] {
        let mut rng = ChaCha8Rng::seed_from_u64(u64::from(n));
        let x = Obj::Fin(n);
        let cod = Obj::sum(Obj::Fin(2), x.clone());
        let f = Table::from_fn(&x, |_| Powerset.random_value(&mut rng, &cod, None));
        group.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| p_iterate(black_box(f)))
        });
    }
    group.finish();
}

fn bench_trace(c: &mut Criterion) {
    let mut group = c.benchmark_group("trace-iterate");
    for n in [3u32, 8, 16] {
        let mut rng = ChaCha8Rng::seed_from_u64(u64::from(n));
        let x = Obj::Fin(n);
        let cod = Obj::sum(Obj::Fin(2), x.clone());
        let f = Table::from_fn(&x, |_| {
            TraceMonad.random_value(&mut rng, &cod, Some(&Elem::is_inr))
        });
        group.bench_with_input(BenchmarkId::new("exact", n), &f, |b, f| {
            b.iter(|| trace_iterate(black_box(f)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("lazy-64", n), &f, |b, f| {
            b.iter(|| {
                x.elements()
                    .into_iter()
                    .map(|e| observe_stream(lazy_iterate(f, e), 64, 1000).events.len())
                    .sum::<usize>()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_powerset, bench_trace);
criterion_main!(benches);
