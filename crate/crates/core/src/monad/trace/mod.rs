//! The trace monad `TX = (X x N*) ∪ N^ω`: a computation either finishes with
//! a value after finitely many output events or emits events forever.
//! `f : X -> T(Y + Z)` is guarded in `Z` when every `f(x)` is infinite,
//! finishes outside `Z`, or emits at least one event first.
//!
//! Lazy streams (`stream`) drive the interpreters; eventually periodic traces
//! (`rational`) give an exact instance for the law checker.

pub mod rational;
pub mod stream;

use std::collections::HashMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use rational::{Rational, Tail};
pub use stream::{
    observe_stream, prepend, t_guarded, t_iterate, t_star, t_unit, Ending, EventStream, Observed,
    Pull, Step, StreamFault, Sum, Verdict,
};

use super::{Elem, GuardedMonad, IterError, LawConfig, LawFailure, LawResult, Obj, Table};

pub type TraceTable = Table<Rational<Elem>>;

/// Exact iteration on eventually periodic traces. Each chain of rounds is
/// followed until it exits, enters an infinite round, or revisits an input;
/// a revisit closes a cycle of the events emitted since.
pub fn trace_iterate(f: &TraceTable) -> Result<TraceTable, IterError> {
    let mut rows = std::collections::BTreeMap::new();
    for x in f.dom.elements() {
        rows.insert(x.clone(), iterate_from(f, x)?);
    }
    Ok(Table {
        dom: f.dom.clone(),
        rows,
    })
}

fn iterate_from(f: &TraceTable, start: Elem) -> Result<Rational<Elem>, IterError> {
    let mut events: Vec<u64> = Vec::new();
    let mut seen: HashMap<Elem, usize> = HashMap::new();
    let mut cur = start;
    loop {
        if let Some(&at) = seen.get(&cur) {
            let cycle = events.split_off(at);
            return Ok(Rational::cycle(events, cycle));
        }
        seen.insert(cur.clone(), events.len());
        let round = f.get(&cur);
        events.extend_from_slice(round.prefix());
        match round.tail() {
            Tail::Cycle(c) => return Ok(Rational::cycle(events, c.clone())),
            Tail::Done(Elem::Inl(y)) => return Ok(Rational::finished(events, (**y).clone())),
            Tail::Done(Elem::Inr(next)) => {
                if round.prefix().is_empty() {
                    return Err(IterError::NotGuarded(cur.to_string()));
                }
                cur = (**next).clone();
            }
            Tail::Done(other) => panic!("{other} is not in a sum carrier"),
        }
    }
}

/// The trace monad over eventually periodic traces.
#[derive(Clone, Copy, Debug, Default)]
pub struct TraceMonad;

/// Largest event value drawn by `random_value`.
const MAX_EVENT: u64 = 4;

impl GuardedMonad for TraceMonad {
    type T = Rational<Elem>;

    fn name(&self) -> &'static str {
        "trace"
    }

    fn unit(&self, x: Elem) -> Rational<Elem> {
        Rational::unit(x)
    }

    fn star(&self, f: &dyn Fn(&Elem) -> Rational<Elem>, t: &Rational<Elem>) -> Rational<Elem> {
        t.star(f)
    }

    fn guarded_at(&self, t: &Rational<Elem>, in_guarded: &dyn Fn(&Elem) -> bool) -> bool {
        match t.tail() {
            Tail::Cycle(_) => true,
            Tail::Done(v) => !t.prefix().is_empty() || !in_guarded(v),
        }
    }

    fn iterate(&self, f: &TraceTable) -> Result<TraceTable, IterError> {
        trace_iterate(f)
    }

    fn random_value(
        &self,
        rng: &mut dyn RngCore,
        cod: &Obj,
        in_guarded: Option<&dyn Fn(&Elem) -> bool>,
    ) -> Rational<Elem> {
        let events = |rng: &mut dyn RngCore, n: usize| {
            (0..n)
                .map(|_| rng.gen_range(0..=MAX_EVENT))
                .collect::<Vec<_>>()
        };
        let len = rng.gen_range(0..=3);
        let mut prefix = events(rng, len);
        if rng.gen_bool(0.2) {
            let len = rng.gen_range(1..=3);
            return Rational::cycle(prefix, events(rng, len));
        }
        let elems = cod.elements();
        let v = elems[rng.gen_range(0..elems.len())].clone();
        if prefix.is_empty() && in_guarded.is_some_and(|g| g(&v)) {
            prefix.push(rng.gen_range(0..=MAX_EVENT));
        }
        Rational::finished(prefix, v)
    }

    fn show(&self, t: &Rational<Elem>) -> String {
        t.to_string()
    }
}

/// Pulls the lazy iteration of the stream version of `f` from `x`.
pub fn lazy_iterate(f: &TraceTable, x: Elem) -> EventStream<'_, Elem> {
    t_iterate(move |x: Elem| f.get(&x).to_stream().map(split), x)
}

fn split(e: Elem) -> Sum<Elem, Elem> {
    match e {
        Elem::Inl(y) => Sum::Inl(*y),
        Elem::Inr(x) => Sum::Inr(*x),
        other => panic!("{other} is not in a sum carrier"),
    }
}

const LAZY_SEED_MIX: u64 = 0x5eed_1a2e;

/// Consecutive silent pulls tolerated when observing lazy iteration.
const MAX_SILENT: usize = 8;

fn observe(s: EventStream<'_, Elem>, fuel: usize) -> Observed<Elem> {
    let mut o = observe_stream(s, fuel, MAX_SILENT);
    o.pulls = 0;
    o
}

fn show_observed(o: &Observed<Elem>) -> String {
    let events: Vec<String> = o.events.iter().map(|n| n.to_string()).collect();
    let end = match &o.ending {
        Ending::Done(v) => format!("done {v}"),
        Ending::Pending => "pending".to_string(),
        Ending::Silent => "silent".to_string(),
        Ending::Fault(e) => e.to_string(),
    };
    format!("<{}> {end}", events.join(","))
}

/// Cross-checks the lazy stream iteration against the exact one, and checks
/// the fixpoint equation on streams, on random guarded tables. Streams are
/// compared up to `cfg.fuel` events.
pub fn check_lazy_agreement(cfg: &LawConfig) -> LawResult {
    let m = TraceMonad;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ LAZY_SEED_MIX);
    let mut res = LawResult {
        law: "lazy-fixpoint".to_string(),
        samples: 0,
        failed: 0,
        failures: vec![],
    };
    for _ in 0..cfg.samples {
        let x = Obj::Fin(rng.gen_range(1..=cfg.max_carrier));
        let y = Obj::Fin(rng.gen_range(1..=cfg.max_carrier));
        let cod = Obj::sum(y, x.clone());
        let f = Table::from_fn(&x, |_| m.random_value(&mut rng, &cod, Some(&Elem::is_inr)));
        res.samples += 1;
        if let Err(e) = lazy_sample(&f, cfg.fuel) {
            res.failed += 1;
            if res.failures.len() < 5 {
                res.failures.push(e);
            }
        }
    }
    res
}

fn lazy_sample(f: &TraceTable, fuel: usize) -> Result<(), LawFailure> {
    let exact = trace_iterate(f).map_err(|e| LawFailure {
        f: f.render(|t| t.to_string()),
        lhs: e.to_string(),
        rhs: "a result".to_string(),
    })?;
    for x in f.dom.elements() {
        let lazy = observe(lazy_iterate(f, x.clone()), fuel);
        let want = observe(exact.get(&x).to_stream(), fuel);
        if lazy != want {
            return Err(LawFailure {
                f: format!("{}\nat {x}: lazy vs exact", f.render(|t| t.to_string())),
                lhs: show_observed(&lazy),
                rhs: show_observed(&want),
            });
        }
        let unrolled = t_star(f.get(&x).to_stream(), move |e: Elem| match e {
            Elem::Inl(y) => t_unit(*y),
            Elem::Inr(x2) => lazy_iterate(f, *x2),
            other => panic!("{other} is not in a sum carrier"),
        });
        let unrolled = observe(unrolled, fuel);
        if unrolled != lazy {
            return Err(LawFailure {
                f: format!(
                    "{}\nat {x}: f^† vs [eta, f^†]* . f",
                    f.render(|t| t.to_string())
                ),
                lhs: show_observed(&lazy),
                rhs: show_observed(&unrolled),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monad::{check_laws, Law};

    fn a(n: u32) -> Elem {
        Elem::Atom(n)
    }

    fn table(rows: Vec<Rational<Elem>>) -> TraceTable {
        let dom = Obj::Fin(rows.len() as u32);
        Table {
            dom,
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, r)| (a(i as u32), r))
                .collect(),
        }
    }

    #[test]
    fn countdown_style_chain() {
        // 2 -> emit 1, go to 1; 1 -> emit 0, go to 0; 0 -> exit
        let f = table(vec![
            Rational::unit(Elem::inl(a(0))),
            Rational::finished(vec![0], Elem::inr(a(0))),
            Rational::finished(vec![1], Elem::inr(a(1))),
        ]);
        let d = trace_iterate(&f).unwrap();
        assert_eq!(d.get(&a(2)), &Rational::finished(vec![1, 0], a(0)));
    }

    #[test]
    fn revisit_closes_a_cycle() {
        let f = table(vec![
            Rational::finished(vec![3], Elem::inr(a(1))),
            Rational::finished(vec![4], Elem::inr(a(0))),
        ]);
        let d = trace_iterate(&f).unwrap();
        assert_eq!(d.get(&a(0)), &Rational::cycle(vec![], vec![3, 4]));
        assert_eq!(d.get(&a(1)), &Rational::cycle(vec![], vec![4, 3]));
    }

    #[test]
    fn silent_reentry_is_rejected() {
        let f = table(vec![Rational::unit(Elem::inr(a(0)))]);
        assert!(matches!(trace_iterate(&f), Err(IterError::NotGuarded(_))));
        assert!(!TraceMonad.guarded(&f, &Elem::is_inr));
    }

    #[test]
    fn guardedness_of_values() {
        let m = TraceMonad;
        assert!(m.guarded_at(&Rational::cycle(vec![], vec![1]), &|_| true));
        assert!(m.guarded_at(&Rational::unit(Elem::inl(a(0))), &Elem::is_inr));
        assert!(!m.guarded_at(&Rational::unit(Elem::inr(a(0))), &Elem::is_inr));
        assert!(m.guarded_at(&Rational::finished(vec![0], Elem::inr(a(0))), &Elem::is_inr));
    }

    #[test]
    fn laws_hold_on_samples() {
        let cfg = LawConfig {
            samples: 200,
            ..LawConfig::default()
        };
        let report = check_laws(&TraceMonad, &cfg, &Law::ALL);
        for r in &report.results {
            assert!(r.passed(), "{}: {:?}", r.law, r.failures.first());
        }
    }

    #[test]
    fn lazy_and_exact_agree() {
        let r = check_lazy_agreement(&LawConfig {
            samples: 300,
            ..LawConfig::default()
        });
        assert!(r.passed(), "{:?}", r.failures.first());
    }
}
