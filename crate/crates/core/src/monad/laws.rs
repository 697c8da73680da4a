//! Property checks of the monad laws, the guardedness axioms and the guarded
//! Elgot laws, by exhaustive enumeration on small carriers (finite instances
//! only) and by random sampling.
//!
//! A check draws every choice (carrier sizes, table rows) from a `Source`.
//! Random sources use a seeded RNG; exhaustive sources walk all choice
//! sequences like an odometer.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{Elem, GuardedMonad, Obj, Summand, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    LeftUnit,
    RightUnit,
    Associativity,
    GuardTrivial,
    GuardSum,
    GuardCompose,
    GuardStrength,
    Fixpoint,
    Naturality,
    Codiagonal,
    Uniformity,
    Strength,
    StrongIteration,
    StrongUnit,
}

impl Law {
    pub const ALL: [Law; 14] = [
        Law::LeftUnit,
        Law::RightUnit,
        Law::Associativity,
        Law::GuardTrivial,
        Law::GuardSum,
        Law::GuardCompose,
        Law::GuardStrength,
        Law::Fixpoint,
        Law::Naturality,
        Law::Codiagonal,
        Law::Uniformity,
        Law::Strength,
        Law::StrongIteration,
        Law::StrongUnit,
    ];

    /// The iteration laws; these also get the exhaustive sweep.
    pub const ITERATION: [Law; 7] = [
        Law::Fixpoint,
        Law::Naturality,
        Law::Codiagonal,
        Law::Uniformity,
        Law::Strength,
        Law::StrongIteration,
        Law::StrongUnit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Law::LeftUnit => "left-unit",
            Law::RightUnit => "right-unit",
            Law::Associativity => "associativity",
            Law::GuardTrivial => "guard-trivial",
            Law::GuardSum => "guard-sum",
            Law::GuardCompose => "guard-compose",
            Law::GuardStrength => "guard-strength",
            Law::Fixpoint => "fixpoint",
            Law::Naturality => "naturality",
            Law::Codiagonal => "codiagonal",
            Law::Uniformity => "uniformity",
            Law::Strength => "strength",
            Law::StrongIteration => "strong-iteration",
            Law::StrongUnit => "strong-unit",
        }
    }
}

#[derive(Clone, Debug)]
pub struct LawConfig {
    /// Random samples per law.
    pub samples: usize,
    pub seed: u64,
    /// Prefix length for stream comparisons that are not exact.
    pub fuel: usize,
    /// Largest carrier drawn in random samples.
    pub max_carrier: u32,
    /// Largest carrier in the exhaustive sweep; 0 disables it.
    pub exhaustive_max: u32,
    /// Largest context carrier `W` for the strength laws.
    pub max_w: u32,
}

impl Default for LawConfig {
    fn default() -> Self {
        LawConfig {
            samples: 1000,
            seed: 0,
            fuel: 64,
            max_carrier: 3,
            exhaustive_max: 2,
            max_w: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LawFailure {
    pub f: String,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LawResult {
    pub law: String,
    pub samples: usize,
    /// Total number of failing samples; `failures` keeps the first few.
    pub failed: usize,
    pub failures: Vec<LawFailure>,
}

impl LawResult {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LawReport {
    pub instance: String,
    pub results: Vec<LawResult>,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(LawResult::passed)
    }
}

const KEPT_FAILURES: usize = 5;

pub fn check_laws<M: GuardedMonad>(m: &M, cfg: &LawConfig, laws: &[Law]) -> LawReport {
    let results = laws
        .par_iter()
        .enumerate()
        .map(|(i, &law)| {
            let mut res = LawResult {
                law: law.name().to_string(),
                samples: 0,
                failed: 0,
                failures: vec![],
            };
            let mut record = |outcome: Result<(), LawFailure>| {
                res.samples += 1;
                if let Err(f) = outcome {
                    res.failed += 1;
                    if res.failures.len() < KEPT_FAILURES {
                        res.failures.push(f);
                    }
                }
            };
            if cfg.exhaustive_max > 0
                && Law::ITERATION.contains(&law)
                && m.enumerate_values(&Obj::Fin(1)).is_some()
            {
                let mut odo = Odometer::default();
                loop {
                    odo.pos = 0;
                    let mut src = Source {
                        kind: Kind::Exhaustive(&mut odo),
                        max: cfg.exhaustive_max,
                        max_w: cfg.max_w.min(cfg.exhaustive_max),
                    };
                    record(run(m, law, &mut src));
                    if !odo.advance() {
                        break;
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64 * 0x9e37_79b9));
            for _ in 0..cfg.samples {
                let mut src = Source {
                    kind: Kind::Random(&mut rng),
                    max: cfg.max_carrier,
                    max_w: cfg.max_w,
                };
                record(run(m, law, &mut src));
            }
            res
        })
        .collect();
    LawReport {
        instance: m.name().to_string(),
        results,
    }
}

/// Choice sequences enumerated in lexicographic order; arities are learned
/// as a run asks for choices.
#[derive(Default)]
struct Odometer {
    digits: Vec<usize>,
    arities: Vec<usize>,
    pos: usize,
}

impl Odometer {
    fn pick(&mut self, n: usize) -> usize {
        if self.pos == self.digits.len() {
            self.digits.push(0);
            self.arities.push(n);
        } else {
            self.arities[self.pos] = n;
        }
        let d = self.digits[self.pos];
        self.pos += 1;
        d
    }

    fn advance(&mut self) -> bool {
        self.digits.truncate(self.pos);
        self.arities.truncate(self.pos);
        while let Some(d) = self.digits.pop() {
            let n = self.arities.pop().expect("parallel stacks");
            if d + 1 < n {
                self.digits.push(d + 1);
                self.arities.push(n);
                return true;
            }
        }
        false
    }
}

enum Kind<'a> {
    Random(&'a mut ChaCha8Rng),
    Exhaustive(&'a mut Odometer),
}

struct Source<'a> {
    kind: Kind<'a>,
    max: u32,
    max_w: u32,
}

type Pred<'p> = &'p dyn Fn(&Elem) -> bool;

impl Source<'_> {
    fn pick(&mut self, n: usize) -> usize {
        assert!(n > 0, "no options to choose from");
        match &mut self.kind {
            Kind::Random(rng) => rng.gen_range(0..n),
            Kind::Exhaustive(odo) => odo.pick(n),
        }
    }

    fn carrier(&mut self) -> Obj {
        Obj::Fin(1 + self.pick(self.max as usize) as u32)
    }

    fn context(&mut self) -> Obj {
        Obj::Fin(1 + self.pick(self.max_w as usize) as u32)
    }

    fn table<M: GuardedMonad>(
        &mut self,
        m: &M,
        dom: &Obj,
        cod: &Obj,
        guard: Option<Pred>,
    ) -> Table<M::T> {
        match &mut self.kind {
            Kind::Random(rng) => Table::from_fn(dom, |_| m.random_value(&mut **rng, cod, guard)),
            Kind::Exhaustive(_) => {
                let values: Vec<M::T> = m
                    .enumerate_values(cod)
                    .expect("exhaustive mode needs a finite instance")
                    .into_iter()
                    .filter(|t| guard.is_none_or(|g| m.guarded_at(t, g)))
                    .collect();
                Table::from_fn(dom, |_| values[self.pick(values.len())].clone())
            }
        }
    }

    /// A plain function between carriers.
    fn function(&mut self, dom: &Obj, cod: &Obj) -> BTreeMap<Elem, Elem> {
        let targets = cod.elements();
        dom.elements()
            .into_iter()
            .map(|x| (x, targets[self.pick(targets.len())].clone()))
            .collect()
    }
}

fn is_inr(e: &Elem) -> bool {
    e.is_inr()
}

fn show_tables<M: GuardedMonad>(m: &M, named: &[(&str, &Table<M::T>)]) -> String {
    named
        .iter()
        .map(|(n, t)| format!("{n}:\n{}", t.render(|v| m.show(v))))
        .collect::<Vec<_>>()
        .join("\n")
}

fn compare<M: GuardedMonad>(
    m: &M,
    lhs: &Table<M::T>,
    rhs: &Table<M::T>,
    f: impl FnOnce() -> String,
) -> Result<(), LawFailure> {
    if lhs == rhs {
        Ok(())
    } else {
        Err(LawFailure {
            f: f(),
            lhs: lhs.render(|v| m.show(v)),
            rhs: rhs.render(|v| m.show(v)),
        })
    }
}

fn guard_failure(what: &str, f: String) -> LawFailure {
    LawFailure {
        f,
        lhs: format!("{what} is not guarded"),
        rhs: "guarded".to_string(),
    }
}

fn iterate<M: GuardedMonad>(
    m: &M,
    f: &Table<M::T>,
    describe: impl Fn() -> String,
) -> Result<Table<M::T>, LawFailure> {
    m.iterate(f).map_err(|e| LawFailure {
        f: describe(),
        lhs: e.to_string(),
        rhs: "a result".to_string(),
    })
}

fn run<M: GuardedMonad>(m: &M, law: Law, src: &mut Source) -> Result<(), LawFailure> {
    match law {
        Law::LeftUnit => {
            let (y, v) = (src.carrier(), src.carrier());
            let f = src.table(m, &y, &v, None);
            let lhs = Table::from_fn(&y, |e| m.star(&|a| f.get(a).clone(), &m.unit(e.clone())));
            compare(m, &lhs, &f, || show_tables(m, &[("f", &f)]))
        }
        Law::RightUnit => {
            let (x, y) = (src.carrier(), src.carrier());
            let f = src.table(m, &x, &y, None);
            let lhs = Table::from_fn(&x, |e| m.star(&|a| m.unit(a.clone()), f.get(e)));
            compare(m, &lhs, &f, || show_tables(m, &[("f", &f)]))
        }
        Law::Associativity => {
            let (x, y, v, z) = (src.carrier(), src.carrier(), src.carrier(), src.carrier());
            let f = src.table(m, &x, &y, None);
            let g = src.table(m, &y, &v, None);
            let h = src.table(m, &v, &z, None);
            let lhs = m.compose(&m.compose(&h, &g), &f);
            let rhs = m.compose(&h, &m.compose(&g, &f));
            compare(m, &lhs, &rhs, || {
                show_tables(m, &[("f", &f), ("g", &g), ("h", &h)])
            })
        }
        Law::GuardTrivial => {
            let (x, y) = (src.carrier(), src.carrier());
            let f = src.table(m, &x, &y, None);
            let lifted = Table::from_fn(&x, |e| m.map(&|a| Elem::inl(a.clone()), f.get(e)));
            if m.guarded(&lifted, &is_inr) {
                Ok(())
            } else {
                Err(guard_failure("T(inl) . f", show_tables(m, &[("f", &f)])))
            }
        }
        Law::GuardSum => {
            let (x, y, z) = (
                src.carrier(),
                src.carrier(),
                Obj::sum(src.carrier(), src.carrier()),
            );
            let f = src.table(m, &x, &z, Some(&is_inr));
            let g = src.table(m, &y, &z, Some(&is_inr));
            let copair = Table::from_fn(&Obj::sum(x, y), |e| match e {
                Elem::Inl(a) => f.get(a).clone(),
                Elem::Inr(b) => g.get(b).clone(),
                _ => unreachable!("sum carrier"),
            });
            if m.guarded(&copair, &is_inr) {
                Ok(())
            } else {
                Err(guard_failure(
                    "[f, g]",
                    show_tables(m, &[("f", &f), ("g", &g)]),
                ))
            }
        }
        Law::GuardCompose => {
            let (x, y, z) = (src.carrier(), src.carrier(), src.carrier());
            let v = Obj::sum(src.carrier(), src.carrier());
            let f = src.table(m, &x, &Obj::sum(y.clone(), z.clone()), Some(&is_inr));
            let g = src.table(m, &y, &v, Some(&is_inr));
            let h = src.table(m, &z, &v, None);
            let comp = Table::from_fn(&x, |e| {
                m.star(
                    &|a| match a {
                        Elem::Inl(b) => g.get(b).clone(),
                        Elem::Inr(c) => h.get(c).clone(),
                        _ => unreachable!("sum carrier"),
                    },
                    f.get(e),
                )
            });
            if m.guarded(&comp, &is_inr) {
                Ok(())
            } else {
                Err(guard_failure(
                    "[g, h]* . f",
                    show_tables(m, &[("f", &f), ("g", &g), ("h", &h)]),
                ))
            }
        }
        Law::GuardStrength => {
            let (w, x) = (src.context(), src.carrier());
            let y = Obj::sum(src.carrier(), src.carrier());
            let f = src.table(m, &x, &y, Some(&is_inr));
            let st = Table::from_fn(&Obj::prod(w, x), |wx| m.strength(wx.fst(), f.get(wx.snd())));
            let in_sigma = |e: &Elem| matches!(e, Elem::Pair(_, b) if b.is_inr());
            if m.guarded(&st, &in_sigma) {
                Ok(())
            } else {
                Err(guard_failure(
                    "strength . (id x f)",
                    show_tables(m, &[("f", &f)]),
                ))
            }
        }
        Law::Fixpoint => {
            let (x, y) = (src.carrier(), src.carrier());
            let f = src.table(m, &x, &Obj::sum(y, x.clone()), Some(&is_inr));
            let desc = || show_tables(m, &[("f", &f)]);
            let dag = iterate(m, &f, desc)?;
            let rhs = Table::from_fn(&x, |e| m.star(&|a| unroll(m, &dag, a), f.get(e)));
            compare(m, &dag, &rhs, desc)
        }
        Law::Naturality => {
            let (x, y, v) = (src.carrier(), src.carrier(), src.carrier());
            let f = src.table(m, &x, &Obj::sum(y.clone(), x.clone()), Some(&is_inr));
            let g = src.table(m, &y, &v, None);
            let desc = || show_tables(m, &[("f", &f), ("g", &g)]);
            let lhs = m.compose(&g, &iterate(m, &f, desc)?);
            let h = Table::from_fn(&x, |e| {
                m.star(
                    &|a| match a {
                        Elem::Inl(b) => m.map(&|c| Elem::inl(c.clone()), g.get(b)),
                        other => m.unit(other.clone()),
                    },
                    f.get(e),
                )
            });
            let rhs = iterate(m, &h, desc)?;
            compare(m, &lhs, &rhs, desc)
        }
        Law::Codiagonal => {
            let (x, y) = (src.carrier(), src.carrier());
            let cod = Obj::sum(Obj::sum(y, x.clone()), x.clone());
            let sigma = Summand::new(vec![vec![1, 2], vec![2]]);
            let f = src.table(m, &x, &cod, Some(&|e| sigma.contains(e)));
            let desc = || show_tables(m, &[("f", &f)]);
            let merged = Table::from_fn(&x, |e| {
                m.map(
                    &|a| match a {
                        Elem::Inl(inner) => (**inner).clone(),
                        other => other.clone(),
                    },
                    f.get(e),
                )
            });
            let lhs = iterate(m, &merged, desc)?;
            let rhs = iterate(m, &iterate(m, &f, desc)?, desc)?;
            compare(m, &lhs, &rhs, desc)
        }
        Law::Uniformity => {
            let (x, y, z) = (src.carrier(), src.carrier(), src.carrier());
            let h = src.function(&z, &x);
            // g is chosen on one representative per fibre of h and copied to the rest.
            let mut reps: BTreeMap<Elem, Elem> = BTreeMap::new();
            for (zz, hx) in &h {
                reps.entry(hx.clone()).or_insert_with(|| zz.clone());
            }
            let g0 = src.table(m, &z, &Obj::sum(y.clone(), z.clone()), Some(&is_inr));
            let g = Table::from_fn(&z, |zz| g0.get(&reps[&h[zz]]).clone());
            let fill = src.table(m, &x, &Obj::sum(y, x.clone()), Some(&is_inr));
            let f = Table::from_fn(&x, |xx| match reps.get(xx) {
                Some(rep) => m.map(
                    &|a| match a {
                        Elem::Inr(zz) => Elem::inr(h[&**zz].clone()),
                        other => other.clone(),
                    },
                    g.get(rep),
                ),
                None => fill.get(xx).clone(),
            });
            let hdesc = h
                .iter()
                .map(|(a, b)| format!("{a} -> {b}"))
                .collect::<Vec<_>>()
                .join("\n");
            let desc = || format!("{}\nh:\n{hdesc}", show_tables(m, &[("f", &f), ("g", &g)]));
            let fdag = iterate(m, &f, desc)?;
            let lhs = Table::from_fn(&z, |zz| fdag.get(&h[zz]).clone());
            let rhs = iterate(m, &g, desc)?;
            compare(m, &lhs, &rhs, desc)
        }
        Law::Strength => {
            let (w, x, y) = (src.context(), src.carrier(), src.carrier());
            let f = src.table(m, &x, &Obj::sum(y, x.clone()), Some(&is_inr));
            let desc = || show_tables(m, &[("f", &f)]);
            let dag = iterate(m, &f, desc)?;
            let wx = Obj::prod(w, x);
            let lhs = Table::from_fn(&wx, |p| m.strength(p.fst(), dag.get(p.snd())));
            let lifted = Table::from_fn(&wx, |p| m.delta(p.fst(), f.get(p.snd())));
            let rhs = iterate(m, &lifted, desc)?;
            compare(m, &lhs, &rhs, desc)
        }
        Law::StrongIteration => {
            let (w, x, y) = (src.context(), src.carrier(), src.carrier());
            let wx = Obj::prod(w, x.clone());
            let f = src.table(m, &wx, &Obj::sum(y, x), Some(&is_inr));
            let desc = || show_tables(m, &[("f", &f)]);
            let ddag = m.iterate_strong(&f).map_err(|e| LawFailure {
                f: desc(),
                lhs: e.to_string(),
                rhs: "a result".into(),
            })?;
            let lhs = Table::from_fn(&wx, |p| m.strength(p.fst(), ddag.get(p)));
            // (delta . <fst, f>)^† iterates over W x X, re-pairing the loop state with w.
            let lifted = Table::from_fn(&wx, |p| m.delta(p.fst(), f.get(p)));
            let rhs = iterate(m, &lifted, desc)?;
            compare(m, &lhs, &rhs, desc)
        }
        Law::StrongUnit => {
            let (x, y) = (src.carrier(), src.carrier());
            let one = Obj::Fin(1);
            let wx = Obj::prod(one, x.clone());
            let f = src.table(m, &wx, &Obj::sum(y, x.clone()), Some(&is_inr));
            let desc = || show_tables(m, &[("f", &f)]);
            let ddag = m.iterate_strong(&f).map_err(|e| LawFailure {
                f: desc(),
                lhs: e.to_string(),
                rhs: "a result".into(),
            })?;
            let plain =
                Table::from_fn(&x, |e| f.get(&Elem::pair(Elem::Atom(0), e.clone())).clone());
            let rhs = iterate(m, &plain, desc)?;
            let lhs = Table::from_fn(&x, |e| {
                ddag.get(&Elem::pair(Elem::Atom(0), e.clone())).clone()
            });
            compare(m, &lhs, &rhs, desc)
        }
    }
}

/// `[eta, s]` on an element of `Y + X`.
fn unroll<M: GuardedMonad>(m: &M, s: &Table<M::T>, e: &Elem) -> M::T {
    match e {
        Elem::Inl(y) => m.unit((**y).clone()),
        Elem::Inr(x) => s.get(x).clone(),
        _ => unreachable!("sum carrier"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odometer_enumerates_mixed_radix() {
        let mut odo = Odometer::default();
        let mut seen = vec![];
        loop {
            odo.pos = 0;
            let a = odo.pick(2);
            let b = odo.pick(if a == 0 { 1 } else { 3 });
            seen.push((a, b));
            if !odo.advance() {
                break;
            }
        }
        assert_eq!(seen, vec![(0, 0), (1, 0), (1, 1), (1, 2)]);
    }
}
