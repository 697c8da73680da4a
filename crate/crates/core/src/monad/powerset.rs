//! Finite powerset `P` (every morphism guarded, least-fixpoint iteration) and
//! the non-empty powerset `P+`, where `f : X -> P+(Y + Z)` is guarded in the
//! right injection iff every `f(x)` meets the left summand.

use std::collections::BTreeSet;

use rand::{Rng, RngCore};

use super::{Elem, GuardedMonad, IterError, Obj, Table};

pub type PSet = BTreeSet<Elem>;
pub type KleisliTable = Table<PSet>;

/// Largest codomain whose subsets are enumerated.
const ENUMERATION_LIMIT: usize = 12;

/// Least fixpoint of `s |-> [eta, s]* . f`, by Kleene iteration from the
/// everywhere-empty table.
pub fn p_iterate(f: &KleisliTable) -> KleisliTable {
    let mut cur = Table::from_fn(&f.dom, |_| PSet::new());
    loop {
        let next = Table::from_fn(&f.dom, |x| {
            let mut out = PSet::new();
            for e in f.get(x) {
                match e {
                    Elem::Inl(y) => {
                        out.insert((**y).clone());
                    }
                    Elem::Inr(x2) => out.extend(cur.get(x2).iter().cloned()),
                    _ => panic!("{e} is not in a sum carrier"),
                }
            }
            out
        });
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Every row meets the left summand.
pub fn pplus_guarded(f: &KleisliTable) -> bool {
    f.rows
        .values()
        .all(|s| s.iter().any(|e| matches!(e, Elem::Inl(_))))
}

pub fn pplus_iterate(f: &KleisliTable) -> Result<KleisliTable, IterError> {
    if let Some((x, _)) = f
        .rows
        .iter()
        .find(|(_, s)| s.is_empty() || !s.iter().any(|e| matches!(e, Elem::Inl(_))))
    {
        return Err(IterError::NotGuarded(x.to_string()));
    }
    let out = p_iterate(f);
    if let Some((x, _)) = out.rows.iter().find(|(_, s)| s.is_empty()) {
        return Err(IterError::EmptyResult(x.to_string()));
    }
    Ok(out)
}

pub fn show_set(s: &PSet) -> String {
    let items: Vec<String> = s.iter().map(|e| e.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

fn subsets(cod: &Obj, nonempty: bool) -> Option<Vec<PSet>> {
    let elems = cod.elements();
    if elems.len() > ENUMERATION_LIMIT {
        return None;
    }
    let start = usize::from(nonempty);
    Some(
        (start..1usize << elems.len())
            .map(|mask| {
                elems
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect(),
    )
}

fn star(f: &dyn Fn(&Elem) -> PSet, t: &PSet) -> PSet {
    t.iter().flat_map(f).collect()
}

fn random_subset(rng: &mut dyn RngCore, cod: &Obj) -> PSet {
    cod.elements()
        .into_iter()
        .filter(|_| rng.gen_bool(0.5))
        .collect()
}

/// The full finite powerset monad.
#[derive(Clone, Copy, Debug, Default)]
pub struct Powerset;

impl GuardedMonad for Powerset {
    type T = PSet;

    fn name(&self) -> &'static str {
        "powerset"
    }

    fn unit(&self, x: Elem) -> PSet {
        PSet::from([x])
    }

    fn star(&self, f: &dyn Fn(&Elem) -> PSet, t: &PSet) -> PSet {
        star(f, t)
    }

    fn guarded_at(&self, _t: &PSet, _in_guarded: &dyn Fn(&Elem) -> bool) -> bool {
        true
    }

    fn iterate(&self, f: &KleisliTable) -> Result<KleisliTable, IterError> {
        Ok(p_iterate(f))
    }

    fn random_value(
        &self,
        rng: &mut dyn RngCore,
        cod: &Obj,
        _guard: Option<&dyn Fn(&Elem) -> bool>,
    ) -> PSet {
        random_subset(rng, cod)
    }

    fn enumerate_values(&self, cod: &Obj) -> Option<Vec<PSet>> {
        subsets(cod, false)
    }

    fn show(&self, t: &PSet) -> String {
        show_set(t)
    }
}

/// Non-empty subsets with proper guardedness.
#[derive(Clone, Copy, Debug, Default)]
pub struct NonEmptyPowerset;

impl GuardedMonad for NonEmptyPowerset {
    type T = PSet;

    fn name(&self) -> &'static str {
        "powerset-nonempty"
    }

    fn unit(&self, x: Elem) -> PSet {
        PSet::from([x])
    }

    fn star(&self, f: &dyn Fn(&Elem) -> PSet, t: &PSet) -> PSet {
        star(f, t)
    }

    fn guarded_at(&self, t: &PSet, in_guarded: &dyn Fn(&Elem) -> bool) -> bool {
        t.iter().any(|e| !in_guarded(e))
    }

    fn iterate(&self, f: &KleisliTable) -> Result<KleisliTable, IterError> {
        pplus_iterate(f)
    }

    fn random_value(
        &self,
        rng: &mut dyn RngCore,
        cod: &Obj,
        guard: Option<&dyn Fn(&Elem) -> bool>,
    ) -> PSet {
        let elems = cod.elements();
        let mut s = random_subset(rng, cod);
        let allowed: Vec<&Elem> = elems
            .iter()
            .filter(|e| guard.is_none_or(|g| !g(e)))
            .collect();
        assert!(!allowed.is_empty(), "no unguarded element in {cod}");
        if s.is_empty() || guard.is_some_and(|g| s.iter().all(g)) {
            s.insert(allowed[rng.gen_range(0..allowed.len())].clone());
        }
        s
    }

    fn enumerate_values(&self, cod: &Obj) -> Option<Vec<PSet>> {
        subsets(cod, true)
    }

    fn show(&self, t: &PSet) -> String {
        show_set(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: u32) -> Elem {
        Elem::Atom(n)
    }

    fn table(rows: Vec<(u32, Vec<Elem>)>) -> KleisliTable {
        let n = rows.len() as u32;
        Table {
            dom: Obj::Fin(n),
            rows: rows
                .into_iter()
                .map(|(x, s)| (a(x), s.into_iter().collect()))
                .collect(),
        }
    }

    #[test]
    fn pure_self_loop_iterates_to_empty() {
        let f = table(vec![(0, vec![Elem::inr(a(0))])]);
        assert!(p_iterate(&f).get(&a(0)).is_empty());
    }

    #[test]
    fn exit_alongside_loop() {
        let f = table(vec![(0, vec![Elem::inl(a(0)), Elem::inr(a(0))])]);
        assert_eq!(p_iterate(&f).get(&a(0)), &PSet::from([a(0)]));
    }

    #[test]
    fn two_step_chain() {
        // a = 0, b = 1; y = 5
        let f = table(vec![(0, vec![Elem::inr(a(1))]), (1, vec![Elem::inl(a(5))])]);
        assert_eq!(p_iterate(&f).get(&a(0)), &PSet::from([a(5)]));
    }

    #[test]
    fn nonempty_guardedness() {
        assert!(pplus_guarded(&table(vec![(0, vec![Elem::inl(a(0))])])));
        assert!(!pplus_guarded(&table(vec![(0, vec![Elem::inr(a(0))])])));
        assert!(pplus_guarded(&table(vec![(
            0,
            vec![Elem::inl(a(0)), Elem::inr(a(0))]
        )])));
    }

    #[test]
    fn nonempty_iteration() {
        let f = table(vec![(0, vec![Elem::inl(a(0)), Elem::inr(a(0))])]);
        assert_eq!(pplus_iterate(&f).unwrap().get(&a(0)), &PSet::from([a(0)]));
        let g = table(vec![(0, vec![Elem::inl(a(1)), Elem::inl(a(2))])]);
        assert_eq!(
            pplus_iterate(&g).unwrap().get(&a(0)),
            &PSet::from([a(1), a(2)])
        );
        // eta . inr on 1 has no solution and is refused up front
        let h = table(vec![(0, vec![Elem::inr(a(0))])]);
        assert!(matches!(pplus_iterate(&h), Err(IterError::NotGuarded(_))));
    }

    #[test]
    fn tables_print_rows() {
        let f = table(vec![(0, vec![Elem::inl(a(0)), Elem::inr(a(1))])]);
        assert_eq!(f.render(show_set), "0 -> {inl 0, inr 1}");
    }

    #[test]
    fn subsets_enumeration() {
        assert_eq!(subsets(&Obj::Fin(3), false).unwrap().len(), 8);
        assert_eq!(subsets(&Obj::Fin(3), true).unwrap().len(), 7);
    }
}

#[cfg(test)]
mod law_tests {
    use super::*;
    use crate::monad::{check_laws, Law, LawConfig};

    #[test]
    fn powerset_laws_small_sweep() {
        let cfg = LawConfig {
            samples: 100,
            exhaustive_max: 1,
            ..LawConfig::default()
        };
        for report in [
            check_laws(&Powerset, &cfg, &Law::ALL),
            check_laws(&NonEmptyPowerset, &cfg, &Law::ALL),
        ] {
            for r in &report.results {
                assert!(
                    r.passed(),
                    "{} {}: {:?}",
                    report.instance,
                    r.law,
                    r.failures.first()
                );
            }
        }
    }
}
