//! Instance-independent kernel for strong guarded monads over finite
//! carriers, with a law checker for guarded Elgot iteration.

mod laws;
pub mod powerset;
pub mod trace;

use std::collections::BTreeMap;
use std::fmt;

use rand::RngCore;

pub use laws::{check_laws, Law, LawConfig, LawFailure, LawReport, LawResult};

/// An element of a finite carrier built from atoms, injections and pairs.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Elem {
    Atom(u32),
    Inl(Box<Elem>),
    Inr(Box<Elem>),
    Pair(Box<Elem>, Box<Elem>),
}

impl Elem {
    pub fn inl(e: Elem) -> Elem {
        Elem::Inl(Box::new(e))
    }

    pub fn inr(e: Elem) -> Elem {
        Elem::Inr(Box::new(e))
    }

    pub fn pair(a: Elem, b: Elem) -> Elem {
        Elem::Pair(Box::new(a), Box::new(b))
    }

    pub fn is_inr(&self) -> bool {
        matches!(self, Elem::Inr(_))
    }

    pub fn fst(&self) -> &Elem {
        match self {
            Elem::Pair(a, _) => a,
            _ => panic!("fst of non-pair {self}"),
        }
    }

    pub fn snd(&self) -> &Elem {
        match self {
            Elem::Pair(_, b) => b,
            _ => panic!("snd of non-pair {self}"),
        }
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arg = |e: &Elem| match e {
            Elem::Inl(_) | Elem::Inr(_) => format!("({e})"),
            _ => e.to_string(),
        };
        match self {
            Elem::Atom(n) => write!(f, "{n}"),
            Elem::Inl(e) => write!(f, "inl {}", arg(e)),
            Elem::Inr(e) => write!(f, "inr {}", arg(e)),
            Elem::Pair(a, b) => write!(f, "({a}, {b})"),
        }
    }
}

/// Shape of a finite carrier.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Obj {
    Fin(u32),
    Sum(Box<Obj>, Box<Obj>),
    Prod(Box<Obj>, Box<Obj>),
}

impl Obj {
    pub fn sum(a: Obj, b: Obj) -> Obj {
        Obj::Sum(Box::new(a), Box::new(b))
    }

    pub fn prod(a: Obj, b: Obj) -> Obj {
        Obj::Prod(Box::new(a), Box::new(b))
    }

    /// All elements in a fixed order.
    pub fn elements(&self) -> Vec<Elem> {
        match self {
            Obj::Fin(n) => (0..*n).map(Elem::Atom).collect(),
            Obj::Sum(a, b) => {
                let mut out: Vec<Elem> = a.elements().into_iter().map(Elem::inl).collect();
                out.extend(b.elements().into_iter().map(Elem::inr));
                out
            }
            Obj::Prod(a, b) => {
                let bs = b.elements();
                a.elements()
                    .into_iter()
                    .flat_map(|x| bs.iter().map(move |y| Elem::pair(x.clone(), y.clone())))
                    .collect()
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Obj::Fin(n) => *n as usize,
            Obj::Sum(a, b) => a.size() + b.size(),
            Obj::Prod(a, b) => a.size() * b.size(),
        }
    }

    pub fn contains(&self, e: &Elem) -> bool {
        match (self, e) {
            (Obj::Fin(n), Elem::Atom(k)) => k < n,
            (Obj::Sum(a, _), Elem::Inl(x)) => a.contains(x),
            (Obj::Sum(_, b), Elem::Inr(x)) => b.contains(x),
            (Obj::Prod(a, b), Elem::Pair(x, y)) => a.contains(x) && b.contains(y),
            _ => false,
        }
    }
}

impl fmt::Display for Obj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Obj::Fin(n) => write!(f, "{n}"),
            Obj::Sum(a, b) => write!(f, "({a} + {b})"),
            Obj::Prod(a, b) => write!(f, "({a} x {b})"),
        }
    }
}

/// A union of coproduct summands, each named by a path over {1, 2}:
/// `[2]` is the right injection, `[1, 2]` is `inl . inr`, `[]` is everything.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Summand {
    paths: Vec<Vec<u8>>,
}

impl Summand {
    pub fn new(paths: Vec<Vec<u8>>) -> Self {
        assert!(
            paths.iter().flatten().all(|s| *s == 1 || *s == 2),
            "paths range over 1 and 2"
        );
        for (i, p) in paths.iter().enumerate() {
            for q in &paths[i + 1..] {
                assert!(
                    !p.starts_with(q) && !q.starts_with(p),
                    "summand paths must be incomparable"
                );
            }
        }
        Summand { paths }
    }

    /// The right injection, the usual loop summand.
    pub fn inr() -> Self {
        Summand::new(vec![vec![2]])
    }

    pub fn contains(&self, e: &Elem) -> bool {
        self.paths.iter().any(|p| {
            let mut cur = e;
            for step in p {
                cur = match (step, cur) {
                    (1, Elem::Inl(x)) | (2, Elem::Inr(x)) => x,
                    _ => return false,
                };
            }
            true
        })
    }
}

impl fmt::Display for Summand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .paths
            .iter()
            .map(|p| p.iter().map(|s| s.to_string()).collect::<String>())
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// A Kleisli morphism on a finite domain, stored row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct Table<T> {
    pub dom: Obj,
    pub rows: BTreeMap<Elem, T>,
}

impl<T> Table<T> {
    pub fn from_fn(dom: &Obj, mut f: impl FnMut(&Elem) -> T) -> Self {
        let rows = dom
            .elements()
            .into_iter()
            .map(|x| (x.clone(), f(&x)))
            .collect();
        Table {
            dom: dom.clone(),
            rows,
        }
    }

    pub fn get(&self, x: &Elem) -> &T {
        self.rows
            .get(x)
            .unwrap_or_else(|| panic!("{x} is outside the table's domain {}", self.dom))
    }

    pub fn render(&self, show: impl Fn(&T) -> String) -> String {
        self.rows
            .iter()
            .map(|(x, t)| format!("{x} -> {}", show(t)))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum IterError {
    #[error("morphism is not guarded at {0}")]
    NotGuarded(String),
    #[error("iteration produced an empty result at {0}")]
    EmptyResult(String),
}

/// A strong monad on finite carriers with a notion of guardedness and a
/// guarded iteration operator.
pub trait GuardedMonad: Sync {
    type T: Clone + PartialEq + fmt::Debug + Send + Sync;

    fn name(&self) -> &'static str;

    fn unit(&self, x: Elem) -> Self::T;

    /// Kleisli lifting `f*` applied to `t`.
    fn star(&self, f: &dyn Fn(&Elem) -> Self::T, t: &Self::T) -> Self::T;

    /// Whether `t` is guarded for the summand described by `in_guarded`.
    fn guarded_at(&self, t: &Self::T, in_guarded: &dyn Fn(&Elem) -> bool) -> bool;

    /// `f^†` for `f : X -> T(Y + X)`, defined when `f` is guarded in the right injection.
    fn iterate(&self, f: &Table<Self::T>) -> Result<Table<Self::T>, IterError>;

    /// A random element of `T(cod)`, guarded for `in_guarded` when given.
    fn random_value(
        &self,
        rng: &mut dyn RngCore,
        cod: &Obj,
        in_guarded: Option<&dyn Fn(&Elem) -> bool>,
    ) -> Self::T;

    /// Every element of `T(cod)`, for instances that are finite.
    fn enumerate_values(&self, _cod: &Obj) -> Option<Vec<Self::T>> {
        None
    }

    fn show(&self, t: &Self::T) -> String;

    fn map(&self, h: &dyn Fn(&Elem) -> Elem, t: &Self::T) -> Self::T {
        self.star(&|x| self.unit(h(x)), t)
    }

    /// Strength `W x TX -> T(W x X)`.
    fn strength(&self, w: &Elem, t: &Self::T) -> Self::T {
        self.map(&|x| Elem::pair(w.clone(), x.clone()), t)
    }

    /// `delta = T(dist) . strength : W x T(Y + Z) -> T(W x Y + W x Z)`.
    fn delta(&self, w: &Elem, t: &Self::T) -> Self::T {
        self.map(&dist, &self.strength(w, t))
    }

    fn guarded(&self, f: &Table<Self::T>, in_guarded: &dyn Fn(&Elem) -> bool) -> bool {
        f.rows.values().all(|t| self.guarded_at(t, in_guarded))
    }

    /// Kleisli composite `g* . f`.
    fn compose(&self, g: &Table<Self::T>, f: &Table<Self::T>) -> Table<Self::T> {
        Table::from_fn(&f.dom, |x| self.star(&|y| g.get(y).clone(), f.get(x)))
    }

    /// Strong iteration for `f : W x X -> T(Y + X)`: the loop threads the
    /// `W` component unchanged, `f^‡ = (T(snd + id) . delta . <fst, f>)^†`.
    fn iterate_strong(&self, f: &Table<Self::T>) -> Result<Table<Self::T>, IterError> {
        let step = Table::from_fn(&f.dom, |wx| {
            let w = wx.fst();
            let tagged = self.delta(w, f.get(wx));
            self.map(
                &|e| match e {
                    Elem::Inl(p) => Elem::inl(p.snd().clone()),
                    other => other.clone(),
                },
                &tagged,
            )
        });
        self.iterate(&step)
    }
}

/// `W x (Y + Z) -> W x Y + W x Z`.
pub fn dist(e: &Elem) -> Elem {
    let Elem::Pair(w, s) = e else {
        panic!("dist of non-pair {e}")
    };
    match &**s {
        Elem::Inl(y) => Elem::inl(Elem::pair((**w).clone(), (**y).clone())),
        Elem::Inr(z) => Elem::inr(Elem::pair((**w).clone(), (**z).clone())),
        _ => panic!("dist of non-sum {e}"),
    }
}
