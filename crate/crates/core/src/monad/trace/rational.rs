//! Eventually periodic traces: a finite prefix followed by either a result
//! or a cycle repeated forever. Kept canonical, so `==` is trace equality.

use std::fmt;

use super::stream::EventStream;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tail<X> {
    Done(X),
    Cycle(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rational<X> {
    prefix: Vec<u64>,
    tail: Tail<X>,
}

impl<X> Rational<X> {
    pub fn finished(prefix: Vec<u64>, x: X) -> Self {
        Rational {
            prefix,
            tail: Tail::Done(x),
        }
    }

    pub fn unit(x: X) -> Self {
        Rational::finished(vec![], x)
    }

    /// `prefix` followed by `cycle` forever, in canonical form.
    pub fn cycle(mut prefix: Vec<u64>, mut cycle: Vec<u64>) -> Self {
        assert!(!cycle.is_empty(), "a cycle needs at least one event");
        let n = cycle.len();
        let period = (1..=n)
            .find(|p| n.is_multiple_of(*p) && (0..n).all(|i| cycle[i] == cycle[i % p]))
            .expect("n works");
        cycle.truncate(period);
        while prefix.last().is_some_and(|last| Some(last) == cycle.last()) {
            prefix.pop();
            cycle.rotate_right(1);
        }
        Rational {
            prefix,
            tail: Tail::Cycle(cycle),
        }
    }

    pub fn prefix(&self) -> &[u64] {
        &self.prefix
    }

    pub fn tail(&self) -> &Tail<X> {
        &self.tail
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.tail, Tail::Cycle(_))
    }

    /// `events ++ self`.
    pub fn prepend(self, events: &[u64]) -> Self {
        let mut prefix = events.to_vec();
        prefix.extend(self.prefix);
        match self.tail {
            Tail::Done(x) => Rational::finished(prefix, x),
            Tail::Cycle(c) => Rational::cycle(prefix, c),
        }
    }

    /// Kleisli lifting.
    pub fn star<Y>(&self, f: impl FnOnce(&X) -> Rational<Y>) -> Rational<Y> {
        match &self.tail {
            Tail::Done(x) => f(x).prepend(&self.prefix),
            Tail::Cycle(c) => Rational::cycle(self.prefix.clone(), c.clone()),
        }
    }

    /// The first `n` events (fewer if the trace is finite and shorter).
    pub fn take(&self, n: usize) -> Vec<u64> {
        match &self.tail {
            Tail::Done(_) => self.prefix.iter().copied().take(n).collect(),
            Tail::Cycle(c) => self
                .prefix
                .iter()
                .chain(c.iter().cycle())
                .copied()
                .take(n)
                .collect(),
        }
    }

    pub fn to_stream<'a>(&self) -> EventStream<'a, X>
    where
        X: Clone + 'a,
    {
        match &self.tail {
            Tail::Done(x) => EventStream::finite(self.prefix.clone(), x.clone()),
            Tail::Cycle(c) => EventStream::cyclic(self.prefix.clone(), c.clone()),
        }
    }
}

impl<X: fmt::Display> fmt::Display for Rational<X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[u64]| {
            v.iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "<{}>", list(&self.prefix))?;
        match &self.tail {
            Tail::Done(x) => write!(f, " done {x}"),
            Tail::Cycle(c) => write!(f, " then <{}> forever", list(c)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_cycles_compare_equal() {
        let a = Rational::<()>::cycle(vec![1, 2], vec![1, 2]);
        let b = Rational::<()>::cycle(vec![], vec![1, 2, 1, 2]);
        let c = Rational::<()>::cycle(vec![1], vec![2, 1]);
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.prefix(), &[] as &[u64]);
        assert_ne!(a, Rational::cycle(vec![], vec![2, 1]));
    }

    #[test]
    fn star_appends_traces() {
        let r = Rational::finished(vec![1], 3u32);
        let s = r.star(|x| Rational::finished(vec![7], x + 1));
        assert_eq!(s, Rational::finished(vec![1, 7], 4));
        let inf = Rational::<u32>::cycle(vec![5], vec![0]);
        assert_eq!(inf.star(|x| Rational::unit(*x)), inf);
    }

    #[test]
    fn take_unrolls_the_cycle() {
        assert_eq!(
            Rational::<()>::cycle(vec![9], vec![1, 2]).take(6),
            vec![9, 1, 2, 1, 2, 1]
        );
        assert_eq!(Rational::finished(vec![9], ()).take(6), vec![9]);
    }
}
