//! Pull-based event streams: elements of `TX = (X x N*) ∪ N^ω` produced lazily.
//!
//! Each pull yields one output event, the final value, or `Skip` for an
//! internal step that produced nothing observable. A stream is consumed once;
//! pulling past `Done` yields `StreamFault::Exhausted`.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sum<A, B> {
    Inl(A),
    Inr(B),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step<X> {
    Out(u64),
    Done(X),
    Skip,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StreamFault {
    #[error("guardedness fault: loop re-entered after a round without output")]
    GuardednessFault,
    #[error("stream pulled after it finished")]
    Exhausted,
    #[error("stuck: {0}")]
    Stuck(String),
}

pub type Pull<X> = Result<Step<X>, StreamFault>;

pub struct EventStream<'a, X> {
    pull: Box<dyn FnMut() -> Pull<X> + 'a>,
}

impl<X> fmt::Debug for EventStream<'_, X> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("EventStream")
    }
}

impl<'a, X: 'a> EventStream<'a, X> {
    pub fn new(pull: impl FnMut() -> Pull<X> + 'a) -> Self {
        EventStream {
            pull: Box::new(pull),
        }
    }

    pub fn pull(&mut self) -> Pull<X> {
        (self.pull)()
    }

    /// A finite stream: the given events, then `Done(x)`.
    pub fn finite(events: Vec<u64>, x: X) -> Self {
        let mut events = events.into_iter();
        let mut end = Some(x);
        EventStream::new(move || match events.next() {
            Some(n) => Ok(Step::Out(n)),
            None => end.take().map(Step::Done).ok_or(StreamFault::Exhausted),
        })
    }

    /// The events of `prefix`, then `cycle` forever.
    pub fn cyclic(prefix: Vec<u64>, cycle: Vec<u64>) -> Self {
        assert!(!cycle.is_empty(), "a cycle needs at least one event");
        let mut i = 0usize;
        EventStream::new(move || {
            let n = if i < prefix.len() {
                prefix[i]
            } else {
                cycle[(i - prefix.len()) % cycle.len()]
            };
            i += 1;
            Ok(Step::Out(n))
        })
    }

    /// A stream that fails on the first pull.
    pub fn fault(fault: StreamFault) -> Self {
        let mut fault = Some(fault);
        EventStream::new(move || Err(fault.take().unwrap_or(StreamFault::Exhausted)))
    }

    pub fn map<Y: 'a>(self, f: impl FnOnce(X) -> Y + 'a) -> EventStream<'a, Y> {
        let mut s = self;
        let mut f = Some(f);
        EventStream::new(move || match s.pull()? {
            Step::Out(n) => Ok(Step::Out(n)),
            Step::Skip => Ok(Step::Skip),
            Step::Done(x) => match f.take() {
                Some(f) => Ok(Step::Done(f(x))),
                None => Err(StreamFault::Exhausted),
            },
        })
    }
}

/// `(x, <>)`.
pub fn t_unit<'a, X: 'a>(x: X) -> EventStream<'a, X> {
    EventStream::finite(vec![], x)
}

/// Emits `n`, then behaves as `s`.
pub fn prepend<'a, X: 'a>(n: u64, s: EventStream<'a, X>) -> EventStream<'a, X> {
    let mut first = Some(n);
    let mut s = s;
    EventStream::new(move || match first.take() {
        Some(n) => Ok(Step::Out(n)),
        None => s.pull(),
    })
}

/// Kleisli lifting: relays `s`, then continues with `f` of its result.
/// An infinite `s` is relayed unchanged.
pub fn t_star<'a, X: 'a, Y: 'a>(
    s: EventStream<'a, X>,
    f: impl FnOnce(X) -> EventStream<'a, Y> + 'a,
) -> EventStream<'a, Y> {
    let mut first = Some((s, f));
    let mut second: Option<EventStream<'a, Y>> = None;
    EventStream::new(move || {
        if let Some(t) = second.as_mut() {
            return t.pull();
        }
        let (s, _) = first.as_mut().ok_or(StreamFault::Exhausted)?;
        match s.pull()? {
            Step::Out(n) => Ok(Step::Out(n)),
            Step::Skip => Ok(Step::Skip),
            Step::Done(x) => {
                let (_, f) = first.take().expect("present");
                let t = second.insert(f(x));
                t.pull()
            }
        }
    })
}

/// Guarded iteration `f^†(x)`: runs rounds of `f`, relaying their events;
/// `Inl y` ends the loop, `Inr x'` starts the next round. A round that
/// re-enters without emitting anything is a guardedness fault.
pub fn t_iterate<'a, X: 'a, Y: 'a>(
    f: impl Fn(X) -> EventStream<'a, Sum<Y, X>> + 'a,
    x: X,
) -> EventStream<'a, Y> {
    let mut round = Some(f(x));
    let mut emitted = false;
    EventStream::new(move || {
        let cur = round.as_mut().ok_or(StreamFault::Exhausted)?;
        match cur.pull()? {
            Step::Out(n) => {
                emitted = true;
                Ok(Step::Out(n))
            }
            Step::Skip => Ok(Step::Skip),
            Step::Done(Sum::Inl(y)) => {
                round = None;
                Ok(Step::Done(y))
            }
            Step::Done(Sum::Inr(next)) => {
                if !emitted {
                    round = None;
                    return Err(StreamFault::GuardednessFault);
                }
                emitted = false;
                round = Some(f(next));
                Ok(Step::Skip)
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict<X> {
    Guarded,
    NotGuarded(X),
    Unknown(X),
}

/// Probes `f` for guardedness in the right summand: each probe must emit
/// before finishing there. `fuel` bounds the silent pulls per probe.
pub fn t_guarded<'a, X: Clone, Y: 'a, Z: 'a>(
    f: impl Fn(&X) -> EventStream<'a, Sum<Y, Z>>,
    probe: &[X],
    fuel: usize,
) -> Verdict<X> {
    for x in probe {
        let mut s = f(x);
        let mut silent = 0;
        loop {
            match s.pull() {
                Ok(Step::Out(_)) | Ok(Step::Done(Sum::Inl(_))) => break,
                Ok(Step::Done(Sum::Inr(_))) => return Verdict::NotGuarded(x.clone()),
                Ok(Step::Skip) if silent < fuel => silent += 1,
                Ok(Step::Skip) | Err(_) => return Verdict::Unknown(x.clone()),
            }
        }
    }
    Verdict::Guarded
}

/// How an observed stream ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ending<X> {
    Done(X),
    /// The event budget ran out first.
    Pending,
    /// More than the allowed number of consecutive silent steps.
    Silent,
    Fault(StreamFault),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observed<X> {
    pub events: Vec<u64>,
    pub ending: Ending<X>,
    /// Total pulls, including silent ones.
    pub pulls: usize,
}

/// Reads at most `fuel` events. The result counts only if it arrives before
/// a further event would be needed; `max_silent` bounds consecutive `Skip`s.
pub fn observe_stream<'a, X: 'a>(
    mut s: EventStream<'a, X>,
    fuel: usize,
    max_silent: usize,
) -> Observed<X> {
    let mut events = Vec::new();
    let mut pulls = 0;
    let mut silent = 0;
    let ending = loop {
        pulls += 1;
        match s.pull() {
            Ok(Step::Out(n)) => {
                if events.len() == fuel {
                    break Ending::Pending;
                }
                events.push(n);
                silent = 0;
            }
            Ok(Step::Done(x)) => break Ending::Done(x),
            Ok(Step::Skip) => {
                silent += 1;
                if silent > max_silent {
                    break Ending::Silent;
                }
            }
            Err(e) => break Ending::Fault(e),
        }
    };
    Observed {
        events,
        ending,
        pulls,
    }
}
