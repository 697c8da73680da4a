//! Big-step operational evaluator for closed computations. Substitution
//! based: binders are eliminated by substituting closed values. Output
//! events are pushed to a sink as they happen, so a diverging program
//! still shows its output up to the event budget.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::syntax::{
    free_vars_comp, substitute_comp, Bindings, Comp, CompKind, Name, Value, ValueKind,
};

/// Deliberate evaluator faults used to test that the adequacy check can
/// tell the two semantics apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// `put(n)` emits nothing.
    DropPutEvent,
    /// A raise in the bound computation of `do` continues with the body
    /// (binding the payload) instead of propagating.
    SwapDoShortCircuit,
    /// `handleit` re-enters with the previous round's value.
    HandleItOffByOne,
}

impl Mutation {
    pub const ALL: [Mutation; 3] = [
        Mutation::DropPutEvent,
        Mutation::SwapDoShortCircuit,
        Mutation::HandleItOffByOne,
    ];
}

#[derive(Clone, Debug)]
pub struct EvalConfig {
    /// Events observed before the run is cut off as pending.
    pub max_events: usize,
    /// Rule applications allowed between two events.
    pub max_steps: u64,
    pub mutation: Option<Mutation>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            max_events: 64,
            max_steps: 100_000,
            mutation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Terminal {
    Ret(Value),
    Raise(Name, Value),
    /// The event budget ran out before a terminal was reached.
    Pending,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("stuck term: {0}")]
    StuckTerm(String),
    #[error("silent divergence: {steps} steps without an event")]
    SilentDivergence { steps: u64 },
    #[error("guardedness fault: `{exc}` re-entered its loop without output in round {round}")]
    GuardednessFault { exc: Name, round: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalReport {
    pub events: Vec<u64>,
    pub result: Result<Terminal, EvalError>,
    /// Rule applications in total.
    pub steps: u64,
    /// Body evaluations of `handleit` loops in total.
    pub loop_rounds: u64,
}

/// Evaluates `p`, collecting events.
pub fn eval(p: &Comp, cfg: &EvalConfig) -> EvalReport {
    eval_streaming(p, cfg, &mut |_| {})
}

/// Evaluates `p`, handing each event to `sink` as soon as it is produced.
pub fn eval_streaming(p: &Comp, cfg: &EvalConfig, sink: &mut dyn FnMut(u64)) -> EvalReport {
    let mut m = Machine {
        cfg,
        sink,
        events: Vec::new(),
        steps: 0,
        since_event: 0,
        loop_rounds: 0,
    };
    let free: BTreeSet<Name> = free_vars_comp(p);
    let result = if let Some(x) = free.first() {
        Err(EvalError::StuckTerm(format!("free variable `{x}`")))
    } else {
        match m.eval(p.clone()) {
            Ok(Outcome::Ret(v)) => Ok(Terminal::Ret(v)),
            Ok(Outcome::Raise(e, v)) => Ok(Terminal::Raise(e, v)),
            Err(Stop::Pending) => Ok(Terminal::Pending),
            Err(Stop::Error(e)) => Err(e),
        }
    };
    EvalReport {
        events: m.events,
        result,
        steps: m.steps,
        loop_rounds: m.loop_rounds,
    }
}

enum Outcome {
    Ret(Value),
    Raise(Name, Value),
}

enum Stop {
    Pending,
    Error(EvalError),
}

fn stuck<T>(msg: String) -> Result<T, Stop> {
    Err(Stop::Error(EvalError::StuckTerm(msg)))
}

fn subst(c: &Comp, x: &str, v: &Value) -> Comp {
    if x == "_" {
        return c.clone();
    }
    let mut s = Bindings::new();
    s.insert(x.to_string(), v.clone());
    substitute_comp(c, &s)
}

fn nat(v: &Value) -> Result<u64, Stop> {
    v.as_nat()
        .map_or_else(|| stuck(format!("`{v}` is not a numeral")), Ok)
}

struct Machine<'c> {
    cfg: &'c EvalConfig,
    sink: &'c mut dyn FnMut(u64),
    events: Vec<u64>,
    steps: u64,
    since_event: u64,
    loop_rounds: u64,
}

impl Machine<'_> {
    fn tick(&mut self) -> Result<(), Stop> {
        self.steps += 1;
        self.since_event += 1;
        if self.since_event > self.cfg.max_steps {
            return Err(Stop::Error(EvalError::SilentDivergence {
                steps: self.since_event - 1,
            }));
        }
        Ok(())
    }

    fn emit(&mut self, n: u64) -> Result<(), Stop> {
        if self.events.len() == self.cfg.max_events {
            return Err(Stop::Pending);
        }
        self.events.push(n);
        self.since_event = 0;
        (self.sink)(n);
        Ok(())
    }

    fn mutated(&self, m: Mutation) -> bool {
        self.cfg.mutation == Some(m)
    }

    /// Evaluates a closed computation. Tail positions loop instead of recursing.
    fn eval(&mut self, mut c: Comp) -> Result<Outcome, Stop> {
        loop {
            self.tick()?;
            c = match c.kind {
                CompKind::Ret(v) => return Ok(Outcome::Ret(v)),
                CompKind::Raise(e, v) => return Ok(Outcome::Raise(e, v)),
                CompKind::Init(v) => return stuck(format!("init of `{v}`")),
                CompKind::GCase {
                    op,
                    arg,
                    left,
                    left_body,
                    right,
                    right_body,
                } => match op.as_str() {
                    "put" => {
                        let n = nat(&arg)?;
                        if !self.mutated(Mutation::DropPutEvent) {
                            self.emit(n)?;
                        }
                        subst(&right_body, &right, &Value::star())
                    }
                    "pred" => {
                        let r = match nat(&arg)? {
                            0 => Value::inl(Value::star(), None),
                            n => Value::inr(Value::nat(n - 1), None),
                        };
                        subst(&left_body, &left, &r)
                    }
                    other => return stuck(format!("no operational rule for effect `{other}`")),
                },
                CompKind::Case {
                    scrut,
                    left,
                    left_body,
                    right,
                    right_body,
                } => match scrut.kind {
                    ValueKind::Inl(v, _) => subst(&left_body, &left, &v),
                    ValueKind::Inr(v, _) => subst(&right_body, &right, &v),
                    _ => return stuck(format!("case on `{scrut}`")),
                },
                CompKind::PCase {
                    scrut,
                    fst,
                    snd,
                    body,
                } => match scrut.kind {
                    ValueKind::Pair(a, b) => {
                        let mut s = Bindings::new();
                        if fst != "_" {
                            s.insert(fst, *a);
                        }
                        if snd != "_" {
                            s.insert(snd, *b);
                        }
                        substitute_comp(&body, &s)
                    }
                    _ => return stuck(format!("pair case on `{scrut}`")),
                },
                CompKind::App(f, a) => match f.kind {
                    ValueKind::Lambda(lam) => subst(&lam.body, &lam.param, &a),
                    _ => return stuck(format!("application of `{f}`")),
                },
                CompKind::Do {
                    var, bound, body, ..
                } => match self.eval(*bound)? {
                    Outcome::Ret(v) => subst(&body, &var, &v),
                    Outcome::Raise(_, v) if self.mutated(Mutation::SwapDoShortCircuit) => {
                        subst(&body, &var, &v)
                    }
                    raised => return Ok(raised),
                },
                CompKind::Handle {
                    exc,
                    body,
                    var,
                    handler,
                    ..
                } => match self.eval(*body)? {
                    Outcome::Raise(e, v) if e == exc => subst(&handler, &var, &v),
                    other => return Ok(other),
                },
                CompKind::HandleIt {
                    init,
                    exc,
                    var,
                    body,
                    ..
                } => return self.handleit(init, &exc, &var, &body),
                CompKind::If { .. }
                | CompKind::Guard { .. }
                | CompKind::Call { .. }
                | CompKind::Seq(..)
                | CompKind::Try { .. } => {
                    return stuck("surface syntax must be desugared first".to_string())
                }
            };
        }
    }

    fn handleit(
        &mut self,
        init: Value,
        exc: &str,
        var: &str,
        body: &Comp,
    ) -> Result<Outcome, Stop> {
        let mut cur = init;
        let mut round = 0u64;
        loop {
            round += 1;
            self.loop_rounds += 1;
            let before = self.events.len();
            match self.eval(subst(body, var, &cur))? {
                Outcome::Raise(e, next) if e == exc => {
                    if self.events.len() == before {
                        return Err(Stop::Error(EvalError::GuardednessFault {
                            exc: exc.to_string(),
                            round,
                        }));
                    }
                    if !self.mutated(Mutation::HandleItOffByOne) {
                        cur = next;
                    }
                }
                other => return Ok(other),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, pretty_value};

    fn run(src: &str, fuel: usize) -> EvalReport {
        let p = parse_program(src).unwrap();
        eval(
            &p.main,
            &EvalConfig {
                max_events: fuel,
                ..EvalConfig::default()
            },
        )
    }

    const COUNTDOWN: &str =
        "handleit e:N = 3 in do z <- pred(e); case z of inl _ => ret * | inr m => put(m) & raise_e m";

    #[test]
    fn countdown_from_three() {
        let r = run(COUNTDOWN, 64);
        assert_eq!(r.events, vec![2, 1, 0]);
        assert_eq!(r.result, Ok(Terminal::Ret(Value::star())));
        assert_eq!(r.loop_rounds, 4);
    }

    #[test]
    fn put_loop_is_pending_at_fuel() {
        let r = run("handleit e:1 = * in put(zero) & raise_e *", 5);
        assert_eq!(r.events, vec![0; 5]);
        assert_eq!(r.result, Ok(Terminal::Pending));
    }

    #[test]
    fn ret_is_one_step() {
        let r = run("ret *", 64);
        assert_eq!((r.steps, r.events.len()), (1, 0));
    }

    #[test]
    fn bind_then_put() {
        let r = run("do x <- ret 1; put(x) & ret x", 64);
        assert_eq!(r.events, vec![1]);
        let Ok(Terminal::Ret(v)) = r.result else {
            panic!("{:?}", r.result)
        };
        assert_eq!(pretty_value(&v), "1");
    }

    #[test]
    fn raise_short_circuits_do() {
        let r = run("exceptions e:1^u\ndo x <- raise_e *; put(0) & ret *", 64);
        assert_eq!(r.events, Vec::<u64>::new());
        assert_eq!(r.result, Ok(Terminal::Raise("e".into(), Value::star())));
    }

    #[test]
    fn silent_loop_faults_in_round_one() {
        let body = Comp::raise("e", Value::star());
        let p = Comp::handleit("e", crate::syntax::Type::One, Value::star(), body);
        let r = eval(&p, &EvalConfig::default());
        assert_eq!(
            r.result,
            Err(EvalError::GuardednessFault {
                exc: "e".into(),
                round: 1
            })
        );
    }

    #[test]
    fn step_budget_trips() {
        let r = eval(
            &parse_program(COUNTDOWN).unwrap().main,
            &EvalConfig {
                max_steps: 2,
                ..EvalConfig::default()
            },
        );
        assert!(matches!(r.result, Err(EvalError::SilentDivergence { .. })));
    }

    #[test]
    fn mutations_change_countdown() {
        let main = parse_program(COUNTDOWN).unwrap().main;
        let drop = eval(
            &main,
            &EvalConfig {
                mutation: Some(Mutation::DropPutEvent),
                ..EvalConfig::default()
            },
        );
        assert!(drop.events.is_empty());
        let stale = eval(
            &main,
            &EvalConfig {
                mutation: Some(Mutation::HandleItOffByOne),
                max_events: 4,
                ..EvalConfig::default()
            },
        );
        assert_eq!(stale.events, vec![2, 2, 2, 2]);
    }

    #[test]
    fn events_stream_to_the_sink() {
        let main = parse_program("handleit e:N = 0 in put(e) & raise_e succ(e)")
            .unwrap()
            .main;
        let mut seen = vec![];
        let r = eval_streaming(
            &main,
            &EvalConfig {
                max_events: 4,
                ..EvalConfig::default()
            },
            &mut |n| seen.push(n),
        );
        assert_eq!(seen, vec![0, 1, 2, 3]);
        assert_eq!(r.result, Ok(Terminal::Pending));
    }
}
