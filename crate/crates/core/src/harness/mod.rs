//! Differential adequacy testing: both semantics are observed up to a fuel
//! bound and compared clause by clause. Includes the random program
//! generator, witness shrinking and the parallel suite runner.

mod gen;
mod shrink;

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

pub use gen::{
    gen_open_program, gen_program, gen_program_with_coverage, has_lambda, Coverage, GenConfig,
    Weights,
};
pub use shrink::shrink;

use crate::deno::{denote_comp, readback, Env, Outcome};
use crate::monad::trace::{observe_stream, Ending};
use crate::oper::{eval, EvalConfig, EvalError, Mutation, Terminal};
use crate::syntax::{
    pretty_program, pretty_value, ExcContext, Program, Tag, Type, Value, ValueKind,
};
use crate::typing::TypedProgram;

/// How an observed run ended.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ObsTerminal {
    Ret(String),
    Raise {
        exc: String,
        value: String,
    },
    Pending,
    /// Evaluation failed; never expected on typed programs.
    Fault(String),
}

/// A fuel-bounded observation with canonically printed values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Observation {
    pub events: Vec<u64>,
    pub terminal: ObsTerminal,
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let events: Vec<String> = self.events.iter().map(|n| n.to_string()).collect();
        write!(f, "[{}] ", events.join(","))?;
        match &self.terminal {
            ObsTerminal::Ret(v) => write!(f, "ret {v}"),
            ObsTerminal::Raise { exc, value } => write!(f, "raise_{exc} {value}"),
            ObsTerminal::Pending => f.write_str("pending"),
            ObsTerminal::Fault(m) => write!(f, "fault: {m}"),
        }
    }
}

/// Drops type ascriptions so that values from both sides print alike.
pub fn strip_ascriptions(v: &Value) -> Value {
    let kind = match &v.kind {
        ValueKind::Inl(a, _) => ValueKind::Inl(Box::new(strip_ascriptions(a)), None),
        ValueKind::Inr(a, _) => ValueKind::Inr(Box::new(strip_ascriptions(a)), None),
        ValueKind::Pair(a, b) => ValueKind::Pair(
            Box::new(strip_ascriptions(a)),
            Box::new(strip_ascriptions(b)),
        ),
        ValueKind::Prim(op, a) => ValueKind::Prim(op.clone(), Box::new(strip_ascriptions(a))),
        other => other.clone(),
    };
    Value::new(kind)
}

fn canonical(v: &Value) -> String {
    if has_lambda(v) {
        "<fun>".to_string()
    } else {
        pretty_value(&strip_ascriptions(v))
    }
}

/// Runs the operational evaluator on the main term.
pub fn observe_oper(p: &Program, cfg: &EvalConfig) -> Observation {
    let r = eval(&p.main, cfg);
    let terminal = match r.result {
        Ok(Terminal::Ret(v)) => ObsTerminal::Ret(canonical(&v)),
        Ok(Terminal::Raise(exc, v)) => ObsTerminal::Raise {
            exc,
            value: canonical(&v),
        },
        Ok(Terminal::Pending) => ObsTerminal::Pending,
        Err(e) => ObsTerminal::Fault(e.to_string()),
    };
    Observation {
        events: r.events,
        terminal,
    }
}

/// Pulls the denotation of the main term, reading values back at the
/// result type and the declared payload types.
pub fn observe_deno(p: &Program, ty: &Type, fuel: usize, max_silent: usize) -> Observation {
    let o = observe_stream(denote_comp(&p.main, Env::new()), fuel, max_silent);
    let terminal = match o.ending {
        Ending::Done(Outcome::Ret(a)) => match readback(&a, ty) {
            Ok(v) => ObsTerminal::Ret(pretty_value(&v)),
            Err(_) => ObsTerminal::Ret("<fun>".to_string()),
        },
        Ending::Done(Outcome::Raise(exc, a)) => {
            let value = match p.exceptions.lookup(exc).map(|e| readback(&a, &e.payload)) {
                Some(Ok(v)) => pretty_value(&v),
                Some(Err(_)) => "<fun>".to_string(),
                None => format!("<undeclared {a}>"),
            };
            ObsTerminal::Raise {
                exc: exc.to_string(),
                value,
            }
        }
        Ending::Pending => ObsTerminal::Pending,
        Ending::Silent => ObsTerminal::Fault(format!("more than {max_silent} silent steps")),
        Ending::Fault(e) => ObsTerminal::Fault(e.to_string()),
    };
    Observation {
        events: o.events,
        terminal,
    }
}

#[derive(Clone, Debug)]
pub struct AdequacyConfig {
    pub fuel: usize,
    pub max_steps: u64,
    pub mutation: Option<Mutation>,
}

impl Default for AdequacyConfig {
    fn default() -> Self {
        AdequacyConfig {
            fuel: 64,
            max_steps: 100_000,
            mutation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Agree(Observation),
    Disagree {
        operational: Observation,
        denotational: Observation,
        reason: String,
    },
    /// The result or an exception payload has a function type.
    Incomparable(String),
}

impl Verdict {
    pub fn agrees(&self) -> bool {
        matches!(self, Verdict::Agree(_))
    }
}

fn first_order_context(delta: &ExcContext) -> Option<&str> {
    delta
        .entries
        .iter()
        .find(|e| !e.payload.is_first_order())
        .map(|e| e.name.as_str())
}

/// Compares both semantics of a checked closed program.
pub fn adequacy_check(tp: &TypedProgram, cfg: &AdequacyConfig) -> Verdict {
    if !tp.ty.is_first_order() {
        return Verdict::Incomparable(format!("result type {} is not first-order", tp.ty));
    }
    if let Some(e) = first_order_context(&tp.program.exceptions) {
        return Verdict::Incomparable(format!("payload of `{e}` is not first-order"));
    }
    let ecfg = EvalConfig {
        max_events: cfg.fuel,
        max_steps: cfg.max_steps,
        mutation: cfg.mutation,
    };
    let operational = observe_oper(&tp.program, &ecfg);
    let denotational = observe_deno(&tp.program, &tp.ty, cfg.fuel, cfg.max_steps as usize);
    let reason = if operational != denotational {
        Some("observations differ".to_string())
    } else if let ObsTerminal::Fault(m) = &operational.terminal {
        Some(format!("both sides fault: {m}"))
    } else if let ObsTerminal::Raise { exc, .. } = &operational.terminal {
        let guarded = tp
            .program
            .exceptions
            .lookup(exc)
            .is_some_and(|e| e.tag == Tag::Guarded);
        (guarded && operational.events.is_empty())
            .then(|| format!("guarded `{exc}` raised with an empty trace"))
    } else {
        None
    };
    match reason {
        None => Verdict::Agree(operational),
        Some(reason) => Verdict::Disagree {
            operational,
            denotational,
            reason,
        },
    }
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub count: usize,
    pub depth: usize,
    pub seed: u64,
    pub fuel: usize,
    pub max_steps: u64,
    pub mutation: Option<Mutation>,
    /// Shrink disagreement witnesses before reporting them.
    pub shrink: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            count: 500,
            depth: 8,
            seed: 0,
            fuel: 64,
            max_steps: 100_000,
            mutation: None,
            shrink: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub seed: u64,
    pub program: String,
    pub operational: Observation,
    pub denotational: Observation,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AdequacyReport {
    pub total: usize,
    pub agreed: usize,
    pub disagreed: Vec<Disagreement>,
}

impl AdequacyReport {
    pub fn passed(&self) -> bool {
        self.disagreed.is_empty() && self.agreed == self.total
    }
}

/// Seed of the `i`-th program of a suite.
pub fn program_seed(base: u64, i: usize) -> u64 {
    base.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(i as u64)
}

/// The generator configuration used for the `i`-th program of a suite.
pub fn suite_gen_config(cfg: &SuiteConfig, i: usize) -> GenConfig {
    GenConfig {
        seed: program_seed(cfg.seed, i),
        max_depth: cfg.depth,
        ..GenConfig::default()
    }
}

pub fn run_adequacy_suite(cfg: &SuiteConfig) -> AdequacyReport {
    let acfg = AdequacyConfig {
        fuel: cfg.fuel,
        max_steps: cfg.max_steps,
        mutation: cfg.mutation,
    };
    let results: Vec<Option<Disagreement>> = (0..cfg.count)
        .into_par_iter()
        .map(|i| {
            let gcfg = suite_gen_config(cfg, i);
            let tp = gen_program(&gcfg);
            match adequacy_check(&tp, &acfg) {
                Verdict::Agree(_) => None,
                Verdict::Disagree { .. } | Verdict::Incomparable(_) => {
                    let tp = if cfg.shrink { shrink(&tp, &acfg) } else { tp };
                    let (operational, denotational) = match adequacy_check(&tp, &acfg) {
                        Verdict::Disagree {
                            operational,
                            denotational,
                            ..
                        } => (operational, denotational),
                        Verdict::Agree(o) => (o.clone(), o),
                        Verdict::Incomparable(m) => {
                            let o = Observation {
                                events: vec![],
                                terminal: ObsTerminal::Fault(m),
                            };
                            (o.clone(), o)
                        }
                    };
                    Some(Disagreement {
                        seed: gcfg.seed,
                        program: pretty_program(&tp.program),
                        operational,
                        denotational,
                    })
                }
            }
        })
        .collect();
    let disagreed: Vec<Disagreement> = results.into_iter().flatten().collect();
    AdequacyReport {
        total: cfg.count,
        agreed: cfg.count - disagreed.len(),
        disagreed,
    }
}

/// Whether the operational run of `p` ended in silent divergence.
pub fn silently_diverges(p: &Program, cfg: &EvalConfig) -> bool {
    matches!(
        eval(&p.main, cfg).result,
        Err(EvalError::SilentDivergence { .. })
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;
    use crate::typing::check_program;

    fn typed(src: &str) -> TypedProgram {
        check_program(&parse_program(src).unwrap()).unwrap()
    }

    const COUNTDOWN: &str =
        "handleit e:N = 3 in do z <- pred(e); case z of inl _ => ret * | inr m => put(m) & raise_e m";

    #[test]
    fn countdown_agrees() {
        let v = adequacy_check(&typed(COUNTDOWN), &AdequacyConfig::default());
        let Verdict::Agree(o) = v else {
            panic!("{v:?}")
        };
        assert_eq!(o.events, vec![2, 1, 0]);
        assert_eq!(o.terminal, ObsTerminal::Ret("*".into()));
        assert_eq!(o.to_string(), "[2,1,0] ret *");
    }

    #[test]
    fn infinite_loop_agrees_as_pending() {
        let cfg = AdequacyConfig {
            fuel: 5,
            ..AdequacyConfig::default()
        };
        let v = adequacy_check(&typed("handleit e:1 = * in put(zero) & raise_e *"), &cfg);
        assert_eq!(
            v,
            Verdict::Agree(Observation {
                events: vec![0; 5],
                terminal: ObsTerminal::Pending
            })
        );
    }

    #[test]
    fn raise_observation() {
        let v = adequacy_check(
            &typed("exceptions e:1^u\nraise_e *"),
            &AdequacyConfig::default(),
        );
        let Verdict::Agree(o) = v else {
            panic!("{v:?}")
        };
        assert_eq!(
            o.terminal,
            ObsTerminal::Raise {
                exc: "e".into(),
                value: "*".into()
            }
        );
    }

    #[test]
    fn dropped_put_event_is_caught() {
        let cfg = AdequacyConfig {
            mutation: Some(Mutation::DropPutEvent),
            ..AdequacyConfig::default()
        };
        assert!(!adequacy_check(&typed("put(1) & ret *"), &cfg).agrees());
    }

    #[test]
    fn function_results_are_incomparable() {
        let v = adequacy_check(
            &typed("ret (fun (x:N)[] => ret x)"),
            &AdequacyConfig::default(),
        );
        assert!(matches!(v, Verdict::Incomparable(_)));
    }

    #[test]
    fn empty_suite_passes() {
        let r = run_adequacy_suite(&SuiteConfig {
            count: 0,
            ..SuiteConfig::default()
        });
        assert_eq!(r, AdequacyReport::default());
        assert!(r.passed());
    }

    #[test]
    fn small_suite_agrees() {
        let r = run_adequacy_suite(&SuiteConfig {
            count: 100,
            depth: 6,
            seed: 3,
            ..SuiteConfig::default()
        });
        assert!(r.passed(), "{:#?}", r.disagreed.first());
    }
}
