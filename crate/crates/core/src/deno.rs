//! Denotational evaluator over the trace monad. Values are interpreted in a
//! persistent environment; computations become lazy event streams ending in
//! a returned value or a raised exception. Functions denote closures.

use std::fmt;
use std::rc::Rc;

use crate::monad::trace::{prepend, t_iterate, t_star, t_unit, EventStream, StreamFault, Sum};
use crate::syntax::{Comp, CompKind, Type, Value, ValueKind};

#[derive(Clone)]
pub enum SemValue<'a> {
    Nat(u64),
    Unit,
    Inl(Rc<SemValue<'a>>),
    Inr(Rc<SemValue<'a>>),
    Pair(Rc<SemValue<'a>>, Rc<SemValue<'a>>),
    Closure(Rc<Closure<'a>>),
}

pub struct Closure<'a> {
    pub param: &'a str,
    pub body: &'a Comp,
    pub env: Env<'a>,
}

impl PartialEq for SemValue<'_> {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SemValue::Nat(a), SemValue::Nat(b)) => a == b,
            (SemValue::Unit, SemValue::Unit) => true,
            (SemValue::Inl(a), SemValue::Inl(b)) | (SemValue::Inr(a), SemValue::Inr(b)) => a == b,
            (SemValue::Pair(a, b), SemValue::Pair(c, d)) => a == c && b == d,
            (SemValue::Closure(a), SemValue::Closure(b)) => Rc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl fmt::Display for SemValue<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arg = |v: &SemValue| match v {
            SemValue::Inl(_) | SemValue::Inr(_) => format!("({v})"),
            _ => v.to_string(),
        };
        match self {
            SemValue::Nat(n) => write!(f, "{n}"),
            SemValue::Unit => f.write_str("*"),
            SemValue::Inl(v) => write!(f, "inl {}", arg(v)),
            SemValue::Inr(v) => write!(f, "inr {}", arg(v)),
            SemValue::Pair(a, b) => write!(f, "({a}, {b})"),
            SemValue::Closure(c) => write!(f, "<fun {}>", c.param),
        }
    }
}

impl fmt::Debug for SemValue<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A persistent valuation: extension shares the parent.
#[derive(Clone, Default)]
pub struct Env<'a>(Option<Rc<EnvNode<'a>>>);

struct EnvNode<'a> {
    name: &'a str,
    value: SemValue<'a>,
    next: Env<'a>,
}

impl<'a> Env<'a> {
    pub fn new() -> Self {
        Env(None)
    }

    pub fn extend(&self, name: &'a str, value: SemValue<'a>) -> Env<'a> {
        Env(Some(Rc::new(EnvNode {
            name,
            value,
            next: self.clone(),
        })))
    }

    pub fn lookup(&self, name: &str) -> Option<&SemValue<'a>> {
        let mut cur = self.0.as_deref();
        while let Some(node) = cur {
            if node.name == name {
                return Some(&node.value);
            }
            cur = node.next.0.as_deref();
        }
        None
    }
}

/// The result summand `A + Δ` of a computation.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome<'a> {
    Ret(SemValue<'a>),
    Raise(&'a str, SemValue<'a>),
}

fn stuck(msg: String) -> StreamFault {
    StreamFault::Stuck(msg)
}

pub fn denote_value<'a>(v: &'a Value, env: &Env<'a>) -> Result<SemValue<'a>, StreamFault> {
    Ok(match &v.kind {
        ValueKind::Var(x) => env
            .lookup(x)
            .cloned()
            .ok_or_else(|| stuck(format!("unbound variable `{x}`")))?,
        ValueKind::Star => SemValue::Unit,
        ValueKind::Prim(op, arg) => match (op.as_str(), denote_value(arg, env)?) {
            ("zero", _) => SemValue::Nat(0),
            ("succ", SemValue::Nat(n)) => SemValue::Nat(n + 1),
            (op, a) => return Err(stuck(format!("no interpretation for `{op}` at {a}"))),
        },
        ValueKind::Inl(a, _) => SemValue::Inl(Rc::new(denote_value(a, env)?)),
        ValueKind::Inr(a, _) => SemValue::Inr(Rc::new(denote_value(a, env)?)),
        ValueKind::Pair(a, b) => SemValue::Pair(
            Rc::new(denote_value(a, env)?),
            Rc::new(denote_value(b, env)?),
        ),
        ValueKind::Lambda(lam) => SemValue::Closure(Rc::new(Closure {
            param: &lam.param,
            body: &lam.body,
            env: env.clone(),
        })),
    })
}

fn value_or_fault<'a, X: 'a>(
    v: &'a Value,
    env: &Env<'a>,
    k: impl FnOnce(SemValue<'a>) -> EventStream<'a, X>,
) -> EventStream<'a, X> {
    match denote_value(v, env) {
        Ok(a) => k(a),
        Err(e) => EventStream::fault(e),
    }
}

pub fn denote_comp<'a>(p: &'a Comp, env: Env<'a>) -> EventStream<'a, Outcome<'a>> {
    match &p.kind {
        CompKind::Ret(v) => value_or_fault(v, &env, |a| t_unit(Outcome::Ret(a))),
        CompKind::Raise(e, v) => value_or_fault(v, &env, |a| t_unit(Outcome::Raise(e, a))),
        CompKind::Init(v) => EventStream::fault(stuck(format!("init of `{v}`"))),
        CompKind::GCase {
            op,
            arg,
            left,
            left_body,
            right,
            right_body,
        } => value_or_fault(arg, &env, |a| match (op.as_str(), a) {
            ("put", SemValue::Nat(n)) => prepend(
                n,
                denote_comp(right_body, env.extend(right, SemValue::Unit)),
            ),
            ("pred", SemValue::Nat(n)) => {
                let r = match n {
                    0 => SemValue::Inl(Rc::new(SemValue::Unit)),
                    n => SemValue::Inr(Rc::new(SemValue::Nat(n - 1))),
                };
                denote_comp(left_body, env.extend(left, r))
            }
            (op, a) => {
                EventStream::fault(stuck(format!("no interpretation for effect `{op}` at {a}")))
            }
        }),
        CompKind::Case {
            scrut,
            left,
            left_body,
            right,
            right_body,
        } => value_or_fault(scrut, &env, |a| match a {
            SemValue::Inl(u) => denote_comp(left_body, env.extend(left, (*u).clone())),
            SemValue::Inr(w) => denote_comp(right_body, env.extend(right, (*w).clone())),
            other => EventStream::fault(stuck(format!("case on {other}"))),
        }),
        CompKind::PCase {
            scrut,
            fst,
            snd,
            body,
        } => value_or_fault(scrut, &env, |a| match a {
            SemValue::Pair(u, w) => denote_comp(
                body,
                env.extend(fst, (*u).clone()).extend(snd, (*w).clone()),
            ),
            other => EventStream::fault(stuck(format!("pair case on {other}"))),
        }),
        CompKind::App(f, v) => value_or_fault(f, &env, |g| {
            value_or_fault(v, &env, |a| match g {
                SemValue::Closure(c) => denote_comp(c.body, c.env.extend(c.param, a)),
                other => EventStream::fault(stuck(format!("application of {other}"))),
            })
        }),
        CompKind::Do {
            var, bound, body, ..
        } => {
            let inner = denote_comp(bound, env.clone());
            t_star(inner, move |o| match o {
                Outcome::Ret(a) => denote_comp(body, env.extend(var, a)),
                raised => t_unit(raised),
            })
        }
        CompKind::Handle {
            exc,
            body,
            var,
            handler,
            ..
        } => {
            let inner = denote_comp(body, env.clone());
            t_star(inner, move |o| match o {
                Outcome::Raise(e, a) if e == exc => denote_comp(handler, env.extend(var, a)),
                other => t_unit(other),
            })
        }
        CompKind::HandleIt {
            init,
            exc,
            var,
            body,
            ..
        } => value_or_fault(init, &env, |v0| {
            let env = env.clone();
            let round = move |v: SemValue<'a>| {
                denote_comp(body, env.extend(var, v)).map(move |o| match o {
                    Outcome::Raise(e, a) if e == exc => Sum::Inr(a),
                    other => Sum::Inl(other),
                })
            };
            t_iterate(round, v0)
        }),
        CompKind::If { .. }
        | CompKind::Guard { .. }
        | CompKind::Call { .. }
        | CompKind::Seq(..)
        | CompKind::Try { .. } => {
            EventStream::fault(stuck("surface syntax must be desugared first".to_string()))
        }
    }
}

/// Marks values that have no syntactic counterpart to compare against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("value is not comparable")]
pub struct Incomparable;

/// The closed value term denoting `s` at first-order type `ty`.
pub fn readback(s: &SemValue, ty: &Type) -> Result<Value, Incomparable> {
    match (s, ty) {
        (SemValue::Nat(n), Type::Nat) => Ok(Value::nat(*n)),
        (SemValue::Unit, Type::One) => Ok(Value::star()),
        (SemValue::Inl(v), Type::Sum(a, _)) => Ok(Value::inl(readback(v, a)?, None)),
        (SemValue::Inr(v), Type::Sum(_, b)) => Ok(Value::inr(readback(v, b)?, None)),
        (SemValue::Pair(u, w), Type::Prod(a, b)) => {
            Ok(Value::pair(readback(u, a)?, readback(w, b)?))
        }
        _ => Err(Incomparable),
    }
}
