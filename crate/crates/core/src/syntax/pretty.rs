//! Printing back to concrete syntax. The output re-parses to the same term.

use super::{Comp, CompKind, ExcContext, Program, SigKind, Type, Value, ValueKind};

pub fn pretty_type(t: &Type) -> String {
    ty(t, 0)
}

// Precedence: 0 function, 1 sum, 2 product, 3 atom.
fn ty(t: &Type, prec: u8) -> String {
    let (s, own) = match t {
        Type::Base(n) => (n.clone(), 3),
        Type::Zero => ("0".to_string(), 3),
        Type::One => ("1".to_string(), 3),
        Type::Nat => ("N".to_string(), 3),
        Type::Sum(a, b) => (format!("{} + {}", ty(a, 1), ty(b, 2)), 1),
        Type::Prod(a, b) => (format!("{} * {}", ty(a, 2), ty(b, 3)), 2),
        Type::Fun(a, d, b) => (
            format!("{} -[{}]> {}", ty(a, 1), pretty_exc_context(d), ty(b, 0)),
            0,
        ),
    };
    if own < prec {
        format!("({s})")
    } else {
        s
    }
}

pub fn pretty_exc_context(d: &ExcContext) -> String {
    d.entries
        .iter()
        .map(|e| format!("{}:{}^{}", e.name, pretty_type(&e.payload), e.tag))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn pretty_value(v: &Value) -> String {
    if let Some(n) = v.as_nat() {
        return n.to_string();
    }
    match &v.kind {
        ValueKind::Var(x) => x.clone(),
        ValueKind::Star => "*".to_string(),
        ValueKind::Prim(op, a) => format!("{op}({})", pretty_value(a)),
        ValueKind::Inl(a, None) => format!("inl {}", pretty_value(a)),
        ValueKind::Inr(a, None) => format!("inr {}", pretty_value(a)),
        ValueKind::Inl(a, Some(t)) => format!("(inl {} : {})", pretty_value(a), pretty_type(t)),
        ValueKind::Inr(a, Some(t)) => format!("(inr {} : {})", pretty_value(a), pretty_type(t)),
        ValueKind::Pair(a, b) => format!("({}, {})", pretty_value(a), pretty_value(b)),
        ValueKind::Lambda(l) => {
            let ret = l
                .ret_ty
                .as_ref()
                .map(|t| format!(" : {}", pretty_type(t)))
                .unwrap_or_default();
            format!(
                "(fun ({}:{})[{}]{} => {})",
                l.param,
                pretty_type(&l.param_ty),
                pretty_exc_context(&l.exc),
                ret,
                pretty_comp(&l.body)
            )
        }
    }
}

pub fn pretty_comp(c: &Comp) -> String {
    let v = pretty_value;
    match &c.kind {
        CompKind::Ret(x) => format!("ret {}", v(x)),
        CompKind::Init(x) => format!("init {}", v(x)),
        CompKind::Raise(e, x) => format!("raise_{e} {}", v(x)),
        CompKind::App(f, x) => format!("{} {}", v(f), v(x)),
        CompKind::Call { op, arg } => format!("{op}({})", v(arg)),
        CompKind::Do {
            var,
            ann,
            bound,
            body,
        } => {
            let ann = ann
                .as_ref()
                .map(|t| format!(" : {}", pretty_type(t)))
                .unwrap_or_default();
            format!("do {var}{ann} <- {}; {}", inner(bound), pretty_comp(body))
        }
        CompKind::Seq(p, q) => format!("do {}; {}", inner(p), pretty_comp(q)),
        CompKind::GCase {
            op,
            arg,
            left,
            left_body,
            right,
            right_body,
        } => format!(
            "gcase {op}({}) of inl {left} => {} | inr {right} => {}",
            v(arg),
            inner(left_body),
            pretty_comp(right_body)
        ),
        CompKind::Case {
            scrut,
            left,
            left_body,
            right,
            right_body,
        } => format!(
            "case {} of inl {left} => {} | inr {right} => {}",
            v(scrut),
            inner(left_body),
            pretty_comp(right_body)
        ),
        CompKind::PCase {
            scrut,
            fst,
            snd,
            body,
        } => {
            format!(
                "pcase {} of ({fst}, {snd}) => {}",
                v(scrut),
                pretty_comp(body)
            )
        }
        CompKind::Handle {
            exc,
            ty,
            body,
            var,
            handler,
        } => {
            let binder = if var == exc {
                String::new()
            } else {
                format!("{var} => ")
            };
            format!(
                "handle {exc}:{} in {} with {binder}{}",
                pretty_type(ty),
                inner(body),
                pretty_comp(handler)
            )
        }
        CompKind::HandleIt {
            init,
            exc,
            ty,
            var,
            body,
        } => {
            let alias = if var == exc {
                String::new()
            } else {
                format!(" as {var}")
            };
            format!(
                "handleit {exc}:{}{alias} = {} in {}",
                pretty_type(ty),
                v(init),
                pretty_comp(body)
            )
        }
        CompKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            format!(
                "if {} then {} else {}",
                v(cond),
                inner(then_branch),
                pretty_comp(else_branch)
            )
        }
        CompKind::Guard { op, arg, body } => format!("{op}({}) & {}", v(arg), pretty_comp(body)),
        CompKind::Try {
            var,
            var_ty,
            body,
            cont,
            exc,
            exc_ty,
            handler,
            result_ty,
        } => format!(
            "try {var}:{} <= {} in {} unless {exc}:{} => {} : {}",
            pretty_type(var_ty),
            inner(body),
            inner(cont),
            pretty_type(exc_ty),
            inner(handler),
            pretty_type(result_ty)
        ),
    }
}

/// A computation in a position followed by more syntax; open-ended forms get braces.
fn inner(c: &Comp) -> String {
    match &c.kind {
        CompKind::Ret(_)
        | CompKind::Init(_)
        | CompKind::Raise(..)
        | CompKind::App(..)
        | CompKind::Call { .. } => pretty_comp(c),
        _ => format!("{{ {} }}", pretty_comp(c)),
    }
}

pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for d in p.signature.user_decls() {
        match &d.kind {
            SigKind::Value { arg, result } => {
                out += &format!(
                    "value {} : {} -> {}\n",
                    d.name,
                    pretty_type(arg),
                    pretty_type(result)
                )
            }
            SigKind::Effect {
                arg,
                result,
                guarded,
            } => {
                out += &format!(
                    "effect {} : {} -> {} [{}]\n",
                    d.name,
                    pretty_type(arg),
                    pretty_type(result),
                    pretty_type(guarded)
                )
            }
        }
    }
    if !p.exceptions.is_empty() {
        out += &format!("exceptions {}\n", pretty_exc_context(&p.exceptions));
    }
    out += &pretty_comp(&p.main);
    out.push('\n');
    out
}
