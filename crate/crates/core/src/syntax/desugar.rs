//! Elimination of surface sugar into the core calculus.

use super::{
    free_vars_comp, fresh_name, Comp, CompKind, Lambda, Program, SigKind, Signature, Type, Value,
    ValueKind,
};

pub fn desugar_program(p: &Program) -> Program {
    Program {
        signature: p.signature.clone(),
        exceptions: p.exceptions.clone(),
        main: desugar(&p.main, &p.signature),
    }
}

/// Rewrites every sugar node. Operation calls are resolved against `sig`.
pub fn desugar(c: &Comp, sig: &Signature) -> Comp {
    let d = |p: &Comp| Box::new(desugar(p, sig));
    let dv = |v: &Value| desugar_value(v, sig);
    let kind = match &c.kind {
        CompKind::Ret(v) => CompKind::Ret(dv(v)),
        CompKind::Init(v) => CompKind::Init(dv(v)),
        CompKind::Raise(e, v) => CompKind::Raise(e.clone(), dv(v)),
        CompKind::App(f, a) => CompKind::App(dv(f), dv(a)),
        CompKind::Do {
            var,
            ann,
            bound,
            body,
        } => CompKind::Do {
            var: var.clone(),
            ann: ann.clone(),
            bound: d(bound),
            body: d(body),
        },
        CompKind::GCase {
            op,
            arg,
            left,
            left_body,
            right,
            right_body,
        } => CompKind::GCase {
            op: op.clone(),
            arg: dv(arg),
            left: left.clone(),
            left_body: d(left_body),
            right: right.clone(),
            right_body: d(right_body),
        },
        CompKind::Case {
            scrut,
            left,
            left_body,
            right,
            right_body,
        } => CompKind::Case {
            scrut: dv(scrut),
            left: left.clone(),
            left_body: d(left_body),
            right: right.clone(),
            right_body: d(right_body),
        },
        CompKind::PCase {
            scrut,
            fst,
            snd,
            body,
        } => CompKind::PCase {
            scrut: dv(scrut),
            fst: fst.clone(),
            snd: snd.clone(),
            body: d(body),
        },
        CompKind::Handle {
            exc,
            ty,
            body,
            var,
            handler,
        } => CompKind::Handle {
            exc: exc.clone(),
            ty: ty.clone(),
            body: d(body),
            var: var.clone(),
            handler: d(handler),
        },
        CompKind::HandleIt {
            init,
            exc,
            ty,
            var,
            body,
        } => CompKind::HandleIt {
            init: dv(init),
            exc: exc.clone(),
            ty: ty.clone(),
            var: var.clone(),
            body: d(body),
        },
        CompKind::If {
            cond,
            then_branch,
            else_branch,
        } => CompKind::Case {
            scrut: dv(cond),
            left: "_".into(),
            left_body: d(then_branch),
            right: "_".into(),
            right_body: d(else_branch),
        },
        CompKind::Guard { op, arg, body } => CompKind::GCase {
            op: op.clone(),
            arg: dv(arg),
            left: "x".into(),
            left_body: Box::new(Comp::init(Value::var("x"))),
            right: "_".into(),
            right_body: d(body),
        },
        CompKind::Call { op, arg } => return call(op, dv(arg), sig).with_span(c.span),
        CompKind::Seq(p, q) => CompKind::Do {
            var: "_".into(),
            ann: None,
            bound: d(p),
            body: d(q),
        },
        CompKind::Try {
            var,
            var_ty,
            body,
            cont,
            exc,
            exc_ty,
            handler,
            result_ty,
        } => {
            // do z <- handle e in (do x <- p; ret inl x) with (do y <- r; ret inr y);
            // case z of inl x => q | inr y => ret y
            let sum = Type::sum(var_ty.clone(), result_ty.clone());
            let z = fresh_name("z", &free_vars_comp(cont));
            let guarded_body = Comp::bind(
                var,
                desugar(body, sig),
                Comp::ret(Value::inl(Value::var(var), Some(sum.clone()))),
            );
            let handler = Comp::bind(
                "y",
                desugar(handler, sig),
                Comp::ret(Value::inr(Value::var("y"), Some(sum))),
            );
            let scrut = Comp::handle(exc, exc_ty.clone(), guarded_body, exc, handler);
            let dispatch = Comp::case(
                Value::var(&z),
                var,
                desugar(cont, sig),
                "y",
                Comp::ret(Value::var("y")),
            );
            CompKind::Do {
                var: z,
                ann: None,
                bound: Box::new(scrut),
                body: Box::new(dispatch),
            }
        }
    };
    Comp { kind, span: c.span }
}

/// A bare call `f(v)`. When one outcome type of `f` is empty the call
/// returns the other one directly; otherwise it returns the tagged sum.
fn call(op: &str, arg: Value, sig: &Signature) -> Comp {
    let ret = |x: &str| Comp::ret(Value::var(x));
    let init = |x: &str| Comp::init(Value::var(x));
    match sig.lookup(op) {
        Some(SigKind::Effect {
            guarded: Type::Zero,
            ..
        }) => Comp::gcase(op, arg, "x", ret("x"), "y", init("y")),
        Some(SigKind::Effect {
            result: Type::Zero, ..
        }) => Comp::gcase(op, arg, "x", init("x"), "y", ret("y")),
        Some(SigKind::Effect {
            result, guarded, ..
        }) => {
            let sum = Type::sum(result.clone(), guarded.clone());
            Comp::gcase(
                op,
                arg,
                "x",
                Comp::ret(Value::inl(Value::var("x"), Some(sum.clone()))),
                "y",
                Comp::ret(Value::inr(Value::var("y"), Some(sum))),
            )
        }
        _ => Comp::gcase(
            op,
            arg,
            "x",
            Comp::ret(Value::inl(Value::var("x"), None)),
            "y",
            Comp::ret(Value::inr(Value::var("y"), None)),
        ),
    }
}

fn desugar_value(v: &Value, sig: &Signature) -> Value {
    let kind = match &v.kind {
        ValueKind::Var(_) | ValueKind::Star => return v.clone(),
        ValueKind::Prim(op, a) => ValueKind::Prim(op.clone(), Box::new(desugar_value(a, sig))),
        ValueKind::Inl(a, t) => ValueKind::Inl(Box::new(desugar_value(a, sig)), t.clone()),
        ValueKind::Inr(a, t) => ValueKind::Inr(Box::new(desugar_value(a, sig)), t.clone()),
        ValueKind::Pair(a, b) => ValueKind::Pair(
            Box::new(desugar_value(a, sig)),
            Box::new(desugar_value(b, sig)),
        ),
        ValueKind::Lambda(l) => ValueKind::Lambda(Box::new(Lambda {
            body: desugar(&l.body, sig),
            ..(**l).clone()
        })),
    };
    Value { kind, span: v.span }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{alpha_eq_comp, parse_comp, parse_program};

    fn core(src: &str) -> Comp {
        desugar(&parse_comp(src).unwrap(), &Signature::builtin())
    }

    #[test]
    fn guard_becomes_gcase() {
        assert_eq!(
            core("put(3) & ret *"),
            Comp::put_then(Value::nat(3), Comp::ret(Value::star()))
        );
    }

    #[test]
    fn pred_call_returns_its_result() {
        let c = core("pred(2)");
        assert_eq!(
            c,
            Comp::gcase(
                "pred",
                Value::nat(2),
                "x",
                Comp::ret(Value::var("x")),
                "y",
                Comp::init(Value::var("y"))
            )
        );
    }

    #[test]
    fn sequence_and_if() {
        let c = core("do put(1); if inl * then ret 1 else ret 2");
        assert!(c.is_core());
        assert!(matches!(c.kind, CompKind::Do { ref var, .. } if var == "_"));
    }

    #[test]
    fn try_expands_through_handle() {
        let c = core("try x:N <= raise_e 1 in ret x unless e:N => ret 0 : N");
        assert!(c.is_core());
        let expected = parse_comp(
            "do z <- handle e:N in do x <- raise_e 1; ret (inl x : N + N) \
             with do y <- ret 0; ret (inr y : N + N); \
             case z of inl x => ret x | inr y => ret y",
        )
        .unwrap();
        assert!(alpha_eq_comp(&c, &expected), "{c}");
    }

    #[test]
    fn lambda_bodies_are_desugared() {
        let p = parse_program("ret (fun (n:N)[] : 1 => put(n) & ret *)").unwrap();
        assert!(p.main.is_core());
    }
}
