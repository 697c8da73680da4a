//! Bidirectional checker for value and computation judgements with
//! guarded/unguarded exception tags.
//!
//! Computations whose type is unconstrained (`raise`, `init` and terms built
//! only from them) stay open until the context fixes a type; an open `do`
//! binder and an open main term default to `0`.

mod derivation;
mod error;
mod replay;

pub use derivation::{CompDerivation, CompRule, ValueDerivation, ValueRule, VarContext};
pub use error::{Diagnostic, ErrorCode, TypeError};
pub use replay::{replay, ReplayError};

use crate::syntax::{
    desugar, Comp, CompKind, ExcContext, Program, SigKind, Signature, Span, Tag, Type, Value,
    ValueKind,
};

type TResult<T> = Result<T, TypeError>;

/// A checked program: the desugared program, its result type and the
/// derivation of its main term.
#[derive(Clone, Debug)]
pub struct TypedProgram {
    pub program: Program,
    pub ty: Type,
    pub derivation: CompDerivation,
}

pub fn check_program(prog: &Program) -> TResult<TypedProgram> {
    check_program_at(prog, None)
}

/// Checks a program against a known result type, when given.
pub fn check_program_at(prog: &Program, expected: Option<&Type>) -> TResult<TypedProgram> {
    if let Some(dup) = prog.exceptions.duplicate() {
        return Err(TypeError::new(
            ErrorCode::ExcContextMismatch,
            prog.main.span,
            format!("exception `{dup}` declared twice"),
        ));
    }
    let main = desugar(&prog.main, &prog.signature);
    let checker = Checker::new(&prog.signature);
    let mut derivation = checker.comp(&prog.exceptions, &VarContext::new(), &main, expected)?;
    derivation.close(&Type::Zero);
    let program = Program {
        main,
        ..prog.clone()
    };
    Ok(TypedProgram {
        program,
        ty: derivation.ty.clone(),
        derivation,
    })
}

pub struct Checker<'s> {
    sig: &'s Signature,
}

fn mismatch(span: Span, msg: String) -> TypeError {
    TypeError::new(ErrorCode::TypeMismatch, span, msg)
}

impl<'s> Checker<'s> {
    pub fn new(sig: &'s Signature) -> Self {
        Checker { sig }
    }

    pub fn infer_value(&self, gamma: &VarContext, v: &Value) -> TResult<ValueDerivation> {
        self.value(gamma, v, None)
    }

    pub fn check_value(
        &self,
        gamma: &VarContext,
        v: &Value,
        ty: &Type,
    ) -> TResult<ValueDerivation> {
        self.value(gamma, v, Some(ty))
    }

    /// Checks `delta | gamma |- p : ty`.
    pub fn check_comp(
        &self,
        delta: &ExcContext,
        gamma: &VarContext,
        p: &Comp,
        ty: &Type,
    ) -> TResult<CompDerivation> {
        self.comp(delta, gamma, p, Some(ty))
    }

    /// Synthesizes a type for `p`, or `None` when any type would do.
    pub fn synth_comp(
        &self,
        delta: &ExcContext,
        gamma: &VarContext,
        p: &Comp,
    ) -> TResult<Option<Type>> {
        let d = self.comp(delta, gamma, p, None)?;
        Ok(if d.open { None } else { Some(d.ty) })
    }

    fn value(
        &self,
        gamma: &VarContext,
        v: &Value,
        expected: Option<&Type>,
    ) -> TResult<ValueDerivation> {
        let node = |rule, ty, values, body| ValueDerivation {
            rule,
            gamma: gamma.clone(),
            ty,
            values,
            body,
        };
        let d = match &v.kind {
            ValueKind::Var(x) => match gamma.lookup(x) {
                Some(t) => node(ValueRule::Var, t.clone(), vec![], None),
                None => {
                    return Err(TypeError::new(
                        ErrorCode::UnboundVar,
                        v.span,
                        format!("unbound variable `{x}`"),
                    ))
                }
            },
            ValueKind::Star => node(ValueRule::Unit, Type::One, vec![], None),
            ValueKind::Prim(f, a) => match self.sig.lookup(f) {
                Some(SigKind::Value { arg, result }) => {
                    let da = self.value(gamma, a, Some(arg))?;
                    node(ValueRule::Sig, result.clone(), vec![da], None)
                }
                Some(SigKind::Effect { .. }) => {
                    return Err(TypeError::new(
                        ErrorCode::SignatureMismatch,
                        v.span,
                        format!("`{f}` is an effect, not a value operation"),
                    ))
                }
                None => {
                    return Err(TypeError::new(
                        ErrorCode::SignatureMismatch,
                        v.span,
                        format!("undeclared operation `{f}`"),
                    ))
                }
            },
            ValueKind::Inl(a, ann) | ValueKind::Inr(a, ann) => {
                let left = matches!(v.kind, ValueKind::Inl(..));
                let ty = match (ann, expected) {
                    (Some(t), Some(e)) if t != e => {
                        return Err(mismatch(
                            v.span,
                            format!("ascription `{t}` conflicts with expected `{e}`"),
                        ))
                    }
                    (Some(t), _) | (None, Some(t)) => t.clone(),
                    (None, None) => return Err(mismatch(
                        v.span,
                        format!(
                            "cannot determine the type of `{v}`; add an ascription `(v : A + B)`"
                        ),
                    )),
                };
                let Type::Sum(l, r) = &ty else {
                    return Err(mismatch(
                        v.span,
                        format!("injection `{v}` at non-sum type `{ty}`"),
                    ));
                };
                let da = self.value(gamma, a, Some(if left { l } else { r }))?;
                let rule = if left { ValueRule::Inl } else { ValueRule::Inr };
                return Ok(node(rule, ty, vec![da], None));
            }
            ValueKind::Pair(a, b) => {
                let (ea, eb) = match expected {
                    Some(Type::Prod(x, y)) => (Some(&**x), Some(&**y)),
                    _ => (None, None),
                };
                let da = self.value(gamma, a, ea)?;
                let db = self.value(gamma, b, eb)?;
                let ty = Type::prod(da.ty.clone(), db.ty.clone());
                node(ValueRule::Prod, ty, vec![da, db], None)
            }
            ValueKind::Lambda(l) => {
                if let Some(dup) = l.exc.duplicate() {
                    return Err(TypeError::new(
                        ErrorCode::ExcContextMismatch,
                        v.span,
                        format!("exception `{dup}` listed twice in function context"),
                    ));
                }
                let from_expected = match expected {
                    Some(Type::Fun(_, _, b)) => Some(&**b),
                    _ => None,
                };
                let ret = l.ret_ty.as_ref().or(from_expected);
                let inner = gamma.extend(&l.param, l.param_ty.clone());
                let body = self.comp(&l.exc, &inner, &l.body, ret)?;
                if body.open {
                    return Err(mismatch(
                        v.span,
                        "cannot determine the function's result type; annotate it with `: B`"
                            .to_string(),
                    ));
                }
                let ty = Type::fun(l.param_ty.clone(), l.exc.clone(), body.ty.clone());
                node(ValueRule::Lambda, ty, vec![], Some(Box::new(body)))
            }
        };
        if let Some(e) = expected {
            if *e != d.ty {
                return Err(self.expected_error(v.span, e, &d.ty));
            }
        }
        Ok(d)
    }

    fn expected_error(&self, span: Span, expected: &Type, found: &Type) -> TypeError {
        if let (Type::Fun(a, d1, b), Type::Fun(a2, d2, b2)) = (expected, found) {
            if a == a2 && b == b2 && d1.erase() == d2.erase() {
                return TypeError::new(
                    ErrorCode::TagMismatch,
                    span,
                    format!("expected `{expected}`, found `{found}`: exception tags differ"),
                );
            }
        }
        mismatch(span, format!("expected `{expected}`, found `{found}`"))
    }

    fn comp(
        &self,
        delta: &ExcContext,
        gamma: &VarContext,
        p: &Comp,
        expected: Option<&Type>,
    ) -> TResult<CompDerivation> {
        let node = |rule, ty: Option<Type>, values, premises| CompDerivation {
            rule,
            delta: delta.clone(),
            gamma: gamma.clone(),
            open: ty.is_none(),
            ty: ty.unwrap_or(Type::Zero),
            values,
            premises,
        };
        // The result type of a polymorphic leaf is whatever is expected.
        let poly = || expected.cloned();
        let d = match &p.kind {
            CompKind::Ret(v) => {
                let dv = self.value(gamma, v, expected)?;
                node(CompRule::Ret, Some(dv.ty.clone()), vec![dv], vec![])
            }
            CompKind::Init(v) => {
                let dv = self.value(gamma, v, Some(&Type::Zero))?;
                node(CompRule::Init, poly(), vec![dv], vec![])
            }
            CompKind::Raise(e, v) => {
                let Some(entry) = delta.lookup(e) else {
                    return Err(TypeError::new(
                        ErrorCode::UnboundExc,
                        p.span,
                        format!("unknown exception `{e}`"),
                    ));
                };
                if entry.tag == Tag::Guarded {
                    return Err(TypeError::new(
                        ErrorCode::GuardedRaise,
                        p.span,
                        format!("exception `{e}` is guarded here; raise it behind an effect guard"),
                    ));
                }
                let dv = self.value(gamma, v, Some(&entry.payload))?;
                node(CompRule::Raise, poly(), vec![dv], vec![])
            }
            CompKind::Do {
                var,
                ann,
                bound,
                body,
            } => {
                let mut dp = self.comp(delta, gamma, bound, ann.as_ref())?;
                dp.close(&Type::Zero);
                let dq = self.comp(delta, &gamma.extend(var, dp.ty.clone()), body, expected)?;
                let ty = (!dq.open).then(|| dq.ty.clone());
                node(CompRule::Do, ty, vec![], vec![dp, dq])
            }
            CompKind::GCase {
                op,
                arg,
                left,
                left_body,
                right,
                right_body,
            } => {
                let Some(SigKind::Effect {
                    arg: a,
                    result: b,
                    guarded: c,
                }) = self.sig.lookup(op)
                else {
                    let what = if self.sig.is_value_op(op) {
                        "a value operation, not an effect"
                    } else {
                        "undeclared"
                    };
                    return Err(TypeError::new(
                        ErrorCode::SignatureMismatch,
                        p.span,
                        format!("`{op}` is {what}"),
                    ));
                };
                let dv = self.value(gamma, arg, Some(a))?;
                let (dl, dr, ty) = self.branches(
                    (delta, &gamma.extend(left, b.clone()), left_body),
                    (
                        &delta.all_unguarded(),
                        &gamma.extend(right, c.clone()),
                        right_body,
                    ),
                    expected,
                )?;
                node(CompRule::GuardedCase, ty, vec![dv], vec![dl, dr])
            }
            CompKind::Case {
                scrut,
                left,
                left_body,
                right,
                right_body,
            } => {
                let dv = self.value(gamma, scrut, None)?;
                let Type::Sum(a, b) = &dv.ty else {
                    return Err(mismatch(
                        scrut.span,
                        format!("case on `{scrut}` of non-sum type `{}`", dv.ty),
                    ));
                };
                let (dl, dr, ty) = self.branches(
                    (delta, &gamma.extend(left, (**a).clone()), left_body),
                    (delta, &gamma.extend(right, (**b).clone()), right_body),
                    expected,
                )?;
                node(CompRule::Case, ty, vec![dv], vec![dl, dr])
            }
            CompKind::PCase {
                scrut,
                fst,
                snd,
                body,
            } => {
                let dv = self.value(gamma, scrut, None)?;
                let Type::Prod(a, b) = &dv.ty else {
                    return Err(mismatch(
                        scrut.span,
                        format!("pcase on `{scrut}` of non-product type `{}`", dv.ty),
                    ));
                };
                let inner = gamma.extend(fst, (**a).clone()).extend(snd, (**b).clone());
                let db = self.comp(delta, &inner, body, expected)?;
                let ty = (!db.open).then(|| db.ty.clone());
                node(CompRule::PairCase, ty, vec![dv], vec![db])
            }
            CompKind::Handle {
                exc,
                ty: e_ty,
                body,
                var,
                handler,
            } => {
                self.fresh_exception(delta, exc, p.span)?;
                let (db, dh, ty) = self.branches(
                    (
                        &delta.extend(exc, e_ty.clone(), Tag::Unguarded),
                        gamma,
                        body,
                    ),
                    (delta, &gamma.extend(var, e_ty.clone()), handler),
                    expected,
                )?;
                node(CompRule::Handle, ty, vec![], vec![db, dh])
            }
            CompKind::HandleIt {
                init,
                exc,
                ty: e_ty,
                var,
                body,
            } => {
                self.fresh_exception(delta, exc, p.span)?;
                let dv = self.value(gamma, init, Some(e_ty))?;
                let inner_delta = delta.extend(exc, e_ty.clone(), Tag::Guarded);
                let db = self.comp(
                    &inner_delta,
                    &gamma.extend(var, e_ty.clone()),
                    body,
                    expected,
                )?;
                let ty = (!db.open).then(|| db.ty.clone());
                node(CompRule::HandleIt, ty, vec![dv], vec![db])
            }
            CompKind::App(f, a) => {
                let df = self.value(gamma, f, None)?;
                let Type::Fun(dom, fdelta, cod) = &df.ty else {
                    return Err(mismatch(
                        f.span,
                        format!("applying `{f}` of non-function type `{}`", df.ty),
                    ));
                };
                if fdelta != delta {
                    let code = if fdelta.erase() == delta.erase() {
                        ErrorCode::TagMismatch
                    } else {
                        ErrorCode::ExcContextMismatch
                    };
                    return Err(TypeError::new(
                        code,
                        p.span,
                        format!("function raises [{fdelta}] but the context is [{delta}]"),
                    ));
                }
                let da = self.value(gamma, a, Some(dom))?;
                node(CompRule::App, Some((**cod).clone()), vec![df, da], vec![])
            }
            CompKind::If { .. }
            | CompKind::Guard { .. }
            | CompKind::Call { .. }
            | CompKind::Seq(..)
            | CompKind::Try { .. } => {
                return self.comp(delta, gamma, &desugar(p, self.sig), expected);
            }
        };
        if let (Some(e), false) = (expected, d.open) {
            if *e != d.ty {
                return Err(self.expected_error(p.span, e, &d.ty));
            }
        }
        Ok(d)
    }

    /// Two premises that share the conclusion's type.
    #[allow(clippy::type_complexity)]
    fn branches(
        &self,
        (d1, g1, p1): (&ExcContext, &VarContext, &Comp),
        (d2, g2, p2): (&ExcContext, &VarContext, &Comp),
        expected: Option<&Type>,
    ) -> TResult<(CompDerivation, CompDerivation, Option<Type>)> {
        let mut l = self.comp(d1, g1, p1, expected)?;
        let known = if l.open {
            expected.cloned()
        } else {
            Some(l.ty.clone())
        };
        let r = self.comp(d2, g2, p2, known.as_ref())?;
        if l.open && !r.open {
            l.close(&r.ty);
        }
        let ty = if r.open { None } else { Some(r.ty.clone()) };
        Ok((l, r, ty))
    }

    fn fresh_exception(&self, delta: &ExcContext, exc: &str, span: Span) -> TResult<()> {
        if delta.contains(exc) {
            return Err(TypeError::new(
                ErrorCode::ExcContextMismatch,
                span,
                format!("exception `{exc}` is already in scope"),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, parse_type};

    fn check(src: &str) -> TResult<TypedProgram> {
        check_program(&parse_program(src).unwrap())
    }

    fn code(src: &str) -> ErrorCode {
        check(src).unwrap_err().code
    }

    #[test]
    fn value_rules() {
        let sig = Signature::builtin();
        let c = Checker::new(&sig);
        let g = VarContext::new().extend("x", Type::Nat);
        assert_eq!(c.infer_value(&g, &Value::var("x")).unwrap().ty, Type::Nat);
        let asc = Value::inl(Value::star(), Some(parse_type("1 + N").unwrap()));
        assert_eq!(
            c.infer_value(&g, &asc).unwrap().ty,
            parse_type("1 + N").unwrap()
        );
        assert!(c.infer_value(&g, &Value::inl(Value::star(), None)).is_err());
    }

    #[test]
    fn raising_a_guarded_exception_is_rejected() {
        assert_eq!(
            code("handleit e:1 = * in raise_e *"),
            ErrorCode::GuardedRaise
        );
    }

    #[test]
    fn raise_behind_put_is_accepted() {
        let t = check("handleit e:1 = * in put(zero) & raise_e *").unwrap();
        assert_eq!(t.ty, Type::Zero);
    }

    #[test]
    fn countdown_types_at_unit() {
        let t = check(
            "handleit e:N = 3 in do z <- pred(e); \
             case z of inl _ => ret * | inr m => put(m) & raise_e m",
        )
        .unwrap();
        assert_eq!(t.ty, Type::One);
        replay(&t.program, &t.derivation).unwrap();
    }

    #[test]
    fn undeclared_names() {
        assert_eq!(code("foo(1)"), ErrorCode::SignatureMismatch);
        assert_eq!(code("raise_e *"), ErrorCode::UnboundExc);
        assert_eq!(code("ret x"), ErrorCode::UnboundVar);
        assert_eq!(code("ret put(1)"), ErrorCode::SignatureMismatch);
    }

    #[test]
    fn header_declares_main_exceptions() {
        let t = check("exceptions e:N^u\ndo x : N <- raise_e 1; put(x) & ret *").unwrap();
        assert_eq!(t.ty, Type::One);
    }

    #[test]
    fn application_requires_exact_context() {
        let ok = "exceptions e:1^u\ndo f <- ret (fun (x:N)[e:1^u] : N => raise_e *); f 1";
        assert!(check(ok).is_ok());
        let tags = "exceptions e:1^g\ndo f <- ret (fun (x:N)[e:1^u] : N => raise_e *); f 1";
        assert_eq!(code(tags), ErrorCode::TagMismatch);
        let missing = "do f <- ret (fun (x:N)[e:1^u] : N => raise_e *); f 1";
        assert_eq!(code(missing), ErrorCode::ExcContextMismatch);
    }

    #[test]
    fn lambda_needs_a_result_type_when_open() {
        assert_eq!(
            code("ret (fun (x:N)[e:1^u] => raise_e *)"),
            ErrorCode::TypeMismatch
        );
    }

    #[test]
    fn shadowing_an_exception_is_rejected() {
        assert_eq!(
            code("handle e:1 in handle e:1 in ret * with ret * with ret *"),
            ErrorCode::ExcContextMismatch
        );
    }

    #[test]
    fn case_branches_agree() {
        assert_eq!(
            code("case (inl * : 1 + 1) of inl a => ret 1 | inr b => ret *"),
            ErrorCode::TypeMismatch
        );
        let t =
            check("exceptions e:1^u\ncase (inl * : 1 + 1) of inl a => raise_e * | inr b => ret 2")
                .unwrap();
        assert_eq!(t.ty, Type::Nat);
        replay(&t.program, &t.derivation).unwrap();
    }

    #[test]
    fn errors_carry_positions() {
        let e = check("do x <- ret *;\n  raise_q x").unwrap_err();
        assert_eq!((e.span.start.line, e.span.start.col), (2, 3));
        let d = Diagnostic::from(&e);
        assert_eq!(d.code, "UnboundExc");
    }
}
