//! Re-verifies a derivation node by node against the typing rules, without
//! using the checker. Each computation node must be an instance of exactly
//! the rule matching the term's head constructor.

use crate::syntax::{
    Comp, CompKind, ExcContext, Program, SigKind, Signature, Tag, Type, Value, ValueKind,
};

use super::{CompDerivation, CompRule, ValueDerivation, ValueRule, VarContext};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid derivation at `{term}`: {reason}")]
pub struct ReplayError {
    pub term: String,
    pub reason: String,
}

pub fn replay(prog: &Program, d: &CompDerivation) -> Result<(), ReplayError> {
    let r = Replayer {
        sig: &prog.signature,
    };
    if d.delta != prog.exceptions || !d.gamma.is_empty() {
        return Err(fail(
            &prog.main,
            "root judgement is not under the declared exceptions and empty variables",
        ));
    }
    r.comp(&prog.main, d)
}

fn fail(term: &impl std::fmt::Display, reason: impl Into<String>) -> ReplayError {
    let mut term = term.to_string();
    if term.len() > 80 {
        let mut cut = 77;
        while !term.is_char_boundary(cut) {
            cut -= 1;
        }
        term.truncate(cut);
        term.push_str("...");
    }
    ReplayError {
        term,
        reason: reason.into(),
    }
}

struct Replayer<'s> {
    sig: &'s Signature,
}

fn extended(delta: &ExcContext, name: &str, ty: &Type, tag: Tag) -> ExcContext {
    let mut entries = delta.entries.clone();
    entries.push(crate::syntax::ExcEntry {
        name: name.to_string(),
        payload: ty.clone(),
        tag,
    });
    ExcContext { entries }
}

impl<'s> Replayer<'s> {
    fn shape(
        &self,
        p: &Comp,
        d: &CompDerivation,
        rule: CompRule,
        nv: usize,
        np: usize,
    ) -> Result<(), ReplayError> {
        if d.rule != rule {
            return Err(fail(
                p,
                format!("rule {:?} does not match the term", d.rule),
            ));
        }
        if d.values.len() != nv || d.premises.len() != np {
            return Err(fail(p, "wrong number of premises"));
        }
        for v in &d.values {
            if v.gamma != d.gamma {
                return Err(fail(p, "value premise under a different variable context"));
            }
        }
        Ok(())
    }

    /// A computation premise that keeps the conclusion's type.
    fn same_type(
        &self,
        p: &Comp,
        d: &CompDerivation,
        prem: &CompDerivation,
    ) -> Result<(), ReplayError> {
        if prem.ty != d.ty {
            return Err(fail(
                p,
                format!(
                    "premise type `{}` differs from conclusion `{}`",
                    prem.ty, d.ty
                ),
            ));
        }
        Ok(())
    }

    fn contexts(
        &self,
        p: &Comp,
        prem: &CompDerivation,
        delta: &ExcContext,
        gamma: &VarContext,
    ) -> Result<(), ReplayError> {
        if prem.delta != *delta {
            return Err(fail(
                p,
                format!(
                    "premise exception context [{}] should be [{delta}]",
                    prem.delta
                ),
            ));
        }
        if prem.gamma != *gamma {
            return Err(fail(p, "premise variable context is wrong"));
        }
        Ok(())
    }

    fn comp(&self, p: &Comp, d: &CompDerivation) -> Result<(), ReplayError> {
        let (delta, gamma) = (&d.delta, &d.gamma);
        match &p.kind {
            CompKind::Ret(v) => {
                self.shape(p, d, CompRule::Ret, 1, 0)?;
                self.value(v, &d.values[0])?;
                if d.values[0].ty != d.ty {
                    return Err(fail(p, "returned value has the wrong type"));
                }
            }
            CompKind::Init(v) => {
                self.shape(p, d, CompRule::Init, 1, 0)?;
                self.value(v, &d.values[0])?;
                if d.values[0].ty != Type::Zero {
                    return Err(fail(p, "init of a non-empty type"));
                }
            }
            CompKind::Raise(e, v) => {
                self.shape(p, d, CompRule::Raise, 1, 0)?;
                self.value(v, &d.values[0])?;
                match delta.lookup(e) {
                    Some(entry)
                        if entry.tag == Tag::Unguarded && entry.payload == d.values[0].ty => {}
                    _ => {
                        return Err(fail(
                            p,
                            format!("no unguarded `{e}` of type `{}`", d.values[0].ty),
                        ))
                    }
                }
            }
            CompKind::Do {
                var,
                ann,
                bound,
                body,
            } => {
                self.shape(p, d, CompRule::Do, 0, 2)?;
                let (dp, dq) = (&d.premises[0], &d.premises[1]);
                self.contexts(p, dp, delta, gamma)?;
                self.contexts(p, dq, delta, &gamma.extend(var, dp.ty.clone()))?;
                self.same_type(p, d, dq)?;
                if ann.as_ref().is_some_and(|a| *a != dp.ty) {
                    return Err(fail(p, "binder annotation disagrees"));
                }
                self.comp(bound, dp)?;
                self.comp(body, dq)?;
            }
            CompKind::GCase {
                op,
                arg,
                left,
                left_body,
                right,
                right_body,
            } => {
                self.shape(p, d, CompRule::GuardedCase, 1, 2)?;
                let Some(SigKind::Effect {
                    arg: a,
                    result: b,
                    guarded: c,
                }) = self.sig.lookup(op)
                else {
                    return Err(fail(p, format!("`{op}` is not an effect")));
                };
                self.value(arg, &d.values[0])?;
                if d.values[0].ty != *a {
                    return Err(fail(p, "effect argument has the wrong type"));
                }
                let (dl, dr) = (&d.premises[0], &d.premises[1]);
                self.contexts(p, dl, delta, &gamma.extend(left, b.clone()))?;
                // The guarded branch may retag exceptions freely.
                if dr.delta.erase() != delta.erase() || dr.gamma != gamma.extend(right, c.clone()) {
                    return Err(fail(p, "guarded branch contexts are wrong"));
                }
                self.same_type(p, d, dl)?;
                self.same_type(p, d, dr)?;
                self.comp(left_body, dl)?;
                self.comp(right_body, dr)?;
            }
            CompKind::Case {
                scrut,
                left,
                left_body,
                right,
                right_body,
            } => {
                self.shape(p, d, CompRule::Case, 1, 2)?;
                self.value(scrut, &d.values[0])?;
                let Type::Sum(a, b) = &d.values[0].ty else {
                    return Err(fail(p, "scrutinee is not a sum"));
                };
                let (dl, dr) = (&d.premises[0], &d.premises[1]);
                self.contexts(p, dl, delta, &gamma.extend(left, (**a).clone()))?;
                self.contexts(p, dr, delta, &gamma.extend(right, (**b).clone()))?;
                self.same_type(p, d, dl)?;
                self.same_type(p, d, dr)?;
                self.comp(left_body, dl)?;
                self.comp(right_body, dr)?;
            }
            CompKind::PCase {
                scrut,
                fst,
                snd,
                body,
            } => {
                self.shape(p, d, CompRule::PairCase, 1, 1)?;
                self.value(scrut, &d.values[0])?;
                let Type::Prod(a, b) = &d.values[0].ty else {
                    return Err(fail(p, "scrutinee is not a pair"));
                };
                let db = &d.premises[0];
                self.contexts(
                    p,
                    db,
                    delta,
                    &gamma.extend(fst, (**a).clone()).extend(snd, (**b).clone()),
                )?;
                self.same_type(p, d, db)?;
                self.comp(body, db)?;
            }
            CompKind::Handle {
                exc,
                ty,
                body,
                var,
                handler,
            } => {
                self.shape(p, d, CompRule::Handle, 0, 2)?;
                if delta.contains(exc) {
                    return Err(fail(p, "handled exception already in scope"));
                }
                let (db, dh) = (&d.premises[0], &d.premises[1]);
                self.contexts(p, db, &extended(delta, exc, ty, Tag::Unguarded), gamma)?;
                self.contexts(p, dh, delta, &gamma.extend(var, ty.clone()))?;
                self.same_type(p, d, db)?;
                self.same_type(p, d, dh)?;
                self.comp(body, db)?;
                self.comp(handler, dh)?;
            }
            CompKind::HandleIt {
                init,
                exc,
                ty,
                var,
                body,
            } => {
                self.shape(p, d, CompRule::HandleIt, 1, 1)?;
                if delta.contains(exc) {
                    return Err(fail(p, "iterated exception already in scope"));
                }
                self.value(init, &d.values[0])?;
                if d.values[0].ty != *ty {
                    return Err(fail(p, "initial value has the wrong type"));
                }
                let db = &d.premises[0];
                self.contexts(
                    p,
                    db,
                    &extended(delta, exc, ty, Tag::Guarded),
                    &gamma.extend(var, ty.clone()),
                )?;
                self.same_type(p, d, db)?;
                self.comp(body, db)?;
            }
            CompKind::App(f, a) => {
                self.shape(p, d, CompRule::App, 2, 0)?;
                self.value(f, &d.values[0])?;
                self.value(a, &d.values[1])?;
                let want = Type::fun(d.values[1].ty.clone(), delta.clone(), d.ty.clone());
                if d.values[0].ty != want {
                    return Err(fail(
                        p,
                        format!("function type `{}` should be `{want}`", d.values[0].ty),
                    ));
                }
            }
            _ => return Err(fail(p, "surface syntax in a checked program")),
        }
        Ok(())
    }

    fn value(&self, v: &Value, d: &ValueDerivation) -> Result<(), ReplayError> {
        let arity = |rule: ValueRule, n: usize| -> Result<(), ReplayError> {
            if d.rule != rule
                || d.values.len() != n
                || (d.body.is_some() != (rule == ValueRule::Lambda))
            {
                return Err(fail(
                    v,
                    format!("rule {:?} does not match the value", d.rule),
                ));
            }
            if d.values.iter().any(|p| p.gamma != d.gamma) {
                return Err(fail(v, "premise under a different variable context"));
            }
            Ok(())
        };
        match &v.kind {
            ValueKind::Var(x) => {
                arity(ValueRule::Var, 0)?;
                if d.gamma.lookup(x) != Some(&d.ty) {
                    return Err(fail(v, "variable type not in context"));
                }
            }
            ValueKind::Star => {
                arity(ValueRule::Unit, 0)?;
                if d.ty != Type::One {
                    return Err(fail(v, "unit at non-unit type"));
                }
            }
            ValueKind::Prim(f, a) => {
                arity(ValueRule::Sig, 1)?;
                let Some(SigKind::Value { arg, result }) = self.sig.lookup(f) else {
                    return Err(fail(v, "not a value operation"));
                };
                self.value(a, &d.values[0])?;
                if d.values[0].ty != *arg || d.ty != *result {
                    return Err(fail(v, "operation used at the wrong type"));
                }
            }
            ValueKind::Inl(a, ann) | ValueKind::Inr(a, ann) => {
                let left = matches!(v.kind, ValueKind::Inl(..));
                arity(if left { ValueRule::Inl } else { ValueRule::Inr }, 1)?;
                self.value(a, &d.values[0])?;
                let Type::Sum(l, r) = &d.ty else {
                    return Err(fail(v, "injection at non-sum type"));
                };
                let side = if left { l } else { r };
                if **side != d.values[0].ty || ann.as_ref().is_some_and(|t| *t != d.ty) {
                    return Err(fail(v, "injected value has the wrong type"));
                }
            }
            ValueKind::Pair(a, b) => {
                arity(ValueRule::Prod, 2)?;
                self.value(a, &d.values[0])?;
                self.value(b, &d.values[1])?;
                if d.ty != Type::prod(d.values[0].ty.clone(), d.values[1].ty.clone()) {
                    return Err(fail(v, "pair type is wrong"));
                }
            }
            ValueKind::Lambda(l) => {
                arity(ValueRule::Lambda, 0)?;
                let body = d.body.as_ref().expect("checked by arity");
                if body.delta != l.exc || body.gamma != d.gamma.extend(&l.param, l.param_ty.clone())
                {
                    return Err(fail(v, "function body contexts are wrong"));
                }
                if l.ret_ty.as_ref().is_some_and(|t| *t != body.ty) {
                    return Err(fail(v, "result annotation disagrees"));
                }
                if d.ty != Type::fun(l.param_ty.clone(), l.exc.clone(), body.ty.clone()) {
                    return Err(fail(v, "function type is wrong"));
                }
                self.comp(&l.body, body)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;
    use crate::typing::check_program;

    #[test]
    fn tampered_derivations_are_caught() {
        let t = check_program(&parse_program("handleit e:1 = * in put(0) & raise_e *").unwrap())
            .unwrap();
        replay(&t.program, &t.derivation).unwrap();

        // Retag the loop exception to `u` in the body's context.
        let mut bad = t.derivation.clone();
        bad.premises[0].delta.entries[0].tag = Tag::Unguarded;
        assert!(replay(&t.program, &bad).is_err());

        let mut bad = t.derivation.clone();
        bad.ty = Type::Nat;
        assert!(replay(&t.program, &bad).is_err());
    }
}
