//! Free variables, capture-avoiding substitution and alpha-equivalence.

use std::collections::{BTreeMap, BTreeSet};

use super::{Comp, CompKind, Lambda, Name, Value, ValueKind};

/// Simultaneous substitution of values for variables.
pub type Bindings = BTreeMap<Name, Value>;

pub fn free_vars_value(v: &Value) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    fv_value(v, &mut Vec::new(), &mut out);
    out
}

pub fn free_vars_comp(c: &Comp) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    fv_comp(c, &mut Vec::new(), &mut out);
    out
}

fn fv_value(v: &Value, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match &v.kind {
        ValueKind::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        ValueKind::Star => {}
        ValueKind::Prim(_, a) | ValueKind::Inl(a, _) | ValueKind::Inr(a, _) => {
            fv_value(a, bound, out)
        }
        ValueKind::Pair(a, b) => {
            fv_value(a, bound, out);
            fv_value(b, bound, out);
        }
        ValueKind::Lambda(l) => under(bound, &[&l.param], |b| fv_comp(&l.body, b, out)),
    }
}

fn under<R>(bound: &mut Vec<Name>, names: &[&Name], f: impl FnOnce(&mut Vec<Name>) -> R) -> R {
    let n = bound.len();
    bound.extend(names.iter().map(|s| (*s).clone()));
    let r = f(bound);
    bound.truncate(n);
    r
}

fn fv_comp(c: &Comp, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match &c.kind {
        CompKind::Ret(v)
        | CompKind::Init(v)
        | CompKind::Raise(_, v)
        | CompKind::Call { arg: v, .. } => fv_value(v, bound, out),
        CompKind::Do {
            var,
            bound: p,
            body,
            ..
        } => {
            fv_comp(p, bound, out);
            under(bound, &[var], |b| fv_comp(body, b, out));
        }
        CompKind::GCase {
            arg,
            left,
            left_body,
            right,
            right_body,
            ..
        } => {
            fv_value(arg, bound, out);
            under(bound, &[left], |b| fv_comp(left_body, b, out));
            under(bound, &[right], |b| fv_comp(right_body, b, out));
        }
        CompKind::Case {
            scrut,
            left,
            left_body,
            right,
            right_body,
        } => {
            fv_value(scrut, bound, out);
            under(bound, &[left], |b| fv_comp(left_body, b, out));
            under(bound, &[right], |b| fv_comp(right_body, b, out));
        }
        CompKind::PCase {
            scrut,
            fst,
            snd,
            body,
        } => {
            fv_value(scrut, bound, out);
            under(bound, &[fst, snd], |b| fv_comp(body, b, out));
        }
        CompKind::Handle {
            body, var, handler, ..
        } => {
            fv_comp(body, bound, out);
            under(bound, &[var], |b| fv_comp(handler, b, out));
        }
        CompKind::HandleIt {
            init, var, body, ..
        } => {
            fv_value(init, bound, out);
            under(bound, &[var], |b| fv_comp(body, b, out));
        }
        CompKind::App(f, a) => {
            fv_value(f, bound, out);
            fv_value(a, bound, out);
        }
        CompKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            fv_value(cond, bound, out);
            fv_comp(then_branch, bound, out);
            fv_comp(else_branch, bound, out);
        }
        CompKind::Guard { arg, body, .. } => {
            fv_value(arg, bound, out);
            fv_comp(body, bound, out);
        }
        CompKind::Seq(p, q) => {
            fv_comp(p, bound, out);
            fv_comp(q, bound, out);
        }
        CompKind::Try {
            var,
            body,
            cont,
            exc,
            handler,
            ..
        } => {
            fv_comp(body, bound, out);
            under(bound, &[var], |b| fv_comp(cont, b, out));
            under(bound, &[exc], |b| fv_comp(handler, b, out));
        }
    }
}

/// A variant of `base` not contained in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<Name>) -> Name {
    if !avoid.contains(base) && base != "_" {
        return base.to_string();
    }
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() || stem == "_" {
        "v"
    } else {
        stem
    };
    (1..)
        .map(|i| format!("{stem}{i}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded")
}

pub fn substitute_value(v: &Value, s: &Bindings) -> Value {
    if s.is_empty() {
        return v.clone();
    }
    let kind = match &v.kind {
        ValueKind::Var(x) => return s.get(x).cloned().unwrap_or_else(|| v.clone()),
        ValueKind::Star => ValueKind::Star,
        ValueKind::Prim(op, a) => ValueKind::Prim(op.clone(), Box::new(substitute_value(a, s))),
        ValueKind::Inl(a, t) => ValueKind::Inl(Box::new(substitute_value(a, s)), t.clone()),
        ValueKind::Inr(a, t) => ValueKind::Inr(Box::new(substitute_value(a, s)), t.clone()),
        ValueKind::Pair(a, b) => ValueKind::Pair(
            Box::new(substitute_value(a, s)),
            Box::new(substitute_value(b, s)),
        ),
        ValueKind::Lambda(l) => {
            let (params, body) = binders(s, &[&l.param], &l.body);
            ValueKind::Lambda(Box::new(Lambda {
                param: params[0].clone(),
                param_ty: l.param_ty.clone(),
                exc: l.exc.clone(),
                ret_ty: l.ret_ty.clone(),
                body,
            }))
        }
    };
    Value { kind, span: v.span }
}

/// Pushes `s` under the binders `names` in `body`, renaming binders that
/// would capture a free variable of the substituted values.
fn binders(s: &Bindings, names: &[&Name], body: &Comp) -> (Vec<Name>, Comp) {
    let mut inner: Bindings = s
        .iter()
        .filter(|(k, _)| !names.contains(k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if inner.is_empty() {
        return (names.iter().map(|n| (*n).clone()).collect(), body.clone());
    }
    let mut danger: BTreeSet<Name> = BTreeSet::new();
    for v in inner.values() {
        danger.extend(free_vars_value(v));
    }
    let mut avoid = danger.clone();
    avoid.extend(free_vars_comp(body));
    avoid.extend(inner.keys().cloned());
    let mut out = Vec::new();
    for n in names {
        if danger.contains(*n) {
            let fresh = fresh_name(n, &avoid);
            avoid.insert(fresh.clone());
            inner.insert((*n).clone(), Value::var(&fresh));
            out.push(fresh);
        } else {
            avoid.insert((*n).clone());
            out.push((*n).clone());
        }
    }
    (out, substitute_comp(body, &inner))
}

pub fn substitute_comp(c: &Comp, s: &Bindings) -> Comp {
    if s.is_empty() {
        return c.clone();
    }
    let sv = |v: &Value| substitute_value(v, s);
    let sc = |p: &Comp| Box::new(substitute_comp(p, s));
    let kind = match &c.kind {
        CompKind::Ret(v) => CompKind::Ret(sv(v)),
        CompKind::Init(v) => CompKind::Init(sv(v)),
        CompKind::Raise(e, v) => CompKind::Raise(e.clone(), sv(v)),
        CompKind::Call { op, arg } => CompKind::Call {
            op: op.clone(),
            arg: sv(arg),
        },
        CompKind::Do {
            var,
            ann,
            bound,
            body,
        } => {
            let (names, body) = binders(s, &[var], body);
            CompKind::Do {
                var: names[0].clone(),
                ann: ann.clone(),
                bound: sc(bound),
                body: Box::new(body),
            }
        }
        CompKind::GCase {
            op,
            arg,
            left,
            left_body,
            right,
            right_body,
        } => {
            let (l, lb) = binders(s, &[left], left_body);
            let (r, rb) = binders(s, &[right], right_body);
            CompKind::GCase {
                op: op.clone(),
                arg: sv(arg),
                left: l[0].clone(),
                left_body: Box::new(lb),
                right: r[0].clone(),
                right_body: Box::new(rb),
            }
        }
        CompKind::Case {
            scrut,
            left,
            left_body,
            right,
            right_body,
        } => {
            let (l, lb) = binders(s, &[left], left_body);
            let (r, rb) = binders(s, &[right], right_body);
            CompKind::Case {
                scrut: sv(scrut),
                left: l[0].clone(),
                left_body: Box::new(lb),
                right: r[0].clone(),
                right_body: Box::new(rb),
            }
        }
        CompKind::PCase {
            scrut,
            fst,
            snd,
            body,
        } => {
            let (n, b) = binders(s, &[fst, snd], body);
            CompKind::PCase {
                scrut: sv(scrut),
                fst: n[0].clone(),
                snd: n[1].clone(),
                body: Box::new(b),
            }
        }
        CompKind::Handle {
            exc,
            ty,
            body,
            var,
            handler,
        } => {
            let (n, h) = binders(s, &[var], handler);
            CompKind::Handle {
                exc: exc.clone(),
                ty: ty.clone(),
                body: sc(body),
                var: n[0].clone(),
                handler: Box::new(h),
            }
        }
        CompKind::HandleIt {
            init,
            exc,
            ty,
            var,
            body,
        } => {
            let (n, b) = binders(s, &[var], body);
            CompKind::HandleIt {
                init: sv(init),
                exc: exc.clone(),
                ty: ty.clone(),
                var: n[0].clone(),
                body: Box::new(b),
            }
        }
        CompKind::App(f, a) => CompKind::App(sv(f), sv(a)),
        CompKind::If {
            cond,
            then_branch,
            else_branch,
        } => CompKind::If {
            cond: sv(cond),
            then_branch: sc(then_branch),
            else_branch: sc(else_branch),
        },
        CompKind::Guard { op, arg, body } => CompKind::Guard {
            op: op.clone(),
            arg: sv(arg),
            body: sc(body),
        },
        CompKind::Seq(p, q) => CompKind::Seq(sc(p), sc(q)),
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
            let (x, q) = binders(s, &[var], cont);
            // The handler's payload variable shares the exception's name, so it cannot be renamed.
            let mut hs = s.clone();
            hs.remove(exc);
            CompKind::Try {
                var: x[0].clone(),
                var_ty: var_ty.clone(),
                body: sc(body),
                cont: Box::new(q),
                exc: exc.clone(),
                exc_ty: exc_ty.clone(),
                handler: Box::new(substitute_comp(handler, &hs)),
                result_ty: result_ty.clone(),
            }
        }
    };
    Comp { kind, span: c.span }
}

/// Scope stacks for alpha-equivalence: a variable is identified by the
/// depth of its binder, or by its name when free.
#[derive(Default)]
struct Scopes {
    left: Vec<Name>,
    right: Vec<Name>,
}

impl Scopes {
    fn push(&mut self, a: &Name, b: &Name) {
        self.left.push(a.clone());
        self.right.push(b.clone());
    }

    fn pop(&mut self, n: usize) {
        self.left.truncate(self.left.len() - n);
        self.right.truncate(self.right.len() - n);
    }

    fn same_var(&self, a: &Name, b: &Name) -> bool {
        let ia = self.left.iter().rposition(|x| x == a);
        let ib = self.right.iter().rposition(|x| x == b);
        match (ia, ib) {
            (None, None) => a == b,
            (i, j) => i == j,
        }
    }
}

pub fn alpha_eq_value(a: &Value, b: &Value) -> bool {
    aeq_value(a, b, &mut Scopes::default())
}

pub fn alpha_eq_comp(a: &Comp, b: &Comp) -> bool {
    aeq_comp(a, b, &mut Scopes::default())
}

fn aeq_value(a: &Value, b: &Value, sc: &mut Scopes) -> bool {
    match (&a.kind, &b.kind) {
        (ValueKind::Var(x), ValueKind::Var(y)) => sc.same_var(x, y),
        (ValueKind::Star, ValueKind::Star) => true,
        (ValueKind::Prim(f, x), ValueKind::Prim(g, y)) => f == g && aeq_value(x, y, sc),
        (ValueKind::Inl(x, s), ValueKind::Inl(y, t))
        | (ValueKind::Inr(x, s), ValueKind::Inr(y, t)) => s == t && aeq_value(x, y, sc),
        (ValueKind::Pair(x1, x2), ValueKind::Pair(y1, y2)) => {
            aeq_value(x1, y1, sc) && aeq_value(x2, y2, sc)
        }
        (ValueKind::Lambda(l), ValueKind::Lambda(m)) => {
            l.param_ty == m.param_ty
                && l.exc == m.exc
                && l.ret_ty == m.ret_ty
                && scoped(sc, &[(&l.param, &m.param)], |sc| {
                    aeq_comp(&l.body, &m.body, sc)
                })
        }
        _ => false,
    }
}

fn scoped(sc: &mut Scopes, pairs: &[(&Name, &Name)], f: impl FnOnce(&mut Scopes) -> bool) -> bool {
    for (a, b) in pairs {
        sc.push(a, b);
    }
    let r = f(sc);
    sc.pop(pairs.len());
    r
}

fn aeq_comp(a: &Comp, b: &Comp, sc: &mut Scopes) -> bool {
    use CompKind as K;
    match (&a.kind, &b.kind) {
        (K::Ret(x), K::Ret(y)) | (K::Init(x), K::Init(y)) => aeq_value(x, y, sc),
        (K::Raise(e, x), K::Raise(f, y)) => e == f && aeq_value(x, y, sc),
        (K::Call { op: f, arg: x }, K::Call { op: g, arg: y }) => f == g && aeq_value(x, y, sc),
        (
            K::Do {
                var: x,
                ann: s,
                bound: p,
                body: q,
            },
            K::Do {
                var: y,
                ann: t,
                bound: p2,
                body: q2,
            },
        ) => s == t && aeq_comp(p, p2, sc) && scoped(sc, &[(x, y)], |sc| aeq_comp(q, q2, sc)),
        (
            K::GCase {
                op: f,
                arg: v,
                left: l1,
                left_body: p1,
                right: r1,
                right_body: q1,
            },
            K::GCase {
                op: g,
                arg: w,
                left: l2,
                left_body: p2,
                right: r2,
                right_body: q2,
            },
        ) => {
            f == g
                && aeq_value(v, w, sc)
                && scoped(sc, &[(l1, l2)], |sc| aeq_comp(p1, p2, sc))
                && scoped(sc, &[(r1, r2)], |sc| aeq_comp(q1, q2, sc))
        }
        (
            K::Case {
                scrut: v,
                left: l1,
                left_body: p1,
                right: r1,
                right_body: q1,
            },
            K::Case {
                scrut: w,
                left: l2,
                left_body: p2,
                right: r2,
                right_body: q2,
            },
        ) => {
            aeq_value(v, w, sc)
                && scoped(sc, &[(l1, l2)], |sc| aeq_comp(p1, p2, sc))
                && scoped(sc, &[(r1, r2)], |sc| aeq_comp(q1, q2, sc))
        }
        (
            K::PCase {
                scrut: v,
                fst: x1,
                snd: y1,
                body: p,
            },
            K::PCase {
                scrut: w,
                fst: x2,
                snd: y2,
                body: q,
            },
        ) => aeq_value(v, w, sc) && scoped(sc, &[(x1, x2), (y1, y2)], |sc| aeq_comp(p, q, sc)),
        (
            K::Handle {
                exc: e1,
                ty: t1,
                body: p1,
                var: x1,
                handler: h1,
            },
            K::Handle {
                exc: e2,
                ty: t2,
                body: p2,
                var: x2,
                handler: h2,
            },
        ) => {
            e1 == e2
                && t1 == t2
                && aeq_comp(p1, p2, sc)
                && scoped(sc, &[(x1, x2)], |sc| aeq_comp(h1, h2, sc))
        }
        (
            K::HandleIt {
                init: v1,
                exc: e1,
                ty: t1,
                var: x1,
                body: p1,
            },
            K::HandleIt {
                init: v2,
                exc: e2,
                ty: t2,
                var: x2,
                body: p2,
            },
        ) => {
            e1 == e2
                && t1 == t2
                && aeq_value(v1, v2, sc)
                && scoped(sc, &[(x1, x2)], |sc| aeq_comp(p1, p2, sc))
        }
        (K::App(f, x), K::App(g, y)) => aeq_value(f, g, sc) && aeq_value(x, y, sc),
        (
            K::If {
                cond: v,
                then_branch: p1,
                else_branch: q1,
            },
            K::If {
                cond: w,
                then_branch: p2,
                else_branch: q2,
            },
        ) => aeq_value(v, w, sc) && aeq_comp(p1, p2, sc) && aeq_comp(q1, q2, sc),
        (
            K::Guard {
                op: f,
                arg: v,
                body: p,
            },
            K::Guard {
                op: g,
                arg: w,
                body: q,
            },
        ) => f == g && aeq_value(v, w, sc) && aeq_comp(p, q, sc),
        (K::Seq(p1, q1), K::Seq(p2, q2)) => aeq_comp(p1, p2, sc) && aeq_comp(q1, q2, sc),
        (
            K::Try {
                var: x1,
                var_ty: a1,
                body: p1,
                cont: q1,
                exc: e1,
                exc_ty: t1,
                handler: h1,
                result_ty: r1,
            },
            K::Try {
                var: x2,
                var_ty: a2,
                body: p2,
                cont: q2,
                exc: e2,
                exc_ty: t2,
                handler: h2,
                result_ty: r2,
            },
        ) => {
            a1 == a2
                && e1 == e2
                && t1 == t2
                && r1 == r2
                && aeq_comp(p1, p2, sc)
                && scoped(sc, &[(x1, x2)], |sc| aeq_comp(q1, q2, sc))
                && scoped(sc, &[(e1, e2)], |sc| aeq_comp(h1, h2, sc))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_comp;

    fn bind(x: &str, v: Value) -> Bindings {
        [(x.to_string(), v)].into_iter().collect()
    }

    #[test]
    fn free_vars_respect_binders() {
        let c = parse_comp("do x <- ret y; case x of inl a => ret a | inr b => ret z").unwrap();
        let fv: Vec<_> = free_vars_comp(&c).into_iter().collect();
        assert_eq!(fv, vec!["y".to_string(), "z".to_string()]);
    }

    #[test]
    fn substitution_avoids_capture() {
        let c = parse_comp("do x <- ret *; ret (x, y)").unwrap();
        let out = substitute_comp(&c, &bind("y", Value::var("x")));
        let expected = parse_comp("do x1 <- ret *; ret (x1, x)").unwrap();
        assert!(alpha_eq_comp(&out, &expected), "{out}");
        assert!(free_vars_comp(&out).contains("x"));
    }

    #[test]
    fn bound_occurrences_untouched() {
        let c = parse_comp("do y <- ret *; ret y").unwrap();
        assert_eq!(substitute_comp(&c, &bind("y", Value::nat(3))), c);
    }

    #[test]
    fn alpha_equivalence() {
        let a = parse_comp("pcase p of (x, y) => ret (y, x)").unwrap();
        let b = parse_comp("pcase p of (u, v) => ret (v, u)").unwrap();
        let c = parse_comp("pcase p of (u, v) => ret (u, v)").unwrap();
        assert!(alpha_eq_comp(&a, &b));
        assert!(!alpha_eq_comp(&a, &c));
        // free names must match literally
        assert!(!alpha_eq_comp(
            &parse_comp("ret x").unwrap(),
            &parse_comp("ret y").unwrap()
        ));
    }

    #[test]
    fn fresh_names_skip_taken() {
        let avoid: BTreeSet<Name> = ["x", "x1"].iter().map(|s| s.to_string()).collect();
        assert_eq!(fresh_name("x", &avoid), "x2");
        assert_eq!(fresh_name("z", &avoid), "z");
    }
}
