//! Greedy shrinking of disagreement witnesses: subcomputations are replaced
//! by `ret` stubs of their type while the program still typechecks and the
//! two semantics still disagree.

use crate::syntax::{Comp, CompKind, Program, Type, Value};
use crate::typing::{check_program, CompDerivation, TypedProgram};

use super::{adequacy_check, AdequacyConfig};

/// Upper bound on accepted shrinking steps.
const MAX_ROUNDS: usize = 200;

pub fn shrink(tp: &TypedProgram, cfg: &AdequacyConfig) -> TypedProgram {
    let mut best = tp.clone();
    for _ in 0..MAX_ROUNDS {
        match improve(&best, cfg) {
            Some(next) => best = next,
            None => break,
        }
    }
    best
}

fn improve(tp: &TypedProgram, cfg: &AdequacyConfig) -> Option<TypedProgram> {
    let mut types = Vec::new();
    node_types(&tp.derivation, &mut types);
    for (i, ty) in types.iter().enumerate() {
        let Some(stub) = stub_value(ty) else { continue };
        let stub = Comp::ret(stub);
        let Some(main) = replace_at(&tp.program.main, i, &stub) else {
            continue;
        };
        if main.size() >= tp.program.main.size() {
            continue;
        }
        let Ok(candidate) = check_program(&Program {
            main,
            ..tp.program.clone()
        }) else {
            continue;
        };
        if !adequacy_check(&candidate, cfg).agrees() {
            return Some(candidate);
        }
    }
    None
}

/// Types of the computation nodes in preorder, matching `replace_at`.
fn node_types(d: &CompDerivation, out: &mut Vec<Type>) {
    out.push(d.ty.clone());
    for p in &d.premises {
        node_types(p, out);
    }
}

/// The simplest closed value of a first-order type without `0`.
fn stub_value(ty: &Type) -> Option<Value> {
    Some(match ty {
        Type::One => Value::star(),
        Type::Nat => Value::zero(),
        Type::Sum(a, b) => match stub_value(a) {
            Some(v) => Value::inl(v, Some(ty.clone())),
            None => Value::inr(stub_value(b)?, Some(ty.clone())),
        },
        Type::Prod(a, b) => Value::pair(stub_value(a)?, stub_value(b)?),
        Type::Zero | Type::Base(_) | Type::Fun(..) => return None,
    })
}

fn children(c: &Comp) -> Vec<&Comp> {
    match &c.kind {
        CompKind::Do { bound, body, .. } => vec![bound, body],
        CompKind::GCase {
            left_body,
            right_body,
            ..
        }
        | CompKind::Case {
            left_body,
            right_body,
            ..
        } => {
            vec![left_body, right_body]
        }
        CompKind::PCase { body, .. } | CompKind::HandleIt { body, .. } => vec![body],
        CompKind::Handle { body, handler, .. } => vec![body, handler],
        _ => vec![],
    }
}

fn count(c: &Comp) -> usize {
    1 + children(c).into_iter().map(count).sum::<usize>()
}

/// `c` with its `target`-th node in preorder replaced by `stub`.
fn replace_at(c: &Comp, target: usize, stub: &Comp) -> Option<Comp> {
    if target == 0 {
        return (!matches!(c.kind, CompKind::Ret(_))).then(|| stub.clone());
    }
    let mut offset = 1;
    let mut out = c.clone();
    let slots: Vec<&mut Box<Comp>> = match &mut out.kind {
        CompKind::Do { bound, body, .. } => vec![bound, body],
        CompKind::GCase {
            left_body,
            right_body,
            ..
        }
        | CompKind::Case {
            left_body,
            right_body,
            ..
        } => {
            vec![left_body, right_body]
        }
        CompKind::PCase { body, .. } | CompKind::HandleIt { body, .. } => vec![body],
        CompKind::Handle { body, handler, .. } => vec![body, handler],
        _ => vec![],
    };
    for slot in slots {
        let n = count(slot);
        if target < offset + n {
            **slot = replace_at(slot, target - offset, stub)?;
            return Some(out);
        }
        offset += n;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oper::Mutation;
    use crate::syntax::{parse_program, pretty_comp};

    #[test]
    fn replaces_by_preorder_index() {
        let c = parse_program("do x : N <- ret 1; put(x) & ret *")
            .unwrap()
            .main;
        let stub = Comp::ret(Value::star());
        // 0: do, 1: ret 1, 2: gcase put, 3: init x, 4: ret *
        assert_eq!(
            pretty_comp(&replace_at(&c, 2, &stub).unwrap()),
            "do x : N <- ret 1; ret *"
        );
        assert!(replace_at(&c, 1, &stub).is_none());
        assert!(replace_at(&c, 9, &stub).is_none());
    }

    #[test]
    fn shrunk_witness_still_disagrees() {
        let src = "do y : N <- ret 2; do w : N <- { put(3) & ret 1 }; put(y) & ret *";
        let tp = check_program(&parse_program(src).unwrap()).unwrap();
        let cfg = AdequacyConfig {
            mutation: Some(Mutation::DropPutEvent),
            ..AdequacyConfig::default()
        };
        assert!(!adequacy_check(&tp, &cfg).agrees());
        let small = shrink(&tp, &cfg);
        assert!(small.program.main.size() < tp.program.main.size());
        assert!(!adequacy_check(&small, &cfg).agrees());
    }
}
