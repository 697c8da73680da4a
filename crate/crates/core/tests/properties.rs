use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use glc_core::deno::{denote_comp, denote_value, Env};
use glc_core::harness::{gen_open_program, gen_program, GenConfig};
use glc_core::monad::trace::observe_stream;
use glc_core::oper::{eval, EvalConfig, Terminal};
use glc_core::syntax::{
    alpha_eq_comp, desugar_program, parse_program, parse_surface_program, pretty_program,
    substitute_comp, substitute_value, Bindings, Comp, CompKind, Type, Value,
};
use glc_core::typing::{
    check_program_at, replay, Checker, CompDerivation, CompRule, TypedProgram, VarContext,
};

fn program(seed: u64, depth: usize) -> TypedProgram {
    gen_program(&GenConfig {
        seed,
        max_depth: depth,
        ..GenConfig::default()
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

/// Visits each computation node with its judgement.
fn walk<'a>(c: &'a Comp, d: &'a CompDerivation, f: &mut impl FnMut(&'a Comp, &'a CompDerivation)) {
    f(c, d);
    let kids = children(c);
    assert_eq!(kids.len(), d.premises.len(), "premises follow subterms");
    for (k, p) in kids.into_iter().zip(&d.premises) {
        walk(k, p, f);
    }
}

fn first_ret(d: &mut CompDerivation) -> Option<&mut CompDerivation> {
    if d.rule == CompRule::Ret {
        return Some(d);
    }
    d.premises.iter_mut().find_map(first_ret)
}

fn contains_app(c: &Comp) -> bool {
    matches!(c.kind, CompKind::App(..)) || children(c).into_iter().any(contains_app)
}

/// A closed value of a first-order type without `0`.
fn value_of(ty: &Type, rng: &mut ChaCha8Rng) -> Value {
    match ty {
        Type::One => Value::star(),
        Type::Nat => Value::nat(rng.gen_range(0..5)),
        Type::Sum(a, b) => {
            if rng.gen_bool(0.5) {
                Value::inl(value_of(a, rng), Some(ty.clone()))
            } else {
                Value::inr(value_of(b, rng), Some(ty.clone()))
            }
        }
        Type::Prod(a, b) => Value::pair(value_of(a, rng), value_of(b, rng)),
        other => panic!("no closed values generated at {other}"),
    }
}

fn small_type(rng: &mut ChaCha8Rng) -> Type {
    match rng.gen_range(0..4) {
        0 => Type::One,
        1 => Type::Nat,
        2 => Type::sum(Type::One, Type::Nat),
        _ => Type::prod(Type::Nat, Type::One),
    }
}

/// Renders an observation of a denotation for comparison.
fn observe_denotation(c: &Comp, env: Env<'_>, fuel: usize) -> String {
    let o = observe_stream(denote_comp(c, env), fuel, 100_000);
    format!("{:?} {:?}", o.events, o.ending)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pretty_then_parse_round_trips(seed in any::<u64>()) {
        let tp = program(seed, 6);
        let text = pretty_program(&tp.program);
        let back = parse_program(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        prop_assert!(alpha_eq_comp(&back.main, &tp.program.main), "{text}");
        prop_assert_eq!(&back.exceptions, &tp.program.exceptions);
        let again = check_program_at(&back, Some(&tp.ty)).unwrap();
        prop_assert_eq!(again.ty, tp.ty);
    }

    #[test]
    fn desugar_is_idempotent(seed in any::<u64>()) {
        let tp = program(seed, 6);
        let surface = parse_surface_program(&pretty_program(&tp.program)).unwrap();
        let once = desugar_program(&surface);
        prop_assert_eq!(desugar_program(&once), once);
    }

    #[test]
    fn substitutions_compose(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = small_type(&mut rng);
        let b = small_type(&mut rng);
        let free = vec![("y".to_string(), a.clone()), ("z".to_string(), b.clone())];
        let (prog, _) = gen_open_program(&GenConfig { seed, max_depth: 5, free, ..GenConfig::default() });
        let v = if a == b && rng.gen_bool(0.5) { Value::var("z") } else { value_of(&a, &mut rng) };
        let w = value_of(&b, &mut rng);
        let sub = |pairs: &[(&str, &Value)]| -> Bindings {
            pairs.iter().map(|(x, v)| (x.to_string(), (*v).clone())).collect()
        };
        let seq = substitute_comp(&substitute_comp(&prog.main, &sub(&[("y", &v)])), &sub(&[("z", &w)]));
        let v_w = substitute_value(&v, &sub(&[("z", &w)]));
        let par = substitute_comp(&prog.main, &sub(&[("y", &v_w), ("z", &w)]));
        prop_assert!(alpha_eq_comp(&seq, &par));
    }

    #[test]
    fn weakening_preserves_every_judgement(seed in any::<u64>()) {
        let tp = program(seed, 6);
        let checker = Checker::new(&tp.program.signature);
        walk(&tp.program.main, &tp.derivation, &mut |c, d| {
            let gamma = d.gamma.extend("w_fresh", Type::Nat);
            let r = checker.check_comp(&d.delta, &gamma, c, &d.ty);
            assert!(r.is_ok(), "{c}: {:?}", r.err());
        });
    }

    #[test]
    fn relaxing_tags_preserves_application_free_judgements(seed in any::<u64>()) {
        let tp = program(seed, 6);
        let checker = Checker::new(&tp.program.signature);
        walk(&tp.program.main, &tp.derivation, &mut |c, d| {
            if contains_app(c) {
                return;
            }
            let r = checker.check_comp(&d.delta.all_unguarded(), &d.gamma, c, &d.ty);
            assert!(r.is_ok(), "{c}: {:?}", r.err());
        });
    }

    #[test]
    fn replayer_accepts_checker_derivations(seed in any::<u64>()) {
        let tp = program(seed, 7);
        prop_assert!(replay(&tp.program, &tp.derivation).is_ok());
        let mut bad = tp.derivation.clone();
        if let Some(node) = first_ret(&mut bad) {
            node.ty = Type::fun(Type::Zero, Default::default(), node.ty.clone());
            prop_assert!(replay(&tp.program, &bad).is_err());
        }
    }

    #[test]
    fn substitution_lemma_holds_denotationally(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = small_type(&mut rng);
        let free = vec![("y".to_string(), a.clone())];
        let (prog, _) = gen_open_program(&GenConfig { seed, max_depth: 6, free, ..GenConfig::default() });
        let v = value_of(&a, &mut rng);
        let substituted = substitute_comp(&prog.main, &[("y".to_string(), v.clone())].into_iter().collect());
        let env = Env::new();
        let dv = denote_value(&v, &env).unwrap();
        prop_assert_eq!(
            observe_denotation(&substituted, Env::new(), 32),
            observe_denotation(&prog.main, env.extend("y", dv), 32)
        );
    }

    #[test]
    fn evaluation_is_deterministic(seed in any::<u64>()) {
        let tp = program(seed, 7);
        let cfg = EvalConfig::default();
        prop_assert_eq!(eval(&tp.program.main, &cfg), eval(&tp.program.main, &cfg));
    }

    #[test]
    fn terminals_have_declared_types(seed in any::<u64>()) {
        let tp = program(seed, 7);
        let checker = Checker::new(&tp.program.signature);
        let empty = VarContext::new();
        match eval(&tp.program.main, &EvalConfig::default()).result.unwrap() {
            Terminal::Ret(v) => prop_assert!(checker.check_value(&empty, &v, &tp.ty).is_ok(), "{v} : {}", tp.ty),
            Terminal::Raise(e, v) => {
                let payload = &tp.program.exceptions.lookup(&e).expect("raised exception is declared").payload;
                prop_assert!(checker.check_value(&empty, &v, payload).is_ok());
            }
            Terminal::Pending => {}
        }
    }

    #[test]
    fn sequencing_associates(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let [p, q, r] = [s1, s2, s3].map(|s| program(s, 4).program.main);
        let left = Comp::bind("xa", p.clone(), Comp::bind("yb", q.clone(), r.clone()));
        let right = Comp::bind("yb", Comp::bind("xa", p, q), r);
        let cfg = EvalConfig::default();
        let (l, r) = (eval(&left, &cfg), eval(&right, &cfg));
        prop_assert_eq!(l.events, r.events);
        prop_assert_eq!(l.result, r.result);
    }
}
