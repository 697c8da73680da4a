//! Acceptance gate: runs every criterion and prints one PASS/FAIL line each.
//! Exits non-zero when any criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use glc_core::deno::{denote_comp, denote_value, Env};
use glc_core::harness::{
    gen_open_program, gen_program, observe_deno, observe_oper, run_adequacy_suite,
    silently_diverges, suite_gen_config, GenConfig, ObsTerminal, SuiteConfig,
};
use glc_core::monad::powerset::{
    pplus_guarded, pplus_iterate, KleisliTable, NonEmptyPowerset, Powerset,
};
use glc_core::monad::trace::{check_lazy_agreement, observe_stream, TraceMonad};
use glc_core::monad::{check_laws, Elem, GuardedMonad, Law, LawConfig, LawReport, Obj, Table};
use glc_core::oper::{eval, EvalConfig, EvalError, Mutation};
use glc_core::syntax::{parse_program, substitute_comp, Comp, Type, Value};
use glc_core::typing::{check_program, ErrorCode, TypedProgram};

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn load(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../programs")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn typed(name: &str) -> TypedProgram {
    check_program(&parse_program(&load(name)).unwrap()).unwrap()
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn guessing_game() -> Outcome {
    let start = Instant::now();
    let guarded = parse_program(&load("guess.gml"))
        .map_err(|e| e.to_string())
        .and_then(|p| check_program(&p).map_err(|e| e.to_string()));
    let unguarded = parse_program(&load("guess_unguarded.gml")).unwrap();
    let rejection = check_program(&unguarded).err();
    let elapsed = start.elapsed();
    let rejected_right = rejection
        .as_ref()
        .is_some_and(|e| e.code == ErrorCode::GuardedRaise && e.message.contains("`e`"));
    let ok = matches!(&guarded, Ok(tp) if tp.ty == Type::One)
        && rejected_right
        && elapsed < Duration::from_secs(1);
    outcome(
        ok,
        format!(
            "guarded: {}; unguarded: {}; {elapsed:.2?}",
            guarded
                .map(|tp| format!("typed at {}", tp.ty))
                .unwrap_or_else(|e| e),
            rejection
                .map(|e| e.to_string())
                .unwrap_or_else(|| "accepted".into())
        ),
    )
}

fn suite_config() -> SuiteConfig {
    SuiteConfig {
        count: 500,
        depth: 8,
        seed: 42,
        fuel: 64,
        max_steps: 100_000,
        mutation: None,
        shrink: true,
    }
}

fn adequacy_suite() -> Outcome {
    let start = Instant::now();
    let report = run_adequacy_suite(&suite_config());
    let clean_time = start.elapsed();
    let mut detail = format!(
        "{} of {} agreed in {clean_time:.2?}",
        report.agreed, report.total
    );
    let mut ok = report.passed() && report.total == 500 && within(clean_time, 60);
    if let Some(d) = report.disagreed.first() {
        detail += &format!(
            "; first witness seed {}: {} vs {}",
            d.seed, d.operational, d.denotational
        );
    }
    for m in Mutation::ALL {
        let cfg = SuiteConfig {
            mutation: Some(m),
            shrink: false,
            ..suite_config()
        };
        let caught = run_adequacy_suite(&cfg).disagreed.len();
        ok &= caught >= 1;
        detail += &format!("; {m:?} caught by {caught}");
    }
    outcome(ok, detail)
}

fn law_line(r: &LawReport) -> String {
    let failed: Vec<String> = r
        .results
        .iter()
        .filter(|l| !l.passed())
        .map(|l| format!("{} x{}", l.law, l.failed))
        .collect();
    let samples: usize = r.results.iter().map(|l| l.samples).sum();
    if failed.is_empty() {
        format!("{} laws, {samples} cases", r.results.len())
    } else {
        format!("failing: {}", failed.join(", "))
    }
}

fn powerset_laws() -> Outcome {
    let start = Instant::now();
    let cfg = LawConfig {
        samples: 1000,
        exhaustive_max: 2,
        max_carrier: 3,
        max_w: 2,
        ..LawConfig::default()
    };
    let report = check_laws(&Powerset, &cfg, &Law::ALL);
    let elapsed = start.elapsed();
    outcome(
        report.passed() && within(elapsed, 120),
        format!("{}; {elapsed:.2?}", law_line(&report)),
    )
}

fn trace_laws() -> Outcome {
    let start = Instant::now();
    let cfg = LawConfig {
        samples: 500,
        fuel: 64,
        exhaustive_max: 0,
        ..LawConfig::default()
    };
    let mut report = check_laws(&TraceMonad, &cfg, &Law::ALL);
    report.results.push(check_lazy_agreement(&cfg));
    outcome(
        report.passed(),
        format!("{}; {:.2?}", law_line(&report), start.elapsed()),
    )
}

/// Every table `X -> P+(Y + X)` with `|X|, |Y| <= 3`.
fn pplus_claim() -> Outcome {
    let start = Instant::now();
    let (mut guarded, mut empty) = (0usize, 0usize);
    for nx in 1..=3 {
        for ny in 1..=3 {
            let x = Obj::Fin(nx);
            let cod = Obj::sum(Obj::Fin(ny), x.clone());
            let values = NonEmptyPowerset
                .enumerate_values(&cod)
                .expect("finite instance");
            let rows = x.elements();
            let mut digits = vec![0usize; rows.len()];
            loop {
                let f: KleisliTable = Table {
                    dom: x.clone(),
                    rows: rows
                        .iter()
                        .cloned()
                        .zip(digits.iter().map(|&d| values[d].clone()))
                        .collect(),
                };
                if pplus_guarded(&f) {
                    guarded += 1;
                    match pplus_iterate(&f) {
                        Ok(t) if t.rows.values().all(|s| !s.is_empty()) => {}
                        _ => empty += 1,
                    }
                }
                let Some(i) = digits.iter().position(|&d| d + 1 < values.len()) else {
                    break;
                };
                digits[i] += 1;
                digits[..i].iter_mut().for_each(|d| *d = 0);
            }
        }
    }
    let one = Obj::Fin(1);
    let eta_inr: KleisliTable = Table::from_fn(&one, |x| [Elem::inr(x.clone())].into());
    let rejected = !pplus_guarded(&eta_inr) && pplus_iterate(&eta_inr).is_err();
    outcome(
        guarded > 0 && empty == 0 && rejected,
        format!(
            "{guarded} guarded tables, {empty} empty iterates; eta.inr {}; {:.2?}",
            if rejected { "rejected" } else { "accepted" },
            start.elapsed()
        ),
    )
}

fn productivity() -> Outcome {
    let cfg = suite_config();
    let ecfg = EvalConfig {
        max_events: cfg.fuel,
        max_steps: cfg.max_steps,
        mutation: None,
    };
    let (mut diverging, mut ret, mut raise, mut pending) = (0, 0, 0, 0);
    for i in 0..cfg.count {
        let tp = gen_program(&suite_gen_config(&cfg, i));
        diverging += usize::from(silently_diverges(&tp.program, &ecfg));
        match observe_oper(&tp.program, &ecfg).terminal {
            ObsTerminal::Ret(_) => ret += 1,
            ObsTerminal::Raise { .. } => raise += 1,
            ObsTerminal::Pending => pending += 1,
            ObsTerminal::Fault(_) => {}
        }
    }
    let bad = Comp::handleit(
        "e",
        Type::One,
        Value::star(),
        Comp::raise("e", Value::star()),
    );
    let r = eval(&bad, &EvalConfig::default()).result;
    let faulted = matches!(&r, Err(EvalError::GuardednessFault { round: 1, .. }));
    outcome(diverging == 0 && faulted, format!(
            "{diverging} of {} silently diverge (ret {ret}, raise {raise}, pending {pending}); unguarded loop: {r:?}",
            cfg.count
        ))
}

fn substitution_pair(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ty = match rng.gen_range(0..4) {
        0 => Type::One,
        1 => Type::Nat,
        2 => Type::sum(Type::One, Type::Nat),
        _ => Type::prod(Type::Nat, Type::Nat),
    };
    let v = closed_value(&ty, &mut rng);
    let free = vec![("y".to_string(), ty)];
    let (prog, _) = gen_open_program(&GenConfig {
        seed,
        max_depth: 6,
        free,
        ..GenConfig::default()
    });
    let substituted = substitute_comp(
        &prog.main,
        &[("y".to_string(), v.clone())].into_iter().collect(),
    );
    let env = Env::new();
    let dv = denote_value(&v, &env).map_err(|e| e.to_string())?;
    let lhs = observe_stream(denote_comp(&substituted, Env::new()), 32, 100_000);
    let rhs = observe_stream(denote_comp(&prog.main, env.extend("y", dv)), 32, 100_000);
    let (lhs, rhs) = (
        format!("{:?} {:?}", lhs.events, lhs.ending),
        format!("{:?} {:?}", rhs.events, rhs.ending),
    );
    if lhs == rhs {
        Ok(())
    } else {
        Err(format!("seed {seed}: {lhs} vs {rhs}"))
    }
}

fn closed_value(ty: &Type, rng: &mut ChaCha8Rng) -> Value {
    match ty {
        Type::One => Value::star(),
        Type::Nat => Value::nat(rng.gen_range(0..5)),
        Type::Sum(a, b) if rng.gen_bool(0.5) => Value::inl(closed_value(a, rng), Some(ty.clone())),
        Type::Sum(_, b) => Value::inr(closed_value(b, rng), Some(ty.clone())),
        Type::Prod(a, b) => Value::pair(closed_value(a, rng), closed_value(b, rng)),
        other => panic!("no closed value at {other}"),
    }
}

fn concrete_examples() -> Outcome {
    let countdown = typed("countdown.gml");
    let oper = observe_oper(&countdown.program, &EvalConfig::default());
    let deno = observe_deno(&countdown.program, &countdown.ty, 64, 100_000);
    let mut ok =
        oper == deno && oper.events == [2, 1, 0] && oper.terminal == ObsTerminal::Ret("*".into());
    let mut detail = format!("countdown {oper} / {deno}");

    let looping = typed("loop.gml");
    for n in [0, 1, 3, 10, 64] {
        let o = observe_oper(
            &looping.program,
            &EvalConfig {
                max_events: n,
                ..EvalConfig::default()
            },
        );
        let d = observe_deno(&looping.program, &looping.ty, n, 100_000);
        ok &= o == d && o.events == vec![0; n] && o.terminal == ObsTerminal::Pending;
    }
    detail += "; loop pending at fuel 0,1,3,10,64";

    let failures: Vec<String> = (0..200)
        .filter_map(|s| substitution_pair(s).err())
        .collect();
    ok &= failures.is_empty();
    detail += &format!("; substitution {} of 200 pairs agree", 200 - failures.len());
    if let Some(f) = failures.first() {
        detail += &format!(" (first: {f})");
    }
    outcome(ok, detail)
}

fn main() {
    let criteria: [Criterion; 7] = [
        (
            "guessing game typechecks, unguarded variant rejected",
            guessing_game,
        ),
        ("adequacy suite and mutation sensitivity", adequacy_suite),
        ("powerset iteration laws", powerset_laws),
        ("trace iteration laws", trace_laws),
        ("non-empty powerset iterates stay non-empty", pplus_claim),
        ("productivity of typed programs", productivity),
        ("countdown, put loop and substitution", concrete_examples),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let mark = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "{mark} [{}] {name} ({:.2?}): {}",
            i + 1,
            start.elapsed(),
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
