//! Type-directed generation of well-typed closed programs over the built-in
//! signature. Generation is deterministic per seed.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{
    Comp, CompKind, ExcContext, ExcEntry, Name, Program, Tag, Type, Value, ValueKind,
};
use crate::typing::{check_program_at, Checker, TypedProgram, VarContext};

/// Relative frequencies of the computation constructs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Weights {
    pub ret: u32,
    pub raise: u32,
    pub bind: u32,
    pub case: u32,
    pub pcase: u32,
    pub put: u32,
    pub pred: u32,
    pub handle: u32,
    pub handleit: u32,
    pub app: u32,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            ret: 3,
            raise: 2,
            bind: 4,
            case: 2,
            pcase: 1,
            put: 3,
            pred: 2,
            handle: 2,
            handleit: 3,
            app: 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub seed: u64,
    pub max_depth: usize,
    /// First-order result type; drawn at random when absent.
    pub result_type: Option<Type>,
    /// Exceptions introduced per program, including the header.
    pub exception_budget: usize,
    pub weights: Weights,
    /// Free variables the main term may use; checked under these.
    pub free: Vec<(Name, Type)>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_depth: 8,
            result_type: None,
            exception_budget: 4,
            weights: Weights::default(),
            free: vec![],
        }
    }
}

/// How often each construct was generated.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Coverage {
    pub counts: BTreeMap<&'static str, usize>,
}

impl Coverage {
    pub const CONSTRUCTS: [&'static str; 11] = [
        "ret",
        "raise",
        "do",
        "case",
        "pcase",
        "gcase-put",
        "gcase-pred",
        "handle",
        "handleit",
        "lambda",
        "app",
    ];

    fn hit(&mut self, construct: &'static str) {
        *self.counts.entry(construct).or_default() += 1;
    }

    pub fn missing(&self) -> Vec<&'static str> {
        Coverage::CONSTRUCTS
            .iter()
            .copied()
            .filter(|c| !self.counts.contains_key(c))
            .collect()
    }

    pub fn merge(&mut self, other: &Coverage) {
        for (k, n) in &other.counts {
            *self.counts.entry(k).or_default() += n;
        }
    }
}

const MAX_ATTEMPTS: usize = 16;

pub fn gen_program(cfg: &GenConfig) -> TypedProgram {
    gen_program_with_coverage(cfg, &mut Coverage::default())
}

/// Generates a program and adds its constructs to `cov`.
pub fn gen_program_with_coverage(cfg: &GenConfig, cov: &mut Coverage) -> TypedProgram {
    assert!(
        cfg.free.is_empty(),
        "closed programs only; use gen_open_program"
    );
    generate(cfg, cov, |prog, ty| {
        check_program_at(prog, Some(ty)).map_err(|e| e.to_string())
    })
}

/// Generates a main term over `cfg.free` and its type.
pub fn gen_open_program(cfg: &GenConfig) -> (Program, Type) {
    let gamma = cfg
        .free
        .iter()
        .fold(VarContext::new(), |g, (x, t)| g.extend(x, t.clone()));
    let tp = generate(cfg, &mut Coverage::default(), |prog, ty| {
        Checker::new(&prog.signature)
            .check_comp(&prog.exceptions, &gamma, &prog.main, ty)
            .map(|derivation| TypedProgram {
                program: prog.clone(),
                ty: ty.clone(),
                derivation,
            })
            .map_err(|e| e.to_string())
    });
    (tp.program, tp.ty)
}

fn generate(
    cfg: &GenConfig,
    cov: &mut Coverage,
    check: impl Fn(&Program, &Type) -> Result<TypedProgram, String>,
) -> TypedProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut last_err = None;
    for _ in 0..MAX_ATTEMPTS {
        let mut g = Gen {
            rng: &mut rng,
            cfg,
            fresh: 0,
            exc_left: cfg.exception_budget,
            cov: Coverage::default(),
        };
        let (prog, ty) = g.program();
        match check(&prog, &ty) {
            Ok(tp) => {
                cov.merge(&g.cov);
                return tp;
            }
            Err(e) => last_err = Some((prog, e)),
        }
    }
    let (prog, e) = last_err.expect("attempted at least once");
    panic!(
        "generator produced ill-typed programs, last:\n{}\n{e}",
        crate::syntax::pretty_program(&prog)
    );
}

#[derive(Clone)]
struct Ctx {
    delta: ExcContext,
    gamma: Vec<(String, Type)>,
}

impl Ctx {
    fn bind(&self, x: &str, ty: Type) -> Ctx {
        let mut c = self.clone();
        c.gamma.push((x.to_string(), ty));
        c
    }

    fn vars_of(&self, ty: &Type) -> Vec<&str> {
        let mut out = vec![];
        for (i, (x, t)) in self.gamma.iter().enumerate() {
            let shadowed = self.gamma[i + 1..].iter().any(|(y, _)| y == x);
            if t == ty && !shadowed {
                out.push(x.as_str());
            }
        }
        out
    }
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    cfg: &'a GenConfig,
    fresh: usize,
    exc_left: usize,
    cov: Coverage,
}

#[derive(Clone, Copy)]
enum Construct {
    Ret,
    Raise,
    Bind,
    Case,
    PCase,
    Put,
    Pred,
    Handle,
    HandleIt,
    App,
}

impl Gen<'_> {
    fn program(&mut self) -> (Program, Type) {
        let mut exceptions = ExcContext::new();
        if self.exc_left > 0 && self.rng.gen_bool(0.5) {
            self.exc_left -= 1;
            let e = self.exc_name();
            let ty = self.small_type(1);
            exceptions.entries.push(ExcEntry {
                name: e,
                payload: ty,
                tag: Tag::Unguarded,
            });
        }
        let ty = self
            .cfg
            .result_type
            .clone()
            .unwrap_or_else(|| self.small_type(2));
        let ctx = Ctx {
            delta: exceptions.clone(),
            gamma: self.cfg.free.clone(),
        };
        let main = self.comp(&ctx, &ty, self.cfg.max_depth);
        (Program::new(main, exceptions), ty)
    }

    fn var_name(&mut self) -> String {
        self.fresh += 1;
        format!("x{}", self.fresh)
    }

    fn exc_name(&mut self) -> String {
        self.fresh += 1;
        format!("e{}", self.fresh)
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    /// A first-order type without `0`.
    fn small_type(&mut self, depth: usize) -> Type {
        let roll = self.rng.gen_range(0..100);
        match roll {
            _ if depth == 0 => {
                if roll < 50 {
                    Type::One
                } else {
                    Type::Nat
                }
            }
            0..=29 => Type::One,
            30..=64 => Type::Nat,
            65..=84 => Type::sum(self.small_type(depth - 1), self.small_type(depth - 1)),
            _ => Type::prod(self.small_type(depth - 1), self.small_type(depth - 1)),
        }
    }

    fn value(&mut self, ctx: &Ctx, ty: &Type, depth: usize) -> Value {
        let vars = ctx.vars_of(ty);
        if !vars.is_empty() && self.chance(0.45) {
            return Value::var(vars[self.rng.gen_range(0..vars.len())]);
        }
        match ty {
            Type::One => Value::star(),
            Type::Nat => {
                let nats = ctx.vars_of(&Type::Nat);
                if !nats.is_empty() && self.chance(0.3) {
                    Value::succ(Value::var(nats[self.rng.gen_range(0..nats.len())]))
                } else {
                    Value::nat(self.rng.gen_range(0..=3))
                }
            }
            Type::Sum(a, b) => {
                if self.chance(0.5) {
                    Value::inl(self.value(ctx, a, depth), Some(ty.clone()))
                } else {
                    Value::inr(self.value(ctx, b, depth), Some(ty.clone()))
                }
            }
            Type::Prod(a, b) => Value::pair(self.value(ctx, a, depth), self.value(ctx, b, depth)),
            Type::Fun(a, delta, b) => {
                self.cov.hit("lambda");
                let x = self.var_name();
                let inner = Ctx {
                    delta: delta.clone(),
                    gamma: ctx.gamma.clone(),
                }
                .bind(&x, (**a).clone());
                let body = self.comp(&inner, b, depth.saturating_sub(1));
                Value::lambda(&x, (**a).clone(), delta.clone(), Some((**b).clone()), body)
            }
            Type::Zero | Type::Base(_) => panic!("no closed values of type {ty}"),
        }
    }

    fn pick(&mut self, ctx: &Ctx) -> Construct {
        let w = &self.cfg.weights;
        let can_raise = ctx.delta.entries.iter().any(|e| e.tag == Tag::Unguarded);
        let options = [
            (Construct::Ret, w.ret),
            (Construct::Raise, if can_raise { w.raise } else { 0 }),
            (Construct::Bind, w.bind),
            (Construct::Case, w.case),
            (Construct::PCase, w.pcase),
            (Construct::Put, w.put),
            (Construct::Pred, w.pred),
            (
                Construct::Handle,
                if self.exc_left > 0 { w.handle } else { 0 },
            ),
            (
                Construct::HandleIt,
                if self.exc_left > 0 { w.handleit } else { 0 },
            ),
            (Construct::App, w.app),
        ];
        let total: u32 = options.iter().map(|o| o.1).sum();
        let mut roll = self.rng.gen_range(0..total);
        for (c, w) in options {
            if roll < w {
                return c;
            }
            roll -= w;
        }
        unreachable!("roll below total")
    }

    fn raise(&mut self, ctx: &Ctx) -> Option<Comp> {
        let raisable: Vec<ExcEntry> = ctx
            .delta
            .entries
            .iter()
            .filter(|e| e.tag == Tag::Unguarded)
            .cloned()
            .collect();
        if raisable.is_empty() {
            return None;
        }
        let e = &raisable[self.rng.gen_range(0..raisable.len())];
        self.cov.hit("raise");
        let payload = self.value(ctx, &e.payload, 0);
        Some(Comp::raise(&e.name, payload))
    }

    fn ret(&mut self, ctx: &Ctx, ty: &Type, depth: usize) -> Comp {
        self.cov.hit("ret");
        Comp::ret(self.value(ctx, ty, depth))
    }

    fn comp(&mut self, ctx: &Ctx, ty: &Type, depth: usize) -> Comp {
        if depth == 0 {
            if self.chance(0.25) {
                if let Some(c) = self.raise(ctx) {
                    return c;
                }
            }
            return self.ret(ctx, ty, 0);
        }
        let d = depth - 1;
        match self.pick(ctx) {
            Construct::Ret => self.ret(ctx, ty, d),
            Construct::Raise => self.raise(ctx).unwrap_or_else(|| self.ret(ctx, ty, d)),
            Construct::Bind => {
                self.cov.hit("do");
                let b = self.small_type(1);
                let bound = self.comp(ctx, &b, d);
                let x = self.var_name();
                let body = self.comp(&ctx.bind(&x, b.clone()), ty, d);
                Comp::new(CompKind::Do {
                    var: x,
                    ann: Some(b),
                    bound: Box::new(bound),
                    body: Box::new(body),
                })
            }
            Construct::Case => {
                self.cov.hit("case");
                let (a, b) = (self.small_type(1), self.small_type(1));
                let scrut = self.value(ctx, &Type::sum(a.clone(), b.clone()), d);
                let (x, y) = (self.var_name(), self.var_name());
                let left = self.comp(&ctx.bind(&x, a), ty, d);
                let right = self.comp(&ctx.bind(&y, b), ty, d);
                Comp::case(scrut, &x, left, &y, right)
            }
            Construct::PCase => {
                self.cov.hit("pcase");
                let (a, b) = (self.small_type(1), self.small_type(1));
                let scrut = self.value(ctx, &Type::prod(a.clone(), b.clone()), d);
                let (x, y) = (self.var_name(), self.var_name());
                let body = self.comp(&ctx.bind(&x, a).bind(&y, b), ty, d);
                Comp::pcase(scrut, &x, &y, body)
            }
            Construct::Put => {
                let n = self.value(ctx, &Type::Nat, d);
                self.put_then(ctx, n, ty, d)
            }
            Construct::Pred => {
                self.cov.hit("gcase-pred");
                let n = self.value(ctx, &Type::Nat, d);
                let z = self.var_name();
                let body = self.comp(&ctx.bind(&z, Type::sum(Type::One, Type::Nat)), ty, d);
                let w = self.var_name();
                Comp::gcase("pred", n, &z, body, &w, Comp::init(Value::var(&w)))
            }
            Construct::Handle => {
                self.cov.hit("handle");
                self.exc_left -= 1;
                let e = self.exc_name();
                let payload = self.small_type(1);
                let inner = Ctx {
                    delta: ctx.delta.extend(&e, payload.clone(), Tag::Unguarded),
                    gamma: ctx.gamma.clone(),
                };
                let body = self.comp(&inner, ty, d);
                let x = self.var_name();
                let handler = self.comp(&ctx.bind(&x, payload.clone()), ty, d);
                Comp::handle(&e, payload, body, &x, handler)
            }
            Construct::HandleIt => self.handleit(ctx, ty, d),
            Construct::App => {
                self.cov.hit("app");
                let a = self.small_type(1);
                let fty = Type::fun(a.clone(), ctx.delta.clone(), ty.clone());
                let f = self.value(ctx, &fty, d);
                let arg = self.value(ctx, &a, d);
                if self.chance(0.5) {
                    Comp::app(f, arg)
                } else {
                    let g = self.var_name();
                    Comp::new(CompKind::Do {
                        var: g.clone(),
                        ann: Some(fty),
                        bound: Box::new(Comp::ret(f)),
                        body: Box::new(Comp::app(Value::var(&g), arg)),
                    })
                }
            }
        }
    }

    /// `put(n) & body`, where `body` runs with every exception unguarded and
    /// often re-raises straight away.
    fn put_then(&mut self, ctx: &Ctx, n: Value, ty: &Type, depth: usize) -> Comp {
        self.cov.hit("gcase-put");
        let guarded = Ctx {
            delta: ctx.delta.all_unguarded(),
            gamma: ctx.gamma.clone(),
        };
        let loops: Vec<&ExcEntry> = ctx
            .delta
            .entries
            .iter()
            .filter(|e| e.tag == Tag::Guarded)
            .collect();
        let body = if !loops.is_empty() && self.chance(0.5) {
            let e = loops[self.rng.gen_range(0..loops.len())];
            self.cov.hit("raise");
            Comp::raise(&e.name, self.value(&guarded, &e.payload, 0))
        } else {
            self.comp(&guarded, ty, depth)
        };
        let x = self.var_name();
        Comp::gcase("put", n, &x, Comp::init(Value::var(&x)), "_", body)
    }

    fn handleit(&mut self, ctx: &Ctx, ty: &Type, d: usize) -> Comp {
        self.cov.hit("handleit");
        self.exc_left -= 1;
        let e = self.exc_name();
        let var = if self.chance(0.5) {
            e.clone()
        } else {
            self.var_name()
        };
        if self.chance(0.5) {
            // a countdown: exit at zero, otherwise emit and loop on the predecessor
            self.cov.hit("gcase-pred");
            self.cov.hit("case");
            let init = self.value(ctx, &Type::Nat, d);
            let inner = Ctx {
                delta: ctx.delta.extend(&e, Type::Nat, Tag::Guarded),
                gamma: ctx.gamma.clone(),
            }
            .bind(&var, Type::Nat);
            let (z, u, m, w) = (
                self.var_name(),
                self.var_name(),
                self.var_name(),
                self.var_name(),
            );
            let zctx = inner.bind(&z, Type::sum(Type::One, Type::Nat));
            let exit = self.comp(&zctx.bind(&u, Type::One), ty, d.saturating_sub(2));
            let mctx = zctx.bind(&m, Type::Nat);
            let out = if self.chance(0.7) {
                Value::var(&m)
            } else {
                self.value(&mctx, &Type::Nat, 0)
            };
            let step = if self.chance(0.7) {
                self.cov.hit("gcase-put");
                self.cov.hit("raise");
                let x = self.var_name();
                Comp::gcase(
                    "put",
                    out,
                    &x,
                    Comp::init(Value::var(&x)),
                    "_",
                    Comp::raise(&e, Value::var(&m)),
                )
            } else {
                self.put_then(&mctx, out, ty, d.saturating_sub(2))
            };
            let body = Comp::gcase(
                "pred",
                Value::var(&var),
                &z,
                Comp::case(Value::var(&z), &u, exit, &m, step),
                &w,
                Comp::init(Value::var(&w)),
            );
            return Comp::new(CompKind::HandleIt {
                init,
                exc: e,
                ty: Type::Nat,
                var,
                body: Box::new(body),
            });
        }
        let payload = self.small_type(1);
        let init = self.value(ctx, &payload, d);
        let inner = Ctx {
            delta: ctx.delta.extend(&e, payload.clone(), Tag::Guarded),
            gamma: ctx.gamma.clone(),
        }
        .bind(&var, payload.clone());
        let body = self.comp(&inner, ty, d);
        Comp::new(CompKind::HandleIt {
            init,
            exc: e,
            ty: payload,
            var,
            body: Box::new(body),
        })
    }
}

/// Whether a value mentions a lambda anywhere.
pub fn has_lambda(v: &Value) -> bool {
    match &v.kind {
        ValueKind::Lambda(_) => true,
        ValueKind::Var(_) | ValueKind::Star => false,
        ValueKind::Prim(_, a) | ValueKind::Inl(a, _) | ValueKind::Inr(a, _) => has_lambda(a),
        ValueKind::Pair(a, b) => has_lambda(a) || has_lambda(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::pretty_program;

    #[test]
    fn deterministic_per_seed() {
        let cfg = GenConfig {
            seed: 1,
            max_depth: 3,
            ..GenConfig::default()
        };
        assert_eq!(
            pretty_program(&gen_program(&cfg).program),
            pretty_program(&gen_program(&cfg).program)
        );
    }

    #[test]
    fn generated_programs_typecheck_and_cover_every_construct() {
        let mut cov = Coverage::default();
        for seed in 0..1000 {
            let cfg = GenConfig {
                seed,
                max_depth: 6,
                ..GenConfig::default()
            };
            let tp = gen_program_with_coverage(&cfg, &mut cov);
            assert!(tp.ty.is_first_order(), "{}", tp.ty);
        }
        assert!(
            cov.missing().is_empty(),
            "never generated: {:?}",
            cov.missing()
        );
    }

    #[test]
    fn fixed_result_type() {
        let cfg = GenConfig {
            seed: 7,
            result_type: Some(Type::Nat),
            ..GenConfig::default()
        };
        assert_eq!(gen_program(&cfg).ty, Type::Nat);
    }
}
