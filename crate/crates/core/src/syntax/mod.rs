//! Abstract syntax of the metalanguage, its concrete grammar and the
//! syntactic operations (desugaring, substitution, alpha-equivalence,
//! printing).

mod desugar;
mod lexer;
mod parser;
mod pretty;
mod subst;

use std::fmt;

pub use desugar::{desugar, desugar_program};
pub use lexer::{Lexer, Token, TokenKind};
pub use parser::{
    parse_comp, parse_program, parse_surface_program, parse_type, parse_value, SyntaxError,
};
pub use pretty::{pretty_comp, pretty_exc_context, pretty_program, pretty_type, pretty_value};
pub use subst::{
    alpha_eq_comp, alpha_eq_value, free_vars_comp, free_vars_value, fresh_name, substitute_comp,
    substitute_value, Bindings,
};

pub type Name = String;

/// A source position (1-based line and column).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Ord, PartialOrd)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

/// Source region of a node. Spans never take part in structural equality,
/// so two terms that differ only in where they were parsed compare equal.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl Span {
    pub fn new(start: Pos, end: Pos) -> Self {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span {
            start: self.start,
            end: other.end,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    /// Exception may be raised anywhere.
    Unguarded,
    /// Exception may only be raised behind a guard.
    Guarded,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Unguarded => f.write_str("u"),
            Tag::Guarded => f.write_str("g"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExcEntry {
    pub name: Name,
    pub payload: Type,
    pub tag: Tag,
}

/// Ordered exception context. Names are pairwise distinct.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ExcContext {
    pub entries: Vec<ExcEntry>,
}

impl ExcContext {
    pub fn new() -> Self {
        ExcContext::default()
    }

    pub fn from_entries(entries: Vec<ExcEntry>) -> Self {
        ExcContext { entries }
    }

    pub fn lookup(&self, name: &str) -> Option<&ExcEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    /// Returns the context extended with a fresh entry at the end.
    pub fn extend(&self, name: &str, payload: Type, tag: Tag) -> ExcContext {
        let mut entries = self.entries.clone();
        entries.push(ExcEntry {
            name: name.to_string(),
            payload,
            tag,
        });
        ExcContext { entries }
    }

    /// The context with every tag set to `u`.
    pub fn all_unguarded(&self) -> ExcContext {
        ExcContext {
            entries: self
                .entries
                .iter()
                .map(|e| ExcEntry {
                    tag: Tag::Unguarded,
                    ..e.clone()
                })
                .collect(),
        }
    }

    /// Tag-erased view `|Δ|`.
    pub fn erase(&self) -> Vec<(&str, &Type)> {
        self.entries
            .iter()
            .map(|e| (e.name.as_str(), &e.payload))
            .collect()
    }

    /// First duplicated exception name, if any.
    pub fn duplicate(&self) -> Option<&str> {
        for (i, e) in self.entries.iter().enumerate() {
            if self.entries[..i].iter().any(|p| p.name == e.name) {
                return Some(&e.name);
            }
        }
        None
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Base(Name),
    Zero,
    One,
    Nat,
    Sum(Box<Type>, Box<Type>),
    Prod(Box<Type>, Box<Type>),
    Fun(Box<Type>, ExcContext, Box<Type>),
}

impl Type {
    pub fn sum(a: Type, b: Type) -> Type {
        Type::Sum(Box::new(a), Box::new(b))
    }

    pub fn prod(a: Type, b: Type) -> Type {
        Type::Prod(Box::new(a), Box::new(b))
    }

    pub fn fun(a: Type, delta: ExcContext, b: Type) -> Type {
        Type::Fun(Box::new(a), delta, Box::new(b))
    }

    /// True when no function type occurs anywhere inside.
    pub fn is_first_order(&self) -> bool {
        match self {
            Type::Base(_) | Type::Zero | Type::One | Type::Nat => true,
            Type::Sum(a, b) | Type::Prod(a, b) => a.is_first_order() && b.is_first_order(),
            Type::Fun(..) => false,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_type(self))
    }
}

impl fmt::Display for ExcContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_exc_context(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Value {
    pub kind: ValueKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValueKind {
    Var(Name),
    Star,
    /// Application of a value-signature operation, e.g. `succ(v)`; `zero` is `zero(*)`.
    Prim(Name, Box<Value>),
    /// Left injection; the optional type is the full ascribed sum type.
    Inl(Box<Value>, Option<Type>),
    Inr(Box<Value>, Option<Type>),
    Pair(Box<Value>, Box<Value>),
    Lambda(Box<Lambda>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lambda {
    pub param: Name,
    pub param_ty: Type,
    pub exc: ExcContext,
    /// Declared result type; needed when the body's type is not determined.
    pub ret_ty: Option<Type>,
    pub body: Comp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Comp {
    pub kind: CompKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompKind {
    Ret(Value),
    /// `do x <- p; q`, with an optional annotation on the binder.
    Do {
        var: Name,
        ann: Option<Type>,
        bound: Box<Comp>,
        body: Box<Comp>,
    },
    GCase {
        op: Name,
        arg: Value,
        left: Name,
        left_body: Box<Comp>,
        right: Name,
        right_body: Box<Comp>,
    },
    Case {
        scrut: Value,
        left: Name,
        left_body: Box<Comp>,
        right: Name,
        right_body: Box<Comp>,
    },
    PCase {
        scrut: Value,
        fst: Name,
        snd: Name,
        body: Box<Comp>,
    },
    Init(Value),
    Raise(Name, Value),
    /// `handle e:E in body with var => handler`.
    Handle {
        exc: Name,
        ty: Type,
        body: Box<Comp>,
        var: Name,
        handler: Box<Comp>,
    },
    /// `handleit e:E as var = init in body`.
    HandleIt {
        init: Value,
        exc: Name,
        ty: Type,
        var: Name,
        body: Box<Comp>,
    },
    App(Value, Value),

    // Surface sugar, eliminated by `desugar`.
    If {
        cond: Value,
        then_branch: Box<Comp>,
        else_branch: Box<Comp>,
    },
    /// `f(v) & p`
    Guard {
        op: Name,
        arg: Value,
        body: Box<Comp>,
    },
    /// Bare effect call `f(v)`.
    Call {
        op: Name,
        arg: Value,
    },
    /// `do p; q`
    Seq(Box<Comp>, Box<Comp>),
    /// `try x:A <= p in q unless e:E => r : B`
    Try {
        var: Name,
        var_ty: Type,
        body: Box<Comp>,
        cont: Box<Comp>,
        exc: Name,
        exc_ty: Type,
        handler: Box<Comp>,
        result_ty: Type,
    },
}

impl Value {
    pub fn new(kind: ValueKind) -> Self {
        Value {
            kind,
            span: Span::default(),
        }
    }

    pub fn var(name: &str) -> Self {
        Value::new(ValueKind::Var(name.to_string()))
    }

    pub fn star() -> Self {
        Value::new(ValueKind::Star)
    }

    pub fn prim(op: &str, arg: Value) -> Self {
        Value::new(ValueKind::Prim(op.to_string(), Box::new(arg)))
    }

    pub fn zero() -> Self {
        Value::prim("zero", Value::star())
    }

    pub fn succ(v: Value) -> Self {
        Value::prim("succ", v)
    }

    pub fn nat(n: u64) -> Self {
        (0..n).fold(Value::zero(), |v, _| Value::succ(v))
    }

    pub fn inl(v: Value, ty: Option<Type>) -> Self {
        Value::new(ValueKind::Inl(Box::new(v), ty))
    }

    pub fn inr(v: Value, ty: Option<Type>) -> Self {
        Value::new(ValueKind::Inr(Box::new(v), ty))
    }

    pub fn pair(a: Value, b: Value) -> Self {
        Value::new(ValueKind::Pair(Box::new(a), Box::new(b)))
    }

    pub fn lambda(
        param: &str,
        param_ty: Type,
        exc: ExcContext,
        ret_ty: Option<Type>,
        body: Comp,
    ) -> Self {
        Value::new(ValueKind::Lambda(Box::new(Lambda {
            param: param.to_string(),
            param_ty,
            exc,
            ret_ty,
            body,
        })))
    }

    /// Reads a `succ(...(zero))` chain back as a number.
    pub fn as_nat(&self) -> Option<u64> {
        let mut n = 0u64;
        let mut cur = self;
        loop {
            match &cur.kind {
                ValueKind::Prim(op, arg) if op == "succ" => {
                    n += 1;
                    cur = arg;
                }
                ValueKind::Prim(op, arg) if op == "zero" && arg.kind == ValueKind::Star => {
                    return Some(n)
                }
                _ => return None,
            }
        }
    }

    pub fn with_span(mut self, span: Span) -> Self {
        self.span = span;
        self
    }
}

impl Comp {
    pub fn new(kind: CompKind) -> Self {
        Comp {
            kind,
            span: Span::default(),
        }
    }

    pub fn with_span(mut self, span: Span) -> Self {
        self.span = span;
        self
    }

    pub fn ret(v: Value) -> Self {
        Comp::new(CompKind::Ret(v))
    }

    pub fn raise(exc: &str, v: Value) -> Self {
        Comp::new(CompKind::Raise(exc.to_string(), v))
    }

    pub fn init(v: Value) -> Self {
        Comp::new(CompKind::Init(v))
    }

    pub fn bind(var: &str, bound: Comp, body: Comp) -> Self {
        Comp::new(CompKind::Do {
            var: var.to_string(),
            ann: None,
            bound: Box::new(bound),
            body: Box::new(body),
        })
    }

    pub fn gcase(
        op: &str,
        arg: Value,
        left: &str,
        left_body: Comp,
        right: &str,
        right_body: Comp,
    ) -> Self {
        Comp::new(CompKind::GCase {
            op: op.to_string(),
            arg,
            left: left.to_string(),
            left_body: Box::new(left_body),
            right: right.to_string(),
            right_body: Box::new(right_body),
        })
    }

    /// `put(n) & body` in core form.
    pub fn put_then(arg: Value, body: Comp) -> Self {
        Comp::gcase("put", arg, "x", Comp::init(Value::var("x")), "_", body)
    }

    pub fn case(scrut: Value, left: &str, left_body: Comp, right: &str, right_body: Comp) -> Self {
        Comp::new(CompKind::Case {
            scrut,
            left: left.to_string(),
            left_body: Box::new(left_body),
            right: right.to_string(),
            right_body: Box::new(right_body),
        })
    }

    pub fn pcase(scrut: Value, fst: &str, snd: &str, body: Comp) -> Self {
        Comp::new(CompKind::PCase {
            scrut,
            fst: fst.to_string(),
            snd: snd.to_string(),
            body: Box::new(body),
        })
    }

    pub fn handle(exc: &str, ty: Type, body: Comp, var: &str, handler: Comp) -> Self {
        Comp::new(CompKind::Handle {
            exc: exc.to_string(),
            ty,
            body: Box::new(body),
            var: var.to_string(),
            handler: Box::new(handler),
        })
    }

    pub fn handleit(exc: &str, ty: Type, init: Value, body: Comp) -> Self {
        Comp::new(CompKind::HandleIt {
            init,
            exc: exc.to_string(),
            ty,
            var: exc.to_string(),
            body: Box::new(body),
        })
    }

    pub fn app(f: Value, arg: Value) -> Self {
        Comp::new(CompKind::App(f, arg))
    }

    /// True when no surface sugar occurs anywhere in the term.
    pub fn is_core(&self) -> bool {
        match &self.kind {
            CompKind::Ret(v) | CompKind::Init(v) | CompKind::Raise(_, v) => v.is_core(),
            CompKind::Do { bound, body, .. } => bound.is_core() && body.is_core(),
            CompKind::GCase {
                arg,
                left_body,
                right_body,
                ..
            } => arg.is_core() && left_body.is_core() && right_body.is_core(),
            CompKind::Case {
                scrut,
                left_body,
                right_body,
                ..
            } => scrut.is_core() && left_body.is_core() && right_body.is_core(),
            CompKind::PCase { scrut, body, .. } => scrut.is_core() && body.is_core(),
            CompKind::Handle { body, handler, .. } => body.is_core() && handler.is_core(),
            CompKind::HandleIt { init, body, .. } => init.is_core() && body.is_core(),
            CompKind::App(f, a) => f.is_core() && a.is_core(),
            CompKind::If { .. }
            | CompKind::Guard { .. }
            | CompKind::Call { .. }
            | CompKind::Seq(..)
            | CompKind::Try { .. } => false,
        }
    }

    /// Number of computation and value nodes.
    pub fn size(&self) -> usize {
        1 + match &self.kind {
            CompKind::Ret(v) | CompKind::Init(v) | CompKind::Raise(_, v) => v.size(),
            CompKind::Do { bound, body, .. } => bound.size() + body.size(),
            CompKind::GCase {
                arg,
                left_body,
                right_body,
                ..
            } => arg.size() + left_body.size() + right_body.size(),
            CompKind::Case {
                scrut,
                left_body,
                right_body,
                ..
            } => scrut.size() + left_body.size() + right_body.size(),
            CompKind::PCase { scrut, body, .. } => scrut.size() + body.size(),
            CompKind::Handle { body, handler, .. } => body.size() + handler.size(),
            CompKind::HandleIt { init, body, .. } => init.size() + body.size(),
            CompKind::App(f, a) => f.size() + a.size(),
            CompKind::If {
                cond,
                then_branch,
                else_branch,
            } => cond.size() + then_branch.size() + else_branch.size(),
            CompKind::Guard { arg, body, .. } => arg.size() + body.size(),
            CompKind::Call { arg, .. } => arg.size(),
            CompKind::Seq(p, q) => p.size() + q.size(),
            CompKind::Try {
                body,
                cont,
                handler,
                ..
            } => body.size() + cont.size() + handler.size(),
        }
    }
}

impl Value {
    pub fn is_core(&self) -> bool {
        match &self.kind {
            ValueKind::Var(_) | ValueKind::Star => true,
            ValueKind::Prim(_, v) | ValueKind::Inl(v, _) | ValueKind::Inr(v, _) => v.is_core(),
            ValueKind::Pair(a, b) => a.is_core() && b.is_core(),
            ValueKind::Lambda(l) => l.body.is_core(),
        }
    }

    pub fn size(&self) -> usize {
        1 + match &self.kind {
            ValueKind::Var(_) | ValueKind::Star => 0,
            ValueKind::Prim(_, v) | ValueKind::Inl(v, _) | ValueKind::Inr(v, _) => v.size(),
            ValueKind::Pair(a, b) => a.size() + b.size(),
            ValueKind::Lambda(l) => l.body.size(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_value(self))
    }
}

impl fmt::Display for Comp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_comp(self))
    }
}

/// Whether a signature symbol is a pure value operation or an effect.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SigKind {
    /// `f : A -> B`
    Value { arg: Type, result: Type },
    /// `f : A -> B [C]`
    Effect {
        arg: Type,
        result: Type,
        guarded: Type,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decl {
    pub name: Name,
    pub kind: SigKind,
    pub span: Span,
}

/// The signature: built-in `zero`, `succ`, `pred`, `put` plus user declarations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    decls: Vec<Decl>,
}

pub const BUILTIN_OPS: [&str; 4] = ["zero", "succ", "pred", "put"];

impl Default for Signature {
    fn default() -> Self {
        Signature::builtin()
    }
}

impl Signature {
    pub fn builtin() -> Self {
        let decl = |name: &str, kind| Decl {
            name: name.to_string(),
            kind,
            span: Span::default(),
        };
        Signature {
            decls: vec![
                decl(
                    "zero",
                    SigKind::Value {
                        arg: Type::One,
                        result: Type::Nat,
                    },
                ),
                decl(
                    "succ",
                    SigKind::Value {
                        arg: Type::Nat,
                        result: Type::Nat,
                    },
                ),
                decl(
                    "pred",
                    SigKind::Effect {
                        arg: Type::Nat,
                        result: Type::sum(Type::One, Type::Nat),
                        guarded: Type::Zero,
                    },
                ),
                decl(
                    "put",
                    SigKind::Effect {
                        arg: Type::Nat,
                        result: Type::Zero,
                        guarded: Type::One,
                    },
                ),
            ],
        }
    }

    pub fn lookup(&self, name: &str) -> Option<&SigKind> {
        self.decls.iter().find(|d| d.name == name).map(|d| &d.kind)
    }

    pub fn is_value_op(&self, name: &str) -> bool {
        matches!(self.lookup(name), Some(SigKind::Value { .. }))
    }

    pub fn is_effect(&self, name: &str) -> bool {
        matches!(self.lookup(name), Some(SigKind::Effect { .. }))
    }

    /// Adds a declaration; fails with the clashing declaration's name if taken.
    pub fn declare(&mut self, decl: Decl) -> Result<(), Name> {
        if self.lookup(&decl.name).is_some() {
            return Err(decl.name);
        }
        self.decls.push(decl);
        Ok(())
    }

    /// Declarations beyond the built-ins, in source order.
    pub fn user_decls(&self) -> &[Decl] {
        &self.decls[BUILTIN_OPS.len()..]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub signature: Signature,
    pub exceptions: ExcContext,
    pub main: Comp,
}

impl Program {
    pub fn new(main: Comp, exceptions: ExcContext) -> Self {
        Program {
            signature: Signature::builtin(),
            exceptions,
            main,
        }
    }
}
