//! Recursive-descent parser for `.gml` sources.
//!
//! Grammar summary (sugar forms in the second block):
//!
//! ```text
//! comp  ::= ret v | do x [: A] <- comp; comp | init v | raise_e v | v w
//!         | gcase f(v) of inl x => comp | inr y => comp
//!         | case v of inl x => comp | inr y => comp
//!         | pcase v of (x, y) => comp
//!         | handle e:E in comp with [x =>] comp
//!         | handleit e:E [as x] = v in comp
//!         | { comp }
//!         | if v then comp else comp | f(v) & comp | f(v) | do comp; comp
//!         | try x:A <= comp in comp unless e:E => comp : B
//! value ::= x | * | n | f(v) | f() | inl v | inr v | (v, w) | (v : A+B) | (v)
//!         | fun (x:A)[Δ] [: B] => comp
//! type  ::= 0 | 1 | N | Name | A + B | A * B | A -[Δ]> B | (A)
//! Δ     ::= e:E^u, e:E^g, ...
//! ```

use std::fmt;

use super::lexer::{Lexer, Token, TokenKind};
use super::{
    desugar_program, Comp, CompKind, Decl, ExcContext, ExcEntry, Name, Pos, Program, SigKind,
    Signature, Span, Tag, Type, Value, ValueKind,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntaxError {
    pub pos: Pos,
    pub expected: Vec<String>,
    pub found: String,
    pub message: Option<String>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.pos.line, self.pos.col)?;
        if let Some(msg) = &self.message {
            return f.write_str(msg);
        }
        write!(
            f,
            "expected {}, found {}",
            self.expected.join(" or "),
            self.found
        )
    }
}

impl std::error::Error for SyntaxError {}

type PResult<T> = Result<T, SyntaxError>;

struct Parser<'a> {
    tokens: Vec<Token>,
    idx: usize,
    sig: &'a Signature,
}

/// Parses a whole program and eliminates surface sugar.
pub fn parse_program(src: &str) -> PResult<Program> {
    Ok(desugar_program(&parse_surface_program(src)?))
}

/// Parses a whole program, keeping sugar nodes.
pub fn parse_surface_program(src: &str) -> PResult<Program> {
    let tokens = lex(src)?;
    let mut sig = Signature::builtin();
    let mut exceptions = ExcContext::new();
    // Declarations come first and feed the signature used for the main term.
    let builtin = Signature::builtin();
    let mut p = Parser {
        tokens,
        idx: 0,
        sig: &builtin,
    };
    loop {
        match p.peek().clone() {
            TokenKind::Keyword("value") => {
                let start = p.span();
                p.advance();
                let name = p.ident()?;
                p.expect_sym(":")?;
                let arg = p.fun_type()?;
                p.expect_sym("->")?;
                let result = p.fun_type()?;
                let decl = Decl {
                    name,
                    kind: SigKind::Value { arg, result },
                    span: start.join(p.prev_span()),
                };
                if let Err(name) = sig.declare(decl) {
                    return Err(p.error_msg(start.start, format!("`{name}` is already declared")));
                }
            }
            TokenKind::Keyword("effect") => {
                let start = p.span();
                p.advance();
                let name = p.ident()?;
                p.expect_sym(":")?;
                let arg = p.fun_type()?;
                p.expect_sym("->")?;
                let result = p.fun_type()?;
                p.expect_sym("[")?;
                let guarded = p.fun_type()?;
                p.expect_sym("]")?;
                let decl = Decl {
                    name,
                    kind: SigKind::Effect {
                        arg,
                        result,
                        guarded,
                    },
                    span: start.join(p.prev_span()),
                };
                if let Err(name) = sig.declare(decl) {
                    return Err(p.error_msg(start.start, format!("`{name}` is already declared")));
                }
            }
            TokenKind::Keyword("exceptions") => {
                p.advance();
                loop {
                    exceptions.entries.push(p.exc_entry()?);
                    if !p.eat_sym(",") {
                        break;
                    }
                }
            }
            _ => break,
        }
    }
    let mut p = Parser {
        tokens: p.tokens,
        idx: p.idx,
        sig: &sig,
    };
    let main = p.comp()?;
    p.expect_eof()?;
    Ok(Program {
        signature: sig.clone(),
        exceptions,
        main,
    })
}

/// Parses a computation against the built-in signature, keeping sugar.
pub fn parse_comp(src: &str) -> PResult<Comp> {
    let sig = Signature::builtin();
    let mut p = Parser {
        tokens: lex(src)?,
        idx: 0,
        sig: &sig,
    };
    let c = p.comp()?;
    p.expect_eof()?;
    Ok(c)
}

pub fn parse_value(src: &str) -> PResult<Value> {
    let sig = Signature::builtin();
    let mut p = Parser {
        tokens: lex(src)?,
        idx: 0,
        sig: &sig,
    };
    let v = p.value()?;
    p.expect_eof()?;
    Ok(v)
}

pub fn parse_type(src: &str) -> PResult<Type> {
    let sig = Signature::builtin();
    let mut p = Parser {
        tokens: lex(src)?,
        idx: 0,
        sig: &sig,
    };
    let t = p.fun_type()?;
    p.expect_eof()?;
    Ok(t)
}

fn lex(src: &str) -> PResult<Vec<Token>> {
    Lexer::new(src)
        .tokenize()
        .map_err(|(pos, msg)| SyntaxError {
            pos,
            expected: vec![],
            found: String::new(),
            message: Some(msg),
        })
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.idx].kind
    }

    fn peek_at(&self, n: usize) -> &TokenKind {
        let i = (self.idx + n).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn span(&self) -> Span {
        self.tokens[self.idx].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.idx.saturating_sub(1)].span
    }

    fn advance(&mut self) -> &Token {
        let t = &self.tokens[self.idx];
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        SyntaxError {
            pos: self.span().start,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
            message: None,
        }
    }

    fn error_msg(&self, pos: Pos, message: String) -> SyntaxError {
        SyntaxError {
            pos,
            expected: vec![],
            found: self.peek().describe(),
            message: Some(message),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), TokenKind::Sym(t) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), TokenKind::Keyword(t) if *t == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{s}`")]))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{k}`")]))
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if *self.peek() == TokenKind::Eof {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        match self.peek().clone() {
            TokenKind::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn binder(&mut self) -> PResult<Name> {
        match self.peek().clone() {
            TokenKind::Ident(s) => {
                self.advance();
                Ok(s)
            }
            TokenKind::Underscore => {
                self.advance();
                Ok("_".to_string())
            }
            _ => Err(self.error(&["identifier", "`_`"])),
        }
    }

    fn is_binder_at(&self, n: usize) -> bool {
        matches!(self.peek_at(n), TokenKind::Ident(_) | TokenKind::Underscore)
    }

    // ---- types ----

    fn fun_type(&mut self) -> PResult<Type> {
        let dom = self.sum_type()?;
        if self.eat_sym("-[") {
            let delta = self.exc_list("]>")?;
            let cod = self.fun_type()?;
            return Ok(Type::fun(dom, delta, cod));
        }
        Ok(dom)
    }

    fn sum_type(&mut self) -> PResult<Type> {
        let mut t = self.prod_type()?;
        while self.eat_sym("+") {
            t = Type::sum(t, self.prod_type()?);
        }
        Ok(t)
    }

    fn prod_type(&mut self) -> PResult<Type> {
        let mut t = self.atom_type()?;
        while self.eat_sym("*") {
            t = Type::prod(t, self.atom_type()?);
        }
        Ok(t)
    }

    fn atom_type(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            TokenKind::Number(0) => {
                self.advance();
                Ok(Type::Zero)
            }
            TokenKind::Number(1) => {
                self.advance();
                Ok(Type::One)
            }
            TokenKind::Ident(s) => {
                self.advance();
                Ok(if s == "N" { Type::Nat } else { Type::Base(s) })
            }
            TokenKind::Sym("(") => {
                self.advance();
                let t = self.fun_type()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            _ => Err(self.error(&["type"])),
        }
    }

    fn exc_entry(&mut self) -> PResult<ExcEntry> {
        let name = self.ident()?;
        self.expect_sym(":")?;
        let payload = self.fun_type()?;
        self.expect_sym("^")?;
        let tag = match self.peek() {
            TokenKind::Ident(t) if t == "u" => Tag::Unguarded,
            TokenKind::Ident(t) if t == "g" => Tag::Guarded,
            _ => return Err(self.error(&["`u`", "`g`"])),
        };
        self.advance();
        Ok(ExcEntry { name, payload, tag })
    }

    /// Comma-separated exception entries up to (and including) `close`.
    fn exc_list(&mut self, close: &str) -> PResult<ExcContext> {
        let mut entries = Vec::new();
        if self.eat_sym(close) {
            return Ok(ExcContext { entries });
        }
        loop {
            entries.push(self.exc_entry()?);
            if self.eat_sym(close) {
                return Ok(ExcContext { entries });
            }
            if !self.eat_sym(",") {
                return Err(self.error(&["`,`", &format!("`{close}`")]));
            }
        }
    }

    // ---- values ----

    fn value(&mut self) -> PResult<Value> {
        self.value_atom()
    }

    fn call_arg(&mut self) -> PResult<Value> {
        self.expect_sym("(")?;
        if self.eat_sym(")") {
            return Ok(Value::star().with_span(self.prev_span()));
        }
        let v = self.value()?;
        self.expect_sym(")")?;
        Ok(v)
    }

    fn next_is_call(&self) -> bool {
        let next = &self.tokens[(self.idx + 1).min(self.tokens.len() - 1)];
        matches!(next.kind, TokenKind::Sym("(")) && next.adjacent
    }

    fn value_atom(&mut self) -> PResult<Value> {
        let start = self.span();
        let kind = match self.peek().clone() {
            TokenKind::Ident(name) => {
                if self.next_is_call() {
                    self.advance();
                    let arg = self.call_arg()?;
                    ValueKind::Prim(name, Box::new(arg))
                } else {
                    self.advance();
                    if self.sig.is_value_op(&name) {
                        ValueKind::Prim(name, Box::new(Value::star().with_span(start)))
                    } else {
                        ValueKind::Var(name)
                    }
                }
            }
            TokenKind::Sym("*") => {
                self.advance();
                ValueKind::Star
            }
            TokenKind::Number(n) => {
                self.advance();
                return Ok(numeral(n, start));
            }
            TokenKind::Keyword("inl") => {
                self.advance();
                ValueKind::Inl(Box::new(self.value_atom()?), None)
            }
            TokenKind::Keyword("inr") => {
                self.advance();
                ValueKind::Inr(Box::new(self.value_atom()?), None)
            }
            TokenKind::Keyword("fun") => return self.lambda(),
            TokenKind::Sym("(") => {
                self.advance();
                let first = self.value()?;
                if self.eat_sym(",") {
                    let second = self.value()?;
                    self.expect_sym(")")?;
                    ValueKind::Pair(Box::new(first), Box::new(second))
                } else if self.eat_sym(":") {
                    let ty = self.fun_type()?;
                    self.expect_sym(")")?;
                    match first.kind {
                        ValueKind::Inl(v, _) => ValueKind::Inl(v, Some(ty)),
                        ValueKind::Inr(v, _) => ValueKind::Inr(v, Some(ty)),
                        _ => {
                            return Err(self.error_msg(
                                start.start,
                                "type ascriptions are only allowed on `inl`/`inr` values"
                                    .to_string(),
                            ))
                        }
                    }
                } else {
                    self.expect_sym(")")?;
                    return Ok(first.with_span(start.join(self.prev_span())));
                }
            }
            _ => return Err(self.error(&["value"])),
        };
        Ok(Value {
            kind,
            span: start.join(self.prev_span()),
        })
    }

    fn lambda(&mut self) -> PResult<Value> {
        let start = self.span();
        self.expect_kw("fun")?;
        self.expect_sym("(")?;
        let param = self.binder()?;
        self.expect_sym(":")?;
        let param_ty = self.fun_type()?;
        self.expect_sym(")")?;
        self.expect_sym("[")?;
        let exc = self.exc_list("]")?;
        let ret_ty = if self.eat_sym(":") {
            Some(self.fun_type()?)
        } else {
            None
        };
        self.expect_sym("=>")?;
        let body = self.comp()?;
        Ok(Value::lambda(&param, param_ty, exc, ret_ty, body)
            .with_span(start.join(self.prev_span())))
    }

    // ---- computations ----

    fn comp(&mut self) -> PResult<Comp> {
        let start = self.span();
        let kind = match self.peek().clone() {
            TokenKind::Keyword("ret") => {
                self.advance();
                CompKind::Ret(self.value()?)
            }
            TokenKind::Keyword("do") => {
                self.advance();
                let binder_form = self.is_binder_at(0)
                    && matches!(self.peek_at(1), TokenKind::Sym("<-") | TokenKind::Sym(":"));
                if binder_form {
                    let var = self.binder()?;
                    let ann = if self.eat_sym(":") {
                        Some(self.fun_type()?)
                    } else {
                        None
                    };
                    self.expect_sym("<-")?;
                    let bound = self.comp()?;
                    self.expect_sym(";")?;
                    let body = self.comp()?;
                    CompKind::Do {
                        var,
                        ann,
                        bound: Box::new(bound),
                        body: Box::new(body),
                    }
                } else {
                    let first = self.comp()?;
                    self.expect_sym(";")?;
                    let second = self.comp()?;
                    CompKind::Seq(Box::new(first), Box::new(second))
                }
            }
            TokenKind::Keyword("gcase") => {
                self.advance();
                let op = self.ident()?;
                let arg = self.call_arg()?;
                self.expect_kw("of")?;
                let (left, left_body, right, right_body) = self.two_branches()?;
                CompKind::GCase {
                    op,
                    arg,
                    left,
                    left_body: Box::new(left_body),
                    right,
                    right_body: Box::new(right_body),
                }
            }
            TokenKind::Keyword("case") => {
                self.advance();
                let scrut = self.value()?;
                self.expect_kw("of")?;
                let (left, left_body, right, right_body) = self.two_branches()?;
                CompKind::Case {
                    scrut,
                    left,
                    left_body: Box::new(left_body),
                    right,
                    right_body: Box::new(right_body),
                }
            }
            TokenKind::Keyword("pcase") => {
                self.advance();
                let scrut = self.value()?;
                self.expect_kw("of")?;
                self.expect_sym("(")?;
                let fst = self.binder()?;
                self.expect_sym(",")?;
                let snd = self.binder()?;
                self.expect_sym(")")?;
                self.expect_sym("=>")?;
                let body = self.comp()?;
                CompKind::PCase {
                    scrut,
                    fst,
                    snd,
                    body: Box::new(body),
                }
            }
            TokenKind::Keyword("init") => {
                self.advance();
                CompKind::Init(self.value()?)
            }
            TokenKind::Raise(exc) => {
                self.advance();
                CompKind::Raise(exc, self.value()?)
            }
            TokenKind::Keyword("handle") => {
                self.advance();
                let exc = self.ident()?;
                self.expect_sym(":")?;
                let ty = self.fun_type()?;
                self.expect_kw("in")?;
                let body = self.comp()?;
                self.expect_kw("with")?;
                let var = if self.is_binder_at(0) && matches!(self.peek_at(1), TokenKind::Sym("=>"))
                {
                    let v = self.binder()?;
                    self.advance();
                    v
                } else {
                    exc.clone()
                };
                let handler = self.comp()?;
                CompKind::Handle {
                    exc,
                    ty,
                    body: Box::new(body),
                    var,
                    handler: Box::new(handler),
                }
            }
            TokenKind::Keyword("handleit") => {
                self.advance();
                let exc = self.ident()?;
                self.expect_sym(":")?;
                let ty = self.fun_type()?;
                let var = if self.eat_kw("as") {
                    self.binder()?
                } else {
                    exc.clone()
                };
                self.expect_sym("=")?;
                let init = self.value()?;
                self.expect_kw("in")?;
                let body = self.comp()?;
                CompKind::HandleIt {
                    init,
                    exc,
                    ty,
                    var,
                    body: Box::new(body),
                }
            }
            TokenKind::Keyword("if") => {
                self.advance();
                let cond = self.value()?;
                self.expect_kw("then")?;
                let then_branch = self.comp()?;
                self.expect_kw("else")?;
                let else_branch = self.comp()?;
                CompKind::If {
                    cond,
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                }
            }
            TokenKind::Keyword("try") => {
                self.advance();
                let var = self.binder()?;
                self.expect_sym(":")?;
                let var_ty = self.fun_type()?;
                self.expect_sym("<=")?;
                let body = self.comp()?;
                self.expect_kw("in")?;
                let cont = self.comp()?;
                self.expect_kw("unless")?;
                let exc = self.ident()?;
                self.expect_sym(":")?;
                let exc_ty = self.fun_type()?;
                self.expect_sym("=>")?;
                let handler = self.comp()?;
                self.expect_sym(":")?;
                let result_ty = self.fun_type()?;
                CompKind::Try {
                    var,
                    var_ty,
                    body: Box::new(body),
                    cont: Box::new(cont),
                    exc,
                    exc_ty,
                    handler: Box::new(handler),
                    result_ty,
                }
            }
            TokenKind::Sym("{") => {
                self.advance();
                let inner = self.comp()?;
                self.expect_sym("}")?;
                return Ok(inner.with_span(start.join(self.prev_span())));
            }
            TokenKind::Ident(name) if self.next_is_call() && !self.sig.is_value_op(&name) => {
                self.advance();
                let arg = self.call_arg()?;
                if self.eat_sym("&") {
                    let body = self.comp()?;
                    CompKind::Guard {
                        op: name,
                        arg,
                        body: Box::new(body),
                    }
                } else {
                    CompKind::Call { op: name, arg }
                }
            }
            TokenKind::Ident(_)
            | TokenKind::Sym("(")
            | TokenKind::Sym("*")
            | TokenKind::Number(_)
            | TokenKind::Keyword("inl")
            | TokenKind::Keyword("inr")
            | TokenKind::Keyword("fun") => {
                let f = self.value_atom()?;
                let arg = self.value_atom()?;
                CompKind::App(f, arg)
            }
            _ => return Err(self.error(&["computation"])),
        };
        Ok(Comp {
            kind,
            span: start.join(self.prev_span()),
        })
    }

    fn two_branches(&mut self) -> PResult<(Name, Comp, Name, Comp)> {
        self.expect_kw("inl")?;
        let left = self.binder()?;
        self.expect_sym("=>")?;
        let left_body = self.comp()?;
        self.expect_sym("|")?;
        self.expect_kw("inr")?;
        let right = self.binder()?;
        self.expect_sym("=>")?;
        let right_body = self.comp()?;
        Ok((left, left_body, right, right_body))
    }
}

fn numeral(n: u64, span: Span) -> Value {
    let mut v = Value::prim("zero", Value::star().with_span(span)).with_span(span);
    for _ in 0..n {
        v = Value::succ(v).with_span(span);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_program() {
        assert_eq!(parse_comp("ret *").unwrap(), Comp::ret(Value::star()));
    }

    #[test]
    fn unclosed_paren_is_reported_at_the_paren() {
        let err = parse_comp("ret (").unwrap_err();
        // the value after `(` is missing; the error sits right after the paren
        assert_eq!(err.pos.line, 1);
        assert_eq!(err.pos.col, 6);
        assert_eq!(err.expected, vec!["value".to_string()]);
        assert_eq!(err.found, "end of input");
    }

    #[test]
    fn do_bind_and_sequence() {
        let c = parse_comp("do x <- ret 1; ret x").unwrap();
        assert_eq!(
            c,
            Comp::bind("x", Comp::ret(Value::nat(1)), Comp::ret(Value::var("x")))
        );
        let s = parse_comp("do put(1); ret *").unwrap();
        assert!(matches!(s.kind, CompKind::Seq(..)));
    }

    #[test]
    fn numerals_expand() {
        assert_eq!(parse_value("3").unwrap(), Value::nat(3));
        assert_eq!(parse_value("zero").unwrap(), Value::zero());
        assert_eq!(parse_value("succ(zero)").unwrap(), Value::nat(1));
    }

    #[test]
    fn types_parse_with_precedence() {
        let t = parse_type("1 + N * N -[e:1^u]> N").unwrap();
        let delta = ExcContext::new().extend("e", Type::One, Tag::Unguarded);
        assert_eq!(
            t,
            Type::fun(
                Type::sum(Type::One, Type::prod(Type::Nat, Type::Nat)),
                delta,
                Type::Nat
            )
        );
    }

    #[test]
    fn ascription_only_on_injections() {
        assert_eq!(
            parse_value("(inl * : 1+N)").unwrap(),
            Value::inl(Value::star(), Some(Type::sum(Type::One, Type::Nat)))
        );
        assert!(parse_value("(* : 1)").is_err());
    }

    #[test]
    fn call_versus_application() {
        let call = parse_comp("put(3)").unwrap();
        assert!(matches!(call.kind, CompKind::Call { .. }));
        let app = parse_comp("f (x)").unwrap();
        assert_eq!(app, Comp::app(Value::var("f"), Value::var("x")));
    }

    #[test]
    fn program_with_declarations() {
        let src = "value eq42 : N -> 1+1\neffect rand : 1 -> N [0]\nexceptions r:1^u\nret *";
        let p = parse_surface_program(src).unwrap();
        assert!(p.signature.is_value_op("eq42"));
        assert!(p.signature.is_effect("rand"));
        assert_eq!(p.exceptions.len(), 1);
    }

    #[test]
    fn duplicate_declaration_rejected() {
        let err = parse_surface_program("value put : N -> N\nret *").unwrap_err();
        assert!(err.message.unwrap().contains("already declared"));
    }
}
