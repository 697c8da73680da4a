use super::{Pos, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    /// `raise_e` lexes as a single token carrying the exception name.
    Raise(String),
    Number(u64),
    Keyword(&'static str),
    Sym(&'static str),
    Underscore,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
    /// True when no whitespace separates this token from the previous one.
    pub adjacent: bool,
}

const KEYWORDS: &[&str] = &[
    "ret",
    "do",
    "gcase",
    "case",
    "pcase",
    "of",
    "init",
    "handle",
    "handleit",
    "with",
    "in",
    "fun",
    "try",
    "unless",
    "if",
    "then",
    "else",
    "inl",
    "inr",
    "value",
    "effect",
    "exceptions",
    "as",
];

// Longest first.
const SYMBOLS: &[&str] = &[
    "-[", "]>", "<-", "<=", "=>", "->", "(", ")", "[", "]", "{", "}", ",", ":", ";", "*", "+", "=",
    "^", "&", "|",
];

pub struct Lexer<'s> {
    src: &'s str,
    offset: usize,
    line: u32,
    col: u32,
}

impl<'s> Lexer<'s> {
    pub fn new(src: &'s str) -> Self {
        Lexer {
            src,
            offset: 0,
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn rest(&self) -> &'s str {
        &self.src[self.offset..]
    }

    fn bump(&mut self, len: usize) {
        for ch in self.src[self.offset..self.offset + len].chars() {
            if ch == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        self.offset += len;
    }

    /// Skips whitespace and comments, reporting whether anything was skipped.
    fn skip_trivia(&mut self) -> bool {
        let start = self.offset;
        loop {
            let rest = self.rest();
            let Some(ch) = rest.chars().next() else { break };
            if ch.is_whitespace() {
                self.bump(ch.len_utf8());
            } else if ch == '#' {
                let len = rest.find('\n').unwrap_or(rest.len());
                self.bump(len);
            } else {
                break;
            }
        }
        self.offset != start
    }

    pub fn tokenize(mut self) -> Result<Vec<Token>, (Pos, String)> {
        let mut tokens = Vec::new();
        loop {
            let skipped = self.skip_trivia();
            let adjacent = !skipped && !tokens.is_empty();
            let start = self.pos();
            let rest = self.rest();
            let Some(ch) = rest.chars().next() else {
                tokens.push(Token {
                    kind: TokenKind::Eof,
                    span: Span::new(start, start),
                    adjacent,
                });
                return Ok(tokens);
            };
            let (kind, len) = if ch.is_ascii_digit() {
                let len = rest
                    .find(|c: char| !c.is_ascii_digit())
                    .unwrap_or(rest.len());
                let n = rest[..len]
                    .parse::<u64>()
                    .map_err(|_| (start, format!("numeral `{}` is too large", &rest[..len])))?;
                (TokenKind::Number(n), len)
            } else if ch.is_alphabetic() || ch == '_' {
                let len = rest
                    .find(|c: char| !(c.is_alphanumeric() || c == '_' || c == '\''))
                    .unwrap_or(rest.len());
                let word = &rest[..len];
                let kind = if word == "_" {
                    TokenKind::Underscore
                } else if let Some(kw) = KEYWORDS.iter().find(|k| **k == word) {
                    TokenKind::Keyword(kw)
                } else if let Some(exc) = word.strip_prefix("raise_").filter(|e| !e.is_empty()) {
                    TokenKind::Raise(exc.to_string())
                } else {
                    TokenKind::Ident(word.to_string())
                };
                (kind, len)
            } else if let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                (TokenKind::Sym(sym), sym.len())
            } else {
                return Err((start, format!("unexpected character `{ch}`")));
            };
            self.bump(len);
            tokens.push(Token {
                kind,
                span: Span::new(start, self.pos()),
                adjacent,
            });
        }
    }
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Raise(e) => format!("`raise_{e}`"),
            TokenKind::Number(n) => format!("numeral `{n}`"),
            TokenKind::Keyword(k) => format!("`{k}`"),
            TokenKind::Sym(s) => format!("`{s}`"),
            TokenKind::Underscore => "`_`".to_string(),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        Lexer::new(src)
            .tokenize()
            .unwrap()
            .into_iter()
            .map(|t| t.kind)
            .collect()
    }

    #[test]
    fn raise_token_carries_exception_name() {
        assert_eq!(
            kinds("raise_e *"),
            vec![
                TokenKind::Raise("e".into()),
                TokenKind::Sym("*"),
                TokenKind::Eof
            ]
        );
        // bare `raise_` is just an identifier
        assert_eq!(kinds("raise_")[0], TokenKind::Ident("raise_".into()));
    }

    #[test]
    fn function_arrow_tokens() {
        assert_eq!(
            kinds("N -[]> N"),
            vec![
                TokenKind::Ident("N".into()),
                TokenKind::Sym("-["),
                TokenKind::Sym("]>"),
                TokenKind::Ident("N".into()),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let toks = Lexer::new("# hello\n  ret *").tokenize().unwrap();
        assert_eq!(toks[0].kind, TokenKind::Keyword("ret"));
        assert_eq!(toks[0].span.start, Pos { line: 2, col: 3 });
        assert!(toks[1].span.start == Pos { line: 2, col: 7 });
    }

    #[test]
    fn adjacency_distinguishes_calls() {
        let toks = Lexer::new("f(x) f (x)").tokenize().unwrap();
        assert!(toks[1].adjacent);
        assert!(!toks[5].adjacent);
    }
}
