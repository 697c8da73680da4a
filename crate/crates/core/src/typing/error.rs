use std::fmt;

use serde::Serialize;

use crate::syntax::{Span, SyntaxError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ErrorCode {
    UnboundVar,
    UnboundExc,
    GuardedRaise,
    TagMismatch,
    TypeMismatch,
    SignatureMismatch,
    ExcContextMismatch,
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{}:{}: {code}: {message}", span.start.line, span.start.col)]
pub struct TypeError {
    pub code: ErrorCode,
    pub span: Span,
    pub message: String,
}

impl TypeError {
    pub fn new(code: ErrorCode, span: Span, message: impl Into<String>) -> Self {
        TypeError {
            code,
            span,
            message: message.into(),
        }
    }
}

/// A positioned message as emitted by `glc check --json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: String,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl From<&TypeError> for Diagnostic {
    fn from(e: &TypeError) -> Self {
        Diagnostic {
            code: e.code.to_string(),
            line: e.span.start.line,
            col: e.span.start.col,
            message: e.message.clone(),
        }
    }
}

impl From<&SyntaxError> for Diagnostic {
    fn from(e: &SyntaxError) -> Self {
        let message = match &e.message {
            Some(m) => m.clone(),
            None => format!("expected {}, found {}", e.expected.join(" or "), e.found),
        };
        Diagnostic {
            code: "SyntaxError".into(),
            line: e.pos.line,
            col: e.pos.col,
            message,
        }
    }
}
