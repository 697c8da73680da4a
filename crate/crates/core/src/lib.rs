//! Guarded iteration toolkit: syntax, type checking, monad kernel and
//! the two interpreters of the metalanguage.

pub mod deno;
pub mod harness;
pub mod monad;
pub mod oper;
pub mod syntax;
pub mod typing;
