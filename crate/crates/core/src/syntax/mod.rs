//! Syntax of the EO fragment: AST, parser and renderer.

mod ast;
mod parse;
mod render;

pub use ast::*;
pub use parse::{parse, parse_file, parse_term, SyntaxError, SyntaxErrorKind};
pub use render::{render, render_term, render_top_object};
