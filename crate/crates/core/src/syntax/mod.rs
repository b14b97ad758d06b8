//! Surface syntax, kernel AST and the passes between them.

pub mod alpha;
pub mod ast;
pub mod desugar;
pub mod kernel;
pub mod lexer;
pub mod parser;
pub mod pretty;

use std::fmt;
use std::hash::{Hash, Hasher};

pub use desugar::{desugar, DesugarError};
pub use parser::{parse, parse_library, ParseError};
pub use pretty::pretty_print;

/// A source position. Spans never take part in AST equality.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Span {
        Span { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Prefix for compiler-generated names. It cannot start a source identifier.
pub const FRESH_PREFIX: char = '$';

pub fn is_fresh_name(name: &str) -> bool {
    name.starts_with(FRESH_PREFIX)
}

/// Parse and desugar in one go.
pub fn parse_and_desugar(src: &str) -> Result<kernel::KernelProgram, FrontError> {
    let surface = parse(src)?;
    Ok(desugar(&surface)?)
}

/// Parse and desugar a program whose helper functions come from library sources.
pub fn parse_and_desugar_with(libs: &[&str], src: &str) -> Result<kernel::KernelProgram, FrontError> {
    let mut surface = ast::SurfaceProgram { items: Vec::new() };
    for lib in libs {
        surface.items.extend(parse_library(lib)?.items);
    }
    surface.items.extend(parse(src)?.items);
    Ok(desugar(&surface)?)
}

#[derive(Debug, thiserror::Error)]
pub enum FrontError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Desugar(#[from] DesugarError),
}

impl FrontError {
    pub fn span(&self) -> Span {
        match self {
            FrontError::Parse(e) => e.span,
            FrontError::Desugar(e) => e.span(),
        }
    }

    pub fn rule(&self) -> &'static str {
        match self {
            FrontError::Parse(_) => "parse",
            FrontError::Desugar(_) => "desugar",
        }
    }
}
