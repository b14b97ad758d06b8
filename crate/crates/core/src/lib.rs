//! Tower: a reversible language for quantum data structures.
//!
//! The pipeline is `parse` → `desugar` → `check_program` → `inline_program`,
//! after which a single Core statement can be interpreted forwards or
//! backwards, or compiled to a reversible netlist.

pub mod boson;
pub mod circuit;
pub mod cli;
pub mod config;
pub mod ground;
pub mod interp;
pub mod pipeline;
pub mod syntax;
pub mod transform;
pub mod types;

pub use interp::Value;
pub use syntax::kernel::{KernelProgram, Stmt};
pub use types::TypeExpr;
