//! Program inversion and the lowering of bounded recursion by inlining.

mod inline;
mod invert;

pub use inline::{
    call_prefix, expand_call, inline_main, inline_program, instantiate, CoreProgram, Expansion, InlineCache, InlineError,
};
pub use invert::{invert, invert_all};
