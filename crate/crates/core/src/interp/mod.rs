//! Reversible interpreter for kernel statements.

mod machine;
mod value;

pub use machine::{
    check_leaks, default_of, reachable, run_core, run_core_inverse, run_core_reverse, run_with_calls, Diagnostic, Direction, FinalState,
    Machine, Regs, RunOptions, Stats, StepError,
};
pub use value::{Value, ValueParseError};
