//! Source text to checked kernel program to Core statement.

use std::sync::Arc;

use crate::syntax::kernel::KernelProgram;
use crate::syntax::{parse_and_desugar_with, FrontError};
use crate::transform::{inline_program, CoreProgram, InlineError};
use crate::types::{check_program, CheckOptions, FunctionContext, TypeError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{}: error[{}]: {}", .0.span(), .0.rule(), .0)]
    Front(#[from] FrontError),
    #[error("{}", .0.iter().map(|e| format!("{}: {e}", e.span)).collect::<Vec<_>>().join("\n"))]
    Type(Vec<TypeError>),
    #[error("error[inline]: {0}")]
    Inline(#[from] InlineError),
}

/// A checked program with its elaborated kernel form.
#[derive(Clone, Debug)]
pub struct Checked {
    pub kernel: KernelProgram,
    pub phi: FunctionContext,
}

pub fn check_source(libs: &[&str], src: &str, k: u32) -> Result<Checked, PipelineError> {
    let p = parse_and_desugar_with(libs, src)?;
    let (kernel, phi) = check_program(&p, CheckOptions { k }).map_err(PipelineError::Type)?;
    Ok(Checked { kernel, phi })
}

/// Check and inline `main` into one call-free statement.
pub fn core_source(libs: &[&str], src: &str, k: u32) -> Result<(Checked, Arc<CoreProgram>), PipelineError> {
    let c = check_source(libs, src, k)?;
    let core = inline_program(&c.kernel)?;
    Ok((c, Arc::new(core)))
}
