//! C interface to the tower toolchain.
//!
//! Programs are opaque handles created by [`tower_program_new`] and released
//! with [`tower_program_free`]. Every fallible call returns a [`TowerStatus`];
//! on failure [`tower_last_error`] describes what went wrong on this thread.
//! Strings handed out by the library must be released with
//! [`tower_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use tower::circuit::{compile, cost_report};
use tower::cli::{read_value, show_value};
use tower::config::Config;
use tower::interp::{default_of, run_core, run_core_reverse};
use tower::pipeline::core_source;
use tower::syntax::pretty::pretty_stmt;
use tower::transform::{invert, CoreProgram};

/// Result of a call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TowerStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The program failed to parse or type-check, or an input was malformed.
    Rejected = 3,
    /// The program stopped with a runtime error such as Stuck-UnAssign or Leak.
    Runtime = 4,
    /// The program could not be compiled to a circuit.
    Compile = 5,
    /// An internal error; the library state is unaffected.
    Internal = 6,
}

/// A checked program with every call inlined into `main`.
pub struct TowerProgram {
    core: Arc<CoreProgram>,
    cfg: Config,
}

/// Gate and qubit counts of the compiled circuit.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TowerCost {
    pub gates: usize,
    pub qubits: usize,
    /// Primitive gates after expansion, or 0 when unknown.
    pub primitive_gates: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(TowerStatus, String);

fn fail(status: TowerStatus, msg: impl ToString) -> Failure {
    Failure(status, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TowerStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TowerStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error");
            TowerStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(TowerStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(TowerStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn texts<'a>(p: *const *const c_char, n: usize, what: &str) -> Result<Vec<&'a str>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(fail(TowerStatus::NullArgument, format!("{what} is null")));
    }
    (0..n).map(|i| text(*p.add(i), what)).collect()
}

unsafe fn give(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s.replace('\0', " ")).map_err(|e| fail(TowerStatus::Internal, e))?;
    *out = c.into_raw();
    Ok(())
}

/// Check and inline `source` together with `n_libs` library sources at word
/// size `k`. On success `*out` holds a new handle.
///
/// # Safety
/// `source` and each of the `n_libs` entries of `libs` must be valid
/// NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tower_program_new(
    source: *const c_char,
    libs: *const *const c_char,
    n_libs: usize,
    k: u32,
    out: *mut *mut TowerProgram,
) -> TowerStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(TowerStatus::NullArgument, "out is null"));
        }
        *out = ptr::null_mut();
        let src = text(source, "source")?;
        let libs = texts(libs, n_libs, "library")?;
        let cfg = Config { k, ..Config::default() };
        cfg.validate().map_err(|e| fail(TowerStatus::Rejected, e))?;
        let (_, core) = core_source(&libs, src, k).map_err(|e| fail(TowerStatus::Rejected, e))?;
        *out = Box::into_raw(Box::new(TowerProgram { core, cfg }));
        Ok(())
    })
}

/// Release a program handle. Null is ignored.
///
/// # Safety
/// `p` must come from [`tower_program_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tower_program_free(p: *mut TowerProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of parameters of `main`, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tower_program_param_count(p: *const TowerProgram) -> usize {
    p.as_ref().map_or(0, |p| p.core.params.len())
}

/// Run `main` on `n_inputs` values written in the command-line notation
/// (`5`, `true`, `[1,2,3]`, `(1, null)`). Forward runs print one line per
/// parameter and then the result as `name = value`. With `reverse` set,
/// the inputs are the final parameters, `output` the result (null for the
/// zero value), and the lines are the recovered initial parameters.
///
/// # Safety
/// `p` must be a live handle, the input strings valid, `output` null or
/// valid, and `out` writable. Free `*out` with [`tower_string_free`].
#[no_mangle]
pub unsafe extern "C" fn tower_program_run(
    p: *const TowerProgram,
    inputs: *const *const c_char,
    n_inputs: usize,
    reverse: bool,
    output: *const c_char,
    out: *mut *mut c_char,
) -> TowerStatus {
    guard(|| {
        let prog = p.as_ref().ok_or_else(|| fail(TowerStatus::NullArgument, "program is null"))?;
        if out.is_null() {
            return Err(fail(TowerStatus::NullArgument, "out is null"));
        }
        let inputs = texts(inputs, n_inputs, "input")?;
        let core = &prog.core;
        if inputs.len() != core.params.len() {
            return Err(fail(
                TowerStatus::Rejected,
                format!("main takes {} inputs, {} given", core.params.len(), inputs.len()),
            ));
        }
        let mut heap = prog.cfg.heap().map_err(|e| fail(TowerStatus::Rejected, e))?;
        let values = inputs
            .iter()
            .zip(&core.params)
            .map(|(t, param)| read_value(t, &param.ty, &mut heap))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| fail(TowerStatus::Rejected, e))?;
        let opts = prog.cfg.run_options();
        let mut lines = Vec::new();
        if reverse {
            let result = match output.is_null() {
                true => default_of(&core.ret),
                false => read_value(text(output, "output")?, &core.ret, &mut heap).map_err(|e| fail(TowerStatus::Rejected, e))?,
            };
            let st = run_core_reverse(core, values, result, heap, &opts).map_err(|e| fail(TowerStatus::Runtime, e))?;
            for (param, v) in core.params.iter().zip(&st.params) {
                lines.push(format!("{} = {}", param.name, show_value(v, &st.heap)));
            }
        } else {
            let st = run_core(core, values, heap, &opts).map_err(|e| fail(TowerStatus::Runtime, e))?;
            for (param, v) in core.params.iter().zip(&st.params) {
                lines.push(format!("{} = {}", param.name, show_value(v, &st.heap)));
            }
            lines.push(format!("result = {}", show_value(&st.output, &st.heap)));
        }
        give(out, lines.join("\n"))
    })
}

/// Compile `main` against the default heap and report its cost.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tower_program_cost(p: *const TowerProgram, out: *mut TowerCost) -> TowerStatus {
    guard(|| {
        let prog = p.as_ref().ok_or_else(|| fail(TowerStatus::NullArgument, "program is null"))?;
        let out = out.as_mut().ok_or_else(|| fail(TowerStatus::NullArgument, "out is null"))?;
        let heap = prog.cfg.heap().map_err(|e| fail(TowerStatus::Rejected, e))?;
        let net = compile(&prog.core, &heap).map_err(|e| fail(TowerStatus::Compile, e))?;
        let r = cost_report(&net);
        *out = TowerCost { gates: r.gates, qubits: r.qubits, primitive_gates: r.primitive_gates.unwrap_or(0) };
        Ok(())
    })
}

/// The inlined Core statement of `main`, or its inverse.
///
/// # Safety
/// `p` must be a live handle and `out` writable. Free `*out` with
/// [`tower_string_free`].
#[no_mangle]
pub unsafe extern "C" fn tower_program_core_text(p: *const TowerProgram, inverted: bool, out: *mut *mut c_char) -> TowerStatus {
    guard(|| {
        let prog = p.as_ref().ok_or_else(|| fail(TowerStatus::NullArgument, "program is null"))?;
        if out.is_null() {
            return Err(fail(TowerStatus::NullArgument, "out is null"));
        }
        let body = if inverted { invert(&prog.core.body) } else { prog.core.body.clone() };
        give(out, pretty_stmt(&body))
    })
}

/// Message describing the last failure on this thread, or null after a
/// success. The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn tower_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Release a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tower_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PUSH: &str = "type list = (uint, ptr<list>);
        fun main(l: ptr<list>, x: uint) {
          let head <- alloc<list>;
          l <-> head;
          let node <- (x, head);
          let head -> node.2;
          *l <-> node;
          let node -> default<list>;
          return ();
        }";

    fn program(src: &str) -> Result<*mut TowerProgram, (TowerStatus, String)> {
        let src = CString::new(src).unwrap();
        let mut p = ptr::null_mut();
        let st = unsafe { tower_program_new(src.as_ptr(), ptr::null(), 0, 8, &mut p) };
        if st == TowerStatus::Ok {
            Ok(p)
        } else {
            Err((st, last_error()))
        }
    }

    fn last_error() -> String {
        let e = tower_last_error();
        assert!(!e.is_null());
        unsafe { CStr::from_ptr(e) }.to_str().unwrap().to_string()
    }

    fn run(p: *const TowerProgram, inputs: &[&str], reverse: bool) -> Result<String, TowerStatus> {
        let owned: Vec<CString> = inputs.iter().map(|s| CString::new(*s).unwrap()).collect();
        let ptrs: Vec<*const c_char> = owned.iter().map(|s| s.as_ptr()).collect();
        let mut out = ptr::null_mut();
        let st = unsafe { tower_program_run(p, ptrs.as_ptr(), ptrs.len(), reverse, ptr::null(), &mut out) };
        if st != TowerStatus::Ok {
            return Err(st);
        }
        let s = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
        unsafe { tower_string_free(out) };
        Ok(s)
    }

    #[test]
    fn run_forward_and_reverse() {
        let p = program(PUSH).unwrap();
        assert_eq!(unsafe { tower_program_param_count(p) }, 2);
        assert_eq!(run(p, &["[1,2]", "6"], false).unwrap(), "l = [6,1,2]\nx = 6\nresult = ()");
        assert_eq!(run(p, &["[6,1,2]", "6"], true).unwrap(), "l = [1,2]\nx = 6");
        unsafe { tower_program_free(p) };
    }

    #[test]
    fn rejected_programs_report_the_rule() {
        let (st, msg) = program("fun main(x: uint) -> uint { return x; }").unwrap_err();
        assert_eq!(st, TowerStatus::Rejected);
        assert!(msg.contains("S-Return"), "{msg}");
    }

    #[test]
    fn runtime_errors_and_bad_inputs() {
        let p = program("fun main(x: uint) -> uint { let y <- x + 1; let y -> x + 2; let out <- x; return out; }").unwrap();
        assert_eq!(run(p, &["3"], false), Err(TowerStatus::Runtime));
        assert!(last_error().contains("Stuck-UnAssign"));
        assert_eq!(run(p, &["true"], false), Err(TowerStatus::Rejected));
        assert_eq!(run(p, &[], false), Err(TowerStatus::Rejected));
        unsafe { tower_program_free(p) };
    }

    #[test]
    fn cost_and_core_text() {
        let p = program(PUSH).unwrap();
        let mut c = TowerCost::default();
        assert_eq!(unsafe { tower_program_cost(p, &mut c) }, TowerStatus::Ok);
        assert!(c.gates > 0 && c.qubits > 0);
        let mut out = ptr::null_mut();
        assert_eq!(unsafe { tower_program_core_text(p, true, &mut out) }, TowerStatus::Ok);
        let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
        unsafe { tower_string_free(out) };
        assert!(text.contains("<->"), "{text}");
        unsafe { tower_program_free(p) };
    }

    #[test]
    fn null_arguments() {
        let mut p = ptr::null_mut();
        assert_eq!(unsafe { tower_program_new(ptr::null(), ptr::null(), 0, 8, &mut p) }, TowerStatus::NullArgument);
        assert!(p.is_null());
        let mut c = TowerCost::default();
        assert_eq!(unsafe { tower_program_cost(ptr::null(), &mut c) }, TowerStatus::NullArgument);
        unsafe { tower_program_free(ptr::null_mut()) };
        unsafe { tower_string_free(ptr::null_mut()) };
    }
}
