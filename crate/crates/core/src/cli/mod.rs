//! The `tower` command line.

mod text;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boson::{HeapError, PermutationSource};
use crate::circuit::{
    compile, cost_report, expand, parse_gates, parse_netlist, simulate, simulate_l1, BasisState, CompileError, Header,
    NetlistParseError, SimError,
};
use crate::config::{Config, ConfigError};
use crate::ground::{self, classify, exact_fit, GroundError, Op, Setup, SweepVar};
use crate::interp::{run_core, run_core_reverse, StepError, Value};
use crate::pipeline::{check_source, core_source, PipelineError};
use crate::syntax::pretty::pretty_stmt;
use crate::transform::CoreProgram;

pub use text::{read_value, show_value, InputError};

#[derive(Debug, Parser)]
#[command(name = "tower", version, about = "Reversible programs on a history-independent heap, interpreted or compiled to circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct SourceOpts {
    /// Library source: a corpus name (list, stack, queue, string, radix,
    /// hash, lset, tree) or a file path. Repeatable.
    #[arg(long = "lib", value_name = "LIB")]
    pub libs: Vec<String>,
    /// Replace `{NAME}` in the source with N. Repeatable.
    #[arg(long = "bound", value_name = "NAME=N")]
    pub bounds: Vec<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MachineOpts {
    /// Word size in bits.
    #[arg(long)]
    pub k: Option<u32>,
    /// Configuration file (word size, heap sections, permutation, limits).
    #[arg(long = "heap", visible_alias = "config", value_name = "CFG")]
    pub config: Option<PathBuf>,
    /// Seed for the initial free-list permutation.
    #[arg(long, conflicts_with = "perm")]
    pub seed: Option<u64>,
    /// Explicit free-list permutations, one per section: `2,1,3/1,2`.
    #[arg(long)]
    pub perm: Option<String>,
    /// Interpreter step limit.
    #[arg(long)]
    pub max_steps: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    L1,
    L2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, desugar and type-check a program.
    Check {
        file: PathBuf,
        #[command(flatten)]
        src: SourceOpts,
        #[command(flatten)]
        machine: MachineOpts,
    },
    /// Run `main` on the given inputs.
    Run {
        file: PathBuf,
        /// One value per parameter of `main`, e.g. `--input "[1,2]" 6`.
        #[arg(long, num_args = 1.., value_name = "V")]
        input: Vec<String>,
        /// Run backwards: inputs are the final parameters, `--output` the result.
        #[arg(long)]
        reverse: bool,
        /// Result of `main`, for `--reverse`; defaults to the zero value.
        #[arg(long, value_name = "V", requires = "reverse")]
        output: Option<String>,
        /// Print every parameter and the result by name.
        #[arg(long)]
        all: bool,
        /// Print step counts to stderr.
        #[arg(long)]
        stats: bool,
        /// Type-check the machine state after every step.
        #[arg(long)]
        validate: bool,
        #[command(flatten)]
        src: SourceOpts,
        #[command(flatten)]
        machine: MachineOpts,
    },
    /// Write the inverted Core program of `main`.
    Invert {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        src: SourceOpts,
        #[command(flatten)]
        machine: MachineOpts,
    },
    /// Write `main` with every call inlined.
    EmitCore {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        src: SourceOpts,
        #[command(flatten)]
        machine: MachineOpts,
    },
    /// Compile `main` to a reversible netlist.
    Compile {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "l1")]
        level: Level,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print gate and qubit counts to stderr.
        #[arg(long)]
        cost: bool,
        #[command(flatten)]
        src: SourceOpts,
        #[command(flatten)]
        machine: MachineOpts,
    },
    /// Simulate a netlist on a basis state.
    Simulate {
        netlist: PathBuf,
        /// Register and memory assignments: `x:0=5 hp0=1 M0[3]=7`.
        #[arg(long, value_name = "STATE", default_value = "")]
        init: String,
        /// Start memories and allocation registers as fresh free lists.
        #[arg(long)]
        free_lists: bool,
        /// Print memory contents after the run.
        #[arg(long)]
        memory: bool,
        #[command(flatten)]
        machine: MachineOpts,
    },
    /// Steps, gates and qubits over a sweep of a source placeholder.
    Stats {
        file: PathBuf,
        /// Placeholder and range, e.g. `n=1..6`; `{n}` in the source and
        /// inputs is replaced by each value.
        #[arg(long, default_value = "n=1..6")]
        sweep: String,
        /// Inputs for step counts; without them only circuit costs are shown.
        #[arg(long, num_args = 1.., value_name = "V")]
        input: Vec<String>,
        #[command(flatten)]
        src: SourceOpts,
        #[command(flatten)]
        machine: MachineOpts,
    },
    /// The built-in corpus of data-structure operations.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// List the operations.
    List,
    /// Run operations on random inputs against their reference models and
    /// check that the inverse restores the initial state.
    Run {
        /// Operation names; all when omitted.
        #[arg(long = "op")]
        ops: Vec<String>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        k: u32,
        /// Largest structure size.
        #[arg(long, default_value_t = 5)]
        max_size: usize,
        /// One JSON record per operation.
        #[arg(long)]
        json: bool,
    },
    /// Compare heap fingerprints of two insertion orders over every initial
    /// free-list permutation.
    Hi {
        #[arg(long = "op")]
        op: String,
        /// Keys inserted in the first history.
        #[arg(long, default_value = "1,2,3", value_delimiter = ',')]
        keys: Vec<u64>,
        /// Keys inserted in the second history; the first reversed by default.
        #[arg(long, value_delimiter = ',')]
        other: Option<Vec<u64>>,
        /// Node blocks on the heap; as many as the structure needs by default.
        #[arg(long)]
        blocks: Option<usize>,
        #[arg(long, default_value_t = 8)]
        k: u32,
        /// Only the identity permutation.
        #[arg(long)]
        identity_only: bool,
    },
    /// Fit gate and qubit counts over `n = 1..6` or `k = 4..12`.
    Complexity {
        #[arg(long = "op")]
        ops: Vec<String>,
        #[arg(long)]
        json: bool,
    },
}

/// A failure with its exit code: 1 for diagnostics about the input, 2 for
/// a broken internal invariant.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Diagnostic(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Diagnostic(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Diagnostic(m) | CliError::Internal(m) => m,
        }
    }
}

fn diag(m: impl ToString) -> CliError {
    CliError::Diagnostic(m.to_string())
}

macro_rules! diagnostic_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> CliError {
                diag(e)
            }
        })*
    };
}

diagnostic_from!(PipelineError, ConfigError, HeapError, InputError, CompileError, NetlistParseError, SimError);

impl From<StepError> for CliError {
    fn from(e: StepError) -> CliError {
        match e {
            StepError::Invalid { .. } => CliError::Internal(e.to_string()),
            e => diag(e),
        }
    }
}

impl From<GroundError> for CliError {
    fn from(e: GroundError) -> CliError {
        match e {
            GroundError::Mismatch { .. } | GroundError::NotRestored { .. } => CliError::Internal(e.to_string()),
            GroundError::Run { source: StepError::Invalid { .. }, .. } => CliError::Internal(e.to_string()),
            e => diag(e),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| diag(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str, out: &mut String) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| diag(format!("{}: {e}", p.display()))),
        None => {
            out.push_str(text);
            Ok(())
        }
    }
}

fn substitute(text: &str, bounds: &[(String, u64)]) -> String {
    bounds.iter().fold(text.to_string(), |t, (name, n)| t.replace(&format!("{{{name}}}"), &n.to_string()))
}

fn parse_bounds(specs: &[String]) -> Result<Vec<(String, u64)>, CliError> {
    specs
        .iter()
        .map(|s| {
            let (name, n) = s.split_once('=').ok_or_else(|| diag(format!("bad bound `{s}`, expected NAME=N")))?;
            let n = n.trim().parse().map_err(|_| diag(format!("bad bound `{s}`, expected NAME=N")))?;
            Ok((name.trim().to_string(), n))
        })
        .collect()
}

fn libraries(names: &[String]) -> Result<Vec<String>, CliError> {
    names
        .iter()
        .map(|n| match ground::LIBRARIES.iter().find(|(stem, _)| stem == n) {
            Some((_, src)) => Ok(src.to_string()),
            None => read(Path::new(n)),
        })
        .collect()
}

fn parse_perm(text: &str) -> Result<PermutationSource, CliError> {
    text.split('/')
        .map(|sec| {
            sec.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<usize>().map_err(|_| diag(format!("bad permutation `{text}`"))))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()
        .map(PermutationSource::Explicit)
}

fn config(m: &MachineOpts) -> Result<(Config, PermutationSource), CliError> {
    let mut cfg = match &m.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(k) = m.k {
        cfg.k = k;
    }
    if let Some(n) = m.max_steps {
        cfg.max_steps = n;
    }
    cfg.validate()?;
    let perm = match (&m.seed, &m.perm) {
        (Some(s), _) => PermutationSource::Seeded(*s),
        (None, Some(p)) => parse_perm(p)?,
        (None, None) => cfg.permutation_source()?,
    };
    Ok((cfg, perm))
}

struct Loaded {
    cfg: Config,
    perm: PermutationSource,
    libs: Vec<String>,
    source: String,
}

impl Loaded {
    fn new(file: &Path, src: &SourceOpts, machine: &MachineOpts) -> Result<Loaded, CliError> {
        let (cfg, perm) = config(machine)?;
        let bounds = parse_bounds(&src.bounds)?;
        let source = substitute(&read(file)?, &bounds);
        Ok(Loaded { cfg, perm, libs: libraries(&src.libs)?, source })
    }

    fn with_source(&self, source: String) -> Loaded {
        Loaded { cfg: self.cfg.clone(), perm: self.perm.clone(), libs: self.libs.clone(), source }
    }

    fn core(&self) -> Result<std::sync::Arc<CoreProgram>, CliError> {
        let libs: Vec<&str> = self.libs.iter().map(String::as_str).collect();
        Ok(core_source(&libs, &self.source, self.cfg.k)?.1)
    }

    fn heap(&self) -> Result<crate::boson::Heap, CliError> {
        Ok(crate::boson::Heap::new(self.cfg.k, &self.cfg.heap.sections, &self.perm)?)
    }
}

fn read_inputs(
    core: &CoreProgram,
    inputs: &[String],
    heap: &mut crate::boson::Heap,
) -> Result<Vec<Value>, CliError> {
    if inputs.len() != core.params.len() {
        let names: Vec<String> = core.params.iter().map(|p| p.name.clone()).collect();
        return Err(diag(format!("`main` takes {} inputs ({}), got {}", names.len(), names.join(", "), inputs.len())));
    }
    core.params.iter().zip(inputs).map(|(p, text)| Ok(read_value(text, &p.ty, heap)?)).collect()
}

fn core_header(core: &CoreProgram) -> String {
    let params: Vec<String> = core.params.iter().map(|p| format!("{}: {}", p.name, p.ty)).collect();
    format!("/* main({}) -> {}, result in `{}` */\n", params.join(", "), core.ret, core.output)
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    file: &Path,
    inputs: &[String],
    reverse: bool,
    output: Option<&str>,
    all: bool,
    stats: bool,
    validate: bool,
    src: &SourceOpts,
    machine: &MachineOpts,
    out: &mut String,
) -> Result<(), CliError> {
    let l = Loaded::new(file, src, machine)?;
    let core = l.core()?;
    let mut heap = l.heap()?;
    let values = read_inputs(&core, inputs, &mut heap)?;
    let mut opts = l.cfg.run_options();
    opts.check_validity = validate;
    if reverse {
        let result = match output {
            Some(t) => read_value(t, &core.ret, &mut heap)?,
            None => crate::interp::default_of(&core.ret),
        };
        let st = run_core_reverse(&core, values, result, heap, &opts)?;
        for (p, v) in core.params.iter().zip(&st.params) {
            if all {
                writeln!(out, "{} = {}", p.name, show_value(v, &st.heap)).ok();
            } else {
                writeln!(out, "{}", show_value(v, &st.heap)).ok();
            }
        }
        if stats {
            eprintln!("steps: {}", st.stats.steps);
        }
        return Ok(());
    }
    let before: Vec<String> = values.iter().map(|v| show_value(v, &heap)).collect();
    let st = run_core(&core, values, heap, &opts)?;
    let result = show_value(&st.output, &st.heap);
    if all {
        for (p, v) in core.params.iter().zip(&st.params) {
            writeln!(out, "{} = {}", p.name, show_value(v, &st.heap)).ok();
        }
        writeln!(out, "result = {result}").ok();
    } else {
        let mut printed = false;
        if st.output != Value::Unit {
            writeln!(out, "{result}").ok();
            printed = true;
        }
        for (b, v) in before.iter().zip(&st.params) {
            let now = show_value(v, &st.heap);
            if *b != now {
                writeln!(out, "{now}").ok();
                printed = true;
            }
        }
        if !printed {
            writeln!(out, "()").ok();
        }
    }
    for d in &st.diagnostics {
        eprintln!("warning: {}: {}", d.span, d.message);
    }
    if stats {
        let s = &st.stats;
        eprintln!(
            "steps: {} (assign {}, unassign {}, swap {}, memswap {}, branch {}), allocs {}, deallocs {}, peak registers {}",
            s.steps, s.assign, s.unassign, s.swap, s.memswap, s.branch, s.allocs, s.deallocs, s.peak_regs
        );
    }
    Ok(())
}

fn parse_sweep(spec: &str) -> Result<(String, Vec<u64>), CliError> {
    let bad = || diag(format!("bad sweep `{spec}`, expected NAME=A..B"));
    let (name, range) = spec.split_once('=').ok_or_else(bad)?;
    let (a, b) = range.split_once("..").ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((name.trim().to_string(), (a..=b).collect()))
}

fn fit_text(var: &str, xs: &[u64], ys: &[u64]) -> String {
    match (exact_fit(xs, ys, 2), classify(xs, ys)) {
        (Some(f), _) => f.show(var),
        (None, Some(g)) => format!("{g:?}").to_lowercase(),
        (None, None) => "no fit".to_string(),
    }
}

fn cmd_stats(
    file: &Path,
    sweep: &str,
    inputs: &[String],
    src: &SourceOpts,
    machine: &MachineOpts,
    out: &mut String,
) -> Result<(), CliError> {
    let base = Loaded::new(file, src, machine)?;
    let (var, xs) = parse_sweep(sweep)?;
    let mut rows = Vec::new();
    for &x in &xs {
        let bind = [(var.clone(), x)];
        let l = base.with_source(substitute(&base.source, &bind));
        let core = l.core()?;
        let heap = l.heap()?;
        let steps = if inputs.is_empty() {
            None
        } else {
            let mut h = heap.clone();
            let texts: Vec<String> = inputs.iter().map(|t| substitute(t, &bind)).collect();
            let values = read_inputs(&core, &texts, &mut h)?;
            Some(run_core(&core, values, h, &l.cfg.run_options())?.stats.steps)
        };
        let cost = cost_report(&compile(&core, &heap)?);
        rows.push((x, steps, cost.gates as u64, cost.qubits as u64));
    }
    writeln!(out, "{:>4} {:>10} {:>10} {:>10}", var, "steps", "gates", "qubits").ok();
    for (x, s, g, q) in &rows {
        let s = s.map_or("-".to_string(), |s| s.to_string());
        writeln!(out, "{x:>4} {s:>10} {g:>10} {q:>10}").ok();
    }
    let col = |f: fn(&(u64, Option<u64>, u64, u64)) -> u64| rows.iter().map(f).collect::<Vec<u64>>();
    if !inputs.is_empty() {
        writeln!(out, "steps:  {}", fit_text(&var, &xs, &col(|r| r.1.unwrap_or(0)))).ok();
    }
    writeln!(out, "gates:  {}", fit_text(&var, &xs, &col(|r| r.2))).ok();
    writeln!(out, "qubits: {}", fit_text(&var, &xs, &col(|r| r.3))).ok();
    Ok(())
}

fn cmd_simulate(
    netlist: &Path,
    init: &str,
    free_lists: bool,
    memory: bool,
    machine: &MachineOpts,
    out: &mut String,
) -> Result<(), CliError> {
    let text = read(netlist)?;
    let l2 = text.lines().next().is_some_and(|l| l.trim() == "LEVEL l2");
    let (header, l1) = if l2 {
        let g = parse_gates(&text)?;
        (g.header.clone(), Err(g))
    } else {
        let n = parse_netlist(&text)?;
        (n.header.clone(), Ok(n))
    };
    let mut st = BasisState::zero(&header);
    if free_lists {
        let (mut cfg, perm) = config(machine)?;
        if machine.k.is_none() {
            cfg.k = header.k;
        }
        let heap = crate::boson::Heap::new(cfg.k, &cfg.heap.sections, &perm)?;
        load_free_lists(&header, &heap, &mut st)?;
    }
    apply_init(&header, init, &mut st)?;
    let end = match &l1 {
        Ok(n) => simulate_l1(n, &st)?,
        Err(g) => simulate(g, &st)?,
    };
    for b in &header.outputs {
        let words: Vec<String> = b.regs.iter().map(|&r| end.regs[r].to_string()).collect();
        writeln!(out, "{} = {}", b.var, words.join(" ")).ok();
    }
    if memory {
        for (i, m) in header.mems.iter().enumerate() {
            for blk in 0..m.blocks {
                let words: Vec<String> =
                    end.mems[i][blk * m.words..(blk + 1) * m.words].iter().map(|w| w.to_string()).collect();
                writeln!(out, "{}[{}] = {}", m.name, m.base + blk as u64, words.join(" ")).ok();
            }
            writeln!(out, "{} = {}", header.regs[header.hp[i]].name, end.regs[header.hp[i]]).ok();
        }
    }
    Ok(())
}

fn load_free_lists(h: &Header, heap: &crate::boson::Heap, st: &mut BasisState) -> Result<(), CliError> {
    for (i, m) in h.mems.iter().enumerate() {
        let sec = heap
            .sections
            .iter()
            .find(|s| s.base == m.base && s.count == m.blocks && s.block_words == m.words)
            .ok_or_else(|| diag(format!("memory {} does not match any configured heap section", m.name)))?;
        st.regs[h.hp[i]] = sec.hp;
        for blk in 0..m.blocks {
            let words = heap.block(m.base + blk as u64).unwrap_or(&[]);
            st.mems[i][blk * m.words..blk * m.words + words.len()].copy_from_slice(words);
        }
    }
    Ok(())
}

fn apply_init(h: &Header, init: &str, st: &mut BasisState) -> Result<(), CliError> {
    for item in init.split(|c: char| c.is_whitespace() || c == ';').filter(|s| !s.is_empty()) {
        let bad = || diag(format!("bad assignment `{item}`, expected REG=N or MEM[i]=N"));
        let (lhs, rhs) = item.split_once('=').ok_or_else(bad)?;
        let v: u64 = rhs.parse().map_err(|_| bad())?;
        if let Some((mem, idx)) = lhs.strip_suffix(']').and_then(|l| l.split_once('[')) {
            let i = h.mem_named(mem).ok_or_else(|| diag(format!("no memory `{mem}`")))?;
            let idx: usize = idx.parse().map_err(|_| bad())?;
            let slot = st.mems[i].get_mut(idx).ok_or_else(|| diag(format!("{mem}[{idx}] is out of range")))?;
            *slot = v;
        } else {
            let r = h.reg_named(lhs).ok_or_else(|| diag(format!("no register `{lhs}`")))?;
            st.regs[r] = v & crate::circuit::mask(h.regs[r].width);
        }
    }
    Ok(())
}

fn ops_named(names: &[String]) -> Result<Vec<&'static Op>, CliError> {
    if names.is_empty() {
        return Ok(ground::OPS.iter().collect());
    }
    names.iter().map(|n| ground::op(n).ok_or_else(|| diag(format!("unknown operation `{n}`")))).collect()
}

#[derive(Serialize)]
struct RunRecord {
    op: &'static str,
    pass: bool,
    samples: usize,
    passed: usize,
    max_steps: u64,
    gates: usize,
    qubits: usize,
}

fn cmd_corpus_run(
    ops: &[String],
    samples: usize,
    seed: u64,
    k: u32,
    max_size: usize,
    json: bool,
    out: &mut String,
) -> Result<(), CliError> {
    let setup = Setup::corpus(k);
    let mut failures = Vec::new();
    if !json {
        writeln!(out, "{:<22} {:>6} {:>8} {:>10} {:>8} {:>8}", "op", "result", "passed", "max steps", "gates", "qubits").ok();
    }
    for op in ops_named(ops)? {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut passed = 0;
        let mut max_steps = 0;
        for _ in 0..samples {
            let args = ground::sample_args(op, &mut rng, k, max_size, setup.hash_word());
            let res = (|| {
                let prep = ground::prepare(op, ground::bound_for(op, &args, k), &setup)?;
                let run = ground::run_prepared(&prep, &args, setup.heap()?, &setup)?;
                ground::check_model(op, &args, &run, &setup)?;
                ground::check_round_trip(&prep, &args, &run, &setup)?;
                Ok::<u64, GroundError>(run.state.stats.steps)
            })();
            match res {
                Ok(s) => {
                    passed += 1;
                    max_steps = max_steps.max(s);
                }
                Err(e) => failures.push(e),
            }
        }
        let bound = match op.bound {
            ground::BoundRule::None => None,
            ground::BoundRule::SizePlusOne => Some(max_size as u64 + 1),
            ground::BoundRule::WordPlusOne => Some(k as u64 + 1),
        };
        let cost = ground::cost_at(op, bound, &setup)?;
        let rec = RunRecord { op: op.name, pass: passed == samples, samples, passed, max_steps, gates: cost.gates, qubits: cost.qubits };
        if json {
            writeln!(out, "{}", serde_json::to_string(&rec).expect("serializable")).ok();
        } else {
            let verdict = if rec.pass { "pass" } else { "FAIL" };
            writeln!(out, "{:<22} {:>6} {:>5}/{:<2} {:>10} {:>8} {:>8}", op.name, verdict, passed, samples, max_steps, rec.gates, rec.qubits).ok();
        }
    }
    match failures.into_iter().next() {
        None => Ok(()),
        Some(e) => Err(CliError::from(e)),
    }
}

fn cmd_corpus_hi(
    op: &str,
    keys: &[u64],
    other: Option<&[u64]>,
    blocks: Option<usize>,
    k: u32,
    identity_only: bool,
    out: &mut String,
) -> Result<(), CliError> {
    let op = ground::op(op).ok_or_else(|| diag(format!("unknown operation `{op}`")))?;
    let reversed: Vec<u64> = keys.iter().rev().copied().collect();
    let other = other.unwrap_or(&reversed);
    let nodes = keys.len().max(other.len());
    let blocks = blocks.unwrap_or(if op.args[0] == ground::Kind::Radix { (2 * nodes).saturating_sub(1).max(1) } else { nodes.max(1) });
    let identity = vec![(1..=blocks).collect::<Vec<usize>>()];
    let perms = identity_only.then_some(identity.as_slice());
    let r = ground::hi_check(op, keys, other, blocks, k, perms)?;
    let show = |v: &[u64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    writeln!(out, "{}: [{}] vs [{}] on {} blocks", op.name, show(keys), show(other), blocks).ok();
    match &r.verdict {
        crate::boson::HiVerdict::Equal => writeln!(out, "equal distributions over {} permutations", r.permutations).ok(),
        crate::boson::HiVerdict::Counterexample { perm } => writeln!(
            out,
            "different distributions over {} permutations; first differing permutation {:?}",
            r.permutations, perm
        )
        .ok(),
    };
    writeln!(out, "identical representations under {} of {} permutations", r.identical, r.permutations).ok();
    Ok(())
}

#[derive(Serialize)]
struct ComplexityRecord {
    op: &'static str,
    var: SweepVar,
    xs: Vec<u64>,
    gates: Vec<usize>,
    qubits: Vec<usize>,
    gates_fit: String,
    qubits_fit: String,
    ok: bool,
}

fn cmd_corpus_complexity(ops: &[String], json: bool, out: &mut String) -> Result<(), CliError> {
    let base = Setup::corpus(8);
    let mut bad = Vec::new();
    for op in ops_named(ops)? {
        let var = ground::sweep_var(op);
        let xs = var.default_range();
        let pts = ground::cost_sweep(op, &xs, &base)?;
        let gates: Vec<u64> = pts.iter().map(|(_, c)| c.gates as u64).collect();
        let qubits: Vec<u64> = pts.iter().map(|(_, c)| c.qubits as u64).collect();
        let admits = |want: ground::Growth, ys: &[u64]| classify(&xs, ys).is_some_and(|g| want.admits(g));
        let ok = admits(op.gates, &gates) && admits(op.qubits, &qubits);
        if !ok {
            bad.push(op.name);
        }
        let rec = ComplexityRecord {
            op: op.name,
            var,
            xs: xs.clone(),
            gates: gates.iter().map(|&g| g as usize).collect(),
            qubits: qubits.iter().map(|&q| q as usize).collect(),
            gates_fit: fit_text(var.name(), &xs, &gates),
            qubits_fit: fit_text(var.name(), &xs, &qubits),
            ok,
        };
        if json {
            writeln!(out, "{}", serde_json::to_string(&rec).expect("serializable")).ok();
        } else {
            let mark = if ok { "ok" } else { "UNEXPECTED" };
            writeln!(out, "{:<22} gates {:<24} qubits {:<24} {}", op.name, rec.gates_fit, rec.qubits_fit, mark).ok();
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Internal(format!("unexpected growth for {}", bad.join(", "))))
    }
}

/// Run one command, collecting its standard output in `out`.
pub fn execute(cmd: &Command, out: &mut String) -> Result<(), CliError> {
    match cmd {
        Command::Check { file, src, machine } => {
            let l = Loaded::new(file, src, machine)?;
            let libs: Vec<&str> = l.libs.iter().map(String::as_str).collect();
            let c = check_source(&libs, &l.source, l.cfg.k)?;
            writeln!(out, "{}: ok, {} functions", file.display(), c.kernel.funcs.len()).ok();
            Ok(())
        }
        Command::Run { file, input, reverse, output, all, stats, validate, src, machine } => {
            cmd_run(file, input, *reverse, output.as_deref(), *all, *stats, *validate, src, machine, out)
        }
        Command::Invert { file, output, src, machine } => {
            let core = Loaded::new(file, src, machine)?.core()?;
            let params: Vec<&str> = core.params.iter().map(|p| p.name.as_str()).collect();
            let text = format!(
                "/* inverse of main: starts with {} and `{}`, ends with {} */\n{}",
                params.join(", "),
                core.output,
                params.join(", "),
                pretty_stmt(&core.inverse_body())
            );
            write_out(output.as_deref(), &text, out)
        }
        Command::EmitCore { file, output, src, machine } => {
            let core = Loaded::new(file, src, machine)?.core()?;
            write_out(output.as_deref(), &format!("{}{}", core_header(&core), pretty_stmt(&core.body)), out)
        }
        Command::Compile { file, level, output, cost, src, machine } => {
            let l = Loaded::new(file, src, machine)?;
            let core = l.core()?;
            let net = compile(&core, &l.heap()?)?;
            let report = cost_report(&net);
            let text = match level {
                Level::L1 => net.to_string(),
                Level::L2 => {
                    let g = expand(&net);
                    let text = g.to_string();
                    if *cost {
                        let r = report.clone().with_primitives(&g);
                        eprintln!("primitive gates: {}", r.primitive_gates.unwrap_or(0));
                    }
                    text
                }
            };
            if *cost {
                eprintln!("gates: {}, qubits: {}, copies: {}, swaps: {}, qram: {}", report.gates, report.qubits, report.copies, report.swaps, report.qram);
            }
            write_out(output.as_deref(), &text, out)
        }
        Command::Simulate { netlist, init, free_lists, memory, machine } => {
            cmd_simulate(netlist, init, *free_lists, *memory, machine, out)
        }
        Command::Stats { file, sweep, input, src, machine } => cmd_stats(file, sweep, input, src, machine, out),
        Command::Corpus { command } => match command {
            CorpusCommand::List => {
                for op in ground::OPS {
                    let var = ground::sweep_var(op).name();
                    writeln!(
                        out,
                        "{:<22} args {:<28} gates {:<12} qubits {:<12} (in {var}){}",
                        op.name,
                        format!("{:?}", op.args),
                        format!("{:?}", op.gates),
                        format!("{:?}", op.qubits),
                        if op.hi { "" } else { "  not history independent" }
                    )
                    .ok();
                }
                Ok(())
            }
            CorpusCommand::Run { ops, samples, seed, k, max_size, json } => {
                cmd_corpus_run(ops, *samples, *seed, *k, *max_size, *json, out)
            }
            CorpusCommand::Hi { op, keys, other, blocks, k, identity_only } => {
                cmd_corpus_hi(op, keys, other.as_deref(), *blocks, *k, *identity_only, out)
            }
            CorpusCommand::Complexity { ops, json } => cmd_corpus_complexity(ops, *json, out),
        },
    }
}

/// Entry point of the `tower` binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let res = execute(&cli.command, &mut out);
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.as_bytes());
    let _ = stdout.flush();
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
