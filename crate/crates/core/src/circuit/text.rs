//! Netlist text format.
//!
//! ```text
//! LEVEL l2
//! K 4
//! REG x:0 4 program
//! MEM M0 base=1 blocks=8 words=2
//! HP M0 hp0
//! IN x x:0
//! OUT x x:0
//! CNOT x:0.0 y:0.0
//! CTRL c:0.0 {        (L1 only)
//! }
//! ```
//! Bindings are written without their types; parsed bindings are typed `()`.

use std::fmt::{self, Write as _};

use super::{Arith, Binding, Bit, Gate, GateNetlist, Header, Memory, Netlist, Op, RegId, Register, Role};
use crate::types::TypeExpr;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct NetlistParseError {
    pub line: usize,
    pub message: String,
}

fn write_header(f: &mut fmt::Formatter<'_>, level: &str, h: &Header) -> fmt::Result {
    writeln!(f, "LEVEL {level}")?;
    writeln!(f, "K {}", h.k)?;
    for r in &h.regs {
        writeln!(f, "REG {} {} {}", r.name, r.width, r.role.name())?;
    }
    for (i, m) in h.mems.iter().enumerate() {
        writeln!(f, "MEM {} base={} blocks={} words={}", m.name, m.base, m.blocks, m.words)?;
        writeln!(f, "HP {} {}", m.name, h.regs[h.hp[i]].name)?;
    }
    let names = |b: &Binding| b.regs.iter().map(|&r| h.regs[r].name.clone()).collect::<Vec<_>>().join(",");
    for b in &h.inputs {
        writeln!(f, "IN {} {}", b.var, names(b))?;
    }
    for b in &h.outputs {
        writeln!(f, "OUT {} {}", b.var, names(b))?;
    }
    Ok(())
}

fn bit(h: &Header, b: Bit) -> String {
    format!("{}.{}", h.regs[b.reg].name, b.bit)
}

fn regs(h: &Header, rs: &[RegId]) -> String {
    rs.iter().map(|&r| h.regs[r].name.clone()).collect::<Vec<_>>().join(",")
}

fn write_ops(out: &mut String, h: &Header, ops: &[Op], indent: usize) {
    let pad = "  ".repeat(indent);
    let n = |r: RegId| h.regs[r].name.as_str();
    for op in ops {
        let _ = match op {
            Op::XorConst { dst, value } => writeln!(out, "{pad}XOR-CONST {} {value}", n(*dst)),
            Op::Copy { dst, src } => writeln!(out, "{pad}CNOT-COPY {} {}", n(*dst), n(*src)),
            Op::Not { dst, src } => writeln!(out, "{pad}NOT {} {}", n(*dst), n(*src)),
            Op::Test { dst, src } => writeln!(out, "{pad}TEST {} {}", n(*dst), n(*src)),
            Op::Arith { op, dst, a, b } => writeln!(out, "{pad}{} {} {} {}", op.mnemonic(), n(*dst), n(*a), n(*b)),
            Op::Swap { a, b } => writeln!(out, "{pad}SWAP-REG {} {}", n(*a), n(*b)),
            Op::Qram { addr, data, mem } => {
                writeln!(out, "{pad}QRAM-SWAP addr={} data={} mem={}", n(*addr), regs(h, data), h.mems[*mem].name)
            }
            Op::Fresh(r) => writeln!(out, "{pad}FRESH {}", n(*r)),
            Op::Retire(r) => writeln!(out, "{pad}RETIRE {}", n(*r)),
            Op::Control { ctrl, body } => {
                let _ = writeln!(out, "{pad}CTRL {}.0 {{", n(*ctrl));
                write_ops(out, h, body, indent + 1);
                writeln!(out, "{pad}}}")
            }
        };
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_header(f, "l1", &self.header)?;
        let mut s = String::new();
        write_ops(&mut s, &self.header, &self.ops, 0);
        f.write_str(&s)
    }
}

impl fmt::Display for GateNetlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = &self.header;
        write_header(f, "l2", h)?;
        for g in &self.gates {
            match g {
                Gate::Mcx { controls, target } => {
                    let name = match controls.len() {
                        0 => "NOT",
                        1 => "CNOT",
                        2 => "TOFFOLI",
                        _ => "MCX",
                    };
                    let mut parts: Vec<String> = controls.iter().map(|&c| bit(h, c)).collect();
                    parts.push(bit(h, *target));
                    writeln!(f, "{name} {}", parts.join(" "))?;
                }
                Gate::Swap { controls, a, b } => {
                    let name = match controls.len() {
                        0 => "SWAP",
                        1 => "CSWAP",
                        _ => "MCSWAP",
                    };
                    let mut parts: Vec<String> = controls.iter().map(|&c| bit(h, c)).collect();
                    parts.push(bit(h, *a));
                    parts.push(bit(h, *b));
                    writeln!(f, "{name} {}", parts.join(" "))?;
                }
                Gate::Qram { controls, addr, data, mem } => {
                    write!(f, "QRAM addr={} data={} mem={}", h.regs[*addr].name, regs(h, data), h.mems[*mem].name)?;
                    if !controls.is_empty() {
                        let cs: Vec<String> = controls.iter().map(|&c| bit(h, c)).collect();
                        write!(f, " ctrl={}", cs.join(","))?;
                    }
                    writeln!(f)?;
                }
                Gate::Fresh(r) => writeln!(f, "FRESH {}", h.regs[*r].name)?,
                Gate::Retire(r) => writeln!(f, "RETIRE {}", h.regs[*r].name)?,
            }
        }
        Ok(())
    }
}

struct Reader<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
    header: Header,
}

impl<'a> Reader<'a> {
    fn new(src: &'a str) -> Reader<'a> {
        let lines = src
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
            .filter(|(_, t)| !t.is_empty() && !t[0].starts_with('#'))
            .collect();
        Reader { lines, pos: 0, header: Header::default() }
    }

    fn err<T>(&self, line: usize, message: impl Into<String>) -> Result<T, NetlistParseError> {
        Err(NetlistParseError { line, message: message.into() })
    }

    fn reg(&self, line: usize, name: &str) -> Result<RegId, NetlistParseError> {
        match self.header.reg_named(name) {
            Some(r) => Ok(r),
            None => self.err(line, format!("unknown register `{name}`")),
        }
    }

    fn regs(&self, line: usize, list: &str) -> Result<Vec<RegId>, NetlistParseError> {
        if list.is_empty() {
            return Ok(Vec::new());
        }
        list.split(',').map(|n| self.reg(line, n)).collect()
    }

    fn bit(&self, line: usize, s: &str) -> Result<Bit, NetlistParseError> {
        let (name, b) = match s.rsplit_once('.') {
            Some(p) => p,
            None => return self.err(line, format!("expected `register.bit`, got `{s}`")),
        };
        let reg = self.reg(line, name)?;
        let bit: u32 = match b.parse() {
            Ok(b) => b,
            Err(_) => return self.err(line, format!("bad bit index `{b}`")),
        };
        if bit >= self.header.regs[reg].width {
            return self.err(line, format!("bit {bit} out of range for `{name}`"));
        }
        Ok(Bit::new(reg, bit))
    }

    fn num<T: std::str::FromStr>(&self, line: usize, s: &str) -> Result<T, NetlistParseError> {
        match s.parse() {
            Ok(v) => Ok(v),
            Err(_) => self.err(line, format!("expected a number, got `{s}`")),
        }
    }

    fn keyed<'b>(&self, line: usize, tok: &'b str, key: &str) -> Result<&'b str, NetlistParseError> {
        match tok.strip_prefix(key).and_then(|r| r.strip_prefix('=')) {
            Some(v) => Ok(v),
            None => self.err(line, format!("expected `{key}=…`, got `{tok}`")),
        }
    }

    fn mem(&self, line: usize, name: &str) -> Result<usize, NetlistParseError> {
        match self.header.mem_named(name) {
            Some(m) => Ok(m),
            None => self.err(line, format!("unknown memory `{name}`")),
        }
    }

    /// Header lines. Returns the level.
    fn header(&mut self) -> Result<String, NetlistParseError> {
        let mut level = String::new();
        let mut hp_pending = Vec::new();
        while self.pos < self.lines.len() {
            let (line, t) = self.lines[self.pos].clone();
            match t[0] {
                "LEVEL" if t.len() == 2 => level = t[1].to_string(),
                "K" if t.len() == 2 => self.header.k = self.num(line, t[1])?,
                "REG" if t.len() == 4 => {
                    let role = match Role::from_name(t[3]) {
                        Some(r) => r,
                        None => return self.err(line, format!("unknown role `{}`", t[3])),
                    };
                    let width: u32 = self.num(line, t[2])?;
                    if width == 0 || width > 64 {
                        return self.err(line, "register width must be in 1..=64");
                    }
                    if self.header.reg_named(t[1]).is_some() {
                        return self.err(line, format!("register `{}` declared twice", t[1]));
                    }
                    self.header.regs.push(Register { name: t[1].to_string(), width, role });
                }
                "MEM" if t.len() == 5 => {
                    let base = self.num(line, self.keyed(line, t[2], "base")?)?;
                    let blocks = self.num(line, self.keyed(line, t[3], "blocks")?)?;
                    let words = self.num(line, self.keyed(line, t[4], "words")?)?;
                    self.header.mems.push(Memory { name: t[1].to_string(), base, blocks, words });
                }
                "HP" if t.len() == 3 => hp_pending.push((line, t[1], t[2])),
                "IN" | "OUT" if t.len() == 2 || t.len() == 3 => {
                    let regs = self.regs(line, t.get(2).copied().unwrap_or(""))?;
                    let b = Binding { var: t[1].to_string(), ty: TypeExpr::Unit, regs };
                    if t[0] == "IN" {
                        self.header.inputs.push(b);
                    } else {
                        self.header.outputs.push(b);
                    }
                }
                "LEVEL" | "K" | "REG" | "MEM" | "HP" | "IN" | "OUT" => return self.err(line, "malformed header line"),
                _ => break,
            }
            self.pos += 1;
        }
        self.header.hp = vec![usize::MAX; self.header.mems.len()];
        for (line, m, r) in hp_pending {
            let m = self.mem(line, m)?;
            self.header.hp[m] = self.reg(line, r)?;
        }
        if let Some(i) = self.header.hp.iter().position(|&r| r == usize::MAX) {
            return self.err(0, format!("memory `{}` has no HP line", self.header.mems[i].name));
        }
        Ok(level)
    }

    fn l1_ops(&mut self, nested: bool) -> Result<Vec<Op>, NetlistParseError> {
        let mut ops = Vec::new();
        while self.pos < self.lines.len() {
            let (line, t) = self.lines[self.pos].clone();
            self.pos += 1;
            let want = |n: usize| if t.len() == n { Ok(()) } else { self.err(line, format!("`{}` takes {} operands", t[0], n - 1)) };
            let op = match t[0] {
                "}" if nested => return Ok(ops),
                "XOR-CONST" => {
                    want(3)?;
                    Op::XorConst { dst: self.reg(line, t[1])?, value: self.num(line, t[2])? }
                }
                "CNOT-COPY" | "NOT" | "TEST" | "SWAP-REG" => {
                    want(3)?;
                    let (a, b) = (self.reg(line, t[1])?, self.reg(line, t[2])?);
                    match t[0] {
                        "CNOT-COPY" => Op::Copy { dst: a, src: b },
                        "NOT" => Op::Not { dst: a, src: b },
                        "TEST" => Op::Test { dst: a, src: b },
                        _ => Op::Swap { a, b },
                    }
                }
                "QRAM-SWAP" => {
                    want(4)?;
                    Op::Qram {
                        addr: self.reg(line, self.keyed(line, t[1], "addr")?)?,
                        data: self.regs(line, self.keyed(line, t[2], "data")?)?,
                        mem: self.mem(line, self.keyed(line, t[3], "mem")?)?,
                    }
                }
                "FRESH" | "RETIRE" => {
                    want(2)?;
                    let r = self.reg(line, t[1])?;
                    if t[0] == "FRESH" {
                        Op::Fresh(r)
                    } else {
                        Op::Retire(r)
                    }
                }
                "CTRL" => {
                    if t.len() != 3 || t[2] != "{" {
                        return self.err(line, "expected `CTRL reg.0 {`");
                    }
                    let ctrl = self.bit(line, t[1])?.reg;
                    let body = self.l1_ops(true)?;
                    Op::Control { ctrl, body }
                }
                m => match Arith::from_mnemonic(m) {
                    Some(op) => {
                        want(4)?;
                        Op::Arith { op, dst: self.reg(line, t[1])?, a: self.reg(line, t[2])?, b: self.reg(line, t[3])? }
                    }
                    None => return self.err(line, format!("unknown op `{m}`")),
                },
            };
            ops.push(op);
        }
        if nested {
            return self.err(self.lines.last().map(|l| l.0).unwrap_or(0), "unclosed `CTRL` block");
        }
        Ok(ops)
    }

    fn gates(&mut self) -> Result<Vec<Gate>, NetlistParseError> {
        let mut gates = Vec::new();
        while self.pos < self.lines.len() {
            let (line, t) = self.lines[self.pos].clone();
            self.pos += 1;
            let bits = |s: &[&str]| s.iter().map(|b| self.bit(line, b)).collect::<Result<Vec<_>, _>>();
            let g = match (t[0], t.len()) {
                ("NOT", 2) | ("CNOT", 3) | ("TOFFOLI", 4) => {
                    let b = bits(&t[1..])?;
                    Gate::Mcx { controls: b[..b.len() - 1].to_vec(), target: b[b.len() - 1] }
                }
                ("MCX", n) if n >= 2 => {
                    let b = bits(&t[1..])?;
                    Gate::Mcx { controls: b[..b.len() - 1].to_vec(), target: b[b.len() - 1] }
                }
                ("SWAP", 3) | ("CSWAP", 4) => {
                    let b = bits(&t[1..])?;
                    let n = b.len();
                    Gate::Swap { controls: b[..n - 2].to_vec(), a: b[n - 2], b: b[n - 1] }
                }
                ("MCSWAP", n) if n >= 3 => {
                    let b = bits(&t[1..])?;
                    let n = b.len();
                    Gate::Swap { controls: b[..n - 2].to_vec(), a: b[n - 2], b: b[n - 1] }
                }
                ("QRAM", 4) | ("QRAM", 5) => {
                    let controls = match t.get(4) {
                        Some(c) => bits(&self.keyed(line, c, "ctrl")?.split(',').collect::<Vec<_>>())?,
                        None => Vec::new(),
                    };
                    Gate::Qram {
                        controls,
                        addr: self.reg(line, self.keyed(line, t[1], "addr")?)?,
                        data: self.regs(line, self.keyed(line, t[2], "data")?)?,
                        mem: self.mem(line, self.keyed(line, t[3], "mem")?)?,
                    }
                }
                ("FRESH", 2) => Gate::Fresh(self.reg(line, t[1])?),
                ("RETIRE", 2) => Gate::Retire(self.reg(line, t[1])?),
                (g, _) => return self.err(line, format!("malformed or unknown gate `{g}`")),
            };
            gates.push(g);
        }
        Ok(gates)
    }
}

pub fn parse_netlist(src: &str) -> Result<Netlist, NetlistParseError> {
    let mut r = Reader::new(src);
    let level = r.header()?;
    if level != "l1" {
        return r.err(1, format!("expected `LEVEL l1`, got `{level}`"));
    }
    let ops = r.l1_ops(false)?;
    Ok(Netlist { header: r.header, ops })
}

pub fn parse_gates(src: &str) -> Result<GateNetlist, NetlistParseError> {
    let mut r = Reader::new(src);
    let level = r.header()?;
    if level != "l2" {
        return r.err(1, format!("expected `LEVEL l2`, got `{level}`"));
    }
    let gates = r.gates()?;
    Ok(GateNetlist { header: r.header, gates })
}
