//! Reversible-circuit backend.
//!
//! Core statements compile to an L1 netlist of word-level macro ops over
//! named registers. `expand` lowers L1 to L2: multi-controlled NOTs,
//! controlled swaps and a primitive QRAM word gate. Both levels simulate on
//! basis states.

mod compile;
mod cost;
mod expand;
mod sim;
mod text;

pub use compile::{compile, compile_stmt, CompileError};
pub use cost::{cost_report, CostReport};
pub use expand::expand;
pub use sim::{simulate, simulate_l1, BasisState, SimError};
pub use text::{parse_gates, parse_netlist, NetlistParseError};

use crate::types::TypeExpr;

pub type RegId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Program,
    Ancilla,
    /// Allocation registers of the heap sections.
    Heap,
    /// Scratch inside a single expanded primitive.
    Internal,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Program => "program",
            Role::Ancilla => "ancilla",
            Role::Heap => "heap",
            Role::Internal => "internal",
        }
    }

    pub fn from_name(s: &str) -> Option<Role> {
        Some(match s {
            "program" => Role::Program,
            "ancilla" => Role::Ancilla,
            "heap" => Role::Heap,
            "internal" => Role::Internal,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub width: u32,
    pub role: Role,
}

/// A memory array standing for one heap section.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Memory {
    pub name: String,
    pub base: u64,
    pub blocks: usize,
    pub words: usize,
}

impl Memory {
    pub fn contains(&self, addr: u64) -> bool {
        addr >= self.base && addr < self.base + self.blocks as u64
    }
}

/// Registers holding one variable, one per word of its type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding {
    pub var: String,
    pub ty: TypeExpr,
    pub regs: Vec<RegId>,
}

/// Everything but the gate list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Header {
    pub k: u32,
    pub regs: Vec<Register>,
    pub mems: Vec<Memory>,
    /// Allocation register of each memory.
    pub hp: Vec<RegId>,
    /// Parameter registers at the start.
    pub inputs: Vec<Binding>,
    /// Parameter registers at the end, then the output.
    pub outputs: Vec<Binding>,
}

impl Header {
    pub fn reg_named(&self, name: &str) -> Option<RegId> {
        self.regs.iter().position(|r| r.name == name)
    }

    pub fn mem_named(&self, name: &str) -> Option<usize> {
        self.mems.iter().position(|m| m.name == name)
    }
}

/// Word-level operation with result XORed into `dst`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arith {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Shl,
    Shr,
}

impl Arith {
    pub const ALL: [Arith; 14] = [
        Arith::Add,
        Arith::Sub,
        Arith::Mul,
        Arith::And,
        Arith::Or,
        Arith::Xor,
        Arith::Eq,
        Arith::Ne,
        Arith::Lt,
        Arith::Le,
        Arith::Gt,
        Arith::Ge,
        Arith::Shl,
        Arith::Shr,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            Arith::Add => "ADD",
            Arith::Sub => "SUB",
            Arith::Mul => "MUL",
            Arith::And => "AND-INTO",
            Arith::Or => "OR-INTO",
            Arith::Xor => "XOR-INTO",
            Arith::Eq => "EQ",
            Arith::Ne => "NE",
            Arith::Lt => "LT",
            Arith::Le => "LE",
            Arith::Gt => "GT",
            Arith::Ge => "GE",
            Arith::Shl => "SHL",
            Arith::Shr => "SHR",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Arith> {
        Arith::ALL.iter().copied().find(|a| a.mnemonic() == s)
    }

    /// Classical value of the operation on `width`-bit operands.
    pub fn apply(self, a: u64, b: u64, width: u32) -> u64 {
        let m = mask(width);
        match self {
            Arith::Add => a.wrapping_add(b) & m,
            Arith::Sub => a.wrapping_sub(b) & m,
            Arith::Mul => a.wrapping_mul(b) & m,
            Arith::And => a & b,
            Arith::Or => a | b,
            Arith::Xor => a ^ b,
            Arith::Eq => (a == b) as u64,
            Arith::Ne => (a != b) as u64,
            Arith::Lt => (a < b) as u64,
            Arith::Le => (a <= b) as u64,
            Arith::Gt => (a > b) as u64,
            Arith::Ge => (a >= b) as u64,
            Arith::Shl => {
                if b >= width as u64 {
                    0
                } else {
                    (a << b) & m
                }
            }
            Arith::Shr => {
                if b >= width as u64 {
                    0
                } else {
                    a >> b
                }
            }
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, Arith::Eq | Arith::Ne | Arith::Lt | Arith::Le | Arith::Gt | Arith::Ge)
    }
}

pub(crate) fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// L1 macro op.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Op {
    /// XOR-CONST
    XorConst { dst: RegId, value: u64 },
    /// CNOT-COPY: `dst ^= src`.
    Copy { dst: RegId, src: RegId },
    /// `dst ^= !src` on one bit.
    Not { dst: RegId, src: RegId },
    /// `dst ^= (src == 0)`.
    Test { dst: RegId, src: RegId },
    Arith { op: Arith, dst: RegId, a: RegId, b: RegId },
    /// SWAP-REG
    Swap { a: RegId, b: RegId },
    /// Swap `data` with the first words of block `addr` of memory `mem`.
    Qram { addr: RegId, data: Vec<RegId>, mem: usize },
    Control { ctrl: RegId, body: Vec<Op> },
    /// A register enters scope at zero.
    Fresh(RegId),
    /// A register leaves scope and must be zero.
    Retire(RegId),
}

impl Op {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Op::XorConst { .. } => "XOR-CONST",
            Op::Copy { .. } => "CNOT-COPY",
            Op::Not { .. } => "NOT",
            Op::Test { .. } => "TEST",
            Op::Arith { op, .. } => op.mnemonic(),
            Op::Swap { .. } => "SWAP-REG",
            Op::Qram { .. } => "QRAM-SWAP",
            Op::Control { .. } => "CTRL",
            Op::Fresh(_) => "FRESH",
            Op::Retire(_) => "RETIRE",
        }
    }
}

/// L1 netlist.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Netlist {
    pub header: Header,
    pub ops: Vec<Op>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bit {
    pub reg: RegId,
    pub bit: u32,
}

impl Bit {
    pub fn new(reg: RegId, bit: u32) -> Bit {
        Bit { reg, bit }
    }
}

/// L2 primitive gate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Gate {
    /// NOT, CNOT, TOFFOLI or multi-controlled NOT, by number of controls.
    Mcx { controls: Vec<Bit>, target: Bit },
    /// SWAP or controlled SWAP.
    Swap { controls: Vec<Bit>, a: Bit, b: Bit },
    Qram { controls: Vec<Bit>, addr: RegId, data: Vec<RegId>, mem: usize },
    Fresh(RegId),
    Retire(RegId),
}

/// L2 netlist.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateNetlist {
    pub header: Header,
    pub gates: Vec<Gate>,
}

impl GateNetlist {
    /// The adjoint: gates reversed, scope markers exchanged.
    pub fn adjoint(&self) -> GateNetlist {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| match g {
                Gate::Fresh(r) => Gate::Retire(*r),
                Gate::Retire(r) => Gate::Fresh(*r),
                g => g.clone(),
            })
            .collect();
        let mut header = self.header.clone();
        std::mem::swap(&mut header.inputs, &mut header.outputs);
        GateNetlist { header, gates }
    }
}

#[cfg(test)]
mod tests;
