//! Gate and qubit counts.
//!
//! Gates are L1 macro ops other than CNOT-COPY and SWAP-REG, with ops inside
//! a CTRL block counted once each. Qubits are the peak total width of live
//! program and ancilla registers; heap allocation registers, memory and the
//! scratch internal to a primitive are not counted.

use serde::Serialize;

use super::{GateNetlist, Gate, Netlist, Op, Role};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub gates: usize,
    pub qubits: usize,
    pub copies: usize,
    pub swaps: usize,
    pub qram: usize,
    /// Primitive gates after expansion, when known.
    pub primitive_gates: Option<usize>,
}

pub fn cost_report(n: &Netlist) -> CostReport {
    fn walk(n: &Netlist, ops: &[Op], r: &mut CostReport, live: &mut usize) {
        for op in ops {
            match op {
                Op::Copy { .. } => r.copies += 1,
                Op::Swap { .. } => r.swaps += 1,
                Op::Fresh(reg) => {
                    *live += n.header.regs[*reg].width as usize;
                    r.qubits = r.qubits.max(*live);
                }
                Op::Retire(reg) => *live -= n.header.regs[*reg].width as usize,
                Op::Control { body, .. } => walk(n, body, r, live),
                Op::Qram { .. } => {
                    r.qram += 1;
                    r.gates += 1;
                }
                _ => r.gates += 1,
            }
        }
    }
    let mut r = CostReport::default();
    let mut live: usize =
        n.header.inputs.iter().flat_map(|b| &b.regs).map(|&reg| n.header.regs[reg].width as usize).sum();
    r.qubits = live;
    walk(n, &n.ops, &mut r, &mut live);
    r
}

impl CostReport {
    pub fn with_primitives(mut self, g: &GateNetlist) -> CostReport {
        self.primitive_gates = Some(g.gates.iter().filter(|g| !matches!(g, Gate::Fresh(_) | Gate::Retire(_))).count());
        self
    }
}

impl GateNetlist {
    pub fn internal_bits(&self) -> usize {
        self.header.regs.iter().filter(|r| r.role == Role::Internal).map(|r| r.width as usize).sum()
    }
}
