//! Basis-state simulation of both netlist levels.

use super::{mask, Bit, Gate, GateNetlist, Header, Netlist, Op, RegId, Role};
use crate::boson::Heap;
use crate::interp::Value;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("ancilla `{reg}` retired holding {value}")]
    AncillaViolation { reg: String, value: u64 },
    #[error("internal scratch `{reg}` left holding {value:#x}")]
    ScratchDirty { reg: String, value: u64 },
    #[error("initial state has {got} registers, netlist has {want}")]
    Shape { got: usize, want: usize },
    #[error("value for `{var}` does not fit its registers")]
    Encoding { var: String },
}

/// Register contents plus one flat word array per memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisState {
    pub regs: Vec<u64>,
    pub mems: Vec<Vec<u64>>,
}

impl BasisState {
    pub fn zero(h: &Header) -> BasisState {
        BasisState { regs: vec![0; h.regs.len()], mems: h.mems.iter().map(|m| vec![0; m.blocks * m.words]).collect() }
    }

    fn get(&self, b: Bit) -> bool {
        self.regs[b.reg] >> b.bit & 1 == 1
    }

    fn flip(&mut self, b: Bit) {
        self.regs[b.reg] ^= 1 << b.bit;
    }

    /// Load parameters and the heap into a fresh state.
    pub fn encode(h: &Header, params: &[Value], heap: &Heap) -> Result<BasisState, SimError> {
        let mut st = BasisState::zero(h);
        if params.len() != h.inputs.len() {
            return Err(SimError::Shape { got: params.len(), want: h.inputs.len() });
        }
        for (b, v) in h.inputs.iter().zip(params) {
            let words = v.to_words();
            if words.len() != b.regs.len() {
                return Err(SimError::Encoding { var: b.var.clone() });
            }
            for (&r, w) in b.regs.iter().zip(words) {
                st.regs[r] = w & mask(h.regs[r].width);
            }
        }
        for (i, m) in h.mems.iter().enumerate() {
            st.regs[h.hp[i]] = heap.sections[i].hp;
            for blk in 0..m.blocks {
                let words = heap.block(m.base + blk as u64).unwrap_or(&[]);
                for (j, w) in words.iter().enumerate().take(m.words) {
                    st.mems[i][blk * m.words + j] = *w;
                }
            }
        }
        Ok(st)
    }

    /// Output values, parameters first, then the result.
    pub fn decode_outputs(&self, h: &Header) -> Vec<Value> {
        h.outputs
            .iter()
            .map(|b| {
                let words: Vec<u64> = b.regs.iter().map(|&r| self.regs[r]).collect();
                Value::from_words(&b.ty, &words)
            })
            .collect()
    }

    /// Write memories and allocation registers back into a copy of `template`.
    pub fn decode_heap(&self, h: &Header, template: &Heap) -> Heap {
        let mut heap = template.clone();
        for (i, m) in h.mems.iter().enumerate() {
            heap.sections[i].hp = self.regs[h.hp[i]];
            for blk in 0..m.blocks {
                if let Some(b) = heap.block_mut(m.base + blk as u64) {
                    for (j, w) in b.iter_mut().enumerate().take(m.words) {
                        *w = self.mems[i][blk * m.words + j];
                    }
                }
            }
        }
        heap
    }

    fn qram(&mut self, h: &Header, addr: RegId, data: &[RegId], mem: usize) {
        let a = self.regs[addr];
        let m = &h.mems[mem];
        if a == 0 || !m.contains(a) {
            return;
        }
        let base = (a - m.base) as usize * m.words;
        for (j, &r) in data.iter().enumerate().take(m.words) {
            let wm = mask(h.regs[r].width);
            let word = self.mems[mem][base + j];
            self.mems[mem][base + j] = (word & !wm) | self.regs[r];
            self.regs[r] = word & wm;
        }
    }

    fn retire(&self, h: &Header, r: RegId) -> Result<(), SimError> {
        if self.regs[r] != 0 {
            return Err(SimError::AncillaViolation { reg: h.regs[r].name.clone(), value: self.regs[r] });
        }
        Ok(())
    }
}

/// Run L2 gates. Checks every retired register and all internal scratch.
pub fn simulate(n: &GateNetlist, init: &BasisState) -> Result<BasisState, SimError> {
    let h = &n.header;
    if init.regs.len() > h.regs.len() {
        return Err(SimError::Shape { got: init.regs.len(), want: h.regs.len() });
    }
    let mut st = init.clone();
    st.regs.resize(h.regs.len(), 0);
    for g in &n.gates {
        match g {
            Gate::Mcx { controls, target } => {
                if controls.iter().all(|&c| st.get(c)) {
                    st.flip(*target);
                }
            }
            Gate::Swap { controls, a, b } => {
                if controls.iter().all(|&c| st.get(c)) && st.get(*a) != st.get(*b) {
                    st.flip(*a);
                    st.flip(*b);
                }
            }
            Gate::Qram { controls, addr, data, mem } => {
                if controls.iter().all(|&c| st.get(c)) {
                    st.qram(h, *addr, data, *mem);
                }
            }
            Gate::Fresh(_) => {}
            Gate::Retire(r) => st.retire(h, *r)?,
        }
    }
    for (i, r) in h.regs.iter().enumerate() {
        if r.role == Role::Internal && st.regs[i] != 0 {
            return Err(SimError::ScratchDirty { reg: r.name.clone(), value: st.regs[i] });
        }
    }
    st.regs.truncate(h.regs.iter().take_while(|r| r.role != Role::Internal).count());
    Ok(st)
}

/// Run L1 macro ops directly.
pub fn simulate_l1(n: &Netlist, init: &BasisState) -> Result<BasisState, SimError> {
    fn run(h: &Header, ops: &[Op], st: &mut BasisState) -> Result<(), SimError> {
        for op in ops {
            match op {
                Op::XorConst { dst, value } => st.regs[*dst] ^= value & mask(h.regs[*dst].width),
                Op::Copy { dst, src } => st.regs[*dst] ^= st.regs[*src] & mask(h.regs[*dst].width),
                Op::Not { dst, src } => st.regs[*dst] ^= !st.regs[*src] & 1,
                Op::Test { dst, src } => st.regs[*dst] ^= (st.regs[*src] == 0) as u64,
                Op::Arith { op, dst, a, b } => {
                    let w = h.regs[*a].width;
                    st.regs[*dst] ^= op.apply(st.regs[*a], st.regs[*b], w);
                }
                Op::Swap { a, b } => st.regs.swap(*a, *b),
                Op::Qram { addr, data, mem } => st.qram(h, *addr, data, *mem),
                Op::Control { ctrl, body } => {
                    if st.regs[*ctrl] & 1 == 1 {
                        run(h, body, st)?;
                    }
                }
                Op::Fresh(_) => {}
                Op::Retire(r) => st.retire(h, *r)?,
            }
        }
        Ok(())
    }
    let mut st = init.clone();
    st.regs.resize(n.header.regs.len(), 0);
    run(&n.header, &n.ops, &mut st)?;
    Ok(st)
}
