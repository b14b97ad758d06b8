//! L1 macro ops to L2 primitive gates.
//!
//! Each macro computes into internal scratch with self-inverse gates,
//! XORs the result into its destination, then replays the scratch gates
//! backwards so every internal bit ends at zero. A `CTRL` block adds its
//! control bit to every gate of its body.

use super::{Arith, Bit, Gate, GateNetlist, Netlist, Op, RegId, Register, Role};

struct Expander {
    regs: Vec<Register>,
    scratch: Vec<RegId>,
    /// Next free scratch bit for the op being expanded.
    used: u32,
    ctrl: Vec<Bit>,
    out: Vec<Gate>,
}

const SCRATCH_WIDTH: u32 = 64;

impl Expander {
    fn width(&self, r: RegId) -> u32 {
        self.regs[r].width
    }

    fn bits(&self, r: RegId) -> Vec<Bit> {
        (0..self.width(r)).map(|i| Bit::new(r, i)).collect()
    }

    fn scratch(&mut self, n: u32) -> Vec<Bit> {
        (0..n)
            .map(|_| {
                let idx = self.used;
                self.used += 1;
                let reg = (idx / SCRATCH_WIDTH) as usize;
                while self.scratch.len() <= reg {
                    self.regs.push(Register { name: format!("anc{}", self.scratch.len()), width: SCRATCH_WIDTH, role: Role::Internal });
                    self.scratch.push(self.regs.len() - 1);
                }
                Bit::new(self.scratch[reg], idx % SCRATCH_WIDTH)
            })
            .collect()
    }

    fn op(&mut self, op: &Op) {
        self.used = 0;
        let mut g = Vec::new();
        match op {
            Op::Fresh(r) => {
                self.out.push(Gate::Fresh(*r));
                return;
            }
            Op::Retire(r) => {
                self.out.push(Gate::Retire(*r));
                return;
            }
            Op::Control { ctrl, body } => {
                self.ctrl.push(Bit::new(*ctrl, 0));
                for o in body {
                    self.op(o);
                }
                self.ctrl.pop();
                return;
            }
            Op::XorConst { dst, value } => {
                for b in self.bits(*dst) {
                    if value >> b.bit & 1 == 1 {
                        g.push(x(&[], b));
                    }
                }
            }
            Op::Copy { dst, src } => {
                for (d, s) in self.bits(*dst).into_iter().zip(self.bits(*src)) {
                    g.push(x(&[s], d));
                }
            }
            Op::Not { dst, src } => {
                let (d, s) = (Bit::new(*dst, 0), Bit::new(*src, 0));
                g.push(x(&[s], d));
                g.push(x(&[], d));
            }
            Op::Test { dst, src } => {
                let s = self.bits(*src);
                let flips: Vec<Gate> = s.iter().map(|&b| x(&[], b)).collect();
                g.extend(flips.iter().cloned());
                g.push(x(&s, Bit::new(*dst, 0)));
                g.extend(flips.into_iter().rev());
            }
            Op::Swap { a, b } => {
                for (p, q) in self.bits(*a).into_iter().zip(self.bits(*b)) {
                    g.push(Gate::Swap { controls: vec![], a: p, b: q });
                }
            }
            Op::Qram { addr, data, mem } => {
                g.push(Gate::Qram { controls: vec![], addr: *addr, data: data.clone(), mem: *mem });
            }
            Op::Arith { op, dst, a, b } => g = self.arith(*op, *dst, *a, *b),
        }
        let ctrl = self.ctrl.clone();
        self.out.extend(g.into_iter().map(|g| with_controls(g, &ctrl)));
    }

    fn arith(&mut self, op: Arith, dst: RegId, a: RegId, b: RegId) -> Vec<Gate> {
        let (ab, bb, db) = (self.bits(a), self.bits(b), self.bits(dst));
        let w = ab.len();
        let mut g = Vec::new();
        match op {
            Arith::And => {
                for i in 0..w {
                    g.push(x(&[ab[i], bb[i]], db[i]));
                }
            }
            Arith::Or => {
                for i in 0..w {
                    g.push(x(&[ab[i]], db[i]));
                    g.push(x(&[bb[i]], db[i]));
                    g.push(x(&[ab[i], bb[i]], db[i]));
                }
            }
            Arith::Xor => {
                for i in 0..w {
                    g.push(x(&[ab[i]], db[i]));
                    g.push(x(&[bb[i]], db[i]));
                }
            }
            Arith::Add => {
                let carries = self.scratch(w as u32);
                g.extend(adder(&ab, &bb, None, &db, &carries));
            }
            Arith::Sub => {
                let nb = self.scratch(w as u32);
                let cin = self.scratch(1)[0];
                let carries = self.scratch(w as u32);
                let prep = negate_into(&bb, &nb, cin);
                g.extend(prep.iter().cloned());
                g.extend(adder(&ab, &nb, Some(cin), &db, &carries));
                g.extend(prep.into_iter().rev());
            }
            Arith::Mul => g = self.multiplier(&ab, &bb, &db),
            Arith::Eq | Arith::Ne => {
                let e = self.scratch(w as u32);
                let mut pre = Vec::new();
                for i in 0..w {
                    pre.push(x(&[ab[i]], e[i]));
                    pre.push(x(&[bb[i]], e[i]));
                    pre.push(x(&[], e[i]));
                }
                g.extend(pre.iter().cloned());
                g.push(x(&e, db[0]));
                g.extend(pre.into_iter().rev());
                if op == Arith::Ne {
                    g.push(x(&[], db[0]));
                }
            }
            Arith::Lt | Arith::Ge | Arith::Gt | Arith::Le => {
                // a < b iff a + !b + 1 has no carry out.
                let (p, q) = if matches!(op, Arith::Lt | Arith::Ge) { (&ab, &bb) } else { (&bb, &ab) };
                let nq = self.scratch(w as u32);
                let cin = self.scratch(1)[0];
                let carries = self.scratch(w as u32 + 1);
                let mut pre = negate_into(q, &nq, cin);
                pre.extend(carry_chain(p, &nq, Some(cin), &carries[..=w]));
                g.extend(pre.iter().cloned());
                g.push(x(&[carries[w]], db[0]));
                if matches!(op, Arith::Lt | Arith::Gt) {
                    g.push(x(&[], db[0]));
                }
                g.extend(pre.into_iter().rev());
            }
            Arith::Shl | Arith::Shr => {
                let f = self.scratch(1)[0];
                for s in 0..w {
                    let flips: Vec<Gate> = bb.iter().enumerate().filter(|(i, _)| s >> i & 1 == 0).map(|(_, &b)| x(&[], b)).collect();
                    let mut pre = flips.clone();
                    pre.push(x(&bb, f));
                    pre.extend(flips.into_iter().rev());
                    g.extend(pre.iter().cloned());
                    for i in 0..w {
                        let j = if op == Arith::Shl { i.checked_add(s) } else { i.checked_sub(s) };
                        if let Some(j) = j.filter(|&j| j < w) {
                            g.push(x(&[f, ab[i]], db[j]));
                        }
                    }
                    g.extend(pre.into_iter().rev());
                }
            }
        }
        g
    }

    /// Shift-and-add: partial products and running sums in scratch, copy out, unwind.
    fn multiplier(&mut self, a: &[Bit], b: &[Bit], d: &[Bit]) -> Vec<Gate> {
        let w = a.len();
        let carries = self.scratch(w as u32);
        let mut sums: Vec<Vec<Bit>> = vec![];
        let mut pre = Vec::new();
        for i in 0..w {
            let t = self.scratch(w as u32);
            for j in i..w {
                pre.push(x(&[b[i], a[j - i]], t[j]));
            }
            let s = self.scratch(w as u32);
            match sums.last() {
                None => {
                    for j in 0..w {
                        pre.push(x(&[t[j]], s[j]));
                    }
                }
                Some(prev) => pre.extend(adder(prev, &t, None, &s, &carries)),
            }
            sums.push(s);
        }
        let last = sums.last().expect("w >= 1");
        let mut g = pre.clone();
        for j in 0..w {
            g.push(x(&[last[j]], d[j]));
        }
        g.extend(pre.into_iter().rev());
        g
    }
}

fn x(controls: &[Bit], target: Bit) -> Gate {
    Gate::Mcx { controls: controls.to_vec(), target }
}

fn with_controls(g: Gate, ctrl: &[Bit]) -> Gate {
    if ctrl.is_empty() {
        return g;
    }
    let pre = |c: Vec<Bit>| ctrl.iter().copied().chain(c).collect::<Vec<_>>();
    match g {
        Gate::Mcx { controls, target } => Gate::Mcx { controls: pre(controls), target },
        Gate::Swap { controls, a, b } => Gate::Swap { controls: pre(controls), a, b },
        Gate::Qram { controls, addr, data, mem } => Gate::Qram { controls: pre(controls), addr, data, mem },
        g => g,
    }
}

/// `nb ^= !b` and `cin ^= 1`.
fn negate_into(b: &[Bit], nb: &[Bit], cin: Bit) -> Vec<Gate> {
    let mut g = Vec::new();
    for i in 0..b.len() {
        g.push(x(&[b[i]], nb[i]));
        g.push(x(&[], nb[i]));
    }
    g.push(x(&[], cin));
    g
}

/// Carries `c[i+1] = maj(a_i, b_i, c_i)` into zeroed bits `c[1..]`; `c[0]` is the carry-in.
fn carry_chain(a: &[Bit], b: &[Bit], cin: Option<Bit>, c: &[Bit]) -> Vec<Gate> {
    let mut g = Vec::new();
    let carry = |i: usize| if i == 0 { cin } else { Some(c[i]) };
    for i in 0..c.len() - 1 {
        g.push(x(&[a[i], b[i]], c[i + 1]));
        if let Some(ci) = carry(i) {
            g.push(x(&[a[i], ci], c[i + 1]));
            g.push(x(&[b[i], ci], c[i + 1]));
        }
    }
    g
}

/// Ripple-carry: `d ^= a + b + cin`, carries in zeroed scratch `c` (at least `w` bits).
fn adder(a: &[Bit], b: &[Bit], cin: Option<Bit>, d: &[Bit], c: &[Bit]) -> Vec<Gate> {
    let w = a.len();
    let chain = carry_chain(a, b, cin, &c[..w]);
    let mut g = chain.clone();
    for i in 0..w {
        g.push(x(&[a[i]], d[i]));
        g.push(x(&[b[i]], d[i]));
        let ci = if i == 0 { cin } else { Some(c[i]) };
        if let Some(ci) = ci {
            g.push(x(&[ci], d[i]));
        }
    }
    g.extend(chain.into_iter().rev());
    g
}

/// Lower an L1 netlist to primitive gates.
pub fn expand(n: &Netlist) -> GateNetlist {
    let mut e = Expander { regs: n.header.regs.clone(), scratch: Vec::new(), used: 0, ctrl: Vec::new(), out: Vec::new() };
    for op in &n.ops {
        e.op(op);
    }
    let mut header = n.header.clone();
    header.regs = e.regs;
    GateNetlist { header, gates: e.out }
}
