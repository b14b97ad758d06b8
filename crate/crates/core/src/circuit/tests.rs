use proptest::prelude::*;

use super::*;
use crate::boson::{Heap, PermutationSource, SectionSpec};
use crate::interp::{run_core, RunOptions, Value};
use crate::pipeline::core_source;
use crate::syntax::kernel::{Expr, Stmt};

fn heap(k: u32) -> Heap {
    Heap::new(k, &[SectionSpec { block_words: 2, count: 6 }], &PermutationSource::Identity).unwrap()
}

fn header(k: u32, widths: &[u32]) -> Header {
    Header {
        k,
        regs: widths
            .iter()
            .enumerate()
            .map(|(i, &w)| Register { name: format!("r{i}"), width: w, role: Role::Ancilla })
            .collect(),
        ..Header::default()
    }
}

#[test]
fn xor_const_sets_bits() {
    let n = Netlist { header: header(4, &[4]), ops: vec![Op::XorConst { dst: 0, value: 5 }] };
    let g = expand(&n);
    assert_eq!(
        g.gates,
        vec![Gate::Mcx { controls: vec![], target: Bit::new(0, 0) }, Gate::Mcx { controls: vec![], target: Bit::new(0, 2) }]
    );
}

#[test]
fn copy_is_a_cnot_fan() {
    let n = Netlist { header: header(4, &[4, 4]), ops: vec![Op::Copy { dst: 1, src: 0 }] };
    let g = expand(&n);
    assert_eq!(g.gates.len(), 4);
    assert!(g.gates.iter().all(|g| matches!(g, Gate::Mcx { controls, .. } if controls.len() == 1)));
}

#[test]
fn skip_swap_and_if_compile_as_documented() {
    let free = vec![("x".to_string(), crate::types::TypeExpr::Bool), ("y".into(), crate::types::TypeExpr::UInt), ("z".into(), crate::types::TypeExpr::UInt)];
    let n = compile_stmt(&Stmt::skip(), &free, &heap(4)).unwrap();
    assert_eq!(cost_report(&n).gates, 0);
    assert!(n.ops.is_empty());

    let n = compile_stmt(&Stmt::swap("y", "z"), &free, &heap(4)).unwrap();
    assert_eq!(n.ops.len(), 1);
    let g = expand(&n);
    assert_eq!(g.gates.iter().filter(|g| matches!(g, Gate::Swap { controls, .. } if controls.is_empty())).count(), 4);

    let n = compile_stmt(&Stmt::if_("x", Stmt::swap("y", "z")), &free, &heap(4)).unwrap();
    assert!(matches!(&n.ops[0], Op::Control { body, .. } if body.len() == 1));
    let g = expand(&n);
    assert_eq!(g.gates.iter().filter(|g| matches!(g, Gate::Swap { controls, .. } if controls.len() == 1)).count(), 4);
}

fn run_arith(op: Arith, w: u32, a: u64, b: u64, ctrl: Option<bool>) -> (u64, BasisState) {
    let h = header(w, &[w, w, if op.is_comparison() { 1 } else { w }, 1]);
    let inner = Op::Arith { op, dst: 2, a: 0, b: 1 };
    let ops = match ctrl {
        Some(_) => vec![Op::Control { ctrl: 3, body: vec![inner] }],
        None => vec![inner],
    };
    let n = Netlist { header: h, ops };
    let g = expand(&n);
    let mut st = BasisState::zero(&n.header);
    st.regs[0] = a;
    st.regs[1] = b;
    st.regs[3] = ctrl.unwrap_or(false) as u64;
    let out = simulate(&g, &st).unwrap();
    let l1 = simulate_l1(&n, &st).unwrap();
    assert_eq!(out, l1, "{op:?} L1 and L2 disagree");
    (out.regs[2], out)
}

proptest! {
    #[test]
    fn primitive_expansions_match_word_semantics(op in 0usize..14, w in 4u32..9, a in any::<u64>(), b in any::<u64>(), ctrl in any::<Option<bool>>()) {
        let op = Arith::ALL[op];
        let (a, b) = (a & mask(w), b & mask(w));
        let b = if matches!(op, Arith::Shl | Arith::Shr) { b % (w as u64 + 2) } else { b };
        let (got, st) = run_arith(op, w, a, b, ctrl);
        let want = if ctrl == Some(false) { 0 } else { op.apply(a, b, w) };
        prop_assert_eq!(got, want);
        prop_assert_eq!(st.regs[0], a);
        prop_assert_eq!(st.regs[1], b);
    }

    #[test]
    fn aliased_operands_are_handled(op in 0usize..14, a in 0u64..16) {
        let op = Arith::ALL[op];
        let h = header(4, &[4, if op.is_comparison() { 1 } else { 4 }]);
        let n = Netlist { header: h, ops: vec![Op::Arith { op, dst: 1, a: 0, b: 0 }] };
        let mut st = BasisState::zero(&n.header);
        st.regs[0] = a;
        let out = simulate(&expand(&n), &st).unwrap();
        prop_assert_eq!(out.regs[1], op.apply(a, a, 4));
        prop_assert_eq!(out.regs[0], a);
    }
}

const LIST: &str = "type list = (uint, ptr<list>);
    fun push_front(l: ptr<list>, x: uint) {
      let head <- alloc<list>;
      l <-> head;
      let node <- (x, head);
      let head -> node.2;
      *l <-> node;
      let node -> default<list>;
      return ();
    }";

fn build(h: &mut Heap, xs: &[u64]) -> Value {
    let mut next = 0;
    for &x in xs.iter().rev() {
        let a = h.alloc(0).unwrap();
        h.block_mut(a).unwrap().copy_from_slice(&[x, next]);
        next = a;
    }
    Value::addr(&crate::types::TypeExpr::list(), next)
}

#[test]
fn push_front_circuit_matches_interpreter() {
    let main = "fun main(l: ptr<list>, x: uint) { let r <- push_front(l, x); return r; }";
    let (_, core) = core_source(&[LIST], main, 4).unwrap();
    let mut h = heap(4);
    let l = build(&mut h, &[1, 2]);
    let inputs = vec![l, Value::UInt(6)];
    let fin = run_core(&core, inputs.clone(), h.clone(), &RunOptions { k: 4, ..RunOptions::default() }).unwrap();
    let n = compile(&core, &h).unwrap();
    let g = expand(&n);
    let st = BasisState::encode(&g.header, &inputs, &h).unwrap();
    let out = simulate(&g, &st).unwrap();
    let vals = out.decode_outputs(&g.header);
    assert_eq!(vals[..2], fin.params[..]);
    assert_eq!(out.decode_heap(&g.header, &h), fin.heap);
    let report = cost_report(&n);
    assert_eq!(report.gates, 2);
    assert_eq!(report.qram, 2);
}

#[test]
fn adjoint_undoes_compiled_program() {
    let main = "fun main(l: ptr<list>, x: uint) { let r <- push_front(l, x); return r; }";
    let (_, core) = core_source(&[LIST], main, 4).unwrap();
    let h = heap(4);
    let mut g = expand(&compile(&core, &h).unwrap());
    g.gates.retain(|g| !matches!(g, Gate::Fresh(_) | Gate::Retire(_)));
    let adj = g.adjoint();
    let mut rng = 7u64;
    for _ in 0..100 {
        let mut st = BasisState::zero(&g.header);
        for &r in g.header.inputs.iter().flat_map(|b| &b.regs).chain(&g.header.hp) {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            st.regs[r] = (rng >> 33) & mask(g.header.regs[r].width);
        }
        for m in &mut st.mems {
            for w in m.iter_mut() {
                rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *w = (rng >> 33) & 15;
            }
        }
        let fwd = simulate(&g, &st).unwrap();
        let back = simulate(&adj, &fwd).unwrap();
        assert_eq!(back, st);
    }
}

#[test]
fn retiring_a_dirty_register_is_reported() {
    let s = Stmt::seq(vec![
        Stmt::assign("t", Expr::Var("y".into())),
        Stmt::unassign("t", Expr::Lit(crate::syntax::kernel::Literal::Num(0))),
    ]);
    let free = vec![("y".to_string(), crate::types::TypeExpr::UInt)];
    let n = compile_stmt(&s, &free, &heap(4)).unwrap();
    let mut st = BasisState::zero(&n.header);
    st.regs[n.header.inputs[0].regs[0]] = 3;
    assert!(matches!(simulate(&expand(&n), &st), Err(SimError::AncillaViolation { .. })));
    assert!(matches!(simulate_l1(&n, &st), Err(SimError::AncillaViolation { .. })));
}

#[test]
fn text_round_trips() {
    let main = "fun main(l: ptr<list>, x: uint) { let r <- push_front(l, x); return r; }";
    let (_, core) = core_source(&[LIST], main, 4).unwrap();
    let n = compile(&core, &heap(4)).unwrap();
    let mut n = n;
    n.ops.push(Op::Control { ctrl: 1, body: vec![Op::XorConst { dst: 2, value: 3 }] });
    let p = parse_netlist(&n.to_string()).unwrap();
    assert_eq!(p.ops, n.ops);
    assert_eq!(p.header.regs, n.header.regs);
    assert_eq!(p.header.mems, n.header.mems);
    let g = expand(&n);
    let q = parse_gates(&g.to_string()).unwrap();
    assert_eq!(q.gates, g.gates);
    assert_eq!(q.to_string(), g.to_string());
    assert!(parse_gates("LEVEL l2\nK 4\nREG a 4 program\nNOT a.9\n").is_err());
    assert!(parse_netlist("LEVEL l1\nK 4\nREG a 4 program\nCTRL a.0 {\n").is_err());
}
