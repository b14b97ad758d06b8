use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tower::boson::{run_alloc_ops, AllocOp, Heap, PermutationSource, SectionSpec};
use tower::ground::{
    bound_for, check_model, check_round_trip, decode, encode_args, prepare, run_prepared, sample_args, Setup, LIBRARIES, OPS,
};
use tower::interp::{run_core, run_core_inverse, RunOptions};
use tower::pipeline::check_source;
use tower::syntax::pretty_print;
use tower::transform::invert;

fn setup() -> Setup {
    Setup::corpus(8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decode_inverts_encode(i in 0..OPS.len(), seed in any::<u64>(), size in 0usize..6) {
        let op = &OPS[i];
        let s = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let args = sample_args(op, &mut rng, 8, size, s.hash_word());
        let prep = prepare(op, bound_for(op, &args, 8), &s).unwrap();
        let mut heap = s.heap().unwrap();
        let values = encode_args(&prep, &args, &mut heap).unwrap();
        for ((kind, a), v) in op.args.iter().zip(&args).zip(&values) {
            prop_assert_eq!(&decode(*kind, v, &heap).unwrap(), a);
        }
    }

    #[test]
    fn forward_then_reverse_restores(i in 0..OPS.len(), seed in any::<u64>(), perm in any::<u64>()) {
        let op = &OPS[i];
        let s = Setup { permutation: PermutationSource::Seeded(perm), ..setup() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let args = sample_args(op, &mut rng, 8, 4, s.hash_word());
        let prep = prepare(op, bound_for(op, &args, 8), &s).unwrap();
        let run = run_prepared(&prep, &args, s.heap().unwrap(), &s).unwrap();
        prop_assert!(check_model(op, &args, &run, &s).is_ok());
        prop_assert!(check_round_trip(&prep, &args, &run, &s).is_ok());
    }

    #[test]
    fn inverse_program_undoes_forward(i in 0..OPS.len(), seed in any::<u64>()) {
        let op = &OPS[i];
        let s = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let args = sample_args(op, &mut rng, 8, 3, s.hash_word());
        let prep = prepare(op, bound_for(op, &args, 8), &s).unwrap();
        let mut heap = s.heap().unwrap();
        let inputs = encode_args(&prep, &args, &mut heap).unwrap();
        let before = heap.clone();
        let opts = RunOptions { k: 8, ..RunOptions::default() };
        let fin = run_core(&prep.core, inputs.clone(), heap, &opts).unwrap();
        let back = run_core_inverse(&prep.core, fin.params, fin.output, fin.heap, &opts).unwrap();
        prop_assert_eq!(back.params, inputs);
        prop_assert_eq!(back.heap, before);
    }

    #[test]
    fn alloc_then_dealloc_restores_any_heap(perm in any::<u64>(), n in 1usize..6) {
        let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let mut ops: Vec<AllocOp> = names.iter().cloned().map(AllocOp::Alloc).collect();
        ops.extend(names.iter().rev().cloned().map(AllocOp::Dealloc));
        let p = tower::boson::seeded_permutation(&mut ChaCha8Rng::seed_from_u64(perm), 6);
        let empty = run_alloc_ops(&[], 6, &p).unwrap();
        prop_assert_eq!(run_alloc_ops(&ops, 6, &p).unwrap().fingerprint(), empty.fingerprint());
    }
}

#[test]
fn inversion_is_an_involution() {
    let s = setup();
    for op in OPS {
        let prep = prepare(op, bound_for(op, &[], 8).map(|_| 3), &s).unwrap();
        let body = &prep.core.body;
        assert_eq!(&invert(&invert(body)), body, "{}", op.name);
    }
}

#[test]
fn pretty_printing_is_stable() {
    for (name, src) in LIBRARIES {
        let main = "fun main(x: uint) -> uint { let y <- x; return y; }";
        let checked = check_source(&[src], main, 8).unwrap_or_else(|e| panic!("{name}: {e}"));
        let once = pretty_print(&checked.kernel);
        let again = check_source(&[], &once, 8).unwrap_or_else(|e| panic!("{name} reprinted: {e}\n{once}"));
        assert_eq!(pretty_print(&again.kernel), once, "{name}");
    }
}

#[test]
fn fresh_heap_is_all_free() {
    let h = Heap::new(8, &[SectionSpec { block_words: 2, count: 5 }], &PermutationSource::Seeded(3)).unwrap();
    assert!(h.allocated().is_empty());
    assert_eq!(h.free_list(0).len(), 5);
}
