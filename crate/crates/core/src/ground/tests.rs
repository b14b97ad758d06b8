use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

#[test]
fn every_op_type_checks() {
    let setup = Setup::corpus(8);
    for op in OPS {
        let bound = bound_for(op, &[], 8).map(|_| 3);
        prepare(op, bound, &setup).unwrap_or_else(|e| panic!("{e}"));
    }
}

#[test]
fn ops_match_models() {
    let setup = Setup::corpus(8);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for op in OPS {
        for _ in 0..10 {
            let args = sample_args(op, &mut rng, 8, 4, setup.hash_word());
            let run = run_corpus_op(op, &args, &setup).unwrap_or_else(|e| panic!("{e} on {args:?}"));
            check_model(op, &args, &run, &setup).unwrap_or_else(|e| panic!("{e}"));
        }
    }
}

#[test]
fn round_trips_restore_state() {
    let setup = Setup::corpus(8);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for op in OPS {
        for _ in 0..25 {
            let args = sample_args(op, &mut rng, 8, 5, setup.hash_word());
            let prep = prepare(op, bound_for(op, &args, 8), &setup).unwrap();
            let run = run_prepared(&prep, &args, setup.heap().unwrap(), &setup).unwrap_or_else(|e| panic!("{e} on {args:?}"));
            check_model(op, &args, &run, &setup).unwrap_or_else(|e| panic!("{e}"));
            check_round_trip(&prep, &args, &run, &setup).unwrap_or_else(|e| panic!("{e}"));
        }
    }
}

#[test]
fn states_stay_valid() {
    let setup = Setup { check_validity: true, ..Setup::with_sections(4, 3, 5) };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for op in OPS {
        let args = sample_args(op, &mut rng, 4, 2, setup.hash_word());
        let run = run_corpus_op(op, &args, &setup).unwrap_or_else(|e| panic!("{e} on {args:?}"));
        check_model(op, &args, &run, &setup).unwrap_or_else(|e| panic!("{e}"));
    }
}

#[test]
fn circuits_agree_with_interpreter() {
    let setup = Setup::with_sections(4, 3, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for name in ["stack.push_front", "stack.pop_front", "list.length", "list.find_pos", "radix.insert", "radix.contains"] {
        let op = op(name).unwrap();
        for _ in 0..5 {
            let args = sample_args(op, &mut rng, 4, 2, setup.hash_word());
            let prep = prepare(op, bound_for(op, &args, 4), &setup).unwrap();
            check_circuit(&prep, &args, &setup).unwrap_or_else(|e| panic!("{e} on {args:?}"));
        }
    }
}
