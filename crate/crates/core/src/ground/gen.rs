//! Random arguments that satisfy each operation's precondition.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::model::{hash_bucket, Bst};
use super::{Abstract, Kind, Op};

fn word<R: Rng>(rng: &mut R, k: u32) -> u64 {
    rng.gen_range(0..1u64 << k)
}

fn string<R: Rng>(rng: &mut R, max_len: usize) -> Vec<bool> {
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| rng.gen()).collect()
}

fn distinct<R: Rng>(rng: &mut R, n: usize, k: u32) -> Vec<u64> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < n.min(1 << k) {
        let x = word(rng, k);
        if seen.insert(x) {
            out.push(x);
        }
    }
    out
}

/// A member of `pool` half of the time, otherwise any word.
fn probe<R: Rng>(rng: &mut R, pool: &[u64], k: u32) -> u64 {
    match pool.choose(rng) {
        Some(&x) if rng.gen_bool(0.5) => x,
        _ => word(rng, k),
    }
}

/// Arguments for `op` whose structures hold at most `max_size` elements.
pub fn sample_args<R: Rng>(op: &Op, rng: &mut R, k: u32, max_size: usize, hc: u64) -> Vec<Abstract> {
    let size = rng.gen_range(0..=max_size);
    let name = op.name;
    match op.args {
        [Kind::List, rest @ ..] => {
            let needs_elem = matches!(name, "list.remove" | "stack.pop_front" | "queue.pop_front");
            let n = if needs_elem { size.max(1) } else { size };
            let l: Vec<u64> = (0..n).map(|_| word(rng, k)).collect();
            let mut args = vec![Abstract::List(l.clone())];
            if !rest.is_empty() {
                let x = if name == "list.remove" { *l.choose(rng).expect("nonempty") } else { probe(rng, &l, k) };
                args.push(Abstract::Word(x));
            }
            args
        }
        [Kind::SortedSet | Kind::Radix, _] => {
            let keys = distinct(rng, size, k);
            let x = probe(rng, &keys, k);
            vec![Abstract::Set(keys.into_iter().collect()), Abstract::Word(x)]
        }
        [Kind::Tree, _] => {
            let keys = distinct(rng, size, k);
            let x = probe(rng, &keys, k);
            vec![Abstract::Tree(Bst::from_keys(&keys)), Abstract::Word(x)]
        }
        [Kind::Map, rest @ ..] => {
            let keys = distinct(rng, size, k);
            let mut chains: [Vec<(u64, u64)>; 2] = [Vec::new(), Vec::new()];
            for &key in &keys {
                chains[hash_bucket(key, hc, k)].push((key, rng.gen_range(1..1u64 << k)));
            }
            let mut args = vec![Abstract::Map(chains), Abstract::Word(probe(rng, &keys, k))];
            if rest.len() == 2 {
                args.push(Abstract::Word(rng.gen_range(1..1u64 << k)));
            }
            args
        }
        [Kind::Str] => vec![Abstract::Str(string(rng, k as usize))],
        [Kind::Str, Kind::Word] => {
            let s = string(rng, k as usize);
            let i = rng.gen_range(0..=k as u64 + 1);
            vec![Abstract::Str(s), Abstract::Word(i)]
        }
        [Kind::Str, Kind::Str] => {
            let a = string(rng, k as usize);
            let b = if name == "string.concat" {
                string(rng, k as usize - a.len())
            } else if rng.gen_bool(0.5) {
                let mut b: Vec<bool> = a[..rng.gen_range(0..=a.len())].to_vec();
                let extra = rng.gen_range(0..=k as usize - b.len());
                b.extend((0..extra).map(|_| rng.gen::<bool>()));
                b
            } else {
                string(rng, k as usize)
            };
            vec![Abstract::Str(a), Abstract::Str(b)]
        }
        args => args.iter().map(|_| Abstract::Word(word(rng, k))).collect(),
    }
}
