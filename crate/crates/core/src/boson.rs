//! The Boson allocator: a reversible free-list heap split into size-class
//! sections, with permutation-randomized initialization.

use std::collections::BTreeMap;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::types::TypeExpr;

/// Name of the seeded permutation algorithm. Part of the config format.
pub const PRNG_ALGORITHM: &str = "chacha8-fy-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionSpec {
    /// Words per block, a power of two.
    pub block_words: usize,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PermutationSource {
    Identity,
    /// Fisher-Yates over ChaCha8, one draw sequence shared by all sections.
    Seeded(u64),
    /// One permutation of `1..=count` per section.
    Explicit(Vec<Vec<usize>>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum HeapError {
    #[error("block size {0} is not a power of two")]
    BlockSize(usize),
    #[error("heap needs {needed} addresses but a {k}-bit word addresses only {max}")]
    AddressSpace { needed: usize, k: u32, max: u64 },
    #[error("two sections share block size {0}")]
    DuplicateSection(usize),
    #[error("permutation for section {section} is not a bijection on 1..={count}")]
    BadPermutation { section: usize, count: usize },
    #[error("expected {expected} permutations, got {got}")]
    PermutationCount { expected: usize, got: usize },
    #[error("no section fits a {words}-word value")]
    NoSection { words: usize },
    #[error("out of memory in the {block_words}-word section")]
    OutOfMemory { block_words: usize },
    #[error("deallocating address {addr}, which is not an allocated block of the {block_words}-word section")]
    NotAllocated { addr: u64, block_words: usize },
    #[error("deallocating block {addr} whose contents are not zero")]
    DeallocNonZero { addr: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    pub block_words: usize,
    /// First address of the section.
    pub base: u64,
    pub count: usize,
    /// Allocation register: head of the free list, 0 when exhausted.
    pub hp: u64,
    /// The initial permutation, for reference.
    pub perm: Vec<usize>,
}

impl Section {
    pub fn contains(&self, addr: u64) -> bool {
        addr >= self.base && addr < self.base + self.count as u64
    }
}

/// Allocator metadata plus the memory it manages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Heap {
    pub k: u32,
    pub sections: Vec<Section>,
    /// Block contents indexed by address; index 0 is the reserved null slot.
    mem: Vec<Vec<u64>>,
}

/// A uniformly random permutation of `1..=n`.
pub fn seeded_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (1..=n).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        p.swap(i, j);
    }
    p
}

/// All permutations of `1..=n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        let n = used.len();
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i + 1);
                go(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn is_bijection(p: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n + 1];
    p.len() == n && p.iter().all(|&i| i >= 1 && i <= n && !std::mem::replace(&mut seen[i], true))
}

impl Heap {
    pub fn new(k: u32, specs: &[SectionSpec], source: &PermutationSource) -> Result<Heap, HeapError> {
        let mut specs = specs.to_vec();
        specs.sort_by_key(|s| s.block_words);
        for w in specs.windows(2) {
            if w[0].block_words == w[1].block_words {
                return Err(HeapError::DuplicateSection(w[0].block_words));
            }
        }
        let total: usize = specs.iter().map(|s| s.count).sum();
        let max = if k >= 64 { u64::MAX } else { (1u64 << k) - 1 };
        if total as u64 > max {
            return Err(HeapError::AddressSpace { needed: total, k, max });
        }
        let perms: Vec<Vec<usize>> = match source {
            PermutationSource::Identity => specs.iter().map(|s| (1..=s.count).collect()).collect(),
            PermutationSource::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                specs.iter().map(|s| seeded_permutation(&mut rng, s.count)).collect()
            }
            PermutationSource::Explicit(ps) => {
                if ps.len() != specs.len() {
                    return Err(HeapError::PermutationCount { expected: specs.len(), got: ps.len() });
                }
                ps.clone()
            }
        };
        let mut mem = vec![Vec::new()];
        let mut sections = Vec::new();
        let mut base = 1u64;
        for (i, (spec, perm)) in specs.iter().zip(perms).enumerate() {
            if !spec.block_words.is_power_of_two() {
                return Err(HeapError::BlockSize(spec.block_words));
            }
            if !is_bijection(&perm, spec.count) {
                return Err(HeapError::BadPermutation { section: i, count: spec.count });
            }
            let start = mem.len();
            mem.extend((0..spec.count).map(|_| vec![0u64; spec.block_words]));
            for w in perm.windows(2) {
                mem[start + w[0] - 1][0] = base + w[1] as u64 - 1;
            }
            let hp = perm.first().map(|&f| base + f as u64 - 1).unwrap_or(0);
            sections.push(Section { block_words: spec.block_words, base, count: spec.count, hp, perm });
            base += spec.count as u64;
        }
        Ok(Heap { k, sections, mem })
    }

    /// Index of the smallest section whose blocks hold `words` words.
    pub fn section_for_words(&self, words: usize) -> Option<usize> {
        let words = words.max(1);
        self.sections.iter().position(|s| s.block_words >= words)
    }

    pub fn section_for(&self, ty: &TypeExpr) -> Result<usize, HeapError> {
        let words = ty.words();
        self.section_for_words(words).ok_or(HeapError::NoSection { words })
    }

    pub fn section_of(&self, addr: u64) -> Option<usize> {
        self.sections.iter().position(|s| s.contains(addr))
    }

    pub fn total_blocks(&self) -> usize {
        self.sections.iter().map(|s| s.count).sum()
    }

    pub fn block(&self, addr: u64) -> Option<&[u64]> {
        if addr == 0 {
            return None;
        }
        self.mem.get(addr as usize).map(|b| b.as_slice())
    }

    pub fn block_mut(&mut self, addr: u64) -> Option<&mut Vec<u64>> {
        if addr == 0 {
            return None;
        }
        self.mem.get_mut(addr as usize)
    }

    /// `x <-> hp; *x <-> hp`: hand out the free-list head.
    pub fn alloc(&mut self, section: usize) -> Result<u64, HeapError> {
        let sec = &self.sections[section];
        let a = sec.hp;
        if a == 0 {
            return Err(HeapError::OutOfMemory { block_words: sec.block_words });
        }
        let next = std::mem::take(&mut self.mem[a as usize][0]);
        self.sections[section].hp = next;
        Ok(a)
    }

    /// Exact reverse of `alloc`: the block becomes the free-list head.
    pub fn dealloc(&mut self, section: usize, addr: u64) -> Result<(), HeapError> {
        let sec = &self.sections[section];
        if !sec.contains(addr) || self.is_free(addr) {
            return Err(HeapError::NotAllocated { addr, block_words: sec.block_words });
        }
        if self.mem[addr as usize].iter().any(|w| *w != 0) {
            return Err(HeapError::DeallocNonZero { addr });
        }
        self.mem[addr as usize][0] = sec.hp;
        self.sections[section].hp = addr;
        Ok(())
    }

    /// Free blocks of a section in free-list order.
    pub fn free_list(&self, section: usize) -> Vec<u64> {
        let sec = &self.sections[section];
        let mut out = Vec::new();
        let mut cur = sec.hp;
        while cur != 0 && sec.contains(cur) && out.len() <= sec.count {
            out.push(cur);
            cur = self.mem[cur as usize][0];
        }
        out
    }

    pub fn is_free(&self, addr: u64) -> bool {
        match self.section_of(addr) {
            Some(s) => self.free_list(s).contains(&addr),
            None => false,
        }
    }

    /// Allocated addresses across all sections.
    pub fn allocated(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for (i, s) in self.sections.iter().enumerate() {
            let free = self.free_list(i);
            out.extend((s.base..s.base + s.count as u64).filter(|a| !free.contains(a)));
        }
        out
    }

    /// Free-list shape check: chains end in null without cycles and free
    /// payloads hold nothing but the link.
    pub fn check_free_lists(&self) -> Result<(), String> {
        for (i, s) in self.sections.iter().enumerate() {
            let mut seen = BTreeMap::new();
            let mut cur = s.hp;
            while cur != 0 {
                if !s.contains(cur) {
                    return Err(format!("free list of section {i} leaves the section at {cur}"));
                }
                if seen.insert(cur, ()).is_some() {
                    return Err(format!("free list of section {i} revisits block {cur}"));
                }
                let b = &self.mem[cur as usize];
                if b[1..].iter().any(|w| *w != 0) {
                    return Err(format!("free block {cur} has a nonzero payload"));
                }
                cur = b[0];
            }
        }
        Ok(())
    }

    /// Canonical bytes of the physical state: allocation registers and every block.
    pub fn fingerprint(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for s in &self.sections {
            out.extend_from_slice(&s.hp.to_le_bytes());
        }
        for b in &self.mem[1..] {
            for w in b {
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
        out
    }

    /// Words of memory, one row per address starting at 1.
    pub fn memory(&self) -> &[Vec<u64>] {
        &self.mem[1..]
    }
}

/// One step of an allocator-level history.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AllocOp {
    Alloc(String),
    Dealloc(String),
}

/// Run an allocator history on a one-section heap of `n` one-word blocks.
pub fn run_alloc_ops(ops: &[AllocOp], n: usize, perm: &[usize]) -> Result<Heap, HeapError> {
    let spec = [SectionSpec { block_words: 1, count: n }];
    let mut h = Heap::new(8, &spec, &PermutationSource::Explicit(vec![perm.to_vec()]))?;
    let mut vars: BTreeMap<&str, u64> = BTreeMap::new();
    for op in ops {
        match op {
            AllocOp::Alloc(x) => {
                let a = h.alloc(0)?;
                vars.insert(x, a);
            }
            AllocOp::Dealloc(x) => {
                let a = vars.remove(x.as_str()).unwrap_or(0);
                h.dealloc(0, a)?;
            }
        }
    }
    Ok(h)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HiVerdict {
    Equal,
    /// Fingerprint multisets differ; the first permutation where the
    /// representations disagree is attached.
    Counterexample { perm: Vec<usize> },
}

/// Compare fingerprint multisets of two histories over all `n!` initial permutations.
pub fn hi_distribution_oracle<F, G>(n: usize, mut run_a: F, mut run_b: G) -> HiVerdict
where
    F: FnMut(&[usize]) -> Vec<u8>,
    G: FnMut(&[usize]) -> Vec<u8>,
{
    hi_over(&all_permutations(n), &mut run_a, &mut run_b)
}

/// The same comparison restricted to a given set of initial permutations.
pub fn hi_over<F, G>(perms: &[Vec<usize>], run_a: &mut F, run_b: &mut G) -> HiVerdict
where
    F: FnMut(&[usize]) -> Vec<u8>,
    G: FnMut(&[usize]) -> Vec<u8>,
{
    let mut a: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    let mut b: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    let mut first_diff = None;
    for p in perms {
        let fa = run_a(p);
        let fb = run_b(p);
        if fa != fb && first_diff.is_none() {
            first_diff = Some(p.clone());
        }
        *a.entry(fa).or_default() += 1;
        *b.entry(fb).or_default() += 1;
    }
    if a == b {
        HiVerdict::Equal
    } else {
        HiVerdict::Counterexample { perm: first_diff.unwrap_or_default() }
    }
}

/// Allocator-level oracle over two histories on `n` one-word blocks.
pub fn alloc_hi_oracle(a: &[AllocOp], b: &[AllocOp], n: usize) -> HiVerdict {
    let fp = |ops: &[AllocOp], p: &[usize]| run_alloc_ops(ops, n, p).map(|h| h.fingerprint()).unwrap_or_default();
    hi_distribution_oracle(n, |p| fp(a, p), |p| fp(b, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(n: usize, src: PermutationSource) -> Heap {
        Heap::new(8, &[SectionSpec { block_words: 1, count: n }], &src).unwrap()
    }

    #[test]
    fn identity_layout_threads_in_order() {
        let h = one(4, PermutationSource::Identity);
        assert_eq!(h.sections[0].hp, 1);
        assert_eq!(h.memory(), &[vec![2], vec![3], vec![4], vec![0]]);
    }

    #[test]
    fn single_block_heap() {
        let h = one(1, PermutationSource::Identity);
        assert_eq!(h.sections[0].hp, 1);
        assert_eq!(h.memory(), &[vec![0]]);
    }

    #[test]
    fn explicit_permutation_layout() {
        let h = one(3, PermutationSource::Explicit(vec![vec![2, 3, 1]]));
        assert_eq!(h.sections[0].hp, 2);
        assert_eq!(h.memory(), &[vec![0], vec![3], vec![1]]);
    }

    #[test]
    fn alloc_takes_head_and_zeroes() {
        let mut h = one(4, PermutationSource::Identity);
        assert_eq!(h.alloc(0).unwrap(), 1);
        assert_eq!(h.sections[0].hp, 2);
        assert_eq!(h.block(1).unwrap(), &[0]);
    }

    #[test]
    fn last_block_then_exhaustion() {
        let mut h = one(1, PermutationSource::Identity);
        assert_eq!(h.alloc(0).unwrap(), 1);
        assert_eq!(h.sections[0].hp, 0);
        assert!(matches!(h.alloc(0), Err(HeapError::OutOfMemory { .. })));
    }

    #[test]
    fn alloc_then_dealloc_is_identity() {
        let h0 = one(5, PermutationSource::Seeded(7));
        let mut h = h0.clone();
        let a = h.alloc(0).unwrap();
        h.dealloc(0, a).unwrap();
        assert_eq!(h, h0);
    }

    #[test]
    fn dealloc_of_dirty_block_is_rejected() {
        let mut h = one(2, PermutationSource::Identity);
        let a = h.alloc(0).unwrap();
        h.block_mut(a).unwrap()[0] = 7;
        assert_eq!(h.dealloc(0, a), Err(HeapError::DeallocNonZero { addr: a }));
    }

    #[test]
    fn free_list_order_records_history() {
        use AllocOp::*;
        let ops = [Alloc("a".into()), Alloc("b".into()), Dealloc("a".into()), Dealloc("b".into())];
        let id: Vec<usize> = (1..=4).collect();
        let before = run_alloc_ops(&[], 4, &id).unwrap();
        let after = run_alloc_ops(&ops, 4, &id).unwrap();
        assert_ne!(before.fingerprint(), after.fingerprint());
        assert_eq!(after.free_list(0), vec![2, 1, 3, 4]);
    }

    #[test]
    fn seeded_permutations_are_reproducible() {
        let a = one(6, PermutationSource::Seeded(42));
        let b = one(6, PermutationSource::Seeded(42));
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn permutation_count() {
        assert_eq!(all_permutations(4).len(), 24);
    }
}
