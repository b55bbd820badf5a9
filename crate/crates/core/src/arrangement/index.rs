//! Hash index over the sign vectors of an arrangement.
//!
//! Keys are Zobrist hashes (XOR of a per-hyperplane random word over the
//! positive entries), so flipping one sign is an O(1) key update and the
//! Hamming-1 neighbour queries used for pruning stay cheap for long vectors.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sign::SignVector;

/// Keys are already uniformly random, so the hasher passes them through.
#[derive(Default)]
pub(crate) struct PassThrough(u64);

impl Hasher for PassThrough {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = self.0.rotate_left(8) ^ b as u64;
        }
    }
    fn write_u64(&mut self, x: u64) {
        self.0 = x;
    }
}

type Map = HashMap<u64, u32, BuildHasherDefault<PassThrough>>;

pub(crate) struct Zobrist {
    keys: Vec<u64>,
}

impl Zobrist {
    pub(crate) fn new(n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(0x2b1d_5ca1_ab1e);
        Zobrist {
            keys: (0..n).map(|_| rng.next_u64()).collect(),
        }
    }

    pub(crate) fn key(&self, i: usize) -> u64 {
        self.keys[i]
    }

    pub(crate) fn hash(&self, s: &SignVector) -> u64 {
        s.ones().fold(0, |h, i| h ^ self.keys[i])
    }
}

pub(crate) struct SignIndex<'a> {
    signs: Vec<&'a SignVector>,
    hashes: Vec<u64>,
    map: Map,
    /// Entries whose hash collided with an earlier one.
    overflow: Vec<(u64, u32)>,
    zobrist: &'a Zobrist,
}

impl<'a> SignIndex<'a> {
    pub(crate) fn new(signs: impl IntoIterator<Item = &'a SignVector>, zobrist: &'a Zobrist) -> Self {
        let signs: Vec<&SignVector> = signs.into_iter().collect();
        let hashes: Vec<u64> = signs.iter().map(|s| zobrist.hash(s)).collect();
        Self::with_hashes(signs, hashes, zobrist)
    }

    /// Index over signs whose hashes the caller already maintains.
    pub(crate) fn with_hashes(signs: Vec<&'a SignVector>, hashes: Vec<u64>, zobrist: &'a Zobrist) -> Self {
        debug_assert_eq!(signs.len(), hashes.len());
        let mut map = Map::with_capacity_and_hasher(signs.len(), Default::default());
        let mut overflow = Vec::new();
        for (j, &h) in hashes.iter().enumerate() {
            match map.entry(h) {
                Entry::Vacant(e) => {
                    e.insert(j as u32);
                }
                Entry::Occupied(_) => overflow.push((h, j as u32)),
            }
        }
        SignIndex {
            signs,
            hashes,
            map,
            overflow,
            zobrist,
        }
    }

    fn find(&self, h: u64, s: &SignVector) -> Option<usize> {
        let j = *self.map.get(&h)? as usize;
        if self.signs[j] == s {
            return Some(j);
        }
        self.overflow
            .iter()
            .find(|(oh, oj)| *oh == h && self.signs[*oj as usize] == s)
            .map(|(_, j)| *j as usize)
    }

    pub(crate) fn get(&self, s: &SignVector) -> Option<usize> {
        self.find(self.zobrist.hash(s), s)
    }

    /// Index of the cell whose sign vector is cell `j`'s with entry `i` flipped.
    pub(crate) fn neighbour(&self, j: usize, i: usize) -> Option<usize> {
        let h = self.hashes[j] ^ self.zobrist.key(i);
        let k = *self.map.get(&h)? as usize;
        let is_match = |k: usize| {
            let other = self.signs[k];
            other.len() == self.signs[j].len() && other.hamming(self.signs[j]) == 1 && other.get(i) != self.signs[j].get(i)
        };
        if is_match(k) {
            return Some(k);
        }
        self.overflow
            .iter()
            .find(|(oh, ok)| *oh == h && is_match(*ok as usize))
            .map(|(_, k)| *k as usize)
    }
}
