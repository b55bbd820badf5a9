//! Packed sign vectors.
//!
//! Bit `i` set means the cell lies on the positive side of hyperplane `i`
//! (`Z_i . eta - v_i > 0`); cleared means the negative side.

use std::fmt;

const WORD: usize = 64;

#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignVector {
    len: usize,
    words: Vec<u64>,
}

impl SignVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        SignVector {
            len: 0,
            words: Vec::with_capacity(bits.div_ceil(WORD)),
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::with_capacity(bits.len());
        for &b in bits {
            s.push(b);
        }
        s
    }

    /// Builds from `+1`/`-1` entries; any positive value counts as `+1`.
    pub fn from_signs(signs: &[i8]) -> Self {
        let mut s = Self::with_capacity(signs.len());
        for &x in signs {
            s.push(x > 0);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, positive: bool) {
        if self.len.is_multiple_of(WORD) {
            self.words.push(0);
        }
        if positive {
            self.words[self.len / WORD] |= 1 << (self.len % WORD);
        }
        self.len += 1;
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "sign index {i} out of range {}", self.len);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    /// `+1` or `-1`.
    #[inline]
    pub fn sign(&self, i: usize) -> i8 {
        if self.get(i) {
            1
        } else {
            -1
        }
    }

    pub fn set(&mut self, i: usize, positive: bool) {
        assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if positive {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len);
        self.words[i / WORD] ^= 1 << (i % WORD);
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.flip(i);
        s
    }

    pub fn with_pushed(&self, positive: bool) -> Self {
        let mut s = self.clone();
        s.push(positive);
        s
    }

    pub fn hamming(&self, other: &SignVector) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn count_positive(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Bitwise XOR with a mask of the same length.
    pub fn xor(&self, mask: &SignVector) -> SignVector {
        assert_eq!(self.len, mask.len);
        SignVector {
            len: self.len,
            words: self.words.iter().zip(&mask.words).map(|(a, b)| a ^ b).collect(),
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of the positive entries.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * WORD + t)
            })
        })
    }

    /// Reorders entries: entry `k` of the result is entry `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> SignVector {
        assert_eq!(order.len(), self.len);
        let mut s = Self::with_capacity(self.len);
        for &i in order {
            s.push(self.get(i));
        }
        s
    }

    /// Hex rendering, most significant nibble first; bit 0 is the lowest bit of the last digit.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4).max(1);
        let mut out = String::with_capacity(digits);
        for k in (0..digits).rev() {
            let word = self.words.get(k * 4 / WORD).copied().unwrap_or(0);
            let nibble = (word >> ((k * 4) % WORD)) & 0xf;
            out.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        out
    }

    pub fn from_hex(hex: &str, len: usize) -> Option<SignVector> {
        let digits: Vec<u32> = hex.chars().map(|c| c.to_digit(16)).collect::<Option<_>>()?;
        let mut s = SignVector::with_capacity(len);
        for i in 0..len {
            let k = i / 4;
            let nib = if k < digits.len() { digits[digits.len() - 1 - k] } else { 0 };
            s.push(nib >> (i % 4) & 1 == 1);
        }
        (s.to_hex().trim_start_matches('0') == hex.trim_start_matches('0')).then_some(s)
    }
}

impl fmt::Debug for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SignVector(")?;
        for b in self.iter() {
            f.write_str(if b { "+" } else { "-" })?;
        }
        f.write_str(")")
    }
}

impl serde::Serialize for SignVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SignVector", 2)?;
        st.serialize_field("len", &self.len)?;
        st.serialize_field("hex", &self.to_hex())?;
        st.end()
    }
}

impl<'de> serde::Deserialize<'de> for SignVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        struct Raw {
            len: usize,
            hex: String,
        }
        let raw = Raw::deserialize(d)?;
        SignVector::from_hex(&raw.hex, raw.len)
            .ok_or_else(|| serde::de::Error::custom("malformed sign vector hex"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn push_get_flip() {
        let mut s = SignVector::from_signs(&[1, -1, 1]);
        assert_eq!(s.len(), 3);
        assert_eq!((s.sign(0), s.sign(1), s.sign(2)), (1, -1, 1));
        s.flip(1);
        assert!(s.get(1));
        assert_eq!(s.count_positive(), 3);
        assert_eq!(s.hamming(&SignVector::from_signs(&[1, -1, 1])), 1);
    }

    #[test]
    fn hex_layout() {
        let s = SignVector::from_signs(&[1, -1, -1, -1, 1]);
        assert_eq!(s.to_hex(), "11");
        assert_eq!(SignVector::new().to_hex(), "0");
    }

    #[test]
    fn ones_across_words() {
        let mut bits = vec![false; 130];
        bits[0] = true;
        bits[64] = true;
        bits[129] = true;
        let s = SignVector::from_bools(&bits);
        assert_eq!(s.ones().collect::<Vec<_>>(), vec![0, 64, 129]);
    }

    proptest! {
        #[test]
        fn hex_roundtrip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let s = SignVector::from_bools(&bits);
            prop_assert_eq!(SignVector::from_hex(&s.to_hex(), bits.len()), Some(s.clone()));
            prop_assert_eq!(s.iter().collect::<Vec<_>>(), bits);
        }
    }
}
