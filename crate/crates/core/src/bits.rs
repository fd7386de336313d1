//! Fixed-length bitvectors over `u64` words.
//!
//! Every column of a dataset, every term capture and every prediction vector
//! is a [`Bits`]. The bits past `len` in the last word are always zero, so
//! word-wise popcounts never need masking.

use std::fmt;

const WORD: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut bits = Bits {
            words: vec![u64::MAX; words_for(len)],
            len,
        };
        bits.clear_tail();
        bits
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for b in iter {
            if len % WORD == 0 {
                words.push(0);
            }
            if b {
                *words.last_mut().unwrap() |= 1 << (len % WORD);
            }
            len += 1;
        }
        Bits { words, len }
    }

    /// Parses a string of `'0'`/`'1'` characters, ignoring nothing else.
    pub fn from_01_str(s: &str) -> Option<Self> {
        let mut out = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                _ => return None,
            }
        }
        Some(Bits::from_bools(out))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn count_zeros(&self) -> u64 {
        self.len as u64 - self.count_ones()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD + tz)
            })
        })
    }

    pub fn and(&self, other: &Bits) -> Bits {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn or(&self, other: &Bits) -> Bits {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        self.zip_with(other, |a, b| a ^ b)
    }

    /// `self & !other`
    pub fn and_not(&self, other: &Bits) -> Bits {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn not(&self) -> Bits {
        let mut out = Bits {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        out.clear_tail();
        out
    }

    pub fn and_assign(&mut self, other: &Bits) {
        self.check_len(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn or_assign(&mut self, other: &Bits) {
        self.check_len(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Overwrites `self` with `other` without reallocating.
    pub fn copy_from(&mut self, other: &Bits) {
        self.check_len(other);
        self.words.copy_from_slice(&other.words);
    }

    /// popcount(self & other) without materialising the intersection.
    pub fn count_and(&self, other: &Bits) -> u64 {
        self.check_len(other);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    /// popcount(self ^ other)
    pub fn count_xor(&self, other: &Bits) -> u64 {
        self.check_len(other);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as u64)
            .sum()
    }

    /// Returns `(popcount(self & !mask), popcount(self & !mask & labels))`.
    ///
    /// This is the inner step of prefix extension: how many examples a term
    /// newly captures, and how many of those are positive.
    pub fn count_new_and_positive(&self, mask: &Bits, labels: &Bits) -> (u64, u64) {
        self.check_len(mask);
        self.check_len(labels);
        let mut new = 0u64;
        let mut pos = 0u64;
        for ((t, m), y) in self.words.iter().zip(&mask.words).zip(&labels.words) {
            let fresh = t & !m;
            new += fresh.count_ones() as u64;
            pos += (fresh & y).count_ones() as u64;
        }
        (new, pos)
    }

    /// Writes `base | other` into `self`.
    pub fn assign_or(&mut self, base: &Bits, other: &Bits) {
        self.check_len(base);
        self.check_len(other);
        for ((dst, a), b) in self.words.iter_mut().zip(&base.words).zip(&other.words) {
            *dst = a | b;
        }
    }

    /// Subset of positions, in the order given.
    pub fn select(&self, indices: &[usize]) -> Bits {
        Bits::from_bools(indices.iter().map(|&i| self.get(i)))
    }

    pub fn to_01_string(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    /// Number of bytes held by the word buffer.
    pub fn heap_bytes(&self) -> usize {
        self.words.capacity() * std::mem::size_of::<u64>()
    }

    fn zip_with(&self, other: &Bits, f: impl Fn(u64, u64) -> u64) -> Bits {
        self.check_len(other);
        Bits {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            len: self.len,
        }
    }

    #[inline]
    fn check_len(&self, other: &Bits) {
        assert_eq!(self.len, other.len, "bitvector length mismatch");
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits[{}]", self.to_01_string())
    }
}

impl FromIterator<bool> for Bits {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Bits::from_bools(iter)
    }
}
