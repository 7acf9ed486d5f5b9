//! Packed GF(2) bit strings.
//!
//! Bits are stored little-endian inside `u64` words. The wire form is
//! MSB-first: bit 0 of the string is the most significant bit of byte 0, and
//! the final byte is zero-padded.

use std::fmt;

use rand::RngCore;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            words: vec![0; word_count(len)],
        }
    }

    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut words: Vec<u64> = (0..word_count(len)).map(|_| rng.next_u64()).collect();
        mask_tail(&mut words, len);
        BitString { len, words }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = BitString::zeros(0);
        for b in bits {
            out.push(b);
        }
        out
    }

    /// Parses an MSB-first byte string holding `len` bits. Padding bits must be
    /// zero.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let tail = len % 8;
        if tail != 0 && bytes[bytes.len() - 1] & (0xFF >> tail) != 0 {
            return None;
        }
        Some(Self::from_bytes_truncated(bytes, len))
    }

    /// The first `len` bits of an MSB-first byte string; extra bits are dropped.
    pub fn from_bytes_truncated(bytes: &[u8], len: usize) -> Self {
        assert!(bytes.len() * 8 >= len, "not enough bytes for {len} bits");
        let mut words = vec![0u64; word_count(len)];
        for (j, &byte) in bytes.iter().take(len.div_ceil(8)).enumerate() {
            words[j / 8] |= (byte.reverse_bits() as u64) << (8 * (j % 8));
        }
        mask_tail(&mut words, len);
        BitString { len, words }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for (j, byte) in out.iter_mut().enumerate() {
            *byte = ((self.words[j / 8] >> (8 * (j % 8))) as u8).reverse_bits();
        }
        out
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
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn push(&mut self, v: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, v);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        for b in other.iter() {
            self.push(b);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// In-place XOR. Panics on length mismatch; callers validate external input
    /// before reaching here.
    pub fn xor_assign(&mut self, other: &BitString) {
        assert_eq!(self.len, other.len, "xor of bit strings with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn hamming_distance(&self, other: &BitString) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// GF(2) inner product.
    pub fn dot(&self, other: &BitString) -> bool {
        assert_eq!(self.len, other.len);
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }

    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len, "slice out of range");
        let mut out = BitString::zeros(len);
        for (k, w) in out.words.iter_mut().enumerate() {
            *w = self.window(start + 64 * k);
        }
        mask_tail(&mut out.words, len);
        out
    }

    /// Bits at the given positions, in order.
    pub fn select(&self, positions: &[usize]) -> BitString {
        BitString::from_bools(positions.iter().map(|&i| self.get(i)))
    }

    /// Up to 64 bits starting at `start`, packed LSB-first; bits past the end
    /// read as zero.
    #[inline]
    pub(crate) fn window(&self, start: usize) -> u64 {
        let wi = start / 64;
        let off = start % 64;
        let lo = self.words.get(wi).copied().unwrap_or(0);
        if off == 0 {
            return lo;
        }
        let hi = self.words.get(wi + 1).copied().unwrap_or(0);
        (lo >> off) | (hi << (64 - off))
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

fn mask_tail(words: &mut [u64], len: usize) {
    let tail = len % 64;
    if tail != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << tail) - 1;
        }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({}; ", self.len)?;
        if self.len <= 128 {
            for b in self.iter() {
                f.write_str(if b { "1" } else { "0" })?;
            }
        } else {
            write!(f, "{}…", hex_prefix(&self.to_bytes()))?;
        }
        f.write_str(")")
    }
}

fn hex_prefix(bytes: &[u8]) -> String {
    bytes.iter().take(16).map(|b| format!("{b:02x}")).collect()
}

impl FromIterator<bool> for BitString {
    fn from_iter<T: IntoIterator<Item = bool>>(iter: T) -> Self {
        BitString::from_bools(iter)
    }
}
