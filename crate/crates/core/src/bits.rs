//! Fixed-length bit strings with byte storage.
//!
//! Bit `i` lives in byte `i / 8` at position `7 - i % 8` (MSB first), so the
//! first bit of a block is the most significant bit of its first byte. Unused
//! tail bits are always zero.

use std::fmt;
use std::ops::BitXorAssign;

use crate::error::{invalid, Result};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitBlock {
    bytes: Vec<u8>,
    len: usize,
}

impl BitBlock {
    pub fn zeros(len: usize) -> Self {
        Self { bytes: vec![0; len.div_ceil(8)], len }
    }

    /// Takes the first `len` bits of `bytes`; trailing bits are cleared.
    pub fn from_bytes(mut bytes: Vec<u8>, len: usize) -> Result<Self> {
        let needed = len.div_ceil(8);
        if bytes.len() < needed {
            return invalid(format!("{} bytes cannot hold {} bits", bytes.len(), len));
        }
        bytes.truncate(needed);
        let mut block = Self { bytes, len };
        block.clear_tail();
        Ok(block)
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut block = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            block.set(i, b);
        }
        block
    }

    /// Parses a string over `{0,1}`; whitespace is ignored.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars().filter(|c| !c.is_whitespace()) {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => return invalid(format!("unexpected character {other:?} in bit string")),
            }
        }
        Ok(Self::from_bits(&bits))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.bytes[i / 8] >> (7 - i % 8) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u8 << (7 - i % 8);
        if value {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn is_zero(&self) -> bool {
        self.bytes.iter().all(|&b| b == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Reads `width` bits starting at `pos` as an unsigned integer, first bit
    /// most significant. Positions past the end read as zero.
    pub fn read_uint(&self, pos: usize, width: usize) -> u32 {
        debug_assert!(width <= 32);
        let mut v = 0u32;
        for i in pos..pos + width {
            v = (v << 1) | u32::from(i < self.len && self.get(i));
        }
        v
    }

    /// Writes the low `width` bits of `value` at `pos`, most significant first.
    /// Bits that would land past the end are dropped.
    pub fn write_uint(&mut self, pos: usize, width: usize, value: u32) {
        for k in 0..width {
            let i = pos + k;
            if i < self.len {
                self.set(i, value >> (width - 1 - k) & 1 == 1);
            }
        }
    }

    /// Copy of bits `[start, start + len)`; bits past the end read as zero.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        let mut out = Self::zeros(len);
        if start.is_multiple_of(8) && start + len <= self.len {
            let from = start / 8;
            out.bytes.copy_from_slice(&self.bytes[from..from + len.div_ceil(8)]);
            out.clear_tail();
            return out;
        }
        for i in 0..len {
            if start + i < self.len && self.get(start + i) {
                out.set(i, true);
            }
        }
        out
    }

    /// Zero-extends or truncates to `len` bits.
    pub fn resized(&self, len: usize) -> Self {
        let mut bytes = self.bytes.clone();
        bytes.resize(len.div_ceil(8), 0);
        let mut out = Self { bytes, len };
        out.clear_tail();
        out
    }

    pub fn append(&mut self, other: &BitBlock) {
        if self.len.is_multiple_of(8) {
            self.bytes.extend_from_slice(&other.bytes);
            self.len += other.len;
            return;
        }
        let start = self.len;
        self.len += other.len;
        self.bytes.resize(self.len.div_ceil(8), 0);
        for i in 0..other.len {
            if other.get(i) {
                self.set(start + i, true);
            }
        }
    }

    pub fn concat<'a>(blocks: impl IntoIterator<Item = &'a BitBlock>) -> Self {
        let mut out = Self::zeros(0);
        for b in blocks {
            out.append(b);
        }
        out
    }

    pub fn xor(&self, other: &BitBlock) -> Self {
        let mut out = self.clone();
        out ^= other;
        out
    }

    pub fn to_bit_string(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 8;
        if rem != 0 {
            if let Some(last) = self.bytes.last_mut() {
                *last &= 0xffu8 << (8 - rem);
            }
        }
    }
}

impl BitXorAssign<&BitBlock> for BitBlock {
    fn bitxor_assign(&mut self, rhs: &BitBlock) {
        assert_eq!(self.len, rhs.len, "xor of blocks with different lengths");
        for (a, b) in self.bytes.iter_mut().zip(&rhs.bytes) {
            *a ^= b;
        }
    }
}

impl fmt::Debug for BitBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 64 {
            write!(f, "BitBlock({})", self.to_bit_string())
        } else {
            write!(f, "BitBlock(len={}, {})", self.len, hex::encode(&self.bytes))
        }
    }
}
