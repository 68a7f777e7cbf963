//! Systematic `(n, k)` MDS codes over GF(2^m) for spreading keys as coded
//! sub-keys.
//!
//! The generator is `[I | P]`. `P` is a Cauchy matrix over the smallest
//! canonical field with more than `n` elements, except for two binary cases:
//! `(k, k)` uses the identity and `(3, 2)` uses the single parity column
//! `[1, 1]ᵀ`.

use crate::bits::BitBlock;
use crate::error::{domain, invalid, Error, Result};
use crate::finite_field::{FieldSpec, GaloisField};
use crate::topology::binomial;

/// Largest length the construction-time MDS check is run for.
pub const MAX_CHECKED_LENGTH: usize = 12;

#[derive(Clone, Debug)]
pub struct MdsCode {
    n: usize,
    k: usize,
    field: GaloisField,
    /// `k` rows of `n` field values.
    generator: Vec<Vec<u16>>,
}

/// Bits per code symbol for an `(n, k)` code, without building it.
pub fn symbol_bits_for(n: usize, k: usize) -> Result<usize> {
    if k == 0 || k > n {
        return invalid(format!("({n}, {k}) is not a valid code shape"));
    }
    if k == n || (n, k) == (3, 2) {
        return Ok(1);
    }
    Ok(FieldSpec::smallest_exceeding(n)?.exponent() as usize)
}

pub fn build_code(n: usize, k: usize) -> Result<MdsCode> {
    if k == 0 || k > n {
        return invalid(format!("({n}, {k}) is not a valid code shape"));
    }
    let code = if k == n || (n, k) == (3, 2) {
        let field = GaloisField::new(FieldSpec::canonical(1)?);
        let generator = (0..k)
            .map(|i| (0..n).map(|j| u16::from(j == i || j >= k)).collect())
            .collect();
        MdsCode { n, k, field, generator }
    } else {
        let field = GaloisField::new(FieldSpec::smallest_exceeding(n)?);
        // rows indexed by x_i = i, parity columns by y_j = k + j; all distinct
        let generator = (0..k)
            .map(|i| {
                (0..n)
                    .map(|j| match j < k {
                        true => u16::from(i == j),
                        false => field.inv_value(i as u16 ^ j as u16),
                    })
                    .collect()
            })
            .collect();
        MdsCode { n, k, field, generator }
    };
    if n <= MAX_CHECKED_LENGTH && !code.is_mds() {
        return Err(Error::Integrity(format!("({n}, {k}) generator is not MDS")));
    }
    Ok(code)
}

impl MdsCode {
    pub fn length(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.k
    }

    pub fn field(&self) -> &GaloisField {
        &self.field
    }

    pub fn generator(&self) -> &[Vec<u16>] {
        &self.generator
    }

    pub fn symbol_bits(&self) -> usize {
        self.field.exponent() as usize
    }

    /// Whether every `k` columns of the generator are linearly independent.
    pub fn is_mds(&self) -> bool {
        let subsets = crate::topology::enumerate_subsets(self.n, self.k);
        debug_assert_eq!(subsets.len() as u64, binomial(self.n, self.k));
        subsets.iter().all(|cols| {
            let positions: Vec<usize> = cols.iter().collect();
            invert(&self.field, &self.submatrix(&positions)).is_some()
        })
    }

    /// Columns at the given 1-based positions.
    fn submatrix(&self, positions: &[usize]) -> Vec<Vec<u16>> {
        self.generator.iter().map(|row| positions.iter().map(|&p| row[p - 1]).collect()).collect()
    }

    /// Bits per coded block for a key of `key_bits` bits: the key is padded
    /// to `k` sub-keys of a whole number of field symbols.
    pub fn block_bits(&self, key_bits: usize) -> usize {
        let m = self.symbol_bits();
        key_bits.div_ceil(self.k * m) * m
    }
}

/// The `n` coded blocks of one key.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CodedSubKeys {
    pub key_bits: usize,
    pub block_bits: usize,
    pub blocks: Vec<BitBlock>,
}

pub fn encode_key(key: &BitBlock, code: &MdsCode) -> CodedSubKeys {
    let block_bits = code.block_bits(key.len());
    let m = code.symbol_bits();
    let sub_keys: Vec<BitBlock> = (0..code.k).map(|i| key.slice(i * block_bits, block_bits)).collect();
    let mut blocks = vec![BitBlock::zeros(block_bits); code.n];
    let mut message = vec![0u16; code.k];
    for pos in (0..block_bits).step_by(m) {
        for (u, sub) in message.iter_mut().zip(&sub_keys) {
            *u = sub.read_uint(pos, m) as u16;
        }
        for (j, block) in blocks.iter_mut().enumerate() {
            let column: Vec<u16> = code.generator.iter().map(|row| row[j]).collect();
            block.write_uint(pos, m, u32::from(code.field.combine(&message, &column)));
        }
    }
    CodedSubKeys { key_bits: key.len(), block_bits, blocks }
}

/// Recovers the key from exactly `k` coded blocks at distinct 1-based
/// positions.
pub fn decode_key(blocks: &[(usize, &BitBlock)], key_bits: usize, code: &MdsCode) -> Result<BitBlock> {
    if blocks.len() != code.k {
        return domain(format!("{} coded blocks given, {} needed", blocks.len(), code.k));
    }
    let block_bits = code.block_bits(key_bits);
    let mut positions = Vec::with_capacity(code.k);
    for &(p, b) in blocks {
        if p == 0 || p > code.n {
            return invalid(format!("coded block position {p} outside 1..={}", code.n));
        }
        if positions.contains(&p) {
            return domain(format!("coded block position {p} given twice"));
        }
        if b.len() != block_bits {
            return domain(format!("coded block of {} bits, expected {block_bits}", b.len()));
        }
        positions.push(p);
    }
    let inverse = invert(&code.field, &code.submatrix(&positions))
        .ok_or_else(|| Error::Integrity("selected generator columns are singular".into()))?;

    let m = code.symbol_bits();
    let mut sub_keys = vec![BitBlock::zeros(block_bits); code.k];
    let mut received = vec![0u16; code.k];
    for pos in (0..block_bits).step_by(m) {
        for (c, (_, b)) in received.iter_mut().zip(blocks) {
            *c = b.read_uint(pos, m) as u16;
        }
        // u = c · A⁻¹
        for (i, sub) in sub_keys.iter_mut().enumerate() {
            let column: Vec<u16> = inverse.iter().map(|row| row[i]).collect();
            sub.write_uint(pos, m, u32::from(code.field.combine(&received, &column)));
        }
    }
    Ok(BitBlock::concat(&sub_keys).resized(key_bits))
}

/// Gauss-Jordan inverse of a square matrix, `None` if singular.
fn invert(field: &GaloisField, matrix: &[Vec<u16>]) -> Option<Vec<Vec<u16>>> {
    let n = matrix.len();
    let mut a: Vec<Vec<u16>> = matrix.to_vec();
    let mut inv: Vec<Vec<u16>> = (0..n).map(|i| (0..n).map(|j| u16::from(i == j)).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col] != 0)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = field.inv_value(a[col][col]);
        for j in 0..n {
            a[col][j] = field.mul_values(a[col][j], scale);
            inv[col][j] = field.mul_values(inv[col][j], scale);
        }
        for r in 0..n {
            let f = a[r][col];
            if r != col && f != 0 {
                for j in 0..n {
                    a[r][j] ^= field.mul_values(f, a[col][j]);
                    inv[r][j] ^= field.mul_values(f, inv[col][j]);
                }
            }
        }
    }
    Some(inv)
}
