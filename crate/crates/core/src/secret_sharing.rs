//! Shamir `r`-out-of-`r` sharing of bit blocks over GF(2^l).
//!
//! The secret is cut into `l`-bit symbols (most significant bit first, zero
//! padded at the tail). Each symbol is the constant term of its own random
//! polynomial of degree `r - 1`; share `j` holds the evaluations at the
//! public point `x = j`.

use crate::bits::BitBlock;
use crate::error::{domain, invalid, Error, Result};
use crate::finite_field::{FieldSpec, GaloisField};
use crate::randomness::{CounterSource, RandomSource};
use crate::verify::distribution::DistributionTable;
use crate::Rational;

/// One share: the evaluations of every symbol polynomial at `point`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Share {
    /// 1-based share index `j`.
    pub index: usize,
    pub point: u16,
    pub symbols: Vec<u16>,
}

impl Share {
    /// Symbols packed into `symbols.len() * l` bits.
    pub fn to_block(&self, exponent: u32) -> BitBlock {
        let width = exponent as usize;
        let mut b = BitBlock::zeros(self.symbols.len() * width);
        for (i, &s) in self.symbols.iter().enumerate() {
            b.write_uint(i * width, width, u32::from(s));
        }
        b
    }

    /// Inverse of [`Share::to_block`] for share index `index`.
    pub fn from_block(index: usize, block: &BitBlock, exponent: u32) -> Result<Self> {
        let width = exponent as usize;
        if index == 0 || index >= 1 << exponent {
            return invalid(format!("share index {index} has no evaluation point in GF(2^{exponent})"));
        }
        if !block.len().is_multiple_of(width) {
            return Err(Error::Format(format!("share block of {} bits is not a whole number of {width}-bit symbols", block.len())));
        }
        let symbols = (0..block.len() / width).map(|i| block.read_uint(i * width, width) as u16).collect();
        Ok(Self { index, point: evaluation_point(index), symbols })
    }
}

/// All shares of one secret.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ShareSet {
    pub threshold: usize,
    pub secret_bits: usize,
    pub field: FieldSpec,
    pub shares: Vec<Share>,
}

/// Public evaluation point of share `j`: the field element with value `j`.
pub fn evaluation_point(index: usize) -> u16 {
    index as u16
}

/// Symbols per share for a secret of `secret_bits` bits.
pub fn share_len(secret_bits: usize, exponent: u32) -> usize {
    secret_bits.div_ceil(exponent as usize)
}

/// The field used for `r` shares: the smallest `l` with `r < 2^l`.
pub fn field_for_threshold(r: usize) -> Result<GaloisField> {
    Ok(GaloisField::new(FieldSpec::smallest_exceeding(r)?))
}

pub fn symbols_of(secret: &BitBlock, exponent: u32) -> Vec<u16> {
    let width = exponent as usize;
    (0..share_len(secret.len(), exponent)).map(|i| secret.read_uint(i * width, width) as u16).collect()
}

/// Splits `secret` into `r` shares. Coefficients are drawn symbol by symbol,
/// `r - 1` per symbol, lowest degree first.
pub fn split(secret: &BitBlock, r: usize, field: &GaloisField, randomness: &mut impl RandomSource) -> Result<ShareSet> {
    if r == 0 {
        return invalid("share count must be positive");
    }
    if r as u64 >= u64::from(field.order()) {
        return domain(format!("{r} shares need more than {} nonzero field elements", field.order() - 1));
    }
    let secret_symbols = symbols_of(secret, field.exponent());
    let mut shares: Vec<Share> = (1..=r)
        .map(|j| Share { index: j, point: evaluation_point(j), symbols: Vec::with_capacity(secret_symbols.len()) })
        .collect();
    let mut coeffs = vec![0u16; r];
    for &s in &secret_symbols {
        coeffs[0] = s;
        for c in &mut coeffs[1..] {
            *c = randomness.next_below(field.order()) as u16;
        }
        for share in &mut shares {
            share.symbols.push(field.poly_eval_values(&coeffs, share.point));
        }
    }
    Ok(ShareSet { threshold: r, secret_bits: secret.len(), field: field.spec(), shares })
}

/// Interpolates every symbol at zero and strips the padding.
pub fn reconstruct(set: &ShareSet) -> Result<BitBlock> {
    if set.shares.len() != set.threshold {
        return domain(format!("{} of {} shares present", set.shares.len(), set.threshold));
    }
    let field = GaloisField::new(set.field);
    let width = set.field.exponent() as usize;
    let len = share_len(set.secret_bits, set.field.exponent());
    if let Some(short) = set.shares.iter().find(|s| s.symbols.len() != len) {
        return domain(format!("share {} has {} symbols, expected {len}", short.index, short.symbols.len()));
    }
    let xs: Vec<u16> = set.shares.iter().map(|s| s.point).collect();
    let weights = field.lagrange_weights_at_zero(&xs)?;
    let mut out = BitBlock::zeros(len * width);
    let mut column = vec![0u16; set.shares.len()];
    for i in 0..len {
        for (c, share) in column.iter_mut().zip(&set.shares) {
            *c = share.symbols[i];
        }
        out.write_uint(i * width, width, u32::from(field.combine(&weights, &column)));
    }
    Ok(out.resized(set.secret_bits))
}

/// Exhaustive threshold-secrecy oracle.
///
/// For every secret of `symbols` field symbols, enumerates every coefficient
/// draw and tabulates the joint value of the shares at the 1-based
/// `observed` positions. Returns one conditional distribution per secret,
/// in secret order; perfect secrecy means they are all equal.
pub fn leakage_check(
    symbols: usize,
    r: usize,
    field: &GaloisField,
    observed: &[usize],
    cap: u128,
) -> Result<Vec<DistributionTable<Vec<u16>, Rational>>> {
    if observed.iter().any(|&j| j == 0 || j > r) {
        return invalid(format!("observed share positions must lie in 1..={r}"));
    }
    let order = u128::from(field.order());
    let secret_bits = symbols * field.exponent() as usize;
    let secrets = checked_pow(order, symbols, cap)?;
    let draws = checked_pow(order, symbols * r.saturating_sub(1), cap)?;
    let states = secrets.checked_mul(draws).filter(|&s| s <= cap).ok_or(Error::ResourceCap {
        states: secrets.saturating_mul(draws),
        cap,
    })?;
    debug_assert!(states <= cap);

    (0..secrets)
        .map(|value| {
            let mut secret = BitBlock::zeros(secret_bits);
            let mut rest = value;
            for i in 0..symbols {
                secret.write_uint(i * field.exponent() as usize, field.exponent() as usize, (rest % order) as u32);
                rest /= order;
            }
            let outcomes = (0..draws).map(|draw| {
                let set = split(&secret, r, field, &mut CounterSource::new(draw, field.order()))?;
                let view: Vec<u16> =
                    observed.iter().flat_map(|&j| set.shares[j - 1].symbols.iter().copied()).collect();
                Ok((view, 1))
            });
            DistributionTable::from_counts(outcomes.collect::<Result<Vec<_>>>()?)
        })
        .collect()
}

fn checked_pow(base: u128, exp: usize, cap: u128) -> Result<u128> {
    let exp = u32::try_from(exp).map_err(|_| Error::ResourceCap { states: u128::MAX, cap })?;
    base.checked_pow(exp).ok_or(Error::ResourceCap { states: u128::MAX, cap })
}
