//! Arithmetic in GF(2^l) with log/antilog tables.
//!
//! Elements are packed in polynomial basis with the least significant bit as
//! the constant term, so addition is XOR. Supported exponents are `1..=16`.

use std::fmt;

use crate::error::{domain, invalid, Result};

pub const MAX_EXPONENT: u32 = 16;

/// Field size and reduction polynomial. The modulus bit-mask includes the
/// leading `x^l` term.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct FieldSpec {
    exponent: u32,
    modulus: u32,
}

impl FieldSpec {
    pub fn new(exponent: u32, modulus: u32) -> Result<Self> {
        if exponent == 0 || exponent > MAX_EXPONENT {
            return invalid(format!("field exponent {exponent} outside 1..={MAX_EXPONENT}"));
        }
        if degree(modulus) != Some(exponent) {
            return invalid(format!("modulus {modulus:#b} does not have degree {exponent}"));
        }
        if !is_irreducible(modulus) {
            return domain(format!("modulus {modulus:#b} is reducible over GF(2)"));
        }
        Ok(Self { exponent, modulus })
    }

    /// Canonical modulus for GF(2^l): `x+1`, `x²+x+1`, `x³+x+1`, `x⁴+x+1`,
    /// and beyond that the lowest-weight irreducible, smallest first.
    pub fn canonical(exponent: u32) -> Result<Self> {
        let modulus = match exponent {
            1 => 0b11,
            2 => 0b111,
            3 => 0b1011,
            4 => 0b10011,
            5..=MAX_EXPONENT => lowest_weight_irreducible(exponent),
            _ => return invalid(format!("field exponent {exponent} outside 1..={MAX_EXPONENT}")),
        };
        Self::new(exponent, modulus)
    }

    /// The smallest canonical field with more than `n` elements.
    pub fn smallest_exceeding(n: usize) -> Result<Self> {
        let exponent = (1..=MAX_EXPONENT)
            .find(|&l| (1usize << l) > n)
            .ok_or_else(|| crate::Error::InvalidArgument(format!("no supported field has more than {n} elements")))?;
        Self::canonical(exponent)
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn order(&self) -> u32 {
        1 << self.exponent
    }
}

fn degree(p: u32) -> Option<u32> {
    (p != 0).then(|| 31 - p.leading_zeros())
}

/// Remainder of carry-less division `a mod m`.
fn poly_rem(mut a: u32, m: u32) -> u32 {
    let dm = degree(m).expect("nonzero modulus");
    while let Some(da) = degree(a) {
        if da < dm {
            break;
        }
        a ^= m << (da - dm);
    }
    a
}

/// Trial division by every polynomial of degree `1..=deg/2`.
fn is_irreducible(p: u32) -> bool {
    let Some(d) = degree(p) else { return false };
    if d == 0 {
        return false;
    }
    for dq in 1..=d / 2 {
        for q in (1u32 << dq)..(1u32 << (dq + 1)) {
            if poly_rem(p, q) == 0 {
                return false;
            }
        }
    }
    true
}

fn lowest_weight_irreducible(exponent: u32) -> u32 {
    let lead = 1u32 << exponent;
    (2..=exponent + 1)
        .find_map(|weight| {
            (0..lead)
                .map(|low| lead | low)
                .filter(|p| p & 1 == 1 && p.count_ones() == weight)
                .find(|&p| is_irreducible(p))
        })
        .expect("an irreducible polynomial exists for every degree")
}

/// An element tagged with the field it belongs to.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u16,
    spec: FieldSpec,
}

impl FieldElement {
    pub fn value(&self) -> u16 {
        self.value
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{})[{:#b}]", self.spec.exponent, self.value)
    }
}

/// GF(2^l) with precomputed tables.
///
/// The `*_values` methods work on raw `u16` values and skip membership
/// checks; the typed methods validate the field tag of every operand.
#[derive(Clone)]
pub struct GaloisField {
    spec: FieldSpec,
    // exp has 2*(order-1) entries so a log sum indexes it without reduction
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl fmt::Debug for GaloisField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaloisField").field("spec", &self.spec).finish()
    }
}

impl GaloisField {
    pub fn new(spec: FieldSpec) -> Self {
        let order = spec.order();
        let group = (order - 1) as usize;
        // the modulus need only be irreducible, so search for a generator
        // instead of assuming x is primitive
        let generator = (1..order)
            .find(|&g| multiplicative_order(g, spec.modulus) == group)
            .expect("the multiplicative group of a finite field is cyclic");
        let mut exp = vec![0u16; 2 * group];
        let mut log = vec![0u16; order as usize];
        let mut acc = 1u32;
        for (i, slot) in exp.iter_mut().enumerate() {
            *slot = acc as u16;
            if i < group {
                log[acc as usize] = i as u16;
            }
            acc = poly_rem(clmul(acc, generator), spec.modulus);
        }
        Self { spec, exp, log }
    }

    pub fn canonical(exponent: u32) -> Result<Self> {
        Ok(Self::new(FieldSpec::canonical(exponent)?))
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn exponent(&self) -> u32 {
        self.spec.exponent
    }

    pub fn order(&self) -> u32 {
        self.spec.order()
    }

    pub fn element(&self, value: u32) -> Result<FieldElement> {
        if value >= self.order() {
            return invalid(format!("{value} is not an element of GF({})", self.order()));
        }
        Ok(FieldElement { value: value as u16, spec: self.spec })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { value: 0, spec: self.spec }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { value: 1, spec: self.spec }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.order()).map(|v| FieldElement { value: v as u16, spec: self.spec })
    }

    fn check(&self, a: &FieldElement) -> Result<()> {
        if a.spec != self.spec {
            return invalid(format!("element of {:?} used with field {:?}", a.spec, self.spec));
        }
        Ok(())
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        self.check(&a)?;
        self.check(&b)?;
        Ok(FieldElement { value: a.value ^ b.value, spec: self.spec })
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        self.check(&a)?;
        self.check(&b)?;
        Ok(FieldElement { value: self.mul_values(a.value, b.value), spec: self.spec })
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        self.check(&a)?;
        if a.value == 0 {
            return domain("zero has no multiplicative inverse");
        }
        Ok(FieldElement { value: self.inv_value(a.value), spec: self.spec })
    }

    #[inline]
    pub fn mul_values(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    /// Inverse of a nonzero value. Panics on zero.
    #[inline]
    pub fn inv_value(&self, a: u16) -> u16 {
        assert_ne!(a, 0, "zero has no multiplicative inverse");
        let group = self.exp.len() / 2;
        self.exp[(group - self.log[a as usize] as usize) % group]
    }

    #[inline]
    pub fn div_values(&self, a: u16, b: u16) -> u16 {
        self.mul_values(a, self.inv_value(b))
    }

    /// Horner evaluation of `coeffs[0] + coeffs[1] x + ...`.
    pub fn poly_eval(&self, coeffs: &[FieldElement], x: FieldElement) -> Result<FieldElement> {
        if coeffs.is_empty() {
            return invalid("polynomial needs at least one coefficient");
        }
        self.check(&x)?;
        for c in coeffs {
            self.check(c)?;
        }
        let raw: Vec<u16> = coeffs.iter().map(|c| c.value).collect();
        Ok(FieldElement { value: self.poly_eval_values(&raw, x.value), spec: self.spec })
    }

    pub fn poly_eval_values(&self, coeffs: &[u16], x: u16) -> u16 {
        coeffs.iter().rev().fold(0u16, |acc, &c| self.mul_values(acc, x) ^ c)
    }

    /// Value at zero of the unique polynomial of degree `< points.len()`
    /// through `points` (Lagrange interpolation).
    pub fn interpolate_constant(&self, points: &[(FieldElement, FieldElement)]) -> Result<FieldElement> {
        for (x, y) in points {
            self.check(x)?;
            self.check(y)?;
        }
        let xs: Vec<u16> = points.iter().map(|(x, _)| x.value).collect();
        let ys: Vec<u16> = points.iter().map(|(_, y)| y.value).collect();
        let weights = self.lagrange_weights_at_zero(&xs)?;
        Ok(FieldElement { value: self.combine(&weights, &ys), spec: self.spec })
    }

    /// Coefficients `w_i` with `q(0) = Σ w_i q(x_i)` for every polynomial of
    /// degree `< xs.len()`.
    pub fn lagrange_weights_at_zero(&self, xs: &[u16]) -> Result<Vec<u16>> {
        if xs.is_empty() {
            return invalid("interpolation needs at least one point");
        }
        for (i, &x) in xs.iter().enumerate() {
            if u32::from(x) >= self.order() {
                return invalid(format!("{x} is not an element of GF({})", self.order()));
            }
            if x == 0 {
                return domain("interpolation points must be nonzero");
            }
            if xs[..i].contains(&x) {
                return domain(format!("duplicate interpolation point {x}"));
            }
        }
        // in characteristic 2, (0 - x_j) / (x_i - x_j) = x_j / (x_i + x_j)
        Ok(xs
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                xs.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .fold(1u16, |acc, (_, &xj)| self.mul_values(acc, self.div_values(xj, xi ^ xj)))
            })
            .collect())
    }

    pub fn combine(&self, weights: &[u16], values: &[u16]) -> u16 {
        weights
            .iter()
            .zip(values)
            .fold(0u16, |acc, (&w, &v)| acc ^ self.mul_values(w, v))
    }
}

fn clmul(a: u32, b: u32) -> u32 {
    let mut out = 0u32;
    for i in 0..16 {
        if b >> i & 1 == 1 {
            out ^= a << i;
        }
    }
    out
}

fn multiplicative_order(g: u32, modulus: u32) -> usize {
    let mut acc = g;
    let mut k = 1;
    while acc != 1 {
        acc = poly_rem(clmul(acc, g), modulus);
        k += 1;
        if k > (1 << MAX_EXPONENT) {
            break;
        }
    }
    k
}
