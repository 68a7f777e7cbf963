use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Numeric type the memory-rate formulas and distributions are evaluated in.
///
/// Implemented for `f32`, `f64` and [`crate::Rational`]. Exact work (golden
/// values, envelope hulls, zero certificates) uses the rational type.
pub trait Scalar: Num + FromPrimitive + ToPrimitive + PartialOrd + Clone + Debug {
    /// `num / den` built from non-negative integers.
    fn ratio(num: u128, den: u128) -> Self {
        Self::from_u128(num).expect("numerator fits scalar")
            / Self::from_u128(den).expect("denominator fits scalar")
    }

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count fits scalar")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where T: Num + FromPrimitive + ToPrimitive + PartialOrd + Clone + Debug {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn ratio_is_exact_for_rationals() {
        assert_eq!(Rational::ratio(46, 10), Rational::new(23, 5));
        assert_eq!(<f64 as Scalar>::ratio(1, 4), 0.25);
    }
}
