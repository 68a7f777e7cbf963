//! Finite distributions and mutual information.

use std::collections::BTreeMap;

use num_traits::Float;

use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Outcome → probability. Probabilities are positive and sum to one.
#[derive(Clone, PartialEq, Debug)]
pub struct DistributionTable<K: Ord, T> {
    probabilities: BTreeMap<K, T>,
}

impl<K: Ord + Clone, T: Scalar> DistributionTable<K, T> {
    /// Normalizes outcome counts. Zero counts are dropped.
    pub fn from_counts(counts: impl IntoIterator<Item = (K, u64)>) -> Result<Self> {
        let mut merged: BTreeMap<K, u64> = BTreeMap::new();
        for (k, c) in counts {
            *merged.entry(k).or_default() += c;
        }
        let total: u64 = merged.values().sum();
        if total == 0 {
            return domain("distribution needs at least one outcome");
        }
        let probabilities = merged
            .into_iter()
            .filter(|&(_, c)| c > 0)
            .map(|(k, c)| (k, T::ratio(u128::from(c), u128::from(total))))
            .collect();
        Ok(Self { probabilities })
    }

    /// Accepts explicit probabilities; they must be non-negative and sum to
    /// exactly one (compare in exact arithmetic for exact scalars).
    pub fn from_probabilities(probabilities: BTreeMap<K, T>) -> Result<Self> {
        let mut sum = T::zero();
        for p in probabilities.values() {
            if *p < T::zero() {
                return domain("negative probability");
            }
            sum = sum + p.clone();
        }
        if sum != T::one() {
            return domain(format!("probabilities sum to {sum:?}, not 1"));
        }
        let probabilities = probabilities.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        Ok(Self { probabilities })
    }

    pub fn probability(&self, k: &K) -> T {
        self.probabilities.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &T)> {
        self.probabilities.iter()
    }

    pub fn support_len(&self) -> usize {
        self.probabilities.len()
    }

    /// `½ Σ |p(k) - q(k)|`.
    pub fn total_variation(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for (k, p) in &self.probabilities {
            let q = other.probability(k);
            acc = acc + abs_diff(p.clone(), q);
        }
        for (k, q) in &other.probabilities {
            if !self.probabilities.contains_key(k) {
                acc = acc + q.clone();
            }
        }
        acc / (T::one() + T::one())
    }
}

fn abs_diff<T: Scalar>(a: T, b: T) -> T {
    if a >= b {
        a - b
    } else {
        b - a
    }
}

impl<A: Ord + Clone, B: Ord + Clone, T: Scalar> DistributionTable<(A, B), T> {
    pub fn marginals(&self) -> (BTreeMap<A, T>, BTreeMap<B, T>) {
        let mut left: BTreeMap<A, T> = BTreeMap::new();
        let mut right: BTreeMap<B, T> = BTreeMap::new();
        for ((a, b), p) in &self.probabilities {
            let e = left.entry(a.clone()).or_insert_with(T::zero);
            *e = e.clone() + p.clone();
            let e = right.entry(b.clone()).or_insert_with(T::zero);
            *e = e.clone() + p.clone();
        }
        (left, right)
    }

    /// True iff `p(a,b) = p(a) p(b)` for every pair, i.e. the mutual
    /// information is exactly zero. Exact for rational scalars.
    pub fn factorizes(&self) -> bool {
        let (left, right) = self.marginals();
        left.iter().all(|(a, pa)| {
            right.iter().all(|(b, pb)| {
                let joint = self.probabilities.get(&(a.clone(), b.clone())).cloned().unwrap_or_else(T::zero);
                joint == pa.clone() * pb.clone()
            })
        })
    }
}

/// Mutual information of a joint distribution, in bits.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct MutualInformation {
    /// Certified by exact factorization of the joint distribution.
    pub exactly_zero: bool,
    /// `Σ p log2(p / (p_a p_b))` in double precision; `0.0` when
    /// `exactly_zero`.
    pub bits: f64,
}

impl MutualInformation {
    pub fn zero() -> Self {
        Self { exactly_zero: true, bits: 0.0 }
    }
}

/// Exact zero test first; the logarithmic sum is only evaluated when the
/// joint does not factorize.
pub fn mutual_information<A, B, T>(joint: &DistributionTable<(A, B), T>) -> MutualInformation
where
    A: Ord + Clone,
    B: Ord + Clone,
    T: Scalar,
{
    if joint.factorizes() {
        return MutualInformation::zero();
    }
    MutualInformation { exactly_zero: false, bits: mutual_information_float::<_, _, _, f64>(joint) }
}

/// Plain logarithmic evaluation in floating type `F`.
pub fn mutual_information_float<A, B, T, F>(joint: &DistributionTable<(A, B), T>) -> F
where
    A: Ord + Clone,
    B: Ord + Clone,
    T: Scalar,
    F: Float + Scalar,
{
    let to_f = |p: &T| F::from_f64(p.to_f64_lossy()).expect("probability fits float");
    let (left, right) = joint.marginals();
    joint.iter().fold(F::zero(), |acc, ((a, b), p)| {
        let pab = to_f(p);
        let pa = to_f(&left[a]);
        let pb = to_f(&right[b]);
        acc + pab * (pab / (pa * pb)).log2()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use num_traits::Zero;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Joint = DistributionTable<(u8, u8), Rational>;

    #[test]
    fn independent_pair_is_zero() {
        let joint = Joint::from_counts((0..2).flat_map(|a| (0..2).map(move |b| ((a, b), 1)))).unwrap();
        assert_eq!(mutual_information(&joint), MutualInformation::zero());
    }

    #[test]
    fn copied_bit_is_one_bit() {
        let joint = Joint::from_counts([((0, 0), 1), ((1, 1), 1)]).unwrap();
        let mi = mutual_information(&joint);
        assert!(!mi.exactly_zero);
        assert!((mi.bits - 1.0).abs() < 1e-15);
    }

    #[test]
    fn xor_with_uniform_key_hides_the_bit() {
        // I(X; X⊕Y) for independent uniform bits X, Y
        let joint = Joint::from_counts((0..2u8).flat_map(|x| (0..2u8).map(move |y| ((x, x ^ y), 1)))).unwrap();
        assert!(mutual_information(&joint).exactly_zero);
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let mut m = BTreeMap::new();
        m.insert(0u8, Rational::new(1, 3));
        m.insert(1u8, Rational::new(1, 3));
        assert!(DistributionTable::from_probabilities(m.clone()).is_err());
        m.insert(2u8, Rational::new(1, 3));
        assert!(DistributionTable::from_probabilities(m).is_ok());
        assert!(DistributionTable::<u8, Rational>::from_counts([(0, 0)]).is_err());
    }

    #[test]
    fn total_variation_exact() {
        let p = DistributionTable::<u8, Rational>::from_counts([(0, 1), (1, 1)]).unwrap();
        let q = DistributionTable::<u8, Rational>::from_counts([(0, 3), (2, 1)]).unwrap();
        // ½(|1/2-3/4| + |1/2-0| + |0-1/4|) = 1/2
        assert_eq!(p.total_variation(&q), Rational::new(1, 2));
        assert_eq!(p.total_variation(&p), Rational::zero());
    }

    #[test]
    fn factorization_path_agrees_with_logarithms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..1000 {
            let na = rng.gen_range(1..4u8);
            let nb = rng.gen_range(1..4u8);
            let joint = if trial % 2 == 0 {
                // product of random marginals
                let wa: Vec<u64> = (0..na).map(|_| rng.gen_range(1..6)).collect();
                let wb: Vec<u64> = (0..nb).map(|_| rng.gen_range(1..6)).collect();
                Joint::from_counts((0..na).flat_map(|a| {
                    let (wa, wb) = (wa.clone(), wb.clone());
                    (0..nb).map(move |b| ((a, b), wa[a as usize] * wb[b as usize]))
                }))
            } else {
                Joint::from_counts((0..na).flat_map(|a| (0..nb).map(move |b| ((a, b), 0))).map(|(k, _)| (k, rng.gen_range(0..5))).chain([((0, 0), 1)]))
            }
            .unwrap();
            let exact = mutual_information(&joint);
            let float: f64 = mutual_information_float::<_, _, _, f64>(&joint);
            if exact.exactly_zero {
                assert!(float.abs() < 1e-12, "certified zero but float MI = {float}");
            } else {
                assert!(float > 1e-12, "non-factorizing joint with float MI = {float}");
                assert!((exact.bits - float).abs() < 1e-12);
            }
            let single: f32 = mutual_information_float::<_, _, _, f32>(&joint);
            assert!((f64::from(single) - float).abs() < 1e-4);
        }
    }
}
