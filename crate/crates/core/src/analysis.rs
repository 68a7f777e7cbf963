//! Closed-form memory-rate tradeoffs.
//!
//! With `B = binom(C,t)` and `F` the file size in bits, every scheme has rate
//! `R = binom(C,t+r) / B` and memory
//!
//! * SP-LFR, P-LFR: `Nt/C + binom(C-r,t) binom(C-1,r-1) ⌈F/(lB)⌉ l/F`,
//! * S-LFR: `Nt/C + binom(C-1,t+r-1)/B`,
//! * IS-LFR: `Nt/C + binom(C-1,t+r-1) ⌈F/(rB)⌉/F`,
//! * LFR: `Nt/C`,
//!
//! where `l` is the smallest integer with `r < 2^l`. In [`FileSize::Ideal`]
//! mode the ceilings are dropped, which is the limit for `F` divisible by
//! every denominator.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{domain, invalid, Result};
use crate::mds_codes::symbol_bits_for;
use crate::scalar::Scalar;
use crate::schemes::SchemeKind;
use crate::secret_sharing::field_for_threshold;
use crate::topology::{binomial, TopologySpec};
use crate::Rational;

/// How ceiling terms are evaluated.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FileSize {
    Exact(usize),
    Ideal,
}

/// Origin of a point on a tradeoff curve.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum PointTag {
    T(usize),
    /// `(N, 0)` or `(0, N)`.
    Corner,
}

impl fmt::Display for PointTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::T(t) => write!(f, "{t}"),
            Self::Corner => f.write_str("corner"),
        }
    }
}

impl Serialize for PointTag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::T(t) => s.serialize_u64(*t as u64),
            Self::Corner => s.serialize_str("corner"),
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct MemoryRatePoint<T> {
    pub memory: T,
    pub rate: T,
    pub tag: PointTag,
}

#[derive(Clone, PartialEq, Debug)]
pub struct TradeoffCurve<T> {
    pub kind: SchemeKind,
    pub caches: usize,
    pub access: usize,
    pub n_files: usize,
    /// Achievable points, strictly increasing in memory.
    pub points: Vec<MemoryRatePoint<T>>,
    /// Corners of the lower convex envelope, left to right.
    pub envelope: Vec<MemoryRatePoint<T>>,
}

fn b<T: Scalar>(n: usize, k: usize) -> T {
    T::from_count(binomial(n, k))
}

fn frac<T: Scalar>(num: u128, den: u128) -> T {
    T::ratio(num, den)
}

/// Key memory in file units for one cache.
fn key_memory<T: Scalar>(kind: SchemeKind, topo: &TopologySpec, size: FileSize) -> Result<T> {
    let (c, r, t) = (topo.caches(), topo.access(), topo.t());
    let bt = binomial(c, t) as u128;
    Ok(match kind {
        SchemeKind::SpLfr | SchemeKind::PLfr => {
            let l = field_for_threshold(r)?.exponent() as u128;
            let per_share: T = match size {
                FileSize::Exact(f) => frac((f as u128).div_ceil(l * bt) * l, f as u128),
                FileSize::Ideal => frac(1, bt),
            };
            b::<T>(c - r, t) * b(c - 1, r - 1) * per_share
        }
        SchemeKind::SLfr => b::<T>(c - 1, t + r - 1) / T::from_count(bt as u64),
        SchemeKind::IsLfr => {
            let per_key: T = match size {
                FileSize::Exact(f) => frac((f as u128).div_ceil(r as u128 * bt), f as u128),
                FileSize::Ideal => frac(1, r as u128 * bt),
            };
            b::<T>(c - 1, t + r - 1) * per_key
        }
        SchemeKind::Lfr => T::zero(),
    })
}

/// The `(M, R)` pair of `kind` at parameter `t`.
pub fn point<T: Scalar>(
    kind: SchemeKind,
    caches: usize,
    access: usize,
    t: usize,
    n_files: usize,
    size: FileSize,
) -> Result<MemoryRatePoint<T>> {
    if access == 0 || access > caches {
        return invalid(format!("access degree {access} outside 1..={caches}"));
    }
    if t > caches - access {
        return domain(format!("t = {t} outside 0..={}", caches - access));
    }
    if size == FileSize::Exact(0) {
        return invalid("file size must be positive");
    }
    let topo = TopologySpec::new(caches, access, t)?;
    let data: T = frac((n_files * t) as u128, caches as u128);
    let memory = data + key_memory(kind, &topo, size)?;
    let rate = frac(binomial(caches, t + access) as u128, binomial(caches, t) as u128);
    Ok(MemoryRatePoint { memory, rate, tag: PointTag::T(t) })
}

/// Smallest `F` for which the measured placement sizes equal the ideal
/// formulas: `binom(C,t)` must divide `F`, and so must the share and coded
/// sub-key symbol grids.
pub fn ideal_file_bits(kind: SchemeKind, caches: usize, access: usize, t: usize) -> Result<usize> {
    let topo = TopologySpec::new(caches, access, t)?;
    let bt = topo.subpacketization();
    Ok(match kind {
        SchemeKind::SpLfr | SchemeKind::PLfr => lcm(bt, bt * field_for_threshold(access)?.exponent() as usize),
        SchemeKind::IsLfr => bt * access * symbol_bits_for(t + access, access)?,
        SchemeKind::SLfr | SchemeKind::Lfr => bt,
    })
}

/// Smallest `F` that is ideal for every scheme at once.
pub fn common_ideal_file_bits(caches: usize, access: usize, t: usize) -> Result<usize> {
    SchemeKind::ALL
        .into_iter()
        .try_fold(1, |acc, k| Ok(lcm(acc, ideal_file_bits(k, caches, access, t)?)))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// All `t`-points plus corners, with the lower convex envelope.
pub fn curve<T: Scalar>(
    kind: SchemeKind,
    caches: usize,
    access: usize,
    n_files: usize,
    size: FileSize,
) -> Result<TradeoffCurve<T>> {
    if access == 0 || access > caches {
        return invalid(format!("access degree {access} outside 1..={caches}"));
    }
    let n = T::from_count(n_files as u64);
    let mut raw = vec![MemoryRatePoint { memory: n.clone(), rate: T::zero(), tag: PointTag::Corner }];
    if kind.has_broadcast_corner() {
        raw.push(MemoryRatePoint { memory: T::zero(), rate: n, tag: PointTag::Corner });
    }
    for t in 0..=caches - access {
        raw.push(point(kind, caches, access, t, n_files, size)?);
    }
    let points = dedupe(raw);
    let envelope = lower_envelope(&points);
    Ok(TradeoffCurve { kind, caches, access, n_files, points, envelope })
}

/// Sorts by memory and keeps the lowest rate at each memory value, preferring
/// a `t`-point over a corner it coincides with.
fn dedupe<T: Scalar>(mut raw: Vec<MemoryRatePoint<T>>) -> Vec<MemoryRatePoint<T>> {
    raw.sort_by(|a, b| {
        a.memory
            .partial_cmp(&b.memory)
            .expect("comparable memory")
            .then(a.rate.partial_cmp(&b.rate).expect("comparable rate"))
            .then((a.tag == PointTag::Corner).cmp(&(b.tag == PointTag::Corner)))
    });
    let mut out: Vec<MemoryRatePoint<T>> = Vec::with_capacity(raw.len());
    for p in raw {
        if out.last().is_none_or(|q| q.memory != p.memory) {
            out.push(p);
        }
    }
    out
}

/// `(b - a) × (c - a)`; negative when `a → b → c` turns clockwise.
fn cross<T: Scalar>(a: &MemoryRatePoint<T>, b: &MemoryRatePoint<T>, c: &MemoryRatePoint<T>) -> T {
    (b.memory.clone() - a.memory.clone()) * (c.rate.clone() - a.rate.clone())
        - (b.rate.clone() - a.rate.clone()) * (c.memory.clone() - a.memory.clone())
}

/// Lower hull of points sorted by memory, cut at the first minimum-rate
/// point so the envelope is non-increasing.
fn lower_envelope<T: Scalar>(points: &[MemoryRatePoint<T>]) -> Vec<MemoryRatePoint<T>> {
    let mut hull: Vec<MemoryRatePoint<T>> = Vec::new();
    for p in points {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= T::zero() {
            hull.pop();
        }
        hull.push(p.clone());
    }
    let min_rate = hull.iter().map(|p| p.rate.clone()).fold(None::<T>, |m, r| match m {
        Some(m) if m <= r => Some(m),
        _ => Some(r),
    });
    if let Some(min_rate) = min_rate {
        let cut = hull.iter().position(|p| p.rate == min_rate).expect("minimum present");
        hull.truncate(cut + 1);
    }
    hull
}

impl<T: Scalar> TradeoffCurve<T> {
    /// Envelope rate at memory `m`, `None` left of the first envelope point.
    pub fn envelope_rate(&self, m: &T) -> Option<T> {
        let first = self.envelope.first()?;
        if *m < first.memory {
            return None;
        }
        for w in self.envelope.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if *m <= b.memory {
                let slope = (b.rate.clone() - a.rate.clone()) / (b.memory.clone() - a.memory.clone());
                return Some(a.rate.clone() + slope * (m.clone() - a.memory.clone()));
            }
        }
        Some(self.envelope.last().expect("nonempty").rate.clone())
    }
}

/// `binom(C,r) / C`, the least per-cache memory of any secure scheme.
pub fn security_memory_bound<T: Scalar>(caches: usize, access: usize) -> Result<T> {
    if access == 0 || access > caches {
        return invalid(format!("access degree {access} outside 1..={caches}"));
    }
    Ok(frac(binomial(caches, access) as u128, caches as u128))
}

#[derive(Clone, PartialEq, Debug)]
pub struct GapReport<T> {
    pub memory: T,
    /// Scheme rate at `memory`, i.e. `K`.
    pub achieved_rate: T,
    /// Rate of the uncoded-placement lower bound at `memory`.
    pub optimal_rate: T,
    /// `achieved_rate / optimal_rate`; `None` when the bound is not positive.
    pub ratio: Option<T>,
    pub bound_holds: bool,
    /// `N` reaches `2Kr` (SP-LFR) or `2K` (IS-LFR).
    pub threshold_met: bool,
}

/// Ratio of the scheme's rate at its `t = 0` point to the lower bound
/// `R*(M) = K - (K² s / N)(1 - (C-r)/(C(r+1)))`, `s = r` for SP-LFR and
/// `s = 1` for IS-LFR.
pub fn optimality_gap<T: Scalar>(kind: SchemeKind, caches: usize, access: usize, n_files: usize) -> Result<GapReport<T>> {
    let s = match kind {
        SchemeKind::SpLfr => access,
        SchemeKind::IsLfr => 1,
        other => return invalid(format!("no optimality gap is defined for {other}")),
    };
    if n_files == 0 {
        return invalid("the library needs at least one file");
    }
    let at_zero = point::<T>(kind, caches, access, 0, n_files, FileSize::Ideal)?;
    let k = binomial(caches, access) as u128;
    let (c, r, n) = (caches as u128, access as u128, n_files as u128);
    debug_assert!(at_zero.memory == frac::<T>(s as u128 * k, c));
    let bracket = T::one() - frac::<T>(c - r, c * (r + 1));
    let optimal_rate = T::from_count(k as u64) - frac::<T>(k * k * s as u128, n) * bracket;
    let ratio = (optimal_rate > T::zero()).then(|| at_zero.rate.clone() / optimal_rate.clone());
    let two = T::one() + T::one();
    let bound_holds = ratio.as_ref().is_some_and(|q| *q <= two);
    Ok(GapReport {
        memory: at_zero.memory,
        achieved_rate: at_zero.rate,
        optimal_rate,
        ratio,
        bound_holds,
        threshold_met: n >= 2 * k * s as u128,
    })
}

/// `num/den` with the sign on the numerator.
pub fn fraction_string(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// CSV rows `scheme,C,r,t,M_num,M_den,R_num,R_den` for the points of each
/// curve, header included.
pub fn curves_csv(curves: &[TradeoffCurve<Rational>]) -> String {
    let mut out = String::from("scheme,C,r,t,M_num,M_den,R_num,R_den\n");
    for c in curves {
        for p in &c.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.kind,
                c.caches,
                c.access,
                p.tag,
                p.memory.numer(),
                p.memory.denom(),
                p.rate.numer(),
                p.rate.denom()
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn keyless_t_zero_point() {
        let p = point::<Rational>(SchemeKind::Lfr, 6, 2, 0, 4, FileSize::Ideal).unwrap();
        assert_eq!((p.memory, p.rate), (Rational::zero(), r(15, 1)));
    }

    #[test]
    fn t_out_of_range_is_a_domain_error() {
        assert!(matches!(
            point::<Rational>(SchemeKind::SLfr, 4, 2, 3, 4, FileSize::Ideal),
            Err(crate::Error::Domain(_))
        ));
    }

    #[test]
    fn exact_mode_matches_ideal_at_ideal_sizes() {
        for kind in SchemeKind::ALL {
            for t in 0..=3 {
                let f = ideal_file_bits(kind, 5, 2, t).unwrap();
                let exact = point::<Rational>(kind, 5, 2, t, 7, FileSize::Exact(f)).unwrap();
                let ideal = point::<Rational>(kind, 5, 2, t, 7, FileSize::Ideal).unwrap();
                assert_eq!(exact, ideal, "{kind} t={t}");
            }
        }
    }

    #[test]
    fn float_and_exact_agree() {
        for kind in SchemeKind::ALL {
            let exact = point::<Rational>(kind, 7, 3, 2, 9, FileSize::Ideal).unwrap();
            let float = point::<f64>(kind, 7, 3, 2, 9, FileSize::Ideal).unwrap();
            let single = point::<f32>(kind, 7, 3, 2, 9, FileSize::Ideal).unwrap();
            assert!((exact.memory.to_f64_lossy() - float.memory).abs() < 1e-12);
            assert!((exact.rate.to_f64_lossy() - f64::from(single.rate)).abs() < 1e-5);
        }
    }

    #[test]
    fn envelope_is_convex_and_non_increasing() {
        for kind in SchemeKind::ALL {
            let c = curve::<Rational>(kind, 6, 2, 10, FileSize::Ideal).unwrap();
            for w in c.envelope.windows(2) {
                assert!(w[0].memory < w[1].memory);
                assert!(w[0].rate >= w[1].rate);
            }
            for w in c.envelope.windows(3) {
                assert!(cross(&w[0], &w[1], &w[2]) > Rational::zero());
            }
            for p in &c.points {
                if let Some(e) = c.envelope_rate(&p.memory) {
                    assert!(p.rate >= e, "{kind}: {p:?} below envelope");
                }
            }
        }
    }

    #[test]
    fn hull_drops_interior_points() {
        let pts: Vec<MemoryRatePoint<Rational>> = [(0, 4), (1, 3), (2, 1), (3, 1), (4, 0)]
            .into_iter()
            .map(|(m, q)| MemoryRatePoint { memory: r(m, 1), rate: r(q, 1), tag: PointTag::Corner })
            .collect();
        let hull: Vec<(Rational, Rational)> = lower_envelope(&pts).into_iter().map(|p| (p.memory, p.rate)).collect();
        assert_eq!(hull, vec![(r(0, 1), r(4, 1)), (r(2, 1), r(1, 1)), (r(4, 1), r(0, 1))]);
    }

    #[test]
    fn security_bound_values() {
        assert_eq!(security_memory_bound::<Rational>(3, 2).unwrap(), r(1, 1));
        assert_eq!(security_memory_bound::<Rational>(7, 7).unwrap(), r(1, 7));
    }

    #[test]
    fn gap_tends_to_one() {
        let small = optimality_gap::<Rational>(SchemeKind::SpLfr, 4, 2, 24).unwrap();
        let large = optimality_gap::<Rational>(SchemeKind::SpLfr, 4, 2, 24_000_000).unwrap();
        assert!(large.ratio.unwrap() < small.ratio.unwrap());
        assert!(large.ratio.unwrap() - r(1, 1) < r(1, 100_000));
        assert!(optimality_gap::<Rational>(SchemeKind::SLfr, 4, 2, 24).is_err());
    }

    #[test]
    fn csv_layout() {
        let c = curve::<Rational>(SchemeKind::Lfr, 3, 2, 3, FileSize::Ideal).unwrap();
        let csv = curves_csv(&[c]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "scheme,C,r,t,M_num,M_den,R_num,R_den");
        assert!(lines.contains(&"lfr,3,2,0,0,1,3,1"));
        assert!(lines.contains(&"lfr,3,2,1,1,1,1,3"));
    }
}
