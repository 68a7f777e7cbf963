//! The combinatorial multi-access topology.
//!
//! Caches are numbered `1..=C`. A user is identified by the `r`-subset of
//! caches it reads, subfiles by `t`-subsets and broadcast payloads by
//! `(t+r)`-subsets. All enumerations use lexicographic order of the sorted
//! member lists.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};

/// Largest supported cache count (subsets are stored as `u64` masks).
pub const MAX_CACHES: usize = 64;

/// `n choose k`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("binomial coefficient overflows u64")
}

/// A set of cache indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CacheSubset {
    mask: u64,
}

impl CacheSubset {
    /// From 1-based cache indices in strictly increasing order.
    pub fn new(members: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        let mut prev = 0usize;
        for &c in members {
            if c == 0 || c > MAX_CACHES {
                return invalid(format!("cache index {c} outside 1..={MAX_CACHES}"));
            }
            if c <= prev {
                return invalid(format!("cache indices {members:?} are not strictly increasing"));
            }
            prev = c;
            mask |= 1 << (c - 1);
        }
        Ok(Self { mask })
    }

    pub fn empty() -> Self {
        Self { mask: 0 }
    }

    pub fn from_mask(mask: u64) -> Self {
        Self { mask }
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    /// Members in increasing order, 1-based.
    pub fn iter(&self) -> impl Iterator<Item = usize> {
        let mut m = self.mask;
        std::iter::from_fn(move || {
            if m == 0 {
                return None;
            }
            let bit = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(bit + 1)
        })
    }

    pub fn members(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn max_member(&self) -> Option<usize> {
        (self.mask != 0).then(|| 64 - self.mask.leading_zeros() as usize)
    }

    pub fn contains(&self, cache: usize) -> bool {
        (1..=MAX_CACHES).contains(&cache) && self.mask >> (cache - 1) & 1 == 1
    }

    pub fn intersects(&self, other: &CacheSubset) -> bool {
        self.mask & other.mask != 0
    }

    pub fn is_subset_of(&self, other: &CacheSubset) -> bool {
        self.mask & !other.mask == 0
    }

    pub fn union(&self, other: &CacheSubset) -> CacheSubset {
        Self { mask: self.mask | other.mask }
    }

    pub fn difference(&self, other: &CacheSubset) -> CacheSubset {
        Self { mask: self.mask & !other.mask }
    }
}

impl Ord for CacheSubset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for CacheSubset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CacheSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for CacheSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for CacheSubset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.members().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CacheSubset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let members = Vec::<usize>::deserialize(d)?;
        CacheSubset::new(&members).map_err(serde::de::Error::custom)
    }
}

/// All `k`-subsets of `[1..=caches]` in lexicographic order. Empty when
/// `k > caches`.
pub fn enumerate_subsets(caches: usize, k: usize) -> Vec<CacheSubset> {
    assert!(caches <= MAX_CACHES, "at most {MAX_CACHES} caches are supported");
    if k > caches {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(binomial(caches, k) as usize);
    let mut idx: Vec<usize> = (1..=k).collect();
    loop {
        out.push(CacheSubset::new(&idx).expect("increasing indices"));
        // rightmost position that can still advance
        let Some(pos) = (0..k).rev().find(|&i| idx[i] < caches - (k - 1 - i)) else {
            break;
        };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
    out
}

/// Position of `s` among the `|s|`-subsets of `[1..=caches]`.
pub fn subset_rank(s: &CacheSubset, caches: usize) -> Result<usize> {
    if s.max_member().is_some_and(|m| m > caches) {
        return invalid(format!("{s} is not a subset of [1..={caches}]"));
    }
    let k = s.len();
    let mut rank = 0u64;
    let mut prev = 0usize;
    for (i, a) in s.iter().enumerate() {
        // subsets whose i-th member is smaller than a, with the same prefix
        for v in prev + 1..a {
            rank += binomial(caches - v, k - i - 1);
        }
        prev = a;
    }
    Ok(rank as usize)
}

/// Inverse of [`subset_rank`].
pub fn subset_unrank(mut rank: usize, caches: usize, k: usize) -> Result<CacheSubset> {
    let total = binomial(caches, k) as usize;
    if rank >= total {
        return invalid(format!("rank {rank} out of range for {k}-subsets of [1..={caches}]"));
    }
    let mut members = Vec::with_capacity(k);
    let mut v = 1usize;
    for i in 0..k {
        loop {
            let block = binomial(caches - v, k - i - 1) as usize;
            if rank < block {
                break;
            }
            rank -= block;
            v += 1;
        }
        members.push(v);
        v += 1;
    }
    CacheSubset::new(&members)
}

/// 1-based position of cache `c` within the sorted members of `g`.
pub fn share_index_of_cache(g: &CacheSubset, c: usize) -> Result<usize> {
    if !g.contains(c) {
        return domain(format!("cache {c} is not in {g}"));
    }
    Ok(g.iter().position(|m| m == c).expect("member present") + 1)
}

/// `C` caches, access degree `r`, subpacketization parameter `t`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct TopologySpec {
    caches: usize,
    access: usize,
    t: usize,
}

impl TopologySpec {
    pub fn new(caches: usize, access: usize, t: usize) -> Result<Self> {
        if caches == 0 || caches > MAX_CACHES {
            return invalid(format!("cache count {caches} outside 1..={MAX_CACHES}"));
        }
        if access == 0 || access > caches {
            return invalid(format!("access degree {access} outside 1..={caches}"));
        }
        if t > caches - access {
            return invalid(format!("t = {t} outside 0..={}", caches - access));
        }
        Ok(Self { caches, access, t })
    }

    pub fn caches(&self) -> usize {
        self.caches
    }

    pub fn access(&self) -> usize {
        self.access
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// `K = binom(C, r)`.
    pub fn user_count(&self) -> usize {
        binomial(self.caches, self.access) as usize
    }

    /// `binom(C, t)` subfiles per file.
    pub fn subpacketization(&self) -> usize {
        binomial(self.caches, self.t) as usize
    }

    /// `binom(C, t+r)` broadcast payloads.
    pub fn transmission_count(&self) -> usize {
        binomial(self.caches, self.t + self.access) as usize
    }

    pub fn users(&self) -> Vec<CacheSubset> {
        enumerate_subsets(self.caches, self.access)
    }

    pub fn subfile_indices(&self) -> Vec<CacheSubset> {
        enumerate_subsets(self.caches, self.t)
    }

    pub fn transmission_sets(&self) -> Vec<CacheSubset> {
        enumerate_subsets(self.caches, self.t + self.access)
    }

    pub fn rank(&self, s: &CacheSubset) -> usize {
        subset_rank(s, self.caches).expect("subset of the topology's caches")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(m: &[usize]) -> CacheSubset {
        CacheSubset::new(m).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_subsets(3, 2), vec![set(&[1, 2]), set(&[1, 3]), set(&[2, 3])]);
        assert_eq!(enumerate_subsets(4, 0), vec![CacheSubset::empty()]);
        assert!(enumerate_subsets(3, 4).is_empty());
        let users = enumerate_subsets(5, 3);
        let expected: Vec<CacheSubset> = [
            [1, 2, 3], [1, 2, 4], [1, 2, 5], [1, 3, 4], [1, 3, 5],
            [1, 4, 5], [2, 3, 4], [2, 3, 5], [2, 4, 5], [3, 4, 5],
        ]
        .iter()
        .map(|m| set(m))
        .collect();
        assert_eq!(users, expected);
    }

    #[test]
    fn counts_match_binomials() {
        for c in 0..=10 {
            for k in 0..=c {
                let all = enumerate_subsets(c, k);
                assert_eq!(all.len() as u64, binomial(c, k));
                assert!(all.windows(2).all(|w| w[0] < w[1]), "lexicographic order");
            }
        }
        assert_eq!(binomial(15, 3), 455);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn rank_unrank_round_trip() {
        assert_eq!(subset_rank(&set(&[1, 2]), 3).unwrap(), 0);
        assert_eq!(subset_rank(&set(&[2, 3]), 3).unwrap(), 2);
        for c in 0..=8 {
            for k in 0..=c {
                for (i, s) in enumerate_subsets(c, k).iter().enumerate() {
                    assert_eq!(subset_rank(s, c).unwrap(), i);
                    assert_eq!(subset_unrank(i, c, k).unwrap(), *s);
                }
                assert!(subset_unrank(binomial(c, k) as usize, c, k).is_err());
            }
        }
        assert!(subset_rank(&set(&[1, 4]), 3).is_err());
    }

    #[test]
    fn share_indices() {
        assert_eq!(share_index_of_cache(&set(&[1, 3]), 3).unwrap(), 2);
        assert_eq!(share_index_of_cache(&set(&[2, 4, 5]), 2).unwrap(), 1);
        assert!(matches!(share_index_of_cache(&set(&[1, 3]), 2), Err(crate::Error::Domain(_))));
        for c in 1..=6 {
            for k in 1..=c {
                for g in enumerate_subsets(c, k) {
                    let mut idx: Vec<usize> = g.iter().map(|m| share_index_of_cache(&g, m).unwrap()).collect();
                    idx.sort_unstable();
                    assert_eq!(idx, (1..=k).collect::<Vec<_>>());
                }
            }
        }
    }

    #[test]
    fn invalid_subsets_and_topologies() {
        assert!(CacheSubset::new(&[2, 1]).is_err());
        assert!(CacheSubset::new(&[1, 1]).is_err());
        assert!(CacheSubset::new(&[0]).is_err());
        assert!(TopologySpec::new(3, 4, 0).is_err());
        assert!(TopologySpec::new(3, 2, 2).is_err());
        assert!(TopologySpec::new(3, 0, 0).is_err());
        let topo = TopologySpec::new(5, 2, 2).unwrap();
        assert_eq!((topo.user_count(), topo.subpacketization(), topo.transmission_count()), (10, 10, 5));
    }

    #[test]
    fn access_structure() {
        for c in 2..=7 {
            for r in 1..=c {
                for t in 0..=c - r {
                    let topo = TopologySpec::new(c, r, t).unwrap();
                    let subfiles = topo.subfile_indices();
                    for g in topo.users() {
                        let missing = subfiles.iter().filter(|tt| !g.intersects(tt)).count() as u64;
                        assert_eq!(missing, binomial(c - r, t));
                    }
                    for s in topo.transmission_sets() {
                        let inside = topo.users().iter().filter(|g| g.is_subset_of(&s)).count() as u64;
                        assert_eq!(inside, binomial(t + r, r));
                    }
                }
            }
        }
    }
}
