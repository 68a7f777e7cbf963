//! Oracles for the retrieval, security and privacy conditions.
//!
//! The exact oracles run on tiny instances with 1-bit subfiles and enumerate
//! every library and every outcome of the server randomness. Outcomes are
//! counted, so all probabilities are exact fractions.

pub mod distribution;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitBlock;
use crate::error::{invalid, Error, Result};
use crate::library_model::{subpacketize, DemandVector, FileLibrary};
use crate::randomness::{CounterSource, ServerRandomness};
use crate::schemes::{
    build_caches, decode_all, deliver, disjoint_indices, draw_secrets, place, CacheContent, DeliveryTranscript,
    KeyMaterial, SchemeConfig, SchemeKind,
};
use crate::secret_sharing::{field_for_threshold, share_len};
use crate::topology::{CacheSubset, TopologySpec};
use crate::Rational;

use distribution::{mutual_information, DistributionTable, MutualInformation};

/// Default bound on enumerated states.
pub const DEFAULT_CAP: u128 = 1 << 28;

/// Demand assignments to test.
#[derive(Clone, Debug)]
pub enum DemandBattery {
    /// Every one of the `2^(N K)` assignments.
    Exhaustive,
    /// Uniformly random assignments.
    Sampled { count: usize, seed: u64 },
    Fixed(Vec<Vec<DemandVector>>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CorrectnessFailure {
    pub case: usize,
    pub user: CacheSubset,
    pub detail: String,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct CorrectnessReport {
    pub cases: usize,
    pub user_checks: usize,
    pub failures: Vec<CorrectnessFailure>,
}

impl CorrectnessReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.user_checks > 0
    }
}

/// Demand tuple number `index`: bit `u N + i` is coefficient `i` of user `u`.
pub fn demand_tuple(topo: &TopologySpec, n_files: usize, index: u128) -> Vec<DemandVector> {
    topo.users()
        .into_iter()
        .enumerate()
        .map(|(u, g)| {
            let bits: Vec<bool> = (0..n_files).map(|i| index >> (u * n_files + i) & 1 == 1).collect();
            DemandVector::new(g, BitBlock::from_bits(&bits))
        })
        .collect()
}

pub fn random_demands(topo: &TopologySpec, n_files: usize, rng: &mut impl Rng) -> Vec<DemandVector> {
    topo.users()
        .into_iter()
        .map(|g| {
            let bits: Vec<bool> = (0..n_files).map(|_| rng.gen()).collect();
            DemandVector::new(g, BitBlock::from_bits(&bits))
        })
        .collect()
}

/// Places once, then delivers and decodes every demand assignment in the
/// battery, comparing each user's output to its direct linear combination.
pub fn check_correctness(cfg: &SchemeConfig, lib: &FileLibrary, battery: &DemandBattery, cap: u128) -> Result<CorrectnessReport> {
    let topo = &cfg.topology;
    let placement = place(cfg, lib)?;
    let mut report = CorrectnessReport::default();
    let mut run = |case: usize, demands: &[DemandVector]| -> Result<()> {
        let x = deliver(cfg, &placement.table, &placement.secrets, demands)?;
        for o in decode_all(cfg, lib, &placement.caches, &x, demands)? {
            report.user_checks += 1;
            if !o.passed() {
                let detail = match &o.decoded {
                    Ok(d) => format!("decoded {d:?}, expected {:?}", o.expected),
                    Err(e) => e.clone(),
                };
                report.failures.push(CorrectnessFailure { case, user: o.user, detail });
            }
        }
        report.cases += 1;
        Ok(())
    };
    match battery {
        DemandBattery::Exhaustive => {
            let bits = cfg.n_files * topo.user_count();
            let total = 1u128.checked_shl(bits as u32).filter(|&n| n <= cap && bits < 128);
            let total = total.ok_or(Error::ResourceCap { states: if bits < 128 { 1 << bits } else { u128::MAX }, cap })?;
            for index in 0..total {
                run(index as usize, &demand_tuple(topo, cfg.n_files, index))?;
            }
        }
        DemandBattery::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for case in 0..*count {
                run(case, &random_demands(topo, cfg.n_files, &mut rng))?;
            }
        }
        DemandBattery::Fixed(tuples) => {
            for (case, demands) in tuples.iter().enumerate() {
                run(case, demands)?;
            }
        }
    }
    Ok(report)
}

/// A topology small enough for exhaustive enumeration, with 1-bit subfiles.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TinyInstance {
    pub topology: TopologySpec,
    pub n_files: usize,
    pub cap: u128,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
}

impl TinyInstance {
    pub fn new(caches: usize, access: usize, t: usize, n_files: usize) -> Result<Self> {
        Ok(Self { topology: TopologySpec::new(caches, access, t)?, n_files, cap: DEFAULT_CAP, jobs: 1 })
    }

    /// `F = binom(C,t)`, one bit per subfile.
    pub fn file_bits(&self) -> usize {
        self.topology.subpacketization()
    }

    pub fn config(&self, kind: SchemeKind) -> Result<SchemeConfig> {
        SchemeConfig::new(self.topology, self.n_files, self.file_bits(), kind, 0)
    }

    fn library_count(&self) -> Result<u128> {
        pow2(self.n_files * self.file_bits(), self.cap)
    }

    /// Uniform bits drawn on the key and privacy streams.
    fn randomness_bits(&self, kind: SchemeKind) -> (usize, usize) {
        let keys = match kind.is_secure() {
            true => self.topology.transmission_count(),
            false => 0,
        };
        let privacy = match kind.is_private() {
            true => self.topology.user_count() * self.n_files,
            false => 0,
        };
        (keys, privacy)
    }

    /// Shamir coefficient draws and their radix.
    fn coefficient_draws(&self, kind: SchemeKind) -> Result<(usize, u32)> {
        if !kind.is_private() {
            return Ok((0, 2));
        }
        let r = self.topology.access();
        let field = field_for_threshold(r)?;
        let per_key = share_len(1, field.exponent()) * (r - 1);
        let keys: usize = self.topology.users().iter().map(|g| disjoint_indices(&self.topology, g).len()).sum();
        Ok((keys * per_key, field.order()))
    }
}

fn pow2(bits: usize, cap: u128) -> Result<u128> {
    match bits < 127 {
        true => Ok(1u128 << bits),
        false => Err(Error::ResourceCap { states: u128::MAX, cap }),
    }
}

fn checked_states(factors: &[u128], cap: u128) -> Result<u128> {
    let total = factors.iter().try_fold(1u128, |acc, &f| acc.checked_mul(f));
    match total {
        Some(t) if t <= cap => Ok(t),
        Some(t) => Err(Error::ResourceCap { states: t, cap }),
        None => Err(Error::ResourceCap { states: u128::MAX, cap }),
    }
}

/// Appends the bits of `blocks` to a packed accumulator.
struct Packer {
    value: u128,
    bits: usize,
}

impl Packer {
    fn new() -> Self {
        Self { value: 0, bits: 0 }
    }

    fn push(&mut self, b: &BitBlock) -> Result<()> {
        if self.bits + b.len() > 128 {
            return invalid("observed view exceeds 128 bits; instance too large");
        }
        for bit in b.iter() {
            self.value = self.value << 1 | u128::from(bit);
        }
        self.bits += b.len();
        Ok(())
    }
}

/// Every broadcast bit, demand vectors included.
fn pack_transcript(x: &DeliveryTranscript) -> Result<u128> {
    let mut p = Packer::new();
    for b in x.payloads.iter().chain(&x.padded_demands).chain(&x.public_demands) {
        p.push(b)?;
    }
    Ok(p.value)
}

/// Every bit stored in `caches`, in cache order.
fn pack_caches<'a>(caches: impl IntoIterator<Item = &'a CacheContent>) -> Result<(u128, usize)> {
    let mut p = Packer::new();
    for c in caches {
        for (_, files) in &c.subfiles {
            for f in files {
                p.push(f)?;
            }
        }
        match &c.keys {
            KeyMaterial::None => {}
            KeyMaterial::Shares { field, shares } => {
                for s in shares {
                    p.push(&s.share.to_block(field.exponent()))?;
                }
            }
            KeyMaterial::WholeKeys(keys) => {
                for (_, k) in keys {
                    p.push(k)?;
                }
            }
            KeyMaterial::CodedSubKeys { blocks, .. } => {
                for (_, _, b) in blocks {
                    p.push(b)?;
                }
            }
        }
    }
    Ok((p.value, p.bits))
}

/// Runs `f` on every value of `0..count`, split across `jobs` threads.
/// Results come back in index order.
fn par_map<T: Send>(count: u128, jobs: usize, f: impl Fn(u128) -> Result<T> + Sync) -> Result<Vec<T>> {
    let jobs = jobs.max(1) as u128;
    if jobs == 1 || count < 2 {
        return (0..count).map(&f).collect();
    }
    let chunk = count.div_ceil(jobs);
    let f = &f;
    let parts: Vec<Result<Vec<T>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                let (lo, hi) = (j * chunk, ((j + 1) * chunk).min(count));
                scope.spawn(move || (lo..hi).map(f).collect::<Result<Vec<T>>>())
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("oracle worker panicked")).collect()
    });
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

#[derive(Clone, PartialEq, Debug)]
pub struct SecurityReport {
    pub kind: SchemeKind,
    pub states: u128,
    /// `I(W; X)` over uniform libraries and server randomness.
    pub mutual_information: MutualInformation,
}

/// Sorted list of packed transcripts, one per randomness outcome, for one
/// library.
fn transcripts_for_library(
    cfg: &SchemeConfig,
    inst: &TinyInstance,
    demands: &[DemandVector],
    library: u128,
) -> Result<Vec<u128>> {
    let lib = FileLibrary::from_index(library, cfg.n_files, cfg.file_bits)?;
    let table = subpacketize(&lib, &cfg.topology);
    let (key_bits, privacy_bits) = inst.randomness_bits(cfg.kind);
    let mut out = Vec::with_capacity(1 << (key_bits + privacy_bits));
    for v in 0..1u128 << key_bits {
        for p in 0..1u128 << privacy_bits {
            let secrets = draw_secrets(cfg, &table, &mut CounterSource::new(v, 2), &mut CounterSource::new(p, 2))?;
            out.push(pack_transcript(&deliver(cfg, &table, &secrets, demands)?)?);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Exact `I(W; X)` for fixed demands.
///
/// The library is uniform, so `I(W; X) = 0` exactly when the conditional
/// distribution of `X` is the same for every library. That is checked first;
/// the full joint is only built when it fails.
pub fn check_security_exact(inst: &TinyInstance, kind: SchemeKind, demands: &[DemandVector]) -> Result<SecurityReport> {
    let cfg = inst.config(kind)?;
    let (key_bits, privacy_bits) = inst.randomness_bits(kind);
    let libraries = inst.library_count()?;
    let states = checked_states(&[libraries, pow2(key_bits, inst.cap)?, pow2(privacy_bits, inst.cap)?], inst.cap)?;

    let reference = transcripts_for_library(&cfg, inst, demands, 0)?;
    let equal = par_map(libraries, inst.jobs, |w| Ok(transcripts_for_library(&cfg, inst, demands, w)? == reference))?;
    if equal.into_iter().all(|e| e) {
        return Ok(SecurityReport { kind, states, mutual_information: MutualInformation::zero() });
    }
    let per_library = par_map(libraries, inst.jobs, |w| transcripts_for_library(&cfg, inst, demands, w))?;
    let joint: DistributionTable<(u128, u128), Rational> = DistributionTable::from_counts(
        per_library.into_iter().enumerate().flat_map(|(w, xs)| xs.into_iter().map(move |x| ((w as u128, x), 1))),
    )?;
    Ok(SecurityReport { kind, states, mutual_information: mutual_information(&joint) })
}

#[derive(Clone, PartialEq, Debug)]
pub struct PrivacyReport {
    pub kind: SchemeKind,
    pub states: u128,
    /// Per observer, the largest total-variation distance between its view
    /// distributions under two assignments of the other users' demands.
    pub max_distance: Vec<(CacheSubset, Rational)>,
}

impl PrivacyReport {
    pub fn worst(&self) -> Rational {
        self.max_distance.iter().map(|(_, d)| *d).max().unwrap_or_default()
    }
}

/// Exact privacy oracle.
///
/// For each library, every observer `g` and every value of `d_g`, collects
/// the distribution of the view `(X, Z_g)` over all server randomness,
/// separately for each assignment of the other users' demands, and reports
/// the largest total-variation distance between two of them. `observers`
/// defaults to every user.
pub fn check_privacy_exact(inst: &TinyInstance, kind: SchemeKind, observers: Option<&[CacheSubset]>) -> Result<PrivacyReport> {
    let cfg = inst.config(kind)?;
    let topo = &cfg.topology;
    let users = topo.users();
    let observers: Vec<CacheSubset> = observers.map(<[_]>::to_vec).unwrap_or_else(|| users.clone());
    let observer_ranks: Vec<usize> = observers
        .iter()
        .map(|g| users.iter().position(|u| u == g).ok_or_else(|| Error::InvalidArgument(format!("{g} is not a user"))))
        .collect::<Result<_>>()?;
    let (key_bits, privacy_bits) = inst.randomness_bits(kind);
    let (draws, radix) = inst.coefficient_draws(kind)?;
    let coefficient_outcomes = u128::from(radix)
        .checked_pow(draws as u32)
        .ok_or(Error::ResourceCap { states: u128::MAX, cap: inst.cap })?;
    let demand_bits = cfg.n_files * users.len();
    let libraries = inst.library_count()?;
    let states = checked_states(
        &[
            libraries,
            pow2(key_bits, inst.cap)?,
            pow2(privacy_bits, inst.cap)?,
            coefficient_outcomes,
            pow2(demand_bits, inst.cap)?,
        ],
        inst.cap,
    )?;

    let per_library = par_map(libraries, inst.jobs, |w| {
        let lib = FileLibrary::from_index(w, cfg.n_files, cfg.file_bits)?;
        let table = subpacketize(&lib, topo);
        let tuples = 1u128 << demand_bits;
        let all_demands: Vec<Vec<DemandVector>> = (0..tuples).map(|i| demand_tuple(topo, cfg.n_files, i)).collect();
        // views[observer][tuple] = packed (X, Z_g) per randomness outcome
        let mut views: Vec<Vec<Vec<u128>>> = vec![vec![Vec::new(); tuples as usize]; observers.len()];
        for v in 0..1u128 << key_bits {
            for p in 0..1u128 << privacy_bits {
                let secrets = draw_secrets(&cfg, &table, &mut CounterSource::new(v, 2), &mut CounterSource::new(p, 2))?;
                for a in 0..coefficient_outcomes {
                    let caches = build_caches(&cfg, &table, &secrets, &mut CounterSource::new(a, radix))?;
                    let stored: Vec<(u128, usize)> = observers
                        .iter()
                        .map(|g| pack_caches(caches.iter().filter(|c| g.contains(c.cache))))
                        .collect::<Result<_>>()?;
                    for (d, demands) in all_demands.iter().enumerate() {
                        let x = pack_transcript(&deliver(&cfg, &table, &secrets, demands)?)?;
                        for (o, &(z, zbits)) in stored.iter().enumerate() {
                            if zbits + 64 > 128 {
                                return invalid("observed view exceeds 128 bits; instance too large");
                            }
                            views[o][d].push(x << zbits | z);
                        }
                    }
                }
            }
        }
        let mut worst = vec![Rational::default(); observers.len()];
        for (o, &rank) in observer_ranks.iter().enumerate() {
            let own_mask = ((1u128 << cfg.n_files) - 1) << (rank * cfg.n_files);
            for list in &mut views[o] {
                list.sort_unstable();
            }
            for own in 0..1u128 << cfg.n_files {
                let group: Vec<&Vec<u128>> = (0..tuples)
                    .filter(|d| (d & own_mask) >> (rank * cfg.n_files) == own)
                    .map(|d| &views[o][d as usize])
                    .collect();
                if group.iter().all(|g| *g == group[0]) {
                    continue;
                }
                for i in 0..group.len() {
                    for j in i + 1..group.len() {
                        worst[o] = worst[o].max(total_variation_sorted(group[i], group[j]));
                    }
                }
            }
        }
        Ok(worst)
    })?;

    let max_distance = observers
        .iter()
        .enumerate()
        .map(|(o, g)| (*g, per_library.iter().map(|w| w[o]).max().unwrap_or_default()))
        .collect();
    Ok(PrivacyReport { kind, states, max_distance })
}

/// Total variation between two equally sized multisets of equally likely
/// outcomes, given as sorted lists.
fn total_variation_sorted(a: &[u128], b: &[u128]) -> Rational {
    debug_assert_eq!(a.len(), b.len());
    let (mut i, mut j, mut differing) = (0, 0, 0usize);
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        let (mut ca, mut cb) = (0usize, 0usize);
        while a.get(i) == Some(&x) {
            ca += 1;
            i += 1;
        }
        while b.get(j) == Some(&x) {
            cb += 1;
            j += 1;
        }
        differing += ca.abs_diff(cb);
    }
    Rational::new(differing as i128, 2 * a.len() as i128)
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ShareSecrecyReport {
    pub keys_checked: usize,
    pub violations: Vec<String>,
}

impl ShareSecrecyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that the shares of every `D_{g,T}` sit exactly in the caches of
/// `g`, one share index per cache, so any other user reaches at most `r-1`
/// of them.
pub fn check_share_placement_secrecy(topo: &TopologySpec) -> Result<ShareSecrecyReport> {
    let n = 1;
    let f = topo.subpacketization();
    let cfg = SchemeConfig::new(*topo, n, f, SchemeKind::SpLfr, 0)?;
    let lib = FileLibrary::from_index(0, n, f)?;
    let table = subpacketize(&lib, topo);
    let mut rnd = ServerRandomness::from_seed(0);
    let secrets = draw_secrets(&cfg, &table, &mut rnd.keys, &mut rnd.privacy)?;
    let caches = build_caches(&cfg, &table, &secrets, &mut rnd.sharing)?;

    let r = topo.access();
    let mut report = ShareSecrecyReport::default();
    for g in topo.users() {
        for t in disjoint_indices(topo, &g) {
            report.keys_checked += 1;
            let mut holders = BTreeSet::new();
            let mut indices = BTreeSet::new();
            for c in &caches {
                if let KeyMaterial::Shares { shares, .. } = &c.keys {
                    for s in shares.iter().filter(|s| s.user == g && s.index == t) {
                        holders.insert(c.cache);
                        indices.insert(s.share.index);
                    }
                }
            }
            if holders != g.iter().collect() {
                report.violations.push(format!("shares of D_{{{g},{t}}} held by caches {holders:?}"));
            }
            if indices != (1..=r).collect() {
                report.violations.push(format!("shares of D_{{{g},{t}}} carry indices {indices:?}"));
            }
            for other in topo.users().into_iter().filter(|u| *u != g) {
                let reach = holders.iter().filter(|&&c| other.contains(c)).count();
                if reach >= r {
                    report.violations.push(format!("{other} reaches {reach} shares of D_{{{g},{t}}}"));
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demand_tuples_are_distinct() {
        let topo = TopologySpec::new(3, 2, 1).unwrap();
        let all: BTreeSet<Vec<String>> = (0..64)
            .map(|i| demand_tuple(&topo, 2, i).iter().map(|d| d.coefficients().to_bit_string()).collect())
            .collect();
        assert_eq!(all.len(), 64);
    }

    #[test]
    fn sorted_total_variation() {
        assert_eq!(total_variation_sorted(&[1, 2, 3, 3], &[1, 2, 3, 3]), Rational::default());
        // {1,1,2,3} vs {1,2,2,4}: |2-1| + |1-2| + |1-0| + |0-1| = 4 → 4/8
        assert_eq!(total_variation_sorted(&[1, 1, 2, 3], &[1, 2, 2, 4]), Rational::new(1, 2));
    }

    #[test]
    fn single_user_one_time_pad() {
        let inst = TinyInstance::new(2, 2, 0, 1).unwrap();
        let d = demand_tuple(&inst.topology, 1, 1);
        let rep = check_security_exact(&inst, SchemeKind::SLfr, &d).unwrap();
        assert!(rep.mutual_information.exactly_zero);
        let rep = check_privacy_exact(&inst, SchemeKind::SpLfr, None).unwrap();
        assert_eq!(rep.worst(), Rational::default());
    }

    #[test]
    fn cap_is_enforced() {
        let mut inst = TinyInstance::new(3, 2, 1, 2).unwrap();
        inst.cap = 1000;
        let d = demand_tuple(&inst.topology, 2, 0);
        assert!(matches!(check_security_exact(&inst, SchemeKind::SpLfr, &d), Err(Error::ResourceCap { .. })));
        assert!(matches!(check_privacy_exact(&inst, SchemeKind::SpLfr, None), Err(Error::ResourceCap { .. })));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut inst = TinyInstance::new(3, 2, 0, 2).unwrap();
        let d = demand_tuple(&inst.topology, 2, 0b011011);
        let one = check_security_exact(&inst, SchemeKind::Lfr, &d).unwrap();
        inst.jobs = 3;
        let three = check_security_exact(&inst, SchemeKind::Lfr, &d).unwrap();
        assert_eq!(one, three);
        assert!(!one.mutual_information.exactly_zero);
    }
}
