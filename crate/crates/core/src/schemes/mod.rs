//! Placement, delivery and decoding for the five retrieval schemes.
//!
//! All schemes share the uncoded data placement: cache `c` stores `W_{i,T}`
//! for every file `i` and every `t`-subset `T ∋ c`. They differ in the key
//! material stored next to it and in what the broadcast carries.
//!
//! | scheme | cached keys | broadcast `Y_S` masked by | demands sent as |
//! |--------|-------------|---------------------------|-----------------|
//! | SP-LFR | Shamir shares of `D_{g,T} = T_{g,T} ⊕ V_{g∪T}` | `V_S` | `q_g = d_g ⊕ P_g` |
//! | P-LFR  | shares of `T_{g,T}` | nothing | `q_g` |
//! | S-LFR  | whole `V_S` in every `c ∈ S` | `V_S` | `d_g` in clear |
//! | IS-LFR | MDS-coded sub-key of `V_S` | `V_S` | `d_g` in clear |
//! | LFR    | none | nothing | `d_g` in clear |

pub mod container;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::BitBlock;
use crate::error::{invalid, Error, Result};
use crate::finite_field::FieldSpec;
use crate::library_model::{combine_blocks, subpacketize, DemandVector, FileLibrary, LinearPayload, SubfileTable};
use crate::mds_codes::{build_code, decode_key, encode_key, MdsCode};
use crate::randomness::{RandomSource, ServerRandomness};
use crate::secret_sharing::{field_for_threshold, reconstruct, share_len, split, Share, ShareSet};
use crate::topology::{binomial, enumerate_subsets, share_index_of_cache, CacheSubset, TopologySpec};
use crate::Rational;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum SchemeKind {
    SpLfr,
    PLfr,
    SLfr,
    IsLfr,
    Lfr,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [Self::SpLfr, Self::PLfr, Self::SLfr, Self::IsLfr, Self::Lfr];

    pub fn name(self) -> &'static str {
        match self {
            Self::SpLfr => "sp-lfr",
            Self::PLfr => "p-lfr",
            Self::SLfr => "s-lfr",
            Self::IsLfr => "is-lfr",
            Self::Lfr => "lfr",
        }
    }

    /// Broadcast payloads carry a one-time pad `V_S`.
    pub fn is_secure(self) -> bool {
        matches!(self, Self::SpLfr | Self::SLfr | Self::IsLfr)
    }

    /// Demands travel padded with privacy vectors.
    pub fn is_private(self) -> bool {
        matches!(self, Self::SpLfr | Self::PLfr)
    }

    /// The zero-memory library broadcast is part of the scheme's curve.
    pub fn has_broadcast_corner(self) -> bool {
        matches!(self, Self::PLfr | Self::Lfr)
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Self::SpLfr => 1,
            Self::PLfr => 2,
            Self::SLfr => 3,
            Self::IsLfr => 4,
            Self::Lfr => 5,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme {s:?}")))
    }
}

impl Serialize for SchemeKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for SchemeKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub topology: TopologySpec,
    pub n_files: usize,
    pub file_bits: usize,
    pub kind: SchemeKind,
    pub seed: u64,
}

impl SchemeConfig {
    pub fn new(topology: TopologySpec, n_files: usize, file_bits: usize, kind: SchemeKind, seed: u64) -> Result<Self> {
        if n_files == 0 {
            return invalid("the library needs at least one file");
        }
        if file_bits == 0 {
            return invalid("files need at least one bit");
        }
        Ok(Self { topology, n_files, file_bits, kind, seed })
    }

    pub fn subfile_bits(&self) -> usize {
        self.file_bits.div_ceil(self.topology.subpacketization())
    }
}

/// `t`-subsets disjoint from `g`, in canonical order.
pub fn disjoint_indices(topo: &TopologySpec, g: &CacheSubset) -> Vec<CacheSubset> {
    topo.subfile_indices().into_iter().filter(|t| !t.intersects(g)).collect()
}

/// `k`-subsets of `s` in canonical order.
pub fn subsets_within(s: &CacheSubset, k: usize) -> Vec<CacheSubset> {
    let members = s.members();
    enumerate_subsets(members.len(), k)
        .into_iter()
        .map(|local| CacheSubset::from_mask(local.iter().fold(0u64, |m, i| m | 1 << (members[i - 1] - 1))))
        .collect()
}

/// Everything the server draws during placement.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ServerSecrets {
    /// `V_S` by rank of `S`; empty for schemes without security keys.
    pub security_keys: Vec<BitBlock>,
    /// `P_g` by user rank; empty for non-private schemes.
    pub privacy_vectors: Vec<BitBlock>,
    /// `T_{g,T}` per user rank, for the `T` of [`disjoint_indices`].
    pub privacy_keys: Vec<Vec<BitBlock>>,
    /// `D_{g,T}`, same layout as `privacy_keys`.
    pub superposed_keys: Vec<Vec<BitBlock>>,
}

impl ServerSecrets {
    /// The same secrets with every `V_S` replaced by zeros.
    pub fn without_security_keys(&self) -> Self {
        Self {
            security_keys: self.security_keys.iter().map(|v| BitBlock::zeros(v.len())).collect(),
            privacy_vectors: self.privacy_vectors.clone(),
            privacy_keys: self.privacy_keys.clone(),
            superposed_keys: self.privacy_keys.clone(),
        }
    }
}

/// `Σ_i coeffs_i W_{i,T}` for the `T` of rank `t_rank`.
fn combine_subfiles(coeffs: &BitBlock, table: &SubfileTable, t_rank: usize) -> BitBlock {
    let mut out = BitBlock::zeros(table.subfile_bits());
    for i in (0..coeffs.len()).filter(|&i| coeffs.get(i)) {
        out ^= table.subfile(i, t_rank);
    }
    out
}

/// Draws `V_S` (key stream) and `P_g` (privacy stream) and derives
/// `T_{g,T}` and `D_{g,T}`.
pub fn draw_secrets(
    cfg: &SchemeConfig,
    table: &SubfileTable,
    keys: &mut impl RandomSource,
    privacy: &mut impl RandomSource,
) -> Result<ServerSecrets> {
    let topo = &cfg.topology;
    let sub = table.subfile_bits();
    let security_keys = match cfg.kind.is_secure() {
        true => (0..topo.transmission_count()).map(|_| keys.uniform_block(sub)).collect(),
        false => Vec::new(),
    };
    if !cfg.kind.is_private() {
        return Ok(ServerSecrets {
            security_keys,
            privacy_vectors: Vec::new(),
            privacy_keys: Vec::new(),
            superposed_keys: Vec::new(),
        });
    }
    let users = topo.users();
    let privacy_vectors: Vec<BitBlock> = users.iter().map(|_| privacy.uniform_block(cfg.n_files)).collect();
    let mut privacy_keys = Vec::with_capacity(users.len());
    let mut superposed_keys = Vec::with_capacity(users.len());
    for (g, p) in users.iter().zip(&privacy_vectors) {
        let mut tk = Vec::new();
        let mut dk = Vec::new();
        for (t_rank, t) in table.indices().iter().enumerate().filter(|(_, t)| !t.intersects(g)) {
            let privacy_key = combine_subfiles(p, table, t_rank);
            let mut d = privacy_key.clone();
            if let Some(v) = security_keys.get(topo.rank(&g.union(t))) {
                d ^= v;
            }
            tk.push(privacy_key);
            dk.push(d);
        }
        privacy_keys.push(tk);
        superposed_keys.push(dk);
    }
    Ok(ServerSecrets { security_keys, privacy_vectors, privacy_keys, superposed_keys })
}

/// One Shamir share of `D_{user,index}`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StoredShare {
    pub user: CacheSubset,
    pub index: CacheSubset,
    pub share: Share,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum KeyMaterial {
    None,
    Shares { field: FieldSpec, shares: Vec<StoredShare> },
    WholeKeys(Vec<(CacheSubset, BitBlock)>),
    /// `(S, 1-based generator column, Ṽ_{S,c})`.
    CodedSubKeys { key_bits: usize, blocks: Vec<(CacheSubset, usize, BitBlock)> },
}

impl KeyMaterial {
    pub fn stored_bits(&self) -> usize {
        match self {
            Self::None => 0,
            Self::Shares { field, shares } => shares.iter().map(|s| s.share.symbols.len() * field.exponent() as usize).sum(),
            Self::WholeKeys(keys) => keys.iter().map(|(_, k)| k.len()).sum(),
            Self::CodedSubKeys { blocks, .. } => blocks.iter().map(|(_, _, b)| b.len()).sum(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CacheContent {
    /// 1-based cache index.
    pub cache: usize,
    /// `(T, [W_{1,T}, ..., W_{N,T}])` for every `T ∋ cache`, canonical order.
    pub subfiles: Vec<(CacheSubset, Vec<BitBlock>)>,
    pub keys: KeyMaterial,
}

impl CacheContent {
    pub fn stored_bits(&self) -> usize {
        let data: usize = self.subfiles.iter().flat_map(|(_, files)| files.iter().map(BitBlock::len)).sum();
        data + self.keys.stored_bits()
    }

    /// Stored size in file units.
    pub fn memory(&self, file_bits: usize) -> Rational {
        Rational::new(self.stored_bits() as i128, file_bits as i128)
    }
}

/// Fills every cache from the subfile table and the drawn secrets, taking
/// Shamir coefficients from `sharing`.
pub fn build_caches(
    cfg: &SchemeConfig,
    table: &SubfileTable,
    secrets: &ServerSecrets,
    sharing: &mut impl RandomSource,
) -> Result<Vec<CacheContent>> {
    let topo = &cfg.topology;
    let caches = topo.caches();
    let mut out: Vec<CacheContent> = (1..=caches)
        .map(|c| CacheContent { cache: c, subfiles: Vec::new(), keys: KeyMaterial::None })
        .collect();
    for (rank, t) in table.indices().iter().enumerate() {
        for c in t.iter() {
            let files = (0..cfg.n_files).map(|i| table.subfile(i, rank).clone()).collect();
            out[c - 1].subfiles.push((*t, files));
        }
    }

    match cfg.kind {
        SchemeKind::SpLfr | SchemeKind::PLfr => {
            let field = field_for_threshold(topo.access())?;
            for c in &mut out {
                c.keys = KeyMaterial::Shares { field: field.spec(), shares: Vec::new() };
            }
            for (g, keys) in topo.users().iter().zip(&secrets.superposed_keys) {
                for (t, d) in disjoint_indices(topo, g).into_iter().zip(keys) {
                    let set = split(d, topo.access(), &field, sharing)?;
                    for (c, share) in g.iter().zip(set.shares) {
                        debug_assert_eq!(share_index_of_cache(g, c)?, share.index);
                        if let KeyMaterial::Shares { shares, .. } = &mut out[c - 1].keys {
                            shares.push(StoredShare { user: *g, index: t, share });
                        }
                    }
                }
            }
        }
        SchemeKind::SLfr => {
            for c in &mut out {
                c.keys = KeyMaterial::WholeKeys(Vec::new());
            }
            for (s, v) in topo.transmission_sets().iter().zip(&secrets.security_keys) {
                for c in s.iter() {
                    if let KeyMaterial::WholeKeys(keys) = &mut out[c - 1].keys {
                        keys.push((*s, v.clone()));
                    }
                }
            }
        }
        SchemeKind::IsLfr => {
            let code = build_code(topo.t() + topo.access(), topo.access())?;
            let key_bits = table.subfile_bits();
            for c in &mut out {
                c.keys = KeyMaterial::CodedSubKeys { key_bits, blocks: Vec::new() };
            }
            for (s, v) in topo.transmission_sets().iter().zip(&secrets.security_keys) {
                let coded = encode_key(v, &code);
                // the a-th smallest member of S holds column a
                for (a, (c, block)) in s.iter().zip(coded.blocks).enumerate() {
                    if let KeyMaterial::CodedSubKeys { blocks, .. } = &mut out[c - 1].keys {
                        blocks.push((*s, a + 1, block));
                    }
                }
            }
        }
        SchemeKind::Lfr => {}
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Placement {
    pub table: SubfileTable,
    pub secrets: ServerSecrets,
    pub caches: Vec<CacheContent>,
}

impl Placement {
    /// Largest per-cache size in file units. All caches hold the same amount
    /// by symmetry.
    pub fn memory(&self) -> Rational {
        self.caches.iter().map(|c| c.memory(self.table.file_bits())).max().unwrap_or_default()
    }
}

/// Placement with the three randomness streams seeded from `cfg.seed`.
pub fn place(cfg: &SchemeConfig, lib: &FileLibrary) -> Result<Placement> {
    place_with(cfg, lib, &mut ServerRandomness::from_seed(cfg.seed))
}

pub fn place_with<R: RandomSource>(
    cfg: &SchemeConfig,
    lib: &FileLibrary,
    randomness: &mut ServerRandomness<R>,
) -> Result<Placement> {
    check_library(cfg, lib)?;
    let table = subpacketize(lib, &cfg.topology);
    let secrets = draw_secrets(cfg, &table, &mut randomness.keys, &mut randomness.privacy)?;
    let caches = build_caches(cfg, &table, &secrets, &mut randomness.sharing)?;
    let placement = Placement { table, secrets, caches };
    // the memory bound presumes every user can demand a distinct file
    if cfg.kind.is_secure() && cfg.n_files >= cfg.topology.user_count() {
        let bound = Rational::new(cfg.topology.user_count() as i128, cfg.topology.caches() as i128);
        if placement.memory() < bound {
            return Err(Error::Integrity(format!("secure placement stores {} < {bound} files per cache", placement.memory())));
        }
    }
    Ok(placement)
}

fn check_library(cfg: &SchemeConfig, lib: &FileLibrary) -> Result<()> {
    if lib.n_files() != cfg.n_files || lib.file_bits() != cfg.file_bits {
        return invalid(format!(
            "library has {} files of {} bits, configuration expects {} of {}",
            lib.n_files(),
            lib.file_bits(),
            cfg.n_files,
            cfg.file_bits
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeliveryMode {
    /// One payload per `(t+r)`-subset.
    Coded,
    /// The zero-memory point: every file sent verbatim.
    LibraryBroadcast,
}

/// The broadcast `X`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DeliveryTranscript {
    pub mode: DeliveryMode,
    pub payload_bits: usize,
    /// `Y_S` in canonical `S` order, or the files for a library broadcast.
    pub payloads: Vec<BitBlock>,
    /// `q_g` in user order (private schemes).
    pub padded_demands: Vec<BitBlock>,
    /// `d_g` in user order (non-private schemes).
    pub public_demands: Vec<BitBlock>,
}

impl DeliveryTranscript {
    /// Payload size in file units, excluding the demand vectors.
    pub fn rate(&self, file_bits: usize) -> Rational {
        Rational::new((self.payloads.len() * self.payload_bits) as i128, file_bits as i128)
    }

    /// Bits on the wire including demand vectors.
    pub fn total_bits(&self) -> usize {
        self.payloads.len() * self.payload_bits
            + self.padded_demands.iter().chain(&self.public_demands).map(BitBlock::len).sum::<usize>()
    }
}

/// `binom(C,t+r) / binom(C,t)`, the rate when `binom(C,t)` divides `F`.
pub fn nominal_rate(topo: &TopologySpec) -> Rational {
    Rational::new(topo.transmission_count() as i128, topo.subpacketization() as i128)
}

fn check_demands(cfg: &SchemeConfig, demands: &[DemandVector]) -> Result<()> {
    let users = cfg.topology.users();
    if demands.len() != users.len() {
        return invalid(format!("{} demands for {} users", demands.len(), users.len()));
    }
    for (g, d) in users.iter().zip(demands) {
        if d.user() != *g {
            return invalid(format!("demand for {} found where {g} was expected", d.user()));
        }
        if d.len() != cfg.n_files {
            return invalid(format!("demand of {g} has {} coefficients, expected {}", d.len(), cfg.n_files));
        }
    }
    Ok(())
}

/// Coded delivery. `demands` holds one vector per user, in user order.
pub fn deliver(
    cfg: &SchemeConfig,
    table: &SubfileTable,
    secrets: &ServerSecrets,
    demands: &[DemandVector],
) -> Result<DeliveryTranscript> {
    check_demands(cfg, demands)?;
    let topo = &cfg.topology;
    let sub = table.subfile_bits();
    let private = cfg.kind.is_private();
    let coefficients: Vec<BitBlock> = match private {
        true => demands.iter().zip(&secrets.privacy_vectors).map(|(d, p)| d.coefficients().xor(p)).collect(),
        false => demands.iter().map(|d| d.coefficients().clone()).collect(),
    };
    let payloads = topo
        .transmission_sets()
        .iter()
        .enumerate()
        .map(|(rank, s)| {
            let mut y = secrets.security_keys.get(rank).cloned().unwrap_or_else(|| BitBlock::zeros(sub));
            for g in subsets_within(s, topo.access()) {
                // B_{g,S\g}, plus T_{g,S\g} when the coefficients are q_g
                let t_rank = topo.rank(&s.difference(&g));
                let coeffs = &coefficients[topo.rank(&g)];
                for i in (0..cfg.n_files).filter(|&i| coeffs.get(i)) {
                    y ^= table.subfile(i, t_rank);
                }
            }
            y
        })
        .collect();
    let (padded_demands, public_demands) = match private {
        true => (coefficients, Vec::new()),
        false => (Vec::new(), coefficients),
    };
    Ok(DeliveryTranscript { mode: DeliveryMode::Coded, payload_bits: sub, payloads, padded_demands, public_demands })
}

/// The `(0, N)` point: every file broadcast in full, nothing cached.
pub fn broadcast_library(cfg: &SchemeConfig, lib: &FileLibrary) -> Result<DeliveryTranscript> {
    if !cfg.kind.has_broadcast_corner() {
        return invalid(format!("{} has no library-broadcast point", cfg.kind));
    }
    check_library(cfg, lib)?;
    Ok(DeliveryTranscript {
        mode: DeliveryMode::LibraryBroadcast,
        payload_bits: lib.file_bits(),
        payloads: lib.files().to_vec(),
        padded_demands: Vec::new(),
        public_demands: Vec::new(),
    })
}

/// What a user reads from its `r` caches.
struct LocalView<'a> {
    subfiles: HashMap<CacheSubset, &'a [BitBlock]>,
    shares: HashMap<(CacheSubset, CacheSubset), Vec<&'a Share>>,
    share_field: Option<FieldSpec>,
    whole_keys: HashMap<CacheSubset, &'a BitBlock>,
    coded: HashMap<CacheSubset, Vec<(usize, &'a BitBlock)>>,
}

impl<'a> LocalView<'a> {
    fn gather(user: &CacheSubset, caches: &'a [CacheContent]) -> Result<Self> {
        let mut view = LocalView {
            subfiles: HashMap::new(),
            shares: HashMap::new(),
            share_field: None,
            whole_keys: HashMap::new(),
            coded: HashMap::new(),
        };
        for c in user.iter() {
            let content = caches
                .iter()
                .find(|z| z.cache == c)
                .ok_or_else(|| Error::InvalidArgument(format!("contents of cache {c} not supplied")))?;
            for (t, files) in &content.subfiles {
                view.subfiles.insert(*t, files);
            }
            match &content.keys {
                KeyMaterial::None => {}
                KeyMaterial::Shares { field, shares } => {
                    view.share_field = Some(*field);
                    for s in shares.iter().filter(|s| s.user == *user) {
                        view.shares.entry((s.user, s.index)).or_default().push(&s.share);
                    }
                }
                KeyMaterial::WholeKeys(keys) => {
                    for (s, k) in keys {
                        view.whole_keys.insert(*s, k);
                    }
                }
                KeyMaterial::CodedSubKeys { blocks, .. } => {
                    for (s, a, b) in blocks.iter().filter(|(s, _, _)| user.is_subset_of(s)) {
                        view.coded.entry(*s).or_default().push((*a, b));
                    }
                }
            }
        }
        Ok(view)
    }

    fn subfiles(&self, t: &CacheSubset) -> Result<&'a [BitBlock]> {
        self.subfiles
            .get(t)
            .copied()
            .ok_or_else(|| Error::Integrity(format!("subfiles indexed by {t} are not in the user's caches")))
    }
}

/// Decodes `B_g` for `user` from its caches (extra caches are ignored) and
/// the broadcast.
pub fn decode(
    cfg: &SchemeConfig,
    user: &CacheSubset,
    caches: &[CacheContent],
    transcript: &DeliveryTranscript,
    demand: &DemandVector,
) -> Result<LinearPayload> {
    let topo = &cfg.topology;
    if user.len() != topo.access() || user.max_member().is_some_and(|m| m > topo.caches()) {
        return invalid(format!("{user} is not a user of this topology"));
    }
    if demand.len() != cfg.n_files {
        return invalid(format!("demand has {} coefficients, expected {}", demand.len(), cfg.n_files));
    }
    if transcript.mode == DeliveryMode::LibraryBroadcast {
        return combine_blocks(demand.coefficients(), &transcript.payloads, cfg.file_bits)
            .map(|b| b.resized(cfg.file_bits));
    }

    let sub = cfg.subfile_bits();
    check_transcript(cfg, transcript)?;
    let view = LocalView::gather(user, caches)?;
    let mds = match cfg.kind {
        SchemeKind::IsLfr => Some(build_code(topo.t() + topo.access(), topo.access())?),
        _ => None,
    };
    let others: &[BitBlock] = match cfg.kind.is_private() {
        true => &transcript.padded_demands,
        false => &transcript.public_demands,
    };

    let mut pieces = Vec::with_capacity(topo.subpacketization());
    for t in topo.subfile_indices() {
        if t.intersects(user) {
            pieces.push(combine_blocks(demand.coefficients(), view.subfiles(&t)?, sub)?);
            continue;
        }
        let s = user.union(&t);
        let mut y = transcript.payloads[topo.rank(&s)].clone();
        for g in subsets_within(&s, topo.access()).iter().filter(|g| *g != user) {
            let coeffs = &others[topo.rank(g)];
            y ^= &combine_blocks(coeffs, view.subfiles(&s.difference(g))?, sub)?;
        }
        y ^= &key_for(cfg, user, &t, &s, &view, mds.as_ref())?;
        pieces.push(y);
    }
    Ok(BitBlock::concat(&pieces).resized(cfg.file_bits))
}

fn check_transcript(cfg: &SchemeConfig, x: &DeliveryTranscript) -> Result<()> {
    let topo = &cfg.topology;
    let sub = cfg.subfile_bits();
    if x.payloads.len() != topo.transmission_count() || x.payloads.iter().any(|y| y.len() != sub) {
        return Err(Error::Integrity("broadcast payloads do not match the topology".into()));
    }
    let demands = match cfg.kind.is_private() {
        true => &x.padded_demands,
        false => &x.public_demands,
    };
    if demands.len() != topo.user_count() || demands.iter().any(|d| d.len() != cfg.n_files) {
        return Err(Error::Integrity("broadcast demand vectors do not match the topology".into()));
    }
    Ok(())
}

/// The key material `user` strips from `Y_S` to isolate `B_{g,T}`.
fn key_for(
    cfg: &SchemeConfig,
    user: &CacheSubset,
    t: &CacheSubset,
    s: &CacheSubset,
    view: &LocalView<'_>,
    mds: Option<&MdsCode>,
) -> Result<BitBlock> {
    let sub = cfg.subfile_bits();
    match cfg.kind {
        SchemeKind::SpLfr | SchemeKind::PLfr => {
            let field = view.share_field.ok_or_else(|| Error::Integrity("user's caches hold no shares".into()))?;
            let mut shares: Vec<Share> = view
                .shares
                .get(&(*user, *t))
                .map(|v| v.iter().map(|&s| s.clone()).collect())
                .unwrap_or_default();
            shares.sort_by_key(|s| s.index);
            if shares.len() != cfg.topology.access() || shares.iter().any(|s| s.symbols.len() != share_len(sub, field.exponent())) {
                return Err(Error::Integrity(format!("shares of D_{{{user},{t}}} are incomplete")));
            }
            let set = ShareSet { threshold: cfg.topology.access(), secret_bits: sub, field, shares };
            reconstruct(&set).map_err(|e| Error::Integrity(format!("share reconstruction for {user}, {t}: {e}")))
        }
        SchemeKind::SLfr => view
            .whole_keys
            .get(s)
            .map(|&k| k.clone())
            .ok_or_else(|| Error::Integrity(format!("key V_{s} is not in the user's caches"))),
        SchemeKind::IsLfr => {
            let code = mds.expect("code built for IS-LFR");
            let blocks = view.coded.get(s).map(Vec::as_slice).unwrap_or_default();
            decode_key(blocks, sub, code).map_err(|e| Error::Integrity(format!("coded sub-keys of V_{s}: {e}")))
        }
        SchemeKind::Lfr => Ok(BitBlock::zeros(sub)),
    }
}

/// Result of a full place → deliver → decode run.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub placement: Placement,
    pub transcript: DeliveryTranscript,
    /// Per user: decoded block (or error text) and the expected `B_g`.
    pub outcomes: Vec<UserOutcome>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UserOutcome {
    pub user: CacheSubset,
    pub decoded: std::result::Result<BitBlock, String>,
    pub expected: BitBlock,
}

impl UserOutcome {
    pub fn passed(&self) -> bool {
        self.decoded.as_ref().is_ok_and(|d| *d == self.expected)
    }
}

impl Simulation {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(UserOutcome::passed)
    }

    pub fn memory(&self) -> Rational {
        self.placement.memory()
    }

    pub fn rate(&self) -> Rational {
        self.transcript.rate(self.placement.table.file_bits())
    }
}

pub fn simulate(cfg: &SchemeConfig, lib: &FileLibrary, demands: &[DemandVector]) -> Result<Simulation> {
    let placement = place(cfg, lib)?;
    let transcript = deliver(cfg, &placement.table, &placement.secrets, demands)?;
    let outcomes = decode_all(cfg, lib, &placement.caches, &transcript, demands)?;
    Ok(Simulation { placement, transcript, outcomes })
}

/// Decodes every user and compares against the direct linear combination.
pub fn decode_all(
    cfg: &SchemeConfig,
    lib: &FileLibrary,
    caches: &[CacheContent],
    transcript: &DeliveryTranscript,
    demands: &[DemandVector],
) -> Result<Vec<UserOutcome>> {
    check_demands(cfg, demands)?;
    demands
        .iter()
        .map(|d| {
            Ok(UserOutcome {
                user: d.user(),
                decoded: decode(cfg, &d.user(), caches, transcript, d).map_err(|e| e.to_string()),
                expected: crate::library_model::linear_combination(d, lib)?,
            })
        })
        .collect()
}

/// Number of users `g ⊂ S` for a `(t+r)`-subset `S`.
pub fn users_per_transmission(topo: &TopologySpec) -> u64 {
    binomial(topo.t() + topo.access(), topo.access())
}
