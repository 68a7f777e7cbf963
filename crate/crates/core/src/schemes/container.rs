//! Self-describing binary transcript container and its JSON debug view.
//!
//! Layout, integers little-endian:
//!
//! ```text
//! "MACLFRTX" version:u16 C:u32 r:u32 t:u32 N:u32 F:u64 kind:u8 seed:u64
//! caches:u32 { cache:u32 groups:u32 { T files:u32 block* } keys }*
//! mode:u8 payload_bits:u64 payloads:u32 block* q:u32 block* d:u32 block*
//! ```
//!
//! A cache subset is `len:u8` followed by its 1-based members as `u8`. A
//! block is `bits:u64` followed by its bytes, zero-padded at the tail. Key
//! material is tagged `0` none, `1` shares, `2` whole keys, `3` coded
//! sub-keys.

use std::io::Write;

use serde_json::{json, Value};

use super::{CacheContent, DeliveryMode, DeliveryTranscript, KeyMaterial, SchemeConfig, SchemeKind, StoredShare};
use crate::bits::BitBlock;
use crate::error::{Error, Result};
use crate::finite_field::FieldSpec;
use crate::secret_sharing::Share;
use crate::topology::{CacheSubset, TopologySpec};

pub const MAGIC: &[u8; 8] = b"MACLFRTX";
pub const VERSION: u16 = 1;

/// Everything one simulation run produces.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TranscriptFile {
    pub config: SchemeConfig,
    pub caches: Vec<CacheContent>,
    pub delivery: DeliveryTranscript,
}

pub fn write_container(file: &TranscriptFile, w: &mut impl Write) -> Result<()> {
    w.write_all(&to_bytes(file))?;
    Ok(())
}

pub fn to_bytes(file: &TranscriptFile) -> Vec<u8> {
    let mut out = Encoder(Vec::new());
    let cfg = &file.config;
    out.0.extend_from_slice(MAGIC);
    out.u16(VERSION);
    out.u32(cfg.topology.caches() as u32);
    out.u32(cfg.topology.access() as u32);
    out.u32(cfg.topology.t() as u32);
    out.u32(cfg.n_files as u32);
    out.u64(cfg.file_bits as u64);
    out.u8(cfg.kind.code());
    out.u64(cfg.seed);

    out.u32(file.caches.len() as u32);
    for cache in &file.caches {
        out.u32(cache.cache as u32);
        out.u32(cache.subfiles.len() as u32);
        for (t, files) in &cache.subfiles {
            out.subset(t);
            out.blocks(files);
        }
        match &cache.keys {
            KeyMaterial::None => out.u8(0),
            KeyMaterial::Shares { field, shares } => {
                out.u8(1);
                out.u32(field.exponent());
                out.u32(field.modulus());
                out.u32(shares.len() as u32);
                for s in shares {
                    out.subset(&s.user);
                    out.subset(&s.index);
                    out.u32(s.share.index as u32);
                    out.block(&s.share.to_block(field.exponent()));
                }
            }
            KeyMaterial::WholeKeys(keys) => {
                out.u8(2);
                out.u32(keys.len() as u32);
                for (s, k) in keys {
                    out.subset(s);
                    out.block(k);
                }
            }
            KeyMaterial::CodedSubKeys { key_bits, blocks } => {
                out.u8(3);
                out.u64(*key_bits as u64);
                out.u32(blocks.len() as u32);
                for (s, a, b) in blocks {
                    out.subset(s);
                    out.u32(*a as u32);
                    out.block(b);
                }
            }
        }
    }

    let x = &file.delivery;
    out.u8(match x.mode {
        DeliveryMode::Coded => 0,
        DeliveryMode::LibraryBroadcast => 1,
    });
    out.u64(x.payload_bits as u64);
    out.blocks(&x.payloads);
    out.blocks(&x.padded_demands);
    out.blocks(&x.public_demands);
    out.0
}

pub fn from_bytes(bytes: &[u8]) -> Result<TranscriptFile> {
    let mut r = Decoder { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return format_error("bad magic");
    }
    let version = r.u16()?;
    if version != VERSION {
        return format_error(format!("unsupported version {version}"));
    }
    let (c, access, t, n) = (r.usize32()?, r.usize32()?, r.usize32()?, r.usize32()?);
    let file_bits = r.u64()? as usize;
    let kind = SchemeKind::from_code(r.u8()?).ok_or_else(|| Error::Format("unknown scheme code".into()))?;
    let seed = r.u64()?;
    let topology = TopologySpec::new(c, access, t).map_err(|e| Error::Format(e.to_string()))?;
    let config = SchemeConfig::new(topology, n, file_bits, kind, seed).map_err(|e| Error::Format(e.to_string()))?;

    let cache_count = r.usize32()?;
    let mut caches = Vec::with_capacity(cache_count.min(1 << 16));
    for _ in 0..cache_count {
        let cache = r.usize32()?;
        let groups = r.usize32()?;
        let mut subfiles = Vec::with_capacity(groups.min(1 << 16));
        for _ in 0..groups {
            let t = r.subset()?;
            subfiles.push((t, r.blocks()?));
        }
        let keys = match r.u8()? {
            0 => KeyMaterial::None,
            1 => {
                let exponent = r.u32()?;
                let modulus = r.u32()?;
                let field = FieldSpec::new(exponent, modulus).map_err(|e| Error::Format(e.to_string()))?;
                let count = r.usize32()?;
                let mut shares = Vec::with_capacity(count.min(1 << 16));
                for _ in 0..count {
                    let user = r.subset()?;
                    let index = r.subset()?;
                    let j = r.usize32()?;
                    let share = Share::from_block(j, &r.block()?, exponent).map_err(|e| Error::Format(e.to_string()))?;
                    shares.push(StoredShare { user, index, share });
                }
                KeyMaterial::Shares { field, shares }
            }
            2 => {
                let count = r.usize32()?;
                let mut keys = Vec::with_capacity(count.min(1 << 16));
                for _ in 0..count {
                    let s = r.subset()?;
                    keys.push((s, r.block()?));
                }
                KeyMaterial::WholeKeys(keys)
            }
            3 => {
                let key_bits = r.u64()? as usize;
                let count = r.usize32()?;
                let mut blocks = Vec::with_capacity(count.min(1 << 16));
                for _ in 0..count {
                    let s = r.subset()?;
                    let a = r.usize32()?;
                    blocks.push((s, a, r.block()?));
                }
                KeyMaterial::CodedSubKeys { key_bits, blocks }
            }
            tag => return format_error(format!("unknown key material tag {tag}")),
        };
        caches.push(CacheContent { cache, subfiles, keys });
    }

    let mode = match r.u8()? {
        0 => DeliveryMode::Coded,
        1 => DeliveryMode::LibraryBroadcast,
        m => return format_error(format!("unknown delivery mode {m}")),
    };
    let payload_bits = r.u64()? as usize;
    let payloads = r.blocks()?;
    let padded_demands = r.blocks()?;
    let public_demands = r.blocks()?;
    if r.pos != bytes.len() {
        return format_error(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    Ok(TranscriptFile {
        config,
        caches,
        delivery: DeliveryTranscript { mode, payload_bits, payloads, padded_demands, public_demands },
    })
}

fn format_error<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

struct Encoder(Vec<u8>);

impl Encoder {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn subset(&mut self, s: &CacheSubset) {
        self.u8(s.len() as u8);
        for c in s.iter() {
            self.u8(c as u8);
        }
    }

    fn block(&mut self, b: &BitBlock) {
        self.u64(b.len() as u64);
        self.0.extend_from_slice(b.as_bytes());
    }

    fn blocks(&mut self, blocks: &[BitBlock]) {
        self.u32(blocks.len() as u32);
        for b in blocks {
            self.block(b);
        }
    }
}

struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("two bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }

    fn usize32(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("eight bytes")))
    }

    fn subset(&mut self) -> Result<CacheSubset> {
        let len = self.u8()? as usize;
        let members: Vec<usize> = self.take(len)?.iter().map(|&c| c as usize).collect();
        CacheSubset::new(&members).map_err(|e| Error::Format(e.to_string()))
    }

    fn block(&mut self) -> Result<BitBlock> {
        let bits = usize::try_from(self.u64()?).map_err(|_| Error::Format("block too large".into()))?;
        let bytes = self.take(bits.div_ceil(8))?.to_vec();
        if bits % 8 != 0 && bytes.last().is_some_and(|b| b & (0xff >> (bits % 8)) != 0) {
            return format_error("nonzero padding bits in block");
        }
        BitBlock::from_bytes(bytes, bits).map_err(|e| Error::Format(e.to_string()))
    }

    fn blocks(&mut self) -> Result<Vec<BitBlock>> {
        let count = self.usize32()?;
        let mut out = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            out.push(self.block()?);
        }
        Ok(out)
    }
}

fn hex_block(b: &BitBlock) -> Value {
    json!({ "bits": b.len(), "hex": hex::encode(b.as_bytes()) })
}

fn hex_blocks(bs: &[BitBlock]) -> Value {
    Value::Array(bs.iter().map(hex_block).collect())
}

/// Debug view with hex-encoded blocks. Key order is fixed, so equal
/// transcripts print identically.
pub fn to_json(file: &TranscriptFile) -> Value {
    let cfg = &file.config;
    let caches: Vec<Value> = file
        .caches
        .iter()
        .map(|c| {
            let subfiles: Vec<Value> =
                c.subfiles.iter().map(|(t, files)| json!({ "T": t, "files": hex_blocks(files) })).collect();
            let keys = match &c.keys {
                KeyMaterial::None => json!({ "kind": "none" }),
                KeyMaterial::Shares { field, shares } => json!({
                    "kind": "shares",
                    "field_exponent": field.exponent(),
                    "field_modulus": field.modulus(),
                    "shares": shares.iter().map(|s| json!({
                        "user": s.user,
                        "T": s.index,
                        "j": s.share.index,
                        "symbols": s.share.symbols,
                    })).collect::<Vec<_>>(),
                }),
                KeyMaterial::WholeKeys(keys) => json!({
                    "kind": "whole-keys",
                    "keys": keys.iter().map(|(s, k)| json!({ "S": s, "key": hex_block(k) })).collect::<Vec<_>>(),
                }),
                KeyMaterial::CodedSubKeys { key_bits, blocks } => json!({
                    "kind": "coded-sub-keys",
                    "key_bits": key_bits,
                    "blocks": blocks.iter().map(|(s, a, b)| json!({ "S": s, "column": a, "block": hex_block(b) })).collect::<Vec<_>>(),
                }),
            };
            json!({ "cache": c.cache, "subfiles": subfiles, "keys": keys })
        })
        .collect();
    let x = &file.delivery;
    json!({
        "format": "maclfr-transcript",
        "version": VERSION,
        "config": {
            "C": cfg.topology.caches(),
            "r": cfg.topology.access(),
            "t": cfg.topology.t(),
            "N": cfg.n_files,
            "F": cfg.file_bits,
            "scheme": cfg.kind,
            "seed": cfg.seed,
        },
        "caches": caches,
        "delivery": {
            "mode": x.mode,
            "payload_bits": x.payload_bits,
            "payloads": hex_blocks(&x.payloads),
            "padded_demands": hex_blocks(&x.padded_demands),
            "public_demands": hex_blocks(&x.public_demands),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library_model::{DemandVector, FileLibrary};
    use crate::schemes::{deliver, place};

    fn sample(kind: SchemeKind) -> TranscriptFile {
        let cfg = SchemeConfig::new(TopologySpec::new(4, 2, 1).unwrap(), 2, 10, kind, 3).unwrap();
        let lib = FileLibrary::from_seed(1, 2, 10).unwrap();
        let demands: Vec<DemandVector> =
            cfg.topology.users().into_iter().map(|g| DemandVector::one_hot(g, 2, 1)).collect();
        let p = place(&cfg, &lib).unwrap();
        let delivery = deliver(&cfg, &p.table, &p.secrets, &demands).unwrap();
        TranscriptFile { config: cfg, caches: p.caches, delivery }
    }

    #[test]
    fn round_trip_every_scheme() {
        for kind in SchemeKind::ALL {
            let file = sample(kind);
            let bytes = to_bytes(&file);
            assert_eq!(&bytes[..8], MAGIC);
            assert_eq!(from_bytes(&bytes).unwrap(), file);
        }
    }

    #[test]
    fn truncation_and_garbage_are_rejected() {
        let bytes = to_bytes(&sample(SchemeKind::SpLfr));
        for cut in [0, 7, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(from_bytes(&bytes[..cut]), Err(Error::Format(_))));
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(from_bytes(&extra).is_err());
        let mut bad = bytes;
        bad[8] = 9;
        assert!(from_bytes(&bad).is_err());
    }
}
