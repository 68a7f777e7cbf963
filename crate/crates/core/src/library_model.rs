//! File library, subpacketization and demand algebra over GF(2).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitBlock;
use crate::error::{invalid, Result};
use crate::topology::{subset_rank, CacheSubset, TopologySpec};

/// A demanded linear combination, either a whole file-sized `B_g` or one
/// subfile-sized slice `B_{g,T}`.
pub type LinearPayload = BitBlock;

const LIBRARY_STREAM: u64 = 3;

/// `N` files of `F` bits each.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FileLibrary {
    file_bits: usize,
    files: Vec<BitBlock>,
}

impl FileLibrary {
    pub fn new(files: Vec<BitBlock>, file_bits: usize) -> Result<Self> {
        if files.is_empty() {
            return invalid("library needs at least one file");
        }
        if let Some((i, f)) = files.iter().enumerate().find(|(_, f)| f.len() != file_bits) {
            return invalid(format!("file {} has {} bits, expected {file_bits}", i + 1, f.len()));
        }
        Ok(Self { file_bits, files })
    }

    /// Deterministic pseudo-random library; `(seed, n, file_bits)` fixes it.
    /// Drawn from ChaCha8 stream 3, so it never overlaps the placement
    /// streams of the same seed.
    pub fn from_seed(seed: u64, n: usize, file_bits: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(LIBRARY_STREAM);
        let files = (0..n)
            .map(|_| {
                let mut bytes = vec![0u8; file_bits.div_ceil(8)];
                rng.fill_bytes(&mut bytes);
                BitBlock::from_bytes(bytes, file_bits)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(files, file_bits)
    }

    /// Raw concatenation: file `i` occupies bytes
    /// `[i * ceil(F/8), (i+1) * ceil(F/8))`; bits past `F` are ignored.
    pub fn from_raw_bytes(raw: &[u8], n: usize, file_bits: usize) -> Result<Self> {
        let stride = file_bits.div_ceil(8);
        if raw.len() != n * stride {
            return invalid(format!("expected {} bytes for {n} files of {file_bits} bits, got {}", n * stride, raw.len()));
        }
        let files = raw
            .chunks(stride.max(1))
            .take(n)
            .map(|chunk| BitBlock::from_bytes(chunk.to_vec(), file_bits))
            .collect::<Result<Vec<_>>>()?;
        Self::new(files, file_bits)
    }

    /// Library whose bits are the binary digits of `index`, file by file,
    /// least significant first. Used by the exhaustive oracles.
    pub fn from_index(index: u128, n: usize, file_bits: usize) -> Result<Self> {
        let mut v = index;
        let files = (0..n)
            .map(|_| {
                let mut b = BitBlock::zeros(file_bits);
                for i in 0..file_bits {
                    b.set(i, v & 1 == 1);
                    v >>= 1;
                }
                b
            })
            .collect();
        Self::new(files, file_bits)
    }

    pub fn n_files(&self) -> usize {
        self.files.len()
    }

    pub fn file_bits(&self) -> usize {
        self.file_bits
    }

    /// File `i`, 0-based.
    pub fn file(&self, i: usize) -> &BitBlock {
        &self.files[i]
    }

    pub fn files(&self) -> &[BitBlock] {
        &self.files
    }
}

/// Subfiles `W_{i,T}` for every file `i` and `t`-subset `T`.
#[derive(Clone, Debug)]
pub struct SubfileTable {
    topology: TopologySpec,
    file_bits: usize,
    subfile_bits: usize,
    indices: Vec<CacheSubset>,
    // blocks[file][rank of T]
    blocks: Vec<Vec<BitBlock>>,
}

/// Splits every file into `binom(C,t)` subfiles of `ceil(F / binom(C,t))`
/// bits, zero-padding the last one.
pub fn subpacketize(lib: &FileLibrary, topo: &TopologySpec) -> SubfileTable {
    let indices = topo.subfile_indices();
    let count = indices.len();
    let subfile_bits = lib.file_bits().div_ceil(count);
    let blocks = lib
        .files()
        .iter()
        .map(|f| (0..count).map(|k| f.slice(k * subfile_bits, subfile_bits)).collect())
        .collect();
    SubfileTable { topology: *topo, file_bits: lib.file_bits(), subfile_bits, indices, blocks }
}

impl SubfileTable {
    pub fn topology(&self) -> &TopologySpec {
        &self.topology
    }

    pub fn n_files(&self) -> usize {
        self.blocks.len()
    }

    pub fn file_bits(&self) -> usize {
        self.file_bits
    }

    pub fn subfile_bits(&self) -> usize {
        self.subfile_bits
    }

    /// The `t`-subsets in canonical order.
    pub fn indices(&self) -> &[CacheSubset] {
        &self.indices
    }

    pub fn subfile(&self, file: usize, index_rank: usize) -> &BitBlock {
        &self.blocks[file][index_rank]
    }

    pub fn subfile_by_set(&self, file: usize, index: &CacheSubset) -> Result<&BitBlock> {
        if index.len() != self.topology.t() {
            return invalid(format!("{index} is not a {}-subset", self.topology.t()));
        }
        if file >= self.n_files() {
            return invalid(format!("file {} outside 1..={}", file + 1, self.n_files()));
        }
        let rank = subset_rank(index, self.topology.caches())?;
        Ok(&self.blocks[file][rank])
    }

    /// Concatenates a file's subfiles in order and truncates to `F` bits.
    pub fn reassemble(&self, file: usize) -> BitBlock {
        BitBlock::concat(&self.blocks[file]).resized(self.file_bits)
    }
}

/// A user's demand `d_g ∈ F_2^N`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct DemandVector {
    user: CacheSubset,
    coefficients: BitBlock,
}

impl DemandVector {
    pub fn new(user: CacheSubset, coefficients: BitBlock) -> Self {
        Self { user, coefficients }
    }

    pub fn from_bit_str(user: CacheSubset, bits: &str) -> Result<Self> {
        Ok(Self::new(user, BitBlock::from_bit_str(bits)?))
    }

    /// Single-file retrieval of file `i` (0-based).
    pub fn one_hot(user: CacheSubset, n: usize, i: usize) -> Self {
        let mut c = BitBlock::zeros(n);
        c.set(i, true);
        Self::new(user, c)
    }

    pub fn zero(user: CacheSubset, n: usize) -> Self {
        Self::new(user, BitBlock::zeros(n))
    }

    pub fn user(&self) -> CacheSubset {
        self.user
    }

    pub fn coefficients(&self) -> &BitBlock {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficient(&self, i: usize) -> bool {
        self.coefficients.get(i)
    }
}

/// `B_g = Σ_i d_{g,i} W_i`.
pub fn linear_combination(d: &DemandVector, lib: &FileLibrary) -> Result<LinearPayload> {
    combine_blocks(d.coefficients(), lib.files(), lib.file_bits())
}

/// `B_{g,T} = Σ_i d_{g,i} W_{i,T}`.
pub fn linear_combination_subfile(d: &DemandVector, table: &SubfileTable, index: &CacheSubset) -> Result<LinearPayload> {
    if d.len() != table.n_files() {
        return invalid(format!("demand has {} coefficients for {} files", d.len(), table.n_files()));
    }
    let mut out = BitBlock::zeros(table.subfile_bits());
    for i in (0..d.len()).filter(|&i| d.coefficient(i)) {
        out ^= table.subfile_by_set(i, index)?;
    }
    Ok(out)
}

/// XOR of the blocks selected by `coefficients`.
pub fn combine_blocks(coefficients: &BitBlock, blocks: &[BitBlock], len: usize) -> Result<BitBlock> {
    if coefficients.len() != blocks.len() {
        return invalid(format!("{} coefficients for {} blocks", coefficients.len(), blocks.len()));
    }
    let mut out = BitBlock::zeros(len);
    for (i, b) in blocks.iter().enumerate() {
        if coefficients.get(i) {
            out ^= b;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(m: &[usize]) -> CacheSubset {
        CacheSubset::new(m).unwrap()
    }

    #[test]
    fn subpacketization_shapes() {
        let lib = FileLibrary::from_seed(1, 3, 3).unwrap();
        let table = subpacketize(&lib, &TopologySpec::new(3, 2, 1).unwrap());
        assert_eq!(table.indices().len(), 3);
        assert_eq!(table.subfile_bits(), 1);
        for i in 0..3 {
            for k in 0..3 {
                assert_eq!(table.subfile(i, k).get(0), lib.file(i).get(k));
            }
        }
        let whole = subpacketize(&lib, &TopologySpec::new(3, 2, 0).unwrap());
        assert_eq!(whole.indices().len(), 1);
        assert_eq!(whole.subfile(2, 0), lib.file(2));
    }

    #[test]
    fn padding_when_not_divisible() {
        let lib = FileLibrary::from_seed(9, 2, 11).unwrap();
        let table = subpacketize(&lib, &TopologySpec::new(5, 2, 2).unwrap());
        assert_eq!(table.subfile_bits(), 2);
        // bits past F are zero padding
        assert!(!table.subfile(0, 5).get(1));
        assert!(table.subfile(1, 9).is_zero());
        assert_eq!(table.reassemble(0), *lib.file(0));
    }

    #[test]
    fn raw_bytes_ingestion() {
        let lib = FileLibrary::from_raw_bytes(&[0xff, 0x0f, 0x80, 0x00], 2, 12).unwrap();
        assert_eq!(lib.file(0).to_bit_string(), "111111110000");
        assert_eq!(lib.file(1).to_bit_string(), "100000000000");
        assert!(FileLibrary::from_raw_bytes(&[0; 3], 2, 12).is_err());
    }

    #[test]
    fn combinations() {
        let lib = FileLibrary::from_seed(3, 10, 40).unwrap();
        let g = set(&[1, 2, 3]);
        assert_eq!(linear_combination(&DemandVector::one_hot(g, 10, 4), &lib).unwrap(), *lib.file(4));
        assert!(linear_combination(&DemandVector::zero(g, 10), &lib).unwrap().is_zero());
        let d = DemandVector::from_bit_str(g, "1100000000").unwrap();
        assert_eq!(linear_combination(&d, &lib).unwrap(), lib.file(0).xor(lib.file(1)));

        let table = subpacketize(&lib, &TopologySpec::new(5, 3, 2).unwrap());
        let t45 = set(&[4, 5]);
        let piece = linear_combination_subfile(&d, &table, &t45).unwrap();
        let expected = table.subfile_by_set(0, &t45).unwrap().xor(table.subfile_by_set(1, &t45).unwrap());
        assert_eq!(piece, expected);
        assert!(linear_combination_subfile(&d, &table, &set(&[4])).is_err());
    }

    proptest! {
        #[test]
        fn combination_is_linear_and_commutes_with_slicing(
            seed in any::<u64>(), a in 0u32..1024, b in 0u32..1024, f in 1usize..60
        ) {
            let lib = FileLibrary::from_seed(seed, 10, f).unwrap();
            let g = set(&[1, 2]);
            let mk = |v: u32| DemandVector::new(g, BitBlock::from_bits(&(0..10).map(|i| v >> i & 1 == 1).collect::<Vec<_>>()));
            let (da, db, dab) = (mk(a), mk(b), mk(a ^ b));
            let lhs = linear_combination(&dab, &lib).unwrap();
            let rhs = linear_combination(&da, &lib).unwrap().xor(&linear_combination(&db, &lib).unwrap());
            prop_assert_eq!(&lhs, &rhs);

            let table = subpacketize(&lib, &TopologySpec::new(5, 2, 2).unwrap());
            let pieces: Vec<BitBlock> = table.indices().iter()
                .map(|tt| linear_combination_subfile(&dab, &table, tt).unwrap())
                .collect();
            prop_assert_eq!(BitBlock::concat(&pieces).resized(f), lhs);
            for i in 0..10 {
                prop_assert_eq!(&table.reassemble(i), lib.file(i));
            }
        }
    }
}
