//! Demand sources and reference presets.

use std::path::Path;

use maclfr::library_model::DemandVector;
use maclfr::topology::TopologySpec;
use maclfr::BitBlock;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{CliError, CliResult, Preset};

/// Where demand tuples come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DemandSource {
    File(std::path::PathBuf),
    Random,
    Exhaustive,
}

impl DemandSource {
    pub fn parse(s: &str) -> Self {
        match s {
            "random" => Self::Random,
            "exhaustive" => Self::Exhaustive,
            path => Self::File(path.into()),
        }
    }
}

/// One line per user in lexicographic user order, `N` characters over
/// `{0,1}`. Blank lines and `#` comments are skipped.
pub fn read_demand_file(path: &Path, topo: &TopologySpec, n_files: usize) -> CliResult<Vec<DemandVector>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_demands(&text, topo, n_files)
}

pub fn parse_demands(text: &str, topo: &TopologySpec, n_files: usize) -> CliResult<Vec<DemandVector>> {
    let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
    let users = topo.users();
    if rows.len() != users.len() {
        return Err(CliError::BadArguments(format!("demand file has {} rows, expected {}", rows.len(), users.len())));
    }
    users
        .into_iter()
        .zip(rows)
        .enumerate()
        .map(|(k, (g, row))| {
            if row.len() != n_files {
                return Err(CliError::BadArguments(format!("demand row {} has {} entries, expected {n_files}", k + 1, row.len())));
            }
            DemandVector::from_bit_str(g, row).map_err(|e| CliError::BadArguments(format!("demand row {}: {e}", k + 1)))
        })
        .collect()
}

pub fn random(topo: &TopologySpec, n_files: usize, seed: u64) -> Vec<DemandVector> {
    maclfr::verify::random_demands(topo, n_files, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub struct PresetConfig {
    pub topology: TopologySpec,
    pub n_files: usize,
    /// Smallest size at which every ceiling in the memory formulas is exact.
    pub file_bits: usize,
    pub demands: Vec<DemandVector>,
}

pub fn preset(p: Preset) -> PresetConfig {
    let (c, r, t, n, f) = match p {
        Preset::Example2 => (3, 2, 1, 3, 6),
        Preset::Example3 => (5, 3, 2, 10, 180),
        Preset::Example4 => (5, 2, 2, 10, 60),
    };
    let topology = TopologySpec::new(c, r, t).expect("preset topology is valid");
    let users = topology.users();
    let demands = match p {
        Preset::Example2 => users.iter().enumerate().map(|(k, g)| DemandVector::one_hot(*g, n, k)).collect(),
        // user k wants W_{k+1} + W_{k+2}; the last user wants W_10 alone
        Preset::Example3 => users
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let mut d = BitBlock::zeros(n);
                d.set(k, true);
                if k + 1 < n {
                    d.set(k + 1, true);
                }
                DemandVector::new(*g, d)
            })
            .collect(),
        Preset::Example4 => parse_demands(EXAMPLE4_DEMANDS, &topology, n).expect("preset demands are well formed"),
    };
    PresetConfig { topology, n_files: n, file_bits: f, demands }
}

const EXAMPLE4_DEMANDS: &str = "\
1110000000
1100000100
1000000001
1110000110
1000001100
1000101000
1100010001
1110011010
0000000110
1100000000
";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demand_file_rows_must_match_users() {
        let topo = TopologySpec::new(3, 2, 1).unwrap();
        assert!(parse_demands("10\n01\n11\n", &topo, 2).is_ok());
        assert!(matches!(parse_demands("10\n01\n", &topo, 2), Err(CliError::BadArguments(_))));
        assert!(matches!(parse_demands("10\n01\n1\n", &topo, 2), Err(CliError::BadArguments(_))));
        assert!(matches!(parse_demands("10\n01\n1x\n", &topo, 2), Err(CliError::BadArguments(_))));
        let d = parse_demands("# users 12 13 23\n10\n\n01\n11\n", &topo, 2).unwrap();
        assert_eq!(d[2].coefficients().to_bit_string(), "11");
    }

    #[test]
    fn presets_have_one_demand_per_user() {
        for p in [Preset::Example2, Preset::Example3, Preset::Example4] {
            let cfg = preset(p);
            assert_eq!(cfg.demands.len(), cfg.topology.user_count());
        }
    }
}
