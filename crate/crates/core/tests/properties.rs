use maclfr::analysis::{common_ideal_file_bits, point, FileSize};
use maclfr::library_model::{linear_combination, DemandVector, FileLibrary};
use maclfr::mds_codes::{build_code, decode_key, encode_key};
use maclfr::randomness::{SeededSource, ServerRandomness};
use maclfr::schemes::container::{from_bytes, to_bytes, TranscriptFile};
use maclfr::schemes::{build_caches, deliver, place, place_with, simulate, KeyMaterial, SchemeConfig, SchemeKind};
use maclfr::secret_sharing::{field_for_threshold, reconstruct, split};
use maclfr::topology::{binomial, enumerate_subsets, TopologySpec};
use maclfr::verify::{random_demands, check_share_placement_secrecy};
use maclfr::{BitBlock, Rational};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn block(bits: Vec<bool>) -> BitBlock {
    BitBlock::from_bits(&bits)
}

/// Every `(C, r, t)` with `C ≤ max_c`, `r ≥ 1` and `t + r ≤ C`.
fn topologies(max_c: usize) -> Vec<TopologySpec> {
    let mut out = Vec::new();
    for c in 2..=max_c {
        for r in 1..c {
            for t in 0..=c - r {
                out.push(TopologySpec::new(c, r, t).unwrap());
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn shamir_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..=64), r in 1usize..=6, seed: u64) {
        let secret = block(bits);
        let field = field_for_threshold(r).unwrap();
        let set = split(&secret, r, &field, &mut SeededSource::new(seed, 0)).unwrap();
        prop_assert_eq!(set.shares.len(), r);
        prop_assert_eq!(reconstruct(&set).unwrap(), secret);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mds_decodes_from_every_k_subset(
        shape in prop::sample::select(vec![(3usize, 2usize), (4, 2), (5, 3), (5, 2)]),
        bits in proptest::collection::vec(any::<bool>(), 1..=40),
    ) {
        let (n, k) = shape;
        let code = build_code(n, k).unwrap();
        let key = block(bits);
        let coded = encode_key(&key, &code);
        for cols in enumerate_subsets(n, k) {
            let picked: Vec<(usize, &BitBlock)> = cols.iter().map(|p| (p, &coded.blocks[p - 1])).collect();
            prop_assert_eq!(decode_key(&picked, key.len(), &code).unwrap(), key.clone());
        }
    }

    #[test]
    fn delivery_is_affine_in_demands(seed: u64, kind in prop::sample::select(SchemeKind::ALL.to_vec())) {
        // keys and padding fixed: X(a) ⊕ X(b) ⊕ X(a ⊕ b) = X(0)
        let topo = TopologySpec::new(4, 2, 1).unwrap();
        let cfg = SchemeConfig::new(topo, 3, 8, kind, seed).unwrap();
        let lib = FileLibrary::from_seed(seed ^ 1, 3, 8).unwrap();
        let p = place(&cfg, &lib).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_demands(&topo, 3, &mut rng);
        let b = random_demands(&topo, 3, &mut rng);
        let sum: Vec<DemandVector> = a.iter().zip(&b).map(|(x, y)| DemandVector::new(x.user(), x.coefficients().xor(y.coefficients()))).collect();
        let zero: Vec<DemandVector> = topo.users().into_iter().map(|g| DemandVector::zero(g, 3)).collect();
        let x = |d: &[DemandVector]| deliver(&cfg, &p.table, &p.secrets, d).unwrap().payloads;
        let (xa, xb, xs, x0) = (x(&a), x(&b), x(&sum), x(&zero));
        for i in 0..xa.len() {
            prop_assert_eq!(xa[i].xor(&xb[i]).xor(&xs[i]), x0[i].clone());
        }
    }

    #[test]
    fn random_demands_decode(seed: u64, kind in prop::sample::select(SchemeKind::ALL.to_vec()), shape in 0usize..4) {
        let (c, r, t, n, f) = [(3, 2, 1, 3, 6), (4, 2, 1, 2, 12), (4, 3, 1, 2, 7), (5, 2, 2, 4, 23)][shape];
        let topo = TopologySpec::new(c, r, t).unwrap();
        let cfg = SchemeConfig::new(topo, n, f, kind, seed).unwrap();
        let lib = FileLibrary::from_seed(seed, n, f).unwrap();
        let demands = random_demands(&topo, n, &mut ChaCha8Rng::seed_from_u64(seed));
        let sim = simulate(&cfg, &lib, &demands).unwrap();
        for o in &sim.outcomes {
            prop_assert!(o.passed(), "{} {:?}", kind, o.user);
            prop_assert_eq!(o.expected.clone(), linear_combination(&demands[sim.outcomes.iter().position(|x| x.user == o.user).unwrap()], &lib).unwrap());
        }
    }

    #[test]
    fn container_round_trip(seed: u64, kind in prop::sample::select(SchemeKind::ALL.to_vec()), f in 1usize..40) {
        let topo = TopologySpec::new(4, 2, 1).unwrap();
        let cfg = SchemeConfig::new(topo, 2, f, kind, seed).unwrap();
        let lib = FileLibrary::from_seed(seed, 2, f).unwrap();
        let demands = random_demands(&topo, 2, &mut ChaCha8Rng::seed_from_u64(seed));
        let sim = simulate(&cfg, &lib, &demands).unwrap();
        let file = TranscriptFile { config: cfg, caches: sim.placement.caches, delivery: sim.transcript };
        prop_assert_eq!(from_bytes(&to_bytes(&file)).unwrap(), file);
    }
}

#[test]
fn secure_private_without_keys_is_private_only() {
    let lib = FileLibrary::from_seed(3, 4, 12).unwrap();
    for topo in [TopologySpec::new(4, 2, 1).unwrap(), TopologySpec::new(5, 3, 1).unwrap()] {
        let sp = SchemeConfig::new(topo, 4, 12, SchemeKind::SpLfr, 11).unwrap();
        let p = SchemeConfig { kind: SchemeKind::PLfr, ..sp };
        let sp_place = place(&sp, &lib).unwrap();
        let p_place = place(&p, &lib).unwrap();
        // the privacy stream is independent of the key stream, so P_g agree
        assert_eq!(sp_place.secrets.privacy_vectors, p_place.secrets.privacy_vectors);
        let stripped = sp_place.secrets.without_security_keys();
        assert_eq!(stripped.superposed_keys, p_place.secrets.superposed_keys);
        let caches = build_caches(&p, &sp_place.table, &stripped, &mut ServerRandomness::from_seed(11).sharing).unwrap();
        assert_eq!(caches, p_place.caches);
        let demands = random_demands(&topo, 4, &mut ChaCha8Rng::seed_from_u64(5));
        let with_zero_keys = deliver(&sp, &sp_place.table, &stripped, &demands).unwrap();
        assert_eq!(with_zero_keys, deliver(&p, &p_place.table, &p_place.secrets, &demands).unwrap());
    }
}

#[test]
fn secure_schemes_share_a_transcript() {
    let lib = FileLibrary::from_seed(8, 3, 30).unwrap();
    let topo = TopologySpec::new(5, 2, 1).unwrap();
    let s = SchemeConfig::new(topo, 3, 30, SchemeKind::SLfr, 6).unwrap();
    let is = SchemeConfig { kind: SchemeKind::IsLfr, ..s };
    let demands = random_demands(&topo, 3, &mut ChaCha8Rng::seed_from_u64(1));
    let a = simulate(&s, &lib, &demands).unwrap();
    let b = simulate(&is, &lib, &demands).unwrap();
    assert_eq!(a.transcript, b.transcript);
    assert!(a.all_passed() && b.all_passed());
}

#[test]
fn measured_memory_matches_closed_form() {
    for topo in topologies(6) {
        let (c, r, t) = (topo.caches(), topo.access(), topo.t());
        let f = common_ideal_file_bits(c, r, t).unwrap();
        let n = 2;
        let lib = FileLibrary::from_seed(1, n, f).unwrap();
        for kind in SchemeKind::ALL {
            let cfg = SchemeConfig::new(topo, n, f, kind, 0).unwrap();
            let p = place(&cfg, &lib).unwrap();
            let exact = point::<Rational>(kind, c, r, t, n, FileSize::Exact(f)).unwrap();
            let ideal = point::<Rational>(kind, c, r, t, n, FileSize::Ideal).unwrap();
            assert_eq!(p.memory(), exact.memory, "{kind} C={c} r={r} t={t}");
            assert_eq!(exact, ideal, "{kind} C={c} r={r} t={t}");
            for cache in &p.caches {
                assert_eq!(cache.memory(f), exact.memory);
            }
        }
    }
}

#[test]
fn rate_and_memory_ordering() {
    for topo in topologies(9) {
        let (c, r, t) = (topo.caches(), topo.access(), topo.t());
        let pts: Vec<_> = SchemeKind::ALL.iter().map(|&k| point::<Rational>(k, c, r, t, 7, FileSize::Ideal).unwrap()).collect();
        let rate = Rational::new(binomial(c, t + r) as i128, binomial(c, t) as i128);
        assert!(pts.iter().all(|p| p.rate == rate));
        let [sp, p, s, is, lfr] = [0, 1, 2, 3, 4].map(|i| pts[i].memory);
        assert_eq!(p, sp);
        assert!(lfr <= p && lfr <= is && is <= s);
        if r >= 2 && t + r < c {
            assert!(is < s, "C={c} r={r} t={t}");
        }
    }
}

#[test]
fn single_access_degenerates() {
    for c in 2..=7 {
        for t in 0..c {
            let m = |k| point::<Rational>(k, c, 1, t, 5, FileSize::Ideal).unwrap();
            // keyed schemes all add (C-t)/C to the uncoded placement; rate is the MAN rate with K = C
            let keyed = Rational::new((5 * t + c - t) as i128, c as i128);
            for k in [SchemeKind::SpLfr, SchemeKind::PLfr, SchemeKind::SLfr, SchemeKind::IsLfr] {
                assert_eq!(m(k).memory, keyed, "{k} C={c} t={t}");
            }
            assert_eq!(m(SchemeKind::Lfr).rate, Rational::new((c - t) as i128, (t + 1) as i128));
        }
    }
    // 1-of-1 sharing stores each superposed key verbatim
    let topo = TopologySpec::new(4, 1, 1).unwrap();
    let cfg = SchemeConfig::new(topo, 4, 8, SchemeKind::SpLfr, 3).unwrap();
    let p = place(&cfg, &FileLibrary::from_seed(0, 4, 8).unwrap()).unwrap();
    for (cache, keys) in p.caches.iter().zip(&p.secrets.superposed_keys) {
        let KeyMaterial::Shares { field, shares } = &cache.keys else { panic!("shares expected") };
        assert_eq!(field.exponent(), 1);
        let stored: Vec<BitBlock> = shares.iter().map(|s| s.share.to_block(1)).collect();
        assert_eq!(&stored, keys);
    }
}

#[test]
fn shares_never_sit_in_enough_foreign_caches() {
    for topo in topologies(5) {
        let report = check_share_placement_secrecy(&topo).unwrap();
        assert!(report.passed(), "{topo:?}: {:?}", report.violations);
    }
}

#[test]
fn seeded_placement_is_reproducible() {
    let topo = TopologySpec::new(5, 3, 1).unwrap();
    let cfg = SchemeConfig::new(topo, 3, 17, SchemeKind::SpLfr, 99).unwrap();
    let lib = FileLibrary::from_seed(2, 3, 17).unwrap();
    let a = place_with(&cfg, &lib, &mut ServerRandomness::from_seed(99)).unwrap();
    let b = place(&cfg, &lib).unwrap();
    assert_eq!(a.caches, b.caches);
    assert_ne!(place(&SchemeConfig { seed: 100, ..cfg }, &lib).unwrap().caches, a.caches);
}
