use maclfr::analysis::fraction_string;
use maclfr::library_model::{DemandVector, FileLibrary};
use maclfr::schemes::container::{to_bytes, to_json, TranscriptFile};
use maclfr::schemes::{broadcast_library, decode_all, simulate, SchemeConfig, UserOutcome};
use maclfr::topology::TopologySpec;
use maclfr::verify::{check_correctness, DemandBattery};
use maclfr::Rational;
use serde_json::json;

use crate::demands::{self, DemandSource};
use crate::{json_bytes, required, write_file, CliError, CliResult, SimulateArgs};

/// The configuration and its demands; `None` means every demand tuple.
fn resolve(args: &SimulateArgs) -> CliResult<(SchemeConfig, Option<Vec<DemandVector>>)> {
    if let Some(p) = args.preset {
        let preset = demands::preset(p);
        let f = args.topology.file_bits.unwrap_or(preset.file_bits);
        let cfg = SchemeConfig::new(preset.topology, preset.n_files, f, args.scheme, args.seed)?;
        return Ok((cfg, Some(preset.demands)));
    }
    let topo = TopologySpec::new(
        required(args.topology.caches, "C")?,
        required(args.topology.access, "r")?,
        required(args.topology.t, "t")?,
    )?;
    let n = required(args.topology.n_files, "N")?;
    let f = args.topology.file_bits.unwrap_or_else(|| topo.subpacketization());
    let cfg = SchemeConfig::new(topo, n, f, args.scheme, args.seed)?;
    let demands = match DemandSource::parse(&args.demands) {
        DemandSource::File(path) => Some(demands::read_demand_file(&path, &topo, n)?),
        DemandSource::Random => Some(demands::random(&topo, n, args.seed)),
        DemandSource::Exhaustive => None,
    };
    Ok((cfg, demands))
}

fn outcome_line(o: &UserOutcome) -> String {
    match (&o.decoded, o.passed()) {
        (_, true) => format!("  user {}: ok", o.user),
        (Ok(d), false) => format!("  user {}: FAIL decoded {} expected {}", o.user, d.to_bit_string(), o.expected.to_bit_string()),
        (Err(e), false) => format!("  user {}: FAIL {e}", o.user),
    }
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let (cfg, demands) = resolve(args)?;
    let lib = FileLibrary::from_seed(cfg.seed, cfg.n_files, cfg.file_bits)?;
    let topo = cfg.topology;
    say!(
        "{} C={} r={} t={} N={} F={} seed={}",
        cfg.kind,
        topo.caches(),
        topo.access(),
        topo.t(),
        cfg.n_files,
        cfg.file_bits,
        cfg.seed
    );

    let Some(demands) = demands else {
        let report = check_correctness(&cfg, &lib, &DemandBattery::Exhaustive, args.cap)?;
        say!("{} demand tuples, {} user decodes, {} failures", report.cases, report.user_checks, report.failures.len());
        for f in report.failures.iter().take(20) {
            say!("  case {} user {}: {}", f.case, f.user, f.detail);
        }
        return match report.passed() {
            true => Ok(()),
            false => Err(CliError::Failed(format!("{} decode failures", report.failures.len()))),
        };
    };

    let (caches, transcript, outcomes, memory) = match args.library_broadcast {
        true => {
            let x = broadcast_library(&cfg, &lib)?;
            let outcomes = decode_all(&cfg, &lib, &[], &x, &demands)?;
            (Vec::new(), x, outcomes, Rational::from_integer(0))
        }
        false => {
            let sim = simulate(&cfg, &lib, &demands)?;
            let memory = sim.memory();
            (sim.placement.caches, sim.transcript, sim.outcomes, memory)
        }
    };
    let rate = transcript.rate(cfg.file_bits);
    let passed = outcomes.iter().filter(|o| o.passed()).count();
    say!("M = {}  R = {}", fraction_string(&memory), fraction_string(&rate));
    say!("{passed}/{} users decode", outcomes.len());
    for o in &outcomes {
        say!("{}", outcome_line(o));
    }

    if let Some(dir) = &args.out {
        let file = TranscriptFile { config: cfg, caches, delivery: transcript };
        write_file(&dir.join("transcript.bin"), &to_bytes(&file))?;
        write_file(&dir.join("transcript.json"), &json_bytes(&to_json(&file)))?;
        let summary = json!({
            "scheme": cfg.kind,
            "C": topo.caches(),
            "r": topo.access(),
            "t": topo.t(),
            "N": cfg.n_files,
            "F": cfg.file_bits,
            "seed": cfg.seed,
            "M": fraction_string(&memory),
            "R": fraction_string(&rate),
            "users": outcomes.iter().map(|o| json!({
                "user": o.user,
                "passed": o.passed(),
                "error": o.decoded.as_ref().err(),
            })).collect::<Vec<_>>(),
        });
        write_file(&dir.join("summary.json"), &json_bytes(&summary))?;
    }
    match passed == outcomes.len() {
        true => Ok(()),
        false => Err(CliError::Failed(format!("{} of {} users failed to decode", outcomes.len() - passed, outcomes.len()))),
    }
}
