use std::time::Instant;

use maclfr::analysis::fraction_string;
use maclfr::library_model::{DemandVector, FileLibrary};
use maclfr::schemes::SchemeConfig;
use maclfr::topology::{CacheSubset, TopologySpec};
use maclfr::verify::{
    check_correctness, check_privacy_exact, check_security_exact, check_share_placement_secrecy, demand_tuple,
    DemandBattery, TinyInstance,
};
use maclfr::{Error, SchemeKind};
use serde_json::{json, Value};

use crate::demands::{self, DemandSource};
use crate::{json_bytes, required, write_file, CliError, CliResult, Suite, VerifyArgs};

/// Number of random tuples when correctness runs with `--demands random`.
const SAMPLED_TUPLES: usize = 100;

struct Context<'a> {
    args: &'a VerifyArgs,
    topo: TopologySpec,
    n_files: usize,
    file_bits: usize,
    kinds: Vec<SchemeKind>,
}

fn status(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn timed<T>(label: &str, f: impl FnOnce() -> CliResult<T>) -> CliResult<T> {
    let start = Instant::now();
    let out = f()?;
    say!("  {label} ({:.2?})", start.elapsed());
    Ok(out)
}

fn correctness(ctx: &Context) -> CliResult<Vec<Value>> {
    let battery = match ctx.args.demands.as_deref().map(DemandSource::parse) {
        None | Some(DemandSource::Exhaustive) => DemandBattery::Exhaustive,
        Some(DemandSource::Random) => DemandBattery::Sampled { count: SAMPLED_TUPLES, seed: ctx.args.seed },
        Some(DemandSource::File(path)) => DemandBattery::Fixed(vec![demands::read_demand_file(&path, &ctx.topo, ctx.n_files)?]),
    };
    let mut checks = Vec::new();
    for &kind in &ctx.kinds {
        let (mut cases, mut user_checks, mut failures) = (0, 0, Vec::new());
        timed(&format!("correctness {kind}"), || {
            for seed in ctx.args.seed..ctx.args.seed + ctx.args.seeds {
                let cfg = SchemeConfig::new(ctx.topo, ctx.n_files, ctx.file_bits, kind, seed)?;
                let lib = FileLibrary::from_seed(seed, ctx.n_files, ctx.file_bits)?;
                let report = check_correctness(&cfg, &lib, &battery, ctx.args.cap)?;
                cases += report.cases;
                user_checks += report.user_checks;
                failures.extend(report.failures.into_iter().map(|f| json!({
                    "seed": seed,
                    "case": f.case,
                    "user": f.user,
                    "detail": f.detail,
                })));
            }
            Ok(())
        })?;
        checks.push(json!({
            "suite": "correctness",
            "scheme": kind,
            "seeds": ctx.args.seeds,
            "cases": cases,
            "user_checks": user_checks,
            "failures": failures,
            "status": status(failures.is_empty() && user_checks > 0),
        }));
    }
    Ok(checks)
}

fn instance(ctx: &Context) -> CliResult<TinyInstance> {
    let mut inst = TinyInstance::new(ctx.topo.caches(), ctx.topo.access(), ctx.topo.t(), ctx.n_files)?;
    inst.cap = ctx.args.cap;
    inst.jobs = ctx.args.jobs.max(1);
    Ok(inst)
}

fn security_batteries(ctx: &Context) -> CliResult<Vec<Vec<DemandVector>>> {
    Ok(match ctx.args.demands.as_deref().map(DemandSource::parse) {
        None | Some(DemandSource::Random) => vec![demands::random(&ctx.topo, ctx.n_files, ctx.args.seed)],
        Some(DemandSource::File(path)) => vec![demands::read_demand_file(&path, &ctx.topo, ctx.n_files)?],
        Some(DemandSource::Exhaustive) => {
            let bits = ctx.n_files * ctx.topo.user_count();
            let total = 1u128.checked_shl(bits as u32).filter(|&n| bits < 128 && n <= ctx.args.cap);
            let total = total.ok_or(Error::ResourceCap { states: 1u128.checked_shl(bits as u32).unwrap_or(u128::MAX), cap: ctx.args.cap })?;
            (0..total).map(|i| demand_tuple(&ctx.topo, ctx.n_files, i)).collect()
        }
    })
}

fn security(ctx: &Context) -> CliResult<Vec<Value>> {
    let inst = instance(ctx)?;
    let batteries = security_batteries(ctx)?;
    let mut checks = Vec::new();
    for &kind in &ctx.kinds {
        let (mut states, mut all_zero, mut worst_bits) = (0u128, true, 0f64);
        timed(&format!("security {kind}"), || {
            for demands in &batteries {
                let report = check_security_exact(&inst, kind, demands)?;
                states = report.states;
                all_zero &= report.mutual_information.exactly_zero;
                worst_bits = worst_bits.max(report.mutual_information.bits);
            }
            Ok(())
        })?;
        let expect_zero = kind.is_secure();
        let mi = match all_zero {
            true => json!("0/1"),
            false => json!(worst_bits),
        };
        checks.push(json!({
            "suite": "security",
            "scheme": kind,
            "file_bits": inst.file_bits(),
            "demand_tuples": batteries.len(),
            "states_per_tuple": states.to_string(),
            "expect": if expect_zero { "zero" } else { "positive" },
            "mutual_information_exactly_zero": all_zero,
            "mutual_information_bits": mi,
            "status": status(all_zero == expect_zero && (all_zero || worst_bits > 0.0)),
        }));
    }
    Ok(checks)
}

fn parse_observers(s: &str) -> CliResult<Vec<CacheSubset>> {
    s.split(',')
        .map(|item| {
            let members = item
                .split('-')
                .map(|m| m.trim().parse::<usize>().map_err(|_| CliError::BadArguments(format!("bad observer {item:?}"))))
                .collect::<CliResult<Vec<_>>>()?;
            Ok(CacheSubset::new(&members)?)
        })
        .collect()
}

fn privacy(ctx: &Context) -> CliResult<Vec<Value>> {
    let inst = instance(ctx)?;
    let observers = ctx.args.observers.as_deref().map(parse_observers).transpose()?;
    let mut checks = Vec::new();
    for &kind in &ctx.kinds {
        let report = timed(&format!("privacy {kind}"), || Ok(check_privacy_exact(&inst, kind, observers.as_deref())?))?;
        let worst = report.worst();
        let expect_zero = kind.is_private();
        checks.push(json!({
            "suite": "privacy",
            "scheme": kind,
            "file_bits": inst.file_bits(),
            "states": report.states.to_string(),
            "expect": if expect_zero { "zero" } else { "positive" },
            "observers": report.max_distance.iter().map(|(g, d)| json!({
                "user": g,
                "distance": fraction_string(d),
            })).collect::<Vec<_>>(),
            "worst_distance": fraction_string(&worst),
            "status": status((worst == 0.into()) == expect_zero),
        }));
    }
    Ok(checks)
}

fn shares(ctx: &Context) -> CliResult<Vec<Value>> {
    let report = timed("share placement", || Ok(check_share_placement_secrecy(&ctx.topo)?))?;
    Ok(vec![json!({
        "suite": "shares",
        "keys_checked": report.keys_checked,
        "violations": report.violations,
        "status": status(report.passed()),
    })])
}

pub fn run(args: &VerifyArgs) -> CliResult<()> {
    let topo = TopologySpec::new(
        required(args.topology.caches, "C")?,
        required(args.topology.access, "r")?,
        required(args.topology.t, "t")?,
    )?;
    let n_files = required(args.topology.n_files, "N")?;
    if args.seeds == 0 {
        return Err(CliError::BadArguments("--seeds must be at least 1".into()));
    }
    let ctx = Context {
        args,
        topo,
        n_files,
        file_bits: args.topology.file_bits.unwrap_or_else(|| topo.subpacketization()),
        kinds: args.scheme.map_or_else(|| SchemeKind::ALL.to_vec(), |k| vec![k]),
    };
    say!("verify C={} r={} t={} N={}", topo.caches(), topo.access(), topo.t(), n_files);

    let mut checks = Vec::new();
    let all = args.suite == Suite::All;
    if all || args.suite == Suite::Correctness {
        checks.extend(correctness(&ctx)?);
    }
    if all || args.suite == Suite::Security {
        checks.extend(security(&ctx)?);
    }
    if all || args.suite == Suite::Privacy {
        checks.extend(privacy(&ctx)?);
    }
    if all || args.suite == Suite::Shares {
        checks.extend(shares(&ctx)?);
    }

    let failed: Vec<String> = checks
        .iter()
        .filter(|c| c["status"] != "pass")
        .map(|c| format!("{} {}", c["suite"].as_str().unwrap_or("?"), c["scheme"].as_str().unwrap_or("")).trim().to_string())
        .collect();
    for c in &checks {
        say!("{} {} {}", c["status"].as_str().unwrap_or("?").to_uppercase(), c["suite"].as_str().unwrap_or("?"), c["scheme"].as_str().unwrap_or(""));
    }
    let report = json!({
        "instance": {
            "C": topo.caches(),
            "r": topo.access(),
            "t": topo.t(),
            "N": n_files,
            "F": ctx.file_bits,
            "seed": args.seed,
            "cap": args.cap.to_string(),
        },
        "checks": checks,
        "status": status(failed.is_empty()),
    });
    if let Some(dir) = &args.out {
        write_file(&dir.join("report.json"), &json_bytes(&report))?;
    }
    match failed.is_empty() {
        true => Ok(()),
        false => Err(CliError::Failed(format!("failed checks: {}", failed.join(", ")))),
    }
}
