use maclfr::analysis::{curve, curves_csv, fraction_string, FileSize, MemoryRatePoint};
use maclfr::{ExactCurve, Rational, SchemeKind};
use serde_json::{json, Value};

use crate::{json_bytes, required, write_file, CliResult, CurveArgs};

/// `(C, r, N, schemes)` of each figure preset.
pub fn figure(k: u8) -> (usize, usize, usize, Vec<SchemeKind>) {
    match k {
        2 => (15, 1, 15, SchemeKind::ALL.to_vec()),
        3 => (15, 2, 105, SchemeKind::ALL.to_vec()),
        4 => (15, 3, 455, SchemeKind::ALL.to_vec()),
        5 => (15, 2, 105, vec![SchemeKind::SLfr, SchemeKind::IsLfr]),
        _ => unreachable!("figure index is range-checked by the parser"),
    }
}

fn point_json(p: &MemoryRatePoint<Rational>) -> Value {
    json!({ "t": p.tag, "M": fraction_string(&p.memory), "R": fraction_string(&p.rate) })
}

pub fn curves_json(curves: &[ExactCurve], size: FileSize) -> Value {
    let file_size = match size {
        FileSize::Exact(f) => json!(f),
        FileSize::Ideal => json!("ideal"),
    };
    json!({
        "file_size": file_size,
        "curves": curves.iter().map(|c| json!({
            "scheme": c.kind,
            "C": c.caches,
            "r": c.access,
            "N": c.n_files,
            "points": c.points.iter().map(point_json).collect::<Vec<_>>(),
            "envelope": c.envelope.iter().map(point_json).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

pub fn run(args: &CurveArgs) -> CliResult<()> {
    let (c, r, n, kinds) = match args.figure {
        Some(k) => figure(k),
        None => {
            let kinds = args.scheme.map_or_else(|| SchemeKind::ALL.to_vec(), |k| vec![k]);
            (required(args.topology.caches, "C")?, required(args.topology.access, "r")?, required(args.topology.n_files, "N")?, kinds)
        }
    };
    let size = args.topology.file_bits.map_or(FileSize::Ideal, FileSize::Exact);
    let curves = kinds.iter().map(|&k| curve::<Rational>(k, c, r, n, size)).collect::<maclfr::Result<Vec<_>>>()?;
    let csv = curves_csv(&curves);
    match &args.out {
        Some(dir) => {
            write_file(&dir.join("curves.csv"), csv.as_bytes())?;
            write_file(&dir.join("curves.json"), &json_bytes(&curves_json(&curves, size)))?;
            say!("wrote {} curves for C={c} r={r} N={n} to {}", curves.len(), dir.display());
        }
        None => say!("{}", csv.trim_end()),
    }
    Ok(())
}
