//! Serialization of regions, traces and statistics.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::analytics::{sig6, GaussianReport, SampleMode, SummandStats};
use crate::bridge::RegionSet;
use crate::error::{Error, Result};
use crate::normalize::{NormalizationTrace, Op};

/// `x1,…,x{k−1},n_first,sr_string`, one row per member in enumeration order.
pub fn region_csv(set: &RegionSet, dim: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    header.push("n_first".into());
    header.push("sr_string".into());
    w.write_record(&header).map_err(csv_err)?;
    for m in &set.members {
        let mut row: Vec<String> = m.point.0.iter().map(|x| x.to_string()).collect();
        row.push(m.n_first().to_string());
        row.push(m.sr.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#393b79", "#637939",
];

/// Planar scatter of a region, one colour per layer R_i, origin in black.
pub fn region_svg(set: &RegionSet, dim: usize) -> Result<String> {
    if dim != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: dim,
        });
    }
    const CELL: i64 = 8;
    const MARGIN: i64 = 16;
    let pts: Vec<(i64, i64, usize)> = set
        .members
        .iter()
        .map(|m| {
            let x = i64::try_from(&m.point.0[0]).map_err(|_| Error::Overflow)?;
            let y = i64::try_from(&m.point.0[1]).map_err(|_| Error::Overflow)?;
            Ok((x, y, m.n_first()))
        })
        .collect::<Result<_>>()?;
    let (xmin, xmax) = bounds(pts.iter().map(|p| p.0));
    let (ymin, ymax) = bounds(pts.iter().map(|p| p.1));
    let width = (xmax - xmin + 1) * CELL + 2 * MARGIN;
    let height = (ymax - ymin + 1) * CELL + 2 * MARGIN + 16 * (set.n as i64 + 1);
    let px = |x: i64| MARGIN + (x - xmin) * CELL;
    let py = |y: i64| MARGIN + (ymax - y) * CELL;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    out.push_str(&format!(
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    for &(x, y, layer) in &pts {
        if layer == 0 {
            continue;
        }
        out.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>\n",
            px(x) + CELL / 2,
            py(y) + CELL / 2,
            CELL / 2 - 1,
            PALETTE[(layer - 1) % PALETTE.len()]
        ));
    }
    if pts.iter().any(|p| p.2 == 0) {
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"black\"/>\n",
            px(0),
            py(0)
        ));
    }
    let legend_y = MARGIN + (ymax - ymin + 1) * CELL + 12;
    for layer in 1..=set.n {
        let y = legend_y + 16 * (layer as i64 - 1);
        out.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\"/><text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\">R{layer}</text>\n",
            MARGIN + 4,
            y,
            PALETTE[(layer - 1) % PALETTE.len()],
            MARGIN + 14,
            y + 4
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn bounds(it: impl Iterator<Item = i64>) -> (i64, i64) {
    it.fold((0, 0), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

#[derive(Serialize)]
struct TraceLine<'a> {
    op: Op,
    pos: usize,
    count: u64,
    string: String,
    #[serde(rename = "G")]
    g: u64,
    #[serde(skip)]
    _p: std::marker::PhantomData<&'a ()>,
}

/// One JSON object per retained step.
pub fn trace_jsonl(trace: &NormalizationTrace) -> String {
    let mut out = String::new();
    for s in &trace.steps {
        let line = TraceLine {
            op: s.op,
            pos: s.pos,
            count: s.count,
            string: s.string.to_string(),
            g: s.g,
            _p: std::marker::PhantomData,
        };
        out.push_str(&serde_json::to_string(&line).expect("trace line serializes"));
        out.push('\n');
    }
    out
}

pub fn stats_json(s: &SummandStats) -> Value {
    let (mode, size, seed) = match s.mode {
        SampleMode::Exact => ("exact", s.total, Value::Null),
        SampleMode::Sampled { size, seed } => ("sampled", size, json!(seed)),
    };
    let histogram: BTreeMap<String, u64> =
        s.histogram.iter().map(|(k, f)| (k.to_string(), *f)).collect();
    json!({
        "c": s.c,
        "n": s.n,
        "mode": mode,
        "size": size,
        "seed": seed,
        "estimator": "population",
        "mean": sig6(s.mean),
        "variance": sig6(s.variance),
        "skewness": sig6(s.skewness),
        "excess_kurtosis": sig6(s.excess_kurtosis),
        "histogram": histogram,
    })
}

pub fn diagnostics_json(stats: &[SummandStats], report: &GaussianReport) -> Value {
    let fit = |f: &crate::analytics::LinearFit| {
        json!({"slope": sig6(f.slope), "intercept": sig6(f.intercept), "r_squared": sig6(f.r_squared)})
    };
    let mut v = json!({
        "series": stats.iter().map(stats_json).collect::<Vec<_>>(),
        "mean_fit": fit(&report.mean_fit),
        "variance_fit": fit(&report.variance_fit),
    });
    if let Some(l) = report.lekkerkerker {
        v["lekkerkerker"] = json!({
            "fitted_slope": sig6(l.fitted_slope),
            "target": sig6(l.target),
            "deviation": sig6(l.deviation),
        });
    }
    v
}

/// `n,mean,variance` rows for plotting.
pub fn stats_csv(stats: &[SummandStats]) -> String {
    let mut out = String::from("n,mean,variance\n");
    for s in stats {
        out.push_str(&format!("{},{},{}\n", s.n, sig6(s.mean), sig6(s.variance)));
    }
    out
}
