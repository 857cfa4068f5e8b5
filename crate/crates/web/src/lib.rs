//! Browser bindings: region plot, decomposition trace and termination probe.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use zeckvec::bridge::region_d;
use zeckvec::export::region_svg;
use zeckvec::normalize::{decompose_traced, probe_termination, NormalizationTrace, ProbeOutcome};
use zeckvec::recurrence::parse_coeffs;
use zeckvec::{CoefficientString, LatticeVector, Mode, RecurrenceVector};

/// Keeps the page responsive.
const REGION_CAP: u64 = 200_000;
const MAX_BUDGET: usize = 100_000;

fn recurrence(c: &str, mode: Mode) -> Result<RecurrenceVector, String> {
    let coeffs = parse_coeffs(c).map_err(|e| e.to_string())?;
    RecurrenceVector::new(coeffs, mode).map_err(|e| e.to_string())
}

fn steps_json(trace: &NormalizationTrace) -> Vec<Value> {
    trace
        .steps
        .iter()
        .map(|s| json!({"op": s.op, "pos": s.pos, "count": s.count, "string": s.string.to_string(), "G": s.g}))
        .collect()
}

pub fn regions_svg_inner(c: &str, n: usize) -> Result<String, String> {
    let c = recurrence(c, Mode::Strict)?;
    if c.dim() != 2 {
        return Err("the plot needs three coefficients".into());
    }
    let set = region_d(&c, n, REGION_CAP).map_err(|e| e.to_string())?;
    region_svg(&set, 2).map_err(|e| e.to_string())
}

pub fn decompose_inner(c: &str, v: &str) -> Result<Value, String> {
    let c = recurrence(c, Mode::Strict)?;
    let v: LatticeVector = v.parse().map_err(|e: zeckvec::Error| e.to_string())?;
    let (a, trace) = decompose_traced(&c, &v).map_err(|e| e.to_string())?;
    Ok(json!({"sr": a.to_string(), "steps": steps_json(&trace)}))
}

pub fn probe_inner(c: &str, a: &str, budget: usize) -> Result<Value, String> {
    let c = recurrence(c, Mode::Relaxed)?;
    let a: CoefficientString = a.parse().map_err(|e: zeckvec::Error| e.to_string())?;
    let report = probe_termination(&c, &a, budget.min(MAX_BUDGET)).map_err(|e| e.to_string())?;
    let outcome = match &report.outcome {
        ProbeOutcome::Terminated { result, steps } => {
            json!({"kind": "Terminated", "result": result.to_string(), "steps": steps})
        }
        ProbeOutcome::BudgetExceeded { reason, max_support, steps } => json!({
            "kind": "BudgetExceeded",
            "reason": format!("{reason:?}"),
            "max_support": max_support,
            "steps": steps,
        }),
    };
    let suffix = report.recurring_suffix.as_ref().map(|r| {
        json!({"suffix": r.suffix, "first_start": r.first_start, "repeat_start": r.repeat_start})
    });
    let mut steps = steps_json(&report.trace);
    steps.truncate(200);
    Ok(json!({"outcome": outcome, "recurring_suffix": suffix, "steps": steps}))
}

/// SVG scatter plot of D_n for a three-term recurrence.
#[wasm_bindgen]
pub fn regions_svg(c: &str, n: usize) -> Result<String, JsError> {
    regions_svg_inner(c, n).map_err(|e| JsError::new(&e))
}

/// JSON `{sr, steps}` for the satisfying representation of `v`.
#[wasm_bindgen]
pub fn decompose(c: &str, v: &str) -> Result<String, JsError> {
    decompose_inner(c, v).map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

/// JSON probe report; the budget is clamped to 100000 steps.
#[wasm_bindgen]
pub fn probe(c: &str, a: &str, budget: usize) -> Result<String, JsError> {
    probe_inner(c, a, budget).map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}
