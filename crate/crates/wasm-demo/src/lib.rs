//! Browser bindings: map graphs, equivariant densities and the Markov λ₂ table.
//!
//! Each export returns a JSON string. The `*_json` functions are the plain Rust
//! versions used by the host tests.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use tentcocycle::bound_calculator::spectral_gap_bound;
use tentcocycle::cone_metric::ConeParams;
use tentcocycle::interval_maps::{make_paired_tent, PairedTentParams, SecondIterate};
use tentcocycle::markov_analysis::{exact_lambda2, invariant_density};
use tentcocycle::rds_cocycle::{make_driving, pullback_density, CocycleOptions, DrivingConfig};
use tentcocycle::step_functions::StepFunction;
use tentcocycle::{Error, Result};

fn points(pts: &[(f64, f64)]) -> Value {
    pts.iter().map(|(x, y)| json!([x, y])).collect()
}

/// Graphs of `T_{e1,e2}`, `T_{e3,e4}` and the second iterate `T_{e3,e4} ∘ T_{e1,e2}`.
pub fn map_graph_json(e1: f64, e2: f64, e3: f64, e4: f64) -> Result<String> {
    let now = PairedTentParams::new(e1, e2)?;
    let next = PairedTentParams::new(e3, e4)?;
    let first = make_paired_tent(&now)?;
    let second = make_paired_tent(&next)?;
    let s = SecondIterate::new(now, next)?;
    Ok(json!({
        "first": points(&first.graph(0)),
        "second": points(&second.graph(0)),
        "composite": points(&s.map.graph(0)),
        "branches": s.map.len(),
    })
    .to_string())
}

/// Pullback density at step `omega` for a driving given in the CLI's JSON
/// schema, with the explicit bound for the same driving when it exists.
pub fn equivariant_density_json(driving: &str, omega: i64, depth: usize) -> Result<String> {
    let cfg: DrivingConfig = serde_json::from_str(driving).map_err(|e| Error::Config(e.to_string()))?;
    let stream = make_driving(&cfg)?;
    let opts = CocycleOptions { max_cells: 1024, ..CocycleOptions::default() };
    let v = pullback_density(&stream, omega, depth.clamp(1, 200), &StepFunction::<f64>::one(), &opts)?;
    let dens = v.density.scale(&(1.0 / v.density.integral()));
    let bound = spectral_gap_bound(&stream, &ConeParams::default()).ok();
    Ok(json!({
        "breakpoints": dens.breakpoints(),
        "values": dens.values(),
        "phi": v.phi,
        "residual": v.residual,
        "cauchy_increment": v.cauchy_increment,
        "bound": bound,
    })
    .to_string())
}

/// `n, κₙ, rₙ, λ₂, λ₂/(−2κₙ)` for `n = from..=to`, with the invariant density of each.
pub fn markov_table_json(from: u32, to: u32) -> Result<String> {
    if from == 0 || from > to || to > 24 {
        return Err(Error::Config(format!("need 1 <= from <= to <= 24, got {from}..{to}")));
    }
    let rows = (from..=to)
        .map(|n| {
            let m = exact_lambda2(n)?;
            let h = invariant_density(&m);
            Ok(json!({
                "n": n,
                "kappa": m.kappa,
                "r_n": m.r_n,
                "lambda2": m.lambda2,
                "ratio": m.ratio_to_minus_2kappa,
                "charpoly_ok": m.charpoly_ok,
                "density": { "breakpoints": h.breakpoints(), "values": h.values() },
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Value::Array(rows).to_string())
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn map_graph(e1: f64, e2: f64, e3: f64, e4: f64) -> std::result::Result<String, JsError> {
    js(map_graph_json(e1, e2, e3, e4))
}

#[wasm_bindgen]
pub fn equivariant_density(driving: &str, omega: i32, depth: u32) -> std::result::Result<String, JsError> {
    js(equivariant_density_json(driving, i64::from(omega), depth as usize))
}

#[wasm_bindgen]
pub fn markov_table(from: u32, to: u32) -> std::result::Result<String, JsError> {
    js(markov_table_json(from, to))
}
