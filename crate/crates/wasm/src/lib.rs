//! wasm-bindgen entry points for the browser demo in `www/`.
//!
//! Each call runs one scenario at the default parameters (with the given
//! overrides) and returns JSON: `{"series": {name: {columns, rows}},
//! "summary": {key: value}}`.

use std::f64::consts::PI;

use mbq::experiments::{self, Grid, ScanResult};
use mbq::model::SystemParams;
use serde_json::{json, Map, Value};
use wasm_bindgen::prelude::*;

fn to_json(r: &ScanResult) -> String {
    let series: Map<String, Value> = r
        .series
        .iter()
        .map(|s| {
            (
                s.name.clone(),
                json!({"columns": s.table.columns, "rows": s.table.rows}),
            )
        })
        .collect();
    let summary: Map<String, Value> = r
        .summary
        .iter()
        .map(|(k, v)| (k.clone(), if v.is_finite() { json!(v) } else { Value::Null }))
        .collect();
    json!({"series": series, "summary": summary}).to_string()
}

fn flux_grid(points: usize) -> mbq::Result<Vec<f64>> {
    Ok(Grid::new(0.0, 2.0 * PI, points)?.values())
}

fn params(lambda0: f64) -> mbq::Result<SystemParams> {
    let p = SystemParams::default().with_lambda0(lambda0);
    p.validate()?;
    Ok(p)
}

pub fn spectrum_json(lambda0: f64, points: usize) -> mbq::Result<String> {
    Ok(to_json(&experiments::run_spectrum(
        &params(lambda0)?,
        &flux_grid(points)?,
    )?))
}

pub fn current_json(lambda0: f64, temperature: f64, points: usize) -> mbq::Result<String> {
    let p = params(lambda0)?;
    let r = experiments::run_temperature_sweep(&p, &flux_grid(points)?, &[temperature])?;
    Ok(to_json(&r))
}

pub fn transient_json(lambda0: f64, t_max: f64, points: usize) -> mbq::Result<String> {
    let times = Grid::new(0.0, t_max, points)?.values();
    Ok(to_json(&experiments::run_readout_transient(&params(lambda0)?, &times)?))
}

pub fn coherence_json(lambda0: f64, t_max: f64, points: usize) -> mbq::Result<String> {
    let times = Grid::new(0.0, t_max, points)?.values();
    Ok(to_json(&experiments::run_dephasing(
        &SystemParams::default(),
        &times,
        &[lambda0],
    )?))
}

fn js(r: mbq::Result<String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// Energy levels of both parity blocks versus flux, full and effective model.
#[wasm_bindgen(js_name = spectrumVsFlux)]
pub fn spectrum_vs_flux(lambda0: f64, points: usize) -> Result<String, JsError> {
    js(spectrum_json(lambda0, points))
}

/// Block-resolved steady-state current through dot 2 versus flux.
#[wasm_bindgen(js_name = currentVsFlux)]
pub fn current_vs_flux(lambda0: f64, temperature: f64, points: usize) -> Result<String, JsError> {
    js(current_json(lambda0, temperature, points))
}

/// Read-out current after the box is prepared in its block ground state.
#[wasm_bindgen(js_name = readoutTransient)]
pub fn readout_transient(lambda0: f64, t_max: f64, points: usize) -> Result<String, JsError> {
    js(transient_json(lambda0, t_max, points))
}

/// |coherence| between the parity blocks during read-out.
#[wasm_bindgen(js_name = coherenceDecay)]
pub fn coherence_decay(lambda0: f64, t_max: f64, points: usize) -> Result<String, JsError> {
    js(coherence_json(lambda0, t_max, points))
}
