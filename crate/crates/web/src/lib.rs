//! wasm-bindgen entry points for the static demo in `www/`.
//!
//! Each export takes plain strings and numbers and returns a JSON string.
//! The `*_report` functions do the work and are callable natively.

use scfred_core::degen::{morse_chain, validate_structure, DegenerationStructure};
use scfred_core::scspace::{make_scale_space, DomainSpec, GridFunction, SpaceSpec};
use scfred_core::sftsym::{normalize, Orbit, OrbitTable, Parity, Word};
use scfred_core::splicing::{beta, total_gluing_determinant, FieldPair, GluingProfile, SplicingKernel, Variant};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Glues `1 + tanh` and `3 + tanh` at parameter `r` and tabulates
/// `β`, the glued and anti-glued fields and the determinant.
pub fn glue_report(profile: &str, r: f64, half_length: f64, step: f64) -> Result<Value, String> {
    let profile = GluingProfile::from_name(profile).ok_or_else(|| format!("unknown profile `{profile}`"))?;
    let sp = make_scale_space(&SpaceSpec {
        domain: DomainSpec::Line { half_length, step },
        base_order: 0,
        weights: vec![0.0],
        target_dim: 1,
        weight_bound: None,
    })
    .map_err(|e| e.to_string())?;
    let kernel = SplicingKernel::new(profile.clone(), sp.clone(), Variant::MorseLine);
    let length = profile.length(r).map_err(|e| e.to_string())?;
    let h = GridFunction::from_fn(&sp, 0, |s, _, o| o[0] = 1.0 + s.tanh());
    let k = GridFunction::from_fn(&sp, 0, |s, _, o| o[0] = 3.0 + s.tanh());
    let (g, a) = kernel.total_glue(&h, &k, length).map_err(|e| e.to_string())?;
    let back = kernel.total_unglue(&g, &a, length).map_err(|e| e.to_string())?;
    let err = back.sub(&FieldPair::new(h, k)).map_err(|e| e.to_string())?.sup_norm();
    let shift = kernel.shift_mode(length).map_err(|e| e.to_string())?.length();
    let ext = g.space();
    let s: Vec<f64> = (0..ext.s_nodes()).map(|p| ext.s_at(p)).collect();
    let b: Vec<f64> = s.iter().map(|&x| beta(x - shift / 2.0)).collect();
    let det: Vec<f64> = b.iter().map(|&x| total_gluing_determinant(x)).collect();
    Ok(json!({
        "profile": profile.name(),
        "r": r,
        "length": length,
        "shift": shift,
        "roundtrip_error": err,
        "min_determinant": det.iter().cloned().fold(f64::INFINITY, f64::min),
        "s": s,
        "beta": b,
        "glued": g.values(),
        "antiglued": a.values(),
        "determinant": det,
    }))
}

/// Normal form of `word`. An empty `orbits` string makes every orbit in
/// the word simply covered and even.
pub fn normalize_report(word: &str, orbits: &str) -> Result<Value, String> {
    let w = Word::parse(word).map_err(|e| e.to_string())?;
    let table = if orbits.trim().is_empty() {
        let mut names: Vec<&str> = w.letters.iter().map(|l| l.orbit.as_str()).collect();
        names.sort();
        names.dedup();
        OrbitTable::new(names.into_iter().map(|n| Orbit::new(n, 1, Parity::Even)).collect())
    } else {
        OrbitTable::from_json(orbits)
    }
    .map_err(|e| e.to_string())?;
    let nf = normalize(&table, &w).map_err(|e| e.to_string())?;
    Ok(json!({ "display": nf.to_string(), "terms": nf.to_json() }))
}

pub fn validate_report(structure: &str) -> Result<Value, String> {
    let s = DegenerationStructure::from_json(structure).map_err(|e| e.to_string())?;
    Ok(validate_structure(&s).to_json())
}

pub fn chain_structure(points: usize) -> Value {
    morse_chain(points.max(2)).to_json()
}

fn export(v: Result<Value, String>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn glue(profile: &str, r: f64, half_length: f64, step: f64) -> Result<String, JsError> {
    export(glue_report(profile, r, half_length, step))
}

#[wasm_bindgen]
pub fn normalize_word(word: &str, orbits: &str) -> Result<String, JsError> {
    export(normalize_report(word, orbits))
}

#[wasm_bindgen]
pub fn validate(structure: &str) -> Result<String, JsError> {
    export(validate_report(structure))
}

#[wasm_bindgen]
pub fn chain(points: usize) -> String {
    serde_json::to_string_pretty(&chain_structure(points)).expect("json")
}
