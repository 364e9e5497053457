//! Browser bindings. Each op takes plain values (a channel spec as JSON text
//! where needed) and returns a JSON string for the page to plot.

use mqchan::discrimination::{branch_pairs, fidelity_decay_curve, find_separating_state, DecayCurve, SearchConfig};
use mqchan::holevo::{optimize_ensemble, OptimizerConfig};
use mqchan::markov::ClassDecomposition;
use mqchan::typicality::{typical_set, SpectralMeasure};
use mqchan::{parse_channel, MemoryChannel};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Keeps a click from freezing the tab for minutes.
const MAX_BLOCK: usize = 4;
const MAX_PROBES: usize = 8;

fn channel(spec: &str) -> Result<MemoryChannel, String> {
    parse_channel(spec).map_err(|e| e.to_string())
}

fn json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

pub fn classes(spec: &str) -> Result<String, String> {
    let ch = channel(spec)?;
    let d: &ClassDecomposition = ch.decomposition();
    json(d)
}

#[derive(Serialize)]
struct CapacityPoint {
    n: usize,
    min_value: f64,
    per_class: Vec<f64>,
}

/// Optimized `min_C χ̄_C` for `n = 1..=n_max`.
pub fn capacity_curve(spec: &str, n_max: usize, restarts: usize, seed: u64) -> Result<String, String> {
    let ch = channel(spec)?;
    if n_max == 0 || n_max > MAX_BLOCK {
        return Err(format!("block length must be in 1..={MAX_BLOCK}"));
    }
    let config = OptimizerConfig { restarts: restarts.max(1), seed, ..OptimizerConfig::default() };
    let points = (1..=n_max)
        .map(|n| {
            let est = optimize_ensemble(&ch, n, &config).map_err(|e| e.to_string())?;
            Ok(CapacityPoint { n, min_value: est.min_value, per_class: est.per_class })
        })
        .collect::<Result<Vec<_>, String>>()?;
    json(&points)
}

#[derive(Serialize)]
struct PairCurve {
    label: String,
    case: &'static str,
    curve: Option<DecayCurve>,
    error: Option<String>,
}

/// Fidelity decay and its bound for every branch pair.
pub fn fidelity_decay(spec: &str, m_max: usize, alpha: f64, seed: u64) -> Result<String, String> {
    let ch = channel(spec)?;
    let m_max = m_max.clamp(1, MAX_PROBES);
    let search = SearchConfig { seed, ..SearchConfig::default() };
    let curves: Vec<PairCurve> = branch_pairs(&ch)
        .into_iter()
        .map(|pair| {
            let curve = find_separating_state(&ch, pair, &search)
                .and_then(|sep| fidelity_decay_curve(&ch, &sep, m_max, pair.case.needs_spacers(), alpha));
            let (curve, error) = match curve {
                Ok(c) => (Some(c), None),
                Err(e) => (None, Some(e.to_string())),
            };
            PairCurve { label: pair.label(), case: pair.case.as_str(), curve, error }
        })
        .collect();
    json(&curves)
}

#[derive(Serialize)]
struct CoveragePoint {
    m: usize,
    coverage: f64,
    log2_count: Option<f64>,
}

/// Probability of the window-`eps` typical set for `m = 1..=m_max`.
pub fn typical_coverage(probs: &[f64], eps: f64, m_max: usize) -> Result<String, String> {
    let mu = SpectralMeasure::new(probs.to_vec()).map_err(|e| e.to_string())?;
    let points = (1..=m_max.max(1))
        .map(|m| {
            let s = typical_set(&mu, m, eps).map_err(|e| e.to_string())?;
            let log2_count = s.log2_count.is_finite().then_some(s.log2_count);
            Ok(CoveragePoint { m, coverage: s.coverage, log2_count })
        })
        .collect::<Result<Vec<_>, String>>()?;
    json(&points)
}

#[wasm_bindgen(js_name = classes)]
pub fn classes_js(spec: &str) -> Result<String, JsError> {
    classes(spec).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = capacityCurve)]
pub fn capacity_curve_js(spec: &str, n_max: usize, restarts: usize, seed: u32) -> Result<String, JsError> {
    capacity_curve(spec, n_max, restarts, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fidelityDecay)]
pub fn fidelity_decay_js(spec: &str, m_max: usize, alpha: f64, seed: u32) -> Result<String, JsError> {
    fidelity_decay(spec, m_max, alpha, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = typicalCoverage)]
pub fn typical_coverage_js(probs: Vec<f64>, eps: f64, m_max: usize) -> Result<String, JsError> {
    typical_coverage(&probs, eps, m_max).map_err(|e| JsError::new(&e))
}
