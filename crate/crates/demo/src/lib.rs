//! Browser demo. Each export takes and returns JSON strings; the inner
//! functions are plain Rust so they can be tested natively.

use convex_toric::geometry::Polytope;
use convex_toric::mixedvol::{self, CheckStatus};
use convex_toric::momentum::{self, ProjectiveVector, TorusWeightSystem};
use convex_toric::rational;
use convex_toric::samplers;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use wasm_bindgen::prelude::*;

#[derive(Debug, Deserialize)]
pub struct SystemInput {
    pub weights: TorusWeightSystem,
    pub vector: ProjectiveVector,
}

#[derive(Debug, Deserialize)]
pub struct BodiesInput {
    pub bodies: Vec<Polytope>,
}

#[derive(Debug, Deserialize)]
pub struct PairInput {
    pub y0: Polytope,
    pub y1: Polytope,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitView {
    pub rank: usize,
    /// Polytope vertices, in boundary order when the rank is 2.
    pub outline: Vec<Vec<f64>>,
    pub momenta: Vec<Vec<f64>>,
    /// Samples passing the relative-interior test.
    pub inside: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub index: Vec<u32>,
    pub value: String,
    pub approx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MidpointView {
    pub triple: String,
    pub status: CheckStatus,
    pub margin: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableView {
    pub n: usize,
    pub k: usize,
    pub entries: Vec<Entry>,
    pub midpoints: Vec<MidpointView>,
    pub outlines: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileView {
    pub t: Vec<f64>,
    pub volume: Vec<String>,
    pub log_volume: Vec<Option<f64>>,
    pub statuses: Vec<CheckStatus>,
    pub all_hold: bool,
}

/// Vertices sorted by angle about their centroid; other dimensions keep
/// the canonical order.
pub fn outline(p: &Polytope) -> Vec<Vec<f64>> {
    let mut v = p.vertices_f64();
    if p.dim() == 2 && v.len() > 2 {
        let c: Vec<f64> = (0..2).map(|d| v.iter().map(|x| x[d]).sum::<f64>() / v.len() as f64).collect();
        v.sort_by(|a, b| {
            let ta = (a[1] - c[1]).atan2(a[0] - c[0]);
            let tb = (b[1] - c[1]).atan2(b[0] - c[0]);
            ta.total_cmp(&tb)
        });
    }
    v
}

pub fn orbit_samples(system: &str, samples: usize, seed: u64) -> Result<OrbitView, String> {
    let SystemInput { weights, vector } = serde_json::from_str(system).map_err(|e| e.to_string())?;
    let p = momentum::moment_polytope(&weights, &vector).map_err(|e| e.to_string())?;
    let mut rng = samplers::seeded(seed);
    let pts: Vec<(Vec<f64>, Vec<f64>)> = (0..samples)
        .map(|_| {
            (
                samplers::random_real_vector(&mut rng, weights.rank(), PI),
                samplers::random_real_vector(&mut rng, weights.rank(), 1.5),
            )
        })
        .collect();
    let momenta = momentum::orbit_momenta(&weights, &vector, &pts).map_err(|e| e.to_string())?;
    let inside = momenta
        .iter()
        .filter(|m| p.num_vertices() == 1 || p.relative_interior_margin(m).is_interior(0.0))
        .count();
    Ok(OrbitView {
        rank: weights.rank(),
        outline: outline(&p),
        momenta,
        inside,
    })
}

pub fn table(bodies: &str) -> Result<TableView, String> {
    let BodiesInput { bodies } = serde_json::from_str(bodies).map_err(|e| e.to_string())?;
    let t = mixedvol::mixed_volumes(&bodies).map_err(|e| e.to_string())?;
    let entries = t
        .entries()
        .iter()
        .map(|(i, v)| Entry {
            index: i.entries().to_vec(),
            value: rational::format_rational(v),
            approx: rational::to_f64(v),
        })
        .collect();
    let midpoints = mixedvol::af_midpoint_checks(&t)
        .into_iter()
        .map(|c| MidpointView {
            triple: format!("{} {} {}", c.minus, c.mid, c.plus),
            status: c.status,
            margin: rational::format_rational(&c.margin),
        })
        .collect();
    Ok(TableView {
        n: t.n(),
        k: t.k(),
        entries,
        midpoints,
        outlines: bodies.iter().map(outline).collect(),
    })
}

pub fn profile(pair: &str, steps: usize) -> Result<ProfileView, String> {
    let PairInput { y0, y1 } = serde_json::from_str(pair).map_err(|e| e.to_string())?;
    let r = mixedvol::minkowski_logconcavity(&y0, &y1, steps).map_err(|e| e.to_string())?;
    Ok(ProfileView {
        t: r.profile.iter().map(|p| rational::to_f64(&p.t)).collect(),
        volume: r.profile.iter().map(|p| rational::format_rational(&p.volume)).collect(),
        log_volume: r.profile.iter().map(|p| p.log_volume).collect(),
        statuses: r.checks.iter().map(|c| c.status).collect(),
        all_hold: r.all_hold,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

/// Momentum values of `samples` random points of the complex torus orbit.
#[wasm_bindgen(js_name = orbitSamples)]
pub fn orbit_samples_js(system: &str, samples: u32, seed: u32) -> Result<String, JsValue> {
    to_js(orbit_samples(system, samples as usize, seed as u64))
}

/// Exact mixed-volume table with its Alexandrov-Fenchel midpoint checks.
#[wasm_bindgen(js_name = mixedVolumeTable)]
pub fn table_js(bodies: &str) -> Result<String, JsValue> {
    to_js(table(bodies))
}

/// Volume profile of `(1 - t) Y0 + t Y1`.
#[wasm_bindgen(js_name = logConcavityProfile)]
pub fn profile_js(pair: &str, steps: u32) -> Result<String, JsValue> {
    to_js(profile(pair, steps as usize))
}
