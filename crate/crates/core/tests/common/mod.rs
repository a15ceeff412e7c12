#![allow(dead_code)]

use nematic_core::constitutive::MaterialParams;
use nematic_core::dynamics::{RunConfig, State};
use nematic_core::fields::Field;

pub fn shipped(name: &str) -> String {
    let path = format!("{}/../../configs/{name}.json", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn config(name: &str, overrides: &[String]) -> RunConfig {
    RunConfig::from_json_with_overrides(&shipped(name), overrides).unwrap()
}

pub fn ov(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn params_override(p: &MaterialParams) -> String {
    format!("params={}", serde_json::to_string(p).unwrap())
}

/// Largest relative difference over all fields, normalised by each field's max.
pub fn max_rel_diff(a: &State, b: &State) -> f64 {
    let scalar = |x: &[f64], y: &[f64]| {
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs())) / scale
    };
    let flat = |v: &[[f64; 3]]| v.iter().flat_map(|c| c.iter().copied()).collect::<Vec<f64>>();
    [
        scalar(a.rho.values(), b.rho.values()),
        scalar(&flat(a.mom.values()), &flat(b.mom.values())),
        scalar(&flat(a.d.values()), &flat(b.d.values())),
        scalar(&flat(a.omega.values()), &flat(b.omega.values())),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}
