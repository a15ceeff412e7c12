use serde::{Deserialize, Serialize};

use super::{energy_identity_residual, DiagnosticsError, EnergyReport};

/// Relative roundoff allowance on energy differences.
pub const ENERGY_ROUNDOFF: f64 = 1e-12;

/// An interval where the discrete energy law failed beyond its budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawViolation {
    pub step: usize,
    pub t: f64,
    /// `ΔE − (−Δt·(D₁+D₂)_mid + |r_n|Δt + roundoff)`; positive means violated.
    pub excess: f64,
}

/// Run-level summary written as `energy_audit.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    pub config_hash: String,
    pub grid: [usize; 3],
    pub intervals: usize,
    pub t_final: f64,
    pub max_abs_residual: f64,
    pub initial_dissipation_rate: f64,
    /// `max|r_n| / |dE/dt(0)|`; absent when the initial rate is zero.
    pub relative_residual: Option<f64>,
    pub residual_budget: f64,
    pub mass_drift_rel: f64,
    pub momentum_drift_abs: [f64; 3],
    /// Largest single-interval energy increase (zero if E never increased).
    pub max_energy_increase: f64,
    pub law_violations: Vec<LawViolation>,
    /// Filled by refinement studies: `(cells per axis, max|r_n|)` and observed orders.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refinement: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refinement_orders: Vec<f64>,
}

pub fn energy_audit(config_hash: &str, reports: &[EnergyReport]) -> Result<EnergyAudit, DiagnosticsError> {
    let series = energy_identity_residual(reports)?;
    let first = &reports[0];
    let last = &reports[reports.len() - 1];
    let mut violations = Vec::new();
    let mut budget = 0.0;
    let mut max_inc: f64 = 0.0;
    for (n, pair) in reports.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let dt = b.t - a.t;
        let r = series.residuals[n];
        budget += r.abs() * dt;
        let de = b.e_total - a.e_total;
        max_inc = max_inc.max(de);
        let dmid = 0.5 * (a.d1 + a.d2 + b.d1 + b.d2);
        let bound = -dt * dmid + r.abs() * dt + ENERGY_ROUNDOFF * a.e_total.abs();
        if de > bound {
            violations.push(LawViolation {
                step: n + 1,
                t: b.t,
                excess: de - bound,
            });
        }
    }
    let rel = |x: f64, y: f64| if y != 0.0 { (x - y).abs() / y.abs() } else { (x - y).abs() };
    Ok(EnergyAudit {
        config_hash: config_hash.to_string(),
        grid: first.grid,
        intervals: reports.len() - 1,
        t_final: last.t,
        max_abs_residual: series.max_abs,
        initial_dissipation_rate: series.initial_rate,
        relative_residual: (series.initial_rate > 0.0).then(|| series.max_abs / series.initial_rate),
        residual_budget: budget,
        mass_drift_rel: reports.iter().map(|r| rel(r.mass, first.mass)).fold(0.0, f64::max),
        momentum_drift_abs: std::array::from_fn(|a| {
            reports
                .iter()
                .map(|r| (r.momentum[a] - first.momentum[a]).abs())
                .fold(0.0, f64::max)
        }),
        max_energy_increase: max_inc,
        law_violations: violations,
        refinement: Vec::new(),
        refinement_orders: Vec::new(),
    })
}
