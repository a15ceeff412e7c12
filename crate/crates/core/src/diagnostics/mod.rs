//! Global functionals, dissipation integrals, energy identity residuals and
//! invariant monitors.

mod audit;
mod table;

pub use audit::{energy_audit, EnergyAudit, LawViolation};
pub use table::{read_csv, write_csv, CSV_COLUMNS};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::{frank_density_at, kinematics_at, pressure_at, MaterialParams};
use crate::dynamics::{Coupling, State};
use crate::fields::ops::{inv_two_h, jacobian_at, sum};
use crate::fields::vec3::{self, Vec3};
use crate::fields::{Field, Grid, VectorField};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("reports come from different grids: {0:?} vs {1:?}")]
    GridMismatch([usize; 3], [usize; 3]),
    #[error("need at least {0} reports")]
    TooFew(usize),
    #[error("report times must increase strictly (t = {0})")]
    NonIncreasing(f64),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed diagnostics table: {0}")]
    Table(String),
}

/// Relative threshold on `|ρu|` defining the velocity support.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

/// Global quantities at one instant. All integrals use the rectangle rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    /// Step that produced this state (0 for the initial state).
    pub dt: f64,
    pub grid: [usize; 3],
    pub mass: f64,
    pub momentum: Vec3,
    pub e_total: f64,
    pub e_kinetic: f64,
    pub e_internal: f64,
    /// `½∫Jρ|ω|²`
    pub e_rotational: f64,
    /// `∫ρW`
    pub e_elastic: f64,
    /// `∫μ₁(dᵀAd)²`
    pub d1: f64,
    /// `(μ₄/2)∫|∇u|²`
    pub d2: f64,
    /// `(μ₄/2)∫(div u)²`
    pub d_div: f64,
    /// `(μ₅+μ₆)∫|Ad|²`
    pub d3: f64,
    /// `λ₁∫|N|²`, sign carried
    pub d_n: f64,
    /// `(λ₂−μ₂−μ₃)∫N·Ad`
    pub d_cross: f64,
    pub drift_d: f64,
    pub drift_dw: f64,
    pub support_margin: f64,
    /// `∫|∇u|² − C·E_i^{−1/(3(γ−1))}` when a lemma constant is available.
    pub lemma_slack: Option<f64>,
    pub grad_u_sq: f64,
    pub u_sq: f64,
    pub n_sq: f64,
    pub ad_sq: f64,
    pub dad_sq: f64,
}

impl EnergyReport {
    /// Right-hand side of the energy identity,
    /// `−D₁ − D₂ − D_div − D₃ + D_N + D_cross`.
    pub fn energy_rate(&self) -> f64 {
        -self.d1 - self.d2 - self.d_div - self.d3 + self.d_n + self.d_cross
    }
}

/// Evaluate every functional of `s`. Under [`Coupling::NavierStokes`] the
/// director dissipation terms are absent and reported as zero.
pub fn functionals(
    s: &State,
    p: &MaterialParams,
    coupling: Coupling,
) -> Result<EnergyReport, DiagnosticsError> {
    let grid = *s.grid();
    let dv = grid.volume_element();
    let w = inv_two_h(&grid);
    let u: Vec<Vec3> = s.velocity().into_values();
    let rho = s.rho.values();
    let mom = s.mom.values();
    let d = s.d.values();
    let om = s.omega.values();
    let full = coupling == Coupling::Full;

    // per-cell integrands
    const K: usize = 15;
    let cells: Vec<[f64; K]> = (0..grid.cells())
        .into_par_iter()
        .map(|c| {
            let nb = grid.neighbours(c);
            let gu = jacobian_at(&nb, w, &u);
            let gd = jacobian_at(&nb, w, d);
            let (a, _, nn) = kinematics_at(&gu, d[c], om[c]);
            let ad = vec3::mat_vec(&a, d[c]);
            let dad = vec3::dot(d[c], ad);
            let div = vec3::trace(&gu);
            let r = rho[c];
            [
                r,
                mom[c][0],
                mom[c][1],
                mom[c][2],
                0.5 * vec3::dot(mom[c], u[c]),
                pressure_at(r, p) / (p.gamma - 1.0),
                0.5 * p.inertia_j * r * vec3::norm_sq(om[c]),
                r * frank_density_at(d[c], &gd, p),
                dad * dad,
                vec3::contract(&gu, &gu),
                div * div,
                vec3::norm_sq(ad),
                vec3::norm_sq(nn),
                vec3::dot(nn, ad),
                vec3::norm_sq(u[c]),
            ]
        })
        .collect();
    let integral = |k: usize| dv * sum(&cells.iter().map(|v| v[k]).collect::<Vec<_>>());
    let totals: Vec<f64> = (0..K).map(integral).collect();

    let (drift_d, drift_dw) = drifts(&s.d, &s.omega);
    let support_margin = support_margin(&grid, mom);

    let gate = |x: f64| if full { x } else { 0.0 };
    let r = EnergyReport {
        t: s.t,
        dt: 0.0,
        grid: grid.n(),
        mass: totals[0],
        momentum: [totals[1], totals[2], totals[3]],
        e_kinetic: totals[4],
        e_internal: totals[5],
        e_rotational: totals[6],
        e_elastic: totals[7],
        e_total: totals[4] + totals[5] + totals[6] + totals[7],
        d1: gate(p.mu1 * totals[8]),
        d2: 0.5 * p.mu4 * totals[9],
        d_div: 0.5 * p.mu4 * totals[10],
        d3: gate((p.mu5 + p.mu6) * totals[11]),
        d_n: gate(p.lambda1 * totals[12]),
        d_cross: gate(p.cross_coeff() * totals[13]),
        drift_d,
        drift_dw,
        support_margin,
        lemma_slack: None,
        grad_u_sq: totals[9],
        u_sq: totals[14],
        n_sq: totals[12],
        ad_sq: totals[11],
        dad_sq: totals[8],
    };
    let finite = [
        r.mass, r.e_total, r.d1, r.d2, r.d_div, r.d3, r.d_n, r.d_cross, r.drift_d, r.drift_dw,
    ]
    .iter()
    .chain(r.momentum.iter())
    .all(|x| x.is_finite());
    if !finite {
        return Err(DiagnosticsError::NonFinite("functional"));
    }
    Ok(r)
}

fn drifts(d: &VectorField, om: &VectorField) -> (f64, f64) {
    d.values()
        .par_iter()
        .zip(om.values().par_iter())
        .map(|(d, w)| ((vec3::norm_sq(*d).sqrt() - 1.0).abs(), vec3::dot(*d, *w).abs()))
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
}

/// Distance from the velocity support (cells with `|ρu| > SUPPORT_THRESHOLD·max|ρu|`)
/// to the box boundary. An empty support gives the box half-width.
pub fn support_margin(grid: &Grid, mom: &[Vec3]) -> f64 {
    let max = mom.iter().map(|m| vec3::norm_sq(*m)).fold(0.0, f64::max).sqrt();
    let half = grid.lengths().iter().cloned().fold(f64::INFINITY, f64::min) / 2.0;
    if max == 0.0 {
        return half;
    }
    let thr = SUPPORT_THRESHOLD * max;
    mom.par_iter()
        .enumerate()
        .filter(|(_, m)| vec3::norm_sq(**m).sqrt() > thr)
        .map(|(c, _)| grid.distance_to_boundary(c))
        .reduce(|| half, f64::min)
}

/// Energy identity residual per interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSeries {
    /// `r_n = (E_{n+1} − E_n)/Δt − ½(RHS_n + RHS_{n+1})`
    pub residuals: Vec<f64>,
    pub max_abs: f64,
    /// `|RHS|` at the first report, for relative statements.
    pub initial_rate: f64,
}

pub fn energy_identity_residual(reports: &[EnergyReport]) -> Result<ResidualSeries, DiagnosticsError> {
    if reports.len() < 2 {
        return Err(DiagnosticsError::TooFew(2));
    }
    let g = reports[0].grid;
    let mut residuals = Vec::with_capacity(reports.len() - 1);
    for pair in reports.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.grid != g {
            return Err(DiagnosticsError::GridMismatch(g, b.grid));
        }
        let dt = b.t - a.t;
        if !(dt > 0.0) {
            return Err(DiagnosticsError::NonIncreasing(b.t));
        }
        residuals.push((b.e_total - a.e_total) / dt - 0.5 * (a.energy_rate() + b.energy_rate()));
    }
    let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(ResidualSeries {
        residuals,
        max_abs,
        initial_rate: reports[0].energy_rate().abs(),
    })
}

/// Observed orders `log(e_i/e_{i+1})/log(h_i/h_{i+1})` between successive levels.
pub fn refinement_orders(h: &[f64], err: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(err.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// Cell-level invariant monitor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub drift_d: f64,
    pub drift_d_cell: [usize; 3],
    pub drift_dw: f64,
    pub drift_dw_cell: [usize; 3],
    pub support_margin: f64,
    pub breaches: Vec<String>,
}

impl InvariantReport {
    pub fn breached(&self) -> bool {
        !self.breaches.is_empty()
    }
}

/// Drifts with their worst cells; `tol` is `(drift_d, drift_dw)`.
pub fn invariant_report(s: &State, tol: (f64, f64)) -> InvariantReport {
    let grid = s.grid();
    let mut worst = [(0.0f64, 0usize), (0.0f64, 0usize)];
    for (c, (d, w)) in s.d.values().iter().zip(s.omega.values()).enumerate() {
        let a = (vec3::norm_sq(*d).sqrt() - 1.0).abs();
        let b = vec3::dot(*d, *w).abs();
        // NaN counts as the worst possible value
        if a > worst[0].0 || (a.is_nan() && !worst[0].0.is_nan()) {
            worst[0] = (a, c);
        }
        if b > worst[1].0 || (b.is_nan() && !worst[1].0.is_nan()) {
            worst[1] = (b, c);
        }
    }
    let mut breaches = Vec::new();
    if !(worst[0].0 <= tol.0) {
        breaches.push(format!(
            "| |d| - 1 | = {:e} at cell {:?} exceeds {:e}",
            worst[0].0,
            grid.coords(worst[0].1),
            tol.0
        ));
    }
    if !(worst[1].0 <= tol.1) {
        breaches.push(format!(
            "|d.omega| = {:e} at cell {:?} exceeds {:e}",
            worst[1].0,
            grid.coords(worst[1].1),
            tol.1
        ));
    }
    InvariantReport {
        drift_d: worst[0].0,
        drift_d_cell: grid.coords(worst[0].1),
        drift_dw: worst[1].0,
        drift_dw_cell: grid.coords(worst[1].1),
        support_margin: support_margin(grid, s.mom.values()),
        breaches,
    }
}

#[cfg(test)]
mod tests;
