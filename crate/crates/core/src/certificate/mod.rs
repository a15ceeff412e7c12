//! Inequality chain behind the lifespan bound: Sobolev embedding, Hölder,
//! Jensen, the lemma lower bound on `∫|∇u|²`, and the resulting `T*`.

mod inequalities;
pub mod sobolev;
mod sweep;

pub use inequalities::{
    c2_constant, holder_check, jensen_check, lemma_check, lemma_constant, ConditionNorms, LemmaConstant,
    SnapshotRecord,
};
pub use sobolev::{
    embedding_ratio, rayleigh_search, sobolev_constant, talenti, talenti_c1, RayleighEstimate, SobolevMethod,
    TalentiEstimate,
};
pub use sweep::{run_sweep, scaling_check, ScalingCheck, SweepAxis, SweepRow};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::{validate_structural, MaterialParams, DEFAULT_RELATIVE_EPS};
use crate::diagnostics::{energy_identity_residual, EnergyReport};
use crate::dynamics::{RunConfig, RunStatus, State, Trajectory};
use crate::fields::vec3;

/// Allowed negative lemma slack on in-window states.
pub const LEMMA_TOL: f64 = 1e-9;
/// Relative roundoff allowance for the energy envelope.
pub const ENVELOPE_ROUNDOFF: f64 = 1e-12;

/// A hypothesis of the blow-up theorem or its lemma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "hypothesis", rename_all = "kebab-case")]
pub enum Hypothesis {
    AdiabaticExponent { gamma: f64 },
    NonzeroMomentum,
    /// One of `λ₁ < 0`, `μ₅+μ₆ ≥ 0`, `μ₁ ≥ 0`, `μ₄ > 0`.
    SignCondition { relation: String, value: f64 },
    CrossCoupling { lhs: f64, rhs: f64 },
    PositiveEnergy { e0: f64 },
    Structural { relations: Vec<String> },
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::AdiabaticExponent { gamma } => {
                write!(f, "gamma >= 6/5 required by the blow-up theorem (gamma = {gamma})")
            }
            Hypothesis::NonzeroMomentum => write!(f, "|P| != 0 required by the lemma (total momentum vanishes)"),
            Hypothesis::SignCondition { relation, value } => {
                write!(f, "dissipation sign condition {relation} required (value {value})")
            }
            Hypothesis::CrossCoupling { lhs, rhs } => write!(
                f,
                "cross-coupling bound |lambda2 - (mu2 + mu3)| <= 2 sqrt(-lambda1 (mu5 + mu6)) required ({lhs} > {rhs})"
            ),
            Hypothesis::PositiveEnergy { e0 } => write!(f, "initial energy must be positive (E0 = {e0})"),
            Hypothesis::Structural { relations } => {
                write!(f, "coefficient relations violated: {}", relations.join("; "))
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error("certificate refused: {}", .0.iter().map(|h| h.to_string()).collect::<Vec<_>>().join("; "))]
    Refused(Vec<Hypothesis>),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("total mass is zero")]
    ZeroMass,
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("trajectory has no reports")]
    Empty,
    #[error("{0}")]
    Diagnostics(#[from] crate::diagnostics::DiagnosticsError),
    #[error("{0}")]
    Simulate(#[from] crate::dynamics::SimulateError),
    #[error("{0}")]
    Config(#[from] crate::dynamics::ConfigError),
}

/// Hypotheses of the theorem that concern only the material constants.
pub fn parameter_hypotheses(p: &MaterialParams) -> Vec<Hypothesis> {
    let mut out = Vec::new();
    if let Err(e) = validate_structural(p) {
        out.push(Hypothesis::Structural {
            relations: e.violations.iter().map(|v| v.to_string()).collect(),
        });
    }
    if !(p.gamma >= 1.2) {
        out.push(Hypothesis::AdiabaticExponent { gamma: p.gamma });
    }
    let mut sign = |ok: bool, relation: &str, value: f64| {
        if !ok {
            out.push(Hypothesis::SignCondition {
                relation: relation.to_string(),
                value,
            });
        }
    };
    sign(p.lambda1 < 0.0, "lambda1 < 0", p.lambda1);
    sign(p.mu5 + p.mu6 >= 0.0, "mu5 + mu6 >= 0", p.mu5 + p.mu6);
    sign(p.mu1 >= 0.0, "mu1 >= 0", p.mu1);
    sign(p.mu4 > 0.0, "mu4 > 0", p.mu4);
    let lhs = p.cross_coeff().abs();
    let rhs = p.cross_bound();
    if p.lambda1 < 0.0 && p.mu5 + p.mu6 >= 0.0 && !(lhs <= rhs * (1.0 + DEFAULT_RELATIVE_EPS) + f64::MIN_POSITIVE) {
        out.push(Hypothesis::CrossCoupling { lhs, rhs });
    }
    out
}

/// Lifespan bound from the integrated differential inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lifespan {
    pub e0: f64,
    /// `(μ₄/2)·C·E0^{−1/(3(γ−1))}`
    pub rate: f64,
    /// Same with `μ₄` in place of `μ₄/2`.
    pub rate_literal: f64,
    pub t_star: f64,
    pub t_star_literal: f64,
    /// `(3γ−2)/(3(γ−1))` in `T* = 2E0^{exponent}/(μ₄C)`.
    pub exponent: f64,
    pub degenerate: bool,
}

impl Lifespan {
    pub fn envelope(&self, t: f64) -> f64 {
        self.e0 - self.rate * t
    }
}

pub fn lifespan_bound(e0: f64, c_lemma: f64, p: &MaterialParams) -> Lifespan {
    let ex = -1.0 / (3.0 * (p.gamma - 1.0));
    let rate = 0.5 * p.mu4 * c_lemma * e0.powf(ex);
    let rate_literal = p.mu4 * c_lemma * e0.powf(ex);
    let degenerate = e0 == 0.0;
    Lifespan {
        e0,
        rate,
        rate_literal,
        t_star: if degenerate { 0.0 } else { e0 / rate },
        t_star_literal: if degenerate { 0.0 } else { e0 / rate_literal },
        exponent: (3.0 * p.gamma - 2.0) / (3.0 * (p.gamma - 1.0)),
        degenerate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub t: f64,
    pub energy: f64,
    pub envelope: f64,
    pub budget: f64,
    /// `E − (envelope + budget + roundoff)`; positive means violated.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupCertificate {
    pub config_hash: String,
    pub c1_method: SobolevMethod,
    pub c1: f64,
    pub c2: f64,
    pub c_lemma: f64,
    pub c_lemma_printed_form: f64,
    pub mass: f64,
    pub momentum_norm: f64,
    pub lifespan: Lifespan,
    pub rho_floor: f64,
    pub support_threshold: f64,
    /// `[0, t_valid]` while the velocity support stays clear of the box faces.
    pub validity_window: Option<[f64; 2]>,
    pub records: Vec<SnapshotRecord>,
    /// Lemma slack on every in-window step report.
    pub min_step_lemma_slack: Option<f64>,
    pub lemma_violations: usize,
    pub chain_violations: usize,
    pub envelope_max_excess: f64,
    pub envelope_violations: Vec<EnvelopePoint>,
    pub run_status: RunStatus,
    pub notes: Vec<String>,
    pub holds: bool,
    pub verdict: String,
}

/// Everything `certify` reads from a finished run.
pub struct CertifyInput<'a> {
    pub config: &'a RunConfig,
    pub config_hash: &'a str,
    pub reports: &'a [EnergyReport],
    pub snapshots: &'a [(u64, State)],
    pub status: &'a RunStatus,
}

impl<'a> From<&'a Trajectory> for CertifyInput<'a> {
    fn from(t: &'a Trajectory) -> Self {
        CertifyInput {
            config: &t.config,
            config_hash: &t.config_hash,
            reports: &t.reports,
            snapshots: &t.snapshots,
            status: &t.status,
        }
    }
}

pub fn certify(input: CertifyInput<'_>, method: SobolevMethod) -> Result<BlowupCertificate, CertificateError> {
    let p = &input.config.params;
    let first = input.reports.first().ok_or(CertificateError::Empty)?;
    let mut refused = parameter_hypotheses(p);
    let p_norm = vec3::norm_sq(first.momentum).sqrt();
    if !(p_norm > 0.0) {
        refused.push(Hypothesis::NonzeroMomentum);
    }
    if !(first.e_total > 0.0) {
        refused.push(Hypothesis::PositiveEnergy { e0: first.e_total });
    }
    if !refused.is_empty() {
        return Err(CertificateError::Refused(refused));
    }

    let c1 = sobolev_constant(method)?;
    let lemma = lemma_constant(first.mass, p_norm, p, c1)?;
    let life = lifespan_bound(first.e_total, lemma.derived, p);
    let grid = input.config.build_grid()?;
    let h = grid.spacing().iter().cloned().fold(0.0, f64::max);
    let min_margin = input.config.tolerances.support_margin_cells * h;

    // window: leading run of reports whose support clears the boundary
    let t_valid = input
        .reports
        .iter()
        .take_while(|r| r.support_margin > min_margin)
        .last()
        .map(|r| r.t);
    let in_window = |t: f64| t_valid.is_some_and(|tv| t <= tv);

    let records = input
        .snapshots
        .iter()
        .map(|(step, s)| lemma_check(*step, s, p, &lemma, min_margin))
        .collect::<Result<Vec<_>, _>>()?;

    let ex = -1.0 / (3.0 * (p.gamma - 1.0));
    let step_slacks: Vec<f64> = input
        .reports
        .iter()
        .filter(|r| in_window(r.t))
        .map(|r| r.grad_u_sq - lemma.derived * r.e_internal.powf(ex))
        .collect();
    let min_step = step_slacks.iter().cloned().reduce(f64::min);
    let lemma_violations = step_slacks.iter().filter(|s| **s < -LEMMA_TOL).count()
        + records
            .iter()
            .filter(|r| r.in_window && in_window(r.t) && r.slack < -LEMMA_TOL)
            .count();
    let chain_tol = 1e-12 * p_norm.max(1.0);
    let chain_violations = records
        .iter()
        .filter(|r| r.chain_slack < -chain_tol || r.holder_slack < -chain_tol || r.jensen_slack < -1e-12)
        .count();

    // envelope with the accumulated identity residual as budget
    let mut env_pts = Vec::new();
    let mut max_excess = f64::NEG_INFINITY;
    if input.reports.len() >= 2 {
        let series = energy_identity_residual(input.reports)?;
        let mut budget = 0.0;
        for (k, r) in input.reports.iter().enumerate() {
            if k > 0 {
                budget += series.residuals[k - 1].abs() * (r.t - input.reports[k - 1].t);
            }
            if !in_window(r.t) {
                break;
            }
            let env = life.envelope(r.t - first.t);
            let excess = r.e_total - (env + budget + ENVELOPE_ROUNDOFF * life.e0);
            max_excess = max_excess.max(excess);
            if excess > 0.0 {
                env_pts.push(EnvelopePoint {
                    t: r.t,
                    energy: r.e_total,
                    envelope: env,
                    budget,
                    excess,
                });
            }
        }
    }

    let mut notes = vec![
        format!(
            "density floor rho_floor = {} approximates vacuum; the box integrals include the background density",
            input.config.rho_floor()
        ),
        format!(
            "lemma constant derived by chaining the inequalities: |P|^2/(C1 C2^2) = {:e}; printed form |P|^2 C2/C1^2 = {:e}",
            lemma.derived, lemma.printed_form
        ),
        format!(
            "rate uses mu4/2 (energy law); with mu4 the bound would be T* = {:e}",
            life.t_star_literal
        ),
    ];
    if records.iter().any(|r| !r.norms.finite()) {
        notes.push("some regularity norms are not finite".into());
    }
    if !input.status.is_completed() {
        notes.push(format!("run ended early: {}", input.status));
    }

    let mut failures = Vec::new();
    if t_valid.is_none() {
        failures.push("velocity support touches the box boundary at t = 0".to_string());
    }
    if lemma_violations > 0 {
        failures.push(format!("{lemma_violations} lemma slack violations"));
    }
    if chain_violations > 0 {
        failures.push(format!("{chain_violations} Hölder/Jensen chain violations"));
    }
    if !env_pts.is_empty() {
        failures.push(format!("energy exceeds the envelope at {} reports", env_pts.len()));
    }
    if !life.t_star.is_finite() || life.degenerate {
        failures.push("lifespan bound is not finite".to_string());
    }
    let holds = failures.is_empty();
    let verdict = if holds {
        format!(
            "certificate holds on [0, {}]: smooth class-K continuation impossible past T* = {}",
            t_valid.unwrap_or(0.0),
            life.t_star
        )
    } else {
        format!("certificate fails: {}", failures.join("; "))
    };
    Ok(BlowupCertificate {
        config_hash: input.config_hash.to_string(),
        c1_method: method,
        c1,
        c2: lemma.c2,
        c_lemma: lemma.derived,
        c_lemma_printed_form: lemma.printed_form,
        mass: first.mass,
        momentum_norm: p_norm,
        lifespan: life,
        rho_floor: input.config.rho_floor(),
        support_threshold: min_margin,
        validity_window: t_valid.map(|t| [first.t, t]),
        records,
        min_step_lemma_slack: min_step,
        lemma_violations,
        chain_violations,
        envelope_max_excess: max_excess,
        envelope_violations: env_pts,
        run_status: input.status.clone(),
        notes,
        holds,
        verdict,
    })
}

#[cfg(test)]
mod tests;
