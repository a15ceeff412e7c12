use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{DtPolicy, RenormPolicy, RunConfig};
use super::initial::{initial_data, InitialDataError};
use super::integrator::{cfl_dt, Integrator, StepError};
use super::State;
use crate::certificate;
use crate::constitutive::{validate_params, validate_structural, ValidationError};
use crate::diagnostics::{functionals, invariant_report, DiagnosticsError, EnergyReport};
use crate::fields::vec3;

/// How many times a failed step is retried with half the step size.
pub const MAX_HALVINGS: u32 = 3;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("{0}")]
    Params(#[from] ValidationError),
    #[error("{0}")]
    Initial(#[from] InitialDataError),
    #[error("{0}")]
    Diagnostics(#[from] DiagnosticsError),
    #[error("{0}")]
    Step(#[from] StepError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    /// Step rejection cascade; the last accepted state is kept.
    Aborted { t: f64, reason: String },
    /// An invariant left its tolerance; the offending state is kept.
    LeftClass { t: f64, reason: String },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunStatus::Completed => write!(f, "completed"),
            RunStatus::Aborted { t, reason } => write!(f, "smoothness lost (numerical) at t={t}: {reason}"),
            RunStatus::LeftClass { t, reason } => write!(f, "left class K at t={t}: {reason}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: RunConfig,
    pub config_hash: String,
    /// `(step index, state)`; always contains the initial and final states.
    pub snapshots: Vec<(u64, State)>,
    /// One report per accepted step, starting with the initial state.
    pub reports: Vec<EnergyReport>,
    pub status: RunStatus,
    pub steps: u64,
    /// Derived lemma constant used for the per-step lemma slack, when defined.
    pub lemma_constant: Option<f64>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        &self.snapshots.last().expect("initial state is always kept").1
    }
}

pub fn simulate(config: &RunConfig) -> Result<Trajectory, SimulateError> {
    config.check().map_err(InitialDataError::from)?;
    let p = config.params;
    let mut warnings = Vec::new();
    if config.require_admissible {
        let v = validate_params(&p, config.validation)?;
        warnings.extend(v.warnings.iter().map(|w| w.to_string()));
    } else {
        validate_structural(&p)?;
        warnings.push("sign conditions not enforced for this run".to_string());
    }
    let state0 = initial_data(config)?;
    let hash = config.hash();
    let floor = config.rho_floor();
    let mut integ = Integrator::new(p, floor, config.coupling);

    let mut report = functionals(&state0, &p, config.coupling)?;
    let lemma_c = lemma_constant_for(&report, config);
    report.lemma_slack = lemma_c.map(|c| lemma_slack(&report, c, p.gamma));

    let tol = (config.tolerances.drift_d, config.tolerances.drift_dw);
    let mut traj = Trajectory {
        config: config.clone(),
        config_hash: hash,
        snapshots: vec![(0, state0.clone())],
        reports: vec![report],
        status: RunStatus::Completed,
        steps: 0,
        lemma_constant: lemma_c,
        warnings,
    };
    let inv = invariant_report(&state0, tol);
    if inv.breached() {
        traj.status = RunStatus::LeftClass {
            t: 0.0,
            reason: inv.breaches.join("; "),
        };
        return Ok(traj);
    }

    let mut state = state0;
    let t_end = config.t_end;
    let max_steps = config.max_steps.unwrap_or(u64::MAX);
    // last step is stretched rather than leaving a sliver
    let tiny = 1e-12 * t_end;
    while state.t < t_end - tiny && traj.steps < max_steps {
        let mut dt = match config.dt {
            DtPolicy::Fixed { dt } => dt,
            DtPolicy::Cfl { safety, dt_max } => cfl_dt(&state, &p, safety, dt_max, config.coupling)?.dt,
        };
        if state.t + dt > t_end - tiny {
            dt = t_end - state.t;
        }
        let renorm = match config.renormalize {
            RenormPolicy::Off => false,
            RenormPolicy::Every { steps } => (traj.steps + 1) % steps == 0,
        };
        let mut attempt = 0;
        let next = loop {
            match integ.step(&state, dt, renorm) {
                Ok(s) => break Ok(s),
                Err(_) if attempt < MAX_HALVINGS => {
                    attempt += 1;
                    dt *= 0.5;
                }
                Err(e) => break Err(e),
            }
        };
        let next = match next {
            Ok(s) => s,
            Err(e) => {
                traj.status = RunStatus::Aborted {
                    t: state.t,
                    reason: format!("step rejected after {MAX_HALVINGS} halvings: {e}"),
                };
                break;
            }
        };
        traj.steps += 1;
        let mut rep = match functionals(&next, &p, config.coupling) {
            Ok(r) => r,
            Err(e) => {
                traj.status = RunStatus::Aborted {
                    t: state.t,
                    reason: e.to_string(),
                };
                break;
            }
        };
        rep.dt = dt;
        rep.lemma_slack = lemma_c.map(|c| lemma_slack(&rep, c, p.gamma));
        traj.reports.push(rep);
        state = next;

        let inv = invariant_report(&state, tol);
        if inv.breached() {
            traj.status = RunStatus::LeftClass {
                t: state.t,
                reason: inv.breaches.join("; "),
            };
            break;
        }
        if traj.steps % config.snapshot_every == 0 {
            traj.snapshots.push((traj.steps, state.clone()));
        }
    }
    if traj.snapshots.last().map(|s| s.0) != Some(traj.steps) {
        traj.snapshots.push((traj.steps, state));
    }
    Ok(traj)
}

fn lemma_constant_for(r: &EnergyReport, config: &RunConfig) -> Option<f64> {
    let pn = vec3::norm_sq(r.momentum).sqrt();
    let c1 = certificate::talenti_c1().ok()?;
    certificate::lemma_constant(r.mass, pn, &config.params, c1)
        .ok()
        .map(|c| c.derived)
}

/// `∫|∇u|² − C·E_i^{−1/(3(γ−1))}`
pub(crate) fn lemma_slack(r: &EnergyReport, c: f64, gamma: f64) -> f64 {
    r.grad_u_sq - c * r.e_internal.powf(-1.0 / (3.0 * (gamma - 1.0)))
}
