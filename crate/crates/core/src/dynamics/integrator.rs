use rayon::prelude::*;
use thiserror::Error;

use super::config::Coupling;
use super::rhs::{evaluate, RhsError, StateDerivative, View, Workspace};
use super::State;
use crate::constitutive::{pressure_at, MaterialParams};
use crate::fields::vec3::{self, Vec3};
use crate::fields::Field;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StepError {
    #[error("RK4 stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: RhsError,
    },
    #[error("non-finite state after the update")]
    NonFiniteResult,
    #[error("CFL safety factor must lie in (0, 1], got {0}")]
    InvalidSafety(f64),
    #[error("time step must be positive and finite, got {0}")]
    InvalidDt(f64),
}

/// Real-axis stability limit of classical RK4 is about 2.785; 0.9 of the
/// `h²ρ/μ` scale keeps the centered viscous operator inside it for `safety ≤ 1`.
const VISCOUS_LIMIT: f64 = 0.9;
/// Imaginary-axis limit is `2√2`; the factor covers three axes and mixed Frank terms.
const WAVE_LIMIT: f64 = 1.0;
const DAMPING_LIMIT: f64 = 2.5;

/// Individual CFL constraints (already multiplied by the safety factor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflBreakdown {
    pub advective: f64,
    pub viscous: f64,
    pub director_wave: f64,
    pub damping: f64,
    pub coupling: f64,
    pub dt: f64,
}

/// Largest stable explicit step times `safety`, clamped to `dt_max`.
pub fn cfl_dt(
    s: &State,
    p: &MaterialParams,
    safety: f64,
    dt_max: f64,
    coupling: Coupling,
) -> Result<CflBreakdown, StepError> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(StepError::InvalidSafety(safety));
    }
    let h = s.grid().min_spacing();
    let (rho_min, speed) = s
        .rho
        .values()
        .par_iter()
        .zip(s.mom.values().par_iter())
        .map(|(r, m)| {
            let u = vec3::norm_sq(*m).sqrt() / r;
            let c = (p.gamma * pressure_at(*r, p) / r).sqrt();
            (*r, u + c)
        })
        .reduce(|| (f64::INFINITY, 0.0), |a, b| (a.0.min(b.0), a.1.max(b.1)));

    let limit = |num: f64, den: f64| if den > 0.0 { safety * num / den } else { f64::INFINITY };
    let advective = limit(h, speed);
    let (visc, director_wave, damping, coupled);
    match coupling {
        Coupling::NavierStokes => {
            visc = limit(VISCOUS_LIMIT * h * h * rho_min, p.mu4.abs());
            director_wave = f64::INFINITY;
            damping = f64::INFINITY;
            coupled = f64::INFINITY;
        }
        Coupling::Full => {
            let mu_eff = p.mu1.abs() + p.mu2.abs() + p.mu3.abs() + p.mu4.abs() + p.mu5.abs() + p.mu6.abs();
            visc = limit(VISCOUS_LIMIT * h * h * rho_min, mu_eff);
            let k_sum = p.k1.abs() + p.k2.abs() + p.k3.abs();
            director_wave = limit(WAVE_LIMIT * h * p.inertia_j.sqrt(), k_sum.sqrt());
            damping = limit(DAMPING_LIMIT * p.inertia_j * rho_min, p.lambda1.abs());
            let mu_c = p.mu2.abs() + p.mu3.abs() + p.mu5.abs() + p.mu6.abs();
            let lam_c = p.lambda1.abs() + p.lambda2.abs();
            coupled = limit(WAVE_LIMIT * h * rho_min * p.inertia_j.sqrt(), (mu_c * lam_c).sqrt());
        }
    }
    let dt = advective
        .min(visc)
        .min(director_wave)
        .min(damping)
        .min(coupled)
        .min(dt_max);
    Ok(CflBreakdown {
        advective,
        viscous: visc,
        director_wave,
        damping,
        coupling: coupled,
        dt,
    })
}

/// Classical RK4 with reusable stage buffers.
#[derive(Debug)]
pub struct Integrator {
    pub params: MaterialParams,
    pub rho_floor: f64,
    pub coupling: Coupling,
    ws: Workspace,
    k: [StateDerivative; 4],
    stage: Option<State>,
}

impl Integrator {
    pub fn new(params: MaterialParams, rho_floor: f64, coupling: Coupling) -> Self {
        Integrator {
            params,
            rho_floor,
            coupling,
            ws: Workspace::default(),
            k: std::array::from_fn(|_| StateDerivative::zeros(0)),
            stage: None,
        }
    }

    pub fn rhs(&mut self, s: &State) -> Result<StateDerivative, RhsError> {
        let mut out = StateDerivative::zeros(s.grid().cells());
        evaluate(View::of(s)?, &self.params, self.rho_floor, self.coupling, &mut self.ws, &mut out)?;
        Ok(out)
    }

    /// One RK4 step; `renormalize` projects `d` back to the unit sphere afterwards.
    pub fn step(&mut self, s: &State, dt: f64, renormalize: bool) -> Result<State, StepError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(StepError::InvalidDt(dt));
        }
        let mut stage = match self.stage.take() {
            Some(st) if st.grid() == s.grid() => st,
            _ => s.clone(),
        };
        let coef = [0.5 * dt, 0.5 * dt, dt];
        for i in 0..4 {
            let (done, rest) = self.k.split_at_mut(i);
            let src = if i == 0 {
                s
            } else {
                combine(&mut stage, s, coef[i - 1], &done[i - 1]);
                &stage
            };
            let view = View::of(src).map_err(|e| StepError::Stage { stage: i + 1, source: e })?;
            evaluate(view, &self.params, self.rho_floor, self.coupling, &mut self.ws, &mut rest[0])
                .map_err(|e| StepError::Stage { stage: i + 1, source: e })?;
        }

        let mut next = s.clone();
        let w = dt / 6.0;
        let [k1, k2, k3, k4] = &self.k;
        next.rho
            .values_mut()
            .par_iter_mut()
            .enumerate()
            .for_each(|(c, r)| *r += w * (k1.rho[c] + 2.0 * k2.rho[c] + 2.0 * k3.rho[c] + k4.rho[c]));
        let upd = |dst: &mut [Vec3], f: fn(&StateDerivative) -> &Vec<Vec3>| {
            let (a, b, c4, d4) = (f(k1), f(k2), f(k3), f(k4));
            dst.par_iter_mut().enumerate().for_each(|(c, v)| {
                for x in 0..3 {
                    v[x] += w * (a[c][x] + 2.0 * b[c][x] + 2.0 * c4[c][x] + d4[c][x]);
                }
            });
        };
        upd(next.mom.values_mut(), |k| &k.mom);
        upd(next.d.values_mut(), |k| &k.d);
        upd(next.omega.values_mut(), |k| &k.omega);
        next.t = s.t + dt;
        self.stage = Some(stage);

        if renormalize {
            next.d.values_mut().par_iter_mut().for_each(|d| {
                let n = vec3::norm_sq(*d).sqrt();
                *d = vec3::scale(1.0 / n, *d);
            });
        }
        if next.rho.check_finite().is_err()
            || next.mom.check_finite().is_err()
            || next.d.check_finite().is_err()
            || next.omega.check_finite().is_err()
        {
            return Err(StepError::NonFiniteResult);
        }
        Ok(next)
    }
}

/// `stage = s + c·k`
fn combine(stage: &mut State, s: &State, c: f64, k: &StateDerivative) {
    stage.t = s.t;
    stage
        .rho
        .values_mut()
        .par_iter_mut()
        .zip(s.rho.values().par_iter())
        .enumerate()
        .for_each(|(i, (dst, src))| *dst = src + c * k.rho[i]);
    let go = |dst: &mut [Vec3], src: &[Vec3], kv: &[Vec3]| {
        dst.par_iter_mut().enumerate().for_each(|(i, v)| {
            for x in 0..3 {
                v[x] = src[i][x] + c * kv[i][x];
            }
        });
    };
    go(stage.mom.values_mut(), s.mom.values(), &k.mom);
    go(stage.d.values_mut(), s.d.values(), &k.d);
    go(stage.omega.values_mut(), s.omega.values(), &k.omega);
}

/// Convenience wrapper for a single step with fresh buffers.
pub fn step_rk4(
    s: &State,
    dt: f64,
    p: &MaterialParams,
    rho_floor: f64,
    coupling: Coupling,
    renormalize: bool,
) -> Result<State, StepError> {
    Integrator::new(*p, rho_floor, coupling).step(s, dt, renormalize)
}
