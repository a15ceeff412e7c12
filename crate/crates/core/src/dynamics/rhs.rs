use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use super::config::Coupling;
use super::State;
use crate::constitutive::{
    ericksen_at, frank_local, kinematics_at, leslie_at, pressure_at, transport_at, MaterialParams,
};
use crate::fields::ops::{div_at, div_tensor_at, inv_two_h, jacobian_at};
use crate::fields::vec3::{self, Mat3, Vec3};
use crate::fields::{Field, Grid};

/// Force or transport term of the right-hand side, for error attribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Advection,
    Pressure,
    Ericksen,
    Leslie,
    /// `(h − g) × d / (Jρ)` and the director advection.
    DirectorTorque,
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Term::Advection => "momentum advection",
            Term::Pressure => "pressure",
            Term::Ericksen => "Ericksen stress",
            Term::Leslie => "Leslie stress",
            Term::DirectorTorque => "director torque",
        })
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RhsError {
    #[error("density {value} at cell {cell:?} below floor {floor}")]
    BelowFloor { cell: [usize; 3], value: f64, floor: f64 },
    #[error("non-finite {term} at cell {cell:?}")]
    NonFinite { term: Term, cell: [usize; 3] },
    #[error("fields live on different grids")]
    GridMismatch,
}

/// Time derivatives of `(ρ, ρu, d, ω)`, one entry per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub rho: Vec<f64>,
    pub mom: Vec<Vec3>,
    pub d: Vec<Vec3>,
    pub omega: Vec<Vec3>,
}

impl StateDerivative {
    pub fn zeros(cells: usize) -> Self {
        StateDerivative {
            rho: vec![0.0; cells],
            mom: vec![[0.0; 3]; cells],
            d: vec![[0.0; 3]; cells],
            omega: vec![[0.0; 3]; cells],
        }
    }

    pub fn max_abs(&self) -> f64 {
        let m3 = |v: &[Vec3]| v.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        self.rho
            .iter()
            .fold(0.0f64, |a, x| a.max(x.abs()))
            .max(m3(&self.mom))
            .max(m3(&self.d))
            .max(m3(&self.omega))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Local {
    /// `ρ ∂W/∂d`
    rdw: Vec3,
    g: Vec3,
    /// `−(u·∇)d`
    adv_d: Vec3,
    /// `−(u·∇)ω`
    adv_w: Vec3,
}

/// Scratch buffers reused across evaluations.
#[derive(Debug, Default)]
pub(crate) struct Workspace {
    u: Vec<Vec3>,
    pres: Vec<f64>,
    flux: Vec<Mat3>,
    pi: Vec<Mat3>,
    local: Vec<Local>,
}

impl Workspace {
    fn resize(&mut self, cells: usize) {
        self.u.resize(cells, [0.0; 3]);
        self.pres.resize(cells, 0.0);
        self.flux.resize(cells, [[0.0; 3]; 3]);
        self.pi.resize(cells, [[0.0; 3]; 3]);
        self.local.resize(cells, Local::default());
    }
}

/// Borrowed view of the prognostic fields.
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    pub grid: &'a Grid,
    pub rho: &'a [f64],
    pub mom: &'a [Vec3],
    pub d: &'a [Vec3],
    pub omega: &'a [Vec3],
}

impl<'a> View<'a> {
    pub fn of(s: &'a State) -> Result<Self, RhsError> {
        let g = s.grid();
        if s.mom.grid() != g || s.d.grid() != g || s.omega.grid() != g {
            return Err(RhsError::GridMismatch);
        }
        Ok(View {
            grid: g,
            rho: s.rho.values(),
            mom: s.mom.values(),
            d: s.d.values(),
            omega: s.omega.values(),
        })
    }
}

/// Full Ericksen–Leslie right-hand side.
pub fn rhs(s: &State, p: &MaterialParams, rho_floor: f64) -> Result<StateDerivative, RhsError> {
    let mut out = StateDerivative::zeros(s.grid().cells());
    evaluate(View::of(s)?, p, rho_floor, Coupling::Full, &mut Workspace::default(), &mut out)?;
    Ok(out)
}

/// Compressible Navier–Stokes right-hand side with viscosity `mu4`; no director terms.
pub fn rhs_navier_stokes(
    s: &State,
    p: &MaterialParams,
    rho_floor: f64,
) -> Result<StateDerivative, RhsError> {
    let mut out = StateDerivative::zeros(s.grid().cells());
    evaluate(
        View::of(s)?,
        p,
        rho_floor,
        Coupling::NavierStokes,
        &mut Workspace::default(),
        &mut out,
    )?;
    Ok(out)
}

pub(crate) fn evaluate(
    v: View<'_>,
    p: &MaterialParams,
    rho_floor: f64,
    coupling: Coupling,
    ws: &mut Workspace,
    out: &mut StateDerivative,
) -> Result<(), RhsError> {
    let grid = v.grid;
    let n = grid.cells();
    ws.resize(n);

    if let Some(c) = v.rho.iter().position(|r| !(*r >= rho_floor)) {
        return Err(RhsError::BelowFloor {
            cell: grid.coords(c),
            value: v.rho[c],
            floor: rho_floor,
        });
    }
    ws.u.par_iter_mut()
        .zip(ws.pres.par_iter_mut())
        .enumerate()
        .for_each(|(c, (u, pr))| {
            let r = v.rho[c];
            let m = v.mom[c];
            *u = [m[0] / r, m[1] / r, m[2] / r];
            *pr = pressure_at(r, p);
        });

    let w = inv_two_h(grid);
    let u = &ws.u;
    let pres = &ws.pres;
    match coupling {
        Coupling::Full => {
            ws.flux
                .par_iter_mut()
                .zip(ws.pi.par_iter_mut())
                .zip(ws.local.par_iter_mut())
                .enumerate()
                .for_each(|(c, ((flux, pi), loc))| {
                    let nb = grid.neighbours(c);
                    let gu = jacobian_at(&nb, w, u);
                    let gd = jacobian_at(&nb, w, v.d);
                    let gw = jacobian_at(&nb, w, v.omega);
                    let d = v.d[c];
                    let r = v.rho[c];
                    let (a, _, nn) = kinematics_at(&gu, d, v.omega[c]);
                    let sl = leslie_at(&a, nn, d, p);
                    let fl = frank_local(d, &gd, p);
                    for k in 0..3 {
                        for j in 0..3 {
                            pi[k][j] = r * fl.dw_dgrad[k][j];
                        }
                    }
                    let se = ericksen_at(pi, &gd);
                    *flux = inviscid_flux(v.mom[c], u[c], pres[c]);
                    for i in 0..3 {
                        for j in 0..3 {
                            flux[i][j] = flux[i][j] + se[i][j] + sl[i][j];
                        }
                    }
                    *loc = Local {
                        rdw: vec3::scale(r, fl.dw_dd),
                        g: transport_at(&a, nn, d, p),
                        adv_d: vec3::scale(-1.0, vec3::mat_vec(&gd, u[c])),
                        adv_w: vec3::scale(-1.0, vec3::mat_vec(&gw, u[c])),
                    };
                });
        }
        Coupling::NavierStokes => {
            ws.flux.par_iter_mut().enumerate().for_each(|(c, flux)| {
                let nb = grid.neighbours(c);
                let gu = jacobian_at(&nb, w, u);
                let mut sl = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        sl[i][j] = p.mu4 * (0.5 * (gu[i][j] + gu[j][i]));
                    }
                }
                *flux = inviscid_flux(v.mom[c], u[c], pres[c]);
                for i in 0..3 {
                    for j in 0..3 {
                        flux[i][j] = flux[i][j] + sl[i][j];
                    }
                }
            });
        }
    }

    let flux = &ws.flux;
    let pi = &ws.pi;
    let local = &ws.local;
    out.rho.resize(n, 0.0);
    out.mom.resize(n, [0.0; 3]);
    out.d.resize(n, [0.0; 3]);
    out.omega.resize(n, [0.0; 3]);
    out.rho
        .par_iter_mut()
        .zip(out.mom.par_iter_mut())
        .enumerate()
        .for_each(|(c, (dr, dm))| {
            let nb = grid.neighbours(c);
            *dr = -div_at(&nb, w, v.mom);
            *dm = div_tensor_at(&nb, w, flux);
        });
    match coupling {
        Coupling::Full => {
            out.d
                .par_iter_mut()
                .zip(out.omega.par_iter_mut())
                .enumerate()
                .for_each(|(c, (dd, dw))| {
                    let nb = grid.neighbours(c);
                    let loc = &local[c];
                    let h = vec3::sub(loc.rdw, div_tensor_at(&nb, w, pi));
                    let (ddot, wdot) = director_rates(v.d[c], v.omega[c], v.rho[c], h, loc, p);
                    *dd = ddot;
                    *dw = wdot;
                });
        }
        Coupling::NavierStokes => {
            out.d.par_iter_mut().for_each(|x| *x = [0.0; 3]);
            out.omega.par_iter_mut().for_each(|x| *x = [0.0; 3]);
        }
    }

    let bad = (0..n).find(|&c| {
        !(out.rho[c].is_finite()
            && vec3::is_finite3(out.mom[c])
            && vec3::is_finite3(out.d[c])
            && vec3::is_finite3(out.omega[c]))
    });
    match bad {
        None => Ok(()),
        Some(c) => Err(attribute(v, p, coupling, c)),
    }
}

#[inline]
fn inviscid_flux(m: Vec3, u: Vec3, pres: f64) -> Mat3 {
    let mut f = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            f[i][j] = -m[i] * u[j];
        }
        f[i][i] -= pres;
    }
    f
}

/// Rotational form of the director equations.
///
/// `ḋ = Θ × d` with `Θ = ω + d × a/|d|²` moves `d` by `ω × d` plus the part of
/// the advection `a` orthogonal to `d`. `ω̇ = b − κ d` keeps `d·ω` fixed.
#[inline]
fn director_rates(d: Vec3, om: Vec3, rho: f64, h: Vec3, loc: &Local, p: &MaterialParams) -> (Vec3, Vec3) {
    let dd = vec3::norm_sq(d);
    let torque = vec3::scale(1.0 / (p.inertia_j * rho), vec3::cross(vec3::sub(h, loc.g), d));
    let theta = vec3::add(om, vec3::scale(1.0 / dd, vec3::cross(d, loc.adv_d)));
    let ddot = vec3::cross(theta, d);
    let b = vec3::add(loc.adv_w, torque);
    let kappa = (vec3::dot(b, d) + vec3::dot(om, ddot)) / dd;
    (ddot, vec3::sub(b, vec3::scale(kappa, d)))
}

/// Locate the first term that is non-finite anywhere in the stencil of `cell`.
/// Stress divergences reach two cells out, so the search covers two rings.
fn attribute(v: View<'_>, p: &MaterialParams, coupling: Coupling, cell: usize) -> RhsError {
    let grid = v.grid;
    let w = inv_two_h(grid);
    let mut stencil = vec![cell];
    for _ in 0..2 {
        let ring: Vec<usize> = stencil.iter().flat_map(|&c| grid.neighbours(c).into_iter().flatten()).collect();
        stencil.extend(ring);
        stencil.sort_unstable();
        stencil.dedup();
    }
    let u = |c: usize| vec3::scale(1.0 / v.rho[c], v.mom[c]);
    let u_all: Vec<Vec3> = (0..grid.cells()).map(u).collect();
    let order = [
        Term::Advection,
        Term::Pressure,
        Term::Ericksen,
        Term::Leslie,
        Term::DirectorTorque,
    ];
    for term in order {
        for &c in &stencil {
            let nbc = grid.neighbours(c);
            let ok = match term {
                Term::Advection => vec3::is_finite33(&inviscid_flux(v.mom[c], u_all[c], 0.0)),
                Term::Pressure => pressure_at(v.rho[c], p).is_finite(),
                Term::Ericksen if coupling == Coupling::Full => {
                    let gd = jacobian_at(&nbc, w, v.d);
                    let fl = frank_local(v.d[c], &gd, p);
                    vec3::is_finite33(&ericksen_at(&fl.dw_dgrad, &gd)) && v.rho[c].is_finite()
                }
                Term::Leslie => {
                    let gu = jacobian_at(&nbc, w, &u_all);
                    let (a, _, nn) = kinematics_at(&gu, v.d[c], v.omega[c]);
                    vec3::is_finite33(&leslie_at(&a, nn, v.d[c], p))
                }
                _ => true,
            };
            if !ok {
                return RhsError::NonFinite {
                    term,
                    cell: grid.coords(c),
                };
            }
        }
    }
    RhsError::NonFinite {
        term: if coupling == Coupling::Full {
            Term::DirectorTorque
        } else {
            Term::Advection
        },
        cell: grid.coords(cell),
    }
}
