use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::config::{ConfigError, DirectorPattern, Preset, ResolvedInitial, RunConfig};
use super::State;
use crate::fields::ops::sum;
use crate::fields::vec3::{self, Vec3};
use crate::fields::{Field, Grid, ScalarField, VectorField};

#[derive(Debug, Error)]
pub enum InitialDataError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("a blow-up certificate needs nonzero total momentum, but |P| = {0:e}")]
    ZeroMomentum(f64),
    #[error("initial density {value} at cell {cell:?} lies below the floor {floor}")]
    BelowFloor { cell: [usize; 3], value: f64, floor: f64 },
    #[error("direction vector must be nonzero and finite")]
    BadDirection,
}

/// Separable compact bell `Π cos^{2p}(π(x_a − c_a)/(2R))` on the cube `|x_a − c_a| < R`.
pub fn bell_profile(x: [f64; 3], center: [f64; 3], radius: f64, power: u32) -> f64 {
    let mut v = 1.0;
    for a in 0..3 {
        let s = (x[a] - center[a]) / radius;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        v *= (0.5 * PI * s).cos().powi(2 * power as i32);
    }
    v
}

/// `∫_{ℝ³} bell = (2R (2p−1)!!/(2p)!!)³`.
pub fn bell_integral(radius: f64, power: u32) -> f64 {
    let mut ratio = 1.0;
    for k in 1..=power {
        ratio *= (2 * k - 1) as f64 / (2 * k) as f64;
    }
    (2.0 * radius * ratio).powi(3)
}

fn unit(v: [f64; 3]) -> Result<Vec3, InitialDataError> {
    let n = vec3::norm_sq(v).sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(InitialDataError::BadDirection);
    }
    Ok(vec3::scale(1.0 / n, v))
}

struct Phases([f64; 12]);

impl Phases {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Phases(std::array::from_fn(|_| rng.gen_range(0.0..2.0 * PI)))
    }
}

pub fn initial_data(config: &RunConfig) -> Result<State, InitialDataError> {
    config.check()?;
    let grid = config.build_grid()?;
    let init = config.initial.resolve();
    let state = build(&grid, &init, config.seed)?;

    let floor = config.rho_floor();
    if let Some((c, r)) = state.rho.values().iter().enumerate().find(|(_, r)| **r < floor) {
        return Err(InitialDataError::BelowFloor {
            cell: grid.coords(c),
            value: *r,
            floor,
        });
    }
    if config.request_certificate {
        let p = total_momentum(&state.mom);
        let norm = vec3::norm_sq(p).sqrt();
        if !(norm > 0.0) {
            return Err(InitialDataError::ZeroMomentum(norm));
        }
    }
    Ok(state)
}

fn total_momentum(mom: &VectorField) -> Vec3 {
    let dv = mom.grid().volume_element();
    std::array::from_fn(|a| dv * sum(&mom.values().iter().map(|m| m[a]).collect::<Vec<_>>()))
}

fn build(grid: &Grid, init: &ResolvedInitial, seed: u64) -> Result<State, InitialDataError> {
    let l = grid.lengths();
    let center = [l[0] / 2.0, l[1] / 2.0, l[2] / 2.0];
    let ph = Phases::new(seed);
    let ph = &ph.0;
    let k = [2.0 * PI / l[0], 2.0 * PI / l[1], 2.0 * PI / l[2]];
    let p = init.bell_power;
    let periodic = init.preset == Preset::Periodic;

    let rho = ScalarField::from_fn(*grid, |x| {
        if periodic {
            init.rho_background
                + init.rho_amplitude / 3.0
                    * ((k[0] * x[0] + ph[0]).cos() + (k[1] * x[1] + ph[1]).cos() + (k[2] * x[2] + ph[2]).cos())
        } else {
            init.rho_background + init.rho_amplitude * bell_profile(x, center, init.rho_radius, p)
        }
    });

    let dir = unit(init.momentum_direction)?;
    let mom = VectorField::from_fn(*grid, |x| {
        if periodic {
            let a = init.rho_background * init.momentum_amplitude;
            [
                a * (k[1] * x[1] + ph[3]).sin(),
                a * (k[2] * x[2] + ph[4]).sin(),
                a * (k[0] * x[0] + ph[5]).sin(),
            ]
        } else {
            vec3::scale(init.momentum_amplitude * bell_profile(x, center, init.momentum_radius, p), dir)
        }
    });

    let axis = match init.director {
        DirectorPattern::Constant { axis } => unit(axis)?,
        _ => [0.0, 0.0, 1.0],
    };
    let d = VectorField::from_fn(*grid, |x| match init.director {
        DirectorPattern::Constant { .. } => axis,
        DirectorPattern::Twist { waves } => {
            let a = waves as f64 * k[0] * x[0];
            [a.cos(), a.sin(), 0.0]
        }
        DirectorPattern::Bump { angle, radius } => {
            let th = angle * bell_profile(x, center, radius, p);
            [th.sin(), 0.0, th.cos()]
        }
        DirectorPattern::Waves { amplitude } => {
            let th = PI / 3.0 + amplitude * (k[1] * x[1] + ph[6]).sin();
            let phi = k[0] * x[0] + amplitude * (k[2] * x[2] + ph[7]).cos();
            [th.sin() * phi.cos(), th.sin() * phi.sin(), th.cos()]
        }
    });

    let w_dir = [0.3, 1.0, -0.5];
    let raw = VectorField::from_fn(*grid, |x| {
        if periodic {
            let a = init.omega_amplitude;
            [
                a * (k[2] * x[2] + ph[8]).cos(),
                a * (k[0] * x[0] + ph[9]).sin(),
                a * (k[1] * x[1] + ph[10]).cos(),
            ]
        } else {
            vec3::scale(init.omega_amplitude * bell_profile(x, center, init.omega_radius, p), w_dir)
        }
    });
    let omega_vals = raw
        .values()
        .iter()
        .zip(d.values())
        .map(|(w, dd)| project_tangent(*w, *dd))
        .collect();
    let omega = VectorField::new(*grid, omega_vals).expect("same grid");

    Ok(State {
        t: 0.0,
        rho,
        mom,
        d,
        omega,
    })
}

/// `w − (w·d) d / |d|²`
pub(crate) fn project_tangent(w: Vec3, d: Vec3) -> Vec3 {
    let s = vec3::dot(w, d) / vec3::norm_sq(d);
    vec3::sub(w, vec3::scale(s, d))
}
