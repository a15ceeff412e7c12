//! Semi-discrete Ericksen–Leslie right-hand side, RK4 stepping and run orchestration.
//!
//! Prognostic variables are `(ρ, ρu, d, ω)`. Density and momentum are advanced in
//! divergence form so that total mass and momentum are conserved to roundoff.
//! The director equations are written as rotations of `d` (and a matching
//! correction on `ω`) so that `|d|` and `d·ω` are exact invariants of the
//! semi-discrete flow; only the time integrator perturbs them.

mod config;
mod initial;
mod integrator;
pub mod io;
mod rhs;
mod simulate;

pub use config::{
    ConfigError, Coupling, DirectorPattern, DtPolicy, InitialSpec, Preset, RenormPolicy,
    RunConfig, Tolerances,
};
pub use initial::{bell_integral, bell_profile, initial_data, InitialDataError};
pub use integrator::{cfl_dt, step_rk4, CflBreakdown, Integrator, StepError};
pub use rhs::{rhs, rhs_navier_stokes, RhsError, StateDerivative, Term};
pub use simulate::{simulate, RunStatus, SimulateError, Trajectory};

use crate::fields::snapshot::{NamedField, Snapshot, SnapshotError};
use crate::fields::vec3::Vec3;
use crate::fields::{Field, Grid, ScalarField, VectorField};

/// Instantaneous fields on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub rho: ScalarField,
    /// Conserved momentum density `ρu`.
    pub mom: VectorField,
    pub d: VectorField,
    pub omega: VectorField,
}

impl State {
    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    /// `u = (ρu)/ρ`
    pub fn velocity(&self) -> VectorField {
        let vals = self
            .mom
            .values()
            .iter()
            .zip(self.rho.values())
            .map(|(m, r)| [m[0] / r, m[1] / r, m[2] / r])
            .collect();
        VectorField::new(*self.grid(), vals).expect("same grid")
    }

    pub fn to_snapshot(&self, config_hash: Option<String>) -> Snapshot {
        let field = |name: &str, components: usize, data: &[f64]| NamedField {
            name: name.to_string(),
            components,
            data: data.to_vec(),
        };
        Snapshot {
            grid: *self.grid(),
            t: self.t,
            config_hash,
            fields: vec![
                field("rho", 1, self.rho.flat()),
                field("mom", 3, self.mom.flat()),
                field("d", 3, self.d.flat()),
                field("omega", 3, self.omega.flat()),
            ],
        }
    }

    pub fn from_snapshot(s: &Snapshot) -> Result<Self, SnapshotError> {
        let get = |name: &str, comps: usize| -> Result<&[f64], SnapshotError> {
            let f = s
                .field(name)
                .ok_or_else(|| SnapshotError::Format(format!("missing field {name}")))?;
            if f.components != comps {
                return Err(SnapshotError::Format(format!(
                    "field {name} has {} components, expected {comps}",
                    f.components
                )));
            }
            Ok(&f.data)
        };
        Ok(State {
            t: s.t,
            rho: ScalarField::from_flat(s.grid, get("rho", 1)?)?,
            mom: VectorField::from_flat(s.grid, get("mom", 3)?)?,
            d: VectorField::from_flat(s.grid, get("d", 3)?)?,
            omega: VectorField::from_flat(s.grid, get("omega", 3)?)?,
        })
    }

    /// Copy with every field shifted by `offset` cells (periodically).
    pub fn shifted(&self, offset: [isize; 3]) -> State {
        let g = *self.grid();
        let src = |c: usize| {
            let [i, j, k] = g.coords(c).map(|x| x as isize);
            g.index(i - offset[0], j - offset[1], k - offset[2])
        };
        let shift_s = |f: &ScalarField| {
            ScalarField::new(g, (0..g.cells()).map(|c| f.values()[src(c)]).collect()).unwrap()
        };
        let shift_v = |f: &VectorField| {
            VectorField::new(g, (0..g.cells()).map(|c| f.values()[src(c)]).collect::<Vec<Vec3>>())
                .unwrap()
        };
        State {
            t: self.t,
            rho: shift_s(&self.rho),
            mom: shift_v(&self.mom),
            d: shift_v(&self.d),
            omega: shift_v(&self.omega),
        }
    }
}
