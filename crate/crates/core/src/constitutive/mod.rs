//! Material laws: pressure, Frank energy and molecular field, kinematic
//! transport, Leslie and Ericksen stresses, and coefficient validation.

mod frank;
mod kinematics;
mod params;
mod stress;

pub use frank::{
    frank_density_at, frank_energy_density, frank_local, molecular_field, unit_norm_drift,
    FrankLocal, UNIT_NORM_WARN,
};
pub use kinematics::{
    kinematic_tensors, kinematic_transport, kinematics_at, transport_at, KinematicTensors,
};
pub use params::{
    validate_params, validate_params_with, validate_structural, MaterialParams, ValidatedParams,
    ValidationError, ValidationMode, Violation, DEFAULT_RELATIVE_EPS,
};
pub use stress::{ericksen_at, ericksen_stress, leslie_at, leslie_stress};

use thiserror::Error;

use crate::fields::{Field, FieldError, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstitutiveError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("negative density {value} at cell {cell:?}")]
    NegativeDensity { cell: [usize; 3], value: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
}

/// `p = pressure_coeff · ρ^γ`
pub fn pressure(rho: &ScalarField, p: &MaterialParams) -> Result<ScalarField, ConstitutiveError> {
    rho.check_finite()?;
    if let Some(c) = rho.values().iter().position(|r| *r < 0.0) {
        return Err(ConstitutiveError::NegativeDensity {
            cell: rho.grid().coords(c),
            value: rho.values()[c],
        });
    }
    Ok(rho.map(|r| pressure_at(r, p)))
}

#[inline]
pub fn pressure_at(rho: f64, p: &MaterialParams) -> f64 {
    p.pressure_coeff * rho.powf(p.gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use rand::{Rng, SeedableRng};

    fn params(gamma: f64, a: f64) -> MaterialParams {
        MaterialParams {
            gamma,
            pressure_coeff: a,
            inertia_j: 1.0,
            k1: 1.0,
            k2: 1.0,
            k3: 1.0,
            mu1: 0.0,
            mu2: -1.0,
            mu3: 0.0,
            mu4: 1.0,
            mu5: 1.0,
            mu6: 0.0,
            lambda1: -1.0,
            lambda2: 1.0,
        }
    }

    #[test]
    fn pressure_examples() {
        let g = Grid::cube(4, 1.0).unwrap();
        let p0 = pressure(&ScalarField::zeros(g), &params(1.4, 2.0)).unwrap();
        assert!(p0.values().iter().all(|v| *v == 0.0));
        let p9 = pressure(&ScalarField::constant(g, 3.0), &params(2.0, 1.0)).unwrap();
        assert!(p9.values().iter().all(|v| *v == 9.0));
    }

    #[test]
    fn pressure_log_identity() {
        let g = Grid::cube(6, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let rho = ScalarField::new(g, (0..g.cells()).map(|_| rng.gen_range(0.01..10.0)).collect()).unwrap();
        let a = 0.7;
        let p = pressure(&rho, &params(1.2, a)).unwrap();
        for (r, pv) in rho.values().iter().zip(p.values()) {
            assert!((pv.ln() - a.ln() - 1.2 * r.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_density_names_cell() {
        let g = Grid::cube(4, 1.0).unwrap();
        let mut rho = ScalarField::constant(g, 1.0);
        rho.values_mut()[g.index(2, 1, 3)] = -0.1;
        match pressure(&rho, &params(1.4, 1.0)) {
            Err(ConstitutiveError::NegativeDensity { cell, .. }) => assert_eq!(cell, [2, 1, 3]),
            other => panic!("{other:?}"),
        }
    }
}
