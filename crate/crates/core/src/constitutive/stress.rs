use rayon::prelude::*;

use super::frank::{check_density_director, elastic_fluxes};
use super::{ConstitutiveError, KinematicTensors, MaterialParams};
use crate::fields::ops::{inv_two_h, jacobian_at};
use crate::fields::vec3::{self, Mat3, Vec3};
use crate::fields::{Field, ScalarField, TensorField, VectorField};

/// Leslie viscous stress
/// `σ_ij = μ₁ (d·Ad) d_i d_j + μ₂ N_i d_j + μ₃ d_i N_j + μ₄ A_ij + μ₅ (Ad)_i d_j + μ₆ d_i (Ad)_j`.
#[inline]
pub fn leslie_at(strain: &Mat3, n: Vec3, d: Vec3, p: &MaterialParams) -> Mat3 {
    let ad = vec3::mat_vec(strain, d);
    let dad = vec3::dot(d, ad);
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = p.mu1 * dad * d[i] * d[j]
                + p.mu2 * n[i] * d[j]
                + p.mu3 * d[i] * n[j]
                + p.mu4 * strain[i][j]
                + p.mu5 * ad[i] * d[j]
                + p.mu6 * d[i] * ad[j];
        }
    }
    s
}

/// Ericksen stress `σᴱ_ij = −Π_kj ∂_i d_k` from the elastic flux
/// `Π_kj = ρ ∂W/∂(∂_j d_k)` and `grad_d[k][i] = ∂_i d_k`.
#[inline]
pub fn ericksen_at(pi: &Mat3, grad_d: &Mat3) -> Mat3 {
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = -(pi[0][j] * grad_d[0][i] + pi[1][j] * grad_d[1][i] + pi[2][j] * grad_d[2][i]);
        }
    }
    s
}

pub fn leslie_stress(
    t: &KinematicTensors,
    d: &VectorField,
    p: &MaterialParams,
) -> Result<TensorField, ConstitutiveError> {
    if t.strain.grid() != d.grid() {
        return Err(ConstitutiveError::GridMismatch);
    }
    let g = *d.grid();
    let vals = (0..g.cells())
        .into_par_iter()
        .map(|c| {
            leslie_at(
                &t.strain.values()[c],
                t.corotational.values()[c],
                d.values()[c],
                p,
            )
        })
        .collect();
    let out = TensorField::new(g, vals)?;
    out.check_finite()?;
    Ok(out)
}

/// Elastic back-reaction stress; its divergence over the second index enters
/// the momentum balance.
pub fn ericksen_stress(
    rho: &ScalarField,
    d: &VectorField,
    p: &MaterialParams,
) -> Result<TensorField, ConstitutiveError> {
    check_density_director(rho, d)?;
    let g = *d.grid();
    let (pi, _) = elastic_fluxes(rho.values(), d, p);
    let w = inv_two_h(&g);
    let dv = d.values();
    let vals = (0..g.cells())
        .into_par_iter()
        .map(|c| ericksen_at(&pi[c], &jacobian_at(&g.neighbours(c), w, dv)))
        .collect();
    let out = TensorField::new(g, vals)?;
    out.check_finite()?;
    Ok(out)
}
