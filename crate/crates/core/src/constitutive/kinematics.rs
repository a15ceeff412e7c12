use rayon::prelude::*;

use super::{ConstitutiveError, MaterialParams};
use crate::fields::ops::{inv_two_h, jacobian_at};
use crate::fields::vec3::{self, Mat3, Vec3};
use crate::fields::{Field, TensorField, VectorField};

/// Rate of strain, vorticity tensor and corotational director rate.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTensors {
    pub strain: TensorField,
    pub vorticity: TensorField,
    pub corotational: VectorField,
}

/// `A = ½(G + Gᵀ)`, `Ω = ½(G − Gᵀ)` and `N = ω × d − Ω d`, with `G_ij = ∂_j u_i`.
///
/// `ω × d` stands in for the material derivative of `d`, which holds on the
/// unit sphere when `ω ⊥ d`.
#[inline]
pub fn kinematics_at(grad_u: &Mat3, d: Vec3, omega: Vec3) -> (Mat3, Mat3, Vec3) {
    let mut a = [[0.0; 3]; 3];
    let mut w = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = 0.5 * (grad_u[i][j] + grad_u[j][i]);
            w[i][j] = 0.5 * (grad_u[i][j] - grad_u[j][i]);
        }
    }
    let n = vec3::sub(vec3::cross(omega, d), vec3::mat_vec(&w, d));
    (a, w, n)
}

/// `g_i = λ₁ N_i + λ₂ d_j A_ji`
#[inline]
pub fn transport_at(strain: &Mat3, n: Vec3, d: Vec3, p: &MaterialParams) -> Vec3 {
    let ad = vec3::mat_t_vec(strain, d);
    [
        p.lambda1 * n[0] + p.lambda2 * ad[0],
        p.lambda1 * n[1] + p.lambda2 * ad[1],
        p.lambda1 * n[2] + p.lambda2 * ad[2],
    ]
}

pub fn kinematic_tensors(
    u: &VectorField,
    d: &VectorField,
    omega: &VectorField,
) -> Result<KinematicTensors, ConstitutiveError> {
    if u.grid() != d.grid() || u.grid() != omega.grid() {
        return Err(ConstitutiveError::GridMismatch);
    }
    u.check_finite()?;
    d.check_finite()?;
    omega.check_finite()?;
    let g = *u.grid();
    let w = inv_two_h(&g);
    let (uv, dv, ov) = (u.values(), d.values(), omega.values());
    let cells: Vec<(Mat3, Mat3, Vec3)> = (0..g.cells())
        .into_par_iter()
        .map(|c| kinematics_at(&jacobian_at(&g.neighbours(c), w, uv), dv[c], ov[c]))
        .collect();
    let mut strain = Vec::with_capacity(cells.len());
    let mut vort = Vec::with_capacity(cells.len());
    let mut corot = Vec::with_capacity(cells.len());
    for (a, o, n) in cells {
        strain.push(a);
        vort.push(o);
        corot.push(n);
    }
    Ok(KinematicTensors {
        strain: TensorField::new(g, strain)?,
        vorticity: TensorField::new(g, vort)?,
        corotational: VectorField::new(g, corot)?,
    })
}

pub fn kinematic_transport(
    t: &KinematicTensors,
    d: &VectorField,
    p: &MaterialParams,
) -> Result<VectorField, ConstitutiveError> {
    if t.strain.grid() != d.grid() {
        return Err(ConstitutiveError::GridMismatch);
    }
    let g = *d.grid();
    let vals = (0..g.cells())
        .map(|c| {
            transport_at(
                &t.strain.values()[c],
                t.corotational.values()[c],
                d.values()[c],
                p,
            )
        })
        .collect();
    let out = VectorField::new(g, vals)?;
    out.check_finite()?;
    Ok(out)
}
