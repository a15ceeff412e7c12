//! Centered second-order difference operators with periodic wrap.
//!
//! Convention: `grad_vec(v)[c][i][j] = ∂v_i/∂x_j`, and `div_tensor(T)_i = Σ_j ∂_j T_ij`.

use rayon::prelude::*;

use super::vec3::{Mat3, Vec3};
use super::{Field, FieldError, Grid, ScalarField, TensorField, VectorField};

/// Reciprocal of the stencil width `2h` along each axis.
#[inline]
pub(crate) fn inv_two_h(grid: &Grid) -> Vec3 {
    let h = grid.spacing();
    [0.5 / h[0], 0.5 / h[1], 0.5 / h[2]]
}

#[inline]
pub(crate) fn grad_at(nb: &[[usize; 2]; 3], w: Vec3, f: &[f64]) -> Vec3 {
    [
        (f[nb[0][1]] - f[nb[0][0]]) * w[0],
        (f[nb[1][1]] - f[nb[1][0]]) * w[1],
        (f[nb[2][1]] - f[nb[2][0]]) * w[2],
    ]
}

#[inline]
pub(crate) fn jacobian_at(nb: &[[usize; 2]; 3], w: Vec3, v: &[Vec3]) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for j in 0..3 {
        let (lo, hi) = (v[nb[j][0]], v[nb[j][1]]);
        for i in 0..3 {
            m[i][j] = (hi[i] - lo[i]) * w[j];
        }
    }
    m
}

#[inline]
pub(crate) fn div_at(nb: &[[usize; 2]; 3], w: Vec3, v: &[Vec3]) -> f64 {
    (v[nb[0][1]][0] - v[nb[0][0]][0]) * w[0]
        + (v[nb[1][1]][1] - v[nb[1][0]][1]) * w[1]
        + (v[nb[2][1]][2] - v[nb[2][0]][2]) * w[2]
}

/// `Σ_j ∂_j T_ij` at one cell.
#[inline]
pub(crate) fn div_tensor_at(nb: &[[usize; 2]; 3], w: Vec3, t: &[Mat3]) -> Vec3 {
    let mut out = [0.0; 3];
    for j in 0..3 {
        let (lo, hi) = (&t[nb[j][0]], &t[nb[j][1]]);
        for i in 0..3 {
            out[i] += (hi[i][j] - lo[i][j]) * w[j];
        }
    }
    out
}

#[inline]
pub(crate) fn curl_from_jacobian(g: &Mat3) -> Vec3 {
    [g[2][1] - g[1][2], g[0][2] - g[2][0], g[1][0] - g[0][1]]
}

fn map_cells<T: Send>(grid: &Grid, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..grid.cells()).into_par_iter().map(f).collect()
}

pub fn grad(f: &ScalarField) -> Result<VectorField, FieldError> {
    f.check_finite()?;
    let g = *f.grid();
    let w = inv_two_h(&g);
    let v = f.values();
    VectorField::new(g, map_cells(&g, |c| grad_at(&g.neighbours(c), w, v)))
}

pub fn div(v: &VectorField) -> Result<ScalarField, FieldError> {
    v.check_finite()?;
    let g = *v.grid();
    let w = inv_two_h(&g);
    let vals = v.values();
    ScalarField::new(g, map_cells(&g, |c| div_at(&g.neighbours(c), w, vals)))
}

pub fn grad_vec(v: &VectorField) -> Result<TensorField, FieldError> {
    v.check_finite()?;
    let g = *v.grid();
    let w = inv_two_h(&g);
    let vals = v.values();
    TensorField::new(g, map_cells(&g, |c| jacobian_at(&g.neighbours(c), w, vals)))
}

pub fn curl(v: &VectorField) -> Result<VectorField, FieldError> {
    v.check_finite()?;
    let g = *v.grid();
    let w = inv_two_h(&g);
    let vals = v.values();
    VectorField::new(
        g,
        map_cells(&g, |c| {
            curl_from_jacobian(&jacobian_at(&g.neighbours(c), w, vals))
        }),
    )
}

/// Divergence of a tensor field over its second index.
pub fn div_tensor(t: &TensorField) -> Result<VectorField, FieldError> {
    t.check_finite()?;
    let g = *t.grid();
    let w = inv_two_h(&g);
    let vals = t.values();
    VectorField::new(g, map_cells(&g, |c| div_tensor_at(&g.neighbours(c), w, vals)))
}

/// Rectangle-rule box integral.
pub fn integrate(f: &ScalarField) -> Result<f64, FieldError> {
    f.check_finite()?;
    Ok(sum(f.values()) * f.grid().volume_element())
}

/// Compensated (Neumaier) sum in a fixed order, independent of thread count.
pub(crate) fn sum(v: &[f64]) -> f64 {
    let mut s = 0.0f64;
    let mut comp = 0.0f64;
    for &x in v {
        let t = s + x;
        if s.abs() >= x.abs() {
            comp += (s - t) + x;
        } else {
            comp += (x - t) + s;
        }
        s = t;
    }
    s + comp
}
