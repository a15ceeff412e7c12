//! Oseen–Zöcher–Frank elastic energy and its partial derivatives.
//!
//! With `s = div d`, `c = curl d` and `τ = d·c`,
//! `W = K1/2 s² + K2/2 |d × c|² + K3/2 τ²`. The derivative formulas below use
//! `|d × c|² = |d|²|c|² − τ²`.

use rayon::prelude::*;

use super::{ConstitutiveError, MaterialParams};
use crate::fields::ops::{curl_from_jacobian, div_tensor_at, inv_two_h, jacobian_at};
use crate::fields::vec3::{self, Mat3, Vec3};
use crate::fields::{Field, ScalarField, VectorField};

/// `W` and its partials at one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrankLocal {
    pub w: f64,
    /// `∂W/∂d_k`
    pub dw_dd: Vec3,
    /// `[k][j] = ∂W/∂(∂_j d_k)`
    pub dw_dgrad: Mat3,
}

/// Energy density only.
#[inline]
pub fn frank_density_at(d: Vec3, grad_d: &Mat3, p: &MaterialParams) -> f64 {
    let s = vec3::trace(grad_d);
    let c = curl_from_jacobian(grad_d);
    let tau = vec3::dot(d, c);
    let bend = vec3::norm_sq(vec3::cross(d, c));
    0.5 * (p.k1 * s * s + p.k2 * bend + p.k3 * tau * tau)
}

/// `W` with closed-form partials; `grad_d[k][j] = ∂_j d_k`.
#[inline]
pub fn frank_local(d: Vec3, grad_d: &Mat3, p: &MaterialParams) -> FrankLocal {
    let s = vec3::trace(grad_d);
    let c = curl_from_jacobian(grad_d);
    let tau = vec3::dot(d, c);
    let dd = vec3::norm_sq(d);
    let cc = vec3::norm_sq(c);
    let w = 0.5 * (p.k1 * s * s + p.k2 * vec3::norm_sq(vec3::cross(d, c)) + p.k3 * tau * tau);

    let mut dw_dd = [0.0; 3];
    // ∂W/∂c
    let mut q = [0.0; 3];
    for a in 0..3 {
        dw_dd[a] = p.k2 * (cc * d[a] - tau * c[a]) + p.k3 * tau * c[a];
        q[a] = p.k2 * (dd * c[a] - tau * d[a]) + p.k3 * tau * d[a];
    }

    let ks = p.k1 * s;
    // c0 = G21 - G12, c1 = G02 - G20, c2 = G10 - G01
    let dw_dgrad = [
        [ks, -q[2], q[1]],
        [q[2], ks, -q[0]],
        [-q[1], q[0], ks],
    ];
    FrankLocal { w, dw_dd, dw_dgrad }
}

pub(crate) fn check_density_director(rho: &ScalarField, d: &VectorField) -> Result<(), ConstitutiveError> {
    if rho.grid() != d.grid() {
        return Err(ConstitutiveError::GridMismatch);
    }
    rho.check_finite()?;
    d.check_finite()?;
    if let Some(c) = rho.values().iter().position(|r| *r < 0.0) {
        return Err(ConstitutiveError::NegativeDensity {
            cell: rho.grid().coords(c),
            value: rho.values()[c],
        });
    }
    Ok(())
}

/// Largest `| |d| - 1 |` over the grid.
pub fn unit_norm_drift(d: &VectorField) -> f64 {
    d.values()
        .iter()
        .map(|v| (vec3::norm_sq(*v).sqrt() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Director fields farther than this from the unit sphere are evaluated but flagged.
pub const UNIT_NORM_WARN: f64 = 1e-6;

/// `W(d, ∇d)` cellwise; always non-negative.
pub fn frank_energy_density(
    d: &VectorField,
    p: &MaterialParams,
) -> Result<ScalarField, ConstitutiveError> {
    d.check_finite()?;
    let g = *d.grid();
    let w = inv_two_h(&g);
    let dv = d.values();
    let vals = (0..g.cells())
        .into_par_iter()
        .map(|c| frank_density_at(dv[c], &jacobian_at(&g.neighbours(c), w, dv), p))
        .collect();
    Ok(ScalarField::new(g, vals)?)
}

/// `ρ ∂W/∂(∂_j d_k)` and `ρ ∂W/∂d` per cell; the flux part of the molecular field.
pub(crate) fn elastic_fluxes(
    rho: &[f64],
    d: &VectorField,
    p: &MaterialParams,
) -> (Vec<Mat3>, Vec<Vec3>) {
    let g = *d.grid();
    let w = inv_two_h(&g);
    let dv = d.values();
    (0..g.cells())
        .into_par_iter()
        .map(|c| {
            let f = frank_local(dv[c], &jacobian_at(&g.neighbours(c), w, dv), p);
            let r = rho[c];
            let mut pi = f.dw_dgrad;
            for row in pi.iter_mut() {
                for x in row.iter_mut() {
                    *x *= r;
                }
            }
            (pi, vec3::scale(r, f.dw_dd))
        })
        .unzip()
}

/// `h = ρ ∂W/∂d − ∂_j(ρ ∂W/∂(∂_j d))`.
///
/// With centered differences this is exactly the gradient of the discrete
/// elastic energy `Σ ρ W h₁h₂h₃` divided by the cell volume.
pub fn molecular_field(
    rho: &ScalarField,
    d: &VectorField,
    p: &MaterialParams,
) -> Result<VectorField, ConstitutiveError> {
    check_density_director(rho, d)?;
    let g = *d.grid();
    let (pi, local) = elastic_fluxes(rho.values(), d, p);
    let w = inv_two_h(&g);
    let h = (0..g.cells())
        .into_par_iter()
        .map(|c| vec3::sub(local[c], div_tensor_at(&g.neighbours(c), w, &pi)))
        .collect();
    let out = VectorField::new(g, h)?;
    out.check_finite()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{integrate, Grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn params(k: [f64; 3]) -> MaterialParams {
        MaterialParams {
            gamma: 1.4,
            pressure_coeff: 1.0,
            inertia_j: 1.0,
            k1: k[0],
            k2: k[1],
            k3: k[2],
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

    fn planar_field(g: Grid, m: f64) -> (VectorField, f64) {
        let k = 2.0 * PI * m / g.lengths()[0];
        (
            VectorField::from_fn(g, |x| [(k * x[0]).cos(), (k * x[0]).sin(), 0.0]),
            k,
        )
    }

    #[test]
    fn constant_director_has_no_energy() {
        let g = Grid::cube(6, 1.0).unwrap();
        let d = VectorField::constant(g, [0.0, 0.6, 0.8]);
        let w = frank_energy_density(&d, &params([1.0, 2.0, 3.0])).unwrap();
        assert!(w.values().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn planar_pattern_splay_and_bend() {
        let err = |n: usize| {
            let g = Grid::new([n, 4, 4], [1.0; 3]).unwrap();
            let (d, k) = planar_field(g, 1.0);
            let (k1, k2) = (1.3, 0.7);
            let w = frank_energy_density(&d, &params([k1, k2, 5.0])).unwrap();
            (0..g.cells())
                .map(|c| {
                    let x = g.position(c)[0];
                    let e = 0.5 * k1 * k * k * (k * x).sin().powi(2)
                        + 0.5 * k2 * k * k * (k * x).cos().powi(2);
                    (w.values()[c] - e).abs() / (0.5 * k1.max(k2) * k * k)
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e2 < 5e-3 && (e1 / e2).log2() > 1.9, "{e1} {e2}");
    }

    #[test]
    fn one_constant_planar_pattern_is_uniform() {
        let g = Grid::new([64, 4, 4], [1.0; 3]).unwrap();
        let (d, k) = planar_field(g, 1.0);
        let kk = 0.9;
        let w = frank_energy_density(&d, &params([kk; 3])).unwrap();
        // centered stencil sees k_h = sin(kh)/h
        let kh = (k * g.spacing()[0]).sin() / g.spacing()[0];
        for v in w.values() {
            assert!((v - 0.5 * kk * kh * kh).abs() < 1e-10);
        }
        assert!((0.5 * kk * kh * kh - 0.5 * kk * k * k).abs() / (0.5 * kk * k * k) < 4e-3);
    }

    fn random_state(g: Grid, seed: u64) -> (ScalarField, VectorField) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = g.lengths();
        let a: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let ph: [f64; 6] = std::array::from_fn(|_| rng.gen_range(0.0..2.0 * PI));
        let rho = ScalarField::from_fn(g, |x| {
            1.0 + 0.3 * (2.0 * PI * x[0] / l[0] + ph[0]).sin() * (2.0 * PI * x[2] / l[2]).cos()
        });
        let d = VectorField::from_fn(g, |x| {
            let s = [2.0 * PI * x[0] / l[0], 2.0 * PI * x[1] / l[1], 2.0 * PI * x[2] / l[2]];
            let theta = 0.8 + a[0] * (s[0] + ph[1]).sin() + a[1] * (s[1] + s[2] + ph[2]).cos();
            let phi = a[2] * (s[2] + ph[3]).sin() + a[3] * (s[0] - s[1] + ph[4]).cos() + a[4] * (s[1] + ph[5]).sin();
            [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
        });
        let _ = a[5];
        (rho, d)
    }

    fn discrete_energy(rho: &ScalarField, d: &VectorField, p: &MaterialParams) -> f64 {
        let w = frank_energy_density(d, p).unwrap();
        let e = ScalarField::new(*rho.grid(), rho.values().iter().zip(w.values()).map(|(r, w)| r * w).collect()).unwrap();
        integrate(&e).unwrap()
    }

    /// Central finite difference of the discrete energy at one cell.
    fn energy_gradient_oracle(rho: &ScalarField, d: &VectorField, p: &MaterialParams, cell: usize, eps: f64) -> Vec3 {
        let dv = d.grid().volume_element();
        std::array::from_fn(|k| {
            let mut plus = d.clone();
            plus.values_mut()[cell][k] += eps;
            let mut minus = d.clone();
            minus.values_mut()[cell][k] -= eps;
            (discrete_energy(rho, &plus, p) - discrete_energy(rho, &minus, p)) / (2.0 * eps * dv)
        })
    }

    #[test]
    fn molecular_field_matches_energy_gradient_oracle() {
        let g = Grid::new([6, 5, 7], [1.0, 0.9, 1.2]).unwrap();
        let p = params([1.1, 0.6, 1.7]);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..20 {
            let (rho, d) = random_state(g, seed);
            let h = molecular_field(&rho, &d, &p).unwrap();
            let scale = h.values().iter().map(|v| vec3::norm_sq(*v).sqrt()).fold(0.0, f64::max);
            for _ in 0..3 {
                let cell = rng.gen_range(0..g.cells());
                let (e1, e2) = (1e-3, 5e-4);
                let o1 = energy_gradient_oracle(&rho, &d, &p, cell, e1);
                let o2 = energy_gradient_oracle(&rho, &d, &p, cell, e2);
                let err1 = vec3::norm_sq(vec3::sub(o1, h.values()[cell])).sqrt();
                let err2 = vec3::norm_sq(vec3::sub(o2, h.values()[cell])).sqrt();
                // pure O(eps^2) agreement: the gradient is exact for the discrete energy
                assert!(err2 < 1e-6 * scale.max(1.0), "seed {seed} cell {cell}: {err2}");
                if err1 > 1e-9 * scale {
                    let ord = (err1 / err2).log2();
                    assert!(ord > 1.8, "seed {seed}: eps order {ord}");
                }
            }
        }
    }

    #[test]
    fn molecular_field_vanishes_for_constant_director() {
        let g = Grid::cube(5, 1.0).unwrap();
        let (rho, _) = random_state(g, 3);
        let d = VectorField::constant(g, [1.0, 0.0, 0.0]);
        let h = molecular_field(&rho, &d, &params([1.0, 2.0, 3.0])).unwrap();
        assert!(h.values().iter().all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn planar_pattern_molecular_field_is_parallel_to_director() {
        // one-constant: h = K k_h² (1 + cos² kx) d in the discrete sense
        let g = Grid::new([48, 4, 4], [1.0; 3]).unwrap();
        let (d, k) = planar_field(g, 1.0);
        let kk = 0.8;
        let rho = ScalarField::constant(g, 1.0);
        let h = molecular_field(&rho, &d, &params([kk; 3])).unwrap();
        let hh = g.spacing()[0];
        for c in 0..g.cells() {
            let x = g.position(c)[0];
            let dc = d.values()[c];
            let torque = vec3::cross(h.values()[c], dc);
            assert!(vec3::norm_sq(torque).sqrt() < 1e-10);
            let along = vec3::dot(h.values()[c], dc);
            let cont = kk * k * k * (1.0 + (k * x).cos().powi(2));
            assert!((along - cont).abs() < 10.0 * (k * hh).powi(2) * cont, "{along} {cont}");
        }
        // cross-check against the oracle at one cell
        let o = energy_gradient_oracle(&rho, &d, &params([kk; 3]), 7, 1e-4);
        assert!(vec3::norm_sq(vec3::sub(o, h.values()[7])).sqrt() < 1e-5);
    }

    #[test]
    fn density_is_nonnegative_for_random_directors() {
        let g = Grid::cube(5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vals = (0..g.cells())
            .map(|_| std::array::from_fn(|_| rng.gen_range(-2.0..2.0)))
            .collect();
        let d = VectorField::new(g, vals).unwrap();
        let w = frank_energy_density(&d, &params([0.3, 1.0, 2.0])).unwrap();
        assert!(w.values().iter().all(|x| *x >= 0.0));
    }
}
