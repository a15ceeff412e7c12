//! Sharp constant of `(∫|u|⁶)^{1/3} ≤ C₁ ∫|∇u|²` on ℝ³.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CertificateError;
use crate::fields::ops::{inv_two_h, jacobian_at, sum};
use crate::fields::vec3;
use crate::fields::{Field, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SobolevMethod {
    Talenti,
    Rayleigh,
}

/// Radial quadrature of the extremal `u = (1+r²)^{-1/2}` up to `r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TalentiEstimate {
    pub r_max: f64,
    /// `∫₀^{r_max} r² u⁶ dr` and its analytic tail beyond `r_max`
    pub i6: f64,
    pub i6_tail: f64,
    /// `∫₀^{r_max} r² u_r² dr` and its tail
    pub ig: f64,
    pub ig_tail: f64,
    /// Ratio without the tail correction.
    pub truncated: f64,
    pub ratio: f64,
}

const PANEL_DEGREE: usize = 40;
const TAIL_TOL: f64 = 1e-17;

fn rule(n: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(n).expect("nonzero"))
}

/// `∫_R^∞ r^{-a}(1 + r^{-2})^{-3} dr = Σ_k binom(−3,k) R^{1−a−2k}/(a+2k−1)`.
fn tail(r: f64, a: i32) -> Result<f64, CertificateError> {
    let x = r.powi(-2);
    if x >= 0.5 {
        return Err(CertificateError::Quadrature(format!("tail series needs r_max > 1.5, got {r}")));
    }
    let mut total = 0.0;
    for k in 0..400 {
        let kf = k as f64;
        let c = if k % 2 == 0 { 1.0 } else { -1.0 } * (kf + 1.0) * (kf + 2.0) / 2.0;
        let term = c * r.powi(1 - a) * x.powi(k) / (a as f64 + 2.0 * kf - 1.0);
        total += term;
        // alternating with decreasing terms: the next term bounds the remainder
        if term.abs() <= TAIL_TOL * total.abs() {
            return Ok(total);
        }
    }
    Err(CertificateError::Quadrature(format!(
        "tail series at r_max = {r} did not reach relative tolerance {TAIL_TOL:e}"
    )))
}

pub fn talenti(r_max: f64) -> Result<TalentiEstimate, CertificateError> {
    let gl = rule(PANEL_DEGREE);
    let f6 = |r: f64| r * r * (1.0 + r * r).powi(-3);
    // u_r = −r(1+r²)^{−3/2}
    let fg = |r: f64| r.powi(4) * (1.0 + r * r).powi(-3);
    let mut edges = vec![0.0, 0.25, 0.5, 1.0];
    while *edges.last().unwrap() < r_max {
        let next = (edges.last().unwrap() * 1.5).min(r_max);
        edges.push(next);
    }
    let (mut i6, mut ig) = (0.0, 0.0);
    for w in edges.windows(2) {
        i6 += gl.integrate(w[0], w[1], f6);
        ig += gl.integrate(w[0], w[1], fg);
    }
    let i6_tail = tail(r_max, 4)?;
    let ig_tail = tail(r_max, 2)?;
    let ratio_of = |a: f64, b: f64| (4.0 * PI * a).cbrt() / (4.0 * PI * b);
    Ok(TalentiEstimate {
        r_max,
        i6,
        i6_tail,
        ig,
        ig_tail,
        truncated: ratio_of(i6, ig),
        ratio: ratio_of(i6 + i6_tail, ig + ig_tail),
    })
}

/// Talenti value at `r_max = 10⁴`, computed once.
pub fn talenti_c1() -> Result<f64, CertificateError> {
    static C1: OnceLock<Result<f64, String>> = OnceLock::new();
    C1.get_or_init(|| talenti(1e4).map(|e| e.ratio).map_err(|e| e.to_string()))
        .clone()
        .map_err(CertificateError::Quadrature)
}

/// Outcome of the variational search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighEstimate {
    pub ratio: f64,
    pub seed_ratio: f64,
    pub iterations: usize,
    pub basis_size: usize,
}

/// Ascent of the Rayleigh quotient over `u(r) = (1−t) p(t)`, `t = r/(1+r)`,
/// with `p` a Chebyshev polynomial of degree `basis − 1`, seeded by a Gaussian.
///
/// In `t` the quotient is `(4π N₆)^{1/3}/(4π D)` with `N₆ = ∫t²(1−t)²p⁶dt`
/// and `D = ∫t² u_t² dt`. Steps follow the gradient preconditioned by the
/// Gram matrix of `D`, with backtracking so the quotient never decreases.
pub fn rayleigh_search(basis: usize, max_iter: usize) -> Result<RayleighEstimate, CertificateError> {
    let q = rule(160);
    let nodes: Vec<(f64, f64)> = q
        .as_node_weight_pairs()
        .iter()
        .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    // T_k(2t−1) and its t-derivative at every node
    let cheb = |t: f64| -> (Vec<f64>, Vec<f64>) {
        let x = 2.0 * t - 1.0;
        let mut v = vec![0.0; basis];
        let mut dv = vec![0.0; basis];
        v[0] = 1.0;
        if basis > 1 {
            v[1] = x;
            dv[1] = 2.0;
        }
        for k in 2..basis {
            v[k] = 2.0 * x * v[k - 1] - v[k - 2];
            dv[k] = 4.0 * v[k - 1] + 2.0 * x * dv[k - 1] - dv[k - 2];
        }
        (v, dv)
    };
    let table: Vec<(f64, f64, Vec<f64>, Vec<f64>)> = nodes
        .iter()
        .map(|&(t, w)| {
            let (v, dv) = cheb(t);
            // φ_k = (1−t)T_k, φ_k' = −T_k + (1−t)T_k'
            let dphi: Vec<f64> = (0..basis).map(|k| -v[k] + (1.0 - t) * dv[k]).collect();
            (t, w, v, dphi)
        })
        .collect();

    let mut gram = DMatrix::<f64>::zeros(basis, basis);
    for (t, w, _, dphi) in &table {
        for k in 0..basis {
            for l in 0..basis {
                gram[(k, l)] += w * t * t * dphi[k] * dphi[l];
            }
        }
    }
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| CertificateError::Quadrature("Gram matrix not positive definite".into()))?;

    let eval = |c: &DVector<f64>| -> (f64, f64, DVector<f64>) {
        let mut n6 = 0.0;
        let mut b = DVector::<f64>::zeros(basis);
        for (t, w, v, _) in &table {
            let p: f64 = (0..basis).map(|k| c[k] * v[k]).sum();
            let wt = w * t * t * (1.0 - t) * (1.0 - t);
            n6 += wt * p.powi(6);
            for k in 0..basis {
                b[k] += wt * p.powi(5) * v[k];
            }
        }
        let dg = c.dot(&(&gram * c));
        (n6, dg, b)
    };
    let quotient = |n6: f64, dg: f64| (4.0 * PI * n6).cbrt() / (4.0 * PI * dg);

    // Gaussian seed exp(−r²) interpolated at Chebyshev points
    let pts: Vec<f64> = (0..basis)
        .map(|j| 0.5 * (1.0 - (PI * (j as f64 + 0.5) / basis as f64).cos()))
        .collect();
    let mut vand = DMatrix::<f64>::zeros(basis, basis);
    let mut rhs = DVector::<f64>::zeros(basis);
    for (j, &t) in pts.iter().enumerate() {
        let (v, _) = cheb(t);
        for k in 0..basis {
            vand[(j, k)] = v[k];
        }
        let r = t / (1.0 - t);
        rhs[j] = (-r * r).exp() / (1.0 - t);
    }
    let mut c = vand
        .lu()
        .solve(&rhs)
        .ok_or_else(|| CertificateError::Quadrature("seed interpolation failed".into()))?;

    let (n6, dg, mut b) = eval(&c);
    let seed_ratio = quotient(n6, dg);
    let mut best = seed_ratio;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let (n6, dg, _) = eval(&c);
        // natural gradient of ln R: 2G⁻¹b/N₆ − 2c/D; step D/2 is the fixed-point map
        let dir = chol.solve(&b) * (2.0 / n6) - &c * (2.0 / dg);
        let mut eta = 0.5 * dg;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = &c + &dir * eta;
            let (tn, td, tb) = eval(&trial);
            let r = quotient(tn, td);
            if r > best {
                let gain = (r - best) / best;
                // fix the scale so the iteration stays well conditioned
                let s = 1.0 / td.sqrt();
                c = trial * s;
                b = tb * s.powi(5);
                best = r;
                accepted = true;
                if gain < 1e-15 {
                    return Ok(RayleighEstimate {
                        ratio: best,
                        seed_ratio,
                        iterations,
                        basis_size: basis,
                    });
                }
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(RayleighEstimate {
        ratio: best,
        seed_ratio,
        iterations,
        basis_size: basis,
    })
}

pub fn sobolev_constant(method: SobolevMethod) -> Result<f64, CertificateError> {
    match method {
        SobolevMethod::Talenti => talenti_c1(),
        SobolevMethod::Rayleigh => Ok(rayleigh_search(24, 500)?.ratio),
    }
}

/// `(∫|u|⁶)^{1/3} / ∫|∇u|²` for a discrete field extended by zero.
pub fn embedding_ratio(u: &VectorField) -> f64 {
    let g = u.grid();
    let dv = g.volume_element();
    let w = inv_two_h(g);
    let vals = u.values();
    let (s6, sg): (Vec<f64>, Vec<f64>) = (0..g.cells())
        .into_par_iter()
        .map(|c| {
            let jac = jacobian_at(&g.neighbours(c), w, vals);
            (vec3::norm_sq(vals[c]).powi(3), vec3::contract(&jac, &jac))
        })
        .unzip();
    (dv * sum(&s6)).cbrt() / (dv * sum(&sg))
}
