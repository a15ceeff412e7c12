use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CertificateError;
use crate::constitutive::{pressure_at, MaterialParams};
use crate::diagnostics::support_margin;
use crate::dynamics::State;
use crate::fields::ops::{inv_two_h, jacobian_at, sum};
use crate::fields::vec3;
use crate::fields::{Field, ScalarField, VectorField};

/// `∫ρ^γ/m − (∫ρ^{6/5}/m)^{5(γ−1)}`, nonnegative for `γ ≥ 6/5`.
pub fn jensen_check(rho: &ScalarField, p: &MaterialParams) -> Result<f64, CertificateError> {
    let dv = rho.grid().volume_element();
    let m = dv * sum(rho.values());
    if !(m > 0.0) {
        return Err(CertificateError::ZeroMass);
    }
    let (a, b): (Vec<f64>, Vec<f64>) = rho.values().iter().map(|r| (r.powf(p.gamma), r.powf(1.2))).unzip();
    let lhs = dv * sum(&a) / m;
    let rhs = (dv * sum(&b) / m).powf(5.0 * (p.gamma - 1.0));
    Ok(lhs - rhs)
}

/// `(∫ρ^{6/5})^{5/6}(∫|u|⁶)^{1/6} − |∫ρu|`
pub fn holder_check(rho: &ScalarField, u: &VectorField) -> f64 {
    let dv = rho.grid().volume_element();
    let r65: Vec<f64> = rho.values().iter().map(|r| r.powf(1.2)).collect();
    let u6: Vec<f64> = u.values().iter().map(|v| vec3::norm_sq(*v).powi(3)).collect();
    let mut pm = [0.0; 3];
    for a in 0..3 {
        let comp: Vec<f64> = rho.values().iter().zip(u.values()).map(|(r, v)| r * v[a]).collect();
        pm[a] = dv * sum(&comp);
    }
    (dv * sum(&r65)).powf(5.0 / 6.0) * (dv * sum(&u6)).powf(1.0 / 6.0) - vec3::norm_sq(pm).sqrt()
}

/// `C₂ = m^{5/6}((γ−1)/(m A))^{1/(6(γ−1))}`
pub fn c2_constant(m: f64, p: &MaterialParams) -> f64 {
    m.powf(5.0 / 6.0) * ((p.gamma - 1.0) / (m * p.pressure_coeff)).powf(1.0 / (6.0 * (p.gamma - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaConstant {
    pub c1: f64,
    pub c2: f64,
    /// `|P|²/(C₁C₂²)`, obtained by chaining Hölder, Jensen and the embedding.
    pub derived: f64,
    /// `|P|²C₂/C₁²`, the expression as printed in the source of the lemma.
    pub printed_form: f64,
}

pub fn lemma_constant(
    m: f64,
    p_norm: f64,
    p: &MaterialParams,
    c1: f64,
) -> Result<LemmaConstant, CertificateError> {
    if !(p_norm > 0.0) {
        return Err(CertificateError::Refused(vec![super::Hypothesis::NonzeroMomentum]));
    }
    if !(p.gamma >= 1.2) {
        return Err(CertificateError::Refused(vec![super::Hypothesis::AdiabaticExponent {
            gamma: p.gamma,
        }]));
    }
    if !(m > 0.0) {
        return Err(CertificateError::ZeroMass);
    }
    let c2 = c2_constant(m, p);
    Ok(LemmaConstant {
        c1,
        c2,
        derived: p_norm * p_norm / (c1 * c2 * c2),
        printed_form: p_norm * p_norm * c2 / (c1 * c1),
    })
}

/// Lemma inequality and its ingredients evaluated on one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub step: u64,
    pub t: f64,
    pub grad_u_sq: f64,
    pub e_internal: f64,
    /// `C·E_i^{−1/(3(γ−1))}`
    pub bound: f64,
    pub slack: f64,
    pub holder_slack: f64,
    pub jensen_slack: f64,
    /// `C₂E_i^{1/(6(γ−1))}(∫|u|⁶)^{1/6} − |P|`
    pub chain_slack: f64,
    /// `C₁∫|∇u|² − (∫|u|⁶)^{1/3}`
    pub embedding_slack: f64,
    pub support_margin: f64,
    pub in_window: bool,
    pub norms: ConditionNorms,
}

/// Discrete norms of the regularity assumptions `u ∈ H¹` and `dᵀAd, Ad, N ∈ L²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionNorms {
    pub u_h1: f64,
    pub dad_l2: f64,
    pub ad_l2: f64,
    pub n_l2: f64,
}

impl ConditionNorms {
    pub fn finite(&self) -> bool {
        [self.u_h1, self.dad_l2, self.ad_l2, self.n_l2].iter().all(|x| x.is_finite())
    }
}

pub fn lemma_check(
    step: u64,
    s: &State,
    p: &MaterialParams,
    lemma: &LemmaConstant,
    min_margin: f64,
) -> Result<SnapshotRecord, CertificateError> {
    let g = *s.grid();
    let dv = g.volume_element();
    let w = inv_two_h(&g);
    let u = s.velocity();
    let uv = u.values();
    let d = s.d.values();
    let om = s.omega.values();
    let per: Vec<[f64; 7]> = (0..g.cells())
        .into_par_iter()
        .map(|c| {
            let gu = jacobian_at(&g.neighbours(c), w, uv);
            let (a, _, nn) = crate::constitutive::kinematics_at(&gu, d[c], om[c]);
            let ad = vec3::mat_vec(&a, d[c]);
            let dad = vec3::dot(d[c], ad);
            [
                vec3::contract(&gu, &gu),
                vec3::norm_sq(uv[c]),
                vec3::norm_sq(uv[c]).powi(3),
                pressure_at(s.rho.values()[c], p) / (p.gamma - 1.0),
                dad * dad,
                vec3::norm_sq(ad),
                vec3::norm_sq(nn),
            ]
        })
        .collect();
    let tot: Vec<f64> = (0..7).map(|k| dv * sum(&per.iter().map(|v| v[k]).collect::<Vec<_>>())).collect();
    let (grad_u_sq, u_sq, u6, e_i) = (tot[0], tot[1], tot[2], tot[3]);
    let mut pm = [0.0; 3];
    for a in 0..3 {
        pm[a] = dv * sum(&s.mom.values().iter().map(|m| m[a]).collect::<Vec<_>>());
    }
    let ex = 1.0 / (3.0 * (p.gamma - 1.0));
    let bound = lemma.derived * e_i.powf(-ex);
    let margin = support_margin(&g, s.mom.values());
    let rec = SnapshotRecord {
        step,
        t: s.t,
        grad_u_sq,
        e_internal: e_i,
        bound,
        slack: grad_u_sq - bound,
        holder_slack: holder_check(&s.rho, &u),
        jensen_slack: jensen_check(&s.rho, p)?,
        chain_slack: lemma.c2 * e_i.powf(0.5 * ex) * u6.powf(1.0 / 6.0) - vec3::norm_sq(pm).sqrt(),
        embedding_slack: lemma.c1 * grad_u_sq - u6.cbrt(),
        support_margin: margin,
        in_window: margin > min_margin,
        norms: ConditionNorms {
            u_h1: (u_sq + grad_u_sq).sqrt(),
            dad_l2: tot[4].sqrt(),
            ad_l2: tot[5].sqrt(),
            n_l2: tot[6].sqrt(),
        },
    };
    if !(rec.slack.is_finite() && rec.holder_slack.is_finite() && rec.chain_slack.is_finite()) {
        return Err(CertificateError::NonFinite("lemma record"));
    }
    Ok(rec)
}
