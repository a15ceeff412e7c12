use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{certify, CertificateError, SobolevMethod};
use crate::diagnostics::energy_identity_residual;
use crate::dynamics::{simulate, RunConfig};

/// One swept config key and its values (JSON literals).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<String>,
}

impl SweepAxis {
    /// Parse `key=v1,v2,v3`.
    pub fn parse(spec: &str) -> Option<Self> {
        let (key, vals) = spec.split_once('=')?;
        let values: Vec<String> = vals.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        (!key.trim().is_empty() && !values.is_empty()).then(|| SweepAxis {
            key: key.trim().to_string(),
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub overrides: Vec<String>,
    pub gamma: f64,
    pub mu4: f64,
    pub e0: Option<f64>,
    pub c_lemma: Option<f64>,
    pub t_star: Option<f64>,
    pub rate: Option<f64>,
    /// `max(0, −min lemma slack)` over in-window states.
    pub max_lemma_violation: Option<f64>,
    pub max_energy_residual: Option<f64>,
    pub holds: bool,
    pub verdict: String,
}

fn combos(axes: &[SweepAxis]) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for ax in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                ax.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(format!("{}={v}", ax.key));
                    p
                })
            })
            .collect();
    }
    out
}

/// Run the cartesian product of `axes` over `base` (JSON text) and certify each run.
/// Runs execute in parallel on the current rayon pool.
pub fn run_sweep(base: &str, extra: &[String], axes: &[SweepAxis]) -> Result<Vec<SweepRow>, CertificateError> {
    let all = combos(axes);
    let configs = all
        .iter()
        .map(|ov| {
            let mut o = extra.to_vec();
            o.extend(ov.iter().cloned());
            RunConfig::from_json_with_overrides(base, &o).map(|c| (ov.clone(), c))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(configs.into_par_iter().map(|(ov, cfg)| sweep_one(ov, &cfg)).collect())
}

fn sweep_one(overrides: Vec<String>, cfg: &RunConfig) -> SweepRow {
    let mut row = SweepRow {
        overrides,
        gamma: cfg.params.gamma,
        mu4: cfg.params.mu4,
        e0: None,
        c_lemma: None,
        t_star: None,
        rate: None,
        max_lemma_violation: None,
        max_energy_residual: None,
        holds: false,
        verdict: String::new(),
    };
    let traj = match simulate(cfg) {
        Ok(t) => t,
        Err(e) => {
            row.verdict = format!("run failed: {e}");
            return row;
        }
    };
    row.e0 = traj.reports.first().map(|r| r.e_total);
    row.max_energy_residual = energy_identity_residual(&traj.reports).ok().map(|s| s.max_abs);
    match certify((&traj).into(), SobolevMethod::Talenti) {
        Ok(c) => {
            row.c_lemma = Some(c.c_lemma);
            row.t_star = Some(c.lifespan.t_star);
            row.rate = Some(c.lifespan.rate);
            row.max_lemma_violation = c.min_step_lemma_slack.map(|s| (-s).max(0.0));
            row.holds = c.holds;
            row.verdict = c.verdict;
        }
        Err(e) => row.verdict = e.to_string(),
    }
    row
}

/// Agreement of tabulated `T*` with `T* = 2E0^a/(μ₄C)`, `a = (3γ−2)/(3(γ−1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    /// `max |T*μ₄C/(2E0^a) − 1|` over rows
    pub max_relative_deviation: f64,
    /// Least-squares exponents of `T*` in `μ₄` and `E0` when γ is fixed.
    pub fitted_mu4_exponent: Option<f64>,
    pub fitted_e0_exponent: Option<f64>,
    pub expected_e0_exponent: Option<f64>,
    pub rows_used: usize,
}

pub fn scaling_check(rows: &[SweepRow]) -> ScalingCheck {
    let ok: Vec<(&SweepRow, f64, f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r, r.t_star?, r.e0?, r.c_lemma?)))
        .collect();
    let mut dev: f64 = 0.0;
    for (r, ts, e0, c) in &ok {
        let a = (3.0 * r.gamma - 2.0) / (3.0 * (r.gamma - 1.0));
        dev = dev.max((ts * r.mu4 * c / (2.0 * e0.powf(a)) - 1.0).abs());
    }
    let same_gamma = ok.windows(2).all(|w| w[0].0.gamma == w[1].0.gamma);
    let (mut fm, mut fe, mut expected) = (None, None, None);
    if same_gamma && !ok.is_empty() {
        let g = ok[0].0.gamma;
        expected = Some((3.0 * g - 2.0) / (3.0 * (g - 1.0)));
        // regress ln T* + ln C on [1, ln μ₄, ln E0]; only varying columns are kept
        let cols: Vec<Box<dyn Fn(&(&SweepRow, f64, f64, f64)) -> f64>> = vec![
            Box::new(|_| 1.0),
            Box::new(|x| x.0.mu4.ln()),
            Box::new(|x| x.2.ln()),
        ];
        let varies: Vec<bool> = cols
            .iter()
            .map(|f| {
                let v: Vec<f64> = ok.iter().map(f).collect();
                v.iter().any(|x| (x - v[0]).abs() > 1e-12)
            })
            .collect();
        let keep: Vec<usize> = (0..3).filter(|&k| k == 0 || varies[k]).collect();
        if ok.len() > keep.len() {
            let a = DMatrix::from_fn(ok.len(), keep.len(), |i, j| cols[keep[j]](&ok[i]));
            let b = DVector::from_fn(ok.len(), |i, _| ok[i].1.ln() + ok[i].3.ln());
            if let Ok(x) = a.svd(true, true).solve(&b, 1e-14) {
                for (j, &k) in keep.iter().enumerate() {
                    match k {
                        1 => fm = Some(x[j]),
                        2 => fe = Some(x[j]),
                        _ => {}
                    }
                }
            }
        }
    }
    ScalingCheck {
        max_relative_deviation: dev,
        fitted_mu4_exponent: fm,
        fitted_e0_exponent: fe,
        expected_e0_exponent: expected,
        rows_used: ok.len(),
    }
}
