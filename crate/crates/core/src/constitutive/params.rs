use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Material constants of the compressible Ericksen–Leslie system.
///
/// JSON field names are fixed: `gamma`, `pressure_coeff`, `inertia_J`,
/// `K1`..`K3`, `mu1`..`mu6`, `lambda1`, `lambda2`. Unknown keys are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    pub gamma: f64,
    /// Constant in `p = pressure_coeff * rho^gamma`.
    pub pressure_coeff: f64,
    #[serde(rename = "inertia_J")]
    pub inertia_j: f64,
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    #[serde(rename = "K3")]
    pub k3: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
    pub mu5: f64,
    pub mu6: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl MaterialParams {
    /// Coefficient of `∫(N, Ad)` in the energy balance.
    pub fn cross_coeff(&self) -> f64 {
        self.lambda2 - self.mu2 - self.mu3
    }

    /// `2 sqrt(-lambda1 (mu5 + mu6))`, the largest admissible `|cross_coeff|`.
    pub fn cross_bound(&self) -> f64 {
        2.0 * (-self.lambda1 * (self.mu5 + self.mu6)).max(0.0).sqrt()
    }

    pub fn max_frank(&self) -> f64 {
        self.k1.max(self.k2).max(self.k3)
    }

    /// Leslie coefficients derived from `lambda1 = mu2 - mu3`, `lambda2 = mu5 - mu6`
    /// and Parodi's relation, given the independent set.
    #[allow(clippy::too_many_arguments)]
    pub fn from_independent(
        gamma: f64,
        pressure_coeff: f64,
        inertia_j: f64,
        frank: [f64; 3],
        mu1: f64,
        mu4: f64,
        mu2: f64,
        mu3: f64,
        mu5: f64,
    ) -> Self {
        // Parodi: mu2 + mu3 = mu6 - mu5
        let mu6 = mu2 + mu3 + mu5;
        MaterialParams {
            gamma,
            pressure_coeff,
            inertia_j,
            k1: frank[0],
            k2: frank[1],
            k3: frank[2],
            mu1,
            mu2,
            mu3,
            mu4,
            mu5,
            mu6,
            lambda1: mu2 - mu3,
            lambda2: mu5 - mu6,
        }
    }

    fn named(&self) -> [(&'static str, f64); 14] {
        [
            ("gamma", self.gamma),
            ("pressure_coeff", self.pressure_coeff),
            ("inertia_J", self.inertia_j),
            ("K1", self.k1),
            ("K2", self.k2),
            ("K3", self.k3),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("mu3", self.mu3),
            ("mu4", self.mu4),
            ("mu5", self.mu5),
            ("mu6", self.mu6),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationMode {
    /// Parodi's relation is a hard requirement.
    Strict,
    /// Parodi's relation mismatch is reported as a warning only.
    #[default]
    ParodiOptional,
}

/// One failed material relation, carrying both sides' values.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "relation", rename_all = "snake_case")]
pub enum Violation {
    NonFinite { name: &'static str, value: f64 },
    /// `gamma > 1`
    AdiabaticExponent { gamma: f64 },
    /// `pressure_coeff > 0`
    PressureCoefficient { value: f64 },
    /// `inertia_J > 0`
    Inertia { value: f64 },
    /// `K >= 0`
    FrankConstant { name: &'static str, value: f64 },
    /// `lambda1 = mu2 - mu3`
    Lambda1Relation { lambda1: f64, mu2_minus_mu3: f64 },
    /// `lambda2 = mu5 - mu6`
    Lambda2Relation { lambda2: f64, mu5_minus_mu6: f64 },
    /// `mu2 + mu3 = mu6 - mu5`
    Parodi { mu2_plus_mu3: f64, mu6_minus_mu5: f64 },
    /// `lambda1 < 0`
    DirectorDissipation { lambda1: f64 },
    /// `mu5 + mu6 >= 0`
    AlignmentViscosity { mu5_plus_mu6: f64 },
    /// `mu1 >= 0`
    Mu1Sign { mu1: f64 },
    /// `mu4 > 0`
    Mu4Sign { mu4: f64 },
    /// `|lambda2 - (mu2 + mu3)| <= 2 sqrt(-lambda1 (mu5 + mu6))`
    CrossCoupling { lhs: f64, rhs: f64 },
}

impl Violation {
    /// The relation as a formula, for reports.
    pub fn relation(&self) -> &'static str {
        match self {
            Violation::NonFinite { .. } => "all coefficients finite",
            Violation::AdiabaticExponent { .. } => "gamma > 1",
            Violation::PressureCoefficient { .. } => "pressure_coeff > 0",
            Violation::Inertia { .. } => "inertia_J > 0",
            Violation::FrankConstant { .. } => "K_i >= 0",
            Violation::Lambda1Relation { .. } => "lambda1 = mu2 - mu3",
            Violation::Lambda2Relation { .. } => "lambda2 = mu5 - mu6",
            Violation::Parodi { .. } => "mu2 + mu3 = mu6 - mu5 (Parodi)",
            Violation::DirectorDissipation { .. } => "lambda1 < 0",
            Violation::AlignmentViscosity { .. } => "mu5 + mu6 >= 0",
            Violation::Mu1Sign { .. } => "mu1 >= 0",
            Violation::Mu4Sign { .. } => "mu4 > 0",
            Violation::CrossCoupling { .. } => {
                "|lambda2 - (mu2 + mu3)| <= 2 sqrt(-lambda1 (mu5 + mu6))"
            }
        }
    }

    /// Relations whose failure makes the system itself ill-posed (as opposed to
    /// failing the dissipation hypotheses).
    pub fn is_structural(&self) -> bool {
        matches!(
            self,
            Violation::NonFinite { .. }
                | Violation::AdiabaticExponent { .. }
                | Violation::PressureCoefficient { .. }
                | Violation::Inertia { .. }
                | Violation::FrankConstant { .. }
        )
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "violated {}: ", self.relation())?;
        match *self {
            Violation::NonFinite { name, value } => write!(f, "{name} = {value}"),
            Violation::AdiabaticExponent { gamma } => write!(f, "gamma = {gamma}"),
            Violation::PressureCoefficient { value } => write!(f, "pressure_coeff = {value}"),
            Violation::Inertia { value } => write!(f, "inertia_J = {value}"),
            Violation::FrankConstant { name, value } => write!(f, "{name} = {value}"),
            Violation::Lambda1Relation {
                lambda1,
                mu2_minus_mu3,
            } => write!(f, "lambda1 = {lambda1}, mu2 - mu3 = {mu2_minus_mu3}"),
            Violation::Lambda2Relation {
                lambda2,
                mu5_minus_mu6,
            } => write!(f, "lambda2 = {lambda2}, mu5 - mu6 = {mu5_minus_mu6}"),
            Violation::Parodi {
                mu2_plus_mu3,
                mu6_minus_mu5,
            } => write!(f, "mu2 + mu3 = {mu2_plus_mu3}, mu6 - mu5 = {mu6_minus_mu5}"),
            Violation::DirectorDissipation { lambda1 } => write!(f, "lambda1 = {lambda1}"),
            Violation::AlignmentViscosity { mu5_plus_mu6 } => {
                write!(f, "mu5 + mu6 = {mu5_plus_mu6}")
            }
            Violation::Mu1Sign { mu1 } => write!(f, "mu1 = {mu1}"),
            Violation::Mu4Sign { mu4 } => write!(f, "mu4 = {mu4}"),
            Violation::CrossCoupling { lhs, rhs } => write!(f, "lhs = {lhs}, rhs = {rhs}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{} material relation(s) violated: {}", violations.len(), render(violations))]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

fn render(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Parameters that passed [`validate_params`], plus derived scalars.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedParams {
    pub params: MaterialParams,
    pub mode: ValidationMode,
    /// `lambda2 - mu2 - mu3`
    pub cross_coeff: f64,
    /// `2 sqrt(-lambda1 (mu5 + mu6))`
    pub cross_bound: f64,
    /// Dissipation coefficients of the energy balance, `(mu1, mu4 / 2, mu5 + mu6, lambda1)`.
    pub dissipation: [f64; 4],
    pub warnings: Vec<Violation>,
}

pub const DEFAULT_RELATIVE_EPS: f64 = 1e-12;

fn approx_eq(a: f64, b: f64, eps: f64) -> bool {
    a == b || (a - b).abs() <= eps * a.abs().max(b.abs())
}

/// Every relation checked independently; all failures are returned together.
///
/// The structural checks and the full set of dissipation hypotheses are hard
/// in both modes; only Parodi's relation depends on `mode`.
pub fn validate_params(
    p: &MaterialParams,
    mode: ValidationMode,
) -> Result<ValidatedParams, ValidationError> {
    validate_params_with(p, mode, DEFAULT_RELATIVE_EPS)
}

pub fn validate_params_with(
    p: &MaterialParams,
    mode: ValidationMode,
    eps: f64,
) -> Result<ValidatedParams, ValidationError> {
    let (hard, warnings) = collect_violations(p, mode, eps);
    if !hard.is_empty() {
        return Err(ValidationError { violations: hard });
    }
    Ok(ValidatedParams {
        params: *p,
        mode,
        cross_coeff: p.cross_coeff(),
        cross_bound: p.cross_bound(),
        dissipation: [p.mu1, 0.5 * p.mu4, p.mu5 + p.mu6, p.lambda1],
        warnings,
    })
}

/// Only the conditions without which the equations cannot be evaluated.
pub fn validate_structural(p: &MaterialParams) -> Result<(), ValidationError> {
    let (hard, _) = collect_violations(p, ValidationMode::ParodiOptional, DEFAULT_RELATIVE_EPS);
    let structural: Vec<_> = hard.into_iter().filter(|v| v.is_structural()).collect();
    if structural.is_empty() {
        Ok(())
    } else {
        Err(ValidationError {
            violations: structural,
        })
    }
}

fn collect_violations(
    p: &MaterialParams,
    mode: ValidationMode,
    eps: f64,
) -> (Vec<Violation>, Vec<Violation>) {
    let mut hard = Vec::new();
    let mut warn = Vec::new();
    for (name, value) in p.named() {
        if !value.is_finite() {
            hard.push(Violation::NonFinite { name, value });
        }
    }
    if !hard.is_empty() {
        return (hard, warn);
    }
    if p.gamma <= 1.0 {
        hard.push(Violation::AdiabaticExponent { gamma: p.gamma });
    }
    if p.pressure_coeff <= 0.0 {
        hard.push(Violation::PressureCoefficient {
            value: p.pressure_coeff,
        });
    }
    if p.inertia_j <= 0.0 {
        hard.push(Violation::Inertia { value: p.inertia_j });
    }
    for (name, value) in [("K1", p.k1), ("K2", p.k2), ("K3", p.k3)] {
        if value < 0.0 {
            hard.push(Violation::FrankConstant { name, value });
        }
    }
    if !approx_eq(p.lambda1, p.mu2 - p.mu3, eps) {
        hard.push(Violation::Lambda1Relation {
            lambda1: p.lambda1,
            mu2_minus_mu3: p.mu2 - p.mu3,
        });
    }
    if !approx_eq(p.lambda2, p.mu5 - p.mu6, eps) {
        hard.push(Violation::Lambda2Relation {
            lambda2: p.lambda2,
            mu5_minus_mu6: p.mu5 - p.mu6,
        });
    }
    if !approx_eq(p.mu2 + p.mu3, p.mu6 - p.mu5, eps) {
        let v = Violation::Parodi {
            mu2_plus_mu3: p.mu2 + p.mu3,
            mu6_minus_mu5: p.mu6 - p.mu5,
        };
        match mode {
            ValidationMode::Strict => hard.push(v),
            ValidationMode::ParodiOptional => warn.push(v),
        }
    }
    if p.lambda1 >= 0.0 {
        hard.push(Violation::DirectorDissipation { lambda1: p.lambda1 });
    }
    if p.mu5 + p.mu6 < 0.0 {
        hard.push(Violation::AlignmentViscosity {
            mu5_plus_mu6: p.mu5 + p.mu6,
        });
    }
    if p.mu1 < 0.0 {
        hard.push(Violation::Mu1Sign { mu1: p.mu1 });
    }
    if p.mu4 <= 0.0 {
        hard.push(Violation::Mu4Sign { mu4: p.mu4 });
    }
    let lhs = p.cross_coeff().abs();
    let rhs = p.cross_bound();
    if lhs > rhs * (1.0 + eps) {
        hard.push(Violation::CrossCoupling { lhs, rhs });
    }
    (hard, warn)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Boundary case of the cross-coupling bound; also satisfies Parodi.
    pub(crate) fn boundary() -> MaterialParams {
        MaterialParams {
            gamma: 1.4,
            pressure_coeff: 1.0,
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
    fn boundary_case_accepted_in_strict_mode() {
        let v = validate_params(&boundary(), ValidationMode::Strict).unwrap();
        assert_eq!(v.cross_coeff, 2.0);
        assert_eq!(v.cross_bound, 2.0);
        assert!(v.warnings.is_empty());
    }

    #[test]
    fn zero_lambda1_rejected() {
        let mut p = boundary();
        p.lambda1 = 0.0;
        p.mu3 = -1.0; // keep lambda1 = mu2 - mu3
        p.mu6 = 2.0;
        p.lambda2 = -1.0;
        let err = validate_params(&p, ValidationMode::ParodiOptional).unwrap_err();
        assert!(err
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DirectorDissipation { lambda1 } if *lambda1 == 0.0)));
    }

    #[test]
    fn lambda1_relation_reports_both_sides() {
        let mut p = boundary();
        p.lambda1 = -1.5;
        let err = validate_params(&p, ValidationMode::ParodiOptional).unwrap_err();
        assert!(err.violations.contains(&Violation::Lambda1Relation {
            lambda1: -1.5,
            mu2_minus_mu3: -1.0
        }));
        assert!(err.to_string().contains("lambda1 = mu2 - mu3"));
    }

    #[test]
    fn parodi_is_mode_dependent() {
        let mut p = boundary();
        // break Parodi but keep the lambda relations
        p.mu5 = 1.0;
        p.mu6 = 0.5;
        p.lambda2 = 0.5;
        let strict = validate_params(&p, ValidationMode::Strict).unwrap_err();
        assert!(strict
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Parodi { .. })));
        let relaxed = validate_params(&p, ValidationMode::ParodiOptional).unwrap();
        assert_eq!(relaxed.warnings.len(), 1);
    }

    #[test]
    fn cross_coupling_violation_rejected() {
        let mut p = boundary();
        p.mu5 = 0.5;
        p.mu6 = -0.5;
        p.lambda2 = 1.0;
        // mu5 + mu6 = 0 -> bound 0 < |1 - (-1)| = 2
        let err = validate_params(&p, ValidationMode::ParodiOptional).unwrap_err();
        assert!(err
            .violations
            .iter()
            .any(|v| matches!(v, Violation::CrossCoupling { .. })));
    }

    #[test]
    fn each_relation_reported_individually() {
        let mut p = boundary();
        p.gamma = 1.0;
        p.mu4 = 0.0;
        p.mu1 = -1.0;
        let err = validate_params(&p, ValidationMode::Strict).unwrap_err();
        assert_eq!(err.violations.len(), 3, "{err}");
        assert!(err.to_string().contains("gamma > 1"));
    }

    #[test]
    fn json_field_names_are_fixed() {
        let p = boundary();
        let s = serde_json::to_string(&p).unwrap();
        for key in ["\"inertia_J\"", "\"K1\"", "\"mu6\"", "\"lambda2\"", "\"pressure_coeff\""] {
            assert!(s.contains(key), "{s}");
        }
        let back: MaterialParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let extra = s.replacen('{', "{\"mu7\":1.0,", 1);
        assert!(serde_json::from_str::<MaterialParams>(&extra).is_err());
        let missing = s.replace("\"K2\":1.0,", "");
        let err = serde_json::from_str::<MaterialParams>(&missing).unwrap_err();
        assert!(err.to_string().contains("K2"), "{err}");
    }

    #[test]
    fn independent_constructor_satisfies_relations() {
        let p = MaterialParams::from_independent(2.0, 1.0, 0.5, [1.0, 0.5, 2.0], 0.1, 1.0, -0.5, 0.1, 0.4);
        let v = validate_params(&p, ValidationMode::Strict).unwrap();
        assert!(v.warnings.is_empty());
    }
}
