use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::constitutive::{MaterialParams, ValidationMode};
use crate::fields::{Grid, GridSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("override `{0}` must look like key.path=value")]
    BadOverride(String),
    #[error("override `{key}`: cannot descend into non-object at `{at}`")]
    OverridePath { key: String, at: String },
    #[error("invalid grid: {0}")]
    Grid(#[from] crate::fields::FieldError),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Which force terms the right-hand side assembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    #[default]
    Full,
    /// Barotropic Navier–Stokes with viscosity `mu4` only; `d` and `ω` frozen.
    NavierStokes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DtPolicy {
    Fixed { dt: f64 },
    Cfl { safety: f64, dt_max: f64 },
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Cfl {
            safety: 0.5,
            dt_max: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RenormPolicy {
    #[default]
    Off,
    Every { steps: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Uniform density, everything else at rest.
    Static,
    /// Density bump, `u = 0`, constant director.
    Quiescent,
    /// Compact bumps in every field; the default for lifespan certificates.
    Certified,
    /// Like `certified` with a constant director and `ω = 0`.
    NsReduction,
    /// Smooth low-mode periodic fields with random phases.
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DirectorPattern {
    Constant { axis: [f64; 3] },
    /// `d = (cos kx₁, sin kx₁, 0)` with `k = 2π·waves/L₁`.
    Twist { waves: u32 },
    /// Constant `e₃` far field, rotated towards `e₁` by `angle·bell(x)` inside the support.
    Bump { angle: f64, radius: f64 },
    /// Smooth periodic polar/azimuthal modulation with seeded phases.
    Waves { amplitude: f64 },
}

/// Initial-data description. Unset fields take the preset's defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_background: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum_amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum_direction: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub director: Option<DirectorPattern>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_radius: Option<f64>,
    /// Bell profile exponent `p` in `cos^{2p}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bell_power: Option<u32>,
}

/// Initial data with every field resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedInitial {
    pub preset: Preset,
    pub rho_background: f64,
    pub rho_amplitude: f64,
    pub rho_radius: f64,
    pub momentum_amplitude: f64,
    pub momentum_radius: f64,
    pub momentum_direction: [f64; 3],
    pub director: DirectorPattern,
    pub omega_amplitude: f64,
    pub omega_radius: f64,
    pub bell_power: u32,
}

impl InitialSpec {
    pub fn preset(preset: Preset) -> Self {
        InitialSpec {
            preset,
            rho_background: None,
            rho_amplitude: None,
            rho_radius: None,
            momentum_amplitude: None,
            momentum_radius: None,
            momentum_direction: None,
            director: None,
            omega_amplitude: None,
            omega_radius: None,
            bell_power: None,
        }
    }

    pub fn resolve(&self) -> ResolvedInitial {
        let e3 = DirectorPattern::Constant { axis: [0.0, 0.0, 1.0] };
        let (rho_amp, m_amp, dir, w_amp) = match self.preset {
            Preset::Static => (0.0, 0.0, e3, 0.0),
            Preset::Quiescent => (1.0, 0.0, e3, 0.0),
            Preset::Certified => (
                1.0,
                0.2,
                DirectorPattern::Bump {
                    angle: 0.6,
                    radius: 0.25,
                },
                1.0,
            ),
            Preset::NsReduction => (1.0, 0.2, e3, 0.0),
            Preset::Periodic => (0.2, 0.1, DirectorPattern::Waves { amplitude: 0.3 }, 0.5),
        };
        ResolvedInitial {
            preset: self.preset,
            rho_background: self.rho_background.unwrap_or(match self.preset {
                Preset::Periodic => 1.0,
                _ => 0.5,
            }),
            rho_amplitude: self.rho_amplitude.unwrap_or(rho_amp),
            rho_radius: self.rho_radius.unwrap_or(0.3),
            momentum_amplitude: self.momentum_amplitude.unwrap_or(m_amp),
            momentum_radius: self.momentum_radius.unwrap_or(0.2),
            momentum_direction: self.momentum_direction.unwrap_or([1.0, 0.0, 0.0]),
            director: self.director.unwrap_or(dir),
            omega_amplitude: self.omega_amplitude.unwrap_or(w_amp),
            omega_radius: self.omega_radius.unwrap_or(0.2),
            bell_power: self.bell_power.unwrap_or(4),
        }
    }
}

/// Drift and support thresholds beyond which a run leaves the admissible class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub drift_d: f64,
    pub drift_dw: f64,
    /// Minimum support margin, in cells, for the whole-space idealization.
    pub support_margin_cells: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            drift_d: 1e-5,
            drift_dw: 1e-5,
            support_margin_cells: 4.0,
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_snapshot_every() -> u64 {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: MaterialParams,
    #[serde(default)]
    pub validation: ValidationMode,
    /// When false only structural relations are enforced; used for
    /// Newtonian-limit comparisons where the sign conditions cannot hold.
    #[serde(default = "default_true")]
    pub require_admissible: bool,
    #[serde(default)]
    pub coupling: Coupling,
    pub initial: InitialSpec,
    #[serde(default)]
    pub dt: DtPolicy,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    /// Snapshot cadence in steps; the initial and final states are always kept.
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: u64,
    #[serde(default)]
    pub renormalize: RenormPolicy,
    /// Defaults to `1e-3 × max(rho_amplitude, rho_background)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_floor: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Initial data must carry `|P| ≠ 0`.
    #[serde(default)]
    pub request_certificate: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Self::from_json_with_overrides::<&str>(text, &[])
    }

    pub fn from_json_with_overrides<S: AsRef<str>>(
        text: &str,
        overrides: &[S],
    ) -> Result<Self, ConfigError> {
        let mut v: Value = serde_json::from_str(text)?;
        // overrides see the defaults, so `dt.safety=...` works without a `dt` block
        if !overrides.is_empty() {
            if let Ok(full) = serde_json::from_value::<RunConfig>(v.clone()) {
                v = serde_json::to_value(full)?;
            }
        }
        for o in overrides {
            apply_override(&mut v, o.as_ref())?;
        }
        let cfg: RunConfig = serde_json::from_value(v)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical compact JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn build_grid(&self) -> Result<Grid, ConfigError> {
        Ok(Grid::new(self.grid.n, self.grid.l)?)
    }

    pub fn rho_floor(&self) -> f64 {
        let init = self.initial.resolve();
        self.rho_floor
            .unwrap_or(1e-3 * init.rho_amplitude.max(init.rho_background))
    }

    /// Sanity checks that do not involve the material parameters.
    pub fn check(&self) -> Result<(), ConfigError> {
        let grid = self.build_grid()?;
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        match self.dt {
            DtPolicy::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
                return bad(format!("fixed dt must be positive, got {dt}"))
            }
            DtPolicy::Cfl { safety, dt_max } => {
                if !(safety > 0.0 && safety <= 1.0) {
                    return bad(format!("CFL safety must lie in (0, 1], got {safety}"));
                }
                if !(dt_max > 0.0 && dt_max.is_finite()) {
                    return bad(format!("dt_max must be positive, got {dt_max}"));
                }
            }
            _ => {}
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be at least 1".into());
        }
        if let RenormPolicy::Every { steps: 0 } = self.renormalize {
            return bad("renormalize.steps must be at least 1".into());
        }
        let init = self.initial.resolve();
        let half = grid.lengths().iter().cloned().fold(f64::INFINITY, f64::min) / 2.0;
        let mut radii = vec![
            ("rho_radius", init.rho_radius),
            ("momentum_radius", init.momentum_radius),
            ("omega_radius", init.omega_radius),
        ];
        if let DirectorPattern::Bump { radius, .. } = init.director {
            radii.push(("director.radius", radius));
        }
        for (name, r) in radii {
            if !(r > 0.0 && r < half) {
                return bad(format!("{name} = {r} must lie in (0, {half}) (box half-width)"));
            }
        }
        if !(init.rho_background >= 0.0 && init.rho_amplitude >= 0.0) {
            return bad("density background and amplitude must be nonnegative".into());
        }
        if init.bell_power == 0 {
            return bad("bell_power must be at least 1".into());
        }
        let floor = self.rho_floor();
        if !(floor > 0.0 && floor.is_finite()) {
            return bad(format!("rho_floor must be positive, got {floor}"));
        }
        if init.rho_background < floor {
            return bad(format!(
                "rho_background = {} lies below rho_floor = {floor}",
                init.rho_background
            ));
        }
        let t = &self.tolerances;
        if !(t.drift_d > 0.0 && t.drift_dw > 0.0 && t.support_margin_cells >= 0.0) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }
}

/// Set `a.b.c=value` inside a JSON document. The value is parsed as JSON when
/// possible and kept as a string otherwise.
pub(crate) fn apply_override(doc: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(spec.to_string()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::BadOverride(spec.to_string()));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = doc;
    for (i, part) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| ConfigError::OverridePath {
            key: key.to_string(),
            at: parts[..i].join("."),
        })?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> &'static str {
        r#"{
            "grid": {"n": [8, 8, 8], "l": [1, 1, 1]},
            "params": {"gamma": 1.4, "pressure_coeff": 1.0, "inertia_J": 0.05,
                       "K1": 0.01, "K2": 0.01, "K3": 0.01,
                       "mu1": 0.01, "mu2": -0.05, "mu3": 0.05, "mu4": 0.1,
                       "mu5": 0.05, "mu6": 0.05, "lambda1": -0.1, "lambda2": 0.0},
            "initial": {"preset": "certified"},
            "t_end": 0.1
        }"#
    }

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json(sample()).unwrap();
        assert!(c.require_admissible);
        assert_eq!(c.coupling, Coupling::Full);
        assert_eq!(c.renormalize, RenormPolicy::Off);
        assert_eq!(c.rho_floor(), 1e-3);
        assert!(matches!(c.dt, DtPolicy::Cfl { .. }));
    }

    #[test]
    fn overrides_set_nested_keys() {
        let c = RunConfig::from_json_with_overrides(
            sample(),
            &["params.mu4=0.5", "dt.safety=0.25", "initial.momentum_amplitude=0.3", "coupling=navier-stokes"],
        )
        .unwrap();
        assert_eq!(c.params.mu4, 0.5);
        assert_eq!(c.dt, DtPolicy::Cfl { safety: 0.25, dt_max: 1e-2 });
        assert_eq!(c.initial.momentum_amplitude, Some(0.3));
        assert_eq!(c.coupling, Coupling::NavierStokes);
    }

    #[test]
    fn malformed_override_rejected() {
        assert!(matches!(
            RunConfig::from_json_with_overrides(sample(), &["params.mu4"]),
            Err(ConfigError::BadOverride(_))
        ));
        assert!(matches!(
            RunConfig::from_json_with_overrides(sample(), &["t_end.x=1"]),
            Err(ConfigError::OverridePath { .. })
        ));
    }

    #[test]
    fn missing_key_named() {
        let text = sample().replace(r#""t_end": 0.1"#, r#""seed": 1"#);
        let err = RunConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("t_end"), "{err}");
    }

    #[test]
    fn invariants_enforced() {
        for o in ["t_end=0", "dt.safety=1.5", "initial.rho_radius=0.6", "rho_floor=0"] {
            assert!(
                matches!(RunConfig::from_json_with_overrides(sample(), &[o]), Err(ConfigError::Invalid(_))),
                "{o}"
            );
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::from_json(sample()).unwrap();
        let b = RunConfig::from_json_with_overrides(sample(), &["seed=3"]).unwrap();
        assert_eq!(a.hash(), RunConfig::from_json(sample()).unwrap().hash());
        assert_ne!(a.hash(), b.hash());
        let back: RunConfig = serde_json::from_str(&a.to_json_pretty()).unwrap();
        assert_eq!(back, a);
    }
}
