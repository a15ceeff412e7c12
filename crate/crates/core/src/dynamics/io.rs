//! Trajectory directories: `config.json`, `run.json`, `diagnostics.csv` and
//! numbered snapshot files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{RunConfig, RunStatus, State, Trajectory};
use crate::diagnostics::{self, DiagnosticsError, EnergyReport};
use crate::fields::snapshot::{Snapshot, SnapshotError};

pub const CONFIG_FILE: &str = "config.json";
pub const RUN_FILE: &str = "run.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const AUDIT_FILE: &str = "energy_audit.json";
pub const CERTIFICATE_FILE: &str = "certificate.json";

#[derive(Debug, Error)]
pub enum TrajectoryIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Snapshot(#[from] SnapshotError),
    #[error("{0}")]
    Diagnostics(#[from] DiagnosticsError),
    #[error("{0} already exists")]
    Exists(PathBuf),
    #[error("config hash mismatch in {file}: expected {expected}, found {found}")]
    HashMismatch {
        file: String,
        expected: String,
        found: String,
    },
    #[error("invalid config in trajectory: {0}")]
    Config(#[from] super::ConfigError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TrajectoryIoError + '_ {
    move |source| TrajectoryIoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Run metadata stored next to the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub status: RunStatus,
    pub steps: u64,
    pub lemma_constant: Option<f64>,
    pub rho_floor: f64,
    pub snapshots: Vec<SnapshotEntry>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub step: u64,
    pub t: f64,
    pub file: String,
}

pub fn snapshot_name(step: u64) -> String {
    format!("snapshot_{step:08}.bin")
}

/// Write `traj` into `dir`, which must not exist yet. Everything goes to a
/// sibling staging directory first and is renamed into place at the end.
pub fn write_trajectory(traj: &Trajectory, dir: impl AsRef<Path>) -> Result<(), TrajectoryIoError> {
    let dir = dir.as_ref();
    if dir.exists() {
        return Err(TrajectoryIoError::Exists(dir.to_path_buf()));
    }
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(io_err(parent))?;
    let name = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(io_err(&staging))?;
    }
    fs::create_dir(&staging).map_err(io_err(&staging))?;

    let result = (|| {
        let cfg_path = staging.join(CONFIG_FILE);
        fs::write(&cfg_path, traj.config.to_json_pretty() + "\n").map_err(io_err(&cfg_path))?;
        let mut entries = Vec::new();
        for (step, s) in &traj.snapshots {
            let file = snapshot_name(*step);
            s.to_snapshot(Some(traj.config_hash.clone())).save(staging.join(&file))?;
            entries.push(SnapshotEntry { step: *step, t: s.t, file });
        }
        diagnostics::write_csv(staging.join(DIAGNOSTICS_FILE), &traj.config_hash, &traj.reports)?;
        let summary = RunSummary {
            config_hash: traj.config_hash.clone(),
            status: traj.status.clone(),
            steps: traj.steps,
            lemma_constant: traj.lemma_constant,
            rho_floor: traj.config.rho_floor(),
            snapshots: entries,
            warnings: traj.warnings.clone(),
        };
        let run_path = staging.join(RUN_FILE);
        fs::write(&run_path, serde_json::to_string_pretty(&summary)? + "\n").map_err(io_err(&run_path))?;
        fs::rename(&staging, dir).map_err(io_err(dir))
    })();
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    result
}

/// Write a JSON file next to the trajectory through a temporary file.
pub fn write_json_atomic<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), TrajectoryIoError> {
    let path = path.as_ref();
    let tmp = path.with_extension("json.partial");
    fs::write(&tmp, serde_json::to_string_pretty(value)? + "\n").map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// A trajectory read back from disk. Snapshots are loaded on demand.
#[derive(Debug, Clone)]
pub struct StoredTrajectory {
    pub dir: PathBuf,
    pub config: RunConfig,
    pub summary: RunSummary,
    pub reports: Vec<EnergyReport>,
}

impl StoredTrajectory {
    /// Load and cross-check config, run summary and diagnostics table hashes.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, TrajectoryIoError> {
        let dir = dir.as_ref().to_path_buf();
        let cfg_path = dir.join(CONFIG_FILE);
        let text = fs::read_to_string(&cfg_path).map_err(io_err(&cfg_path))?;
        let config = RunConfig::from_json(&text)?;
        let hash = config.hash();
        let run_path = dir.join(RUN_FILE);
        let summary: RunSummary =
            serde_json::from_str(&fs::read_to_string(&run_path).map_err(io_err(&run_path))?)?;
        let check = |file: &str, found: &str| {
            if found != hash {
                Err(TrajectoryIoError::HashMismatch {
                    file: file.to_string(),
                    expected: hash.clone(),
                    found: found.to_string(),
                })
            } else {
                Ok(())
            }
        };
        check(RUN_FILE, &summary.config_hash)?;
        let (csv_hash, reports) = diagnostics::read_csv(dir.join(DIAGNOSTICS_FILE))?;
        check(DIAGNOSTICS_FILE, &csv_hash)?;
        Ok(StoredTrajectory {
            dir,
            config,
            summary,
            reports,
        })
    }

    pub fn config_hash(&self) -> &str {
        &self.summary.config_hash
    }

    pub fn load_snapshot(&self, entry: &SnapshotEntry) -> Result<State, TrajectoryIoError> {
        let snap = Snapshot::load(self.dir.join(&entry.file))?;
        let found = snap.config_hash.clone().unwrap_or_default();
        if found != self.summary.config_hash {
            return Err(TrajectoryIoError::HashMismatch {
                file: entry.file.clone(),
                expected: self.summary.config_hash.clone(),
                found,
            });
        }
        Ok(State::from_snapshot(&snap)?)
    }

    pub fn load_snapshots(&self) -> Result<Vec<(u64, State)>, TrajectoryIoError> {
        self.summary
            .snapshots
            .iter()
            .map(|e| Ok((e.step, self.load_snapshot(e)?)))
            .collect()
    }
}
