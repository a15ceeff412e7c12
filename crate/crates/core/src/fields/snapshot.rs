//! Snapshot files: one line of JSON header, then raw little-endian `f64` data.
//!
//! The header lists every field with its component count, byte offset from the
//! start of the data block, and value count. Field data is cell-major with
//! components interleaved, exactly the in-memory layout of the field types.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FieldError, Grid, GridSpec};

pub const FORMAT: &str = "nematic-snapshot/1";
const LAYOUT: &str = "row-major cells, last axis fastest, components interleaved, f64 little-endian";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot header: {0}")]
    Json(#[from] serde_json::Error),
    #[error("snapshot format: {0}")]
    Format(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedField {
    pub name: String,
    pub components: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub t: f64,
    pub config_hash: Option<String>,
    pub fields: Vec<NamedField>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    grid: GridSpec,
    t: f64,
    #[serde(default)]
    config_hash: Option<String>,
    layout: String,
    fields: Vec<FieldEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldEntry {
    name: String,
    components: usize,
    offset: u64,
    count: u64,
}

impl Snapshot {
    pub fn field(&self, name: &str) -> Option<&NamedField> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), SnapshotError> {
        let mut offset = 0u64;
        let mut entries = Vec::with_capacity(self.fields.len());
        for f in &self.fields {
            if f.data.len() != f.components * self.grid.cells() {
                return Err(FieldError::LengthMismatch {
                    expected: f.components * self.grid.cells(),
                    got: f.data.len(),
                }
                .into());
            }
            entries.push(FieldEntry {
                name: f.name.clone(),
                components: f.components,
                offset,
                count: f.data.len() as u64,
            });
            offset += 8 * f.data.len() as u64;
        }
        let header = Header {
            format: FORMAT.to_string(),
            grid: self.grid.into(),
            t: self.t,
            config_hash: self.config_hash.clone(),
            layout: LAYOUT.to_string(),
            fields: entries,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        let mut buf = Vec::with_capacity(offset as usize);
        for f in &self.fields {
            for v in &f.data {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self, SnapshotError> {
        let mut r = BufReader::new(r);
        let mut line = Vec::new();
        r.read_until(b'\n', &mut line)?;
        if line.last() != Some(&b'\n') {
            return Err(SnapshotError::Format("missing header terminator".into()));
        }
        let header: Header = serde_json::from_slice(&line[..line.len() - 1])?;
        if header.format != FORMAT {
            return Err(SnapshotError::Format(format!(
                "unsupported format tag {:?}",
                header.format
            )));
        }
        let grid = Grid::try_from(header.grid)?;
        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        let mut fields = Vec::with_capacity(header.fields.len());
        for e in header.fields {
            if e.count as usize != e.components * grid.cells() {
                return Err(SnapshotError::Format(format!(
                    "field {} declares {} values for {} cells x {} components",
                    e.name,
                    e.count,
                    grid.cells(),
                    e.components
                )));
            }
            let start = e.offset as usize;
            let end = start + 8 * e.count as usize;
            let bytes = data.get(start..end).ok_or_else(|| {
                SnapshotError::Format(format!("field {} runs past end of file", e.name))
            })?;
            let values = bytes
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            fields.push(NamedField {
                name: e.name,
                components: e.components,
                data: values,
            });
        }
        Ok(Snapshot {
            grid,
            t: header.t,
            config_hash: header.config_hash,
            fields,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SnapshotError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SnapshotError> {
        Self::read_from(fs::File::open(path)?)
    }
}
