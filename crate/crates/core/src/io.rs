//! Versioned JSON artifacts, atomic writes and content hashes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geom::Q;
use crate::pointset::PointSetWindow;
use crate::subst::Tile;

pub const POINTSET_SCHEMA: &str = "delone.pointset.v1";
pub const TILING_SCHEMA: &str = "delone.tiling.v1";
pub const REPORT_SCHEMA: &str = "delone.report.v1";

/// A point set with exact or floating coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scalar", content = "set", rename_all = "lowercase")]
pub enum PointSetData {
    Exact(PointSetWindow<Q>),
    Float(PointSetWindow<f64>),
}

impl PointSetData {
    pub fn to_f64(&self) -> PointSetWindow<f64> {
        match self {
            PointSetData::Exact(p) => p.to_f64(),
            PointSetData::Float(p) => p.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            PointSetData::Exact(p) => p.dim,
            PointSetData::Float(p) => p.dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilingData {
    pub rule: String,
    pub tiles: Vec<Tile<Q>>,
}

/// `{"schema": ..., "data": ...}` on the wire.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema: String,
    pub data: T,
}

pub fn to_json<T: Serialize>(schema: &str, data: &T) -> Result<String> {
    let env = Envelope {
        schema: schema.to_string(),
        data,
    };
    Ok(serde_json::to_string_pretty(&env)?)
}

pub fn from_json<T: DeserializeOwned>(schema: &str, text: &str) -> Result<T> {
    let env: Envelope<T> = serde_json::from_str(text)?;
    if env.schema != schema {
        return Err(Error::InvalidInput(format!(
            "expected schema {schema}, found {}",
            env.schema
        )));
    }
    Ok(env.data)
}

/// Writes through a temporary file in the same directory and renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(schema: &str, path: &Path) -> Result<T> {
    from_json(schema, &fs::read_to_string(path)?)
}

pub fn write_json<T: Serialize>(schema: &str, path: &Path, data: &T) -> Result<()> {
    write_atomic(path, to_json(schema, data)?.as_bytes())
}

/// Hex SHA-256.
pub fn content_hash(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}

/// Result of one CLI experiment. Serialized without timing unless requested,
/// so a fixed config and seed reproduce the file byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub command: String,
    pub config: serde_json::Value,
    /// Hash of the input artifacts and the config.
    pub input_hash: String,
    pub seed: u64,
    pub tables: serde_json::Value,
    pub witnesses: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

impl ExperimentReport {
    /// Hash of the report with the runtime left out.
    pub fn hash(&self) -> Result<String> {
        let mut r = self.clone();
        r.runtime_ms = None;
        Ok(content_hash(to_json(REPORT_SCHEMA, &r)?.as_bytes()))
    }
}
