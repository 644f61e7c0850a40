//! Field container: a flat little-endian `f64` blob (row-major, component
//! after component) next to a JSON header.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GridSpec, ScalarField, VectorField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub extent: f64,
    pub n: usize,
    pub components: usize,
    pub dtype: String,
    pub layout: String,
    /// File name of the binary blob, relative to the header.
    pub data: String,
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes `<stem>.json` and `<stem>.bin`; returns the header path.
pub fn write_field(dir: &Path, stem: &str, parts: &[ScalarField]) -> Result<PathBuf> {
    let Some(first) = parts.first() else {
        return Err(Error::InvalidParameter("no components to write".into()));
    };
    let grid = *first.grid();
    let mut blob = Vec::with_capacity(parts.len() * grid.len() * 8);
    for c in parts {
        for v in c.values() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let data = format!("{stem}.bin");
    write_atomic(&dir.join(&data), &blob)?;
    let header = FieldHeader {
        extent: grid.extent(),
        n: grid.n(),
        components: parts.len(),
        dtype: "f64le".into(),
        layout: "row-major".into(),
        data,
    };
    let path = dir.join(format!("{stem}.json"));
    write_atomic(&path, serde_json::to_string_pretty(&header)?.as_bytes())?;
    Ok(path)
}

pub fn write_scalar(dir: &Path, stem: &str, f: &ScalarField) -> Result<PathBuf> {
    write_field(dir, stem, std::slice::from_ref(f))
}

pub fn write_vector(dir: &Path, stem: &str, u: &VectorField) -> Result<PathBuf> {
    write_field(dir, stem, u.components())
}

/// Reads a container given the path of its JSON header.
pub fn read_field(header_path: &Path) -> Result<Vec<ScalarField>> {
    let header: FieldHeader = serde_json::from_slice(&fs::read(header_path)?)?;
    if header.dtype != "f64le" || header.layout != "row-major" {
        return Err(Error::InvalidParameter(format!(
            "unsupported container {} / {}",
            header.dtype, header.layout
        )));
    }
    let grid = GridSpec::new(header.extent, header.n)?;
    let dir = header_path.parent().unwrap_or_else(|| Path::new("."));
    let bytes = fs::read(dir.join(&header.data))?;
    if bytes.len() != header.components * grid.len() * 8 {
        return Err(Error::InvalidParameter(format!(
            "blob has {} bytes, header implies {}",
            bytes.len(),
            header.components * grid.len() * 8
        )));
    }
    bytes
        .chunks_exact(grid.len() * 8)
        .map(|chunk| {
            let values = chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            ScalarField::new(grid, values)
        })
        .collect()
}

/// CSV with a header row and one row per sample.
pub fn write_csv(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}
