//! Run manifests, checks and the separate timing record.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use asymflow::euler2d::Diagnostics;
use asymflow::fields::io::write_atomic;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

/// One assertion with the measured value and its limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub relation: Relation,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// `value <= limit`; NaN fails.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            relation: Relation::AtMost,
            passed: value <= limit,
            note: None,
        }
    }

    /// `value >= limit`; NaN fails.
    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            relation: Relation::AtLeast,
            passed: value >= limit,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn symbol(&self) -> &'static str {
        match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    /// Coefficient values keyed by trace label.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub coefficients: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub m: usize,
    pub p: f64,
    pub delta: f64,
    pub value: f64,
}

/// Everything a run produced except wall-clock times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub kind: String,
    pub config_hash: String,
    pub code_version: String,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_norm: Option<NormRecord>,
    #[serde(default)]
    pub checkpoints: Vec<Checkpoint>,
    #[serde(default)]
    pub results: BTreeMap<String, Value>,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub warnings: Vec<String>,
    /// Output files relative to the run directory.
    #[serde(default)]
    pub files: Vec<String>,
    pub complete: bool,
    pub passed: bool,
}

impl RunManifest {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            name: config.name.clone(),
            kind: config.kind().into(),
            config_hash: config.hash(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            initial_norm: None,
            checkpoints: Vec::new(),
            results: BTreeMap::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
            files: Vec::new(),
            complete: false,
            passed: false,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Timings {
    pub name: String,
    pub config_hash: String,
    pub total_seconds: f64,
    pub phases: Vec<(String, f64)>,
    /// Runtime assertions; kept here so the manifest stays reproducible.
    pub checks: Vec<Check>,
}

impl Timings {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Owns the manifest of a run in progress and rewrites it atomically after
/// every addition.
pub struct ManifestWriter {
    dir: PathBuf,
    manifest: RunManifest,
}

impl ManifestWriter {
    pub fn create(dir: &Path, config: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        let w = Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest::new(config),
        };
        w.flush()?;
        Ok(w)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn path(&self) -> PathBuf {
        self.dir.join(MANIFEST_FILE)
    }

    fn flush(&self) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.manifest)?;
        write_atomic(&self.path(), text.as_bytes())
            .with_context(|| format!("writing {}", self.path().display()))
    }

    pub fn set_initial_norm(&mut self, n: NormRecord) -> Result<()> {
        self.manifest.initial_norm = Some(n);
        self.flush()
    }

    pub fn push_checkpoint(&mut self, c: Checkpoint) -> Result<()> {
        self.manifest.checkpoints.push(c);
        self.flush()
    }

    pub fn add_result(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        let v = serde_json::to_value(value)?;
        self.manifest.results.insert(key.into(), v);
        self.flush()
    }

    pub fn add_check(&mut self, c: Check) -> Result<()> {
        self.manifest.checks.push(c);
        self.flush()
    }

    pub fn add_warnings(&mut self, w: impl IntoIterator<Item = String>) -> Result<()> {
        self.manifest.warnings.extend(w);
        self.flush()
    }

    pub fn add_file(&mut self, rel: &Path) -> Result<()> {
        self.manifest
            .files
            .push(rel.to_string_lossy().replace('\\', "/"));
        self.flush()
    }

    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.complete = true;
        self.manifest.passed = self.manifest.checks.iter().all(|c| c.passed);
        self.flush()?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_treat_nan_as_failure() {
        assert!(Check::at_most("a", 1.0, 1.0).passed);
        assert!(!Check::at_most("a", f64::NAN, 1.0).passed);
        assert!(!Check::at_least("a", f64::NAN, 1.0).passed);
        assert!(Check::at_least("a", 2.0, 1.0).passed);
    }

    #[test]
    fn writer_is_append_only() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig::default_for("diffeo").unwrap();
        let mut w = ManifestWriter::create(dir.path(), &c).unwrap();
        let first = RunManifest::load(&w.path()).unwrap();
        assert!(!first.complete);
        w.push_checkpoint(Checkpoint {
            t: 0.0,
            diagnostics: None,
            coefficients: BTreeMap::new(),
        })
        .unwrap();
        w.add_check(Check::at_most("x", 0.5, 1.0)).unwrap();
        let mid = RunManifest::load(&w.path()).unwrap();
        assert_eq!(mid.checkpoints.len(), 1);
        let done = w.finish().unwrap();
        assert!(done.complete && done.passed);
        assert_eq!(
            RunManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap(),
            done
        );
    }
}
