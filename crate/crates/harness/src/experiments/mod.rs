//! Experiment drivers behind [`run`].

mod diffeo;
mod evolve;
mod gendata;
mod moments;
mod poisson;
mod slopes;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use asymflow::datagen::{generic_field, generic_vorticity, random_divfree, GenericDataSpec};
use asymflow::euler2d::vorticity;
use asymflow::fields::io::{write_csv, write_scalar, write_vector};
use asymflow::fields::{weighted_norm, GridSpec, ScalarField, VectorField};
use serde::Serialize;

use crate::config::{DataSource, Experiment, RunConfig};
use crate::manifest::{Check, ManifestWriter, NormRecord, RunManifest, Timings, TIMINGS_FILE};

/// State shared by a running experiment.
pub struct RunContext<'a> {
    pub config: &'a RunConfig,
    writer: ManifestWriter,
    start: Instant,
    phase_start: Instant,
    timings: Timings,
}

impl<'a> RunContext<'a> {
    fn new(config: &'a RunConfig, dir: &Path) -> Result<Self> {
        let now = Instant::now();
        Ok(Self {
            config,
            writer: ManifestWriter::create(dir, config)?,
            start: now,
            phase_start: now,
            timings: Timings {
                name: config.name.clone(),
                config_hash: config.hash(),
                ..Default::default()
            },
        })
    }

    pub fn dir(&self) -> &Path {
        self.writer.dir()
    }

    pub fn writer(&mut self) -> &mut ManifestWriter {
        &mut self.writer
    }

    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.config.tolerance(name, default)
    }

    /// Records a `value <= limit` check, with the limit overridable by name.
    pub fn at_most(&mut self, name: &str, value: f64, default: f64) -> Result<()> {
        let c = Check::at_most(name, value, self.tol(name, default));
        self.writer.add_check(c)
    }

    pub fn at_least(&mut self, name: &str, value: f64, default: f64) -> Result<()> {
        let c = Check::at_least(name, value, self.tol(name, default));
        self.writer.add_check(c)
    }

    pub fn check(&mut self, c: Check) -> Result<()> {
        self.writer.add_check(c)
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.writer.add_result(key, value)
    }

    pub fn warn(&mut self, w: impl Into<String>) -> Result<()> {
        self.writer.add_warnings([w.into()])
    }

    /// Closes the current timing phase.
    pub fn phase(&mut self, name: &str) {
        let now = Instant::now();
        self.timings
            .phases
            .push((name.into(), (now - self.phase_start).as_secs_f64()));
        self.phase_start = now;
    }

    /// Wall-clock assertion, stored with the timings.
    pub fn runtime_check(&mut self, name: &str, seconds: f64, limit: f64) {
        let limit = self.tol(name, limit);
        self.timings
            .checks
            .push(Check::at_most(name, seconds, limit));
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn rel(&self, sub: &str, file: &str) -> (PathBuf, PathBuf) {
        let rel = Path::new(sub).join(file);
        (self.dir().join(&rel), rel)
    }

    pub fn write_trace(&mut self, file: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let (path, rel) = self.rel("traces", file);
        std::fs::create_dir_all(path.parent().unwrap())?;
        write_csv(&path, columns, rows).with_context(|| format!("writing {}", path.display()))?;
        self.writer.add_file(&rel)
    }

    pub fn write_scalar(&mut self, stem: &str, f: &ScalarField) -> Result<()> {
        let dir = self.dir().join("fields");
        std::fs::create_dir_all(&dir)?;
        write_scalar(&dir, stem, f)?;
        self.writer
            .add_file(&Path::new("fields").join(format!("{stem}.json")))
    }

    pub fn write_vector(&mut self, stem: &str, u: &VectorField) -> Result<()> {
        let dir = self.dir().join("fields");
        std::fs::create_dir_all(&dir)?;
        write_vector(&dir, stem, u)?;
        self.writer
            .add_file(&Path::new("fields").join(format!("{stem}.json")))
    }

    fn finish(mut self) -> Result<(RunManifest, Timings)> {
        self.timings.total_seconds = self.elapsed();
        let text = serde_json::to_string_pretty(&self.timings)?;
        asymflow::fields::io::write_atomic(&self.dir().join(TIMINGS_FILE), text.as_bytes())?;
        Ok((self.writer.finish()?, self.timings))
    }
}

/// Initial data sampled on the run grid.
pub struct InitialData {
    pub omega: ScalarField,
    pub u: VectorField,
    /// Generic spec after amplitude normalisation.
    pub spec: Option<GenericDataSpec>,
}

pub fn initial_data(source: &DataSource, grid: GridSpec, seed: u64) -> Result<InitialData> {
    match source {
        DataSource::Generic {
            spec,
            peak_vorticity,
        } => {
            let mut spec = *spec;
            if let Some(peak) = peak_vorticity {
                let unit = GenericDataSpec {
                    amplitude: 1.0,
                    ..spec
                };
                let m = generic_vorticity(&unit, grid)?.max_abs();
                anyhow::ensure!(m > 0.0, "generic vorticity vanishes on this grid");
                spec.amplitude = peak / m;
            }
            Ok(InitialData {
                omega: generic_vorticity(&spec, grid)?,
                u: generic_field(&spec, grid)?,
                spec: Some(spec),
            })
        }
        DataSource::Radial { width, amplitude } => {
            let s = 0.5 / (width * width);
            let omega = ScalarField::from_fn(grid, |x, y| {
                let q = s * (x * x + y * y);
                amplitude * (1.0 - q) * (-q).exp()
            });
            let u = asymflow::euler2d::biot_savart(&omega)?;
            Ok(InitialData {
                omega,
                u,
                spec: None,
            })
        }
        DataSource::Random {
            support,
            smoothness,
            amplitude,
        } => {
            let u = random_divfree(seed, grid, *support, *smoothness, *amplitude)?;
            Ok(InitialData {
                omega: vorticity(&u)?,
                u,
                spec: None,
            })
        }
    }
}

fn record_norm(ctx: &mut RunContext<'_>, u: &VectorField) -> Result<()> {
    let w = ctx.config.ball_norm;
    let n = weighted_norm(u, w).context("initial-data norm")?;
    ctx.writer().set_initial_norm(NormRecord {
        m: w.m,
        p: w.p,
        delta: w.delta,
        value: n.value,
    })
}

/// Default output directory of a run.
pub fn default_out(config: &RunConfig) -> PathBuf {
    Path::new("runs").join(&config.name)
}

/// Executes the experiment named by `config`, writing everything under the
/// configured output directory.
pub fn run(config: &RunConfig) -> Result<RunManifest> {
    run_with_timings(config).map(|(m, _)| m)
}

pub fn run_with_timings(config: &RunConfig) -> Result<(RunManifest, Timings)> {
    config.validate().context("invalid run config")?;
    let dir = config.out.clone().unwrap_or_else(|| default_out(config));
    let mut ctx = RunContext::new(config, &dir)?;
    match &config.experiment {
        Experiment::Poisson(p) => poisson::run(&mut ctx, p),
        Experiment::Moments(p) => moments::run(&mut ctx, p),
        Experiment::Gendata(p) => gendata::run(&mut ctx, p),
        Experiment::Evolve(p) => evolve::run(&mut ctx, p),
        Experiment::Slopes(p) => slopes::run(&mut ctx, p),
        Experiment::Diffeo(p) => diffeo::run(&mut ctx, p),
    }
    .with_context(|| format!("{} run `{}`", config.kind(), config.name))?;
    ctx.finish()
}
