//! Run configuration. A JSON file may supply every field; CLI flags override
//! the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use asymflow::datagen::GenericDataSpec;
use asymflow::euler2d::StepOptions;
use asymflow::fields::{GridSpec, WeightSpec};
use asymflow::harmonics::eigenspace_dim;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Largest tracked coefficient index.
pub const MAX_TRACKED_K: usize = 6;

/// A harmonic mode `(k, l)` written as `"k:l"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModeSel {
    pub k: usize,
    pub l: usize,
}

impl ModeSel {
    pub fn new(k: usize, l: usize) -> Self {
        Self { k, l }
    }

    /// Every mode of the degrees in `ks`.
    pub fn of_degrees(ks: &[usize]) -> Vec<Self> {
        let mut out = Vec::new();
        for &k in ks {
            let dim = eigenspace_dim(2, k).unwrap_or(0);
            out.extend((1..=dim).map(|l| Self::new(k, l)));
        }
        out
    }
}

impl fmt::Display for ModeSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.k, self.l)
    }
}

impl std::str::FromStr for ModeSel {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (k, l) = s
            .trim()
            .split_once(':')
            .with_context(|| format!("mode `{s}` is not of the form k:l"))?;
        Ok(Self {
            k: k.trim()
                .parse()
                .with_context(|| format!("bad k in `{s}`"))?,
            l: l.trim()
                .parse()
                .with_context(|| format!("bad l in `{s}`"))?,
        })
    }
}

impl TryFrom<String> for ModeSel {
    type Error = anyhow::Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModeSel> for String {
    fn from(m: ModeSel) -> Self {
        m.to_string()
    }
}

/// Parses `"k:l,k:l,..."`.
pub fn parse_modes(s: &str) -> Result<Vec<ModeSel>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub extent: f64,
    pub n: usize,
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.extent, self.n).context("grid parameters")
    }
}

/// Initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DataSource {
    /// The generic compactly supported field; with `peak_vorticity` the
    /// amplitude is rescaled so that `max |omega_0|` equals it on the grid.
    Generic {
        spec: GenericDataSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        peak_vorticity: Option<f64>,
    },
    /// `omega_0 = A (1 - r^2 / (2 w^2)) exp(-r^2 / (2 w^2))`, which has zero
    /// circulation.
    Radial { width: f64, amplitude: f64 },
    /// `grad^perp` of a random compactly supported stream function, seeded
    /// by the run seed.
    Random {
        support: f64,
        smoothness: usize,
        amplitude: f64,
    },
}

impl DataSource {
    pub fn generic_spec(&self) -> Option<&GenericDataSpec> {
        match self {
            Self::Generic { spec, .. } => Some(spec),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Generic {
                spec,
                peak_vorticity,
            } => {
                spec.validate(2).context("generic data spec")?;
                if let Some(p) = peak_vorticity {
                    ensure!(*p > 0.0 && p.is_finite(), "peak_vorticity must be positive");
                }
            }
            Self::Radial { width, amplitude } => {
                ensure!(
                    *width > 0.0 && width.is_finite(),
                    "radial width must be positive"
                );
                ensure!(amplitude.is_finite(), "radial amplitude must be finite");
            }
            Self::Random {
                support, amplitude, ..
            } => {
                ensure!(*support > 0.0, "random support must be positive");
                ensure!(amplitude.is_finite(), "random amplitude must be finite");
            }
        }
        Ok(())
    }
}

/// Semi-Lagrangian stepper settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepConfig {
    pub cfl: f64,
    pub corrector_iterations: usize,
    pub moment_fixer: bool,
}

impl Default for StepConfig {
    fn default() -> Self {
        let o = StepOptions::default();
        Self {
            cfl: o.cfl,
            corrector_iterations: o.corrector_iterations,
            moment_fixer: o.moment_fixer,
        }
    }
}

impl From<StepConfig> for StepOptions {
    fn from(c: StepConfig) -> Self {
        Self {
            cfl: c.cfl,
            corrector_iterations: c.corrector_iterations,
            moment_fixer: c.moment_fixer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoissonCase {
    /// Radial bump in `R^3` against the Newtonian far field.
    Newtonian,
    /// Planar source `H_{k;l}(x) b(r)` and the coefficients it excites.
    DegreeSelectivity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoissonParams {
    pub case: PoissonCase,
    pub radial_points: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Weight `(delta, p)` selecting how many expansion terms are extracted.
    pub delta: f64,
    pub p: f64,
}

impl Default for PoissonParams {
    fn default() -> Self {
        Self {
            case: PoissonCase::Newtonian,
            radial_points: 4096,
            r_min: 1e-3,
            r_max: 200.0,
            delta: 0.3,
            p: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MomentParams {
    pub random_fields: usize,
    pub random_grid: GridConfig,
    pub random_support: f64,
    pub random_smoothness: usize,
    /// Degrees whose moments must vanish for divergence-free compact data.
    pub low_degrees: Vec<usize>,
    /// Degrees of the generic data checked on the run grid.
    pub generic_kprimes: Vec<usize>,
}

impl Default for MomentParams {
    fn default() -> Self {
        Self {
            random_fields: 100,
            random_grid: GridConfig {
                extent: 2.7,
                n: 256,
            },
            random_support: 2.5,
            random_smoothness: 3,
            low_degrees: vec![0, 1, 2],
            generic_kprimes: vec![3, 4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub t: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveParams {
    pub step: StepConfig,
    /// `dt = dt_fraction * max_dt(0)` when no `dt` is given.
    pub dt_fraction: f64,
    pub checkpoint_every: f64,
    /// Write the vorticity field every this many checkpoints (0: never).
    pub field_every: usize,
    pub conservation: bool,
    /// Degrees whose coefficients must stay at their initial noise floor.
    pub suppressed_degrees: Vec<usize>,
    /// Compare the Eulerian, Lagrangian and shell-fit coefficients.
    pub route_agreement: bool,
    pub shell_kmax: usize,
    /// Time of the angular-profile eigenfunction check.
    pub eigen_time: Option<f64>,
    pub crosscheck: Option<CrossCheck>,
    /// Expect a steady flow: every trace stays at its noise floor.
    pub stationary: bool,
}

impl Default for EvolveParams {
    fn default() -> Self {
        Self {
            step: StepConfig::default(),
            dt_fraction: 0.95,
            checkpoint_every: 0.1,
            field_every: 5,
            conservation: true,
            suppressed_degrees: Vec::new(),
            route_agreement: false,
            shell_kmax: 6,
            eigen_time: None,
            crosscheck: None,
            stationary: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlopeParams {
    pub dts: Vec<f64>,
    pub step: StepConfig,
}

impl Default for SlopeParams {
    fn default() -> Self {
        Self {
            dts: vec![0.08, 0.04, 0.02],
            step: StepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiffeoParams {
    pub maps: usize,
    /// Target `max |dw|` of each random displacement.
    pub amplitude: f64,
    pub support: f64,
    pub smoothness: usize,
}

impl Default for DiffeoParams {
    fn default() -> Self {
        Self {
            maps: 100,
            amplitude: 0.3,
            support: 1.8,
            smoothness: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct GendataParams {
    pub write_hamiltonian: bool,
}

/// The experiment and its own parameters, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum Experiment {
    Poisson(PoissonParams),
    Moments(MomentParams),
    Gendata(GendataParams),
    Evolve(EvolveParams),
    Slopes(SlopeParams),
    Diffeo(DiffeoParams),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Poisson(_) => "poisson",
            Self::Moments(_) => "moments",
            Self::Gendata(_) => "gendata",
            Self::Evolve(_) => "evolve",
            Self::Slopes(_) => "slopes",
            Self::Diffeo(_) => "diffeo",
        }
    }

    pub fn default_for(kind: &str) -> Result<Self> {
        Ok(match kind {
            "poisson" => Self::Poisson(PoissonParams::default()),
            "moments" => Self::Moments(MomentParams::default()),
            "gendata" => Self::Gendata(GendataParams::default()),
            "evolve" => Self::Evolve(EvolveParams::default()),
            "slopes" => Self::Slopes(SlopeParams::default()),
            "diffeo" => Self::Diffeo(DiffeoParams::default()),
            other => bail!("unknown experiment kind `{other}`"),
        })
    }
}

fn default_tau() -> f64 {
    1.0
}

fn default_norm() -> WeightSpec {
    WeightSpec {
        m: 1,
        p: 2.0,
        delta: 0.5,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    #[serde(flatten)]
    pub experiment: Experiment,
    pub grid: GridConfig,
    /// Time horizon.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Tracked modes; empty selects the experiment default.
    #[serde(default)]
    pub modes: Vec<ModeSel>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSource>,
    /// Norm whose value on the initial data is recorded as the ball radius.
    #[serde(default = "default_norm")]
    pub ball_norm: WeightSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Overrides of check limits, keyed by check name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

/// The data used by the shipped evolution configs.
pub fn standard_generic_data() -> DataSource {
    DataSource::Generic {
        spec: GenericDataSpec::new(3, 1, 2, 1.0, 1.0)
            .and_then(|s| s.with_sharpness(12.0))
            .expect("valid spec"),
        peak_vorticity: Some(1.0),
    }
}

impl RunConfig {
    /// Defaults for `kind` when no config file is given.
    pub fn default_for(kind: &str) -> Result<Self> {
        let experiment = Experiment::default_for(kind)?;
        let (grid, data) = match &experiment {
            Experiment::Poisson(_) => (
                GridConfig {
                    extent: 4.0,
                    n: 256,
                },
                None,
            ),
            Experiment::Moments(_) => (
                GridConfig {
                    extent: 2.1,
                    n: 512,
                },
                Some(DataSource::Generic {
                    spec: GenericDataSpec::new(3, 1, 2, 1.0, 1.0)?,
                    peak_vorticity: None,
                }),
            ),
            Experiment::Diffeo(_) => (GridConfig { extent: 2.0, n: 64 }, None),
            _ => (
                GridConfig {
                    extent: 2.5,
                    n: 256,
                },
                Some(standard_generic_data()),
            ),
        };
        Ok(Self {
            name: kind.to_string(),
            experiment,
            grid,
            tau: default_tau(),
            dt: None,
            modes: Vec::new(),
            seed: 0,
            data,
            ball_norm: default_norm(),
            out: None,
            tolerances: BTreeMap::new(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("parsing run config")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn kind(&self) -> &'static str {
        self.experiment.kind()
    }

    /// Limit of the check `name`, honouring overrides.
    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// SHA-256 of the canonical JSON form without the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.name.trim().is_empty(), "run name must not be empty");
        self.grid.spec()?;
        ensure!(
            self.tau > 0.0 && self.tau.is_finite(),
            "tau must be positive, got {}",
            self.tau
        );
        if let Some(dt) = self.dt {
            ensure!(dt > 0.0 && dt.is_finite(), "dt must be positive, got {dt}");
        }
        for m in &self.modes {
            ensure!(
                m.k <= MAX_TRACKED_K,
                "tracked mode {m} exceeds k = {MAX_TRACKED_K}"
            );
            let dim = eigenspace_dim(2, m.k)?;
            ensure!(
                (1..=dim).contains(&m.l),
                "mode {m}: l must lie in 1..={dim}"
            );
        }
        WeightSpec::new(self.ball_norm.m, self.ball_norm.p, self.ball_norm.delta)
            .context("ball_norm")?;
        if let Some(d) = &self.data {
            d.validate()?;
        }
        for (k, v) in &self.tolerances {
            ensure!(v.is_finite(), "tolerance `{k}` must be finite");
        }
        match &self.experiment {
            Experiment::Poisson(p) => {
                ensure!(p.radial_points >= 16, "radial_points must be at least 16");
                ensure!(p.r_min > 0.0 && p.r_max > p.r_min, "need 0 < r_min < r_max");
            }
            Experiment::Moments(p) => {
                p.random_grid.spec()?;
                ensure!(
                    p.random_support < p.random_grid.extent,
                    "random support must lie inside the random grid"
                );
            }
            Experiment::Gendata(_) => {
                ensure!(self.data.is_some(), "gendata needs a data source");
            }
            Experiment::Evolve(p) => {
                ensure!(self.data.is_some(), "evolve needs a data source");
                ensure!(
                    p.dt_fraction > 0.0 && p.dt_fraction <= 1.0,
                    "dt_fraction must lie in (0, 1]"
                );
                ensure!(
                    p.checkpoint_every > 0.0,
                    "checkpoint_every must be positive"
                );
                ensure!(
                    p.shell_kmax <= MAX_TRACKED_K,
                    "shell_kmax exceeds {MAX_TRACKED_K}"
                );
                ensure!(p.step.cfl > 0.0, "cfl must be positive");
                for &k in &p.suppressed_degrees {
                    ensure!(k <= MAX_TRACKED_K, "suppressed degree {k} too large");
                }
                if let Some(t) = p.eigen_time {
                    ensure!(t > 0.0 && t <= self.tau, "eigen_time must lie in (0, tau]");
                }
                if let Some(c) = p.crosscheck {
                    ensure!(
                        c.t > 0.0 && c.t <= self.tau,
                        "crosscheck time must lie in (0, tau]"
                    );
                    ensure!(c.dt > 0.0, "crosscheck dt must be positive");
                }
            }
            Experiment::Slopes(p) => {
                ensure!(
                    matches!(self.data, Some(DataSource::Generic { .. })),
                    "slopes needs generic data"
                );
                ensure!(p.dts.len() >= 2, "need at least two step sizes");
                ensure!(
                    p.dts.iter().all(|d| *d > 0.0 && d.is_finite()),
                    "step sizes must be positive"
                );
            }
            Experiment::Diffeo(p) => {
                ensure!(p.maps > 0, "need at least one map");
                ensure!(
                    p.amplitude > 0.0 && p.amplitude < 1.0,
                    "amplitude must lie in (0, 1) for a near-identity map"
                );
                ensure!(
                    p.support < self.grid.extent,
                    "support must lie inside the grid"
                );
            }
        }
        Ok(())
    }
}

/// Flag values that override a config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid_n: Option<usize>,
    pub extent: Option<f64>,
    pub dt: Option<f64>,
    pub tau: Option<f64>,
    pub modes: Option<Vec<ModeSel>>,
}

impl Overrides {
    pub fn apply(&self, c: &mut RunConfig) {
        if let Some(o) = &self.out {
            c.out = Some(o.clone());
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(n) = self.grid_n {
            c.grid.n = n;
        }
        if let Some(e) = self.extent {
            c.grid.extent = e;
        }
        if let Some(dt) = self.dt {
            c.dt = Some(dt);
        }
        if let Some(t) = self.tau {
            c.tau = t;
        }
        if let Some(m) = &self.modes {
            c.modes = m.clone();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_parse_and_print() {
        let m = parse_modes("0:1, 3:2,4:1").unwrap();
        assert_eq!(
            m,
            vec![ModeSel::new(0, 1), ModeSel::new(3, 2), ModeSel::new(4, 1)]
        );
        assert_eq!(m[1].to_string(), "3:2");
        assert!(parse_modes("3").is_err());
        assert!(parse_modes("a:1").is_err());
        assert_eq!(ModeSel::of_degrees(&[0, 1]).len(), 3);
    }

    #[test]
    fn defaults_validate_and_roundtrip() {
        for kind in [
            "poisson", "moments", "gendata", "evolve", "slopes", "diffeo",
        ] {
            let c = RunConfig::default_for(kind).unwrap();
            c.validate().unwrap();
            let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.hash(), c.hash());
        }
        assert!(RunConfig::default_for("report").is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = RunConfig::default_for("evolve").unwrap();
        let mut c = base.clone();
        c.tau = 0.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.modes = vec![ModeSel::new(7, 1)];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.modes = vec![ModeSel::new(2, 3)];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.dt = Some(-1.0);
        assert!(c.validate().is_err());
        let mut c = base;
        c.data = None;
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides_and_hash() {
        let mut c = RunConfig::default_for("evolve").unwrap();
        let h = c.hash();
        Overrides {
            out: Some("elsewhere".into()),
            ..Default::default()
        }
        .apply(&mut c);
        assert_eq!(c.hash(), h);
        Overrides {
            grid_n: Some(128),
            modes: Some(vec![ModeSel::new(3, 1)]),
            ..Default::default()
        }
        .apply(&mut c);
        assert_eq!(c.grid.n, 128);
        assert_ne!(c.hash(), h);
    }
}
