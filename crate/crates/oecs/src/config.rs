//! Run configuration, read from TOML.
//!
//! ```toml
//! time = 0.0
//! threads = 4
//!
//! [input]
//! kind = "analytic"          # or "grid" / "ssh" with `path = "..."`
//! flow = "cellular"
//! params = []
//! domain = [-3.7, 3.7, -3.7, 3.7]
//!
//! [scan]
//! step = 0.1                 # lattice spacing; gridded input defaults to its own
//!
//! [stages]
//! elliptic = false
//! hyperbolic = true
//! parabolic = false
//! advect = false
//!
//! [thresholds]
//! step = 0.02                # tensorline arclength step
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use oecs_core::field::{AnalyticFlow, Rect};
use serde::{Deserialize, Serialize};

use crate::error::{OecsError, Result};
use crate::geostrophic::GeoConstants;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InputConfig {
    Analytic {
        flow: String,
        #[serde(default)]
        params: Vec<f64>,
        /// `[x_min, x_max, y_min, y_max]`.
        domain: [f64; 4],
    },
    /// `OECS-GRID 1` velocity file.
    Grid { path: PathBuf },
    /// `OECS-SSH 1` height file, converted to geostrophic velocity in deg/day.
    Ssh { path: PathBuf },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub step: Option<f64>,
    /// Restricts the scan to `[x_min, x_max, y_min, y_max]`.
    pub domain: Option<[f64; 4]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stages {
    pub elliptic: bool,
    pub hyperbolic: bool,
    pub parabolic: bool,
    pub advect: bool,
    pub svg: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Stages { elliptic: true, hyperbolic: true, parabolic: true, advect: false, svg: true }
    }
}

impl Stages {
    pub const NONE: Stages = Stages { elliptic: false, hyperbolic: false, parabolic: false, advect: false, svg: true };
}

/// Unset values are derived from the scan lattice when the pipeline starts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Tensorline step `Δ`; default a fifth of the lattice spacing.
    pub step: Option<f64>,
    /// Arclength cap; default four times the domain extent.
    pub max_length: Option<f64>,
    /// Largest distance between paired wedges; default a quarter of the extent.
    pub wedge_distance: Option<f64>,
    /// `μ` sweeps `[−mu_range, mu_range]`; default 0.2 × median `s2`.
    pub mu_range: Option<f64>,
    pub mu_count: Option<usize>,
    /// Poincaré section half-length; default the wedge distance.
    pub section_half_length: Option<f64>,
    pub section_samples: Option<usize>,
    /// Wedge capture radius of parabolic connections; default `2Δ`.
    pub capture_radius: Option<f64>,
    /// Objective saddle to stagnation point matching radius; default two lattice spacings.
    pub saddle_match_radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdvectConfig {
    /// Advection horizon from the analysis time.
    pub horizon: f64,
    pub dt: Option<f64>,
    pub boundary_points: usize,
}

impl Default for AdvectConfig {
    fn default() -> Self {
        AdvectConfig { horizon: 1.0, dt: None, boundary_points: 128 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputConfig,
    #[serde(default)]
    pub time: f64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub stages: Stages,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub advect: AdvectConfig,
    #[serde(default)]
    pub geo: GeoConstants,
    pub output: OutputConfig,
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(OecsError::Config(format!("{name} must be positive, got {x}"))),
        _ => Ok(()),
    }
}

fn rect(name: &str, d: [f64; 4]) -> Result<Rect> {
    let r = Rect::new(d[0], d[1], d[2], d[3]);
    if !(r.is_bounded() && r.x_min < r.x_max && r.y_min < r.y_max) {
        return Err(OecsError::Config(format!("{name} must satisfy x_min < x_max and y_min < y_max")));
    }
    Ok(r)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| OecsError::Config(e.to_string()))
    }

    /// Reads and validates a config file, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| OecsError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.input {
            InputConfig::Grid { path } | InputConfig::Ssh { path } => fix(path),
            InputConfig::Analytic { .. } => {}
        }
        fix(&mut self.output.dir);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every threshold and input reference without touching the data.
    pub fn validate(&self) -> Result<()> {
        match &self.input {
            InputConfig::Analytic { flow, params, domain } => {
                AnalyticFlow::from_name(flow, params)
                    .map_err(|_| OecsError::Config(format!("unknown analytic flow `{flow}`")))?;
                if params.iter().any(|p| !p.is_finite()) {
                    return Err(OecsError::Config("flow parameters must be finite".into()));
                }
                rect("input.domain", *domain)?;
            }
            InputConfig::Grid { path } | InputConfig::Ssh { path } => {
                if !path.is_file() {
                    return Err(OecsError::Config(format!("input file {} does not exist", path.display())));
                }
            }
        }
        if let Some(d) = self.scan.domain {
            rect("scan.domain", d)?;
        }
        if !self.time.is_finite() {
            return Err(OecsError::Config("time must be finite".into()));
        }
        if self.threads == Some(0) {
            return Err(OecsError::Config("threads must be at least 1".into()));
        }
        let t = &self.thresholds;
        positive("scan.step", self.scan.step)?;
        positive("thresholds.step", t.step)?;
        positive("thresholds.max_length", t.max_length)?;
        positive("thresholds.wedge_distance", t.wedge_distance)?;
        positive("thresholds.mu_range", t.mu_range)?;
        positive("thresholds.section_half_length", t.section_half_length)?;
        positive("thresholds.capture_radius", t.capture_radius)?;
        positive("thresholds.saddle_match_radius", t.saddle_match_radius)?;
        if t.mu_count == Some(0) {
            return Err(OecsError::Config("thresholds.mu_count must be at least 1".into()));
        }
        if matches!(t.section_samples, Some(n) if n < 3) {
            return Err(OecsError::Config("thresholds.section_samples must be at least 3".into()));
        }
        positive("advect.horizon", Some(self.advect.horizon))?;
        positive("advect.dt", self.advect.dt)?;
        if self.advect.boundary_points < 8 {
            return Err(OecsError::Config("advect.boundary_points must be at least 8".into()));
        }
        self.geo.validate()
    }
}
