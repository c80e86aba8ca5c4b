//! End-to-end detection run driven by a [`RunConfig`].
//!
//! Stages run in a fixed order: strain and singularities, then the enabled
//! elliptic, hyperbolic and parabolic stages, then optional advection. Every
//! artifact lands in the output directory and is listed with its SHA-256 in
//! `manifest.json`. Nothing time- or host-dependent is recorded, so equal
//! inputs give byte-identical manifests.

use std::fs;
use std::path::{Path, PathBuf};

use oecs_core::elliptic::{self, EllipticFamily, EllipticOptions};
use oecs_core::field::GridAxis;
use oecs_core::field::{AnalyticField, AnalyticFlow, GriddedField, Rect, ScanGrid, VelocityField};
use oecs_core::hyperbolic::{self, HyperbolicKind, HyperbolicOecs, HyperbolicOptions, SaddleReport};
use oecs_core::kinematics::{self, FrameChange, StagnationKind};
use oecs_core::lagrangian::{self, BlobMetrics, MaterialBlob};
use oecs_core::math::{Jacobian2, Sym2, Vec2};
use oecs_core::parabolic::{self, HeteroclinicSegment, MinimizerReport, ParabolicChain, ParabolicOptions};
use oecs_core::singularity::{self, SingularityKind, SingularityScan};
use oecs_core::tensorline;
use oecs_core::{geometry, Error as CoreError};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{InputConfig, RunConfig, Stages};
use crate::error::{OecsError, Result};
use crate::geostrophic;
use crate::grid_io;
use crate::svg::{self, HeatLayer, Layer, MarkerLayer, MarkerShape, PolylineLayer, PolylineStyle};

pub const MANIFEST: &str = "manifest.json";

/// A velocity field loaded from any supported input.
#[derive(Clone, Debug, PartialEq)]
pub enum LoadedField {
    Analytic(AnalyticField),
    Gridded(GriddedField),
}

impl VelocityField for LoadedField {
    fn velocity(&self, p: Vec2, t: f64) -> oecs_core::Result<Vec2> {
        match self {
            LoadedField::Analytic(f) => f.velocity(p, t),
            LoadedField::Gridded(f) => f.velocity(p, t),
        }
    }
    fn gradient(&self, p: Vec2, t: f64) -> oecs_core::Result<Jacobian2> {
        match self {
            LoadedField::Analytic(f) => f.gradient(p, t),
            LoadedField::Gridded(f) => f.gradient(p, t),
        }
    }
    fn domain(&self) -> Rect {
        match self {
            LoadedField::Analytic(f) => f.domain(),
            LoadedField::Gridded(f) => f.domain(),
        }
    }
    fn native_grid(&self) -> Option<ScanGrid> {
        match self {
            LoadedField::Analytic(f) => f.native_grid(),
            LoadedField::Gridded(f) => f.native_grid(),
        }
    }
    fn strain(&self, p: Vec2, t: f64) -> oecs_core::Result<Sym2> {
        match self {
            LoadedField::Analytic(f) => f.strain(p, t),
            LoadedField::Gridded(f) => f.strain(p, t),
        }
    }
}

pub fn load_field(cfg: &RunConfig) -> Result<LoadedField> {
    Ok(match &cfg.input {
        InputConfig::Analytic { flow, params, domain } => {
            let flow = AnalyticFlow::from_name(flow, params)
                .map_err(|_| OecsError::Config(format!("unknown analytic flow `{flow}`")))?;
            let rect = Rect::new(domain[0], domain[1], domain[2], domain[3]);
            LoadedField::Analytic(flow.field().with_domain(rect))
        }
        InputConfig::Grid { path } => LoadedField::Gridded(grid_io::read_grid(path)?),
        InputConfig::Ssh { path } => {
            let ssh = grid_io::read_ssh(path)?;
            LoadedField::Gridded(geostrophic::geostrophic_velocity(&ssh, &cfg.geo)?)
        }
    })
}

/// Scan lattice: the configured step over the configured region, falling
/// back to the data lattice (gridded) or 100 cells across (analytic).
pub fn scan_grid(cfg: &RunConfig, field: &LoadedField) -> Result<ScanGrid> {
    let native = field.native_grid();
    let available = match native {
        Some(g) => g.rect(),
        None => field.domain(),
    };
    if cfg.scan.step.is_none() && cfg.scan.domain.is_none() {
        if let Some(g) = native {
            return Ok(g);
        }
    }
    let mut region = available;
    if let Some(d) = cfg.scan.domain {
        region =
            Rect::new(d[0].max(region.x_min), d[1].min(region.x_max), d[2].max(region.y_min), d[3].min(region.y_max));
    }
    if !(region.is_bounded() && region.x_min < region.x_max && region.y_min < region.y_max) {
        return Err(OecsError::Config("scan region does not overlap the data domain".into()));
    }
    let step = cfg.scan.step.or_else(|| native.map(|g| g.min_step())).unwrap_or_else(|| region.extent() / 100.0);
    ScanGrid::covering(region, step).map_err(|e| OecsError::Config(format!("scan lattice: {e}")))
}

/// Thresholds after defaults have been filled in from the lattice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolved {
    pub scan: ScanGrid,
    pub step: f64,
    pub max_length: f64,
    pub wedge_distance: f64,
    pub mu_values: Vec<f64>,
    pub section_half_length: f64,
    pub section_samples: usize,
    pub capture_radius: f64,
    pub saddle_match_radius: f64,
}

pub fn resolve(cfg: &RunConfig, field: &LoadedField, scan: ScanGrid) -> Resolved {
    let t = &cfg.thresholds;
    let extent = scan.rect().extent();
    let step = t.step.unwrap_or_else(|| tensorline::default_step(&scan));
    let wedge_distance = t.wedge_distance.unwrap_or(0.25 * extent);
    let mu_count = t.mu_count.unwrap_or(9);
    let mu_values = if cfg.stages.elliptic {
        match t.mu_range {
            Some(r) => elliptic::mu_grid(r, mu_count),
            None => elliptic::default_mu_grid(field, &scan, cfg.time, mu_count),
        }
    } else {
        Vec::new()
    };
    Resolved {
        scan,
        step,
        max_length: t.max_length.unwrap_or(4.0 * extent),
        wedge_distance,
        mu_values,
        section_half_length: t.section_half_length.unwrap_or(wedge_distance),
        section_samples: t.section_samples.unwrap_or(31),
        capture_radius: t.capture_radius.unwrap_or(2.0 * step),
        saddle_match_radius: t.saddle_match_radius.unwrap_or(2.0 * scan.min_step()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyResult {
    pub pair: usize,
    pub wedges: [Vec2; 2],
    pub family: EllipticFamily,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegmentResult {
    pub segment: HeteroclinicSegment,
    pub check: MinimizerReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlobResult {
    pub family: usize,
    pub metrics: Option<BlobMetrics>,
    pub error: Option<String>,
}

/// Everything the pipeline computed, before serialization.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Results {
    pub singularities: SingularityScan,
    pub wedge_pairs: usize,
    pub families: Vec<FamilyResult>,
    pub hyperbolic: Vec<HyperbolicOecs>,
    pub saddle_report: Option<SaddleReport>,
    pub segments: Vec<SegmentResult>,
    pub chains: Vec<ParabolicChain>,
    pub blobs: Vec<BlobResult>,
    /// Structures skipped with the reason, e.g. a blocked Poincaré section.
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub wedges: usize,
    pub trisectors: usize,
    pub unclassified: usize,
    pub non_transverse: usize,
    pub wedge_pairs: usize,
    pub elliptic_families: usize,
    pub elliptic_cycles: usize,
    pub objective_saddles_repelling: usize,
    pub objective_saddles_attracting: usize,
    pub hyperbolic_oecs: usize,
    pub stagnation_saddles: usize,
    pub stagnation_saddles_unmatched: usize,
    pub heteroclinic_segments: usize,
    pub passing_segments: usize,
    pub parabolic_chains: usize,
    pub advected_blobs: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub format: &'static str,
    pub version: &'static str,
    pub input: InputConfig,
    pub time: f64,
    pub stages: Stages,
    pub resolved: Resolved,
    pub counts: Counts,
    pub notes: Vec<String>,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// SHA-256 of the serialized manifest.
    pub fn digest(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_json()?.as_bytes())))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutput {
    pub manifest: Manifest,
    pub results: Results,
    pub dir: PathBuf,
}

fn numerical(context: String) -> impl FnOnce(CoreError) -> OecsError {
    move |e| OecsError::numerical(context, e)
}

fn count_kind(scan: &SingularityScan, k: SingularityKind) -> usize {
    scan.of_kind(k).count()
}

fn run_elliptic(field: &LoadedField, t: f64, r: &Resolved, res: &mut Results) -> Result<()> {
    let sings = &res.singularities.singularities;
    let pairs = singularity::pair_wedges(sings, r.wedge_distance);
    res.wedge_pairs = pairs.len();
    let positions = res.singularities.positions();
    let opts = EllipticOptions::new(r.step, r.max_length, positions);
    let outcomes: Vec<_> = pairs
        .par_iter()
        .map(|pair| {
            let section = elliptic::build_section(pair, r.section_half_length, r.section_samples, sings, 2.0 * r.step)?;
            elliptic::sweep_mu(&section, &r.mu_values, field, t, &opts)
        })
        .collect();
    for (k, (pair, out)) in pairs.iter().zip(outcomes).enumerate() {
        let (a, b) = (pair.a.position, pair.b.position);
        let label = format!("elliptic family at wedge pair {k} ({}, {}) - ({}, {})", a.x, a.y, b.x, b.y);
        match out {
            Ok(family) => {
                if family.cycles.is_empty() {
                    res.notes.push(format!("{label}: no limit cycles"));
                } else {
                    res.families.push(FamilyResult { pair: k, wedges: [a, b], family });
                }
            }
            Err(e @ CoreError::IntersectionAnomaly { .. }) => return Err(numerical(label)(e)),
            Err(e) => res.notes.push(format!("{label}: {e}")),
        }
    }
    Ok(())
}

fn run_hyperbolic(field: &LoadedField, t: f64, r: &Resolved, res: &mut Results) {
    let extrema = hyperbolic::find_eigenvalue_extrema(field, &r.scan, t);
    let mut opts = HyperbolicOptions::new(r.step, r.max_length);
    opts.singularities = res.singularities.positions();
    for core in &extrema.s2_maxima {
        match hyperbolic::extract_hyperbolic(core, HyperbolicKind::Repelling, field, t, &opts) {
            Ok(h) => res.hyperbolic.push(h),
            Err(e) => res.notes.push(format!("repelling core ({}, {}): {e}", core.position.x, core.position.y)),
        }
    }
    for core in &extrema.s1_minima {
        match hyperbolic::extract_hyperbolic(core, HyperbolicKind::Attracting, field, t, &opts) {
            Ok(h) => res.hyperbolic.push(h),
            Err(e) => res.notes.push(format!("attracting core ({}, {}): {e}", core.position.x, core.position.y)),
        }
    }
    res.saddle_report = Some(hyperbolic::saddle_comparison_report(field, &r.scan, t, r.saddle_match_radius));
}

fn run_parabolic(field: &LoadedField, t: f64, r: &Resolved, res: &mut Results) {
    let mut opts = ParabolicOptions::new(r.step, r.max_length, r.scan.min_step());
    opts.capture_radius = r.capture_radius;
    let fd = 1e-2 * r.scan.min_step();
    let segments = parabolic::find_connections(&res.singularities.singularities, field, t, fd, &opts);
    let checked: Vec<SegmentResult> = segments
        .into_par_iter()
        .map(|segment| {
            let check = parabolic::check_segment(&segment, field, t, &opts);
            SegmentResult { segment, check }
        })
        .collect();
    let passing: Vec<HeteroclinicSegment> =
        checked.iter().filter(|s| s.check.pass).map(|s| s.segment.clone()).collect();
    res.chains = parabolic::assemble_chains(&passing);
    res.segments = checked;
}

fn run_advection(cfg: &RunConfig, field: &LoadedField, res: &mut Results) {
    let t0 = cfg.time;
    let t1 = t0 + cfg.advect.horizon;
    let n = cfg.advect.boundary_points;
    let blobs: Vec<BlobResult> = res
        .families
        .par_iter()
        .enumerate()
        .filter_map(|(k, fam)| {
            let cycle = &fam.family.boundary_cycle()?.cycle;
            let stride = (cycle.len() / n).max(1);
            let polygon: Vec<Vec2> = cycle.iter().step_by(stride).copied().collect();
            let center = geometry::centroid(&polygon);
            let radius = (geometry::area(&polygon) / std::f64::consts::PI).sqrt();
            let blob = MaterialBlob { center, radius, polygon };
            Some(match lagrangian::blob_deformation_metric(&blob, field, t0, t1, cfg.advect.dt) {
                Ok(m) => BlobResult { family: k, metrics: Some(m), error: None },
                Err(e) => BlobResult { family: k, metrics: None, error: Some(e.to_string()) },
            })
        })
        .collect();
    res.blobs = blobs;
}

/// Runs the detection stages without writing anything.
pub fn compute(cfg: &RunConfig, field: &LoadedField, r: &Resolved) -> Result<Results> {
    let t = cfg.time;
    let mut res = Results { singularities: singularity::find_singularities(field, &r.scan, t), ..Results::default() };
    if cfg.stages.elliptic {
        run_elliptic(field, t, r, &mut res)?;
    }
    if cfg.stages.hyperbolic {
        run_hyperbolic(field, t, r, &mut res);
    }
    if cfg.stages.parabolic {
        run_parabolic(field, t, r, &mut res);
    }
    if cfg.stages.advect {
        run_advection(cfg, field, &mut res);
    }
    Ok(res)
}

fn counts(res: &Results) -> Counts {
    let s = &res.singularities;
    let (stag, unmatched) = match &res.saddle_report {
        Some(rep) => (
            rep.stagnation_points.iter().filter(|p| p.kind == StagnationKind::Saddle).count(),
            rep.unmatched_stagnation.len(),
        ),
        None => (0, 0),
    };
    let kind = |k| res.hyperbolic.iter().filter(|h| h.kind == k).count();
    Counts {
        wedges: count_kind(s, SingularityKind::Wedge),
        trisectors: count_kind(s, SingularityKind::Trisector),
        unclassified: count_kind(s, SingularityKind::Unclassified),
        non_transverse: s.non_transverse.len(),
        wedge_pairs: res.wedge_pairs,
        elliptic_families: res.families.len(),
        elliptic_cycles: res.families.iter().map(|f| f.family.cycles.len()).sum(),
        objective_saddles_repelling: kind(HyperbolicKind::Repelling),
        objective_saddles_attracting: kind(HyperbolicKind::Attracting),
        hyperbolic_oecs: res.hyperbolic.len(),
        stagnation_saddles: stag,
        stagnation_saddles_unmatched: unmatched,
        heteroclinic_segments: res.segments.len(),
        passing_segments: res.segments.iter().filter(|s| s.check.pass).count(),
        parabolic_chains: res.chains.len(),
        advected_blobs: res.blobs.iter().filter(|b| b.metrics.is_some()).count(),
    }
}

type Row = Vec<String>;

fn num(x: f64) -> String {
    // Shortest round-trip form: stable and lossless.
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<FileEntry>,
}

impl Writer<'_> {
    fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, data).map_err(|e| OecsError::io(&path, e))?;
        self.files.push(FileEntry {
            name: name.to_string(),
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(data)),
        });
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Row>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        let data = w.into_inner().map_err(|e| OecsError::Serialize(e.to_string()))?;
        self.bytes(name, &data)
    }
}

fn polyline_rows<'a>(id: String, prefix: Vec<String>, line: impl IntoIterator<Item = &'a Vec2>) -> Vec<Row> {
    line.into_iter()
        .enumerate()
        .map(|(k, p)| {
            let mut r = vec![id.clone()];
            r.extend(prefix.iter().cloned());
            r.extend([k.to_string(), num(p.x), num(p.y)]);
            r
        })
        .collect()
}

/// Lattice values for a heat layer; `None` where the field is undefined.
type LatticeValues = Vec<Option<f64>>;

fn write_strain(
    w: &mut Writer<'_>,
    field: &LoadedField,
    t: f64,
    grid: &ScanGrid,
) -> Result<(LatticeValues, LatticeValues)> {
    let mut rows = Vec::with_capacity(grid.len());
    let mut s2_layer = Vec::with_capacity(grid.len());
    let mut ow_layer = Vec::with_capacity(grid.len());
    for j in 0..grid.y.count {
        for i in 0..grid.x.count {
            let p = grid.node(i, j);
            match field.gradient(p, t) {
                Ok(jac) => {
                    let s = jac.symmetric_part();
                    let (s1, s2) = kinematics::strain_eigenvalues(s);
                    let omega = kinematics::vorticity(jac);
                    let ow = kinematics::okubo_weiss(s, omega);
                    let (ex, ey) = match kinematics::strain_eigen(s) {
                        Ok(e) => (num(e.e1.x), num(e.e1.y)),
                        Err(_) => (String::new(), String::new()),
                    };
                    rows.push(vec![num(p.x), num(p.y), num(s1), num(s2), ex, ey, num(omega), num(ow)]);
                    s2_layer.push(Some(s2));
                    ow_layer.push(Some(ow));
                }
                Err(_) => {
                    s2_layer.push(None);
                    ow_layer.push(None);
                }
            }
        }
    }
    w.csv("strain.csv", &["x", "y", "s1", "s2", "e1x", "e1y", "vorticity", "okubo_weiss"], rows)?;
    Ok((s2_layer, ow_layer))
}

fn write_results(w: &mut Writer<'_>, stages: &Stages, res: &Results) -> Result<()> {
    w.csv(
        "singularities.csv",
        &["x", "y", "kind", "delta"],
        res.singularities
            .singularities
            .iter()
            .map(|s| vec![num(s.position.x), num(s.position.y), s.kind.as_str().into(), num(s.delta)]),
    )?;
    if stages.elliptic {
        w.csv(
            "elliptic_families.csv",
            &[
                "family",
                "wedge_ax",
                "wedge_ay",
                "wedge_bx",
                "wedge_by",
                "cycles",
                "continua",
                "boundary_mu",
                "boundary_sign",
                "boundary_area",
            ],
            res.families.iter().enumerate().map(|(k, f)| {
                let b = f.family.boundary_cycle();
                vec![
                    k.to_string(),
                    num(f.wedges[0].x),
                    num(f.wedges[0].y),
                    num(f.wedges[1].x),
                    num(f.wedges[1].y),
                    f.family.cycles.len().to_string(),
                    f.family.continua.len().to_string(),
                    opt(b.map(|c| c.mu)),
                    b.map(|c| c.sign.as_char().to_string()).unwrap_or_default(),
                    opt(b.map(|c| c.area)),
                ]
            }),
        )?;
        let mut rows = Vec::new();
        for (k, f) in res.families.iter().enumerate() {
            for (c, cyc) in f.family.cycles.iter().enumerate() {
                let boundary = f.family.boundary == Some(c);
                let prefix = vec![c.to_string(), num(cyc.mu), cyc.sign.as_char().to_string(), boundary.to_string()];
                rows.extend(polyline_rows(k.to_string(), prefix, &cyc.cycle));
            }
        }
        w.csv("elliptic_cycles.csv", &["family", "cycle", "mu", "sign", "boundary", "vertex", "x", "y"], rows)?;
    }
    if stages.hyperbolic {
        w.csv(
            "saddles.csv",
            &["oecs", "kind", "x", "y", "s1", "s2", "strength", "stop_0", "stop_1"],
            res.hyperbolic.iter().enumerate().map(|(k, h)| {
                vec![
                    k.to_string(),
                    h.kind.as_str().into(),
                    num(h.core.position.x),
                    num(h.core.position.y),
                    num(h.core.s1),
                    num(h.core.s2),
                    num(h.core.strength),
                    h.stop_reasons[0].as_str().into(),
                    h.stop_reasons[1].as_str().into(),
                ]
            }),
        )?;
        let mut rows = Vec::new();
        for (k, h) in res.hyperbolic.iter().enumerate() {
            for (b, branch) in h.branches.iter().enumerate() {
                rows.extend(polyline_rows(k.to_string(), vec![h.kind.as_str().into(), b.to_string()], branch));
            }
        }
        w.csv("hyperbolic_branches.csv", &["oecs", "kind", "branch", "vertex", "x", "y"], rows)?;
        if let Some(rep) = &res.saddle_report {
            w.csv(
                "stagnation_points.csv",
                &["x", "y", "kind", "matched"],
                rep.stagnation_points.iter().enumerate().map(|(k, p)| {
                    let matched = rep.matches.iter().any(|m| m.stagnation == k);
                    vec![
                        num(p.position.x),
                        num(p.position.y),
                        format!("{:?}", p.kind).to_lowercase(),
                        matched.to_string(),
                    ]
                }),
            )?;
        }
    }
    if stages.parabolic {
        w.csv(
            "parabolic_segments.csv",
            &["segment", "family", "from_x", "from_y", "to_x", "to_y", "length", "pass", "failure_x", "failure_y"],
            res.segments.iter().enumerate().map(|(k, s)| {
                let g = &s.segment;
                vec![
                    k.to_string(),
                    g.family.as_str().into(),
                    num(g.from.position.x),
                    num(g.from.position.y),
                    num(g.to.position.x),
                    num(g.to.position.y),
                    num(g.length()),
                    s.check.pass.to_string(),
                    opt(s.check.failure_point.map(|p| p.x)),
                    opt(s.check.failure_point.map(|p| p.y)),
                ]
            }),
        )?;
        let mut rows = Vec::new();
        for (k, c) in res.chains.iter().enumerate() {
            rows.extend(polyline_rows(
                k.to_string(),
                vec![c.segments.len().to_string(), num(c.total_length)],
                &c.polyline(),
            ));
        }
        w.csv("parabolic_chains.csv", &["chain", "segments", "length", "vertex", "x", "y"], rows)?;
    }
    if stages.advect {
        w.csv(
            "advection.csv",
            &["family", "area_ratio", "perimeter_ratio", "max_aspect", "error"],
            res.blobs.iter().map(|b| {
                vec![
                    b.family.to_string(),
                    opt(b.metrics.map(|m| m.area_ratio)),
                    opt(b.metrics.map(|m| m.perimeter_ratio)),
                    opt(b.metrics.map(|m| m.max_aspect)),
                    b.error.clone().unwrap_or_default(),
                ]
            }),
        )?;
    }
    Ok(())
}

fn style(color: &str, width: f64, closed: bool) -> PolylineStyle {
    PolylineStyle { color: color.into(), width, closed }
}

/// Plot layers for a finished run: `s2` heat map, structures, then markers.
pub fn plot_layers(r: &Resolved, res: &Results, s2: Vec<Option<f64>>) -> Vec<Layer> {
    let mut layers = vec![Layer::Heat(HeatLayer { name: "s2".into(), grid: r.scan, values: s2 })];
    let range = r.mu_values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut elliptic = Vec::new();
    for f in &res.families {
        for (c, cyc) in f.family.cycles.iter().enumerate() {
            let width = if f.family.boundary == Some(c) { 2.5 } else { 1.0 };
            elliptic.push((cyc.cycle.clone(), style(&svg::mu_color(cyc.mu, range), width, true)));
        }
    }
    if !elliptic.is_empty() {
        layers.push(Layer::Polylines(PolylineLayer { name: "elliptic".into(), lines: elliptic }));
    }
    if !res.hyperbolic.is_empty() {
        let lines = res
            .hyperbolic
            .iter()
            .map(|h| {
                let c = if h.kind == HyperbolicKind::Repelling { "#c00000" } else { "#0040c0" };
                (h.polyline(), style(c, 2.0, false))
            })
            .collect();
        layers.push(Layer::Polylines(PolylineLayer { name: "hyperbolic".into(), lines }));
    }
    if !res.chains.is_empty() {
        let lines = res.chains.iter().map(|c| (c.polyline(), style("#008000", 2.0, false))).collect();
        layers.push(Layer::Polylines(PolylineLayer { name: "parabolic".into(), lines }));
    }
    let marker = |name: &str, points: Vec<Vec2>, shape, color: &str| {
        Layer::Markers(MarkerLayer { name: name.into(), points, shape, color: color.into() })
    };
    let of = |k| res.singularities.of_kind(k).map(|s| s.position).collect::<Vec<_>>();
    layers.push(marker("wedges", of(SingularityKind::Wedge), MarkerShape::Circle, "#000000"));
    layers.push(marker("trisectors", of(SingularityKind::Trisector), MarkerShape::Triangle, "#000000"));
    if let Some(rep) = &res.saddle_report {
        let cores = res.hyperbolic.iter().map(|h| h.core.position).collect();
        layers.push(marker("objective_saddles", cores, MarkerShape::Square, "#7000a0"));
        let stag =
            rep.stagnation_points.iter().filter(|p| p.kind == StagnationKind::Saddle).map(|p| p.position).collect();
        layers.push(marker("stagnation_points", stag, MarkerShape::Cross, "#606060"));
    }
    layers
}

/// Samples `field` as seen from `frame` on a space-time lattice of the new
/// coordinates. Nodes whose pre-image lies outside the data are a data error.
pub fn frame_transform_grid(
    field: &LoadedField,
    frame: FrameChange,
    x: GridAxis,
    y: GridAxis,
    t0: f64,
    dt: f64,
    nt: usize,
) -> Result<GriddedField> {
    let framed = kinematics::transform_velocity(field, frame);
    let mut samples = Vec::with_capacity(x.count * y.count * nt);
    for k in 0..nt {
        let t = t0 + dt * k as f64;
        for j in 0..y.count {
            for i in 0..x.count {
                let p = Vec2::new(x.coord(i), y.coord(j));
                let v = framed.velocity(p, t).map_err(|e| {
                    OecsError::Data(format!("frame-transformed node ({}, {}) at t = {t}: {e}", p.x, p.y))
                })?;
                samples.push(v);
            }
        }
    }
    GriddedField::new(x, y, t0, dt, nt, samples).map_err(|e| OecsError::Data(e.to_string()))
}

/// Validates the config, loads the input, runs every enabled stage and
/// writes the artifacts plus `manifest.json` to the output directory.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| OecsError::Config(format!("thread pool: {e}")))?;
    let field = load_field(cfg)?;
    let scan = scan_grid(cfg, &field)?;
    let resolved = resolve(cfg, &field, scan);
    let results = pool.install(|| compute(cfg, &field, &resolved))?;

    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir).map_err(|e| OecsError::io(&dir, e))?;
    let mut w = Writer { dir: &dir, files: Vec::new() };
    let (s2, _ow) = write_strain(&mut w, &field, cfg.time, &scan)?;
    write_results(&mut w, &cfg.stages, &results)?;
    if cfg.stages.svg {
        let svg = svg::render_svg(scan.rect(), &plot_layers(&resolved, &results, s2))?;
        w.bytes("structures.svg", svg.as_bytes())?;
    }
    let manifest = Manifest {
        format: "oecs-manifest 1",
        version: env!("CARGO_PKG_VERSION"),
        input: cfg.input.clone(),
        time: cfg.time,
        stages: cfg.stages,
        resolved,
        counts: counts(&results),
        notes: results.notes.clone(),
        files: w.files,
    };
    let json = manifest.to_json()?;
    let path = dir.join(MANIFEST);
    fs::write(&path, json).map_err(|e| OecsError::io(&path, e))?;
    Ok(PipelineOutput { manifest, results, dir })
}
