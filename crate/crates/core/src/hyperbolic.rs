//! Objective saddles and attracting/repelling shearless lines.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScanGrid, VelocityField};
use crate::kinematics::{self, StagnationKind, StagnationPoint};
use crate::math::{Mat2, Vec2};
use crate::tensorline::{self, DirectionSpec, StopReason, TensorlineOptions};

/// Neighbourhood variation below which an extremum is treated as a plateau.
pub const PLATEAU_TOLERANCE: f64 = 1e-10;

/// Relative difference below which neighbouring lattice values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Relative increase of the eigenvalue magnitude that ends a branch.
pub const MONOTONE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HyperbolicKind {
    /// `e2`-line through a local minimum of `s1`.
    Attracting,
    /// `e1`-line through a local maximum of `s2`.
    Repelling,
}

impl HyperbolicKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HyperbolicKind::Attracting => "attracting",
            HyperbolicKind::Repelling => "repelling",
        }
    }

    fn spec(self) -> DirectionSpec {
        match self {
            HyperbolicKind::Attracting => DirectionSpec::E2,
            HyperbolicKind::Repelling => DirectionSpec::E1,
        }
    }

    fn magnitude(self, s1: f64, s2: f64) -> f64 {
        match self {
            HyperbolicKind::Attracting => s1.abs(),
            HyperbolicKind::Repelling => s2.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ObjectiveSaddle {
    pub position: Vec2,
    pub s1: f64,
    pub s2: f64,
    /// `|s1|` at an attracting core, `|s2|` at a repelling one.
    pub strength: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EigenExtrema {
    pub s1_minima: Vec<ObjectiveSaddle>,
    pub s2_maxima: Vec<ObjectiveSaddle>,
}

fn eigen_lattice<F: VelocityField + ?Sized>(field: &F, grid: &ScanGrid, t: f64) -> Vec<Option<(f64, f64)>> {
    let mut out = Vec::with_capacity(grid.len());
    for j in 0..grid.y.count {
        for i in 0..grid.x.count {
            out.push(field.strain(grid.node(i, j), t).ok().map(kinematics::strain_eigenvalues));
        }
    }
    out
}

/// Quadratic-model extremum of `g` near `p`: central-difference gradient and
/// Hessian at spacing `h`, Newton steps confined to `radius` around `p`.
fn polish<G: Fn(Vec2) -> Option<f64>>(g: &G, p: Vec2, h: f64, radius: f64) -> Vec2 {
    let start = p;
    let mut x = p;
    for _ in 0..20 {
        let v = |dx: f64, dy: f64| g(x + Vec2::new(dx, dy));
        let (Some(c), Some(e), Some(w), Some(n), Some(s)) = (v(0.0, 0.0), v(h, 0.0), v(-h, 0.0), v(0.0, h), v(0.0, -h))
        else {
            return x;
        };
        let (Some(ne), Some(nw), Some(se), Some(sw)) = (v(h, h), v(-h, h), v(h, -h), v(-h, -h)) else {
            return x;
        };
        let grad = Vec2::new((e - w) / (2.0 * h), (n - s) / (2.0 * h));
        let hxx = (e - 2.0 * c + w) / (h * h);
        let hyy = (n - 2.0 * c + s) / (h * h);
        let hxy = (ne - nw - se + sw) / (4.0 * h * h);
        let Some(inv) = Mat2::new(hxx, hxy, hxy, hyy).inverse() else {
            return x;
        };
        let dx = -(inv * grad);
        let next = x + dx;
        if !next.is_finite() || next.distance(start) > radius {
            return x;
        }
        x = next;
        if dx.norm() < 1e-12 * (1.0 + x.norm()) {
            break;
        }
    }
    x
}

/// Isolated lattice extrema of the eigenvalue fields: strict 8-neighbour
/// extrema with a non-flat neighbourhood, refined to subgrid accuracy.
/// Neighbours equal to roundoff are accepted when the refined point is a
/// strict peak, so an extremum midway between nodes is reported once.
pub fn find_eigenvalue_extrema<F: VelocityField + ?Sized>(field: &F, grid: &ScanGrid, t: f64) -> EigenExtrema {
    let vals = eigen_lattice(field, grid, t);
    let (nx, ny) = (grid.x.count, grid.y.count);
    let mut out = EigenExtrema::default();
    if nx < 3 || ny < 3 {
        return out;
    }
    let h = 0.1 * grid.min_step();
    let radius = grid.min_step();
    for which in [0usize, 1] {
        // Maximise -s1 for minima of s1 and s2 for maxima of s2.
        let score = |v: (f64, f64)| if which == 0 { -v.0 } else { v.1 };
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let Some(c) = vals[grid.index(i, j)].map(score) else { continue };
                let tie = TIE_TOLERANCE * c.abs().max(1.0);
                let mut strict = true;
                let mut tied = false;
                let mut complete = true;
                let (mut lo, mut hi) = (c, c);
                for dj in [-1i64, 0, 1] {
                    for di in [-1i64, 0, 1] {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let k = grid.index((i as i64 + di) as usize, (j as i64 + dj) as usize);
                        match vals[k].map(score) {
                            Some(v) => {
                                strict &= v < c + tie;
                                tied |= v >= c;
                                lo = lo.min(v);
                                hi = hi.max(v);
                            }
                            None => complete = false,
                        }
                    }
                }
                if !complete || !strict || hi - lo < PLATEAU_TOLERANCE {
                    continue;
                }
                let g = |p: Vec2| field.strain(p, t).ok().map(|s| score(kinematics::strain_eigenvalues(s)));
                let p = polish(&g, grid.node(i, j), h, radius);
                let found = if which == 0 { &out.s1_minima } else { &out.s2_maxima };
                if tied {
                    // Nodes tied around an extremum between them all polish to
                    // the same point; a ridge or trench does not give a strict
                    // peak there.
                    let Some(peak) = g(p) else { continue };
                    let ring =
                        (0..8).map(|k| p + Vec2::from_angle(k as f64 * core::f64::consts::FRAC_PI_4) * (0.5 * radius));
                    if !ring.map(g).all(|v| v.is_some_and(|v| v < peak - tie))
                        || found.iter().any(|q| q.position.distance(p) < 0.5 * radius)
                    {
                        continue;
                    }
                }
                let Ok(s) = field.strain(p, t) else { continue };
                let (s1, s2) = kinematics::strain_eigenvalues(s);
                let strength = if which == 0 { s1.abs() } else { s2.abs() };
                let saddle = ObjectiveSaddle { position: p, s1, s2, strength };
                if which == 0 {
                    out.s1_minima.push(saddle);
                } else {
                    out.s2_maxima.push(saddle);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HyperbolicOptions {
    pub step: f64,
    pub max_length: f64,
    pub singularities: Vec<Vec2>,
    pub singularity_radius: f64,
}

impl HyperbolicOptions {
    pub fn new(step: f64, max_length: f64) -> Self {
        HyperbolicOptions { step, max_length, singularities: Vec::new(), singularity_radius: 2.0 * step }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HyperbolicOecs {
    pub kind: HyperbolicKind,
    pub core: ObjectiveSaddle,
    /// Both branches start at the core.
    pub branches: [Vec<Vec2>; 2],
    pub stop_reasons: [StopReason; 2],
}

impl HyperbolicOecs {
    /// Single polyline from the end of the first branch through the core to
    /// the end of the second.
    pub fn polyline(&self) -> Vec<Vec2> {
        let mut pts: Vec<Vec2> = self.branches[0].iter().rev().copied().collect();
        pts.extend(self.branches[1].iter().skip(1).copied());
        pts
    }
}

/// Integrates the `e1`- (repelling) or `e2`-line (attracting) through a core
/// in both directions, stopping each branch once the relevant eigenvalue
/// magnitude grows.
pub fn extract_hyperbolic<F: VelocityField + ?Sized>(
    core: &ObjectiveSaddle,
    kind: HyperbolicKind,
    field: &F,
    t: f64,
    opts: &HyperbolicOptions,
) -> Result<HyperbolicOecs> {
    let eig = kinematics::strain_eigen_at(field, core.position, t).map_err(|e| match e {
        Error::Degenerate { .. } => Error::DegenerateCore { point: core.position },
        other => other,
    })?;
    let axis = match kind {
        HyperbolicKind::Attracting => eig.e2,
        HyperbolicKind::Repelling => eig.e1,
    };
    let core_value = kind.magnitude(eig.s1, eig.s2);
    let tol = MONOTONE_TOLERANCE * core_value;
    let spec = kind.spec();
    let topts = TensorlineOptions::with_step(opts.step, opts.max_length)
        .singularities(opts.singularities.clone())
        .without_closure();
    let topts = TensorlineOptions { singularity_radius: opts.singularity_radius, ..topts };
    let magnitude = |p: Vec2| {
        field.strain(p, t).ok().map(|s| {
            let (s1, s2) = kinematics::strain_eigenvalues(s);
            kind.magnitude(s1, s2)
        })
    };
    let mut branches: [Vec<Vec2>; 2] = [Vec::new(), Vec::new()];
    let mut reasons = [StopReason::MaxLength; 2];
    for (k, sense) in [-1.0, 1.0].into_iter().enumerate() {
        let dir = axis * sense;
        let seed = core.position + dir * opts.step;
        let mut branch = alloc::vec![core.position];
        let seed_value = magnitude(seed);
        match seed_value {
            Some(v) if v <= core_value + tol => {}
            _ => {
                branches[k] = branch;
                reasons[k] = StopReason::Monotonicity;
                continue;
            }
        }
        let mut last = seed_value.unwrap_or(core_value);
        let traj = tensorline::integrate_tensorline_with(field, t, seed, dir, &spec, &topts, |_, next| {
            let v = magnitude(next)?;
            if v > last + tol {
                return Some(StopReason::Monotonicity);
            }
            last = v;
            None
        });
        match traj {
            Ok(traj) => {
                branch.extend(traj.points);
                reasons[k] = traj.stop_reason;
            }
            Err(Error::OutOfDomain { .. }) => reasons[k] = StopReason::Boundary,
            Err(_) => reasons[k] = StopReason::Singularity,
        }
        branches[k] = branch;
    }
    Ok(HyperbolicOecs { kind, core: *core, branches, stop_reasons: reasons })
}

/// Repelling OECSs from every `s2` maximum and attracting ones from every `s1`
/// minimum; cores that fail are skipped.
pub fn detect_hyperbolic<F: VelocityField + ?Sized>(
    extrema: &EigenExtrema,
    field: &F,
    t: f64,
    opts: &HyperbolicOptions,
) -> Vec<HyperbolicOecs> {
    let rep = extrema.s2_maxima.iter().map(|c| (c, HyperbolicKind::Repelling));
    let att = extrema.s1_minima.iter().map(|c| (c, HyperbolicKind::Attracting));
    rep.chain(att).filter_map(|(c, k)| extract_hyperbolic(c, k, field, t, opts).ok()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SaddleMatch {
    pub saddle: usize,
    pub stagnation: usize,
    pub distance: f64,
}

/// Objective saddles against saddle-type stagnation points.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SaddleReport {
    pub saddles: Vec<ObjectiveSaddle>,
    pub stagnation_points: Vec<StagnationPoint>,
    /// Each saddle with its nearest saddle-type stagnation point within the radius.
    pub matches: Vec<SaddleMatch>,
    pub unmatched_saddles: Vec<usize>,
    /// Saddle-type stagnation points with no objective saddle within the radius.
    pub unmatched_stagnation: Vec<usize>,
    /// `s2` is constant over the lattice, so no isolated extremum can exist.
    pub constant_strain: bool,
}

pub fn saddle_comparison_report<F: VelocityField + ?Sized>(
    field: &F,
    grid: &ScanGrid,
    t: f64,
    radius: f64,
) -> SaddleReport {
    let extrema = find_eigenvalue_extrema(field, grid, t);
    let mut saddles = extrema.s2_maxima.clone();
    for m in &extrema.s1_minima {
        if saddles.iter().all(|s| s.position.distance(m.position) > radius) {
            saddles.push(*m);
        }
    }
    let stagnation_points = kinematics::find_stagnation_points(field, grid, t);
    let saddle_type: Vec<usize> =
        (0..stagnation_points.len()).filter(|&k| stagnation_points[k].kind == StagnationKind::Saddle).collect();
    let mut matches = Vec::new();
    let mut unmatched_saddles = Vec::new();
    for (i, s) in saddles.iter().enumerate() {
        let best = saddle_type
            .iter()
            .map(|&k| (k, stagnation_points[k].position.distance(s.position)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((k, d)) if d <= radius => matches.push(SaddleMatch { saddle: i, stagnation: k, distance: d }),
            _ => unmatched_saddles.push(i),
        }
    }
    let unmatched_stagnation = saddle_type
        .into_iter()
        .filter(|&k| saddles.iter().all(|s| s.position.distance(stagnation_points[k].position) > radius))
        .collect();
    let s2: Vec<f64> = eigen_lattice(field, grid, t).into_iter().flatten().map(|v| v.1).collect();
    let lo = s2.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let constant_strain = !s2.is_empty() && hi - lo < PLATEAU_TOLERANCE * hi.abs().max(1.0);
    SaddleReport { saddles, stagnation_points, matches, unmatched_saddles, unmatched_stagnation, constant_strain }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AnalyticFlow, GridAxis, Rect};
    use crate::kinematics::FrameChange;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn lattice(lo: f64, step: f64, n: usize) -> ScanGrid {
        let a = GridAxis::new(lo, step, n).unwrap();
        ScanGrid::new(a, a)
    }

    fn cellular() -> crate::field::AnalyticField {
        AnalyticFlow::Cellular.field().with_domain(Rect::new(-4.0, 4.0, -4.0, 4.0))
    }

    #[test]
    fn cellular_extrema_sit_on_the_pi_lattice() {
        let grid = lattice(-3.7, 0.1, 75);
        let ex = find_eigenvalue_extrema(&cellular(), &grid, 0.0);
        assert_eq!(ex.s2_maxima.len(), 9);
        for m in &ex.s2_maxima {
            let k = (m.position.x / PI).round();
            let l = (m.position.y / PI).round();
            assert!(m.position.distance(Vec2::new(k * PI, l * PI)) < 1e-6, "{m:?}");
            assert!((m.s2 - 1.0).abs() < 1e-10);
        }
        assert_eq!(ex.s1_minima.len(), ex.s2_maxima.len());
        for m in &ex.s1_minima {
            assert!(ex.s2_maxima.iter().any(|n| n.position.distance(m.position) < 1e-6));
        }
    }

    #[test]
    fn extremum_midway_between_nodes_is_found_once() {
        // Origin at a cell centre: four nodes tie around the peak.
        let grid = lattice(-0.55, 0.1, 12);
        let ex = find_eigenvalue_extrema(&cellular(), &grid, 0.0);
        assert_eq!(ex.s2_maxima.len(), 1, "{:?}", ex.s2_maxima);
        assert!(ex.s2_maxima[0].position.norm() < 1e-6);
        // A ridge with no peak along it stays rejected.
        let jet = AnalyticFlow::PerturbedJet { epsilon: 0.0 }.field().with_domain(Rect::new(-2.0, 2.0, -2.0, 2.0));
        let ex = find_eigenvalue_extrema(&jet, &lattice(-1.0, 0.1, 21), 0.0);
        assert!(ex.s2_maxima.is_empty() && ex.s1_minima.is_empty(), "{ex:?}");
    }

    #[test]
    fn constant_and_zero_strain_have_no_extrema() {
        let grid = lattice(-1.0, 0.1, 21);
        let saddle = AnalyticFlow::SteadySaddle { strength: 1.0 }.field();
        assert_eq!(find_eigenvalue_extrema(&saddle, &grid, 0.0), EigenExtrema::default());
        let rot = AnalyticFlow::RigidRotation { rate: 1.0 }.field();
        assert_eq!(find_eigenvalue_extrema(&rot, &grid, 0.0), EigenExtrema::default());
    }

    fn core_at_origin() -> ObjectiveSaddle {
        ObjectiveSaddle { position: Vec2::ZERO, s1: -1.0, s2: 1.0, strength: 1.0 }
    }

    fn check_branches(oecs: &HyperbolicOecs, ends: [Vec2; 2]) {
        let f = cellular();
        for b in &oecs.branches {
            let end = *b.last().unwrap();
            assert!(ends.iter().any(|e| e.distance(end) < 0.05), "{end:?} {:?}", oecs.stop_reasons);
            let mut prev = f64::INFINITY;
            for &p in b {
                let (s1, s2) = kinematics::strain_eigenvalues(f.strain(p, 0.0).unwrap());
                let v = oecs.kind.magnitude(s1, s2);
                assert!(v <= prev + MONOTONE_TOLERANCE);
                prev = v;
            }
        }
    }

    #[test]
    fn cellular_repelling_and_attracting_branches() {
        let f = cellular();
        let opts = HyperbolicOptions::new(0.01, 10.0);
        let rep = extract_hyperbolic(&core_at_origin(), HyperbolicKind::Repelling, &f, 0.0, &opts).unwrap();
        check_branches(&rep, [Vec2::new(0.0, FRAC_PI_2), Vec2::new(0.0, -FRAC_PI_2)]);
        let att = extract_hyperbolic(&core_at_origin(), HyperbolicKind::Attracting, &f, 0.0, &opts).unwrap();
        check_branches(&att, [Vec2::new(FRAC_PI_2, 0.0), Vec2::new(-FRAC_PI_2, 0.0)]);
        assert!((rep.branches[1][1] - rep.branches[1][0]).normalized().unwrap().x.abs() < 1e-6);
    }

    #[test]
    fn degenerate_core_is_rejected() {
        let f = AnalyticFlow::RigidRotation { rate: 1.0 }.field();
        let r = extract_hyperbolic(
            &core_at_origin(),
            HyperbolicKind::Repelling,
            &f,
            0.0,
            &HyperbolicOptions::new(0.01, 1.0),
        );
        assert_eq!(r, Err(Error::DegenerateCore { point: Vec2::ZERO }));
    }

    #[test]
    fn steady_saddle_report_flags_constant_strain() {
        let f = AnalyticFlow::SteadySaddle { strength: 1.0 }.field();
        let grid = lattice(-1.05, 0.1, 22);
        let r = saddle_comparison_report(&f, &grid, 0.0, 0.2);
        assert!(r.constant_strain);
        assert!(r.saddles.is_empty());
        assert_eq!(r.stagnation_points.len(), 1);
        assert_eq!(r.unmatched_stagnation, alloc::vec![0]);
    }

    #[test]
    fn translating_frame_moves_stagnation_but_not_saddles() {
        let f = cellular();
        let grid = lattice(-1.55, 0.1, 32);
        let base = saddle_comparison_report(&f, &grid, 0.0, 0.2);
        let moving = kinematics::transform_velocity(cellular(), FrameChange::translation(Vec2::new(0.3, 0.0)));
        let shifted = saddle_comparison_report(&moving, &grid, 0.0, 0.2);
        assert_eq!(base.saddles.len(), shifted.saddles.len());
        for (a, b) in base.saddles.iter().zip(&shifted.saddles) {
            assert!(a.position.distance(b.position) < 1e-6);
            assert!((a.strength - b.strength).abs() < 1e-9);
        }
        assert_ne!(
            base.stagnation_points.iter().map(|s| s.position).collect::<Vec<_>>(),
            shifted.stagnation_points.iter().map(|s| s.position).collect::<Vec<_>>()
        );
    }
}
