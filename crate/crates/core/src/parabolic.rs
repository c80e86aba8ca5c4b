//! Jet cores: alternating chains of `e1`/`e2` connections between trisectors
//! and wedges that pass the weak-minimizer neutrality test.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScanGrid, VelocityField};
use crate::geometry;
use crate::kinematics;
use crate::math::{self, Sym2, Vec2};
use crate::singularity::{self, Singularity, SingularityKind};
use crate::tensorline::{self, DirectionSpec, Family, StopReason, TensorlineOptions};

/// Radial eigendirection leaving a trisector.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Separatrix {
    pub family: Family,
    pub angle: f64,
    pub direction: Vec2,
    pub seed: Vec2,
}

fn spec_for(family: Family) -> DirectionSpec {
    match family {
        Family::E2 => DirectionSpec::E2,
        _ => DirectionSpec::E1,
    }
}

/// The three `e1` and three `e2` separatrices of a trisector, from the
/// linearisation `(α, β) ≈ L (x − x₀)`, seeded at `seed_distance`.
///
/// A ray at angle `θ` is radial for an eigenvector family when
/// `α(θ) sin 2θ − β(θ) cos 2θ = 0`, a cubic in `tan θ`; the sign of
/// `α cos 2θ + β sin 2θ` on the ray tells `e1` from `e2`.
pub fn trisector_separatrices<F: VelocityField + ?Sized>(
    tri: &Singularity,
    field: &F,
    t: f64,
    fd_step: f64,
    seed_distance: f64,
) -> Result<Vec<Separatrix>> {
    if tri.kind != SingularityKind::Trisector {
        return Err(Error::NotTrisector);
    }
    let l = singularity::alpha_beta_jacobian(field, tri.position, t, fd_step)?;
    if !(l.det().abs() > 1e-8 * l.frobenius() * l.frobenius()) {
        return Err(Error::LinearizationDegenerate);
    }
    let ab = |th: f64| {
        let r = Vec2::from_angle(th);
        (l.a11 * r.x + l.a12 * r.y, l.a21 * r.x + l.a22 * r.y)
    };
    let f = |th: f64| {
        let (a, b) = ab(th);
        a * math::sin(2.0 * th) - b * math::cos(2.0 * th)
    };
    // f(θ + π) = −f(θ): roots on [0, π) give every radial line.
    const N: usize = 720;
    let mut lines = Vec::new();
    let mut prev = (0.0, f(0.0));
    for k in 1..=N {
        let th = core::f64::consts::PI * k as f64 / N as f64;
        let cur = (th, f(th));
        if prev.1 == 0.0 {
            lines.push(prev.0);
        } else if prev.1 * cur.1 < 0.0 {
            let (mut a, mut fa, mut b) = (prev.0, prev.1, cur.0);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if (fm > 0.0) == (fa > 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            lines.push(0.5 * (a + b));
        }
        prev = cur;
    }
    if lines.len() != 3 {
        return Err(Error::LinearizationDegenerate);
    }
    let mut out = Vec::with_capacity(6);
    for &th in &lines {
        for ray in [th, th + core::f64::consts::PI] {
            let (a, b) = ab(ray);
            let q = a * math::cos(2.0 * ray) + b * math::sin(2.0 * ray);
            let family = if q < 0.0 { Family::E1 } else { Family::E2 };
            let direction = Vec2::from_angle(ray);
            out.push(Separatrix { family, angle: ray, direction, seed: tri.position + direction * seed_distance });
        }
    }
    out.sort_by(|a, b| (a.family as u8).cmp(&(b.family as u8)).then(a.angle.total_cmp(&b.angle)));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HeteroclinicSegment {
    pub from: Singularity,
    pub to: Singularity,
    pub family: Family,
    /// Starts at the trisector and ends within the capture radius of the wedge.
    pub polyline: Vec<Vec2>,
    pub hit_distance: f64,
}

impl HeteroclinicSegment {
    pub fn length(&self) -> f64 {
        geometry::polyline_length(&self.polyline)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ParabolicOptions {
    pub step: f64,
    pub max_length: f64,
    /// Capture radius around wedges and seeding distance from trisectors.
    pub capture_radius: f64,
    /// Spacing of the neutrality Hessian and of the trench march.
    pub probe_step: f64,
    /// Extent of the trench search on either side of a segment.
    pub trench_radius: f64,
}

impl ParabolicOptions {
    /// Capture radius `2Δ`; trench search over ten lattice spacings, probed at
    /// a tenth of a spacing.
    pub fn new(step: f64, max_length: f64, grid_step: f64) -> Self {
        ParabolicOptions {
            step,
            max_length,
            capture_radius: 2.0 * step,
            probe_step: 0.1 * grid_step,
            trench_radius: 10.0 * grid_step,
        }
    }
}

/// Follows a separatrix until it enters the capture radius of a wedge.
///
/// Other trisectors end the trajectory; so do the domain boundary and the
/// arclength cap, all reported as `NoConnection`.
pub fn connect_to_wedge<F: VelocityField + ?Sized>(
    tri: &Singularity,
    seed: &Separatrix,
    singularities: &[Singularity],
    field: &F,
    t: f64,
    opts: &ParabolicOptions,
) -> Result<HeteroclinicSegment> {
    let blockers: Vec<Vec2> = singularities
        .iter()
        .filter(|s| s.kind != SingularityKind::Wedge && s.position.distance(tri.position) > opts.capture_radius)
        .map(|s| s.position)
        .collect();
    let topts = TensorlineOptions::with_step(opts.step, opts.max_length).singularities(blockers).without_closure();
    let mut hit: Option<(usize, Vec2)> = None;
    let traj = tensorline::integrate_tensorline_with(
        field,
        t,
        seed.seed,
        seed.direction,
        &spec_for(seed.family),
        &topts,
        |_, next| {
            let w = singularities
                .iter()
                .position(|s| s.kind == SingularityKind::Wedge && s.position.distance(next) < opts.capture_radius)?;
            hit = Some((w, next));
            Some(StopReason::User)
        },
    )
    .map_err(|_| Error::NoConnection)?;
    let Some((w, end)) = hit.filter(|_| traj.stop_reason == StopReason::User) else {
        return Err(Error::NoConnection);
    };
    let mut polyline = alloc::vec![tri.position];
    polyline.extend(traj.points);
    polyline.push(end);
    let to = singularities[w];
    Ok(HeteroclinicSegment { from: *tri, to, family: seed.family, hit_distance: end.distance(to.position), polyline })
}

/// Every trisector-to-wedge connection found from the separatrices of the
/// listed trisectors.
pub fn find_connections<F: VelocityField + ?Sized>(
    singularities: &[Singularity],
    field: &F,
    t: f64,
    fd_step: f64,
    opts: &ParabolicOptions,
) -> Vec<HeteroclinicSegment> {
    let mut out = Vec::new();
    for tri in singularities.iter().filter(|s| s.kind == SingularityKind::Trisector) {
        let Ok(seps) = trisector_separatrices(tri, field, t, fd_step, opts.capture_radius) else { continue };
        for sep in &seps {
            if let Ok(seg) = connect_to_wedge(tri, sep, singularities, field, t, opts) {
                out.push(seg);
            }
        }
    }
    out
}

/// `𝒩_{e1} = s2²` and `𝒩_{e2} = s1²`.
pub fn neutrality<F: VelocityField + ?Sized>(field: &F, p: Vec2, t: f64, family: Family) -> Result<f64> {
    let (s1, s2) = kinematics::strain_eigenvalues(field.strain(p, t)?);
    Ok(match family {
        Family::E2 => s1 * s1,
        _ => s2 * s2,
    })
}

/// Central-difference Hessian of the neutrality function.
pub fn neutrality_hessian<F: VelocityField + ?Sized>(
    field: &F,
    p: Vec2,
    t: f64,
    family: Family,
    h: f64,
) -> Result<Sym2> {
    let n = |dx: f64, dy: f64| neutrality(field, p + Vec2::new(dx, dy), t, family);
    let c = n(0.0, 0.0)?;
    let xx = (n(h, 0.0)? - 2.0 * c + n(-h, 0.0)?) / (h * h);
    let yy = (n(0.0, h)? - 2.0 * c + n(0.0, -h)?) / (h * h);
    let xy = (n(h, h)? - n(-h, h)? - n(h, -h)? + n(-h, -h)?) / (4.0 * h * h);
    Ok(Sym2::new(xx, xy, yy))
}

/// Neutrality functions sampled on a lattice.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NeutralityData {
    pub grid: ScanGrid,
    /// Row-major, `NaN` where the field cannot be evaluated.
    pub n_e1: Vec<f64>,
    pub n_e2: Vec<f64>,
}

impl NeutralityData {
    pub fn sample<F: VelocityField + ?Sized>(field: &F, grid: &ScanGrid, t: f64) -> Self {
        let mut n_e1 = Vec::with_capacity(grid.len());
        let mut n_e2 = Vec::with_capacity(grid.len());
        for j in 0..grid.y.count {
            for i in 0..grid.x.count {
                let p = grid.node(i, j);
                n_e1.push(neutrality(field, p, t, Family::E1).unwrap_or(f64::NAN));
                n_e2.push(neutrality(field, p, t, Family::E2).unwrap_or(f64::NAN));
            }
        }
        NeutralityData { grid: *grid, n_e1, n_e2 }
    }
}

/// Why a vertex failed the weak-minimizer test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MinimizerFailure {
    /// A point between the curve and its trench lies outside the convexity set.
    NotConvex,
    TrenchNotFound,
    /// The neutrality function could not be evaluated.
    Unevaluable,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MinimizerReport {
    pub pass: bool,
    pub failure_arclength: Option<f64>,
    pub failure_point: Option<Vec2>,
    pub failure: Option<MinimizerFailure>,
}

impl MinimizerReport {
    const PASS: MinimizerReport =
        MinimizerReport { pass: true, failure_arclength: None, failure_point: None, failure: None };
}

fn convex_at<F: VelocityField + ?Sized>(field: &F, p: Vec2, t: f64, family: Family, h: f64) -> Result<bool> {
    let eig = kinematics::strain_eigen_at(field, p, t)?;
    let across = match family {
        Family::E2 => eig.e1,
        _ => eig.e2,
    };
    Ok(neutrality_hessian(field, p, t, family, h)?.quadratic(across) > 0.0)
}

/// Walks downhill in `𝒩` along the normal from `x0` to the nearest trench and
/// checks convexity at every probe on the way, trench included.
fn vertex_check<F: VelocityField + ?Sized>(
    field: &F,
    t: f64,
    family: Family,
    x0: Vec2,
    normal: Vec2,
    opts: &ParabolicOptions,
) -> core::result::Result<(), MinimizerFailure> {
    let h = opts.probe_step;
    let g = |eps: f64| neutrality(field, x0 + normal * eps, t, family).map_err(|_| MinimizerFailure::Unevaluable);
    let convex = |eps: f64| match convex_at(field, x0 + normal * eps, t, family, h) {
        Ok(true) => Ok(()),
        Ok(false) | Err(Error::Degenerate { .. }) => Err(MinimizerFailure::NotConvex),
        Err(_) => Err(MinimizerFailure::Unevaluable),
    };
    let (g0, gp, gm) = (g(0.0)?, g(h)?, g(-h)?);
    convex(0.0)?;
    if gp >= g0 && gm >= g0 {
        return Ok(());
    }
    let sense = if gp < gm { 1.0 } else { -1.0 };
    let mut last = g0;
    let steps = math::ceil(opts.trench_radius / h) as usize;
    for k in 1..=steps {
        let eps = sense * h * k as f64;
        let v = g(eps)?;
        if v > last {
            return Ok(());
        }
        convex(eps)?;
        last = v;
    }
    Err(MinimizerFailure::TrenchNotFound)
}

/// Weak-minimizer test of a segment: at every vertex the nearest trench of
/// `𝒩` along the normal must be reachable through the convexity set
/// `⟨e_j, ∇²𝒩_{e_i} e_j⟩ > 0`, `j ≠ i`. Stops at the first failing vertex.
pub fn weak_minimizer_check<F: VelocityField + ?Sized>(
    polyline: &[Vec2],
    family: Family,
    field: &F,
    t: f64,
    opts: &ParabolicOptions,
) -> MinimizerReport {
    let Ok(tangents) = kinematics::polyline_tangents(polyline) else {
        return MinimizerReport {
            pass: false,
            failure_arclength: Some(0.0),
            failure_point: polyline.first().copied(),
            failure: Some(MinimizerFailure::Unevaluable),
        };
    };
    let mut s = 0.0;
    for (k, (&p, &tan)) in polyline.iter().zip(&tangents).enumerate() {
        if k > 0 {
            s += p.distance(polyline[k - 1]);
        }
        if let Err(why) = vertex_check(field, t, family, p, tan.perp(), opts) {
            return MinimizerReport {
                pass: false,
                failure_arclength: Some(s),
                failure_point: Some(p),
                failure: Some(why),
            };
        }
    }
    MinimizerReport::PASS
}

/// Drops the first and last vertices, which sit on singularities where the
/// eigenframe is undefined, before running [`weak_minimizer_check`].
pub fn check_segment<F: VelocityField + ?Sized>(
    segment: &HeteroclinicSegment,
    field: &F,
    t: f64,
    opts: &ParabolicOptions,
) -> MinimizerReport {
    let pts = &segment.polyline;
    let interior: Vec<Vec2> = pts
        .iter()
        .copied()
        .filter(|p| {
            p.distance(segment.from.position) >= opts.capture_radius
                && p.distance(segment.to.position) >= opts.capture_radius
        })
        .collect();
    if interior.len() < 2 {
        return MinimizerReport::PASS;
    }
    let mut r = weak_minimizer_check(&interior, segment.family, field, t, opts);
    if let Some(s) = r.failure_arclength.as_mut() {
        *s += pts[0].distance(interior[0]);
    }
    r
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ParabolicChain {
    pub segments: Vec<HeteroclinicSegment>,
    pub total_length: f64,
}

impl ParabolicChain {
    /// Concatenated polyline, each segment oriented to continue the previous one.
    pub fn polyline(&self) -> Vec<Vec2> {
        let mut out: Vec<Vec2> = Vec::new();
        for seg in &self.segments {
            let mut pts = seg.polyline.clone();
            if let Some(&end) = out.last() {
                let (a, b) = (pts[0], *pts.last().unwrap());
                if end.distance(b) < end.distance(a) {
                    pts.reverse();
                }
                out.extend(pts.into_iter().skip(1));
            } else {
                out = pts;
            }
        }
        out
    }
}

fn same_point(a: Vec2, b: Vec2) -> bool {
    a.distance(b) <= 1e-9 * (1.0 + a.norm().max(b.norm()))
}

/// Maximal paths through the connection graph whose families alternate,
/// each segment used at most once per path, longest first.
pub fn assemble_chains(segments: &[HeteroclinicSegment]) -> Vec<ParabolicChain> {
    let n = segments.len();
    let ends = |k: usize| (segments[k].from.position, segments[k].to.position);
    let other = |k: usize, at: Vec2| {
        let (a, b) = ends(k);
        if same_point(a, at) {
            Some(b)
        } else if same_point(b, at) {
            Some(a)
        } else {
            None
        }
    };
    // Segments that may follow segment `k` when leaving it through `at`.
    let next = |k: usize, at: Vec2, used: &[usize]| -> Vec<(usize, Vec2)> {
        (0..n)
            .filter(|&m| !used.contains(&m) && segments[m].family != segments[k].family)
            .filter_map(|m| other(m, at).map(|o| (m, o)))
            .collect()
    };
    let mut paths: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<(Vec<usize>, Vec2)> = Vec::new();
    for k in 0..n {
        let (a, b) = ends(k);
        for (start, end) in [(a, b), (b, a)] {
            // Only start where the path cannot be extended backwards.
            if !next(k, start, &[k]).is_empty() {
                continue;
            }
            stack.push((alloc::vec![k], end));
        }
    }
    while let Some((path, at)) = stack.pop() {
        let last = *path.last().unwrap();
        let ext = next(last, at, &path);
        if ext.is_empty() {
            paths.push(path);
            continue;
        }
        for (m, o) in ext {
            let mut p = path.clone();
            p.push(m);
            stack.push((p, o));
        }
    }
    // A path and its reverse describe the same chain.
    let mut seen: Vec<Vec<usize>> = Vec::new();
    let mut chains = Vec::new();
    for p in paths {
        let mut key = p.clone();
        let mut rev = p.clone();
        rev.reverse();
        if rev < key {
            key = rev;
        }
        if seen.contains(&key) {
            continue;
        }
        seen.push(key.clone());
        let segs: Vec<HeteroclinicSegment> = key.iter().map(|&k| segments[k].clone()).collect();
        let total_length = segs.iter().map(HeteroclinicSegment::length).sum();
        chains.push((key, ParabolicChain { segments: segs, total_length }));
    }
    chains.sort_by(|a, b| b.1.total_length.total_cmp(&a.1.total_length).then(a.0.cmp(&b.0)));
    chains.into_iter().map(|c| c.1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AnalyticFlow, GridAxis, PolynomialFlow, Rect};
    use core::f64::consts::PI;

    fn sing(x: f64, y: f64, kind: SingularityKind) -> Singularity {
        Singularity { position: Vec2::new(x, y), kind, delta: 0.0, time: 0.0 }
    }

    /// `u = 2x³/3 − x²/2 + y²/2`, `v = xy`: trisector at the origin, wedge at
    /// `(1, 0)`, joined by an `e1`-segment of the x-axis.
    fn straight_connection() -> crate::field::AnalyticField {
        // Coefficients of 1, x, y, x², xy, y², x³, x²y, xy², y³.
        let u = [0.0, 0.0, 0.0, -0.5, 0.0, 0.5, 2.0 / 3.0, 0.0, 0.0, 0.0];
        let v = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        AnalyticFlow::Polynomial(PolynomialFlow::new(u, v)).field().with_domain(Rect::new(-2.0, 2.0, -2.0, 2.0))
    }

    #[test]
    fn symmetric_normal_form_has_three_separatrices_per_family() {
        // S = [[x, −y], [−y, −x]] from u = (x² − y²)/2, v = −xy.
        let u = [0.0, 0.0, 0.0, 0.5, 0.0, -0.5, 0.0, 0.0, 0.0, 0.0];
        let v = [0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let f = AnalyticFlow::Polynomial(PolynomialFlow::new(u, v)).field();
        let s = f.strain(Vec2::new(0.3, 0.2), 0.0).unwrap();
        assert!((s.xx - 0.3).abs() < 1e-14 && (s.xy + 0.2).abs() < 1e-14 && (s.yy + 0.3).abs() < 1e-14);
        let tri = sing(0.0, 0.0, SingularityKind::Trisector);
        let seps = trisector_separatrices(&tri, &f, 0.0, 1e-3, 0.02).unwrap();
        assert_eq!(seps.len(), 6);
        for fam in [Family::E1, Family::E2] {
            let a: Vec<f64> = seps.iter().filter(|s| s.family == fam).map(|s| s.angle).collect();
            assert_eq!(a.len(), 3);
            for k in 0..3 {
                let gap = (a[(k + 1) % 3] - a[k]).rem_euclid(2.0 * PI);
                assert!((gap - 2.0 * PI / 3.0).abs() < 1e-9, "{a:?}");
            }
        }
        let e1: Vec<f64> = seps.iter().filter(|s| s.family == Family::E1).map(|s| s.angle).collect();
        for (got, want) in e1.iter().zip([PI / 3.0, PI, 5.0 * PI / 3.0]) {
            assert!((got - want).abs() < 1e-9);
        }
        for s in &seps {
            let d = tensorline::direction(&f, s.seed, 0.0, &spec_for(s.family)).unwrap();
            assert!(d.cross(s.direction).abs() < 1e-9);
        }
    }

    #[test]
    fn wedge_is_not_a_trisector() {
        let f = straight_connection();
        let w = sing(1.0, 0.0, SingularityKind::Wedge);
        assert_eq!(trisector_separatrices(&w, &f, 0.0, 1e-3, 0.02), Err(Error::NotTrisector));
    }

    #[test]
    fn straight_connection_is_found_along_the_axis() {
        let f = straight_connection();
        let a = GridAxis::new(-0.525, 0.05, 41).unwrap();
        let scan = singularity::find_singularities(&f, &ScanGrid::new(a, a), 0.0);
        assert_eq!(scan.singularities.len(), 2);
        let tri = *scan.of_kind(SingularityKind::Trisector).next().unwrap();
        let wedge = *scan.of_kind(SingularityKind::Wedge).next().unwrap();
        assert!(tri.position.norm() < 1e-8);
        assert!(wedge.position.distance(Vec2::new(1.0, 0.0)) < 1e-8);
        let opts = ParabolicOptions::new(0.01, 5.0, 0.05);
        let segs = find_connections(&scan.singularities, &f, 0.0, 1e-3, &opts);
        let axis: Vec<&HeteroclinicSegment> = segs.iter().filter(|s| s.family == Family::E1).collect();
        assert_eq!(axis.len(), 1);
        let seg = axis[0];
        assert_eq!(seg.to.position, wedge.position);
        assert!(seg.hit_distance < opts.capture_radius);
        assert!(seg.polyline.iter().all(|p| p.y.abs() < 1e-9));
        assert!((seg.length() - 1.0).abs() < 2.0 * opts.capture_radius);
    }

    #[test]
    fn leaving_the_domain_is_no_connection() {
        let f = straight_connection();
        let tri = sing(0.0, 0.0, SingularityKind::Trisector);
        let seps = trisector_separatrices(&tri, &f, 0.0, 1e-3, 0.02).unwrap();
        let backwards = seps.iter().find(|s| s.family == Family::E2 && s.direction.x < -0.9).unwrap();
        let opts = ParabolicOptions::new(0.01, 10.0, 0.05);
        assert_eq!(connect_to_wedge(&tri, backwards, &[tri], &f, 0.0, &opts), Err(Error::NoConnection));
    }

    #[test]
    fn constant_strain_fails_everywhere() {
        let f = AnalyticFlow::SteadySaddle { strength: 1.0 }.field();
        let line: Vec<Vec2> = (0..10).map(|k| Vec2::new(0.0, 0.1 * k as f64)).collect();
        let r = weak_minimizer_check(&line, Family::E1, &f, 0.0, &ParabolicOptions::new(0.01, 1.0, 0.05));
        assert!(!r.pass);
        assert_eq!(r.failure_arclength, Some(0.0));
        assert_eq!(r.failure, Some(MinimizerFailure::NotConvex));
    }

    #[test]
    fn quadratic_well_passes() {
        // S = diag(−2, y): 𝒩_{e1} = y², e1 along x.
        let u = [0.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let v = [0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0];
        let f = AnalyticFlow::Polynomial(PolynomialFlow::new(u, v)).field();
        let opts = ParabolicOptions::new(0.01, 1.0, 0.05);
        let on_axis: Vec<Vec2> = (0..20).map(|k| Vec2::new(-1.0 + 0.1 * k as f64, 0.0)).collect();
        assert!(weak_minimizer_check(&on_axis, Family::E1, &f, 0.0, &opts).pass);
        let shifted: Vec<Vec2> = on_axis.iter().map(|p| *p + Vec2::new(0.0, 0.3)).collect();
        assert!(weak_minimizer_check(&shifted, Family::E1, &f, 0.0, &opts).pass);
        let far: Vec<Vec2> = on_axis.iter().map(|p| *p + Vec2::new(0.0, 0.8)).collect();
        let r = weak_minimizer_check(&far, Family::E1, &f, 0.0, &opts);
        assert_eq!(r.failure, Some(MinimizerFailure::TrenchNotFound));
    }

    #[test]
    fn incompressible_neutralities_agree() {
        let f = AnalyticFlow::Cellular.field();
        let a = GridAxis::new(-1.0, 0.1, 21).unwrap();
        let data = NeutralityData::sample(&f, &ScanGrid::new(a, a), 0.0);
        for (x, y) in data.n_e1.iter().zip(&data.n_e2) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    fn seg(from: Vec2, to: Vec2, family: Family) -> HeteroclinicSegment {
        HeteroclinicSegment {
            from: Singularity { position: from, kind: SingularityKind::Trisector, delta: -1.0, time: 0.0 },
            to: Singularity { position: to, kind: SingularityKind::Wedge, delta: 1.0, time: 0.0 },
            family,
            polyline: alloc::vec![from, to],
            hit_distance: 0.0,
        }
    }

    #[test]
    fn chains_alternate() {
        let (t1, w, t2) = (Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0));
        let chains = assemble_chains(&[seg(t1, w, Family::E1), seg(t2, w, Family::E2)]);
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].segments.len(), 2);
        assert!((chains[0].total_length - 2.0).abs() < 1e-12);
        assert_eq!(chains[0].polyline(), alloc::vec![t1, w, t2]);
        let chains = assemble_chains(&[seg(t1, w, Family::E1), seg(t2, w, Family::E1)]);
        assert_eq!(chains.len(), 2);
        assert!(chains.iter().all(|c| c.segments.len() == 1));
        assert!(assemble_chains(&[]).is_empty());
    }
    #[test]
    fn perturbed_jet_chains_along_the_axis() {
        let f = AnalyticFlow::PerturbedJet { epsilon: 0.1 }.field().with_domain(Rect::new(-5.0, 5.0, -1.5, 1.5));
        let grid = ScanGrid::new(GridAxis::new(-4.9, 0.1, 99).unwrap(), GridAxis::new(-1.4, 0.1, 29).unwrap());
        let scan = singularity::find_singularities(&f, &grid, 0.0);
        assert_eq!(scan.singularities.len(), 4);
        let tri = *scan.of_kind(SingularityKind::Trisector).next().unwrap();
        let seps = trisector_separatrices(&tri, &f, 0.0, 1e-3, 0.04).unwrap();
        assert!(seps.iter().any(|s| s.direction.y.abs() < 1e-9));
        let opts = ParabolicOptions::new(0.02, 20.0, 0.1);
        let segs = find_connections(&scan.singularities, &f, 0.0, 1e-3, &opts);
        assert_eq!(segs.len(), 3);
        for s in &segs {
            assert!(s.polyline.iter().all(|p| p.y.abs() < 1e-12));
            assert!(check_segment(s, &f, 0.0, &opts).pass);
        }
        let chains = assemble_chains(&segs);
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].segments.len(), 3);
        let fams: Vec<Family> = chains[0].segments.iter().map(|s| s.family).collect();
        assert!(fams.windows(2).all(|w| w[0] != w[1]));
        assert!((chains[0].total_length - 3.0 * PI).abs() < 0.2);
    }
}
