//! Closed `χ_μ^±` orbits around wedge pairs: Poincaré sections, return maps
//! and μ-families of limit cycles.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScanGrid, VelocityField};
use crate::geometry;
use crate::kinematics;
use crate::math::{self, Vec2};
use crate::singularity::{Singularity, WedgePair};
use crate::tensorline::{self, ChiSign, DirectionSpec, StopReason, TensorlineOptions};

/// Straight transverse segment `base + σ·direction`, `|σ| ≤ half_length`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PoincareSection {
    pub base: Vec2,
    pub direction: Vec2,
    pub half_length: f64,
    /// Section coordinates `σ` of the seeds, increasing.
    pub samples: Vec<f64>,
}

impl PoincareSection {
    /// Section with `n_samples` equally spaced seeds over `[−half_length, half_length]`.
    pub fn new(base: Vec2, direction: Vec2, half_length: f64, n_samples: usize) -> Result<Self> {
        let direction = direction.normalized().ok_or(Error::ZeroTangent)?;
        if !(half_length > 0.0) || n_samples < 2 {
            return Err(Error::InvalidArgument("section needs positive length and two samples"));
        }
        let samples =
            (0..n_samples).map(|k| -half_length + 2.0 * half_length * k as f64 / (n_samples - 1) as f64).collect();
        Ok(PoincareSection { base, direction, half_length, samples })
    }

    #[inline]
    pub fn point(&self, sigma: f64) -> Vec2 {
        self.base + self.direction * sigma
    }

    /// Seed direction: the section normal `−R·direction`, i.e. the wedge axis.
    #[inline]
    pub fn normal(&self) -> Vec2 {
        -self.direction.perp()
    }

    pub fn coordinate(&self, p: Vec2) -> f64 {
        (p - self.base).dot(self.direction)
    }
}

/// Section through the midpoint of a wedge pair, normal to the wedge axis.
///
/// Fails when any listed singularity lies within `standoff` of the section.
pub fn build_section(
    pair: &WedgePair,
    half_length: f64,
    n_samples: usize,
    singularities: &[Singularity],
    standoff: f64,
) -> Result<PoincareSection> {
    let axis = pair.axis();
    let section = PoincareSection::new(pair.midpoint, axis.perp(), half_length, n_samples)?;
    let (a, b) = (section.point(-half_length), section.point(half_length));
    for s in singularities {
        if geometry::point_segment_distance(s.position, a, b).0 < standoff {
            return Err(Error::SectionBlocked { blocker: s.position });
        }
    }
    Ok(section)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EllipticOptions {
    /// Tensorline step `Δ`.
    pub step: f64,
    /// Arclength cap for a single return.
    pub max_length: f64,
    pub singularities: Vec<Vec2>,
    pub singularity_radius: f64,
    /// Bisection tolerance on the section coordinate.
    pub root_tolerance: f64,
    /// Minimum `|dD/dσ|` for a zero of the displacement to count as isolated.
    pub isolation_slope: f64,
    /// Minimum number of enclosed singularities.
    pub min_enclosed: usize,
}

impl EllipticOptions {
    /// Standoff `2Δ`, root tolerance `10⁻³Δ`, slope threshold `10⁻³`, and at
    /// least two enclosed singularities.
    pub fn new(step: f64, max_length: f64, singularities: Vec<Vec2>) -> Self {
        EllipticOptions {
            step,
            max_length,
            singularities,
            singularity_radius: 2.0 * step,
            root_tolerance: 1e-3 * step,
            isolation_slope: 1e-3,
            min_enclosed: 2,
        }
    }

    fn tensorline(&self) -> TensorlineOptions {
        let mut o = TensorlineOptions::with_step(self.step, self.max_length).without_closure();
        o.singularities = self.singularities.clone();
        o.singularity_radius = self.singularity_radius;
        o
    }
}

/// One return to the section: signed displacement and the orbit up to the crossing.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionReturn {
    pub displacement: f64,
    pub orbit: Vec<Vec2>,
}

/// Integrates `χ_μ^±` from the section point `σ` along the section normal up to
/// the first crossing of the section line in the same direction on the same
/// side of the base.
pub fn section_return<F: VelocityField + ?Sized>(
    section: &PoincareSection,
    sigma: f64,
    mu: f64,
    sign: ChiSign,
    field: &F,
    t: f64,
    opts: &EllipticOptions,
) -> Result<SectionReturn> {
    let seed = section.point(sigma);
    let n = section.normal();
    let base = section.base;
    let side = if sigma >= 0.0 { 1.0 } else { -1.0 };
    let min_length = 10.0 * opts.step;
    let mut travelled = 0.0;
    let mut hit: Option<Vec2> = None;
    let spec = DirectionSpec::chi(mu, sign);
    let traj = tensorline::integrate_tensorline_with(field, t, seed, n, &spec, &opts.tensorline(), |prev, next| {
        travelled += prev.distance(next);
        let (dp, dn) = ((prev - base).dot(n), (next - base).dot(n));
        if travelled > min_length && dp < 0.0 && dn >= 0.0 {
            let c = prev + (next - prev) * (dp / (dp - dn));
            if section.coordinate(c) * side > 0.0 {
                hit = Some(c);
                return Some(StopReason::User);
            }
        }
        None
    })?;
    match (traj.stop_reason, hit) {
        (StopReason::User, Some(c)) => {
            let mut orbit = traj.points;
            orbit.push(c);
            Ok(SectionReturn { displacement: section.coordinate(c) - sigma, orbit })
        }
        _ => Err(Error::NoReturn),
    }
}

/// Signed displacement along the section between a seed and its first return.
pub fn return_displacement<F: VelocityField + ?Sized>(
    section: &PoincareSection,
    sigma: f64,
    mu: f64,
    sign: ChiSign,
    field: &F,
    t: f64,
    opts: &EllipticOptions,
) -> Result<f64> {
    section_return(section, sigma, mu, sign, field, t, opts).map(|r| r.displacement)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EllipticOecs {
    pub mu: f64,
    pub sign: ChiSign,
    /// Closed polyline; the closing edge back to the first vertex is implicit.
    pub cycle: Vec<Vec2>,
    pub enclosed_singularities: Vec<Vec2>,
    /// `dD/dσ` of the return displacement at the cycle.
    pub return_slope: f64,
    /// Section coordinate of the cycle.
    pub section_offset: f64,
    pub area: f64,
}

/// Outcome of a limit-cycle search at fixed `μ` and sign.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum CycleSearch {
    Cycles(Vec<EllipticOecs>),
    /// The return map is flat along the section: closed orbits form a
    /// continuum rather than isolated limit cycles.
    DegenerateContinuum {
        mu: f64,
        sign: ChiSign,
        from: f64,
        to: f64,
    },
}

impl CycleSearch {
    pub fn cycles(&self) -> &[EllipticOecs] {
        match self {
            CycleSearch::Cycles(c) => c,
            CycleSearch::DegenerateContinuum { .. } => &[],
        }
    }

    pub fn is_continuum(&self) -> bool {
        matches!(self, CycleSearch::DegenerateContinuum { .. })
    }
}

/// Zeros of the return displacement along the section, located by sign-change
/// bracketing and bisection.
pub fn find_limit_cycles<F: VelocityField + ?Sized>(
    section: &PoincareSection,
    mu: f64,
    sign: ChiSign,
    field: &F,
    t: f64,
    opts: &EllipticOptions,
) -> CycleSearch {
    let d: Vec<Option<f64>> = section
        .samples
        .iter()
        .map(|&s| if s == 0.0 { None } else { return_displacement(section, s, mu, sign, field, t, opts).ok() })
        .collect();
    let samples = &section.samples;
    let adjacent = |k: usize| -> Option<(f64, f64, f64, f64)> {
        let (a, b) = (samples[k], samples[k + 1]);
        if a * b <= 0.0 {
            return None;
        }
        Some((a, b, d[k]?, d[k + 1]?))
    };
    let pairs: Vec<(f64, f64, f64, f64)> = (0..samples.len() - 1).filter_map(adjacent).collect();
    if pairs.len() >= 2 && pairs.iter().all(|&(a, b, da, db)| ((db - da) / (b - a)).abs() < opts.isolation_slope) {
        let lo = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = pairs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        return CycleSearch::DegenerateContinuum { mu, sign, from: lo, to: hi };
    }
    let mut cycles = Vec::new();
    for &(a, b, da, db) in &pairs {
        if da * db > 0.0 || (da == 0.0 && db == 0.0) {
            continue;
        }
        let slope = (db - da) / (b - a);
        if slope.abs() <= opts.isolation_slope {
            continue;
        }
        if let Some(c) = refine_cycle(section, (a, da), (b, db), mu, sign, field, t, opts, slope) {
            cycles.push(c);
        }
    }
    CycleSearch::Cycles(cycles)
}

#[allow(clippy::too_many_arguments)]
fn refine_cycle<F: VelocityField + ?Sized>(
    section: &PoincareSection,
    lo: (f64, f64),
    hi: (f64, f64),
    mu: f64,
    sign: ChiSign,
    field: &F,
    t: f64,
    opts: &EllipticOptions,
    slope: f64,
) -> Option<EllipticOecs> {
    let (mut a, mut da) = lo;
    let (mut b, _) = hi;
    while (b - a).abs() > opts.root_tolerance {
        let m = 0.5 * (a + b);
        let dm = return_displacement(section, m, mu, sign, field, t, opts).ok()?;
        if dm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if (dm > 0.0) == (da > 0.0) {
            a = m;
            da = dm;
        } else {
            b = m;
        }
    }
    let root = 0.5 * (a + b);
    let ret = section_return(section, root, mu, sign, field, t, opts).ok()?;
    // A jump in the return map also changes sign; a true zero has a small residual.
    if ret.displacement.abs() > 1e-2 * opts.step {
        return None;
    }
    let mut cycle = ret.orbit;
    cycle.pop();
    if cycle.len() > 1 && cycle.last().unwrap().distance(cycle[0]) < 0.5 * opts.step {
        cycle.pop();
    }
    let enclosed: Vec<Vec2> =
        opts.singularities.iter().copied().filter(|&s| geometry::point_in_polygon(s, &cycle)).collect();
    if enclosed.len() < opts.min_enclosed {
        return None;
    }
    let area = geometry::area(&cycle);
    Some(EllipticOecs {
        mu,
        sign,
        cycle,
        enclosed_singularities: enclosed,
        return_slope: slope,
        section_offset: root,
        area,
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EllipticFamily {
    pub section: PoincareSection,
    /// Ordered by `μ`, then sign, then area.
    pub cycles: Vec<EllipticOecs>,
    /// Index of the outermost cycle, the Eulerian vortex boundary.
    pub boundary: Option<usize>,
    /// `(μ, sign)` combinations whose return map was flat.
    pub continua: Vec<(f64, ChiSign)>,
}

impl EllipticFamily {
    pub fn boundary_cycle(&self) -> Option<&EllipticOecs> {
        self.boundary.map(|i| &self.cycles[i])
    }
}

/// Symmetric grid of `n` values in `[−0.2 s̄, 0.2 s̄]`, where `s̄` is the median
/// of `|s2|` over the lattice.
pub fn default_mu_grid<F: VelocityField + ?Sized>(field: &F, grid: &ScanGrid, t: f64, n: usize) -> Vec<f64> {
    let mut vals: Vec<f64> = Vec::with_capacity(grid.len());
    for j in 0..grid.y.count {
        for i in 0..grid.x.count {
            if let Ok(s) = field.strain(grid.node(i, j), t) {
                vals.push(kinematics::strain_eigenvalues(s).1.abs());
            }
        }
    }
    if vals.is_empty() || n == 0 {
        return Vec::new();
    }
    vals.sort_by(f64::total_cmp);
    let median = vals[vals.len() / 2];
    mu_grid(0.2 * median, n)
}

/// `n` equally spaced values in `[−range, range]`; a single value is `0`.
pub fn mu_grid(range: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![0.0],
        _ => (0..n).map(|k| -range + 2.0 * range * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Merges cycles with equal `μ` and sign lying within `tol` of each other.
pub fn dedup_cycles(mut cycles: Vec<EllipticOecs>, tol: f64) -> Vec<EllipticOecs> {
    let mut out: Vec<EllipticOecs> = Vec::new();
    cycles.sort_by(|a, b| a.mu.total_cmp(&b.mu).then(a.sign.cmp(&b.sign)).then(a.area.total_cmp(&b.area)));
    for c in cycles {
        let dup = out.iter().any(|o| o.mu == c.mu && o.sign == c.sign && geometry::hausdorff(&o.cycle, &c.cycle) < tol);
        if !dup {
            out.push(c);
        }
    }
    out
}

/// Assembles a family from per-`(μ, sign)` searches: merges duplicates, checks
/// that same-sign cycles never cross, and marks the largest as the boundary.
pub fn assemble_family(section: PoincareSection, searches: Vec<CycleSearch>, step: f64) -> Result<EllipticFamily> {
    let mut continua = Vec::new();
    let mut all = Vec::new();
    for s in searches {
        match s {
            CycleSearch::Cycles(c) => all.extend(c),
            CycleSearch::DegenerateContinuum { mu, sign, .. } => continua.push((mu, sign)),
        }
    }
    let cycles = dedup_cycles(all, 10.0 * step);
    for i in 0..cycles.len() {
        for j in i + 1..cycles.len() {
            let (a, b) = (&cycles[i], &cycles[j]);
            if a.sign == b.sign && a.mu != b.mu && geometry::polygon_crossings(&a.cycle, &b.cycle) > 0 {
                return Err(Error::IntersectionAnomaly { mu_a: a.mu, mu_b: b.mu });
            }
        }
    }
    let boundary = (0..cycles.len()).max_by(|&a, &b| cycles[a].area.total_cmp(&cycles[b].area));
    Ok(EllipticFamily { section, cycles, boundary, continua })
}

/// Runs [`find_limit_cycles`] over `mu_values` for both signs and assembles the family.
pub fn sweep_mu<F: VelocityField + ?Sized>(
    section: &PoincareSection,
    mu_values: &[f64],
    field: &F,
    t: f64,
    opts: &EllipticOptions,
) -> Result<EllipticFamily> {
    let mut searches = Vec::new();
    for &mu in mu_values {
        for sign in [ChiSign::Plus, ChiSign::Minus] {
            searches.push(find_limit_cycles(section, mu, sign, field, t, opts));
        }
    }
    assemble_family(section.clone(), searches, opts.step)
}

/// `o = χ × ∂χ/∂μ = ±1 / (2√((μ − s1)(s2 − μ)))`.
///
/// Its sign is fixed over `U_μ`, so trajectories of `χ_μ^±` turn monotonically
/// with `μ` and closed orbits at different `μ` cannot cross.
pub fn rotated_field_witness<F: VelocityField + ?Sized>(
    field: &F,
    p: Vec2,
    t: f64,
    mu: f64,
    sign: ChiSign,
) -> Result<f64> {
    let eig = kinematics::strain_eigen_at(field, p, t)?;
    if mu < eig.s1 || mu > eig.s2 {
        return Err(Error::OutsideUmu { point: p, mu });
    }
    let prod = (mu - eig.s1) * (eig.s2 - mu);
    if !(prod > 0.0) {
        return Err(Error::Degenerate { point: Some(p) });
    }
    Ok(sign.value() / (2.0 * math::sqrt(prod)))
}

/// Central-difference estimate of `χ × ∂χ/∂μ` with step `delta`.
pub fn rotated_field_witness_fd<F: VelocityField + ?Sized>(
    field: &F,
    p: Vec2,
    t: f64,
    mu: f64,
    sign: ChiSign,
    delta: f64,
) -> Result<f64> {
    let eig = kinematics::strain_eigen_at(field, p, t)?;
    let c = tensorline::chi_from_eigen(&eig, mu, sign, p)?;
    let cp = tensorline::chi_from_eigen(&eig, mu + delta, sign, p)?;
    let cm = tensorline::chi_from_eigen(&eig, mu - delta, sign, p)?;
    Ok(c.cross((cp - cm) / (2.0 * delta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AnalyticFlow, GridAxis, VortexProfile};
    use crate::math::Sym2;
    use crate::singularity::{self, SingularityKind};

    fn wedge(x: f64, y: f64) -> Singularity {
        Singularity { position: Vec2::new(x, y), kind: SingularityKind::Wedge, delta: 1.0, time: 0.0 }
    }

    #[test]
    fn section_geometry() {
        let pairs = singularity::pair_wedges(&[wedge(0.0, 0.0), wedge(2.0, 0.0)], 5.0);
        let sec = build_section(&pairs[0], 0.5, 11, &[], 0.02).unwrap();
        assert_eq!(sec.base, Vec2::new(1.0, 0.0));
        assert_eq!(sec.direction, Vec2::new(0.0, 1.0));
        let blocker =
            Singularity { position: Vec2::new(1.0, 0.1), kind: SingularityKind::Trisector, delta: -1.0, time: 0.0 };
        assert_eq!(
            build_section(&pairs[0], 0.5, 11, &[blocker], 0.02),
            Err(Error::SectionBlocked { blocker: Vec2::new(1.0, 0.1) })
        );
    }

    #[test]
    fn witness_values() {
        let f = AnalyticFlow::SteadySaddle { strength: 1.0 }.field();
        let p = Vec2::new(0.3, 0.2);
        assert!((rotated_field_witness(&f, p, 0.0, 0.0, ChiSign::Plus).unwrap() - 0.5).abs() < 1e-15);
        assert!((rotated_field_witness(&f, p, 0.0, 0.0, ChiSign::Minus).unwrap() + 0.5).abs() < 1e-15);
        let fd = rotated_field_witness_fd(&f, p, 0.0, 0.3, ChiSign::Plus, 1e-5).unwrap();
        let exact = rotated_field_witness(&f, p, 0.0, 0.3, ChiSign::Plus).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-4);
        assert!(matches!(rotated_field_witness(&f, p, 0.0, 1.0, ChiSign::Plus), Err(Error::Degenerate { .. })));
    }

    fn vortex_section() -> PoincareSection {
        PoincareSection::new(Vec2::ZERO, Vec2::new(1.0, 0.0), 1.5, 16).unwrap()
    }

    #[test]
    fn axisymmetric_vortex_return_map_vanishes() {
        let f = AnalyticFlow::AxisymmetricVortex(VortexProfile::Power { amplitude: 1.0, exponent: 2.0 }).field();
        let opts = EllipticOptions::new(0.01, 20.0, Vec::new());
        let sec = vortex_section();
        for &r0 in &[0.5, 1.0, 1.4] {
            let d = return_displacement(&sec, r0, 0.0, ChiSign::Minus, &f, 0.0, &opts).unwrap();
            assert!(d.abs() < 1e-4, "{r0}: {d}");
        }
        assert!(find_limit_cycles(&sec, 0.0, ChiSign::Minus, &f, 0.0, &opts).is_continuum());
    }

    #[test]
    fn saddle_never_returns() {
        let f = AnalyticFlow::SteadySaddle { strength: 1.0 }
            .field()
            .with_domain(crate::field::Rect::new(-3.0, 3.0, -3.0, 3.0));
        let opts = EllipticOptions::new(0.02, 20.0, Vec::new());
        let sec = vortex_section();
        for mu in [-0.5, 0.0, 0.5] {
            for sign in [ChiSign::Plus, ChiSign::Minus] {
                assert_eq!(return_displacement(&sec, 0.7, mu, sign, &f, 0.0, &opts), Err(Error::NoReturn));
            }
        }
    }

    #[test]
    fn seed_outside_umu() {
        let f = AnalyticFlow::SteadySaddle { strength: 1.0 }.field();
        let opts = EllipticOptions::new(0.02, 20.0, Vec::new());
        let r = return_displacement(&vortex_section(), 0.7, 2.0, ChiSign::Plus, &f, 0.0, &opts);
        assert!(matches!(r, Err(Error::OutsideUmu { .. })));
    }

    fn perturbed() -> crate::field::AnalyticField {
        AnalyticFlow::PerturbedVortex { swirl: 1.0, radial: 0.02, strain: 0.01 }.field()
    }

    #[test]
    fn perturbed_vortex_has_isolated_cycle_matching_dense_scan() {
        let f = perturbed();
        let grid = {
            let a = GridAxis::new(-2.0, 0.05, 81).unwrap();
            ScanGrid::new(a, a)
        };
        let scan = singularity::find_singularities(&f, &grid, 0.0);
        let pairs = singularity::pair_wedges(&scan.singularities, 1.0);
        assert_eq!(pairs.len(), 1);
        let step = 0.01;
        let sec = build_section(&pairs[0], 1.5, 31, &scan.singularities, 2.0 * step).unwrap();
        let opts = EllipticOptions::new(step, 20.0, scan.positions());
        let found = find_limit_cycles(&sec, 0.0, ChiSign::Plus, &f, 0.0, &opts);
        let cycles = found.cycles();
        assert!(!cycles.is_empty());
        // Dense oracle: 200 seeds on the positive half of the section.
        let mut prev: Option<(f64, f64)> = None;
        let mut zeros = Vec::new();
        for k in 1..=200 {
            let s = 1.5 * k as f64 / 200.0;
            if let Ok(d) = return_displacement(&sec, s, 0.0, ChiSign::Plus, &f, 0.0, &opts) {
                if let Some((ps, pd)) = prev {
                    if pd * d < 0.0 {
                        zeros.push(ps + (s - ps) * pd / (pd - d));
                    }
                }
                prev = Some((s, d));
            } else {
                prev = None;
            }
        }
        assert_eq!(zeros.len(), 1);
        let positive: Vec<&EllipticOecs> = cycles.iter().filter(|c| c.section_offset > 0.0).collect();
        assert_eq!(positive.len(), 1);
        assert!((positive[0].section_offset - zeros[0]).abs() < 0.01);
        assert!(positive[0].return_slope.abs() > 1e-3);
        assert!(positive[0].enclosed_singularities.len() >= 2);
        let spec = DirectionSpec::chi(0.0, ChiSign::Plus);
        for &p in &positive[0].cycle {
            let d = tensorline::direction(&f, p, 0.0, &spec).unwrap();
            let q = kinematics::stretch_rate(d, f.strain(p, 0.0).unwrap()).unwrap();
            assert!(q.abs() < 1e-9);
        }
    }

    #[test]
    fn unperturbed_radial_flow_is_a_continuum() {
        let f = AnalyticFlow::PerturbedVortex { swirl: 1.0, radial: 0.0, strain: 0.01 }.field();
        let grid = {
            let a = GridAxis::new(-2.0, 0.05, 81).unwrap();
            ScanGrid::new(a, a)
        };
        let scan = singularity::find_singularities(&f, &grid, 0.0);
        let pairs = singularity::pair_wedges(&scan.singularities, 1.0);
        assert_eq!(pairs.len(), 1);
        let sec = build_section(&pairs[0], 1.5, 16, &scan.singularities, 0.02).unwrap();
        let opts = EllipticOptions::new(0.01, 20.0, scan.positions());
        let found = find_limit_cycles(&sec, 0.0, ChiSign::Plus, &f, 0.0, &opts);
        assert!(found.is_continuum(), "{found:?}");
    }

    #[test]
    fn mu_grid_is_symmetric() {
        let g = mu_grid(0.2, 21);
        assert_eq!(g.len(), 21);
        assert_eq!(g[10], 0.0);
        assert_eq!(g[0], -0.2);
        let _ = Sym2::ZERO;
    }
}
