//! Trajectories of orientation-free direction fields: eigenvector lines and
//! the `χ_μ^±` fields.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScanGrid, VelocityField};
use crate::geometry;
use crate::kinematics::{self, StrainEigen};
use crate::math::{self, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Family {
    E1,
    E2,
    Chi,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::E1 => "e1",
            Family::E2 => "e2",
            Family::Chi => "chi",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum ChiSign {
    Plus,
    Minus,
}

impl ChiSign {
    pub fn value(self) -> f64 {
        match self {
            ChiSign::Plus => 1.0,
            ChiSign::Minus => -1.0,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            ChiSign::Plus => '+',
            ChiSign::Minus => '-',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DirectionSpec {
    pub family: Family,
    /// Only meaningful for [`Family::Chi`].
    pub mu: f64,
    pub sign: ChiSign,
}

impl DirectionSpec {
    pub const E1: DirectionSpec = DirectionSpec { family: Family::E1, mu: 0.0, sign: ChiSign::Plus };
    pub const E2: DirectionSpec = DirectionSpec { family: Family::E2, mu: 0.0, sign: ChiSign::Plus };

    pub fn chi(mu: f64, sign: ChiSign) -> Self {
        DirectionSpec { family: Family::Chi, mu, sign }
    }
}

/// `χ_μ^±` from an eigenframe; fails outside `s1 ≤ μ ≤ s2`.
pub fn chi_from_eigen(eig: &StrainEigen, mu: f64, sign: ChiSign, p: Vec2) -> Result<Vec2> {
    let gap = eig.s2 - eig.s1;
    if mu < eig.s1 || mu > eig.s2 {
        return Err(Error::OutsideUmu { point: p, mu });
    }
    let a = math::sqrt(((eig.s2 - mu) / gap).clamp(0.0, 1.0));
    let b = math::sqrt(((mu - eig.s1) / gap).clamp(0.0, 1.0));
    Ok(eig.e1 * a + eig.e2 * (sign.value() * b))
}

/// `χ_μ^± = √((s2 − μ)/(s2 − s1)) e1 ± √((μ − s1)/(s2 − s1)) e2`.
pub fn eval_chi<F: VelocityField + ?Sized>(field: &F, p: Vec2, t: f64, mu: f64, sign: ChiSign) -> Result<Vec2> {
    let eig = kinematics::strain_eigen_at(field, p, t)?;
    chi_from_eigen(&eig, mu, sign, p)
}

/// Unit direction of `spec` at `(p, t)`, with an arbitrary global sign.
pub fn direction<F: VelocityField + ?Sized>(field: &F, p: Vec2, t: f64, spec: &DirectionSpec) -> Result<Vec2> {
    let eig = kinematics::strain_eigen_at(field, p, t)?;
    match spec.family {
        Family::E1 => Ok(eig.e1),
        Family::E2 => Ok(eig.e2),
        Family::Chi => chi_from_eigen(&eig, spec.mu, spec.sign, p),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StopReason {
    /// Came within the standoff radius of a listed singularity, or hit a
    /// repeated-eigenvalue point.
    Singularity,
    Boundary,
    MaxLength,
    Closed,
    /// Raised by a caller predicate such as the monotonicity test of
    /// hyperbolic branches.
    Monotonicity,
    User,
    /// Left the region `s1 ≤ μ ≤ s2` where `χ_μ^±` exists.
    LeftUmu,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Singularity => "singularity",
            StopReason::Boundary => "boundary",
            StopReason::MaxLength => "max_length",
            StopReason::Closed => "closed",
            StopReason::Monotonicity => "monotonicity",
            StopReason::User => "user",
            StopReason::LeftUmu => "left_umu",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TensorlineTrajectory {
    pub points: Vec<Vec2>,
    pub arclengths: Vec<f64>,
    /// Oriented unit direction at each vertex.
    pub tangents: Vec<Vec2>,
    pub stop_reason: StopReason,
}

impl TensorlineTrajectory {
    pub fn length(&self) -> f64 {
        self.arclengths.last().copied().unwrap_or(0.0)
    }

    pub fn last(&self) -> Vec2 {
        *self.points.last().expect("trajectory has at least the seed")
    }

    /// Joins a backward and a forward trajectory from the same seed into a
    /// single polyline running from the backward end to the forward end.
    pub fn join(backward: &TensorlineTrajectory, forward: &TensorlineTrajectory) -> Vec<Vec2> {
        let mut pts: Vec<Vec2> = backward.points.iter().rev().copied().collect();
        pts.extend(forward.points.iter().skip(1).copied());
        pts
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TensorlineOptions {
    /// Arclength step `Δ`.
    pub step: f64,
    pub max_length: f64,
    /// Singularities to keep away from.
    pub singularities: Vec<Vec2>,
    pub singularity_radius: f64,
    /// Closure test; disabled when `None`.
    pub closure_radius: Option<f64>,
    pub closure_alignment: f64,
    pub closure_min_length: f64,
}

impl TensorlineOptions {
    /// Defaults tied to the step: standoff `2Δ`, closure radius `Δ` with
    /// alignment 0.9 after `10Δ` of arclength.
    pub fn with_step(step: f64, max_length: f64) -> Self {
        TensorlineOptions {
            step,
            max_length,
            singularities: Vec::new(),
            singularity_radius: 2.0 * step,
            closure_radius: Some(step),
            closure_alignment: 0.9,
            closure_min_length: 10.0 * step,
        }
    }

    pub fn singularities(mut self, s: Vec<Vec2>) -> Self {
        self.singularities = s;
        self
    }

    pub fn without_closure(mut self) -> Self {
        self.closure_radius = None;
        self
    }
}

/// Default step: a fifth of the finest lattice spacing.
pub fn default_step(grid: &ScanGrid) -> f64 {
    grid.min_step() / 5.0
}

fn stop_for(err: &Error) -> StopReason {
    match err {
        Error::OutsideUmu { .. } => StopReason::LeftUmu,
        Error::Degenerate { .. } => StopReason::Singularity,
        _ => StopReason::Boundary,
    }
}

fn oriented<F: VelocityField + ?Sized>(
    field: &F,
    p: Vec2,
    t: f64,
    spec: &DirectionSpec,
    reference: Vec2,
) -> Result<Vec2> {
    let d = direction(field, p, t, spec)?;
    Ok(if d.dot(reference) < 0.0 { -d } else { d })
}

/// Fixed-step RK4 integration of an orientation-free direction field.
///
/// The first stage is oriented against the previous step direction (the seed
/// direction initially) and the remaining stages against the first, so every
/// step makes a single sign decision.
pub fn integrate_tensorline<F: VelocityField + ?Sized>(
    field: &F,
    t: f64,
    seed: Vec2,
    seed_dir: Vec2,
    spec: &DirectionSpec,
    opts: &TensorlineOptions,
) -> Result<TensorlineTrajectory> {
    integrate_tensorline_with(field, t, seed, seed_dir, spec, opts, |_, _| None)
}

/// As [`integrate_tensorline`], with a predicate consulted for every
/// candidate step `(previous vertex, next vertex)`. Returning a reason stops
/// the integration without appending the candidate vertex.
pub fn integrate_tensorline_with<F, H>(
    field: &F,
    t: f64,
    seed: Vec2,
    seed_dir: Vec2,
    spec: &DirectionSpec,
    opts: &TensorlineOptions,
    mut hook: H,
) -> Result<TensorlineTrajectory>
where
    F: VelocityField + ?Sized,
    H: FnMut(Vec2, Vec2) -> Option<StopReason>,
{
    if !(opts.step > 0.0) {
        return Err(Error::InvalidArgument("tensorline step must be positive"));
    }
    let h = opts.step;
    let first = match oriented(field, seed, t, spec, seed_dir) {
        Ok(d) => d,
        Err(Error::OutsideUmu { point, mu }) => return Err(Error::OutsideUmu { point, mu }),
        Err(Error::OutOfDomain { point, time }) => return Err(Error::OutOfDomain { point, time }),
        Err(_) => return Err(Error::ImmediateDegeneracy { point: seed }),
    };
    let near_seed: Vec<bool> = opts.singularities.iter().map(|s| s.distance(seed) < opts.singularity_radius).collect();
    let mut points = alloc::vec![seed];
    let mut arclengths = alloc::vec![0.0];
    let mut tangents = alloc::vec![first];
    let seed_tangent = first;
    let mut prev_dir = seed_dir;
    let mut x = seed;
    let mut s = 0.0;
    let max_steps = math::ceil(opts.max_length / h) as usize + 1;
    let mut reason = StopReason::MaxLength;
    let mut k1 = first;
    for step in 0..max_steps {
        if step > 0 {
            k1 = match oriented(field, x, t, spec, prev_dir) {
                Ok(d) => d,
                Err(e) => {
                    reason = stop_for(&e);
                    break;
                }
            };
            *tangents.last_mut().unwrap() = k1;
        }
        let stages = (|| -> Result<Vec2> {
            let k2 = oriented(field, x + k1 * (0.5 * h), t, spec, k1)?;
            let k3 = oriented(field, x + k2 * (0.5 * h), t, spec, k1)?;
            let k4 = oriented(field, x + k3 * h, t, spec, k1)?;
            Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
        })();
        let next = match stages {
            Ok(n) => n,
            Err(e) => {
                reason = stop_for(&e);
                break;
            }
        };
        if let Some(r) = hook(x, next) {
            reason = r;
            break;
        }
        let ds = next.distance(x);
        let Some(dir) = (next - x).normalized() else {
            reason = StopReason::Singularity;
            break;
        };
        s += ds;
        points.push(next);
        arclengths.push(s);
        tangents.push(dir);
        let hit = opts
            .singularities
            .iter()
            .zip(&near_seed)
            .any(|(p, &skip)| !skip && p.distance(next) < opts.singularity_radius);
        if hit {
            reason = StopReason::Singularity;
            break;
        }
        if let Some(rc) = opts.closure_radius {
            if s > opts.closure_min_length
                && geometry::point_segment_distance(seed, x, next).0 <= rc
                && dir.dot(seed_tangent) > opts.closure_alignment
            {
                reason = StopReason::Closed;
                break;
            }
        }
        if s >= opts.max_length {
            reason = StopReason::MaxLength;
            break;
        }
        prev_dir = dir;
        x = next;
    }
    // The last vertex keeps the step direction unless the field can be evaluated there.
    if let (Some(&last), Some(&dir)) = (points.last(), tangents.last()) {
        if points.len() > 1 {
            if let Ok(d) = oriented(field, last, t, spec, dir) {
                *tangents.last_mut().unwrap() = d;
            }
        }
    }
    Ok(TensorlineTrajectory { points, arclengths, tangents, stop_reason: reason })
}

/// Pointwise deformation-rate residuals along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RateResiduals {
    /// `max |q̇ − μ|` (with `μ = 0` for eigenvector lines).
    pub max_stretch_deviation: f64,
    /// `max |ṗ|`.
    pub max_shear: f64,
    /// Same two measures with tangents taken from the polyline itself by
    /// central differences; includes the discretisation error of the curve.
    pub polyline_stretch_deviation: f64,
    pub polyline_shear: f64,
}

impl RateResiduals {
    /// The residual the family is meant to annihilate: `|q̇ − μ|` for `χ`
    /// lines, `|ṗ|` for eigenvector lines.
    pub fn primary(&self, spec: &DirectionSpec) -> f64 {
        match spec.family {
            Family::Chi => self.max_stretch_deviation,
            Family::E1 | Family::E2 => self.max_shear,
        }
    }
}

/// Evaluates the material stretching and shear rates along a trajectory,
/// using the trajectory tangent stored at each vertex.
pub fn verify_rates_along<F: VelocityField + ?Sized>(
    traj: &TensorlineTrajectory,
    field: &F,
    t: f64,
    spec: &DirectionSpec,
) -> Result<RateResiduals> {
    let mu = if spec.family == Family::Chi { spec.mu } else { 0.0 };
    let poly_tangents =
        if traj.points.len() >= 2 { kinematics::polyline_tangents(&traj.points)? } else { traj.tangents.clone() };
    let mut out = RateResiduals {
        max_stretch_deviation: 0.0,
        max_shear: 0.0,
        polyline_stretch_deviation: 0.0,
        polyline_shear: 0.0,
    };
    for ((&p, &d), &dp) in traj.points.iter().zip(&traj.tangents).zip(&poly_tangents) {
        let s = field.strain(p, t)?;
        let q = kinematics::stretch_rate(d, s)?;
        let sh = kinematics::shear_rate(d, s)?;
        let qp = kinematics::stretch_rate(dp, s)?;
        let shp = kinematics::shear_rate(dp, s)?;
        if spec.family == Family::Chi {
            out.max_stretch_deviation = out.max_stretch_deviation.max((q - mu).abs());
            out.polyline_stretch_deviation = out.polyline_stretch_deviation.max((qp - mu).abs());
        } else {
            let target = if spec.family == Family::E1 {
                kinematics::strain_eigen(s)?.s1
            } else {
                kinematics::strain_eigen(s)?.s2
            };
            out.max_stretch_deviation = out.max_stretch_deviation.max((q - target).abs());
            out.polyline_stretch_deviation = out.polyline_stretch_deviation.max((qp - target).abs());
        }
        out.max_shear = out.max_shear.max(sh.abs());
        out.polyline_shear = out.polyline_shear.max(shp.abs());
    }
    Ok(out)
}
