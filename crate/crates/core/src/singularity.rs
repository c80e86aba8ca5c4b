//! Repeated-eigenvalue points of the rate-of-strain tensor.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScanGrid, VelocityField};
use crate::math::{self, Mat2, Vec2, PI, TAU};
use crate::zeros;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SingularityKind {
    /// Index +1/2.
    Wedge,
    /// Index −1/2.
    Trisector,
    Unclassified,
}

impl SingularityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SingularityKind::Wedge => "wedge",
            SingularityKind::Trisector => "trisector",
            SingularityKind::Unclassified => "unclassified",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Singularity {
    pub position: Vec2,
    pub kind: SingularityKind,
    /// `det ∂(α, β)/∂(x, y)` with `α = (s11 − s22)/2`, `β = s12`.
    pub delta: f64,
    pub time: f64,
}

/// Result of a lattice scan: classified transverse zeros plus the locations
/// where the zero set is not transverse (e.g. whole curves of repeated
/// eigenvalues).
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SingularityScan {
    pub singularities: Vec<Singularity>,
    pub non_transverse: Vec<Vec2>,
}

impl SingularityScan {
    pub fn positions(&self) -> Vec<Vec2> {
        self.singularities.iter().map(|s| s.position).collect()
    }

    pub fn of_kind(&self, kind: SingularityKind) -> impl Iterator<Item = &Singularity> + '_ {
        self.singularities.iter().filter(move |s| s.kind == kind)
    }
}

/// `(α, β) = ((s11 − s22)/2, s12)`; both vanish exactly at singularities.
pub fn alpha_beta<F: VelocityField + ?Sized>(field: &F, p: Vec2, t: f64) -> Result<Vec2> {
    let s = field.strain(p, t)?;
    Ok(Vec2::new(0.5 * (s.xx - s.yy), s.xy))
}

/// Central-difference Jacobian of `(α, β)`.
pub fn alpha_beta_jacobian<F: VelocityField + ?Sized>(field: &F, p: Vec2, t: f64, h: f64) -> Result<Mat2> {
    let dx = Vec2::new(h, 0.0);
    let dy = Vec2::new(0.0, h);
    let cx = (alpha_beta(field, p + dx, t)? - alpha_beta(field, p - dx, t)?) / (2.0 * h);
    let cy = (alpha_beta(field, p + dy, t)? - alpha_beta(field, p - dy, t)?) / (2.0 * h);
    Ok(Mat2::from_columns(cx, cy))
}

fn kind_from_delta(delta: f64, j: Mat2) -> SingularityKind {
    let f2 = j.frobenius() * j.frobenius();
    if !(delta.abs() > 1e-8 * f2) {
        SingularityKind::Unclassified
    } else if delta > 0.0 {
        SingularityKind::Wedge
    } else {
        SingularityKind::Trisector
    }
}

/// Difference step used for Jacobians of `(α, β)` on a lattice of spacing `h`.
fn fd_step(h: f64) -> f64 {
    1e-2 * h
}

/// Locates common transverse zeros of `s11 − s22` and `s12` on the lattice and
/// classifies each one.
pub fn find_singularities<F: VelocityField + ?Sized>(field: &F, grid: &ScanGrid, t: f64) -> SingularityScan {
    let h = fd_step(grid.min_step());
    let scan = zeros::find_zeros(grid, |p| alpha_beta(field, p, t), |p| alpha_beta_jacobian(field, p, t, h));
    let singularities = scan
        .transverse
        .into_iter()
        .map(|(position, j)| {
            let delta = j.det();
            Singularity { position, kind: kind_from_delta(delta, j), delta, time: t }
        })
        .collect();
    SingularityScan { singularities, non_transverse: scan.non_transverse }
}

/// Wedge/trisector type from the sign of `det ∂(α, β)/∂(x, y)`, computed with
/// central differences of step `h`.
pub fn classify_singularity<F: VelocityField + ?Sized>(
    field: &F,
    t: f64,
    position: Vec2,
    h: f64,
) -> Result<(SingularityKind, f64)> {
    let j = alpha_beta_jacobian(field, position, t, h)?;
    let delta = j.det();
    Ok((kind_from_delta(delta, j), delta))
}

/// Tensor index around the circle of `radius` centred on `position`: half the
/// winding number of `(α, β)`.
///
/// The circle is sampled at 64 points, doubled up to 1024 until consecutive
/// angles differ by less than π/2.
pub fn eigenvector_index<F: VelocityField + ?Sized>(field: &F, t: f64, position: Vec2, radius: f64) -> Result<f64> {
    let mut n = 64;
    while n <= 1024 {
        let mut angles = Vec::with_capacity(n);
        for k in 0..n {
            let p = position + Vec2::from_angle(TAU * k as f64 / n as f64) * radius;
            let ab = alpha_beta(field, p, t)?;
            if ab.norm_sq() == 0.0 {
                return Err(Error::AmbiguousWinding);
            }
            angles.push(ab.angle());
        }
        let mut total = 0.0;
        let mut ok = true;
        for k in 0..n {
            let mut d = angles[(k + 1) % n] - angles[k];
            if d > PI {
                d -= TAU;
            } else if d < -PI {
                d += TAU;
            }
            if d.abs() > 0.5 * PI {
                ok = false;
                break;
            }
            total += d;
        }
        if ok {
            return Ok(0.5 * math::round(total / TAU));
        }
        n *= 2;
    }
    Err(Error::AmbiguousWinding)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct WedgePair {
    pub a: Singularity,
    pub b: Singularity,
    pub midpoint: Vec2,
    pub separation: f64,
}

impl WedgePair {
    /// Unit vector from `a` to `b`.
    pub fn axis(&self) -> Vec2 {
        (self.b.position - self.a.position).normalized().unwrap_or(Vec2::new(1.0, 0.0))
    }
}

/// Default isolation factor: no other singularity within this multiple of the
/// separation around the midpoint.
pub const ISOLATION_FACTOR: f64 = 1.5;

/// Mutually nearest wedges no farther apart than `max_separation`, with no
/// other singularity within `1.5 × separation` of their midpoint.
pub fn pair_wedges(singularities: &[Singularity], max_separation: f64) -> Vec<WedgePair> {
    pair_wedges_with(singularities, max_separation, ISOLATION_FACTOR)
}

pub fn pair_wedges_with(singularities: &[Singularity], max_separation: f64, isolation: f64) -> Vec<WedgePair> {
    let wedges: Vec<usize> =
        (0..singularities.len()).filter(|&i| singularities[i].kind == SingularityKind::Wedge).collect();
    let nearest = |i: usize| -> Option<usize> {
        let p = singularities[i].position;
        wedges.iter().copied().filter(|&j| j != i).min_by(|&a, &b| {
            let da = p.distance(singularities[a].position);
            let db = p.distance(singularities[b].position);
            da.total_cmp(&db).then(a.cmp(&b))
        })
    };
    let mut pairs = Vec::new();
    for &i in &wedges {
        let Some(j) = nearest(i) else { continue };
        if j < i || nearest(j) != Some(i) {
            continue;
        }
        let (a, b) = (singularities[i], singularities[j]);
        let separation = a.position.distance(b.position);
        if !(separation <= max_separation) {
            continue;
        }
        let midpoint = (a.position + b.position) * 0.5;
        let blocked = singularities
            .iter()
            .enumerate()
            .any(|(k, s)| k != i && k != j && s.position.distance(midpoint) < isolation * separation);
        if !blocked {
            pairs.push(WedgePair { a, b, midpoint, separation });
        }
    }
    pairs
}
