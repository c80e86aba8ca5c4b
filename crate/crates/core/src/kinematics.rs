//! Rate of strain, spin, oriented eigenframes, deformation rates and observer changes.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Rect, ScanGrid, VelocityField};
use crate::math::{self, Jacobian2, Mat2, Sym2, Vec2};
use crate::zeros;

/// Symmetric part of the velocity gradient.
pub type RateOfStrain = Sym2;

/// Antisymmetric part of the velocity gradient, stored as its `(1, 2)` entry.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SpinTensor {
    pub w12: f64,
}

impl SpinTensor {
    /// `ω = ∂v₂/∂x₁ − ∂v₁/∂x₂`, which equals `−2 w12`.
    pub fn vorticity(self) -> f64 {
        -2.0 * self.w12
    }

    pub fn to_mat(self) -> Mat2 {
        Mat2::new(0.0, self.w12, -self.w12, 0.0)
    }
}

/// Splits `J` into `S = (J + Jᵀ)/2` and `W = (J − Jᵀ)/2`.
pub fn strain_and_spin(j: Jacobian2) -> (RateOfStrain, SpinTensor) {
    (j.symmetric_part(), SpinTensor { w12: 0.5 * (j.a12 - j.a21) })
}

/// `ω = ∂v₂/∂x₁ − ∂v₁/∂x₂`.
pub fn vorticity(j: Jacobian2) -> f64 {
    j.a21 - j.a12
}

/// Ordered eigenvalues `s1 ≤ s2` with a right-handed unit eigenframe `e2 = R e1`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StrainEigen {
    pub s1: f64,
    pub s2: f64,
    pub e1: Vec2,
    pub e2: Vec2,
}

/// Relative tolerance under which `s2 − s1` counts as a repeated eigenvalue.
pub fn degeneracy_threshold(s1: f64, s2: f64) -> f64 {
    1e-10 * s1.abs().max(s2.abs()).max(1.0)
}

/// Eigenvalues of `S` without the eigenframe.
pub fn strain_eigenvalues(s: RateOfStrain) -> (f64, f64) {
    s.eigenvalues()
}

/// Closed-form eigen-decomposition of a symmetric 2×2 tensor.
///
/// The sign of `e1` is fixed so that its first component is positive, or its
/// second component when the first vanishes; `e2` is then `R e1`.
pub fn strain_eigen(s: RateOfStrain) -> Result<StrainEigen> {
    let (s1, s2) = s.eigenvalues();
    if !(s2 - s1 >= degeneracy_threshold(s1, s2)) {
        return Err(Error::Degenerate { point: None });
    }
    // Angle of the major axis.
    let theta = 0.5 * math::atan2(2.0 * s.xy, s.xx - s.yy);
    let mut e1 = Vec2::new(math::sin(theta), -math::cos(theta));
    if e1.x < -1e-14 || (e1.x.abs() <= 1e-14 && e1.y < 0.0) {
        e1 = -e1;
    }
    Ok(StrainEigen { s1, s2, e1, e2: e1.perp() })
}

/// Eigen-decomposition of the strain of `field` at `(p, t)`.
pub fn strain_eigen_at<F: VelocityField + ?Sized>(field: &F, p: Vec2, t: f64) -> Result<StrainEigen> {
    strain_eigen(field.strain(p, t)?).map_err(|_| Error::Degenerate { point: Some(p) })
}

/// Material stretching rate `⟨x′, S x′⟩ / |x′|²`.
pub fn stretch_rate(tangent: Vec2, s: RateOfStrain) -> Result<f64> {
    let n2 = tangent.norm_sq();
    if !(n2 > 0.0) {
        return Err(Error::ZeroTangent);
    }
    Ok(s.quadratic(tangent) / n2)
}

/// `SR − RS` for symmetric `S`; itself symmetric.
pub fn shear_operator(s: RateOfStrain) -> Sym2 {
    Sym2::new(2.0 * s.xy, s.yy - s.xx, -2.0 * s.xy)
}

/// Material shear rate `⟨x′, (SR − RS) x′⟩ / |x′|²`.
pub fn shear_rate(tangent: Vec2, s: RateOfStrain) -> Result<f64> {
    let n2 = tangent.norm_sq();
    if !(n2 > 0.0) {
        return Err(Error::ZeroTangent);
    }
    Ok(shear_operator(s).quadratic(tangent) / n2)
}

/// Unit tangents of a polyline by central differences (one-sided at the ends).
pub fn polyline_tangents(curve: &[Vec2]) -> Result<Vec<Vec2>> {
    let n = curve.len();
    if n < 2 {
        return Err(Error::InvalidArgument("curve needs at least two points"));
    }
    (0..n)
        .map(|i| {
            let d = curve[(i + 1).min(n - 1)] - curve[i.saturating_sub(1)];
            d.normalized().ok_or(Error::ZeroTangent)
        })
        .collect()
}

/// Arclength averages `(Q̇, Ṗ)` of the stretching and shear rates along a
/// polyline, by the trapezoidal rule.
///
/// A vertex at which `S` is degenerate while a neighbouring vertex is not is
/// reported as a hit on an isolated singularity. Curves lying entirely in an
/// isotropic region (for instance `S ≡ 0`) are accepted.
pub fn curve_average_rates<F: VelocityField + ?Sized>(curve: &[Vec2], field: &F, t: f64) -> Result<(f64, f64)> {
    let tangents = polyline_tangents(curve)?;
    let mut q = Vec::with_capacity(curve.len());
    let mut p = Vec::with_capacity(curve.len());
    let mut degenerate = Vec::with_capacity(curve.len());
    for (&x, &d) in curve.iter().zip(&tangents) {
        let s = field.strain(x, t)?;
        let (s1, s2) = s.eigenvalues();
        degenerate.push(s2 - s1 < degeneracy_threshold(s1, s2));
        q.push(stretch_rate(d, s)?);
        p.push(shear_rate(d, s)?);
    }
    for i in 0..curve.len() {
        if degenerate[i] {
            let prev = i > 0 && !degenerate[i - 1];
            let next = i + 1 < curve.len() && !degenerate[i + 1];
            if prev || next {
                return Err(Error::DegeneratePoint { point: curve[i] });
            }
        }
    }
    let mut length = 0.0;
    let mut qa = 0.0;
    let mut pa = 0.0;
    for i in 0..curve.len() - 1 {
        let ds = curve[i].distance(curve[i + 1]);
        length += ds;
        qa += 0.5 * (q[i] + q[i + 1]) * ds;
        pa += 0.5 * (p[i] + p[i + 1]) * ds;
    }
    if !(length > 0.0) {
        return Err(Error::InvalidArgument("curve has zero arclength"));
    }
    Ok((qa / length, pa / length))
}

/// Okubo–Weiss parameter `s2² − ω²`.
pub fn okubo_weiss(s: RateOfStrain, omega: f64) -> f64 {
    let (_, s2) = s.eigenvalues();
    s2 * s2 - omega * omega
}

/// Okubo–Weiss parameter of `field` at `(p, t)`.
pub fn okubo_weiss_at<F: VelocityField + ?Sized>(field: &F, p: Vec2, t: f64) -> Result<f64> {
    let j = field.gradient(p, t)?;
    Ok(okubo_weiss(j.symmetric_part(), vorticity(j)))
}

/// Observer change `x = Q(t) x̃ + b(t)` with `Q(t)` the rotation by `θ(t)`.
///
/// Angle and translation are quadratic in time, which is enough to exercise
/// both steady and accelerating frames.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FrameChange {
    /// `θ(t) = θ₀ + θ₁ t + θ₂ t²`.
    pub theta: [f64; 3],
    /// `b(t) = b₀ + b₁ t + b₂ t²`.
    pub b: [Vec2; 3],
}

impl FrameChange {
    pub const IDENTITY: FrameChange = FrameChange { theta: [0.0; 3], b: [Vec2::ZERO; 3] };

    /// Constant-velocity translation `b(t) = c t`.
    pub fn translation(c: Vec2) -> Self {
        FrameChange { theta: [0.0; 3], b: [Vec2::ZERO, c, Vec2::ZERO] }
    }

    /// Steady rotation `θ(t) = θ₀ + rate·t` about the origin.
    pub fn rotation(theta0: f64, rate: f64) -> Self {
        FrameChange { theta: [theta0, rate, 0.0], b: [Vec2::ZERO; 3] }
    }

    pub fn angle(&self, t: f64) -> f64 {
        self.theta[0] + t * (self.theta[1] + t * self.theta[2])
    }

    pub fn angle_rate(&self, t: f64) -> f64 {
        self.theta[1] + 2.0 * t * self.theta[2]
    }

    pub fn q(&self, t: f64) -> Mat2 {
        Mat2::rotation(self.angle(t))
    }

    /// `Q̇ = θ̇ R Q`.
    pub fn q_dot(&self, t: f64) -> Mat2 {
        Mat2::ROT90 * self.q(t) * self.angle_rate(t)
    }

    pub fn translation_at(&self, t: f64) -> Vec2 {
        self.b[0] + (self.b[1] + self.b[2] * t) * t
    }

    pub fn translation_rate(&self, t: f64) -> Vec2 {
        self.b[1] + self.b[2] * (2.0 * t)
    }

    /// `x = Q x̃ + b`.
    pub fn to_original(&self, x_new: Vec2, t: f64) -> Vec2 {
        self.q(t) * x_new + self.translation_at(t)
    }

    /// `x̃ = Qᵀ (x − b)`.
    pub fn to_new(&self, x: Vec2, t: f64) -> Vec2 {
        self.q(t).transpose() * (x - self.translation_at(t))
    }
}

/// A velocity field as seen by the observer described by a [`FrameChange`]:
/// `ṽ(x̃, t) = Qᵀ [v(Q x̃ + b, t) − Q̇ x̃ − ḃ]`.
#[derive(Clone, Debug)]
pub struct FramedField<F> {
    pub inner: F,
    pub frame: FrameChange,
}

impl<F: VelocityField> FramedField<F> {
    pub fn new(inner: F, frame: FrameChange) -> Self {
        FramedField { inner, frame }
    }
}

/// Re-expresses `field` in the frame `frame`.
pub fn transform_velocity<F: VelocityField>(field: F, frame: FrameChange) -> FramedField<F> {
    FramedField::new(field, frame)
}

impl<F: VelocityField> VelocityField for FramedField<F> {
    fn velocity(&self, p: Vec2, t: f64) -> Result<Vec2> {
        let q = self.frame.q(t);
        let x = q * p + self.frame.translation_at(t);
        let v = self.inner.velocity(x, t)?;
        Ok(q.transpose() * (v - self.frame.q_dot(t) * p - self.frame.translation_rate(t)))
    }

    /// `∇ṽ = Qᵀ ∇v Q − Qᵀ Q̇ = Qᵀ ∇v Q − θ̇ R`.
    fn gradient(&self, p: Vec2, t: f64) -> Result<Jacobian2> {
        let q = self.frame.q(t);
        let x = q * p + self.frame.translation_at(t);
        let j = self.inner.gradient(x, t)?;
        Ok(q.transpose() * j * q - Mat2::ROT90 * self.frame.angle_rate(t))
    }

    /// Bounding box of the pulled-back domain at `t = 0`.
    fn domain(&self) -> Rect {
        let d = self.inner.domain();
        if !d.is_bounded() {
            return Rect::UNBOUNDED;
        }
        let corners = [
            Vec2::new(d.x_min, d.y_min),
            Vec2::new(d.x_max, d.y_min),
            Vec2::new(d.x_min, d.y_max),
            Vec2::new(d.x_max, d.y_max),
        ];
        Rect::bounding(corners.iter().map(|&c| self.frame.to_new(c, 0.0)))
    }
}

/// Linear type of a stagnation point, from the eigenvalues of `∇v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum StagnationKind {
    Saddle,
    Center,
    Focus,
    Node,
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StagnationPoint {
    pub position: Vec2,
    pub kind: StagnationKind,
}

fn classify_stagnation(j: Mat2) -> StagnationKind {
    let tr = j.trace();
    let det = j.det();
    let scale = j.frobenius() * j.frobenius();
    let tiny = 1e-10 * scale.max(f64::MIN_POSITIVE);
    if det < -tiny {
        StagnationKind::Saddle
    } else if det.abs() <= tiny {
        StagnationKind::Degenerate
    } else if tr * tr < 4.0 * det {
        if tr.abs() <= 1e-8 * j.frobenius() {
            StagnationKind::Center
        } else {
            StagnationKind::Focus
        }
    } else {
        StagnationKind::Node
    }
}

/// Zeros of the velocity on the scan lattice, refined by Newton's method and
/// typed by the eigenvalues of `∇v`.
pub fn find_stagnation_points<F: VelocityField + ?Sized>(field: &F, grid: &ScanGrid, t: f64) -> Vec<StagnationPoint> {
    let scan = zeros::find_zeros(grid, |p| field.velocity(p, t), |p| field.gradient(p, t));
    let mut out: Vec<StagnationPoint> = scan
        .transverse
        .into_iter()
        .map(|(position, j)| StagnationPoint { position, kind: classify_stagnation(j) })
        .collect();
    out.extend(
        scan.non_transverse.into_iter().map(|position| StagnationPoint { position, kind: StagnationKind::Degenerate }),
    );
    out
}
