//! Particle advection, Cauchy–Green tensors and the finite-time stretch and
//! shear measures used to check Eulerian predictions.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::geometry;
use crate::kinematics;
use crate::math::{self, Mat2, Sym2, Vec2};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AdvectOptions {
    /// RK4 step; `None` uses a two-hundredth of the interval.
    pub dt: Option<f64>,
    /// Also compute `∇F` from four auxiliary trajectories per point.
    pub gradient: bool,
    /// Auxiliary-grid half-spacing; `None` uses `10⁻⁴` of the domain extent.
    pub delta: Option<f64>,
}

impl AdvectOptions {
    pub const POSITIONS: AdvectOptions = AdvectOptions { dt: None, gradient: false, delta: None };
    pub const WITH_GRADIENT: AdvectOptions = AdvectOptions { dt: None, gradient: true, delta: None };

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }
}

impl Default for AdvectOptions {
    fn default() -> Self {
        AdvectOptions::POSITIONS
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FlowMapResult {
    pub positions: Vec<Vec2>,
    pub gradients: Option<Vec<Mat2>>,
    pub t0: f64,
    pub t1: f64,
}

/// Number of steps and signed step length covering `[t0, t1]`.
fn schedule(t0: f64, t1: f64, dt: Option<f64>) -> Result<(usize, f64)> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((0, 0.0));
    }
    let dt = dt.unwrap_or(span.abs() / 200.0);
    if !(dt > 0.0) || !span.is_finite() {
        return Err(Error::InvalidArgument("advection step must be positive"));
    }
    let n = math::ceil(span.abs() / dt).max(1.0) as usize;
    Ok((n, span / n as f64))
}

fn rk4_step<F: VelocityField + ?Sized>(field: &F, x: Vec2, t: f64, h: f64) -> Result<Vec2> {
    let at = |p: Vec2, s: f64| field.velocity(p, s).map_err(|_| Error::LeftDomain { point: p, time: s });
    let k1 = at(x, t)?;
    let k2 = at(x + k1 * (0.5 * h), t + 0.5 * h)?;
    let k3 = at(x + k2 * (0.5 * h), t + 0.5 * h)?;
    let k4 = at(x + k3 * h, t + h)?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Fixed-step RK4 trajectory of a single point.
pub fn advect_point<F: VelocityField + ?Sized>(field: &F, x0: Vec2, t0: f64, t1: f64, dt: Option<f64>) -> Result<Vec2> {
    let (n, h) = schedule(t0, t1, dt)?;
    let mut x = x0;
    for k in 0..n {
        x = rk4_step(field, x, t0 + h * k as f64, h)?;
    }
    Ok(x)
}

/// Advects `points` from `t0` to `t1`; with `opts.gradient`, also the flow-map
/// gradient by central differences over an auxiliary cross of half-width `δ`.
pub fn advect<F: VelocityField + ?Sized>(
    points: &[Vec2],
    field: &F,
    t0: f64,
    t1: f64,
    opts: &AdvectOptions,
) -> Result<FlowMapResult> {
    let positions = points.iter().map(|&p| advect_point(field, p, t0, t1, opts.dt)).collect::<Result<Vec<_>>>()?;
    let gradients = if opts.gradient {
        let delta = opts.delta.unwrap_or(1e-4 * field.domain().extent());
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument("auxiliary spacing must be positive"));
        }
        let grads =
            points.iter().map(|&p| flow_map_gradient(field, p, t0, t1, opts.dt, delta)).collect::<Result<Vec<_>>>()?;
        Some(grads)
    } else {
        None
    };
    Ok(FlowMapResult { positions, gradients, t0, t1 })
}

/// `∇F` at `x0` from four auxiliary trajectories at `x0 ± δ e_x`, `x0 ± δ e_y`.
pub fn flow_map_gradient<F: VelocityField + ?Sized>(
    field: &F,
    x0: Vec2,
    t0: f64,
    t1: f64,
    dt: Option<f64>,
    delta: f64,
) -> Result<Mat2> {
    let go = |d: Vec2| advect_point(field, x0 + d, t0, t1, dt);
    let (dx, dy) = (Vec2::new(delta, 0.0), Vec2::new(0.0, delta));
    let cx = (go(dx)? - go(-dx)?) / (2.0 * delta);
    let cy = (go(dy)? - go(-dy)?) / (2.0 * delta);
    Ok(Mat2::from_columns(cx, cy))
}

/// Right Cauchy–Green tensor `C = ∇Fᵀ ∇F`.
pub fn cauchy_green(gradient: Mat2) -> Result<Sym2> {
    let f2 = gradient.frobenius() * gradient.frobenius();
    if !gradient.is_finite() || !(gradient.det().abs() > 1e-14 * f2) {
        return Err(Error::SingularGradient);
    }
    let (a, b, c, d) = (gradient.a11, gradient.a12, gradient.a21, gradient.a22);
    Ok(Sym2::new(a * a + c * c, a * b + c * d, b * b + d * d))
}

/// Outcome of the short-time expansion check `C ≈ I + 2Sτ`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TaylorCheck {
    pub taus: Vec<f64>,
    /// `‖C_{t0}^{t0+τ} − I − 2S τ‖_F` for each `τ`.
    pub errors: Vec<f64>,
    /// Log–log slope of the error; `None` when every error vanishes.
    pub slope: Option<f64>,
}

impl TaylorCheck {
    pub fn is_exact(&self) -> bool {
        self.slope.is_none()
    }
}

/// Residuals below this are treated as exact; the auxiliary-grid gradient
/// carries roundoff of order `ε/δ ≈ 10⁻¹²`.
const EXACT_RESIDUAL: f64 = 1e-9;

pub fn taylor_order_check<F: VelocityField + ?Sized>(
    field: &F,
    x0: Vec2,
    t0: f64,
    taus: &[f64],
    opts: &AdvectOptions,
) -> Result<TaylorCheck> {
    if taus.len() < 2 || taus.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument("need at least two positive time spans"));
    }
    let s = field.strain(x0, t0)?;
    let delta = opts.delta.unwrap_or(1e-4 * field.domain().extent());
    let mut errors = Vec::with_capacity(taus.len());
    for &tau in taus {
        let dt = opts.dt.map(|d| d.min(tau / 200.0));
        let c = cauchy_green(flow_map_gradient(field, x0, t0, t0 + tau, dt, delta)?)?;
        errors.push((c - Sym2::IDENTITY - s * (2.0 * tau)).frobenius());
    }
    let slope = if errors.iter().all(|&e| e <= EXACT_RESIDUAL) {
        None
    } else {
        let lt: Vec<f64> = taus.iter().map(|&t| math::ln(t)).collect();
        let le: Vec<f64> = errors.iter().map(|&e| math::ln(e.max(f64::MIN_POSITIVE))).collect();
        Some(math::regression_slope(&lt, &le))
    };
    Ok(TaylorCheck { taus: taus.to_vec(), errors, slope })
}

/// Finite-time tangential stretch `q` and shear `p` along a curve.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FiniteTimeMeasures {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

/// `q = √(⟨x′, C x′⟩ / ⟨x′, x′⟩)` and
/// `p = ⟨x′, D x′⟩ / √(⟨x′, C x′⟩ ⟨x′, x′⟩)` with `D = (CR − RC)/2`.
pub fn stretch_and_shear(c: Sym2, tangent: Vec2) -> (f64, f64) {
    let r = Mat2::ROT90;
    let cm = c.to_mat();
    let d = (cm * r - r * cm) * 0.5;
    let tt = tangent.dot(tangent);
    let ctt = c.quadratic(tangent);
    let q = math::sqrt(ctt / tt);
    let p = tangent.dot(d * tangent) / math::sqrt(ctt * tt);
    (p, q)
}

pub fn finite_time_measures<F: VelocityField + ?Sized>(
    curve: &[Vec2],
    field: &F,
    t0: f64,
    t1: f64,
    opts: &AdvectOptions,
) -> Result<FiniteTimeMeasures> {
    let tangents = kinematics::polyline_tangents(curve)?;
    let delta = opts.delta.unwrap_or(1e-4 * field.domain().extent());
    let mut q = Vec::with_capacity(curve.len());
    let mut p = Vec::with_capacity(curve.len());
    for (&x, &tan) in curve.iter().zip(&tangents) {
        let c = cauchy_green(flow_map_gradient(field, x, t0, t1, opts.dt, delta)?)?;
        let (pv, qv) = stretch_and_shear(c, tan);
        q.push(qv);
        p.push(pv);
    }
    Ok(FiniteTimeMeasures { q, p })
}

/// Disk of material points, discretised by its boundary.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MaterialBlob {
    pub center: Vec2,
    pub radius: f64,
    pub polygon: Vec<Vec2>,
}

impl MaterialBlob {
    pub fn circle(center: Vec2, radius: f64, n_boundary_points: usize) -> Self {
        let polygon = (0..n_boundary_points)
            .map(|k| {
                let a = 2.0 * core::f64::consts::PI * k as f64 / n_boundary_points as f64;
                center + Vec2::from_angle(a) * radius
            })
            .collect();
        MaterialBlob { center, radius, polygon }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BlobMetrics {
    pub area_ratio: f64,
    pub perimeter_ratio: f64,
    /// Largest second-moment aspect ratio over the advection steps.
    pub max_aspect: f64,
}

/// Advects the blob boundary and tracks its shape: final area and perimeter
/// relative to the initial ones, and the largest aspect ratio seen.
pub fn blob_deformation_metric<F: VelocityField + ?Sized>(
    blob: &MaterialBlob,
    field: &F,
    t0: f64,
    t1: f64,
    dt: Option<f64>,
) -> Result<BlobMetrics> {
    if blob.polygon.len() < 3 {
        return Err(Error::InvalidArgument("blob needs at least three boundary points"));
    }
    let (n, h) = schedule(t0, t1, dt)?;
    let mut poly = blob.polygon.clone();
    let mut max_aspect = geometry::second_moment_aspect(&poly);
    for k in 0..n {
        let t = t0 + h * k as f64;
        for x in poly.iter_mut() {
            *x = rk4_step(field, *x, t, h)?;
        }
        max_aspect = max_aspect.max(geometry::second_moment_aspect(&poly));
    }
    Ok(BlobMetrics {
        area_ratio: geometry::area(&poly) / geometry::area(&blob.polygon),
        perimeter_ratio: geometry::perimeter(&poly) / geometry::perimeter(&blob.polygon),
        max_aspect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AnalyticFlow, Rect};
    use core::f64::consts::{E, FRAC_PI_2, FRAC_PI_4};

    fn saddle() -> crate::field::AnalyticField {
        AnalyticFlow::SteadySaddle { strength: 1.0 }.field()
    }

    fn rotation() -> crate::field::AnalyticField {
        AnalyticFlow::RigidRotation { rate: 1.0 }.field()
    }

    #[test]
    fn closed_form_trajectories() {
        let r = advect(&[Vec2::new(1.0, 1.0)], &saddle(), 0.0, 1.0, &AdvectOptions::WITH_GRADIENT).unwrap();
        assert!(r.positions[0].distance(Vec2::new(E, 1.0 / E)) < 1e-6);
        let g = r.gradients.unwrap()[0];
        assert!((g - Mat2::new(E, 0.0, 0.0, 1.0 / E)).frobenius() < 1e-4);
        let r = advect(&[Vec2::new(1.0, 0.0)], &rotation(), 0.0, FRAC_PI_2, &AdvectOptions::POSITIONS).unwrap();
        assert!(r.positions[0].distance(Vec2::new(0.0, 1.0)) < 1e-6);
    }

    #[test]
    fn leaving_the_domain() {
        let f = saddle().with_domain(Rect::new(-2.0, 2.0, -2.0, 2.0));
        let r = advect(&[Vec2::new(1.0, 1.0)], &f, 0.0, 2.0, &AdvectOptions::POSITIONS);
        let Err(Error::LeftDomain { time, .. }) = r else { panic!("{r:?}") };
        assert!(time > 0.6 && time < 0.75, "{time}");
    }

    #[test]
    fn cauchy_green_examples() {
        let c = cauchy_green(Mat2::new(E, 0.0, 0.0, 1.0 / E)).unwrap();
        assert!((c - Sym2::new(E * E, 0.0, 1.0 / (E * E))).frobenius() < 1e-12);
        let c = cauchy_green(Mat2::rotation(0.7)).unwrap();
        assert!((c - Sym2::IDENTITY).frobenius() < 1e-15);
        assert_eq!(cauchy_green(Mat2::new(1.0, 2.0, 2.0, 4.0)), Err(Error::SingularGradient));
        // v = (y, 0): F = [[1, t], [0, 1]].
        let t = 0.8;
        let f = AnalyticFlow::SimpleShear { rate: 1.0 }.field();
        let g =
            advect(&[Vec2::new(0.2, -0.1)], &f, 0.0, t, &AdvectOptions::WITH_GRADIENT).unwrap().gradients.unwrap()[0];
        let c = cauchy_green(g).unwrap();
        assert!((c - Sym2::new(1.0, t, 1.0 + t * t)).frobenius() < 1e-8);
    }

    #[test]
    fn taylor_slopes() {
        let taus = [0.1, 0.05, 0.025, 0.0125];
        let s = taylor_order_check(&saddle(), Vec2::new(0.3, -0.2), 0.0, &taus, &AdvectOptions::POSITIONS).unwrap();
        let slope = s.slope.unwrap();
        assert!((slope - 2.0).abs() < 0.1, "{slope}");
        let c = AnalyticFlow::Cellular.field();
        let s = taylor_order_check(&c, Vec2::new(FRAC_PI_4, FRAC_PI_4), 0.0, &taus, &AdvectOptions::POSITIONS).unwrap();
        let slope = s.slope.unwrap();
        assert!((slope - 2.0).abs() < 0.1, "{slope}");
        let r = taylor_order_check(&rotation(), Vec2::new(0.3, -0.2), 0.0, &taus, &AdvectOptions::POSITIONS).unwrap();
        assert!(r.is_exact(), "{r:?}");
    }

    #[test]
    fn finite_time_examples() {
        let axis: Vec<Vec2> = (0..5).map(|k| Vec2::new(0.2 * k as f64, 0.0)).collect();
        let m = finite_time_measures(&axis, &saddle(), 0.0, 1.0, &AdvectOptions::POSITIONS).unwrap();
        assert!(m.q.iter().all(|q| (q - E).abs() < 1e-6));
        assert!(m.p.iter().all(|p| p.abs() < 1e-9));
        let arc: Vec<Vec2> = (0..8).map(|k| Vec2::from_angle(0.3 * k as f64) * 0.7).collect();
        let m = finite_time_measures(&arc, &rotation(), 0.0, 1.3, &AdvectOptions::POSITIONS).unwrap();
        assert!(m.q.iter().all(|q| (q - 1.0).abs() < 1e-7));
        assert!(m.p.iter().all(|p| p.abs() < 1e-7));
    }

    #[test]
    fn blob_examples() {
        let blob = MaterialBlob::circle(Vec2::new(0.5, 0.2), 0.1, 200);
        let m = blob_deformation_metric(&blob, &rotation(), 0.0, 1.0, None).unwrap();
        assert!((m.area_ratio - 1.0).abs() < 1e-8 && (m.perimeter_ratio - 1.0).abs() < 1e-8);
        assert!((m.max_aspect - geometry::second_moment_aspect(&blob.polygon)).abs() < 1e-6);
        let m = blob_deformation_metric(&blob, &saddle(), 0.0, 1.0, None).unwrap();
        assert!((m.area_ratio - 1.0).abs() < 1e-8);
        assert!(m.perimeter_ratio > 1.5);
        assert!((m.max_aspect - E * E).abs() < 1e-3, "{}", m.max_aspect);
    }
    #[test]
    fn finite_time_measures_converge_to_rates() {
        let f = AnalyticFlow::Cellular.field();
        let curve: Vec<Vec2> = (0..6).map(|k| Vec2::new(0.3 + 0.1 * k as f64, 0.2 + 0.05 * k as f64)).collect();
        let tangents = kinematics::polyline_tangents(&curve).unwrap();
        let taus = [0.02, 0.01, 0.005, 0.0025];
        let (mut eq, mut ep) = (Vec::new(), Vec::new());
        for &tau in &taus {
            let m = finite_time_measures(&curve, &f, 0.0, tau, &AdvectOptions::POSITIONS).unwrap();
            let (mut wq, mut wp) = (0.0f64, 0.0f64);
            for (k, (&x, &tan)) in curve.iter().zip(&tangents).enumerate() {
                let s = f.strain(x, 0.0).unwrap();
                wq = wq.max(((m.q[k] - 1.0) / tau - kinematics::stretch_rate(tan, s).unwrap()).abs());
                wp = wp.max((m.p[k] / tau - kinematics::shear_rate(tan, s).unwrap()).abs());
            }
            eq.push(math::ln(wq));
            ep.push(math::ln(wp));
        }
        let lt: Vec<f64> = taus.iter().map(|&t| math::ln(t)).collect();
        assert!(math::regression_slope(&lt, &eq) >= 0.9);
        assert!(math::regression_slope(&lt, &ep) >= 0.9);
    }
}
