//! Velocity sources: gridded data and closed-form test flows.

use alloc::boxed::Box;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{self, Jacobian2, Mat2, Sym2, Vec2};

/// Uniform coordinate axis `start + i * step`, `i = 0..count`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GridAxis {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !start.is_finite() {
            return Err(Error::InvalidGrid("axis step must be positive and finite"));
        }
        if count < 2 {
            return Err(Error::InvalidGrid("axis needs at least two nodes"));
        }
        Ok(GridAxis { start, step, count })
    }

    /// Axis spanning `[lo, hi]` with roughly the requested spacing.
    pub fn spanning(lo: f64, hi: f64, approx_step: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidGrid("empty axis range"));
        }
        let cells = math::round((hi - lo) / approx_step).max(1.0) as usize;
        GridAxis::new(lo, (hi - lo) / cells as f64, cells + 1)
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    #[inline]
    pub fn end(&self) -> f64 {
        self.coord(self.count - 1)
    }

    /// Cell index and fractional offset of `x`, or `None` outside `[start, end]`.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let u = (x - self.start) / self.step;
        let last = (self.count - 1) as f64;
        let slack = 1e-9;
        if !(u >= -slack && u <= last + slack) {
            return None;
        }
        let u = u.clamp(0.0, last);
        let i = (math::floor(u) as usize).min(self.count - 2);
        Some((i, u - i as f64))
    }
}

/// Axis-aligned rectangle; infinite bounds describe an unbounded domain.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub const UNBOUNDED: Rect =
        Rect { x_min: f64::NEG_INFINITY, x_max: f64::INFINITY, y_min: f64::NEG_INFINITY, y_max: f64::INFINITY };

    pub const fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Rect { x_min, x_max, y_min, y_max }
    }

    #[inline]
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn is_bounded(&self) -> bool {
        self.x_min.is_finite() && self.x_max.is_finite() && self.y_min.is_finite() && self.y_max.is_finite()
    }

    /// Largest side length, or 1 for unbounded domains.
    pub fn extent(&self) -> f64 {
        if self.is_bounded() {
            (self.x_max - self.x_min).max(self.y_max - self.y_min)
        } else {
            1.0
        }
    }

    pub fn shrink(&self, margin: f64) -> Rect {
        Rect::new(self.x_min + margin, self.x_max - margin, self.y_min + margin, self.y_max - margin)
    }

    /// Bounding box of the given points.
    pub fn bounding(points: impl IntoIterator<Item = Vec2>) -> Rect {
        let mut r = Rect::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            r.x_min = r.x_min.min(p.x);
            r.x_max = r.x_max.max(p.x);
            r.y_min = r.y_min.min(p.y);
            r.y_max = r.y_max.max(p.y);
        }
        r
    }
}

/// Rectangular lattice on which fields are scanned for singularities and extrema.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ScanGrid {
    pub x: GridAxis,
    pub y: GridAxis,
}

impl ScanGrid {
    pub fn new(x: GridAxis, y: GridAxis) -> Self {
        ScanGrid { x, y }
    }

    pub fn covering(rect: Rect, approx_step: f64) -> Result<Self> {
        Ok(ScanGrid {
            x: GridAxis::spanning(rect.x_min, rect.x_max, approx_step)?,
            y: GridAxis::spanning(rect.y_min, rect.y_max, approx_step)?,
        })
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.x.coord(i), self.y.coord(j))
    }

    pub fn min_step(&self) -> f64 {
        self.x.step.min(self.y.step)
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.x.start, self.x.end(), self.y.start, self.y.end())
    }

    pub fn len(&self) -> usize {
        self.x.count * self.y.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.x.count * j
    }
}

/// A planar, possibly time-dependent velocity field with gradient access.
///
/// Implementations are immutable after construction, so every method may be
/// called concurrently.
pub trait VelocityField: Send + Sync {
    fn velocity(&self, p: Vec2, t: f64) -> Result<Vec2>;

    fn gradient(&self, p: Vec2, t: f64) -> Result<Jacobian2>;

    /// Spatial domain of definition.
    fn domain(&self) -> Rect;

    /// Lattice of points where gradients are available, for gridded data.
    fn native_grid(&self) -> Option<ScanGrid> {
        None
    }

    fn strain(&self, p: Vec2, t: f64) -> Result<Sym2> {
        Ok(self.gradient(p, t)?.symmetric_part())
    }
}

impl<F: VelocityField + ?Sized> VelocityField for &F {
    fn velocity(&self, p: Vec2, t: f64) -> Result<Vec2> {
        (**self).velocity(p, t)
    }
    fn gradient(&self, p: Vec2, t: f64) -> Result<Jacobian2> {
        (**self).gradient(p, t)
    }
    fn domain(&self) -> Rect {
        (**self).domain()
    }
    fn native_grid(&self) -> Option<ScanGrid> {
        (**self).native_grid()
    }
    fn strain(&self, p: Vec2, t: f64) -> Result<Sym2> {
        (**self).strain(p, t)
    }
}

impl<F: VelocityField + ?Sized> VelocityField for Box<F> {
    fn velocity(&self, p: Vec2, t: f64) -> Result<Vec2> {
        (**self).velocity(p, t)
    }
    fn gradient(&self, p: Vec2, t: f64) -> Result<Jacobian2> {
        (**self).gradient(p, t)
    }
    fn domain(&self) -> Rect {
        (**self).domain()
    }
    fn native_grid(&self) -> Option<ScanGrid> {
        (**self).native_grid()
    }
    fn strain(&self, p: Vec2, t: f64) -> Result<Sym2> {
        (**self).strain(p, t)
    }
}

/// Velocity samples on a uniform space-time lattice.
///
/// Sampling is bilinear in space and linear in time. A single time slice is
/// treated as a steady field. Gradients are central differences of the
/// interpolant with a stencil of one grid step, so they are only available
/// one step inside the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct GriddedField {
    x: GridAxis,
    y: GridAxis,
    t0: f64,
    dt: f64,
    nt: usize,
    /// x fastest, then y, then t.
    samples: Vec<Vec2>,
}

impl GriddedField {
    pub fn new(x: GridAxis, y: GridAxis, t0: f64, dt: f64, nt: usize, samples: Vec<Vec2>) -> Result<Self> {
        if nt == 0 {
            return Err(Error::InvalidGrid("time axis needs at least one slice"));
        }
        if nt > 1 && !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidGrid("time step must be positive"));
        }
        if samples.len() != x.count * y.count * nt {
            return Err(Error::InvalidGrid("sample count does not match nx*ny*nt"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite velocity sample"));
        }
        Ok(GriddedField { x, y, t0, dt, nt, samples })
    }

    /// Samples `field` on the given lattice.
    pub fn sample<F: VelocityField + ?Sized>(
        field: &F,
        x: GridAxis,
        y: GridAxis,
        t0: f64,
        dt: f64,
        nt: usize,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(x.count * y.count * nt);
        for k in 0..nt {
            let t = t0 + dt * k as f64;
            for j in 0..y.count {
                for i in 0..x.count {
                    samples.push(field.velocity(Vec2::new(x.coord(i), y.coord(j)), t)?);
                }
            }
        }
        GriddedField::new(x, y, t0, dt, nt, samples)
    }

    pub fn x_axis(&self) -> GridAxis {
        self.x
    }

    pub fn y_axis(&self) -> GridAxis {
        self.y
    }

    /// `(t0, dt, nt)`.
    pub fn time_axis(&self) -> (f64, f64, usize) {
        (self.t0, self.dt, self.nt)
    }

    pub fn samples(&self) -> &[Vec2] {
        &self.samples
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec2 {
        self.samples[i + self.x.count * (j + self.y.count * k)]
    }

    fn slab(&self, i: usize, fx: f64, j: usize, fy: f64, k: usize) -> Vec2 {
        let v00 = self.node(i, j, k);
        let v10 = self.node(i + 1, j, k);
        let v01 = self.node(i, j + 1, k);
        let v11 = self.node(i + 1, j + 1, k);
        v00 * ((1.0 - fx) * (1.0 - fy)) + v10 * (fx * (1.0 - fy)) + v01 * ((1.0 - fx) * fy) + v11 * (fx * fy)
    }

    fn locate_time(&self, t: f64) -> Option<(usize, f64)> {
        if self.nt == 1 {
            return Some((0, 0.0));
        }
        let axis = GridAxis { start: self.t0, step: self.dt, count: self.nt };
        axis.locate(t)
    }
}

impl VelocityField for GriddedField {
    fn velocity(&self, p: Vec2, t: f64) -> Result<Vec2> {
        let out = || Error::OutOfDomain { point: p, time: t };
        let (i, fx) = self.x.locate(p.x).ok_or_else(out)?;
        let (j, fy) = self.y.locate(p.y).ok_or_else(out)?;
        let (k, ft) = self.locate_time(t).ok_or_else(out)?;
        let a = self.slab(i, fx, j, fy, k);
        if ft == 0.0 {
            return Ok(a);
        }
        let b = self.slab(i, fx, j, fy, k + 1);
        Ok(a * (1.0 - ft) + b * ft)
    }

    fn gradient(&self, p: Vec2, t: f64) -> Result<Jacobian2> {
        let hx = self.x.step;
        let hy = self.y.step;
        let dx = Vec2::new(hx, 0.0);
        let dy = Vec2::new(0.0, hy);
        let ddx = (self.velocity(p + dx, t)? - self.velocity(p - dx, t)?) / (2.0 * hx);
        let ddy = (self.velocity(p + dy, t)? - self.velocity(p - dy, t)?) / (2.0 * hy);
        Ok(Mat2::from_columns(ddx, ddy))
    }

    fn domain(&self) -> Rect {
        Rect::new(self.x.start, self.x.end(), self.y.start, self.y.end())
    }

    fn native_grid(&self) -> Option<ScanGrid> {
        if self.x.count < 3 || self.y.count < 3 {
            return None;
        }
        let x = GridAxis { start: self.x.coord(1), step: self.x.step, count: self.x.count - 2 };
        let y = GridAxis { start: self.y.coord(1), step: self.y.step, count: self.y.count - 2 };
        if x.count < 2 || y.count < 2 {
            return None;
        }
        Some(ScanGrid { x, y })
    }
}

/// Azimuthal velocity profile `v_θ(r)` of an axisymmetric vortex.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum VortexProfile {
    /// `v_θ = amplitude · r^exponent`; exponent 1 is rigid rotation.
    Power { amplitude: f64, exponent: f64 },
    /// `v_θ = strength · (1 − e^{−r²}) / r`.
    LambOseen { strength: f64 },
}

impl VortexProfile {
    /// Returns `(g, g'(r)/r)` for the angular velocity `g = v_θ / r`.
    fn angular(&self, r2: f64) -> Option<(f64, f64)> {
        match *self {
            VortexProfile::Power { amplitude, exponent } => {
                if r2 == 0.0 {
                    if exponent == 1.0 {
                        return Some((amplitude, 0.0));
                    }
                    if exponent > 1.0 {
                        return Some((0.0, 0.0));
                    }
                    return None;
                }
                let r = math::sqrt(r2);
                let g = amplitude * math::powf(r, exponent - 1.0);
                let gpr = amplitude * (exponent - 1.0) * math::powf(r, exponent - 3.0);
                Some((g, gpr))
            }
            VortexProfile::LambOseen { strength } => Some(lamb_oseen_angular(strength, r2)),
        }
    }
}

fn lamb_oseen_angular(strength: f64, r2: f64) -> (f64, f64) {
    if r2 < 1e-2 {
        // Series of (1 - e^{-u})/u and 2(u e^{-u} + e^{-u} - 1)/u² about u = 0.
        let u = r2;
        let g = 1.0 - u / 2.0 + u * u / 6.0 - u * u * u / 24.0 + u * u * u * u / 120.0;
        let h = -1.0 + 2.0 * u / 3.0 - u * u / 4.0 + u * u * u / 15.0 - u * u * u * u / 72.0;
        return (strength * g, strength * h);
    }
    let em1 = math::expm1(-r2);
    let g = -em1 / r2;
    let h = 2.0 * (r2 * math::exp(-r2) + em1) / (r2 * r2);
    (strength * g, strength * h)
}

/// Cubic polynomial velocity field; coefficients multiply
/// `[1, x, y, x², xy, y², x³, x²y, xy², y³]`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PolynomialFlow {
    pub u: [f64; 10],
    pub v: [f64; 10],
}

impl PolynomialFlow {
    pub fn new(u: [f64; 10], v: [f64; 10]) -> Self {
        PolynomialFlow { u, v }
    }

    /// Quadratic velocity whose rate of strain is `s0 + x·sx + y·sy`.
    ///
    /// Linear strain fields always satisfy the planar compatibility condition,
    /// so such a velocity exists for any choice of the three tensors.
    pub fn from_linear_strain(s0: Sym2, sx: Sym2, sy: Sym2) -> Self {
        let (a0, a1, a2) = (s0.xx, sx.xx, sy.xx);
        let (b0, b1, b2) = (s0.yy, sx.yy, sy.yy);
        let (c0, c1, c2) = (s0.xy, sx.xy, sy.xy);
        let mut u = [0.0; 10];
        let mut v = [0.0; 10];
        u[1] = a0;
        u[3] = a1 / 2.0;
        u[4] = a2;
        u[5] = (2.0 * c2 - b1) / 2.0;
        v[1] = 2.0 * c0;
        v[2] = b0;
        v[3] = (2.0 * c1 - a2) / 2.0;
        v[4] = b1;
        v[5] = b2 / 2.0;
        PolynomialFlow { u, v }
    }

    fn eval(c: &[f64; 10], p: Vec2) -> (f64, f64, f64) {
        let (x, y) = (p.x, p.y);
        let val = c[0]
            + c[1] * x
            + c[2] * y
            + c[3] * x * x
            + c[4] * x * y
            + c[5] * y * y
            + c[6] * x * x * x
            + c[7] * x * x * y
            + c[8] * x * y * y
            + c[9] * y * y * y;
        let dx = c[1] + 2.0 * c[3] * x + c[4] * y + 3.0 * c[6] * x * x + 2.0 * c[7] * x * y + c[8] * y * y;
        let dy = c[2] + c[4] * x + 2.0 * c[5] * y + c[7] * x * x + 2.0 * c[8] * x * y + 3.0 * c[9] * y * y;
        (val, dx, dy)
    }
}

/// One weighted, shifted member of a [`AnalyticFlow::Composite`].
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FlowTerm {
    pub scale: f64,
    pub offset: Vec2,
    pub flow: AnalyticFlow,
}

/// Closed-form test flows with exact gradients.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum AnalyticFlow {
    /// `v = k (x, −y)`.
    SteadySaddle {
        strength: f64,
    },
    /// `v = ω (−y, x)`.
    RigidRotation {
        rate: f64,
    },
    /// `v = (γ y, 0)`.
    SimpleShear {
        rate: f64,
    },
    AxisymmetricVortex(VortexProfile),
    /// `u = sin x cos y`, `v = −cos x sin y`.
    Cellular,
    /// `u = sech²(y)(1 + ε sin x)`, `v = 0`.
    PerturbedJet {
        epsilon: f64,
    },
    /// Lamb–Oseen swirl with a weak radial component and a uniform strain:
    /// `v = swirl·g(r)(−y, x) + radial·(e^{−r²} − ½)(x, y) + strain·(x, −y)`.
    ///
    /// The radial part makes circles carry a nonzero, radius-dependent
    /// tangential stretching rate, which turns the continuum of closed
    /// zero-stretch orbits of the pure swirl into an isolated, nested family.
    PerturbedVortex {
        swirl: f64,
        radial: f64,
        strain: f64,
    },
    /// Copy of `flow` carried along at constant velocity: `v(x, t) = c + v₀(x − c t, t)`.
    Translating {
        velocity: Vec2,
        flow: Box<AnalyticFlow>,
    },
    Polynomial(PolynomialFlow),
    /// `v(x, t) = Σ scale · v_k(x − offset, t)`.
    Composite(Vec<FlowTerm>),
}

impl AnalyticFlow {
    /// Looks a flow up by name. Missing parameters take their defaults.
    ///
    /// | name | parameters (defaults) |
    /// |---|---|
    /// | `steady_saddle` | strength (1) |
    /// | `rigid_rotation` | rate (1) |
    /// | `simple_shear` | rate (1) |
    /// | `axisymmetric_vortex` | amplitude (1), exponent (1) |
    /// | `lamb_oseen` | strength (1) |
    /// | `cellular` | none |
    /// | `perturbed_jet` | ε (0) |
    /// | `perturbed_vortex` | swirl (1), radial (0.02), strain (0.01) |
    /// | `translating_<name>` | cx, cy, then the parameters of `<name>` |
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let p = |i: usize, d: f64| params.get(i).copied().unwrap_or(d);
        if let Some(inner) = name.strip_prefix("translating_") {
            let velocity = Vec2::new(p(0, 0.0), p(1, 0.0));
            let rest = if params.len() > 2 { &params[2..] } else { &[] };
            let flow = AnalyticFlow::from_name(inner, rest)?;
            return Ok(AnalyticFlow::Translating { velocity, flow: Box::new(flow) });
        }
        let flow = match name {
            "steady_saddle" => AnalyticFlow::SteadySaddle { strength: p(0, 1.0) },
            "rigid_rotation" => AnalyticFlow::RigidRotation { rate: p(0, 1.0) },
            "simple_shear" => AnalyticFlow::SimpleShear { rate: p(0, 1.0) },
            "axisymmetric_vortex" => {
                AnalyticFlow::AxisymmetricVortex(VortexProfile::Power { amplitude: p(0, 1.0), exponent: p(1, 1.0) })
            }
            "lamb_oseen" => AnalyticFlow::AxisymmetricVortex(VortexProfile::LambOseen { strength: p(0, 1.0) }),
            "cellular" => AnalyticFlow::Cellular,
            "perturbed_jet" => AnalyticFlow::PerturbedJet { epsilon: p(0, 0.0) },
            "perturbed_vortex" => {
                AnalyticFlow::PerturbedVortex { swirl: p(0, 1.0), radial: p(1, 0.02), strain: p(2, 0.01) }
            }
            _ => return Err(Error::UnknownFlow),
        };
        Ok(flow)
    }

    /// Velocity and gradient at `(p, t)`.
    pub fn evaluate(&self, p: Vec2, t: f64) -> Result<(Vec2, Jacobian2)> {
        let (x, y) = (p.x, p.y);
        Ok(match self {
            AnalyticFlow::SteadySaddle { strength: k } => (Vec2::new(k * x, -k * y), Mat2::new(*k, 0.0, 0.0, -k)),
            AnalyticFlow::RigidRotation { rate: w } => (Vec2::new(-w * y, w * x), Mat2::new(0.0, -w, *w, 0.0)),
            AnalyticFlow::SimpleShear { rate: g } => (Vec2::new(g * y, 0.0), Mat2::new(0.0, *g, 0.0, 0.0)),
            AnalyticFlow::AxisymmetricVortex(profile) => {
                let (g, gpr) = profile.angular(x * x + y * y).ok_or(Error::OutOfDomain { point: p, time: t })?;
                swirl(g, gpr, p)
            }
            AnalyticFlow::Cellular => {
                let (sx, cx) = (math::sin(x), math::cos(x));
                let (sy, cy) = (math::sin(y), math::cos(y));
                (Vec2::new(sx * cy, -cx * sy), Mat2::new(cx * cy, -sx * sy, sx * sy, -cx * cy))
            }
            AnalyticFlow::PerturbedJet { epsilon } => {
                let s2 = math::sech2(y);
                let th = math::tanh(y);
                let amp = 1.0 + epsilon * math::sin(x);
                (Vec2::new(s2 * amp, 0.0), Mat2::new(epsilon * math::cos(x) * s2, -2.0 * s2 * th * amp, 0.0, 0.0))
            }
            AnalyticFlow::PerturbedVortex { swirl: gamma, radial, strain } => {
                let r2 = x * x + y * y;
                let (g, gpr) = lamb_oseen_angular(*gamma, r2);
                let (v_s, j_s) = swirl(g, gpr, p);
                let e = math::exp(-r2);
                let m = radial * (e - 0.5);
                let mpr = -2.0 * radial * e;
                let v_r = p * m;
                let j_r = Mat2::new(m + mpr * x * x, mpr * x * y, mpr * x * y, m + mpr * y * y);
                let v_e = Vec2::new(strain * x, -strain * y);
                let j_e = Mat2::new(*strain, 0.0, 0.0, -strain);
                (v_s + v_r + v_e, j_s + j_r + j_e)
            }
            AnalyticFlow::Translating { velocity, flow } => {
                let (v, j) = flow.evaluate(p - *velocity * t, t)?;
                (v + *velocity, j)
            }
            AnalyticFlow::Polynomial(poly) => {
                let (u, ux, uy) = PolynomialFlow::eval(&poly.u, p);
                let (v, vx, vy) = PolynomialFlow::eval(&poly.v, p);
                (Vec2::new(u, v), Mat2::new(ux, uy, vx, vy))
            }
            AnalyticFlow::Composite(terms) => {
                let mut vel = Vec2::ZERO;
                let mut jac = Mat2::ZERO;
                for term in terms {
                    let (v, j) = term.flow.evaluate(p - term.offset, t)?;
                    vel += v * term.scale;
                    jac = jac + j * term.scale;
                }
                (vel, jac)
            }
        })
    }

    /// Wraps the flow as a field on an unbounded domain.
    pub fn field(self) -> AnalyticField {
        AnalyticField::new(self)
    }
}

/// `g(r)(−y, x)` and its gradient `g R + (g'/r)(−y, x) ⊗ (x, y)`.
fn swirl(g: f64, gpr: f64, p: Vec2) -> (Vec2, Jacobian2) {
    let (x, y) = (p.x, p.y);
    let v = Vec2::new(-g * y, g * x);
    let j = Mat2::new(-gpr * y * x, -g - gpr * y * y, g + gpr * x * x, gpr * x * y);
    (v, j)
}

/// An analytic flow restricted to a (possibly unbounded) rectangle.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticField {
    pub flow: AnalyticFlow,
    pub domain: Rect,
}

impl AnalyticField {
    pub fn new(flow: AnalyticFlow) -> Self {
        AnalyticField { flow, domain: Rect::UNBOUNDED }
    }

    pub fn with_domain(mut self, domain: Rect) -> Self {
        self.domain = domain;
        self
    }
}

impl VelocityField for AnalyticField {
    fn velocity(&self, p: Vec2, t: f64) -> Result<Vec2> {
        if !self.domain.contains(p) {
            return Err(Error::OutOfDomain { point: p, time: t });
        }
        Ok(self.flow.evaluate(p, t)?.0)
    }

    fn gradient(&self, p: Vec2, t: f64) -> Result<Jacobian2> {
        if !self.domain.contains(p) {
            return Err(Error::OutOfDomain { point: p, time: t });
        }
        Ok(self.flow.evaluate(p, t)?.1)
    }

    fn domain(&self) -> Rect {
        self.domain
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn fd_gradient(flow: &AnalyticFlow, p: Vec2, h: f64) -> Mat2 {
        let f = |q: Vec2| flow.evaluate(q, 0.0).unwrap().0;
        let dx = (f(p + Vec2::new(h, 0.0)) - f(p - Vec2::new(h, 0.0))) / (2.0 * h);
        let dy = (f(p + Vec2::new(0.0, h)) - f(p - Vec2::new(0.0, h))) / (2.0 * h);
        Mat2::from_columns(dx, dy)
    }

    #[test]
    fn axis_rejects_bad_input() {
        assert!(GridAxis::new(0.0, 0.0, 4).is_err());
        assert!(GridAxis::new(0.0, 1.0, 1).is_err());
        let a = GridAxis::new(1.0, 0.5, 5).unwrap();
        assert_eq!(a.end(), 3.0);
        assert_eq!(a.locate(3.0), Some((3, 1.0)));
        assert_eq!(a.locate(1.0), Some((0, 0.0)));
        assert!(a.locate(3.1).is_none());
    }

    #[test]
    fn analytic_point_values() {
        let saddle = AnalyticFlow::from_name("steady_saddle", &[]).unwrap();
        assert_eq!(saddle.evaluate(Vec2::new(1.0, 2.0), 3.0).unwrap().0, Vec2::new(1.0, -2.0));
        let cell = AnalyticFlow::from_name("cellular", &[]).unwrap();
        assert_eq!(cell.evaluate(Vec2::ZERO, 0.0).unwrap().0, Vec2::ZERO);
        let vortex = AnalyticFlow::from_name("axisymmetric_vortex", &[1.0, 1.0]).unwrap();
        let v = vortex.evaluate(Vec2::new(1.0, 0.0), 0.0).unwrap().0;
        assert!(close(v.x, 0.0, 1e-15) && close(v.y, 1.0, 1e-15));
        let jet = AnalyticFlow::from_name("perturbed_jet", &[0.0]).unwrap();
        assert_eq!(jet.evaluate(Vec2::new(0.7, 0.0), 0.0).unwrap().0, Vec2::new(1.0, 0.0));
        assert_eq!(AnalyticFlow::from_name("nope", &[]), Err(Error::UnknownFlow));
    }

    #[test]
    fn linear_flow_gradients() {
        let rot = AnalyticFlow::RigidRotation { rate: 1.0 };
        assert_eq!(rot.evaluate(Vec2::new(3.0, -2.0), 0.0).unwrap().1, Mat2::new(0.0, -1.0, 1.0, 0.0));
        let saddle = AnalyticFlow::SteadySaddle { strength: 1.0 };
        assert_eq!(saddle.evaluate(Vec2::new(3.0, -2.0), 0.0).unwrap().1, Mat2::new(1.0, 0.0, 0.0, -1.0));
    }

    #[test]
    fn exact_gradients_match_finite_differences() {
        let flows = [
            AnalyticFlow::Cellular,
            AnalyticFlow::PerturbedJet { epsilon: 0.3 },
            AnalyticFlow::AxisymmetricVortex(VortexProfile::Power { amplitude: 1.0, exponent: 2.0 }),
            AnalyticFlow::AxisymmetricVortex(VortexProfile::LambOseen { strength: 1.5 }),
            AnalyticFlow::PerturbedVortex { swirl: 1.0, radial: 0.02, strain: 0.01 },
            AnalyticFlow::Translating { velocity: Vec2::new(0.3, -0.2), flow: Box::new(AnalyticFlow::Cellular) },
            AnalyticFlow::Polynomial(PolynomialFlow::new(
                [0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.7, 0.8, -0.9, 1.0],
                [1.0, -0.9, 0.8, 0.7, -0.6, 0.5, 0.4, -0.3, 0.2, 0.1],
            )),
        ];
        let pts = [Vec2::new(0.3, -0.7), Vec2::new(-1.2, 0.4), Vec2::new(0.05, 0.08), Vec2::new(2.0, 1.5)];
        for flow in &flows {
            for &p in &pts {
                let exact = flow.evaluate(p, 0.0).unwrap().1;
                let fd = fd_gradient(flow, p, 1e-5);
                assert!((exact - fd).frobenius() < 1e-7, "{flow:?} at {p:?}: {exact:?} vs {fd:?}");
            }
        }
    }

    #[test]
    fn lamb_oseen_series_is_continuous() {
        let below = lamb_oseen_angular(1.0, 0.01 - 1e-15);
        let above = lamb_oseen_angular(1.0, 0.01 + 1e-15);
        assert!(close(below.0, above.0, 1e-12));
        assert!(close(below.1, above.1, 1e-10));
    }

    #[test]
    fn polynomial_from_linear_strain_reproduces_strain() {
        let s0 = Sym2::new(0.3, -0.1, 0.2);
        let sx = Sym2::new(1.0, 0.5, -0.4);
        let sy = Sym2::new(-0.2, 0.7, 0.9);
        let flow = AnalyticFlow::Polynomial(PolynomialFlow::from_linear_strain(s0, sx, sy));
        for p in [Vec2::new(0.4, -1.1), Vec2::new(-2.0, 0.3)] {
            let s = flow.evaluate(p, 0.0).unwrap().1.symmetric_part();
            let want = s0 + sx * p.x + sy * p.y;
            assert!((s - want).frobenius() < 1e-14);
        }
    }

    fn sampled(flow: AnalyticFlow, step: f64, n: usize) -> GriddedField {
        let axis = GridAxis::new(-(n as f64) * step / 2.0, step, n + 1).unwrap();
        GriddedField::sample(&flow.field(), axis, axis, 0.0, 1.0, 2).unwrap()
    }

    #[test]
    fn gridded_sampling_identities() {
        let g = sampled(AnalyticFlow::Cellular, 0.1, 20);
        let node = Vec2::new(g.x_axis().coord(3), g.y_axis().coord(7));
        assert_eq!(g.velocity(node, 0.5).unwrap(), g.node(3, 7, 0));
        let center = Vec2::new(g.x_axis().coord(3) + 0.05, g.y_axis().coord(7) + 0.05);
        let mean = (g.node(3, 7, 0) + g.node(4, 7, 0) + g.node(3, 8, 0) + g.node(4, 8, 0)) * 0.25;
        let got = g.velocity(center, 0.0).unwrap();
        assert!((got - mean).norm() < 1e-15);
        assert!(matches!(g.velocity(Vec2::new(5.0, 0.0), 0.0), Err(Error::OutOfDomain { .. })));
        assert!(matches!(g.velocity(Vec2::ZERO, 1.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn gridded_gradient_of_linear_field_is_exact() {
        let g = sampled(AnalyticFlow::SimpleShear { rate: 0.7 }, 0.1, 20);
        let j = g.gradient(Vec2::new(0.234, -0.51), 0.3).unwrap();
        assert!((j - Mat2::new(0.0, 0.7, 0.0, 0.0)).frobenius() < 1e-13);
        let edge = Vec2::new(g.x_axis().start + 0.05, 0.0);
        assert!(matches!(g.gradient(edge, 0.0), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn gridded_gradient_of_quadratic_at_node() {
        // u = x², sampled with step 1e-2: ∂u/∂x at x = 1 is 2.
        let mut c = [0.0; 10];
        c[3] = 1.0;
        let flow = AnalyticFlow::Polynomial(PolynomialFlow::new(c, [0.0; 10]));
        let x = GridAxis::new(0.5, 0.01, 101).unwrap();
        let y = GridAxis::new(-0.1, 0.01, 21).unwrap();
        let g = GriddedField::sample(&flow.field(), x, y, 0.0, 1.0, 1).unwrap();
        let j = g.gradient(Vec2::new(1.0, 0.0), 7.0).unwrap();
        assert!(close(j.a11, 2.0, 1e-6));
    }

    #[test]
    fn single_slice_is_steady() {
        let g = {
            let axis = GridAxis::new(-1.0, 0.5, 5).unwrap();
            GriddedField::sample(&AnalyticFlow::Cellular.field(), axis, axis, 0.0, 0.0, 1).unwrap()
        };
        let p = Vec2::new(0.2, 0.3);
        assert_eq!(g.velocity(p, -4.0).unwrap(), g.velocity(p, 9.0).unwrap());
    }
}
