//! Geostrophic surface velocity from sea-surface height.
//!
//! With longitude `φ` and latitude `θ` in radians and `f = 2Ω sin θ`,
//!
//! ```text
//! φ̇ = −g / (R² f cos θ) ∂θ h
//! θ̇ =  g / (R² f cos θ) ∂φ h
//! ```
//!
//! in rad/s. The output grid keeps the input's degree coordinates and day time
//! axis, so velocities are converted to degrees per day:
//! `deg/day = rad/s × (180/π) × 86400`.

use std::f64::consts::PI;

use oecs_core::field::GriddedField;
use oecs_core::math::Vec2;
use serde::{Deserialize, Serialize};

use crate::error::{OecsError, Result};
use crate::grid_io::SshGrid;

pub const SECONDS_PER_DAY: f64 = 86_400.0;
/// rad/s to deg/day.
pub const RAD_PER_S_TO_DEG_PER_DAY: f64 = 180.0 / PI * SECONDS_PER_DAY;
pub const DEFAULT_EQUATOR_CUTOFF_DEG: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoConstants {
    /// Gravity, m/s².
    pub g: f64,
    /// Mean Earth radius, m.
    pub radius: f64,
    /// Earth rotation rate, rad/s.
    pub omega: f64,
    /// Latitudes closer to the equator than this (degrees) are rejected.
    pub equator_cutoff: f64,
}

impl Default for GeoConstants {
    fn default() -> Self {
        GeoConstants { g: 9.81, radius: 6.371e6, omega: 7.2921e-5, equator_cutoff: DEFAULT_EQUATOR_CUTOFF_DEG }
    }
}

impl GeoConstants {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.g) && ok(self.radius) && ok(self.omega)) {
            return Err(OecsError::Config("geostrophic constants must be positive".into()));
        }
        if !(self.equator_cutoff.is_finite() && self.equator_cutoff >= 0.0) {
            return Err(OecsError::Config("equator cutoff must be non-negative".into()));
        }
        Ok(())
    }

    pub fn coriolis(&self, lat_rad: f64) -> f64 {
        2.0 * self.omega * lat_rad.sin()
    }
}

/// Header lines documenting units, for files written from geostrophic output.
pub const UNIT_NOTE: [&str; 3] = [
    "geostrophic velocity: x = longitude (deg), y = latitude (deg), t in days",
    "u = dlon/dt, v = dlat/dt in deg/day",
    "converted from rad/s by the factor (180/pi) * 86400",
];

fn check_band(ssh: &SshGrid, c: &GeoConstants) -> Result<()> {
    for j in 0..ssh.lat.count {
        let lat = ssh.lat.coord(j);
        if lat.abs() < c.equator_cutoff {
            return Err(OecsError::EquatorBand { latitude: lat, cutoff: c.equator_cutoff });
        }
    }
    Ok(())
}

/// Derivative along one axis at index `i` of `n` samples with spacing `h`:
/// central inside, second-order one-sided at the ends.
fn diff(n: usize, h: f64, i: usize, v: impl Fn(usize) -> f64) -> f64 {
    if n == 2 {
        (v(1) - v(0)) / h
    } else if i == 0 {
        (4.0 * (v(1) - v(0)) - (v(2) - v(0))) / (2.0 * h)
    } else if i == n - 1 {
        (4.0 * (v(n - 1) - v(n - 2)) - (v(n - 1) - v(n - 3))) / (2.0 * h)
    } else {
        (v(i + 1) - v(i - 1)) / (2.0 * h)
    }
}

/// `(∂φ h, ∂θ h)` per radian at every node, longitude fastest.
fn height_gradients(ssh: &SshGrid) -> Vec<(f64, f64)> {
    let (nx, ny) = (ssh.lon.count, ssh.lat.count);
    let hx = ssh.lon.step.to_radians();
    let hy = ssh.lat.step.to_radians();
    let mut out = Vec::with_capacity(ssh.h.len());
    for k in 0..ssh.nt {
        for j in 0..ny {
            for i in 0..nx {
                let d_lon = diff(nx, hx, i, |m| ssh.at(m, j, k));
                let d_lat = diff(ny, hy, j, |m| ssh.at(i, m, k));
                out.push((d_lon, d_lat));
            }
        }
    }
    out
}

/// Angular geostrophic velocity `(φ̇, θ̇)` in deg/day on the SSH lattice.
pub fn geostrophic_velocity(ssh: &SshGrid, c: &GeoConstants) -> Result<GriddedField> {
    c.validate()?;
    check_band(ssh, c)?;
    let nx = ssh.lon.count;
    let ny = ssh.lat.count;
    let samples = height_gradients(ssh)
        .into_iter()
        .enumerate()
        .map(|(n, (d_lon, d_lat))| {
            let theta = ssh.lat.coord((n / nx) % ny).to_radians();
            let k = c.g / (c.radius * c.radius * c.coriolis(theta) * theta.cos());
            Vec2::new(-k * d_lat, k * d_lon) * RAD_PER_S_TO_DEG_PER_DAY
        })
        .collect();
    GriddedField::new(ssh.lon, ssh.lat, ssh.t0, ssh.dt, ssh.nt, samples).map_err(|e| OecsError::Data(e.to_string()))
}

/// Eastward and northward geostrophic velocity in m/s:
/// `u = −g/(f R) ∂θ h`, `v = g/(f R cos θ) ∂φ h`.
pub fn geostrophic_si(ssh: &SshGrid, c: &GeoConstants) -> Result<Vec<Vec2>> {
    c.validate()?;
    check_band(ssh, c)?;
    let nx = ssh.lon.count;
    let ny = ssh.lat.count;
    Ok(height_gradients(ssh)
        .into_iter()
        .enumerate()
        .map(|(n, (d_lon, d_lat))| {
            let theta = ssh.lat.coord((n / nx) % ny).to_radians();
            let f = c.coriolis(theta);
            Vec2::new(-c.g / (f * c.radius) * d_lat, c.g / (f * c.radius * theta.cos()) * d_lon)
        })
        .collect())
}

/// Largest discrepancy between the deg/day output and the SI path converted
/// through metres (`φ̇ = u / (R cos θ)`, `θ̇ = v / R`), relative to the largest
/// angular speed. Zero for a motionless field.
pub fn unit_audit(ssh: &SshGrid, c: &GeoConstants) -> Result<f64> {
    let angular = geostrophic_velocity(ssh, c)?;
    let si = geostrophic_si(ssh, c)?;
    let nx = ssh.lon.count;
    let ny = ssh.lat.count;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for (n, (a, m)) in angular.samples().iter().zip(&si).enumerate() {
        let theta = ssh.lat.coord((n / nx) % ny).to_radians();
        let deg_per_metre_day = 180.0 / PI * SECONDS_PER_DAY / c.radius;
        let b = Vec2::new(m.x / theta.cos(), m.y) * deg_per_metre_day;
        worst = worst.max((*a - b).norm());
        scale = scale.max(a.norm());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use oecs_core::field::{GridAxis, VelocityField};

    fn grid(lat0: f64, f: impl Fn(f64, f64) -> f64) -> SshGrid {
        let lon = GridAxis::new(-17.0, 0.25, 9).unwrap();
        let lat = GridAxis::new(lat0, 0.25, 9).unwrap();
        let mut h = Vec::new();
        for j in 0..lat.count {
            for i in 0..lon.count {
                h.push(f(lon.coord(i), lat.coord(j)));
            }
        }
        SshGrid::new(lon, lat, 0.0, 7.0, 1, h).unwrap()
    }

    #[test]
    fn constant_height_is_motionless() {
        let v = geostrophic_velocity(&grid(-31.0, |_, _| 0.4), &GeoConstants::default()).unwrap();
        assert!(v.samples().iter().all(|s| *s == Vec2::ZERO));
    }

    #[test]
    fn linear_latitude_height_matches_closed_form() {
        // h = θ in radians; exact under any difference scheme.
        let c = GeoConstants::default();
        let ssh = grid(-31.0, |_, lat| lat.to_radians());
        let v = geostrophic_velocity(&ssh, &c).unwrap();
        let theta = (-30.0f64).to_radians();
        let f = 2.0 * c.omega * theta.sin();
        let expect = -c.g / (c.radius * c.radius * f * theta.cos()) * RAD_PER_S_TO_DEG_PER_DAY;
        let got = v.velocity(Vec2::new(-16.0, -30.0), 0.0).unwrap();
        assert!((got.x - expect).abs() <= 1e-12 * expect.abs(), "{} vs {expect}", got.x);
        assert!(got.y.abs() <= 1e-12 * expect.abs());
        // Southern hemisphere: f < 0, so a height rising northward drives eastward flow.
        assert!(expect > 0.0);
    }

    #[test]
    fn equator_band_is_refused() {
        let r = geostrophic_velocity(&grid(-2.0, |_, _| 0.0), &GeoConstants::default());
        assert!(matches!(r, Err(OecsError::EquatorBand { .. })));
        let loose = GeoConstants { equator_cutoff: 0.0, ..GeoConstants::default() };
        assert!(geostrophic_velocity(&grid(1.0, |_, _| 0.0), &loose).is_ok());
    }

    #[test]
    fn unit_paths_agree() {
        let ssh = grid(-38.0, |lon, lat| 0.3 * (0.4 * lon).sin() * (0.5 * lat).cos() + 0.01 * lat);
        let rel = unit_audit(&ssh, &GeoConstants::default()).unwrap();
        assert!(rel <= 1e-10, "{rel}");
    }

    #[test]
    fn edge_derivatives_are_exact_for_quadratics() {
        let h = |i: usize| (i as f64 * 0.5).powi(2);
        for i in 0..5 {
            assert!((diff(5, 0.5, i, h) - 2.0 * i as f64 * 0.5).abs() < 1e-12);
        }
    }
}
