//! Common zeros of a planar map on a scan lattice.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::field::ScanGrid;
use crate::math::{Mat2, Vec2};

pub(crate) struct ZeroScan {
    /// Refined zeros with the map's Jacobian there.
    pub transverse: Vec<(Vec2, Mat2)>,
    /// Zeros at which the Jacobian is (numerically) singular.
    pub non_transverse: Vec<Vec2>,
}

const MAX_NEWTON: usize = 20;
const SINGULAR_REL: f64 = 1e-8;

fn is_singular(j: Mat2) -> bool {
    let f2 = j.frobenius() * j.frobenius();
    !(j.det().abs() > SINGULAR_REL * f2) || f2 == 0.0
}

/// Newton with a minimum-norm step where the Jacobian drops rank.
fn newton<F, J>(f: &F, jac: &J, mut p: Vec2, h: f64) -> Option<Vec2>
where
    F: Fn(Vec2) -> Result<Vec2>,
    J: Fn(Vec2) -> Result<Mat2>,
{
    for _ in 0..MAX_NEWTON {
        let r = f(p).ok()?;
        let j = jac(p).ok()?;
        let step = if is_singular(j) {
            let f2 = j.frobenius() * j.frobenius();
            if f2 == 0.0 {
                return None;
            }
            -(j.transpose() * r) / f2
        } else {
            -(j.inverse()? * r)
        };
        if !step.is_finite() {
            return None;
        }
        p += step;
        if step.norm() < 1e-8 * h {
            return Some(p);
        }
    }
    None
}

/// Scans every lattice cell whose corner values bracket zero in both
/// components and refines candidates by Newton's method.
///
/// When Newton fails from the cell centre it is restarted from the best
/// sample along the two cell diagonals. Zeros closer than half a lattice step
/// are merged.
pub(crate) fn find_zeros<F, J>(grid: &ScanGrid, f: F, jac: J) -> ZeroScan
where
    F: Fn(Vec2) -> Result<Vec2>,
    J: Fn(Vec2) -> Result<Mat2>,
{
    let (nx, ny) = (grid.x.count, grid.y.count);
    let mut values: Vec<Option<Vec2>> = vec![None; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            values[grid.index(i, j)] = f(grid.node(i, j)).ok();
        }
    }
    let (hx, hy) = (grid.x.step, grid.y.step);
    let h = hx.min(hy);
    let mut transverse: Vec<(Vec2, Mat2)> = Vec::new();
    let mut non_transverse: Vec<Vec2> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let corners = [
                values[grid.index(i, j)],
                values[grid.index(i + 1, j)],
                values[grid.index(i, j + 1)],
                values[grid.index(i + 1, j + 1)],
            ];
            if corners.iter().any(Option::is_none) {
                continue;
            }
            let c: [Vec2; 4] = [corners[0].unwrap(), corners[1].unwrap(), corners[2].unwrap(), corners[3].unwrap()];
            let brackets = |g: fn(&Vec2) -> f64| {
                let lo = c.iter().map(g).fold(f64::INFINITY, f64::min);
                let hi = c.iter().map(g).fold(f64::NEG_INFINITY, f64::max);
                lo <= 0.0 && hi >= 0.0
            };
            if !(brackets(|v| v.x) && brackets(|v| v.y)) {
                continue;
            }
            let origin = grid.node(i, j);
            let lo = origin - Vec2::new(0.01 * hx, 0.01 * hy);
            let hi = origin + Vec2::new(1.01 * hx, 1.01 * hy);
            let inside = |p: Vec2| p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
            let centre = origin + Vec2::new(0.5 * hx, 0.5 * hy);
            let mut root = newton(&f, &jac, centre, h).filter(|&p| inside(p));
            if root.is_none() {
                let mut best: Option<(f64, Vec2)> = None;
                for k in 0..=16 {
                    let s = k as f64 / 16.0;
                    for p in [origin + Vec2::new(s * hx, s * hy), origin + Vec2::new(s * hx, (1.0 - s) * hy)] {
                        if let Ok(v) = f(p) {
                            if best.is_none_or(|(b, _)| v.norm() < b) {
                                best = Some((v.norm(), p));
                            }
                        }
                    }
                }
                if let Some((_, start)) = best {
                    root = newton(&f, &jac, start, h).filter(|&p| inside(p));
                }
            }
            let Some(p) = root else { continue };
            let Ok(jp) = jac(p) else { continue };
            if is_singular(jp) {
                if !non_transverse.iter().any(|q| q.distance(p) < 0.5 * h) {
                    non_transverse.push(p);
                }
            } else if !transverse.iter().any(|(q, _)| q.distance(p) < 0.5 * h) {
                transverse.push((p, jp));
            }
        }
    }
    ZeroScan { transverse, non_transverse }
}
