//! Polyline and polygon helpers.
//!
//! Polygons are vertex lists with an implicit closing edge from the last
//! vertex back to the first.

use crate::math::Vec2;

/// Signed shoelace area; positive for counter-clockwise polygons.
pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += poly[i].cross(poly[(i + 1) % n]);
    }
    0.5 * acc
}

pub fn area(poly: &[Vec2]) -> f64 {
    signed_area(poly).abs()
}

/// Perimeter of the closed polygon.
pub fn perimeter(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 2 {
        return 0.0;
    }
    (0..n).map(|i| poly[i].distance(poly[(i + 1) % n])).sum()
}

/// Length of the open polyline.
pub fn polyline_length(line: &[Vec2]) -> f64 {
    line.windows(2).map(|w| w[0].distance(w[1])).sum()
}

pub fn centroid(points: &[Vec2]) -> Vec2 {
    if points.is_empty() {
        return Vec2::ZERO;
    }
    let mut c = Vec2::ZERO;
    for &p in points {
        c += p;
    }
    c / points.len() as f64
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Distance from `p` to the segment `[a, b]`, and the segment parameter of the foot point.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> (f64, f64) {
    let ab = b - a;
    let len2 = ab.norm_sq();
    let t = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p.distance(a + ab * t), t)
}

/// Distance from `p` to an open polyline.
pub fn point_polyline_distance(p: Vec2, line: &[Vec2]) -> f64 {
    match line.len() {
        0 => f64::INFINITY,
        1 => p.distance(line[0]),
        _ => line.windows(2).map(|w| point_segment_distance(p, w[0], w[1]).0).fold(f64::INFINITY, f64::min),
    }
}

/// Proper intersection of the closed segments `[a, b]` and `[c, d]`.
///
/// Collinear overlaps and touching endpoints count as intersections.
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let o1 = (b - a).cross(c - a);
    let o2 = (b - a).cross(d - a);
    let o3 = (d - c).cross(a - c);
    let o4 = (d - c).cross(b - c);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2, o: f64| {
        o == 0.0 && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

/// Counts crossing edge pairs between two closed polygons.
pub fn polygon_crossings(p: &[Vec2], q: &[Vec2]) -> usize {
    let (np, nq) = (p.len(), q.len());
    if np < 2 || nq < 2 {
        return 0;
    }
    let bp = crate::field::Rect::bounding(p.iter().copied());
    let bq = crate::field::Rect::bounding(q.iter().copied());
    if bp.x_max < bq.x_min || bq.x_max < bp.x_min || bp.y_max < bq.y_min || bq.y_max < bp.y_min {
        return 0;
    }
    let mut count = 0;
    for i in 0..np {
        let (a, b) = (p[i], p[(i + 1) % np]);
        let (lo_x, hi_x) = (a.x.min(b.x), a.x.max(b.x));
        let (lo_y, hi_y) = (a.y.min(b.y), a.y.max(b.y));
        for j in 0..nq {
            let (c, d) = (q[j], q[(j + 1) % nq]);
            if c.x.max(d.x) < lo_x || c.x.min(d.x) > hi_x || c.y.max(d.y) < lo_y || c.y.min(d.y) > hi_y {
                continue;
            }
            if segments_intersect(a, b, c, d) {
                count += 1;
            }
        }
    }
    count
}

/// Symmetric Hausdorff distance between two polylines, measured from the
/// vertices of each to the segments of the other.
pub fn hausdorff(a: &[Vec2], b: &[Vec2]) -> f64 {
    let one_way = |from: &[Vec2], to: &[Vec2]| from.iter().map(|&p| point_polyline_distance(p, to)).fold(0.0, f64::max);
    one_way(a, b).max(one_way(b, a))
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn point_set_hausdorff(a: &[Vec2], b: &[Vec2]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let one_way = |from: &[Vec2], to: &[Vec2]| {
        from.iter().map(|&p| to.iter().map(|&q| p.distance(q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Aspect ratio `sqrt(λmax/λmin)` of the second-moment ellipse of the region
/// bounded by a simple polygon.
pub fn second_moment_aspect(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return f64::INFINITY;
    }
    let a = signed_area(poly);
    if a == 0.0 {
        return f64::INFINITY;
    }
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let c = p.cross(q);
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    let c = Vec2::new(cx / (6.0 * a), cy / (6.0 * a));
    let (mut ixx, mut iyy, mut ixy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (p, q) = (poly[i] - c, poly[(i + 1) % n] - c);
        let k = p.cross(q);
        ixx += (p.x * p.x + p.x * q.x + q.x * q.x) * k;
        iyy += (p.y * p.y + p.y * q.y + q.y * q.y) * k;
        ixy += (p.x * q.y + 2.0 * p.x * p.y + 2.0 * q.x * q.y + q.x * p.y) * k;
    }
    let m = crate::math::Sym2::new(ixx / 12.0, ixy / 24.0, iyy / 12.0) * (1.0 / a);
    let (lo, hi) = m.eigenvalues();
    if !(lo > 0.0) {
        return f64::INFINITY;
    }
    crate::math::sqrt(hi / lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn circle(c: Vec2, r: f64, n: usize) -> Vec<Vec2> {
        (0..n).map(|k| c + Vec2::from_angle(crate::math::TAU * k as f64 / n as f64) * r).collect()
    }

    #[test]
    fn unit_square() {
        let sq = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)];
        assert_eq!(signed_area(&sq), 1.0);
        assert_eq!(perimeter(&sq), 4.0);
        assert!(point_in_polygon(Vec2::new(0.5, 0.5), &sq));
        assert!(!point_in_polygon(Vec2::new(1.5, 0.5), &sq));
        assert!((second_moment_aspect(&sq) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ellipse_aspect() {
        let pts: Vec<Vec2> = circle(Vec2::ZERO, 1.0, 400).into_iter().map(|p| Vec2::new(3.0 * p.x, p.y)).collect();
        assert!((second_moment_aspect(&pts) - 3.0).abs() < 1e-3);
    }

    #[test]
    fn nested_circles_do_not_cross() {
        let a = circle(Vec2::ZERO, 1.0, 64);
        let b = circle(Vec2::ZERO, 1.2, 64);
        let c = circle(Vec2::new(1.0, 0.0), 1.0, 64);
        assert_eq!(polygon_crossings(&a, &b), 0);
        assert!(polygon_crossings(&a, &c) >= 2);
        assert!((hausdorff(&a, &b) - 0.2).abs() < 1e-2);
    }

    #[test]
    fn segment_cases() {
        let o = Vec2::ZERO;
        assert!(segments_intersect(o, Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)));
        assert!(!segments_intersect(o, Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0)));
        assert!(segments_intersect(o, Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 3.0)));
    }
}
