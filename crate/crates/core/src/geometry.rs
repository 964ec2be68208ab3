//! Vector aliases and planar polygon helpers.

use nalgebra::{Vector2, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;

/// Twice the signed area of a polygon; positive for counter-clockwise order.
pub fn signed_area2(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum()
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    (p - closest_on_segment(p, a, b)).norm()
}

pub fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Euclidean distance from `p` to the nearest edge of the closed polygon.
pub fn distance_to_contour(p: Vec2, poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Nearest point on the polygon boundary.
pub fn nearest_on_contour(p: Vec2, poly: &[Vec2]) -> Vec2 {
    let n = poly.len();
    let mut best = poly[0];
    let mut best_d = f64::INFINITY;
    for i in 0..n {
        let q = closest_on_segment(p, poly[i], poly[(i + 1) % n]);
        let d = (q - p).norm_squared();
        if d < best_d {
            best_d = d;
            best = q;
        }
    }
    best
}

/// Crossing-parity containment test. Points exactly on the boundary may land
/// on either side.
pub fn contains(p: Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
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

/// Containment that also accepts points within `tol` of the boundary.
pub fn contains_or_on(p: Vec2, poly: &[Vec2], tol: f64) -> bool {
    contains(p, poly) || distance_to_contour(p, poly) <= tol
}

/// True when every turn of the polygon has the same orientation.
/// Collinear consecutive vertices are tolerated.
pub fn is_convex(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut sign = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        let cross = (b - a).perp(&(c - b));
        if cross.abs() <= 1e-12 * (b - a).norm() * (c - b).norm() {
            continue;
        }
        if sign == 0.0 {
            sign = cross.signum();
        } else if cross.signum() != sign {
            return false;
        }
    }
    sign != 0.0
}

/// Convex hull by the monotone chain method, counter-clockwise, without
/// collinear points.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Vec2, a: Vec2, b: Vec2| (a - o).perp(&(b - o));
    let mut lower: Vec<Vec2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Nearest point of a convex polygon (boundary included) to `p`.
pub fn project_onto_convex(p: Vec2, poly: &[Vec2]) -> Vec2 {
    if contains(p, poly) {
        p
    } else {
        nearest_on_contour(p, poly)
    }
}

pub fn centroid(poly: &[Vec2]) -> Vec2 {
    let a2 = signed_area2(poly);
    if a2.abs() < 1e-300 {
        return poly.iter().sum::<Vec2>() / poly.len() as f64;
    }
    let n = poly.len();
    let mut c = Vec2::zeros();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let w = a.x * b.y - b.x * a.y;
        c += (a + b) * w;
    }
    c / (3.0 * a2)
}

/// Axis-aligned bounding box of a point set as (min, max).
pub fn bounds2(points: &[Vec2]) -> (Vec2, Vec2) {
    let mut lo = Vec2::repeat(f64::INFINITY);
    let mut hi = Vec2::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// Orthonormal vector perpendicular to `v` (any choice).
pub fn any_perpendicular(v: &Vec3) -> Vec3 {
    let a = if v.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    v.cross(&a).normalize()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Vec<Vec2> {
        vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn square_queries() {
        let sq = unit_square();
        let c = Vec2::new(0.5, 0.5);
        assert!((distance_to_contour(c, &sq) - 0.5).abs() < 1e-15);
        assert!(contains(c, &sq));
        assert_eq!(distance_to_contour(Vec2::new(1.0, 1.0), &sq), 0.0);
        let p = Vec2::new(2.0, 0.5);
        assert!((distance_to_contour(p, &sq) - 1.0).abs() < 1e-15);
        assert!(!contains(p, &sq));
    }

    #[test]
    fn hull_of_l_shape_is_convex_and_contains_it() {
        let l = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(4.0, 0.0),
            Vec2::new(4.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 3.0),
            Vec2::new(0.0, 3.0),
        ];
        assert!(!is_convex(&l));
        let h = convex_hull(&l);
        assert!(is_convex(&h));
        assert_eq!(h.len(), 5);
        for p in &l {
            assert!(contains_or_on(*p, &h, 1e-12));
        }
    }

    #[test]
    fn projection_lands_on_boundary() {
        let sq = unit_square();
        let q = project_onto_convex(Vec2::new(3.0, 2.0), &sq);
        assert!((q - Vec2::new(1.0, 1.0)).norm() < 1e-15);
        let inside = Vec2::new(0.3, 0.2);
        assert_eq!(project_onto_convex(inside, &sq), inside);
    }
}
