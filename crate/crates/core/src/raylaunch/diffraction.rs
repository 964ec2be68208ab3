//! Fermat diffraction points and first/second-order diffraction path
//! search, plus single reflection–diffraction combinations.

use std::f64::consts::PI;

use serde::Serialize;

use super::Interaction;
use crate::geometry::Vec3;
use crate::scene::{Edge, Scene};

/// Minimizer of the path length through one edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FermatPoint {
    /// Edge parameter in [0, 1].
    pub t: f64,
    pub point: Vec3,
    /// The minimum sits on an edge endpoint.
    pub boundary: bool,
    /// An endpoint lies on the edge line; no diffraction point exists.
    pub degenerate: bool,
}

impl FermatPoint {
    pub fn is_valid(&self) -> bool {
        !self.boundary && !self.degenerate
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn dist_to_line(p: &Vec3, a: &Vec3, u: &Vec3) -> f64 {
    let w = p - a;
    (w - u * w.dot(u)).norm()
}

/// d/ds and d²/ds² of |e(s) − pa| + |e(s) − pb| along unit direction `u`.
fn derivs(e: &Vec3, u: &Vec3, pa: &Vec3, pb: &Vec3) -> (f64, f64) {
    let (ra, rb) = (e - pa, e - pb);
    let (la, lb) = (ra.norm(), rb.norm());
    let (ca, cb) = (u.dot(&ra) / la, u.dot(&rb) / lb);
    (ca + cb, (1.0 - ca * ca) / la + (1.0 - cb * cb) / lb)
}

/// Point on segment [a, b] minimizing |pa − e| + |e − pb|: golden-section
/// bracketing followed by Newton polishing to |f'| < 1e-10.
pub fn fermat_diffraction_point(a: &Vec3, b: &Vec3, pa: &Vec3, pb: &Vec3) -> FermatPoint {
    let len = (b - a).norm();
    let u = (b - a) / len;
    let at = |s: f64| a + u * s;
    if len < 1e-12 || dist_to_line(pa, a, &u) < 1e-9 || dist_to_line(pb, a, &u) < 1e-9 {
        return FermatPoint {
            t: 0.5,
            point: at(0.5 * len),
            boundary: false,
            degenerate: true,
        };
    }
    let f = |s: f64| {
        let e = at(s);
        (e - pa).norm() + (e - pb).norm()
    };
    let (mut lo, mut hi) = (0.0, len);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-6 * len.max(1.0) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..60 {
        let (g, h) = derivs(&at(s), &u, pa, pb);
        if g.abs() < 1e-10 {
            break;
        }
        let next = if h > 0.0 { s - g / h } else { s - g.signum() * 1e-3 };
        let next = next.clamp(0.0, len);
        if next == s {
            break;
        }
        s = next;
    }
    let (g, _) = derivs(&at(s), &u, pa, pb);
    let boundary = (s <= 0.0 && g > 0.0) || (s >= len && g < 0.0) || (g.abs() >= 1e-10 && (s <= 0.0 || s >= len));
    FermatPoint {
        t: s / len,
        point: at(s),
        boundary,
        degenerate: false,
    }
}

/// Minimizer of |pa − p1| + |p1 − p2| + |p2 − pb| with p1 on segment e1 and
/// p2 on segment e2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FermatPair {
    pub t1: f64,
    pub t2: f64,
    pub p1: Vec3,
    pub p2: Vec3,
    pub boundary: bool,
    pub degenerate: bool,
}

impl FermatPair {
    pub fn is_valid(&self) -> bool {
        !self.boundary && !self.degenerate
    }
}

/// Nested single-edge solves for a starting point, then damped 2D Newton.
pub fn fermat_two_edges(e1: (&Vec3, &Vec3), e2: (&Vec3, &Vec3), pa: &Vec3, pb: &Vec3) -> FermatPair {
    let (a1, b1) = e1;
    let (a2, b2) = e2;
    let (l1, l2) = ((b1 - a1).norm(), (b2 - a2).norm());
    let (u1, u2) = ((b1 - a1) / l1, (b2 - a2) / l2);
    let p1_at = |s: f64| a1 + u1 * s;
    let p2_at = |s: f64| a2 + u2 * s;
    let bad = FermatPair {
        t1: 0.5,
        t2: 0.5,
        p1: p1_at(0.5 * l1),
        p2: p2_at(0.5 * l2),
        boundary: false,
        degenerate: true,
    };
    if l1 < 1e-12 || l2 < 1e-12 || dist_to_line(pa, a1, &u1) < 1e-9 || dist_to_line(pb, a2, &u2) < 1e-9 {
        return bad;
    }
    let f = |s1: f64, s2: f64| {
        let (p1, p2) = (p1_at(s1), p2_at(s2));
        (p1 - pa).norm() + (p2 - p1).norm() + (pb - p2).norm()
    };
    let mut s2 = 0.5 * l2;
    let mut s1 = 0.5 * l1;
    for _ in 0..4 {
        let r1 = fermat_diffraction_point(a1, b1, pa, &p2_at(s2));
        if r1.degenerate {
            return bad;
        }
        s1 = r1.t * l1;
        let r2 = fermat_diffraction_point(a2, b2, &p1_at(s1), pb);
        if r2.degenerate {
            return bad;
        }
        s2 = r2.t * l2;
    }
    let grad_hess = |s1: f64, s2: f64| -> Option<([f64; 2], [[f64; 2]; 2])> {
        let (p1, p2) = (p1_at(s1), p2_at(s2));
        let (da, dm, db) = (p1 - pa, p2 - p1, p2 - pb);
        let (la, lm, lb) = (da.norm(), dm.norm(), db.norm());
        if la < 1e-12 || lm < 1e-12 || lb < 1e-12 {
            return None;
        }
        let (ra, rm, rb) = (da / la, dm / lm, db / lb);
        let g = [u1.dot(&ra) - u1.dot(&rm), u2.dot(&rm) + u2.dot(&rb)];
        // u·(I − r rᵀ)·v / l
        let proj = |x: &Vec3, y: &Vec3, r: &Vec3, l: f64| (x.dot(y) - x.dot(r) * y.dot(r)) / l;
        let h11 = proj(&u1, &u1, &ra, la) + proj(&u1, &u1, &rm, lm);
        let h22 = proj(&u2, &u2, &rm, lm) + proj(&u2, &u2, &rb, lb);
        let h12 = -proj(&u1, &u2, &rm, lm);
        Some((g, [[h11, h12], [h12, h22]]))
    };
    let mut converged = false;
    for _ in 0..100 {
        let Some((g, h)) = grad_hess(s1, s2) else {
            return bad;
        };
        if g[0].abs() < 1e-10 && g[1].abs() < 1e-10 {
            converged = true;
            break;
        }
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let (mut d1, mut d2) = if det > 1e-18 {
            (-(h[1][1] * g[0] - h[0][1] * g[1]) / det, -(h[0][0] * g[1] - h[1][0] * g[0]) / det)
        } else {
            (-g[0], -g[1])
        };
        let f0 = f(s1, s2);
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let (n1, n2) = ((s1 + step * d1).clamp(0.0, l1), (s2 + step * d2).clamp(0.0, l2));
            if f(n1, n2) <= f0 {
                moved = (n1, n2) != (s1, s2);
                s1 = n1;
                s2 = n2;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            d1 = 0.0;
            d2 = 0.0;
        }
        if d1 == 0.0 && d2 == 0.0 {
            break;
        }
    }
    let on_bound = |s: f64, l: f64| s <= 1e-9 * l || s >= l * (1.0 - 1e-9);
    let boundary = !converged || on_bound(s1, l1) || on_bound(s2, l2);
    FermatPair {
        t1: s1 / l1,
        t2: s2 / l2,
        p1: p1_at(s1),
        p2: p2_at(s2),
        boundary,
        degenerate: false,
    }
}

const ANGLE_MARGIN: f64 = 1e-6;
const MIN_SIN_BETA: f64 = 1e-3;

/// `q` lies strictly inside the exterior (air) wedge of `edge`.
pub(crate) fn in_exterior(edge: &Edge, q: &Vec3) -> bool {
    match edge.exterior_angle(&edge.a, q) {
        Some(phi) => phi > ANGLE_MARGIN && phi < edge.n * PI - ANGLE_MARGIN,
        None => false,
    }
}

/// Geometric validity of a diffraction at `p` on `edge` between `from` and
/// `to`: both strictly exterior seen from `p` and not grazing the edge.
fn diffraction_ok(edge: &Edge, p: &Vec3, from: &Vec3, to: &Vec3) -> bool {
    let inside = |q: &Vec3| match edge.exterior_angle(p, q) {
        Some(phi) => phi > ANGLE_MARGIN && phi < edge.n * PI - ANGLE_MARGIN,
        None => false,
    };
    let k_in = (p - from).normalize();
    inside(from) && inside(to) && k_in.cross(&edge.dir).norm() >= MIN_SIN_BETA
}

/// Pairwise candidate lists: for every edge, the edges that may follow it on
/// a second-order path.
pub(crate) fn edge_pairs(scene: &Scene) -> Vec<Vec<u32>> {
    let samples = [0.02, 0.25, 0.5, 0.75, 0.98];
    let edges = &scene.edges;
    (0..edges.len())
        .map(|i| {
            let e1 = &edges[i];
            (0..edges.len())
                .filter(|&j| {
                    let e2 = &edges[j];
                    if i == j || shares_face(scene, e1, e2) {
                        return false;
                    }
                    let pts1: Vec<Vec3> = samples.iter().map(|&t| e1.point(t)).collect();
                    let pts2: Vec<Vec3> = samples.iter().map(|&t| e2.point(t)).collect();
                    if !pts2.iter().any(|q| in_exterior(e1, q)) || !pts1.iter().any(|q| in_exterior(e2, q)) {
                        return false;
                    }
                    pts1.iter()
                        .any(|p| pts2.iter().any(|q| !scene.occluded(p, q)))
                })
                .map(|j| j as u32)
                .collect()
        })
        .collect()
}

fn shares_face(scene: &Scene, a: &Edge, b: &Edge) -> bool {
    let ga = [scene.triangles[a.face_a].group, scene.triangles[a.face_b].group];
    let gb = [scene.triangles[b.face_a].group, scene.triangles[b.face_b].group];
    ga.iter().any(|g| gb.contains(g))
}

/// First-order edge diffraction paths between `tx` and `rx` over the given
/// candidate edges.
pub(crate) fn first_order(scene: &Scene, tx: &Vec3, rx: &Vec3, candidates: &[usize]) -> Vec<Vec<Interaction>> {
    let mut out = Vec::new();
    for &ei in candidates {
        let e = &scene.edges[ei];
        if !in_exterior(e, rx) {
            continue;
        }
        let fp = fermat_diffraction_point(&e.a, &e.b, tx, rx);
        if !fp.is_valid() || !diffraction_ok(e, &fp.point, tx, rx) {
            continue;
        }
        if scene.occluded(tx, &fp.point) || scene.occluded(&fp.point, rx) {
            continue;
        }
        out.push(vec![Interaction::Diffraction {
            point: fp.point,
            edge: ei,
        }]);
    }
    out
}

/// Second-order paths tx → e1 → e2 → rx.
pub(crate) fn second_order(
    scene: &Scene,
    pairs: &[Vec<u32>],
    tx: &Vec3,
    rx: &Vec3,
    candidates: &[usize],
) -> Vec<Vec<Interaction>> {
    let mut out = Vec::new();
    for &i in candidates {
        let e1 = &scene.edges[i];
        for &j in &pairs[i] {
            let j = j as usize;
            let e2 = &scene.edges[j];
            if !in_exterior(e2, rx) {
                continue;
            }
            let fp = fermat_two_edges((&e1.a, &e1.b), (&e2.a, &e2.b), tx, rx);
            if !fp.is_valid() {
                continue;
            }
            if (fp.p2 - fp.p1).norm() < 1e-6
                || !diffraction_ok(e1, &fp.p1, tx, &fp.p2)
                || !diffraction_ok(e2, &fp.p2, &fp.p1, rx)
            {
                continue;
            }
            if scene.occluded(tx, &fp.p1) || scene.occluded(&fp.p1, &fp.p2) || scene.occluded(&fp.p2, rx) {
                continue;
            }
            out.push(vec![
                Interaction::Diffraction { point: fp.p1, edge: i },
                Interaction::Diffraction { point: fp.p2, edge: j },
            ]);
        }
    }
    out
}

/// Intersection of segment (a, b) with a face-group plane when `a` is in
/// front and `b` behind.
fn cross_plane(scene: &Scene, g: usize, a: &Vec3, b: &Vec3) -> Option<Vec3> {
    let plane = &scene.groups[g];
    let (da, db) = (plane.signed_distance(a), plane.signed_distance(b));
    if da <= 1e-9 || db >= -1e-9 {
        return None;
    }
    Some(a + (b - a) * (da / (da - db)))
}

/// The leg from `from` toward `p` first meets plane `g` at `p` itself.
fn reaches_plane(scene: &Scene, g: usize, from: &Vec3, p: &Vec3) -> Option<usize> {
    let leg = p - from;
    let len = leg.norm();
    if len < 1e-9 {
        return None;
    }
    let tol = 1e-6 + 1e-9 * len;
    let hit = scene.trace_limited(from, &(leg / len), len + tol)?;
    (hit.distance >= len - tol && scene.triangles[hit.triangle].group == g).then_some(hit.triangle)
}

/// Paths with one reflection and one diffraction in either order.
pub(crate) fn mixed(scene: &Scene, tx: &Vec3, rx: &Vec3, candidates: &[usize]) -> Vec<Vec<Interaction>> {
    let mut out = Vec::new();
    for (g, plane) in scene.groups.iter().enumerate() {
        let tx_front = plane.signed_distance(tx) > 1e-9;
        let rx_front = plane.signed_distance(rx) > 1e-9;
        if !tx_front && !rx_front {
            continue;
        }
        for &ei in candidates {
            let e = &scene.edges[ei];
            // reflection first: diffract between the mirrored tx and rx
            if tx_front && in_exterior(e, rx) {
                let img = plane.mirror(tx);
                let fp = fermat_diffraction_point(&e.a, &e.b, &img, rx);
                if fp.is_valid() {
                    if let Some(pr) = cross_plane(scene, g, &fp.point, &img) {
                        if diffraction_ok(e, &fp.point, &pr, rx)
                            && !scene.occluded(&pr, &fp.point)
                            && !scene.occluded(&fp.point, rx)
                        {
                            if let Some(tri) = reaches_plane(scene, g, tx, &pr) {
                                out.push(vec![
                                    Interaction::Reflection {
                                        point: pr,
                                        triangle: tri,
                                        group: g,
                                    },
                                    Interaction::Diffraction { point: fp.point, edge: ei },
                                ]);
                            }
                        }
                    }
                }
            }
            // diffraction first: diffract between tx and the mirrored rx
            if rx_front {
                let img = plane.mirror(rx);
                let fp = fermat_diffraction_point(&e.a, &e.b, tx, &img);
                if fp.is_valid() {
                    if let Some(pr) = cross_plane(scene, g, &fp.point, &img) {
                        if diffraction_ok(e, &fp.point, tx, &pr)
                            && !scene.occluded(tx, &fp.point)
                            && !scene.occluded(&pr, rx)
                        {
                            if let Some(tri) = reaches_plane(scene, g, &fp.point, &pr) {
                                out.push(vec![
                                    Interaction::Diffraction { point: fp.point, edge: ei },
                                    Interaction::Reflection {
                                        point: pr,
                                        triangle: tri,
                                        group: g,
                                    },
                                ]);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}
