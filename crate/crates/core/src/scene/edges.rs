//! Wedge edge extraction from the triangle mesh.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use super::Triangle;
use crate::geometry::Vec3;

/// A diffracting wedge edge between two faces.
///
/// The local frame follows the usual wedge convention: face A is the 0-face,
/// `t_a` points from the edge into face A, `n_a` is its outward normal and
/// `dir = t_a × n_a`. Exterior angles run from 0 on face A to `n·π` on face B.
#[derive(Clone, Debug, Serialize)]
pub struct Edge {
    pub a: Vec3,
    pub b: Vec3,
    pub dir: Vec3,
    pub face_a: usize,
    pub face_b: usize,
    pub n_a: Vec3,
    pub n_b: Vec3,
    pub t_a: Vec3,
    pub t_b: Vec3,
    /// Wedge exterior parameter, n = 2 − interior/π.
    pub n: f64,
    pub material_a: usize,
    pub material_b: usize,
}

impl Edge {
    pub fn point(&self, t: f64) -> Vec3 {
        self.a + (self.b - self.a) * t
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn midpoint(&self) -> Vec3 {
        self.point(0.5)
    }

    /// Exterior angle of the direction from the edge point `p` toward `q`,
    /// measured in the plane perpendicular to the edge. Returns `None` when
    /// `q` lies on the edge line.
    pub fn exterior_angle(&self, p: &Vec3, q: &Vec3) -> Option<f64> {
        let r = q - p;
        let r_perp = r - self.dir * r.dot(&self.dir);
        if r_perp.norm() < 1e-12 * r.norm().max(1e-300) {
            return None;
        }
        let phi = r_perp.dot(&self.n_a).atan2(r_perp.dot(&self.t_a));
        Some(if phi < 0.0 { phi + 2.0 * PI } else { phi })
    }

    /// True when `q` lies strictly in the exterior (air) region of the wedge,
    /// judged from the edge midpoint.
    pub fn sees(&self, q: &Vec3, margin: f64) -> bool {
        match self.exterior_angle(&self.midpoint(), q) {
            Some(phi) => phi > margin && phi < self.n * PI - margin,
            None => false,
        }
    }
}

/// Counts from the edge extraction pass.
#[derive(Clone, Debug, Default, Serialize)]
pub struct EdgeStats {
    /// Unique geometric edges in the mesh, after vertex welding.
    pub unique: usize,
    /// Edges shared by exactly two faces.
    pub manifold: usize,
    /// Diffracting wedges kept (1 < n ≤ 2).
    pub wedges: usize,
}

const WELD: f64 = 1e-6;

fn weld_key(v: &Vec3) -> (i64, i64, i64) {
    (
        (v.x / WELD).round() as i64,
        (v.y / WELD).round() as i64,
        (v.z / WELD).round() as i64,
    )
}

/// Extract wedge edges. Returns the kept edges and extraction statistics.
pub(crate) fn extract(vertices: &[Vec3], triangles: &[Triangle]) -> (Vec<Edge>, EdgeStats) {
    let mut weld: BTreeMap<(i64, i64, i64), usize> = BTreeMap::new();
    let canon: Vec<usize> = vertices
        .iter()
        .enumerate()
        .map(|(i, v)| *weld.entry(weld_key(v)).or_insert(i))
        .collect();

    // edge key -> list of (triangle, apex vertex)
    let mut map: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        let c = [canon[tri.v[0]], canon[tri.v[1]], canon[tri.v[2]]];
        for k in 0..3 {
            let (i, j, apex) = (c[k], c[(k + 1) % 3], c[(k + 2) % 3]);
            let key = (i.min(j), i.max(j));
            map.entry(key).or_default().push((t, apex));
        }
    }

    let mut stats = EdgeStats {
        unique: map.len(),
        ..Default::default()
    };
    let mut edges = Vec::new();
    for ((i, j), faces) in &map {
        if faces.len() != 2 {
            continue;
        }
        stats.manifold += 1;
        let (pa, pb) = (vertices[*i], vertices[*j]);
        let axis = (pb - pa).normalize();
        let in_face = |apex: usize| {
            let w = vertices[apex] - pa;
            (w - axis * w.dot(&axis)).normalize()
        };
        let (fa, apex_a) = faces[0];
        let (fb, apex_b) = faces[1];
        let (n_a, n_b) = (triangles[fa].normal, triangles[fb].normal);
        let (t_a, t_b) = (in_face(apex_a), in_face(apex_b));
        let cos = t_a.dot(&t_b).clamp(-1.0, 1.0);
        let open = cos.acos();
        // a zero-thickness screen has coincident in-face directions
        let convex = open < 1e-9 || n_a.dot(&t_b) < 0.0;
        let interior = if convex { open } else { 2.0 * PI - open };
        let n = 2.0 - interior / PI;
        if !(n > 1.0 + 1e-9 && n <= 2.0 + 1e-12) {
            continue;
        }
        let dir = t_a.cross(&n_a).normalize();
        edges.push(Edge {
            a: pa,
            b: pb,
            dir,
            face_a: fa,
            face_b: fb,
            n_a,
            n_b,
            t_a,
            t_b,
            n: n.min(2.0),
            material_a: triangles[fa].material,
            material_b: triangles[fb].material,
        });
    }
    stats.wedges = edges.len();
    (edges, stats)
}
