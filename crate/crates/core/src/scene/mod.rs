//! Urban scene geometry: triangle mesh, materials, wedge edges, boundary
//! contours and ray queries.

pub mod bundled;
mod builder;
mod bvh;
mod edges;
mod io;

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use builder::{rect, SceneBuilder};
pub use edges::{Edge, EdgeStats};
pub use io::{load_scene, BoundaryFile, RectFile, SceneFile, ZonesFile};

use crate::error::{Error, Result};
use crate::geometry::{self, Vec2, Vec3};
use bvh::{Bvh, TriPrim};

/// Self-intersection guard for ray restarts and segment endpoints (m).
pub const EPS_RAY: f64 = 1e-4;

/// Electromagnetic properties of a surface. Permittivity and permeability are
/// relative, with negative imaginary parts for lossy media.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub eps_re: f64,
    pub eps_im: f64,
    #[serde(default = "one")]
    pub mu_re: f64,
    #[serde(default)]
    pub mu_im: f64,
    /// Perfect electric conductor; Fresnel coefficients become exactly ∓1.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub pec: bool,
}

fn one() -> f64 {
    1.0
}

impl Material {
    pub fn dielectric(eps_re: f64, eps_im: f64) -> Material {
        Material {
            eps_re,
            eps_im,
            mu_re: 1.0,
            mu_im: 0.0,
            pec: false,
        }
    }

    pub fn pec() -> Material {
        Material {
            pec: true,
            ..Material::dielectric(1.0, 0.0)
        }
    }

    /// Default building material (concrete-like).
    pub fn building() -> Material {
        Material::dielectric(5.0, -0.1)
    }

    /// Default ground material (moist soil).
    pub fn ground() -> Material {
        Material::dielectric(15.0, -0.5)
    }

    pub fn eps(&self) -> Complex64 {
        Complex64::new(self.eps_re, self.eps_im)
    }

    pub fn mu(&self) -> Complex64 {
        Complex64::new(self.mu_re, self.mu_im)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Triangle {
    pub v: [usize; 3],
    pub material: usize,
    pub normal: Vec3,
    /// Index of the plane (coplanar face group) this triangle belongs to.
    pub group: usize,
}

/// A plane shared by one or more coplanar triangles with the same facing.
#[derive(Clone, Debug, Serialize)]
pub struct FaceGroup {
    pub normal: Vec3,
    /// Plane offset, `normal · x = offset`.
    pub offset: f64,
    pub material: usize,
}

impl FaceGroup {
    pub fn mirror(&self, p: &Vec3) -> Vec3 {
        p - self.normal * (2.0 * (self.normal.dot(p) - self.offset))
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Axis-aligned target rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub origin: Vec2,
    pub lx: f64,
    pub ly: f64,
}

impl Rect {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.origin.x
            && p.y >= self.origin.y
            && p.x <= self.origin.x + self.lx
            && p.y <= self.origin.y + self.ly
    }
}

/// Deployment contour C1, target area C2 and convex search region C3.
#[derive(Clone, Debug, Serialize)]
pub struct Boundaries {
    pub c1: Vec<Vec2>,
    pub c2: Rect,
    pub c3: Vec<Vec2>,
}

/// Street polygons; everything else outside buildings counts as pedestrian
/// area.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Zones {
    pub streets: Vec<Vec<Vec2>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub point: Vec3,
    pub triangle: usize,
    pub normal: Vec3,
    pub distance: f64,
}

/// A validated, indexed scene. Immutable after construction.
#[derive(Clone, Debug)]
pub struct Scene {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<Triangle>,
    pub materials: Vec<Material>,
    pub groups: Vec<FaceGroup>,
    pub edges: Vec<Edge>,
    pub edge_stats: EdgeStats,
    pub boundaries: Boundaries,
    pub interferers: Vec<Vec3>,
    pub zones: Zones,
    prims: Vec<TriPrim>,
    bvh: Bvh,
}

impl Scene {
    /// Validate raw geometry and build edges, face groups and the BVH.
    /// A missing C3 defaults to the convex hull of C1.
    pub fn new(
        vertices: Vec<Vec3>,
        raw_triangles: Vec<[usize; 4]>,
        materials: Vec<Material>,
        c1: Vec<Vec2>,
        c2: Rect,
        c3: Option<Vec<Vec2>>,
        interferers: Vec<Vec3>,
        zones: Zones,
    ) -> Result<Scene> {
        for (i, v) in vertices.iter().enumerate() {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(Error::Validation(format!("vertex {i} is not finite")));
            }
        }
        for (i, m) in materials.iter().enumerate() {
            let finite = [m.eps_re, m.eps_im, m.mu_re, m.mu_im].iter().all(|x| x.is_finite());
            if !finite || (!m.pec && (m.eps_re < 1.0 || m.eps_im > 0.0 || m.mu_im > 0.0 || m.mu_re <= 0.0)) {
                return Err(Error::Validation(format!(
                    "material {i} is not a passive medium (need Re ε ≥ 1, Im ε ≤ 0, Im μ ≤ 0)"
                )));
            }
        }
        let mut triangles = Vec::with_capacity(raw_triangles.len());
        for (t, raw) in raw_triangles.iter().enumerate() {
            let [i, j, k, m] = *raw;
            for &idx in &[i, j, k] {
                if idx >= vertices.len() {
                    return Err(Error::Validation(format!(
                        "triangle {t} references vertex {idx}, only {} vertices",
                        vertices.len()
                    )));
                }
            }
            if m >= materials.len() {
                return Err(Error::Validation(format!(
                    "triangle {t} references material {m}, only {} materials",
                    materials.len()
                )));
            }
            let (a, b, c) = (vertices[i], vertices[j], vertices[k]);
            let cross = (b - a).cross(&(c - a));
            let scale = (b - a).norm() * (c - a).norm();
            if cross.norm() <= 1e-12 * scale || scale == 0.0 {
                return Err(Error::Validation(format!("triangle {t} is degenerate (zero area)")));
            }
            triangles.push(Triangle {
                v: [i, j, k],
                material: m,
                normal: cross.normalize(),
                group: 0,
            });
        }

        if c2.lx <= 0.0 || c2.ly <= 0.0 || !c2.lx.is_finite() || !c2.ly.is_finite() {
            return Err(Error::Validation("C2 must have positive Lx and Ly".into()));
        }
        if c1.len() < 3 {
            return Err(Error::Validation("C1 needs at least 3 vertices".into()));
        }
        let c3 = match c3 {
            Some(c3) => {
                if !geometry::is_convex(&c3) {
                    return Err(Error::Validation("C3 is not convex".into()));
                }
                c3
            }
            None => geometry::convex_hull(&c1),
        };
        for (i, p) in c1.iter().enumerate() {
            if !geometry::contains_or_on(*p, &c3, 1e-9) {
                return Err(Error::Validation(format!(
                    "C1 vertex {i} ({:.3}, {:.3}) lies outside C3",
                    p.x, p.y
                )));
            }
        }

        let groups = assign_groups(&vertices, &mut triangles);
        let (edges, edge_stats) = edges::extract(&vertices, &triangles);
        let prims: Vec<TriPrim> = triangles
            .iter()
            .map(|t| TriPrim::new(vertices[t.v[0]], vertices[t.v[1]], vertices[t.v[2]]))
            .collect();
        let bvh = Bvh::build(&prims);
        Ok(Scene {
            vertices,
            triangles,
            materials,
            groups,
            edges,
            edge_stats,
            boundaries: Boundaries { c1, c2, c3 },
            interferers,
            zones,
            prims,
            bvh,
        })
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn material_of(&self, triangle: usize) -> &Material {
        &self.materials[self.triangles[triangle].material]
    }

    /// Nearest intersection beyond the self-hit guard.
    pub fn trace(&self, origin: &Vec3, dir: &Vec3) -> Option<Hit> {
        self.trace_limited(origin, dir, f64::INFINITY)
    }

    pub fn trace_limited(&self, origin: &Vec3, dir: &Vec3, tmax: f64) -> Option<Hit> {
        self.bvh
            .closest(&self.prims, origin, dir, EPS_RAY, tmax)
            .map(|(t, d)| self.make_hit(origin, dir, t, d))
    }

    /// Same contract as [`Scene::trace`] using a linear scan over all triangles.
    pub fn trace_brute_force(&self, origin: &Vec3, dir: &Vec3) -> Option<Hit> {
        bvh::brute_closest(&self.prims, origin, dir, EPS_RAY, f64::INFINITY)
            .map(|(t, d)| self.make_hit(origin, dir, t, d))
    }

    fn make_hit(&self, origin: &Vec3, dir: &Vec3, t: usize, d: f64) -> Hit {
        Hit {
            point: origin + dir * d,
            triangle: t,
            normal: self.triangles[t].normal,
            distance: d,
        }
    }

    /// True iff some triangle cuts the open segment (a, b), excluding an
    /// `EPS_RAY` guard at both ends.
    pub fn occluded(&self, a: &Vec3, b: &Vec3) -> bool {
        let d = b - a;
        let len = d.norm();
        if len <= 2.0 * EPS_RAY {
            return false;
        }
        let dir = d / len;
        self.bvh.any(&self.prims, a, &dir, EPS_RAY, len - EPS_RAY)
    }

    /// True when `p` is enclosed by geometry: the first surface straight above
    /// is seen from its back side.
    pub fn is_indoor(&self, p: &Vec3) -> bool {
        let up = Vec3::z();
        match self.bvh.closest(&self.prims, p, &up, 0.0, f64::INFINITY) {
            Some((t, _)) => self.triangles[t].normal.z > 0.0,
            None => false,
        }
    }

    /// Vertical extent of the mesh, or (0, 0) for an empty scene.
    pub fn z_range(&self) -> (f64, f64) {
        if self.vertices.is_empty() {
            return (0.0, 0.0);
        }
        let lo = self.vertices.iter().map(|v| v.z).fold(f64::INFINITY, f64::min);
        let hi = self.vertices.iter().map(|v| v.z).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn in_street(&self, p: Vec2) -> bool {
        self.zones.streets.iter().any(|s| geometry::contains(p, s))
    }
}

fn assign_groups(vertices: &[Vec3], triangles: &mut [Triangle]) -> Vec<FaceGroup> {
    let q = |x: f64, s: f64| (x / s).round() as i64;
    let mut index: HashMap<(i64, i64, i64, i64, usize), usize> = HashMap::new();
    let mut groups = Vec::new();
    for tri in triangles.iter_mut() {
        let n = tri.normal;
        let offset = n.dot(&vertices[tri.v[0]]);
        let key = (q(n.x, 1e-6), q(n.y, 1e-6), q(n.z, 1e-6), q(offset, 1e-5), tri.material);
        let id = *index.entry(key).or_insert_with(|| {
            groups.push(FaceGroup {
                normal: n,
                offset,
                material: tri.material,
            });
            groups.len() - 1
        });
        tri.group = id;
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wall_x5() -> Scene {
        let v = vec![
            Vec3::new(5.0, -10.0, -10.0),
            Vec3::new(5.0, 10.0, -10.0),
            Vec3::new(5.0, 10.0, 10.0),
            Vec3::new(5.0, -10.0, 10.0),
        ];
        let sq = vec![
            Vec2::new(-1.0, -1.0),
            Vec2::new(1.0, -1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(-1.0, 1.0),
        ];
        Scene::new(
            v,
            vec![[0, 1, 2, 0], [0, 2, 3, 0]],
            vec![Material::building()],
            sq,
            Rect {
                origin: Vec2::new(-10.0, -10.0),
                lx: 20.0,
                ly: 20.0,
            },
            None,
            vec![],
            Zones::default(),
        )
        .unwrap()
    }

    #[test]
    fn axis_hit_and_escape() {
        let s = wall_x5();
        let h = s.trace(&Vec3::zeros(), &Vec3::x()).unwrap();
        assert!((h.distance - 5.0).abs() < 1e-12);
        assert!((h.point - Vec3::new(5.0, 0.0, 0.0)).norm() < 1e-12);
        assert!(s.trace(&Vec3::zeros(), &(-Vec3::x())).is_none());
        // grazing: parallel to the wall plane
        assert!(s.trace(&Vec3::new(5.0, -20.0, 0.0), &Vec3::y()).is_none());
    }

    #[test]
    fn occlusion_and_endpoint_guard() {
        let s = wall_x5();
        let a = Vec3::zeros();
        assert!(s.occluded(&a, &Vec3::new(10.0, 0.0, 0.0)));
        assert!(s.occluded(&Vec3::new(10.0, 0.0, 0.0), &a));
        assert!(!s.occluded(&a, &Vec3::new(5.0, 0.0, 0.0)));
    }

    #[test]
    fn coplanar_triangles_share_a_group() {
        let s = wall_x5();
        assert_eq!(s.groups.len(), 1);
        assert_eq!(s.triangles[0].group, s.triangles[1].group);
    }
}
