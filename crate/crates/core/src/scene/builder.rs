//! Programmatic construction of block-building scenes.

use std::collections::HashMap;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::io::{BoundaryFile, RectFile, SceneFile, ZonesFile};
use super::{Material, Rect, Scene};
use crate::error::{Error, Result};
use crate::geometry::{self, Vec2, Vec3};

/// Accumulates vertices and triangles for a scene file.
#[derive(Clone, Debug)]
pub struct SceneBuilder {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 4]>,
    materials: Vec<Material>,
    c1: Vec<Vec2>,
    c2: Rect,
    c3: Option<Vec<Vec2>>,
    interferers: Vec<Vec3>,
    streets: Vec<Vec<Vec2>>,
}

impl SceneBuilder {
    pub fn new(c2: Rect) -> SceneBuilder {
        SceneBuilder {
            vertices: Vec::new(),
            triangles: Vec::new(),
            materials: Vec::new(),
            c1: Vec::new(),
            c2,
            c3: None,
            interferers: Vec::new(),
            streets: Vec::new(),
        }
    }

    pub fn material(&mut self, m: Material) -> usize {
        if let Some(i) = self.materials.iter().position(|x| *x == m) {
            return i;
        }
        self.materials.push(m);
        self.materials.len() - 1
    }

    fn vertex(&mut self, p: Vec3) -> usize {
        self.vertices.push([p.x, p.y, p.z]);
        self.vertices.len() - 1
    }

    fn quad(&mut self, a: Vec3, b: Vec3, c: Vec3, d: Vec3, mat: usize) {
        let (ia, ib, ic, id) = (self.vertex(a), self.vertex(b), self.vertex(c), self.vertex(d));
        self.triangles.push([ia, ib, ic, mat]);
        self.triangles.push([ia, ic, id, mat]);
    }

    /// Horizontal rectangle facing up.
    pub fn ground(&mut self, lo: Vec2, hi: Vec2, z: f64, mat: usize) -> &mut Self {
        self.quad(
            Vec3::new(lo.x, lo.y, z),
            Vec3::new(hi.x, lo.y, z),
            Vec3::new(hi.x, hi.y, z),
            Vec3::new(lo.x, hi.y, z),
            mat,
        );
        self
    }

    /// Vertical walls along a closed contour. For a counter-clockwise contour
    /// the walls face outward.
    fn walls(&mut self, contour: &[Vec2], z0: f64, z1: f64, mat: usize) {
        let n = contour.len();
        for i in 0..n {
            let (a, b) = (contour[i], contour[(i + 1) % n]);
            self.quad(
                Vec3::new(a.x, a.y, z0),
                Vec3::new(b.x, b.y, z0),
                Vec3::new(b.x, b.y, z1),
                Vec3::new(a.x, a.y, z1),
                mat,
            );
        }
    }

    /// Extruded building with a flat roof and no floor. `holes` are open
    /// courtyards.
    pub fn building(&mut self, outer: &[Vec2], holes: &[Vec<Vec2>], z0: f64, z1: f64, mat: usize) -> Result<&mut Self> {
        let outer = ccw(outer);
        self.walls(&outer, z0, z1, mat);
        let holes: Vec<Vec<Vec2>> = holes.iter().map(|h| ccw(h)).collect();
        for h in &holes {
            let cw: Vec<Vec2> = h.iter().rev().copied().collect();
            self.walls(&cw, z0, z1, mat);
        }
        for [a, b, c] in triangulate_polygon(&outer, &holes)? {
            let (ia, ib, ic) = (
                self.vertex(Vec3::new(a.x, a.y, z1)),
                self.vertex(Vec3::new(b.x, b.y, z1)),
                self.vertex(Vec3::new(c.x, c.y, z1)),
            );
            self.triangles.push([ia, ib, ic, mat]);
        }
        Ok(self)
    }

    /// Axis-aligned box building without a floor.
    pub fn block(&mut self, lo: Vec2, hi: Vec2, height: f64, mat: usize) -> &mut Self {
        let outer = rect(lo, hi);
        self.building(&outer, &[], 0.0, height, mat)
            .expect("rectangles always triangulate");
        self
    }

    /// Closed axis-aligned box with all six faces pointing outward.
    pub fn closed_box(&mut self, lo: Vec3, hi: Vec3, mat: usize) -> &mut Self {
        let p = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
        let (a, b) = (lo, hi);
        self.quad(p(a.x, a.y, a.z), p(a.x, b.y, a.z), p(b.x, b.y, a.z), p(b.x, a.y, a.z), mat);
        self.quad(p(a.x, a.y, b.z), p(b.x, a.y, b.z), p(b.x, b.y, b.z), p(a.x, b.y, b.z), mat);
        self.quad(p(a.x, a.y, a.z), p(b.x, a.y, a.z), p(b.x, a.y, b.z), p(a.x, a.y, b.z), mat);
        self.quad(p(b.x, b.y, a.z), p(a.x, b.y, a.z), p(a.x, b.y, b.z), p(b.x, b.y, b.z), mat);
        self.quad(p(a.x, b.y, a.z), p(a.x, a.y, a.z), p(a.x, a.y, b.z), p(a.x, b.y, b.z), mat);
        self.quad(p(b.x, a.y, a.z), p(b.x, b.y, a.z), p(b.x, b.y, b.z), p(b.x, a.y, b.z), mat);
        self
    }

    /// Zero-thickness vertical screen from `a` to `b`, two-sided.
    pub fn screen(&mut self, a: Vec2, b: Vec2, z0: f64, z1: f64, mat: usize) -> &mut Self {
        let corners = [
            Vec3::new(a.x, a.y, z0),
            Vec3::new(b.x, b.y, z0),
            Vec3::new(b.x, b.y, z1),
            Vec3::new(a.x, a.y, z1),
        ];
        let ids: Vec<usize> = corners.iter().map(|c| self.vertex(*c)).collect();
        self.triangles.push([ids[0], ids[1], ids[2], mat]);
        self.triangles.push([ids[0], ids[2], ids[3], mat]);
        self.triangles.push([ids[0], ids[2], ids[1], mat]);
        self.triangles.push([ids[0], ids[3], ids[2], mat]);
        self
    }

    pub fn c1(&mut self, poly: Vec<Vec2>) -> &mut Self {
        self.c1 = poly;
        self
    }

    pub fn c3(&mut self, poly: Vec<Vec2>) -> &mut Self {
        self.c3 = Some(poly);
        self
    }

    pub fn interferer(&mut self, p: Vec3) -> &mut Self {
        self.interferers.push(p);
        self
    }

    pub fn street(&mut self, poly: Vec<Vec2>) -> &mut Self {
        self.streets.push(poly);
        self
    }

    pub fn to_file(&self) -> SceneFile {
        let p2 = |p: &Vec2| [p.x, p.y];
        SceneFile {
            vertices: self.vertices.clone(),
            triangles: self.triangles.clone(),
            materials: self.materials.clone(),
            boundaries: BoundaryFile {
                c1: self.c1.iter().map(p2).collect(),
                c2: RectFile {
                    origin: [self.c2.origin.x, self.c2.origin.y],
                    lx: self.c2.lx,
                    ly: self.c2.ly,
                },
                c3: self.c3.as_ref().map(|c| c.iter().map(p2).collect()),
            },
            interferers: self.interferers.iter().map(|p| [p.x, p.y, p.z]).collect(),
            zones: if self.streets.is_empty() {
                None
            } else {
                Some(ZonesFile {
                    streets: self.streets.iter().map(|s| s.iter().map(p2).collect()).collect(),
                })
            },
        }
    }

    pub fn build(&self) -> Result<Scene> {
        self.to_file().into_scene()
    }
}

pub fn rect(lo: Vec2, hi: Vec2) -> Vec<Vec2> {
    vec![lo, Vec2::new(hi.x, lo.y), hi, Vec2::new(lo.x, hi.y)]
}

fn ccw(poly: &[Vec2]) -> Vec<Vec2> {
    if geometry::signed_area2(poly) < 0.0 {
        poly.iter().rev().copied().collect()
    } else {
        poly.to_vec()
    }
}

/// Counter-clockwise triangles covering a polygon with holes, using a
/// constrained Delaunay triangulation of the contours.
fn triangulate_polygon(outer: &[Vec2], holes: &[Vec<Vec2>]) -> Result<Vec<[Vec2; 3]>> {
    let mut pts: Vec<Point2<f64>> = Vec::new();
    let mut constraints: Vec<[usize; 2]> = Vec::new();
    for ring in std::iter::once(outer).chain(holes.iter().map(|h| h.as_slice())) {
        let base = pts.len();
        pts.extend(ring.iter().map(|p| Point2::new(p.x, p.y)));
        for i in 0..ring.len() {
            constraints.push([base + i, base + (i + 1) % ring.len()]);
        }
    }
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(pts, constraints)
        .map_err(|e| Error::Validation(format!("roof triangulation failed: {e:?}")))?;
    let key = |p: &Point2<f64>| (p.x.to_bits(), p.y.to_bits());
    let mut lookup: HashMap<(u64, u64), Vec2> = HashMap::new();
    for p in outer.iter().chain(holes.iter().flatten()) {
        lookup.insert(key(&Point2::new(p.x, p.y)), *p);
    }
    let mut out = Vec::new();
    for face in cdt.inner_faces() {
        let ps = face.positions();
        let c = Vec2::new(
            (ps[0].x + ps[1].x + ps[2].x) / 3.0,
            (ps[0].y + ps[1].y + ps[2].y) / 3.0,
        );
        if !geometry::contains(c, outer) || holes.iter().any(|h| geometry::contains(c, h)) {
            continue;
        }
        let v = ps.map(|p| lookup.get(&key(&p)).copied().unwrap_or(Vec2::new(p.x, p.y)));
        let tri = if (v[1] - v[0]).perp(&(v[2] - v[0])) < 0.0 {
            [v[0], v[2], v[1]]
        } else {
            v
        };
        out.push(tri);
    }
    out.sort_by(|a, b| {
        let ka = [a[0].x, a[0].y, a[1].x, a[1].y, a[2].x, a[2].y];
        let kb = [b[0].x, b[0].y, b[1].x, b[1].y, b[2].x, b[2].y];
        ka.partial_cmp(&kb).unwrap()
    });
    Ok(out)
}
