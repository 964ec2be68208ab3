//! Bounding volume hierarchy over the scene triangles.
//!
//! Nodes split at the centroid median of the widest axis. Everything is kept
//! in f64 so that hits match the brute-force scan exactly.

use crate::geometry::Vec3;

const LEAF_SIZE: usize = 4;

/// Precomputed triangle data for the Möller–Trumbore test.
#[derive(Clone, Debug)]
pub(crate) struct TriPrim {
    pub v0: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    det_eps: f64,
}

impl TriPrim {
    pub fn new(v0: Vec3, v1: Vec3, v2: Vec3) -> Self {
        let e1 = v1 - v0;
        let e2 = v2 - v0;
        TriPrim {
            v0,
            e1,
            e2,
            det_eps: 1e-12 * e1.norm() * e2.norm(),
        }
    }

    /// Ray parameter of the intersection, if any. Hits on shared edges are
    /// reported by both triangles; callers break ties by triangle id.
    #[inline]
    pub fn intersect(&self, o: &Vec3, d: &Vec3) -> Option<f64> {
        let p = d.cross(&self.e2);
        let det = self.e1.dot(&p);
        if det.abs() <= self.det_eps {
            return None;
        }
        let inv = 1.0 / det;
        let s = o - self.v0;
        let u = s.dot(&p) * inv;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let q = s.cross(&self.e1);
        let v = d.dot(&q) * inv;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        Some(self.e2.dot(&q) * inv)
    }

    fn bounds(&self) -> (Vec3, Vec3) {
        let v1 = self.v0 + self.e1;
        let v2 = self.v0 + self.e2;
        (self.v0.inf(&v1).inf(&v2), self.v0.sup(&v1).sup(&v2))
    }
}

#[derive(Clone, Debug)]
struct Node {
    lo: Vec3,
    hi: Vec3,
    /// Leaf: first index into `order`. Inner: index of the right child
    /// (the left child always follows its parent).
    index: u32,
    /// Number of triangles for leaves, zero for inner nodes.
    count: u32,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

/// Nearest hit as (triangle id, ray parameter).
pub(crate) type RawHit = (usize, f64);

impl Bvh {
    pub fn build(prims: &[TriPrim]) -> Bvh {
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * prims.len() / LEAF_SIZE + 1),
            order: (0..prims.len() as u32).collect(),
        };
        if prims.is_empty() {
            return bvh;
        }
        let boxes: Vec<(Vec3, Vec3)> = prims.iter().map(TriPrim::bounds).collect();
        let centers: Vec<Vec3> = boxes.iter().map(|(lo, hi)| (lo + hi) * 0.5).collect();
        let n = prims.len();
        bvh.build_node(&boxes, &centers, 0, n);
        bvh
    }

    fn build_node(&mut self, boxes: &[(Vec3, Vec3)], centers: &[Vec3], start: usize, end: usize) -> usize {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        let mut clo = lo;
        let mut chi = hi;
        for &t in &self.order[start..end] {
            let (a, b) = &boxes[t as usize];
            lo = lo.inf(a);
            hi = hi.sup(b);
            clo = clo.inf(&centers[t as usize]);
            chi = chi.sup(&centers[t as usize]);
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            index: start as u32,
            count: (end - start) as u32,
        });
        let extent = chi - clo;
        if end - start <= LEAF_SIZE || extent.max() <= 0.0 {
            return id;
        }
        let axis = extent.imax();
        let mid = start + (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centers[a as usize][axis]
                .total_cmp(&centers[b as usize][axis])
                .then(a.cmp(&b))
        });
        self.build_node(boxes, centers, start, mid);
        let right = self.build_node(boxes, centers, mid, end);
        self.nodes[id].index = right as u32;
        self.nodes[id].count = 0;
        id
    }

    /// Entry parameter of the ray into the box, if it overlaps [tmin, tmax].
    #[inline]
    fn slab(node: &Node, o: &Vec3, inv: &Vec3, tmin: f64, tmax: f64) -> Option<f64> {
        let mut t0 = tmin;
        let mut t1 = tmax;
        for k in 0..3 {
            if inv[k].is_infinite() {
                if o[k] < node.lo[k] || o[k] > node.hi[k] {
                    return None;
                }
                continue;
            }
            let a = (node.lo[k] - o[k]) * inv[k];
            let b = (node.hi[k] - o[k]) * inv[k];
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }

    pub fn closest(&self, prims: &[TriPrim], o: &Vec3, d: &Vec3, tmin: f64, tmax: f64) -> Option<RawHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);
        let mut best: Option<RawHit> = None;
        let mut limit = tmax;
        let mut stack: Vec<usize> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if Self::slab(node, o, &inv, tmin, limit).is_none() {
                continue;
            }
            if node.count > 0 {
                let s = node.index as usize;
                for &t in &self.order[s..s + node.count as usize] {
                    let t = t as usize;
                    if let Some(dist) = prims[t].intersect(o, d) {
                        if dist > tmin && dist <= limit {
                            let better = match best {
                                None => true,
                                Some((bt, bd)) => dist < bd || (dist == bd && t < bt),
                            };
                            if better {
                                best = Some((t, dist));
                                limit = dist;
                            }
                        }
                    }
                }
            } else {
                let left = id + 1;
                let right = node.index as usize;
                let tl = Self::slab(&self.nodes[left], o, &inv, tmin, limit);
                let tr = Self::slab(&self.nodes[right], o, &inv, tmin, limit);
                match (tl, tr) {
                    (Some(a), Some(b)) => {
                        if a <= b {
                            stack.push(right);
                            stack.push(left);
                        } else {
                            stack.push(left);
                            stack.push(right);
                        }
                    }
                    (Some(_), None) => stack.push(left),
                    (None, Some(_)) => stack.push(right),
                    (None, None) => {}
                }
            }
        }
        best
    }

    pub fn any(&self, prims: &[TriPrim], o: &Vec3, d: &Vec3, tmin: f64, tmax: f64) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let inv = Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);
        let mut stack: Vec<usize> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if Self::slab(node, o, &inv, tmin, tmax).is_none() {
                continue;
            }
            if node.count > 0 {
                let s = node.index as usize;
                for &t in &self.order[s..s + node.count as usize] {
                    if let Some(dist) = prims[t as usize].intersect(o, d) {
                        if dist > tmin && dist < tmax {
                            return true;
                        }
                    }
                }
            } else {
                stack.push(node.index as usize);
                stack.push(id + 1);
            }
        }
        false
    }
}

/// Linear scan reference used by tests and for tiny meshes.
pub(crate) fn brute_closest(prims: &[TriPrim], o: &Vec3, d: &Vec3, tmin: f64, tmax: f64) -> Option<RawHit> {
    let mut best: Option<RawHit> = None;
    for (t, p) in prims.iter().enumerate() {
        if let Some(dist) = p.intersect(o, d) {
            if dist > tmin && dist <= tmax && best.is_none_or(|(_, bd)| dist < bd) {
                best = Some((t, dist));
            }
        }
    }
    best
}
