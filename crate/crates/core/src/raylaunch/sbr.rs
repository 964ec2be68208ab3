//! Shoot-and-bounce ray launching with receiver-sphere capture, least-time
//! deduplication and image-method reconstruction of reflection paths.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::directions::DirectionSet;
use super::LaunchConfig;
use crate::geometry::{Vec2, Vec3};
use crate::scene::Scene;

/// A launched ray that entered a receiver sphere: the planes it bounced off
/// (face-group ids), the triangles it actually hit and its length up to the
/// closest approach to the receiver.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitChain {
    pub groups: Vec<u32>,
    pub triangles: Vec<u32>,
    pub length: f64,
}

impl HitChain {
    pub fn reflections(&self) -> usize {
        self.groups.len()
    }
}

const CHUNK: usize = 4096;

/// Uniform xy bucket grid over receiver positions.
struct RxGrid {
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
    z_lo: f64,
    z_hi: f64,
    center: Vec3,
    half_diag: f64,
}

impl RxGrid {
    fn new(rx: &[Vec3]) -> RxGrid {
        let (mut lo, mut hi) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
        for p in rx {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
        let cell = (extent / (rx.len() as f64).sqrt().max(1.0)).max(0.5);
        let nx = ((hi.x - lo.x) / cell).floor() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        let origin = Vec2::new(lo.x, lo.y);
        for (i, p) in rx.iter().enumerate() {
            let cx = (((p.x - origin.x) / cell) as usize).min(nx - 1);
            let cy = (((p.y - origin.y) / cell) as usize).min(ny - 1);
            buckets[cy * nx + cx].push(i as u32);
        }
        RxGrid {
            origin,
            cell,
            nx,
            ny,
            buckets,
            z_lo: lo.z,
            z_hi: hi.z,
            center: (lo + hi) / 2.0,
            half_diag: (hi - lo).norm() / 2.0,
        }
    }

    fn farthest(&self, p: &Vec3) -> f64 {
        (p - self.center).norm() + self.half_diag
    }

    fn cell_range(&self, lo: f64, hi: f64, origin: f64, n: usize) -> Option<(usize, usize)> {
        let a = ((lo - origin) / self.cell).floor();
        let b = ((hi - origin) / self.cell).floor();
        if b < 0.0 || a >= n as f64 {
            return None;
        }
        Some((a.max(0.0) as usize, (b as usize).min(n - 1)))
    }
}

struct Capture {
    rx: u32,
    chain: HitChain,
}

/// Walk one ray through its bounces and record receiver captures.
#[allow(clippy::too_many_arguments)]
fn trace_ray(
    scene: &Scene,
    tx: &Vec3,
    dir: Vec3,
    rx: &[Vec3],
    grid: &RxGrid,
    config: &LaunchConfig,
    spacing: f64,
    out: &mut Vec<Capture>,
) {
    let mut origin = *tx;
    let mut d = dir;
    let mut s0 = 0.0;
    let mut groups: Vec<u32> = Vec::new();
    let mut tris: Vec<u32> = Vec::new();
    loop {
        let hit = scene.trace(&origin, &d);
        let seg_len = hit.map_or(f64::INFINITY, |h| h.distance);
        capture_segment(&origin, &d, seg_len, s0, rx, grid, config, spacing, &groups, &tris, out);
        let Some(h) = hit else { break };
        if groups.len() >= config.max_reflections {
            break;
        }
        let tri = &scene.triangles[h.triangle];
        let n = tri.normal;
        d = (d - n * (2.0 * d.dot(&n))).normalize();
        origin = h.point;
        s0 += h.distance;
        groups.push(tri.group as u32);
        tris.push(h.triangle as u32);
    }
}

#[allow(clippy::too_many_arguments)]
fn capture_segment(
    o: &Vec3,
    d: &Vec3,
    len: f64,
    s0: f64,
    rx: &[Vec3],
    grid: &RxGrid,
    config: &LaunchConfig,
    spacing: f64,
    groups: &[u32],
    tris: &[u32],
    out: &mut Vec<Capture>,
) {
    // an escaping ray cannot approach any receiver beyond this distance
    let horizon = if len.is_finite() { len } else { grid.farthest(o) + 1.0 };
    let r_max = config.rx_radius.max((s0 + horizon) * spacing);
    let (z_lo, z_hi) = (grid.z_lo - r_max, grid.z_hi + r_max);
    let (mut t0, mut t1) = (0.0f64, horizon);
    if d.z.abs() < 1e-12 {
        if o.z < z_lo || o.z > z_hi {
            return;
        }
    } else {
        let ta = (z_lo - o.z) / d.z;
        let tb = (z_hi - o.z) / d.z;
        t0 = t0.max(ta.min(tb));
        t1 = t1.min(ta.max(tb));
        if t0 > t1 {
            return;
        }
    }
    let p0 = o + d * t0;
    let p1 = o + d * t1;
    let Some((cx0, cx1)) = grid.cell_range(p0.x.min(p1.x) - r_max, p0.x.max(p1.x) + r_max, grid.origin.x, grid.nx) else {
        return;
    };
    let Some((cy0, cy1)) = grid.cell_range(p0.y.min(p1.y) - r_max, p0.y.max(p1.y) + r_max, grid.origin.y, grid.ny) else {
        return;
    };
    for cy in cy0..=cy1 {
        for cx in cx0..=cx1 {
            for &i in &grid.buckets[cy * grid.nx + cx] {
                let p = rx[i as usize];
                let t = (p - o).dot(d).clamp(0.0, horizon);
                let dist = (o + d * t - p).norm();
                let s = s0 + t;
                if dist <= config.rx_radius.max(s * spacing) {
                    out.push(Capture {
                        rx: i,
                        chain: HitChain {
                            groups: groups.to_vec(),
                            triangles: tris.to_vec(),
                            length: s,
                        },
                    });
                }
            }
        }
    }
}

/// Launch `config.m_dim` rays from `tx` and return, per receiver, every
/// captured chain (not deduplicated). Order is deterministic.
pub fn shoot_many(scene: &Scene, tx: &Vec3, rx: &[Vec3], config: &LaunchConfig) -> Vec<Vec<HitChain>> {
    let mut out: Vec<Vec<HitChain>> = vec![Vec::new(); rx.len()];
    if rx.is_empty() || config.m_dim == 0 {
        return out;
    }
    let grid = RxGrid::new(rx);
    let dirs = DirectionSet::new(config.m_dim, config.seed);
    let spacing = dirs.spacing();
    let n_chunks = config.m_dim.div_ceil(CHUNK);
    let captured: Vec<Vec<Capture>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut local = Vec::new();
            let end = ((c + 1) * CHUNK).min(config.m_dim);
            for i in c * CHUNK..end {
                trace_ray(scene, tx, dirs.get(i), rx, &grid, config, spacing, &mut local);
            }
            local
        })
        .collect();
    for cap in captured.into_iter().flatten() {
        out[cap.rx as usize].push(cap.chain);
    }
    out
}

/// Single-receiver form of [`shoot_many`].
pub fn shoot(scene: &Scene, tx: &Vec3, rx: &Vec3, config: &LaunchConfig) -> Vec<HitChain> {
    shoot_many(scene, tx, std::slice::from_ref(rx), config).pop().unwrap_or_default()
}

/// Keep the shortest chain of every distinct plane sequence, ordered by
/// sequence.
pub fn dedupe_least_time(chains: &[HitChain]) -> Vec<HitChain> {
    let mut best: BTreeMap<&[u32], &HitChain> = BTreeMap::new();
    for c in chains {
        best.entry(&c.groups)
            .and_modify(|b| {
                if c.length < b.length {
                    *b = c;
                }
            })
            .or_insert(c);
    }
    best.into_values().cloned().collect()
}

/// Exact reflection points for the plane sequence `groups` by the image
/// method, validated against the scene: every leg must reach its plane on
/// an actual triangle of that plane from the front side without occlusion.
/// Returns (point, triangle) per reflection.
pub fn reconstruct_reflections(scene: &Scene, tx: &Vec3, rx: &Vec3, groups: &[u32]) -> Option<Vec<(Vec3, usize)>> {
    let mut images = Vec::with_capacity(groups.len() + 1);
    images.push(*tx);
    for &g in groups {
        let img = scene.groups[g as usize].mirror(images.last().unwrap());
        images.push(img);
    }
    let mut points = vec![Vec3::zeros(); groups.len()];
    let mut target = *rx;
    for i in (0..groups.len()).rev() {
        let plane = &scene.groups[groups[i] as usize];
        let dt = plane.signed_distance(&target);
        let di = plane.signed_distance(&images[i + 1]);
        if dt <= 1e-9 || di >= -1e-9 {
            return None;
        }
        let p = target + (images[i + 1] - target) * (dt / (dt - di));
        points[i] = p;
        target = p;
    }
    let mut out = Vec::with_capacity(groups.len());
    let mut prev = *tx;
    for (i, p) in points.iter().enumerate() {
        let plane = &scene.groups[groups[i] as usize];
        if plane.signed_distance(&prev) <= 1e-9 {
            return None;
        }
        let leg = p - prev;
        let len = leg.norm();
        if len < 1e-9 {
            return None;
        }
        let dir = leg / len;
        let tol = 1e-6 + 1e-9 * len;
        let hit = scene.trace_limited(&prev, &dir, len + tol)?;
        if hit.distance < len - tol || scene.triangles[hit.triangle].group != groups[i] as usize {
            return None;
        }
        out.push((*p, hit.triangle));
        prev = *p;
    }
    if scene.occluded(&prev, rx) {
        return None;
    }
    Some(out)
}
