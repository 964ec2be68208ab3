//! Adaptive grid refinement of unit-EIRP exposure and received-power maps
//! over the target area, with piecewise-linear interpolation to the finest
//! grid.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use spade::{DelaunayTriangulation, FloatTriangulation, HasPosition, Point2, Triangulation};

use crate::channel::{beamformed_unit, ArraySpec, BeamformedSample};
use crate::emfield::AntennaSpec;
use crate::error::{config, Error, Result};
use crate::geometry::{Vec2, Vec3};
use crate::raylaunch::Tracer;
use crate::scene::{Rect, Scene};
use crate::units::{field_dbuvm_floored, from_db, power_db_floored};

/// Lattice coordinates in units of the finest grid length.
pub type Cell = (i64, i64);

/// Grid over the target rectangle. Every sample sits on the centre of a
/// finest-lattice cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub g0: f64,
    pub g1: f64,
    /// Sample height (m).
    pub z: f64,
    pub origin: Vec2,
    pub lx: f64,
    pub ly: f64,
}

impl GridSpec {
    pub fn new(c2: &Rect, g0: f64, g1: f64, z: f64) -> Result<GridSpec> {
        if !(g0 > 0.0) || !g0.is_finite() {
            return Err(config("g0", "must be positive"));
        }
        if g1 < g0 {
            return Err(config("g1", "must be at least g0"));
        }
        let ratio = g1 / g0;
        let k = ratio.log2().round();
        if (ratio - 2f64.powf(k)).abs() > 1e-9 * ratio {
            return Err(config("g1", format!("g1/g0 = {ratio} is not a power of two")));
        }
        Ok(GridSpec {
            g0,
            g1,
            z,
            origin: c2.origin,
            lx: c2.lx,
            ly: c2.ly,
        })
    }

    /// g1/g0 as a lattice stride.
    pub fn stride(&self) -> i64 {
        (self.g1 / self.g0).round() as i64
    }

    /// Number of refinement levels below the initial grid.
    pub fn levels(&self) -> u32 {
        self.stride().trailing_zeros()
    }

    pub fn cols(&self) -> usize {
        ((self.lx / self.g0) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn rows(&self) -> usize {
        ((self.ly / self.g0) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn len(&self) -> usize {
        self.cols() * self.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, c: Cell) -> usize {
        c.1 as usize * self.cols() + c.0 as usize
    }

    pub fn cell(&self, idx: usize) -> Cell {
        ((idx % self.cols()) as i64, (idx / self.cols()) as i64)
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.0 >= 0 && c.1 >= 0 && (c.0 as usize) < self.cols() && (c.1 as usize) < self.rows()
    }

    /// Centre of a lattice cell at the sample height.
    pub fn position(&self, c: Cell) -> Vec3 {
        Vec3::new(
            self.origin.x + (c.0 as f64 + 0.5) * self.g0,
            self.origin.y + (c.1 as f64 + 0.5) * self.g0,
            self.z,
        )
    }

    /// Nearest cell centre to a horizontal position, clamped to the grid.
    pub fn nearest(&self, p: Vec2) -> Cell {
        let f = |v: f64, o: f64, n: usize| (((v - o) / self.g0).floor() as i64).clamp(0, n as i64 - 1);
        (f(p.x, self.origin.x, self.cols()), f(p.y, self.origin.y, self.rows()))
    }

    /// Uniform sampling with the given lattice stride: cell I·stride +
    /// ⌊stride/2⌋ along each axis, ⌈L/(stride·g0)⌉ points per axis.
    pub fn uniform_cells(&self, stride: i64) -> Vec<Cell> {
        let stride = stride.max(1);
        let n = |len: f64, cells: usize| -> Vec<i64> {
            let count = ((len / (stride as f64 * self.g0)) - 1e-9).ceil().max(1.0) as i64;
            let mut v: Vec<i64> = (0..count).map(|i| (i * stride + stride / 2).min(cells as i64 - 1)).collect();
            v.dedup();
            v
        };
        let xs = n(self.lx, self.cols());
        let ys = n(self.ly, self.rows());
        ys.iter().flat_map(|&j| xs.iter().map(move |&i| (i, j))).collect()
    }
}

/// Cells excluded from sampling (building interiors at the sample height).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mask {
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn none(grid: &GridSpec) -> Mask {
        Mask {
            bits: vec![false; grid.len()],
        }
    }

    pub fn from_scene(scene: &Scene, grid: &GridSpec) -> Mask {
        use rayon::prelude::*;
        Mask {
            bits: (0..grid.len())
                .into_par_iter()
                .map(|i| scene.is_indoor(&grid.position(grid.cell(i))))
                .collect(),
        }
    }

    pub fn is_masked(&self, grid: &GridSpec, c: Cell) -> bool {
        !grid.contains(c) || self.bits[grid.index(c)]
    }

    pub fn unmasked(&self) -> usize {
        self.bits.iter().filter(|b| !**b).count()
    }
}

/// Unit-EIRP evaluation of a batch of receiver positions.
pub trait Sampler {
    fn sample(&self, points: &[Vec3]) -> Vec<BeamformedSample>;
}

impl<F: Fn(&[Vec3]) -> Vec<BeamformedSample>> Sampler for F {
    fn sample(&self, points: &[Vec3]) -> Vec<BeamformedSample> {
        self(points)
    }
}

/// Ray-launched, MRT-beamformed sampler for one transmitter.
pub struct RaySampler<'a> {
    pub tracer: &'a Tracer<'a>,
    pub tx: AntennaSpec,
    pub rx: AntennaSpec,
    pub array: ArraySpec,
}

impl Sampler for RaySampler<'_> {
    fn sample(&self, points: &[Vec3]) -> Vec<BeamformedSample> {
        use rayon::prelude::*;
        let all = self.tracer.paths_many(&self.tx, &self.rx, points, 1.0 / self.tx.gain);
        let carrier = *self.tracer.carrier();
        all.par_iter()
            .zip(points.par_iter())
            .map(|(paths, p)| {
                let rx = AntennaSpec {
                    position: *p,
                    ..self.rx.clone()
                };
                beamformed_unit(paths, &self.tx, &rx, &carrier, &self.array)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    /// Received power (W) for unit EIRP.
    pub power: f64,
    pub field_dbuvm: f64,
    pub level: u32,
}

impl Sample {
    pub fn power_db(&self) -> f64 {
        power_db_floored(self.power)
    }
}

/// Simulated samples only; interpolation output lives in [`Raster`].
#[derive(Clone, Debug, Serialize)]
pub struct SampleMap {
    pub grid: GridSpec,
    pub samples: BTreeMap<Cell, Sample>,
    /// Number of samples simulated per level, starting at level 1.
    pub per_level: Vec<usize>,
}

impl SampleMap {
    pub fn sims(&self) -> usize {
        self.samples.len()
    }
}

fn simulate(grid: &GridSpec, cells: &[Cell], level: u32, sampler: &dyn Sampler, out: &mut SampleMap) {
    let pts: Vec<Vec3> = cells.iter().map(|c| grid.position(*c)).collect();
    let res = sampler.sample(&pts);
    for (c, s) in cells.iter().zip(res) {
        out.samples.insert(
            *c,
            Sample {
                power: s.power,
                field_dbuvm: field_dbuvm_floored(s.field),
                level,
            },
        );
    }
    out.per_level.push(cells.len());
}

/// Level-1 samples on the g1 lattice, skipping masked cells.
pub fn build_initial(grid: &GridSpec, mask: &Mask, sampler: &dyn Sampler) -> SampleMap {
    let cells: Vec<Cell> = grid
        .uniform_cells(grid.stride())
        .into_iter()
        .filter(|c| !mask.is_masked(grid, *c))
        .collect();
    let mut map = SampleMap {
        grid: grid.clone(),
        samples: BTreeMap::new(),
        per_level: Vec::new(),
    };
    simulate(grid, &cells, 1, sampler, &mut map);
    map
}

/// Midpoints proposed for level `level + 1`: for every level-`level` sample
/// and each existing sample at the level spacing along ±x/±y whose received
/// power differs by more than `delta_db`, the lattice midpoint between them.
pub fn proposals(map: &SampleMap, mask: &Mask, level: u32, delta_db: f64) -> BTreeSet<Cell> {
    let grid = &map.grid;
    let spacing = grid.stride() >> (level - 1);
    let mut out = BTreeSet::new();
    if spacing < 2 {
        return out;
    }
    let half = spacing / 2;
    for (&c, s) in map.samples.iter().filter(|(_, s)| s.level == level) {
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let nb = (c.0 + dx * spacing, c.1 + dy * spacing);
            let Some(t) = map.samples.get(&nb) else { continue };
            if (s.power_db() - t.power_db()).abs() > delta_db {
                let mid = (c.0 + dx * half, c.1 + dy * half);
                if !mask.is_masked(grid, mid) && !map.samples.contains_key(&mid) {
                    out.insert(mid);
                }
            }
        }
    }
    out
}

/// One refinement pass: simulate the proposals of `level` as level
/// `level + 1`. Returns how many were added.
pub fn refine(map: &mut SampleMap, mask: &Mask, level: u32, delta_db: f64, sampler: &dyn Sampler) -> usize {
    let cells: Vec<Cell> = proposals(map, mask, level, delta_db).into_iter().collect();
    if cells.is_empty() {
        return 0;
    }
    let grid = map.grid.clone();
    simulate(&grid, &cells, level + 1, sampler, map);
    cells.len()
}

/// Full adaptive refinement: initial grid, then halve the spacing until g0
/// is reached or nothing more is inserted.
pub fn adaptive_map(grid: &GridSpec, mask: &Mask, delta_db: f64, sampler: &dyn Sampler) -> SampleMap {
    let mut map = build_initial(grid, mask, sampler);
    for level in 1..=grid.levels() {
        if refine(&mut map, mask, level, delta_db, sampler) == 0 {
            break;
        }
    }
    map
}

/// Every unmasked cell on a uniform lattice of the given stride.
pub fn uniform_map(grid: &GridSpec, mask: &Mask, stride: i64, sampler: &dyn Sampler) -> SampleMap {
    let cells: Vec<Cell> = grid
        .uniform_cells(stride)
        .into_iter()
        .filter(|c| !mask.is_masked(grid, *c))
        .collect();
    let mut map = SampleMap {
        grid: grid.clone(),
        samples: BTreeMap::new(),
        per_level: Vec::new(),
    };
    simulate(grid, &cells, 1, sampler, &mut map);
    map
}

/// Dense finest-grid rasters. Masked cells hold NaN.
#[derive(Clone, Debug, Serialize)]
pub struct Raster {
    pub grid: GridSpec,
    pub cols: usize,
    pub rows: usize,
    /// Received power (W) for unit EIRP, row-major (y outer).
    pub power: Vec<f64>,
    pub field_dbuvm: Vec<f64>,
    pub mask: Vec<bool>,
    /// Simulations that produced this raster.
    pub sims: usize,
    /// Cells filled by nearest-neighbour because they fell outside the
    /// triangulation.
    pub fallback: usize,
}

impl Raster {
    pub fn power_db(&self, idx: usize) -> f64 {
        power_db_floored(self.power[idx])
    }

    pub fn unmasked(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.mask.len()).filter(|&i| !self.mask[i])
    }
}

struct Node {
    pos: Point2<f64>,
    p_db: f64,
    e_db: f64,
}

impl HasPosition for Node {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

/// Piecewise-linear interpolation (in dB) of the samples onto every
/// unmasked finest-grid cell. Simulated cells are copied exactly.
pub fn interpolate(map: &SampleMap, mask: &Mask) -> Result<Raster> {
    if map.samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let grid = &map.grid;
    let mut tri: DelaunayTriangulation<Node> = DelaunayTriangulation::new();
    for (c, s) in &map.samples {
        tri.insert(Node {
            pos: Point2::new(c.0 as f64, c.1 as f64),
            p_db: s.power_db(),
            e_db: s.field_dbuvm,
        })
        .map_err(|e| Error::Domain(format!("triangulation: {e:?}")))?;
    }
    let n = grid.len();
    let mut power = vec![f64::NAN; n];
    let mut field = vec![f64::NAN; n];
    let mut fallback = 0;
    let bary = tri.barycentric();
    for idx in 0..n {
        if mask.bits[idx] {
            continue;
        }
        let c = grid.cell(idx);
        if let Some(s) = map.samples.get(&c) {
            power[idx] = s.power;
            field[idx] = s.field_dbuvm;
            continue;
        }
        let q = Point2::new(c.0 as f64, c.1 as f64);
        let p = bary.interpolate(|v| v.data().p_db, q);
        let e = bary.interpolate(|v| v.data().e_db, q);
        let (p_db, e_db) = match (p, e) {
            (Some(p), Some(e)) => (p, e),
            _ => {
                fallback += 1;
                let v = tri.nearest_neighbor(q).expect("non-empty triangulation");
                (v.data().p_db, v.data().e_db)
            }
        };
        power[idx] = from_db(p_db);
        field[idx] = e_db;
    }
    Ok(Raster {
        grid: grid.clone(),
        cols: grid.cols(),
        rows: grid.rows(),
        power,
        field_dbuvm: field,
        mask: mask.bits.clone(),
        sims: map.sims(),
        fallback,
    })
}

/// Deviation of a raster from a reference in exposure (dBµV/m) over cells
/// unmasked in both.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Accuracy {
    /// Mean absolute difference (dB).
    pub eta: f64,
    /// Standard deviation of the difference (dB).
    pub sigma: f64,
    pub sims: usize,
}

pub fn accuracy_report(raster: &Raster, reference: &Raster) -> Result<Accuracy> {
    if raster.cols != reference.cols || raster.rows != reference.rows {
        return Err(Error::ShapeMismatch(format!(
            "{}×{} vs {}×{}",
            raster.cols, raster.rows, reference.cols, reference.rows
        )));
    }
    let d: Vec<f64> = (0..raster.mask.len())
        .filter(|&i| !raster.mask[i] && !reference.mask[i])
        .map(|i| raster.field_dbuvm[i] - reference.field_dbuvm[i])
        .collect();
    if d.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let eta = d.iter().map(|x| x.abs()).sum::<f64>() / n;
    let sigma = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Accuracy {
        eta,
        sigma,
        sims: raster.sims,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lx: f64, ly: f64, g0: f64, g1: f64) -> GridSpec {
        GridSpec::new(
            &Rect {
                origin: Vec2::new(0.0, 0.0),
                lx,
                ly,
            },
            g0,
            g1,
            1.5,
        )
        .unwrap()
    }

    /// Synthetic field: power in dB and exposure given as functions of (x, y).
    fn synthetic(f: impl Fn(f64, f64) -> f64 + Sync) -> impl Fn(&[Vec3]) -> Vec<BeamformedSample> {
        move |pts: &[Vec3]| {
            pts.iter()
                .map(|p| {
                    let db = f(p.x, p.y);
                    BeamformedSample {
                        power: from_db(db),
                        field: crate::units::dbuvm_to_vm(db + 200.0),
                    }
                })
                .collect()
        }
    }

    #[test]
    fn grid_counts_and_power_of_two_check() {
        let g = grid(100.0, 50.0, 1.25, 10.0);
        assert_eq!(g.uniform_cells(g.stride()).len(), 50);
        assert_eq!((g.cols(), g.rows()), (80, 40));
        assert_eq!(g.levels(), 3);
        let c2 = Rect {
            origin: Vec2::zeros(),
            lx: 10.0,
            ly: 10.0,
        };
        assert!(GridSpec::new(&c2, 1.25, 3.75, 1.5).is_err());
        assert!(GridSpec::new(&c2, 1.25, 1.0, 1.5).is_err());
        assert_eq!(g.uniform_cells(3).len(), 27 * 14);
    }

    #[test]
    fn smooth_field_needs_no_refinement() {
        let g = grid(100.0, 50.0, 1.25, 10.0);
        let s = synthetic(|x, y| -60.0 - 0.1 * x + 0.05 * y);
        let map = adaptive_map(&g, &Mask::none(&g), 5.0, &s);
        assert_eq!(map.sims(), 50);
    }

    #[test]
    fn step_triggers_midpoint_insertion() {
        let g = grid(20.0, 10.0, 1.25, 10.0);
        let s = synthetic(|x, _| if x < 10.0 { -60.0 } else { -70.0 });
        let mask = Mask::none(&g);
        let map = build_initial(&g, &mask, &s);
        let props = proposals(&map, &mask, 1, 5.0);
        assert_eq!(props.len(), 1);
        let mid = *props.iter().next().unwrap();
        assert_eq!(mid, (8, 4));
        // the bisection runs down to g0: 10 → 5 → 2.5 → 1.25
        let map = adaptive_map(&g, &mask, 5.0, &s);
        assert_eq!(map.per_level, vec![2, 1, 1, 1]);
        assert!(map.samples.values().map(|s| s.level).max() == Some(4));
    }

    #[test]
    fn raising_threshold_never_adds_points() {
        let g = grid(80.0, 80.0, 1.25, 10.0);
        let s = synthetic(|x, y| -50.0 - 30.0 * ((x / 7.0).sin() * (y / 11.0).cos()).abs() - 0.2 * x);
        let mask = Mask::none(&g);
        let mut prev: Option<BTreeSet<Cell>> = None;
        for delta in [2.0, 5.0, 10.0, 20.0] {
            let cells: BTreeSet<Cell> = adaptive_map(&g, &mask, delta, &s).samples.keys().copied().collect();
            if let Some(p) = &prev {
                assert!(cells.is_subset(p));
            }
            prev = Some(cells);
        }
    }

    #[test]
    fn linear_fields_are_reproduced() {
        let g = grid(100.0, 50.0, 1.25, 10.0);
        let f = |x: f64, y: f64| -40.0 + 0.3 * x - 0.2 * y;
        let mask = Mask::none(&g);
        let map = adaptive_map(&g, &mask, 5.0, &synthetic(f));
        let r = interpolate(&map, &mask).unwrap();
        let hull_lo = g.position((4, 4));
        let hull_hi = g.position((76, 36));
        for i in r.unmasked() {
            let p = g.position(g.cell(i));
            let inside = p.x >= hull_lo.x && p.x <= hull_hi.x && p.y >= hull_lo.y && p.y <= hull_hi.y;
            if inside {
                assert!((r.power_db(i) - f(p.x, p.y)).abs() < 1e-9);
                assert!((r.field_dbuvm[i] - f(p.x, p.y) - 200.0).abs() < 1e-9);
            }
        }
        assert!(r.fallback > 0);
        // simulated cells are reproduced exactly
        for (c, s) in &map.samples {
            assert_eq!(r.power[g.index(*c)], s.power);
        }
    }

    #[test]
    fn midpoint_is_the_average() {
        let g = grid(20.0, 10.0, 1.25, 10.0);
        let mut map = SampleMap {
            grid: g.clone(),
            samples: BTreeMap::new(),
            per_level: vec![],
        };
        for (c, e) in [((0, 0), 100.0), ((8, 0), 110.0), ((0, 2), 100.0), ((8, 2), 110.0)] {
            map.samples.insert(
                c,
                Sample {
                    power: 1.0,
                    field_dbuvm: e,
                    level: 1,
                },
            );
        }
        let r = interpolate(&map, &Mask::none(&g)).unwrap();
        assert!((r.field_dbuvm[g.index((4, 1))] - 105.0).abs() < 1e-12);
    }

    #[test]
    fn accuracy_statistics() {
        let g = grid(20.0, 10.0, 1.25, 10.0);
        let mask = Mask::none(&g);
        let map = adaptive_map(&g, &mask, 5.0, &synthetic(|x, _| -50.0 - x));
        let a = interpolate(&map, &mask).unwrap();
        let same = accuracy_report(&a, &a).unwrap();
        assert_eq!((same.eta, same.sigma), (0.0, 0.0));
        let mut b = a.clone();
        b.field_dbuvm.iter_mut().for_each(|v| *v += 3.0);
        let off = accuracy_report(&b, &a).unwrap();
        assert!((off.eta - 3.0).abs() < 1e-12 && off.sigma < 1e-12);
        let other = interpolate(&adaptive_map(&grid(30.0, 10.0, 1.25, 10.0), &Mask::none(&grid(30.0, 10.0, 1.25, 10.0)), 5.0, &synthetic(|_, _| 0.0)), &Mask::none(&grid(30.0, 10.0, 1.25, 10.0))).unwrap();
        assert!(matches!(accuracy_report(&a, &other), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn fully_masked_area_is_empty() {
        let g = grid(20.0, 10.0, 1.25, 10.0);
        let mask = Mask {
            bits: vec![true; g.len()],
        };
        let map = adaptive_map(&g, &mask, 5.0, &synthetic(|_, _| 0.0));
        assert_eq!(map.sims(), 0);
        assert!(matches!(interpolate(&map, &mask), Err(Error::EmptySamples)));
    }
}
