//! Base-station placement: Monte-Carlo estimate of the time-averaged UE
//! exposure, a distance penalty for leaving the preferred region, and a
//! Nelder–Mead search over positions with the EIRP fixed per position by
//! the coverage constraint.

use std::collections::HashMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ArraySpec;
use crate::coverage::{adaptive_map, interpolate, GridSpec, Mask, RaySampler};
use crate::emfield::AntennaSpec;
use crate::error::{config, Error, Result};
use crate::geometry::{self, Vec2, Vec3};
use crate::mobility::{simulate, MobilityParams, ZoneMap};
use crate::netmodel::{coverage, min_eirp_for_coverage, sinr, Interferer, NetworkConfig};
use crate::raylaunch::Tracer;
use crate::units::{vm_to_dbuvm, Z_F0};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McSettings {
    /// Target 95% half-width (V/m).
    pub delta_tol: f64,
    pub omega_min: usize,
    pub omega_max: usize,
    pub seed: u64,
    /// Reuse the same run seeds for every candidate position.
    pub common_random_numbers: bool,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            delta_tol: 0.005,
            omega_min: 30,
            omega_max: 200_000,
            seed: 0,
            common_random_numbers: true,
        }
    }
}

impl McSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_tol > 0.0) {
            return Err(config("delta_tol", "must be positive"));
        }
        if self.omega_min < 2 || self.omega_max < self.omega_min {
            return Err(config("omega_min", "need 2 ≤ omega_min ≤ omega_max"));
        }
        Ok(())
    }
}

/// Welford running mean and variance.
#[derive(Clone, Copy, Debug, Default)]
pub struct McEstimator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl McEstimator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn half_width(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            1.96 * (self.variance() / self.n as f64).sqrt()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McResult {
    pub mean: f64,
    pub half_width: f64,
    pub runs: usize,
    pub budget_exceeded: bool,
}

/// Draw runs until the 95% half-width drops below `delta_tol`. Runs are
/// evaluated in parallel batches but consumed in order, so the result does
/// not depend on the thread count.
pub fn run_mc<F>(s: &McSettings, f: F) -> Result<McResult>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    s.validate()?;
    let batch = rayon::current_num_threads().max(1);
    let mut est = McEstimator::default();
    let mut next = 0u64;
    loop {
        let xs: Vec<Result<f64>> = (next..next + batch as u64).into_par_iter().map(&f).collect();
        next += batch as u64;
        for x in xs {
            est.push(x?);
            let n = est.count();
            if n >= s.omega_min && est.half_width() < s.delta_tol {
                return Ok(McResult {
                    mean: est.mean(),
                    half_width: est.half_width(),
                    runs: n,
                    budget_exceeded: false,
                });
            }
            if n >= s.omega_max {
                return Ok(McResult {
                    mean: est.mean(),
                    half_width: est.half_width(),
                    runs: n,
                    budget_exceeded: true,
                });
            }
        }
    }
}

/// RMS over frames.
pub fn rms(frames: &[f64]) -> f64 {
    if frames.is_empty() {
        return 0.0;
    }
    (frames.iter().map(|e| e * e).sum::<f64>() / frames.len() as f64).sqrt()
}

/// Everything the exposure objective needs apart from the serving raster.
pub struct ExposureModel<'a> {
    pub zones: &'a ZoneMap,
    pub interference: &'a [f64],
    pub net: &'a NetworkConfig,
    /// Effective aperture of the UE antenna (m²).
    pub a_e: f64,
    pub mobility: &'a MobilityParams,
}

impl ExposureModel<'_> {
    /// One Monte-Carlo run: random UE count, fresh trajectories, mean over
    /// UEs of the per-UE time-averaged exposure (V/m).
    pub fn run(&self, unit: &[f64], eirp: f64, seed: u64) -> Result<f64> {
        if unit.len() != self.zones.labels.len() || self.interference.len() != unit.len() {
            return Err(Error::ShapeMismatch("serving, interference and zone rasters differ".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(self.net.n_min.round() as usize..=self.net.n_max.round() as usize);
        let params = MobilityParams {
            seed: rng.random(),
            ..self.mobility.clone()
        };
        let tr = simulate(self.zones, &params, n)?;
        let serving = self.net.prf.eval(n as f64) * eirp;
        let k = Z_F0 / self.a_e;
        let frames = tr.first().map_or(0, |t| t.cells.len());
        let mut sum2 = vec![0.0; n];
        let mut cells: Vec<usize> = Vec::with_capacity(n);
        for t in 0..frames {
            cells.clear();
            cells.extend(tr.iter().map(|x| x.cells[t]));
            for (i, c) in cells.iter().enumerate() {
                let occ = cells.iter().filter(|d| *d == c).count() as f64;
                sum2[i] += k * (self.interference[*c] + occ * serving * unit[*c]);
            }
        }
        let ue: f64 = sum2.iter().map(|s| (s / frames.max(1) as f64).sqrt()).sum();
        Ok(ue / n.max(1) as f64)
    }

    pub fn objective(&self, unit: &[f64], eirp: f64, mc: &McSettings, salt: u64) -> Result<McResult> {
        let base = if mc.common_random_numbers { mc.seed } else { mc.seed ^ salt };
        run_mc(mc, |w| {
            let mut r = ChaCha8Rng::seed_from_u64(base);
            r.set_stream(w);
            self.run(unit, eirp, r.random())
        })
    }
}

/// Distance from `p` to the preferred region, zero inside it.
pub fn penalty_distance(p: Vec2, c1: &[Vec2]) -> f64 {
    if geometry::contains(p, c1) {
        0.0
    } else {
        geometry::distance_to_contour(p, c1)
    }
}

pub fn penalized(j: f64, p: Vec2, c1: &[Vec2], tau_p: f64) -> f64 {
    j + tau_p * penalty_distance(p, c1)
}

/// Nearest point of the region.
pub fn project(p: Vec2, region: &[Vec2]) -> Vec2 {
    if geometry::contains_or_on(p, region, 1e-12) {
        p
    } else {
        geometry::nearest_on_contour(p, region)
    }
}

/// All pairwise distances.
pub fn distance_set(ps: &[Vec2]) -> Vec<f64> {
    let mut d = Vec::with_capacity(ps.len() * ps.len().saturating_sub(1) / 2);
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            d.push((ps[i] - ps[j]).norm());
        }
    }
    d
}

pub fn converged(d: &[f64], d_max: f64) -> bool {
    d.iter().all(|x| *x <= d_max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NmSettings {
    /// Simplex holds n_s + 1 positions.
    pub n_s: usize,
    pub mu_r: f64,
    pub mu_e: f64,
    pub mu_oc: f64,
    pub mu_ic: f64,
    pub mu_s: f64,
    pub d_max: f64,
    pub max_iter: usize,
    /// Penalty slope (V/m per m).
    pub tau_p: f64,
    pub seed: u64,
}

impl Default for NmSettings {
    fn default() -> Self {
        NmSettings {
            n_s: 7,
            mu_r: 1.0,
            mu_e: 2.0,
            mu_oc: 0.5,
            mu_ic: -0.5,
            mu_s: 0.5,
            d_max: 1.0,
            max_iter: 200,
            tau_p: 1e3,
            seed: 0,
        }
    }
}

impl NmSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_s < 1 {
            return Err(config("n_s", "must be at least 1"));
        }
        if !(self.d_max > 0.0) {
            return Err(config("d_max", "must be positive"));
        }
        if !(self.tau_p >= 0.0) {
            return Err(config("tau_p", "must be nonnegative"));
        }
        if !(self.mu_s > 0.0 && self.mu_s < 1.0) {
            return Err(config("mu_s", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Objective value at one position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    /// Exposure objective (V/m), infinite when coverage is unattainable.
    pub j: f64,
    pub j_p: f64,
    pub eirp: Option<f64>,
    pub coverage: f64,
    pub half_width: f64,
    pub runs: usize,
    pub budget_exceeded: bool,
}

impl Evaluation {
    pub fn plain(j_p: f64) -> Evaluation {
        Evaluation {
            j: j_p,
            j_p,
            eirp: None,
            coverage: f64::NAN,
            half_width: 0.0,
            runs: 0,
            budget_exceeded: false,
        }
    }

    pub fn feasible(&self) -> bool {
        self.j_p.is_finite()
    }
}

pub trait Objective {
    fn evaluate(&mut self, p: Vec2) -> Result<Evaluation>;
}

impl<F: FnMut(Vec2) -> Result<Evaluation>> Objective for F {
    fn evaluate(&mut self, p: Vec2) -> Result<Evaluation> {
        self(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Vertex {
    pub p: Vec2,
    pub eval: Evaluation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NmMove {
    Init,
    Reflection,
    Expansion,
    OuterContraction,
    InnerContraction,
    Shrink,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NmStep {
    pub q: usize,
    pub best_j_p: f64,
    pub max_d: f64,
    pub mean_d: f64,
    pub step: NmMove,
}

#[derive(Clone, Debug, Serialize)]
pub struct NmOutcome {
    pub best: Vertex,
    pub simplex: Vec<Vertex>,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<NmStep>,
    pub evaluations: usize,
}

fn sort_simplex(v: &mut [Vertex]) {
    v.sort_by(|a, b| a.eval.j_p.total_cmp(&b.eval.j_p));
}

fn record(v: &[Vertex], q: usize, step: NmMove) -> NmStep {
    let d = distance_set(&v.iter().map(|x| x.p).collect::<Vec<_>>());
    NmStep {
        q,
        best_j_p: v[0].eval.j_p,
        max_d: d.iter().cloned().fold(0.0, f64::max),
        mean_d: if d.is_empty() { 0.0 } else { d.iter().sum::<f64>() / d.len() as f64 },
        step,
    }
}

/// Simplex search over positions in `region`. Every proposal is projected
/// into the region before it is evaluated.
pub fn nelder_mead(initial: &[Vec2], region: &[Vec2], s: &NmSettings, obj: &mut dyn Objective) -> Result<NmOutcome> {
    s.validate()?;
    if initial.len() < 2 {
        return Err(config("n_s", "simplex needs at least two positions"));
    }
    let mut evals = 0usize;
    let mut eval = |p: Vec2, obj: &mut dyn Objective| -> Result<Vertex> {
        evals += 1;
        let p = project(p, region);
        Ok(Vertex { p, eval: obj.evaluate(p)? })
    };
    let mut v = Vec::with_capacity(initial.len());
    for p in initial {
        v.push(eval(*p, obj)?);
    }
    if v.iter().all(|x| !x.eval.feasible()) {
        return Err(Error::AllInfeasible);
    }
    sort_simplex(&mut v);
    let n = v.len();
    let mut history = vec![record(&v, 0, NmMove::Init)];
    let mut q = 0;
    while history.last().is_some_and(|h| h.max_d > s.d_max) && q < s.max_iter {
        let centroid = v[..n - 1].iter().map(|x| x.p).sum::<Vec2>() / (n - 1) as f64;
        let worst = v[n - 1].p;
        let at = |mu: f64| (1.0 + mu) * centroid - mu * worst;
        let (j1, jns, jw) = (v[0].eval.j_p, v[n - 2].eval.j_p, v[n - 1].eval.j_p);
        let r = eval(at(s.mu_r), obj)?;
        let jr = r.eval.j_p;
        let outcome = if j1 <= jr && jr < jns {
            Some((r, NmMove::Reflection))
        } else if jr < j1 {
            let e = eval(at(s.mu_e), obj)?;
            if e.eval.j_p < jr {
                Some((e, NmMove::Expansion))
            } else {
                Some((r, NmMove::Reflection))
            }
        } else if jr < jw {
            let oc = eval(at(s.mu_oc), obj)?;
            (oc.eval.j_p < jr).then_some((oc, NmMove::OuterContraction))
        } else {
            let ic = eval(at(s.mu_ic), obj)?;
            (ic.eval.j_p < jw).then_some((ic, NmMove::InnerContraction))
        };
        let step = match outcome {
            Some((x, m)) => {
                v[n - 1] = x;
                m
            }
            None => {
                let best = v[0].p;
                for i in 1..n {
                    let p = best + s.mu_s * (v[i].p - best);
                    v[i] = eval(p, obj)?;
                }
                NmMove::Shrink
            }
        };
        q += 1;
        sort_simplex(&mut v);
        history.push(record(&v, q, step));
    }
    let done = history.last().is_some_and(|h| h.max_d <= s.d_max);
    Ok(NmOutcome {
        best: v[0],
        simplex: v,
        iterations: q,
        converged: done,
        history,
        evaluations: evals,
    })
}

/// `count` distinct uniform positions inside `region`.
pub fn random_simplex(region: &[Vec2], count: usize, seed: u64) -> Vec<Vec2> {
    let (lo, hi) = geometry::bounds2(region);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec2> = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 1_000_000 {
        tries += 1;
        let p = Vec2::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
        if geometry::contains(p, region) && out.iter().all(|q| (q - p).norm() > 1e-6) {
            out.push(p);
        }
    }
    out
}

/// Unit-EIRP received power per finest-grid cell for a transmitter.
pub trait RasterSource: Sync {
    fn unit_raster(&self, tx: Vec3) -> Result<UnitRaster>;
}

#[derive(Clone, Debug)]
pub struct UnitRaster {
    pub power: Vec<f64>,
    pub sims: usize,
}

/// Adaptive-grid ray-launched rasters.
pub struct RayRasterSource<'a> {
    pub tracer: &'a Tracer<'a>,
    pub grid: &'a GridSpec,
    pub mask: &'a Mask,
    pub array: ArraySpec,
    pub tx: AntennaSpec,
    pub rx: AntennaSpec,
    pub delta_db: f64,
}

impl RasterSource for RayRasterSource<'_> {
    fn unit_raster(&self, tx: Vec3) -> Result<UnitRaster> {
        let sampler = RaySampler {
            tracer: self.tracer,
            tx: AntennaSpec {
                position: tx,
                ..self.tx.clone()
            },
            rx: self.rx.clone(),
            array: self.array.clone(),
        };
        let map = adaptive_map(self.grid, self.mask, self.delta_db, &sampler);
        let r = interpolate(&map, self.mask)?;
        Ok(UnitRaster {
            power: r.power,
            sims: r.sims,
        })
    }
}

/// Interferers at fixed positions with worst-case load.
pub fn build_interferers(source: &dyn RasterSource, positions: &[Vec3], net: &NetworkConfig) -> Result<Vec<Interferer>> {
    positions
        .iter()
        .map(|p| {
            Ok(Interferer {
                position: *p,
                p_t: net.interferer_p_t,
                gain: net.interferer_gain,
                n_ue: net.n_max,
                unit_power: source.unit_raster(*p)?.power,
            })
        })
        .collect()
}

/// The full placement problem: one objective evaluation builds the serving
/// raster, fixes the minimum EIRP and runs the Monte-Carlo exposure.
pub struct Placement<'a> {
    pub source: &'a dyn RasterSource,
    pub mask: &'a [bool],
    pub model: ExposureModel<'a>,
    pub mc: McSettings,
    pub z_b: f64,
    pub c1: &'a [Vec2],
    pub tau_p: f64,
    cache: HashMap<(i64, i64), Evaluation>,
    pub sims: usize,
}

impl<'a> Placement<'a> {
    pub fn new(
        source: &'a dyn RasterSource,
        mask: &'a [bool],
        model: ExposureModel<'a>,
        mc: McSettings,
        z_b: f64,
        c1: &'a [Vec2],
        tau_p: f64,
    ) -> Placement<'a> {
        Placement {
            source,
            mask,
            model,
            mc,
            z_b,
            c1,
            tau_p,
            cache: HashMap::new(),
            sims: 0,
        }
    }

    /// Coverage and exposure at a fixed position and EIRP.
    pub fn assess(&mut self, p: Vec2, eirp: f64) -> Result<(f64, McResult)> {
        let r = self.source.unit_raster(Vec3::new(p.x, p.y, self.z_b))?;
        self.sims += r.sims;
        let net = self.model.net;
        let cov = coverage(&sinr(&r.power, eirp, net.n_min, self.model.interference, net), self.mask, net.gamma_min);
        let mc = self.model.objective(&r.power, eirp, &self.mc, key_salt(p))?;
        Ok((cov, mc))
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }
}

fn quantize(p: Vec2) -> (i64, i64) {
    ((p.x * 10.0).round() as i64, (p.y * 10.0).round() as i64)
}

fn key_salt(p: Vec2) -> u64 {
    let (a, b) = quantize(p);
    (a as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (b as u64)
}

impl Objective for Placement<'_> {
    fn evaluate(&mut self, p: Vec2) -> Result<Evaluation> {
        let key = quantize(p);
        if let Some(e) = self.cache.get(&key) {
            return Ok(*e);
        }
        let r = self.source.unit_raster(Vec3::new(p.x, p.y, self.z_b))?;
        self.sims += r.sims;
        let net = self.model.net;
        let e = match min_eirp_for_coverage(&r.power, self.model.interference, self.mask, net) {
            Ok(eirp) => {
                let gamma = sinr(&r.power, eirp, net.n_min, self.model.interference, net);
                let mc = self.model.objective(&r.power, eirp, &self.mc, key_salt(p))?;
                Evaluation {
                    j: mc.mean,
                    j_p: penalized(mc.mean, p, self.c1, self.tau_p),
                    eirp: Some(eirp),
                    coverage: coverage(&gamma, self.mask, net.gamma_min),
                    half_width: mc.half_width,
                    runs: mc.runs,
                    budget_exceeded: mc.budget_exceeded,
                }
            }
            Err(Error::Infeasible { .. }) => Evaluation::plain(f64::INFINITY),
            Err(e) => return Err(e),
        };
        self.cache.insert(key, e);
        Ok(e)
    }
}

/// Objective in dBµV/m for reporting.
pub fn j_dbuvm(j: f64) -> f64 {
    vm_to_dbuvm(j)
}
