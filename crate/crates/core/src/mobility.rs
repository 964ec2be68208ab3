//! Correlated random walk for pedestrians: von Mises heading increments,
//! random pauses, facade sliding and gated street crossings. Positions are
//! mapped to the nearest finest-grid cell for co-location counts.

use std::f64::consts::PI;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{GridSpec, Mask};
use crate::error::{config, Error, Result};
use crate::geometry::Vec2;
use crate::scene::Scene;
use crate::units::kmh_to_ms;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MobilityParams {
    pub speed_kmh: f64,
    pub t_step: f64,
    pub t_avg: f64,
    /// Per-UE heading concentration drawn log-uniformly from this range.
    pub kappa_range: (f64, f64),
    pub stop_prob: f64,
    /// Median pause length (s) and log-scale spread.
    pub pause_median: f64,
    pub pause_sigma: f64,
    pub rho_entry: f64,
    pub seed: u64,
}

impl Default for MobilityParams {
    fn default() -> Self {
        MobilityParams {
            speed_kmh: 5.0,
            t_step: 1.0,
            t_avg: 360.0,
            kappa_range: (2.0, 20.0),
            stop_prob: 0.02,
            pause_median: 10.0,
            pause_sigma: 0.8,
            rho_entry: 0.1,
            seed: 0,
        }
    }
}

impl MobilityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed_kmh > 0.0) {
            return Err(config("speed_kmh", "must be positive"));
        }
        if !(self.t_step > 0.0 && self.t_avg >= self.t_step) {
            return Err(config("t_step", "need 0 < t_step ≤ t_avg"));
        }
        let r = self.t_avg / self.t_step;
        if (r - r.round()).abs() > 1e-9 * r {
            return Err(config("t_avg", "must be an integer multiple of t_step"));
        }
        let (a, b) = self.kappa_range;
        if !(a > 0.0 && b >= a) {
            return Err(config("kappa_range", "need 0 < lo ≤ hi"));
        }
        if !(0.0..=1.0).contains(&self.stop_prob) {
            return Err(config("stop_prob", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.rho_entry) {
            return Err(config("rho_entry", "must lie in [0, 1]"));
        }
        if !(self.pause_median > 0.0 && self.pause_sigma >= 0.0) {
            return Err(config("pause_median", "must be positive"));
        }
        Ok(())
    }

    /// Speed in m/s.
    pub fn speed(&self) -> f64 {
        kmh_to_ms(self.speed_kmh)
    }

    /// Frames per averaging window.
    pub fn steps(&self) -> usize {
        (self.t_avg / self.t_step).round() as usize
    }
}

/// Von Mises(0, κ) sample by the Best–Fisher rejection scheme.
pub fn von_mises<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let t = f.clamp(-1.0, 1.0).acos();
            return if u3 > 0.5 { t } else { -t };
        }
    }
}

pub fn step_heading<R: Rng + ?Sized>(theta: f64, kappa: f64, rng: &mut R) -> f64 {
    theta + von_mises(kappa, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Building,
    Street,
    Pedestrian,
}

/// Zone label per finest-grid cell.
#[derive(Clone, Debug, Serialize)]
pub struct ZoneMap {
    pub grid: GridSpec,
    pub labels: Vec<Zone>,
}

impl ZoneMap {
    pub fn new(grid: GridSpec, labels: Vec<Zone>) -> Result<ZoneMap> {
        if labels.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} cells",
                labels.len(),
                grid.len()
            )));
        }
        Ok(ZoneMap { grid, labels })
    }

    /// Buildings from the indoor mask, streets from the scene's street
    /// polygons, everything else pedestrian.
    pub fn from_scene(scene: &Scene, grid: &GridSpec, mask: &Mask) -> ZoneMap {
        let labels = (0..grid.len())
            .map(|i| {
                if mask.bits[i] {
                    Zone::Building
                } else {
                    let p = grid.position(grid.cell(i));
                    if scene.in_street(Vec2::new(p.x, p.y)) {
                        Zone::Street
                    } else {
                        Zone::Pedestrian
                    }
                }
            })
            .collect();
        ZoneMap {
            grid: grid.clone(),
            labels,
        }
    }

    pub fn cell_of(&self, p: Vec2) -> usize {
        self.grid.index(self.grid.nearest(p))
    }

    /// Zone at a position; anything outside the grid counts as a wall.
    pub fn at(&self, p: Vec2) -> Zone {
        let g = &self.grid;
        let (dx, dy) = (p.x - g.origin.x, p.y - g.origin.y);
        if dx < 0.0 || dy < 0.0 || dx >= g.cols() as f64 * g.g0 || dy >= g.rows() as f64 * g.g0 {
            return Zone::Building;
        }
        self.labels[self.cell_of(p)]
    }

    pub fn pedestrian_cells(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|i| self.labels[*i] == Zone::Pedestrian).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveState {
    Moving,
    Paused,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub positions: Vec<Vec2>,
    pub states: Vec<MoveState>,
    pub cells: Vec<usize>,
    pub kappa: f64,
}

struct Walker {
    pos: Vec2,
    heading: f64,
    kappa: f64,
    pause: usize,
    crossing: bool,
}

impl Walker {
    fn step(&mut self, zones: &ZoneMap, p: &MobilityParams, pause: &LogNormal<f64>, rng: &mut ChaCha8Rng) -> MoveState {
        if self.pause > 0 {
            self.pause -= 1;
            return MoveState::Paused;
        }
        if p.stop_prob > 0.0 && rng.random::<f64>() < p.stop_prob {
            let frames = (pause.sample(rng) / p.t_step).ceil().max(1.0) as usize;
            self.pause = frames - 1;
            return MoveState::Paused;
        }
        if !self.crossing {
            self.heading = step_heading(self.heading, self.kappa, rng);
        }
        let len = p.speed() * p.t_step;
        let here = zones.at(self.pos);
        let mut enter: Option<bool> = None;
        let mut allowed = |z: Zone, rng: &mut ChaCha8Rng| match z {
            Zone::Pedestrian => true,
            Zone::Building => false,
            Zone::Street => {
                self.crossing
                    || here == Zone::Street
                    || *enter.get_or_insert_with(|| rng.random::<f64>() < p.rho_entry)
            }
        };
        for theta in self.candidates(zones, len) {
            let q = self.pos + len * Vec2::new(theta.cos(), theta.sin());
            let z = zones.at(q);
            if allowed(z, rng) {
                if z == Zone::Street && here != Zone::Street {
                    self.crossing = true;
                }
                if z == Zone::Pedestrian {
                    self.crossing = false;
                }
                self.pos = q;
                self.heading = theta;
                return MoveState::Moving;
            }
        }
        // boxed in: stand still this frame
        MoveState::Paused
    }

    /// Headings to try in order: the intended one, the facade tangent (or
    /// boundary reflection), then a widening sweep.
    fn candidates(&self, zones: &ZoneMap, len: f64) -> Vec<f64> {
        let t = self.heading;
        let (c, s) = (t.cos(), t.sin());
        let mut out = vec![t];
        let x_blocked = zones.at(self.pos + Vec2::new(len * c, 0.0)) != zones.at(self.pos);
        let y_blocked = zones.at(self.pos + Vec2::new(0.0, len * s)) != zones.at(self.pos);
        let tangent = |dx: f64, dy: f64| dy.atan2(dx);
        if x_blocked && !y_blocked && s != 0.0 {
            out.push(tangent(0.0, s.signum()));
        }
        if y_blocked && !x_blocked && c != 0.0 {
            out.push(tangent(c.signum(), 0.0));
        }
        out.push(PI - t);
        out.push(-t);
        for k in 1..=16 {
            let d = k as f64 * PI / 16.0;
            out.push(t + d);
            out.push(t - d);
        }
        out
    }
}

/// Simulate `n_ue` pedestrians for `params.steps()` frames.
pub fn simulate(zones: &ZoneMap, params: &MobilityParams, n_ue: usize) -> Result<Vec<Trajectory>> {
    params.validate()?;
    let spawn = zones.pedestrian_cells();
    if spawn.is_empty() {
        return Err(Error::NoPedestrianCells);
    }
    let pause = LogNormal::new(params.pause_median.ln(), params.pause_sigma).map_err(|e| config("pause_sigma", e.to_string()))?;
    let steps = params.steps();
    let g0 = zones.grid.g0;
    Ok((0..n_ue)
        .into_par_iter()
        .map(|ue| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(ue as u64);
            let cell = spawn[rng.random_range(0..spawn.len())];
            let centre = zones.grid.position(zones.grid.cell(cell));
            let jitter = Vec2::new(rng.random_range(-0.499..0.499), rng.random_range(-0.499..0.499)) * g0;
            let (lo, hi) = params.kappa_range;
            let kappa = if hi > lo { (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp() } else { lo };
            let mut w = Walker {
                pos: Vec2::new(centre.x, centre.y) + jitter,
                heading: rng.random_range(-PI..PI),
                kappa,
                pause: 0,
                crossing: false,
            };
            let mut t = Trajectory {
                positions: Vec::with_capacity(steps),
                states: Vec::with_capacity(steps),
                cells: Vec::with_capacity(steps),
                kappa,
            };
            t.positions.push(w.pos);
            t.states.push(MoveState::Paused);
            t.cells.push(zones.cell_of(w.pos));
            for _ in 1..steps {
                let s = w.step(zones, params, &pause, &mut rng);
                t.positions.push(w.pos);
                t.states.push(s);
                t.cells.push(zones.cell_of(w.pos));
            }
            t
        })
        .collect())
}

/// UEs per cell at frame `t`.
pub fn occupancy(trajectories: &[Trajectory], t: usize, cells: usize) -> Vec<u32> {
    let mut n = vec![0u32; cells];
    for tr in trajectories {
        n[tr.cells[t]] += 1;
    }
    n
}
