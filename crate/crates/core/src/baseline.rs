//! Empirical close-in (CI) path-loss baseline: fitting from simulated path
//! loss, a distance-dependent LoS probability, and a geometry-free raster
//! source that plugs into the placement search.

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::GridSpec;
use crate::emfield::{AntennaSpec, Carrier};
use crate::error::{Error, Result};
use crate::geometry::{Vec2, Vec3};
use crate::optimizer::{RasterSource, UnitRaster};
use crate::raylaunch::{PathKind, Tracer};
use crate::units::{db, from_db, POWER_FLOOR_W};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Los,
    Nlos,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathLossSample {
    pub d_3d: f64,
    pub pl_db: f64,
    pub condition: Condition,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiModel {
    pub n_ple: f64,
    /// Shadowing standard deviation (dB).
    pub sigma_x: f64,
    pub pl0_db: f64,
    pub d0: f64,
    pub samples: usize,
}

impl CiModel {
    /// Median path loss at `d` (dB).
    pub fn median(&self, d: f64) -> f64 {
        self.pl0_db + 10.0 * self.n_ple * (d.max(1e-9) / self.d0).log10()
    }
}

/// Free-space reference 20·log10(4πd₀/λ).
pub fn free_space_reference(carrier: &Carrier, d0: f64) -> f64 {
    20.0 * (4.0 * PI * d0 / carrier.lambda).log10()
}

/// Least-squares exponent with a fixed intercept `pl0_db` at `d0`; the
/// shadowing spread is the RMS residual.
pub fn fit_ci_with_reference(samples: &[(f64, f64)], pl0_db: f64, d0: f64) -> Result<CiModel> {
    let used: Vec<(f64, f64)> = samples.iter().filter(|(d, _)| *d > d0).map(|(d, pl)| (10.0 * (d / d0).log10(), pl - pl0_db)).collect();
    if used.is_empty() || samples.len() < 2 {
        return Err(Error::InsufficientData(format!("{} samples beyond d0 = {d0} m", used.len())));
    }
    let sxx: f64 = used.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = used.iter().map(|(x, y)| x * y).sum();
    let n_ple = sxy / sxx;
    let ss: f64 = used.iter().map(|(x, y)| (y - n_ple * x).powi(2)).sum();
    Ok(CiModel {
        n_ple,
        sigma_x: (ss / used.len() as f64).sqrt(),
        pl0_db,
        d0,
        samples: used.len(),
    })
}

/// Fit one condition. LoS uses the free-space reference at `d0`; NLoS
/// anchors on its own sample with the smallest distance.
pub fn fit_ci(samples: &[PathLossSample], condition: Condition, d0: f64, carrier: &Carrier) -> Result<CiModel> {
    let pts: Vec<(f64, f64)> = samples.iter().filter(|s| s.condition == condition).map(|s| (s.d_3d, s.pl_db)).collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!("{} {condition:?} samples", pts.len())));
    }
    match condition {
        Condition::Los => fit_ci_with_reference(&pts, free_space_reference(carrier, d0), d0),
        Condition::Nlos => {
            let r = pts.iter().cloned().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap_or((d0, 0.0));
            fit_ci_with_reference(&pts, r.1, r.0)
        }
    }
}

/// LoS probability over horizontal distance (urban macro).
pub fn p_los(d_2d: f64) -> f64 {
    if d_2d <= 18.0 {
        1.0
    } else {
        18.0 / d_2d + (-d_2d / 63.0).exp() * (1.0 - 18.0 / d_2d)
    }
}

pub fn classify(d_2d: f64, u: f64) -> Condition {
    if u < p_los(d_2d) {
        Condition::Los
    } else {
        Condition::Nlos
    }
}

/// Single-element path loss at each point, labelled LoS when a direct path
/// exists.
pub fn simulate_samples(tracer: &Tracer, tx: Vec3, points: &[Vec3]) -> Vec<PathLossSample> {
    let iso_tx = AntennaSpec::isotropic(tx);
    let iso_rx = AntennaSpec::isotropic(Vec3::zeros());
    let all = tracer.paths_many(&iso_tx, &iso_rx, points, 1.0);
    all.par_iter()
        .zip(points.par_iter())
        .map(|(paths, p)| {
            let v = paths.iter().map(|r| r.voltage).sum::<num_complex::Complex64>();
            let z = iso_rx.impedance.re;
            let pr = v.norm_sqr() / (8.0 * z);
            PathLossSample {
                d_3d: (p - tx).norm(),
                pl_db: -db(pr.max(POWER_FLOOR_W)),
                condition: if paths.iter().any(|r| r.kind == PathKind::LoS) {
                    Condition::Los
                } else {
                    Condition::Nlos
                },
            }
        })
        .collect()
}

/// Geometry-free raster source built from fitted LoS and NLoS models.
#[derive(Clone, Debug)]
pub struct CiRasterSource {
    pub los: CiModel,
    pub nlos: CiModel,
    pub grid: GridSpec,
    pub g_r: f64,
    /// Coherent beamforming gain applied on top of the single-element loss.
    pub array_gain: f64,
    pub seed: u64,
}

impl CiRasterSource {
    /// Path loss (dB) at one cell with its frozen classification and
    /// shadowing draw.
    pub fn path_loss(&self, tx: Vec3, cell: usize) -> f64 {
        let p = self.grid.position(self.grid.cell(cell));
        let d2 = Vec2::new(p.x - tx.x, p.y - tx.y).norm();
        let d3 = (p - tx).norm();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(cell as u64);
        let cond = classify(d2, rng.random());
        let m = match cond {
            Condition::Los => &self.los,
            Condition::Nlos => &self.nlos,
        };
        let x = if m.sigma_x > 0.0 {
            Normal::new(0.0, m.sigma_x).map_or(0.0, |n| n.sample(&mut rng))
        } else {
            0.0
        };
        m.median(d3) + x
    }
}

impl RasterSource for CiRasterSource {
    fn unit_raster(&self, tx: Vec3) -> Result<UnitRaster> {
        let power = (0..self.grid.len())
            .into_par_iter()
            .map(|i| self.g_r * self.array_gain * from_db(-self.path_loss(tx, i)))
            .collect();
        Ok(UnitRaster { power, sims: 0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Rect, SceneBuilder};
    use crate::raylaunch::LaunchConfig;

    fn carrier() -> Carrier {
        Carrier::new(3.5e9)
    }

    #[test]
    fn free_space_reference_value() {
        assert!((free_space_reference(&carrier(), 1.0) - 43.33).abs() < 0.01);
    }

    #[test]
    fn free_space_samples_fit_exponent_two() {
        let c = carrier();
        let s: Vec<PathLossSample> = (1..60)
            .map(|k| {
                let d = 2.0 + 7.3 * k as f64;
                PathLossSample {
                    d_3d: d,
                    pl_db: free_space_reference(&c, 1.0) + 20.0 * d.log10(),
                    condition: Condition::Los,
                }
            })
            .collect();
        let m = fit_ci(&s, Condition::Los, 1.0, &c).unwrap();
        assert!((m.n_ple - 2.0).abs() < 1e-6 && m.sigma_x < 1e-9);
    }

    #[test]
    fn two_points_fit_exactly() {
        let m = fit_ci_with_reference(&[(10.0, 80.0), (100.0, 105.0)], 55.0, 1.0).unwrap();
        assert!((m.n_ple - 2.5).abs() < 1e-12 && m.sigma_x < 1e-12);
        assert!(matches!(fit_ci_with_reference(&[(10.0, 80.0)], 55.0, 1.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn noisy_exponent_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 7.57).unwrap();
        let (n_true, pl0) = (2.58, 60.0);
        let mut xs = Vec::new();
        let s: Vec<(f64, f64)> = (0..2000)
            .map(|_| {
                let d: f64 = rng.random_range(10.0..400.0);
                xs.push(10.0 * d.log10());
                (d, pl0 + 10.0 * n_true * d.log10() + noise.sample(&mut rng))
            })
            .collect();
        let m = fit_ci_with_reference(&s, pl0, 1.0).unwrap();
        let se = 7.57 / xs.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((m.n_ple - n_true).abs() < 3.0 * se, "{} ± {se}", m.n_ple);
        assert!((m.sigma_x - 7.57).abs() < 0.5);
    }

    #[test]
    fn los_probability_examples() {
        assert_eq!(p_los(18.0), 1.0);
        assert!((p_los(18.0 + 1e-9) - 1.0).abs() < 1e-9);
        let d: f64 = 63.0;
        assert!((p_los(63.0) - (18.0 / d + (-1f64).exp() * (1.0 - 18.0 / d))).abs() < 1e-15);
        assert!((p_los(63.0) - 0.5485).abs() < 1e-4);
        assert!(p_los(1e6) < 1e-4);
        let mut last = 1.0;
        for k in 0..1000 {
            let p = p_los(k as f64);
            assert!((0.0..=1.0).contains(&p) && p <= last + 1e-15);
            last = p;
        }
    }

    #[test]
    fn ci_raster_examples() {
        let grid = GridSpec::new(
            &Rect {
                origin: Vec2::new(0.0, 0.0),
                lx: 20.0,
                ly: 20.0,
            },
            1.25,
            10.0,
            1.5,
        )
        .unwrap();
        let los = CiModel {
            n_ple: 2.0,
            sigma_x: 0.0,
            pl0_db: free_space_reference(&carrier(), 1.0),
            d0: 1.0,
            samples: 2,
        };
        let src = CiRasterSource {
            los,
            nlos: los,
            grid: grid.clone(),
            g_r: 1.0,
            array_gain: 1.0,
            seed: 3,
        };
        // transmitter 1 m straight above a cell centre: the free-space reference
        let c = grid.position((4, 4));
        let tx = c + Vec3::new(0.0, 0.0, 1.0);
        let i = grid.index((4, 4));
        assert!((src.path_loss(tx, i) - los.pl0_db).abs() < 1e-9);
        let noisy = CiRasterSource {
            los: CiModel { sigma_x: 3.0, ..los },
            nlos: CiModel { sigma_x: 7.0, n_ple: 2.6, ..los },
            ..src
        };
        let a = noisy.unit_raster(tx).unwrap();
        let b = noisy.unit_raster(tx).unwrap();
        assert_eq!(a.power, b.power);
    }

    #[test]
    fn ray_launched_free_space_fit() {
        let mut b = SceneBuilder::new(Rect {
            origin: Vec2::new(-300.0, -300.0),
            lx: 600.0,
            ly: 600.0,
        });
        b.c1(crate::scene::rect(Vec2::new(-10.0, -10.0), Vec2::new(10.0, 10.0)));
        let scene = b.build().unwrap();
        let c = carrier();
        let cfg = LaunchConfig {
            max_reflections: 0,
            max_diffractions: 0,
            ..LaunchConfig::default()
        };
        let tracer = Tracer::new(&scene, c, cfg).unwrap();
        let tx = Vec3::new(0.0, 0.0, 30.0);
        let pts: Vec<Vec3> = (0..40).map(|k| Vec3::new(5.0 + 6.0 * k as f64, 3.0 * k as f64, 1.5)).collect();
        let s = simulate_samples(&tracer, tx, &pts);
        assert!(s.iter().all(|x| x.condition == Condition::Los));
        let m = fit_ci(&s, Condition::Los, 1.0, &c).unwrap();
        assert!((m.n_ple - 2.0).abs() < 0.01, "{}", m.n_ple);
    }
}
