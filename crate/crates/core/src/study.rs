//! Run configuration and the pipelines that tie the modules together:
//! coverage maps, placement optimisation and the empirical-baseline
//! comparison.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::{fit_ci, simulate_samples, CiModel, CiRasterSource, Condition, PathLossSample};
use crate::channel::ArraySpec;
use crate::coverage::{GridSpec, Mask};
use crate::emfield::{AntennaSpec, Carrier};
use crate::error::{config, Error, Result};
use crate::geometry::{self, Vec2, Vec3};
use crate::mobility::{MobilityParams, ZoneMap};
use crate::netmodel::{aperture, coverage, interference_raster, min_eirp_for_coverage, sinr, NetworkConfig};
use crate::optimizer::{
    build_interferers, j_dbuvm, nelder_mead, random_simplex, ExposureModel, McSettings, NmSettings, NmStep, Placement,
    RasterSource, RayRasterSource,
};
use crate::raylaunch::{LaunchConfig, Tracer};
use crate::scene::Scene;
use crate::units::{from_db, w_to_dbm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineSettings {
    /// Reference distance for the LoS fit (m).
    pub d0: f64,
    /// Lattice stride (in g0 cells) of the path-loss samples used for fitting.
    pub fit_stride: i64,
    /// Coherent array gain applied to CI rasters; defaults to the element count.
    pub array_gain: Option<f64>,
    pub seed: u64,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        BaselineSettings {
            d0: 1.0,
            fit_stride: 4,
            array_gain: None,
            seed: 0,
        }
    }
}

/// Everything a run needs. Defaults reproduce the reference settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Scene file, or `bundled:<name>` for a built-in scene.
    pub scene: String,
    pub f0: f64,
    /// Base-station height (m).
    pub z_b: f64,
    /// UE height (m).
    pub z_n: f64,
    pub g0: f64,
    pub g1: f64,
    /// Refinement threshold (dB).
    pub delta_db: f64,
    pub tx_gain_dbi: f64,
    pub launch: LaunchConfig,
    pub array: ArraySpec,
    pub network: NetworkConfig,
    pub mobility: MobilityParams,
    pub mc: McSettings,
    pub nm: NmSettings,
    pub baseline: BaselineSettings,
    /// Master seed; when set it overrides every per-stage seed.
    pub seed: Option<u64>,
    /// Where run artifacts go.
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scene: "bundled:town".into(),
            f0: 3.5e9,
            z_b: 30.0,
            z_n: 1.5,
            g0: 1.25,
            g1: 10.0,
            delta_db: 5.0,
            tx_gain_dbi: 0.0,
            launch: LaunchConfig::default(),
            array: ArraySpec::default(),
            network: NetworkConfig::default(),
            mobility: MobilityParams::default(),
            mc: McSettings::default(),
            nm: NmSettings::default(),
            baseline: BaselineSettings::default(),
            seed: None,
            out_dir: "out".into(),
        }
    }
}

fn derive_seed(master: u64, stage: u64) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(master);
    r.set_stream(stage);
    r.random()
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config(name, "must be positive"))
            }
        };
        pos(self.f0, "f0")?;
        pos(self.g0, "g0")?;
        pos(self.g1, "g1")?;
        pos(self.delta_db, "delta_db")?;
        if !self.z_b.is_finite() || !self.z_n.is_finite() {
            return Err(config("z_b", "heights must be finite"));
        }
        let prefix = |field: &str, e: Error| match e {
            Error::Config { field: f, msg } => Error::Config {
                field: format!("{field}.{f}"),
                msg,
            },
            other => other,
        };
        self.launch.validate().map_err(|e| prefix("launch", e))?;
        self.array.validate().map_err(|e| prefix("array", e))?;
        self.network.validate().map_err(|e| prefix("network", e))?;
        self.mobility.validate().map_err(|e| prefix("mobility", e))?;
        self.mc.validate().map_err(|e| prefix("mc", e))?;
        self.nm.validate().map_err(|e| prefix("nm", e))?;
        if !(self.baseline.d0 > 0.0) || self.baseline.fit_stride < 1 {
            return Err(config("baseline.d0", "d0 and fit_stride must be positive"));
        }
        Ok(())
    }

    /// Copy with every stage seed derived from the master seed.
    pub fn resolved(&self) -> RunConfig {
        let mut c = self.clone();
        if let Some(s) = self.seed {
            c.launch.seed = derive_seed(s, 1);
            c.mobility.seed = derive_seed(s, 2);
            c.mc.seed = derive_seed(s, 3);
            c.nm.seed = derive_seed(s, 4);
            c.baseline.seed = derive_seed(s, 5);
        }
        c
    }

    pub fn carrier(&self) -> Carrier {
        Carrier::new(self.f0)
    }
}

/// Loaded scene plus the grids derived from it.
pub struct Study {
    pub cfg: RunConfig,
    pub scene: Scene,
    pub carrier: Carrier,
    pub grid: GridSpec,
    pub mask: Mask,
    pub zones: ZoneMap,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizeReport {
    pub p_b_op: [f64; 3],
    pub eirp_op_dbm: f64,
    pub j_vm: f64,
    pub j_dbuvm: f64,
    pub j_half_width: f64,
    pub coverage: f64,
    pub iterations: usize,
    pub converged: bool,
    pub evaluations: usize,
    pub distinct_positions: usize,
    pub sims: usize,
    pub in_c1: bool,
    pub mc_budget_exceeded: bool,
    pub initial: Vec<[f64; 2]>,
    pub history: Vec<NmStep>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BaselineReport {
    pub los: CiModel,
    pub nlos: CiModel,
    pub fit_samples: usize,
    pub rho_cov: f64,
    pub ci: OptimizeReport,
    /// Coverage under ray launching at the CI position and CI EIRP.
    pub ray_coverage_at_ci_eirp: f64,
    pub ray_coverage_at_eirp_max: f64,
    /// Minimum EIRP ray launching needs at the CI position, if attainable.
    pub ray_min_eirp_dbm: Option<f64>,
    /// Ray launching finds the CI choice short of the coverage target.
    pub shortfall: bool,
}

impl Study {
    pub fn new(cfg: RunConfig, scene: Scene) -> Result<Study> {
        cfg.validate()?;
        let cfg = cfg.resolved();
        let grid = GridSpec::new(&scene.boundaries.c2, cfg.g0, cfg.g1, cfg.z_n)?;
        let mask = Mask::from_scene(&scene, &grid);
        if mask.unmasked() == 0 {
            return Err(Error::EmptySamples);
        }
        let zones = ZoneMap::from_scene(&scene, &grid, &mask);
        Ok(Study {
            carrier: cfg.carrier(),
            cfg,
            scene,
            grid,
            mask,
            zones,
        })
    }

    pub fn tracer(&self) -> Result<Tracer<'_>> {
        Tracer::new(&self.scene, self.carrier, self.cfg.launch.clone())
    }

    pub fn tx_antenna(&self, p: Vec3) -> AntennaSpec {
        AntennaSpec::isotropic(p).with_gain(from_db(self.cfg.tx_gain_dbi))
    }

    pub fn rx_antenna(&self) -> AntennaSpec {
        AntennaSpec::isotropic(Vec3::zeros()).with_gain(self.cfg.network.g_r)
    }

    pub fn ray_source<'a>(&'a self, tracer: &'a Tracer<'a>) -> RayRasterSource<'a> {
        RayRasterSource {
            tracer,
            grid: &self.grid,
            mask: &self.mask,
            array: self.cfg.array.clone(),
            tx: self.tx_antenna(Vec3::zeros()),
            rx: self.rx_antenna(),
            delta_db: self.cfg.delta_db,
        }
    }

    /// Worst-case interference from the scene's interferers.
    pub fn interference(&self, source: &dyn RasterSource) -> Result<Vec<f64>> {
        let it = build_interferers(source, &self.scene.interferers, &self.cfg.network)?;
        interference_raster(&it, self.grid.len(), &self.cfg.network)
    }

    pub fn a_e(&self) -> f64 {
        aperture(&self.carrier, self.cfg.network.g_r)
    }

    fn model<'a>(&'a self, interference: &'a [f64]) -> ExposureModel<'a> {
        ExposureModel {
            zones: &self.zones,
            interference,
            net: &self.cfg.network,
            a_e: self.a_e(),
            mobility: &self.cfg.mobility,
        }
    }

    /// Minimum EIRP and coverage at a fixed position.
    pub fn assess(&self, source: &dyn RasterSource, interference: &[f64], p: Vec2, eirp: f64) -> Result<(f64, Option<f64>)> {
        let r = source.unit_raster(Vec3::new(p.x, p.y, self.cfg.z_b))?;
        let net = &self.cfg.network;
        let cov = coverage(&sinr(&r.power, eirp, net.n_min, interference, net), &self.mask.bits, net.gamma_min);
        let min = match min_eirp_for_coverage(&r.power, interference, &self.mask.bits, net) {
            Ok(e) => Some(e),
            Err(Error::Infeasible { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok((cov, min))
    }

    /// Placement search over C3 with the penalty toward C1.
    pub fn optimize(&self, source: &dyn RasterSource, interference: &[f64]) -> Result<OptimizeReport> {
        let b = &self.scene.boundaries;
        let nm = &self.cfg.nm;
        let init = random_simplex(&b.c3, nm.n_s + 1, nm.seed);
        if init.len() < nm.n_s + 1 {
            return Err(config("nm.n_s", "could not place distinct initial positions in C3"));
        }
        let mut problem = Placement::new(
            source,
            &self.mask.bits,
            self.model(interference),
            self.cfg.mc.clone(),
            self.cfg.z_b,
            &b.c1,
            nm.tau_p,
        );
        let out = nelder_mead(&init, &b.c3, nm, &mut problem)?;
        let best = out.best;
        let eirp = best.eval.eirp.ok_or(Error::AllInfeasible)?;
        Ok(OptimizeReport {
            p_b_op: [best.p.x, best.p.y, self.cfg.z_b],
            eirp_op_dbm: w_to_dbm(eirp),
            j_vm: best.eval.j,
            j_dbuvm: j_dbuvm(best.eval.j),
            j_half_width: best.eval.half_width,
            coverage: best.eval.coverage,
            iterations: out.iterations,
            converged: out.converged,
            evaluations: out.evaluations,
            distinct_positions: problem.cached(),
            sims: problem.sims,
            in_c1: geometry::contains_or_on(best.p, &b.c1, 1e-9),
            mc_budget_exceeded: out.simplex.iter().any(|v| v.eval.budget_exceeded),
            initial: init.iter().map(|p| [p.x, p.y]).collect(),
            history: out.history,
        })
    }

    /// Path-loss samples on a coarse lattice from a transmitter at the C1
    /// centroid.
    pub fn path_loss_samples(&self, tracer: &Tracer) -> Vec<PathLossSample> {
        let c = geometry::centroid(&self.scene.boundaries.c1);
        let tx = Vec3::new(c.x, c.y, self.cfg.z_b);
        let pts: Vec<Vec3> = self
            .grid
            .uniform_cells(self.cfg.baseline.fit_stride)
            .into_iter()
            .filter(|c| !self.mask.is_masked(&self.grid, *c))
            .map(|c| self.grid.position(c))
            .collect();
        simulate_samples(tracer, tx, &pts)
    }

    pub fn fit_baseline(&self, samples: &[PathLossSample]) -> Result<(CiModel, CiModel)> {
        let los = fit_ci(samples, Condition::Los, self.cfg.baseline.d0, &self.carrier)?;
        let nlos = fit_ci(samples, Condition::Nlos, self.cfg.baseline.d0, &self.carrier)?;
        Ok((los, nlos))
    }

    pub fn ci_source(&self, los: CiModel, nlos: CiModel) -> CiRasterSource {
        CiRasterSource {
            los,
            nlos,
            grid: self.grid.clone(),
            g_r: self.cfg.network.g_r,
            array_gain: self.cfg.baseline.array_gain.unwrap_or(self.cfg.array.m_ant as f64),
            seed: self.cfg.baseline.seed,
        }
    }

    /// Optimise under the CI baseline, then check that choice with ray
    /// launching.
    pub fn compare_baseline(&self, tracer: &Tracer) -> Result<BaselineReport> {
        let samples = self.path_loss_samples(tracer);
        let (los, nlos) = self.fit_baseline(&samples)?;
        let ci_src = self.ci_source(los, nlos);
        let ci_interference = self.interference(&ci_src)?;
        let ci = self.optimize(&ci_src, &ci_interference)?;
        let ray = self.ray_source(tracer);
        let ray_interference = self.interference(&ray)?;
        let p = Vec2::new(ci.p_b_op[0], ci.p_b_op[1]);
        let eirp = crate::units::dbm_to_w(ci.eirp_op_dbm);
        let (cov_ci, min) = self.assess(&ray, &ray_interference, p, eirp)?;
        let (cov_max, _) = self.assess(&ray, &ray_interference, p, self.cfg.network.eirp_max)?;
        let rho = self.cfg.network.rho_cov;
        Ok(BaselineReport {
            los,
            nlos,
            fit_samples: samples.len(),
            rho_cov: rho,
            ci,
            ray_coverage_at_ci_eirp: cov_ci,
            ray_coverage_at_eirp_max: cov_max,
            ray_min_eirp_dbm: min.map(w_to_dbm),
            shortfall: cov_ci < rho,
        })
    }
}

/// Scene from a path or a `bundled:<name>` reference.
pub fn resolve_scene(spec: &str) -> Result<Scene> {
    match spec.strip_prefix("bundled:") {
        Some(name) => crate::scene::bundled::by_name(name)
            .ok_or_else(|| config("scene", format!("unknown bundled scene '{name}'")))?
            .build(),
        None => crate::scene::load_scene(spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::dbm_to_w;

    #[test]
    fn defaults_are_reference_values() {
        let c = RunConfig::default();
        assert_eq!((c.z_b, c.z_n, c.f0, c.array.m_p), (30.0, 1.5, 3.5e9, 5));
        assert!((w_to_dbm(c.network.noise) + 95.0).abs() < 1e-9);
        assert_eq!(c.mc.delta_tol, 0.005);
        let it = [c.network.interferer_p_t, crate::units::db(c.network.interferer_gain)];
        assert!((it[0] - 200.0).abs() < 1e-12 && (it[1] - 15.0).abs() < 1e-9);
        assert_eq!((c.network.delta_rf, c.network.tau_e2), (0.045, 0.1));
        assert!((c.network.eirp_max - dbm_to_w(81.18)).abs() < 1e-9);
        assert_eq!((c.mobility.t_step, c.mobility.t_avg, c.mobility.speed_kmh), (1.0, 360.0, 5.0));
        assert!((crate::units::db(c.network.gamma_min) - 5.0).abs() < 1e-9);
        assert_eq!((c.delta_db, c.g0, c.g1), (5.0, 1.25, 10.0));
        assert_eq!((c.nm.n_s, c.mobility.rho_entry, c.nm.d_max, c.network.rho_cov), (7, 0.1, 1.0, 0.99));
        assert_eq!((c.network.prf.eval(18.0), c.network.prf.eval(45.0)), (0.083, 0.163));
    }

    #[test]
    fn config_round_trips_and_rejects_bad_fields() {
        let c = RunConfig {
            seed: Some(7),
            ..RunConfig::default()
        };
        let text = serde_json::to_string_pretty(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
        let bad = RunConfig {
            network: NetworkConfig {
                tau_e2: 1.5,
                ..NetworkConfig::default()
            },
            ..RunConfig::default()
        };
        match bad.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "network.tau_e2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn master_seed_fans_out() {
        let c = RunConfig {
            seed: Some(3),
            ..RunConfig::default()
        }
        .resolved();
        let seeds = [c.launch.seed, c.mobility.seed, c.mc.seed, c.nm.seed, c.baseline.seed];
        for i in 0..5 {
            for j in i + 1..5 {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
        assert_eq!(c, RunConfig { seed: Some(3), ..RunConfig::default() }.resolved());
    }
}
