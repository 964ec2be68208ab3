//! Network layer over unit-EIRP rasters: actual transmit power, side-lobe
//! interference from neighbouring cells, CSI-impaired SINR, coverage and
//! instantaneous total exposure.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::emfield::Carrier;
use crate::error::{config, Error, Result};
use crate::geometry::Vec3;
use crate::units::{dbm_to_w, from_db, w_to_dbm, Z_F0};

/// Power reduction factor P_RF(N) = P_T,act/P_T,max as a function of the
/// number of connected UEs, piecewise linear between anchors and clamped
/// outside them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrfCurve {
    pub anchors: Vec<(f64, f64)>,
}

impl Default for PrfCurve {
    fn default() -> Self {
        PrfCurve {
            anchors: vec![(18.0, 0.083), (45.0, 0.163)],
        }
    }
}

impl PrfCurve {
    pub fn new(mut anchors: Vec<(f64, f64)>) -> Result<PrfCurve> {
        if anchors.is_empty() {
            return Err(config("prf", "need at least one anchor"));
        }
        anchors.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in anchors.windows(2) {
            if w[1].1 < w[0].1 {
                return Err(config("prf", "must be nondecreasing in N"));
            }
            if w[1].0 == w[0].0 {
                return Err(config("prf", "duplicate anchor"));
            }
        }
        if anchors.iter().any(|a| !(a.1 > 0.0 && a.1 <= 1.0)) {
            return Err(config("prf", "values must lie in (0, 1]"));
        }
        Ok(PrfCurve { anchors })
    }

    pub fn constant(v: f64) -> PrfCurve {
        PrfCurve {
            anchors: vec![(0.0, v)],
        }
    }

    pub fn eval(&self, n: f64) -> f64 {
        let a = &self.anchors;
        if n <= a[0].0 {
            return a[0].1;
        }
        let last = a[a.len() - 1];
        if n >= last.0 {
            return last.1;
        }
        let i = a.partition_point(|p| p.0 <= n);
        let (lo, hi) = (a[i - 1], a[i]);
        lo.1 + (hi.1 - lo.1) * (n - lo.0) / (hi.0 - lo.0)
    }
}

/// A neighbouring base station leaking into the target area.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interferer {
    pub position: Vec3,
    /// Theoretical maximum transmit power (W).
    pub p_t: f64,
    /// Linear antenna gain.
    pub gain: f64,
    /// Connected UEs in the interfering cell.
    pub n_ue: f64,
    /// Beamformed unit-EIRP received power per finest-grid cell (W).
    #[serde(default)]
    pub unit_power: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    /// Noise power σ_n² (W).
    pub noise: f64,
    /// CSI estimation error variance τ_e².
    pub tau_e2: f64,
    /// Side-lobe to main-lobe gain ratio.
    pub delta_rf: f64,
    /// Minimum SINR (linear).
    pub gamma_min: f64,
    pub rho_cov: f64,
    /// Regulatory EIRP limit (W).
    pub eirp_max: f64,
    /// UE antenna gain (linear).
    pub g_r: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub prf: PrfCurve,
    /// Interferer transmit power (W) and gain (linear) used when building
    /// interferers from scene positions.
    pub interferer_p_t: f64,
    pub interferer_gain: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            noise: dbm_to_w(-95.0),
            tau_e2: 0.1,
            delta_rf: 0.045,
            gamma_min: from_db(5.0),
            rho_cov: 0.99,
            eirp_max: dbm_to_w(81.18),
            g_r: 1.0,
            n_min: 18.0,
            n_max: 45.0,
            prf: PrfCurve::default(),
            interferer_p_t: 200.0,
            interferer_gain: from_db(15.0),
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config(name, "must be positive"))
            }
        };
        pos(self.noise, "noise")?;
        pos(self.gamma_min, "gamma_min")?;
        pos(self.eirp_max, "eirp_max")?;
        pos(self.g_r, "g_r")?;
        pos(self.interferer_p_t, "interferer_p_t")?;
        pos(self.interferer_gain, "interferer_gain")?;
        if !(0.0..1.0).contains(&self.tau_e2) {
            return Err(config("tau_e2", "must lie in [0, 1)"));
        }
        if !(self.delta_rf > 0.0 && self.delta_rf <= 1.0) {
            return Err(config("delta_rf", "must lie in (0, 1]"));
        }
        if !(self.rho_cov > 0.0 && self.rho_cov <= 1.0) {
            return Err(config("rho_cov", "must lie in (0, 1]"));
        }
        if !(self.n_min >= 1.0 && self.n_max >= self.n_min) {
            return Err(config("n_min", "need 1 ≤ n_min ≤ n_max"));
        }
        PrfCurve::new(self.prf.anchors.clone()).map(|_| ())
    }

    /// 1 − τ_e².
    pub fn delta_csi(&self) -> f64 {
        1.0 - self.tau_e2
    }
}

/// P_R,L(u) = Σ_l P_RF(N_l)·P_T,l·G_T,l·δ_RF·P^unit_l(u).
pub fn interference_raster(interferers: &[Interferer], cells: usize, cfg: &NetworkConfig) -> Result<Vec<f64>> {
    let mut out = vec![0.0; cells];
    for (l, it) in interferers.iter().enumerate() {
        if it.unit_power.len() != cells {
            return Err(Error::ShapeMismatch(format!(
                "interferer {l} raster has {} cells, expected {cells}",
                it.unit_power.len()
            )));
        }
        let scale = cfg.prf.eval(it.n_ue) * it.p_t * it.gain * cfg.delta_rf;
        for (o, p) in out.iter_mut().zip(&it.unit_power) {
            if p.is_finite() {
                *o += scale * p;
            }
        }
    }
    Ok(out)
}

/// Serving received power P_RF(N)·EIRP·P^unit(u).
pub fn serving_power(unit: &[f64], eirp: f64, n: f64, cfg: &NetworkConfig) -> Vec<f64> {
    let s = cfg.prf.eval(n) * eirp;
    unit.iter().map(|p| s * p).collect()
}

/// γ(u) = (1 − τ_e²)·P_RF(N)·EIRP·P^unit(u)/(P_R,L(u) + σ_n²).
pub fn sinr(unit: &[f64], eirp: f64, n: f64, interference: &[f64], cfg: &NetworkConfig) -> Vec<f64> {
    let s = cfg.delta_csi() * cfg.prf.eval(n) * eirp;
    unit.iter()
        .zip(interference)
        .map(|(p, i)| s * p / (i + cfg.noise))
        .collect()
}

/// Fraction of unmasked cells with γ ≥ γ_min.
pub fn coverage(gamma: &[f64], mask: &[bool], gamma_min: f64) -> f64 {
    let (mut pass, mut total) = (0usize, 0usize);
    for (g, m) in gamma.iter().zip(mask) {
        if *m {
            continue;
        }
        total += 1;
        if *g >= gamma_min {
            pass += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        pass as f64 / total as f64
    }
}

/// Per-cell EIRP (W) needed to reach γ_min with `n` serving UEs; infinite
/// where the serving unit power is zero.
pub fn required_eirp(unit: &[f64], interference: &[f64], n: f64, cfg: &NetworkConfig) -> Vec<f64> {
    let d = cfg.delta_csi() * cfg.prf.eval(n);
    unit.iter()
        .zip(interference)
        .map(|(p, i)| {
            if *p > 0.0 {
                cfg.gamma_min * (i + cfg.noise) / (d * p)
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Number of cells that must pass for coverage ρ over `n` cells.
pub fn cells_needed(rho: f64, n: usize) -> usize {
    ((rho * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Smallest EIRP (W) meeting the coverage target, evaluated at the
/// worst-case serving load `cfg.n_min`: the ⌈ρ·|U₀|⌉-th smallest per-cell
/// requirement.
pub fn min_eirp_for_coverage(unit: &[f64], interference: &[f64], mask: &[bool], cfg: &NetworkConfig) -> Result<f64> {
    let req = required_eirp(unit, interference, cfg.n_min, cfg);
    let mut vals: Vec<f64> = req.iter().zip(mask).filter(|(_, m)| !**m).map(|(r, _)| *r).collect();
    if vals.is_empty() {
        return Err(Error::EmptySamples);
    }
    let k = cells_needed(cfg.rho_cov, vals.len()).max(1);
    vals.sort_by(|a, b| a.total_cmp(b));
    let eirp = vals[k - 1];
    if !(eirp < cfg.eirp_max) {
        return Err(Error::Infeasible {
            required_dbm: w_to_dbm(eirp),
            limit_dbm: w_to_dbm(cfg.eirp_max),
        });
    }
    Ok(eirp)
}

/// Effective aperture λ²G_R/4π.
pub fn aperture(carrier: &Carrier, g_r: f64) -> f64 {
    carrier.lambda * carrier.lambda * g_r / (4.0 * PI)
}

/// E_bf,tot(u) = sqrt(Z_F0/A_e·(P_R,L(u) + N_occ(u)·P_R,bf(u))).
pub fn total_exposure(serving: &[f64], interference: &[f64], n_occ: &[u32], a_e: f64) -> Vec<f64> {
    serving
        .iter()
        .zip(interference)
        .zip(n_occ)
        .map(|((p, i), n)| (Z_F0 / a_e * (i + *n as f64 * p)).sqrt())
        .collect()
}

/// Same as [`total_exposure`] for one cell.
pub fn total_exposure_at(serving: f64, interference: f64, n_occ: u32, a_e: f64) -> f64 {
    (Z_F0 / a_e * (interference + n_occ as f64 * serving)).sqrt()
}

/// Per-cell network quantities for one operating point.
#[derive(Clone, Debug, Serialize)]
pub struct ExposureField {
    pub serving: Vec<f64>,
    pub interference: Vec<f64>,
    pub sinr: Vec<f64>,
    /// Exposure with a single UE per cell (V/m RMS).
    pub total: Vec<f64>,
}

pub fn exposure_field(
    unit: &[f64],
    interference: &[f64],
    eirp: f64,
    n: f64,
    cfg: &NetworkConfig,
    carrier: &Carrier,
) -> ExposureField {
    let serving = serving_power(unit, eirp, n, cfg);
    let gamma = sinr(unit, eirp, n, interference, cfg);
    let ones = vec![1u32; unit.len()];
    let total = total_exposure(&serving, interference, &ones, aperture(carrier, cfg.g_r));
    ExposureField {
        serving,
        interference: interference.to_vec(),
        sinr: gamma,
        total,
    }
}
