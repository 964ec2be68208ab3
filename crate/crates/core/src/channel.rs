//! Narrowband MISO channel from traced paths, and maximum-ratio transmission.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::emfield::{effective_field, AntennaSpec, Carrier, FieldVector};
use crate::error::{config, Error, Result};
use crate::geometry::Vec3;
use crate::raylaunch::{RayPath, Tracer};

/// Uniform linear array centred on the antenna reference position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArraySpec {
    pub m_ant: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    /// Array axis (normalised on use).
    pub axis: [f64; 3],
    /// Number of strongest paths used to build the channel matrix.
    pub m_p: usize,
}

impl Default for ArraySpec {
    fn default() -> Self {
        ArraySpec {
            m_ant: 8,
            spacing: 0.5,
            axis: [1.0, 0.0, 0.0],
            m_p: 5,
        }
    }
}

impl ArraySpec {
    pub fn single() -> ArraySpec {
        ArraySpec {
            m_ant: 1,
            ..ArraySpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_ant == 0 {
            return Err(config("m_ant", "need at least one element"));
        }
        if !(self.spacing >= 0.0) {
            return Err(config("spacing", "must be non-negative"));
        }
        if Vec3::from(self.axis).norm() == 0.0 {
            return Err(config("axis", "must be non-zero"));
        }
        if self.m_p == 0 {
            return Err(config("m_p", "need at least one path"));
        }
        Ok(())
    }

    /// Element offsets (m) from the reference point.
    pub fn offsets(&self, carrier: &Carrier) -> Vec<Vec3> {
        let axis = Vec3::from(self.axis).normalize();
        let d = self.spacing * carrier.lambda;
        let mid = (self.m_ant as f64 - 1.0) / 2.0;
        (0..self.m_ant).map(|i| axis * ((i as f64 - mid) * d)).collect()
    }
}

/// Row channel H ∈ C^{1×M}.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelMatrix {
    pub h: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.h.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Unit-norm beamforming vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeamVector {
    pub w: Vec<Complex64>,
}

/// h = (λ/4π)·sqrt(G_T G_R) Σ C_R·T·C_T e^{−jks}: the ratio V_R/V_T of one
/// Tx/Rx antenna pair over the given paths.
pub fn channel_response(paths: &[RayPath], tx: &AntennaSpec, rx: &AntennaSpec, carrier: &Carrier) -> Complex64 {
    let scale = carrier.lambda / (4.0 * PI) * (tx.gain * rx.gain).sqrt();
    paths
        .iter()
        .map(|p| path_response(p, tx, rx, carrier) * scale)
        .sum()
}

fn path_response(p: &RayPath, tx: &AntennaSpec, rx: &AntennaSpec, carrier: &Carrier) -> Complex64 {
    let c_t = tx.pattern.eval(p.departure.0, p.departure.1);
    let c_r = rx.pattern.eval(p.arrival.0, p.arrival.1);
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..2 {
        for c in 0..2 {
            acc += c_r[r] * p.transfer[r][c] * c_t[c];
        }
    }
    acc * carrier.phase(p.length)
}

/// Plane-wave phase factor of element offset `r` for a path leaving along
/// `k_dep`: elements further along the departure direction are closer.
fn element_phase(carrier: &Carrier, k_dep: &Vec3, r: &Vec3) -> Complex64 {
    Complex64::from_polar(1.0, carrier.k * k_dep.dot(r))
}

/// Channel row for an array whose reference element sees `paths`; the
/// `m_p` strongest paths are used (paths must be sorted by |V| descending,
/// as returned by the tracer).
pub fn channel_matrix(
    paths: &[RayPath],
    tx: &AntennaSpec,
    rx: &AntennaSpec,
    carrier: &Carrier,
    array: &ArraySpec,
) -> ChannelMatrix {
    let used = &paths[..paths.len().min(array.m_p)];
    let scale = carrier.lambda / (4.0 * PI) * (tx.gain * rx.gain).sqrt();
    let per_path: Vec<Complex64> = used.iter().map(|p| path_response(p, tx, rx, carrier) * scale).collect();
    let h = array
        .offsets(carrier)
        .iter()
        .map(|r| {
            used.iter()
                .zip(&per_path)
                .map(|(p, hp)| hp * element_phase(carrier, &p.k_departure, r))
                .sum()
        })
        .collect();
    ChannelMatrix { h }
}

/// Trace once from the array reference position and build H.
pub fn build_h(tracer: &Tracer, tx: &AntennaSpec, rx: &AntennaSpec, array: &ArraySpec) -> ChannelMatrix {
    let paths = tracer.paths(tx, rx, 1.0);
    channel_matrix(&paths, tx, rx, tracer.carrier(), array)
}

/// w = Hᴴ/‖H‖.
pub fn mrt(h: &ChannelMatrix) -> Result<BeamVector> {
    let n = h.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroChannel);
    }
    Ok(BeamVector {
        w: h.h.iter().map(|c| c.conj() / n).collect(),
    })
}

/// h_bf = H·w.
pub fn effective_gain(h: &ChannelMatrix, w: &BeamVector) -> Complex64 {
    h.h.iter().zip(&w.w).map(|(a, b)| a * b).sum()
}

/// Beamformed quantities at one receiver for unit EIRP.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BeamformedSample {
    /// Received power (W) for EIRP = 1 W.
    pub power: f64,
    /// RMS field (V/m) for EIRP = 1 W.
    pub field: f64,
}

/// MRT-beamformed received power and exposure at the receiver of `paths`
/// for unit EIRP. `paths` must have been evaluated with p_t = 1/G_T, so
/// that each element radiating alone gives unit EIRP. The field sums every
/// path, weighted per element; the power uses the `m_p` strongest.
pub fn beamformed_unit(
    paths: &[RayPath],
    tx: &AntennaSpec,
    rx: &AntennaSpec,
    carrier: &Carrier,
    array: &ArraySpec,
) -> BeamformedSample {
    let h = channel_matrix(paths, tx, rx, carrier, array);
    let Ok(w) = mrt(&h) else {
        return BeamformedSample { power: 0.0, field: 0.0 };
    };
    let power = effective_gain(&h, &w).norm_sqr() / tx.gain;
    let offsets = array.offsets(carrier);
    let mut total = FieldVector::zeros();
    for p in paths {
        let af: Complex64 = offsets
            .iter()
            .zip(&w.w)
            .map(|(r, wi)| wi * element_phase(carrier, &p.k_departure, r))
            .sum();
        total += p.field * af;
    }
    BeamformedSample {
        power,
        field: effective_field(&total),
    }
}
