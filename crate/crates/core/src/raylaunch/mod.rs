//! Ray launching: LoS, specular reflection and edge diffraction paths between
//! a transmitter and receivers, with field evaluation per path.

mod diffraction;
mod directions;
mod sbr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use diffraction::{fermat_diffraction_point, fermat_two_edges, FermatPair, FermatPoint};
pub use directions::{generate_directions, DirectionSet};
pub use sbr::{dedupe_least_time, reconstruct_reflections, shoot, shoot_many, HitChain};

use crate::emfield::{
    cdot, diffract_vector, reflect_vector, rx_voltage, spherical_angles, tx_amplitude, utd_coefficients,
    AntennaSpec, Carrier, DiffractionFrame, FieldVector, ReflectionFrame, WedgeGeometry,
};
use crate::error::{config as config_err, Result};
use crate::geometry::Vec3;
use crate::scene::Scene;
use crate::units::C0;

/// Ray-launching parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaunchConfig {
    /// Number of launched rays.
    pub m_dim: usize,
    /// Minimum receiver sphere radius (m). The effective radius grows with
    /// the unfolded ray length as s·sqrt(4π/M).
    pub rx_radius: f64,
    pub max_reflections: usize,
    /// 0, 1 or 2.
    pub max_diffractions: usize,
    /// Also search one-reflection + one-diffraction paths.
    pub mixed: bool,
    pub seed: u64,
}

impl Default for LaunchConfig {
    fn default() -> Self {
        LaunchConfig {
            m_dim: 10_000_000,
            rx_radius: 0.1,
            max_reflections: 5,
            max_diffractions: 2,
            mixed: false,
            seed: 0,
        }
    }
}

impl LaunchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_dim == 0 {
            return Err(config_err("m_dim", "must be at least 1"));
        }
        if !(self.rx_radius > 0.0) {
            return Err(config_err("rx_radius", "must be positive"));
        }
        if self.max_diffractions > 2 {
            return Err(config_err("max_diffractions", "at most 2 supported"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    #[serde(rename = "los")]
    LoS,
    Reflection,
    Diffraction,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Interaction {
    Reflection { point: Vec3, triangle: usize, group: usize },
    Diffraction { point: Vec3, edge: usize },
}

impl Interaction {
    pub fn point(&self) -> Vec3 {
        match *self {
            Interaction::Reflection { point, .. } | Interaction::Diffraction { point, .. } => point,
        }
    }

    fn is_diffraction(&self) -> bool {
        matches!(self, Interaction::Diffraction { .. })
    }
}

fn classify(seq: &[Interaction]) -> PathKind {
    let d = seq.iter().filter(|i| i.is_diffraction()).count();
    match (d, seq.len()) {
        (_, 0) => PathKind::LoS,
        (0, _) => PathKind::Reflection,
        (d, n) if d == n => PathKind::Diffraction,
        _ => PathKind::Mixed,
    }
}

/// One propagation path with its field at the receiver.
#[derive(Clone, Debug, Serialize)]
pub struct RayPath {
    pub kind: PathKind,
    pub interactions: Vec<Interaction>,
    /// Total unfolded length (m).
    pub length: f64,
    /// Propagation delay (s).
    pub delay: f64,
    /// (θ, φ) of departure in the Tx antenna frame.
    pub departure: (f64, f64),
    /// (θ, φ) of arrival (direction toward the last interaction) in the Rx frame.
    pub arrival: (f64, f64),
    /// Global unit vector leaving the Tx.
    pub k_departure: Vec3,
    /// Global unit propagation direction at the Rx.
    pub k_arrival: Vec3,
    /// Polarimetric transfer from Tx (θ, φ) to Rx (θ, φ) components,
    /// including spreading and interaction coefficients but not the
    /// propagation phase or the Tx amplitude.
    pub transfer: [[Complex64; 2]; 2],
    /// Peak complex field at the Rx.
    pub field: FieldVector,
    /// Open-circuit voltage amplitude at the Rx.
    pub voltage: Complex64,
}

impl RayPath {
    pub fn order(&self) -> usize {
        self.interactions.len()
    }
}

/// Field evaluation of a geometric path for a transmit antenna of power
/// `p_t` (W). Returns `None` for geometrically degenerate wedge encounters.
pub fn evaluate_path(
    scene: &Scene,
    carrier: &Carrier,
    tx: &AntennaSpec,
    rx: &AntennaSpec,
    p_t: f64,
    seq: &[Interaction],
) -> Option<RayPath> {
    let mut pts = Vec::with_capacity(seq.len() + 2);
    pts.push(tx.position);
    pts.extend(seq.iter().map(Interaction::point));
    pts.push(rx.position);
    let legs: Vec<f64> = pts.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    if legs.iter().any(|&l| l < 1e-9) {
        return None;
    }
    let dirs: Vec<Vec3> = pts.windows(2).zip(&legs).map(|(w, l)| (w[1] - w[0]) / *l).collect();
    let length: f64 = legs.iter().sum();

    let (th_t, ph_t, theta_t, phi_t) = tx.local_basis(&dirs[0]);
    let mut e = [theta_t.map(Complex64::from), phi_t.map(Complex64::from)];
    let mut amp = 1.0;
    // unfolded length since the last caustic, and the caustic distance of
    // the current wave (None while it is still spherical from the Tx)
    let mut s_unf = 0.0;
    let mut rho: Option<f64> = None;
    let spread = |rho: Option<f64>, s: f64| match rho {
        None => 1.0 / s,
        Some(r) => (r / (s * (r + s))).sqrt(),
    };

    for (i, inter) in seq.iter().enumerate() {
        let (k_in, k_out) = (dirs[i], dirs[i + 1]);
        s_unf += legs[i];
        match *inter {
            Interaction::Reflection { triangle, .. } => {
                let frame = ReflectionFrame::new(&k_in, &k_out, &scene.triangles[triangle].normal);
                let mat = scene.material_of(triangle);
                for ej in e.iter_mut() {
                    *ej = reflect_vector(ej, mat, &frame);
                }
            }
            Interaction::Diffraction { point, edge } => {
                let ed = &scene.edges[edge];
                amp *= spread(rho, s_unf);
                let s_in = s_unf;
                // unfolded distance to the next diffraction or the Rx
                let next_d = seq[i + 1..].iter().position(Interaction::is_diffraction).map_or(seq.len(), |p| i + 1 + p);
                let s_out: f64 = legs[i + 1..=next_d].iter().sum();
                let beta0 = k_in.dot(&ed.dir).clamp(-1.0, 1.0).acos();
                if beta0.sin() < 1e-3 {
                    return None;
                }
                let geom = WedgeGeometry {
                    n: ed.n,
                    phi_i: ed.exterior_angle(&point, &pts[i])?,
                    phi_d: ed.exterior_angle(&point, &pts[i + 2])?,
                    beta0,
                    l: s_in * s_out * beta0.sin().powi(2) / (s_in + s_out),
                };
                let coeffs = utd_coefficients(
                    &geom,
                    &scene.materials[ed.material_a],
                    &scene.materials[ed.material_b],
                    carrier,
                )
                .ok()?;
                let frame = DiffractionFrame::new(&ed.dir, &k_in, &k_out)?;
                for ej in e.iter_mut() {
                    *ej = diffract_vector(ej, &coeffs, &frame);
                }
                rho = Some(s_in);
                s_unf = 0.0;
            }
        }
    }
    s_unf += legs[seq.len()];
    amp *= spread(rho, s_unf);

    let k_arr = *dirs.last().unwrap();
    let (th_r, ph_r, theta_r, phi_r) = rx.local_basis(&(-k_arr));
    let mut transfer = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (c, ej) in e.iter().enumerate() {
        transfer[0][c] = cdot(&theta_r, ej) * amp;
        transfer[1][c] = cdot(&phi_r, ej) * amp;
    }
    let c_t = tx.pattern.eval(th_t, ph_t);
    let a0 = tx_amplitude(p_t * tx.gain) * amp;
    let field = (e[0] * c_t[0] + e[1] * c_t[1]) * (carrier.phase(length) * a0);
    let voltage = rx_voltage(carrier, rx, &field, &k_arr);
    Some(RayPath {
        kind: classify(seq),
        interactions: seq.to_vec(),
        length,
        delay: length / C0,
        departure: (th_t, ph_t),
        arrival: (th_r, ph_r),
        k_departure: dirs[0],
        k_arrival: k_arr,
        transfer,
        field,
        voltage,
    })
}

/// Reusable tracer holding per-scene precomputation (edge-pair visibility).
pub struct Tracer<'a> {
    scene: &'a Scene,
    carrier: Carrier,
    config: LaunchConfig,
    pairs: Vec<Vec<u32>>,
}

impl<'a> Tracer<'a> {
    pub fn new(scene: &'a Scene, carrier: Carrier, config: LaunchConfig) -> Result<Tracer<'a>> {
        config.validate()?;
        let pairs = if config.max_diffractions >= 2 {
            diffraction::edge_pairs(scene)
        } else {
            Vec::new()
        };
        Ok(Tracer {
            scene,
            carrier,
            config,
            pairs,
        })
    }

    pub fn config(&self) -> &LaunchConfig {
        &self.config
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    fn tx_edges(&self, tx: &Vec3) -> Vec<usize> {
        if self.config.max_diffractions == 0 && !self.config.mixed {
            return Vec::new();
        }
        (0..self.scene.edges.len())
            .filter(|&i| diffraction::in_exterior(&self.scene.edges[i], tx))
            .collect()
    }

    /// Geometric path candidates between two points, given the SBR chains
    /// captured at the receiver.
    fn sequences(&self, tx: &Vec3, rx: &Vec3, chains: &[HitChain], edges: &[usize]) -> Vec<Vec<Interaction>> {
        let scene = self.scene;
        let mut out = Vec::new();
        if !scene.occluded(tx, rx) {
            out.push(Vec::new());
        }
        for chain in dedupe_least_time(chains) {
            if chain.groups.is_empty() {
                continue;
            }
            if let Some(pts) = reconstruct_reflections(scene, tx, rx, &chain.groups) {
                out.push(
                    pts.into_iter()
                        .map(|(point, tri)| Interaction::Reflection {
                            point,
                            triangle: tri,
                            group: scene.triangles[tri].group,
                        })
                        .collect(),
                );
            }
        }
        if self.config.max_diffractions >= 1 {
            out.extend(diffraction::first_order(scene, tx, rx, edges));
        }
        if self.config.max_diffractions >= 2 {
            out.extend(diffraction::second_order(scene, &self.pairs, tx, rx, edges));
        }
        if self.config.mixed && self.config.max_diffractions >= 1 && self.config.max_reflections >= 1 {
            out.extend(diffraction::mixed(scene, tx, rx, edges));
        }
        out
    }

    fn evaluate(&self, tx: &AntennaSpec, rx: &AntennaSpec, p_t: f64, seqs: Vec<Vec<Interaction>>) -> Vec<RayPath> {
        let mut paths: Vec<RayPath> = seqs
            .iter()
            .filter_map(|s| evaluate_path(self.scene, &self.carrier, tx, rx, p_t, s))
            .collect();
        paths.sort_by(|a, b| {
            b.voltage
                .norm()
                .total_cmp(&a.voltage.norm())
                .then(a.length.total_cmp(&b.length))
                .then(a.kind.cmp(&b.kind))
        });
        paths
    }

    /// All paths between `tx` and `rx`, sorted by |V| descending.
    pub fn paths(&self, tx: &AntennaSpec, rx: &AntennaSpec, p_t: f64) -> Vec<RayPath> {
        let chains = if self.config.max_reflections > 0 {
            shoot(self.scene, &tx.position, &rx.position, &self.config)
        } else {
            Vec::new()
        };
        let edges = self.tx_edges(&tx.position);
        let seqs = self.sequences(&tx.position, &rx.position, &chains, &edges);
        self.evaluate(tx, rx, p_t, seqs)
    }

    /// Paths to many receivers sharing one antenna description (`rx` with
    /// its position replaced per point). One ray launch serves all points.
    pub fn paths_many(&self, tx: &AntennaSpec, rx: &AntennaSpec, points: &[Vec3], p_t: f64) -> Vec<Vec<RayPath>> {
        use rayon::prelude::*;
        let chains = if self.config.max_reflections > 0 {
            shoot_many(self.scene, &tx.position, points, &self.config)
        } else {
            vec![Vec::new(); points.len()]
        };
        let edges = self.tx_edges(&tx.position);
        points
            .par_iter()
            .zip(chains.par_iter())
            .map(|(p, ch)| {
                let seqs = self.sequences(&tx.position, p, ch, &edges);
                let rx_here = AntennaSpec {
                    position: *p,
                    ..rx.clone()
                };
                self.evaluate(tx, &rx_here, p_t, seqs)
            })
            .collect()
    }
}

/// All propagation paths from `tx` to `rx` for transmit power `p_t` (W),
/// sorted by |V| descending.
pub fn compute_multipath(
    scene: &Scene,
    tx: &AntennaSpec,
    rx: &AntennaSpec,
    p_t: f64,
    carrier: &Carrier,
    config: &LaunchConfig,
) -> Result<Vec<RayPath>> {
    Ok(Tracer::new(scene, *carrier, config.clone())?.paths(tx, rx, p_t))
}

/// Pure diffraction paths (orders up to `config.max_diffractions`) between
/// two points, evaluated for isotropic antennas at 1 W EIRP.
pub fn diffraction_paths(
    scene: &Scene,
    p_t: &Vec3,
    p_r: &Vec3,
    carrier: &Carrier,
    config: &LaunchConfig,
) -> Result<Vec<RayPath>> {
    let cfg = LaunchConfig {
        max_reflections: 0,
        mixed: false,
        ..config.clone()
    };
    let tracer = Tracer::new(scene, *carrier, cfg)?;
    let edges = tracer.tx_edges(p_t);
    let mut seqs = diffraction::first_order(scene, p_t, p_r, &edges);
    if config.max_diffractions >= 2 {
        seqs.extend(diffraction::second_order(scene, &tracer.pairs, p_t, p_r, &edges));
    }
    let tx = AntennaSpec::isotropic(*p_t);
    let rx = AntennaSpec::isotropic(*p_r);
    Ok(tracer.evaluate(&tx, &rx, 1.0, seqs))
}

/// Arrival direction of a path as (θ, φ) in global coordinates.
pub fn global_angles(k: &Vec3) -> (f64, f64) {
    spherical_angles(k)
}

#[cfg(test)]
mod tests;
