//! Geometrical-optics and UTD field mathematics: transmit field, Fresnel
//! reflection, wedge diffraction, field summation and received power.
//!
//! Field amplitudes are peak values under the e^{−jks} convention. RMS
//! quantities (the effective field E_R and everything in dBµV/m) include the
//! 1/√2 factor.

mod fresnel;
mod utd;

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use fresnel::fresnel;
pub use utd::{fresnel_cs, transition, utd_coefficients, DiffractionCoefficients, WedgeGeometry};

use crate::error::{domain, Result};
use crate::geometry::{any_perpendicular, Vec3};
use crate::scene::Material;
use crate::units::{vm_to_dbuvm, C0, Z_F0};

/// Complex field vector (V/m, peak) in the global Cartesian frame.
pub type FieldVector = Vector3<Complex64>;

/// u · E for a real unit vector u.
pub fn cdot(u: &Vec3, e: &FieldVector) -> Complex64 {
    e.x * u.x + e.y * u.y + e.z * u.z
}

/// Real unit vector scaled by a complex amplitude.
pub fn cscale(u: &Vec3, a: Complex64) -> FieldVector {
    FieldVector::new(a * u.x, a * u.y, a * u.z)
}

/// Carrier frequency and derived wave quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Carrier {
    pub f0: f64,
    pub lambda: f64,
    pub k: f64,
}

impl Carrier {
    pub fn new(f0: f64) -> Carrier {
        let lambda = C0 / f0;
        Carrier {
            f0,
            lambda,
            k: 2.0 * PI / lambda,
        }
    }

    /// e^{−jks}
    pub fn phase(&self, s: f64) -> Complex64 {
        Complex64::from_polar(1.0, -self.k * s)
    }
}

impl Default for Carrier {
    fn default() -> Carrier {
        Carrier::new(3.5e9)
    }
}

/// Polar angle θ ∈ [0, π] and azimuth φ ∈ (−π, π] of a direction.
pub fn spherical_angles(d: &Vec3) -> (f64, f64) {
    let r = d.norm();
    let theta = (d.z / r).clamp(-1.0, 1.0).acos();
    let phi = d.y.atan2(d.x);
    (theta, phi)
}

pub fn direction(theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(st * cp, st * sp, ct)
}

pub fn theta_hat(theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(ct * cp, ct * sp, -st)
}

pub fn phi_hat(phi: f64) -> Vec3 {
    let (sp, cp) = phi.sin_cos();
    Vec3::new(-sp, cp, 0.0)
}

/// Characteristic pattern samples on a regular (θ, φ) grid. θ runs over
/// [0, π] inclusive, φ over [0, 2π) with wrap-around.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPattern {
    n_theta: usize,
    n_phi: usize,
    values: Vec<[Complex64; 2]>,
}

impl SampledPattern {
    /// Sample `f(θ, φ) -> [C_θ, C_φ]`. Fails if any sample has norm above 1.
    pub fn from_fn(n_theta: usize, n_phi: usize, f: impl Fn(f64, f64) -> [Complex64; 2]) -> Result<SampledPattern> {
        if n_theta < 2 || n_phi < 1 {
            return Err(domain("pattern grid needs n_theta ≥ 2 and n_phi ≥ 1"));
        }
        let mut values = Vec::with_capacity(n_theta * n_phi);
        for i in 0..n_theta {
            let theta = PI * i as f64 / (n_theta - 1) as f64;
            for j in 0..n_phi {
                let phi = 2.0 * PI * j as f64 / n_phi as f64;
                let c = f(theta, phi);
                if (c[0].norm_sqr() + c[1].norm_sqr()).sqrt() > 1.0 + 1e-12 {
                    return Err(domain(format!("pattern magnitude exceeds 1 at θ = {theta}, φ = {phi}")));
                }
                values.push(c);
            }
        }
        Ok(SampledPattern { n_theta, n_phi, values })
    }

    /// Bilinear interpolation of the samples.
    pub fn eval(&self, theta: f64, phi: f64) -> [Complex64; 2] {
        let ft = (theta.clamp(0.0, PI) / PI) * (self.n_theta - 1) as f64;
        let i0 = (ft.floor() as usize).min(self.n_theta - 2);
        let wt = ft - i0 as f64;
        let fp = phi.rem_euclid(2.0 * PI) / (2.0 * PI) * self.n_phi as f64;
        let j0 = (fp.floor() as usize) % self.n_phi;
        let j1 = (j0 + 1) % self.n_phi;
        let wp = fp - fp.floor();
        let at = |i: usize, j: usize| self.values[i * self.n_phi + j];
        let mut out = [Complex64::new(0.0, 0.0); 2];
        for (c, o) in out.iter_mut().enumerate() {
            let a = at(i0, j0)[c] * (1.0 - wp) + at(i0, j1)[c] * wp;
            let b = at(i0 + 1, j0)[c] * (1.0 - wp) + at(i0 + 1, j1)[c] * wp;
            *o = a * (1.0 - wt) + b * wt;
        }
        out
    }
}

/// Complex characteristic pattern C(θ, φ) = (C_θ, C_φ) in the antenna frame.
#[derive(Clone, Debug, PartialEq)]
pub enum Pattern {
    /// C ≡ (1, 0): θ-polarized with unit magnitude in every direction.
    Isotropic,
    Sampled(SampledPattern),
}

impl Pattern {
    pub fn eval(&self, theta: f64, phi: f64) -> [Complex64; 2] {
        match self {
            Pattern::Isotropic => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            Pattern::Sampled(p) => p.eval(theta, phi),
        }
    }

    /// Half-wave dipole along the local z axis, normalized to 1 at broadside.
    pub fn half_wave_dipole() -> Pattern {
        let p = SampledPattern::from_fn(181, 1, |theta, _| {
            let s = theta.sin();
            let v = if s.abs() < 1e-9 {
                0.0
            } else {
                (0.5 * PI * theta.cos()).cos() / s
            };
            [Complex64::new(v, 0.0), Complex64::new(0.0, 0.0)]
        })
        .expect("dipole pattern is bounded");
        Pattern::Sampled(p)
    }
}

/// Antenna description: linear gain, pattern, impedance and mounting.
#[derive(Clone, Debug, PartialEq)]
pub struct AntennaSpec {
    pub gain: f64,
    pub pattern: Pattern,
    pub impedance: Complex64,
    pub position: Vec3,
    /// Rotation taking antenna-frame vectors to the global frame.
    pub orientation: Matrix3<f64>,
}

impl AntennaSpec {
    pub fn isotropic(position: Vec3) -> AntennaSpec {
        AntennaSpec {
            gain: 1.0,
            pattern: Pattern::Isotropic,
            impedance: Complex64::new(50.0, 0.0),
            position,
            orientation: Matrix3::identity(),
        }
    }

    pub fn with_gain(mut self, gain: f64) -> AntennaSpec {
        self.gain = gain;
        self
    }

    /// Spherical angles of a global direction in the antenna frame, and the
    /// matching θ̂, φ̂ unit vectors expressed globally.
    pub fn local_basis(&self, dir: &Vec3) -> (f64, f64, Vec3, Vec3) {
        let local = self.orientation.transpose() * dir;
        let (theta, phi) = spherical_angles(&local);
        let th = self.orientation * theta_hat(theta, phi);
        let ph = self.orientation * phi_hat(phi);
        (theta, phi, th, ph)
    }
}

/// Which local basis a [`PolarizedField`] is expressed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BasisKind {
    /// (θ̂, φ̂) of an antenna frame.
    Spherical,
    /// (ŝ, p̂) of a reflection.
    Reflection,
    /// (β̂₀, φ̂) of an edge diffraction.
    Diffraction,
}

/// Two complex components on an orthonormal basis transverse to the
/// propagation direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizedField {
    pub kind: BasisKind,
    pub e1: Complex64,
    pub e2: Complex64,
    pub u1: Vec3,
    pub u2: Vec3,
}

impl PolarizedField {
    /// Components of a global field vector on (u1, u2).
    pub fn project(e: &FieldVector, kind: BasisKind, u1: Vec3, u2: Vec3) -> PolarizedField {
        PolarizedField {
            kind,
            e1: cdot(&u1, e),
            e2: cdot(&u2, e),
            u1,
            u2,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.e1.norm_sqr() + self.e2.norm_sqr()).sqrt()
    }

    fn scaled(&self, c1: Complex64, c2: Complex64) -> PolarizedField {
        PolarizedField {
            e1: self.e1 * c1,
            e2: self.e2 * c2,
            ..*self
        }
    }
}

/// Express a polarized field in the global frame.
pub fn to_global(field: &PolarizedField) -> FieldVector {
    cscale(&field.u1, field.e1) + cscale(&field.u2, field.e2)
}

/// Apply a real frame rotation to a complex field vector.
pub fn rotate_field(rotation: &Matrix3<f64>, e: &FieldVector) -> FieldVector {
    let re = rotation * e.map(|c| c.re);
    let im = rotation * e.map(|c| c.im);
    FieldVector::new(
        Complex64::new(re.x, im.x),
        Complex64::new(re.y, im.y),
        Complex64::new(re.z, im.z),
    )
}

/// √(P·G·Z_F0/2π): peak field (V/m) at 1 m for a given EIRP = P·G (W).
pub fn tx_amplitude(eirp: f64) -> f64 {
    (eirp.max(0.0) * Z_F0 / (2.0 * PI)).sqrt()
}

/// Field radiated by `tx` at distance `s` toward antenna-frame angles
/// (θ, φ), on the antenna's spherical basis.
pub fn tx_field(carrier: &Carrier, tx: &AntennaSpec, p_t: f64, s: f64, theta: f64, phi: f64) -> Result<PolarizedField> {
    if s <= 0.0 || !s.is_finite() {
        return Err(domain(format!("distance s = {s} must be positive")));
    }
    if p_t < 0.0 {
        return Err(domain("transmit power must be non-negative"));
    }
    let c = tx.pattern.eval(theta, phi);
    let a = tx_amplitude(p_t * tx.gain) / s * carrier.phase(s);
    Ok(PolarizedField {
        kind: BasisKind::Spherical,
        e1: c[0] * a,
        e2: c[1] * a,
        u1: tx.orientation * theta_hat(theta, phi),
        u2: tx.orientation * phi_hat(phi),
    })
}

/// Local bases of a specular reflection: ŝ = k̂ᵢ × n̂, p̂ = ŝ × k̂.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReflectionFrame {
    pub s: Vec3,
    pub p_in: Vec3,
    pub p_out: Vec3,
    /// Incidence angle from the normal.
    pub theta_i: f64,
}

impl ReflectionFrame {
    pub fn new(k_in: &Vec3, k_out: &Vec3, normal: &Vec3) -> ReflectionFrame {
        let n = if normal.dot(k_in) > 0.0 { -normal } else { *normal };
        let theta_i = (-n.dot(k_in)).clamp(-1.0, 1.0).acos().min(PI / 2.0);
        let cross = k_in.cross(&n);
        let s = if cross.norm() < 1e-12 {
            any_perpendicular(k_in)
        } else {
            cross.normalize()
        };
        ReflectionFrame {
            s,
            p_in: s.cross(k_in),
            p_out: s.cross(k_out),
            theta_i,
        }
    }
}

/// Reflected field vector at the reflection point (no spreading, no phase).
pub fn reflect_vector(e: &FieldVector, material: &Material, frame: &ReflectionFrame) -> FieldVector {
    let (r_s, r_p) = fresnel(material, frame.theta_i.min(PI / 2.0 - 1e-12));
    cscale(&frame.s, r_s * cdot(&frame.s, e)) + cscale(&frame.p_out, r_p * cdot(&frame.p_in, e))
}

/// Reflected field `s` meters past the reflection point, for an incident
/// wave whose reference point lies `s_prime` before it.
pub fn apply_reflection(
    incident: &PolarizedField,
    material: &Material,
    frame: &ReflectionFrame,
    s_prime: f64,
    s: f64,
    carrier: &Carrier,
) -> Result<PolarizedField> {
    if s_prime <= 0.0 || s < 0.0 {
        return Err(domain(format!("reflection distances s' = {s_prime}, s = {s} out of range")));
    }
    let e = to_global(incident);
    let local = PolarizedField::project(&e, BasisKind::Reflection, frame.s, frame.p_in);
    let (r_s, r_p) = fresnel(material, frame.theta_i.min(PI / 2.0 - 1e-12));
    let f = s_prime / (s_prime + s) * carrier.phase(s);
    Ok(PolarizedField {
        u2: frame.p_out,
        ..local.scaled(r_s * f, r_p * f)
    })
}

/// Edge-fixed bases of a diffraction: φ̂' = −(ê×ŝ')/|ê×ŝ'|, β̂₀' = ŝ'×φ̂',
/// φ̂ = (ê×ŝ)/|ê×ŝ|, β̂₀ = ŝ×φ̂.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffractionFrame {
    pub beta_in: Vec3,
    pub phi_in: Vec3,
    pub beta_out: Vec3,
    pub phi_out: Vec3,
}

impl DiffractionFrame {
    /// `s_in`, `s_out` are unit propagation directions before and after the
    /// edge. Returns `None` when either is parallel to the edge.
    pub fn new(edge_dir: &Vec3, s_in: &Vec3, s_out: &Vec3) -> Option<DiffractionFrame> {
        let a = edge_dir.cross(s_in);
        let b = edge_dir.cross(s_out);
        if a.norm() < 1e-12 || b.norm() < 1e-12 {
            return None;
        }
        let phi_in = -a.normalize();
        let phi_out = b.normalize();
        Some(DiffractionFrame {
            beta_in: s_in.cross(&phi_in),
            phi_in,
            beta_out: s_out.cross(&phi_out),
            phi_out,
        })
    }
}

/// Diffracted field vector (no spreading, no phase): E_β₀ = −D_s E_β₀',
/// E_φ = −D_h E_φ'.
pub fn diffract_vector(e: &FieldVector, coeffs: &DiffractionCoefficients, frame: &DiffractionFrame) -> FieldVector {
    cscale(&frame.beta_out, -coeffs.d_s * cdot(&frame.beta_in, e))
        + cscale(&frame.phi_out, -coeffs.d_h * cdot(&frame.phi_in, e))
}

/// Diffracted field `s` meters past the edge for an incident wave with
/// edge caustic distance `s_prime`.
pub fn apply_diffraction(
    incident: &PolarizedField,
    coeffs: &DiffractionCoefficients,
    frame: &DiffractionFrame,
    s_prime: f64,
    s: f64,
    carrier: &Carrier,
) -> Result<PolarizedField> {
    if s_prime <= 0.0 || s <= 0.0 {
        return Err(domain(format!("diffraction distances s' = {s_prime}, s = {s} must be positive")));
    }
    let e = to_global(incident);
    let local = PolarizedField::project(&e, BasisKind::Diffraction, frame.beta_in, frame.phi_in);
    let f = (s_prime / (s * (s_prime + s))).sqrt() * carrier.phase(s);
    Ok(PolarizedField {
        u1: frame.beta_out,
        u2: frame.phi_out,
        ..local.scaled(-coeffs.d_s * f, -coeffs.d_h * f)
    })
}

/// Coherent sum of path fields. Returns the RMS effective field E_R (V/m)
/// and its level in dBµV/m (−∞ for an empty or null sum).
pub fn sum_field(paths: &[FieldVector]) -> (f64, f64) {
    let total: FieldVector = paths.iter().fold(FieldVector::zeros(), |acc, e| acc + e);
    let e_r = effective_field(&total);
    (e_r, vm_to_dbuvm(e_r))
}

/// E_R = |E|/√2 for a peak complex field vector.
pub fn effective_field(e: &FieldVector) -> f64 {
    (e.iter().map(|c| c.norm_sqr()).sum::<f64>() / 2.0).sqrt()
}

/// Open-circuit voltage amplitude induced in `rx` by a field arriving with
/// propagation direction `k_arrival`.
pub fn rx_voltage(carrier: &Carrier, rx: &AntennaSpec, field: &FieldVector, k_arrival: &Vec3) -> Complex64 {
    let (theta, phi, th, ph) = rx.local_basis(&(-k_arrival));
    let c = rx.pattern.eval(theta, phi);
    let scale = (carrier.lambda * carrier.lambda * rx.gain * rx.impedance.re / (PI * Z_F0)).sqrt();
    (c[0] * cdot(&th, field) + c[1] * cdot(&ph, field)) * scale
}

/// P_R = |Σ V|²/(8 Re Z).
pub fn received_power(voltages: &[Complex64], rx: &AntennaSpec) -> Result<f64> {
    if rx.impedance.re <= 0.0 {
        return Err(domain("receive antenna impedance must have a positive real part"));
    }
    let v: Complex64 = voltages.iter().sum();
    Ok(v.norm_sqr() / (8.0 * rx.impedance.re))
}
