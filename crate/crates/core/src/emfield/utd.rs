//! Heuristic UTD wedge diffraction coefficients for lossy wedges.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::Serialize;

use super::fresnel::fresnel;
use super::Carrier;
use crate::error::{domain, Result};
use crate::scene::Material;

/// Fresnel integrals C(x), S(x) with the π/2 normalization.
///
/// Power series below |x| = 1.5, Lentz continued fraction above.
pub fn fresnel_cs(x: f64) -> (f64, f64) {
    let (c, s) = fresnel_cs_abs(x.abs());
    if x < 0.0 {
        (-c, -s)
    } else {
        (c, s)
    }
}

fn fresnel_cs_abs(ax: f64) -> (f64, f64) {
    if ax < 1.5 {
        let (c, s) = fresnel_series(ax);
        (c, s)
    } else {
        let tail = fresnel_tail(ax);
        (0.5 - tail.re, 0.5 - tail.im)
    }
}

fn fresnel_series(ax: f64) -> (f64, f64) {
    if ax < 1e-150 {
        return (ax, 0.0);
    }
    let fact = FRAC_PI_2 * ax * ax;
    let mut sum = 0.0;
    let mut sums = 0.0;
    let mut sumc = ax;
    let mut sign = 1.0;
    let mut odd = true;
    let mut term = ax;
    let mut n = 3.0;
    for k in 1..200 {
        term *= fact / k as f64;
        sum += sign * term / n;
        let test = sum.abs() * 1e-17;
        if odd {
            sign = -sign;
            sums = sum;
            sum = sumc;
        } else {
            sumc = sum;
            sum = sums;
        }
        if term < test {
            break;
        }
        odd = !odd;
        n += 2.0;
    }
    (sumc, sums)
}

/// Complementary integrals (1/2 − C(x)) + j(1/2 − S(x)) for x ≥ 1.5,
/// computed without cancellation.
fn fresnel_tail(ax: f64) -> Complex64 {
    let pix2 = PI * ax * ax;
    let mut b = Complex64::new(1.0, -pix2);
    let mut cc = Complex64::new(1e300, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    let mut n = -1.0;
    for _ in 2..300 {
        n += 2.0;
        let a = -n * (n + 1.0);
        b += Complex64::new(4.0, 0.0);
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        cc = b + Complex64::new(a, 0.0) / cc;
        let del = cc * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
            break;
        }
    }
    h *= Complex64::new(ax, -ax);
    // C + jS = (1+j)/2 · (1 − e^{j pix2/2} h), so the complement is the product
    Complex64::new(0.5, 0.5) * Complex64::from_polar(1.0, 0.5 * pix2) * h
}

/// Kouyoumjian–Pathak transition function
/// F(x) = 2j√x e^{jx} ∫_{√x}^{∞} e^{−jτ²} dτ.
pub fn transition(x: f64) -> Complex64 {
    if x <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let v = x.sqrt();
    let u = v * (2.0 / PI).sqrt();
    // ∫_v^∞ e^{−jτ²} dτ = √(π/2) [(1/2 − C(u)) − j(1/2 − S(u))]
    let comp = if u < 1.5 {
        let (c, s) = fresnel_series(u);
        Complex64::new(0.5 - c, 0.5 - s)
    } else {
        fresnel_tail(u)
    };
    let integral = (PI / 2.0).sqrt() * comp.conj();
    Complex64::new(0.0, 2.0 * v) * Complex64::from_polar(1.0, x) * integral
}

/// Inputs to the wedge coefficient evaluation. Angles in radians.
#[derive(Clone, Copy, Debug)]
pub struct WedgeGeometry {
    /// Exterior wedge parameter (1 < n ≤ 2).
    pub n: f64,
    /// Incidence angle measured from the 0-face.
    pub phi_i: f64,
    /// Diffraction angle measured from the 0-face.
    pub phi_d: f64,
    /// Skew angle between the incident ray and the edge.
    pub beta0: f64,
    /// Distance parameter L (m).
    pub l: f64,
}

/// Soft and hard diffraction coefficients with their constituents.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiffractionCoefficients {
    pub d_s: Complex64,
    pub d_h: Complex64,
    /// Cotangent×transition terms: [ISB 0-face, ISB n-face, RSB 0-face, RSB n-face],
    /// before the reflection-coefficient weights.
    pub terms: [Complex64; 4],
    pub r0_s: Complex64,
    pub r0_h: Complex64,
    pub rn_s: Complex64,
    pub rn_h: Complex64,
    pub beta0: f64,
    pub n: f64,
}

fn a_pm(n: f64, beta: f64, plus: bool) -> (f64, f64) {
    let sgn = if plus { 1.0 } else { -1.0 };
    let big_n = ((beta + sgn * PI) / (2.0 * PI * n)).round();
    let a = 2.0 * ((2.0 * PI * n * big_n - beta) / 2.0).cos().powi(2);
    (a, big_n)
}

/// cot((π ± β)/2n) · F(kL a±(β)), with the finite limit near its pole.
fn cot_term(n: f64, beta: f64, plus: bool, kl: f64) -> Complex64 {
    let sgn = if plus { 1.0 } else { -1.0 };
    let (a, big_n) = a_pm(n, beta, plus);
    let arg = (PI + sgn * beta) / (2.0 * n);
    // offset from the pole of the cotangent
    let eps = if plus {
        PI + beta - 2.0 * PI * n * big_n
    } else {
        PI - beta + 2.0 * PI * n * big_n
    };
    if eps.abs() < 1e-6 {
        let j4 = Complex64::from_polar(1.0, FRAC_PI_4);
        let lead = Complex64::new((2.0 * PI * kl).sqrt() * eps.signum(), 0.0);
        return n * (lead - 2.0 * kl * eps * j4) * j4;
    }
    Complex64::new(1.0 / arg.tan(), 0.0) * transition(kl * a)
}

/// Incidence angle from the face normal for a ray making grazing angle `psi`
/// with the face.
fn normal_incidence_angle(psi: f64) -> f64 {
    (FRAC_PI_2 - psi).abs().min(FRAC_PI_2 - 1e-9)
}

/// Heuristic diffraction coefficients for a wedge with possibly different
/// face materials (`mat_0` on the 0-face, `mat_n` on the n-face).
pub fn utd_coefficients(
    geom: &WedgeGeometry,
    mat_0: &Material,
    mat_n: &Material,
    carrier: &Carrier,
) -> Result<DiffractionCoefficients> {
    let WedgeGeometry {
        n,
        phi_i,
        phi_d,
        beta0,
        l,
    } = *geom;
    let tol = 1e-9;
    if !(n > 1.0 && n <= 2.0 + tol) {
        return Err(domain(format!("wedge parameter n = {n} outside (1, 2]")));
    }
    if !(beta0 > 0.0 && beta0 <= PI - tol) {
        return Err(domain(format!("skew angle β0' = {beta0} outside (0, π)")));
    }
    let upper = n * PI + tol;
    if !(-tol..=upper).contains(&phi_i) || !(-tol..=upper).contains(&phi_d) {
        return Err(domain(format!(
            "angles φ' = {phi_i}, φ = {phi_d} outside [0, nπ] for n = {n}"
        )));
    }
    if l <= 0.0 {
        return Err(domain("distance parameter L must be positive"));
    }
    let k = carrier.k;
    let kl = k * l;
    let bm = phi_d - phi_i;
    let bp = phi_d + phi_i;
    let terms = [
        cot_term(n, bm, true, kl),
        cot_term(n, bm, false, kl),
        cot_term(n, bp, false, kl),
        cot_term(n, bp, true, kl),
    ];
    let (r0_s, r0_h) = fresnel(mat_0, normal_incidence_angle(phi_i.clamp(0.0, FRAC_PI_2)));
    let psi_n = (n * PI - phi_d).clamp(0.0, FRAC_PI_2);
    let (rn_s, rn_h) = fresnel(mat_n, normal_incidence_angle(psi_n));
    let pre = -Complex64::from_polar(1.0, -FRAC_PI_4) / (2.0 * n * (2.0 * PI * k).sqrt() * beta0.sin());
    let d_s = pre * (terms[0] + terms[1] + r0_s * terms[2] + rn_s * terms[3]);
    let d_h = pre * (terms[0] + terms[1] + r0_h * terms[2] + rn_h * terms[3]);
    Ok(DiffractionCoefficients {
        d_s,
        d_h,
        terms,
        r0_s,
        r0_h,
        rn_s,
        rn_h,
        beta0,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule for ∫_v^{v+T} e^{−jτ²} dτ plus an asymptotic tail.
    fn integral_oracle(v: f64) -> Complex64 {
        let upper = v + 60.0;
        let steps = 2_000_000;
        let h = (upper - v) / steps as f64;
        let f = |t: f64| Complex64::from_polar(1.0, -t * t);
        let mut acc = f(v) + f(upper);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(v + i as f64 * h);
        }
        let head = acc * (h / 3.0);
        // two terms of the integration-by-parts expansion of ∫_T^∞ e^{−jτ²} dτ
        let tail = Complex64::from_polar(1.0, -upper * upper)
            * (Complex64::new(1.0, 0.0) / Complex64::new(0.0, 2.0 * upper) + 1.0 / (4.0 * upper.powi(3)));
        head + tail
    }

    #[test]
    fn transition_matches_quadrature() {
        for &x in &[0.01, 0.3, 1.0, 2.5, 7.0, 30.0] {
            let v: f64 = f64::sqrt(x);
            let expected = Complex64::new(0.0, 2.0 * v) * Complex64::from_polar(1.0, x) * integral_oracle(v);
            let got = transition(x);
            assert!((got - expected).norm() < 1e-6, "x={x}: {got} vs {expected}");
        }
    }

    #[test]
    fn transition_limits() {
        assert!((transition(1e4) - Complex64::new(1.0, 0.0)).norm() < 1e-3);
        // F(x) ≈ [√(πx) − 2x e^{jπ/4}] e^{j(π/4 + x)} for small x
        let x = 1e-6;
        let small = (Complex64::new((PI * x).sqrt(), 0.0) - 2.0 * x * Complex64::from_polar(1.0, FRAC_PI_4))
            * Complex64::from_polar(1.0, FRAC_PI_4 + x);
        assert!((transition(x) - small).norm() < 1e-10);
    }

    #[test]
    fn fresnel_integrals_known_values() {
        let (c, s) = fresnel_cs(1.0);
        assert!((c - 0.779_893_400_376_823).abs() < 1e-12);
        assert!((s - 0.438_259_147_390_355).abs() < 1e-12);
        let (c, s) = fresnel_cs(2.0);
        assert!((c - 0.488_253_406_075_341).abs() < 1e-12);
        assert!((s - 0.343_415_678_363_698).abs() < 1e-12);
    }

    fn pec_coeffs(n: f64, phi_i: f64, phi_d: f64, beta0: f64, l: f64) -> DiffractionCoefficients {
        let g = WedgeGeometry {
            n,
            phi_i,
            phi_d,
            beta0,
            l,
        };
        utd_coefficients(&g, &Material::pec(), &Material::pec(), &Carrier::new(3.5e9)).unwrap()
    }

    #[test]
    fn half_plane_deep_shadow_matches_keller() {
        let k = Carrier::new(3.5e9).k;
        let phi_i = FRAC_PI_4;
        for &phi_d in &[1.55 * PI, 1.7 * PI, 1.85 * PI] {
            let c = pec_coeffs(2.0, phi_i, phi_d, FRAC_PI_2, 200.0);
            // Sommerfeld half-plane asymptote: |sec(β⁻/2) ∓ sec(β⁺/2)| / (2√(2πk))
            let sec = |x: f64| 1.0 / x.cos();
            let (bm, bp) = (phi_d - phi_i, phi_d + phi_i);
            let scale = 2.0 * (2.0 * PI * k).sqrt();
            let soft = (sec(bm / 2.0) - sec(bp / 2.0)).abs() / scale;
            let hard = (sec(bm / 2.0) + sec(bp / 2.0)).abs() / scale;
            assert!((c.d_s.norm() / soft - 1.0).abs() < 0.05, "soft at φ={phi_d}");
            assert!((c.d_h.norm() / hard - 1.0).abs() < 0.05, "hard at φ={phi_d}");
        }
    }

    #[test]
    fn finite_and_continuous_across_shadow_boundary() {
        let phi_i = 0.6;
        let isb = PI + phi_i;
        for n in [1.5, 2.0] {
            let a = pec_coeffs(n, phi_i, isb - 0.01, FRAC_PI_2, 100.0);
            let b = pec_coeffs(n, phi_i, isb + 0.01, FRAC_PI_2, 100.0);
            let on = pec_coeffs(n, phi_i, isb, FRAC_PI_2, 100.0);
            assert!(on.d_s.norm().is_finite() && on.d_h.norm().is_finite());
            for (x, y) in [(a.d_s, b.d_s), (a.d_h, b.d_h)] {
                assert!((x.norm() / y.norm() - 1.0).abs() < 0.05, "n={n}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn skew_factor_and_domain_checks() {
        let a = pec_coeffs(1.5, 0.5, 3.0, FRAC_PI_2, 5.0);
        let b = pec_coeffs(1.5, 0.5, 3.0, FRAC_PI_2 / 2.0, 5.0);
        // sin β₀ enters D once, L through sin² β₀
        assert!(a.d_s.norm() > 0.0 && b.d_s.norm() > a.d_s.norm());
        let carrier = Carrier::new(3.5e9);
        let m = Material::building();
        let bad = |n, phi_i, phi_d, beta0, l| {
            utd_coefficients(&WedgeGeometry { n, phi_i, phi_d, beta0, l }, &m, &m, &carrier).is_err()
        };
        assert!(bad(1.5, 0.5, 1.6 * PI, 1.0, 5.0));
        assert!(bad(0.9, 0.5, 1.0, 1.0, 5.0));
        assert!(bad(1.5, 0.5, 1.0, 0.0, 5.0));
        assert!(bad(1.5, 0.5, 1.0, 1.0, 0.0));
    }

    #[test]
    fn shadow_boundary_field_is_half_the_incident_field() {
        // Spherical wave past a half-plane: on either side of the ISB the
        // diffracted field tends to ∓1/2 of the direct field, so the total
        // field is continuous.
        let (sp, s) = (40.0, 25.0);
        let phi_i = 0.8;
        for side in [-1.0, 1.0] {
            let phi_d = PI + phi_i + side * 1e-4;
            let c = pec_coeffs(2.0, phi_i, phi_d, FRAC_PI_2, s * sp / (s + sp));
            let spread = (sp / (s * (s + sp))).sqrt();
            let diffracted = c.d_s * spread / sp;
            let direct = 1.0 / (s + sp);
            // on the ISB the β̂₀ and β̂₀' bases are antiparallel, so the
            // vector relation E_β₀ = −D_s E_β₀' reads E_d = +D_s E_i here
            let ratio = diffracted / direct;
            assert!((ratio.norm() - 0.5).abs() < 0.02, "side {side}: {ratio}");
            // lit side (φ < ISB) loses half, shadow side gains half
            assert!(ratio.re * side > 0.0, "side {side}: {ratio}");
        }
    }
}
