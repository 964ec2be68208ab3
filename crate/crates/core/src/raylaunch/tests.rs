use super::*;
use crate::emfield::effective_field;
use crate::scene::{Material, Rect, SceneBuilder, Zones};
use crate::units::db;
use crate::Vec2;

fn builder() -> SceneBuilder {
    let mut b = SceneBuilder::new(Rect {
        origin: Vec2::new(-50.0, -50.0),
        lx: 100.0,
        ly: 100.0,
    });
    b.c1(crate::scene::rect(Vec2::new(-10.0, -10.0), Vec2::new(10.0, 10.0)));
    b
}

fn cfg(m: usize) -> LaunchConfig {
    LaunchConfig {
        m_dim: m,
        ..LaunchConfig::default()
    }
}

fn ground_scene(pec: bool) -> Scene {
    let mut b = builder();
    let mat = b.material(if pec { Material::pec() } else { Material::ground() });
    b.ground(Vec2::new(-2000.0, -2000.0), Vec2::new(2000.0, 2000.0), 0.0, mat);
    b.build().unwrap()
}

/// Right-angle wedge along the z axis: face A on y = 0 (x ≥ 0), face B on
/// x = 0 (y ≥ 0), solid quadrant x, y > 0.
fn corner_scene() -> Scene {
    let v = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
    let vertices = vec![
        v(0.0, 0.0, 0.0),
        v(20.0, 0.0, 0.0),
        v(20.0, 0.0, 20.0),
        v(0.0, 0.0, 20.0),
        v(0.0, 20.0, 0.0),
        v(0.0, 20.0, 20.0),
    ];
    // face A faces −y, face B faces −x
    let tris = vec![[0, 1, 2, 0], [0, 2, 3, 0], [0, 3, 5, 0], [0, 5, 4, 0]];
    Scene::new(
        vertices,
        tris,
        vec![Material::building()],
        crate::scene::rect(Vec2::new(-10.0, -10.0), Vec2::new(-5.0, -5.0)),
        Rect {
            origin: Vec2::new(-50.0, -50.0),
            lx: 100.0,
            ly: 100.0,
        },
        None,
        Vec::new(),
        Zones::default(),
    )
    .unwrap()
}

fn power(paths: &[RayPath]) -> f64 {
    let v: Vec<Complex64> = paths.iter().map(|p| p.voltage).collect();
    crate::emfield::received_power(&v, &AntennaSpec::isotropic(Vec3::zeros())).unwrap()
}

#[test]
fn free_space_gives_one_los_path_at_friis_level() {
    let scene = builder().build().unwrap();
    let tx = AntennaSpec::isotropic(Vec3::new(0.0, 0.0, 10.0));
    let rx = AntennaSpec::isotropic(Vec3::new(100.0, 0.0, 10.0));
    let carrier = Carrier::new(3.5e9);
    let paths = compute_multipath(&scene, &tx, &rx, 1.0, &carrier, &cfg(1000)).unwrap();
    assert_eq!(paths.len(), 1);
    assert_eq!(paths[0].kind, PathKind::LoS);
    let friis = (carrier.lambda / (4.0 * std::f64::consts::PI * 100.0)).powi(2);
    assert!((db(power(&paths)) - db(friis)).abs() < 0.01);
    assert!((db(friis) + 83.33).abs() < 0.01);
    assert!((paths[0].delay - 100.0 / C0).abs() < 1e-12);

    let chains = shoot(&scene, &tx.position, &rx.position, &cfg(1000));
    let dedup = dedupe_least_time(&chains);
    assert_eq!(dedup.len(), 1);
    assert!(dedup[0].groups.is_empty());
}

#[test]
fn ground_plane_yields_direct_and_single_bounce_chains() {
    let scene = ground_scene(false);
    let (tx, rx) = (Vec3::new(0.0, 0.0, 10.0), Vec3::new(60.0, 5.0, 1.5));
    let dedup = dedupe_least_time(&shoot(&scene, &tx, &rx, &cfg(50_000)));
    let orders: Vec<usize> = dedup.iter().map(HitChain::reflections).collect();
    assert_eq!(orders, vec![0, 1]);
    // image-method length
    let img = Vec3::new(0.0, 0.0, -10.0);
    let pts = reconstruct_reflections(&scene, &tx, &rx, &dedup[1].groups).unwrap();
    let p = pts[0].0;
    let len = (p - tx).norm() + (rx - p).norm();
    assert!((len - (rx - img).norm()).abs() < 1e-6);
    assert!(p.z.abs() < 1e-9);
    // raw SBR length is at least the exact one up to the capture radius
    assert!(dedup[1].length > len - 1.0);
}

#[test]
fn wall_blocks_everything_without_reflections() {
    let mut b = builder();
    let m = b.material(Material::building());
    b.screen(Vec2::new(5.0, -100.0), Vec2::new(5.0, 100.0), -100.0, 100.0, m);
    let scene = b.build().unwrap();
    let config = LaunchConfig {
        max_reflections: 0,
        ..cfg(20_000)
    };
    assert!(shoot(&scene, &Vec3::new(0.0, 0.0, 1.0), &Vec3::new(10.0, 0.0, 1.0), &config).is_empty());
}

#[test]
fn dedupe_keeps_minimum_per_sequence() {
    let mk = |g: Vec<u32>, l: f64| HitChain {
        triangles: g.clone(),
        groups: g,
        length: l,
    };
    let chains: Vec<HitChain> = [10.2, 10.05, 10.4, 10.11, 10.3].iter().map(|&l| mk(vec![3], l)).collect();
    let d = dedupe_least_time(&chains);
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].length, 10.05);
    let d = dedupe_least_time(&[mk(vec![1], 5.0), mk(vec![2], 6.0), mk(vec![1], 4.0)]);
    assert_eq!(d.len(), 2);
}

#[test]
fn two_ray_power_matches_interference_model() {
    let scene = ground_scene(true);
    let carrier = Carrier::new(3.5e9);
    let tx = AntennaSpec::isotropic(Vec3::new(0.0, 0.0, 10.0));
    let tracer = Tracer::new(&scene, carrier, cfg(200_000)).unwrap();
    let points: Vec<Vec3> = (0..20).map(|i| Vec3::new(20.0 + 23.0 * i as f64, 0.0, 1.5)).collect();
    let all = tracer.paths_many(&tx, &AntennaSpec::isotropic(Vec3::zeros()), &points, 1.0);
    for (p, paths) in points.iter().zip(&all) {
        assert_eq!(paths.len(), 2, "at {p:?}");
        let d1 = (p - tx.position).norm();
        let d2 = (p - Vec3::new(0.0, 0.0, -10.0)).norm();
        // PEC ground, θ-polarized isotropic source and receiver: Γ = +1
        let sum = carrier.phase(d1) / d1 + carrier.phase(d2) / d2;
        let oracle = (carrier.lambda / (4.0 * std::f64::consts::PI)).powi(2) * sum.norm_sqr();
        assert!((db(power(paths)) - db(oracle)).abs() < 0.5, "at {p:?}");
    }
}

#[test]
fn reflections_obey_the_specular_law() {
    let mut b = builder();
    let m = b.material(Material::building());
    let g = b.material(Material::ground());
    b.ground(Vec2::new(-500.0, -500.0), Vec2::new(500.0, 500.0), 0.0, g);
    b.block(Vec2::new(20.0, 10.0), Vec2::new(60.0, 30.0), 25.0, m);
    b.block(Vec2::new(20.0, -30.0), Vec2::new(60.0, -10.0), 18.0, m);
    let scene = b.build().unwrap();
    let tx = AntennaSpec::isotropic(Vec3::new(0.0, 0.0, 6.0));
    let rx = AntennaSpec::isotropic(Vec3::new(80.0, 2.0, 1.5));
    let paths = compute_multipath(&scene, &tx, &rx, 1.0, &Carrier::new(3.5e9), &cfg(200_000)).unwrap();
    let direct = (rx.position - tx.position).norm();
    let mut reflections = 0;
    for p in &paths {
        assert!(p.length >= direct - 1e-9);
        if p.kind != PathKind::LoS {
            assert!(p.length > direct);
        }
        let mut prev = tx.position;
        let pts: Vec<Vec3> = p.interactions.iter().map(Interaction::point).chain([rx.position]).collect();
        for (i, inter) in p.interactions.iter().enumerate() {
            if let Interaction::Reflection { point, triangle, .. } = *inter {
                let n = scene.triangles[triangle].normal;
                let a_in = (point - prev).normalize().dot(&n).abs().acos();
                let a_out = (pts[i + 1] - point).normalize().dot(&n).abs().acos();
                assert!((a_in - a_out).abs() < 1e-9);
                reflections += 1;
            }
            prev = inter.point();
        }
    }
    assert!(reflections >= 3);
    assert!(paths.iter().any(|p| p.order() >= 2));
    for w in paths.windows(2) {
        assert!(w[0].voltage.norm() >= w[1].voltage.norm());
    }
}

#[test]
fn shadowed_corner_has_exactly_one_diffraction_path() {
    let scene = corner_scene();
    let carrier = Carrier::new(3.5e9);
    let (tx, rx) = (Vec3::new(10.0, -3.0, 5.0), Vec3::new(-3.0, 10.0, 5.0));
    assert!(scene.occluded(&tx, &rx));
    let paths = diffraction_paths(&scene, &tx, &rx, &carrier, &cfg(1000)).unwrap();
    assert_eq!(paths.len(), 1);
    let p = &paths[0];
    let Interaction::Diffraction { point, edge } = p.interactions[0] else {
        panic!("expected a diffraction");
    };
    let e = &scene.edges[edge];
    assert!((e.n - 1.5).abs() < 1e-12);
    let a_in = (point - tx).normalize().dot(&e.dir).acos();
    let a_out = (rx - point).normalize().dot(&e.dir).acos();
    assert!((a_in - a_out).abs() < 1e-6);
    // ±1 mm along the edge never shortens the path
    for d in [-1e-3, 1e-3] {
        let q = point + e.dir * d;
        assert!((q - tx).norm() + (rx - q).norm() >= p.length - 1e-12);
    }
    // no reflection can reach the shadowed receiver
    let all = compute_multipath(&scene, &AntennaSpec::isotropic(tx), &AntennaSpec::isotropic(rx), 1.0, &carrier, &cfg(50_000))
        .unwrap();
    assert_eq!(all.len(), 1);
    assert_eq!(all[0].kind, PathKind::Diffraction);
}

#[test]
fn blocked_fermat_point_is_rejected() {
    let v = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
    let base = corner_scene();
    let mut verts = base.vertices.clone();
    let mut tris: Vec<[usize; 4]> = base.triangles.iter().map(|t| [t.v[0], t.v[1], t.v[2], 0]).collect();
    // blocker across the incident leg
    let o = verts.len();
    verts.extend([v(5.0, -4.0, -10.0), v(5.0, 4.0, -10.0), v(5.0, 4.0, 30.0), v(5.0, -4.0, 30.0)]);
    tris.extend([[o, o + 1, o + 2, 0], [o, o + 2, o + 3, 0], [o, o + 2, o + 1, 0], [o, o + 3, o + 2, 0]]);
    let scene = Scene::new(
        verts,
        tris,
        base.materials.clone(),
        base.boundaries.c1.clone(),
        base.boundaries.c2,
        None,
        Vec::new(),
        Zones::default(),
    )
    .unwrap();
    let (tx, rx) = (Vec3::new(10.0, -3.0, 5.0), Vec3::new(-3.0, 10.0, 5.0));
    let config = LaunchConfig {
        max_diffractions: 1,
        ..cfg(1000)
    };
    let paths = diffraction_paths(&scene, &tx, &rx, &Carrier::new(3.5e9), &config).unwrap();
    assert!(paths.iter().all(|p| match p.interactions[0] {
        Interaction::Diffraction { point, .. } => (point.x, point.y) != (0.0, 0.0),
        _ => true,
    }));
}

#[test]
fn total_field_is_continuous_across_the_shadow_boundary() {
    let scene = corner_scene();
    let carrier = Carrier::new(3.5e9);
    let tx = AntennaSpec::isotropic(Vec3::new(10.0, -10.0, 5.0));
    let config = LaunchConfig {
        max_reflections: 0,
        ..cfg(1000)
    };
    let tracer = Tracer::new(&scene, carrier, config).unwrap();
    // the shadow boundary of face B extended: the line through tx and the edge
    let field_at = |t: f64| {
        let dir = Vec3::new(-1.0, 1.0, 0.0).normalize();
        let normal = Vec3::new(1.0, 1.0, 0.0).normalize();
        let p = Vec3::new(0.0, 0.0, 5.0) + dir * 30.0 + normal * t;
        let paths = tracer.paths(&tx, &AntennaSpec::isotropic(p), 1.0);
        let total: FieldVector = paths.iter().fold(FieldVector::zeros(), |a, p| a + p.field);
        (effective_field(&total), paths.len())
    };
    let (lit, n_lit) = field_at(-1e-3);
    let (shadow, n_shadow) = field_at(1e-3);
    assert_eq!(n_lit, 2);
    assert_eq!(n_shadow, 1);
    assert!((lit / shadow - 1.0).abs() < 0.02, "lit {lit} shadow {shadow}");
}

#[test]
fn launches_are_deterministic() {
    let mut b = builder();
    let m = b.material(Material::building());
    let g = b.material(Material::ground());
    b.ground(Vec2::new(-500.0, -500.0), Vec2::new(500.0, 500.0), 0.0, g);
    b.block(Vec2::new(20.0, 10.0), Vec2::new(60.0, 30.0), 25.0, m);
    b.block(Vec2::new(-40.0, -30.0), Vec2::new(-10.0, -10.0), 18.0, m);
    let scene = b.build().unwrap();
    let tx = AntennaSpec::isotropic(Vec3::new(0.0, 0.0, 6.0));
    let rx = AntennaSpec::isotropic(Vec3::new(70.0, 40.0, 1.5));
    let config = LaunchConfig {
        seed: 9,
        mixed: true,
        ..cfg(50_000)
    };
    let run = || compute_multipath(&scene, &tx, &rx, 1.0, &Carrier::new(3.5e9), &config).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.length.to_bits(), y.length.to_bits());
        assert_eq!(x.voltage, y.voltage);
        assert_eq!(x.interactions, y.interactions);
    }
    let ra = shoot(&scene, &tx.position, &rx.position, &config);
    let rb = shoot(&scene, &tx.position, &rx.position, &config);
    assert_eq!(ra, rb);
}

#[test]
fn larger_capture_radius_only_adds_paths() {
    let mut b = builder();
    let m = b.material(Material::building());
    let g = b.material(Material::ground());
    b.ground(Vec2::new(-500.0, -500.0), Vec2::new(500.0, 500.0), 0.0, g);
    b.block(Vec2::new(20.0, 10.0), Vec2::new(60.0, 30.0), 25.0, m);
    b.block(Vec2::new(20.0, -30.0), Vec2::new(60.0, -10.0), 18.0, m);
    let scene = b.build().unwrap();
    let (tx, rx) = (Vec3::new(0.0, 0.0, 6.0), Vec3::new(80.0, 2.0, 1.5));
    let seqs = |r: f64| -> Vec<Vec<u32>> {
        let c = LaunchConfig {
            rx_radius: r,
            ..cfg(20_000)
        };
        dedupe_least_time(&shoot(&scene, &tx, &rx, &c)).into_iter().map(|c| c.groups).collect()
    };
    let mut prev = seqs(0.05);
    for r in [0.2, 1.0, 4.0] {
        let next = seqs(r);
        assert!(prev.iter().all(|s| next.contains(s)), "radius {r}");
        assert!(next.len() >= prev.len());
        prev = next;
    }
}

#[test]
fn config_validation() {
    assert!(cfg(0).validate().is_err());
    assert!(LaunchConfig {
        rx_radius: 0.0,
        ..cfg(10)
    }
    .validate()
    .is_err());
    assert!(LaunchConfig {
        max_diffractions: 3,
        ..cfg(10)
    }
    .validate()
    .is_err());
    assert!(LaunchConfig::default().validate().is_ok());
}
