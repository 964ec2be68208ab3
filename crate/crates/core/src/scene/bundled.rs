//! Scenes shipped with the repository. The JSON copies under `scenes/` are
//! generated from these builders.

use super::builder::{rect, SceneBuilder};
use super::{Material, Rect};
use crate::geometry::{Vec2, Vec3};

fn v(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

/// Concrete at 3.5 GHz (ε_r 5.24, σ ≈ 0.12 S/m).
pub fn concrete() -> Material {
    Material::dielectric(5.24, -0.63)
}

/// Medium-dry ground at 3.5 GHz (ε_r 15, σ ≈ 0.27 S/m).
pub fn soil() -> Material {
    Material::dielectric(15.0, -1.39)
}

pub const NAMES: [&str; 5] = ["town", "shadowed_street", "ground_plane", "free_space", "cube"];

pub fn by_name(name: &str) -> Option<SceneBuilder> {
    Some(match name {
        "town" => town(),
        "shadowed_street" => shadowed_street(),
        "ground_plane" => ground_plane(),
        "free_space" => free_space(),
        "cube" => cube(),
        _ => return None,
    })
}

/// 160 m × 160 m block grid: one north–south and one east–west street,
/// fifteen flat-roofed buildings from 5 m to 16 m, two interferers outside
/// the area.
pub fn town() -> SceneBuilder {
    let mut b = SceneBuilder::new(Rect {
        origin: v(0.0, 0.0),
        lx: 160.0,
        ly: 160.0,
    });
    let ground = b.material(soil());
    let wall = b.material(concrete());
    b.ground(v(-20.0, -20.0), v(180.0, 180.0), 0.0, ground);
    // blocks on the outer ring run up to the area boundary, so the
    // boundary cuts through the built-up fabric instead of leaving a yard
    let blocks: [((f64, f64), (f64, f64), f64); 15] = [
        ((0.0, 0.0), (30.0, 40.0), 11.0),
        ((38.0, 0.0), (62.0, 30.0), 14.0),
        ((38.0, 45.0), (62.0, 85.0), 9.0),
        ((0.0, 52.0), (30.0, 85.0), 13.0),
        ((90.0, 0.0), (120.0, 38.0), 16.0),
        ((128.0, 0.0), (160.0, 45.0), 10.0),
        ((90.0, 50.0), (115.0, 85.0), 12.0),
        ((125.0, 55.0), (160.0, 88.0), 7.0),
        ((0.0, 112.0), (35.0, 160.0), 13.0),
        ((42.0, 115.0), (62.0, 140.0), 8.0),
        ((92.0, 112.0), (122.0, 135.0), 15.0),
        ((130.0, 112.0), (160.0, 160.0), 11.0),
        ((92.0, 142.0), (120.0, 160.0), 6.0),
        ((42.0, 146.0), (62.0, 160.0), 7.0),
        ((0.0, 92.0), (30.0, 104.0), 5.0),
    ];
    for (lo, hi, h) in blocks {
        b.block(v(lo.0, lo.1), v(hi.0, hi.1), h, wall);
    }
    b.street(rect(v(70.0, 0.0), v(82.0, 160.0)));
    b.street(rect(v(0.0, 106.0), v(160.0, 110.0)));
    b.c1(rect(v(45.0, 45.0), v(115.0, 115.0)));
    b.c3(rect(v(5.0, 5.0), v(155.0, 155.0)));
    b.interferer(Vec3::new(-421.0, 26.0, 30.0));
    b.interferer(Vec3::new(520.0, 2.8, 30.0));
    b
}

/// An L-shaped street corner: the receivers in the side street see the
/// transmitter only around the building edge.
pub fn shadowed_street() -> SceneBuilder {
    let mut b = SceneBuilder::new(Rect {
        origin: v(0.0, 0.0),
        lx: 100.0,
        ly: 100.0,
    });
    let ground = b.material(soil());
    let wall = b.material(concrete());
    b.ground(v(-10.0, -10.0), v(110.0, 110.0), 0.0, ground);
    // corner building between the main street (y < 40) and side street (x > 60)
    b.block(v(0.0, 40.0), v(60.0, 100.0), 25.0, wall);
    b.block(v(70.0, 50.0), v(100.0, 100.0), 25.0, wall);
    b.street(rect(v(0.0, 0.0), v(100.0, 40.0)));
    b.c1(rect(v(5.0, 5.0), v(55.0, 35.0)));
    b
}

/// A single large ground plane.
pub fn ground_plane() -> SceneBuilder {
    let mut b = SceneBuilder::new(Rect {
        origin: v(-100.0, -100.0),
        lx: 200.0,
        ly: 200.0,
    });
    let m = b.material(Material::pec());
    b.ground(v(-2000.0, -2000.0), v(2000.0, 2000.0), 0.0, m);
    b.c1(rect(v(-10.0, -10.0), v(10.0, 10.0)));
    b
}

/// Nothing but the boundaries.
pub fn free_space() -> SceneBuilder {
    let mut b = SceneBuilder::new(Rect {
        origin: v(-600.0, -600.0),
        lx: 1200.0,
        ly: 1200.0,
    });
    b.c1(rect(v(-10.0, -10.0), v(10.0, 10.0)));
    b
}

/// A 10 m closed concrete cube on the origin.
pub fn cube() -> SceneBuilder {
    let mut b = SceneBuilder::new(Rect {
        origin: v(-50.0, -50.0),
        lx: 100.0,
        ly: 100.0,
    });
    let m = b.material(concrete());
    b.closed_box(Vec3::new(-5.0, -5.0, 0.0), Vec3::new(5.0, 5.0, 10.0), m);
    b.c1(rect(v(-40.0, -40.0), v(-20.0, -20.0)));
    b
}
