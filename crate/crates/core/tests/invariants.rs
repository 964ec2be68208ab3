use num_complex::Complex64;
use proptest::prelude::*;

use urbanemf::channel::{effective_gain, mrt, BeamVector, ChannelMatrix};
use urbanemf::emfield::fresnel;
use urbanemf::mobility::{simulate, MobilityParams, Zone};
use urbanemf::scene::bundled;
use urbanemf::units::{dbuvm_to_vm, vm_to_dbuvm};
use urbanemf::{LaunchConfig, Material, RunConfig, Study};

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b)), n)
}

fn town() -> Study {
    let cfg = RunConfig {
        launch: LaunchConfig {
            m_dim: 2_000,
            max_diffractions: 0,
            ..LaunchConfig::default()
        },
        ..RunConfig::default()
    };
    Study::new(cfg, bundled::town().build().unwrap()).unwrap()
}

proptest! {
    #[test]
    fn reflection_is_passive(eps in 1.0..80.0f64, loss in 0.0..200.0f64, theta in 0.0..std::f64::consts::FRAC_PI_2) {
        let (rs, rp) = fresnel(&Material::dielectric(eps, -loss), theta);
        prop_assert!(rs.norm() <= 1.0 + 1e-12);
        prop_assert!(rp.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn mrt_maximizes_beamforming_gain((h, w) in (1usize..16).prop_flat_map(|m| (complex_vec(m), complex_vec(m)))) {
        let h = ChannelMatrix { h };
        prop_assume!(h.norm() > 1e-9);
        let best = effective_gain(&h, &mrt(&h).unwrap()).norm();
        prop_assert!((best - h.norm()).abs() <= 1e-12 * h.norm());
        let n = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(n > 1e-9);
        let other = BeamVector { w: w.iter().map(|z| z / n).collect() };
        prop_assert!(effective_gain(&h, &other).norm() <= best * (1.0 + 1e-12));
    }

    #[test]
    fn field_level_round_trips(e in 1e-9..1e3f64) {
        prop_assert!((dbuvm_to_vm(vm_to_dbuvm(e)) / e - 1.0).abs() < 1e-12);
    }
}

#[test]
fn one_volt_per_metre_is_120_dbuvm() {
    assert_eq!(vm_to_dbuvm(1.0), 120.0);
    assert!((dbuvm_to_vm(120.0) - 1.0).abs() < 1e-15);
}

#[test]
fn pedestrians_never_enter_buildings() {
    let study = town();
    for seed in 0..5 {
        let params = MobilityParams {
            seed,
            ..MobilityParams::default()
        };
        for t in simulate(&study.zones, &params, 20).unwrap() {
            assert!(t.cells.iter().all(|c| study.zones.labels[*c] != Zone::Building));
        }
    }
}

#[test]
fn fixed_seeds_reproduce() {
    let study = town();
    let params = MobilityParams {
        seed: 9,
        ..MobilityParams::default()
    };
    let a = simulate(&study.zones, &params, 10).unwrap();
    let b = simulate(&study.zones, &params, 10).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.positions == y.positions && x.states == y.states));

    let tracer = study.tracer().unwrap();
    let src = study.ray_source(&tracer);
    use urbanemf::optimizer::RasterSource;
    let p = urbanemf::Vec3::new(80.0, 80.0, 30.0);
    // masked cells are NaN, so compare bit patterns
    let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
    assert_eq!(bits(src.unit_raster(p).unwrap().power), bits(src.unit_raster(p).unwrap().power));
}
