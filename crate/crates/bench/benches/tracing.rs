use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use urbanemf::mobility::{simulate, MobilityParams};
use urbanemf::netmodel::{min_eirp_for_coverage, NetworkConfig};
use urbanemf::raylaunch::{fermat_diffraction_point, shoot};
use urbanemf::scene::bundled;
use urbanemf::{AntennaSpec, Carrier, RunConfig, Study, Tracer, Vec3};
use urbanemf_bench::launch;

fn geometry(c: &mut Criterion) {
    let scene = bundled::town().build().unwrap();
    let o = Vec3::new(80.0, 80.0, 30.0);
    let d = Vec3::new(1.0, 0.3, -0.2).normalize();
    c.bench_function("bvh_first_hit", |b| b.iter(|| black_box(scene.trace(&o, &d))));
    c.bench_function("occlusion_test", |b| {
        b.iter(|| black_box(scene.occluded(&o, &Vec3::new(20.0, 140.0, 1.5))))
    });
    let (a, e) = (Vec3::new(0.0, -5.0, 0.0), Vec3::new(0.0, 5.0, 0.0));
    let (pa, pb) = (Vec3::new(-3.0, 1.0, 4.0), Vec3::new(3.0, 2.0, 4.0));
    c.bench_function("fermat_point", |b| b.iter(|| black_box(fermat_diffraction_point(&a, &e, &pa, &pb))));
}

fn launching(c: &mut Criterion) {
    let scene = bundled::town().build().unwrap();
    let carrier = Carrier::new(3.5e9);
    let tx = Vec3::new(80.0, 80.0, 30.0);
    let rx = Vec3::new(75.0, 20.0, 1.5);
    let mut g = c.benchmark_group("launch");
    g.sample_size(10);
    g.bench_function("sbr_20k_rays", |b| b.iter(|| black_box(shoot(&scene, &tx, &rx, &launch(20_000, 0)))));
    for nd in [1, 2] {
        let tracer = Tracer::new(&scene, carrier, launch(20_000, nd)).unwrap();
        let (t, r) = (AntennaSpec::isotropic(tx), AntennaSpec::isotropic(rx));
        g.bench_function(format!("paths_20k_rays_diffraction_{nd}"), |b| {
            b.iter(|| black_box(tracer.paths(&t, &r, 1.0)))
        });
    }
    g.finish();
}

fn network(c: &mut Criterion) {
    let n = 16_384;
    let unit: Vec<f64> = (0..n).map(|i| 1e-12 * (1.0 + (i % 977) as f64)).collect();
    let inter: Vec<f64> = (0..n).map(|i| 1e-11 * (1.0 + (i % 313) as f64)).collect();
    let mask = vec![false; n];
    let cfg = NetworkConfig::default();
    c.bench_function("min_eirp_16k_cells", |b| {
        b.iter(|| black_box(min_eirp_for_coverage(&unit, &inter, &mask, &cfg)))
    });

    let study = Study::new(RunConfig::default(), bundled::town().build().unwrap()).unwrap();
    let params = MobilityParams {
        seed: 1,
        ..MobilityParams::default()
    };
    let mut g = c.benchmark_group("mobility");
    g.sample_size(20);
    g.bench_function("simulate_45_ue_360_frames", |b| {
        b.iter(|| black_box(simulate(&study.zones, &params, 45).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, geometry, launching, network);
criterion_main!(benches);
