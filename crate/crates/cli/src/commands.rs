use anyhow::Result;
use serde::Serialize;
use urbanemf::coverage::{adaptive_map, interpolate, uniform_map, RaySampler};
use urbanemf::emfield::{effective_field, received_power};
use urbanemf::mobility::{simulate, MobilityParams, MoveState};
use urbanemf::raylaunch::Interaction;
use urbanemf::units::{db, dbm_to_w, vm_to_dbuvm, w_to_dbm};
use urbanemf::{FieldVector, PathKind, Scene, Study, Vec2, Vec3};

use crate::output::Run;

#[derive(Serialize)]
struct PathRecord {
    kind: PathKind,
    order: usize,
    length_m: f64,
    delay_s: f64,
    power_dbw: f64,
    field_vm: f64,
    interactions: Vec<Interaction>,
}

#[derive(Serialize)]
struct TraceReport {
    tx: [f64; 3],
    rx: [f64; 3],
    eirp_dbm: f64,
    paths: Vec<PathRecord>,
    received_power_dbw: f64,
    field_dbuvm: f64,
}

/// Paths between one Tx and one Rx with the configured antennas.
pub fn trace(run: &mut Run, study: &Study, tx: Vec3, rx: Vec3, eirp_dbm: f64) -> Result<()> {
    let tracer = run.stage("setup", || study.tracer())?;
    let tx_ant = study.tx_antenna(tx);
    let rx_ant = urbanemf::AntennaSpec {
        position: rx,
        ..study.rx_antenna()
    };
    let p_t = dbm_to_w(eirp_dbm) / tx_ant.gain;
    let paths = run.stage("trace", || tracer.paths(&tx_ant, &rx_ant, p_t));
    let one = |v| received_power(&[v], &rx_ant).unwrap_or(0.0);
    let records = paths
        .iter()
        .map(|p| PathRecord {
            kind: p.kind,
            order: p.order(),
            length_m: p.length,
            delay_s: p.delay,
            power_dbw: db(one(p.voltage)),
            field_vm: effective_field(&p.field),
            interactions: p.interactions.clone(),
        })
        .collect();
    let total: FieldVector = paths.iter().fold(FieldVector::zeros(), |a, p| a + p.field);
    let v: Vec<_> = paths.iter().map(|p| p.voltage).collect();
    let report = TraceReport {
        tx: tx.into(),
        rx: rx.into(),
        eirp_dbm,
        paths: records,
        received_power_dbw: db(received_power(&v, &rx_ant)?),
        field_dbuvm: vm_to_dbuvm(effective_field(&total)),
    };
    println!(
        "{} paths, P_R {:.2} dBW, E {:.2} dBµV/m",
        report.paths.len(),
        report.received_power_dbw,
        report.field_dbuvm
    );
    run.write_json("paths.json", &report)
}

#[derive(Serialize)]
struct CellValue {
    x: f64,
    y: f64,
    value: f64,
}

#[derive(Serialize)]
struct MapSidecar<'a> {
    tx: [f64; 3],
    eirp_dbm: f64,
    grid: &'a urbanemf::coverage::GridSpec,
    cols: usize,
    rows: usize,
    unmasked_cells: usize,
    simulations: usize,
    per_level: &'a [usize],
    nearest_fill: usize,
    uniform_stride: Option<i64>,
    power_file: &'static str,
    field_file: &'static str,
}

/// Received-power and exposure rasters for one Tx position.
pub fn map(run: &mut Run, study: &Study, tx: Vec2, eirp_dbm: f64, uniform_stride: Option<i64>) -> Result<()> {
    let tracer = run.stage("setup", || study.tracer())?;
    let pos = Vec3::new(tx.x, tx.y, study.cfg.z_b);
    let sampler = RaySampler {
        tracer: &tracer,
        tx: study.tx_antenna(pos),
        rx: study.rx_antenna(),
        array: study.cfg.array.clone(),
    };
    let samples = run.stage("sample", || match uniform_stride {
        Some(s) => uniform_map(&study.grid, &study.mask, s, &sampler),
        None => adaptive_map(&study.grid, &study.mask, study.cfg.delta_db, &sampler),
    });
    let raster = run.stage("interpolate", || interpolate(&samples, &study.mask))?;
    let gain = db(dbm_to_w(eirp_dbm));
    let cells = |f: &dyn Fn(usize) -> f64| -> Vec<CellValue> {
        raster
            .unmasked()
            .map(|i| {
                let p = study.grid.position(study.grid.cell(i));
                CellValue { x: p.x, y: p.y, value: f(i) }
            })
            .collect()
    };
    run.write_csv("map_power_dbw.csv", cells(&|i| raster.power_db(i) + gain))?;
    run.write_csv("map_field_dbuvm.csv", cells(&|i| raster.field_dbuvm[i] + gain))?;
    let side = MapSidecar {
        tx: pos.into(),
        eirp_dbm,
        grid: &study.grid,
        cols: raster.cols,
        rows: raster.rows,
        unmasked_cells: study.mask.unmasked(),
        simulations: samples.sims(),
        per_level: &samples.per_level,
        nearest_fill: raster.fallback,
        uniform_stride,
        power_file: "map_power_dbw.csv",
        field_file: "map_field_dbuvm.csv",
    };
    println!("{} simulations for {} cells", side.simulations, side.unmasked_cells);
    run.write_json("map.json", &side)
}

#[derive(Serialize)]
struct TrajectoryRow {
    ue: usize,
    t: usize,
    x: f64,
    y: f64,
    moving: bool,
    cell: usize,
}

/// Pedestrian trajectories over the scene's zones.
pub fn mobility(run: &mut Run, study: &Study, n_ue: usize) -> Result<()> {
    let params: &MobilityParams = &study.cfg.mobility;
    let tr = run.stage("simulate", || simulate(&study.zones, params, n_ue))?;
    let rows = tr.iter().enumerate().flat_map(|(ue, t)| {
        (0..t.positions.len()).map(move |k| TrajectoryRow {
            ue,
            t: k,
            x: t.positions[k].x,
            y: t.positions[k].y,
            moving: t.states[k] == MoveState::Moving,
            cell: t.cells[k],
        })
    });
    run.write_csv("trajectories.csv", rows)?;
    let kappa: Vec<f64> = tr.iter().map(|t| t.kappa).collect();
    run.write_json("mobility.json", &serde_json::json!({ "n_ue": n_ue, "frames": params.steps(), "kappa": kappa }))?;
    println!("{n_ue} trajectories of {} frames", params.steps());
    Ok(())
}

#[derive(Serialize)]
struct HistoryRow {
    iteration: usize,
    step: String,
    best_j_p: f64,
    max_d: f64,
    mean_d: f64,
}

fn history_rows(h: &[urbanemf::optimizer::NmStep]) -> Vec<HistoryRow> {
    h.iter()
        .map(|s| HistoryRow {
            iteration: s.q,
            step: format!("{:?}", s.step),
            best_j_p: s.best_j_p,
            max_d: s.max_d,
            mean_d: s.mean_d,
        })
        .collect()
}

/// Exposure-minimizing placement with the ray-launched model.
pub fn optimize(run: &mut Run, study: &Study) -> Result<()> {
    let tracer = run.stage("setup", || study.tracer())?;
    let src = study.ray_source(&tracer);
    let inter = run.stage("interference", || study.interference(&src))?;
    let rep = run.stage("optimize", || study.optimize(&src, &inter))?;
    println!(
        "p_b,op = ({:.2}, {:.2}, {:.1}) m, EIRP {:.2} dBm, J {:.2} dBµV/m after {} iterations",
        rep.p_b_op[0], rep.p_b_op[1], rep.p_b_op[2], rep.eirp_op_dbm, rep.j_dbuvm, rep.iterations
    );
    run.write_csv("history.csv", history_rows(&rep.history))?;
    run.write_json("optimize.json", &rep)
}

/// Placement under the fitted CI model, checked with ray launching.
pub fn baseline(run: &mut Run, study: &Study) -> Result<()> {
    let tracer = run.stage("setup", || study.tracer())?;
    let rep = run.stage("baseline", || study.compare_baseline(&tracer))?;
    println!(
        "CI n_LoS {:.2}, n_NLoS {:.2}; CI placement ({:.2}, {:.2}) at {:.2} dBm covers {:.2}% under ray launching (target {:.2}%)",
        rep.los.n_ple,
        rep.nlos.n_ple,
        rep.ci.p_b_op[0],
        rep.ci.p_b_op[1],
        rep.ci.eirp_op_dbm,
        100.0 * rep.ray_coverage_at_ci_eirp,
        100.0 * rep.rho_cov
    );
    run.write_csv("history.csv", history_rows(&rep.ci.history))?;
    run.write_json("baseline.json", &rep)
}

#[derive(Serialize)]
struct SceneReport<'a> {
    vertices: usize,
    triangles: usize,
    materials: usize,
    face_groups: usize,
    edges: &'a urbanemf::scene::EdgeStats,
    diffracting_edges: usize,
    boundaries: &'a urbanemf::scene::Boundaries,
    interferers: &'a [Vec3],
    streets: usize,
    z_range: (f64, f64),
}

pub fn validate_scene(run: &mut Run, scene: &Scene) -> Result<()> {
    let r = SceneReport {
        vertices: scene.vertices.len(),
        triangles: scene.triangle_count(),
        materials: scene.materials.len(),
        face_groups: scene.groups.len(),
        edges: &scene.edge_stats,
        diffracting_edges: scene.edges.len(),
        boundaries: &scene.boundaries,
        interferers: &scene.interferers,
        streets: scene.zones.streets.len(),
        z_range: scene.z_range(),
    };
    println!(
        "scene ok: {} triangles, {} face groups, {} diffracting edges",
        r.triangles, r.face_groups, r.diffracting_edges
    );
    run.write_json("scene_report.json", &r)
}

pub fn eirp_default(study: &Study) -> f64 {
    w_to_dbm(study.cfg.network.eirp_max)
}
