use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

const FAST: [&str; 6] = [
    "--set",
    "launch.m_dim=2000",
    "--set",
    "launch.max_diffractions=0",
    "--set",
    "launch.max_reflections=2",
];

fn urbanemf(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_urbanemf"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("URBANEMF_OUT")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn dump_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let first = urbanemf(&["--dump-config", "--set", "network.rho_cov=0.95", "optimize"], tmp.path());
    assert!(first.status.success());
    let file = tmp.path().join("cfg.json");
    std::fs::write(&file, &first.stdout).unwrap();
    let again = urbanemf(&["--config", file.to_str().unwrap(), "--dump-config", "optimize"], tmp.path());
    assert!(again.status.success());
    assert_eq!(first.stdout, again.stdout);
    let v: Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(v["network"]["rho_cov"], 0.95);
    assert_eq!(v["g0"], 1.25);
    assert_eq!(v["launch"]["m_dim"], 10_000_000);
}

#[test]
fn map_writes_two_rasters_and_a_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = FAST.to_vec();
    args.extend(["--set", "g0=2.5", "map", "--tx", "80,80"]);
    let out = urbanemf(&args, tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(tmp.path());
    assert_eq!(m["status"], "ok");
    for name in ["map_power_dbw.csv", "map_field_dbuvm.csv", "map.json"] {
        let bytes = std::fs::read(tmp.path().join(name)).unwrap();
        assert_eq!(m["outputs"][name], hex::encode(Sha256::digest(&bytes)), "{name}");
    }
    let csv = std::fs::read_to_string(tmp.path().join("map_field_dbuvm.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,value"));
    let side: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("map.json")).unwrap()).unwrap();
    assert_eq!(csv.lines().count() - 1, side["unmasked_cells"].as_u64().unwrap() as usize);
    assert!(m["timings_s"]["sample"].as_f64().unwrap() >= 0.0);
}

#[test]
fn same_seed_gives_identical_outputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut args = FAST.to_vec();
    args.extend(["--seed", "11", "--set", "mobility.t_avg=60", "mobility", "--n-ue", "5"]);
    assert!(urbanemf(&args, a.path()).status.success());
    assert!(urbanemf(&args, b.path()).status.success());
    assert_eq!(manifest(a.path())["outputs"], manifest(b.path())["outputs"]);
    let rows = std::fs::read_to_string(a.path().join("trajectories.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 5 * 60);
}

#[test]
fn missing_scene_fails_fast() {
    let tmp = tempfile::tempdir().unwrap();
    let out = urbanemf(&["--scene", "/nonexistent/scene.json", "map", "--tx", "1,1"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("map_power_dbw.csv").exists());
    let m = manifest(tmp.path());
    assert_eq!(m["status"], "error");
    assert!(m["error"].as_str().unwrap().contains("nonexistent"));
}

#[test]
fn config_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = urbanemf(&["--set", "network.tau_e2=2", "validate-scene"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("network.tau_e2"));
    let out = urbanemf(&["--set", "network.nope=2", "validate-scene"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_coverage_exits_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = FAST.to_vec();
    args.extend([
        "--scene",
        "bundled:cube",
        "--set",
        "g0=2.5",
        "--set",
        "network.eirp_max=1e-9",
        "optimize",
    ]);
    let out = urbanemf(&args, tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(manifest(tmp.path())["status"], "error");
}

#[test]
fn out_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_urbanemf"))
        .args(["validate-scene", "bundled:shadowed_street"])
        .env("URBANEMF_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("scene_report.json")).unwrap()).unwrap();
    assert_eq!(report["triangles"], 2 + 2 * 10);
}

#[test]
fn trace_in_free_space_finds_the_direct_path() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = FAST.to_vec();
    args.extend([
        "--scene",
        "bundled:free_space",
        "trace",
        "--tx",
        "0,0,10",
        "--rx",
        "100,0,10",
        "--eirp-dbm",
        "30",
    ]);
    let out = urbanemf(&args, tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("paths.json")).unwrap()).unwrap();
    assert_eq!(r["paths"].as_array().unwrap().len(), 1);
    assert_eq!(r["paths"][0]["kind"], "los");
    // 1 W EIRP at 100 m: sqrt(30)/100 V/m
    let e = r["field_dbuvm"].as_f64().unwrap();
    assert!((e - (120.0 + 20.0 * (30f64.sqrt() / 100.0).log10())).abs() < 0.01);
}
