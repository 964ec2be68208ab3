//! `urbanemf` command-line front end.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use urbanemf::{resolve_scene, RunConfig, Study, Vec2, Vec3};

use config::ConfigError;
use output::Run;

const OUT_ENV: &str = "URBANEMF_OUT";

#[derive(Parser)]
#[command(name = "urbanemf", version, about = "Ray-launching coverage and EMF-aware base-station placement")]
struct Cli {
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config field, e.g. `--set network.rho_cov=0.95`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Scene file or `bundled:<name>`.
    #[arg(long, global = true)]
    scene: Option<String>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (also settable through URBANEMF_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print the merged configuration as JSON and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagation paths between one transmitter and one receiver.
    Trace {
        #[arg(long, value_parser = parse_point3)]
        tx: Vec3,
        #[arg(long, value_parser = parse_point3)]
        rx: Vec3,
        /// Transmit EIRP (dBm); defaults to the regulatory limit.
        #[arg(long)]
        eirp_dbm: Option<f64>,
    },
    /// Received-power and exposure rasters for a base station at `--tx x,y`.
    Map {
        #[arg(long, value_parser = parse_point2)]
        tx: Vec2,
        #[arg(long)]
        eirp_dbm: Option<f64>,
        /// Sample every k-th cell uniformly instead of refining adaptively.
        #[arg(long)]
        uniform_stride: Option<i64>,
    },
    /// Pedestrian trajectories.
    Mobility {
        #[arg(long, default_value_t = 18)]
        n_ue: usize,
    },
    /// Exposure-minimizing base-station placement.
    Optimize,
    /// Placement under the empirical path-loss model, re-checked with ray launching.
    Baseline,
    /// Load a scene and report its geometry.
    ValidateScene {
        /// Scene file; defaults to the configured scene.
        path: Option<String>,
    },
}

fn parse_coords(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n || v.iter().any(|x| !x.is_finite()) {
        return Err(format!("expected {n} comma-separated finite numbers"));
    }
    Ok(v)
}

fn parse_point3(s: &str) -> Result<Vec3, String> {
    let v = parse_coords(s, 3)?;
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn parse_point2(s: &str) -> Result<Vec2, String> {
    let v = parse_coords(s, 2)?;
    Ok(Vec2::new(v[0], v[1]))
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Trace { .. } => "trace",
            Command::Map { .. } => "map",
            Command::Mobility { .. } => "mobility",
            Command::Optimize => "optimize",
            Command::Baseline => "baseline",
            Command::ValidateScene { .. } => "validate-scene",
        }
    }
}

fn merged_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut sets = cli.overrides.clone();
    if let Some(s) = &cli.scene {
        sets.push(format!("scene={}", serde_json::Value::String(s.clone())));
    }
    if let Some(s) = cli.seed {
        sets.push(format!("seed={s}"));
    }
    let mut cfg = config::load(cli.config.as_deref(), &sets)?;
    if let Some(o) = &cli.out {
        cfg.out_dir = o.display().to_string();
    } else if let Ok(o) = std::env::var(OUT_ENV) {
        cfg.out_dir = o;
    }
    Ok(cfg)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use urbanemf::Error;
    if e.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Config { .. } | Error::Io { .. } | Error::Parse(_) | Error::Validation(_)) => 2,
        Some(Error::Infeasible { .. } | Error::AllInfeasible) => 3,
        _ => 4,
    }
}

fn execute(cli: &Cli, cfg: &RunConfig, run: &mut Run) -> anyhow::Result<()> {
    let scene_spec = match &cli.command {
        Command::ValidateScene { path: Some(p) } => p.clone(),
        _ => cfg.scene.clone(),
    };
    let scene = run
        .stage("load_scene", || resolve_scene(&scene_spec))
        .with_context(|| format!("loading scene `{scene_spec}`"))?;
    if let Command::ValidateScene { .. } = cli.command {
        return commands::validate_scene(run, &scene);
    }
    let study = run.stage("prepare", || Study::new(cfg.clone(), scene))?;
    let eirp = |e: Option<f64>| e.unwrap_or_else(|| commands::eirp_default(&study));
    match &cli.command {
        Command::Trace { tx, rx, eirp_dbm } => commands::trace(run, &study, *tx, *rx, eirp(*eirp_dbm)),
        Command::Map {
            tx,
            eirp_dbm,
            uniform_stride,
        } => commands::map(run, &study, *tx, eirp(*eirp_dbm), *uniform_stride),
        Command::Mobility { n_ue } => commands::mobility(run, &study, *n_ue),
        Command::Optimize => commands::optimize(run, &study),
        Command::Baseline => commands::baseline(run, &study),
        Command::ValidateScene { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match merged_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.dump_config {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
        return ExitCode::SUCCESS;
    }
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    let mut run = Run::new(PathBuf::from(&cfg.out_dir), cli.command.name(), &cfg.resolved());
    let result = execute(&cli, &cfg, &mut run);
    if let Err(e) = run.finish(result.as_ref().err()) {
        eprintln!("error: could not write manifest: {e:#}");
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
