//! Command-line front end. Exit status: 0 success, 2 configuration or usage
//! error, 3 runtime failure.

use crate::meshnet::{read_log, replay_log, DEFAULT_MERGE_RADIUS};
use crate::navigation::{generate_primitives, plan_route, VehicleState};
use crate::scenario::{cop_geojson, run_scenario, write_outputs, ScenarioConfig, ScenarioError};
use crate::terrain::io::{costmap_metadata, read_costmap, read_xyz, write_costmap, write_roughness_csv};
use crate::terrain::{build_global_costmap, RoughnessParams};
use clap::{Args, Parser, Subcommand};
use nalgebra::Vector2;
use std::ffi::OsString;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "geoloc", version, about = "Multi-robot object geolocation simulator")]
pub struct Cli {
    /// Suppress the summary printed on success.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write metrics, GeoJSON layers and logs.
    Run(RunArgs),
    /// Build a global cost-map from an `x y z` point file.
    Costmap(CostmapArgs),
    /// Plan a route over a cost-map file.
    Plan(PlanArgs),
    /// Rebuild the COP from a recorded delivery log.
    Replay(ReplayArgs),
    /// Summarize the outputs of a previous run.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CostmapArgs {
    /// Point cloud, one `x y z` triple per line.
    #[arg(long)]
    pub cloud: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Takes roughness parameters and cell size from `[planner]`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub min_points: Option<usize>,
    #[arg(long)]
    pub cell_size: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Binary cost-map written by `costmap`.
    #[arg(long)]
    pub costmap: PathBuf,
    /// Start position `x,y`.
    #[arg(long, value_parser = parse_xy, allow_hyphen_values = true)]
    pub start: [f64; 2],
    /// Start heading in degrees, counter-clockwise from east.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub heading: f64,
    /// Waypoint `x,y`; repeat for a multi-leg route.
    #[arg(long = "waypoint", value_parser = parse_xy, required = true, allow_hyphen_values = true)]
    pub waypoints: Vec<[f64; 2]>,
    #[arg(long)]
    pub out: PathBuf,
    /// Takes lattice, schedule and goal tolerance from `[planner]`.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the value in a `run_meta.json` next to the log, then to 5 m.
    #[arg(long)]
    pub merge_radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory written by `run`.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_xy(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => Ok([
            x.parse().map_err(|e| format!("bad x in {s:?}: {e}"))?,
            y.parse().map_err(|e| format!("bad y in {s:?}: {e}"))?,
        ]),
        _ => Err(format!("expected x,y but got {s:?}")),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Config(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    ScenarioConfig::load(path).map_err(|e| CliError::Config(e.to_string()))
}

fn write_file(path: &Path, data: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, data).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

/// Validates, runs and writes all artifacts. Returns the summary text.
pub fn cmd_run(args: &RunArgs) -> Result<String, CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    let out = run_scenario(&cfg)?;
    let files = write_outputs(&args.out, &out)?;
    let m = &out.metrics;
    Ok(format!(
        "objects {}  tracks {}  precision {:.3}  recall {:.3}{}  geo error max {:.3} m  COP consistency {:.3}  latency mean {:.3} s\nwrote {} files to {}",
        m.objects,
        m.tracks,
        m.track_precision,
        m.track_recall,
        if m.vacuous { " (vacuous)" } else { "" },
        m.geo_error_max,
        m.cop_consistency,
        m.latency_mean,
        files.len(),
        args.out.display()
    ))
}

pub fn cmd_costmap(args: &CostmapArgs) -> Result<String, CliError> {
    let (mut params, mut cell) = (RoughnessParams::default(), 0.5);
    if let Some(path) = &args.config {
        let cfg = load_config(path)?;
        params = cfg.planner.roughness;
        cell = cfg.planner.cell_size;
    }
    params.radius = args.radius.unwrap_or(params.radius);
    params.threshold = args.threshold.unwrap_or(params.threshold);
    params.min_points = args.min_points.unwrap_or(params.min_points);
    cell = args.cell_size.unwrap_or(cell);
    params.validate().map_err(|e| CliError::Config(e.to_string()))?;
    if !(cell > 0.0) {
        return Err(CliError::Config(format!("cell size {cell} must be positive")));
    }
    let file = File::open(&args.cloud).map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", args.cloud.display())))?;
    let cloud = read_xyz(BufReader::new(file)).map_err(|e| CliError::Runtime(format!("{}: {e}", args.cloud.display())))?;
    let map = build_global_costmap(&cloud, &params, cell).map_err(runtime)?;
    create_dir(&args.out)?;
    let mut bin = Vec::new();
    write_costmap(&map, &mut bin).map_err(runtime)?;
    write_file(&args.out.join("costmap.gcm"), &bin)?;
    write_file(&args.out.join("costmap_meta.toml"), costmap_metadata(&map, &params, cloud.len()).as_bytes())?;
    let mut csv = Vec::new();
    write_roughness_csv(&map, &mut csv).map_err(runtime)?;
    write_file(&args.out.join("roughness.csv"), &csv)?;
    Ok(format!(
        "cells {}x{}  navigable {}  unknown {}  (radius {} m, threshold {} m, cell {} m)",
        map.width,
        map.height,
        map.navigable_count(),
        map.unknown_count(),
        params.radius,
        params.threshold,
        cell
    ))
}

pub fn cmd_plan(args: &PlanArgs) -> Result<String, CliError> {
    let planner = match &args.config {
        Some(path) => load_config(path)?.planner,
        None => Default::default(),
    };
    let file = File::open(&args.costmap).map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", args.costmap.display())))?;
    let map = read_costmap(BufReader::new(file)).map_err(|e| CliError::Runtime(format!("{}: {e}", args.costmap.display())))?;
    let lat = &planner.lattice;
    let prims = generate_primitives(lat.min_turn_radius, lat.arc_length, lat.headings, map.cell_size)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let start = VehicleState::new(Vector2::new(args.start[0], args.start[1]), args.heading.to_radians());
    let wps: Vec<Vector2<f64>> = args.waypoints.iter().map(|w| Vector2::new(w[0], w[1])).collect();
    let route = plan_route(&start, &wps, &map, &prims, &planner.schedule, planner.goal_tolerance).map_err(runtime)?;
    let expansions: u64 = route.legs.iter().map(|l| l.expansions).sum();
    let feature = route.trajectory.to_geojson(serde_json::json!({
        "cost": route.cost(),
        "achieved_eps": route.achieved_eps(),
        "expansions": expansions,
        "legs": route.legs.len(),
    }));
    let fc = serde_json::json!({ "type": "FeatureCollection", "features": [feature] });
    create_dir(&args.out)?;
    let mut text = serde_json::to_string_pretty(&fc).map_err(runtime)?;
    text.push('\n');
    write_file(&args.out.join("trajectory.geojson"), text.as_bytes())?;
    Ok(format!(
        "length {:.2} m  cost {:.3}  achieved eps {}  expansions {}",
        route.trajectory.length(),
        route.cost(),
        route.achieved_eps(),
        expansions
    ))
}

fn merge_radius_near(log: &Path) -> Option<f64> {
    let meta = log.parent()?.join("run_meta.json");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(meta).ok()?).ok()?;
    v.get("merge_radius")?.as_f64()
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<String, CliError> {
    let radius = args
        .merge_radius
        .or_else(|| merge_radius_near(&args.log))
        .unwrap_or(DEFAULT_MERGE_RADIUS);
    if !(radius > 0.0) {
        return Err(CliError::Config(format!("merge radius {radius} must be positive")));
    }
    let text = std::fs::read_to_string(&args.log)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", args.log.display())))?;
    let log = read_log(&text).map_err(runtime)?;
    let cop = replay_log(&log, radius).map_err(runtime)?;
    create_dir(&args.out)?;
    write_file(&args.out.join("cop.geojson"), cop_geojson(&cop).as_bytes())?;
    Ok(format!("{} records replayed, {} COP objects", log.len(), cop.objects.len()))
}

pub fn cmd_report(args: &ReportArgs) -> Result<String, CliError> {
    let path = args.out.join("metrics.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let (k, v) = line
            .split_once(',')
            .ok_or_else(|| CliError::Runtime(format!("{}: malformed row {}", path.display(), i + 1)))?;
        lines.push(format!("{k:<18} {v}"));
    }
    if let Ok(meta) = std::fs::read_to_string(args.out.join("run_meta.json")) {
        let v: serde_json::Value = serde_json::from_str(&meta).map_err(runtime)?;
        if let Some(rate) = v.pointer("/throughput/ugv_pixels_per_s").and_then(|r| r.as_f64()) {
            let reference = v.pointer("/throughput/reference_pixels_per_s").and_then(|r| r.as_f64()).unwrap_or(f64::NAN);
            lines.push(format!(
                "{:<18} {:.1} MPixel/s (reference {:.0}, {:+.2}%)",
                "ugv_pixel_rate",
                rate / 1e6,
                reference / 1e6,
                100.0 * (rate - reference) / reference
            ));
        }
    }
    Ok(lines.join("\n"))
}

/// Parses `args` and dispatches; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Costmap(a) => cmd_costmap(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(summary) => {
            if !cli.quiet {
                println!("{summary}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
