//! Run artifacts: CSV metrics and latencies, GeoJSON layers, JSON-lines logs.

use super::run::{LatencyRecord, RobotTrace, RunOutput};
use super::ScenarioError;
use crate::meshnet::{write_log, CopState};
use crate::tracker::Track;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

/// Reference pixel rate of the ground pod at 4 Hz, used for comparison in `run_meta.json`.
pub const REFERENCE_UGV_PIXEL_RATE: f64 = 728e6;

pub const OUTPUT_FILES: [&str; 8] = [
    "metrics.csv",
    "tracks.geojson",
    "cop.geojson",
    "latency.csv",
    "run_meta.json",
    "delivery_log.jsonl",
    "track_log.jsonl",
    "trajectories.geojson",
];

fn collection(features: Vec<Value>) -> String {
    let mut s = serde_json::to_string_pretty(&json!({ "type": "FeatureCollection", "features": features }))
        .expect("json values serialize");
    s.push('\n');
    s
}

fn point(x: f64, y: f64, z: f64, properties: Value) -> Value {
    json!({
        "type": "Feature",
        "geometry": { "type": "Point", "coordinates": [x, y, z] },
        "properties": properties,
    })
}

/// COP objects as points; depends only on the COP state so a replayed log
/// reproduces it byte for byte.
pub fn cop_geojson(cop: &CopState) -> String {
    let features = cop
        .objects
        .iter()
        .map(|o| {
            let contributors: Vec<[u32; 2]> = o.contributors.iter().map(|&(r, t)| [r, t]).collect();
            point(
                o.position.x,
                o.position.y,
                o.position.z,
                json!({
                    "id": o.id,
                    "class": o.class.name(),
                    "contributors": contributors,
                    "last_seen": o.last_seen,
                }),
            )
        })
        .collect();
    collection(features)
}

pub fn tracks_geojson(tracks: &[(u32, Track)]) -> String {
    let features = tracks
        .iter()
        .map(|(robot, t)| {
            point(
                t.mean.x,
                t.mean.y,
                t.mean.z,
                json!({
                    "robot_id": robot,
                    "track_id": t.id,
                    "class": t.class.name(),
                    "updates": t.update_count(),
                    "last_update": t.last_update,
                    "covariance_trace": t.covariance.trace(),
                }),
            )
        })
        .collect();
    collection(features)
}

pub fn trajectories_geojson(robots: &[RobotTrace]) -> String {
    let mut features = Vec::new();
    for r in robots {
        if let Some(p) = &r.planned {
            features.push(p.to_geojson(json!({ "robot_id": r.id, "layer": "planned" })));
        }
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": r.driven },
            "properties": { "robot_id": r.id, "layer": "driven" },
        }));
    }
    collection(features)
}

pub fn latency_csv(records: &[LatencyRecord]) -> String {
    let mut s = String::from(
        "robot,frame,t_capture,end_to_end,t_ingest,trigger_to_capture,capture_to_cpu,preprocess,stereo_pointcloud,transfer,detection,localization_3d,detections,contacts\n",
    );
    for r in records {
        let st = &r.stages;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.robot,
            r.frame,
            r.t_capture,
            r.end_to_end,
            r.t_ingest,
            st.trigger_to_capture,
            st.capture_to_cpu,
            st.preprocess,
            st.stereo_pointcloud,
            st.transfer,
            st.detection,
            st.localization_3d,
            r.detections,
            r.contacts
        ));
    }
    s
}

pub fn run_meta(out: &RunOutput) -> Value {
    let robots: Vec<Value> = out
        .robots
        .iter()
        .map(|r| {
            json!({
                "id": r.id,
                "kind": r.kind,
                "plan_cost": r.plan_cost,
                "plan_achieved_eps": r.plan_eps,
                "plan_expansions": r.plan_expansions,
                "pixels_per_s": r.throughput,
            })
        })
        .collect();
    let ugv_rate = out
        .robots
        .iter()
        .find(|r| r.kind == super::RobotKind::Ugv)
        .map(|r| r.throughput);
    json!({
        "seed": out.seed,
        "duration": out.duration,
        "merge_radius": out.merge_radius,
        "capture_rate": out.capture_rate,
        "world": {
            "width": out.world.width(),
            "height": out.world.height(),
            "cell_size": out.world.cell_size,
            "objects": out.world.objects.iter().map(|o| json!({
                "id": o.id,
                "class": o.class.name(),
                "position": [o.position.x, o.position.y, o.position.z],
            })).collect::<Vec<_>>(),
        },
        "robots": robots,
        "throughput": {
            "ugv_pixels_per_s": ugv_rate,
            "reference_pixels_per_s": REFERENCE_UGV_PIXEL_RATE,
            "relative_difference": ugv_rate.map(|r| (r - REFERENCE_UGV_PIXEL_RATE) / REFERENCE_UGV_PIXEL_RATE),
            "note": "computed as the sum of width x height x capture rate over every camera of the pod (stereo pair, RGB and thermal per module); pan-tilt cameras are not included",
        },
        "network": {
            "sends": out.network.sends,
            "deliveries": out.network.deliveries,
            "drops": out.network.drops,
        },
        "vacuous_scores": out.metrics.vacuous,
    })
}

fn write(dir: &Path, name: &str, data: &[u8]) -> Result<PathBuf, ScenarioError> {
    let path = dir.join(name);
    std::fs::write(&path, data).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    Ok(path)
}

/// Writes every file in [`OUTPUT_FILES`] into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<Vec<PathBuf>, ScenarioError> {
    std::fs::create_dir_all(dir).map_err(|e| ScenarioError::Io {
        path: dir.display().to_string(),
        reason: e.to_string(),
    })?;
    let mut log = Vec::new();
    write_log(&out.network.log, &mut log).expect("writing to memory");
    let mut tlog = String::new();
    for r in &out.track_log {
        tlog.push_str(&serde_json::to_string(r).expect("record serializes"));
        tlog.push('\n');
    }
    let mut meta = serde_json::to_string_pretty(&run_meta(out)).expect("json serializes");
    meta.push('\n');
    Ok(vec![
        write(dir, "metrics.csv", out.metrics.to_csv().as_bytes())?,
        write(dir, "tracks.geojson", tracks_geojson(&out.tracks).as_bytes())?,
        write(dir, "cop.geojson", cop_geojson(&out.network.cop).as_bytes())?,
        write(dir, "latency.csv", latency_csv(&out.latency).as_bytes())?,
        write(dir, "run_meta.json", meta.as_bytes())?,
        write(dir, "delivery_log.jsonl", &log)?,
        write(dir, "track_log.jsonl", tlog.as_bytes())?,
        write(dir, "trajectories.geojson", trajectories_geojson(&out.robots).as_bytes())?,
    ])
}
