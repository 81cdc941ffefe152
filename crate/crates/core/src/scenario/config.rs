//! Scenario configuration (TOML) and whole-file validation.

use super::pipeline::PipelineModel;
use super::sensing::SensingModel;
use super::world::WorldSpec;
use crate::fusion::{CovarianceParams, DepthPolicy};
use crate::meshnet::{LinkModel, DEFAULT_MERGE_RADIUS, DEFAULT_PAYLOAD_BYTES};
use crate::navigation::{EpsSchedule, LatticeParams, PursuitParams};
use crate::terrain::{LocalGridParams, RoughnessParams};
use crate::tracker::LifecycleParams;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    /// Simulated seconds.
    pub duration: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 1, duration: 60.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotKind {
    Ugv,
    Uav,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub id: u32,
    pub kind: RobotKind,
    pub start: [f64; 2],
    #[serde(default)]
    pub heading_deg: f64,
    pub waypoints: Vec<[f64; 2]>,
    /// Cruise speed for aerial vehicles; ground vehicles use `control.speed`.
    #[serde(default = "default_uav_speed")]
    pub speed: f64,
    /// Height above the terrain at the start point, aerial vehicles only.
    #[serde(default = "default_altitude")]
    pub altitude: f64,
    /// Overrides `network.link` for this robot; its seed is used as given.
    #[serde(default)]
    pub link: Option<LinkModel>,
}

fn default_uav_speed() -> f64 {
    5.0
}

fn default_altitude() -> f64 {
    60.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSection {
    pub cell_size: f64,
    pub roughness: RoughnessParams,
    pub lattice: LatticeParams,
    pub schedule: EpsSchedule,
    pub goal_tolerance: f64,
}

impl Default for PlannerSection {
    fn default() -> Self {
        Self {
            cell_size: 0.5,
            roughness: RoughnessParams::default(),
            lattice: LatticeParams::default(),
            schedule: EpsSchedule::default(),
            goal_tolerance: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    pub pursuit: PursuitParams,
    pub local_grid: LocalGridParams,
    /// Local occupancy fraction that marks a cell occupied.
    pub obstacle_threshold: f64,
    /// Distance ahead checked for the emergency stop.
    pub stop_distance: f64,
    pub scan_rate: f64,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self {
            pursuit: PursuitParams::default(),
            local_grid: LocalGridParams::default(),
            obstacle_threshold: 0.2,
            stop_distance: 8.0,
            scan_rate: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub link: LinkModel,
    pub merge_radius: f64,
    pub payload_bytes: u32,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            link: LinkModel::default(),
            merge_radius: DEFAULT_MERGE_RADIUS,
            payload_bytes: DEFAULT_PAYLOAD_BYTES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionSection {
    pub depth: DepthPolicy,
    pub covariance: CovarianceParams,
}

impl Default for FusionSection {
    fn default() -> Self {
        Self {
            depth: DepthPolicy::default(),
            covariance: CovarianceParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringSection {
    pub match_radius: f64,
}

impl Default for ScoringSection {
    fn default() -> Self {
        Self { match_radius: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub run: RunSection,
    pub world: WorldSpec,
    pub robots: Vec<RobotConfig>,
    pub sensing: SensingModel,
    pub fusion: FusionSection,
    pub pipeline: PipelineModel,
    pub tracker: LifecycleParams,
    pub planner: PlannerSection,
    pub control: ControlSection,
    pub network: NetworkSection,
    pub scoring: ScoringSection,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Reads, parses and validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let cfg = Self::from_toml(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reports every violation at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                errs.push(msg);
            }
        };
        check(
            self.run.duration > 0.0 && self.run.duration.is_finite(),
            format!("run.duration {} must be positive", self.run.duration),
        );
        for e in self.world.validate() {
            check(false, format!("world: {e}"));
        }
        for e in self.sensing.validate() {
            check(false, format!("sensing: {e}"));
        }
        for e in self.pipeline.validate() {
            check(false, format!("pipeline: {e}"));
        }
        if let Err(e) = self.fusion.depth.validate() {
            check(false, format!("fusion.depth: {e}"));
        }
        if let Err(e) = self.fusion.covariance.validate() {
            check(false, format!("fusion.covariance: {e}"));
        }
        if let Err(e) = self.tracker.validate() {
            check(false, format!("tracker: {e}"));
        }
        if let Err(e) = self.planner.roughness.validate() {
            check(false, format!("planner.roughness: {e}"));
        }
        if let Err(e) = self.planner.schedule.validate() {
            check(false, format!("planner.schedule: {e}"));
        }
        check(
            self.planner.cell_size > 0.0,
            format!("planner.cell_size {} must be positive", self.planner.cell_size),
        );
        check(
            self.planner.goal_tolerance >= self.planner.cell_size,
            format!(
                "planner.goal_tolerance {} must be at least the cell size {}",
                self.planner.goal_tolerance, self.planner.cell_size
            ),
        );
        let lat = &self.planner.lattice;
        if let Err(e) = crate::navigation::generate_primitives(lat.min_turn_radius, lat.arc_length, lat.headings, self.planner.cell_size) {
            check(false, format!("planner.lattice: {e}"));
        }
        let p = &self.control.pursuit;
        check(
            p.lookahead > 0.0 && p.speed > 0.0 && p.min_turn_radius > 0.0,
            "control.pursuit: lookahead, speed and min_turn_radius must be positive".into(),
        );
        check(
            self.control.scan_rate > 0.0,
            format!("control.scan_rate {} must be positive", self.control.scan_rate),
        );
        check(
            (0.0..=1.0).contains(&self.control.obstacle_threshold),
            format!("control.obstacle_threshold {} outside [0, 1]", self.control.obstacle_threshold),
        );
        let g = &self.control.local_grid;
        check(
            g.cell_size > 0.0 && g.size_cells > 0 && g.voxel_size > 0.0 && g.range_limit > 0.0,
            "control.local_grid: sizes and range must be positive".into(),
        );
        if let Err(e) = self.network.link.validate() {
            check(false, format!("network.link: {e}"));
        }
        check(
            self.network.merge_radius > 0.0,
            format!("network.merge_radius {} must be positive", self.network.merge_radius),
        );
        check(self.network.payload_bytes > 0, "network.payload_bytes must be positive".into());
        check(
            self.scoring.match_radius > 0.0,
            format!("scoring.match_radius {} must be positive", self.scoring.match_radius),
        );
        let mut ids: Vec<u32> = self.robots.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            check(false, "robot ids must be unique".into());
        }
        for r in &self.robots {
            let inside = |p: [f64; 2]| p[0] >= 0.0 && p[1] >= 0.0 && p[0] <= self.world.width && p[1] <= self.world.height;
            check(inside(r.start), format!("robot {}: start {:?} outside the world", r.id, r.start));
            check(!r.waypoints.is_empty(), format!("robot {}: needs at least one waypoint", r.id));
            for w in &r.waypoints {
                check(inside(*w), format!("robot {}: waypoint {:?} outside the world", r.id, w));
            }
            if r.kind == RobotKind::Uav {
                check(r.speed > 0.0, format!("robot {}: speed {} must be positive", r.id, r.speed));
                check(r.altitude > 0.0, format!("robot {}: altitude {} must be positive", r.id, r.altitude));
            }
            if let Some(l) = &r.link {
                if let Err(e) = l.validate() {
                    check(false, format!("robot {}: link: {e}", r.id));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    /// Link used by a robot: its own override, or the shared model with a
    /// per-robot seed derived from the run seed.
    pub fn link_for(&self, robot: &RobotConfig) -> LinkModel {
        robot.link.unwrap_or(LinkModel {
            rng_seed: super::derive_seed(self.run.seed, super::DOMAIN_LINK, robot.id as u64, 0),
            ..self.network.link
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let again = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn all_violations_reported() {
        let text = r#"
[run]
duration = -1.0
[world]
width = 0.0
[network]
merge_radius = 0.0
[[robots]]
id = 1
kind = "ugv"
start = [-5.0, 0.0]
waypoints = []
"#;
        let cfg = ScenarioConfig::from_toml(text).unwrap();
        let Err(ConfigError::Invalid(errs)) = cfg.validate() else {
            panic!("expected validation failure")
        };
        let joined = errs.join("\n");
        for needle in ["run.duration", "world", "merge_radius", "start", "waypoint"] {
            assert!(joined.contains(needle), "missing {needle} in {joined}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(ScenarioConfig::from_toml("[run]\nsed = 3\n"), Err(ConfigError::Parse(_))));
    }
}
