//! Lattice planning over a cost-map, pure-pursuit tracking and a kinematic vehicle.

pub mod ara;
pub mod control;
pub mod lattice;
pub mod primitives;
pub mod route;

pub use ara::{plan_ara, Goal, IterationStat, PlanResult};
pub use control::{path_blocked_ahead, pure_pursuit, step_vehicle, Command, PursuitOutput, PursuitParams, PurePursuit, VehicleState};
pub use lattice::{LatticeGraph, LatticeState};
pub use primitives::{generate_primitives, MotionPrimitive, PosePoint};
pub use route::{plan_route, RouteResult};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("planner configuration: {0}")]
    Config(String),
    #[error("start cell ({0}, {1}) is not navigable")]
    StartBlocked(i64, i64),
    #[error("goal tolerance {tolerance} m is below the cell size {cell_size} m")]
    GoalTolerance { tolerance: f64, cell_size: f64 },
    #[error("goal is unreachable")]
    Unreachable,
    #[error("search budget exhausted after {expansions} expansions with no solution")]
    Timeout { expansions: u64 },
    /// `leg` is zero-based; the message counts from 1.
    #[error("route leg {} failed: {source}", leg + 1)]
    Leg {
        leg: usize,
        #[source]
        source: Box<PlanError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpsSchedule {
    pub initial_eps: f64,
    pub decrement: f64,
    pub final_eps: f64,
    /// Expansion budget across the whole schedule.
    pub max_expansions: Option<u64>,
    /// Optional wall-clock budget in seconds. Non-deterministic; off by default.
    pub time_budget: Option<f64>,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        Self {
            initial_eps: 3.0,
            decrement: 0.5,
            final_eps: 1.0,
            max_expansions: Some(5_000_000),
            time_budget: None,
        }
    }
}

impl EpsSchedule {
    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.final_eps >= 1.0) || !(self.initial_eps >= self.final_eps) {
            return Err(PlanError::Config(format!(
                "need initial_eps >= final_eps >= 1, got {} and {}",
                self.initial_eps, self.final_eps
            )));
        }
        if !(self.decrement > 0.0) {
            return Err(PlanError::Config(format!("eps decrement {} must be positive", self.decrement)));
        }
        if let Some(t) = self.time_budget {
            if !(t > 0.0) {
                return Err(PlanError::Config(format!("time budget {t} must be positive")));
            }
        }
        Ok(())
    }

    /// The inflation factors the schedule visits, in order.
    pub fn steps(&self) -> Vec<f64> {
        let mut out = vec![self.initial_eps];
        let mut e = self.initial_eps;
        while e > self.final_eps {
            e = (e - self.decrement).max(self.final_eps);
            out.push(e);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatticeParams {
    pub headings: usize,
    pub min_turn_radius: f64,
    pub arc_length: f64,
}

impl Default for LatticeParams {
    fn default() -> Self {
        Self {
            headings: 16,
            min_turn_radius: 4.0,
            arc_length: 2.0,
        }
    }
}

/// Dense `(x, y, heading)` polyline with cumulative arc length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub points: Vec<PosePoint>,
    pub cumulative: Vec<f64>,
}

impl Trajectory {
    pub fn from_points(points: Vec<PosePoint>) -> Self {
        let mut cumulative = Vec::with_capacity(points.len());
        let mut s = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                let q = &points[i - 1];
                s += (p.x - q.x).hypot(p.y - q.y);
            }
            cumulative.push(s);
        }
        Self { points, cumulative }
    }

    /// Straight polyline through `waypoints`, resampled at `spacing`.
    pub fn straight(waypoints: &[(f64, f64)], spacing: f64) -> Self {
        let mut pts = Vec::new();
        for w in waypoints.windows(2) {
            let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            let len = dx.hypot(dy);
            let n = ((len / spacing).ceil() as usize).max(1);
            let heading = dy.atan2(dx);
            let start = if pts.is_empty() { 0 } else { 1 };
            for i in start..=n {
                let f = i as f64 / n as f64;
                pts.push(PosePoint {
                    x: w[0].0 + f * dx,
                    y: w[0].1 + f * dy,
                    heading,
                });
            }
        }
        Self::from_points(pts)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn length(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn max_spacing(&self) -> f64 {
        self.cumulative.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Appends `other`, dropping its first point when it duplicates our last.
    pub fn extend(&mut self, other: &Trajectory) {
        let skip = match (self.points.last(), other.points.first()) {
            (Some(a), Some(b)) => usize::from((a.x - b.x).hypot(a.y - b.y) < 1e-9),
            _ => 0,
        };
        let mut pts = std::mem::take(&mut self.points);
        pts.extend_from_slice(&other.points[skip.min(other.points.len())..]);
        *self = Self::from_points(pts);
    }

    pub fn to_geojson(&self, properties: serde_json::Value) -> serde_json::Value {
        let coords: Vec<[f64; 2]> = self.points.iter().map(|p| [p.x, p.y]).collect();
        serde_json::json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": coords },
            "properties": properties,
        })
    }
}
