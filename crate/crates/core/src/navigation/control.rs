//! Pure-pursuit path tracking and a kinematic vehicle model.

use super::Trajectory;
use crate::terrain::{OccState, OccupancyMap};
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: Vector2<f64>,
    pub heading: f64,
    pub speed: f64,
    pub curvature: f64,
    pub time: f64,
}

impl VehicleState {
    pub fn new(position: Vector2<f64>, heading: f64) -> Self {
        Self {
            position,
            heading,
            speed: 0.0,
            curvature: 0.0,
            time: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub speed: f64,
    pub curvature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PursuitOutput {
    Drive(Command),
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PursuitParams {
    pub lookahead: f64,
    pub speed: f64,
    pub min_turn_radius: f64,
}

impl Default for PursuitParams {
    fn default() -> Self {
        Self {
            lookahead: 8.0,
            speed: 3.0,
            min_turn_radius: 4.0,
        }
    }
}

/// Advances along a circular arc of the commanded curvature (a straight line
/// when it is zero). Exact, so splitting `dt` does not change the result.
pub fn step_vehicle(state: &VehicleState, cmd: &Command, dt: f64) -> VehicleState {
    let d = cmd.speed * dt;
    let k = cmd.curvature;
    let th0 = state.heading;
    let (dx, dy, th1) = if k == 0.0 || (k * d).abs() < 1e-12 {
        (d * th0.cos(), d * th0.sin(), th0 + k * d)
    } else {
        let th1 = th0 + k * d;
        ((th1.sin() - th0.sin()) / k, (th0.cos() - th1.cos()) / k, th1)
    };
    VehicleState {
        position: state.position + Vector2::new(dx, dy),
        heading: th1,
        speed: cmd.speed,
        curvature: k,
        time: state.time + dt,
    }
}

/// `2 y / L^2`, clamped to the turning limit.
pub fn pursuit_curvature(y_local: f64, distance: f64, max_curvature: f64) -> f64 {
    if distance <= 0.0 {
        return 0.0;
    }
    (2.0 * y_local / (distance * distance)).clamp(-max_curvature, max_curvature)
}

fn nearest_in(traj: &Trajectory, p: Vector2<f64>, range: std::ops::Range<usize>) -> usize {
    let mut best = range.start;
    let mut best_d = f64::INFINITY;
    for i in range {
        let q = &traj.points[i];
        let d = (q.x - p.x).powi(2) + (q.y - p.y).powi(2);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn command_from(state: &VehicleState, traj: &Trajectory, nearest: usize, params: &PursuitParams) -> PursuitOutput {
    let s0 = traj.cumulative[nearest];
    if traj.length() - s0 < params.lookahead / 2.0 {
        return PursuitOutput::Finished;
    }
    let target_s = s0 + params.lookahead;
    let ti = traj.cumulative[nearest..]
        .iter()
        .position(|&s| s >= target_s)
        .map_or(traj.len() - 1, |k| nearest + k);
    let t = &traj.points[ti];
    let d = Vector2::new(t.x, t.y) - state.position;
    let (s, c) = state.heading.sin_cos();
    let y_local = -s * d.x + c * d.y;
    PursuitOutput::Drive(Command {
        speed: params.speed,
        curvature: pursuit_curvature(y_local, d.norm(), 1.0 / params.min_turn_radius),
    })
}

/// Stateless pure pursuit: nearest point is searched over the whole path.
pub fn pure_pursuit(state: &VehicleState, traj: &Trajectory, params: &PursuitParams) -> PursuitOutput {
    if traj.is_empty() {
        return PursuitOutput::Finished;
    }
    let nearest = nearest_in(traj, state.position, 0..traj.len());
    command_from(state, traj, nearest, params)
}

/// Pure pursuit that remembers its progress, so self-crossing paths are
/// followed in order.
#[derive(Debug, Clone)]
pub struct PurePursuit {
    pub params: PursuitParams,
    progress: usize,
}

impl PurePursuit {
    pub fn new(params: PursuitParams) -> Self {
        Self { params, progress: 0 }
    }

    pub fn progress(&self) -> usize {
        self.progress
    }

    /// Arc length already covered along `traj`.
    pub fn progress_s(&self, traj: &Trajectory) -> f64 {
        traj.cumulative.get(self.progress).copied().unwrap_or(0.0)
    }

    pub fn command(&mut self, state: &VehicleState, traj: &Trajectory) -> PursuitOutput {
        if traj.is_empty() {
            return PursuitOutput::Finished;
        }
        // search a window ahead of the last progress point
        let start = self.progress.min(traj.len() - 1);
        let limit = traj.cumulative[start] + 2.0 * self.params.lookahead;
        let end = traj.cumulative[start..]
            .iter()
            .position(|&s| s > limit)
            .map_or(traj.len(), |k| start + k);
        self.progress = nearest_in(traj, state.position, start..end.max(start + 1));
        command_from(state, traj, self.progress, &self.params)
    }
}

/// True when any trajectory point in `[from_s, from_s + ahead]` falls in an occupied local cell.
pub fn path_blocked_ahead(traj: &Trajectory, from_s: f64, ahead: f64, occ: &OccupancyMap) -> bool {
    traj.points
        .iter()
        .zip(&traj.cumulative)
        .filter(|(_, &s)| s >= from_s && s <= from_s + ahead)
        .any(|(p, _)| occ.state_at(p.x, p.y) == OccState::Occupied)
}

/// Distance from `p` to the trajectory polyline.
pub fn cross_track_error(traj: &Trajectory, p: Vector2<f64>) -> f64 {
    if traj.len() == 1 {
        let q = &traj.points[0];
        return (q.x - p.x).hypot(q.y - p.y);
    }
    traj.points
        .windows(2)
        .map(|w| {
            let a = Vector2::new(w[0].x, w[0].y);
            let b = Vector2::new(w[1].x, w[1].y);
            let ab = b - a;
            let t = if ab.norm_squared() > 0.0 {
                ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (a + ab * t - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}
