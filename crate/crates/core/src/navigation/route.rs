//! Multi-waypoint routing by chaining planner legs.

use super::ara::{plan_ara, Goal, PlanResult};
use super::control::VehicleState;
use super::lattice::LatticeGraph;
use super::primitives::MotionPrimitive;
use super::{EpsSchedule, PlanError, Trajectory};
use crate::terrain::CostMapGlobal;
use nalgebra::Vector2;

#[derive(Debug, Clone, PartialEq)]
pub struct RouteResult {
    pub trajectory: Trajectory,
    pub legs: Vec<PlanResult>,
}

impl RouteResult {
    pub fn cost(&self) -> f64 {
        self.legs.iter().map(|l| l.cost).sum()
    }

    /// Worst inflation factor over all legs.
    pub fn achieved_eps(&self) -> f64 {
        self.legs.iter().map(|l| l.achieved_eps).fold(1.0, f64::max)
    }
}

/// Plans `start -> w1 -> w2 -> ...`; each leg starts from the lattice state
/// where the previous one ended, so headings carry over.
pub fn plan_route(
    start: &VehicleState,
    waypoints: &[Vector2<f64>],
    costmap: &CostMapGlobal,
    primitives: &[MotionPrimitive],
    sched: &EpsSchedule,
    tolerance: f64,
) -> Result<RouteResult, PlanError> {
    if waypoints.is_empty() {
        return Err(PlanError::Config("route needs at least one waypoint".into()));
    }
    let graph = LatticeGraph::new(costmap, primitives)?;
    let mut state = graph.snap(start.position.x, start.position.y, start.heading);
    let mut trajectory = Trajectory::default();
    let mut legs = Vec::with_capacity(waypoints.len());
    for (leg, w) in waypoints.iter().enumerate() {
        let goal = Goal {
            position: *w,
            tolerance,
        };
        let r = plan_ara(state, &goal, costmap, primitives, sched).map_err(|e| PlanError::Leg {
            leg,
            source: Box::new(e),
        })?;
        state = *r.states.last().expect("plan has a start state");
        trajectory.extend(&r.trajectory);
        legs.push(r);
    }
    Ok(RouteResult { trajectory, legs })
}
