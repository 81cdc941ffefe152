//! Anytime repairing A* over the state lattice.

use super::lattice::{LatticeGraph, LatticeState};
use super::primitives::{MotionPrimitive, PosePoint};
use super::{EpsSchedule, PlanError, Trajectory};
use crate::terrain::CostMapGlobal;
use nalgebra::Vector2;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

/// Heading-free goal region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Goal {
    pub position: Vector2<f64>,
    pub tolerance: f64,
}

impl Goal {
    pub fn new(x: f64, y: f64, tolerance: f64) -> Self {
        Self {
            position: Vector2::new(x, y),
            tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStat {
    pub eps: f64,
    pub cost: f64,
    pub expansions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub trajectory: Trajectory,
    pub states: Vec<LatticeState>,
    pub cost: f64,
    pub achieved_eps: f64,
    pub expansions: u64,
    /// One entry per completed search of the schedule.
    pub iterations: Vec<IterationStat>,
}

const NONE: u32 = u32::MAX;

#[derive(PartialEq)]
struct Entry {
    key: f64,
    g: f64,
    idx: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on key, then index for determinism
        other.key.total_cmp(&self.key).then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Search<'g, 'a> {
    graph: &'g LatticeGraph<'a>,
    goal: Goal,
    min_cost: f64,
    goal_idx: usize,
    g: Vec<f64>,
    parent: Vec<u32>,
    parent_prim: Vec<u8>,
    closed: Vec<u32>,
    in_open: Vec<bool>,
    in_incons: Vec<bool>,
    incons: Vec<u32>,
    heap: BinaryHeap<Entry>,
    iteration: u32,
    expansions: u64,
}

enum Stop {
    Done,
    Budget,
}

impl Search<'_, '_> {
    fn h(&self, idx: usize) -> f64 {
        if idx == self.goal_idx {
            return 0.0;
        }
        let d = (self.graph.position(self.graph.state(idx)) - self.goal.position).norm();
        (d - self.goal.tolerance).max(0.0) * self.min_cost
    }

    fn in_goal(&self, s: LatticeState) -> bool {
        (self.graph.position(s) - self.goal.position).norm() <= self.goal.tolerance
    }

    fn push(&mut self, idx: usize, eps: f64) {
        self.in_open[idx] = true;
        self.heap.push(Entry {
            key: self.g[idx] + eps * self.h(idx),
            g: self.g[idx],
            idx: idx as u32,
        });
    }

    fn relax(&mut self, from: usize, to: usize, cost: f64, prim: usize, eps: f64) {
        let ng = self.g[from] + cost;
        if ng < self.g[to] {
            self.g[to] = ng;
            self.parent[to] = from as u32;
            self.parent_prim[to] = prim as u8;
            if self.closed[to] != self.iteration {
                self.push(to, eps);
            } else if !self.in_incons[to] {
                self.in_incons[to] = true;
                self.incons.push(to as u32);
            }
        }
    }

    /// Moves OPEN and INCONS into a fresh heap keyed by the new inflation.
    fn rekey(&mut self, eps: f64) {
        let mut members: Vec<u32> = self
            .heap
            .drain()
            .filter_map(|e| self.in_open[e.idx as usize].then_some(e.idx))
            .collect();
        members.append(&mut self.incons);
        members.sort_unstable();
        members.dedup();
        for idx in members {
            self.in_incons[idx as usize] = false;
            self.push(idx as usize, eps);
        }
    }

    fn improve_path(&mut self, eps: f64, budget: &Budget) -> Stop {
        let mut succ = Vec::with_capacity(8);
        while let Some(top) = self.heap.peek() {
            let idx = top.idx as usize;
            if !self.in_open[idx] || top.g != self.g[idx] {
                self.heap.pop();
                continue;
            }
            if self.g[self.goal_idx] <= top.key {
                return Stop::Done;
            }
            if budget.exhausted(self.expansions) {
                return Stop::Budget;
            }
            self.heap.pop();
            self.in_open[idx] = false;
            self.closed[idx] = self.iteration;
            self.expansions += 1;
            let s = self.graph.state(idx);
            succ.clear();
            self.graph.for_each_successor(s, |t, c, k| succ.push((self.graph.index(t), c, k)));
            for &(t, c, k) in &succ {
                self.relax(idx, t, c, k, eps);
            }
            if self.in_goal(s) {
                self.relax(idx, self.goal_idx, 0.0, 0, eps);
            }
        }
        Stop::Done
    }

    fn extract(&self) -> (Vec<LatticeState>, Vec<u8>) {
        let mut states = Vec::new();
        let mut prims = Vec::new();
        let mut cur = self.parent[self.goal_idx];
        while cur != NONE {
            let i = cur as usize;
            states.push(self.graph.state(i));
            if self.parent[i] != NONE {
                prims.push(self.parent_prim[i]);
            }
            cur = self.parent[i];
        }
        states.reverse();
        prims.reverse();
        (states, prims)
    }
}

struct Budget {
    max_expansions: Option<u64>,
    deadline: Option<Instant>,
}

impl Budget {
    fn exhausted(&self, expansions: u64) -> bool {
        self.max_expansions.is_some_and(|m| expansions >= m)
            || (expansions % 256 == 0 && self.deadline.is_some_and(|d| Instant::now() >= d))
    }
}

fn densify(graph: &LatticeGraph<'_>, states: &[LatticeState], prims: &[u8]) -> Trajectory {
    let first = states[0];
    let p0 = graph.position(first);
    let mut pts = vec![PosePoint {
        x: p0.x,
        y: p0.y,
        heading: graph.heading_angle(first),
    }];
    for (s, &k) in states.iter().zip(prims) {
        let prim: &MotionPrimitive = graph.primitives(s.heading)[k as usize];
        let base = graph.position(*s);
        pts.extend(prim.samples[1..].iter().map(|q| PosePoint {
            x: base.x + q.x,
            y: base.y + q.y,
            heading: q.heading,
        }));
    }
    Trajectory::from_points(pts)
}

/// Runs the inflation schedule, reusing search state between iterations.
/// Returns the best solution found; its cost is within `achieved_eps` of optimal.
pub fn plan_ara(
    start: LatticeState,
    goal: &Goal,
    costmap: &CostMapGlobal,
    primitives: &[MotionPrimitive],
    sched: &EpsSchedule,
) -> Result<PlanResult, PlanError> {
    sched.validate()?;
    let graph = LatticeGraph::new(costmap, primitives)?;
    if goal.tolerance < costmap.cell_size {
        return Err(PlanError::GoalTolerance {
            tolerance: goal.tolerance,
            cell_size: costmap.cell_size,
        });
    }
    if start.heading >= graph.headings() {
        return Err(PlanError::Config(format!("start heading {} out of range", start.heading)));
    }
    if !graph.navigable(start.ix, start.iy) {
        return Err(PlanError::StartBlocked(start.ix, start.iy));
    }
    let Some(min_cost) = costmap.min_navigable_cost() else {
        return Err(PlanError::Unreachable);
    };
    if graph.state_count() >= NONE as usize {
        return Err(PlanError::Config("lattice too large".into()));
    }
    if primitives.len() / graph.headings() > u8::MAX as usize {
        return Err(PlanError::Config("too many primitives per heading".into()));
    }

    let n = graph.state_count() + 1;
    let mut search = Search {
        graph: &graph,
        goal: *goal,
        min_cost,
        goal_idx: n - 1,
        g: vec![f64::INFINITY; n],
        parent: vec![NONE; n],
        parent_prim: vec![0; n],
        closed: vec![0; n],
        in_open: vec![false; n],
        in_incons: vec![false; n],
        incons: Vec::new(),
        heap: BinaryHeap::new(),
        iteration: 0,
        expansions: 0,
    };
    let budget = Budget {
        max_expansions: sched.max_expansions,
        deadline: sched.time_budget.map(|t| Instant::now() + std::time::Duration::from_secs_f64(t)),
    };
    let start_idx = graph.index(start);
    search.g[start_idx] = 0.0;
    search.push(start_idx, sched.initial_eps);

    let mut iterations = Vec::new();
    let mut best: Option<(f64, f64, Vec<LatticeState>, Vec<u8>)> = None;
    for eps in sched.steps() {
        search.iteration += 1;
        search.rekey(eps);
        if let Stop::Budget = search.improve_path(eps, &budget) {
            break;
        }
        let cost = search.g[search.goal_idx];
        if !cost.is_finite() {
            return Err(PlanError::Unreachable);
        }
        iterations.push(IterationStat {
            eps,
            cost,
            expansions: search.expansions,
        });
        let (states, prims) = search.extract();
        best = Some((cost, eps, states, prims));
    }
    let Some((cost, achieved_eps, states, prims)) = best else {
        return Err(PlanError::Timeout {
            expansions: search.expansions,
        });
    };
    Ok(PlanResult {
        trajectory: densify(&graph, &states, &prims),
        states,
        cost,
        achieved_eps,
        expansions: search.expansions,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::navigation::generate_primitives;

    fn prims() -> Vec<MotionPrimitive> {
        generate_primitives(4.0, 2.0, 16, 0.5).unwrap()
    }

    #[test]
    fn straight_on_empty_map() {
        let map = CostMapGlobal::uniform(Vector2::zeros(), 0.5, 50, 50, 1.0);
        let start = LatticeState::new(5, 25, 0);
        // the nearest goal-region cell is 36 cells east: 18 m, 9 straight primitives
        let goal = Goal::new(map.cell_center(42, 25).x, map.cell_center(42, 25).y, 0.5);
        let r = plan_ara(start, &goal, &map, &prims(), &EpsSchedule::default()).unwrap();
        assert!((r.cost - 18.0).abs() < 1e-9, "cost {}", r.cost);
        assert_eq!(r.achieved_eps, 1.0);
        assert!(r.states.iter().all(|s| s.iy == 25 && s.heading == 0));
        assert!(r.trajectory.max_spacing() <= 0.25);
    }

    #[test]
    fn errors() {
        let mut map = CostMapGlobal::uniform(Vector2::zeros(), 0.5, 30, 30, 1.0);
        for ix in 20..30 {
            for iy in 0..30 {
                map.set_cost(ix, iy, f64::INFINITY);
            }
        }
        let p = prims();
        let s = EpsSchedule::default();
        let inside = map.cell_center(25, 15);
        assert_eq!(
            plan_ara(LatticeState::new(5, 15, 0), &Goal::new(inside.x, inside.y, 1.0), &map, &p, &s),
            Err(PlanError::Unreachable)
        );
        assert!(matches!(
            plan_ara(LatticeState::new(25, 15, 0), &Goal::new(1.0, 1.0, 1.0), &map, &p, &s),
            Err(PlanError::StartBlocked(25, 15))
        ));
        assert!(matches!(
            plan_ara(LatticeState::new(5, 15, 0), &Goal::new(5.0, 5.0, 0.1), &map, &p, &s),
            Err(PlanError::GoalTolerance { .. })
        ));
        let tiny = EpsSchedule {
            max_expansions: Some(3),
            ..Default::default()
        };
        assert!(matches!(
            plan_ara(LatticeState::new(5, 15, 0), &Goal::new(8.0, 12.0, 1.0), &map, &p, &tiny),
            Err(PlanError::Timeout { expansions: 3 })
        ));
    }
}
