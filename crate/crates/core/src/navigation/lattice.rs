//! State lattice over a cost-map: states are cell centers with a heading bin.

use super::primitives::{heading_angle, MotionPrimitive};
use super::PlanError;
use crate::terrain::CostMapGlobal;
use nalgebra::Vector2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeState {
    pub ix: i64,
    pub iy: i64,
    pub heading: usize,
}

impl LatticeState {
    pub fn new(ix: i64, iy: i64, heading: usize) -> Self {
        Self { ix, iy, heading }
    }
}

pub struct LatticeGraph<'a> {
    map: &'a CostMapGlobal,
    headings: usize,
    by_heading: Vec<Vec<&'a MotionPrimitive>>,
}

impl<'a> LatticeGraph<'a> {
    pub fn new(map: &'a CostMapGlobal, primitives: &'a [MotionPrimitive]) -> Result<Self, PlanError> {
        let headings = primitives.iter().map(|p| p.start_heading + 1).max().unwrap_or(0);
        if headings == 0 {
            return Err(PlanError::Config("empty primitive set".into()));
        }
        let mut by_heading = vec![Vec::new(); headings];
        for p in primitives {
            if p.end_heading >= headings {
                return Err(PlanError::Config(format!("primitive ends on heading {} of {headings}", p.end_heading)));
            }
            by_heading[p.start_heading].push(p);
        }
        if by_heading.iter().any(Vec::is_empty) {
            return Err(PlanError::Config("every heading needs at least one primitive".into()));
        }
        Ok(Self { map, headings, by_heading })
    }

    pub fn map(&self) -> &CostMapGlobal {
        self.map
    }

    pub fn headings(&self) -> usize {
        self.headings
    }

    pub fn state_count(&self) -> usize {
        self.map.width * self.map.height * self.headings
    }

    pub fn index(&self, s: LatticeState) -> usize {
        ((s.iy as usize * self.map.width) + s.ix as usize) * self.headings + s.heading
    }

    pub fn state(&self, index: usize) -> LatticeState {
        let heading = index % self.headings;
        let cell = index / self.headings;
        LatticeState::new((cell % self.map.width) as i64, (cell / self.map.width) as i64, heading)
    }

    pub fn position(&self, s: LatticeState) -> Vector2<f64> {
        self.map.cell_center(s.ix, s.iy)
    }

    pub fn heading_angle(&self, s: LatticeState) -> f64 {
        heading_angle(s.heading, self.headings)
    }

    pub fn navigable(&self, ix: i64, iy: i64) -> bool {
        self.map.cell(ix, iy).is_some_and(|c| c.navigable())
    }

    pub fn primitives(&self, heading: usize) -> &[&'a MotionPrimitive] {
        &self.by_heading[heading]
    }

    /// Length times mean cost of swept cells; `None` if any swept cell is
    /// off-map or not navigable.
    pub fn edge_cost(&self, s: LatticeState, prim: &MotionPrimitive) -> Option<f64> {
        let mut sum = 0.0;
        for &(dx, dy) in &prim.swept_cells {
            let c = self.map.cell(s.ix + dx, s.iy + dy)?;
            if !c.navigable() {
                return None;
            }
            sum += c.cost;
        }
        Some(prim.length * sum / prim.swept_cells.len() as f64)
    }

    /// Calls `f(successor, cost, primitive_slot)` for every valid edge out of `s`.
    pub fn for_each_successor(&self, s: LatticeState, mut f: impl FnMut(LatticeState, f64, usize)) {
        for (k, prim) in self.by_heading[s.heading].iter().enumerate() {
            if let Some(c) = self.edge_cost(s, prim) {
                f(
                    LatticeState::new(s.ix + prim.end_cell.0, s.iy + prim.end_cell.1, prim.end_heading),
                    c,
                    k,
                );
            }
        }
    }

    /// Snaps a continuous pose to the nearest lattice state.
    pub fn snap(&self, x: f64, y: f64, heading: f64) -> LatticeState {
        let (ix, iy) = self.map.world_to_cell(x, y);
        LatticeState::new(ix, iy, super::primitives::nearest_heading_bin(heading, self.headings))
    }
}
