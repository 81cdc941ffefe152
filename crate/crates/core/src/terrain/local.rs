//! Scrolling local elevation grid built from range scans.
//!
//! Each cell keeps running height statistics (Welford). Ground elevation is
//! `mean - std` (population), clamped so it never drops below the lowest point
//! seen. Occupancy is the fraction of points more than `clearance` above that
//! elevation.

use crate::geometry::Pose;
use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalGridParams {
    pub cell_size: f64,
    /// Window is `size_cells x size_cells`.
    pub size_cells: usize,
    /// Window center distance ahead of the vehicle.
    pub lookahead: f64,
    /// Height above ground elevation that counts as an obstacle point.
    pub clearance: f64,
    pub range_limit: f64,
    pub voxel_size: f64,
}

impl Default for LocalGridParams {
    fn default() -> Self {
        Self {
            cell_size: 0.5,
            size_cells: 80,
            lookahead: 15.0,
            clearance: 0.3,
            range_limit: 50.0,
            voxel_size: 0.2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellStats {
    pub count: u32,
    pub mean: f64,
    /// Sum of squared deviations from the running mean.
    pub m2: f64,
    pub min_height: f64,
    heights: Vec<f64>,
}

impl CellStats {
    pub fn push(&mut self, h: f64) {
        self.count += 1;
        if self.count == 1 {
            self.min_height = h;
        } else {
            self.min_height = self.min_height.min(h);
        }
        let delta = h - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (h - self.mean);
        self.heights.push(h);
    }

    pub fn population_std(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.m2.max(0.0) / self.count as f64).sqrt()
    }

    pub fn elevation(&self) -> Option<f64> {
        (self.count > 0).then(|| (self.mean - self.population_std()).max(self.min_height))
    }

    pub fn occupancy(&self, clearance: f64) -> Option<f64> {
        let ground = self.elevation()?;
        let above = self.heights.iter().filter(|&&h| h > ground + clearance).count();
        Some(above as f64 / self.count as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalElevationGrid {
    pub params: LocalGridParams,
    /// Global cell index of the window's lower-left cell.
    ix0: i64,
    iy0: i64,
    center: Vector2<f64>,
    cells: Vec<CellStats>,
}

impl LocalElevationGrid {
    pub fn new(params: LocalGridParams) -> Self {
        let n = params.size_cells;
        Self {
            params,
            ix0: -(n as i64) / 2,
            iy0: -(n as i64) / 2,
            center: Vector2::zeros(),
            cells: vec![CellStats::default(); n * n],
        }
    }

    pub fn center(&self) -> Vector2<f64> {
        self.center
    }

    pub fn window_origin(&self) -> (i64, i64) {
        (self.ix0, self.iy0)
    }

    fn local_index(&self, gx: i64, gy: i64) -> Option<usize> {
        let n = self.params.size_cells as i64;
        let (lx, ly) = (gx - self.ix0, gy - self.iy0);
        (lx >= 0 && ly >= 0 && lx < n && ly < n).then(|| (ly * n + lx) as usize)
    }

    pub fn global_cell(&self, x: f64, y: f64) -> (i64, i64) {
        (
            (x / self.params.cell_size).floor() as i64,
            (y / self.params.cell_size).floor() as i64,
        )
    }

    pub fn cell_at(&self, x: f64, y: f64) -> Option<&CellStats> {
        let (gx, gy) = self.global_cell(x, y);
        self.local_index(gx, gy).map(|i| &self.cells[i])
    }

    /// Iterates `(cell center, stats)` over the window.
    pub fn iter_cells(&self) -> impl Iterator<Item = (Vector2<f64>, &CellStats)> {
        let n = self.params.size_cells;
        let cs = self.params.cell_size;
        self.cells.iter().enumerate().map(move |(i, c)| {
            let gx = self.ix0 + (i % n) as i64;
            let gy = self.iy0 + (i / n) as i64;
            (Vector2::new((gx as f64 + 0.5) * cs, (gy as f64 + 0.5) * cs), c)
        })
    }

    /// Moves the window so it is centered on `center`; statistics of cells
    /// that stay inside are kept, newly exposed cells start empty.
    pub fn recenter(&mut self, center: Vector2<f64>) {
        let n = self.params.size_cells as i64;
        let (cx, cy) = self.global_cell(center.x, center.y);
        let (nx0, ny0) = (cx - n / 2, cy - n / 2);
        self.center = center;
        if (nx0, ny0) == (self.ix0, self.iy0) {
            return;
        }
        let mut fresh = vec![CellStats::default(); (n * n) as usize];
        for ly in 0..n {
            for lx in 0..n {
                if let Some(old) = self.local_index(nx0 + lx, ny0 + ly) {
                    fresh[(ly * n + lx) as usize] = std::mem::take(&mut self.cells[old]);
                }
            }
        }
        self.cells = fresh;
        self.ix0 = nx0;
        self.iy0 = ny0;
    }

    fn insert(&mut self, p: &Vector3<f64>) -> bool {
        let (gx, gy) = self.global_cell(p.x, p.y);
        match self.local_index(gx, gy) {
            Some(i) => {
                self.cells[i].push(p.z);
                true
            }
            None => false,
        }
    }
}

/// Centroid of the points in each occupied voxel, in voxel-key order.
pub fn voxel_downsample(points: &[Vector3<f64>], voxel_size: f64) -> Vec<Vector3<f64>> {
    let mut voxels: BTreeMap<(i64, i64, i64), (Vector3<f64>, usize)> = BTreeMap::new();
    for p in points {
        let key = (
            (p.x / voxel_size).floor() as i64,
            (p.y / voxel_size).floor() as i64,
            (p.z / voxel_size).floor() as i64,
        );
        let e = voxels.entry(key).or_insert((Vector3::zeros(), 0));
        e.0 += p;
        e.1 += 1;
    }
    voxels.into_values().map(|(s, n)| s / n as f64).collect()
}

/// Folds one scan into the grid: range filter around the sensor, voxel
/// downsampling, recentering ahead of the vehicle, then per-cell statistics.
/// Returns the number of points inserted.
pub fn update_local_grid(
    grid: &mut LocalElevationGrid,
    scan: &[Vector3<f64>],
    vehicle_pose: &Pose,
    range_limit: f64,
    voxel_size: f64,
) -> usize {
    let origin = vehicle_pose.position;
    let kept: Vec<Vector3<f64>> = scan
        .iter()
        .filter(|p| (*p - origin).norm() <= range_limit)
        .copied()
        .collect();
    let voxels = if voxel_size > 0.0 {
        voxel_downsample(&kept, voxel_size)
    } else {
        kept
    };
    let yaw = vehicle_pose.yaw();
    let ahead = grid.params.lookahead;
    grid.recenter(Vector2::new(origin.x + ahead * yaw.cos(), origin.y + ahead * yaw.sin()));
    voxels.iter().filter(|p| grid.insert(p)).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccState {
    Free,
    Occupied,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMap {
    pub ix0: i64,
    pub iy0: i64,
    pub size_cells: usize,
    pub cell_size: f64,
    pub states: Vec<OccState>,
}

impl OccupancyMap {
    pub fn state_at(&self, x: f64, y: f64) -> OccState {
        let gx = (x / self.cell_size).floor() as i64 - self.ix0;
        let gy = (y / self.cell_size).floor() as i64 - self.iy0;
        let n = self.size_cells as i64;
        if gx < 0 || gy < 0 || gx >= n || gy >= n {
            return OccState::Unknown;
        }
        self.states[(gy * n + gx) as usize]
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = (Vector2<f64>, OccState)> + '_ {
        let n = self.size_cells;
        self.states.iter().enumerate().map(move |(i, s)| {
            let gx = self.ix0 + (i % n) as i64;
            let gy = self.iy0 + (i / n) as i64;
            (
                Vector2::new((gx as f64 + 0.5) * self.cell_size, (gy as f64 + 0.5) * self.cell_size),
                *s,
            )
        })
    }

    pub fn count(&self, state: OccState) -> usize {
        self.states.iter().filter(|s| **s == state).count()
    }
}

/// Thresholds per-cell occupancy: occupied when `occupancy >= threshold`,
/// unknown when the cell has no points.
pub fn occupancy_costmap(grid: &LocalElevationGrid, obstacle_threshold: f64) -> OccupancyMap {
    let clearance = grid.params.clearance;
    let states = grid
        .cells
        .iter()
        .map(|c| match c.occupancy(clearance) {
            None => OccState::Unknown,
            Some(o) if o >= obstacle_threshold => OccState::Occupied,
            Some(_) => OccState::Free,
        })
        .collect();
    OccupancyMap {
        ix0: grid.ix0,
        iy0: grid.iy0,
        size_cells: grid.params.size_cells,
        cell_size: grid.params.cell_size,
        states,
    }
}
