//! Terrain navigability.
//!
//! The global cost-map comes from a prior point cloud: for every cell a plane
//! is fitted (total least squares) to all points within a horizontal radius of
//! the cell center, and the mean absolute point-to-plane distance is the cell's
//! roughness. Cells below the roughness threshold are navigable.
//!
//! The local map is a scrolling elevation grid fed by range scans, see
//! [`local`].

pub mod io;
pub mod local;

pub use local::{occupancy_costmap, update_local_grid, LocalElevationGrid, LocalGridParams, OccState, OccupancyMap};

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TerrainError {
    #[error("insufficient data: {found} points within radius, need {needed}")]
    InsufficientData { found: usize, needed: usize },
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("malformed input at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("malformed cost-map file: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TerrainError {
    fn from(e: std::io::Error) -> Self {
        TerrainError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloudWorld {
    pub points: Vec<Vector3<f64>>,
}

impl PointCloudWorld {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn translated(&self, offset: Vector3<f64>) -> Self {
        Self::new(self.points.iter().map(|p| p + offset).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoughnessParams {
    pub radius: f64,
    pub threshold: f64,
    pub min_points: usize,
}

impl Default for RoughnessParams {
    fn default() -> Self {
        Self {
            radius: 1.5,
            threshold: 0.15,
            min_points: 10,
        }
    }
}

impl RoughnessParams {
    pub fn validate(&self) -> Result<(), TerrainError> {
        if !(self.radius > 0.0) || !(self.threshold > 0.0) {
            return Err(TerrainError::InvalidParams(format!(
                "radius {} and threshold {} must be positive",
                self.radius, self.threshold
            )));
        }
        if self.min_points < 3 {
            return Err(TerrainError::InvalidParams("a plane fit needs min_points >= 3".into()));
        }
        Ok(())
    }
}

/// Mean absolute distance of the points to their total-least-squares plane.
pub fn plane_fit_roughness(points: &[Vector3<f64>]) -> f64 {
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector3::zeros(), |a, p| a + p) / n;
    let scatter = points.iter().fold(Matrix3::zeros(), |a, p| {
        let d = p - centroid;
        a + d * d.transpose()
    });
    let eig = scatter.symmetric_eigen();
    let (k, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("3 eigenvalues");
    let normal = eig.eigenvectors.column(k).into_owned();
    points.iter().map(|p| (p - centroid).dot(&normal).abs()).sum::<f64>() / n
}

/// Roughness of the neighbourhood of `center` (horizontal distance within
/// `params.radius`).
pub fn roughness(cloud: &PointCloudWorld, center: Vector2<f64>, params: &RoughnessParams) -> Result<f64, TerrainError> {
    let r2 = params.radius * params.radius;
    let neigh: Vec<Vector3<f64>> = cloud
        .points
        .iter()
        .filter(|p| (p.x - center.x).powi(2) + (p.y - center.y).powi(2) <= r2)
        .copied()
        .collect();
    if neigh.len() < params.min_points {
        return Err(TerrainError::InsufficientData {
            found: neigh.len(),
            needed: params.min_points,
        });
    }
    Ok(plane_fit_roughness(&neigh))
}

/// Dense bucket grid over the cloud's footprint for radius queries.
struct CloudIndex<'a> {
    points: &'a [Vector3<f64>],
    origin: Vector2<f64>,
    bucket: f64,
    nx: i64,
    ny: i64,
    buckets: Vec<Vec<u32>>,
}

impl<'a> CloudIndex<'a> {
    fn new(points: &'a [Vector3<f64>], bucket: f64) -> Self {
        let (lo, hi) = bounds(points);
        let nx = (((hi.x - lo.x) / bucket).floor() as i64 + 1).max(1);
        let ny = (((hi.y - lo.y) / bucket).floor() as i64 + 1).max(1);
        let mut buckets = vec![Vec::new(); (nx * ny) as usize];
        for (i, p) in points.iter().enumerate() {
            let bx = (((p.x - lo.x) / bucket).floor() as i64).clamp(0, nx - 1);
            let by = (((p.y - lo.y) / bucket).floor() as i64).clamp(0, ny - 1);
            buckets[(by * nx + bx) as usize].push(i as u32);
        }
        Self {
            points,
            origin: lo,
            bucket,
            nx,
            ny,
            buckets,
        }
    }

    fn within(&self, center: Vector2<f64>, radius: f64, out: &mut Vec<Vector3<f64>>) {
        out.clear();
        let r2 = radius * radius;
        let bx0 = ((center.x - radius - self.origin.x) / self.bucket).floor() as i64;
        let bx1 = ((center.x + radius - self.origin.x) / self.bucket).floor() as i64;
        let by0 = ((center.y - radius - self.origin.y) / self.bucket).floor() as i64;
        let by1 = ((center.y + radius - self.origin.y) / self.bucket).floor() as i64;
        for by in by0.max(0)..=by1.min(self.ny - 1) {
            for bx in bx0.max(0)..=bx1.min(self.nx - 1) {
                for &i in &self.buckets[(by * self.nx + bx) as usize] {
                    let p = self.points[i as usize];
                    if (p.x - center.x).powi(2) + (p.y - center.y).powi(2) <= r2 {
                        out.push(p);
                    }
                }
            }
        }
    }
}

fn bounds(points: &[Vector3<f64>]) -> (Vector2<f64>, Vector2<f64>) {
    let mut lo = Vector2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vector2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostCell {
    /// `None` when the neighbourhood held too few points.
    pub roughness: Option<f64>,
    /// Infinite on non-navigable cells.
    pub cost: f64,
}

impl CostCell {
    pub fn navigable(&self) -> bool {
        self.cost.is_finite()
    }
}

/// Maps navigable roughness to traversal cost in `[1, 10)`.
pub fn roughness_cost(roughness: f64, threshold: f64) -> f64 {
    1.0 + 9.0 * (roughness / threshold)
}

/// Row-major 2D navigability grid; cell `(ix, iy)` covers
/// `[origin + ix*cell, origin + (ix+1)*cell)` along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMapGlobal {
    pub origin: Vector2<f64>,
    pub cell_size: f64,
    pub width: usize,
    pub height: usize,
    cells: Vec<CostCell>,
}

impl CostMapGlobal {
    pub fn from_cells(origin: Vector2<f64>, cell_size: f64, width: usize, height: usize, cells: Vec<CostCell>) -> Result<Self, TerrainError> {
        if !(cell_size > 0.0) {
            return Err(TerrainError::InvalidParams(format!("cell size {cell_size} must be positive")));
        }
        if cells.len() != width * height {
            return Err(TerrainError::InvalidParams(format!(
                "{} cells for a {width}x{height} grid",
                cells.len()
            )));
        }
        if let Some(c) = cells.iter().find(|c| c.cost.is_nan() || c.cost < 0.0) {
            return Err(TerrainError::InvalidParams(format!("invalid cell cost {}", c.cost)));
        }
        Ok(Self {
            origin,
            cell_size,
            width,
            height,
            cells,
        })
    }

    /// Grid from raw costs (`f64::INFINITY` marks obstacles).
    pub fn from_costs(origin: Vector2<f64>, cell_size: f64, width: usize, height: usize, costs: Vec<f64>) -> Result<Self, TerrainError> {
        let cells = costs
            .into_iter()
            .map(|cost| CostCell {
                roughness: Some(0.0),
                cost,
            })
            .collect();
        Self::from_cells(origin, cell_size, width, height, cells)
    }

    pub fn uniform(origin: Vector2<f64>, cell_size: f64, width: usize, height: usize, cost: f64) -> Self {
        Self::from_costs(origin, cell_size, width, height, vec![cost; width * height]).expect("uniform map is valid")
    }

    fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn cell(&self, ix: i64, iy: i64) -> Option<&CostCell> {
        if ix < 0 || iy < 0 || ix as usize >= self.width || iy as usize >= self.height {
            return None;
        }
        Some(&self.cells[self.idx(ix as usize, iy as usize)])
    }

    /// Traversal cost, `None` when outside the map or non-navigable.
    pub fn cost(&self, ix: i64, iy: i64) -> Option<f64> {
        self.cell(ix, iy).filter(|c| c.navigable()).map(|c| c.cost)
    }

    pub fn cells(&self) -> &[CostCell] {
        &self.cells
    }

    pub fn set_cost(&mut self, ix: usize, iy: usize, cost: f64) {
        let i = self.idx(ix, iy);
        self.cells[i].cost = cost;
    }

    pub fn world_to_cell(&self, x: f64, y: f64) -> (i64, i64) {
        (
            ((x - self.origin.x) / self.cell_size).floor() as i64,
            ((y - self.origin.y) / self.cell_size).floor() as i64,
        )
    }

    pub fn cell_center(&self, ix: i64, iy: i64) -> Vector2<f64> {
        Vector2::new(
            self.origin.x + (ix as f64 + 0.5) * self.cell_size,
            self.origin.y + (iy as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn cost_at_world(&self, x: f64, y: f64) -> Option<f64> {
        let (ix, iy) = self.world_to_cell(x, y);
        self.cost(ix, iy)
    }

    pub fn min_navigable_cost(&self) -> Option<f64> {
        self.cells
            .iter()
            .filter(|c| c.navigable())
            .map(|c| c.cost)
            .min_by(f64::total_cmp)
    }

    pub fn navigable_count(&self) -> usize {
        self.cells.iter().filter(|c| c.navigable()).count()
    }

    pub fn unknown_count(&self) -> usize {
        self.cells.iter().filter(|c| c.roughness.is_none()).count()
    }

    /// Copy of the map with local obstacles stamped in as non-navigable.
    pub fn with_occupancy(&self, occ: &OccupancyMap) -> Self {
        let mut out = self.clone();
        for (center, state) in occ.iter_cells() {
            if state == OccState::Occupied {
                let (ix, iy) = out.world_to_cell(center.x, center.y);
                if out.cell(ix, iy).is_some() {
                    out.set_cost(ix as usize, iy as usize, f64::INFINITY);
                }
            }
        }
        out
    }
}

/// Computes roughness at every cell center of a grid spanning the cloud and
/// thresholds it into a navigability map.
pub fn build_global_costmap(cloud: &PointCloudWorld, params: &RoughnessParams, cell_size: f64) -> Result<CostMapGlobal, TerrainError> {
    params.validate()?;
    if !(cell_size > 0.0) {
        return Err(TerrainError::InvalidParams(format!("cell size {cell_size} must be positive")));
    }
    if cloud.is_empty() {
        return Err(TerrainError::EmptyCloud);
    }
    let (lo, hi) = bounds(&cloud.points);
    let width = (((hi.x - lo.x) / cell_size).ceil() as usize).max(1);
    let height = (((hi.y - lo.y) / cell_size).ceil() as usize).max(1);
    let index = CloudIndex::new(&cloud.points, params.radius);
    let mut neigh = Vec::new();
    let mut cells = Vec::with_capacity(width * height);
    for iy in 0..height {
        for ix in 0..width {
            let center = Vector2::new(lo.x + (ix as f64 + 0.5) * cell_size, lo.y + (iy as f64 + 0.5) * cell_size);
            index.within(center, params.radius, &mut neigh);
            let cell = if neigh.len() < params.min_points {
                CostCell {
                    roughness: None,
                    cost: f64::INFINITY,
                }
            } else {
                let r = plane_fit_roughness(&neigh);
                CostCell {
                    roughness: Some(r),
                    cost: if r < params.threshold {
                        roughness_cost(r, params.threshold)
                    } else {
                        f64::INFINITY
                    },
                }
            };
            cells.push(cell);
        }
    }
    CostMapGlobal::from_cells(lo, cell_size, width, height, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid_cloud(nx: usize, ny: usize, spacing: f64, z: impl Fn(f64, f64) -> f64) -> PointCloudWorld {
        let mut pts = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = (i as f64 * spacing, j as f64 * spacing);
                pts.push(Vector3::new(x, y, z(x, y)));
            }
        }
        PointCloudWorld::new(pts)
    }

    #[test]
    fn coplanar_points_have_zero_roughness() {
        // tilted plane: vertical-offset fitting would still work here, but the
        // perpendicular fit must also return exactly the plane
        let cloud = grid_cloud(10, 10, 0.3, |x, y| 0.5 * x - 0.2 * y + 3.0);
        let r = roughness(&cloud, Vector2::new(1.35, 1.35), &RoughnessParams::default()).unwrap();
        assert!(r < 1e-9, "{r}");
    }

    #[test]
    fn alternating_offsets_give_their_amplitude() {
        let h = 0.05;
        // checkerboard of +h/-h about a tilted plane, offsets perpendicular to it
        let n = Vector3::new(-0.3, 0.1, 1.0).normalize();
        let mut pts = Vec::new();
        for j in 0..20 {
            for i in 0..20 {
                let (x, y) = (i as f64 * 0.15 - 1.5, j as f64 * 0.15 - 1.5);
                let base = Vector3::new(x, y, 0.3 * x - 0.1 * y);
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                pts.push(base + n * (sign * h));
            }
        }
        let r = plane_fit_roughness(&pts);
        assert_relative_eq!(r, h, epsilon = 1e-9);
    }

    #[test]
    fn too_few_points() {
        let cloud = PointCloudWorld::new(vec![Vector3::zeros(), Vector3::new(0.1, 0.0, 0.0)]);
        let p = RoughnessParams {
            min_points: 3,
            ..Default::default()
        };
        assert_eq!(
            roughness(&cloud, Vector2::zeros(), &p),
            Err(TerrainError::InsufficientData { found: 2, needed: 3 })
        );
    }

    #[test]
    fn flat_field_is_uniformly_navigable() {
        let cloud = grid_cloud(41, 41, 0.25, |_, _| 2.0);
        let map = build_global_costmap(&cloud, &RoughnessParams::default(), 0.5).unwrap();
        assert_eq!((map.width, map.height), (20, 20));
        assert_eq!(map.navigable_count(), 400);
        assert!(map.cells().iter().all(|c| c.cost == 1.0));
    }

    /// Per-cell recomputation by brute force over the whole cloud.
    fn brute_navigable(cloud: &PointCloudWorld, map: &CostMapGlobal, p: &RoughnessParams) -> usize {
        let mut n = 0;
        for iy in 0..map.height as i64 {
            for ix in 0..map.width as i64 {
                let c = map.cell_center(ix, iy);
                if let Ok(r) = roughness(cloud, c, p) {
                    if r < p.threshold {
                        n += 1;
                    }
                }
            }
        }
        n
    }

    #[test]
    fn rough_patch_is_blocked() {
        let cloud = grid_cloud(81, 81, 0.25, |x, y| {
            if (8.0..12.0).contains(&x) && (8.0..12.0).contains(&y) {
                // 2 m amplitude pseudo-random heights
                let k = (x * 4.0) as i64 * 31 + (y * 4.0) as i64 * 17;
                if k % 3 == 0 { 2.0 } else if k % 3 == 1 { -2.0 } else { 0.0 }
            } else {
                0.0
            }
        });
        let p = RoughnessParams::default();
        let map = build_global_costmap(&cloud, &p, 0.5).unwrap();
        let blocked = map.width * map.height - map.navigable_count();
        assert!(blocked >= 64, "patch cells should be blocked, got {blocked}");
        assert_eq!(map.navigable_count(), brute_navigable(&cloud, &map, &p));
        let center = map.world_to_cell(10.0, 10.0);
        assert!(map.cost(center.0, center.1).is_none());
        assert!(map.cost_at_world(2.0, 2.0).is_some());
    }

    #[test]
    fn data_hole_is_unknown() {
        let mut cloud = grid_cloud(121, 41, 0.25, |_, _| 0.0);
        cloud.points.retain(|p| !(10.0..20.0).contains(&p.x));
        let map = build_global_costmap(&cloud, &RoughnessParams::default(), 0.5).unwrap();
        let (ix, iy) = map.world_to_cell(15.0, 5.0);
        let c = map.cell(ix, iy).unwrap();
        assert!(c.roughness.is_none() && !c.navigable());
        assert!(map.unknown_count() > 0);
    }

    #[test]
    fn empty_cloud_rejected() {
        assert_eq!(
            build_global_costmap(&PointCloudWorld::default(), &RoughnessParams::default(), 0.5),
            Err(TerrainError::EmptyCloud)
        );
    }

    #[test]
    fn translation_equivariant() {
        let cloud = grid_cloud(41, 41, 0.25, |x, y| 0.1 * (x * 1.3).sin() * (y * 0.7).cos());
        let p = RoughnessParams::default();
        let a = build_global_costmap(&cloud, &p, 0.5).unwrap();
        let shift = Vector3::new(1000.0, -500.0, 0.0);
        let b = build_global_costmap(&cloud.translated(shift), &p, 0.5).unwrap();
        assert_eq!((a.width, a.height), (b.width, b.height));
        assert_relative_eq!(b.origin, a.origin + shift.xy(), epsilon = 1e-9);
        for (ca, cb) in a.cells().iter().zip(b.cells()) {
            assert_eq!(ca.navigable(), cb.navigable());
            assert!((ca.roughness.unwrap() - cb.roughness.unwrap()).abs() < 1e-6);
        }
        assert_eq!(a, build_global_costmap(&cloud, &p, 0.5).unwrap());
    }
}
