//! Synthetic terrain and ground-truth objects.

use super::ScenarioError;
use crate::fusion::ObjectClass;
use crate::terrain::{build_global_costmap, CostMapGlobal, PointCloudWorld, RoughnessParams, TerrainError};
use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Footprint radius and height per class, in metres.
pub fn class_dimensions(class: ObjectClass) -> (f64, f64) {
    match class {
        ObjectClass::Person => (0.3, 1.8),
        ObjectClass::EGator => (1.5, 1.9),
        ObjectClass::PickupTruck => (2.7, 1.9),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoughPatch {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    /// Std dev of the per-node height noise.
    pub amplitude: f64,
}

impl RoughPatch {
    pub fn contains(&self, x: f64, y: f64, margin: f64) -> bool {
        x >= self.x0 - margin && x <= self.x1 + margin && y >= self.y0 - margin && y <= self.y1 + margin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub class: ObjectClass,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldSpec {
    pub width: f64,
    pub height: f64,
    /// Heightfield node spacing.
    pub cell_size: f64,
    /// Amplitude of the smooth base relief.
    pub relief: f64,
    pub relief_wavelength: f64,
    pub rough_patches: Vec<RoughPatch>,
    pub objects: Vec<ObjectSpec>,
    /// Additional objects placed at random outside rough patches.
    pub random_objects: usize,
    pub min_spacing: f64,
    pub margin: f64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            width: 200.0,
            height: 120.0,
            cell_size: 0.5,
            relief: 0.3,
            relief_wavelength: 40.0,
            rough_patches: Vec::new(),
            objects: Vec::new(),
            random_objects: 0,
            min_spacing: 20.0,
            margin: 5.0,
        }
    }
}

impl WorldSpec {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.width > 0.0 && self.height > 0.0) {
            errs.push(format!("dimensions {} x {} must be positive", self.width, self.height));
        }
        if !(self.cell_size > 0.0) {
            errs.push(format!("cell_size {} must be positive", self.cell_size));
        }
        if !(self.relief >= 0.0) || !(self.relief_wavelength > 0.0) {
            errs.push("relief must be >= 0 and relief_wavelength > 0".into());
        }
        if !(self.min_spacing >= 0.0) || !(self.margin >= 0.0) {
            errs.push("min_spacing and margin must be >= 0".into());
        }
        for (i, p) in self.rough_patches.iter().enumerate() {
            if !(p.x1 > p.x0 && p.y1 > p.y0 && p.amplitude >= 0.0) {
                errs.push(format!("rough patch {i} is empty or has negative amplitude"));
            }
        }
        for (i, o) in self.objects.iter().enumerate() {
            if !(o.x >= 0.0 && o.y >= 0.0 && o.x <= self.width && o.y <= self.height) {
                errs.push(format!("object {i} at ({}, {}) lies outside the world", o.x, o.y));
            }
        }
        errs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorldObject {
    pub id: usize,
    pub class: ObjectClass,
    /// Ground contact point.
    pub position: Vector3<f64>,
    pub radius: f64,
    pub height: f64,
}

impl WorldObject {
    pub fn center(&self) -> Vector3<f64> {
        self.position + Vector3::new(0.0, 0.0, self.height / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub seed: u64,
    pub cell_size: f64,
    pub nx: usize,
    pub ny: usize,
    heights: Vec<f64>,
    pub objects: Vec<WorldObject>,
    pub rough_patches: Vec<RoughPatch>,
}

impl World {
    pub fn width(&self) -> f64 {
        (self.nx - 1) as f64 * self.cell_size
    }

    pub fn height(&self) -> f64 {
        (self.ny - 1) as f64 * self.cell_size
    }

    pub fn node_height(&self, i: usize, j: usize) -> f64 {
        self.heights[j * self.nx + i]
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// Bilinear interpolation, clamped at the borders.
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        let fx = (x / self.cell_size).clamp(0.0, (self.nx - 1) as f64);
        let fy = (y / self.cell_size).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx.saturating_sub(2));
        let j = (fy.floor() as usize).min(self.ny.saturating_sub(2));
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let i1 = (i + 1).min(self.nx - 1);
        let j1 = (j + 1).min(self.ny - 1);
        let h00 = self.node_height(i, j);
        let h10 = self.node_height(i1, j);
        let h01 = self.node_height(i, j1);
        let h11 = self.node_height(i1, j1);
        h00 * (1.0 - tx) * (1.0 - ty) + h10 * tx * (1.0 - ty) + h01 * (1.0 - tx) * ty + h11 * tx * ty
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= self.width() && y <= self.height()
    }

    /// True when terrain stays strictly below the segment between the two
    /// points, ignoring `end_skip` metres at the far end.
    pub fn line_of_sight(&self, from: &Vector3<f64>, to: &Vector3<f64>, end_skip: f64) -> bool {
        let d = to - from;
        let len = d.norm();
        let step = self.cell_size / 2.0;
        let n = (len / step).ceil() as usize;
        (1..n).all(|k| {
            let s = k as f64 * step;
            if s > len - end_skip {
                return true;
            }
            let p = from + d * (s / len);
            !self.contains(p.x, p.y) || self.height_at(p.x, p.y) < p.z
        })
    }

    /// First terrain intersection of a ray, refined by bisection.
    pub fn ray_hit(&self, origin: &Vector3<f64>, dir: &Vector3<f64>, max_range: f64) -> Option<Vector3<f64>> {
        let dir = dir.normalize();
        let above = |s: f64| {
            let p = origin + dir * s;
            p.z - self.height_at(p.x, p.y)
        };
        if above(0.0) <= 0.0 {
            return None;
        }
        let step = self.cell_size / 2.0;
        let mut prev = 0.0;
        let mut s = step;
        while s <= max_range {
            let p = origin + dir * s;
            if !self.contains(p.x, p.y) {
                return None;
            }
            if above(s) <= 0.0 {
                let (mut lo, mut hi) = (prev, s);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if above(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(origin + dir * hi);
            }
            prev = s;
            s += step;
        }
        None
    }

    /// Exact intersection for flat terrain, bisection otherwise.
    pub fn ray_terrain(&self, origin: &Vector3<f64>, dir: &Vector3<f64>, max_range: f64) -> Option<Vector3<f64>> {
        if self.heights.iter().all(|h| *h == self.heights[0]) {
            let z = self.heights[0];
            if dir.z >= 0.0 || origin.z <= z {
                return None;
            }
            let s = (z - origin.z) / dir.z;
            let p = origin + dir * s;
            return (s * dir.norm() <= max_range && self.contains(p.x, p.y)).then_some(p);
        }
        self.ray_hit(origin, dir, max_range)
    }

    pub fn in_rough_patch(&self, x: f64, y: f64, margin: f64) -> bool {
        self.rough_patches.iter().any(|p| p.contains(x, y, margin))
    }

    /// One point per heightfield node.
    pub fn terrain_cloud(&self) -> PointCloudWorld {
        let mut pts = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                pts.push(Vector3::new(i as f64 * self.cell_size, j as f64 * self.cell_size, self.node_height(i, j)));
            }
        }
        PointCloudWorld::new(pts)
    }

    pub fn costmap(&self, params: &RoughnessParams, cell_size: f64) -> Result<CostMapGlobal, TerrainError> {
        build_global_costmap(&self.terrain_cloud(), params, cell_size)
    }
}

/// Deterministic world for a seed: smooth sinusoidal relief, i.i.d. noise
/// inside rough patches, and objects placed on the surface.
pub fn gen_world(seed: u64, spec: &WorldSpec) -> Result<World, ScenarioError> {
    let errs = spec.validate();
    if !errs.is_empty() {
        return Err(ScenarioError::World(errs.join("; ")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = (spec.width / spec.cell_size).round() as usize + 1;
    let ny = (spec.height / spec.cell_size).round() as usize + 1;
    let waves: Vec<(f64, f64, f64)> = (0..6)
        .map(|_| {
            let dir = rng.random_range(0.0..TAU);
            let k = TAU / (spec.relief_wavelength * rng.random_range(0.7..1.5));
            (k * dir.cos(), k * dir.sin(), rng.random_range(0.0..TAU))
        })
        .collect();
    let norm = spec.relief / (waves.len() as f64).sqrt();
    let mut heights = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (i as f64 * spec.cell_size, j as f64 * spec.cell_size);
            let h: f64 = waves.iter().map(|(kx, ky, ph)| (kx * x + ky * y + ph).sin()).sum();
            heights.push(if spec.relief > 0.0 { h * norm } else { 0.0 });
        }
    }
    for p in &spec.rough_patches {
        if p.amplitude == 0.0 {
            continue;
        }
        let noise = Normal::new(0.0, p.amplitude).expect("amplitude checked");
        for j in 0..ny {
            for i in 0..nx {
                if p.contains(i as f64 * spec.cell_size, j as f64 * spec.cell_size, 0.0) {
                    heights[j * nx + i] += noise.sample(&mut rng);
                }
            }
        }
    }
    let mut world = World {
        seed,
        cell_size: spec.cell_size,
        nx,
        ny,
        heights,
        objects: Vec::new(),
        rough_patches: spec.rough_patches.clone(),
    };

    let mut placed: Vec<(ObjectClass, Vector2<f64>)> = spec.objects.iter().map(|o| (o.class, Vector2::new(o.x, o.y))).collect();
    let (lo_x, hi_x) = (spec.margin, spec.width - spec.margin);
    let (lo_y, hi_y) = (spec.margin, spec.height - spec.margin);
    if spec.random_objects > 0 && !(hi_x > lo_x && hi_y > lo_y) {
        return Err(ScenarioError::World("margin leaves no room for random objects".into()));
    }
    let mut attempts = 0usize;
    let wanted = placed.len() + spec.random_objects;
    while placed.len() < wanted {
        attempts += 1;
        if attempts > 20_000 {
            return Err(ScenarioError::World(format!(
                "could not place {} objects with spacing {} m; placed {}",
                spec.random_objects,
                spec.min_spacing,
                placed.len() - spec.objects.len()
            )));
        }
        let class = ObjectClass::ALL[rng.random_range(0..ObjectClass::ALL.len())];
        let p = Vector2::new(rng.random_range(lo_x..hi_x), rng.random_range(lo_y..hi_y));
        let (r, _) = class_dimensions(class);
        if world.in_rough_patch(p.x, p.y, r) {
            continue;
        }
        if placed.iter().any(|(_, q)| (p - q).norm() < spec.min_spacing) {
            continue;
        }
        placed.push((class, p));
    }
    world.objects = placed
        .into_iter()
        .enumerate()
        .map(|(id, (class, p))| {
            let (radius, height) = class_dimensions(class);
            WorldObject {
                id,
                class,
                position: Vector3::new(p.x, p.y, world.height_at(p.x, p.y)),
                radius,
                height,
            }
        })
        .collect();
    Ok(world)
}
