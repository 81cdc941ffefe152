//! Parametric sensor models: detector, stereo cloud, pose noise and range scans.

use super::world::{World, WorldObject};
use crate::fusion::{BBox, CloudPoint, Detection2D, ObjectClass, PointCloudCam};
use crate::geometry::{backproject, global_to_camera, project, visible_modules, CameraIntrinsics, Extrinsics, Pixel, PodConfig, Pose};
use nalgebra::{Rotation3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StereoModel {
    pub baseline: f64,
    pub disparity_noise_px: f64,
    /// Stereo points are only produced up to this range.
    pub max_range: f64,
}

impl Default for StereoModel {
    fn default() -> Self {
        Self {
            baseline: 0.2,
            disparity_noise_px: 0.5,
            max_range: 150.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseNoise {
    pub position_sigma: f64,
    pub heading_sigma_deg: f64,
}

impl Default for PoseNoise {
    fn default() -> Self {
        Self {
            position_sigma: 0.02,
            heading_sigma_deg: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingModel {
    /// `(range m, probability)` breakpoints, linearly interpolated and held
    /// constant beyond the ends.
    pub p_detect: Vec<[f64; 2]>,
    /// Mean false positives per frame per module.
    pub clutter_rate: f64,
    pub bbox_noise_px: f64,
    pub stereo: StereoModel,
    pub pose_noise: PoseNoise,
    /// Captures per second.
    pub capture_rate: f64,
    /// Detector range limit.
    pub max_range: f64,
    pub object_points: usize,
    pub terrain_points: usize,
}

impl Default for SensingModel {
    fn default() -> Self {
        Self {
            p_detect: vec![[0.0, 1.0], [80.0, 1.0], [250.0, 0.0]],
            clutter_rate: 0.02,
            bbox_noise_px: 2.0,
            stereo: StereoModel::default(),
            pose_noise: PoseNoise::default(),
            capture_rate: 4.0,
            max_range: 250.0,
            object_points: 40,
            terrain_points: 32,
        }
    }
}

impl SensingModel {
    /// Sensors with every noise source and clutter turned off and certain detection.
    pub fn noiseless() -> Self {
        Self {
            p_detect: vec![[0.0, 1.0]],
            clutter_rate: 0.0,
            bbox_noise_px: 0.0,
            stereo: StereoModel {
                disparity_noise_px: 0.0,
                ..Default::default()
            },
            pose_noise: PoseNoise {
                position_sigma: 0.0,
                heading_sigma_deg: 0.0,
            },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.p_detect.is_empty() {
            errs.push("p_detect needs at least one breakpoint".into());
        }
        if self.p_detect.iter().any(|[_, p]| !(0.0..=1.0).contains(p)) {
            errs.push("p_detect probabilities must lie in [0, 1]".into());
        }
        if self.p_detect.windows(2).any(|w| !(w[1][0] > w[0][0])) {
            errs.push("p_detect ranges must be strictly increasing".into());
        }
        if !(self.clutter_rate >= 0.0) || !(self.bbox_noise_px >= 0.0) {
            errs.push("clutter_rate and bbox_noise_px must be >= 0".into());
        }
        if !(self.stereo.baseline > 0.0) {
            errs.push(format!("stereo.baseline {} must be positive", self.stereo.baseline));
        }
        if !(self.stereo.disparity_noise_px >= 0.0) || !(self.stereo.max_range > 0.0) {
            errs.push("stereo noise must be >= 0 and max_range positive".into());
        }
        if !(self.pose_noise.position_sigma >= 0.0) || !(self.pose_noise.heading_sigma_deg >= 0.0) {
            errs.push("pose noise must be >= 0".into());
        }
        if !(self.capture_rate > 0.0) {
            errs.push(format!("capture_rate {} must be positive", self.capture_rate));
        }
        if !(self.max_range > 0.0) {
            errs.push(format!("max_range {} must be positive", self.max_range));
        }
        errs
    }

    pub fn p_detect_at(&self, range: f64) -> f64 {
        let pts = &self.p_detect;
        if range <= pts[0][0] {
            return pts[0][1];
        }
        for w in pts.windows(2) {
            if range <= w[1][0] {
                let f = (range - w[0][0]) / (w[1][0] - w[0][0]);
                return w[0][1] + f * (w[1][1] - w[0][1]);
            }
        }
        pts[pts.len() - 1][1]
    }
}

/// Depth standard deviation of a stereo pair: `z^2 sigma_d / (f b)`.
pub fn stereo_depth_sigma(z: f64, focal_px: f64, baseline: f64, disparity_sigma_px: f64) -> f64 {
    z * z * disparity_sigma_px / (focal_px * baseline)
}

/// How an object appears in the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewMode {
    /// Upright rectangle facing the camera at the depth of the object center.
    Billboard,
    /// Ground-level square seen from above; anchored at the ground point.
    Footprint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDetection {
    pub detection: Detection2D,
    /// Ground-truth object id, `None` for clutter.
    pub object: Option<usize>,
}

struct ObjectView {
    object: usize,
    bbox: BBox,
    depth: f64,
}

fn anchor(obj: &WorldObject, mode: ViewMode) -> Vector3<f64> {
    match mode {
        ViewMode::Billboard => obj.center(),
        ViewMode::Footprint => obj.position,
    }
}

fn view_of(obj: &WorldObject, mode: ViewMode, extr: &Extrinsics, pose: &Pose, intr: &CameraIntrinsics) -> Option<ObjectView> {
    let c = global_to_camera(&anchor(obj, mode), extr, pose);
    let center = project(&c, intr).ok()?;
    let f = intr.focal_px();
    let (hw, hh) = match mode {
        ViewMode::Billboard => (obj.radius * f / c.z, obj.height / 2.0 * f / c.z),
        ViewMode::Footprint => {
            let mut hw: f64 = 0.0;
            let mut hh: f64 = 0.0;
            for (dx, dy) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                let corner = obj.position + Vector3::new(dx * obj.radius, dy * obj.radius, 0.0);
                let pc = global_to_camera(&corner, extr, pose);
                let px = project(&pc, intr).ok()?;
                hw = hw.max((px.pixel.u - center.pixel.u).abs());
                hh = hh.max((px.pixel.v - center.pixel.v).abs());
            }
            (hw, hh)
        }
    };
    let p = center.pixel;
    Some(ObjectView {
        object: obj.id,
        bbox: BBox {
            u_min: p.u - hw,
            v_min: p.v - hh,
            u_max: p.u + hw,
            v_max: p.v + hh,
        },
        depth: c.z,
    })
}

fn camera_position(extr: &Extrinsics, pose: &Pose) -> Vector3<f64> {
    pose.transform_point(&extr.translation)
}

fn fully_inside(b: &BBox, intr: &CameraIntrinsics) -> bool {
    b.u_min >= 0.0 && b.v_min >= 0.0 && b.u_max <= intr.width_px() as f64 && b.v_max <= intr.height_px() as f64
}

/// Objects a module can see: in its field of view, within range and not
/// hidden by terrain. Objects do not occlude each other.
fn module_views(world: &World, pod: &PodConfig, module: usize, pose: &Pose, mode: ViewMode, max_range: f64) -> Vec<ObjectView> {
    let extr = pod.module_extrinsics(module);
    let intr = &pod.modules[module].intrinsics;
    let cam = camera_position(&extr, pose);
    world
        .objects
        .iter()
        .filter(|o| visible_modules(&anchor(o, mode), pose, pod, max_range).contains(&module))
        .filter(|o| world.line_of_sight(&cam, &anchor(o, mode), o.radius + 0.25))
        .filter_map(|o| view_of(o, mode, &extr, pose, intr))
        .collect()
}

/// Detections for one capture across all modules of a pod.
pub fn simulate_detector(
    pose: &Pose,
    pod: &PodConfig,
    world: &World,
    model: &SensingModel,
    mode: ViewMode,
    t: f64,
    rng: &mut impl Rng,
) -> Vec<SimDetection> {
    let noise = (model.bbox_noise_px > 0.0).then(|| Normal::new(0.0, model.bbox_noise_px).expect("sigma checked"));
    let clutter = (model.clutter_rate > 0.0).then(|| Poisson::new(model.clutter_rate).expect("rate checked"));
    let mut out = Vec::new();
    for module in 0..pod.modules.len() {
        let intr = &pod.modules[module].intrinsics;
        let extr = pod.module_extrinsics(module);
        let cam = camera_position(&extr, pose);
        for v in module_views(world, pod, module, pose, mode, model.max_range) {
            let obj = &world.objects[v.object];
            let range = (anchor(obj, mode) - cam).norm();
            let p = model.p_detect_at(range);
            if !(rng.random::<f64>() < p) {
                continue;
            }
            let mut b = v.bbox;
            if let Some(n) = &noise {
                b.u_min += n.sample(rng);
                b.v_min += n.sample(rng);
                b.u_max += n.sample(rng);
                b.v_max += n.sample(rng);
            }
            // truncated objects are not reported
            if b.u_max <= b.u_min || b.v_max <= b.v_min || !fully_inside(&b, intr) {
                continue;
            }
            out.push(SimDetection {
                detection: Detection2D {
                    bbox: b,
                    class: obj.class,
                    confidence: 0.5 + 0.5 * p,
                    module_index: module,
                    timestamp: t,
                },
                object: Some(obj.id),
            });
        }
        if let Some(c) = &clutter {
            let n = c.sample(rng) as usize;
            let (w, h) = (intr.width_px() as f64, intr.height_px() as f64);
            for _ in 0..n {
                let bw = rng.random_range(20.0..200.0);
                let bh = rng.random_range(20.0..200.0);
                let u = rng.random_range(0.0..w - bw);
                let v = rng.random_range(0.0..h - bh);
                out.push(SimDetection {
                    detection: Detection2D {
                        bbox: BBox {
                            u_min: u,
                            v_min: v,
                            u_max: u + bw,
                            v_max: v + bh,
                        },
                        class: ObjectClass::ALL[rng.random_range(0..ObjectClass::ALL.len())],
                        confidence: rng.random_range(0.3..0.6),
                        module_index: module,
                        timestamp: t,
                    },
                    object: None,
                });
            }
        }
    }
    out
}

fn perturb_depth(p: Vector3<f64>, sigma: f64, rng: &mut impl Rng) -> Vector3<f64> {
    if sigma <= 0.0 {
        return p;
    }
    let dz = Normal::new(0.0, sigma).expect("sigma positive").sample(rng);
    p * ((p.z + dz) / p.z)
}

/// Stereo points per module in camera coordinates: samples on visible object
/// surfaces plus sparse terrain returns, depth noise growing with `z^2`.
pub fn simulate_stereo_cloud(
    pose: &Pose,
    pod: &PodConfig,
    world: &World,
    model: &SensingModel,
    mode: ViewMode,
    rng: &mut impl Rng,
) -> Vec<PointCloudCam> {
    let st = &model.stereo;
    (0..pod.modules.len())
        .map(|module| {
            let intr = &pod.modules[module].intrinsics;
            let extr = pod.module_extrinsics(module);
            let f = intr.focal_px();
            let views = module_views(world, pod, module, pose, mode, st.max_range);
            let mut points = Vec::new();
            for v in &views {
                let obj = &world.objects[v.object];
                let b = &v.bbox;
                for _ in 0..model.object_points {
                    let px = Pixel::new(rng.random_range(b.u_min..=b.u_max), rng.random_range(b.v_min..=b.v_max));
                    let exact = match mode {
                        ViewMode::Billboard => backproject(px, v.depth, intr).ok(),
                        ViewMode::Footprint => {
                            let ray_c = backproject(px, 1.0, intr).ok();
                            ray_c.and_then(|r| {
                                let origin = camera_position(&extr, pose);
                                let dir = pose.orientation * (extr.rotation * r);
                                (dir.z < 0.0).then(|| {
                                    let s = (obj.position.z - origin.z) / dir.z;
                                    r * s
                                })
                            })
                        }
                    };
                    if let Some(p) = exact {
                        let sigma = stereo_depth_sigma(p.z, f, st.baseline, st.disparity_noise_px);
                        points.push(CloudPoint {
                            position: perturb_depth(p, sigma, rng),
                            pixel: px,
                        });
                    }
                }
            }
            let origin = camera_position(&extr, pose);
            for _ in 0..model.terrain_points {
                let px = Pixel::new(
                    rng.random_range(0.0..intr.width_px() as f64),
                    rng.random_range(0.0..intr.height_px() as f64),
                );
                let Ok(ray_c) = backproject(px, 1.0, intr) else { continue };
                let dir = pose.orientation * (extr.rotation * ray_c);
                let Some(hit) = world.ray_terrain(&origin, &dir, st.max_range) else { continue };
                let p = global_to_camera(&hit, &extr, pose);
                if views.iter().any(|v| v.bbox.contains(px) && v.depth < p.z) {
                    continue;
                }
                let sigma = stereo_depth_sigma(p.z, f, st.baseline, st.disparity_noise_px);
                points.push(CloudPoint {
                    position: perturb_depth(p, sigma, rng),
                    pixel: px,
                });
            }
            PointCloudCam { module_index: module, points }
        })
        .collect()
}

/// Pose measurement: Gaussian noise on each position axis and on heading.
pub fn simulate_pose(true_pose: &Pose, noise: &PoseNoise, rng: &mut impl Rng) -> Pose {
    let mut out = true_pose.clone();
    if noise.position_sigma > 0.0 {
        let n = Normal::new(0.0, noise.position_sigma).expect("sigma checked");
        out.position += Vector3::new(n.sample(rng), n.sample(rng), n.sample(rng));
    }
    if noise.heading_sigma_deg > 0.0 {
        let n = Normal::new(0.0, noise.heading_sigma_deg.to_radians()).expect("sigma checked");
        out.orientation = Rotation3::from_axis_angle(&Vector3::z_axis(), n.sample(rng)) * out.orientation;
    }
    out
}

/// Pose at `t` between two measurements; rotation by slerp.
pub fn interpolate_pose(a: &Pose, b: &Pose, t: f64) -> Pose {
    let span = b.timestamp - a.timestamp;
    let f = if span > 0.0 { ((t - a.timestamp) / span).clamp(0.0, 1.0) } else { 0.0 };
    Pose {
        position: a.position + (b.position - a.position) * f,
        orientation: a.orientation.slerp(&b.orientation, f),
        timestamp: t,
    }
}

/// Range returns in the global frame: a polar pattern of ground hits around
/// the sensor plus points on the surfaces of nearby objects.
pub fn simulate_lidar_scan(pose: &Pose, world: &World, range: f64) -> Vec<Vector3<f64>> {
    let mut pts = Vec::new();
    let c = pose.position;
    for a in 0..120 {
        let th = a as f64 * std::f64::consts::TAU / 120.0;
        let mut r = 1.0;
        while r <= range {
            let (x, y) = (c.x + r * th.cos(), c.y + r * th.sin());
            let under_object = world.objects.iter().any(|o| (o.position.x - x).hypot(o.position.y - y) < o.radius);
            if world.contains(x, y) && !under_object {
                pts.push(Vector3::new(x, y, world.height_at(x, y)));
            }
            r += 0.5;
        }
    }
    for o in &world.objects {
        if (o.position.xy() - c.xy()).norm() > range + o.radius {
            continue;
        }
        for k in 0..16 {
            let th = k as f64 * std::f64::consts::TAU / 16.0;
            let mut z = 0.0;
            while z <= o.height {
                pts.push(o.position + Vector3::new(o.radius * th.cos(), o.radius * th.sin(), z));
                z += 0.3;
            }
        }
    }
    pts
}
