//! Camera intrinsics, sensor-pod layout and frame transforms.
//!
//! Frame conventions used throughout the crate:
//!
//! * camera: x right, y down, z along the optical axis
//! * vehicle: x forward, y left, z up
//! * global: a flat local UTM frame (easting, northing, altitude)

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

const ANGLE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid pod configuration: {0}")]
    InvalidPod(String),
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("invalid depth {0}, must be positive")]
    InvalidDepth(f64),
    #[error("pixel ({0}, {1}) lies outside the image")]
    PixelOutsideImage(f64, f64),
}

/// A pixel coordinate in continuous image space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// Rectified pinhole camera with square pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    width_px: u32,
    height_px: u32,
    hfov_rad: f64,
    vfov_rad: f64,
    focal_px: f64,
    principal_point: Pixel,
}

impl CameraIntrinsics {
    /// Builds a camera from its field of view; the focal length follows from
    /// the width and horizontal FOV and the principal point is the image center.
    pub fn new(width_px: u32, height_px: u32, hfov_rad: f64, vfov_rad: f64) -> Result<Self, GeometryError> {
        if width_px == 0 || height_px == 0 {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "image size {width_px}x{height_px} must be positive"
            )));
        }
        if !(hfov_rad > 0.0 && hfov_rad < std::f64::consts::PI) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "horizontal FOV {hfov_rad} rad outside (0, pi)"
            )));
        }
        if !(vfov_rad > 0.0 && vfov_rad < std::f64::consts::PI) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "vertical FOV {vfov_rad} rad outside (0, pi)"
            )));
        }
        let focal_px = width_px as f64 / (2.0 * (hfov_rad / 2.0).tan());
        Ok(Self {
            width_px,
            height_px,
            hfov_rad,
            vfov_rad,
            focal_px,
            principal_point: Pixel::new(width_px as f64 / 2.0, height_px as f64 / 2.0),
        })
    }

    /// Builds a camera from an explicit focal length; both FOVs are derived.
    pub fn from_focal(width_px: u32, height_px: u32, focal_px: f64, principal_point: Pixel) -> Result<Self, GeometryError> {
        if !(focal_px > 0.0 && focal_px.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics(format!("focal length {focal_px} must be positive")));
        }
        let hfov = 2.0 * (width_px as f64 / (2.0 * focal_px)).atan();
        let vfov = 2.0 * (height_px as f64 / (2.0 * focal_px)).atan();
        Self::new(width_px, height_px, hfov, vfov)?.with_principal_point(principal_point)
    }

    pub fn with_principal_point(mut self, pp: Pixel) -> Result<Self, GeometryError> {
        if !self.contains(pp) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside the image",
                pp.u, pp.v
            )));
        }
        self.principal_point = pp;
        Ok(self)
    }

    pub fn width_px(&self) -> u32 {
        self.width_px
    }

    pub fn height_px(&self) -> u32 {
        self.height_px
    }

    pub fn hfov_rad(&self) -> f64 {
        self.hfov_rad
    }

    pub fn vfov_rad(&self) -> f64 {
        self.vfov_rad
    }

    pub fn focal_px(&self) -> f64 {
        self.focal_px
    }

    pub fn principal_point(&self) -> Pixel {
        self.principal_point
    }

    pub fn pixel_count(&self) -> u64 {
        self.width_px as u64 * self.height_px as u64
    }

    /// True when the pixel lies within `[0, width] x [0, height]`.
    pub fn contains(&self, px: Pixel) -> bool {
        px.u >= 0.0 && px.u <= self.width_px as f64 && px.v >= 0.0 && px.v <= self.height_px as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub pixel: Pixel,
    pub in_frame: bool,
}

/// Pinhole projection of a camera-frame point.
pub fn project(point_camera: &Vector3<f64>, intr: &CameraIntrinsics) -> Result<Projection, GeometryError> {
    let z = point_camera.z;
    if !(z > 0.0) {
        return Err(GeometryError::BehindCamera(z));
    }
    let pp = intr.principal_point;
    let pixel = Pixel::new(
        pp.u + intr.focal_px * point_camera.x / z,
        pp.v + intr.focal_px * point_camera.y / z,
    );
    Ok(Projection {
        pixel,
        in_frame: intr.contains(pixel),
    })
}

/// Inverse of [`project`]: the camera-frame point at optical-axis depth `depth`
/// that images to `pixel`.
pub fn backproject(pixel: Pixel, depth: f64, intr: &CameraIntrinsics) -> Result<Vector3<f64>, GeometryError> {
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(GeometryError::InvalidDepth(depth));
    }
    if !intr.contains(pixel) {
        return Err(GeometryError::PixelOutsideImage(pixel.u, pixel.v));
    }
    let pp = intr.principal_point;
    Ok(Vector3::new(
        (pixel.u - pp.u) * depth / intr.focal_px,
        (pixel.v - pp.v) * depth / intr.focal_px,
        depth,
    ))
}

fn check_rotation(m: &Matrix3<f64>) -> Result<(), GeometryError> {
    let ortho = (m.transpose() * m - Matrix3::identity()).abs().max();
    if ortho > 1e-9 {
        return Err(GeometryError::InvalidRotation(format!("not orthonormal (residual {ortho:e})")));
    }
    let det = m.determinant();
    if (det - 1.0).abs() > 1e-9 {
        return Err(GeometryError::InvalidRotation(format!("determinant {det} != +1")));
    }
    Ok(())
}

/// Vehicle pose in the global frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: Rotation3<f64>,
    pub timestamp: f64,
}

impl Pose {
    pub fn new(position: Vector3<f64>, rotation: Matrix3<f64>, timestamp: f64) -> Result<Self, GeometryError> {
        check_rotation(&rotation)?;
        Ok(Self {
            position,
            orientation: Rotation3::from_matrix_unchecked(rotation),
            timestamp,
        })
    }

    /// Roll about x, pitch about y, yaw about z (yaw 0 faces east).
    pub fn from_rpy(position: Vector3<f64>, roll: f64, pitch: f64, yaw: f64, timestamp: f64) -> Self {
        Self {
            position,
            orientation: Rotation3::from_euler_angles(roll, pitch, yaw),
            timestamp,
        }
    }

    /// Planar pose at ground level offset by nothing but heading.
    pub fn planar(x: f64, y: f64, z: f64, yaw: f64, timestamp: f64) -> Self {
        Self::from_rpy(Vector3::new(x, y, z), 0.0, 0.0, yaw, timestamp)
    }

    pub fn identity() -> Self {
        Self::from_rpy(Vector3::zeros(), 0.0, 0.0, 0.0, 0.0)
    }

    pub fn yaw(&self) -> f64 {
        self.orientation.euler_angles().2
    }

    pub fn transform_point(&self, p_vehicle: &Vector3<f64>) -> Vector3<f64> {
        self.orientation * p_vehicle + self.position
    }

    pub fn inverse_transform_point(&self, p_global: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse() * (p_global - self.position)
    }
}

/// Camera frame relative to the vehicle frame: `p_vehicle = R p_cam + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Extrinsics {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl Extrinsics {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        check_rotation(&rotation)?;
        Ok(Self {
            rotation: Rotation3::from_matrix_unchecked(rotation),
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Rotation3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// A forward-looking camera yawed left by `yaw` and pitched down by
    /// `pitch_down`, mounted at `translation` in the vehicle frame.
    pub fn looking(yaw: f64, pitch_down: f64, translation: Vector3<f64>) -> Self {
        // columns: camera x (right), y (down), z (forward) expressed in the vehicle frame
        let base = Matrix3::from_columns(&[
            Vector3::new(0.0, -1.0, 0.0),
            Vector3::new(0.0, 0.0, -1.0),
            Vector3::new(1.0, 0.0, 0.0),
        ]);
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), yaw)
            * Rotation3::from_axis_angle(&Vector3::y_axis(), pitch_down)
            * Rotation3::from_matrix_unchecked(base);
        Self {
            rotation: rot,
            translation,
        }
    }
}

/// Transforms a camera-frame point into the global frame.
pub fn camera_to_global(point_camera: &Vector3<f64>, extr: &Extrinsics, pose: &Pose) -> Vector3<f64> {
    pose.orientation * (extr.rotation * point_camera + extr.translation) + pose.position
}

pub fn global_to_camera(point_global: &Vector3<f64>, extr: &Extrinsics, pose: &Pose) -> Vector3<f64> {
    let p_vehicle = pose.inverse_transform_point(point_global);
    extr.rotation.inverse() * (p_vehicle - extr.translation)
}

/// Physical camera inside a module. Only used for pixel-rate bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalCamera {
    pub name: String,
    pub width_px: u32,
    pub height_px: u32,
}

/// Where the pod sits on the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PodMount {
    pub height_m: f64,
    pub forward_m: f64,
    pub pitch_down_rad: f64,
}

impl Default for PodMount {
    fn default() -> Self {
        Self {
            height_m: 2.0,
            forward_m: 0.0,
            pitch_down_rad: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PodModule {
    pub intrinsics: CameraIntrinsics,
    /// Yaw of the optical axis relative to vehicle forward, positive to the left.
    pub yaw_offset_rad: f64,
    pub cameras: Vec<PhysicalCamera>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PodConfig {
    pub modules: Vec<PodModule>,
    pub overlap_rad: f64,
    pub total_hfov_rad: f64,
    pub mount: PodMount,
}

/// Lays out `module_count` identical modules side by side, centered on the
/// vehicle's forward axis, with adjacent modules sharing `overlap` of FOV.
/// Module 0 is the rightmost module; indices increase counter-clockwise.
pub fn make_pod(
    module_count: usize,
    module_hfov: f64,
    overlap: f64,
    module_intrinsics: &CameraIntrinsics,
) -> Result<PodConfig, GeometryError> {
    if module_count == 0 {
        return Err(GeometryError::InvalidPod("module count must be at least 1".into()));
    }
    if !(overlap >= 0.0 && overlap < module_hfov) {
        return Err(GeometryError::InvalidPod(format!(
            "overlap {overlap} rad must lie in [0, module hfov {module_hfov})"
        )));
    }
    if (module_intrinsics.hfov_rad - module_hfov).abs() > 1e-9 * module_hfov {
        return Err(GeometryError::InvalidPod(format!(
            "module hfov {module_hfov} disagrees with intrinsics hfov {}",
            module_intrinsics.hfov_rad
        )));
    }
    let n = module_count as f64;
    let total = n * module_hfov - (n - 1.0) * overlap;
    if total > TAU + ANGLE_EPS {
        return Err(GeometryError::InvalidPod(format!(
            "total horizontal FOV {:.3} deg exceeds 360 deg",
            total.to_degrees()
        )));
    }
    let step = module_hfov - overlap;
    let center = (n - 1.0) / 2.0;
    let modules = (0..module_count)
        .map(|i| PodModule {
            intrinsics: module_intrinsics.clone(),
            yaw_offset_rad: (i as f64 - center) * step,
            cameras: vec![PhysicalCamera {
                name: "rgb".into(),
                width_px: module_intrinsics.width_px,
                height_px: module_intrinsics.height_px,
            }],
        })
        .collect();
    Ok(PodConfig {
        modules,
        overlap_rad: overlap,
        total_hfov_rad: total,
        mount: PodMount::default(),
    })
}

impl PodConfig {
    /// Five-module ground-vehicle pod: per module one 4096x3000 RGB camera,
    /// a 4096x3000 NIR stereo pair and a 640x480 thermal camera; 48 deg x 36 deg
    /// modules with 12 deg overlap.
    pub fn ugv_reference() -> Self {
        let intr = CameraIntrinsics::new(4096, 3000, 48f64.to_radians(), 36f64.to_radians())
            .expect("reference intrinsics are valid");
        let mut pod = make_pod(5, 48f64.to_radians(), 12f64.to_radians(), &intr).expect("reference pod is valid");
        for m in &mut pod.modules {
            m.cameras = vec![
                PhysicalCamera { name: "nir_top".into(), width_px: 4096, height_px: 3000 },
                PhysicalCamera { name: "thermal".into(), width_px: 640, height_px: 480 },
                PhysicalCamera { name: "rgb".into(), width_px: 4096, height_px: 3000 },
                PhysicalCamera { name: "nir_bottom".into(), width_px: 4096, height_px: 3000 },
            ];
        }
        pod
    }

    /// Single downward-looking 2048x1536 camera (60 deg x 45 deg) as carried by the aerial vehicle.
    pub fn uav_reference() -> Self {
        let intr = CameraIntrinsics::new(2048, 1536, 60f64.to_radians(), 45f64.to_radians())
            .expect("reference intrinsics are valid");
        let mut pod = make_pod(1, 60f64.to_radians(), 0.0, &intr).expect("reference pod is valid");
        pod.mount = PodMount {
            height_m: 0.0,
            forward_m: 0.0,
            pitch_down_rad: std::f64::consts::FRAC_PI_2,
        };
        pod.modules[0].cameras = vec![
            PhysicalCamera { name: "rgb".into(), width_px: 2048, height_px: 1536 },
            PhysicalCamera { name: "nir".into(), width_px: 2048, height_px: 1536 },
        ];
        pod
    }

    pub fn with_mount(mut self, mount: PodMount) -> Self {
        self.mount = mount;
        self
    }

    pub fn module_extrinsics(&self, index: usize) -> Extrinsics {
        let m = &self.modules[index];
        Extrinsics::looking(
            m.yaw_offset_rad,
            self.mount.pitch_down_rad,
            Vector3::new(self.mount.forward_m, 0.0, self.mount.height_m),
        )
    }

    /// Yaw interval `[lo, hi]` covered by a module, in the vehicle frame.
    pub fn module_interval(&self, index: usize) -> (f64, f64) {
        let m = &self.modules[index];
        let half = m.intrinsics.hfov_rad / 2.0;
        (m.yaw_offset_rad - half, m.yaw_offset_rad + half)
    }
}

/// Indices of the modules that see `target_utm` within `max_range` of the camera.
pub fn visible_modules(target_utm: &Vector3<f64>, pose: &Pose, pod: &PodConfig, max_range: f64) -> Vec<usize> {
    (0..pod.modules.len())
        .filter(|&i| {
            let extr = pod.module_extrinsics(i);
            let p = global_to_camera(target_utm, &extr, pose);
            if p.z <= 0.0 || p.norm() > max_range {
                return false;
            }
            let intr = &pod.modules[i].intrinsics;
            p.x.atan2(p.z).abs() <= intr.hfov_rad / 2.0 + ANGLE_EPS
                && p.y.atan2(p.z).abs() <= intr.vfov_rad / 2.0 + ANGLE_EPS
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn intr_48() -> CameraIntrinsics {
        CameraIntrinsics::new(4096, 3000, 48f64.to_radians(), 36f64.to_radians()).unwrap()
    }

    #[test]
    fn pod_totals() {
        let i = intr_48();
        let deg = |x: f64| x.to_radians();
        let p5 = make_pod(5, deg(48.0), deg(12.0), &i).unwrap();
        assert_relative_eq!(p5.total_hfov_rad.to_degrees(), 192.0, epsilon = 1e-9);
        let p1 = make_pod(1, deg(48.0), deg(12.0), &i).unwrap();
        assert_relative_eq!(p1.total_hfov_rad.to_degrees(), 48.0, epsilon = 1e-9);
        assert_eq!(p1.modules[0].yaw_offset_rad, 0.0);
        let p2 = make_pod(2, deg(48.0), deg(12.0), &i).unwrap();
        assert_relative_eq!(p2.total_hfov_rad.to_degrees(), 84.0, epsilon = 1e-9);
    }

    #[test]
    fn pod_rejects_bad_configs() {
        let i = intr_48();
        let h = 48f64.to_radians();
        assert!(matches!(make_pod(0, h, 0.1, &i), Err(GeometryError::InvalidPod(_))));
        assert!(matches!(make_pod(3, h, h, &i), Err(GeometryError::InvalidPod(_))));
        assert!(matches!(make_pod(10, h, 0.0, &i), Err(GeometryError::InvalidPod(_))));
        assert!(matches!(make_pod(3, 0.5, 0.1, &i), Err(GeometryError::InvalidPod(_))));
    }

    #[test]
    fn focal_from_fov() {
        // independent: w / (2 tan(hfov/2)) evaluated with plain arithmetic
        let t = (24.0f64 * std::f64::consts::PI / 180.0).tan();
        let expected = 4096.0 / (2.0 * t);
        assert_relative_eq!(intr_48().focal_px(), expected, max_relative = 1e-12);
        assert_relative_eq!(intr_48().focal_px(), 4599.883, epsilon = 1e-3);
    }

    #[test]
    fn project_examples() {
        let i = intr_48();
        let p = project(&Vector3::new(0.0, 0.0, 10.0), &i).unwrap();
        assert_eq!(p.pixel, i.principal_point());
        assert!(p.in_frame);

        let i = CameraIntrinsics::from_focal(4096, 3000, 4603.7, Pixel::new(2048.0, 1500.0)).unwrap();
        let p = project(&Vector3::new(1.0, 0.0, 10.0), &i).unwrap();
        assert_relative_eq!(p.pixel.u, 2508.37, epsilon = 1e-9);
        assert_relative_eq!(p.pixel.v, 1500.0, epsilon = 1e-12);

        let back = backproject(Pixel::new(2508.4, 1500.0), 10.0, &i).unwrap();
        assert!((back - Vector3::new(1.0, 0.0, 10.0)).norm() < 1e-3);

        let off = project(&Vector3::new(100.0, 0.0, 1.0), &i).unwrap();
        assert!(!off.in_frame);
        assert_eq!(
            project(&Vector3::new(0.0, 0.0, -1.0), &i),
            Err(GeometryError::BehindCamera(-1.0))
        );
        assert_eq!(backproject(Pixel::new(1.0, 1.0), 0.0, &i), Err(GeometryError::InvalidDepth(0.0)));
        assert!(matches!(
            backproject(Pixel::new(-1.0, 1.0), 5.0, &i),
            Err(GeometryError::PixelOutsideImage(..))
        ));
    }

    #[test]
    fn backproject_principal_point() {
        let i = intr_48();
        let p = backproject(i.principal_point(), 10.0, &i).unwrap();
        assert_eq!(p, Vector3::new(0.0, 0.0, 10.0));
    }

    #[test]
    fn camera_to_global_cases() {
        let p = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(camera_to_global(&p, &Extrinsics::identity(), &Pose::identity()), p);

        let shifted = Pose::planar(100.0, 200.0, 0.0, 0.0, 0.0);
        assert_relative_eq!(
            camera_to_global(&p, &Extrinsics::identity(), &shifted),
            p + Vector3::new(100.0, 200.0, 0.0),
            epsilon = 1e-12
        );

        // forward-mounted camera, vehicle yawed 90 deg: optical axis points north
        let extr = Extrinsics::looking(0.0, 0.0, Vector3::new(0.5, 0.0, 1.5));
        let pose = Pose::planar(10.0, 20.0, 0.0, std::f64::consts::FRAC_PI_2, 0.0);
        let got = camera_to_global(&Vector3::new(0.0, 0.0, 1.0), &extr, &pose);
        // oracle: explicit matrices
        let rz = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let cam = Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0);
        let want = rz * (cam * Vector3::new(0.0, 0.0, 1.0) + Vector3::new(0.5, 0.0, 1.5)) + Vector3::new(10.0, 20.0, 0.0);
        assert_relative_eq!(got, want, epsilon = 1e-12);
        assert_relative_eq!(got, Vector3::new(10.0, 21.5, 1.5), epsilon = 1e-12);
    }

    #[test]
    fn pose_rejects_improper_rotation() {
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(Pose::new(Vector3::zeros(), reflect, 0.0).is_err());
        let skew = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(Extrinsics::new(skew, Vector3::zeros()).is_err());
    }

    fn bearing_oracle(pod: &PodConfig, bearing: f64) -> Vec<usize> {
        (0..pod.modules.len())
            .filter(|&i| {
                let (lo, hi) = pod.module_interval(i);
                bearing >= lo - 1e-12 && bearing <= hi + 1e-12
            })
            .collect()
    }

    #[test]
    fn visibility_dead_ahead_and_behind() {
        let pod = PodConfig::ugv_reference();
        let pose = Pose::identity();
        // at pod height so the vertical angle is zero
        let ahead = Vector3::new(50.0, 0.0, 2.0);
        assert_eq!(visible_modules(&ahead, &pose, &pod, 300.0), vec![2]);
        assert_eq!(bearing_oracle(&pod, 0.0), vec![2]);

        let behind = Vector3::new(-50.0, 0.0, 2.0);
        assert!(visible_modules(&behind, &pose, &pod, 300.0).is_empty());
        assert!(visible_modules(&ahead, &pose, &pod, 40.0).is_empty());

        // 15 deg left lies inside the 12..24 deg overlap wedge of modules 2 and 3
        let b = 15f64.to_radians();
        let t = Vector3::new(50.0 * b.cos(), 50.0 * b.sin(), 2.0);
        assert_eq!(visible_modules(&t, &pose, &pod, 300.0), vec![2, 3]);
        assert_eq!(bearing_oracle(&pod, b), vec![2, 3]);
    }

    #[test]
    fn visibility_matches_angular_oracle() {
        let pod = PodConfig::ugv_reference();
        let pose = Pose::planar(5.0, -3.0, 0.0, 0.3, 0.0);
        for k in 0..720 {
            let b = (k as f64 * 0.5 - 180.0).to_radians();
            let world_b = b + 0.3;
            let t = Vector3::new(5.0 + 80.0 * world_b.cos(), -3.0 + 80.0 * world_b.sin(), 2.0);
            let got = visible_modules(&t, &pose, &pod, 300.0);
            let want = bearing_oracle(&pod, b);
            // samples on exact boundaries are allowed to differ by rounding
            let on_edge = (0..5).any(|i| {
                let (lo, hi) = pod.module_interval(i);
                (b - lo).abs() < 1e-9 || (b - hi).abs() < 1e-9
            });
            if !on_edge {
                assert_eq!(got, want, "bearing {} deg", b.to_degrees());
            }
        }
    }

    #[test]
    fn pod_intervals_contiguous() {
        for n in 1..8 {
            let pod = make_pod(n, 48f64.to_radians(), 12f64.to_radians(), &intr_48()).unwrap();
            let (lo, _) = pod.module_interval(0);
            let (_, hi) = pod.module_interval(n - 1);
            assert_relative_eq!(hi - lo, pod.total_hfov_rad, epsilon = 1e-12);
            assert_relative_eq!(lo, -hi, epsilon = 1e-12);
            for i in 1..n {
                let (_, prev_hi) = pod.module_interval(i - 1);
                let (cur_lo, _) = pod.module_interval(i);
                assert_relative_eq!(prev_hi - cur_lo, pod.overlap_rad, epsilon = 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn project_backproject_roundtrip(u in 0.0f64..4096.0, v in 0.0f64..3000.0, depth in 1.0f64..500.0) {
            let i = intr_48();
            let p = backproject(Pixel::new(u, v), depth, &i).unwrap();
            let px = project(&p, &i).unwrap().pixel;
            prop_assert!((px.u - u).abs() < 1e-6 && (px.v - v).abs() < 1e-6);
        }

        #[test]
        fn camera_to_global_is_isometry(
            a in prop::array::uniform3(-50.0f64..50.0),
            b in prop::array::uniform3(-50.0f64..50.0),
            rpy in prop::array::uniform3(-3.0f64..3.0),
            yaw in -3.0f64..3.0,
            t in prop::array::uniform3(-1000.0f64..1000.0),
        ) {
            let pose = Pose::from_rpy(Vector3::from(t), rpy[0], rpy[1], rpy[2], 0.0);
            let extr = Extrinsics::looking(yaw, 0.2, Vector3::new(0.3, 0.0, 1.9));
            let (pa, pb) = (Vector3::from(a), Vector3::from(b));
            let d0 = (pa - pb).norm();
            let d1 = (camera_to_global(&pa, &extr, &pose) - camera_to_global(&pb, &extr, &pose)).norm();
            prop_assert!((d0 - d1).abs() <= 1e-9 * d0.max(1.0));
            let back = global_to_camera(&camera_to_global(&pa, &extr, &pose), &extr, &pose);
            prop_assert!((back - pa).norm() < 1e-9);
        }
    }
}
