//! Detection-to-3D fusion: median stereo depth inside a bounding box and a
//! range-scaled observation covariance aligned with the bearing to the object.

use crate::geometry::{backproject, camera_to_global, CameraIntrinsics, Extrinsics, GeometryError, Pixel, Pose};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FusionError {
    #[error("invalid detection: {0}")]
    InvalidDetection(String),
    #[error("degenerate observation: {0}")]
    DegenerateObservation(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectClass {
    Person,
    EGator,
    PickupTruck,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 3] = [ObjectClass::Person, ObjectClass::EGator, ObjectClass::PickupTruck];

    pub fn code(self) -> u8 {
        match self {
            ObjectClass::Person => 0,
            ObjectClass::EGator => 1,
            ObjectClass::PickupTruck => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectClass::Person => "person",
            ObjectClass::EGator => "e_gator",
            ObjectClass::PickupTruck => "pickup_truck",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl BBox {
    pub fn center(&self) -> Pixel {
        Pixel::new((self.u_min + self.u_max) / 2.0, (self.v_min + self.v_max) / 2.0)
    }

    /// Inclusive containment.
    pub fn contains(&self, px: Pixel) -> bool {
        px.u >= self.u_min && px.u <= self.u_max && px.v >= self.v_min && px.v <= self.v_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection2D {
    pub bbox: BBox,
    pub class: ObjectClass,
    pub confidence: f64,
    pub module_index: usize,
    pub timestamp: f64,
}

impl Detection2D {
    pub fn validate(&self, intr: &CameraIntrinsics) -> Result<(), FusionError> {
        let b = &self.bbox;
        if !(b.u_min < b.u_max && b.v_min < b.v_max) {
            return Err(FusionError::InvalidDetection(format!("empty bbox {b:?}")));
        }
        if !(intr.contains(Pixel::new(b.u_min, b.v_min)) && intr.contains(Pixel::new(b.u_max, b.v_max))) {
            return Err(FusionError::InvalidDetection(format!("bbox {b:?} exceeds image bounds")));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(FusionError::InvalidDetection(format!("confidence {} outside [0, 1]", self.confidence)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudPoint {
    pub position: Vector3<f64>,
    pub pixel: Pixel,
}

/// Stereo points of one module, in that module's camera frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloudCam {
    pub module_index: usize,
    pub points: Vec<CloudPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DepthPolicy {
    pub min_points: usize,
    pub max_reliable_range: f64,
    pub default_depth: f64,
}

impl Default for DepthPolicy {
    fn default() -> Self {
        Self {
            min_points: 10,
            max_reliable_range: 150.0,
            default_depth: 75.0,
        }
    }
}

impl DepthPolicy {
    pub fn validate(&self) -> Result<(), FusionError> {
        if self.min_points < 1 {
            return Err(FusionError::InvalidParams("min_points must be >= 1".into()));
        }
        if !(self.default_depth > 0.0 && self.default_depth <= self.max_reliable_range) {
            return Err(FusionError::InvalidParams(format!(
                "default depth {} must lie in (0, max_reliable_range {}]",
                self.default_depth, self.max_reliable_range
            )));
        }
        Ok(())
    }
}

/// Variance per squared metre of range along and across the bearing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CovarianceParams {
    pub k_range: f64,
    pub k_bearing: f64,
}

impl Default for CovarianceParams {
    fn default() -> Self {
        Self {
            k_range: 4e-3,
            k_bearing: 1e-4,
        }
    }
}

impl CovarianceParams {
    pub fn validate(&self) -> Result<(), FusionError> {
        if !(self.k_range > self.k_bearing && self.k_bearing > 0.0) {
            return Err(FusionError::InvalidParams(format!(
                "need k_range > k_bearing > 0, got {} and {}",
                self.k_range, self.k_bearing
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthSource {
    StereoMedian,
    DefaultDepth,
}

/// One 3D observation of an object in the global frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Contact {
    pub position: Vector3<f64>,
    pub covariance: Matrix3<f64>,
    pub class: ObjectClass,
    pub confidence: f64,
    pub source_robot: u32,
    pub timestamp: f64,
    pub depth_source: DepthSource,
}

/// Median depth of the stereo points falling inside the detection box, or the
/// policy's default depth when there are too few points or the median is
/// beyond reliable stereo range. Even counts take the lower-middle element.
pub fn bbox_depth(det: &Detection2D, cloud: &PointCloudCam, policy: &DepthPolicy) -> (f64, DepthSource) {
    let mut depths: Vec<f64> = cloud
        .points
        .iter()
        .filter(|p| det.bbox.contains(p.pixel))
        .map(|p| p.position.z)
        .collect();
    if depths.len() < policy.min_points {
        return (policy.default_depth, DepthSource::DefaultDepth);
    }
    let mid = (depths.len() - 1) / 2;
    let (_, median, _) = depths.select_nth_unstable_by(mid, f64::total_cmp);
    let median = *median;
    if median > policy.max_reliable_range {
        (policy.default_depth, DepthSource::DefaultDepth)
    } else {
        (median, DepthSource::StereoMedian)
    }
}

/// Covariance `r^2 * R diag(k_range, k_bearing, k_bearing) R^T` where the
/// first column of `R` is the bearing. Because the two cross-bearing terms are
/// equal this reduces to `r^2 (k_bearing I + (k_range - k_bearing) b b^T)`.
pub fn bearing_covariance(range: f64, bearing_unit: &Vector3<f64>, params: &CovarianceParams) -> Result<Matrix3<f64>, FusionError> {
    if !(range > 0.0 && range.is_finite()) {
        return Err(FusionError::DegenerateObservation(format!("range {range} must be positive")));
    }
    if (bearing_unit.norm() - 1.0).abs() > 1e-9 {
        return Err(FusionError::DegenerateObservation(format!(
            "bearing has norm {}, expected unit",
            bearing_unit.norm()
        )));
    }
    let r2 = range * range;
    let outer = bearing_unit * bearing_unit.transpose();
    let cov = (Matrix3::identity() * params.k_bearing + outer * (params.k_range - params.k_bearing)) * r2;
    Ok((cov + cov.transpose()) * 0.5)
}

/// Lifts a 2D detection to a global-frame contact: depth from the stereo
/// cloud, position by back-projecting the box center, covariance aligned with
/// the robot-to-object bearing.
#[allow(clippy::too_many_arguments)]
pub fn make_contact(
    det: &Detection2D,
    cloud: &PointCloudCam,
    intr: &CameraIntrinsics,
    extr: &Extrinsics,
    pose: &Pose,
    policy: &DepthPolicy,
    params: &CovarianceParams,
    robot_id: u32,
) -> Result<Contact, FusionError> {
    det.validate(intr)?;
    let (depth, source) = bbox_depth(det, cloud, policy);
    let p_cam = backproject(det.bbox.center(), depth, intr)?;
    let position = camera_to_global(&p_cam, extr, pose);
    let offset = position - pose.position;
    let range = offset.norm();
    if range <= 0.0 {
        return Err(FusionError::DegenerateObservation("object coincides with robot".into()));
    }
    let covariance = bearing_covariance(range, &(offset / range), params)?;
    Ok(Contact {
        position,
        covariance,
        class: det.class,
        confidence: det.confidence,
        source_robot: robot_id,
        timestamp: det.timestamp,
        depth_source: source,
    })
}
