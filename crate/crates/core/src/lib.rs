//! Multi-robot object geolocation: sensor-pod geometry, detection-to-3D
//! fusion, static-object tracking, terrain cost-maps, anytime lattice
//! planning with pure-pursuit control, and a simulated mesh network feeding a
//! common operating picture.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod cli;
pub mod fusion;
pub mod geometry;
pub mod meshnet;
pub mod navigation;
pub mod scenario;
pub mod terrain;
pub mod tracker;

pub use fusion::{Contact, ObjectClass};
pub use geometry::{CameraIntrinsics, PodConfig, Pose};
