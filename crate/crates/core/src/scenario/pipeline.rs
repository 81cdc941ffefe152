//! Per-frame processing latency and camera pixel throughput.

use crate::geometry::PodConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Stage duration: `mean` plus a uniform draw in `[-jitter, jitter]`,
/// floored at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub mean: f64,
    #[serde(default)]
    pub jitter: f64,
}

impl Stage {
    pub const fn fixed(mean: f64) -> Self {
        Self { mean, jitter: 0.0 }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.jitter > 0.0 {
            (self.mean + rng.random_range(-self.jitter..=self.jitter)).max(0.0)
        } else {
            self.mean
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineModel {
    pub trigger_to_capture: Stage,
    pub capture_to_cpu: Stage,
    pub preprocess: Stage,
    pub stereo_pointcloud: Stage,
    pub transfer: Stage,
    pub detection: Stage,
    pub localization_3d: Stage,
    pub seed: u64,
}

impl Default for PipelineModel {
    fn default() -> Self {
        Self {
            trigger_to_capture: Stage { mean: 0.005, jitter: 0.001 },
            capture_to_cpu: Stage { mean: 0.030, jitter: 0.005 },
            preprocess: Stage { mean: 0.040, jitter: 0.005 },
            stereo_pointcloud: Stage { mean: 0.150, jitter: 0.020 },
            transfer: Stage { mean: 0.020, jitter: 0.005 },
            detection: Stage { mean: 0.120, jitter: 0.015 },
            localization_3d: Stage { mean: 0.010, jitter: 0.002 },
            seed: 0,
        }
    }
}

impl PipelineModel {
    pub fn zero() -> Self {
        let z = Stage::fixed(0.0);
        Self {
            trigger_to_capture: z,
            capture_to_cpu: z,
            preprocess: z,
            stereo_pointcloud: z,
            transfer: z,
            detection: z,
            localization_3d: z,
            seed: 0,
        }
    }

    fn stages(&self) -> [(&'static str, &Stage); 7] {
        [
            ("trigger_to_capture", &self.trigger_to_capture),
            ("capture_to_cpu", &self.capture_to_cpu),
            ("preprocess", &self.preprocess),
            ("stereo_pointcloud", &self.stereo_pointcloud),
            ("transfer", &self.transfer),
            ("detection", &self.detection),
            ("localization_3d", &self.localization_3d),
        ]
    }

    pub fn validate(&self) -> Vec<String> {
        self.stages()
            .iter()
            .filter(|(_, s)| !(s.mean >= 0.0 && s.jitter >= 0.0 && s.mean.is_finite() && s.jitter.is_finite()))
            .map(|(name, s)| format!("{name}: mean {} and jitter {} must be finite and >= 0", s.mean, s.jitter))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub trigger_to_capture: f64,
    pub capture_to_cpu: f64,
    pub preprocess: f64,
    pub stereo_pointcloud: f64,
    pub transfer: f64,
    pub detection: f64,
    pub localization_3d: f64,
}

impl StageTimes {
    /// Serial stages plus the slower of the two parallel branches
    /// (preprocess then detection, stereo then transfer).
    pub fn end_to_end(&self) -> f64 {
        self.trigger_to_capture
            + self.capture_to_cpu
            + (self.preprocess + self.detection).max(self.stereo_pointcloud + self.transfer)
            + self.localization_3d
    }
}

/// Stage times for one frame. Each frame draws from its own stream so results
/// do not depend on evaluation order.
pub fn pipeline_latency(model: &PipelineModel, seed: u64, frame_index: u64) -> (StageTimes, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ model.seed);
    rng.set_stream(frame_index);
    let t = StageTimes {
        trigger_to_capture: model.trigger_to_capture.sample(&mut rng),
        capture_to_cpu: model.capture_to_cpu.sample(&mut rng),
        preprocess: model.preprocess.sample(&mut rng),
        stereo_pointcloud: model.stereo_pointcloud.sample(&mut rng),
        transfer: model.transfer.sample(&mut rng),
        detection: model.detection.sample(&mut rng),
        localization_3d: model.localization_3d.sample(&mut rng),
    };
    (t, t.end_to_end())
}

/// Pixels per second over every physical camera of the pod.
pub fn throughput_check(pod: &PodConfig, capture_rate: f64) -> f64 {
    let pixels: u64 = pod
        .modules
        .iter()
        .flat_map(|m| &m.cameras)
        .map(|c| c.width_px as u64 * c.height_px as u64)
        .sum();
    pixels as f64 * capture_rate
}
