//! Ground-truth comparison of track and COP estimates.

use super::world::WorldObject;
use crate::fusion::ObjectClass;
use nalgebra::Vector3;
use serde::Serialize;

/// A scored position estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub class: ObjectClass,
    pub position: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchScore {
    pub estimates: usize,
    pub objects: usize,
    /// `(estimate index, object id, horizontal error)`.
    pub matches: Vec<(usize, usize, f64)>,
    pub precision: f64,
    pub recall: f64,
    /// True when there was nothing to score and precision/recall default to 1.
    pub vacuous: bool,
    pub error_mean: f64,
    pub error_max: f64,
}

fn horizontal(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Greedy nearest matching: candidate pairs of the same class within
/// `match_radius` are taken in order of increasing horizontal distance, each
/// estimate and object used at most once. Ties break on indices.
pub fn score_estimates(estimates: &[Estimate], objects: &[WorldObject], match_radius: f64) -> MatchScore {
    let mut pairs = Vec::new();
    for (i, e) in estimates.iter().enumerate() {
        for (j, o) in objects.iter().enumerate() {
            let d = horizontal(&e.position, &o.position);
            if e.class == o.class && d <= match_radius {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_e = vec![false; estimates.len()];
    let mut used_o = vec![false; objects.len()];
    let mut matches = Vec::new();
    for (d, i, j) in pairs {
        if !used_e[i] && !used_o[j] {
            used_e[i] = true;
            used_o[j] = true;
            matches.push((i, objects[j].id, d));
        }
    }
    let m = matches.len() as f64;
    let precision = if estimates.is_empty() { 1.0 } else { m / estimates.len() as f64 };
    let recall = if objects.is_empty() { 1.0 } else { m / objects.len() as f64 };
    let errors: Vec<f64> = matches.iter().map(|x| x.2).collect();
    MatchScore {
        estimates: estimates.len(),
        objects: objects.len(),
        precision,
        recall,
        vacuous: estimates.is_empty() || objects.is_empty(),
        error_mean: if errors.is_empty() { 0.0 } else { errors.iter().sum::<f64>() / m },
        error_max: errors.iter().copied().fold(0.0, f64::max),
        matches,
    }
}

/// Scores each robot's tracks separately, so two robots tracking the same
/// object are not counted as duplicates. Precision pools all tracks; recall
/// counts objects matched by at least one robot. With one robot this is
/// [`score_estimates`].
pub fn score_per_robot(groups: &[(u32, Vec<Estimate>)], objects: &[WorldObject], match_radius: f64) -> MatchScore {
    let mut matches = Vec::new();
    let mut estimates = 0;
    let mut found = vec![false; objects.len()];
    for (_, est) in groups {
        let s = score_estimates(est, objects, match_radius);
        for &(i, id, d) in &s.matches {
            matches.push((estimates + i, id, d));
            if let Some(j) = objects.iter().position(|o| o.id == id) {
                found[j] = true;
            }
        }
        estimates += est.len();
    }
    let m = matches.len() as f64;
    let errors: Vec<f64> = matches.iter().map(|x| x.2).collect();
    MatchScore {
        estimates,
        objects: objects.len(),
        precision: if estimates == 0 { 1.0 } else { m / estimates as f64 },
        recall: if objects.is_empty() { 1.0 } else { found.iter().filter(|f| **f).count() as f64 / objects.len() as f64 },
        vacuous: estimates == 0 || objects.is_empty(),
        error_mean: if errors.is_empty() { 0.0 } else { errors.iter().sum::<f64>() / m },
        error_max: errors.iter().copied().fold(0.0, f64::max),
        matches,
    }
}

/// Fraction of ground-truth objects represented by exactly one COP entry.
/// Each entry is attributed to its nearest same-class object within the radius.
pub fn cop_consistency(entries: &[Estimate], objects: &[WorldObject], match_radius: f64) -> f64 {
    if objects.is_empty() {
        return 1.0;
    }
    let mut counts = vec![0usize; objects.len()];
    for e in entries {
        let nearest = objects
            .iter()
            .enumerate()
            .filter(|(_, o)| o.class == e.class)
            .map(|(j, o)| (horizontal(&e.position, &o.position), j))
            .filter(|(d, _)| *d <= match_radius)
            .min_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((_, j)) = nearest {
            counts[j] += 1;
        }
    }
    counts.iter().filter(|&&c| c == 1).count() as f64 / objects.len() as f64
}

/// Summary of a scenario run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub objects: usize,
    pub tracks: usize,
    pub track_precision: f64,
    pub track_recall: f64,
    pub vacuous: bool,
    pub geo_error_mean: f64,
    pub geo_error_max: f64,
    pub cop_objects: usize,
    pub cop_precision: f64,
    pub cop_recall: f64,
    pub cop_error_max: f64,
    pub cop_consistency: f64,
    pub frames: usize,
    pub detections: usize,
    pub contacts: usize,
    pub latency_mean: f64,
    pub latency_max: f64,
    pub sends: usize,
    pub deliveries: usize,
    pub drops: usize,
}

impl RunMetrics {
    /// `metric,value` rows in a fixed order.
    pub fn to_csv(&self) -> String {
        let rows: Vec<(&str, String)> = vec![
            ("objects", self.objects.to_string()),
            ("tracks", self.tracks.to_string()),
            ("track_precision", self.track_precision.to_string()),
            ("track_recall", self.track_recall.to_string()),
            ("vacuous", self.vacuous.to_string()),
            ("geo_error_mean", self.geo_error_mean.to_string()),
            ("geo_error_max", self.geo_error_max.to_string()),
            ("cop_objects", self.cop_objects.to_string()),
            ("cop_precision", self.cop_precision.to_string()),
            ("cop_recall", self.cop_recall.to_string()),
            ("cop_error_max", self.cop_error_max.to_string()),
            ("cop_consistency", self.cop_consistency.to_string()),
            ("frames", self.frames.to_string()),
            ("detections", self.detections.to_string()),
            ("contacts", self.contacts.to_string()),
            ("latency_mean", self.latency_mean.to_string()),
            ("latency_max", self.latency_max.to_string()),
            ("sends", self.sends.to_string()),
            ("deliveries", self.deliveries.to_string()),
            ("drops", self.drops.to_string()),
        ];
        let mut out = String::from("metric,value\n");
        for (k, v) in rows {
            out.push_str(k);
            out.push(',');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }
}
