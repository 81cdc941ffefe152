//! Common operating picture: cross-robot merge of delivered track reports.

use super::{MeshError, TrackReport};
use crate::fusion::ObjectClass;
use nalgebra::Vector3;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

pub type ContributorKey = (u32, u32);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contribution {
    pub position: Vector3<f64>,
    pub covariance_trace: f64,
    pub confidence: f32,
    pub timestamp: f64,
    pub object: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CopObject {
    pub id: usize,
    pub class: ObjectClass,
    pub position: Vector3<f64>,
    pub contributors: BTreeSet<ContributorKey>,
    pub last_seen: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CopState {
    pub objects: Vec<CopObject>,
    pub contributions: BTreeMap<ContributorKey, Contribution>,
    /// Latest report timestamp seen from each robot.
    pub robot_last_report: BTreeMap<u32, f64>,
}

impl CopState {
    pub fn new() -> Self {
        Self::default()
    }

    fn refresh(&mut self, object: usize) {
        let obj = &mut self.objects[object];
        let mut wsum = 0.0;
        let mut acc = Vector3::zeros();
        for key in &obj.contributors {
            let c = &self.contributions[key];
            let w = 1.0 / c.covariance_trace;
            wsum += w;
            acc += c.position * w;
        }
        obj.position = acc / wsum;
    }

    pub fn object_of(&self, robot_id: u32, track_id: u32) -> Option<&CopObject> {
        self.contributions.get(&(robot_id, track_id)).map(|c| &self.objects[c.object])
    }
}

/// Folds one delivered report into the picture. Older reports from a
/// contributor than the one already held are ignored.
pub fn cop_ingest(state: &mut CopState, report: &TrackReport, t: f64, merge_radius: f64) -> Result<(), MeshError> {
    report.validate()?;
    if t < report.timestamp {
        return Err(MeshError::InvalidReport(format!(
            "ingest time {t} precedes report timestamp {}",
            report.timestamp
        )));
    }
    let key = (report.robot_id, report.track_id);
    let last = state.robot_last_report.entry(report.robot_id).or_insert(report.timestamp);
    *last = last.max(report.timestamp);

    let contribution = |object| Contribution {
        position: report.position,
        covariance_trace: report.covariance_trace(),
        confidence: report.confidence,
        timestamp: report.timestamp,
        object,
    };
    let object = if let Some(existing) = state.contributions.get(&key) {
        if report.timestamp < existing.timestamp {
            return Ok(());
        }
        let object = existing.object;
        state.contributions.insert(key, contribution(object));
        object
    } else {
        let near = state
            .objects
            .iter()
            .filter(|o| o.class == report.class)
            .map(|o| (o.id, (o.position - report.position).norm()))
            .filter(|(_, d)| *d <= merge_radius)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(id, _)| id);
        let object = near.unwrap_or_else(|| {
            state.objects.push(CopObject {
                id: state.objects.len(),
                class: report.class,
                position: report.position,
                contributors: BTreeSet::new(),
                last_seen: report.timestamp,
            });
            state.objects.len() - 1
        });
        state.objects[object].contributors.insert(key);
        state.contributions.insert(key, contribution(object));
        object
    };
    let obj = &mut state.objects[object];
    obj.last_seen = obj.last_seen.max(report.timestamp);
    state.refresh(object);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn report(robot: u32, track: u32, x: f64, y: f64, trace: f64, t: f64) -> TrackReport {
        TrackReport {
            robot_id: robot,
            track_id: track,
            class: ObjectClass::Person,
            position: Vector3::new(x, y, 0.0),
            covariance_diag: Vector3::repeat(trace / 3.0),
            confidence: 0.8,
            timestamp: t,
            payload_bytes: 1,
        }
    }

    #[test]
    fn first_report_creates_object() {
        let mut cop = CopState::new();
        cop_ingest(&mut cop, &report(1, 1, 3.0, 4.0, 1.0, 0.0), 0.1, 5.0).unwrap();
        assert_eq!(cop.objects.len(), 1);
        assert_eq!(cop.objects[0].position, Vector3::new(3.0, 4.0, 0.0));
    }

    #[test]
    fn merge_and_weighting() {
        let mut cop = CopState::new();
        let p1 = Vector3::new(0.0, 0.0, 0.0);
        let p2 = Vector3::new(2.0, 0.0, 0.0);
        cop_ingest(&mut cop, &report(1, 1, p1.x, p1.y, 1.0, 0.0), 0.0, 5.0).unwrap();
        cop_ingest(&mut cop, &report(2, 7, p2.x, p2.y, 4.0, 0.0), 0.0, 5.0).unwrap();
        assert_eq!(cop.objects.len(), 1);
        assert_eq!(cop.objects[0].contributors.len(), 2);
        let expect = (p1 * 4.0 + p2) / 5.0;
        assert_abs_diff_eq!(cop.objects[0].position, expect, epsilon = 1e-12);
        // different class never merges
        let mut truck = report(3, 1, 1.0, 0.0, 1.0, 0.0);
        truck.class = ObjectClass::PickupTruck;
        cop_ingest(&mut cop, &truck, 0.0, 5.0).unwrap();
        assert_eq!(cop.objects.len(), 2);
        // far away creates a new object
        cop_ingest(&mut cop, &report(2, 8, 20.0, 0.0, 1.0, 0.0), 0.0, 5.0).unwrap();
        assert_eq!(cop.objects.len(), 3);
    }

    #[test]
    fn latest_report_wins_and_stale_ignored() {
        let mut cop = CopState::new();
        cop_ingest(&mut cop, &report(1, 1, 0.0, 0.0, 1.0, 1.0), 1.0, 5.0).unwrap();
        cop_ingest(&mut cop, &report(1, 1, 1.0, 0.0, 1.0, 2.0), 2.0, 5.0).unwrap();
        assert_eq!(cop.objects[0].position.x, 1.0);
        cop_ingest(&mut cop, &report(1, 1, 9.0, 0.0, 1.0, 1.5), 3.0, 5.0).unwrap();
        assert_eq!(cop.objects[0].position.x, 1.0);
        assert!(cop_ingest(&mut cop, &report(1, 1, 0.0, 0.0, 1.0, 5.0), 4.0, 5.0).is_err());
    }

    proptest! {
        #[test]
        fn idempotent_and_unique_membership(
            reports in prop::collection::vec((0u32..3, 0u32..4, -20f64..20.0, -20f64..20.0, 0.1f64..5.0), 1..40)
        ) {
            let mut cop = CopState::new();
            let mut last = None;
            for (i, (r, k, x, y, tr)) in reports.into_iter().enumerate() {
                let rep = report(r, k, x, y, tr, i as f64);
                cop_ingest(&mut cop, &rep, i as f64, 5.0).unwrap();
                last = Some(rep);
            }
            let before = cop.clone();
            cop_ingest(&mut cop, &last.unwrap(), 1e3, 5.0).unwrap();
            prop_assert_eq!(&before, &cop);
            let mut seen = BTreeSet::new();
            for o in &cop.objects {
                for c in &o.contributors {
                    prop_assert!(seen.insert(*c));
                }
            }
            prop_assert_eq!(seen.len(), cop.contributions.len());
        }
    }
}
