//! Static-object tracking.
//!
//! Each track is a constant-position Kalman filter with zero process noise and
//! identity measurement model. Contacts are associated to live tracks by a
//! single joint minimum-cost assignment on squared Mahalanobis distance.
//! A track is confirmed once it holds `n_confirm` matches with no gap between
//! consecutive matches longer than `max_gap`; a longer gap restarts that chain
//! from the newest match. Tracks die after `death_timeout` seconds without an
//! update.

mod assignment;

pub use assignment::min_cost_assignment;

use crate::fusion::{Contact, ObjectClass};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrackerError {
    #[error("time went backwards: {now} < {previous}")]
    TimeRegression { now: f64, previous: f64 },
    #[error("negative prediction interval {0}")]
    NegativeInterval(f64),
    #[error("class mismatch: track is {track:?}, contact is {contact:?}")]
    ClassMismatch { track: ObjectClass, contact: ObjectClass },
    #[error("innovation covariance is singular")]
    NumericalDegeneracy,
    #[error("invalid lifecycle parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    Candidate,
    Confirmed,
    Dead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u32,
    pub mean: Vector3<f64>,
    pub covariance: Matrix3<f64>,
    pub class: ObjectClass,
    pub status: TrackStatus,
    pub match_times: Vec<f64>,
    pub last_update: f64,
    /// Length of the current qualifying match chain.
    pub chain_len: usize,
    /// Running mean of contact confidences.
    pub confidence: f64,
    pub source_robot: u32,
}

impl Track {
    pub fn from_contact(id: u32, contact: &Contact) -> Self {
        Self {
            id,
            mean: contact.position,
            covariance: contact.covariance,
            class: contact.class,
            status: TrackStatus::Candidate,
            match_times: vec![contact.timestamp],
            last_update: contact.timestamp,
            chain_len: 1,
            confidence: contact.confidence,
            source_robot: contact.source_robot,
        }
    }

    pub fn is_live(&self) -> bool {
        self.status != TrackStatus::Dead
    }

    pub fn update_count(&self) -> usize {
        self.match_times.len()
    }
}

/// Constant-position prediction with zero process noise: the state is unchanged.
pub fn predict(track: &Track, dt: f64) -> Result<Track, TrackerError> {
    if dt < 0.0 {
        return Err(TrackerError::NegativeInterval(dt));
    }
    Ok(track.clone())
}

fn innovation_inverse(p: &Matrix3<f64>, r: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let s = p + r;
    let s = (s + s.transpose()) * 0.5;
    s.cholesky().map(|c| c.inverse())
}

/// Squared Mahalanobis distance of a contact from a track.
pub fn mahalanobis_sq(track: &Track, contact: &Contact) -> Option<f64> {
    let s_inv = innovation_inverse(&track.covariance, &contact.covariance)?;
    let y = contact.position - track.mean;
    Some((y.transpose() * s_inv * y)[(0, 0)])
}

/// Linear Kalman measurement update with `H = I`, using the Joseph form for
/// the covariance.
pub fn update(track: &Track, contact: &Contact) -> Result<Track, TrackerError> {
    if track.class != contact.class {
        return Err(TrackerError::ClassMismatch {
            track: track.class,
            contact: contact.class,
        });
    }
    let last = *track.match_times.last().expect("tracks hold at least one match");
    if contact.timestamp <= last {
        return Err(TrackerError::TimeRegression {
            now: contact.timestamp,
            previous: last,
        });
    }
    let p = &track.covariance;
    let r = &contact.covariance;
    let s_inv = innovation_inverse(p, r).ok_or(TrackerError::NumericalDegeneracy)?;
    let k = p * s_inv;
    let i_k = Matrix3::identity() - k;
    let mean = track.mean + k * (contact.position - track.mean);
    let cov = i_k * p * i_k.transpose() + k * r * k.transpose();
    let mut out = track.clone();
    out.mean = mean;
    out.covariance = (cov + cov.transpose()) * 0.5;
    out.match_times.push(contact.timestamp);
    out.last_update = contact.timestamp;
    let n = out.match_times.len() as f64;
    out.confidence += (contact.confidence - out.confidence) / n;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LifecycleParams {
    pub n_confirm: usize,
    pub max_gap: f64,
    pub death_timeout: f64,
    /// Squared Mahalanobis gate (3 DOF).
    pub gate_threshold: f64,
    /// Report a confirmed track on every k-th update.
    pub report_every: usize,
}

impl Default for LifecycleParams {
    fn default() -> Self {
        Self {
            n_confirm: 3,
            max_gap: 30.0,
            death_timeout: 120.0,
            gate_threshold: 14.16,
            report_every: 1,
        }
    }
}

impl LifecycleParams {
    pub fn validate(&self) -> Result<(), TrackerError> {
        let mut errs = Vec::new();
        if self.n_confirm < 1 {
            errs.push("n_confirm must be >= 1".to_string());
        }
        if !(self.max_gap > 0.0) {
            errs.push(format!("max_gap {} must be positive", self.max_gap));
        }
        if !(self.death_timeout > self.max_gap) {
            errs.push(format!(
                "death_timeout {} must exceed max_gap {}",
                self.death_timeout, self.max_gap
            ));
        }
        if !(self.gate_threshold > 0.0) {
            errs.push(format!("gate_threshold {} must be positive", self.gate_threshold));
        }
        if self.report_every < 1 {
            errs.push("report_every must be >= 1".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(TrackerError::InvalidParams(errs.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Association {
    /// `(track index, contact index)` into the slices passed to [`associate`].
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_contacts: Vec<usize>,
    pub unmatched_tracks: Vec<usize>,
}

/// Gated one-to-one association minimizing the summed squared Mahalanobis
/// distance. Only same-class pairs within the gate are admissible.
pub fn associate(tracks: &[Track], contacts: &[Contact], gate_threshold: f64) -> Association {
    let mut out = Association::default();
    if tracks.is_empty() || contacts.is_empty() {
        out.unmatched_tracks = (0..tracks.len()).collect();
        out.unmatched_contacts = (0..contacts.len()).collect();
        return out;
    }
    let gated = |t: &Track, c: &Contact| -> Option<f64> {
        if t.class != c.class {
            return None;
        }
        mahalanobis_sq(t, c).filter(|d| *d <= gate_threshold)
    };
    // inadmissible pairs cost more than any complete set of admissible ones,
    // so the solver maximizes the number of gated matches first
    let blocked = (tracks.len().min(contacts.len()) as f64 + 1.0) * (gate_threshold + 1.0) * 2.0;
    let dist: Vec<Vec<Option<f64>>> = tracks
        .iter()
        .map(|t| contacts.iter().map(|c| gated(t, c)).collect())
        .collect();
    let cost: Vec<Vec<f64>> = dist
        .iter()
        .map(|row| row.iter().map(|d| d.unwrap_or(blocked)).collect())
        .collect();
    let assignment = min_cost_assignment(&cost);
    let mut contact_used = vec![false; contacts.len()];
    for (ti, col) in assignment.into_iter().enumerate() {
        match col {
            Some(ci) if dist[ti][ci].is_some() => {
                out.pairs.push((ti, ci));
                contact_used[ci] = true;
            }
            _ => out.unmatched_tracks.push(ti),
        }
    }
    out.unmatched_contacts = (0..contacts.len()).filter(|&c| !contact_used[c]).collect();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TrackEvent {
    Born { id: u32, t: f64 },
    Updated { id: u32, t: f64, matches: usize },
    Confirmed { id: u32, t: f64 },
    Died { id: u32, t: f64 },
    /// A contact that gated to a track already served in the same step.
    Suppressed { t: f64 },
}

/// Per-robot track store.
#[derive(Debug, Clone)]
pub struct TrackDatabase {
    tracks: BTreeMap<u32, Track>,
    next_id: u32,
    params: LifecycleParams,
    last_step: Option<f64>,
}

impl TrackDatabase {
    pub fn new(params: LifecycleParams) -> Result<Self, TrackerError> {
        params.validate()?;
        Ok(Self {
            tracks: BTreeMap::new(),
            next_id: 1,
            params,
            last_step: None,
        })
    }

    pub fn params(&self) -> &LifecycleParams {
        &self.params
    }

    pub fn tracks(&self) -> impl Iterator<Item = &Track> {
        self.tracks.values()
    }

    pub fn track(&self, id: u32) -> Option<&Track> {
        self.tracks.get(&id)
    }

    pub fn confirmed(&self) -> impl Iterator<Item = &Track> {
        self.tracks.values().filter(|t| t.status == TrackStatus::Confirmed)
    }

    /// Advances the database to `t_now`, folding in `contacts`.
    ///
    /// Order within a step: timeouts, joint association and updates, births.
    /// An unmatched contact that gates to a track already live (or born
    /// earlier in this step) is treated as a duplicate view and suppressed.
    pub fn lifecycle_step(&mut self, contacts: &[Contact], t_now: f64) -> Result<Vec<TrackEvent>, TrackerError> {
        if let Some(prev) = self.last_step {
            if t_now < prev {
                return Err(TrackerError::TimeRegression { now: t_now, previous: prev });
            }
        }
        if let Some(c) = contacts.iter().find(|c| c.timestamp > t_now) {
            return Err(TrackerError::TimeRegression {
                now: t_now,
                previous: c.timestamp,
            });
        }
        self.last_step = Some(t_now);
        let params = self.params;
        let mut events = Vec::new();

        for track in self.tracks.values_mut().filter(|t| t.is_live()) {
            if t_now - track.last_update >= params.death_timeout {
                track.status = TrackStatus::Dead;
                events.push(TrackEvent::Died { id: track.id, t: t_now });
            }
        }

        let live_ids: Vec<u32> = self.tracks.values().filter(|t| t.is_live()).map(|t| t.id).collect();
        let live: Vec<Track> = live_ids.iter().map(|id| self.tracks[id].clone()).collect();
        let assoc = associate(&live, contacts, params.gate_threshold);

        let mut leftovers = assoc.unmatched_contacts.clone();
        let mut pairs = assoc.pairs.clone();
        pairs.sort_unstable();
        for (ti, ci) in pairs {
            let contact = &contacts[ci];
            let id = live_ids[ti];
            let track = &self.tracks[&id];
            let prev_match = *track.match_times.last().expect("non-empty");
            if contact.timestamp <= prev_match {
                // same capture already folded in; keep it out of the births too
                events.push(TrackEvent::Suppressed { t: t_now });
                continue;
            }
            let mut updated = update(track, contact)?;
            if updated.status == TrackStatus::Candidate {
                if contact.timestamp - prev_match > params.max_gap {
                    updated.chain_len = 1;
                } else {
                    updated.chain_len += 1;
                }
            }
            events.push(TrackEvent::Updated {
                id,
                t: t_now,
                matches: updated.update_count(),
            });
            if updated.status == TrackStatus::Candidate && updated.chain_len >= params.n_confirm {
                updated.status = TrackStatus::Confirmed;
                events.push(TrackEvent::Confirmed { id, t: t_now });
            }
            self.tracks.insert(id, updated);
        }

        leftovers.sort_unstable();
        for ci in leftovers {
            let contact = &contacts[ci];
            let duplicate = self.tracks.values().filter(|t| t.is_live()).any(|t| {
                t.class == contact.class && mahalanobis_sq(t, contact).is_some_and(|d| d <= params.gate_threshold)
            });
            if duplicate {
                events.push(TrackEvent::Suppressed { t: t_now });
                continue;
            }
            let id = self.next_id;
            self.next_id += 1;
            let mut track = Track::from_contact(id, contact);
            events.push(TrackEvent::Born { id, t: t_now });
            if params.n_confirm <= 1 {
                track.status = TrackStatus::Confirmed;
                events.push(TrackEvent::Confirmed { id, t: t_now });
            }
            self.tracks.insert(id, track);
        }
        Ok(events)
    }

    /// Feeds a contact stream grouped by timestamp, one step per distinct time.
    pub fn ingest_stream(&mut self, contacts: &[Contact]) -> Result<Vec<TrackEvent>, TrackerError> {
        let mut sorted: Vec<&Contact> = contacts.iter().collect();
        sorted.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        let mut events = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let t = sorted[i].timestamp;
            let mut j = i;
            while j < sorted.len() && sorted[j].timestamp == t {
                j += 1;
            }
            let group: Vec<Contact> = sorted[i..j].iter().map(|c| (*c).clone()).collect();
            events.extend(self.lifecycle_step(&group, t)?);
            i = j;
        }
        Ok(events)
    }

    /// Confirmed tracks that should be reported after a step: newly confirmed
    /// ones and every `report_every`-th update of a confirmed track.
    pub fn due_reports(&self, events: &[TrackEvent]) -> Vec<&Track> {
        let k = self.params.report_every.max(1);
        let mut ids = Vec::new();
        for e in events {
            match *e {
                TrackEvent::Confirmed { id, .. } => ids.push(id),
                TrackEvent::Updated { id, matches, .. } => {
                    let was_confirmed_before = !events
                        .iter()
                        .any(|e2| matches!(e2, TrackEvent::Confirmed { id: cid, .. } if *cid == id));
                    if was_confirmed_before
                        && self.tracks.get(&id).is_some_and(|t| t.status == TrackStatus::Confirmed)
                        && matches % k == 0
                    {
                        ids.push(id);
                    }
                }
                _ => {}
            }
        }
        ids.sort_unstable();
        ids.dedup();
        ids.iter().filter_map(|id| self.tracks.get(id)).collect()
    }
}
