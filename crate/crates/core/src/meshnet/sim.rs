//! Discrete-event execution of report traffic over a star of links.

use super::cop::{cop_ingest, CopObject, CopState};
use super::link::{Link, LinkModel, SendOutcome};
use super::{MeshError, TrackReport};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SendEvent {
    pub t_send: f64,
    pub link: usize,
    pub report: TrackReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Send {
        t: f64,
        link: usize,
        seq: u64,
        robot_id: u32,
        track_id: u32,
        payload_bytes: u32,
        /// Hex of the wire record.
        record: String,
    },
    Drop {
        t: f64,
        link: usize,
        seq: u64,
    },
    Deliver {
        t: f64,
        link: usize,
        seq: u64,
    },
}

impl LogRecord {
    pub fn time(&self) -> f64 {
        match self {
            LogRecord::Send { t, .. } | LogRecord::Drop { t, .. } | LogRecord::Deliver { t, .. } => *t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CopSnapshot {
    pub t: f64,
    pub objects: Vec<CopObject>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkRun {
    pub log: Vec<LogRecord>,
    pub timeline: Vec<CopSnapshot>,
    pub cop: CopState,
    pub sends: usize,
    pub deliveries: usize,
    pub drops: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending {
    t: f64,
    seq: u64,
    link: usize,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.t.total_cmp(&other.t).then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct Sim {
    run: NetworkRun,
    heap: BinaryHeap<Reverse<Pending>>,
    in_flight: BTreeMap<u64, TrackReport>,
    merge_radius: f64,
}

impl Sim {
    fn deliver_until(&mut self, t: f64) -> Result<(), MeshError> {
        while let Some(Reverse(p)) = self.heap.peek().copied() {
            if p.t > t {
                break;
            }
            self.heap.pop();
            let report = self.in_flight.remove(&p.seq).expect("pending message is in flight");
            cop_ingest(&mut self.run.cop, &report, p.t, self.merge_radius)?;
            self.run.deliveries += 1;
            self.run.log.push(LogRecord::Deliver {
                t: p.t,
                link: p.link,
                seq: p.seq,
            });
            self.run.timeline.push(CopSnapshot {
                t: p.t,
                objects: self.run.cop.objects.clone(),
            });
        }
        Ok(())
    }
}

/// Sends must be non-decreasing in time. Deliveries falling due at a send's
/// time are processed before that send.
pub fn run_network(events: &[SendEvent], links: &[LinkModel], merge_radius: f64) -> Result<NetworkRun, MeshError> {
    let mut live: Vec<Link> = links.iter().map(|m| Link::new(*m)).collect::<Result<_, _>>()?;
    let mut sim = Sim {
        run: NetworkRun::default(),
        heap: BinaryHeap::new(),
        in_flight: BTreeMap::new(),
        merge_radius,
    };
    let mut prev = f64::NEG_INFINITY;
    for (seq, ev) in events.iter().enumerate() {
        let seq = seq as u64;
        if ev.t_send < prev {
            return Err(MeshError::Unordered {
                index: seq as usize,
                t: ev.t_send,
                previous: prev,
            });
        }
        prev = ev.t_send;
        let link = live.get_mut(ev.link).ok_or(MeshError::UnknownLink(ev.link))?;
        ev.report.validate()?;
        sim.deliver_until(ev.t_send)?;
        sim.run.sends += 1;
        sim.run.log.push(LogRecord::Send {
            t: ev.t_send,
            link: ev.link,
            seq,
            robot_id: ev.report.robot_id,
            track_id: ev.report.track_id,
            payload_bytes: ev.report.payload_bytes,
            record: hex::encode(ev.report.encode()),
        });
        match link.send(ev.report.payload_bytes, ev.t_send)? {
            SendOutcome::Dropped => {
                sim.run.drops += 1;
                sim.run.log.push(LogRecord::Drop {
                    t: ev.t_send,
                    link: ev.link,
                    seq,
                });
            }
            SendOutcome::Delivered { t_deliver } => {
                sim.in_flight.insert(seq, ev.report);
                sim.heap.push(Reverse(Pending {
                    t: t_deliver,
                    seq,
                    link: ev.link,
                }));
            }
        }
    }
    sim.deliver_until(f64::INFINITY)?;
    Ok(sim.run)
}

pub fn write_log(log: &[LogRecord], mut w: impl std::io::Write) -> std::io::Result<()> {
    for r in log {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_log(text: &str) -> Result<Vec<LogRecord>, MeshError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| MeshError::Log { index: i, reason: e.to_string() }))
        .collect()
}

/// Rebuilds the picture from a delivery log alone.
pub fn replay_log(log: &[LogRecord], merge_radius: f64) -> Result<CopState, MeshError> {
    let mut sent = BTreeMap::new();
    let mut cop = CopState::new();
    let mut prev = f64::NEG_INFINITY;
    for (i, rec) in log.iter().enumerate() {
        let t = rec.time();
        if !(t >= prev) {
            return Err(MeshError::Unordered { index: i, t, previous: prev });
        }
        prev = t;
        match rec {
            LogRecord::Send { seq, record, .. } => {
                let bytes = hex::decode(record).map_err(|e| MeshError::Log { index: i, reason: e.to_string() })?;
                let report = TrackReport::decode(&bytes).map_err(|e| MeshError::Log { index: i, reason: e.to_string() })?;
                sent.insert(*seq, report);
            }
            LogRecord::Drop { seq, .. } => {
                sent.remove(seq);
            }
            LogRecord::Deliver { seq, .. } => {
                let report = sent.remove(seq).ok_or_else(|| MeshError::Log {
                    index: i,
                    reason: format!("delivery of unknown message {seq}"),
                })?;
                cop_ingest(&mut cop, &report, t, merge_radius)?;
            }
        }
    }
    Ok(cop)
}
