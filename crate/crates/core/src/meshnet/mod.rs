//! Simulated robot-to-operator links and the merged operating picture.

pub mod cop;
pub mod link;
pub mod sim;
pub mod wire;

pub use cop::{cop_ingest, CopObject, CopState};
pub use link::{Link, LinkModel, SendOutcome};
pub use sim::{read_log, replay_log, run_network, write_log, CopSnapshot, LogRecord, NetworkRun, SendEvent};
pub use wire::TrackReport;

/// Default thumbnail payload per report.
pub const DEFAULT_PAYLOAD_BYTES: u32 = 64 * 1024;
pub const DEFAULT_MERGE_RADIUS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("invalid report: {0}")]
    InvalidReport(String),
    #[error("invalid link model: {0}")]
    InvalidLink(String),
    #[error("invalid send: {0}")]
    InvalidSend(String),
    #[error("unknown link {0}")]
    UnknownLink(usize),
    #[error("wire format: {0}")]
    Wire(String),
    #[error("event {index} at t={t} precedes previous time {previous}")]
    Unordered { index: usize, t: f64, previous: f64 },
    #[error("log record {index}: {reason}")]
    Log { index: usize, reason: String },
}
