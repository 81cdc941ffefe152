//! Fixed-layout binary encoding of track reports.
//!
//! ```text
//! u32 length          bytes that follow (always 73)
//! u32 robot_id
//! u32 track_id
//! u8  class           0 person, 1 e_gator, 2 pickup_truck
//! f64 x3 position     easting, northing, up
//! f64 x3 covariance   diagonal
//! f32 confidence
//! f64 timestamp
//! u32 payload_bytes
//! ```
//!
//! All fields little-endian.

use super::MeshError;
use crate::fusion::ObjectClass;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub const BODY_LEN: usize = 73;
pub const RECORD_LEN: usize = BODY_LEN + 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub robot_id: u32,
    pub track_id: u32,
    pub class: ObjectClass,
    pub position: Vector3<f64>,
    pub covariance_diag: Vector3<f64>,
    pub confidence: f32,
    pub timestamp: f64,
    pub payload_bytes: u32,
}

impl TrackReport {
    pub fn validate(&self) -> Result<(), MeshError> {
        if self.payload_bytes == 0 {
            return Err(MeshError::InvalidReport("payload_bytes must be positive".into()));
        }
        if !self.covariance_diag.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(MeshError::InvalidReport(format!(
                "covariance diagonal must be positive, got {:?}",
                self.covariance_diag.as_slice()
            )));
        }
        if !self.position.iter().all(|v| v.is_finite()) || !self.timestamp.is_finite() {
            return Err(MeshError::InvalidReport("non-finite position or timestamp".into()));
        }
        Ok(())
    }

    pub fn covariance_trace(&self) -> f64 {
        self.covariance_diag.sum()
    }

    pub fn encode(&self) -> [u8; RECORD_LEN] {
        let mut out = [0u8; RECORD_LEN];
        let mut at = 0;
        let mut put = |b: &[u8]| {
            out[at..at + b.len()].copy_from_slice(b);
            at += b.len();
        };
        put(&(BODY_LEN as u32).to_le_bytes());
        put(&self.robot_id.to_le_bytes());
        put(&self.track_id.to_le_bytes());
        put(&[self.class.code()]);
        for v in self.position.iter().chain(self.covariance_diag.iter()) {
            put(&v.to_le_bytes());
        }
        put(&self.confidence.to_le_bytes());
        put(&self.timestamp.to_le_bytes());
        put(&self.payload_bytes.to_le_bytes());
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Self, MeshError> {
        if buf.len() != RECORD_LEN {
            return Err(MeshError::Wire(format!("record is {} bytes, expected {RECORD_LEN}", buf.len())));
        }
        let mut at = 0;
        let mut take = |n: usize| {
            let s = &buf[at..at + n];
            at += n;
            s
        };
        let u32_of = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
        let f64_of = |s: &[u8]| f64::from_le_bytes(s.try_into().expect("8 bytes"));
        let len = u32_of(take(4));
        if len as usize != BODY_LEN {
            return Err(MeshError::Wire(format!("length prefix {len}, expected {BODY_LEN}")));
        }
        let robot_id = u32_of(take(4));
        let track_id = u32_of(take(4));
        let code = take(1)[0];
        let class = ObjectClass::from_code(code).ok_or_else(|| MeshError::Wire(format!("unknown class code {code}")))?;
        let mut v = [0.0; 6];
        for x in &mut v {
            *x = f64_of(take(8));
        }
        let confidence = f32::from_le_bytes(take(4).try_into().expect("4 bytes"));
        let timestamp = f64_of(take(8));
        let payload_bytes = u32_of(take(4));
        Ok(Self {
            robot_id,
            track_id,
            class,
            position: Vector3::new(v[0], v[1], v[2]),
            covariance_diag: Vector3::new(v[3], v[4], v[5]),
            confidence,
            timestamp,
            payload_bytes,
        })
    }
}
