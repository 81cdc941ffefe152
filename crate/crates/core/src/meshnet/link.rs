//! Lossy, bandwidth-limited point-to-point link.

use super::MeshError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkModel {
    pub latency_base: f64,
    /// Half-width of the uniform jitter added to the base latency.
    pub latency_jitter: f64,
    pub loss_prob: f64,
    /// Bytes per second.
    pub bandwidth: f64,
    pub rng_seed: u64,
}

impl Default for LinkModel {
    fn default() -> Self {
        Self {
            latency_base: 0.05,
            latency_jitter: 0.02,
            loss_prob: 0.05,
            bandwidth: 1.0e6,
            rng_seed: 0,
        }
    }
}

impl LinkModel {
    pub fn validate(&self) -> Result<(), MeshError> {
        if !(self.latency_base >= 0.0) || !(self.latency_jitter >= 0.0) {
            return Err(MeshError::InvalidLink(format!(
                "latency base {} and jitter {} must be non-negative",
                self.latency_base, self.latency_jitter
            )));
        }
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(MeshError::InvalidLink(format!("loss probability {} outside [0, 1]", self.loss_prob)));
        }
        if !(self.bandwidth > 0.0) {
            return Err(MeshError::InvalidLink(format!("bandwidth {} must be positive", self.bandwidth)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SendOutcome {
    Delivered { t_deliver: f64 },
    Dropped,
}

/// A link in flight. Messages are serialized onto the channel in send order;
/// a lost message still occupies the channel while it is transmitted.
#[derive(Debug, Clone)]
pub struct Link {
    model: LinkModel,
    rng: ChaCha8Rng,
    busy_until: f64,
    last_delivery: f64,
}

impl Link {
    pub fn new(model: LinkModel) -> Result<Self, MeshError> {
        model.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(model.rng_seed),
            model,
            busy_until: 0.0,
            last_delivery: f64::NEG_INFINITY,
        })
    }

    pub fn model(&self) -> &LinkModel {
        &self.model
    }

    pub fn send(&mut self, payload_bytes: u32, t_send: f64) -> Result<SendOutcome, MeshError> {
        if !(t_send >= 0.0) {
            return Err(MeshError::InvalidSend(format!("send time {t_send} must be non-negative")));
        }
        let start = t_send.max(self.busy_until);
        let tx_end = start + payload_bytes as f64 / self.model.bandwidth;
        self.busy_until = tx_end;
        let lost: f64 = self.rng.random();
        if lost < self.model.loss_prob {
            return Ok(SendOutcome::Dropped);
        }
        let j = self.model.latency_jitter;
        let jitter = if j > 0.0 { self.rng.random_range(-j..=j) } else { 0.0 };
        let latency = (self.model.latency_base + jitter).max(0.0);
        let t_deliver = (tx_end + latency).max(self.last_delivery);
        self.last_delivery = t_deliver;
        Ok(SendOutcome::Delivered { t_deliver })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(loss: f64, seed: u64) -> LinkModel {
        LinkModel {
            latency_base: 0.0,
            latency_jitter: 0.0,
            loss_prob: loss,
            bandwidth: 1000.0,
            rng_seed: seed,
        }
    }

    #[test]
    fn idle_link_is_transmission_time() {
        let mut l = Link::new(model(0.0, 1)).unwrap();
        assert_eq!(l.send(500, 2.0).unwrap(), SendOutcome::Delivered { t_deliver: 2.5 });
        // queued behind the first
        assert_eq!(l.send(500, 2.1).unwrap(), SendOutcome::Delivered { t_deliver: 3.0 });
    }

    #[test]
    fn total_loss() {
        let mut l = Link::new(model(1.0, 1)).unwrap();
        assert!((0..100).all(|i| l.send(10, i as f64).unwrap() == SendOutcome::Dropped));
    }

    #[test]
    fn fifo_with_jitter() {
        let mut m = model(0.2, 5);
        m.latency_base = 0.05;
        m.latency_jitter = 0.05;
        m.bandwidth = 1e6;
        let mut l = Link::new(m).unwrap();
        let mut last = f64::NEG_INFINITY;
        for i in 0..2000 {
            if let SendOutcome::Delivered { t_deliver } = l.send(100, i as f64 * 1e-3).unwrap() {
                assert!(t_deliver >= last);
                assert!(t_deliver >= i as f64 * 1e-3);
                last = t_deliver;
            }
        }
    }

    #[test]
    fn validation() {
        assert!(Link::new(model(1.5, 0)).is_err());
        assert!(Link::new(LinkModel { bandwidth: 0.0, ..Default::default() }).is_err());
        assert!(Link::new(LinkModel { latency_base: -1.0, ..Default::default() }).is_err());
        let mut l = Link::new(model(0.0, 0)).unwrap();
        assert!(l.send(1, -1.0).is_err());
    }
}
