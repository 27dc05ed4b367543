use crate::time::SimTime;
use crate::topology::NodeId;

use super::{FlowId, FlowSpec, ModelError};

/// Fraction of a flow's size a settlement may overdrain before it counts as
/// a clamp firing, i.e. a missed completion rather than rounding noise.
pub const CLAMP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowState {
    /// Opened but not yet started.
    Pending,
    Transmitting,
    Delivered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    pub(crate) src_ix: usize,
    pub(crate) dst_ix: usize,
    pub size: u64,
    pub tag: u64,
    /// Bytes still to transmit, as of `last_settle`.
    pub remaining: f64,
    /// Bytes drained by all settlements so far.
    pub drained: f64,
    /// Bits per second; zero until started.
    pub rate: f64,
    pub last_settle: SimTime,
    /// Bumped on every rate change; completion events carry the version they
    /// were scheduled under.
    pub version: u64,
    pub state: FlowState,
    pub requested: SimTime,
}

/// Result of one settlement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settled {
    /// Bytes drained beyond what remained, clamped away. Zero normally.
    pub overdrain: f64,
}

impl Flow {
    pub(crate) fn new(id: FlowId, spec: FlowSpec, src_ix: usize, dst_ix: usize, requested: SimTime) -> Self {
        Flow {
            id,
            src: spec.src,
            dst: spec.dst,
            src_ix,
            dst_ix,
            size: spec.size,
            tag: spec.tag,
            remaining: spec.size as f64,
            drained: 0.0,
            rate: 0.0,
            last_settle: requested,
            version: 0,
            state: FlowState::Pending,
            requested,
        }
    }

    /// Drains the bytes sent at the current rate since the last settlement.
    pub fn settle(&mut self, now: SimTime) -> Result<Settled, ModelError> {
        if now < self.last_settle {
            return Err(ModelError::TimeRegression { flow: self.id, now, last: self.last_settle });
        }
        let sent = self.rate * now.since(self.last_settle) / 8.0;
        self.drained += sent;
        let left = self.remaining - sent;
        self.last_settle = now;
        if left < 0.0 {
            self.remaining = 0.0;
            Ok(Settled { overdrain: -left })
        } else {
            self.remaining = left;
            Ok(Settled { overdrain: 0.0 })
        }
    }

    /// Whether `overdrain` bytes are more than rounding noise for this flow.
    pub fn is_clamp(&self, overdrain: f64) -> bool {
        overdrain > CLAMP_TOLERANCE * self.size as f64
    }

    /// Seconds until the remaining bytes are transmitted at the current rate.
    pub fn time_to_finish(&self) -> f64 {
        8.0 * self.remaining / self.rate
    }

    pub fn byte_error(&self) -> f64 {
        (self.drained - self.size as f64).abs() / self.size as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow(size: u64, rate: f64) -> Flow {
        let spec = FlowSpec { src: NodeId(0), dst: NodeId(1), size, tag: 0 };
        let mut f = Flow::new(FlowId(0), spec, 0, 1, SimTime::ZERO);
        f.rate = rate;
        f.state = FlowState::Transmitting;
        f
    }

    #[test]
    fn settle_drains_at_rate() {
        let mut f = flow(125_000, 1e6);
        let s = f.settle(SimTime::from_secs(0.5)).unwrap();
        assert_eq!(f.remaining, 62_500.0);
        assert_eq!(s.overdrain, 0.0);
        assert_eq!(f.last_settle, SimTime::from_secs(0.5));
    }

    #[test]
    fn settle_zero_elapsed_is_identity() {
        let mut f = flow(125_000, 1e6);
        f.settle(SimTime::from_secs(0.25)).unwrap();
        let before = f.clone();
        f.settle(SimTime::from_secs(0.25)).unwrap();
        assert_eq!(f, before);
    }

    #[test]
    fn settle_clamps_overdrain() {
        let mut f = flow(100, 1e6);
        let s = f.settle(SimTime::from_secs(1.0)).unwrap();
        assert_eq!(f.remaining, 0.0);
        assert_eq!(s.overdrain, 125_000.0 - 100.0);
        assert!(f.is_clamp(s.overdrain));
        assert!(!f.is_clamp(1e-9));
    }

    #[test]
    fn settle_rejects_time_regression() {
        let mut f = flow(100, 1e6);
        f.settle(SimTime::from_secs(1.0)).unwrap();
        assert!(matches!(f.settle(SimTime::from_secs(0.5)), Err(ModelError::TimeRegression { .. })));
    }
}
