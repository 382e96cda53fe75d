//! Sender-side congestion controllers and receiver-side ECN feedback.
//!
//! Every controller implements [`CongestionControl`]. The transport in
//! [`crate::harness`] owns loss detection and round accounting and hands
//! each controller pre-digested [`AckSample`]s and [`LossSample`]s.

mod bbr;
mod cubic;
mod fallback;
mod feedback;
mod prague;
mod reno;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::des::SimTime;
use crate::packet::{Ecn, MSS};

pub use bbr::{bbr_pacing_rate, Bbr, BbrConfig, BbrMode, BbrVersion, ProbeBwPhase};
pub use cubic::{cubic_k, cubic_window, Cubic, CubicState, CUBIC_BETA, CUBIC_C};
pub use fallback::{fallback_classify, FallbackConfig, FallbackDetector, QueueClass};
pub use feedback::{receiver_feedback, AckFeedback, FeedbackMode, Receiver};
pub use prague::{prague_ai_scale, prague_alpha_update, prague_on_round_with_marks, Prague, PragueConfig, PragueMode};
pub use reno::Reno;

/// Every controller starts with this window.
pub const INITIAL_CWND: f64 = 10.0;

/// No controller applies a window below this.
pub const MIN_CWND: f64 = 2.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CcError {
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfUnitRange { name: &'static str, value: f64 },
}

/// What a controller wants the transport to do next.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CcDecision {
    /// Congestion window in packets. Fractional internally.
    pub cwnd: f64,
    /// Pacing rate in bits/s; `None` means pure ACK clocking.
    pub pacing_rate: Option<f64>,
    pub ect: Ecn,
}

impl CcDecision {
    /// The whole-packet window the transport enforces.
    pub fn applied_cwnd(&self) -> u32 {
        self.cwnd.max(MIN_CWND).floor() as u32
    }
}

/// Delivery-rate sample in the style of BBR's rate estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateSample {
    pub delivery_rate_bps: f64,
    pub interval: SimTime,
    pub delivered_bytes: u64,
    /// Packets in flight when the acknowledged packet was sent.
    pub prior_inflight: u32,
}

/// One acknowledged data packet, as seen by the controller.
#[derive(Clone, Copy, Debug)]
pub struct AckSample {
    pub fb: AckFeedback,
    /// Transmission index of the acknowledged packet.
    pub acked_index: u64,
    /// Index the next transmission will use.
    pub next_index: u64,
    /// True when this ACK closes a round trip.
    pub round_ended: bool,
    pub round: u64,
    /// Packets in flight after this ACK was processed.
    pub inflight: u32,
    pub rate: Option<RateSample>,
}

impl AckSample {
    pub fn acked_packets(&self) -> f64 {
        self.fb.bytes_acked as f64 / MSS as f64
    }

    /// A minimal sample, handy in tests and examples.
    pub fn simple(fb: AckFeedback, acked_index: u64, next_index: u64, round_ended: bool) -> Self {
        AckSample { fb, acked_index, next_index, round_ended, round: 0, inflight: 0, rate: None }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LossSample {
    /// Transmission index of the (first) lost packet.
    pub lost_index: u64,
    pub next_index: u64,
    pub inflight: u32,
    /// Retransmission timeout rather than duplicate-ACK detection.
    pub rto: bool,
}

impl LossSample {
    pub fn fast(lost_index: u64, next_index: u64, inflight: u32) -> Self {
        LossSample { lost_index, next_index, inflight, rto: false }
    }
}

/// The uniform controller contract.
pub trait CongestionControl: fmt::Debug + Send {
    fn on_ack(&mut self, ack: &AckSample, now: SimTime) -> CcDecision;

    fn on_loss(&mut self, loss: &LossSample, now: SimTime) -> CcDecision;

    fn decision(&self) -> CcDecision;

    /// How the receiver must report congestion marks to this sender.
    fn feedback_mode(&self) -> FeedbackMode;

    fn name(&self) -> &'static str;

    /// Number of multiplicative decreases applied so far.
    fn reductions(&self) -> u64;

    /// Prague only: the current response mode.
    fn prague_mode(&self) -> Option<PragueMode> {
        None
    }
}

/// Admits at most one multiplicative decrease per round trip: after a
/// reduction, congestion signals about packets sent before it are ignored.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReductionGate {
    recovery_point: u64,
    armed: bool,
}

impl ReductionGate {
    /// Returns true (and closes the gate until `next_index` is acknowledged)
    /// if a signal about packet `index` warrants a new reduction.
    pub fn try_enter(&mut self, index: u64, next_index: u64) -> bool {
        if self.armed && index < self.recovery_point {
            return false;
        }
        self.armed = true;
        self.recovery_point = next_index;
        true
    }

    /// True while acknowledgments still cover packets sent before the last
    /// reduction.
    pub fn in_recovery(&self, acked_index: u64) -> bool {
        self.armed && acked_index < self.recovery_point
    }

    pub fn force(&mut self, next_index: u64) {
        self.armed = true;
        self.recovery_point = next_index;
    }
}

/// Selects a controller implementation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CcKind {
    Reno,
    Cubic,
    Prague,
    #[serde(rename = "bbr1")]
    BbrV1,
    #[serde(rename = "bbr2")]
    BbrV2,
}

impl fmt::Display for CcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CcKind::Reno => "reno",
            CcKind::Cubic => "cubic",
            CcKind::Prague => "prague",
            CcKind::BbrV1 => "bbr1",
            CcKind::BbrV2 => "bbr2",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_admits_one_reduction_per_round() {
        let mut g = ReductionGate::default();
        assert!(g.try_enter(5, 20));
        assert!(!g.try_enter(6, 21));
        assert!(!g.try_enter(19, 22));
        assert!(g.in_recovery(19));
        assert!(!g.in_recovery(20));
        assert!(g.try_enter(20, 40));
    }

    #[test]
    fn applied_window_is_floored() {
        let d = CcDecision { cwnd: 0.3, pacing_rate: None, ect: Ecn::NotEct };
        assert_eq!(d.applied_cwnd(), 2);
        let d = CcDecision { cwnd: 10.9, pacing_rate: None, ect: Ecn::NotEct };
        assert_eq!(d.applied_cwnd(), 10);
    }
}
