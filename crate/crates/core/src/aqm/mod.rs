//! Bottleneck queue disciplines behind one enqueue/dequeue contract.
//!
//! All disciplines account buffer occupancy in bytes against a single
//! `buffer_limit` and decide marks and drops at dequeue time from the head
//! packet's sojourn.

mod codel;
mod dualpi2;
mod fifo;
mod fq;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::des::SimTime;
use crate::packet::{Packet, MSS};

pub use codel::{codel_control_law, CodelQueue, CodelState};
pub use dualpi2::{dualpi2_classify, dualpi2_pi_update, dualpi2_probabilities, DualPi2, DualQueue, Pi2State};
pub use fifo::Fifo;
pub use fq::{fq_select, FairQueue};

/// Bytes in one bandwidth-delay product at 100 Mb/s and 10 ms.
pub const BDP_BYTES: u64 = 125_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueueKind {
    Fifo,
    FifoEcn,
    Codel,
    Fq,
    FqCodel,
    #[serde(rename = "dualpi2")]
    DualPi2,
}

impl QueueKind {
    pub const ALL: [QueueKind; 6] =
        [QueueKind::Fifo, QueueKind::FifoEcn, QueueKind::Codel, QueueKind::Fq, QueueKind::FqCodel, QueueKind::DualPi2];

    /// Whether the discipline ever sets CE.
    pub fn marks(self) -> bool {
        !matches!(self, QueueKind::Fifo)
    }
}

impl fmt::Display for QueueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueueKind::Fifo => "fifo",
            QueueKind::FifoEcn => "fifo-ecn",
            QueueKind::Codel => "codel",
            QueueKind::Fq => "fq",
            QueueKind::FqCodel => "fq-codel",
            QueueKind::DualPi2 => "dualpi2",
        })
    }
}

impl FromStr for QueueKind {
    type Err = AqmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QueueKind::ALL
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| AqmError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AqmError {
    #[error("unknown queue discipline '{0}'")]
    UnknownKind(String),
    #[error("buffer limit must be positive")]
    EmptyBuffer,
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("step threshold ({step}) must be below the PI target ({target})")]
    StepAboveTarget { step: SimTime, target: SimTime },
    #[error("c_protection must be in [0, 1], got {0}")]
    BadProtection(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualPi2Config {
    pub pi_target: SimTime,
    pub step_thresh: SimTime,
    pub t_update: SimTime,
    /// Integral gain, applied per update to a delay error in seconds.
    pub alpha_gain: f64,
    /// Proportional gain, applied per update to a delay change in seconds.
    pub beta_gain: f64,
    pub coupling_k: f64,
    /// Share of dequeue opportunities reserved for the classic queue while
    /// both queues are backlogged.
    pub c_protection: f64,
}

impl Default for DualPi2Config {
    fn default() -> Self {
        DualPi2Config {
            pi_target: SimTime::from_millis(5),
            step_thresh: SimTime::from_millis(1),
            t_update: SimTime::from_millis(16),
            alpha_gain: 0.16,
            beta_gain: 3.2,
            coupling_k: 2.0,
            c_protection: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueueConfig {
    pub kind: QueueKind,
    pub buffer_limit: u64,
    pub ecn_threshold: SimTime,
    pub codel_target: SimTime,
    pub codel_interval: SimTime,
    pub dualpi2: DualPi2Config,
    /// DRR quantum for the fair queues.
    pub quantum: u32,
}

impl QueueConfig {
    pub fn new(kind: QueueKind, buffer_limit: u64) -> Self {
        QueueConfig {
            kind,
            buffer_limit,
            ecn_threshold: SimTime::from_millis(5),
            codel_target: SimTime::from_millis(5),
            codel_interval: SimTime::from_millis(100),
            dualpi2: DualPi2Config::default(),
            quantum: MSS,
        }
    }

    /// Buffer sized as a multiple of the 125 kB bandwidth-delay product.
    pub fn for_bdp(kind: QueueKind, bdp_multiple: f64) -> Self {
        QueueConfig::new(kind, (bdp_multiple * BDP_BYTES as f64).round() as u64)
    }

    pub fn validate(&self) -> Result<(), AqmError> {
        if self.buffer_limit == 0 {
            return Err(AqmError::EmptyBuffer);
        }
        for (name, t) in [
            ("ecn_threshold", self.ecn_threshold),
            ("codel_target", self.codel_target),
            ("codel_interval", self.codel_interval),
            ("pi_target", self.dualpi2.pi_target),
            ("t_update", self.dualpi2.t_update),
        ] {
            if t == SimTime::ZERO {
                return Err(AqmError::NonPositive(name));
            }
        }
        if self.quantum == 0 {
            return Err(AqmError::NonPositive("quantum"));
        }
        if self.dualpi2.coupling_k <= 0.0 {
            return Err(AqmError::NonPositive("coupling_k"));
        }
        let d = &self.dualpi2;
        if d.step_thresh >= d.pi_target {
            return Err(AqmError::StepAboveTarget { step: d.step_thresh, target: d.pi_target });
        }
        if !(0.0..=1.0).contains(&d.c_protection) {
            return Err(AqmError::BadProtection(d.c_protection));
        }
        Ok(())
    }
}

/// Outcome of offering a packet to a queue.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnqueueVerdict {
    Accept { marked: bool },
    Drop,
}

/// Running totals kept by every discipline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QueueStats {
    pub enqueued_bytes: u64,
    pub dequeued_bytes: u64,
    pub dropped_bytes: u64,
    pub enqueued_packets: u64,
    pub dequeued_packets: u64,
    pub dropped_packets: u64,
    pub marked_packets: u64,
}

impl QueueStats {
    fn on_enqueue(&mut self, size: u32) {
        self.enqueued_bytes += size as u64;
        self.enqueued_packets += 1;
    }

    fn on_dequeue(&mut self, size: u32, marked: bool) {
        self.dequeued_bytes += size as u64;
        self.dequeued_packets += 1;
        self.marked_packets += marked as u64;
    }

    /// Counts a drop. `admitted` is true when the packet had been enqueued.
    fn on_drop(&mut self, size: u32, admitted: bool) {
        self.dropped_bytes += size as u64;
        self.dropped_packets += 1;
        if !admitted {
            self.enqueued_bytes += size as u64;
            self.enqueued_packets += 1;
        }
    }
}

pub trait QueueDiscipline: fmt::Debug + Send {
    /// Offers `pkt` to the queue. Every packet the call discards, the
    /// arriving one or an evicted one, is pushed onto `dropped`.
    fn enqueue(&mut self, pkt: Packet, now: SimTime, dropped: &mut Vec<Packet>) -> EnqueueVerdict;

    /// Removes the next packet to transmit, with whether it was CE-marked
    /// here. Packets dropped on the way are pushed onto `dropped`.
    fn dequeue(&mut self, now: SimTime, dropped: &mut Vec<Packet>) -> Option<(Packet, bool)>;

    fn len_bytes(&self) -> u64;

    fn len_packets(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len_packets() == 0
    }

    fn stats(&self) -> QueueStats;

    /// Removes everything still buffered, in no particular order.
    fn drain(&mut self) -> Vec<Packet>;

    fn kind(&self) -> QueueKind;
}

pub fn build_queue(cfg: &QueueConfig) -> Result<Box<dyn QueueDiscipline>, AqmError> {
    cfg.validate()?;
    Ok(match cfg.kind {
        QueueKind::Fifo => Box::new(Fifo::new(cfg.buffer_limit, None)),
        QueueKind::FifoEcn => Box::new(Fifo::new(cfg.buffer_limit, Some(cfg.ecn_threshold))),
        QueueKind::Codel => Box::new(CodelQueue::new(cfg)),
        QueueKind::Fq | QueueKind::FqCodel => Box::new(FairQueue::new(cfg)),
        QueueKind::DualPi2 => Box::new(DualPi2::new(cfg)),
    })
}

/// A byte-counted packet FIFO.
#[derive(Clone, Debug, Default)]
pub(crate) struct PacketQueue {
    pkts: VecDeque<Packet>,
    bytes: u64,
}

impl PacketQueue {
    pub(crate) fn push(&mut self, pkt: Packet) {
        self.bytes += pkt.size as u64;
        self.pkts.push_back(pkt);
    }

    pub(crate) fn pop(&mut self) -> Option<Packet> {
        let p = self.pkts.pop_front()?;
        self.bytes -= p.size as u64;
        Some(p)
    }

    pub(crate) fn head(&self) -> Option<&Packet> {
        self.pkts.front()
    }

    pub(crate) fn bytes(&self) -> u64 {
        self.bytes
    }

    pub(crate) fn len(&self) -> usize {
        self.pkts.len()
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.pkts.is_empty()
    }

    pub(crate) fn head_sojourn(&self, now: SimTime) -> SimTime {
        self.head().map_or(SimTime::ZERO, |p| p.sojourn(now))
    }

    pub(crate) fn take_all(&mut self) -> Vec<Packet> {
        self.bytes = 0;
        self.pkts.drain(..).collect()
    }
}

/// Deterministic Bernoulli approximation: fires on average once per
/// `1/p` calls without drawing random numbers.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Recur {
    count: f64,
}

impl Recur {
    pub(crate) fn fire(&mut self, p: f64) -> bool {
        self.count += p.clamp(0.0, 1.0);
        if self.count >= 1.0 {
            self.count -= 1.0;
            true
        } else {
            false
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip_through_strings() {
        for k in QueueKind::ALL {
            assert_eq!(k.to_string().parse::<QueueKind>().unwrap(), k);
        }
        assert!("red".parse::<QueueKind>().is_err());
    }

    #[test]
    fn buffer_scales_with_bdp() {
        assert_eq!(QueueConfig::for_bdp(QueueKind::Fifo, 0.5).buffer_limit, 62_500);
        assert_eq!(QueueConfig::for_bdp(QueueKind::Fifo, 8.0).buffer_limit, 1_000_000);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut c = QueueConfig::for_bdp(QueueKind::DualPi2, 1.0);
        assert!(c.validate().is_ok());
        c.buffer_limit = 0;
        assert_eq!(c.validate(), Err(AqmError::EmptyBuffer));
        let mut c = QueueConfig::for_bdp(QueueKind::DualPi2, 1.0);
        c.dualpi2.step_thresh = SimTime::from_millis(6);
        assert!(matches!(c.validate(), Err(AqmError::StepAboveTarget { .. })));
    }

    #[test]
    fn recur_fires_at_the_expected_rate() {
        let mut r = Recur::default();
        let fired = (0..1000).filter(|_| r.fire(0.25)).count();
        assert_eq!(fired, 250);
        let mut r = Recur::default();
        assert_eq!((0..1000).filter(|_| r.fire(0.0)).count(), 0);
    }
}
