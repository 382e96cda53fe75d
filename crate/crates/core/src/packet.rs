//! Packets and ECN codepoints.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cc::AckFeedback;
use crate::des::SimTime;

/// Header-inclusive size of every data segment.
pub const MSS: u32 = 1500;

/// Size of a pure acknowledgment on the wire.
pub const ACK_SIZE: u32 = 64;

/// The two-bit ECN field of the IP header.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Ecn {
    #[default]
    NotEct,
    Ect0,
    Ect1,
    Ce,
}

impl Ecn {
    /// True for ECT(0), ECT(1) and CE: the packet may carry a congestion mark.
    pub fn is_ecn_capable(self) -> bool {
        !matches!(self, Ecn::NotEct)
    }

    /// The codepoint after an AQM marks the packet. Non-ECT packets cannot be
    /// marked and are returned unchanged.
    pub fn marked(self) -> Ecn {
        match self {
            Ecn::NotEct => Ecn::NotEct,
            _ => Ecn::Ce,
        }
    }

    /// Whether a forward-path node may rewrite `self` into `next`.
    pub fn may_become(self, next: Ecn) -> bool {
        match self {
            Ecn::NotEct => next == Ecn::NotEct,
            Ecn::Ect0 => matches!(next, Ecn::Ect0 | Ecn::Ce),
            Ecn::Ect1 => matches!(next, Ecn::Ect1 | Ecn::Ce),
            Ecn::Ce => next == Ecn::Ce,
        }
    }
}

impl fmt::Display for Ecn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ecn::NotEct => "not-ect",
            Ecn::Ect0 => "ect0",
            Ecn::Ect1 => "ect1",
            Ecn::Ce => "ce",
        })
    }
}

impl FromStr for Ecn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "not-ect" | "notect" => Ok(Ecn::NotEct),
            "ect0" | "ect(0)" => Ok(Ecn::Ect0),
            "ect1" | "ect(1)" => Ok(Ecn::Ect1),
            "ce" => Ok(Ecn::Ce),
            other => Err(format!("unknown ECN codepoint '{other}'")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Packet {
    pub id: u64,
    pub flow_id: usize,
    pub size: u32,
    pub ecn: Ecn,
    /// Codepoint the sender put on the wire, kept to audit AQM rewrites.
    pub sent_ecn: Ecn,
    /// Byte offset of the first payload byte (data) or of the segment being
    /// acknowledged (ACK).
    pub seq: u64,
    /// Sender-side transmission counter; retransmissions get a fresh index.
    pub send_index: u64,
    pub sent_at: SimTime,
    pub enqueued_at: SimTime,
    pub is_ack: bool,
    /// Congestion Window Reduced flag of classic ECN.
    pub cwr: bool,
    pub ack_info: Option<AckFeedback>,
}

impl Packet {
    pub fn data(id: u64, flow_id: usize, seq: u64, send_index: u64, size: u32, ecn: Ecn, sent_at: SimTime) -> Self {
        assert!(size > 0, "packet size must be positive");
        debug_assert!(ecn != Ecn::Ce, "senders never originate CE");
        Packet {
            id,
            flow_id,
            size,
            ecn,
            sent_ecn: ecn,
            seq,
            send_index,
            sent_at,
            enqueued_at: sent_at,
            is_ack: false,
            cwr: false,
            ack_info: None,
        }
    }

    pub fn ack(id: u64, flow_id: usize, acked: &Packet, fb: AckFeedback, sent_at: SimTime) -> Self {
        Packet {
            id,
            flow_id,
            size: ACK_SIZE,
            ecn: Ecn::NotEct,
            sent_ecn: Ecn::NotEct,
            seq: acked.seq,
            send_index: acked.send_index,
            sent_at,
            enqueued_at: sent_at,
            is_ack: true,
            cwr: false,
            ack_info: Some(fb),
        }
    }

    /// Applies an AQM congestion mark. Returns `false` (and leaves the packet
    /// untouched) when the packet is not ECN-capable.
    pub fn mark_ce(&mut self) -> bool {
        if self.ecn.is_ecn_capable() {
            self.ecn = Ecn::Ce;
            true
        } else {
            false
        }
    }

    pub fn sojourn(&self, now: SimTime) -> SimTime {
        now.saturating_sub(self.enqueued_at)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codepoint_transitions() {
        assert!(Ecn::Ect0.may_become(Ecn::Ce));
        assert!(Ecn::Ect1.may_become(Ecn::Ce));
        assert!(!Ecn::NotEct.may_become(Ecn::Ce));
        assert!(!Ecn::Ce.may_become(Ecn::Ect0));
        assert!(!Ecn::Ect0.may_become(Ecn::Ect1));
    }

    #[test]
    fn non_ect_cannot_be_marked() {
        let mut p = Packet::data(1, 0, 0, 0, MSS, Ecn::NotEct, SimTime::ZERO);
        assert!(!p.mark_ce());
        assert_eq!(p.ecn, Ecn::NotEct);
        let mut q = Packet::data(2, 0, 0, 0, MSS, Ecn::Ect1, SimTime::ZERO);
        assert!(q.mark_ce());
        assert_eq!(q.ecn, Ecn::Ce);
    }

    #[test]
    fn parse_codepoints() {
        assert_eq!("ECT(1)".parse::<Ecn>().unwrap(), Ecn::Ect1);
        assert!("bogus".parse::<Ecn>().is_err());
    }
}
