use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::des::SimTime;
use crate::packet::{Ecn, Packet};

/// How a receiver reports congestion marks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeedbackMode {
    /// RFC 3168: a sticky ECE flag, cleared when the sender signals CWR.
    ClassicEcn,
    /// Exact per-ACK count of CE-marked bytes.
    AccEcn,
}

/// Congestion feedback carried by one ACK.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AckFeedback {
    pub bytes_acked: u64,
    /// Filled in by the sender when the ACK arrives.
    pub rtt_sample: SimTime,
    /// Transmission time of the acknowledged packet, echoed back.
    pub echo_sent_at: SimTime,
    /// CE-marked bytes newly reported by this ACK (accurate ECN only).
    pub newly_marked_bytes: u64,
    /// Classic ECN echo.
    pub ece: bool,
    /// Consecutive out-of-order arrivals at the receiver.
    pub dup_count: u32,
}

/// Per-flow receiver state.
#[derive(Clone, Debug)]
pub struct Receiver {
    mode: FeedbackMode,
    rcv_nxt: u64,
    out_of_order: BTreeSet<u64>,
    ece_latched: bool,
    dup_count: u32,
    unique_bytes: u64,
    ce_packets: u64,
}

impl Receiver {
    pub fn new(mode: FeedbackMode) -> Self {
        Receiver {
            mode,
            rcv_nxt: 0,
            out_of_order: BTreeSet::new(),
            ece_latched: false,
            dup_count: 0,
            unique_bytes: 0,
            ce_packets: 0,
        }
    }

    pub fn mode(&self) -> FeedbackMode {
        self.mode
    }

    /// In-order delivery point.
    pub fn rcv_nxt(&self) -> u64 {
        self.rcv_nxt
    }

    /// Bytes received at least once.
    pub fn unique_bytes(&self) -> u64 {
        self.unique_bytes
    }

    pub fn ce_packets(&self) -> u64 {
        self.ce_packets
    }

    pub fn ece_latched(&self) -> bool {
        self.ece_latched
    }

    /// Processes one data packet. Returns the ACK feedback and whether the
    /// packet carried bytes not seen before.
    pub fn on_data(&mut self, pkt: &Packet) -> (AckFeedback, bool) {
        debug_assert!(!pkt.is_ack);
        let size = pkt.size as u64;
        let is_new = if pkt.seq == self.rcv_nxt {
            self.rcv_nxt += size;
            while self.out_of_order.remove(&self.rcv_nxt) {
                self.rcv_nxt += size;
            }
            self.dup_count = 0;
            true
        } else if pkt.seq > self.rcv_nxt {
            self.dup_count += 1;
            self.out_of_order.insert(pkt.seq)
        } else {
            self.dup_count += 1;
            false
        };
        if is_new {
            self.unique_bytes += size;
        }

        let ce = pkt.ecn == Ecn::Ce;
        if ce {
            self.ce_packets += 1;
        }
        let mut fb = AckFeedback {
            bytes_acked: size,
            rtt_sample: SimTime::ZERO,
            echo_sent_at: pkt.sent_at,
            newly_marked_bytes: 0,
            ece: false,
            dup_count: self.dup_count,
        };
        match self.mode {
            FeedbackMode::AccEcn => {
                if ce {
                    fb.newly_marked_bytes = size;
                }
            }
            FeedbackMode::ClassicEcn => {
                if pkt.cwr {
                    self.ece_latched = false;
                }
                if ce {
                    self.ece_latched = true;
                }
                fb.ece = self.ece_latched;
            }
        }
        (fb, is_new)
    }
}

/// Feedback for one received packet.
pub fn receiver_feedback(receiver: &mut Receiver, pkt: &Packet) -> AckFeedback {
    receiver.on_data(pkt).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::MSS;

    fn pkt(i: u64, ecn: Ecn) -> Packet {
        let sent = if ecn == Ecn::Ce { Ecn::Ect1 } else { ecn };
        let mut p = Packet::data(i, 0, i * MSS as u64, i, MSS, sent, SimTime::from_micros(i));
        if ecn == Ecn::Ce {
            p.mark_ce();
        }
        p
    }

    #[test]
    fn accurate_ecn_counts_every_mark() {
        let mut rx = Receiver::new(FeedbackMode::AccEcn);
        let (mut acked, mut marked) = (0, 0);
        for i in 0..10 {
            let ecn = if i % 3 == 1 { Ecn::Ce } else { Ecn::Ect1 };
            let fb = receiver_feedback(&mut rx, &pkt(i, ecn));
            acked += fb.bytes_acked;
            marked += fb.newly_marked_bytes;
            assert!(!fb.ece);
        }
        assert_eq!(marked as f64 / acked as f64, 0.3);
    }

    #[test]
    fn classic_echo_latches_until_cwr() {
        let mut rx = Receiver::new(FeedbackMode::ClassicEcn);
        assert!(!receiver_feedback(&mut rx, &pkt(0, Ecn::Ect0)).ece);
        assert!(receiver_feedback(&mut rx, &pkt(1, Ecn::Ce)).ece);
        assert!(receiver_feedback(&mut rx, &pkt(2, Ecn::Ect0)).ece);
        let mut cwr = pkt(3, Ecn::Ect0);
        cwr.cwr = true;
        assert!(!receiver_feedback(&mut rx, &cwr).ece);
        assert!(!receiver_feedback(&mut rx, &pkt(4, Ecn::Ect0)).ece);
    }

    #[test]
    fn not_ect_never_reports_marks() {
        for mode in [FeedbackMode::ClassicEcn, FeedbackMode::AccEcn] {
            let mut rx = Receiver::new(mode);
            for i in 0..5 {
                let fb = receiver_feedback(&mut rx, &pkt(i, Ecn::NotEct));
                assert_eq!(fb.newly_marked_bytes, 0);
                assert!(!fb.ece);
            }
            assert_eq!(rx.ce_packets(), 0);
        }
    }

    #[test]
    fn holes_and_duplicates() {
        let mut rx = Receiver::new(FeedbackMode::AccEcn);
        assert!(rx.on_data(&pkt(0, Ecn::Ect1)).1);
        let (fb, new) = rx.on_data(&pkt(2, Ecn::Ect1));
        assert!(new);
        assert_eq!(fb.dup_count, 1);
        assert_eq!(rx.rcv_nxt(), MSS as u64);
        assert!(rx.on_data(&pkt(1, Ecn::Ect1)).1);
        assert_eq!(rx.rcv_nxt(), 3 * MSS as u64);
        assert!(!rx.on_data(&pkt(1, Ecn::Ect1)).1);
        assert_eq!(rx.unique_bytes(), 3 * MSS as u64);
    }
}
