use std::collections::VecDeque;

use crate::cc::{AckFeedback, AckSample, CcDecision, CongestionControl, FeedbackMode, LossSample, RateSample};
use crate::des::SimTime;
use crate::packet::{Packet, MSS};

/// Transmissions acknowledged after a packet that mark it lost.
const DUP_THRESH: u64 = 3;
const MIN_RTO: SimTime = SimTime::from_millis(200);
const INITIAL_RTO: SimTime = SimTime::from_secs(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RecState {
    InFlight,
    Acked,
    Lost,
}

#[derive(Clone, Copy, Debug)]
struct SentRecord {
    seq: u64,
    sent_at: SimTime,
    size: u32,
    state: RecState,
    /// Rate-estimator snapshot taken at transmission.
    delivered: u64,
    delivered_time: SimTime,
    first_sent_time: SimTime,
    prior_inflight: u32,
}

/// Whether the sender may transmit now.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SendPermit {
    Now,
    /// Window open, but pacing defers the next packet.
    At(SimTime),
    Blocked,
}

/// Bulk-transfer sender: one per flow.
///
/// Every transmission, including retransmissions, gets a fresh index and
/// is acknowledged individually, so loss detection is a pure index
/// comparison (a packet is lost once `DUP_THRESH` later transmissions
/// have been acknowledged).
#[derive(Debug)]
pub struct Sender {
    flow_id: usize,
    cc: Box<dyn CongestionControl>,
    decision: CcDecision,
    records: VecDeque<SentRecord>,
    base_index: u64,
    next_index: u64,
    scan: u64,
    next_seq: u64,
    retx: VecDeque<u64>,
    inflight: u32,
    round: u64,
    round_end_index: u64,
    delivered: u64,
    delivered_time: SimTime,
    first_sent_time: SimTime,
    srtt: Option<SimTime>,
    rttvar: SimTime,
    min_rtt: Option<SimTime>,
    last_progress: SimTime,
    pending_cwr: bool,
    next_send_at: SimTime,
    pub(crate) wake_pending: bool,
    pub(crate) rto_pending: bool,
    started: bool,
    pub(crate) stats: SenderStats,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SenderStats {
    pub packets_sent: u64,
    pub retransmits: u64,
    pub losses: u64,
    pub timeouts: u64,
    pub rtt_sum: f64,
    pub rtt_samples: u64,
}

impl Sender {
    pub fn new(flow_id: usize, cc: Box<dyn CongestionControl>) -> Self {
        let decision = cc.decision();
        Sender {
            flow_id,
            cc,
            decision,
            records: VecDeque::new(),
            base_index: 0,
            next_index: 0,
            scan: 0,
            next_seq: 0,
            retx: VecDeque::new(),
            inflight: 0,
            round: 0,
            round_end_index: 0,
            delivered: 0,
            delivered_time: SimTime::ZERO,
            first_sent_time: SimTime::ZERO,
            srtt: None,
            rttvar: SimTime::ZERO,
            min_rtt: None,
            last_progress: SimTime::ZERO,
            pending_cwr: false,
            next_send_at: SimTime::ZERO,
            wake_pending: false,
            rto_pending: false,
            started: false,
            stats: SenderStats::default(),
        }
    }

    pub fn start(&mut self, now: SimTime) {
        self.started = true;
        self.last_progress = now;
        self.delivered_time = now;
        self.first_sent_time = now;
        self.next_send_at = now;
    }

    pub fn cc(&self) -> &dyn CongestionControl {
        self.cc.as_ref()
    }

    pub fn decision(&self) -> CcDecision {
        self.decision
    }

    pub fn inflight(&self) -> u32 {
        self.inflight
    }

    pub fn srtt(&self) -> Option<SimTime> {
        self.srtt
    }

    pub fn stats(&self) -> SenderStats {
        self.stats
    }

    pub fn rto(&self) -> SimTime {
        match self.srtt {
            Some(srtt) => (srtt + self.rttvar.mul_f64(4.0)).max(MIN_RTO),
            None => INITIAL_RTO,
        }
    }

    /// When the retransmission timer would fire if nothing changes.
    pub fn rto_deadline(&self) -> Option<SimTime> {
        (self.inflight > 0).then(|| self.last_progress + self.rto())
    }

    pub fn permit(&self, now: SimTime) -> SendPermit {
        if !self.started || self.inflight >= self.decision.applied_cwnd() {
            return SendPermit::Blocked;
        }
        if self.decision.pacing_rate.is_some() && self.next_send_at > now {
            return SendPermit::At(self.next_send_at);
        }
        SendPermit::Now
    }

    /// Builds the next transmission: a pending retransmission if any,
    /// otherwise new data.
    pub fn transmit(&mut self, id: u64, now: SimTime) -> Packet {
        let seq = match self.retx.pop_front() {
            Some(seq) => {
                self.stats.retransmits += 1;
                seq
            }
            None => {
                let s = self.next_seq;
                self.next_seq += MSS as u64;
                s
            }
        };
        if self.inflight == 0 {
            // Restart the rate estimator's send clock after an idle period.
            self.first_sent_time = now;
            self.delivered_time = now;
            self.last_progress = now;
        }
        let index = self.next_index;
        self.next_index += 1;
        self.inflight += 1;
        self.records.push_back(SentRecord {
            seq,
            sent_at: now,
            size: MSS,
            state: RecState::InFlight,
            delivered: self.delivered,
            delivered_time: self.delivered_time,
            first_sent_time: self.first_sent_time,
            prior_inflight: self.inflight,
        });
        if let Some(rate) = self.decision.pacing_rate {
            let gap = SimTime::from_secs_f64(MSS as f64 * 8.0 / rate.max(1.0));
            self.next_send_at = self.next_send_at.max(now) + gap;
        }
        let mut pkt = Packet::data(id, self.flow_id, seq, index, MSS, self.decision.ect, now);
        if std::mem::take(&mut self.pending_cwr) {
            pkt.cwr = true;
        }
        self.stats.packets_sent += 1;
        pkt
    }

    fn record_mut(&mut self, index: u64) -> Option<&mut SentRecord> {
        let off = index.checked_sub(self.base_index)?;
        self.records.get_mut(off as usize)
    }

    fn update_rtt(&mut self, rtt: SimTime) {
        self.stats.rtt_sum += rtt.as_secs_f64();
        self.stats.rtt_samples += 1;
        self.min_rtt = Some(self.min_rtt.map_or(rtt, |m| m.min(rtt)));
        match self.srtt {
            None => {
                self.srtt = Some(rtt);
                self.rttvar = SimTime::from_nanos(rtt.as_nanos() / 2);
            }
            Some(srtt) => {
                let err = srtt.as_nanos().abs_diff(rtt.as_nanos());
                self.rttvar = SimTime::from_nanos((3 * self.rttvar.as_nanos() + err) / 4);
                self.srtt = Some(SimTime::from_nanos((7 * srtt.as_nanos() + rtt.as_nanos()) / 8));
            }
        }
    }

    /// Processes the acknowledgment of transmission `index`.
    pub fn on_ack(&mut self, mut fb: AckFeedback, index: u64, now: SimTime) {
        let Some(rec) = self.record_mut(index).copied() else { return };
        if rec.state == RecState::Acked {
            return;
        }
        if rec.state == RecState::InFlight {
            self.inflight -= 1;
        }
        self.record_mut(index).expect("present").state = RecState::Acked;
        self.last_progress = now;

        let rtt = now.saturating_sub(rec.sent_at);
        self.update_rtt(rtt);
        fb.rtt_sample = rtt;

        self.delivered += rec.size as u64;
        self.delivered_time = now;
        self.first_sent_time = rec.sent_at;
        let send_elapsed = rec.sent_at.saturating_sub(rec.first_sent_time);
        let ack_elapsed = now.saturating_sub(rec.delivered_time);
        let interval = send_elapsed.max(ack_elapsed);
        let rate = (interval > SimTime::ZERO && self.min_rtt.is_none_or(|m| interval >= m)).then(|| {
            let bytes = self.delivered - rec.delivered;
            RateSample {
                delivery_rate_bps: bytes as f64 * 8.0 / interval.as_secs_f64(),
                interval,
                delivered_bytes: bytes,
                prior_inflight: rec.prior_inflight,
            }
        });

        let round_ended = index >= self.round_end_index;
        if round_ended {
            self.round += 1;
            self.round_end_index = self.next_index;
        }

        let before = self.cc.reductions();
        let sample = AckSample {
            fb,
            acked_index: index,
            next_index: self.next_index,
            round_ended,
            round: self.round,
            inflight: self.inflight,
            rate,
        };
        self.decision = self.cc.on_ack(&sample, now);
        if fb.ece && self.cc.feedback_mode() == FeedbackMode::ClassicEcn && self.cc.reductions() > before {
            self.pending_cwr = true;
        }

        self.detect_losses(index, now);
        self.trim();
    }

    fn detect_losses(&mut self, acked: u64, now: SimTime) {
        while self.scan + DUP_THRESH <= acked {
            let i = self.scan;
            self.scan += 1;
            let Some(rec) = self.record_mut(i) else { continue };
            if rec.state != RecState::InFlight {
                continue;
            }
            rec.state = RecState::Lost;
            let (seq, prior) = (rec.seq, rec.prior_inflight);
            self.inflight -= 1;
            self.retx.push_back(seq);
            self.stats.losses += 1;
            self.decision = self.cc.on_loss(&LossSample::fast(i, self.next_index, prior), now);
        }
    }

    /// Drops bookkeeping for transmissions that can no longer change state.
    fn trim(&mut self) {
        while let Some(front) = self.records.front() {
            if front.state == RecState::InFlight || self.base_index >= self.scan {
                break;
            }
            self.records.pop_front();
            self.base_index += 1;
        }
    }

    /// Fires the retransmission timer if it is due. Returns true if it
    /// fired.
    pub fn on_rto_check(&mut self, now: SimTime) -> bool {
        match self.rto_deadline() {
            Some(deadline) if now >= deadline => {}
            _ => return false,
        }
        let mut lost: Vec<u64> = Vec::new();
        for rec in self.records.iter_mut().filter(|r| r.state == RecState::InFlight) {
            rec.state = RecState::Lost;
            lost.push(rec.seq);
        }
        lost.sort_unstable();
        // Retransmit everything outstanding, lowest sequence first.
        let mut pending: Vec<u64> = self.retx.drain(..).chain(lost.iter().copied()).collect();
        pending.sort_unstable();
        pending.dedup();
        self.retx.extend(pending);
        self.stats.losses += lost.len() as u64;
        self.stats.timeouts += 1;
        self.inflight = 0;
        self.scan = self.next_index;
        self.round_end_index = self.next_index;
        self.last_progress = now;
        // Back off: the next timeout only after a fresh RTT measurement.
        self.srtt = self.srtt.map(|s| s.mul_f64(2.0));
        let loss = LossSample { lost_index: self.next_index.saturating_sub(1), next_index: self.next_index, inflight: 0, rto: true };
        self.decision = self.cc.on_loss(&loss, now);
        self.trim();
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc::Reno;
    use crate::packet::Ecn;

    fn fb() -> AckFeedback {
        AckFeedback { bytes_acked: MSS as u64, ..Default::default() }
    }

    fn sender() -> Sender {
        let mut s = Sender::new(0, Box::new(Reno::new(false)));
        s.start(SimTime::ZERO);
        s
    }

    #[test]
    fn initial_window_then_blocked() {
        let mut s = sender();
        let mut n = 0;
        while s.permit(SimTime::ZERO) == SendPermit::Now {
            let p = s.transmit(n, SimTime::ZERO);
            assert_eq!(p.ecn, Ecn::NotEct);
            n += 1;
        }
        assert_eq!(n, 10);
        assert_eq!(s.inflight(), 10);
    }

    #[test]
    fn gap_marks_packet_lost_after_three_later_acks() {
        let mut s = sender();
        for i in 0..10 {
            s.transmit(i, SimTime::ZERO);
        }
        let t = SimTime::from_millis(10);
        s.on_ack(fb(), 0, t);
        // Transmission 1 is lost; 2, 3 and 4 arrive.
        s.on_ack(fb(), 2, t);
        s.on_ack(fb(), 3, t);
        assert_eq!(s.stats().losses, 0);
        s.on_ack(fb(), 4, t);
        assert_eq!(s.stats().losses, 1);
        let retx = s.transmit(100, t);
        assert_eq!(retx.seq, MSS as u64);
        assert_eq!(retx.send_index, 10);
        assert_eq!(s.stats().retransmits, 1);
    }

    #[test]
    fn rtt_and_rounds() {
        let mut s = sender();
        for i in 0..4 {
            s.transmit(i, SimTime::ZERO);
        }
        s.on_ack(fb(), 0, SimTime::from_millis(10));
        assert_eq!(s.srtt(), Some(SimTime::from_millis(10)));
        assert_eq!(s.round, 1);
        s.on_ack(fb(), 1, SimTime::from_millis(10));
        assert_eq!(s.round, 1);
    }

    #[test]
    fn timeout_retransmits_everything() {
        let mut s = sender();
        for i in 0..10 {
            s.transmit(i, SimTime::ZERO);
        }
        assert!(!s.on_rto_check(SimTime::from_millis(500)));
        assert!(s.on_rto_check(SimTime::from_secs(1)));
        assert_eq!(s.inflight(), 0);
        assert_eq!(s.decision().applied_cwnd(), 2);
        let a = s.transmit(10, SimTime::from_secs(1));
        let b = s.transmit(11, SimTime::from_secs(1));
        assert_eq!((a.seq, b.seq), (0, MSS as u64));
    }
}
