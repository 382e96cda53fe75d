use crate::des::SimTime;
use crate::packet::Ecn;

use super::{
    AckSample, CcDecision, CongestionControl, FeedbackMode, LossSample, ReductionGate, INITIAL_CWND, MIN_CWND,
};

/// NewReno-style AIMD: +1 packet per round trip, halve on loss or ECE.
#[derive(Debug, Clone)]
pub struct Reno {
    cwnd: f64,
    ssthresh: f64,
    ecn: bool,
    gate: ReductionGate,
    reductions: u64,
}

impl Reno {
    pub fn new(ecn: bool) -> Self {
        Reno { cwnd: INITIAL_CWND, ssthresh: f64::INFINITY, ecn, gate: ReductionGate::default(), reductions: 0 }
    }

    pub fn with_cwnd(ecn: bool, cwnd: f64) -> Self {
        Reno { cwnd, ssthresh: cwnd, ..Reno::new(ecn) }
    }

    pub fn cwnd(&self) -> f64 {
        self.cwnd
    }

    pub fn in_slow_start(&self) -> bool {
        self.cwnd < self.ssthresh
    }

    fn halve(&mut self) {
        self.ssthresh = (self.cwnd / 2.0).max(MIN_CWND);
        self.cwnd = self.ssthresh;
        self.reductions += 1;
    }
}

impl CongestionControl for Reno {
    fn on_ack(&mut self, ack: &AckSample, _now: SimTime) -> CcDecision {
        if self.ecn && ack.fb.ece && self.gate.try_enter(ack.acked_index, ack.next_index) {
            self.halve();
            return self.decision();
        }
        if self.gate.in_recovery(ack.acked_index) {
            return self.decision();
        }
        let acked = ack.acked_packets();
        if self.in_slow_start() {
            self.cwnd += acked;
        } else {
            self.cwnd += acked / self.cwnd;
        }
        self.decision()
    }

    fn on_loss(&mut self, loss: &LossSample, _now: SimTime) -> CcDecision {
        if loss.rto {
            self.ssthresh = (self.cwnd / 2.0).max(MIN_CWND);
            self.cwnd = MIN_CWND;
            self.gate.force(loss.next_index);
            self.reductions += 1;
        } else if self.gate.try_enter(loss.lost_index, loss.next_index) {
            self.halve();
        }
        self.decision()
    }

    fn decision(&self) -> CcDecision {
        CcDecision {
            cwnd: self.cwnd.max(MIN_CWND),
            pacing_rate: None,
            ect: if self.ecn { Ecn::Ect0 } else { Ecn::NotEct },
        }
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::ClassicEcn
    }

    fn name(&self) -> &'static str {
        if self.ecn {
            "reno-ecn"
        } else {
            "reno"
        }
    }

    fn reductions(&self) -> u64 {
        self.reductions
    }
}
