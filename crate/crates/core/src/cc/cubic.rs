//! CUBIC window growth with the Reno-friendly region.

use crate::des::SimTime;
use crate::packet::Ecn;

use super::{
    AckSample, CcDecision, CongestionControl, FeedbackMode, LossSample, ReductionGate, INITIAL_CWND, MIN_CWND,
};

/// Cubic scaling constant, packets/s³.
pub const CUBIC_C: f64 = 0.4;
/// Multiplicative decrease factor.
pub const CUBIC_BETA: f64 = 0.7;

#[derive(Clone, Debug, PartialEq)]
pub struct CubicState {
    pub cwnd: f64,
    pub w_max: f64,
    /// Seconds from epoch start until the window regains `w_max`.
    pub k: f64,
    pub c: f64,
    pub beta: f64,
    pub epoch_start: Option<SimTime>,
    pub ecn_enabled: bool,
}

impl CubicState {
    /// State right after a reduction from `w_max`.
    pub fn after_reduction(w_max: f64, ecn_enabled: bool) -> Self {
        CubicState {
            cwnd: CUBIC_BETA * w_max,
            w_max,
            k: cubic_k(w_max, CUBIC_BETA, CUBIC_C),
            c: CUBIC_C,
            beta: CUBIC_BETA,
            epoch_start: None,
            ecn_enabled,
        }
    }
}

/// `K = cbrt(w_max·(1−β)/C)`.
pub fn cubic_k(w_max: f64, beta: f64, c: f64) -> f64 {
    (w_max * (1.0 - beta) / c).cbrt()
}

/// `W(t) = C·(t−K)³ + w_max`, with `t` in seconds since the epoch start.
pub fn cubic_window(t_since_epoch: f64, state: &CubicState) -> f64 {
    debug_assert!(t_since_epoch >= 0.0);
    let d = t_since_epoch - state.k;
    state.c * d * d * d + state.w_max
}

#[derive(Debug, Clone)]
pub struct Cubic {
    state: CubicState,
    ssthresh: f64,
    /// Reno-friendly window estimate.
    w_est: f64,
    last_rtt: SimTime,
    gate: ReductionGate,
    reductions: u64,
}

impl Cubic {
    pub fn new(ecn_enabled: bool) -> Self {
        Cubic {
            state: CubicState {
                cwnd: INITIAL_CWND,
                w_max: 0.0,
                k: 0.0,
                c: CUBIC_C,
                beta: CUBIC_BETA,
                epoch_start: None,
                ecn_enabled,
            },
            ssthresh: f64::INFINITY,
            w_est: INITIAL_CWND,
            last_rtt: SimTime::ZERO,
            gate: ReductionGate::default(),
            reductions: 0,
        }
    }

    pub fn state(&self) -> &CubicState {
        &self.state
    }

    pub fn cwnd(&self) -> f64 {
        self.state.cwnd
    }

    fn reduce(&mut self) {
        let s = &mut self.state;
        // Fast convergence: a flow that lost before regaining its last peak
        // releases some of it to newer flows.
        s.w_max = if s.cwnd < s.w_max { s.cwnd * (1.0 + s.beta) / 2.0 } else { s.cwnd };
        s.cwnd = (s.cwnd * s.beta).max(MIN_CWND);
        s.epoch_start = None;
        self.ssthresh = s.cwnd;
        self.reductions += 1;
    }

    fn grow(&mut self, acked: f64, now: SimTime) {
        if self.state.cwnd < self.ssthresh {
            self.state.cwnd += acked;
            return;
        }
        let s = &mut self.state;
        let epoch = match s.epoch_start {
            Some(t) => t,
            None => {
                s.epoch_start = Some(now);
                if s.cwnd < s.w_max {
                    s.k = ((s.w_max - s.cwnd) / s.c).cbrt();
                } else {
                    s.k = 0.0;
                    s.w_max = s.cwnd;
                }
                self.w_est = s.cwnd;
                now
            }
        };
        let t = (now - epoch + self.last_rtt).as_secs_f64();
        let target = cubic_window(t, s).min(1.5 * s.cwnd);
        self.w_est += acked * 3.0 * (1.0 - s.beta) / (1.0 + s.beta) / s.cwnd;
        if target > s.cwnd {
            s.cwnd += acked * (target - s.cwnd) / s.cwnd;
        }
        if self.w_est > s.cwnd {
            s.cwnd = self.w_est;
        }
    }
}

impl CongestionControl for Cubic {
    fn on_ack(&mut self, ack: &AckSample, now: SimTime) -> CcDecision {
        if ack.fb.rtt_sample > SimTime::ZERO {
            self.last_rtt = ack.fb.rtt_sample;
        }
        if self.state.ecn_enabled && ack.fb.ece && self.gate.try_enter(ack.acked_index, ack.next_index) {
            self.reduce();
            return self.decision();
        }
        if !self.gate.in_recovery(ack.acked_index) {
            self.grow(ack.acked_packets(), now);
        }
        self.decision()
    }

    fn on_loss(&mut self, loss: &LossSample, _now: SimTime) -> CcDecision {
        if loss.rto {
            self.reduce();
            self.state.cwnd = MIN_CWND;
            self.gate.force(loss.next_index);
        } else if self.gate.try_enter(loss.lost_index, loss.next_index) {
            self.reduce();
        }
        self.decision()
    }

    fn decision(&self) -> CcDecision {
        CcDecision {
            cwnd: self.state.cwnd.max(MIN_CWND),
            pacing_rate: None,
            ect: if self.state.ecn_enabled { Ecn::Ect0 } else { Ecn::NotEct },
        }
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::ClassicEcn
    }

    fn name(&self) -> &'static str {
        if self.state.ecn_enabled {
            "cubic-ecn"
        } else {
            "cubic"
        }
    }

    fn reductions(&self) -> u64 {
        self.reductions
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc::AckFeedback;
    use crate::packet::MSS;

    #[test]
    fn window_regains_w_max_at_k() {
        let s = CubicState::after_reduction(100.0, false);
        assert!((cubic_window(s.k, &s) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn window_at_epoch_start_is_beta_w_max() {
        let s = CubicState::after_reduction(100.0, false);
        assert!((cubic_window(0.0, &s) - 70.0).abs() < 1e-9);
    }

    #[test]
    fn k_for_w_max_100() {
        // cbrt(75) evaluated independently: 4.2171633265...
        let k = cubic_k(100.0, CUBIC_BETA, CUBIC_C);
        assert!((k - 4.217_163_326_508_746).abs() < 1e-12, "{k}");
    }

    #[test]
    fn loss_sets_w_max_and_scales_window() {
        let mut c = Cubic::new(false);
        c.state.cwnd = 100.0;
        c.ssthresh = 50.0;
        c.on_loss(&LossSample::fast(3, 100, 100), SimTime::ZERO);
        assert!((c.cwnd() - 70.0).abs() < 1e-9);
        assert_eq!(c.state().w_max, 100.0);
        assert!(c.state().epoch_start.is_none());
    }

    #[test]
    fn loss_below_previous_peak_releases_bandwidth() {
        let mut c = Cubic::new(false);
        c.state.cwnd = 80.0;
        c.state.w_max = 100.0;
        c.ssthresh = 50.0;
        c.on_loss(&LossSample::fast(3, 80, 80), SimTime::ZERO);
        // 80 * (1 + 0.7) / 2
        assert!((c.state().w_max - 68.0).abs() < 1e-9);
        assert!((c.cwnd() - 56.0).abs() < 1e-9);
    }

    #[test]
    fn growth_after_reduction_is_continuous_then_concave() {
        let mut c = Cubic::new(false);
        c.state.cwnd = 100.0;
        c.on_loss(&LossSample::fast(0, 100, 100), SimTime::ZERO);
        let fb = AckFeedback { bytes_acked: MSS as u64, rtt_sample: SimTime::from_millis(10), ..Default::default() };
        let mut idx = 100;
        let mut prev = c.cwnd();
        let mut now = SimTime::ZERO;
        for _ in 0..2000 {
            now += SimTime::from_micros(150);
            idx += 1;
            c.on_ack(&AckSample::simple(fb, idx, idx + 70, false), now);
            assert!(c.cwnd() >= prev);
            assert!(c.cwnd() - prev < 1.0);
            prev = c.cwnd();
        }
        assert!(c.cwnd() > 70.0);
    }

    #[test]
    fn ecn_mode_responds_to_echo() {
        let mut c = Cubic::new(true);
        c.state.cwnd = 50.0;
        let fb = AckFeedback { bytes_acked: MSS as u64, ece: true, ..Default::default() };
        c.on_ack(&AckSample::simple(fb, 1, 50, false), SimTime::ZERO);
        assert!((c.cwnd() - 35.0).abs() < 1e-9);
        assert_eq!(c.decision().ect, Ecn::Ect0);
    }
}
