//! Scalable congestion control: cut the window in proportion to a moving
//! average of the marked fraction instead of halving on any mark.

use serde::{Deserialize, Serialize};

use crate::des::SimTime;
use crate::packet::Ecn;

use super::{
    fallback_classify, AckSample, CcDecision, CcError, CongestionControl, FallbackConfig, FallbackDetector,
    FeedbackMode, LossSample, QueueClass, ReductionGate, INITIAL_CWND, MIN_CWND,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PragueMode {
    Scalable,
    ClassicFallback,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PragueConfig {
    /// EWMA gain for the marked fraction.
    pub g: f64,
    pub initial_alpha: f64,
    /// `Some` enables the classic-queue fallback heuristic.
    pub fallback: Option<FallbackConfig>,
    /// RTT independence: below this smoothed RTT the additive increase is
    /// scaled by `(srtt/target)²`, so the rate grows as fast as it would
    /// for a flow with the target RTT. Off by default.
    pub rtt_target: Option<SimTime>,
    /// Rounds of unscaled growth before the scaling takes effect.
    pub rtt_transition_rounds: u64,
}

impl Default for PragueConfig {
    fn default() -> Self {
        PragueConfig {
            g: 1.0 / 16.0,
            initial_alpha: 1.0,
            fallback: None,
            rtt_target: None,
            rtt_transition_rounds: 4,
        }
    }
}

/// Multiplier on the per-round additive increase for RTT independence.
pub fn prague_ai_scale(srtt: SimTime, target: SimTime) -> f64 {
    if srtt >= target || srtt == SimTime::ZERO {
        1.0
    } else {
        (srtt.as_secs_f64() / target.as_secs_f64()).powi(2)
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<(), CcError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(CcError::OutOfUnitRange { name, value })
    }
}

/// `(1−g)·alpha + g·frac_marked`.
pub fn prague_alpha_update(alpha: f64, frac_marked: f64, g: f64) -> Result<f64, CcError> {
    check_unit("alpha", alpha)?;
    check_unit("frac_marked", frac_marked)?;
    check_unit("g", g)?;
    Ok(((1.0 - g) * alpha + g * frac_marked).clamp(0.0, 1.0))
}

/// `cwnd·(1 − alpha/2)`, floored at the minimum window.
pub fn prague_on_round_with_marks(cwnd: f64, alpha: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha));
    (cwnd * (1.0 - alpha.clamp(0.0, 1.0) / 2.0)).max(MIN_CWND)
}

#[derive(Debug, Clone)]
pub struct Prague {
    cfg: PragueConfig,
    cwnd: f64,
    ssthresh: f64,
    alpha: f64,
    mode: PragueMode,
    detector: Option<FallbackDetector>,
    gate: ReductionGate,
    round_acked: u64,
    round_marked: u64,
    rounds: u64,
    srtt: SimTime,
    reductions: u64,
}

impl Prague {
    pub fn new(cfg: PragueConfig) -> Self {
        Prague {
            cwnd: INITIAL_CWND,
            ssthresh: f64::INFINITY,
            alpha: cfg.initial_alpha.clamp(0.0, 1.0),
            mode: PragueMode::Scalable,
            detector: cfg.fallback.map(FallbackDetector::new),
            gate: ReductionGate::default(),
            round_acked: 0,
            round_marked: 0,
            rounds: 0,
            srtt: SimTime::ZERO,
            reductions: 0,
            cfg,
        }
    }

    /// Starts in congestion avoidance with the given window and alpha.
    pub fn with_state(cfg: PragueConfig, cwnd: f64, alpha: f64) -> Self {
        Prague { cwnd, ssthresh: cwnd, alpha, ..Prague::new(cfg) }
    }

    pub fn cwnd(&self) -> f64 {
        self.cwnd
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mode(&self) -> PragueMode {
        self.mode
    }

    pub fn detector(&self) -> Option<&FallbackDetector> {
        self.detector.as_ref()
    }

    fn reduce_for_marks(&mut self) {
        let alpha = match self.mode {
            PragueMode::Scalable => self.alpha,
            PragueMode::ClassicFallback => 1.0,
        };
        self.cwnd = prague_on_round_with_marks(self.cwnd, alpha);
        self.ssthresh = self.cwnd;
        self.reductions += 1;
    }
}

impl CongestionControl for Prague {
    fn on_ack(&mut self, ack: &AckSample, _now: SimTime) -> CcDecision {
        let marked = ack.fb.newly_marked_bytes > 0;
        let rtt = ack.fb.rtt_sample;
        if rtt > SimTime::ZERO {
            self.srtt = if self.srtt == SimTime::ZERO {
                rtt
            } else {
                SimTime::from_nanos((7 * self.srtt.as_nanos() + rtt.as_nanos()) / 8)
            };
        }
        if ack.round_ended {
            self.rounds += 1;
        }
        self.round_acked += ack.fb.bytes_acked;
        self.round_marked += ack.fb.newly_marked_bytes;

        if let Some(det) = self.detector.as_mut() {
            if marked {
                det.on_mark();
            }
            self.mode = match fallback_classify(det, ack.fb.rtt_sample, ack.round_ended) {
                QueueClass::ClassicQueue => PragueMode::ClassicFallback,
                QueueClass::L4sQueue | QueueClass::Undecided => PragueMode::Scalable,
            };
        }

        let classic = self.mode == PragueMode::ClassicFallback;
        if marked && self.gate.try_enter(ack.acked_index, ack.next_index) {
            self.reduce_for_marks();
        } else if !(classic && self.gate.in_recovery(ack.acked_index)) {
            let acked = ack.acked_packets();
            if self.cwnd < self.ssthresh {
                self.cwnd += acked;
            } else {
                let scale = match self.cfg.rtt_target {
                    Some(target) if self.rounds >= self.cfg.rtt_transition_rounds => prague_ai_scale(self.srtt, target),
                    _ => 1.0,
                };
                self.cwnd += scale * acked / self.cwnd;
            }
        }

        if ack.round_ended && self.round_acked > 0 {
            let frac = (self.round_marked as f64 / self.round_acked as f64).min(1.0);
            self.alpha = prague_alpha_update(self.alpha, frac, self.cfg.g).unwrap_or(self.alpha);
            self.round_acked = 0;
            self.round_marked = 0;
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
            self.cwnd = (self.cwnd / 2.0).max(MIN_CWND);
            self.ssthresh = self.cwnd;
            self.reductions += 1;
        }
        self.decision()
    }

    fn decision(&self) -> CcDecision {
        // ECT(1) in both modes: the fallback changes the response, not the
        // L4S identifier.
        CcDecision { cwnd: self.cwnd.max(MIN_CWND), pacing_rate: None, ect: Ecn::Ect1 }
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::AccEcn
    }

    fn name(&self) -> &'static str {
        if self.detector.is_some() {
            "prague-fallback"
        } else {
            "prague"
        }
    }

    fn reductions(&self) -> u64 {
        self.reductions
    }

    fn prague_mode(&self) -> Option<PragueMode> {
        Some(self.mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc::AckFeedback;
    use crate::packet::MSS;

    fn fb(marked: bool) -> AckFeedback {
        AckFeedback {
            bytes_acked: MSS as u64,
            newly_marked_bytes: if marked { MSS as u64 } else { 0 },
            rtt_sample: SimTime::from_millis(10),
            ..Default::default()
        }
    }

    #[test]
    fn alpha_update_examples() {
        assert_eq!(prague_alpha_update(0.0, 1.0, 1.0 / 16.0).unwrap(), 0.0625);
        assert_eq!(prague_alpha_update(0.5, 0.5, 1.0 / 16.0).unwrap(), 0.5);
        assert_eq!(prague_alpha_update(0.2, 0.0, 1.0 / 16.0).unwrap(), 0.1875);
    }

    #[test]
    fn alpha_update_rejects_out_of_range() {
        assert!(prague_alpha_update(1.2, 0.0, 0.0625).is_err());
        assert!(prague_alpha_update(0.2, -0.1, 0.0625).is_err());
        assert!(prague_alpha_update(0.2, 0.1, 2.0).is_err());
    }

    #[test]
    fn round_reduction_examples() {
        assert_eq!(prague_on_round_with_marks(80.0, 0.25), 70.0);
        assert_eq!(prague_on_round_with_marks(80.0, 1.0), 40.0);
        assert_eq!(prague_on_round_with_marks(80.0, 0.0), 80.0);
        assert_eq!(prague_on_round_with_marks(3.0, 1.0), MIN_CWND);
    }

    #[test]
    fn unmarked_round_grows_by_one_and_decays_alpha() {
        // Hand-stepped: 20 unmarked ACKs from cwnd 20 add 1/cwnd each
        // (sum over 20..~21 ≈ 0.9756), alpha 0.4 → 0.4·15/16 = 0.375.
        let mut p = Prague::with_state(PragueConfig::default(), 20.0, 0.4);
        let mut expected = 20.0;
        for i in 0..20u64 {
            expected += 1.0 / expected;
            p.on_ack(&AckSample::simple(fb(false), i, 20 + i, i == 19), SimTime::ZERO);
        }
        assert!((p.cwnd() - expected).abs() < 1e-12);
        assert!((p.cwnd() - 21.0).abs() < 0.05);
        assert!((p.alpha() - 0.375).abs() < 1e-12);
    }

    #[test]
    fn marked_round_cuts_once_in_proportion_to_alpha() {
        let mut p = Prague::with_state(PragueConfig::default(), 80.0, 0.25);
        p.on_ack(&AckSample::simple(fb(true), 0, 80, false), SimTime::ZERO);
        assert_eq!(p.cwnd(), 70.0);
        for i in 1..80 {
            p.on_ack(&AckSample::simple(fb(true), i, 80, false), SimTime::ZERO);
        }
        assert_eq!(p.reductions(), 1);
    }

    #[test]
    fn rtt_independence_scales_growth_below_target() {
        let target = SimTime::from_millis(25);
        assert_eq!(prague_ai_scale(SimTime::from_millis(30), target), 1.0);
        assert!((prague_ai_scale(SimTime::from_millis(10), target) - 0.16).abs() < 1e-12);
        let cfg = PragueConfig { rtt_target: Some(target), ..Default::default() };
        let mut p = Prague::with_state(cfg, 20.0, 0.0);
        let mut q = Prague::with_state(PragueConfig::default(), 20.0, 0.0);
        for i in 0..200u64 {
            let s = AckSample::simple(fb(false), i, 20 + i, i % 20 == 19);
            p.on_ack(&s, SimTime::ZERO);
            q.on_ack(&s, SimTime::ZERO);
        }
        // 20 ACKs per round: four unscaled rounds, then growth at 0.16×.
        let (mut ep, mut eq) = (20.0f64, 20.0f64);
        for i in 0..200u64 {
            // The fourth round closes on ACK 79, which already grows scaled.
            let scale = if i >= 79 { 0.16 } else { 1.0 };
            ep += scale / ep;
            eq += 1.0 / eq;
        }
        assert!((q.cwnd() - eq).abs() < 1e-9);
        assert!((p.cwnd() - ep).abs() < 1e-9, "{} vs {ep}", p.cwnd());
    }

    #[test]
    fn loss_halves_in_any_mode() {
        let mut p = Prague::with_state(PragueConfig::default(), 64.0, 0.1);
        p.on_loss(&LossSample::fast(5, 64, 60), SimTime::ZERO);
        assert_eq!(p.cwnd(), 32.0);
    }

    #[test]
    fn classic_fallback_halves_on_marks_and_keeps_ect1() {
        let cfg = PragueConfig {
            fallback: Some(FallbackConfig { forced: Some(QueueClass::ClassicQueue), ..Default::default() }),
            ..Default::default()
        };
        let mut p = Prague::with_state(cfg, 100.0, 0.0);
        let mut idx = 0;
        // Eight rounds of unmarked-but-armed traffic to reach the evaluation.
        p.on_ack(&AckSample::simple(fb(true), idx, 100, false), SimTime::ZERO);
        for round in 0..8 {
            for k in 0..10 {
                idx += 1;
                p.on_ack(&AckSample::simple(fb(false), idx, 1000 + round * 10 + k, k == 9), SimTime::ZERO);
            }
        }
        assert_eq!(p.mode(), PragueMode::ClassicFallback);
        let before = p.cwnd();
        p.on_ack(&AckSample::simple(fb(true), 5000, 6000, false), SimTime::ZERO);
        assert!((p.cwnd() - before / 2.0).abs() < 1e-9);
        assert_eq!(p.decision().ect, Ecn::Ect1);
    }
}
