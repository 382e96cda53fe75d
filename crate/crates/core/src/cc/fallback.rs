//! RTT-variation heuristic that decides whether the marking bottleneck is a
//! shallow L4S queue or a classic single-queue ECN AQM.

use serde::{Deserialize, Serialize};

use crate::des::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueueClass {
    Undecided,
    L4sQueue,
    ClassicQueue,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FallbackConfig {
    /// RTT spread (max − min) above which the queue is deemed classic.
    pub variation_threshold: SimTime,
    /// Rounds per evaluation period.
    pub evaluation_rounds: u32,
    /// Pins every evaluation to this outcome.
    pub forced: Option<QueueClass>,
}

impl Default for FallbackConfig {
    fn default() -> Self {
        FallbackConfig { variation_threshold: SimTime::from_millis(2), evaluation_rounds: 8, forced: None }
    }
}

#[derive(Clone, Debug)]
pub struct FallbackDetector {
    cfg: FallbackConfig,
    armed: bool,
    window_max: SimTime,
    /// Lowest RTT seen since arming; never reset.
    floor: SimTime,
    samples: u64,
    rounds: u32,
    classification: QueueClass,
    evaluations: u64,
}

impl FallbackDetector {
    pub fn new(cfg: FallbackConfig) -> Self {
        FallbackDetector {
            cfg,
            armed: false,
            window_max: SimTime::ZERO,
            floor: SimTime::MAX,
            samples: 0,
            rounds: 0,
            classification: QueueClass::Undecided,
            evaluations: 0,
        }
    }

    pub fn config(&self) -> &FallbackConfig {
        &self.cfg
    }

    /// Starts collecting on the first CE mark.
    pub fn on_mark(&mut self) {
        self.armed = true;
    }

    pub fn armed(&self) -> bool {
        self.armed
    }

    pub fn classification(&self) -> QueueClass {
        self.classification
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Current spread: the window's largest sample above the lowest RTT
    /// seen since arming. A standing queue therefore counts as variation
    /// even when it is steady within one window.
    pub fn spread(&self) -> Option<SimTime> {
        (self.samples > 0).then(|| self.window_max.saturating_sub(self.floor))
    }

    fn reset_window(&mut self) {
        self.window_max = SimTime::ZERO;
        self.samples = 0;
        self.rounds = 0;
    }
}

/// Feeds one RTT sample. At the end of each evaluation period the queue is
/// classified `ClassicQueue` iff the sampled spread exceeds the threshold,
/// and the window restarts.
pub fn fallback_classify(det: &mut FallbackDetector, rtt_sample: SimTime, round_ended: bool) -> QueueClass {
    if !det.armed {
        return det.classification;
    }
    if rtt_sample > SimTime::ZERO {
        det.window_max = det.window_max.max(rtt_sample);
        det.floor = det.floor.min(rtt_sample);
        det.samples += 1;
    }
    if round_ended {
        det.rounds += 1;
        if det.rounds >= det.cfg.evaluation_rounds {
            det.classification = match det.cfg.forced {
                Some(QueueClass::Undecided) | None => {
                    if det.spread().is_some_and(|s| s > det.cfg.variation_threshold) {
                        QueueClass::ClassicQueue
                    } else {
                        QueueClass::L4sQueue
                    }
                }
                Some(forced) => forced,
            };
            det.evaluations += 1;
            det.reset_window();
        }
    }
    det.classification
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feed(det: &mut FallbackDetector, spread_us: u64) -> QueueClass {
        det.on_mark();
        let base = SimTime::from_millis(10);
        let mut out = QueueClass::Undecided;
        for round in 0..8 {
            for k in 0..10u64 {
                let rtt = base + SimTime::from_micros(spread_us * ((k + round) % 10) / 9);
                out = fallback_classify(det, rtt, k == 9);
            }
        }
        out
    }

    #[test]
    fn small_spread_is_l4s() {
        let mut d = FallbackDetector::new(FallbackConfig::default());
        assert_eq!(feed(&mut d, 300), QueueClass::L4sQueue);
    }

    #[test]
    fn large_spread_is_classic() {
        let mut d = FallbackDetector::new(FallbackConfig::default());
        assert_eq!(feed(&mut d, 8_000), QueueClass::ClassicQueue);
    }

    #[test]
    fn steady_standing_queue_is_classic() {
        let mut d = FallbackDetector::new(FallbackConfig::default());
        assert_eq!(feed(&mut d, 300), QueueClass::L4sQueue);
        // The queue settles 5 ms above the path minimum and barely moves.
        let mut out = QueueClass::Undecided;
        for _ in 0..8 {
            for k in 0..10u64 {
                out = fallback_classify(&mut d, SimTime::from_micros(15_000 + 30 * k), k == 9);
            }
        }
        assert_eq!(out, QueueClass::ClassicQueue);
    }

    #[test]
    fn stays_undecided_without_marks() {
        let mut d = FallbackDetector::new(FallbackConfig::default());
        for i in 0..100 {
            let rtt = SimTime::from_millis(10 + (i % 20));
            assert_eq!(fallback_classify(&mut d, rtt, true), QueueClass::Undecided);
        }
        assert_eq!(d.evaluations(), 0);
    }

    #[test]
    fn one_transition_per_period_and_reevaluation() {
        let mut d = FallbackDetector::new(FallbackConfig::default());
        assert_eq!(feed(&mut d, 8_000), QueueClass::ClassicQueue);
        assert_eq!(d.evaluations(), 1);
        assert_eq!(feed(&mut d, 100), QueueClass::L4sQueue);
        assert_eq!(d.evaluations(), 2);
    }

    #[test]
    fn forced_outcome() {
        let cfg = FallbackConfig { forced: Some(QueueClass::ClassicQueue), ..Default::default() };
        let mut d = FallbackDetector::new(cfg);
        assert_eq!(feed(&mut d, 0), QueueClass::ClassicQueue);
    }
}
