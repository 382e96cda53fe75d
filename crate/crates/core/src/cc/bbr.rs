//! Simplified BBR models.
//!
//! Both versions share the model-based core: a windowed-max bandwidth
//! filter, a windowed-min RTT filter, Startup/Drain/ProbeBW/ProbeRTT and a
//! window of `cwnd_gain · BDP`. Version 1 ignores loss (except timeouts)
//! and ECN entirely. Version 2 adds the `inflight_hi`/`inflight_lo` bounds,
//! a timed ProbeBW cycle (Down, Cruise, Refill, Up) and an optional ECN
//! response driven by an EWMA of the per-round marked fraction.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::des::{SeededRng, SimTime};
use crate::packet::{Ecn, MSS};

use super::{AckSample, CcDecision, CongestionControl, FeedbackMode, LossSample, ReductionGate, INITIAL_CWND};

const HIGH_GAIN: f64 = 2.885;
const V1_GAIN_CYCLE: [f64; 8] = [1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
const BBR_MIN_CWND: f64 = 4.0;
const QUANTA_PKTS: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BbrVersion {
    V1,
    V2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BbrMode {
    Startup,
    Drain,
    ProbeBw,
    ProbeRtt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeBwPhase {
    /// Version 1: index into the eight-phase gain cycle.
    Cycle(usize),
    Down,
    Cruise,
    Refill,
    Up,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BbrConfig {
    pub version: BbrVersion,
    /// React to CE marks (version 2 only).
    pub ecn_enabled: bool,
    /// Send ECT(1) so an L4S queue classifies the flow as low latency.
    pub accecn_l4s: bool,
    pub bw_window_rounds: u64,
    pub min_rtt_window: SimTime,
    pub probe_rtt_duration: SimTime,
    pub cwnd_gain: f64,
    /// Per-round marked fraction above which the path is "too full".
    pub ecn_thresh: f64,
    /// Per-round loss rate above which a probe counts as too high.
    pub loss_thresh: f64,
    pub ecn_alpha_gain: f64,
    pub ecn_factor: f64,
    /// Multiplicative cut of `inflight_lo` on a lossy round.
    pub beta: f64,
    /// Version 2 waits this long, plus up to one second of jitter, between
    /// bandwidth probes.
    pub probe_wait: SimTime,
    pub seed: u64,
}

impl BbrConfig {
    pub fn v1() -> Self {
        BbrConfig {
            version: BbrVersion::V1,
            ecn_enabled: false,
            accecn_l4s: false,
            bw_window_rounds: 10,
            min_rtt_window: SimTime::from_secs(10),
            probe_rtt_duration: SimTime::from_millis(200),
            cwnd_gain: 2.0,
            ecn_thresh: 0.5,
            loss_thresh: 0.02,
            ecn_alpha_gain: 1.0 / 16.0,
            ecn_factor: 1.0 / 3.0,
            beta: 0.7,
            probe_wait: SimTime::from_secs(2),
            seed: 0,
        }
    }

    pub fn v2(ecn_enabled: bool, accecn_l4s: bool) -> Self {
        BbrConfig { version: BbrVersion::V2, ecn_enabled: ecn_enabled || accecn_l4s, accecn_l4s, ..BbrConfig::v1() }
    }
}

/// Pacing rate for a gain applied to a bottleneck-bandwidth estimate.
pub fn bbr_pacing_rate(pacing_gain: f64, btlbw_bps: f64) -> f64 {
    pacing_gain * btlbw_bps
}

/// Running maximum over the most recent `window` rounds.
#[derive(Clone, Debug, Default)]
struct WindowedMax {
    samples: VecDeque<(u64, f64)>,
}

impl WindowedMax {
    fn update(&mut self, round: u64, value: f64, window: u64) {
        while self.samples.back().is_some_and(|&(_, v)| v <= value) {
            self.samples.pop_back();
        }
        self.samples.push_back((round, value));
        self.expire(round, window);
    }

    fn expire(&mut self, round: u64, window: u64) {
        while self.samples.front().is_some_and(|&(r, _)| r + window <= round) {
            self.samples.pop_front();
        }
    }

    fn get(&self) -> f64 {
        self.samples.front().map_or(0.0, |&(_, v)| v)
    }
}

#[derive(Debug, Clone)]
pub struct Bbr {
    cfg: BbrConfig,
    rng: SeededRng,
    mode: BbrMode,
    phase: ProbeBwPhase,
    phase_stamp: SimTime,
    phase_round: u64,
    bw: WindowedMax,
    min_rtt: Option<SimTime>,
    min_rtt_stamp: SimTime,
    filled_pipe: bool,
    full_bw: f64,
    full_bw_count: u32,
    pacing_gain: f64,
    cwnd_gain: f64,
    cwnd: f64,
    prior_cwnd: f64,
    probe_rtt_done: Option<SimTime>,
    probe_rtt_round_done: bool,
    round: u64,
    /// Rounds outside ProbeRTT: the clock of the bandwidth filter, which
    /// ignores the deliberately cwnd-starved ProbeRTT samples.
    bw_round: u64,
    // Version 2 state.
    inflight_hi: f64,
    inflight_lo: f64,
    ecn_alpha: f64,
    round_acked: u64,
    round_marked: u64,
    round_lost: u64,
    last_round_delivered: u64,
    probe_up_cnt: f64,
    next_probe_at: SimTime,
    /// Round at which the current probe cycle began.
    cycle_round: u64,
    loss_gate: ReductionGate,
    reductions: u64,
}

impl Bbr {
    pub fn new(cfg: BbrConfig) -> Self {
        let mut rng = SeededRng::new(cfg.seed ^ 0xBB_2B_B2);
        let first_probe = cfg.probe_wait + SimTime::from_nanos(rng.below(1_000_000_000));
        Bbr {
            cfg,
            rng,
            mode: BbrMode::Startup,
            phase: ProbeBwPhase::Cruise,
            phase_stamp: SimTime::ZERO,
            phase_round: 0,
            bw: WindowedMax::default(),
            min_rtt: None,
            min_rtt_stamp: SimTime::ZERO,
            filled_pipe: false,
            full_bw: 0.0,
            full_bw_count: 0,
            pacing_gain: HIGH_GAIN,
            cwnd_gain: HIGH_GAIN,
            cwnd: INITIAL_CWND,
            prior_cwnd: INITIAL_CWND,
            probe_rtt_done: None,
            probe_rtt_round_done: false,
            round: 0,
            bw_round: 0,
            inflight_hi: f64::INFINITY,
            inflight_lo: f64::INFINITY,
            ecn_alpha: 0.0,
            round_acked: 0,
            round_marked: 0,
            round_lost: 0,
            last_round_delivered: 0,
            probe_up_cnt: 1.0,
            next_probe_at: first_probe,
            cycle_round: 0,
            loss_gate: ReductionGate::default(),
            reductions: 0,
        }
    }

    pub fn mode(&self) -> BbrMode {
        self.mode
    }

    pub fn phase(&self) -> ProbeBwPhase {
        self.phase
    }

    pub fn pacing_gain(&self) -> f64 {
        self.pacing_gain
    }

    pub fn btlbw(&self) -> f64 {
        self.bw.get()
    }

    pub fn min_rtt(&self) -> Option<SimTime> {
        self.min_rtt
    }

    pub fn ecn_alpha(&self) -> f64 {
        self.ecn_alpha
    }

    pub fn inflight_hi(&self) -> f64 {
        self.inflight_hi
    }

    pub fn inflight_lo(&self) -> f64 {
        self.inflight_lo
    }

    fn is_v2(&self) -> bool {
        self.cfg.version == BbrVersion::V2
    }

    /// Bandwidth-delay product times `gain`, in packets.
    fn bdp(&self, gain: f64) -> f64 {
        match self.min_rtt {
            Some(rtt) if self.btlbw() > 0.0 => gain * self.btlbw() * rtt.as_secs_f64() / (8.0 * MSS as f64),
            _ => gain * INITIAL_CWND,
        }
    }

    fn enter_probe_bw(&mut self, now: SimTime) {
        self.mode = BbrMode::ProbeBw;
        self.cwnd_gain = self.cfg.cwnd_gain;
        match self.cfg.version {
            BbrVersion::V1 => {
                // Random start phase, never the drain phase.
                let mut idx = self.rng.below(7) as usize;
                if idx >= 1 {
                    idx += 1;
                }
                self.set_phase(ProbeBwPhase::Cycle(idx), now);
            }
            BbrVersion::V2 => self.enter_down(now),
        }
    }

    fn enter_down(&mut self, now: SimTime) {
        self.cycle_round = self.round;
        self.next_probe_at = now + self.cfg.probe_wait + SimTime::from_nanos(self.rng.below(1_000_000_000));
        self.set_phase(ProbeBwPhase::Down, now);
    }

    fn set_phase(&mut self, phase: ProbeBwPhase, now: SimTime) {
        self.phase = phase;
        self.phase_stamp = now;
        self.phase_round = self.round;
        self.pacing_gain = match phase {
            ProbeBwPhase::Cycle(i) => V1_GAIN_CYCLE[i],
            ProbeBwPhase::Down => 0.9,
            ProbeBwPhase::Cruise | ProbeBwPhase::Refill => 1.0,
            ProbeBwPhase::Up => 1.25,
        };
    }

    fn update_v1_cycle(&mut self, ack: &AckSample, now: SimTime, lost_this_round: bool) {
        let ProbeBwPhase::Cycle(idx) = self.phase else { return };
        let min_rtt = self.min_rtt.unwrap_or(SimTime::from_millis(1));
        let full_length = now - self.phase_stamp > min_rtt;
        let prior = ack.rate.map_or(ack.inflight, |r| r.prior_inflight) as f64;
        let gain = self.pacing_gain;
        let advance = if gain > 1.0 {
            full_length && (lost_this_round || prior >= self.bdp(gain))
        } else if gain < 1.0 {
            full_length || prior <= self.bdp(1.0)
        } else {
            full_length
        };
        if advance {
            self.set_phase(ProbeBwPhase::Cycle((idx + 1) % V1_GAIN_CYCLE.len()), now);
        }
    }

    fn update_v2_cycle(&mut self, ack: &AckSample, now: SimTime) {
        let inflight = ack.inflight as f64;
        match self.phase {
            ProbeBwPhase::Down => {
                let headroom = if self.inflight_hi.is_finite() { 0.85 * self.inflight_hi } else { f64::INFINITY };
                if self.round > self.phase_round && inflight <= self.bdp(1.0).min(headroom) {
                    self.set_phase(ProbeBwPhase::Cruise, now);
                }
            }
            ProbeBwPhase::Cruise => {
                // Probe on the wall-clock schedule, or sooner if a Reno flow
                // would by now have grown its window by a BDP.
                let reno_rounds = self.bdp(1.0).clamp(1.0, 63.0) as u64;
                if now >= self.next_probe_at || self.round >= self.cycle_round + reno_rounds {
                    self.inflight_lo = f64::INFINITY;
                    self.set_phase(ProbeBwPhase::Refill, now);
                }
            }
            ProbeBwPhase::Refill => {
                if self.round > self.phase_round {
                    self.probe_up_cnt = 1.0;
                    self.set_phase(ProbeBwPhase::Up, now);
                }
            }
            ProbeBwPhase::Up => {
                if ack.round_ended && self.inflight_hi.is_finite() && inflight + 1.0 >= self.inflight_hi {
                    self.inflight_hi += self.probe_up_cnt;
                    self.probe_up_cnt = (self.probe_up_cnt * 2.0).min(1024.0);
                }
                let min_rtt = self.min_rtt.unwrap_or(SimTime::from_millis(1));
                let prior = ack.rate.map_or(ack.inflight, |r| r.prior_inflight) as f64;
                if now - self.phase_stamp > min_rtt && prior >= self.bdp(1.25) {
                    self.enter_down(now);
                }
            }
            ProbeBwPhase::Cycle(_) => {}
        }
    }

    /// Per-round bookkeeping of version 2's loss and ECN signals.
    fn is_probing_bw(&self) -> bool {
        self.mode == BbrMode::Startup
            || (self.mode == BbrMode::ProbeBw && matches!(self.phase, ProbeBwPhase::Refill | ProbeBwPhase::Up))
    }

    fn end_round_v2(&mut self, now: SimTime) {
        let acked_pkts = self.round_acked as f64 / MSS as f64;
        let probing = self.is_probing_bw();
        if self.cfg.ecn_enabled && self.round_acked > 0 {
            let frac = (self.round_marked as f64 / self.round_acked as f64).min(1.0);
            let g = self.cfg.ecn_alpha_gain;
            self.ecn_alpha = ((1.0 - g) * self.ecn_alpha + g * frac).clamp(0.0, 1.0);
            if self.round_marked > 0 && !probing {
                let base = self.inflight_lo.min(self.cwnd);
                self.inflight_lo = (base * (1.0 - self.ecn_alpha * self.cfg.ecn_factor)).max(BBR_MIN_CWND);
                self.reductions += 1;
            }
            // Heavy marking only bounds inflight_hi when it answers a probe,
            // and then never below beta of the current target.
            if frac > self.cfg.ecn_thresh && probing {
                if self.mode == BbrMode::Startup {
                    self.filled_pipe = true;
                }
                let floor = self.cfg.beta * self.bdp(1.0).min(self.cwnd);
                self.inflight_hi = acked_pkts.max(floor).max(BBR_MIN_CWND);
                if self.mode == BbrMode::ProbeBw && self.phase == ProbeBwPhase::Up {
                    self.enter_down(now);
                }
            }
        }
        if self.round_lost > 0 && !probing {
            let base = self.inflight_lo.min(self.cwnd);
            self.inflight_lo = (self.cfg.beta * base).max(acked_pkts).max(BBR_MIN_CWND);
        }
        self.last_round_delivered = self.round_acked;
        self.round_acked = 0;
        self.round_marked = 0;
        self.round_lost = 0;
    }

    fn check_full_pipe(&mut self) {
        if self.filled_pipe {
            return;
        }
        let bw = self.btlbw();
        if bw >= self.full_bw * 1.25 {
            self.full_bw = bw;
            self.full_bw_count = 0;
        } else {
            self.full_bw_count += 1;
            if self.full_bw_count >= 3 {
                self.filled_pipe = true;
            }
        }
    }

    fn cwnd_cap(&self) -> f64 {
        let mut cap = f64::INFINITY;
        if self.is_v2() {
            let hi = match (self.mode, self.phase) {
                (BbrMode::ProbeBw, ProbeBwPhase::Cruise | ProbeBwPhase::Down) => 0.85 * self.inflight_hi,
                _ => self.inflight_hi,
            };
            cap = hi.min(self.inflight_lo);
        }
        if self.mode == BbrMode::ProbeRtt {
            let floor = if self.is_v2() { (self.bdp(0.5)).max(BBR_MIN_CWND) } else { BBR_MIN_CWND };
            cap = cap.min(floor);
        }
        cap.max(BBR_MIN_CWND)
    }
}

impl CongestionControl for Bbr {
    fn on_ack(&mut self, ack: &AckSample, now: SimTime) -> CcDecision {
        self.round = ack.round;
        self.round_acked += ack.fb.bytes_acked;
        if self.cfg.ecn_enabled {
            self.round_marked += ack.fb.newly_marked_bytes;
        }
        let lost_this_round = self.round_lost > 0;

        if self.mode != BbrMode::ProbeRtt {
            if ack.round_ended {
                self.bw_round += 1;
            }
            if let Some(rs) = ack.rate {
                if rs.delivery_rate_bps > 0.0 {
                    self.bw.update(self.bw_round, rs.delivery_rate_bps, self.cfg.bw_window_rounds);
                }
            }
            self.bw.expire(self.bw_round, self.cfg.bw_window_rounds);
        }

        let rtt = ack.fb.rtt_sample;
        let min_rtt_expired = now > self.min_rtt_stamp + self.cfg.min_rtt_window;
        if rtt > SimTime::ZERO && (self.min_rtt.is_none_or(|m| rtt <= m) || min_rtt_expired) {
            self.min_rtt = Some(rtt);
            self.min_rtt_stamp = now;
        }

        if ack.round_ended {
            if self.is_v2() {
                self.end_round_v2(now);
            } else {
                self.last_round_delivered = self.round_acked;
                self.round_acked = 0;
                self.round_lost = 0;
            }
            if self.mode == BbrMode::Startup {
                self.check_full_pipe();
            }
        }

        match self.mode {
            BbrMode::Startup => {
                if self.filled_pipe {
                    self.mode = BbrMode::Drain;
                    self.pacing_gain = 1.0 / HIGH_GAIN;
                    self.cwnd_gain = HIGH_GAIN;
                }
            }
            BbrMode::Drain => {
                if (ack.inflight as f64) <= self.bdp(1.0) {
                    self.enter_probe_bw(now);
                }
            }
            BbrMode::ProbeBw => match self.cfg.version {
                BbrVersion::V1 => self.update_v1_cycle(ack, now, lost_this_round),
                BbrVersion::V2 => self.update_v2_cycle(ack, now),
            },
            BbrMode::ProbeRtt => {}
        }
        if self.mode == BbrMode::Drain && (ack.inflight as f64) <= self.bdp(1.0) {
            self.enter_probe_bw(now);
        }

        // ProbeRTT entry and exit.
        if min_rtt_expired && self.mode != BbrMode::ProbeRtt {
            self.mode = BbrMode::ProbeRtt;
            self.pacing_gain = 1.0;
            self.prior_cwnd = self.cwnd;
            self.probe_rtt_done = None;
        }
        if self.mode == BbrMode::ProbeRtt {
            if self.probe_rtt_done.is_none() && (ack.inflight as f64) <= self.cwnd_cap() {
                self.probe_rtt_done = Some(now + self.cfg.probe_rtt_duration);
                self.probe_rtt_round_done = false;
            } else if let Some(done) = self.probe_rtt_done {
                if ack.round_ended {
                    self.probe_rtt_round_done = true;
                }
                if self.probe_rtt_round_done && now >= done {
                    self.min_rtt_stamp = now;
                    self.cwnd = self.cwnd.max(self.prior_cwnd);
                    if self.filled_pipe {
                        self.enter_probe_bw(now);
                    } else {
                        self.mode = BbrMode::Startup;
                        self.pacing_gain = HIGH_GAIN;
                        self.cwnd_gain = HIGH_GAIN;
                    }
                }
            }
        }

        let acked = ack.acked_packets();
        let target = self.bdp(self.cwnd_gain) + QUANTA_PKTS;
        if self.filled_pipe {
            self.cwnd = (self.cwnd + acked).min(target);
        } else if self.cwnd < target {
            self.cwnd += acked;
        }
        self.cwnd = self.cwnd.max(BBR_MIN_CWND);
        self.decision()
    }

    fn on_loss(&mut self, loss: &LossSample, now: SimTime) -> CcDecision {
        if loss.rto {
            self.prior_cwnd = self.cwnd;
            self.cwnd = BBR_MIN_CWND;
            self.reductions += 1;
            return self.decision();
        }
        if !self.is_v2() {
            return self.decision();
        }
        self.round_lost += 1;
        // As with marks, losses only bound inflight_hi in answer to a probe,
        // and only once they exceed a small fraction of what was in flight.
        let rate = self.round_lost as f64 / (loss.inflight as f64).max(1.0);
        if self.is_probing_bw() && rate > self.cfg.loss_thresh && self.loss_gate.try_enter(loss.lost_index, loss.next_index) {
            if self.mode == BbrMode::Startup {
                self.filled_pipe = true;
            }
            let at_loss = (loss.inflight as f64).max(BBR_MIN_CWND);
            let floor = self.cfg.beta * self.bdp(1.0);
            self.inflight_hi = self.inflight_hi.min(at_loss.max(floor));
            if self.mode == BbrMode::ProbeBw && self.phase == ProbeBwPhase::Up {
                self.enter_down(now);
            }
            self.reductions += 1;
        }
        self.decision()
    }

    fn decision(&self) -> CcDecision {
        let btlbw = self.btlbw();
        let pacing = if btlbw > 0.0 {
            bbr_pacing_rate(self.pacing_gain, btlbw)
        } else {
            let rtt = self.min_rtt.unwrap_or(SimTime::from_millis(1)).as_secs_f64().max(1e-4);
            HIGH_GAIN * INITIAL_CWND * MSS as f64 * 8.0 / rtt
        };
        let ect = match (self.cfg.version, self.cfg.accecn_l4s, self.cfg.ecn_enabled) {
            (BbrVersion::V1, _, _) => Ecn::NotEct,
            (BbrVersion::V2, true, _) => Ecn::Ect1,
            (BbrVersion::V2, false, true) => Ecn::Ect0,
            (BbrVersion::V2, false, false) => Ecn::NotEct,
        };
        CcDecision { cwnd: self.cwnd.min(self.cwnd_cap()), pacing_rate: Some(pacing), ect }
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::AccEcn
    }

    fn name(&self) -> &'static str {
        match (self.cfg.version, self.cfg.accecn_l4s, self.cfg.ecn_enabled) {
            (BbrVersion::V1, _, _) => "bbr1",
            (BbrVersion::V2, true, _) => "bbr2-accecn",
            (BbrVersion::V2, false, true) => "bbr2-ecn",
            (BbrVersion::V2, false, false) => "bbr2",
        }
    }

    fn reductions(&self) -> u64 {
        self.reductions
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cc::{AckFeedback, RateSample};

    const RATE: f64 = 100e6;

    fn sample(i: u64, round: u64, round_ended: bool, inflight: u32, rtt_ms: u64, marked: bool) -> AckSample {
        AckSample {
            fb: AckFeedback {
                bytes_acked: MSS as u64,
                rtt_sample: SimTime::from_millis(rtt_ms),
                newly_marked_bytes: if marked { MSS as u64 } else { 0 },
                ece: marked,
                ..Default::default()
            },
            acked_index: i,
            next_index: i + inflight as u64,
            round_ended,
            round,
            inflight,
            rate: Some(RateSample {
                delivery_rate_bps: RATE,
                interval: SimTime::from_millis(rtt_ms),
                delivered_bytes: 0,
                prior_inflight: inflight,
            }),
        }
    }

    /// Drives the model with a steady 100 Mb/s, 10 ms path until it reaches
    /// ProbeBW.
    fn warmed_up(cfg: BbrConfig) -> (Bbr, SimTime, u64) {
        let mut b = Bbr::new(cfg);
        let mut now = SimTime::ZERO;
        let mut idx = 0;
        for round in 1..40u64 {
            for k in 0..83 {
                now += SimTime::from_micros(120);
                idx += 1;
                b.on_ack(&sample(idx, round, k == 82, 80, 10, false), now);
            }
            if b.mode() == BbrMode::ProbeBw {
                break;
            }
        }
        (b, now, idx)
    }

    #[test]
    fn windowed_max_expires_old_rounds() {
        let mut w = WindowedMax::default();
        w.update(0, 10.0, 3);
        w.update(1, 5.0, 3);
        assert_eq!(w.get(), 10.0);
        w.update(3, 4.0, 3);
        assert_eq!(w.get(), 5.0);
    }

    #[test]
    fn v1_probe_bw_paces_at_gain_times_btlbw() {
        let (mut b, mut now, mut idx) = warmed_up(BbrConfig::v1());
        assert_eq!(b.mode(), BbrMode::ProbeBw);
        let mut seen = Vec::new();
        for round in 100..140u64 {
            for k in 0..83 {
                now += SimTime::from_micros(120);
                idx += 1;
                let d = b.on_ack(&sample(idx, round, k == 82, 110, 10, false), now);
                let expected = bbr_pacing_rate(b.pacing_gain(), b.btlbw());
                assert!((d.pacing_rate.unwrap() - expected).abs() < 1e-6);
                if !seen.contains(&b.pacing_gain().to_bits()) {
                    seen.push(b.pacing_gain().to_bits());
                }
            }
        }
        let mut gains: Vec<f64> = seen.into_iter().map(f64::from_bits).collect();
        gains.sort_by(f64::total_cmp);
        assert_eq!(gains, vec![0.75, 1.0, 1.25]);
    }

    #[test]
    fn v1_ignores_marks() {
        let (mut a, now, idx) = warmed_up(BbrConfig::v1());
        let mut b = a.clone();
        let da = a.on_ack(&sample(idx + 1, 200, true, 80, 10, false), now);
        let db = b.on_ack(&sample(idx + 1, 200, true, 80, 10, true), now);
        assert_eq!(da, db);
        assert_eq!(da.ect, Ecn::NotEct);
    }

    #[test]
    fn v1_only_caps_on_timeout() {
        let (mut b, now, idx) = warmed_up(BbrConfig::v1());
        let before = b.decision().cwnd;
        b.on_loss(&LossSample::fast(idx, idx + 80, 80), now);
        assert_eq!(b.decision().cwnd, before);
        b.on_loss(&LossSample { lost_index: idx, next_index: idx + 80, inflight: 80, rto: true }, now);
        assert_eq!(b.decision().cwnd, BBR_MIN_CWND);
    }

    #[test]
    fn codepoints_by_variant() {
        assert_eq!(Bbr::new(BbrConfig::v2(false, false)).decision().ect, Ecn::NotEct);
        assert_eq!(Bbr::new(BbrConfig::v2(true, false)).decision().ect, Ecn::Ect0);
        assert_eq!(Bbr::new(BbrConfig::v2(false, true)).decision().ect, Ecn::Ect1);
    }

    #[test]
    fn v2_ecn_alpha_tracks_marks_and_caps_inflight() {
        let (mut b, mut now, mut idx) = warmed_up(BbrConfig::v2(true, false));
        let before = b.decision().cwnd;
        for round in 100..110u64 {
            for k in 0..80 {
                now += SimTime::from_micros(120);
                idx += 1;
                b.on_ack(&sample(idx, round, k == 79, 80, 10, k % 4 != 0), now);
            }
        }
        assert!(b.ecn_alpha() > 0.0 && b.ecn_alpha() <= 1.0);
        assert!(b.inflight_hi().is_finite());
        assert!(b.decision().cwnd < before);
    }

    #[test]
    fn v2_loss_sets_inflight_hi() {
        // Outside a probe a loss does not bound inflight_hi.
        let (mut b, now, idx) = warmed_up(BbrConfig::v2(false, false));
        assert_eq!(b.mode(), BbrMode::ProbeBw);
        assert!(b.inflight_hi().is_infinite());
        b.on_loss(&LossSample::fast(idx, idx + 120, 120), now);
        assert!(b.inflight_hi().is_infinite());

        // Startup probes: one loss in 120 is noise, three is too many.
        let mut s = Bbr::new(BbrConfig::v2(false, false));
        s.on_loss(&LossSample::fast(1, 120, 120), now);
        assert!(s.inflight_hi().is_infinite());
        s.on_loss(&LossSample::fast(2, 120, 120), now);
        s.on_loss(&LossSample::fast(3, 120, 120), now);
        assert_eq!(s.inflight_hi(), 120.0);
        assert!(s.inflight_lo() >= 0.0);
    }
}
