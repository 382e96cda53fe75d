use crate::des::SimTime;
use crate::packet::{Ecn, Packet};

use super::{DualPi2Config, EnqueueVerdict, PacketQueue, QueueConfig, QueueDiscipline, QueueKind, QueueStats, Recur};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualQueue {
    /// Low-latency queue.
    L,
    /// Classic queue.
    C,
}

/// ECT(1) and CE go to the L queue, everything else to the C queue.
pub fn dualpi2_classify(ecn: Ecn) -> DualQueue {
    match ecn {
        Ecn::Ect1 | Ecn::Ce => DualQueue::L,
        Ecn::Ect0 | Ecn::NotEct => DualQueue::C,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Pi2State {
    pub p_prime: f64,
    pub prev_qdelay: SimTime,
    pub last_update: SimTime,
}

/// One PI step: `p' += α·(qdelay − target) + β·(qdelay − prev_qdelay)`,
/// delays in seconds, clamped to [0, 1].
pub fn dualpi2_pi_update(state: &mut Pi2State, qdelay: SimTime, cfg: &DualPi2Config) -> f64 {
    let err = qdelay.as_secs_f64() - cfg.pi_target.as_secs_f64();
    let trend = qdelay.as_secs_f64() - state.prev_qdelay.as_secs_f64();
    state.p_prime = (state.p_prime + cfg.alpha_gain * err + cfg.beta_gain * trend).clamp(0.0, 1.0);
    state.prev_qdelay = qdelay;
    state.p_prime
}

/// Returns `(p_classic, p_coupled_l4s)` = `(p'², min(k·p', 1))`.
pub fn dualpi2_probabilities(p_prime: f64, k: f64) -> (f64, f64) {
    let p = p_prime.clamp(0.0, 1.0);
    (p * p, (k * p).min(1.0))
}

/// Coupled dual-queue AQM.
///
/// The C queue is controlled by a PI controller on queuing delay whose
/// output p' is squared for classic traffic and scaled by k for the L
/// queue, which additionally marks everything above a shallow sojourn
/// step. The L queue has priority, except that a weighted round-robin
/// credit reserves `c_protection` of the link for C while both queues are
/// backlogged. Both queues share one byte limit.
#[derive(Debug)]
pub struct DualPi2 {
    l: PacketQueue,
    c: PacketQueue,
    pi: Pi2State,
    cfg: DualPi2Config,
    limit: u64,
    credit: f64,
    recur_l: Recur,
    recur_c: Recur,
    stats: QueueStats,
    l_marks: u64,
    c_marks: u64,
}

impl DualPi2 {
    pub fn new(cfg: &QueueConfig) -> Self {
        DualPi2 {
            l: PacketQueue::default(),
            c: PacketQueue::default(),
            pi: Pi2State::default(),
            cfg: cfg.dualpi2,
            limit: cfg.buffer_limit,
            credit: 0.0,
            recur_l: Recur::default(),
            recur_c: Recur::default(),
            stats: QueueStats::default(),
            l_marks: 0,
            c_marks: 0,
        }
    }

    pub fn p_prime(&self) -> f64 {
        self.pi.p_prime
    }

    pub fn l_len(&self) -> usize {
        self.l.len()
    }

    pub fn c_len(&self) -> usize {
        self.c.len()
    }

    /// (L-queue marks, C-queue marks) so far.
    pub fn marks(&self) -> (u64, u64) {
        (self.l_marks, self.c_marks)
    }

    /// Runs every PI update that fell due up to `now`.
    fn catch_up(&mut self, now: SimTime) {
        loop {
            let due = self.pi.last_update + self.cfg.t_update;
            if due > now {
                break;
            }
            let qdelay = self.l.head_sojourn(due).max(self.c.head_sojourn(due));
            dualpi2_pi_update(&mut self.pi, qdelay, &self.cfg);
            self.pi.last_update = due;
        }
    }
}

impl QueueDiscipline for DualPi2 {
    fn enqueue(&mut self, mut pkt: Packet, now: SimTime, dropped: &mut Vec<Packet>) -> EnqueueVerdict {
        self.catch_up(now);
        if self.l.bytes() + self.c.bytes() + pkt.size as u64 > self.limit {
            self.stats.on_drop(pkt.size, false);
            dropped.push(pkt);
            return EnqueueVerdict::Drop;
        }
        pkt.enqueued_at = now;
        self.stats.on_enqueue(pkt.size);
        match dualpi2_classify(pkt.ecn) {
            DualQueue::L => self.l.push(pkt),
            DualQueue::C => self.c.push(pkt),
        }
        EnqueueVerdict::Accept { marked: false }
    }

    fn dequeue(&mut self, now: SimTime, dropped: &mut Vec<Packet>) -> Option<(Packet, bool)> {
        self.catch_up(now);
        let (p_c, p_cl) = dualpi2_probabilities(self.pi.p_prime, self.cfg.coupling_k);
        let wc = self.cfg.c_protection;
        let wl = 1.0 - wc;
        loop {
            if !self.l.is_empty() && (self.c.is_empty() || self.credit <= 0.0) {
                let mut pkt = self.l.pop().expect("nonempty");
                if !self.c.is_empty() {
                    self.credit += wc * pkt.size as f64;
                }
                let step = pkt.sojourn(now) > self.cfg.step_thresh;
                let marked = (step || self.recur_l.fire(p_cl)) && pkt.mark_ce();
                self.l_marks += marked as u64;
                self.stats.on_dequeue(pkt.size, marked);
                return Some((pkt, marked));
            }
            let mut pkt = self.c.pop()?;
            if !self.l.is_empty() {
                self.credit -= wl * pkt.size as f64;
            } else {
                self.credit = 0.0;
            }
            if self.recur_c.fire(p_c) {
                if pkt.mark_ce() {
                    self.c_marks += 1;
                    self.stats.on_dequeue(pkt.size, true);
                    return Some((pkt, true));
                }
                self.stats.on_drop(pkt.size, true);
                dropped.push(pkt);
                continue;
            }
            self.stats.on_dequeue(pkt.size, false);
            return Some((pkt, false));
        }
    }

    fn len_bytes(&self) -> u64 {
        self.l.bytes() + self.c.bytes()
    }

    fn len_packets(&self) -> usize {
        self.l.len() + self.c.len()
    }

    fn stats(&self) -> QueueStats {
        self.stats
    }

    fn drain(&mut self) -> Vec<Packet> {
        let mut all = self.l.take_all();
        all.extend(self.c.take_all());
        all
    }

    fn kind(&self) -> QueueKind {
        QueueKind::DualPi2
    }
}
