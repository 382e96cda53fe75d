use crate::des::SimTime;
use crate::packet::{Packet, MSS};

use super::{EnqueueVerdict, PacketQueue, QueueConfig, QueueDiscipline, QueueKind, QueueStats};

/// Next drop time: `drop_next + interval / sqrt(count)`.
pub fn codel_control_law(drop_next: SimTime, count: u32, interval: SimTime) -> SimTime {
    let count = count.max(1) as f64;
    drop_next + SimTime::from_secs_f64(interval.as_secs_f64() / count.sqrt())
}

/// The CoDel dropping state machine, with ECN: where it would drop an
/// ECN-capable packet it marks it instead.
#[derive(Clone, Debug, Default)]
pub struct CodelState {
    pub first_above_time: Option<SimTime>,
    pub drop_next: SimTime,
    pub count: u32,
    pub lastcount: u32,
    pub dropping: bool,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct CodelParams {
    pub target: SimTime,
    pub interval: SimTime,
}

impl CodelState {
    fn do_dequeue(&mut self, q: &mut PacketQueue, p: CodelParams, now: SimTime) -> Option<(Packet, bool)> {
        let Some(pkt) = q.pop() else {
            self.first_above_time = None;
            return None;
        };
        let sojourn = pkt.sojourn(now);
        let mut ok_to_drop = false;
        if sojourn < p.target || q.bytes() <= MSS as u64 {
            self.first_above_time = None;
        } else {
            match self.first_above_time {
                None => self.first_above_time = Some(now + p.interval),
                Some(t) if now >= t => ok_to_drop = true,
                Some(_) => {}
            }
        }
        Some((pkt, ok_to_drop))
    }

    /// Dequeues from `q`, dropping or marking as the state machine dictates.
    pub(crate) fn dequeue(
        &mut self,
        q: &mut PacketQueue,
        p: CodelParams,
        now: SimTime,
        dropped: &mut Vec<Packet>,
        stats: &mut QueueStats,
    ) -> Option<(Packet, bool)> {
        let Some((mut pkt, mut ok)) = self.do_dequeue(q, p, now) else {
            self.dropping = false;
            return None;
        };
        let mut marked = false;
        if self.dropping {
            if !ok {
                self.dropping = false;
            }
            while self.dropping && now >= self.drop_next {
                self.count += 1;
                if pkt.mark_ce() {
                    marked = true;
                    self.drop_next = codel_control_law(self.drop_next, self.count, p.interval);
                    break;
                }
                stats.on_drop(pkt.size, true);
                dropped.push(pkt);
                match self.do_dequeue(q, p, now) {
                    Some((next, next_ok)) => {
                        pkt = next;
                        ok = next_ok;
                    }
                    None => {
                        self.dropping = false;
                        return None;
                    }
                }
                if !ok {
                    self.dropping = false;
                } else {
                    self.drop_next = codel_control_law(self.drop_next, self.count, p.interval);
                }
            }
        } else if ok {
            if pkt.mark_ce() {
                marked = true;
            } else {
                stats.on_drop(pkt.size, true);
                dropped.push(pkt);
                match self.do_dequeue(q, p, now) {
                    Some((next, _)) => pkt = next,
                    None => {
                        // Still enter the dropping state so a returning
                        // backlog is policed immediately.
                        self.enter_dropping(p, now);
                        return None;
                    }
                }
            }
            self.enter_dropping(p, now);
        }
        Some((pkt, marked))
    }

    fn enter_dropping(&mut self, p: CodelParams, now: SimTime) {
        self.dropping = true;
        let delta = self.count.saturating_sub(self.lastcount);
        self.count = 1;
        if delta > 1 && now.saturating_sub(self.drop_next) < p.interval.mul_f64(16.0) {
            self.count = delta;
        }
        self.drop_next = codel_control_law(now, self.count, p.interval);
        self.lastcount = self.count;
    }
}

/// Single-queue CoDel with the ECN option.
#[derive(Debug)]
pub struct CodelQueue {
    q: PacketQueue,
    state: CodelState,
    params: CodelParams,
    limit: u64,
    stats: QueueStats,
}

impl CodelQueue {
    pub fn new(cfg: &QueueConfig) -> Self {
        CodelQueue {
            q: PacketQueue::default(),
            state: CodelState::default(),
            params: CodelParams { target: cfg.codel_target, interval: cfg.codel_interval },
            limit: cfg.buffer_limit,
            stats: QueueStats::default(),
        }
    }

    pub fn state(&self) -> &CodelState {
        &self.state
    }
}

impl QueueDiscipline for CodelQueue {
    fn enqueue(&mut self, mut pkt: Packet, now: SimTime, dropped: &mut Vec<Packet>) -> EnqueueVerdict {
        if self.q.bytes() + pkt.size as u64 > self.limit {
            self.stats.on_drop(pkt.size, false);
            dropped.push(pkt);
            return EnqueueVerdict::Drop;
        }
        pkt.enqueued_at = now;
        self.stats.on_enqueue(pkt.size);
        self.q.push(pkt);
        EnqueueVerdict::Accept { marked: false }
    }

    fn dequeue(&mut self, now: SimTime, dropped: &mut Vec<Packet>) -> Option<(Packet, bool)> {
        let out = self.state.dequeue(&mut self.q, self.params, now, dropped, &mut self.stats);
        if let Some((p, m)) = &out {
            self.stats.on_dequeue(p.size, *m);
        }
        out
    }

    fn len_bytes(&self) -> u64 {
        self.q.bytes()
    }

    fn len_packets(&self) -> usize {
        self.q.len()
    }

    fn stats(&self) -> QueueStats {
        self.stats
    }

    fn drain(&mut self) -> Vec<Packet> {
        self.q.take_all()
    }

    fn kind(&self) -> QueueKind {
        QueueKind::Codel
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aqm::test_util::pkt;
    use crate::packet::Ecn;

    #[test]
    fn control_law_examples() {
        let i = SimTime::from_millis(100);
        assert_eq!(codel_control_law(SimTime::ZERO, 4, i), SimTime::from_millis(50));
        assert_eq!(codel_control_law(SimTime::ZERO, 1, i), SimTime::from_millis(100));
        assert_eq!(codel_control_law(SimTime::from_secs(1), 100, i), SimTime::from_millis(1010));
    }

    /// Keeps a standing queue of `depth` packets and a sojourn of about
    /// 20 ms, dequeuing one packet per millisecond for `ms` milliseconds.
    fn standing_queue(ecn: Ecn, ms: u64) -> (CodelQueue, Vec<Packet>, u64) {
        let mut q = CodelQueue::new(&QueueConfig::new(QueueKind::Codel, 10_000_000));
        let mut dropped = Vec::new();
        let mut id = 0;
        for _ in 0..20 {
            q.enqueue(pkt(id, 0, ecn), SimTime::ZERO, &mut dropped);
            id += 1;
        }
        let mut marks = 0;
        for t in 1..=ms {
            let now = SimTime::from_millis(t);
            q.enqueue(pkt(id, 0, ecn), now, &mut dropped);
            id += 1;
            if let Some((_, m)) = q.dequeue(now, &mut dropped) {
                marks += m as u64;
            }
        }
        (q, dropped, marks)
    }

    #[test]
    fn no_action_within_the_first_interval() {
        let (_, dropped, marks) = standing_queue(Ecn::NotEct, 100);
        assert!(dropped.is_empty());
        assert_eq!(marks, 0);
    }

    #[test]
    fn standing_queue_drops_non_ect() {
        let (q, dropped, marks) = standing_queue(Ecn::NotEct, 400);
        assert!(!dropped.is_empty());
        assert_eq!(marks, 0);
        assert!(q.state().dropping);
        assert!(q.state().count > 1);
    }

    #[test]
    fn standing_queue_marks_ect() {
        let (_, dropped, marks) = standing_queue(Ecn::Ect0, 400);
        assert!(dropped.is_empty());
        assert!(marks > 1);
    }

    #[test]
    fn short_queue_never_dropped() {
        let mut q = CodelQueue::new(&QueueConfig::new(QueueKind::Codel, 10_000_000));
        let mut dropped = Vec::new();
        for t in 0..1000u64 {
            let now = SimTime::from_millis(t);
            q.enqueue(pkt(t, 0, Ecn::NotEct), now, &mut dropped);
            q.dequeue(now + SimTime::from_millis(50), &mut dropped);
        }
        // A single packet in the queue is never dropped whatever its sojourn.
        assert!(dropped.is_empty());
    }
}
