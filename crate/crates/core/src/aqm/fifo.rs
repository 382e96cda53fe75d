use crate::des::SimTime;
use crate::packet::Packet;

use super::{EnqueueVerdict, PacketQueue, QueueDiscipline, QueueKind, QueueStats};

/// Tail-drop FIFO, optionally with a sojourn-time CE threshold.
///
/// With a threshold, ECN-capable packets that waited longer than it are
/// marked as they leave. Non-ECT packets are never touched at dequeue.
#[derive(Debug)]
pub struct Fifo {
    q: PacketQueue,
    limit: u64,
    threshold: Option<SimTime>,
    stats: QueueStats,
}

impl Fifo {
    pub fn new(limit: u64, threshold: Option<SimTime>) -> Self {
        Fifo { q: PacketQueue::default(), limit, threshold, stats: QueueStats::default() }
    }
}

impl QueueDiscipline for Fifo {
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

    fn dequeue(&mut self, now: SimTime, _dropped: &mut Vec<Packet>) -> Option<(Packet, bool)> {
        let mut pkt = self.q.pop()?;
        let marked = match self.threshold {
            Some(th) if pkt.sojourn(now) > th => pkt.mark_ce(),
            _ => false,
        };
        self.stats.on_dequeue(pkt.size, marked);
        Some((pkt, marked))
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
        if self.threshold.is_some() {
            QueueKind::FifoEcn
        } else {
            QueueKind::Fifo
        }
    }
}
