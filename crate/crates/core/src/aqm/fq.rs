use std::collections::VecDeque;

use crate::des::SimTime;
use crate::packet::Packet;

use super::codel::{CodelParams, CodelState};
use super::{EnqueueVerdict, PacketQueue, QueueConfig, QueueDiscipline, QueueKind, QueueStats};

#[derive(Clone, Copy, Debug)]
enum Inner {
    /// Static sojourn threshold marking.
    Threshold(SimTime),
    Codel(CodelParams),
}

#[derive(Clone, Debug, Default)]
struct FlowQueue {
    q: PacketQueue,
    deficit: i64,
    active: bool,
    codel: CodelState,
}

/// Deficit-round-robin fair queue with one sub-queue per flow.
///
/// Sub-queues are indexed directly by `flow_id`, so flows never collide.
/// The buffer limit is shared; on overflow the head of the longest
/// sub-queue is evicted, unless that is the arriving packet's own flow, in
/// which case the arriving packet is dropped.
#[derive(Debug)]
pub struct FairQueue {
    flows: Vec<FlowQueue>,
    active: VecDeque<usize>,
    inner: Inner,
    kind: QueueKind,
    limit: u64,
    quantum: i64,
    bytes: u64,
    packets: usize,
    stats: QueueStats,
}

impl FairQueue {
    pub fn new(cfg: &QueueConfig) -> Self {
        let inner = match cfg.kind {
            QueueKind::FqCodel => Inner::Codel(CodelParams { target: cfg.codel_target, interval: cfg.codel_interval }),
            _ => Inner::Threshold(cfg.ecn_threshold),
        };
        let kind = if matches!(inner, Inner::Codel(_)) { QueueKind::FqCodel } else { QueueKind::Fq };
        FairQueue {
            flows: Vec::new(),
            active: VecDeque::new(),
            inner,
            kind,
            limit: cfg.buffer_limit,
            quantum: cfg.quantum as i64,
            bytes: 0,
            packets: 0,
            stats: QueueStats::default(),
        }
    }

    /// Bytes buffered for one flow.
    pub fn flow_bytes(&self, flow_id: usize) -> u64 {
        self.flows.get(flow_id).map_or(0, |f| f.q.bytes())
    }

    fn fattest(&self) -> Option<usize> {
        self.flows.iter().enumerate().filter(|(_, f)| !f.q.is_empty()).max_by_key(|(_, f)| f.q.bytes()).map(|(i, _)| i)
    }

    fn deactivate_front(&mut self) {
        if let Some(f) = self.active.pop_front() {
            self.flows[f].active = false;
        }
    }
}

/// Picks the sub-queue the deficit round robin serves next, topping up
/// deficits as it passes over flows that have used up their quantum.
pub fn fq_select(fq: &mut FairQueue) -> Option<usize> {
    loop {
        let f = *fq.active.front()?;
        let flow = &mut fq.flows[f];
        if flow.deficit <= 0 {
            flow.deficit += fq.quantum;
            fq.active.rotate_left(1);
            continue;
        }
        return Some(f);
    }
}

impl QueueDiscipline for FairQueue {
    fn enqueue(&mut self, mut pkt: Packet, now: SimTime, dropped: &mut Vec<Packet>) -> EnqueueVerdict {
        let id = pkt.flow_id;
        if self.flows.len() <= id {
            self.flows.resize_with(id + 1, FlowQueue::default);
        }
        while self.bytes + pkt.size as u64 > self.limit {
            match self.fattest() {
                Some(f) if f != id => {
                    let victim = self.flows[f].q.pop().expect("fattest flow is nonempty");
                    self.bytes -= victim.size as u64;
                    self.packets -= 1;
                    self.stats.on_drop(victim.size, true);
                    dropped.push(victim);
                }
                _ => {
                    self.stats.on_drop(pkt.size, false);
                    dropped.push(pkt);
                    return EnqueueVerdict::Drop;
                }
            }
        }
        pkt.enqueued_at = now;
        self.bytes += pkt.size as u64;
        self.packets += 1;
        self.stats.on_enqueue(pkt.size);
        let flow = &mut self.flows[id];
        flow.q.push(pkt);
        if !flow.active {
            flow.active = true;
            flow.deficit = self.quantum;
            self.active.push_back(id);
        }
        EnqueueVerdict::Accept { marked: false }
    }

    fn dequeue(&mut self, now: SimTime, dropped: &mut Vec<Packet>) -> Option<(Packet, bool)> {
        loop {
            let f = fq_select(self)?;
            let before = dropped.len();
            let flow = &mut self.flows[f];
            let out = match self.inner {
                Inner::Threshold(th) => flow.q.pop().map(|mut p| {
                    let m = p.sojourn(now) > th && p.mark_ce();
                    (p, m)
                }),
                Inner::Codel(params) => flow.codel.dequeue(&mut flow.q, params, now, dropped, &mut self.stats),
            };
            for d in &dropped[before..] {
                self.bytes -= d.size as u64;
                self.packets -= 1;
            }
            match out {
                None => self.deactivate_front(),
                Some((p, m)) => {
                    self.bytes -= p.size as u64;
                    self.packets -= 1;
                    flow.deficit -= p.size as i64;
                    if flow.q.is_empty() {
                        self.deactivate_front();
                    }
                    self.stats.on_dequeue(p.size, m);
                    return Some((p, m));
                }
            }
        }
    }

    fn len_bytes(&self) -> u64 {
        self.bytes
    }

    fn len_packets(&self) -> usize {
        self.packets
    }

    fn stats(&self) -> QueueStats {
        self.stats
    }

    fn drain(&mut self) -> Vec<Packet> {
        self.active.clear();
        self.bytes = 0;
        self.packets = 0;
        self.flows.iter_mut().flat_map(|f| {
            f.active = false;
            f.q.take_all()
        }).collect()
    }

    fn kind(&self) -> QueueKind {
        self.kind
    }
}
