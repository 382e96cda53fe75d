use crate::aqm::{build_queue, QueueDiscipline};
use crate::cc::Receiver;
use crate::des::{Kernel, Link, SeededRng, SimTime};
use crate::packet::{Packet, ACK_SIZE};

use super::metrics::{assign_shares, DelayHistogram, FlowMetrics, SamplePoint, TrialResult};
use super::scenario::{Scenario, ScenarioError};
use super::sender::{SendPermit, Sender};

/// Pending events beyond this mean the model is running away.
const MAX_PENDING_EVENTS: usize = 5_000_000;
/// Flows start at a random offset in `[0, START_JITTER)`.
const START_JITTER: SimTime = SimTime::from_millis(1);

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("event queue grew past {0} pending events")]
    Divergence(usize),
}

#[derive(Debug)]
enum Action {
    FlowStart(usize),
    /// Pacing timer.
    Wake(usize),
    RouterArrive(Packet),
    LinkFree,
    ReceiverArrive(Packet),
    AckArrive(Packet),
    RtoCheck(usize),
    Sample,
}

/// Per-flow packet accounting.
#[derive(Clone, Debug, Default)]
pub struct FlowLedger {
    pub sent: u64,
    /// Between the sender and the router queue.
    pub to_router: u64,
    pub queued: u64,
    /// Dequeued, not yet at the receiver.
    pub on_wire: u64,
    pub received: u64,
    pub dropped: u64,
    pub marked: u64,
    /// CE found on a packet that was sent not ECN-capable, or any other
    /// codepoint rewrite an AQM may not perform.
    pub illegal_rewrites: u64,
    pub sent_bytes: u64,
    pub received_bytes: u64,
    pub dropped_bytes: u64,
}

impl FlowLedger {
    /// Every data packet sent is in exactly one place.
    pub fn balanced(&self) -> bool {
        self.sent == self.to_router + self.queued + self.on_wire + self.received + self.dropped
    }
}

#[derive(Debug, Default)]
struct FlowStats {
    ledger: FlowLedger,
    sojourn_sum: f64,
    sojourn_n: u64,
    hist: DelayHistogram,
    period_bytes: u64,
    period_sojourn_sum: f64,
    period_sojourn_n: u64,
}

/// The dumbbell: senders on fast access links, a pure-delay node, the
/// bottleneck router and its queue, and receivers whose ACKs return over
/// an uncongested reverse path.
#[derive(Debug)]
pub struct Simulation {
    scenario: Scenario,
    kernel: Kernel<Action>,
    queue: Box<dyn QueueDiscipline>,
    bottleneck: Link,
    link_busy: bool,
    senders: Vec<Sender>,
    access: Vec<Link>,
    receivers: Vec<Receiver>,
    last_ack_arrival: Vec<SimTime>,
    rng: SeededRng,
    stats: Vec<FlowStats>,
    series: Vec<SamplePoint>,
    next_packet_id: u64,
    dropped: Vec<Packet>,
    seed: u64,
}

pub fn build_dumbbell(s: &Scenario, seed: u64) -> Result<Simulation, SimError> {
    s.validate()?;
    let queue = build_queue(&s.queue_config()).map_err(ScenarioError::from)?;
    let mut rng = SeededRng::new(seed);
    let mut kernel = Kernel::new();
    let flows = s.flows();
    let mut senders = Vec::new();
    let mut receivers = Vec::new();
    for (i, f) in flows.iter().enumerate() {
        let cc_seed = rng.fork(i as u64).below(u64::MAX);
        let cc = f.build_cc(cc_seed, s.fallback_forced);
        receivers.push(Receiver::new(cc.feedback_mode()));
        senders.push(Sender::new(i, cc));
        let at = f.start_at + SimTime::from_nanos(rng.below(START_JITTER.as_nanos()));
        kernel.schedule(at, Action::FlowStart(i));
    }
    if let Some(p) = s.sample_period {
        kernel.schedule(p, Action::Sample);
    }
    Ok(Simulation {
        scenario: s.clone(),
        kernel,
        queue,
        bottleneck: Link::new(s.bottleneck_rate, SimTime::ZERO),
        link_busy: false,
        access: flows.iter().map(|_| Link::new(s.access_rate, SimTime::ZERO)).collect(),
        senders,
        receivers,
        last_ack_arrival: vec![SimTime::ZERO; flows.len()],
        rng,
        stats: flows.iter().map(|_| FlowStats::default()).collect(),
        series: Vec::new(),
        next_packet_id: 0,
        dropped: Vec::new(),
        seed,
    })
}

impl Simulation {
    pub fn now(&self) -> SimTime {
        self.kernel.now()
    }

    pub fn sender(&self, flow: usize) -> &Sender {
        &self.senders[flow]
    }

    pub fn queue(&self) -> &dyn QueueDiscipline {
        self.queue.as_ref()
    }

    pub fn ledger(&self, flow: usize) -> &FlowLedger {
        &self.stats[flow].ledger
    }

    pub fn receiver(&self, flow: usize) -> &Receiver {
        &self.receivers[flow]
    }

    /// Runs until `deadline` (absolute).
    pub fn run_until(&mut self, deadline: SimTime) -> Result<(), SimError> {
        while let Some(ev) = self.kernel.pop_due(deadline) {
            self.handle(ev.action);
            if self.kernel.pending() > MAX_PENDING_EVENTS {
                return Err(SimError::Divergence(MAX_PENDING_EVENTS));
            }
        }
        self.kernel.settle(deadline);
        Ok(())
    }

    fn half_rtt(&self) -> SimTime {
        SimTime::from_nanos(self.scenario.base_rtt.as_nanos() / 2)
    }

    fn handle(&mut self, action: Action) {
        let now = self.kernel.now();
        match action {
            Action::FlowStart(f) => {
                self.senders[f].start(now);
                self.try_send(f);
            }
            Action::Wake(f) => {
                self.senders[f].wake_pending = false;
                self.try_send(f);
            }
            Action::RouterArrive(pkt) => self.router_arrive(pkt),
            Action::LinkFree => {
                self.link_busy = false;
                self.start_transmission();
            }
            Action::ReceiverArrive(pkt) => self.receiver_arrive(pkt),
            Action::AckArrive(ack) => {
                let f = ack.flow_id;
                let fb = ack.ack_info.expect("ACKs carry feedback");
                self.senders[f].on_ack(fb, ack.send_index, now);
                self.try_send(f);
                self.arm_rto(f);
            }
            Action::RtoCheck(f) => {
                self.senders[f].rto_pending = false;
                if self.senders[f].on_rto_check(now) {
                    self.try_send(f);
                }
                self.arm_rto(f);
            }
            Action::Sample => self.sample(),
        }
    }

    fn try_send(&mut self, f: usize) {
        let now = self.kernel.now();
        loop {
            match self.senders[f].permit(now) {
                SendPermit::Blocked => break,
                SendPermit::At(t) => {
                    if !self.senders[f].wake_pending {
                        self.senders[f].wake_pending = true;
                        self.kernel.schedule(t, Action::Wake(f));
                    }
                    break;
                }
                SendPermit::Now => {
                    let id = self.next_packet_id;
                    self.next_packet_id += 1;
                    let pkt = self.senders[f].transmit(id, now);
                    let at = self.access[f].transmit(pkt.size, now) + self.half_rtt();
                    let l = &mut self.stats[f].ledger;
                    l.sent += 1;
                    l.sent_bytes += pkt.size as u64;
                    l.to_router += 1;
                    self.kernel.schedule(at, Action::RouterArrive(pkt));
                }
            }
        }
        self.arm_rto(f);
    }

    fn arm_rto(&mut self, f: usize) {
        let s = &mut self.senders[f];
        if s.rto_pending {
            return;
        }
        if let Some(deadline) = s.rto_deadline() {
            s.rto_pending = true;
            let at = deadline.max(self.kernel.now());
            self.kernel.schedule(at, Action::RtoCheck(f));
        }
    }

    fn router_arrive(&mut self, pkt: Packet) {
        let now = self.kernel.now();
        let f = pkt.flow_id;
        self.stats[f].ledger.to_router -= 1;
        self.stats[f].ledger.queued += 1;
        self.queue.enqueue(pkt, now, &mut self.dropped);
        self.account_drops();
        if !self.link_busy {
            self.start_transmission();
        }
    }

    fn account_drops(&mut self) {
        for p in self.dropped.drain(..) {
            let l = &mut self.stats[p.flow_id].ledger;
            l.queued -= 1;
            l.dropped += 1;
            l.dropped_bytes += p.size as u64;
        }
    }

    fn start_transmission(&mut self) {
        let now = self.kernel.now();
        let next = self.queue.dequeue(now, &mut self.dropped);
        self.account_drops();
        let Some((pkt, marked)) = next else { return };
        let f = pkt.flow_id;
        let sojourn = pkt.sojourn(now);
        let st = &mut self.stats[f];
        st.ledger.queued -= 1;
        st.ledger.on_wire += 1;
        st.ledger.marked += marked as u64;
        st.sojourn_sum += sojourn.as_secs_f64();
        st.sojourn_n += 1;
        st.hist.record(sojourn);
        st.period_sojourn_sum += sojourn.as_secs_f64();
        st.period_sojourn_n += 1;
        let done = self.bottleneck.transmit(pkt.size, now);
        self.link_busy = true;
        self.kernel.schedule(done, Action::LinkFree);
        let at = done + self.access[f].serialization(pkt.size);
        self.kernel.schedule(at, Action::ReceiverArrive(pkt));
    }

    fn receiver_arrive(&mut self, pkt: Packet) {
        let now = self.kernel.now();
        let f = pkt.flow_id;
        let st = &mut self.stats[f];
        st.ledger.on_wire -= 1;
        st.ledger.received += 1;
        st.ledger.received_bytes += pkt.size as u64;
        if !pkt.sent_ecn.may_become(pkt.ecn) {
            st.ledger.illegal_rewrites += 1;
        }
        let (fb, is_new) = self.receivers[f].on_data(&pkt);
        if is_new {
            st.period_bytes += pkt.size as u64;
        }
        let id = self.next_packet_id;
        self.next_packet_id += 1;
        let ack = Packet::ack(id, f, &pkt, fb, now);
        let jitter = SimTime::from_nanos(self.rng.below(self.scenario.ack_jitter.as_nanos() + 1));
        let path = SimTime::serialization(ACK_SIZE, self.scenario.access_rate)
            + SimTime::serialization(ACK_SIZE, self.scenario.bottleneck_rate)
            + self.half_rtt()
            + jitter;
        // The reverse path never reorders.
        let at = (now + path).max(self.last_ack_arrival[f]);
        self.last_ack_arrival[f] = at;
        self.kernel.schedule(at, Action::AckArrive(ack));
    }

    fn sample(&mut self) {
        let now = self.kernel.now();
        let period = self.scenario.sample_period.expect("sampling enabled");
        for (f, st) in self.stats.iter_mut().enumerate() {
            let qdelay = if st.period_sojourn_n > 0 { st.period_sojourn_sum / st.period_sojourn_n as f64 * 1e3 } else { 0.0 };
            self.series.push(SamplePoint {
                t: now.as_secs_f64(),
                flow: f,
                throughput: st.period_bytes as f64 * 8.0 / period.as_secs_f64() / 1e6,
                srtt_ms: self.senders[f].srtt().map_or(0.0, |s| s.as_millis_f64()),
                qdelay_ms: qdelay,
                delivered_bytes: st.period_bytes,
            });
            st.period_bytes = 0;
            st.period_sojourn_sum = 0.0;
            st.period_sojourn_n = 0;
        }
        if now + period <= self.scenario.duration {
            self.kernel.schedule(now + period, Action::Sample);
        }
    }

    /// Per-flow metrics over `[0, duration]`.
    pub fn metrics(&self) -> Vec<FlowMetrics> {
        let secs = self.scenario.duration.as_secs_f64();
        let mut out: Vec<FlowMetrics> = (0..self.senders.len())
            .map(|f| {
                let st = &self.stats[f];
                let ss = self.senders[f].stats();
                FlowMetrics {
                    throughput: self.receivers[f].unique_bytes() as f64 * 8.0 / secs / 1e6,
                    mean_rtt: if ss.rtt_samples > 0 { ss.rtt_sum / ss.rtt_samples as f64 * 1e3 } else { 0.0 },
                    mean_qdelay: if st.sojourn_n > 0 { st.sojourn_sum / st.sojourn_n as f64 * 1e3 } else { 0.0 },
                    p99_qdelay: st.hist.quantile_ms(0.99),
                    marks: st.ledger.marked,
                    drops: st.ledger.dropped,
                    share: 0.0,
                }
            })
            .collect();
        assign_shares(&mut out);
        out
    }

    pub fn into_result(self) -> TrialResult {
        TrialResult { seed: self.seed, flows: self.metrics(), events: self.kernel.dispatched(), series: self.series }
    }

    /// Removes whatever is still buffered at the bottleneck, for end-of-run
    /// conservation checks. Returns the number of packets removed.
    pub fn drain(&mut self) -> usize {
        let left = self.queue.drain();
        for p in &left {
            let l = &mut self.stats[p.flow_id].ledger;
            l.queued -= 1;
            l.dropped += 1;
            l.dropped_bytes += p.size as u64;
        }
        left.len()
    }
}

/// Runs one seeded trial of `s` to completion.
pub fn run_trial(s: &Scenario, seed: u64) -> Result<TrialResult, SimError> {
    let mut sim = build_dumbbell(s, seed)?;
    sim.run_until(s.duration)?;
    Ok(sim.into_result())
}
