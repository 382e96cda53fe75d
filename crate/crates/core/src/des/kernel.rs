//! Event queue and virtual clock.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SimTime;

/// A scheduled action. Ties on `at` are broken by `ordinal`, which the
/// kernel assigns from a monotonically increasing counter.
#[derive(Debug, Clone)]
pub struct Event<A> {
    pub at: SimTime,
    pub ordinal: u64,
    pub action: A,
}

impl<A> PartialEq for Event<A> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.ordinal == other.ordinal
    }
}

impl<A> Eq for Event<A> {}

impl<A> PartialOrd for Event<A> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<A> Ord for Event<A> {
    // Reversed so the max-heap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.at.cmp(&self.at).then_with(|| other.ordinal.cmp(&self.ordinal))
    }
}

/// Single-threaded discrete-event kernel.
#[derive(Debug)]
pub struct Kernel<A> {
    now: SimTime,
    next_ordinal: u64,
    heap: BinaryHeap<Event<A>>,
    dispatched: u64,
}

impl<A> Default for Kernel<A> {
    fn default() -> Self {
        Self::new()
    }
}

impl<A> Kernel<A> {
    pub fn new() -> Self {
        Kernel { now: SimTime::ZERO, next_ordinal: 0, heap: BinaryHeap::new(), dispatched: 0 }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.heap.len()
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Enqueues `action` at `at` and returns the ordinal it was given.
    ///
    /// Panics if `at` lies before the current clock: that is a logic error
    /// in the model, not a recoverable condition.
    pub fn schedule(&mut self, at: SimTime, action: A) -> u64 {
        assert!(at >= self.now, "event scheduled in the past: at={at} now={}", self.now);
        let ordinal = self.next_ordinal;
        self.next_ordinal += 1;
        self.heap.push(Event { at, ordinal, action });
        ordinal
    }

    pub fn schedule_in(&mut self, delay: SimTime, action: A) -> u64 {
        let at = self.now + delay;
        self.schedule(at, action)
    }

    /// Pops the next event due at or before `deadline`, advancing the clock
    /// to its timestamp.
    pub fn pop_due(&mut self, deadline: SimTime) -> Option<Event<A>> {
        if self.heap.peek()?.at > deadline {
            return None;
        }
        let ev = self.heap.pop()?;
        debug_assert!(ev.at >= self.now);
        self.now = ev.at;
        self.dispatched += 1;
        Some(ev)
    }

    /// Dispatches every event with `at <= deadline` to `handler`.
    ///
    /// Afterwards the clock sits at `deadline` if later events remain
    /// pending. If the queue drained, the clock stays at the last
    /// dispatched event.
    pub fn run_until<F>(&mut self, deadline: SimTime, mut handler: F)
    where
        F: FnMut(&mut Kernel<A>, Event<A>),
    {
        while let Some(ev) = self.pop_due(deadline) {
            handler(self, ev);
        }
        self.settle(deadline);
    }

    /// Advances an idle clock to `deadline` when later events are pending.
    pub fn settle(&mut self, deadline: SimTime) {
        if !self.heap.is_empty() && deadline > self.now {
            self.now = deadline;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drain(k: &mut Kernel<&'static str>, deadline: SimTime) -> Vec<(SimTime, &'static str)> {
        let mut seen = Vec::new();
        k.run_until(deadline, |_, ev| seen.push((ev.at, ev.action)));
        seen
    }

    #[test]
    fn equal_times_dispatch_in_ordinal_order() {
        let mut k = Kernel::new();
        let t = SimTime::from_millis(5);
        let o1 = k.schedule(t, "first");
        let o2 = k.schedule(t, "second");
        assert!(o1 < o2);
        let seen = drain(&mut k, SimTime::from_secs(1));
        assert_eq!(seen.iter().map(|s| s.1).collect::<Vec<_>>(), vec!["first", "second"]);
    }

    #[test]
    fn zero_time_event_runs_before_clock_moves() {
        let mut k = Kernel::new();
        k.schedule(SimTime::ZERO, "boot");
        k.schedule(SimTime::from_millis(1), "later");
        let mut clock_at_boot = None;
        k.run_until(SimTime::ZERO, |k, ev| {
            assert_eq!(ev.action, "boot");
            clock_at_boot = Some(k.now());
        });
        assert_eq!(clock_at_boot, Some(SimTime::ZERO));
        assert_eq!(k.pending(), 1);
        assert_eq!(k.now(), SimTime::ZERO);
    }

    #[test]
    fn out_of_order_scheduling_dispatches_sorted() {
        let mut k = Kernel::new();
        k.schedule(SimTime::from_millis(1), "1");
        k.schedule(SimTime::from_millis(3), "3");
        k.schedule(SimTime::from_millis(2), "2");
        let seen = drain(&mut k, SimTime::from_secs(1));
        assert_eq!(seen.iter().map(|s| s.1).collect::<Vec<_>>(), vec!["1", "2", "3"]);
    }

    #[test]
    fn horizon_is_reached_when_work_remains() {
        let mut k = Kernel::new();
        k.schedule(SimTime::from_millis(59_900), "last-in-window");
        k.schedule(SimTime::from_secs(61), "beyond");
        let seen = drain(&mut k, SimTime::from_secs(60));
        assert_eq!(seen.len(), 1);
        assert_eq!(k.now(), SimTime::from_secs(60));
    }

    #[test]
    fn drained_queue_keeps_last_event_time() {
        let mut k = Kernel::new();
        k.schedule(SimTime::from_millis(59_900), "only");
        drain(&mut k, SimTime::from_secs(60));
        assert_eq!(k.now(), SimTime::from_millis(59_900));
    }

    #[test]
    fn empty_queue_returns_immediately() {
        let mut k: Kernel<&'static str> = Kernel::new();
        assert!(drain(&mut k, SimTime::from_secs(60)).is_empty());
        assert_eq!(k.now(), SimTime::ZERO);
    }

    #[test]
    fn handler_may_schedule_follow_ups() {
        let mut k = Kernel::new();
        k.schedule(SimTime::ZERO, 0u32);
        let mut count = 0;
        k.run_until(SimTime::from_millis(10), |k, ev| {
            count += 1;
            k.schedule_in(SimTime::from_millis(1), ev.action + 1);
        });
        assert_eq!(count, 11);
    }

    #[test]
    #[should_panic(expected = "scheduled in the past")]
    fn scheduling_in_the_past_is_fatal() {
        let mut k = Kernel::new();
        k.schedule(SimTime::from_millis(2), ());
        k.run_until(SimTime::from_millis(2), |_, _| {});
        k.schedule(SimTime::from_millis(1), ());
    }
}
