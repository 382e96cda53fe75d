use super::SimTime;

/// A point-to-point link with a serialization rate and a propagation delay.
/// At most one packet serializes at a time, so delivery order equals
/// submission order.
#[derive(Debug, Clone)]
pub struct Link {
    rate_bps: u64,
    propagation: SimTime,
    busy_until: SimTime,
}

impl Link {
    pub fn new(rate_bps: u64, propagation: SimTime) -> Self {
        assert!(rate_bps > 0, "link rate must be positive");
        Link { rate_bps, propagation, busy_until: SimTime::ZERO }
    }

    pub fn rate_bps(&self) -> u64 {
        self.rate_bps
    }

    pub fn propagation(&self) -> SimTime {
        self.propagation
    }

    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    pub fn is_idle(&self, now: SimTime) -> bool {
        self.busy_until <= now
    }

    pub fn serialization(&self, bytes: u32) -> SimTime {
        SimTime::serialization(bytes, self.rate_bps)
    }

    /// Submits `bytes` at `now` and returns when the last bit reaches the far
    /// end.
    pub fn transmit(&mut self, bytes: u32, now: SimTime) -> SimTime {
        assert!(bytes > 0, "cannot transmit an empty packet");
        let start = now.max(self.busy_until);
        self.busy_until = start + self.serialization(bytes);
        self.busy_until + self.propagation
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idle_bottleneck_link() {
        let mut l = Link::new(100_000_000, SimTime::from_millis(5));
        let now = SimTime::from_millis(1);
        let at = l.transmit(1500, now);
        assert_eq!(at, now + SimTime::from_micros(120) + SimTime::from_millis(5));
        assert_eq!(l.busy_until(), now + SimTime::from_micros(120));
    }

    #[test]
    fn back_to_back_packets_are_spaced_by_serialization() {
        let mut l = Link::new(100_000_000, SimTime::from_millis(5));
        let a = l.transmit(1500, SimTime::ZERO);
        let b = l.transmit(1500, SimTime::from_micros(10));
        assert_eq!(b - a, SimTime::from_micros(120));
    }

    #[test]
    fn gigabit_access_link() {
        let mut l = Link::new(1_000_000_000, SimTime::ZERO);
        assert_eq!(l.transmit(1500, SimTime::from_secs(2)), SimTime::from_secs(2) + SimTime::from_micros(12));
    }
}
