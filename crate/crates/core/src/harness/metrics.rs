use serde::{Deserialize, Serialize};

use crate::des::SimTime;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("no values")]
    Empty,
    #[error("all throughputs are zero")]
    AllZero,
    #[error("negative or non-finite throughput {0}")]
    Invalid(f64),
}

/// Jain's fairness index `(Σx)² / (n·Σx²)`.
pub fn jain_index(xs: &[f64]) -> Result<f64, MetricsError> {
    if xs.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&bad) = xs.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(MetricsError::Invalid(bad));
    }
    let sum: f64 = xs.iter().sum();
    let sq: f64 = xs.iter().map(|x| x * x).sum();
    if sq == 0.0 {
        return Err(MetricsError::AllZero);
    }
    Ok(sum * sum / (xs.len() as f64 * sq))
}

/// Fixed-width sojourn histogram for percentiles.
#[derive(Clone, Debug)]
pub(crate) struct DelayHistogram {
    bins: Vec<u32>,
    count: u64,
}

const BIN_NS: u64 = 10_000;
const BINS: usize = 100_000;

impl Default for DelayHistogram {
    fn default() -> Self {
        DelayHistogram { bins: vec![0; BINS], count: 0 }
    }
}

impl DelayHistogram {
    pub(crate) fn record(&mut self, d: SimTime) {
        let bin = ((d.as_nanos() / BIN_NS) as usize).min(BINS - 1);
        self.bins[bin] += 1;
        self.count += 1;
    }

    /// Upper edge of the bin holding quantile `q`, in milliseconds.
    pub(crate) fn quantile_ms(&self, q: f64) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let rank = ((q * self.count as f64).ceil() as u64).max(1);
        let mut seen = 0u64;
        for (i, &c) in self.bins.iter().enumerate() {
            seen += c as u64;
            if seen >= rank {
                return ((i as u64 + 1) * BIN_NS) as f64 / 1e6;
            }
        }
        (BINS as u64 * BIN_NS) as f64 / 1e6
    }
}

/// Per-flow results of one trial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowMetrics {
    /// Goodput in Mb/s over the whole run.
    pub throughput: f64,
    pub mean_rtt: f64,
    /// Mean bottleneck sojourn over delivered packets, ms.
    pub mean_qdelay: f64,
    pub p99_qdelay: f64,
    pub marks: u64,
    pub drops: u64,
    pub share: f64,
}

/// Per-flow series sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub t: f64,
    pub flow: usize,
    /// Mb/s delivered during the period.
    pub throughput: f64,
    pub srtt_ms: f64,
    /// Mean sojourn of packets that left the bottleneck during the period.
    pub qdelay_ms: f64,
    pub delivered_bytes: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    pub flows: Vec<FlowMetrics>,
    pub series: Vec<SamplePoint>,
    pub events: u64,
}

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Stat {
        if xs.is_empty() {
            return Stat::default();
        }
        if xs.iter().all(|&x| x == xs[0]) {
            return Stat { mean: xs[0], std: 0.0 };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() < 2 { 0.0 } else { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() };
        Stat { mean, std }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub throughput: Stat,
    pub mean_rtt: Stat,
    pub mean_qdelay: Stat,
    pub p99_qdelay: Stat,
    pub marks: Stat,
    pub drops: Stat,
    pub share: Stat,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScenarioResult {
    pub seeds: Vec<u64>,
    pub flows: Vec<FlowSummary>,
}

/// Mean and sample standard deviation of every per-flow metric.
pub fn aggregate(trials: &[TrialResult]) -> Result<ScenarioResult, MetricsError> {
    let first = trials.first().ok_or(MetricsError::Empty)?;
    let nflows = first.flows.len();
    let col = |f: usize, get: fn(&FlowMetrics) -> f64| -> Stat {
        Stat::of(&trials.iter().map(|t| get(&t.flows[f])).collect::<Vec<_>>())
    };
    let flows = (0..nflows)
        .map(|f| FlowSummary {
            throughput: col(f, |m| m.throughput),
            mean_rtt: col(f, |m| m.mean_rtt),
            mean_qdelay: col(f, |m| m.mean_qdelay),
            p99_qdelay: col(f, |m| m.p99_qdelay),
            marks: col(f, |m| m.marks as f64),
            drops: col(f, |m| m.drops as f64),
            share: col(f, |m| m.share),
        })
        .collect();
    Ok(ScenarioResult { seeds: trials.iter().map(|t| t.seed).collect(), flows })
}

/// Fills in `share` from the throughputs, so shares sum to one exactly
/// when any flow delivered data.
pub(crate) fn assign_shares(flows: &mut [FlowMetrics]) {
    let total: f64 = flows.iter().map(|f| f.throughput).sum();
    let n = flows.len();
    for (i, f) in flows.iter_mut().enumerate() {
        f.share = if total > 0.0 { f.throughput / total } else if i == 0 { 1.0 } else { 0.0 };
        if n == 1 {
            f.share = 1.0;
        }
    }
    if n == 2 && total > 0.0 {
        flows[1].share = 1.0 - flows[0].share;
    }
}
