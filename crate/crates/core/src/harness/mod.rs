//! Dumbbell topology, seeded trials and per-flow metrics.

mod metrics;
mod scenario;
mod sender;
mod sim;

pub use metrics::{aggregate, jain_index, FlowMetrics, FlowSummary, MetricsError, SamplePoint, ScenarioResult, Stat, TrialResult};
pub use scenario::{parse_cc, EcnMode, FlowSpec, Scenario, ScenarioError};
pub use sender::{SendPermit, Sender, SenderStats};
pub use sim::{build_dumbbell, run_trial, FlowLedger, SimError, Simulation};
