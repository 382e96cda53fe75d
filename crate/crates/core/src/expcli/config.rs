use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::ExpError;
use crate::aqm::QueueKind;
use crate::cc::QueueClass;
use crate::des::SimTime;
use crate::harness::{FlowSpec, Scenario};

/// The experiment grid, as read from a TOML file.
///
/// Every field has a default, so an empty file describes the full
/// replication grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixConfig {
    pub trials: u32,
    pub duration_s: f64,
    /// Worker threads; 0 picks the machine's parallelism.
    pub jobs: usize,
    /// Trial `k` of every cell runs with seed `seed_base + k`.
    pub seed_base: u64,
    pub out_dir: Option<PathBuf>,
    pub timeseries: bool,
    pub sample_period_ms: f64,
    pub network: NetworkConfig,
    pub grid: GridConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub bottleneck_mbps: f64,
    pub access_mbps: f64,
    pub base_rtt_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub queues: Vec<String>,
    pub buffers_bdp: Vec<f64>,
    /// Flow labels for the first flow, e.g. `prague`, `prague+fb`, `reno-ecn`.
    pub flow_a: Vec<String>,
    /// Opponent labels; `none` runs the first flow alone.
    pub opponents: Vec<String>,
    pub ecn_threshold_ms: Vec<f64>,
    /// Pin the fallback detector's verdict: `classic` or `l4s`.
    pub fallback_forced: Option<String>,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        MatrixConfig {
            trials: 10,
            duration_s: 60.0,
            jobs: 0,
            seed_base: 0,
            out_dir: None,
            timeseries: false,
            sample_period_ms: 100.0,
            network: NetworkConfig::default(),
            grid: GridConfig::default(),
        }
    }
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig { bottleneck_mbps: 100.0, access_mbps: 1000.0, base_rtt_ms: 10.0 }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        GridConfig {
            queues: QueueKind::ALL.iter().map(|q| q.to_string()).collect(),
            buffers_bdp: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            flow_a: s(&["prague", "prague+fb"]),
            opponents: s(&["cubic", "cubic-ecn", "bbr1", "bbr2", "bbr2-ecn", "bbr2-accecn"]),
            ecn_threshold_ms: vec![5.0],
            fallback_forced: None,
        }
    }
}

fn bad(at: impl Into<String>, msg: impl Into<String>) -> ExpError {
    ExpError::Config { at: at.into(), msg: msg.into() }
}

fn positive(at: &str, v: f64) -> Result<f64, ExpError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(bad(at, format!("must be a positive number, got {v}")))
    }
}

fn nonempty<T>(at: &str, v: &[T]) -> Result<(), ExpError> {
    if v.is_empty() {
        Err(bad(at, "must not be empty"))
    } else {
        Ok(())
    }
}

impl MatrixConfig {
    /// The built-in grid: six queues, five buffer sizes, Prague with and
    /// without fallback against every opponent, ten 60 s trials.
    pub fn paper_replication() -> Self {
        MatrixConfig::default()
    }

    pub fn from_toml(text: &str) -> Result<Self, ExpError> {
        let cfg: MatrixConfig = toml::from_str(text).map_err(|e| {
            let at = e.span().map_or_else(
                || "config".to_string(),
                |sp| {
                    let line = text[..sp.start].matches('\n').count() + 1;
                    format!("line {line}")
                },
            );
            bad(at, e.message().to_string())
        })?;
        cfg.scenarios()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ExpError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(path.display().to_string(), e.to_string()))?;
        Self::from_toml(&text).map_err(|e| match e {
            ExpError::Config { at, msg } => bad(format!("{}: {at}", path.display()), msg),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn seeds(&self) -> Vec<u64> {
        (1..=u64::from(self.trials)).map(|k| self.seed_base + k).collect()
    }

    /// Expands the grid, in queue → buffer → flow_a → opponent → threshold order.
    pub fn scenarios(&self) -> Result<Vec<Scenario>, ExpError> {
        if self.trials == 0 {
            return Err(bad("trials", "must be at least 1"));
        }
        let duration = positive("duration_s", self.duration_s)?;
        let period = positive("sample_period_ms", self.sample_period_ms)?;
        let rate = positive("network.bottleneck_mbps", self.network.bottleneck_mbps)?;
        let access = positive("network.access_mbps", self.network.access_mbps)?;
        let rtt = positive("network.base_rtt_ms", self.network.base_rtt_ms)?;
        let g = &self.grid;
        nonempty("grid.queues", &g.queues)?;
        nonempty("grid.buffers_bdp", &g.buffers_bdp)?;
        nonempty("grid.flow_a", &g.flow_a)?;
        nonempty("grid.opponents", &g.opponents)?;
        nonempty("grid.ecn_threshold_ms", &g.ecn_threshold_ms)?;

        let queues = g
            .queues
            .iter()
            .enumerate()
            .map(|(i, q)| q.parse::<QueueKind>().map_err(|e| bad(format!("grid.queues[{i}]"), e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, &b) in g.buffers_bdp.iter().enumerate() {
            positive(&format!("grid.buffers_bdp[{i}]"), b)?;
        }
        let flows_a = g
            .flow_a
            .iter()
            .enumerate()
            .map(|(i, l)| FlowSpec::parse_label(l).map_err(|e| bad(format!("grid.flow_a[{i}]"), e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let opponents = g
            .opponents
            .iter()
            .enumerate()
            .map(|(i, l)| match l.as_str() {
                "none" => Ok(None),
                _ => FlowSpec::parse_label(l).map(Some).map_err(|e| bad(format!("grid.opponents[{i}]"), e.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (i, &t) in g.ecn_threshold_ms.iter().enumerate() {
            positive(&format!("grid.ecn_threshold_ms[{i}]"), t)?;
        }
        let forced = match g.fallback_forced.as_deref() {
            None => None,
            Some("classic") => Some(QueueClass::ClassicQueue),
            Some("l4s") => Some(QueueClass::L4sQueue),
            Some(other) => return Err(bad("grid.fallback_forced", format!("expected `classic` or `l4s`, got `{other}`"))),
        };

        let mut out = Vec::new();
        for &queue in &queues {
            for &buf in &g.buffers_bdp {
                for &a in &flows_a {
                    for &b in &opponents {
                        for &th in &g.ecn_threshold_ms {
                            let mut s = Scenario::new(queue, buf, a, b);
                            s.bottleneck_rate = (rate * 1e6).round() as u64;
                            s.access_rate = (access * 1e6).round() as u64;
                            s.base_rtt = SimTime::from_millis_f64(rtt);
                            s.duration = SimTime::from_secs_f64(duration);
                            s.trials = self.trials;
                            s.queue.ecn_threshold = SimTime::from_millis_f64(th);
                            s.fallback_forced = forced;
                            s.sample_period = self.timeseries.then(|| SimTime::from_millis_f64(period));
                            s.validate().map_err(|e| bad(s.id(), e.to_string()))?;
                            out.push(s);
                        }
                    }
                }
            }
        }
        let mut ids: Vec<String> = out.iter().map(Scenario::id).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(bad("grid", format!("duplicate cell `{}`", w[0])));
        }
        Ok(out)
    }
}
