use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aqm::{AqmError, QueueConfig, QueueKind};
use crate::cc::{Bbr, BbrConfig, CcKind, CongestionControl, Cubic, FallbackConfig, Prague, PragueConfig, QueueClass, Reno};
use crate::des::SimTime;

/// ECN behavior of one flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EcnMode {
    #[serde(rename = "off")]
    Off,
    /// RFC 3168 ECN with ECT(0).
    #[serde(rename = "classic")]
    Classic,
    /// ECT(1) with accurate feedback.
    #[serde(rename = "accecn")]
    AccEcnL4s,
}

impl fmt::Display for EcnMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EcnMode::Off => "off",
            EcnMode::Classic => "classic",
            EcnMode::AccEcnL4s => "accecn",
        })
    }
}

impl FromStr for EcnMode {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "off" | "none" | "no" => Ok(EcnMode::Off),
            "classic" | "ecn" | "on" => Ok(EcnMode::Classic),
            "accecn" | "accecn-l4s" | "l4s" => Ok(EcnMode::AccEcnL4s),
            other => Err(ScenarioError::UnknownName { what: "ECN mode", name: other.to_string() }),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScenarioError {
    #[error("unknown {what} '{name}'")]
    UnknownName { what: &'static str, name: String },
    #[error("fallback is only meaningful for Prague, not {0}")]
    FallbackWithoutPrague(CcKind),
    #[error("{cc} does not support ECN mode {ecn}")]
    UnsupportedEcn { cc: CcKind, ecn: EcnMode },
    #[error("duration must be positive")]
    ZeroDuration,
    #[error("at least one trial is required")]
    NoTrials,
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("buffer multiple must be positive and finite, got {0}")]
    BadBuffer(f64),
    #[error(transparent)]
    Queue(#[from] AqmError),
}

/// One bulk-transfer flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub cc: CcKind,
    pub ecn: EcnMode,
    /// Prague's classic-queue fallback heuristic.
    #[serde(default)]
    pub fallback: bool,
    #[serde(default)]
    pub start_at: SimTime,
}

impl FlowSpec {
    pub fn new(cc: CcKind, ecn: EcnMode) -> Self {
        FlowSpec { cc, ecn, fallback: false, start_at: SimTime::ZERO }
    }

    pub fn prague(fallback: bool) -> Self {
        FlowSpec { fallback, ..FlowSpec::new(CcKind::Prague, EcnMode::AccEcnL4s) }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.fallback && self.cc != CcKind::Prague {
            return Err(ScenarioError::FallbackWithoutPrague(self.cc));
        }
        let ok = match self.cc {
            CcKind::Prague => self.ecn == EcnMode::AccEcnL4s,
            CcKind::Reno | CcKind::Cubic => self.ecn != EcnMode::AccEcnL4s,
            CcKind::BbrV1 => self.ecn == EcnMode::Off,
            CcKind::BbrV2 => true,
        };
        if ok {
            Ok(())
        } else {
            Err(ScenarioError::UnsupportedEcn { cc: self.cc, ecn: self.ecn })
        }
    }

    /// Short name: `cubic`, `cubic-ecn`, `bbr2-accecn`, `prague+fb`, ...
    pub fn label(&self) -> String {
        let mut s = self.cc.to_string();
        match (self.cc, self.ecn) {
            (CcKind::Prague, _) | (_, EcnMode::Off) => {}
            (_, EcnMode::Classic) => s.push_str("-ecn"),
            (_, EcnMode::AccEcnL4s) => s.push_str("-accecn"),
        }
        if self.fallback {
            s.push_str("+fb");
        }
        s
    }

    /// Inverse of [`FlowSpec::label`].
    pub fn parse_label(label: &str) -> Result<Self, ScenarioError> {
        let (body, fallback) = match label.strip_suffix("+fb") {
            Some(b) => (b, true),
            None => (label, false),
        };
        let (cc, ecn) = match body.split_once('-') {
            Some((cc, "ecn")) => (cc, EcnMode::Classic),
            Some((cc, "accecn")) => (cc, EcnMode::AccEcnL4s),
            Some(_) => return Err(ScenarioError::UnknownName { what: "flow", name: label.to_string() }),
            None => (body, EcnMode::Off),
        };
        let cc = parse_cc(cc)?;
        let ecn = if cc == CcKind::Prague { EcnMode::AccEcnL4s } else { ecn };
        let spec = FlowSpec { cc, ecn, fallback, start_at: SimTime::ZERO };
        spec.validate()?;
        Ok(spec)
    }

    /// Instantiates the controller. `forced` pins Prague's fallback
    /// classification; `seed` feeds BBR's randomized phases.
    pub fn build_cc(&self, seed: u64, forced: Option<QueueClass>) -> Box<dyn CongestionControl> {
        let ecn = self.ecn != EcnMode::Off;
        match self.cc {
            CcKind::Reno => Box::new(Reno::new(ecn)),
            CcKind::Cubic => Box::new(Cubic::new(ecn)),
            CcKind::Prague => {
                let fallback = self.fallback.then_some(FallbackConfig { forced, ..FallbackConfig::default() });
                Box::new(Prague::new(PragueConfig { fallback, ..PragueConfig::default() }))
            }
            CcKind::BbrV1 => Box::new(Bbr::new(BbrConfig { seed, ..BbrConfig::v1() })),
            CcKind::BbrV2 => Box::new(Bbr::new(BbrConfig {
                seed,
                ..BbrConfig::v2(self.ecn == EcnMode::Classic, self.ecn == EcnMode::AccEcnL4s)
            })),
        }
    }
}

pub fn parse_cc(name: &str) -> Result<CcKind, ScenarioError> {
    match name.to_ascii_lowercase().as_str() {
        "reno" => Ok(CcKind::Reno),
        "cubic" => Ok(CcKind::Cubic),
        "prague" => Ok(CcKind::Prague),
        "bbr1" | "bbr" | "bbrv1" | "bbr-v1" => Ok(CcKind::BbrV1),
        "bbr2" | "bbrv2" | "bbr-v2" => Ok(CcKind::BbrV2),
        other => Err(ScenarioError::UnknownName { what: "congestion control", name: other.to_string() }),
    }
}

/// One cell of the experiment matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub bottleneck_rate: u64,
    pub access_rate: u64,
    pub base_rtt: SimTime,
    pub buffer_bdp: f64,
    /// Queue parameters; `buffer_limit` is recomputed from `buffer_bdp`.
    pub queue: QueueConfig,
    /// The Prague-side flow.
    pub flow_a: FlowSpec,
    /// The competing flow, absent in single-flow runs.
    pub flow_b: Option<FlowSpec>,
    pub duration: SimTime,
    pub trials: u32,
    /// Pins Prague's fallback classification (misdetection experiments).
    pub fallback_forced: Option<QueueClass>,
    /// Upper bound of the random extra delay on the ACK path.
    pub ack_jitter: SimTime,
    /// Period of the per-flow time series; `None` disables it.
    pub sample_period: Option<SimTime>,
}

impl Scenario {
    pub fn new(queue: QueueKind, buffer_bdp: f64, flow_a: FlowSpec, flow_b: Option<FlowSpec>) -> Self {
        Scenario {
            bottleneck_rate: 100_000_000,
            access_rate: 1_000_000_000,
            base_rtt: SimTime::from_millis(10),
            buffer_bdp,
            queue: QueueConfig::for_bdp(queue, buffer_bdp),
            flow_a,
            flow_b,
            duration: SimTime::from_secs(60),
            trials: 10,
            fallback_forced: None,
            ack_jitter: SimTime::from_micros(20),
            sample_period: None,
        }
    }

    /// Bytes in one bandwidth-delay product.
    pub fn bdp_bytes(&self) -> u64 {
        (self.bottleneck_rate as u128 * self.base_rtt.as_nanos() as u128 / 8 / 1_000_000_000) as u64
    }

    pub fn buffer_limit(&self) -> u64 {
        (self.buffer_bdp * self.bdp_bytes() as f64).round() as u64
    }

    /// The queue configuration with the buffer sized from `buffer_bdp`.
    pub fn queue_config(&self) -> QueueConfig {
        QueueConfig { buffer_limit: self.buffer_limit(), ..self.queue }
    }

    pub fn flows(&self) -> Vec<FlowSpec> {
        std::iter::once(self.flow_a).chain(self.flow_b).collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.duration == SimTime::ZERO {
            return Err(ScenarioError::ZeroDuration);
        }
        if self.trials == 0 {
            return Err(ScenarioError::NoTrials);
        }
        if self.bottleneck_rate == 0 {
            return Err(ScenarioError::NonPositive("bottleneck_rate"));
        }
        if self.access_rate == 0 {
            return Err(ScenarioError::NonPositive("access_rate"));
        }
        if self.base_rtt == SimTime::ZERO {
            return Err(ScenarioError::NonPositive("base_rtt"));
        }
        if !(self.buffer_bdp.is_finite() && self.buffer_bdp > 0.0) {
            return Err(ScenarioError::BadBuffer(self.buffer_bdp));
        }
        if let Some(p) = self.sample_period {
            if p == SimTime::ZERO {
                return Err(ScenarioError::NonPositive("sample_period"));
            }
        }
        for f in self.flows() {
            f.validate()?;
        }
        self.queue_config().validate()?;
        Ok(())
    }

    /// Stable identifier, e.g. `fifo-ecn_2bdp_prague+fb_vs_cubic-ecn`.
    pub fn id(&self) -> String {
        let b = self.flow_b.map_or_else(|| "none".to_string(), |f| f.label());
        let mut id = format!("{}_{}bdp_{}_vs_{}", self.queue.kind, self.buffer_bdp, self.flow_a.label(), b);
        // Off-default knobs get a suffix so every grid cell keeps a distinct id.
        let defaults = QueueConfig::new(self.queue.kind, 0);
        if self.queue.ecn_threshold != defaults.ecn_threshold {
            id.push_str(&format!("_th{}ms", self.queue.ecn_threshold.as_millis_f64()));
        }
        if self.base_rtt != SimTime::from_millis(10) {
            id.push_str(&format!("_rtt{}ms", self.base_rtt.as_millis_f64()));
        }
        if self.bottleneck_rate != 100_000_000 {
            id.push_str(&format!("_{}mbps", self.bottleneck_rate as f64 / 1e6));
        }
        id
    }
}
