use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExpError;
use crate::aqm::QueueKind;
use crate::cc::CcKind;
use crate::harness::{EcnMode, FlowMetrics, FlowSummary, SamplePoint, Scenario, ScenarioResult, Stat, TrialResult};

/// One CSV line: a single trial, or the mean/std over a cell's trials.
///
/// Columns for the second flow are empty when the cell ran one flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub queue: QueueKind,
    pub buffer_bdp: f64,
    pub ecn_threshold_ms: f64,
    pub a_cc: CcKind,
    pub a_ecn: EcnMode,
    pub a_fallback: bool,
    pub b_cc: Option<CcKind>,
    pub b_ecn: Option<EcnMode>,
    /// Seed number, or `mean` / `std`.
    pub seed: String,
    pub throughput_a: f64,
    pub throughput_b: Option<f64>,
    pub share_a: f64,
    pub qdelay_a_ms: f64,
    pub qdelay_b_ms: Option<f64>,
    pub p99_qdelay_a_ms: f64,
    pub p99_qdelay_b_ms: Option<f64>,
    pub rtt_a_ms: f64,
    pub rtt_b_ms: Option<f64>,
    pub marks_a: f64,
    pub marks_b: Option<f64>,
    pub drops_a: f64,
    pub drops_b: Option<f64>,
}

pub const MEAN: &str = "mean";
pub const STD: &str = "std";

/// The per-flow numbers a row needs, whichever kind of row it is.
struct Cols {
    throughput: f64,
    share: f64,
    qdelay: f64,
    p99: f64,
    rtt: f64,
    marks: f64,
    drops: f64,
}

impl From<&FlowMetrics> for Cols {
    fn from(m: &FlowMetrics) -> Self {
        Cols {
            throughput: m.throughput,
            share: m.share,
            qdelay: m.mean_qdelay,
            p99: m.p99_qdelay,
            rtt: m.mean_rtt,
            marks: m.marks as f64,
            drops: m.drops as f64,
        }
    }
}

fn summary_cols(f: &FlowSummary, pick: fn(&Stat) -> f64) -> Cols {
    Cols {
        throughput: pick(&f.throughput),
        share: pick(&f.share),
        qdelay: pick(&f.mean_qdelay),
        p99: pick(&f.p99_qdelay),
        rtt: pick(&f.mean_rtt),
        marks: pick(&f.marks),
        drops: pick(&f.drops),
    }
}

fn make_row(s: &Scenario, seed: String, a: Cols, b: Option<Cols>) -> ResultRow {
    let fb = s.flow_b;
    ResultRow {
        scenario: s.id(),
        queue: s.queue.kind,
        buffer_bdp: s.buffer_bdp,
        ecn_threshold_ms: s.queue.ecn_threshold.as_millis_f64(),
        a_cc: s.flow_a.cc,
        a_ecn: s.flow_a.ecn,
        a_fallback: s.flow_a.fallback,
        b_cc: fb.map(|f| f.cc),
        b_ecn: fb.map(|f| f.ecn),
        seed,
        throughput_a: a.throughput,
        throughput_b: b.as_ref().map(|c| c.throughput),
        share_a: a.share,
        qdelay_a_ms: a.qdelay,
        qdelay_b_ms: b.as_ref().map(|c| c.qdelay),
        p99_qdelay_a_ms: a.p99,
        p99_qdelay_b_ms: b.as_ref().map(|c| c.p99),
        rtt_a_ms: a.rtt,
        rtt_b_ms: b.as_ref().map(|c| c.rtt),
        marks_a: a.marks,
        marks_b: b.as_ref().map(|c| c.marks),
        drops_a: a.drops,
        drops_b: b.as_ref().map(|c| c.drops),
    }
}

/// Rows for one cell: each trial in order, then `mean` and `std`.
pub fn cell_rows(s: &Scenario, trials: &[TrialResult], agg: &ScenarioResult) -> Vec<ResultRow> {
    let mut rows: Vec<ResultRow> = trials
        .iter()
        .map(|t| make_row(s, t.seed.to_string(), Cols::from(&t.flows[0]), t.flows.get(1).map(Cols::from)))
        .collect();
    for (label, pick) in [(MEAN, (|st: &Stat| st.mean) as fn(&Stat) -> f64), (STD, |st: &Stat| st.std)] {
        let a = summary_cols(&agg.flows[0], pick);
        let b = agg.flows.get(1).map(|f| summary_cols(f, pick));
        rows.push(make_row(s, label.to_string(), a, b));
    }
    rows
}

pub fn write_rows<W: io::Write>(w: W, rows: &[ResultRow]) -> Result<(), ExpError> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_rows<R: io::Read>(r: R) -> Result<Vec<ResultRow>, ExpError> {
    let mut rd = csv::Reader::from_reader(r);
    Ok(rd.deserialize().collect::<Result<_, _>>()?)
}

pub fn read_rows_file(path: &Path) -> Result<Vec<ResultRow>, ExpError> {
    let f = std::fs::File::open(path).map_err(|e| ExpError::io(path, e))?;
    read_rows(io::BufReader::new(f))
}

#[derive(Serialize)]
struct SeriesRow {
    t_s: f64,
    flow: usize,
    throughput_mbps: f64,
    srtt_ms: f64,
    qdelay_ms: f64,
    delivered_bytes: u64,
}

pub fn write_series<W: io::Write>(w: W, series: &[SamplePoint]) -> Result<(), ExpError> {
    let mut wr = csv::Writer::from_writer(w);
    for p in series {
        wr.serialize(SeriesRow {
            t_s: p.t,
            flow: p.flow,
            throughput_mbps: p.throughput,
            srtt_ms: p.srtt_ms,
            qdelay_ms: p.qdelay_ms,
            delivered_bytes: p.delivered_bytes,
        })?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}
