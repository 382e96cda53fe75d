use std::fmt;

use serde::Serialize;

use super::rows::{ResultRow, MEAN};
use super::ExpError;
use crate::aqm::QueueKind;
use crate::cc::CcKind;

pub const DEFAULT_FAIR_LO: f64 = 0.35;

/// Bottleneck families, grouped the way an operator would see them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BufferRow {
    SingleQueue,
    SingleQueueEcn,
    FairQueueEcn,
    DualPi2,
}

impl BufferRow {
    pub const ALL: [BufferRow; 4] = [BufferRow::SingleQueue, BufferRow::SingleQueueEcn, BufferRow::FairQueueEcn, BufferRow::DualPi2];

    pub fn queues(self) -> &'static [QueueKind] {
        match self {
            BufferRow::SingleQueue => &[QueueKind::Fifo],
            BufferRow::SingleQueueEcn => &[QueueKind::FifoEcn, QueueKind::Codel],
            BufferRow::FairQueueEcn => &[QueueKind::Fq, QueueKind::FqCodel],
            BufferRow::DualPi2 => &[QueueKind::DualPi2],
        }
    }
}

impl fmt::Display for BufferRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            BufferRow::SingleQueue => "SQ w/o ECN",
            BufferRow::SingleQueueEcn => "SQ + ECN",
            BufferRow::FairQueueEcn => "FQ + ECN",
            BufferRow::DualPi2 => "DualPI2",
        })
    }
}

/// The opponent family; each column pools all ECN modes of that controller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OpponentCol {
    Cubic,
    BbrV2,
}

impl OpponentCol {
    pub const ALL: [OpponentCol; 2] = [OpponentCol::Cubic, OpponentCol::BbrV2];

    fn cc(self) -> CcKind {
        match self {
            OpponentCol::Cubic => CcKind::Cubic,
            OpponentCol::BbrV2 => CcKind::BbrV2,
        }
    }
}

impl fmt::Display for OpponentCol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            OpponentCol::Cubic => "Cubic",
            OpponentCol::BbrV2 => "BBRv2",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Ok,
    NotOk,
    InsufficientData,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Verdict::Ok => "OK",
            Verdict::NotOk => "NOT OK",
            Verdict::InsufficientData => "no data",
        })
    }
}

/// A measured cell whose weaker flow fell below the floor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub scenario: String,
    pub buffer_bdp: f64,
    pub share_prague: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableCell {
    pub row: BufferRow,
    pub opponent: OpponentCol,
    pub fallback: bool,
    pub verdict: Verdict,
    /// Mean rows that fed the verdict.
    pub cells: usize,
    pub violations: Vec<Violation>,
    /// Queue kinds of the row that had no data at all.
    pub missing: Vec<QueueKind>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Recommendation {
    pub fair_lo: f64,
    pub cells: Vec<TableCell>,
}

impl Recommendation {
    pub fn get(&self, row: BufferRow, opponent: OpponentCol, fallback: bool) -> &TableCell {
        self.cells
            .iter()
            .find(|c| c.row == row && c.opponent == opponent && c.fallback == fallback)
            .expect("table is complete")
    }
}

/// Builds the "is it safe to enable Prague here" table.
///
/// A cell is OK when, at every buffer size measured, both flows keep at least
/// `fair_lo` of the combined throughput. Only the `mean` rows of two-flow
/// Prague cells are consulted; everything else in `rows` is ignored.
pub fn recommend(rows: &[ResultRow], fair_lo: f64) -> Result<Recommendation, ExpError> {
    if !(0.0..=0.5).contains(&fair_lo) {
        return Err(ExpError::Config { at: "fair-lo".into(), msg: format!("must lie in [0, 0.5], got {fair_lo}") });
    }
    let means: Vec<&ResultRow> = rows.iter().filter(|r| r.seed == MEAN && r.a_cc == CcKind::Prague && r.b_cc.is_some()).collect();
    let mut cells = Vec::new();
    for row in BufferRow::ALL {
        for opponent in OpponentCol::ALL {
            for fallback in [false, true] {
                let hits: Vec<&&ResultRow> = means
                    .iter()
                    .filter(|r| row.queues().contains(&r.queue) && r.b_cc == Some(opponent.cc()) && r.a_fallback == fallback)
                    .collect();
                let missing: Vec<QueueKind> = row.queues().iter().copied().filter(|q| !hits.iter().any(|r| r.queue == *q)).collect();
                let violations: Vec<Violation> = hits
                    .iter()
                    .filter(|r| r.share_a.min(1.0 - r.share_a) < fair_lo)
                    .map(|r| Violation { scenario: r.scenario.clone(), buffer_bdp: r.buffer_bdp, share_prague: r.share_a })
                    .collect();
                let verdict = if !missing.is_empty() {
                    Verdict::InsufficientData
                } else if violations.is_empty() {
                    Verdict::Ok
                } else {
                    Verdict::NotOk
                };
                cells.push(TableCell { row, opponent, fallback, verdict, cells: hits.len(), violations, missing });
            }
        }
    }
    Ok(Recommendation { fair_lo, cells })
}

impl fmt::Display for Recommendation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Enable Prague? OK when both flows keep >= {:.0}% of throughput at every buffer size.", self.fair_lo * 100.0)?;
        writeln!(f)?;
        writeln!(f, "{:<12} | {:^21} | {:^21}", "", "fallback OFF", "fallback ON")?;
        writeln!(f, "{:<12} | {:^10} {:^10} | {:^10} {:^10}", "bottleneck", "Cubic", "BBRv2", "Cubic", "BBRv2")?;
        writeln!(f, "{}", "-".repeat(60))?;
        for row in BufferRow::ALL {
            write!(f, "{row:<12} |")?;
            for fallback in [false, true] {
                for opp in OpponentCol::ALL {
                    write!(f, " {:^10}", self.get(row, opp, fallback).verdict)?;
                }
                if !fallback {
                    write!(f, " |")?;
                }
            }
            writeln!(f)?;
        }
        let notes: Vec<&TableCell> = self.cells.iter().filter(|c| c.verdict != Verdict::Ok).collect();
        if !notes.is_empty() {
            writeln!(f)?;
        }
        for c in notes {
            let fb = if c.fallback { "on" } else { "off" };
            write!(f, "{} vs {} (fallback {fb}): ", c.row, c.opponent)?;
            if c.verdict == Verdict::InsufficientData {
                let q: Vec<String> = c.missing.iter().map(|q| q.to_string()).collect();
                writeln!(f, "no results for {}", q.join(", "))?;
            } else {
                let v: Vec<String> = c.violations.iter().map(|v| format!("{} (Prague {:.2})", v.scenario, v.share_prague)).collect();
                writeln!(f, "{}", v.join("; "))?;
            }
        }
        Ok(())
    }
}
