//! Run artifacts: the event trace written as CSV and the per-request
//! lifecycle records the metrics pass consumes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::model::{PriorityClass, ResourceVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TraceKind {
    Arrival,
    Start,
    Finish,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Arrival => "arrival",
            TraceKind::Start => "start",
            TraceKind::Finish => "finish",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub time: f64,
    pub kind: TraceKind,
    pub request_id: u64,
    /// None for arrival rows; the placement host for start/finish rows.
    pub host: Option<usize>,
    pub priority: PriorityClass,
}

/// Reservation and drawn demand of a placed request; kept alongside the
/// rows so utilization can be recomputed from the trace alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlacementInfo {
    pub host: usize,
    pub reservation: ResourceVector,
    pub actual_demand: ResourceVector,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct EventTrace {
    pub rows: Vec<TraceRow>,
    pub placements: BTreeMap<u64, PlacementInfo>,
}

pub const TRACE_CSV_HEADER: &str = "time,event_kind,request_id,host_id,priority";

impl EventTrace {
    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    /// Time of the last event, or 0 for an empty trace.
    pub fn horizon(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.time)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1));
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let _ = match row.host {
                Some(host) => writeln!(
                    out,
                    "{},{},{},{},{}",
                    row.time,
                    row.kind.as_str(),
                    row.request_id,
                    host,
                    row.priority.level()
                ),
                None => writeln!(
                    out,
                    "{},{},{},-,{}",
                    row.time,
                    row.kind.as_str(),
                    row.request_id,
                    row.priority.level()
                ),
            };
        }
        out
    }
}

/// Lifecycle of one request over a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestRecord {
    pub id: u64,
    pub priority: PriorityClass,
    pub arrival_time: f64,
    pub start_time: Option<f64>,
    pub finish_time: Option<f64>,
    pub deadline: f64,
    pub nominal_work: f64,
}
