//! Post-processing over a finished run: per-class waiting times, SLA
//! violations, utilization integrals and baseline-vs-priority comparisons.
//!
//! Everything here is a pure function of the trace and the request records,
//! so a run can be re-scored (e.g. with scaled deadlines) without
//! re-simulating.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::engine::HostsConfig;
use crate::model::{PriorityClass, ResourceVector};
use crate::scheduler::Discipline;
use crate::trace::{EventTrace, RequestRecord, TraceKind};

/// Loads within this tolerance of 1.0 do not count as overload; keeps
/// zero-overload claims robust to float fold error.
const LOAD_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("request {0} has not started")]
    NotStarted(u64),
    #[error("request {0} has not finished")]
    NotFinished(u64),
    #[error("request {0} starts at {1} before its arrival at {2}")]
    CausalityViolation(u64, f64, f64),
    #[error("comparison requires runs with identical {0}")]
    ComparisonMismatch(&'static str),
}

/// Seconds a request waited between arrival and start.
pub fn wait_time(record: &RequestRecord) -> Result<f64, MetricsError> {
    let start = record.start_time.ok_or(MetricsError::NotStarted(record.id))?;
    if start < record.arrival_time {
        return Err(MetricsError::CausalityViolation(
            record.id,
            start,
            record.arrival_time,
        ));
    }
    Ok(start - record.arrival_time)
}

/// A request violates its SLA when it waited past its deadline or its
/// runtime stretched beyond `stretch_limit * nominal_work`.
pub fn is_violation(record: &RequestRecord, stretch_limit: f64) -> Result<bool, MetricsError> {
    let wait = wait_time(record)?;
    let finish = record.finish_time.ok_or(MetricsError::NotFinished(record.id))?;
    let runtime = finish - record.start_time.expect("checked by wait_time");
    Ok(wait > record.deadline || runtime > stretch_limit * record.nominal_work)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: u8,
    pub count: usize,
    pub mean_wait: f64,
    pub p95_wait: f64,
    pub violations: usize,
    pub violation_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregateMetrics {
    pub count: usize,
    pub mean_wait: f64,
    pub p95_wait: f64,
    pub violations: usize,
    pub violation_rate: f64,
    /// Time-weighted bottleneck reservation over capacity, averaged across hosts.
    pub mean_reserved_utilization: f64,
    /// Time-weighted bottleneck consumption over capacity (capped at 1).
    pub mean_actual_utilization: f64,
    /// Fraction of the horizon during which any host was overloaded.
    pub overload_time_fraction: f64,
    /// Hosts that ever ran an app.
    pub hosts_used: usize,
}

/// Identity of a run, carried so comparisons can refuse mismatched inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunMeta {
    pub policy: Discipline,
    pub seed: u64,
    pub beta: f64,
    pub hosts: HostsConfig,
    pub stretch_limit: f64,
    pub workload_digest: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub per_class: Vec<ClassMetrics>,
    pub aggregate: AggregateMetrics,
    pub meta: RunMeta,
}

/// Nearest-rank percentile of an unsorted sample; 0 for an empty one.
fn nearest_rank_p95(waits: &mut [f64]) -> f64 {
    if waits.is_empty() {
        return 0.0;
    }
    waits.sort_by(|a, b| a.partial_cmp(b).expect("finite waits"));
    let rank = (0.95 * waits.len() as f64).ceil() as usize;
    waits[rank.max(1) - 1]
}

fn rate(violations: usize, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        violations as f64 / count as f64
    }
}

/// Utilization and overload integrals replayed from the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsageStats {
    pub reserved_util: f64,
    pub actual_util: f64,
    pub overload_time_fraction: f64,
    pub hosts_used: usize,
}

/// Integrate per-host reserved and consumed bottleneck fractions over the
/// trace horizon. Consumption is capped at capacity: an overloaded host is
/// saturated, not consuming more than it has.
pub fn usage(trace: &EventTrace, hosts: HostsConfig) -> UsageStats {
    let horizon = trace.horizon();
    let mut active: Vec<Vec<u64>> = vec![Vec::new(); hosts.count];
    let mut used = vec![false; hosts.count];
    let mut reserved_integral = 0.0;
    let mut actual_integral = 0.0;
    let mut overload_time = 0.0;
    let mut t_prev = 0.0;

    for row in &trace.rows {
        let dt = row.time - t_prev;
        if dt > 0.0 {
            let mut any_overloaded = false;
            for ids in &active {
                let (mut res, mut act) = (ResourceVector::ZERO, ResourceVector::ZERO);
                for id in ids {
                    let p = trace.placements[id];
                    res = res + p.reservation;
                    act = act + p.actual_demand;
                }
                let load = act.max_ratio(hosts.capacity);
                reserved_integral += res.max_ratio(hosts.capacity) * dt;
                actual_integral += load.min(1.0) * dt;
                any_overloaded |= load > 1.0 + LOAD_EPS;
            }
            if any_overloaded {
                overload_time += dt;
            }
            t_prev = row.time;
        }
        match row.kind {
            TraceKind::Start => {
                let host = row.host.expect("start rows carry a host");
                active[host].push(row.request_id);
                used[host] = true;
            }
            TraceKind::Finish => {
                let host = row.host.expect("finish rows carry a host");
                active[host].retain(|id| *id != row.request_id);
            }
            TraceKind::Arrival => {}
        }
    }

    let denom = hosts.count as f64 * horizon;
    if horizon <= 0.0 {
        return UsageStats {
            reserved_util: 0.0,
            actual_util: 0.0,
            overload_time_fraction: 0.0,
            hosts_used: 0,
        };
    }
    UsageStats {
        reserved_util: reserved_integral / denom,
        actual_util: actual_integral / denom,
        overload_time_fraction: overload_time / horizon,
        hosts_used: used.iter().filter(|u| **u).count(),
    }
}

/// Time-weighted (reserved, actual) utilization fractions.
pub fn utilization(trace: &EventTrace, hosts: HostsConfig) -> (f64, f64) {
    let stats = usage(trace, hosts);
    (stats.reserved_util, stats.actual_util)
}

/// Score a completed run.
pub fn compute(
    records: &[RequestRecord],
    trace: &EventTrace,
    meta: RunMeta,
) -> Result<RunMetrics, MetricsError> {
    let mut per_class = Vec::with_capacity(6);
    let mut all_waits: Vec<f64> = Vec::with_capacity(records.len());
    let mut all_violations = 0usize;
    for class in PriorityClass::all() {
        let mut waits = Vec::new();
        let mut violations = 0usize;
        for record in records.iter().filter(|r| r.priority == class) {
            waits.push(wait_time(record)?);
            if is_violation(record, meta.stretch_limit)? {
                violations += 1;
            }
        }
        all_waits.extend_from_slice(&waits);
        all_violations += violations;
        let count = waits.len();
        let mean_wait = if count == 0 {
            0.0
        } else {
            waits.iter().sum::<f64>() / count as f64
        };
        per_class.push(ClassMetrics {
            class: class.level(),
            count,
            mean_wait,
            p95_wait: nearest_rank_p95(&mut waits),
            violations,
            violation_rate: rate(violations, count),
        });
    }

    let usage = usage(trace, meta.hosts);
    let count = all_waits.len();
    let mean_wait = if count == 0 {
        0.0
    } else {
        all_waits.iter().sum::<f64>() / count as f64
    };
    let aggregate = AggregateMetrics {
        count,
        mean_wait,
        p95_wait: nearest_rank_p95(&mut all_waits),
        violations: all_violations,
        violation_rate: rate(all_violations, count),
        mean_reserved_utilization: usage.reserved_util,
        mean_actual_utilization: usage.actual_util,
        overload_time_fraction: usage.overload_time_fraction,
        hosts_used: usage.hosts_used,
    };
    Ok(RunMetrics {
        per_class,
        aggregate,
        meta,
    })
}

// ── Comparison ──────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassDelta {
    pub class: u8,
    pub baseline_mean_wait: f64,
    pub candidate_mean_wait: f64,
    pub d_mean_wait: f64,
    pub baseline_violation_rate: f64,
    pub candidate_violation_rate: f64,
    pub d_violation_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub baseline_policy: Discipline,
    pub candidate_policy: Discipline,
    pub per_class: Vec<ClassDelta>,
    pub d_aggregate_mean_wait: f64,
    pub d_aggregate_violation_rate: f64,
    /// True when the candidate's violation rates for classes 1..3 are all
    /// at or below the baseline's.
    pub candidate_p123_not_worse: bool,
}

/// Side-by-side deltas (candidate minus baseline) for two runs over the
/// same workload and host fleet.
pub fn compare(
    baseline: &RunMetrics,
    candidate: &RunMetrics,
) -> Result<ComparisonReport, MetricsError> {
    if baseline.meta.seed != candidate.meta.seed {
        return Err(MetricsError::ComparisonMismatch("seed"));
    }
    if baseline.meta.workload_digest != candidate.meta.workload_digest {
        return Err(MetricsError::ComparisonMismatch("workload"));
    }
    if baseline.meta.hosts != candidate.meta.hosts {
        return Err(MetricsError::ComparisonMismatch("host config"));
    }
    if baseline.meta.beta != candidate.meta.beta {
        return Err(MetricsError::ComparisonMismatch("overbooking beta"));
    }
    if baseline.meta.stretch_limit != candidate.meta.stretch_limit {
        return Err(MetricsError::ComparisonMismatch("stretch limit"));
    }
    let per_class: Vec<ClassDelta> = baseline
        .per_class
        .iter()
        .zip(&candidate.per_class)
        .map(|(b, c)| ClassDelta {
            class: b.class,
            baseline_mean_wait: b.mean_wait,
            candidate_mean_wait: c.mean_wait,
            d_mean_wait: c.mean_wait - b.mean_wait,
            baseline_violation_rate: b.violation_rate,
            candidate_violation_rate: c.violation_rate,
            d_violation_rate: c.violation_rate - b.violation_rate,
        })
        .collect();
    let candidate_p123_not_worse = per_class
        .iter()
        .take(3)
        .all(|d| d.candidate_violation_rate <= d.baseline_violation_rate);
    Ok(ComparisonReport {
        baseline_policy: baseline.meta.policy,
        candidate_policy: candidate.meta.policy,
        per_class,
        d_aggregate_mean_wait: candidate.aggregate.mean_wait - baseline.aggregate.mean_wait,
        d_aggregate_violation_rate: candidate.aggregate.violation_rate
            - baseline.aggregate.violation_rate,
        candidate_p123_not_worse,
    })
}

// ── CSV output ──────────────────────────────────────────────────────────────

pub const METRICS_CSV_HEADER: &str = "run_id,policy,seed,priority_class,n_requests,mean_wait_s,\
p95_wait_s,violations,violation_rate,reserved_util,actual_util,overload_time_frac";

/// One row per (run, class) plus an ALL aggregate row per run. The
/// utilization columns are run-level values repeated on every row.
pub fn metrics_csv(runs: &[(String, &RunMetrics)]) -> String {
    let mut out = String::new();
    out.push_str(METRICS_CSV_HEADER);
    out.push('\n');
    for (run_id, metrics) in runs {
        let agg = &metrics.aggregate;
        for c in &metrics.per_class {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                run_id,
                metrics.meta.policy.as_str(),
                metrics.meta.seed,
                c.class,
                c.count,
                c.mean_wait,
                c.p95_wait,
                c.violations,
                c.violation_rate,
                agg.mean_reserved_utilization,
                agg.mean_actual_utilization,
                agg.overload_time_fraction,
            );
        }
        let _ = writeln!(
            out,
            "{},{},{},ALL,{},{},{},{},{},{},{},{}",
            run_id,
            metrics.meta.policy.as_str(),
            metrics.meta.seed,
            agg.count,
            agg.mean_wait,
            agg.p95_wait,
            agg.violations,
            agg.violation_rate,
            agg.mean_reserved_utilization,
            agg.mean_actual_utilization,
            agg.overload_time_fraction,
        );
    }
    out
}
