//! Deterministic discrete-event loop.
//!
//! Events are processed in (time, insertion-sequence) order. Arrivals
//! classify, enqueue and dispatch; finishes release the reservation,
//! advance everyone's progress and dispatch again. App progress follows a
//! processor-sharing overload model: when the running apps' aggregate
//! actual demand exceeds capacity on the bottleneck component, every app
//! on the host slows down by the same factor. Finish events are
//! projections under the current rate; any membership change on a host
//! bumps its generation counter and reprojects, and stale projections are
//! ignored when popped.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::metrics::{self, MetricsError, RunMeta, RunMetrics};
use crate::model::{Host, ModelError, Request, ResourceVector};
use crate::overbooking::OverbookingPolicy;
use crate::priority::classify;
use crate::scheduler::{self, PendingQueue, SchedulerPolicy};
use crate::trace::{EventTrace, PlacementInfo, RequestRecord, TraceKind, TraceRow};
use crate::workload::{self, WorkloadError, WorkloadSpec};

/// Tolerance for timestamp and work comparisons.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("hosts.count must be at least 1")]
    NoHosts,
    #[error("sla.stretch_limit must be positive, got {0}")]
    BadStretchLimit(f64),
    #[error("request {0}: reservation ({1}, {2}) can never fit an empty host")]
    UnplaceableRequest(u64, f64, f64),
    #[error("duplicate request id {0} in workload")]
    DuplicateRequestId(u64),
    #[error("invariant breach at event {event_index}: {detail}")]
    InvariantBreach { event_index: usize, detail: String },
}

/// Homogeneous host fleet description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HostsConfig {
    pub count: usize,
    pub capacity: ResourceVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunConfig {
    pub hosts: HostsConfig,
    pub policy: SchedulerPolicy,
    pub overbooking: OverbookingPolicy,
    /// Runtime beyond `stretch_limit * nominal_work` counts as a violation.
    pub stretch_limit: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: EventTrace,
    /// One record per request, ordered by request id.
    pub records: Vec<RequestRecord>,
    pub metrics: RunMetrics,
}

// ── Event queue ─────────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    Arrival {
        request_id: u64,
    },
    Finish {
        request_id: u64,
        host: usize,
        generation: u64,
    },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we pop smallest (time, seq)
        other
            .time
            .partial_cmp(&self.time)
            .expect("event times are finite")
            .then(other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Default)]
struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
}

impl EventQueue {
    fn push(&mut self, time: f64, kind: EventKind) {
        debug_assert!(time.is_finite());
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind });
    }

    fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time)
    }
}

// ── Progress model ──────────────────────────────────────────────────────────

/// Advance every running app on `host` to time `to`. With bottleneck load
/// L <= 1 apps progress at rate 1; beyond that all progress at rate 1/L.
pub fn progress_host(host: &mut Host, to: f64) -> Result<(), ModelError> {
    let load = host.load_factor();
    let rate = if load > 1.0 { 1.0 / load } else { 1.0 };
    for app in host.running_mut() {
        let dt = to - app.last_progress_update;
        if dt > 0.0 {
            let delta = rate * dt;
            app.remaining_work -= delta;
            app.progressed += delta;
        }
        app.last_progress_update = to;
        if app.remaining_work < 0.0 {
            let tol = TIME_EPS * (1.0 + app.progressed.abs());
            if app.remaining_work < -tol {
                return Err(ModelError::NonPositive(app.request_id, "remaining_work"));
            }
            app.remaining_work = 0.0;
        }
    }
    Ok(())
}

/// Per-app slowdown factor for finish projections.
fn stretch_factor(host: &Host) -> f64 {
    host.load_factor().max(1.0)
}

// ── Simulation ──────────────────────────────────────────────────────────────

struct Sim {
    cfg: RunConfig,
    actual_seed: u64,
    requests: HashMap<u64, Request>,
    hosts: Vec<Host>,
    host_gen: Vec<u64>,
    queue: PendingQueue,
    events: EventQueue,
    clock: f64,
    event_index: usize,
    trace: EventTrace,
    records: HashMap<u64, RequestRecord>,
    started: usize,
    finished: usize,
}

impl Sim {
    fn breach(&self, detail: String) -> EngineError {
        EngineError::InvariantBreach {
            event_index: self.event_index,
            detail,
        }
    }

    fn progress_all(&mut self, to: f64) -> Result<(), EngineError> {
        for host in &mut self.hosts {
            progress_host(host, to).map_err(|e| EngineError::InvariantBreach {
                event_index: self.event_index,
                detail: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Reproject finish events for every app on the host; older projections
    /// become stale via the generation counter.
    fn reschedule_finishes(&mut self, host_idx: usize) {
        self.host_gen[host_idx] += 1;
        let generation = self.host_gen[host_idx];
        let host = &self.hosts[host_idx];
        let stretch = stretch_factor(host);
        for app in host.running() {
            let time = self.clock + app.remaining_work.max(0.0) * stretch;
            self.events.push(
                time,
                EventKind::Finish {
                    request_id: app.request_id,
                    host: host_idx,
                    generation,
                },
            );
        }
    }

    fn dispatch_now(&mut self) -> Result<(), EngineError> {
        let seed = self.actual_seed;
        let placements = scheduler::dispatch(
            &mut self.queue,
            &mut self.hosts,
            &self.requests,
            self.cfg.overbooking,
            self.clock,
            |req| workload::actual_demand_for(seed, req),
        )?;
        let mut touched: Vec<usize> = Vec::new();
        for p in &placements {
            let record = self
                .records
                .get_mut(&p.request_id)
                .expect("placed request has a record");
            record.start_time = Some(self.clock);
            self.started += 1;
            self.trace.push(TraceRow {
                time: self.clock,
                kind: TraceKind::Start,
                request_id: p.request_id,
                host: Some(p.host),
                priority: p.priority,
            });
            self.trace.placements.insert(
                p.request_id,
                PlacementInfo {
                    host: p.host,
                    reservation: p.reservation,
                    actual_demand: p.actual_demand,
                },
            );
            if !touched.contains(&p.host) {
                touched.push(p.host);
            }
        }
        for host_idx in touched {
            self.reschedule_finishes(host_idx);
        }
        Ok(())
    }

    fn on_arrival(&mut self, request_id: u64) -> Result<(), EngineError> {
        self.progress_all(self.clock)?;
        let request = &self.requests[&request_id];
        let priority = classify(request.sla);
        self.records.insert(
            request_id,
            RequestRecord {
                id: request_id,
                priority,
                arrival_time: request.arrival_time,
                start_time: None,
                finish_time: None,
                deadline: request.deadline,
                nominal_work: request.nominal_work,
            },
        );
        self.trace.push(TraceRow {
            time: self.clock,
            kind: TraceKind::Arrival,
            request_id,
            host: None,
            priority,
        });
        self.queue.enqueue(request_id, priority, self.clock)?;
        Ok(())
    }

    fn on_finish(&mut self, request_id: u64, host_idx: usize) -> Result<(), EngineError> {
        self.progress_all(self.clock)?;
        let app = self.hosts[host_idx].finish(request_id)?;
        let record = self
            .records
            .get_mut(&request_id)
            .expect("finished request has a record");
        let nominal = record.nominal_work;
        let tol = TIME_EPS * (1.0 + nominal);
        if app.remaining_work.abs() > tol {
            return Err(self.breach(format!(
                "request {request_id} finished with remaining work {}",
                app.remaining_work
            )));
        }
        if (app.progressed - nominal).abs() > tol {
            return Err(self.breach(format!(
                "request {request_id} progressed {} of nominal {nominal}",
                app.progressed
            )));
        }
        record.finish_time = Some(self.clock);
        self.finished += 1;
        let priority = record.priority;
        self.trace.push(TraceRow {
            time: self.clock,
            kind: TraceKind::Finish,
            request_id,
            host: Some(host_idx),
            priority,
        });
        self.reschedule_finishes(host_idx);
        Ok(())
    }

    fn check_invariants(&self) -> Result<(), EngineError> {
        for host in &self.hosts {
            host.free_capacity().map_err(|e| EngineError::InvariantBreach {
                event_index: self.event_index,
                detail: e.to_string(),
            })?;
            let folded = host
                .running()
                .iter()
                .fold(ResourceVector::ZERO, |acc, a| acc + a.effective_reservation);
            if folded != host.reserved() {
                return Err(self.breach(format!(
                    "host {} ledger {:?} != running sum {:?}",
                    host.id(),
                    host.reserved(),
                    folded
                )));
            }
        }
        Ok(())
    }

    fn apply(&mut self, event: Event) -> Result<(), EngineError> {
        if event.time < self.clock - TIME_EPS {
            return Err(self.breach(format!(
                "event at {} before clock {}",
                event.time, self.clock
            )));
        }
        self.clock = self.clock.max(event.time);
        match event.kind {
            EventKind::Arrival { request_id } => self.on_arrival(request_id)?,
            EventKind::Finish {
                request_id,
                host,
                generation,
            } => {
                // superseded projections are ignored
                if generation == self.host_gen[host] {
                    self.on_finish(request_id, host)?;
                }
            }
        }
        self.event_index += 1;
        Ok(())
    }

    fn run(&mut self) -> Result<(), EngineError> {
        while let Some(event) = self.events.pop() {
            // Timestamps within TIME_EPS denote the same simulated instant:
            // every effect of the instant (arrivals enqueued, finishes
            // released) lands before the instant's single dispatch, so a
            // higher-priority request arriving "at the same time" is never
            // beaten to an idle host by a lower-priority one.
            let anchor = event.time;
            self.apply(event)?;
            while let Some(next) = self.events.peek_time() {
                if next > anchor + TIME_EPS {
                    break;
                }
                let event = self.events.pop().expect("peeked event present");
                self.apply(event)?;
            }
            self.dispatch_now()?;
            self.check_invariants()?;
        }
        Ok(())
    }
}

/// Run the simulation over an explicit request list. `actual_seed` keys the
/// per-request actual-demand draws (normally the workload seed).
pub fn run_requests(
    requests: &[Request],
    actual_seed: u64,
    cfg: &RunConfig,
) -> Result<RunOutput, EngineError> {
    if cfg.hosts.count == 0 {
        return Err(EngineError::NoHosts);
    }
    if !cfg.stretch_limit.is_finite() || cfg.stretch_limit <= 0.0 {
        return Err(EngineError::BadStretchLimit(cfg.stretch_limit));
    }
    let mut by_id: HashMap<u64, Request> = HashMap::with_capacity(requests.len());
    for request in requests {
        let reservation = cfg
            .overbooking
            .effective_reservation(request.avg_demand, request.worst_demand)?;
        if !reservation.fits_within(cfg.hosts.capacity) {
            return Err(EngineError::UnplaceableRequest(
                request.id,
                reservation.cpu(),
                reservation.mem(),
            ));
        }
        if by_id.insert(request.id, request.clone()).is_some() {
            return Err(EngineError::DuplicateRequestId(request.id));
        }
    }

    let mut sim = Sim {
        cfg: *cfg,
        actual_seed,
        requests: by_id,
        hosts: (0..cfg.hosts.count)
            .map(|id| Host::new(id, cfg.hosts.capacity))
            .collect(),
        host_gen: vec![0; cfg.hosts.count],
        queue: PendingQueue::new(cfg.policy.discipline),
        events: EventQueue::default(),
        clock: 0.0,
        event_index: 0,
        trace: EventTrace::default(),
        records: HashMap::new(),
        started: 0,
        finished: 0,
    };
    for request in requests {
        sim.events.push(
            request.arrival_time,
            EventKind::Arrival {
                request_id: request.id,
            },
        );
    }
    sim.run()?;

    if sim.started != requests.len() || sim.finished != requests.len() || !sim.queue.is_empty() {
        return Err(EngineError::InvariantBreach {
            event_index: sim.event_index,
            detail: format!(
                "incomplete run: {} started, {} finished of {}",
                sim.started,
                sim.finished,
                requests.len()
            ),
        });
    }

    let mut records: Vec<RequestRecord> = sim.records.into_values().collect();
    records.sort_by_key(|r| r.id);
    let meta = RunMeta {
        policy: cfg.policy.discipline,
        seed: actual_seed,
        beta: cfg.overbooking.beta(),
        hosts: cfg.hosts,
        stretch_limit: cfg.stretch_limit,
        workload_digest: workload::workload_digest(requests),
    };
    let metrics = metrics::compute(&records, &sim.trace, meta)?;
    Ok(RunOutput {
        trace: sim.trace,
        records,
        metrics,
    })
}

/// Generate the workload for `spec` and run it.
pub fn run(spec: &WorkloadSpec, cfg: &RunConfig) -> Result<RunOutput, EngineError> {
    let requests = workload::generate(spec)?;
    run_requests(&requests, spec.seed, cfg)
}
