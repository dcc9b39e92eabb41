//! Discrete-event simulator for desktop-as-a-service datacenters.
//!
//! Requests carrying SLA requirement flags arrive at a fixed fleet of
//! hosts. Admission reserves overbooked capacity (a `beta` blend between
//! average and worst-case demand), queued requests are dispatched either
//! in arrival order or by SLA-derived priority class, and co-located apps
//! that overrun capacity slow down proportionally. Runs are deterministic
//! per seed and produce an event trace plus per-class wait/violation and
//! utilization metrics.

pub mod cli;
pub mod engine;
pub mod metrics;
pub mod model;
pub mod overbooking;
pub mod priority;
pub mod scenario;
pub mod scheduler;
pub mod trace;
pub mod workload;

pub use engine::{run, run_requests, HostsConfig, RunConfig, RunOutput};
pub use model::{Host, PriorityClass, Request, ResourceVector, RunningApp, SlaFactors};
pub use overbooking::OverbookingPolicy;
pub use priority::{classify, PriorityTable};
pub use scenario::{parse_scenario, ScenarioConfig};
pub use scheduler::{Discipline, SchedulerPolicy};
pub use workload::WorkloadSpec;
