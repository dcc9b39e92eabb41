//! Scenario files: flat `key = value` lines with `#` comments. Unknown keys
//! are a hard error so typos cannot silently fall back to defaults, and
//! every diagnostic names the offending key and line.

use std::path::PathBuf;

use thiserror::Error;

use crate::engine::{HostsConfig, RunConfig};
use crate::model::ResourceVector;
use crate::overbooking::OverbookingPolicy;
use crate::scheduler::{Discipline, SchedulerPolicy};
use crate::workload::WorkloadSpec;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {0}: expected `key = value`, got `{1}`")]
    Malformed(usize, String),
    #[error("line {0}: unknown key `{1}`")]
    UnknownKey(usize, String),
    #[error("line {0}: duplicate key `{1}`")]
    DuplicateKey(usize, String),
    #[error("line {0}: key `{1}`: {2}")]
    BadValue(usize, String, String),
    #[error("key `{0}`: {1}")]
    Invalid(String, String),
}

/// Fully-resolved scenario. `Default` is the stock experiment: four (8, 8)
/// hosts, beta 0.5, 600 requests at roughly 1.5x the sustainable load,
/// uniform class mix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub hosts_count: usize,
    pub host_capacity_cpu: f64,
    pub host_capacity_mem: f64,
    pub beta: f64,
    pub discipline: Discipline,
    pub workload: WorkloadSpec,
    pub stretch_limit: f64,
    pub output_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            hosts_count: 4,
            host_capacity_cpu: 8.0,
            host_capacity_mem: 8.0,
            beta: 0.5,
            discipline: Discipline::Fifo,
            workload: WorkloadSpec::default(),
            stretch_limit: 1.5,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ScenarioConfig {
    pub fn seed(&self) -> u64 {
        self.workload.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.workload.seed = seed;
    }

    pub fn hosts(&self) -> Result<HostsConfig, ScenarioError> {
        Ok(HostsConfig {
            count: self.hosts_count,
            capacity: ResourceVector::new(self.host_capacity_cpu, self.host_capacity_mem)
                .map_err(|e| ScenarioError::Invalid("hosts.capacity".into(), e.to_string()))?,
        })
    }

    pub fn run_config(&self) -> Result<RunConfig, ScenarioError> {
        Ok(RunConfig {
            hosts: self.hosts()?,
            policy: SchedulerPolicy::new(self.discipline),
            overbooking: OverbookingPolicy::new(self.beta)
                .map_err(|e| ScenarioError::Invalid("overbooking.beta".into(), e.to_string()))?,
            stretch_limit: self.stretch_limit,
        })
    }

    /// Cross-field validation used after parsing and before running.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.hosts_count == 0 {
            return Err(ScenarioError::Invalid(
                "hosts.count".into(),
                "must be at least 1".into(),
            ));
        }
        if self.host_capacity_cpu <= 0.0 || self.host_capacity_mem <= 0.0 {
            return Err(ScenarioError::Invalid(
                "hosts.capacity".into(),
                "components must be positive".into(),
            ));
        }
        if !self.stretch_limit.is_finite() || self.stretch_limit <= 0.0 {
            return Err(ScenarioError::Invalid(
                "sla.stretch_limit".into(),
                "must be positive".into(),
            ));
        }
        self.run_config()?;
        self.workload
            .validate()
            .map_err(|e| ScenarioError::Invalid("workload".into(), e.to_string()))?;
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(
    line: usize,
    key: &str,
    value: &str,
) -> Result<T, ScenarioError> {
    value
        .parse::<T>()
        .map_err(|_| ScenarioError::BadValue(line, key.into(), format!("cannot parse `{value}`")))
}

fn check_range(
    line: usize,
    key: &str,
    value: f64,
    lo: f64,
    hi: f64,
) -> Result<f64, ScenarioError> {
    if !value.is_finite() || value < lo || value > hi {
        return Err(ScenarioError::BadValue(
            line,
            key.into(),
            format!("{value} outside [{lo}, {hi}]"),
        ));
    }
    Ok(value)
}

fn check_positive(line: usize, key: &str, value: f64) -> Result<f64, ScenarioError> {
    if !value.is_finite() || value <= 0.0 {
        return Err(ScenarioError::BadValue(
            line,
            key.into(),
            format!("{value} must be positive"),
        ));
    }
    Ok(value)
}

fn check_non_negative(line: usize, key: &str, value: f64) -> Result<f64, ScenarioError> {
    if !value.is_finite() || value < 0.0 {
        return Err(ScenarioError::BadValue(
            line,
            key.into(),
            format!("{value} must be non-negative"),
        ));
    }
    Ok(value)
}

/// Parse scenario text over the defaults.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut config = ScenarioConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ScenarioError::Malformed(lineno, line.to_string()));
        };
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(ScenarioError::DuplicateKey(lineno, key.to_string()));
        }
        seen.push(key.to_string());
        apply_key(&mut config, lineno, key, value)?;
    }
    config.validate()?;
    Ok(config)
}

fn apply_key(
    config: &mut ScenarioConfig,
    line: usize,
    key: &str,
    value: &str,
) -> Result<(), ScenarioError> {
    let w = &mut config.workload;
    match key {
        "hosts.count" => config.hosts_count = parse_num(line, key, value)?,
        "hosts.capacity_cpu" => {
            config.host_capacity_cpu = check_positive(line, key, parse_num(line, key, value)?)?
        }
        "hosts.capacity_mem" => {
            config.host_capacity_mem = check_positive(line, key, parse_num(line, key, value)?)?
        }
        "overbooking.beta" => {
            config.beta = check_range(line, key, parse_num(line, key, value)?, 0.0, 1.0)?
        }
        "policy.discipline" => {
            config.discipline = match value {
                "fifo" => Discipline::Fifo,
                "ira" => Discipline::Ira,
                other => {
                    return Err(ScenarioError::BadValue(
                        line,
                        key.into(),
                        format!("`{other}` is not one of fifo|ira"),
                    ))
                }
            }
        }
        "workload.n_requests" => w.n_requests = parse_num(line, key, value)?,
        "workload.arrival_rate" => {
            w.arrival_rate = check_positive(line, key, parse_num(line, key, value)?)?
        }
        "workload.work_mean" => {
            w.work_mean = check_positive(line, key, parse_num(line, key, value)?)?
        }
        "workload.avg_cpu_min" => {
            w.avg_cpu.lo = check_non_negative(line, key, parse_num(line, key, value)?)?
        }
        "workload.avg_cpu_max" => {
            w.avg_cpu.hi = check_non_negative(line, key, parse_num(line, key, value)?)?
        }
        "workload.avg_mem_min" => {
            w.avg_mem.lo = check_non_negative(line, key, parse_num(line, key, value)?)?
        }
        "workload.avg_mem_max" => {
            w.avg_mem.hi = check_non_negative(line, key, parse_num(line, key, value)?)?
        }
        "workload.uplift_cpu_min" => {
            w.uplift_cpu.lo = check_non_negative(line, key, parse_num(line, key, value)?)?
        }
        "workload.uplift_cpu_max" => {
            w.uplift_cpu.hi = check_non_negative(line, key, parse_num(line, key, value)?)?
        }
        "workload.uplift_mem_min" => {
            w.uplift_mem.lo = check_non_negative(line, key, parse_num(line, key, value)?)?
        }
        "workload.uplift_mem_max" => {
            w.uplift_mem.hi = check_non_negative(line, key, parse_num(line, key, value)?)?
        }
        "workload.class_mix" => {
            let parts: Vec<&str> = value.split(',').map(str::trim).collect();
            if parts.len() != 6 {
                return Err(ScenarioError::BadValue(
                    line,
                    key.into(),
                    format!("expected 6 comma-separated weights, got {}", parts.len()),
                ));
            }
            for (i, part) in parts.iter().enumerate() {
                w.class_mix[i] = check_non_negative(line, key, parse_num(line, key, part)?)?;
            }
        }
        "sla.deadline_p1" | "sla.deadline_p2" | "sla.deadline_p3" | "sla.deadline_p4"
        | "sla.deadline_p5" | "sla.deadline_p6" => {
            let idx = (key.as_bytes()[key.len() - 1] - b'1') as usize;
            w.deadlines[idx] = check_positive(line, key, parse_num(line, key, value)?)?;
        }
        "sla.stretch_limit" => {
            config.stretch_limit = check_positive(line, key, parse_num(line, key, value)?)?
        }
        "seed" => w.seed = parse_num(line, key, value)?,
        "output.dir" => config.output_dir = PathBuf::from(value),
        _ => return Err(ScenarioError::UnknownKey(line, key.to_string())),
    }
    Ok(())
}
