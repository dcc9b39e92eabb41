//! Domain types shared by every part of the simulator: resource vectors,
//! SLA factor flags, priority classes, requests, hosts and running apps.

use serde::Serialize;
use thiserror::Error;

/// Errors raised by domain-type constructors and the host reservation ledger.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("resource component must be a finite non-negative number, got {0}")]
    InvalidComponent(f64),
    #[error("resource subtraction underflow: ({0}, {1}) - ({2}, {3})")]
    Underflow(f64, f64, f64, f64),
    #[error("priority level must be in 1..=6, got {0}")]
    InvalidPriorityLevel(u8),
    #[error("request {0}: worst-case demand must cover average demand component-wise")]
    WorstBelowAvg(u64),
    #[error("request {0}: {1} must be positive")]
    NonPositive(u64, &'static str),
    #[error("request {0}: arrival time must be non-negative")]
    NegativeArrival(u64),
    #[error("beta must lie in [0, 1], got {0}")]
    InvalidBeta(f64),
    #[error("host {0}: reservation of ({1}, {2}) exceeds free capacity ({3}, {4})")]
    ReserveOverflow(usize, f64, f64, f64, f64),
    #[error("host {0}: release of ({1}, {2}) exceeds reserved ({3}, {4})")]
    ReleaseUnderflow(usize, f64, f64, f64, f64),
    #[error("host {0}: ledger corrupt: reserved ({1}, {2}) exceeds capacity ({3}, {4})")]
    LedgerCorrupt(usize, f64, f64, f64, f64),
    #[error("host {0}: no running app for request {1}")]
    UnknownApp(usize, u64),
    #[error("request {0} is already queued")]
    DuplicateRequest(u64),
}

/// A two-dimensional capacity/demand quantity in abstract CPU and memory units.
///
/// Components are always finite and non-negative; subtraction that would
/// underflow is an error, never a silent clamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourceVector {
    cpu: f64,
    mem: f64,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector { cpu: 0.0, mem: 0.0 };

    pub fn new(cpu: f64, mem: f64) -> Result<Self, ModelError> {
        for c in [cpu, mem] {
            if !c.is_finite() || c < 0.0 {
                return Err(ModelError::InvalidComponent(c));
            }
        }
        Ok(ResourceVector { cpu, mem })
    }

    pub fn cpu(&self) -> f64 {
        self.cpu
    }

    pub fn mem(&self) -> f64 {
        self.mem
    }

    /// Component-wise difference; underflow is an error.
    pub fn checked_sub(self, other: ResourceVector) -> Result<ResourceVector, ModelError> {
        if other.cpu > self.cpu || other.mem > self.mem {
            return Err(ModelError::Underflow(self.cpu, self.mem, other.cpu, other.mem));
        }
        Ok(ResourceVector {
            cpu: self.cpu - other.cpu,
            mem: self.mem - other.mem,
        })
    }

    /// True iff `self` fits within `free` component-wise (equality admits).
    pub fn fits_within(self, free: ResourceVector) -> bool {
        self.cpu <= free.cpu && self.mem <= free.mem
    }

    /// Largest per-component ratio of `self` to `cap`. Zero-capacity
    /// components contribute only when demanded.
    pub fn max_ratio(self, cap: ResourceVector) -> f64 {
        let frac = |d: f64, c: f64| {
            if c > 0.0 {
                d / c
            } else if d > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        };
        frac(self.cpu, cap.cpu).max(frac(self.mem, cap.mem))
    }
}

impl std::ops::Add for ResourceVector {
    type Output = ResourceVector;

    /// Component-wise sum; non-negativity is closed under addition.
    fn add(self, other: ResourceVector) -> ResourceVector {
        ResourceVector {
            cpu: self.cpu + other.cpu,
            mem: self.mem + other.mem,
        }
    }
}

/// The five SLA requirement flags a request may carry. All 32 combinations
/// are representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SlaFactors {
    pub throughput: bool,
    pub reliability: bool,
    pub durability: bool,
    pub agility: bool,
    pub security: bool,
}

impl SlaFactors {
    pub const NONE: SlaFactors = SlaFactors::from_bits(0);
    pub const ALL: SlaFactors = SlaFactors::from_bits(0b11111);

    /// Decode from a 5-bit mask; bit 0 = throughput .. bit 4 = security.
    pub const fn from_bits(bits: u8) -> SlaFactors {
        SlaFactors {
            throughput: bits & 0b00001 != 0,
            reliability: bits & 0b00010 != 0,
            durability: bits & 0b00100 != 0,
            agility: bits & 0b01000 != 0,
            security: bits & 0b10000 != 0,
        }
    }

    pub const fn bits(self) -> u8 {
        (self.throughput as u8)
            | (self.reliability as u8) << 1
            | (self.durability as u8) << 2
            | (self.agility as u8) << 3
            | (self.security as u8) << 4
    }

    /// True iff every factor required by `other` is present in `self`.
    pub const fn covers(self, other: SlaFactors) -> bool {
        self.bits() & other.bits() == other.bits()
    }
}

/// One of the six priority classes; level 1 is the highest priority, 6 the
/// lowest. The derived order sorts higher-priority classes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PriorityClass(u8);

impl PriorityClass {
    pub const HIGHEST: PriorityClass = PriorityClass(1);
    pub const LOWEST: PriorityClass = PriorityClass(6);

    pub fn new(level: u8) -> Result<Self, ModelError> {
        if (1..=6).contains(&level) {
            Ok(PriorityClass(level))
        } else {
            Err(ModelError::InvalidPriorityLevel(level))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }

    /// True iff `self` is served before `other`.
    pub fn outranks(self, other: PriorityClass) -> bool {
        self.0 < other.0
    }

    pub fn all() -> impl Iterator<Item = PriorityClass> {
        (1..=6).map(PriorityClass)
    }
}

/// An application-execution request.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: u64,
    pub user_id: u64,
    /// Simulated seconds; non-negative.
    pub arrival_time: f64,
    pub sla: SlaFactors,
    pub avg_demand: ResourceVector,
    /// Component-wise at least `avg_demand`.
    pub worst_demand: ResourceVector,
    /// Work units; completed at rate 1.0 when the app runs unimpeded.
    pub nominal_work: f64,
    /// Maximum tolerated wait (seconds) from arrival to start.
    pub deadline: f64,
}

impl Request {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: u64,
        user_id: u64,
        arrival_time: f64,
        sla: SlaFactors,
        avg_demand: ResourceVector,
        worst_demand: ResourceVector,
        nominal_work: f64,
        deadline: f64,
    ) -> Result<Self, ModelError> {
        if !avg_demand.fits_within(worst_demand) {
            return Err(ModelError::WorstBelowAvg(id));
        }
        if !nominal_work.is_finite() || nominal_work <= 0.0 {
            return Err(ModelError::NonPositive(id, "nominal_work"));
        }
        if !deadline.is_finite() || deadline <= 0.0 {
            return Err(ModelError::NonPositive(id, "deadline"));
        }
        if !arrival_time.is_finite() || arrival_time < 0.0 {
            return Err(ModelError::NegativeArrival(id));
        }
        Ok(Request {
            id,
            user_id,
            arrival_time,
            sla,
            avg_demand,
            worst_demand,
            nominal_work,
            deadline,
        })
    }
}

/// An application currently executing on a host.
#[derive(Debug, Clone)]
pub struct RunningApp {
    pub request_id: u64,
    /// Demand drawn once at start; avg <= actual <= worst component-wise.
    pub actual_demand: ResourceVector,
    /// The overbooked reservation held in the host ledger.
    pub effective_reservation: ResourceVector,
    pub start_time: f64,
    /// Work units still owed; reaches exactly 0 at finish.
    pub remaining_work: f64,
    pub last_progress_update: f64,
    /// Work delivered so far, integrated independently of `remaining_work`
    /// so the engine can check work conservation at finish.
    pub progressed: f64,
}

/// A datacenter host: fixed capacity plus a reservation ledger over the
/// set of running apps.
///
/// The ledger discipline keeps `reserved` bit-identical to the left-fold
/// sum of the running apps' effective reservations: placements append to
/// the fold, and finishing an app rebuilds the fold from the survivors.
#[derive(Debug, Clone)]
pub struct Host {
    id: usize,
    capacity: ResourceVector,
    reserved: ResourceVector,
    running: Vec<RunningApp>,
}

impl Host {
    pub fn new(id: usize, capacity: ResourceVector) -> Self {
        Host {
            id,
            capacity,
            reserved: ResourceVector::ZERO,
            running: Vec::new(),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn capacity(&self) -> ResourceVector {
        self.capacity
    }

    pub fn reserved(&self) -> ResourceVector {
        self.reserved
    }

    pub fn running(&self) -> &[RunningApp] {
        &self.running
    }

    pub fn running_mut(&mut self) -> &mut [RunningApp] {
        &mut self.running
    }

    /// capacity - reserved; a corrupt ledger (reserved > capacity) is fatal.
    pub fn free_capacity(&self) -> Result<ResourceVector, ModelError> {
        self.capacity.checked_sub(self.reserved).map_err(|_| {
            ModelError::LedgerCorrupt(
                self.id,
                self.reserved.cpu(),
                self.reserved.mem(),
                self.capacity.cpu(),
                self.capacity.mem(),
            )
        })
    }

    /// Add `amount` to the ledger; fails if it does not fit in free capacity.
    pub fn reserve(&mut self, amount: ResourceVector) -> Result<(), ModelError> {
        let free = self.free_capacity()?;
        if !amount.fits_within(free) {
            return Err(ModelError::ReserveOverflow(
                self.id,
                amount.cpu(),
                amount.mem(),
                free.cpu(),
                free.mem(),
            ));
        }
        self.reserved = self.reserved + amount;
        Ok(())
    }

    /// Remove `amount` from the ledger; fails if more than is reserved.
    pub fn release(&mut self, amount: ResourceVector) -> Result<(), ModelError> {
        self.reserved = self.reserved.checked_sub(amount).map_err(|_| {
            ModelError::ReleaseUnderflow(
                self.id,
                amount.cpu(),
                amount.mem(),
                self.reserved.cpu(),
                self.reserved.mem(),
            )
        })?;
        Ok(())
    }

    /// Reserve the app's effective reservation and add it to the running set.
    pub fn place(&mut self, app: RunningApp) -> Result<(), ModelError> {
        self.reserve(app.effective_reservation)?;
        self.running.push(app);
        Ok(())
    }

    /// Remove a finished app and rebuild the ledger from the survivors, so
    /// the reserved total is exactly the sum over the running set (and
    /// exactly zero once the host drains).
    pub fn finish(&mut self, request_id: u64) -> Result<RunningApp, ModelError> {
        let idx = self
            .running
            .iter()
            .position(|a| a.request_id == request_id)
            .ok_or(ModelError::UnknownApp(self.id, request_id))?;
        let app = self.running.remove(idx);
        self.reserved = self
            .running
            .iter()
            .fold(ResourceVector::ZERO, |acc, a| acc + a.effective_reservation);
        Ok(app)
    }

    /// Aggregate actual demand of all running apps.
    pub fn total_actual_demand(&self) -> ResourceVector {
        self.running
            .iter()
            .fold(ResourceVector::ZERO, |acc, a| acc + a.actual_demand)
    }

    /// Bottleneck load factor: max over components of total actual demand
    /// over capacity. Greater than 1 means the host is overloaded.
    pub fn load_factor(&self) -> f64 {
        self.total_actual_demand().max_ratio(self.capacity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rv(cpu: f64, mem: f64) -> ResourceVector {
        ResourceVector::new(cpu, mem).unwrap()
    }

    #[test]
    fn add_componentwise() {
        assert_eq!(rv(2.0, 4.0) + rv(1.0, 1.0), rv(3.0, 5.0));
        assert_eq!(rv(0.0, 0.0) + rv(3.0, 7.0), rv(3.0, 7.0));
        assert_eq!(rv(1.5, 2.0) + rv(1.5, 2.0), rv(3.0, 4.0));
    }

    #[test]
    fn fits_boundary_and_overflow() {
        assert!(rv(2.0, 2.0).fits_within(rv(2.0, 2.0)));
        assert!(!rv(2.0, 3.0).fits_within(rv(2.0, 2.0)));
        assert!(rv(0.0, 0.0).fits_within(rv(0.0, 0.0)));
    }

    #[test]
    fn sub_underflow_is_error() {
        assert!(rv(1.0, 1.0).checked_sub(rv(2.0, 0.0)).is_err());
        assert_eq!(rv(3.0, 3.0).checked_sub(rv(1.0, 2.0)).unwrap(), rv(2.0, 1.0));
    }

    #[test]
    fn negative_or_nan_component_rejected() {
        assert!(ResourceVector::new(-0.1, 1.0).is_err());
        assert!(ResourceVector::new(1.0, f64::NAN).is_err());
        assert!(ResourceVector::new(f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn priority_levels() {
        assert!(PriorityClass::new(0).is_err());
        assert!(PriorityClass::new(7).is_err());
        let p1 = PriorityClass::new(1).unwrap();
        let p6 = PriorityClass::new(6).unwrap();
        assert!(p1.outranks(p6));
        assert!(!p6.outranks(p1));
        assert!(p1 < p6);
    }

    #[test]
    fn sla_bits_roundtrip() {
        for bits in 0..32u8 {
            assert_eq!(SlaFactors::from_bits(bits).bits(), bits);
        }
        assert!(SlaFactors::ALL.covers(SlaFactors::NONE));
        assert!(!SlaFactors::NONE.covers(SlaFactors::ALL));
    }

    #[test]
    fn request_validation() {
        let avg = rv(1.0, 1.0);
        let worst = rv(2.0, 2.0);
        assert!(Request::new(0, 0, 0.0, SlaFactors::NONE, avg, worst, 1.0, 1.0).is_ok());
        // worst below avg on one component
        assert!(matches!(
            Request::new(1, 0, 0.0, SlaFactors::NONE, worst, avg, 1.0, 1.0),
            Err(ModelError::WorstBelowAvg(1))
        ));
        assert!(Request::new(2, 0, 0.0, SlaFactors::NONE, avg, worst, 0.0, 1.0).is_err());
        assert!(Request::new(3, 0, 0.0, SlaFactors::NONE, avg, worst, 1.0, 0.0).is_err());
        assert!(Request::new(4, 0, -1.0, SlaFactors::NONE, avg, worst, 1.0, 1.0).is_err());
    }

    #[test]
    fn ledger_reserve_release_examples() {
        let mut host = Host::new(0, rv(8.0, 8.0));
        assert_eq!(host.free_capacity().unwrap(), rv(8.0, 8.0));
        host.reserve(rv(6.0, 5.0)).unwrap();
        assert_eq!(host.free_capacity().unwrap(), rv(2.0, 3.0));
        host.reserve(rv(2.0, 3.0)).unwrap();
        assert_eq!(host.free_capacity().unwrap(), rv(0.0, 0.0));
        // cpu overflow on a host with free (1, 9)
        let mut tight = Host::new(1, rv(1.0, 9.0));
        assert!(tight.reserve(rv(2.0, 3.0)).is_err());
        // inverse pair restores the ledger
        host.release(rv(2.0, 3.0)).unwrap();
        host.release(rv(6.0, 5.0)).unwrap();
        assert_eq!(host.reserved(), ResourceVector::ZERO);
        assert!(host.release(rv(0.1, 0.0)).is_err());
    }

    fn grid() -> impl Strategy<Value = f64> {
        // dyadic grid keeps float arithmetic exact for inverse-pair checks
        (0u32..=1024).prop_map(|n| n as f64 / 64.0)
    }

    proptest! {
        #[test]
        fn fits_transitive(a in (grid(), grid()), b in (grid(), grid()), c in (grid(), grid())) {
            let a = rv(a.0, a.1);
            let b = rv(b.0, b.1);
            let c = rv(c.0, c.1);
            if a.fits_within(b) && b.fits_within(c) {
                prop_assert!(a.fits_within(c));
            }
        }

        #[test]
        fn reserve_release_identity(cap in (grid(), grid()), amt in (grid(), grid())) {
            let mut host = Host::new(0, rv(cap.0 + 16.0, cap.1 + 16.0));
            host.reserve(rv(cap.0, cap.1)).unwrap();
            let before = host.reserved();
            let amount = rv(amt.0.min(16.0), amt.1.min(16.0));
            host.reserve(amount).unwrap();
            host.release(amount).unwrap();
            prop_assert_eq!(host.reserved(), before);
        }
    }
}
