//! The resource-manager half of the simulator: host selection, the pending
//! queue, and the two dispatch disciplines.
//!
//! Placement is first-fit over a fixed host ordering. Both disciplines are
//! non-skipping: the front entry in discipline order blocks everything
//! behind it, so a queued high-priority request is never bypassed by a
//! smaller one that would fit.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::Serialize;

use crate::model::{Host, ModelError, PriorityClass, Request, ResourceVector, RunningApp};
use crate::overbooking::OverbookingPolicy;

/// Queue discipline: arrival order, or priority class then arrival order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Discipline {
    Fifo,
    Ira,
}

impl Discipline {
    pub fn as_str(self) -> &'static str {
        match self {
            Discipline::Fifo => "fifo",
            Discipline::Ira => "ira",
        }
    }
}

/// Host selection rule. First-fit is the only variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PlacementRule {
    FirstFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SchedulerPolicy {
    pub discipline: Discipline,
    pub placement: PlacementRule,
}

impl SchedulerPolicy {
    pub fn new(discipline: Discipline) -> Self {
        SchedulerPolicy {
            discipline,
            placement: PlacementRule::FirstFit,
        }
    }
}

/// First-fit: index of the lowest-indexed host whose free capacity covers
/// `need`, or None when the request must wait.
pub fn select_host(hosts: &[Host], need: ResourceVector) -> Result<Option<usize>, ModelError> {
    for (idx, host) in hosts.iter().enumerate() {
        if need.fits_within(host.free_capacity()?) {
            return Ok(Some(idx));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueEntry {
    pub request_id: u64,
    pub priority: PriorityClass,
    pub enqueue_time: f64,
    pub seq: u64,
}

impl QueueEntry {
    /// Pop key under the given discipline; FIFO ignores the class.
    fn key(&self, discipline: Discipline) -> (u8, u64) {
        match discipline {
            Discipline::Fifo => (0, self.seq),
            Discipline::Ira => (self.priority.level(), self.seq),
        }
    }
}

/// Requests waiting for capacity, popped in discipline order.
#[derive(Debug)]
pub struct PendingQueue {
    discipline: Discipline,
    heap: BinaryHeap<Reverse<((u8, u64), u64)>>,
    entries: HashMap<u64, QueueEntry>,
    next_seq: u64,
}

impl PendingQueue {
    pub fn new(discipline: Discipline) -> Self {
        PendingQueue {
            discipline,
            heap: BinaryHeap::new(),
            entries: HashMap::new(),
            next_seq: 0,
        }
    }

    pub fn discipline(&self) -> Discipline {
        self.discipline
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn enqueue(
        &mut self,
        request_id: u64,
        priority: PriorityClass,
        now: f64,
    ) -> Result<(), ModelError> {
        if self.entries.contains_key(&request_id) {
            return Err(ModelError::DuplicateRequest(request_id));
        }
        let entry = QueueEntry {
            request_id,
            priority,
            enqueue_time: now,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        self.heap.push(Reverse((entry.key(self.discipline), request_id)));
        self.entries.insert(request_id, entry);
        Ok(())
    }

    /// The entry that must be served next; None when empty.
    pub fn peek(&self) -> Option<&QueueEntry> {
        let Reverse((_, id)) = self.heap.peek()?;
        self.entries.get(id)
    }

    pub fn pop(&mut self) -> Option<QueueEntry> {
        let Reverse((_, id)) = self.heap.pop()?;
        self.entries.remove(&id)
    }
}

/// A successful placement produced by `dispatch`.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub request_id: u64,
    pub host: usize,
    pub priority: PriorityClass,
    pub reservation: ResourceVector,
    pub actual_demand: ResourceVector,
    pub waited: f64,
}

/// Drain the queue in discipline order, placing entries first-fit until the
/// front entry no longer fits anywhere. Each placement reserves capacity
/// and installs a running app whose actual demand comes from `draw_actual`.
pub fn dispatch(
    queue: &mut PendingQueue,
    hosts: &mut [Host],
    requests: &HashMap<u64, Request>,
    obp: OverbookingPolicy,
    now: f64,
    mut draw_actual: impl FnMut(&Request) -> ResourceVector,
) -> Result<Vec<Placement>, ModelError> {
    let mut placements = Vec::new();
    while let Some(entry) = queue.peek() {
        let request = requests
            .get(&entry.request_id)
            .unwrap_or_else(|| panic!("queued request {} unknown", entry.request_id));
        let reservation = obp.effective_reservation(request.avg_demand, request.worst_demand)?;
        let Some(host_idx) = select_host(hosts, reservation)? else {
            // non-skipping: the blocked front blocks everything behind it
            break;
        };
        let entry = queue.pop().expect("peeked entry present");
        let actual_demand = draw_actual(request);
        debug_assert!(request.avg_demand.fits_within(actual_demand));
        debug_assert!(actual_demand.fits_within(request.worst_demand));
        hosts[host_idx].place(RunningApp {
            request_id: request.id,
            actual_demand,
            effective_reservation: reservation,
            start_time: now,
            remaining_work: request.nominal_work,
            last_progress_update: now,
            progressed: 0.0,
        })?;
        placements.push(Placement {
            request_id: request.id,
            host: host_idx,
            priority: entry.priority,
            reservation,
            actual_demand,
            waited: now - entry.enqueue_time,
        });
    }
    Ok(placements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SlaFactors;

    fn rv(cpu: f64, mem: f64) -> ResourceVector {
        ResourceVector::new(cpu, mem).unwrap()
    }

    fn host_with_free(id: usize, free: ResourceVector) -> Host {
        // capacity == free for test hosts with an empty ledger
        Host::new(id, free)
    }

    fn request(id: u64, demand: ResourceVector) -> Request {
        Request::new(id, id, 0.0, SlaFactors::NONE, demand, demand, 10.0, 100.0).unwrap()
    }

    fn p(level: u8) -> PriorityClass {
        PriorityClass::new(level).unwrap()
    }

    #[test]
    fn first_fit_selects_lowest_index() {
        let hosts = vec![host_with_free(0, rv(1.0, 1.0)), host_with_free(1, rv(4.0, 4.0))];
        assert_eq!(select_host(&hosts, rv(2.0, 2.0)).unwrap(), Some(1));
        let hosts = vec![host_with_free(0, rv(4.0, 4.0)), host_with_free(1, rv(4.0, 4.0))];
        assert_eq!(select_host(&hosts, rv(2.0, 2.0)).unwrap(), Some(0));
        let hosts = vec![host_with_free(0, rv(1.0, 1.0))];
        assert_eq!(select_host(&hosts, rv(2.0, 2.0)).unwrap(), None);
    }

    #[test]
    fn enqueue_rejects_duplicates() {
        let mut q = PendingQueue::new(Discipline::Fifo);
        q.enqueue(7, p(3), 0.0).unwrap();
        assert!(matches!(
            q.enqueue(7, p(3), 1.0),
            Err(ModelError::DuplicateRequest(7))
        ));
    }

    #[test]
    fn fifo_pops_by_arrival_even_across_classes() {
        let mut q = PendingQueue::new(Discipline::Fifo);
        q.enqueue(1, p(3), 0.0).unwrap();
        q.enqueue(2, p(1), 1.0).unwrap();
        assert_eq!(q.pop().unwrap().request_id, 1);
        assert_eq!(q.pop().unwrap().request_id, 2);
    }

    #[test]
    fn ira_pops_by_class_then_arrival() {
        let mut q = PendingQueue::new(Discipline::Ira);
        q.enqueue(1, p(3), 0.0).unwrap();
        q.enqueue(2, p(1), 1.0).unwrap();
        q.enqueue(3, p(1), 2.0).unwrap();
        assert_eq!(q.pop().unwrap().request_id, 2);
        assert_eq!(q.pop().unwrap().request_id, 3);
        assert_eq!(q.pop().unwrap().request_id, 1);
    }

    #[test]
    fn same_class_ties_break_by_seq_under_both_disciplines() {
        for discipline in [Discipline::Fifo, Discipline::Ira] {
            let mut q = PendingQueue::new(discipline);
            q.enqueue(10, p(4), 0.0).unwrap();
            q.enqueue(11, p(4), 0.0).unwrap();
            assert_eq!(q.pop().unwrap().request_id, 10);
            assert_eq!(q.pop().unwrap().request_id, 11);
        }
    }

    fn run_dispatch(
        q: &mut PendingQueue,
        hosts: &mut [Host],
        requests: &HashMap<u64, Request>,
    ) -> Vec<Placement> {
        let obp = OverbookingPolicy::new(1.0).unwrap();
        dispatch(q, hosts, requests, obp, 0.0, |r| r.avg_demand).unwrap()
    }

    #[test]
    fn dispatch_places_and_reserves() {
        let mut hosts = vec![host_with_free(0, rv(4.0, 4.0))];
        let requests: HashMap<u64, Request> = [(1, request(1, rv(2.0, 2.0)))].into();
        let mut q = PendingQueue::new(Discipline::Fifo);
        q.enqueue(1, p(6), 0.0).unwrap();
        let placed = run_dispatch(&mut q, &mut hosts, &requests);
        assert_eq!(placed.len(), 1);
        assert_eq!(placed[0].host, 0);
        assert_eq!(hosts[0].free_capacity().unwrap(), rv(2.0, 2.0));
    }

    #[test]
    fn fifo_head_of_line_blocks() {
        let mut hosts = vec![host_with_free(0, rv(2.0, 2.0))];
        let requests: HashMap<u64, Request> =
            [(1, request(1, rv(4.0, 4.0))), (2, request(2, rv(1.0, 1.0)))].into();
        let mut q = PendingQueue::new(Discipline::Fifo);
        q.enqueue(1, p(6), 0.0).unwrap();
        q.enqueue(2, p(6), 0.0).unwrap();
        let placed = run_dispatch(&mut q, &mut hosts, &requests);
        assert!(placed.is_empty());
        assert_eq!(q.len(), 2);
    }

    #[test]
    fn ira_high_priority_blocks_lower_even_if_lower_fits() {
        let mut hosts = vec![host_with_free(0, rv(2.0, 2.0))];
        let requests: HashMap<u64, Request> =
            [(1, request(1, rv(4.0, 4.0))), (2, request(2, rv(1.0, 1.0)))].into();
        let mut q = PendingQueue::new(Discipline::Ira);
        q.enqueue(1, p(1), 0.0).unwrap();
        q.enqueue(2, p(6), 0.0).unwrap();
        let placed = run_dispatch(&mut q, &mut hosts, &requests);
        assert!(placed.is_empty());
    }

    #[test]
    fn ira_places_high_priority_first() {
        let mut hosts = vec![host_with_free(0, rv(2.0, 2.0))];
        let requests: HashMap<u64, Request> =
            [(1, request(1, rv(2.0, 2.0))), (2, request(2, rv(2.0, 2.0)))].into();
        let mut q = PendingQueue::new(Discipline::Ira);
        q.enqueue(1, p(6), 0.0).unwrap();
        q.enqueue(2, p(1), 0.0).unwrap();
        let placed = run_dispatch(&mut q, &mut hosts, &requests);
        assert_eq!(placed.len(), 1);
        assert_eq!(placed[0].request_id, 2);
    }
}
