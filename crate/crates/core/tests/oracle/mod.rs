//! Hand-rolled single-host reference simulator used only by the acceptance
//! suite. Deliberately naive and structurally unlike the engine: no event
//! queue, no cancellation generations, no ledger type — just stepwise state
//! advancement with closed-form processor-sharing intervals, rebuilt sums,
//! and an inline copy of the priority chain rule.

use daas_sim::model::Request;

const EPS: f64 = 1e-9;

pub struct Outcome {
    pub id: u64,
    pub start: f64,
    pub finish: f64,
}

struct App {
    id: u64,
    res: (f64, f64),
    act: (f64, f64),
    remaining: f64,
}

struct Waiting {
    id: u64,
    level: u8,
    seq: usize,
}

/// Chain rule, written directly: a request needing reliability can only be
/// covered by the full set; otherwise the first missing factor going down
/// the chain decides the class.
fn level(r: &Request) -> u8 {
    if r.sla.reliability {
        1
    } else if r.sla.durability {
        2
    } else if r.sla.agility {
        3
    } else if r.sla.security {
        4
    } else if r.sla.throughput {
        5
    } else {
        6
    }
}

pub fn run(
    requests: &[Request],
    cap_cpu: f64,
    cap_mem: f64,
    beta: f64,
    ira: bool,
    actual: impl Fn(&Request) -> (f64, f64),
) -> Vec<Outcome> {
    let mut ordered: Vec<&Request> = requests.iter().collect();
    ordered.sort_by(|a, b| {
        a.arrival_time
            .partial_cmp(&b.arrival_time)
            .unwrap()
            .then(a.id.cmp(&b.id))
    });
    let mut next_arrival = 0usize;
    let mut queue: Vec<Waiting> = Vec::new();
    let mut running: Vec<App> = Vec::new();
    let mut seq = 0usize;
    let mut t = 0.0;
    let mut out: Vec<Outcome> = Vec::new();
    let mut starts: Vec<(u64, f64)> = Vec::new();

    loop {
        // current shared rate from the bottleneck load
        let sum_cpu: f64 = running.iter().map(|a| a.act.0).sum();
        let sum_mem: f64 = running.iter().map(|a| a.act.1).sum();
        let load = (sum_cpu / cap_cpu).max(sum_mem / cap_mem);
        let rate = if load > 1.0 { 1.0 / load } else { 1.0 };

        let arrival_t = ordered
            .get(next_arrival)
            .map(|r| r.arrival_time)
            .unwrap_or(f64::INFINITY);
        let finish_t = running
            .iter()
            .map(|a| t + a.remaining / rate)
            .fold(f64::INFINITY, f64::min);
        let t_next = arrival_t.min(finish_t);
        if !t_next.is_finite() {
            assert!(queue.is_empty(), "oracle stuck with a non-empty queue");
            break;
        }

        for app in &mut running {
            app.remaining -= rate * (t_next - t);
        }
        t = t_next;

        // everything within the timestamp tolerance is one instant
        while next_arrival < ordered.len() && ordered[next_arrival].arrival_time <= t + EPS {
            let r = ordered[next_arrival];
            queue.push(Waiting {
                id: r.id,
                level: level(r),
                seq,
            });
            seq += 1;
            next_arrival += 1;
        }
        while let Some(pos) = running.iter().position(|a| a.remaining <= EPS) {
            let app = running.remove(pos);
            let start = starts
                .iter()
                .find(|(id, _)| *id == app.id)
                .expect("finished app started")
                .1;
            out.push(Outcome {
                id: app.id,
                start,
                finish: t,
            });
        }

        // non-skipping dispatch in discipline order
        while let Some(head_pos) = queue
            .iter()
            .enumerate()
            .min_by_key(|(_, w)| if ira { (w.level, w.seq) } else { (0, w.seq) })
            .map(|(pos, _)| pos)
        {
            let head = &queue[head_pos];
            let request = requests.iter().find(|r| r.id == head.id).unwrap();
            let res = (
                request.avg_demand.cpu()
                    + beta * (request.worst_demand.cpu() - request.avg_demand.cpu()),
                request.avg_demand.mem()
                    + beta * (request.worst_demand.mem() - request.avg_demand.mem()),
            );
            let used_cpu: f64 = running.iter().map(|a| a.res.0).sum();
            let used_mem: f64 = running.iter().map(|a| a.res.1).sum();
            if res.0 <= cap_cpu - used_cpu && res.1 <= cap_mem - used_mem {
                running.push(App {
                    id: head.id,
                    res,
                    act: actual(request),
                    remaining: request.nominal_work,
                });
                starts.push((head.id, t));
                queue.remove(head_pos);
            } else {
                break;
            }
        }
    }
    out
}
