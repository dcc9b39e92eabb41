//! Maps a request's required SLA factors to one of six priority classes.
//!
//! The class table is a strictly nested chain of guarantee sets: class 1
//! covers every factor, each level below drops one factor, class 6 covers
//! none. A request is assigned the lowest-priority class whose guarantee
//! set still covers everything the request requires, so a request needing
//! only throughput lands in class 5 while one needing reliability can only
//! be served by class 1.

use crate::model::{PriorityClass, SlaFactors};

/// The six guarantee sets, ordered from class 1 (all factors) down to
/// class 6 (none).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityTable {
    chain: [SlaFactors; 6],
}

const fn factors(
    throughput: bool,
    reliability: bool,
    durability: bool,
    agility: bool,
    security: bool,
) -> SlaFactors {
    SlaFactors {
        throughput,
        reliability,
        durability,
        agility,
        security,
    }
}

static STANDARD: PriorityTable = PriorityTable {
    chain: [
        factors(true, true, true, true, true),
        factors(true, false, true, true, true),
        factors(true, false, false, true, true),
        factors(true, false, false, false, true),
        factors(true, false, false, false, false),
        factors(false, false, false, false, false),
    ],
};

impl PriorityTable {
    pub fn standard() -> &'static PriorityTable {
        &STANDARD
    }

    /// The factor set guaranteed by the given class.
    pub fn guarantees(&self, class: PriorityClass) -> SlaFactors {
        self.chain[(class.level() - 1) as usize]
    }

    /// Assign the largest level (lowest priority) whose guarantee set covers
    /// the required factors. Total: class 1 covers every combination.
    pub fn classify(&self, required: SlaFactors) -> PriorityClass {
        for level in (1..=6u8).rev() {
            let class = PriorityClass::new(level).expect("level in range");
            if self.guarantees(class).covers(required) {
                return class;
            }
        }
        unreachable!("class 1 guarantees all factors");
    }
}

/// Classify against the standard table.
pub fn classify(required: SlaFactors) -> PriorityClass {
    PriorityTable::standard().classify(required)
}

/// The factor profile listed in the table for a class; workload generation
/// draws request profiles from these six rows.
pub fn class_profile(class: PriorityClass) -> SlaFactors {
    PriorityTable::standard().guarantees(class)
}
