//! Overbooked reservation sizing.
//!
//! A single safety factor `beta` interpolates between average-case
//! provisioning (beta = 0, maximal overbooking) and worst-case provisioning
//! (beta = 1, no overbooking). The reservation held in a host ledger is
//! `avg + beta * (worst - avg)` per component; what the app actually
//! consumes is drawn in `[avg, worst]`, so any beta below 1 carries a real
//! overload risk that the engine's progress model makes measurable.

use serde::Serialize;

use crate::model::{ModelError, ResourceVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverbookingPolicy {
    beta: f64,
}

impl OverbookingPolicy {
    /// beta = 1: reserve worst case. beta = 0: reserve the average.
    pub fn new(beta: f64) -> Result<Self, ModelError> {
        if !beta.is_finite() || !(0.0..=1.0).contains(&beta) {
            return Err(ModelError::InvalidBeta(beta));
        }
        Ok(OverbookingPolicy { beta })
    }

    pub fn beta(self) -> f64 {
        self.beta
    }

    /// Component-wise `avg + beta * (worst - avg)`; requires worst >= avg.
    pub fn effective_reservation(
        self,
        avg: ResourceVector,
        worst: ResourceVector,
    ) -> Result<ResourceVector, ModelError> {
        let span = worst.checked_sub(avg)?;
        ResourceVector::new(
            avg.cpu() + self.beta * span.cpu(),
            avg.mem() + self.beta * span.mem(),
        )
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
    fn beta_endpoints_and_midpoint() {
        let avg = rv(2.0, 2.0);
        let worst = rv(4.0, 6.0);
        let at = |beta: f64| {
            OverbookingPolicy::new(beta)
                .unwrap()
                .effective_reservation(avg, worst)
                .unwrap()
        };
        assert_eq!(at(1.0), rv(4.0, 6.0));
        assert_eq!(at(0.0), rv(2.0, 2.0));
        assert_eq!(at(0.5), rv(3.0, 4.0));
    }

    #[test]
    fn beta_out_of_range_rejected() {
        assert!(OverbookingPolicy::new(-0.01).is_err());
        assert!(OverbookingPolicy::new(1.01).is_err());
        assert!(OverbookingPolicy::new(f64::NAN).is_err());
    }

    #[test]
    fn worst_below_avg_is_error_not_clamp() {
        let policy = OverbookingPolicy::new(0.5).unwrap();
        assert!(policy
            .effective_reservation(rv(3.0, 3.0), rv(2.0, 4.0))
            .is_err());
    }

    proptest! {
        #[test]
        fn reservation_bracketed_and_monotone_in_beta(
            avg_cpu in 0.0..8.0f64,
            avg_mem in 0.0..8.0f64,
            span_cpu in 0.0..8.0f64,
            span_mem in 0.0..8.0f64,
            b1 in 0.0..=1.0f64,
            b2 in 0.0..=1.0f64,
        ) {
            let avg = rv(avg_cpu, avg_mem);
            let worst = rv(avg_cpu + span_cpu, avg_mem + span_mem);
            let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
            let r_lo = OverbookingPolicy::new(lo).unwrap().effective_reservation(avg, worst).unwrap();
            let r_hi = OverbookingPolicy::new(hi).unwrap().effective_reservation(avg, worst).unwrap();
            prop_assert!(avg.fits_within(r_lo));
            prop_assert!(r_hi.fits_within(worst));
            prop_assert!(r_lo.fits_within(r_hi));
        }
    }
}
