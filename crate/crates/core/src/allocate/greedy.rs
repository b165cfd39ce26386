use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::curve::{Policy, ServiceCurve};
use crate::adaptive::TraceRow;
use crate::error::{param, Error, Result};
use crate::model::Placement;

/// Outcome of a multi-video allocation.
#[derive(Debug, Clone)]
pub struct AllocationResult {
    /// Copies `C_m` per video.
    pub copies: Vec<f64>,
    /// Policy chosen per video (hybrid allocators only).
    pub policy: Option<Vec<Policy>>,
    pub total_copies: f64,
    /// Objective estimate `Σ_m f_m(C_m)` from the service curves.
    pub objective: f64,
    /// Per-video service estimate `f_m(C_m)`.
    pub served_estimate: Vec<f64>,
    pub placement: Option<Placement>,
    /// False when an iterative solver stopped at its iteration cap.
    pub converged: bool,
    /// Solver convergence trace, when one was requested.
    pub trace: Vec<TraceRow>,
}

/// Heap entry ordered by gain, then by lower video index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub gain: f64,
    pub video: usize,
    /// Units the video held when this entry was pushed (stale entries are skipped).
    pub units: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| Reverse(self.video).cmp(&Reverse(other.video)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Number of grid units that `budget` copies buy at `step` copies per unit.
pub(crate) fn budget_units(budget: f64, step: f64) -> Result<usize> {
    let units = budget / step;
    if !(budget >= 0.0) || (units - units.round()).abs() > 1e-9 {
        return param(format!("budget {budget} is not a whole number of {step}-copy units"));
    }
    Ok(units.round() as usize)
}

/// Repeatedly gives one grid unit to the video with the largest marginal gain
/// until the budget is spent. Optimal when every curve is concave, which is
/// checked up front. Ties go to the lowest video index.
pub fn greedy_allocate(curves: &[ServiceCurve], budget: f64) -> Result<AllocationResult> {
    let Some(first) = curves.first() else {
        return param("no curves to allocate over");
    };
    let step = first.step;
    if let Some(c) = curves.iter().find(|c| (c.step - step).abs() > 1e-12) {
        return param(format!("video {} uses grid step {} but video {} uses {step}", c.video, c.step, first.video));
    }
    for c in curves {
        if let Some(k) = c.concavity_violation() {
            return Err(Error::Contract {
                video: c.video,
                reason: format!("marginal gain increases at {} copies", c.copies_at(k)),
            });
        }
    }
    let units = budget_units(budget, step)?;
    let mut held = vec![0usize; curves.len()];
    let mut heap: BinaryHeap<Candidate> = curves
        .iter()
        .enumerate()
        .filter(|(_, c)| c.capacity_units > 0)
        .map(|(i, c)| Candidate {
            gain: c.marginal(0),
            video: i,
            units: 0,
        })
        .collect();
    for _ in 0..units {
        let Some(top) = heap.pop() else {
            return Err(Error::Infeasible(format!(
                "budget {budget} exceeds the copies that fit in the caches"
            )));
        };
        let i = top.video;
        held[i] += 1;
        if held[i] < curves[i].capacity_units {
            heap.push(Candidate {
                gain: curves[i].marginal(held[i]),
                video: i,
                units: held[i],
            });
        }
    }
    Ok(result_from_units(curves, &held))
}

pub(crate) fn result_from_units(curves: &[ServiceCurve], held: &[usize]) -> AllocationResult {
    let copies: Vec<f64> = curves.iter().zip(held).map(|(c, &k)| c.copies_at(k)).collect();
    let served_estimate: Vec<f64> = curves.iter().zip(held).map(|(c, &k)| c.value(k)).collect();
    AllocationResult {
        total_copies: copies.iter().sum(),
        objective: served_estimate.iter().sum(),
        copies,
        served_estimate,
        policy: None,
        placement: None,
        converged: true,
        trace: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocate::curve::Provenance;

    pub(crate) fn curve(video: usize, values: &[f64]) -> ServiceCurve {
        ServiceCurve {
            video,
            policy: Policy::AdaptiveWhole,
            step: 1.0,
            values: values.to_vec(),
            provenance: Provenance::Realized,
            capacity_units: values.len() - 1,
        }
    }

    #[test]
    fn single_video_takes_what_fits() {
        let c = vec![curve(0, &[0.0, 3.0, 5.0, 6.0])];
        let r = greedy_allocate(&c, 2.0).unwrap();
        assert_eq!(r.copies, vec![2.0]);
        assert_eq!(r.objective, 5.0);
        assert!(greedy_allocate(&c, 4.0).is_err());
    }

    #[test]
    fn identical_curves_split_evenly() {
        let v = [0.0, 4.0, 7.0, 9.0, 10.0];
        let c = vec![curve(0, &v), curve(1, &v)];
        let r = greedy_allocate(&c, 4.0).unwrap();
        assert_eq!(r.copies, vec![2.0, 2.0]);
        let r = greedy_allocate(&c, 3.0).unwrap();
        assert_eq!(r.copies, vec![2.0, 1.0]);
    }

    #[test]
    fn non_concave_curve_is_rejected() {
        let c = vec![curve(0, &[0.0, 1.0, 2.0]), curve(7, &[0.0, 0.0, 10.0])];
        match greedy_allocate(&c, 1.0) {
            Err(Error::Contract { video, .. }) => assert_eq!(video, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fractional_budget_must_align_with_grid() {
        let mut c = curve(0, &[0.0, 1.0, 2.0]);
        c.step = 0.5;
        assert!(greedy_allocate(&[c.clone()], 0.75).is_err());
        let r = greedy_allocate(&[c], 1.0).unwrap();
        assert_eq!(r.copies, vec![1.0]);
    }
}
