use std::collections::BinaryHeap;

use super::curve::{Policy, ServiceCurve};
use super::greedy::{budget_units, greedy_allocate, AllocationResult, Candidate};
use super::hull::HybridCurve;
use super::policies::{adaptive_whole_placement, uniform_fractional_placement};
use crate::error::{param, Error, Result};
use crate::model::{Demand, Placement, StorageMode, Topology};

/// Suboptimality certificate of a hybrid allocation: the achieved value
/// `U(C̄, θ̄)` is at least `V̄ − Δ(m*)`, and `V̄` bounds every feasible value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// `V̄`: optimum of the concave-hull problem.
    pub hull_value: f64,
    /// `U(C̄, θ̄)`.
    pub achieved: f64,
    /// `m*`, the video that received the final copy.
    pub last_video: Option<usize>,
    /// `Δ(m*)`.
    pub last_gap: f64,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.achieved + 1e-9 * self.hull_value.abs().max(1.0) >= self.hull_value - self.last_gap
    }
}

#[derive(Debug, Clone)]
pub struct HybridAllocation {
    pub allocation: AllocationResult,
    pub curves: Vec<HybridCurve>,
    pub certificate: Certificate,
}

impl HybridAllocation {
    pub fn policies(&self) -> &[Policy] {
        self.allocation.policy.as_deref().unwrap_or(&[])
    }
}

fn check_pairs(ff: &[ServiceCurve], aw: &[ServiceCurve]) -> Result<()> {
    if ff.len() != aw.len() {
        return param(format!("{} fixed fractional curves but {} adaptive whole curves", ff.len(), aw.len()));
    }
    for (a, b) in ff.iter().zip(aw) {
        if a.video != b.video {
            return param(format!("curve order mismatch at videos {} / {}", a.video, b.video));
        }
        if a.step != 1.0 || b.step != 1.0 {
            return param("hybrid allocation runs on the whole-copy grid");
        }
    }
    Ok(())
}

/// Greedy over the concave hulls of `max(f_{m,0}, f_{m,1})`. When the video that
/// received the previous copy is still among the best, it gets the next one too.
pub fn hybrid_allocate(ff: &[ServiceCurve], aw: &[ServiceCurve], budget: f64) -> Result<HybridAllocation> {
    check_pairs(ff, aw)?;
    if ff.is_empty() {
        return param("no curves to allocate over");
    }
    let curves: Vec<HybridCurve> = ff
        .iter()
        .zip(aw)
        .map(|(a, b)| HybridCurve::new(a.video, &a.values, &b.values))
        .collect();
    let capacity: Vec<usize> = ff.iter().map(|c| c.capacity_units).collect();
    let units = budget_units(budget, 1.0)?;

    let mut held = vec![0usize; curves.len()];
    let mut heap: BinaryHeap<Candidate> = curves
        .iter()
        .enumerate()
        .filter(|(i, _)| capacity[*i] > 0)
        .map(|(i, c)| Candidate {
            gain: c.hull.marginal(0),
            video: i,
            units: 0,
        })
        .collect();
    let mut previous: Option<usize> = None;
    for _ in 0..units {
        let top = loop {
            match heap.pop() {
                None => {
                    return Err(Error::Infeasible(format!(
                        "budget {budget} exceeds the copies that fit in the caches"
                    )))
                }
                Some(c) if c.units == held[c.video] => break c,
                Some(_) => continue,
            }
        };
        let tol = 1e-9 * top.gain.abs().max(1.0);
        let chosen = match previous {
            Some(p) if p != top.video && held[p] < capacity[p] && curves[p].hull.marginal(held[p]) >= top.gain - tol => {
                heap.push(top);
                p
            }
            _ => top.video,
        };
        held[chosen] += 1;
        if held[chosen] < capacity[chosen] {
            heap.push(Candidate {
                gain: curves[chosen].hull.marginal(held[chosen]),
                video: chosen,
                units: held[chosen],
            });
        }
        previous = Some(chosen);
    }

    let mut policy = Vec::with_capacity(curves.len());
    let mut served = Vec::with_capacity(curves.len());
    let mut hull_value = 0.0;
    for (c, &k) in curves.iter().zip(&held) {
        let k = k.min(c.combined.len() - 1);
        let (f0, f1) = (c.fixed_fractional[k], c.adaptive_whole[k]);
        // ties go to adaptive whole: no coding overhead
        if f0 > f1 {
            policy.push(Policy::FixedFractional);
            served.push(f0);
        } else {
            policy.push(Policy::AdaptiveWhole);
            served.push(f1);
        }
        hull_value += c.hull.value(k);
    }
    let copies: Vec<f64> = held.iter().map(|&k| k as f64).collect();
    let achieved: f64 = served.iter().sum();
    let certificate = Certificate {
        hull_value,
        achieved,
        last_video: previous,
        last_gap: previous.map_or(0.0, |m| curves[m].gap()),
    };
    Ok(HybridAllocation {
        allocation: AllocationResult {
            total_copies: copies.iter().sum(),
            copies,
            policy: Some(policy),
            objective: achieved,
            served_estimate: served,
            placement: None,
            converged: true,
            trace: Vec::new(),
        },
        curves,
        certificate,
    })
}

/// Simplified hybrid: the `threshold` most popular videos use fixed fractional
/// placement, the rest adaptive whole, and copies are split greedily.
pub fn hybrid_threshold_allocate(
    ff: &[ServiceCurve],
    aw: &[ServiceCurve],
    threshold: usize,
    budget: f64,
) -> Result<AllocationResult> {
    check_pairs(ff, aw)?;
    let chosen: Vec<ServiceCurve> = ff
        .iter()
        .zip(aw)
        .enumerate()
        .map(|(m, (a, b))| if m < threshold { a.clone() } else { b.clone() })
        .collect();
    let mut result = greedy_allocate(&chosen, budget)?;
    result.policy = Some(chosen.iter().map(|c| c.policy).collect());
    Ok(result)
}

/// Materializes a hybrid allocation: fixed fractional videos are spread
/// uniformly over all caches, adaptive whole videos are peeled onto caches.
pub fn hybrid_placement(
    topology: &Topology,
    demand: &Demand,
    allocation: &AllocationResult,
    balance: bool,
) -> Result<Placement> {
    let policy = allocation
        .policy
        .as_ref()
        .ok_or_else(|| Error::Parameter("allocation carries no per-video policy".into()))?;
    let split = |want: Policy| -> Vec<f64> {
        allocation
            .copies
            .iter()
            .zip(policy)
            .map(|(&c, &p)| if p == want { c } else { 0.0 })
            .collect()
    };
    let fractional = uniform_fractional_placement(topology.num_caches, &split(Policy::FixedFractional))?;
    let whole_copies: Vec<usize> = split(Policy::AdaptiveWhole).iter().map(|&c| c as usize).collect();
    let capacity = balance.then(|| allocation.total_copies / topology.num_caches as f64);
    let whole = adaptive_whole_placement(topology, demand, &whole_copies, capacity, Some(&fractional.cache_loads()))?;
    let mut out = Placement::empty(topology.num_caches, demand.num_videos, StorageMode::Fractional);
    for h in 0..topology.num_caches {
        for m in 0..demand.num_videos {
            let w = fractional.get(h, m) + whole.get(h, m);
            out.set(h, m, w.min(1.0))?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocate::curve::Provenance;

    fn curve(video: usize, policy: Policy, values: &[f64]) -> ServiceCurve {
        ServiceCurve {
            video,
            policy,
            step: 1.0,
            values: values.to_vec(),
            provenance: Provenance::Realized,
            capacity_units: 6,
        }
    }

    #[test]
    fn dominating_adaptive_whole_reduces_to_plain_greedy() {
        let aw = vec![
            curve(0, Policy::AdaptiveWhole, &[0.0, 5.0, 8.0, 10.0, 11.0]),
            curve(1, Policy::AdaptiveWhole, &[0.0, 3.0, 5.0, 6.0, 6.0]),
        ];
        let ff = vec![
            curve(0, Policy::FixedFractional, &[0.0, 1.0, 2.0, 3.0, 4.0]),
            curve(1, Policy::FixedFractional, &[0.0, 0.5, 1.0, 1.5, 2.0]),
        ];
        let h = hybrid_allocate(&ff, &aw, 5.0).unwrap();
        let g = greedy_allocate(&aw, 5.0).unwrap();
        assert_eq!(h.allocation.copies, g.copies);
        assert_eq!(h.certificate.last_gap, 0.0);
        assert!(h.policies().iter().all(|&p| p == Policy::AdaptiveWhole));
        assert!(h.certificate.holds());
    }

    #[test]
    fn bridge_is_filled_by_the_same_video() {
        // video 0: AW then a much better FF stretch; video 1: flat-ish AW
        let ff = vec![
            curve(0, Policy::FixedFractional, &[0.0, 1.0, 2.0, 9.0, 12.0]),
            curve(1, Policy::FixedFractional, &[0.0, 0.0, 0.0, 0.0, 0.0]),
        ];
        let aw = vec![
            curve(0, Policy::AdaptiveWhole, &[0.0, 2.0, 3.0, 3.5, 4.0]),
            curve(1, Policy::AdaptiveWhole, &[0.0, 2.9, 5.8, 8.0, 9.0]),
        ];
        let h = hybrid_allocate(&ff, &aw, 4.0).unwrap();
        assert!(h.certificate.holds());
        assert_eq!(h.allocation.total_copies, 4.0);
        // whoever is not the last video sits on its own curve
        let last = h.certificate.last_video.unwrap();
        for (m, c) in h.curves.iter().enumerate() {
            let k = h.allocation.copies[m] as usize;
            if m != last {
                assert!((c.hull.value(k) - c.combined[k]).abs() < 1e-12, "video {m}");
            }
        }
    }

    #[test]
    fn threshold_mode_uses_ff_for_top_videos() {
        let ff = vec![
            curve(0, Policy::FixedFractional, &[0.0, 2.0, 4.0]),
            curve(1, Policy::FixedFractional, &[0.0, 1.0, 2.0]),
        ];
        let aw = vec![
            curve(0, Policy::AdaptiveWhole, &[0.0, 1.0, 1.5]),
            curve(1, Policy::AdaptiveWhole, &[0.0, 3.0, 3.0]),
        ];
        let r = hybrid_threshold_allocate(&ff, &aw, 1, 3.0).unwrap();
        assert_eq!(
            r.policy.unwrap(),
            vec![Policy::FixedFractional, Policy::AdaptiveWhole]
        );
        assert_eq!(r.copies, vec![2.0, 1.0]);
    }
}
