//! One allocator per storage/placement policy, each producing a concrete placement.

use super::curve::{analytic_curve, build_curves, CurveOptions, Policy};
use super::greedy::{greedy_allocate, AllocationResult};
use crate::adaptive::{greedy_peel_with, primal_dual, served_rate, PrimalDualState, SolverConfig, TieBreak};
use crate::analytic::{dependent_rounding, optimize_alpha, pmiss_exact};
use crate::error::{param, Result};
use crate::model::{partial_shuffle, Demand, Placement, StorageMode, Topology};
use crate::rng::{self, Stream};

/// Fixed whole placement: cache-presence probabilities from the KKT solution,
/// dependent rounding to exact copy counts, then a uniformly random set of
/// caches per video.
pub fn fixed_whole_allocate(
    num_caches: usize,
    degree: usize,
    demand: &Demand,
    budget: f64,
    seed: u64,
) -> Result<AllocationResult> {
    let per_cache = budget / num_caches as f64;
    let alpha = optimize_alpha(&demand.popularity, degree, per_cache)?;
    let copies = dependent_rounding(&alpha.alpha, num_caches, seed)?;

    let mut rng = rng::stream(seed, Stream::Placement);
    let mut pool: Vec<usize> = (0..num_caches).collect();
    let mut placement = Placement::empty(num_caches, demand.num_videos, StorageMode::Whole);
    for (m, &c) in copies.iter().enumerate() {
        for &h in partial_shuffle(&mut pool, c, &mut rng) {
            placement.set(h, m, 1.0)?;
        }
    }
    let peers = demand.num_peers() as f64;
    let served_estimate: Vec<f64> = copies
        .iter()
        .zip(&demand.popularity)
        .map(|(&c, p)| peers * p * (1.0 - pmiss_exact(num_caches, degree, c)))
        .collect();
    let copies: Vec<f64> = copies.into_iter().map(|c| c as f64).collect();
    Ok(AllocationResult {
        total_copies: copies.iter().sum(),
        objective: served_estimate.iter().sum(),
        copies,
        served_estimate,
        policy: None,
        placement: Some(placement),
        converged: true,
        trace: Vec::new(),
    })
}

/// Fixed fractional placement: greedy over the popularity-weighted linear
/// curves in steps of `1/L` copy, each video spread uniformly over all caches.
pub fn fixed_fractional_allocate(num_caches: usize, degree: usize, demand: &Demand, budget: f64) -> Result<AllocationResult> {
    let step = 1.0 / degree as f64;
    let peers = demand.num_peers() as f64;
    let curves = demand
        .popularity
        .iter()
        .enumerate()
        .map(|(m, p)| analytic_curve(m, Policy::FixedFractional, num_caches, degree, peers * p, step))
        .collect::<Result<Vec<_>>>()?;
    let mut result = greedy_allocate(&curves, budget)?;
    result.placement = Some(uniform_fractional_placement(num_caches, &result.copies)?);
    Ok(result)
}

/// Every cache stores `copies[m] / H` of video `m`.
pub fn uniform_fractional_placement(num_caches: usize, copies: &[f64]) -> Result<Placement> {
    let mut placement = Placement::empty(num_caches, copies.len(), StorageMode::Fractional);
    for (m, &c) in copies.iter().enumerate() {
        if c > num_caches as f64 {
            return param(format!("video {m} has {c} copies but only {num_caches} caches"));
        }
        let w = c / num_caches as f64;
        if w > 0.0 {
            for h in 0..num_caches {
                placement.set(h, m, w)?;
            }
        }
    }
    Ok(placement)
}

/// Adaptive whole placement: greedy over the realized greedy-peeling curves.
/// With `balance`, cache loads are evened out afterwards toward `budget / H`.
pub fn adaptive_whole_allocate(topology: &Topology, demand: &Demand, budget: f64, balance: bool) -> Result<AllocationResult> {
    let curves = build_curves(topology, demand, Policy::AdaptiveWhole, &CurveOptions::default())?;
    let mut result = greedy_allocate(&curves, budget)?;
    let copies: Vec<usize> = result.copies.iter().map(|&c| c as usize).collect();
    let capacity = balance.then(|| budget / topology.num_caches as f64);
    result.placement = Some(adaptive_whole_placement(topology, demand, &copies, capacity, None)?);
    Ok(result)
}

/// Peels `copies[m]` caches for every video, most popular first. With a
/// per-cache `capacity`, ties between equally good caches go to the least
/// loaded one and overloaded caches then hand copies to caches with room
/// whenever that loses no coverage. `base_load` is storage already in use.
pub fn adaptive_whole_placement(
    topology: &Topology,
    demand: &Demand,
    copies: &[usize],
    capacity: Option<f64>,
    base_load: Option<&[f64]>,
) -> Result<Placement> {
    demand.check_against(topology)?;
    if copies.len() != demand.num_videos {
        return param("one copy count per video required");
    }
    let mut load = base_load.map_or_else(|| vec![0.0; topology.num_caches], <[f64]>::to_vec);
    let groups = demand.requesters();
    let mut chosen: Vec<Vec<usize>> = vec![Vec::new(); demand.num_videos];
    for (m, &c) in copies.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let tie = if capacity.is_some() {
            TieBreak::LeastLoaded(&load)
        } else {
            TieBreak::LowestIndex
        };
        let peel = greedy_peel_with(topology, &groups[m], c, tie);
        for &h in &peel.caches {
            load[h] += 1.0;
        }
        chosen[m] = peel.caches;
    }
    if let Some(cap) = capacity {
        rebalance(topology, &groups, &mut chosen, &mut load, cap);
    }
    let mut placement = Placement::empty(topology.num_caches, demand.num_videos, StorageMode::Whole);
    for (m, caches) in chosen.iter().enumerate() {
        for &h in caches {
            placement.set(h, m, 1.0)?;
        }
    }
    Ok(placement)
}

/// Moves whole copies off caches loaded above `capacity` onto caches with room.
/// A move is taken only if it does not reduce the number of covered
/// requesters; among those the largest coverage change wins, then the
/// lightest target. Returns the number of moves made.
fn rebalance(topology: &Topology, groups: &[Vec<usize>], chosen: &mut [Vec<usize>], load: &mut [f64], capacity: f64) -> usize {
    let h_count = topology.num_caches;
    let eps = 1e-9;
    let mut moves = 0;
    let mut stuck = vec![false; h_count];
    loop {
        let Some(src) = (0..h_count)
            .filter(|&h| !stuck[h] && load[h] > capacity + eps)
            .max_by(|&a, &b| load[a].total_cmp(&load[b]).then(b.cmp(&a)))
        else {
            return moves;
        };
        // (delta, target load, video, target)
        let mut best: Option<(i64, f64, usize, usize)> = None;
        for (m, caches) in chosen.iter().enumerate() {
            if !caches.contains(&src) {
                continue;
            }
            let mut stored = vec![false; h_count];
            caches.iter().for_each(|&h| stored[h] = true);
            let mut uncovered = vec![0i64; h_count];
            let mut rescue = vec![0i64; h_count];
            let mut lost = 0i64;
            for &u in &groups[m] {
                let row = topology.caches_of(u);
                let count = row.iter().filter(|&&h| stored[h]).count();
                if count == 0 {
                    row.iter().for_each(|&h| uncovered[h] += 1);
                } else if count == 1 && row.contains(&src) {
                    lost += 1;
                    row.iter().filter(|&&h| h != src).for_each(|&h| rescue[h] += 1);
                }
            }
            for dst in 0..h_count {
                if stored[dst] || load[dst] + 1.0 > capacity + eps {
                    continue;
                }
                let delta = uncovered[dst] + rescue[dst] - lost;
                if delta < 0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((d, l, _, _)) => delta > d || (delta == d && load[dst] < l),
                };
                if better {
                    best = Some((delta, load[dst], m, dst));
                }
            }
        }
        match best {
            Some((_, _, m, dst)) => {
                let slot = chosen[m].iter().position(|&h| h == src).expect("source stores the video");
                chosen[m][slot] = dst;
                load[src] -= 1.0;
                load[dst] += 1.0;
                moves += 1;
                stuck.iter_mut().for_each(|s| *s = false);
            }
            None => stuck[src] = true,
        }
    }
}

/// Adaptive fractional placement: the joint primal-dual solver, optionally
/// warm-started from another placement.
pub fn adaptive_fractional_allocate(
    topology: &Topology,
    demand: &Demand,
    budget: f64,
    config: &SolverConfig,
    warm_start: Option<&Placement>,
) -> Result<AllocationResult> {
    let initial = warm_start
        .map(|p| PrimalDualState::from_placement(topology, demand, p))
        .transpose()?;
    let out = primal_dual(topology, demand, budget, config, initial)?;
    let placement = out.placement;
    let copies = placement.copies();
    let mut served_estimate = vec![0.0; demand.num_videos];
    for (row, &m) in topology.adjacency.iter().zip(&demand.requests) {
        served_estimate[m] += row.iter().map(|&h| placement.get(h, m)).sum::<f64>().min(1.0);
    }
    debug_assert!((served_estimate.iter().sum::<f64>() - served_rate(topology, demand, &placement)).abs() < 1e-6);
    Ok(AllocationResult {
        total_copies: copies.iter().sum(),
        copies,
        objective: out.objective,
        served_estimate,
        policy: None,
        placement: Some(placement),
        converged: out.converged,
        trace: out.trace,
    })
}

