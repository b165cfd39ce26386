//! Primal-dual dynamics for adaptive fractional placement under a total
//! storage budget.
//!
//! Primal variables are the download rate `x` on every cache–peer edge and the
//! stored fractions `W[h][m]`; dual variables are one price `λ` per edge (for
//! `x ≤ W`) and one storage price `ω` (for `Σ W ≤ S`). The continuous-time
//! dynamics are integrated with explicit Euler steps.

use std::collections::VecDeque;

use crate::error::{param, Result};
use crate::model::{Demand, Placement, StorageMode, Topology};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Download-rate step `δ`.
    pub step_rate: f64,
    /// Edge-price step `κ`.
    pub step_rate_price: f64,
    /// Storage step `ι`.
    pub step_storage: f64,
    /// Storage-price step `ν`.
    pub step_storage_price: f64,
    pub max_iters: usize,
    pub tol_objective: f64,
    pub tol_feasibility: f64,
    /// Iterations run at full step size before the `1/√t` decay starts.
    pub warmup: usize,
    /// Trailing window over which both tolerances must hold.
    pub window: usize,
    /// Width of a linear ramp replacing the hard `Σx < 1` indicator; 0 keeps it hard.
    pub smoothing: f64,
    /// The incumbent is re-scored every this many iterations.
    pub eval_every: usize,
    /// Record a [`TraceRow`] every this many iterations.
    pub trace_every: Option<usize>,
}

impl SolverConfig {
    /// Default configuration for a system of `num_peers` peers and budget `budget`.
    pub fn defaults_for(num_peers: usize, budget: f64) -> Self {
        Self {
            step_rate: 0.1,
            step_rate_price: 0.1,
            step_storage: 0.1,
            step_storage_price: 0.1,
            max_iters: 50_000,
            tol_objective: 1e-4 * num_peers as f64,
            tol_feasibility: 1e-3 * budget,
            warmup: 200,
            window: 100,
            smoothing: 0.0,
            eval_every: 1,
            trace_every: None,
        }
    }

    /// Defaults with the storage steps divided by the per-cache capacity and
    /// the total budget, so a single step moves `W` and `ω` by an amount
    /// comparable to one unit of storage. Equals [`Self::defaults_for`] when
    /// both are at most one. Large systems oscillate without this scaling.
    pub fn scaled_for(num_peers: usize, num_caches: usize, budget: f64) -> Self {
        let mut config = Self::defaults_for(num_peers, budget);
        let per_cache = budget / num_caches.max(1) as f64;
        config.step_storage /= per_cache.max(1.0);
        config.step_storage_price /= budget.max(1.0);
        if num_peers * num_caches > 100_000 {
            config.eval_every = 50;
        }
        config
    }

    pub fn validate(&self) -> Result<()> {
        let steps = [
            self.step_rate,
            self.step_rate_price,
            self.step_storage,
            self.step_storage_price,
            self.tol_objective,
            self.tol_feasibility,
        ];
        if steps.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return param("solver steps and tolerances must be positive and finite");
        }
        if self.max_iters == 0 || self.window == 0 || self.eval_every == 0 {
            return param("max_iters, window and eval_every must be at least 1");
        }
        if !(self.smoothing >= 0.0 && self.smoothing < 1.0) {
            return param("smoothing must be in [0, 1)");
        }
        Ok(())
    }
}

/// Full solver state. Edges are indexed peer-major: peer `u`'s `j`-th
/// connection is edge `u * degree + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualState {
    pub x: Vec<f64>,
    pub storage: Placement,
    pub lambda: Vec<f64>,
    pub omega: f64,
    pub iteration: usize,
}

impl PrimalDualState {
    /// Everything starts at zero.
    pub fn cold(topology: &Topology, demand: &Demand) -> Self {
        let edges = topology.num_peers * topology.degree;
        Self {
            x: vec![0.0; edges],
            storage: Placement::empty(topology.num_caches, demand.num_videos, StorageMode::Fractional),
            lambda: vec![0.0; edges],
            omega: 0.0,
            iteration: 0,
        }
    }

    /// Warm start from an existing placement, with rates routed on it.
    pub fn from_placement(topology: &Topology, demand: &Demand, placement: &Placement) -> Result<Self> {
        if placement.num_caches != topology.num_caches || placement.num_videos != demand.num_videos {
            return Err(crate::Error::Dimension("warm-start placement shape".into()));
        }
        let mut state = Self::cold(topology, demand);
        for h in 0..topology.num_caches {
            for m in 0..demand.num_videos {
                state.storage.set(h, m, placement.get(h, m))?;
            }
        }
        for (u, row) in topology.adjacency.iter().enumerate() {
            let m = demand.requests[u];
            let mut left = 1.0f64;
            for (j, &h) in row.iter().enumerate() {
                let r = placement.get(h, m).min(left);
                state.x[u * topology.degree + j] = r;
                left -= r;
            }
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub storage_residual: f64,
    pub omega: f64,
}

#[derive(Debug, Clone)]
pub struct PrimalDualOutcome {
    /// Final raw iterate.
    pub state: PrimalDualState,
    /// Reported placement: the best iterate seen (current or running average),
    /// rescaled onto the budget.
    pub placement: Placement,
    /// Served rate of [`PrimalDualOutcome::placement`] under optimal routing.
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `Σ W − S` of the running average of the iterates.
    pub storage_residual: f64,
    /// `|Σ λ (x − W)|` of the running averages.
    pub slackness_residual: f64,
    pub trace: Vec<TraceRow>,
}

/// Served rate under optimal routing with no upload limits: every peer
/// receives `min(Σ_{h ∈ N_u} W[h][m(u)], 1)`.
pub fn served_rate(topology: &Topology, demand: &Demand, placement: &Placement) -> f64 {
    topology
        .adjacency
        .iter()
        .zip(&demand.requests)
        .map(|(row, &m)| row.iter().map(|&h| placement.get(h, m)).sum::<f64>().min(1.0))
        .sum()
}

/// Runs the primal-dual dynamics for all videos jointly under `Σ W ≤ budget`.
///
/// Non-convergence is reported through [`PrimalDualOutcome::converged`].
pub fn primal_dual(
    topology: &Topology,
    demand: &Demand,
    budget: f64,
    config: &SolverConfig,
    initial: Option<PrimalDualState>,
) -> Result<PrimalDualOutcome> {
    config.validate()?;
    demand.check_against(topology)?;
    if !(budget > 0.0) {
        return param(format!("budget must be positive, got {budget}"));
    }
    let num_caches = topology.num_caches;
    let num_videos = demand.num_videos;
    let degree = topology.degree;
    let mut state = match initial {
        Some(s) => {
            if s.x.len() != topology.num_peers * degree
                || s.storage.num_caches != num_caches
                || s.storage.num_videos != num_videos
            {
                return Err(crate::Error::Dimension("initial solver state shape".into()));
            }
            s
        }
        None => PrimalDualState::cold(topology, demand),
    };

    // W as a flat cache-major buffer for the hot loop
    let mut w: Vec<f64> = (0..num_caches)
        .flat_map(|h| state.storage.cache_row(h).to_vec())
        .collect();
    let edge_slot: Vec<usize> = topology
        .adjacency
        .iter()
        .zip(&demand.requests)
        .flat_map(|(row, &m)| row.iter().map(move |&h| h * num_videos + m))
        .collect();

    let mut price_sum = vec![0.0; w.len()];
    let mut average = w.clone();
    let mut averaged = 0usize;
    // sampled ergodic averages of the rates and prices, for the residuals
    let mut avg_x = state.x.clone();
    let mut avg_lambda = state.lambda.clone();
    let mut sampled = 0usize;
    let avg_window = config.window.div_ceil(config.eval_every).max(2);
    let mut avg_history: VecDeque<(f64, f64)> = VecDeque::with_capacity(avg_window + 1);
    let mut best_w = fit_to_budget(w.clone(), budget);
    let mut best_obj = objective_of(&best_w, &edge_slot, degree);
    let mut history: VecDeque<(f64, f64)> = VecDeque::with_capacity(config.window + 1);
    let mut trace = Vec::new();
    let mut converged = false;
    let start = state.iteration;

    for t in start + 1..=start + config.max_iters {
        let decay = if t <= config.warmup {
            1.0
        } else {
            (config.warmup.max(1) as f64 / t as f64).sqrt()
        };
        let (d_x, d_l, d_w, d_o) = (
            config.step_rate * decay,
            config.step_rate_price * decay,
            config.step_storage * decay,
            config.step_storage_price * decay,
        );

        price_sum.iter_mut().for_each(|p| *p = 0.0);
        for (xs, (ls, slots)) in state
            .x
            .chunks_exact_mut(degree)
            .zip(state.lambda.chunks_exact_mut(degree).zip(edge_slot.chunks_exact(degree)))
        {
            let s: f64 = xs.iter().sum();
            let drive = if config.smoothing > 0.0 {
                ((1.0 - s) / config.smoothing).clamp(0.0, 1.0)
            } else if s < 1.0 {
                1.0
            } else {
                0.0
            };
            for ((x, l), &slot) in xs.iter_mut().zip(ls.iter_mut()).zip(slots) {
                let a = drive - *l;
                // [a]^+_x: a negative drive is cut off once x sits at zero
                if *x > 0.0 || a > 0.0 {
                    *x = (*x + d_x * a).clamp(0.0, 1.0);
                }
                *l = (*l + d_l * (*x - w[slot])).max(0.0);
                price_sum[slot] += *l;
            }
        }
        let omega = state.omega;
        let mut stored = 0.0;
        for (wi, p) in w.iter_mut().zip(&price_sum) {
            *wi = (*wi + d_w * (p - omega)).clamp(0.0, 1.0);
            stored += *wi;
        }
        state.omega = (state.omega + d_o * (stored - budget)).max(0.0);
        state.iteration = t;

        let rel = t - start;
        if rel > config.warmup {
            averaged += 1;
            let k = 1.0 / averaged as f64;
            for (a, wi) in average.iter_mut().zip(&w) {
                *a += k * (wi - *a);
            }
        } else {
            average.copy_from_slice(&w);
        }

        let obj = objective_of(&w, &edge_slot, degree);
        let residual = stored - budget;
        if rel % config.eval_every == 0 || rel == config.max_iters {
            if rel > config.warmup {
                sampled += 1;
                let k = 1.0 / sampled as f64;
                avg_x.iter_mut().zip(&state.x).for_each(|(a, v)| *a += k * (v - *a));
                avg_lambda.iter_mut().zip(&state.lambda).for_each(|(a, v)| *a += k * (v - *a));
                let avg_obj = objective_of(&average, &edge_slot, degree);
                avg_history.push_back((avg_obj, average.iter().sum::<f64>() - budget));
                if avg_history.len() > avg_window {
                    avg_history.pop_front();
                }
            }
            for candidate in [&w, &average] {
                let fitted = fit_to_budget(candidate.clone(), budget);
                let v = objective_of(&fitted, &edge_slot, degree);
                if v > best_obj {
                    best_obj = v;
                    best_w = fitted;
                }
            }
        }
        if let Some(every) = config.trace_every {
            if rel % every == 0 {
                trace.push(TraceRow {
                    iter: t,
                    objective: obj,
                    storage_residual: residual,
                    omega: state.omega,
                });
            }
        }
        history.push_back((obj, residual));
        if history.len() > config.window {
            history.pop_front();
        }
        // either the raw iterate settles, or (when it cycles) its running average does
        let steady = |h: &VecDeque<(f64, f64)>, len: usize| {
            h.len() >= len
                && h.iter().all(|(o, r)| {
                    (o - h[0].0).abs() < config.tol_objective && r.abs() < config.tol_feasibility
                })
        };
        // serving every request cannot be improved on; the averaged iterate
        // still has to be feasible and complementary
        let saturated = || {
            best_obj >= topology.num_peers as f64 - 1e-9
                && avg_history.back().is_some_and(|&(_, r)| r <= config.tol_feasibility)
                && slackness(&avg_x, &avg_lambda, &average, &edge_slot) < 10.0 * config.tol_feasibility
        };
        if rel > config.warmup
            && (steady(&history, config.window) || steady(&avg_history, avg_window) || saturated())
        {
            converged = true;
            let fitted = fit_to_budget(average.clone(), budget);
            let v = objective_of(&fitted, &edge_slot, degree);
            if v > best_obj {
                best_obj = v;
                best_w = fitted;
            }
            break;
        }
    }

    for h in 0..num_caches {
        for m in 0..num_videos {
            state.storage.set(h, m, w[h * num_videos + m])?;
        }
    }
    // residuals of the averaged iterate; the raw one can cycle on degenerate instances
    let (rx, rl, rw) = if sampled > 0 {
        (&avg_x, &avg_lambda, &average)
    } else {
        (&state.x, &state.lambda, &w)
    };
    let stored: f64 = rw.iter().sum();
    let slackness_residual = slackness(rx, rl, rw, &edge_slot);
    let mut placement = Placement::empty(num_caches, num_videos, StorageMode::Fractional);
    for h in 0..num_caches {
        for m in 0..num_videos {
            placement.set(h, m, best_w[h * num_videos + m])?;
        }
    }
    Ok(PrimalDualOutcome {
        iterations: state.iteration - start,
        state,
        placement,
        objective: best_obj,
        converged,
        storage_residual: stored - budget,
        slackness_residual,
        trace,
    })
}

/// Single-video convenience: only `requesters` take part.
pub fn primal_dual_single(
    topology: &Topology,
    requesters: &[usize],
    budget: f64,
    config: &SolverConfig,
) -> Result<PrimalDualOutcome> {
    let rows: Vec<Vec<usize>> = requesters.iter().map(|&u| topology.adjacency[u].clone()).collect();
    if rows.is_empty() {
        return param("single-video solve needs at least one requester");
    }
    let sub = Topology::from_adjacency(topology.num_caches, rows, topology.seed)?;
    let demand = Demand::from_requests(1, 0.0, vec![0; requesters.len()], 0)?;
    primal_dual(&sub, &demand, budget, config, None)
}

/// `|Σ λ (x − W)|` over all edges.
fn slackness(x: &[f64], lambda: &[f64], w: &[f64], edge_slot: &[usize]) -> f64 {
    x.iter()
        .zip(lambda)
        .zip(edge_slot)
        .map(|((x, l), &slot)| l * (x - w[slot]))
        .sum::<f64>()
        .abs()
}

fn objective_of(w: &[f64], edge_slot: &[usize], degree: usize) -> f64 {
    edge_slot
        .chunks_exact(degree)
        .map(|slots| slots.iter().map(|&s| w[s]).sum::<f64>().min(1.0))
        .sum()
}

/// Rescales `w` so that `Σ w = budget` (or every entry is 1), keeping entries in [0, 1].
/// Shrinking is proportional; growing scales the unsaturated entries up.
pub(crate) fn fit_to_budget(mut w: Vec<f64>, budget: f64) -> Vec<f64> {
    if budget >= w.len() as f64 {
        w.iter_mut().for_each(|x| *x = 1.0);
        return w;
    }
    for _ in 0..64 {
        let total: f64 = w.iter().sum();
        if (total - budget).abs() <= 1e-12 * budget.max(1.0) {
            break;
        }
        if total > budget {
            let k = budget / total;
            w.iter_mut().for_each(|x| *x *= k);
            continue;
        }
        let full: f64 = w.iter().filter(|&&x| x >= 1.0).count() as f64;
        let free: f64 = w.iter().filter(|&&x| x < 1.0).sum();
        if free <= 0.0 {
            // nothing to scale: spread the rest evenly over the free entries
            let slots = w.iter().filter(|&&x| x < 1.0).count() as f64;
            let add = (budget - total) / slots;
            w.iter_mut().filter(|x| **x < 1.0).for_each(|x| *x = (*x + add).min(1.0));
            continue;
        }
        let k = (budget - full) / free;
        w.iter_mut().filter(|x| **x < 1.0).for_each(|x| *x = (*x * k).min(1.0));
    }
    w
}
