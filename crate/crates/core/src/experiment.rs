//! End-to-end runs on a generated system: the multi-video comparison table and
//! the data behind the single-video and multi-video figures.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::adaptive::{greedy_peel, SolverConfig};
use crate::allocate::{
    adaptive_fractional_allocate, adaptive_whole_allocate, build_curves, evaluate_placement, fixed_fractional_allocate,
    fixed_whole_allocate, hybrid_allocate, hybrid_placement, hybrid_threshold_allocate, AllocationResult, CurveOptions,
    Evaluation, HybridAllocation, Policy,
};
use crate::analytic::{aw_upper_bound, ff_curve, fw_curve, fw_lower_bound};
use crate::error::{param, Error, Result};
use crate::model::{sample_topology, Demand, Topology};
use crate::rng::replicate_seed;

/// Size of the simulated system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub caches: usize,
    pub peers: usize,
    pub degree: usize,
    pub videos: usize,
    pub zipf_exponent: f64,
    /// Total copies `S` over all caches.
    pub budget: f64,
}

impl SystemParams {
    /// 50 caches, 40 000 peers with 4 connections each, 2000 Zipf(0.8) videos
    /// and room for 5000 copies (100 per cache).
    pub fn reference() -> Self {
        Self {
            caches: 50,
            peers: 40_000,
            degree: 4,
            videos: 2000,
            zipf_exponent: 0.8,
            budget: 5000.0,
        }
    }

    pub fn per_cache(&self) -> f64 {
        self.budget / self.caches as f64
    }

    /// Machine-parseable `key=value` summary used in output headers.
    pub fn header(&self) -> String {
        format!(
            "caches={} peers={} degree={} videos={} zipf={} budget={}",
            self.caches, self.peers, self.degree, self.videos, self.zipf_exponent, self.budget
        )
    }
}

#[derive(Debug, Clone)]
pub struct System {
    pub params: SystemParams,
    pub topology: Topology,
    pub demand: Demand,
    pub seed: u64,
}

impl System {
    pub fn generate(params: SystemParams, seed: u64) -> Result<Self> {
        let topology = sample_topology(params.caches, params.peers, params.degree, seed)?;
        let demand = Demand::generate(params.videos, params.zipf_exponent, params.peers, seed)?;
        Ok(Self {
            params,
            topology,
            demand,
            seed,
        })
    }
}

/// Multi-video placement strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Single(Policy),
    Hybrid,
    /// Fixed fractional for the `n` most popular videos, adaptive whole for the rest.
    HybridThreshold(usize),
}

impl Strategy {
    pub const TABLE: [Strategy; 5] = [
        Strategy::Single(Policy::FixedWhole),
        Strategy::Single(Policy::FixedFractional),
        Strategy::Single(Policy::AdaptiveWhole),
        Strategy::Single(Policy::AdaptiveFractional),
        Strategy::Hybrid,
    ];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Single(p) => write!(f, "{p}"),
            Strategy::Hybrid => f.write_str("hybrid"),
            Strategy::HybridThreshold(n) => write!(f, "hybrid_threshold_{n}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "hybrid" {
            return Ok(Strategy::Hybrid);
        }
        s.parse().map(Strategy::Single)
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Break late ties toward lightly loaded caches in whole placements.
    pub balance: bool,
    pub solver: SolverConfig,
    /// Start the adaptive fractional solver from the hybrid placement.
    pub warm_start: bool,
    /// Wall-clock limit for the adaptive fractional solver; iterations are
    /// capped from a timed probe so the run fits.
    pub time_budget: Option<Duration>,
}

impl RunOptions {
    pub fn for_system(params: &SystemParams) -> Self {
        Self {
            balance: true,
            solver: SolverConfig::scaled_for(params.peers, params.caches, params.budget),
            warm_start: false,
            time_budget: Some(Duration::from_secs(600)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub strategy: Strategy,
    pub allocation: AllocationResult,
    pub evaluation: Evaluation,
    pub hybrid: Option<HybridAllocation>,
    pub elapsed: Duration,
}

impl PolicyRun {
    pub fn served(&self) -> f64 {
        self.evaluation.total
    }
}

pub fn run_strategy(system: &System, strategy: Strategy, options: &RunOptions) -> Result<PolicyRun> {
    let start = Instant::now();
    let p = &system.params;
    let (t, d) = (&system.topology, &system.demand);
    let mut hybrid = None;
    let allocation = match strategy {
        Strategy::Single(Policy::FixedWhole) => fixed_whole_allocate(p.caches, p.degree, d, p.budget, system.seed)?,
        Strategy::Single(Policy::FixedFractional) => fixed_fractional_allocate(p.caches, p.degree, d, p.budget)?,
        Strategy::Single(Policy::AdaptiveWhole) => adaptive_whole_allocate(t, d, p.budget, options.balance)?,
        Strategy::Single(Policy::AdaptiveFractional) => {
            let warm = if options.warm_start {
                let h = run_strategy(system, Strategy::Hybrid, options)?;
                h.allocation.placement
            } else {
                None
            };
            let mut solver = options.solver.clone();
            if let Some(limit) = options.time_budget {
                solver.max_iters = solver.max_iters.min(iterations_within(system, &solver, limit)?);
            }
            adaptive_fractional_allocate(t, d, p.budget, &solver, warm.as_ref())?
        }
        Strategy::Hybrid => {
            let (ff, aw) = hybrid_curves(system)?;
            let h = hybrid_allocate(&ff, &aw, p.budget)?;
            let mut allocation = h.allocation.clone();
            allocation.placement = Some(hybrid_placement(t, d, &allocation, options.balance)?);
            hybrid = Some(h);
            allocation
        }
        Strategy::HybridThreshold(n) => {
            let (ff, aw) = hybrid_curves(system)?;
            let mut allocation = hybrid_threshold_allocate(&ff, &aw, n, p.budget)?;
            allocation.placement = Some(hybrid_placement(t, d, &allocation, options.balance)?);
            allocation
        }
    };
    let placement = allocation
        .placement
        .as_ref()
        .ok_or_else(|| Error::Parameter("allocator produced no placement".into()))?;
    let evaluation = evaluate_placement(t, d, placement)?;
    Ok(PolicyRun {
        strategy,
        allocation,
        evaluation,
        hybrid,
        elapsed: start.elapsed(),
    })
}

fn hybrid_curves(system: &System) -> Result<(Vec<crate::allocate::ServiceCurve>, Vec<crate::allocate::ServiceCurve>)> {
    let opts = CurveOptions::default();
    let ff = build_curves(&system.topology, &system.demand, Policy::FixedFractional, &opts)?;
    let aw = build_curves(&system.topology, &system.demand, Policy::AdaptiveWhole, &opts)?;
    Ok((ff, aw))
}

/// Iterations of the joint solver that fit in `limit`, from a short timed probe.
fn iterations_within(system: &System, solver: &SolverConfig, limit: Duration) -> Result<usize> {
    let probe_iters = 20;
    let mut probe = solver.clone();
    probe.max_iters = probe_iters;
    probe.trace_every = None;
    let start = Instant::now();
    crate::adaptive::primal_dual(&system.topology, &system.demand, system.params.budget, &probe, None)?;
    let per_iter = start.elapsed().as_secs_f64() / probe_iters as f64;
    Ok(((limit.as_secs_f64() / per_iter.max(1e-9)) as usize).max(1))
}

/// One row of the policy comparison table.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub strategy: Strategy,
    pub served: f64,
    /// Served divided by the adaptive fractional result.
    pub fraction_of_optimal: f64,
    pub converged: bool,
    pub elapsed: Duration,
}

pub fn comparison_table(system: &System, options: &RunOptions) -> Result<Vec<TableRow>> {
    let runs = Strategy::TABLE
        .iter()
        .map(|&s| run_strategy(system, s, options))
        .collect::<Result<Vec<_>>>()?;
    let optimum = runs
        .iter()
        .find(|r| r.strategy == Strategy::Single(Policy::AdaptiveFractional))
        .map(PolicyRun::served)
        .unwrap_or(f64::NAN);
    Ok(runs
        .into_iter()
        .map(|r| TableRow {
            strategy: r.strategy,
            served: r.served(),
            fraction_of_optimal: r.served() / optimum,
            converged: r.allocation.converged,
            elapsed: r.elapsed,
        })
        .collect())
}

/// Single-video curves on a 50-cache style system, averaged over random graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleVideoPoint {
    pub copies: usize,
    pub fixed_whole: f64,
    pub fixed_whole_bound: f64,
    pub fixed_fractional: f64,
    pub adaptive_whole_mean: f64,
    pub adaptive_whole_bound: f64,
}

/// Fixed curves, the two fixed-whole bounds, and the greedy-peeling mean over
/// `replications` random graphs against its analytic upper bound.
pub fn single_video_curves(
    caches: usize,
    degree: usize,
    requesters: usize,
    replications: usize,
    seed: u64,
) -> Result<Vec<SingleVideoPoint>> {
    if requesters == 0 || replications == 0 {
        return param("need at least one requester and one replication");
    }
    let mut sums = vec![0.0; caches + 1];
    let everyone: Vec<usize> = (0..requesters).collect();
    for r in 0..replications {
        let t = sample_topology(caches, requesters, degree, replicate_seed(seed, r as u64))?;
        for (s, v) in sums.iter_mut().zip(greedy_peel(&t, &everyone, caches).curve()) {
            *s += v as f64;
        }
    }
    let n = requesters as f64;
    Ok((0..=caches)
        .map(|c| SingleVideoPoint {
            copies: c,
            fixed_whole: fw_curve(caches, degree, n, c as f64),
            fixed_whole_bound: fw_lower_bound(caches, degree, n, c as f64),
            fixed_fractional: ff_curve(caches, degree, n, c as f64),
            adaptive_whole_mean: sums[c] / replications as f64,
            adaptive_whole_bound: aw_upper_bound(caches, degree, requesters, c),
        })
        .collect())
}

/// Adaptive fractional single-video curve at integer copies `0..=caches`,
/// averaged over the same random graphs as [`single_video_curves`].
pub fn af_single_video_curve(
    caches: usize,
    degree: usize,
    requesters: usize,
    replications: usize,
    seed: u64,
    solver: Option<SolverConfig>,
) -> Result<Vec<f64>> {
    if requesters == 0 || replications == 0 {
        return param("need at least one requester and one replication");
    }
    let options = CurveOptions {
        solver,
        ..CurveOptions::default()
    };
    let mut sums = vec![0.0; caches + 1];
    for r in 0..replications {
        let t = sample_topology(caches, requesters, degree, replicate_seed(seed, r as u64))?;
        let d = Demand::from_requests(1, 0.0, vec![0; requesters], seed)?;
        let curve = &build_curves(&t, &d, Policy::AdaptiveFractional, &options)?[0];
        for (c, s) in sums.iter_mut().enumerate() {
            *s += curve.value(c);
        }
    }
    Ok(sums.into_iter().map(|s| s / replications as f64).collect())
}
