//! Placement on a realized graph, using the actual requests.

mod peel;
mod primal_dual;

pub use peel::{exact_cover, greedy_peel, greedy_peel_with, Peel, TieBreak, EXACT_COVER_GUARD};
pub use primal_dual::{
    primal_dual, primal_dual_single, served_rate, PrimalDualOutcome, PrimalDualState, SolverConfig, TraceRow,
};
