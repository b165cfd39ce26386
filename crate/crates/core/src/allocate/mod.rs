//! Multi-video copy allocation built from single-video service curves.

mod curve;
mod evaluate;
mod greedy;
mod hull;
mod hybrid;
mod policies;

pub use curve::{analytic_curve, build_curves, c_max, CurveOptions, Policy, Provenance, RequesterCounts, ServiceCurve};
pub use evaluate::{evaluate_placement, Evaluation};
pub use greedy::{greedy_allocate, AllocationResult};
pub use hull::{concave_hull, Hull, HybridCurve};
pub use hybrid::{hybrid_allocate, hybrid_placement, hybrid_threshold_allocate, Certificate, HybridAllocation};
pub use policies::{
    adaptive_fractional_allocate, adaptive_whole_allocate, adaptive_whole_placement, fixed_fractional_allocate,
    fixed_whole_allocate, uniform_fractional_placement,
};
