use std::fmt;
use std::str::FromStr;

use crate::adaptive::{greedy_peel, primal_dual_single, SolverConfig};
use crate::analytic::{ff_curve, ff_saturation, fw_curve};
use crate::error::{param, Error, Result};
use crate::model::{Demand, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    FixedWhole,
    FixedFractional,
    AdaptiveWhole,
    AdaptiveFractional,
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::FixedWhole,
        Policy::FixedFractional,
        Policy::AdaptiveWhole,
        Policy::AdaptiveFractional,
    ];

    pub fn short(self) -> &'static str {
        match self {
            Policy::FixedWhole => "fw",
            Policy::FixedFractional => "ff",
            Policy::AdaptiveWhole => "aw",
            Policy::AdaptiveFractional => "af",
        }
    }

    pub fn is_fractional(self) -> bool {
        matches!(self, Policy::FixedFractional | Policy::AdaptiveFractional)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::FixedWhole => "fixed_whole",
            Policy::FixedFractional => "fixed_fractional",
            Policy::AdaptiveWhole => "adaptive_whole",
            Policy::AdaptiveFractional => "adaptive_fractional",
        })
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fw" | "fixed_whole" => Ok(Policy::FixedWhole),
            "ff" | "fixed_fractional" => Ok(Policy::FixedFractional),
            "aw" | "adaptive_whole" => Ok(Policy::AdaptiveWhole),
            "af" | "adaptive_fractional" => Ok(Policy::AdaptiveFractional),
            other => param(format!("unknown policy '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Expectation over random graphs (analytic).
    Expected,
    /// Computed on the realized graph and requests.
    Realized,
}

/// Which requester count feeds the analytic curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequesterCounts {
    /// `|U_m|` from the realized requests.
    Realized,
    /// `|U| p(m)`: popularity only.
    Expected,
}

/// Served rate of one video as a function of its copies, sampled at
/// `copies = k * step` for `k = 0..values.len()`; flat beyond the last point.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceCurve {
    pub video: usize,
    pub policy: Policy,
    pub step: f64,
    pub values: Vec<f64>,
    pub provenance: Provenance,
    /// Grid points available in total (copies cannot exceed the number of caches).
    pub capacity_units: usize,
}

impl ServiceCurve {
    pub fn value(&self, units: usize) -> f64 {
        self.values[units.min(self.values.len() - 1)]
    }

    /// Gain of the `units + 1`-th grid step.
    pub fn marginal(&self, units: usize) -> f64 {
        self.value(units + 1) - self.value(units)
    }

    pub fn copies_at(&self, units: usize) -> f64 {
        units as f64 * self.step
    }

    /// First grid point whose marginal gain exceeds the previous one, if any.
    pub fn concavity_violation(&self) -> Option<usize> {
        let scale = self.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let tol = 1e-9 * scale;
        (1..self.values.len().saturating_sub(1)).find(|&k| self.marginal(k) > self.marginal(k - 1) + tol)
    }
}

#[derive(Debug, Clone)]
pub struct CurveOptions {
    pub counts: RequesterCounts,
    /// Grid step for fractional policies; whole policies always use 1.
    pub fractional_step: f64,
    /// Solver used for adaptive fractional budget sweeps.
    pub solver: Option<SolverConfig>,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            counts: RequesterCounts::Realized,
            fractional_step: 1.0,
            solver: None,
        }
    }
}

/// Grid length used per video: `min(H, units needed to serve everyone + 1)`.
pub fn c_max(capacity_units: usize, needed_units: usize) -> usize {
    capacity_units.min(needed_units + 1)
}

/// Builds one service curve per video under `policy`.
pub fn build_curves(
    topology: &Topology,
    demand: &Demand,
    policy: Policy,
    options: &CurveOptions,
) -> Result<Vec<ServiceCurve>> {
    demand.check_against(topology)?;
    let h = topology.num_caches;
    let l = topology.degree;
    let step = if policy.is_fractional() { options.fractional_step } else { 1.0 };
    if !(step > 0.0) || ((h as f64 / step) - (h as f64 / step).round()).abs() > 1e-9 {
        return param(format!("grid step {step} must divide the {h} caches"));
    }
    let capacity_units = (h as f64 / step).round() as usize;
    let groups = demand.requesters();
    let counts: Vec<f64> = match options.counts {
        RequesterCounts::Realized => groups.iter().map(|g| g.len() as f64).collect(),
        RequesterCounts::Expected => demand
            .popularity
            .iter()
            .map(|p| p * demand.num_peers() as f64)
            .collect(),
    };

    let mut curves = Vec::with_capacity(demand.num_videos);
    for (m, requesters) in groups.iter().enumerate() {
        let n = counts[m];
        let (values, provenance) = match policy {
            Policy::FixedWhole | Policy::FixedFractional => {
                let c = analytic_curve(m, policy, h, l, n, step)?;
                (c.values, c.provenance)
            }
            Policy::AdaptiveWhole => {
                let peel = greedy_peel(topology, requesters, h);
                let curve = peel.curve();
                let needed = curve.iter().position(|&c| c == requesters.len()).unwrap_or(h);
                let len = c_max(capacity_units, needed);
                let v = curve[..=len].iter().map(|&c| c as f64).collect();
                (v, Provenance::Realized)
            }
            Policy::AdaptiveFractional => (af_sweep(topology, requesters, step, capacity_units, options)?, Provenance::Realized),
        };
        curves.push(ServiceCurve {
            video: m,
            policy,
            step,
            values,
            provenance,
            capacity_units,
        });
    }
    Ok(curves)
}

/// Graph-independent curve for a fixed policy with `requesters` (possibly
/// fractional, e.g. an expected count) requesters.
pub fn analytic_curve(
    video: usize,
    policy: Policy,
    num_caches: usize,
    degree: usize,
    requesters: f64,
    step: f64,
) -> Result<ServiceCurve> {
    let (h, l) = (num_caches, degree);
    let capacity_units = (h as f64 / step).round() as usize;
    let values = match policy {
        Policy::FixedWhole => {
            // zero miss probability once C > H - L
            let len = c_max(capacity_units, h - l + 1);
            (0..=len).map(|c| fw_curve(h, l, requesters, c as f64)).collect()
        }
        Policy::FixedFractional => {
            let needed = (ff_saturation(h, l) / step).ceil() as usize;
            let len = c_max(capacity_units, needed);
            (0..=len).map(|k| ff_curve(h, l, requesters, k as f64 * step)).collect()
        }
        other => return param(format!("{other} curves depend on the realized graph")),
    };
    Ok(ServiceCurve {
        video,
        policy,
        step,
        values,
        provenance: Provenance::Expected,
        capacity_units,
    })
}

fn af_sweep(
    topology: &Topology,
    requesters: &[usize],
    step: f64,
    capacity_units: usize,
    options: &CurveOptions,
) -> Result<Vec<f64>> {
    if requesters.is_empty() {
        return Ok(vec![0.0, 0.0]);
    }
    // the whole-copy greedy cover bounds where the fractional curve saturates
    let peel = greedy_peel(topology, requesters, topology.num_caches);
    let needed = peel.curve().iter().position(|&c| c == requesters.len()).unwrap_or(topology.num_caches);
    let len = c_max(capacity_units, (needed as f64 / step).ceil() as usize);
    let n = requesters.len() as f64;
    let mut values = vec![0.0];
    let mut running = 0.0f64;
    for k in 1..=len {
        let budget = k as f64 * step;
        let cfg = options
            .solver
            .clone()
            .unwrap_or_else(|| SolverConfig::defaults_for(requesters.len(), budget));
        let out = primal_dual_single(topology, requesters, budget, &cfg)?;
        // the optimum is monotone in the budget
        running = running.max(out.objective).min(n);
        values.push(running);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_topology;

    fn system() -> (Topology, Demand) {
        let t = sample_topology(50, 400, 4, 3).unwrap();
        let d = Demand::generate(30, 0.8, 400, 3).unwrap();
        (t, d)
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.short().parse::<Policy>().unwrap(), p);
            assert_eq!(p.to_string().parse::<Policy>().unwrap(), p);
        }
        assert!("xx".parse::<Policy>().is_err());
    }

    #[test]
    fn unrequested_video_has_zero_curve() {
        let t = sample_topology(10, 5, 2, 1).unwrap();
        let d = Demand::from_requests(3, 0.8, vec![0, 0, 1, 1, 0], 0).unwrap();
        for p in [Policy::FixedWhole, Policy::FixedFractional, Policy::AdaptiveWhole] {
            let curves = build_curves(&t, &d, p, &CurveOptions::default()).unwrap();
            assert!(curves[2].values.iter().all(|&v| v == 0.0), "{p}");
        }
    }

    #[test]
    fn ff_curve_saturates_at_h_over_l() {
        let t = sample_topology(50, 20, 4, 1).unwrap();
        let d = Demand::from_requests(1, 0.8, vec![0; 20], 0).unwrap();
        let opts = CurveOptions {
            fractional_step: 0.25,
            ..CurveOptions::default()
        };
        let c = &build_curves(&t, &d, Policy::FixedFractional, &opts).unwrap()[0];
        // 12.5 copies is grid point 50
        assert_eq!(c.value(50), 20.0);
        assert!(c.value(49) < 20.0);
        assert!((c.marginal(0) - 20.0 * 4.0 * 0.25 / 50.0).abs() < 1e-12);
        assert_eq!(c.concavity_violation(), None);
    }

    #[test]
    fn whole_curves_are_concave_and_bounded() {
        let (t, d) = system();
        let counts = d.request_counts();
        for p in [Policy::FixedWhole, Policy::FixedFractional, Policy::AdaptiveWhole] {
            for c in build_curves(&t, &d, p, &CurveOptions::default()).unwrap() {
                assert_eq!(c.values[0], 0.0);
                assert!(c.values.windows(2).all(|w| w[1] + 1e-12 >= w[0]));
                assert!(*c.values.last().unwrap() <= counts[c.video] as f64 + 1e-9);
                assert_eq!(c.concavity_violation(), None, "{p} video {}", c.video);
            }
        }
    }

    #[test]
    fn expected_counts_use_popularity() {
        let (t, d) = system();
        let opts = CurveOptions {
            counts: RequesterCounts::Expected,
            ..CurveOptions::default()
        };
        let c = build_curves(&t, &d, Policy::FixedWhole, &opts).unwrap();
        let full = *c[0].values.last().unwrap();
        assert!((full - 400.0 * d.popularity[0]).abs() < 1e-9);
    }
}
