use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Duration;

use vodcache::adaptive::SolverConfig;
use vodcache::allocate::{evaluate_placement, Policy};
use vodcache::analytic::{aw_upper_bound, ff_curve, fw_curve, fw_lower_bound};
use vodcache::experiment::{
    af_single_video_curve, run_strategy, single_video_curves, PolicyRun, RunOptions, Strategy, System, SystemParams,
};
use vodcache::io::{self, Header, ReportRow};
use vodcache::model::{Demand, Topology};
use vodcache::{Error, Result};

use crate::args::{CurveArgs, CurvePolicy, EvaluateArgs, GenArgs, PlaceArgs, PlacePolicy, SolverArgs};
use crate::output::{resolve_seed, system_header, write_file};
use crate::Status;

/// Largest video for which an adaptive fractional sweep runs without `--allow-slow`.
pub const AF_REQUESTER_GUARD: usize = 500;

pub fn gen(args: &GenArgs) -> Result<Status> {
    let params = args.system.params()?;
    let seed = resolve_seed(args.seed);
    let system = System::generate(params, seed)?;
    write_file(&args.out.join("topology.tsv"), |w| io::write_topology(w, &system.topology))?;
    write_file(&args.out.join("demand.tsv"), |w| io::write_demand(w, &system.demand))?;
    Ok(Status::Done)
}

fn read_topology(path: &Path) -> Result<Topology> {
    io::read_topology(BufReader::new(File::open(path)?))
}

fn read_demand(path: &Path) -> Result<Demand> {
    io::read_demand(BufReader::new(File::open(path)?))
}

/// Solver configuration for single-video sweeps: `None` keeps the per-budget
/// defaults unless something was overridden.
pub fn sweep_solver(solver: &SolverArgs, requesters: usize) -> Result<Option<SolverConfig>> {
    if !solver.any_set() {
        return Ok(None);
    }
    solver.apply(SolverConfig::defaults_for(requesters, 1.0)).map(Some)
}

pub fn curve(args: &CurveArgs) -> Result<Status> {
    let (h, l, n) = (args.caches, args.degree, args.requesters);
    if h == 0 || l == 0 || l > h || n == 0 {
        return Err(Error::Parameter(format!(
            "need 1 <= degree <= caches and at least one requester (got caches={h} degree={l} requesters={n})"
        )));
    }
    if let Some(c) = args.copies {
        if !(0.0..=h as f64).contains(&c) {
            return Err(Error::Parameter(format!("--copies {c} outside 0..={h}")));
        }
    }
    let adaptive = matches!(args.policy, CurvePolicy::Aw | CurvePolicy::Af);
    if args.policy == CurvePolicy::Af && n > AF_REQUESTER_GUARD && !args.allow_slow {
        return Err(Error::Parameter(format!(
            "adaptive fractional sweeps over {n} requesters are slow; pass --allow-slow"
        )));
    }
    let seed = if adaptive { resolve_seed(args.seed) } else { args.seed.unwrap_or(0) };
    let nf = n as f64;

    let (mut points, bound): (Vec<(f64, f64)>, Option<Vec<(f64, f64)>>) = match args.policy {
        CurvePolicy::Fw => {
            let grid = integer_or_single(h, args.copies);
            let curve = grid.iter().map(|&c| (c, fw_curve(h, l, nf, c))).collect();
            let bound = grid.iter().map(|&c| (c, fw_lower_bound(h, l, nf, c))).collect();
            (curve, Some(bound))
        }
        CurvePolicy::Ff => {
            let grid = match args.copies {
                Some(c) => vec![c],
                None => (0..=h * l).map(|k| k as f64 / l as f64).collect(),
            };
            (grid.iter().map(|&c| (c, ff_curve(h, l, nf, c))).collect(), None)
        }
        CurvePolicy::Aw => {
            let pts = single_video_curves(h, l, n, args.mc_seeds, seed)?;
            for p in &pts {
                if p.adaptive_whole_mean > p.adaptive_whole_bound + 1e-9 {
                    return Err(Error::Contract {
                        video: 0,
                        reason: format!(
                            "greedy mean {} exceeds the upper bound {} at {} copies",
                            p.adaptive_whole_mean, p.adaptive_whole_bound, p.copies
                        ),
                    });
                }
            }
            let curve = pts.iter().map(|p| (p.copies as f64, p.adaptive_whole_mean)).collect();
            let bound = (0..=h).map(|c| (c as f64, aw_upper_bound(h, l, n, c))).collect();
            (curve, Some(bound))
        }
        CurvePolicy::Af => {
            let values = af_single_video_curve(h, l, n, args.af_seeds, seed, sweep_solver(&args.solver, n)?)?;
            (values.iter().enumerate().map(|(c, &v)| (c as f64, v)).collect(), None)
        }
    };
    let mut bound = bound;
    if let Some(c) = args.copies {
        if adaptive {
            if c.fract() != 0.0 {
                return Err(Error::Parameter("adaptive curves are sampled at whole copies".into()));
            }
            points.retain(|p| p.0 == c);
            if let Some(b) = bound.as_mut() {
                b.retain(|p| p.0 == c);
            }
        }
    }

    let policy_name = match args.policy {
        CurvePolicy::Fw => Policy::FixedWhole,
        CurvePolicy::Ff => Policy::FixedFractional,
        CurvePolicy::Aw => Policy::AdaptiveWhole,
        CurvePolicy::Af => Policy::AdaptiveFractional,
    };
    let mut header = Header::new("")
        .with("policy", policy_name)
        .with("caches", h)
        .with("degree", l)
        .with("requesters", n);
    if adaptive {
        header.set("seed", seed);
        let reps = if args.policy == CurvePolicy::Af { args.af_seeds } else { args.mc_seeds };
        header.set("mc_seeds", reps);
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| format!("curve_{}.csv", policy_name.short()).into());
    write_file(&out, |w| io::write_curve(w, &header.clone().with("series", "value"), &points))?;
    if args.bounds {
        let Some(bound) = bound else {
            return Err(Error::Parameter(format!("{policy_name} curves have no analytic bound")));
        };
        let bound_path = if out == Path::new("-") {
            out.clone()
        } else {
            out.with_extension("bound.csv")
        };
        let series = if args.policy == CurvePolicy::Fw { "lower_bound" } else { "upper_bound" };
        write_file(&bound_path, |w| io::write_curve(w, &header.with("series", series), &bound))?;
    }
    Ok(Status::Done)
}

fn integer_or_single(h: usize, copies: Option<f64>) -> Vec<f64> {
    match copies {
        Some(c) => vec![c],
        None => (0..=h).map(|c| c as f64).collect(),
    }
}

pub fn run_options(params: &SystemParams, solver: &SolverArgs, balance: bool) -> Result<RunOptions> {
    let mut options = RunOptions::for_system(params);
    options.balance = balance;
    options.solver = solver.apply(options.solver)?;
    if !(solver.time_limit > 0.0) {
        return Err(Error::Parameter("--solver.time-limit must be positive".into()));
    }
    options.time_budget = Some(Duration::from_secs_f64(solver.time_limit));
    Ok(options)
}

fn load_system(args: &PlaceArgs) -> Result<System> {
    match (&args.topology, &args.demand) {
        (Some(t), Some(d)) => {
            let topology = read_topology(t)?;
            let demand = read_demand(d)?;
            demand.check_against(&topology)?;
            let mut system_args = args.system.clone();
            system_args.caches = topology.num_caches;
            system_args.peers = topology.num_peers;
            system_args.degree = topology.degree;
            system_args.videos = demand.num_videos;
            system_args.zipf = demand.zipf_exponent;
            let params = system_args.params()?;
            let seed = topology.seed;
            println!("seed={seed}");
            Ok(System {
                params,
                topology,
                demand,
                seed,
            })
        }
        _ => {
            let params = args.system.params()?;
            System::generate(params, resolve_seed(args.seed))
        }
    }
}

pub fn report_rows(run: &PolicyRun) -> Vec<ReportRow> {
    let a = &run.allocation;
    (0..a.copies.len())
        .map(|m| ReportRow {
            video: m,
            copies: a.copies[m],
            policy: a.policy.as_ref().map(|p| p[m]),
            served_estimate: a.served_estimate[m],
        })
        .collect()
}

pub fn place(args: &PlaceArgs) -> Result<Status> {
    let strategy = match (args.policy, args.hybrid_threshold) {
        (PlacePolicy::Hybrid, Some(n)) => Strategy::HybridThreshold(n),
        (PlacePolicy::Hybrid, None) => Strategy::Hybrid,
        (_, Some(_)) => return Err(Error::Parameter("--hybrid-threshold needs --policy hybrid".into())),
        (PlacePolicy::Fw, None) => Strategy::Single(Policy::FixedWhole),
        (PlacePolicy::Ff, None) => Strategy::Single(Policy::FixedFractional),
        (PlacePolicy::Aw, None) => Strategy::Single(Policy::AdaptiveWhole),
        (PlacePolicy::Af, None) => Strategy::Single(Policy::AdaptiveFractional),
    };
    let system = load_system(args)?;
    let options = run_options(&system.params, &args.solver, !args.no_balance)?;
    let run = run_strategy(&system, strategy, &options)?;
    let header = system_header("", &system.params, system.seed).with("policy", strategy);

    let placement = run.allocation.placement.as_ref().expect("run_strategy always places");
    write_file(&args.out.join("placement.csv"), |w| io::write_placement(w, placement, &header))?;
    write_file(&args.out.join("report.csv"), |w| io::write_report(w, &header, &report_rows(&run)))?;
    if !run.allocation.trace.is_empty() {
        write_file(&args.out.join("trace.csv"), |w| io::write_trace(w, &header, &run.allocation.trace))?;
    }

    let loads = placement.cache_loads();
    let max_load = loads.iter().copied().fold(0.0, f64::max);
    println!("policy={strategy}");
    println!("copies={}", run.allocation.total_copies);
    println!("served={}", run.evaluation.total);
    println!("served_expected={}", run.evaluation.expected_total);
    println!("estimate={}", run.allocation.objective);
    println!("max_cache_load={max_load}");
    if let Some(h) = &run.hybrid {
        let ff = h.policies().iter().filter(|&&p| p == Policy::FixedFractional).count();
        println!("fixed_fractional_videos={ff}");
        println!("hull_value={}", h.certificate.hull_value);
        println!("hull_gap={}", h.certificate.last_gap);
        println!("certificate_holds={}", h.certificate.holds());
    }
    let mut converged = run.allocation.converged;
    if args.with_af && strategy != Strategy::Single(Policy::AdaptiveFractional) {
        let af = run_strategy(&system, Strategy::Single(Policy::AdaptiveFractional), &options)?;
        converged &= af.allocation.converged;
        println!("adaptive_fractional={}", af.served());
        println!("fraction_of_af={:.4}", run.served() / af.served());
    }
    println!("elapsed_s={:.3}", run.elapsed.as_secs_f64());
    if strategy == Strategy::Single(Policy::AdaptiveFractional) || args.with_af {
        println!("converged={converged}");
    }
    Ok(if converged { Status::Done } else { Status::NotConverged })
}

pub fn evaluate(args: &EvaluateArgs) -> Result<Status> {
    let topology = read_topology(&args.topology)?;
    let demand = read_demand(&args.demand)?;
    let (_, placement) = io::read_placement(BufReader::new(File::open(&args.placement)?))?;
    let eval = evaluate_placement(&topology, &demand, &placement)?;
    println!("served={}", eval.total);
    println!("served_expected={}", eval.expected_total);
    println!("server_load={}", eval.server_load(topology.num_peers));
    if let Some(out) = &args.out {
        let header = Header::new("evaluation")
            .with("caches", topology.num_caches)
            .with("peers", topology.num_peers)
            .with("videos", demand.num_videos)
            .with("seed", topology.seed);
        let rows: Vec<Vec<String>> = eval
            .per_video
            .iter()
            .enumerate()
            .map(|(m, v)| vec![m.to_string(), v.to_string()])
            .collect();
        write_file(out, |w| io::write_table(w, &header, &["video_id", "served"], &rows))?;
    }
    Ok(Status::Done)
}
