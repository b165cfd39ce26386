//! Acceptance run: one line per criterion, non-zero exit if any fails.

mod common;

use std::f64::consts::E;
use std::time::Instant;

use common::{grid_optimum, random_topology, rng, served};
use rand::Rng;
use vodcache::adaptive::{exact_cover, greedy_peel, primal_dual_single, SolverConfig};
use vodcache::allocate::{build_curves, greedy_allocate, CurveOptions, Policy, Provenance, ServiceCurve};
use vodcache::analytic::{ff_curve, fw_curve, pmiss_bound, pmiss_randomized};
use vodcache::experiment::{
    af_single_video_curve, run_strategy, single_video_curves, RunOptions, Strategy, System, SystemParams,
};

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
/// Reference totals in table order FW, FF, AW, AF, Hybrid.
const REFERENCE: [(Strategy, f64); 5] = [
    (Strategy::Single(Policy::FixedWhole), 21747.0),
    (Strategy::Single(Policy::FixedFractional), 26746.0),
    (Strategy::Single(Policy::AdaptiveWhole), 30092.0),
    (Strategy::Single(Policy::AdaptiveFractional), 31413.0),
    (Strategy::Hybrid, 31008.0),
];

struct Report {
    failed: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, detail: String) {
        println!("[{}] {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(id.to_string());
        }
    }
}

struct SeedRun {
    seed: u64,
    served: [f64; 5],
    ff_expected: f64,
    ff_closed_form: f64,
    hybrid: vodcache::allocate::HybridAllocation,
    aw_curves_concave: bool,
    af_converged: bool,
    seconds_fast: f64,
    seconds_af: f64,
}

fn run_seed(seed: u64) -> SeedRun {
    let system = System::generate(SystemParams::reference(), seed).unwrap();
    let options = RunOptions::for_system(&system.params);
    let mut served = [0.0; 5];
    let mut ff_expected = 0.0;
    let mut hybrid = None;
    let mut af_converged = false;
    let (mut seconds_fast, mut seconds_af) = (0.0, 0.0);
    for (i, (strategy, _)) in REFERENCE.iter().enumerate() {
        let run = run_strategy(&system, *strategy, &options).unwrap();
        served[i] = run.served();
        match strategy {
            Strategy::Single(Policy::FixedFractional) => ff_expected = run.evaluation.expected_total,
            Strategy::Single(Policy::AdaptiveFractional) => af_converged = run.allocation.converged,
            Strategy::Hybrid => hybrid = run.hybrid,
            _ => {}
        }
        if *strategy == Strategy::Single(Policy::AdaptiveFractional) {
            seconds_af += run.elapsed.as_secs_f64();
        } else {
            seconds_fast += run.elapsed.as_secs_f64();
        }
    }
    let p = &system.demand.popularity;
    let ff_closed_form = system.params.peers as f64 * p[..400].iter().sum::<f64>();
    let aw = build_curves(&system.topology, &system.demand, Policy::AdaptiveWhole, &CurveOptions::default()).unwrap();
    let aw_curves_concave = aw.iter().all(|c| c.values.windows(3).all(|w| w[2] - w[1] <= w[1] - w[0] + 1e-9));
    SeedRun {
        seed,
        served,
        ff_expected,
        ff_closed_form,
        hybrid: hybrid.unwrap(),
        aw_curves_concave,
        af_converged,
        seconds_fast,
        seconds_af,
    }
}

fn table_reproduction(report: &mut Report, runs: &[SeedRun]) {
    let mut within = 0;
    let mut ordered = true;
    for r in runs {
        let [fw, ff, aw, af, hy] = r.served;
        let close = r.served.iter().zip(REFERENCE).all(|(s, (_, t))| (s - t).abs() <= 0.03 * t);
        let order = fw < ff && ff < aw && aw <= hy && hy <= af;
        within += close as usize;
        ordered &= order;
        println!(
            "    seed {}: fw {fw:.0} ff {ff:.0} aw {aw:.0} hybrid {hy:.0} af {af:.1} (af converged {}) \
             within 3%: {close}, ordered: {order}, {:.1}s + af {:.1}s",
            r.seed, r.af_converged, r.seconds_fast, r.seconds_af
        );
    }
    let fast_ok = runs.iter().all(|r| r.seconds_fast < 60.0 && r.seconds_af <= 600.0);
    report.line(
        "1 table reproduction",
        within >= 3 && ordered && fast_ok,
        format!("{within}/5 seeds within 3% of every reference total, ordering on every seed: {ordered}, time budgets: {fast_ok}"),
    );
}

fn ff_exactness(report: &mut Report, runs: &[SeedRun]) {
    let worst = runs
        .iter()
        .map(|r| (r.ff_expected - r.ff_closed_form).abs() / r.ff_closed_form)
        .fold(0.0, f64::max);
    report.line(
        "2a fixed fractional closed form",
        worst <= 1e-12,
        format!("max relative difference to peers * top-400 popularity mass: {worst:.2e}"),
    );
    let value = runs[0].ff_closed_form;
    let rel = (value - 26746.0).abs() / 26746.0;
    report.line(
        "2b fixed fractional vs reference 26746",
        rel <= 0.01,
        format!("closed form {value:.1}, relative difference {:.2}% (tolerance 1%)", rel * 100.0),
    );
}

fn miss_bound_grid(report: &mut Report) {
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    let mut points = 0;
    for caches in 5..=60 {
        for degree in 1..=6.min(caches) {
            for k in 0..=4 * caches {
                let c = k as f64 * 0.25;
                worst = worst.max(pmiss_randomized(caches, degree, c) - pmiss_bound(caches, degree, c));
                points += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report.line(
        "3 miss probability bound",
        worst <= 1e-12 && secs < 1.0,
        format!("{points} grid points, max excess {worst:.2e}, {secs:.3}s"),
    );
}

fn adaptive_whole_bound(report: &mut Report) -> bool {
    let start = Instant::now();
    let mut ok = true;
    let mut concave = true;
    let mut notes = Vec::new();
    for requesters in [20, 100, 2000] {
        let curve = single_video_curves(50, 4, requesters, 200, 17).unwrap();
        let slack = curve
            .iter()
            .map(|p| p.adaptive_whole_bound - p.adaptive_whole_mean)
            .fold(f64::INFINITY, f64::min);
        ok &= slack >= -1e-9;
        notes.push(format!("|U|={requesters} min(bound - mean) {slack:.3}"));
        for r in 0..200 {
            let t = vodcache::model::sample_topology(50, requesters, 4, vodcache::rng::replicate_seed(17, r)).unwrap();
            let everyone: Vec<usize> = (0..requesters).collect();
            concave &= greedy_peel(&t, &everyone, 50).gains.windows(2).all(|g| g[0] >= g[1]);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report.line(
        "4 adaptive whole upper bound",
        ok && secs < 60.0,
        format!("{}, {secs:.1}s", notes.join(", ")),
    );
    concave
}

fn unit_curve(video: usize, values: Vec<f64>) -> ServiceCurve {
    let capacity_units = values.len() - 1;
    ServiceCurve {
        video,
        policy: Policy::AdaptiveWhole,
        step: 1.0,
        values,
        provenance: Provenance::Realized,
        capacity_units,
    }
}

fn enumerate(curves: &[ServiceCurve], left: usize) -> f64 {
    let Some((first, rest)) = curves.split_first() else {
        return 0.0;
    };
    (0..=first.capacity_units.min(left))
        .map(|k| first.values[k] + enumerate(rest, left - k))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn oracles(report: &mut Report) {
    let start = Instant::now();
    let mut r = rng(2024);
    let mut alloc_bad = 0;
    let instances = 2000;
    for _ in 0..instances {
        let n = r.gen_range(1..=6);
        let curves: Vec<ServiceCurve> = (0..n)
            .map(|m| {
                let len = r.gen_range(1..=6);
                let mut gains: Vec<f64> = (0..len).map(|_| r.gen_range(0.0..10.0)).collect();
                gains.sort_by(|a, b| b.total_cmp(a));
                let mut values = vec![0.0];
                for g in gains {
                    values.push(values.last().unwrap() + g);
                }
                unit_curve(m, values)
            })
            .collect();
        let cap: usize = curves.iter().map(|c| c.capacity_units).sum();
        let budget = r.gen_range(0..=cap);
        let got = greedy_allocate(&curves, budget as f64).unwrap().objective;
        if (got - enumerate(&curves, budget)).abs() > 1e-9 {
            alloc_bad += 1;
        }
    }
    let mut peel_bad = 0;
    let mut worst_ratio = f64::INFINITY;
    for _ in 0..500 {
        let caches = r.gen_range(2..=8);
        let peers = r.gen_range(1..=12);
        let degree = r.gen_range(1..=caches.min(3));
        let t = random_topology(&mut r, caches, peers, degree);
        let everyone: Vec<usize> = (0..peers).collect();
        let copies = r.gen_range(1..=caches);
        let g = greedy_peel(&t, &everyone, copies).served() as f64;
        let x = exact_cover(&t, &everyone, copies).unwrap() as f64;
        if g > x || g < (1.0 - 1.0 / E) * x {
            peel_bad += 1;
        }
        worst_ratio = worst_ratio.min(g / x);
    }
    let secs = start.elapsed().as_secs_f64();
    report.line(
        "5 oracle equivalence",
        alloc_bad == 0 && peel_bad == 0 && secs < 60.0,
        format!(
            "greedy allocation mismatches {alloc_bad}/{instances}, peeling violations {peel_bad}/500 \
             (worst greedy/exact {worst_ratio:.3}), {secs:.1}s"
        ),
    );
}

fn primal_dual_checks(report: &mut Report) {
    let mut r = rng(99);
    let mut worst_gap = 0.0f64;
    let mut residual_bad = 0;
    let mut worst_storage = f64::NEG_INFINITY;
    let mut worst_slack = 0.0f64;
    for _ in 0..100 {
        let t = random_topology(&mut r, 3, 3, 2);
        let config = SolverConfig::defaults_for(3, 1.0);
        let out = primal_dual_single(&t, &[0, 1, 2], 1.0, &config).unwrap();
        let w: Vec<f64> = (0..3).map(|h| out.placement.get(h, 0)).collect();
        let oracle = grid_optimum(&t, 1.0, 50);
        worst_gap = worst_gap.max((served(&t, &w) - oracle).abs());
        worst_storage = worst_storage.max(out.storage_residual);
        worst_slack = worst_slack.max(out.slackness_residual);
        // ΣW ≤ S + tol_feasibility, |Σ λ (x − W)| < 10 tol_feasibility
        if out.storage_residual > config.tol_feasibility || out.slackness_residual >= 10.0 * config.tol_feasibility {
            residual_bad += 1;
        }
    }
    report.line(
        "6a primal-dual vs grid search",
        worst_gap <= 0.05 && residual_bad == 0,
        format!(
            "max gap {worst_gap:.4} (tolerance 0.05), storage residual max {worst_storage:.2e} (tolerance 1e-3), \
             slackness max {worst_slack:.2e} (tolerance 1e-2), {residual_bad}/100 above tolerance"
        ),
    );

    let reps = 5;
    let fixed = single_video_curves(50, 4, 20, reps, 7).unwrap();
    let af = af_single_video_curve(50, 4, 20, reps, 7, None).unwrap();
    let deficit = fixed
        .iter()
        .zip(&af)
        .map(|(p, &a)| p.adaptive_whole_mean.max(p.fixed_fractional) - a)
        .fold(f64::NEG_INFINITY, f64::max);
    report.line(
        "6b adaptive fractional dominance",
        deficit <= 0.05,
        format!("50 caches, 20 requesters, degree 4, {reps} graphs: max(aw, ff) - af at most {deficit:.4} (slack 0.05)"),
    );
}

fn certificate(report: &mut Report, runs: &[SeedRun]) {
    let all_hold = runs.iter().all(|r| r.hybrid.certificate.holds());
    let c = runs[0].hybrid.certificate;
    let exact = c.last_gap == 0.0 && (c.achieved - c.hull_value).abs() <= 1e-6 * c.hull_value;
    let counts: Vec<usize> = runs
        .iter()
        .map(|r| r.hybrid.policies().iter().filter(|&&p| p == Policy::FixedFractional).count())
        .collect();
    let deepest: Vec<usize> = runs
        .iter()
        .map(|r| {
            r.hybrid
                .policies()
                .iter()
                .rposition(|&p| p == Policy::FixedFractional)
                .map_or(0, |i| i + 1)
        })
        .collect();
    // the selected videos sit in the head of the catalog: top 10%
    let band = counts.iter().all(|&n| (50..=150).contains(&n)) && deepest.iter().all(|&d| d <= 200);
    report.line(
        "7 hybrid certificate",
        all_hold && exact && band,
        format!(
            "holds on all seeds: {all_hold}; seed 1 gap {} achieved {:.3} hull {:.3}; \
             fixed fractional videos per seed {counts:?}, deepest rank {deepest:?}",
            c.last_gap, c.achieved, c.hull_value
        ),
    );
}

fn curve_shapes(report: &mut Report, runs: &[SeedRun], peel_concave: bool) {
    let (caches, degree, n) = (50, 4, 20.0);
    let c99 = (0..=caches).find(|&c| fw_curve(caches, degree, n, c as f64) >= 0.99 * n).unwrap();
    let frac = c99 as f64 / caches as f64;
    let fw_ok = (frac - 0.75).abs() <= 0.1;
    let sat = caches as f64 / degree as f64;
    let ff_ok = ff_curve(caches, degree, n, sat) == n && ff_curve(caches, degree, n, sat - 0.25) < n;
    let aw_ok = peel_concave && runs.iter().all(|r| r.aw_curves_concave);
    report.line(
        "8 curve shapes",
        fw_ok && ff_ok && aw_ok,
        format!(
            "fixed whole reaches 99% at {c99} copies ({frac:.2} of caches, target 0.75 +- 0.1); \
             fixed fractional saturates at exactly {sat}: {ff_ok}; adaptive whole gains non-increasing: {aw_ok}"
        ),
    );
}

fn main() {
    let mut report = Report { failed: Vec::new() };
    let start = Instant::now();
    let runs: Vec<SeedRun> = SEEDS.iter().map(|&s| run_seed(s)).collect();
    table_reproduction(&mut report, &runs);
    ff_exactness(&mut report, &runs);
    miss_bound_grid(&mut report);
    let peel_concave = adaptive_whole_bound(&mut report);
    oracles(&mut report);
    primal_dual_checks(&mut report);
    certificate(&mut report, &runs);
    curve_shapes(&mut report, &runs, peel_concave);
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if !report.failed.is_empty() {
        println!("failed: {}", report.failed.join(", "));
        std::process::exit(1);
    }
}
