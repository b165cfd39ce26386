mod common;

use common::rng;
use rand::Rng;
use vodcache::allocate::{
    adaptive_whole_allocate, analytic_curve, build_curves, concave_hull, evaluate_placement, fixed_fractional_allocate,
    fixed_whole_allocate, greedy_allocate, hybrid_allocate, hybrid_placement, hybrid_threshold_allocate, CurveOptions,
    HybridCurve, Policy, Provenance, ServiceCurve,
};
use vodcache::model::{sample_topology, zipf_popularity, Demand, Placement, StorageMode};
use vodcache::Error;

fn curve(video: usize, values: Vec<f64>) -> ServiceCurve {
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

fn random_concave(r: &mut impl Rng, video: usize) -> ServiceCurve {
    let len = r.gen_range(1..=6);
    let mut gains: Vec<f64> = (0..len).map(|_| r.gen_range(0..10) as f64).collect();
    gains.sort_by(|a, b| b.total_cmp(a));
    let mut values = vec![0.0];
    for g in gains {
        values.push(values.last().unwrap() + g);
    }
    curve(video, values)
}

fn best_by_enumeration(curves: &[ServiceCurve], budget: usize) -> f64 {
    fn rec(curves: &[ServiceCurve], left: usize) -> f64 {
        let Some((first, rest)) = curves.split_first() else {
            return 0.0;
        };
        (0..=first.capacity_units.min(left))
            .map(|k| first.values[k] + rec(rest, left - k))
            .fold(f64::NEG_INFINITY, f64::max)
    }
    rec(curves, budget)
}

#[test]
fn greedy_matches_enumeration() {
    let mut r = rng(3);
    for _ in 0..400 {
        let n = r.gen_range(1..=6);
        let curves: Vec<ServiceCurve> = (0..n).map(|m| random_concave(&mut r, m)).collect();
        let cap: usize = curves.iter().map(|c| c.capacity_units).sum();
        let budget = r.gen_range(0..=cap.min(12));
        let result = greedy_allocate(&curves, budget as f64).unwrap();
        assert_eq!(result.total_copies, budget as f64);
        let best = best_by_enumeration(&curves, budget);
        assert!((result.objective - best).abs() < 1e-9, "{} vs {best}", result.objective);
    }
}

#[test]
fn greedy_simple_cases() {
    let single = greedy_allocate(&[curve(0, vec![0.0, 3.0, 5.0, 6.0])], 2.0).unwrap();
    assert_eq!(single.copies, vec![2.0]);
    let twins = vec![curve(0, vec![0.0, 3.0, 5.0, 6.0]), curve(1, vec![0.0, 3.0, 5.0, 6.0])];
    assert_eq!(greedy_allocate(&twins, 4.0).unwrap().copies, vec![2.0, 2.0]);
    assert!(matches!(greedy_allocate(&twins, 7.0), Err(Error::Infeasible(_))));
    let bumpy = vec![curve(0, vec![0.0, 1.0, 2.0]), curve(1, vec![0.0, 1.0, 5.0])];
    match greedy_allocate(&bumpy, 2.0) {
        Err(Error::Contract { video, .. }) => assert_eq!(video, 1),
        other => panic!("expected a contract error, got {other:?}"),
    }
}

#[test]
fn fixed_fractional_fills_top_videos() {
    let d = Demand::generate(2000, 0.8, 40_000, 1).unwrap();
    let r = fixed_fractional_allocate(50, 4, &d, 5000.0).unwrap();
    for (m, &c) in r.copies.iter().enumerate() {
        assert_eq!(c, if m < 400 { 12.5 } else { 0.0 }, "video {m}");
    }
    let p = r.placement.as_ref().unwrap();
    assert!((p.total() - 5000.0).abs() < 1e-9);
    assert!(p.cache_loads().iter().all(|&l| (l - 100.0).abs() < 1e-9));
}

#[test]
fn fixed_whole_uniform_popularity() {
    let requests: Vec<usize> = (0..200).map(|u| u % 10).collect();
    let d = Demand::from_requests(10, 0.0, requests, 0).unwrap();
    let r = fixed_whole_allocate(20, 3, &d, 60.0, 4).unwrap();
    assert_eq!(r.total_copies, 60.0);
    assert!(r.copies.iter().all(|&c| c == 6.0), "{:?}", r.copies);
    let p = r.placement.as_ref().unwrap();
    assert_eq!(p.copies(), r.copies);
}

#[test]
fn hull_examples_and_properties() {
    let h = concave_hull(&[0.0, 0.0, 10.0]);
    assert_eq!(h.values, vec![0.0, 5.0, 10.0]);
    assert_eq!((h.gap, h.gap_at), (5.0, 1));
    let concave = [0.0, 4.0, 7.0, 9.0, 10.0];
    let h = concave_hull(&concave);
    assert_eq!(h.values, concave.to_vec());
    assert_eq!(h.gap, 0.0);

    let mut r = rng(8);
    for _ in 0..300 {
        let len = r.gen_range(2..12);
        let mut values = vec![0.0];
        for _ in 1..len {
            values.push(values.last().unwrap() + r.gen_range(0.0..5.0));
        }
        let h = concave_hull(&values);
        assert_eq!(h.values[0], values[0]);
        assert_eq!(h.values[len - 1], values[len - 1]);
        assert!(h.values.iter().zip(&values).all(|(a, b)| a >= &(b - 1e-9)));
        for k in 1..len - 1 {
            assert!(h.marginal(k) <= h.marginal(k - 1) + 1e-9);
        }
    }
}

fn moderate_system(seed: u64) -> (vodcache::model::Topology, Demand) {
    let t = sample_topology(20, 3000, 3, seed).unwrap();
    let d = Demand::generate(150, 0.8, 3000, seed).unwrap();
    (t, d)
}

#[test]
fn hybrid_certificate_and_probes() {
    let (t, d) = moderate_system(2);
    let opts = CurveOptions::default();
    let ff = build_curves(&t, &d, Policy::FixedFractional, &opts).unwrap();
    let aw = build_curves(&t, &d, Policy::AdaptiveWhole, &opts).unwrap();
    let budget = 200.0;
    let h = hybrid_allocate(&ff, &aw, budget).unwrap();
    assert!(h.certificate.holds());
    assert_eq!(h.allocation.total_copies, budget);
    let v_bar = h.certificate.hull_value;

    let mut r = rng(1);
    for _ in 0..1000 {
        let mut copies = vec![0usize; ff.len()];
        let mut left = budget as usize;
        while left > 0 {
            let m = r.gen_range(0..copies.len());
            if copies[m] < t.num_caches {
                copies[m] += 1;
            }
            left -= 1;
        }
        let value: f64 = copies
            .iter()
            .enumerate()
            .map(|(m, &c)| if r.gen_bool(0.5) { ff[m].value(c) } else { aw[m].value(c) })
            .sum();
        assert!(v_bar >= value - 1e-9, "probe {value} beats the hull optimum {v_bar}");
    }

    let placement = hybrid_placement(&t, &d, &h.allocation, true).unwrap();
    assert!((placement.total() - budget).abs() < 1e-9);
    let max_load = |p: &Placement| p.cache_loads().into_iter().fold(0.0, f64::max);
    let unbalanced = hybrid_placement(&t, &d, &h.allocation, false).unwrap();
    assert!(max_load(&placement) <= max_load(&unbalanced) + 1e-9);
}

#[test]
fn hybrid_reduces_to_adaptive_whole_when_it_dominates() {
    // fixed fractional that never beats adaptive whole
    let aw: Vec<ServiceCurve> = [vec![0.0, 6.0, 9.0, 10.0], vec![0.0, 4.0, 6.0, 7.0], vec![0.0, 2.0, 3.0, 3.5]]
        .into_iter()
        .enumerate()
        .map(|(m, v)| curve(m, v))
        .collect();
    let ff: Vec<ServiceCurve> = aw
        .iter()
        .map(|c| {
            let mut f = c.clone();
            f.policy = Policy::FixedFractional;
            f.values = c.values.iter().map(|v| v * 0.5).collect();
            f
        })
        .collect();
    for budget in 0..=9 {
        let h = hybrid_allocate(&ff, &aw, budget as f64).unwrap();
        let g = greedy_allocate(&aw, budget as f64).unwrap();
        assert!((h.allocation.objective - g.objective).abs() < 1e-9);
        assert_eq!(h.certificate.last_gap, 0.0);
        assert!(h.policies().iter().all(|&p| p == Policy::AdaptiveWhole));
    }
}

#[test]
fn crossover_lies_on_hull_bridge() {
    let t = sample_topology(50, 200, 4, 1).unwrap();
    let d = Demand::from_requests(1, 0.0, vec![0; 200], 1).unwrap();
    let aw = build_curves(&t, &d, Policy::AdaptiveWhole, &CurveOptions::default()).unwrap();
    let ff = analytic_curve(0, Policy::FixedFractional, 50, 4, 200.0, 1.0).unwrap();
    let c = HybridCurve::new(0, &ff.values, &aw[0].values);
    let crossover = c.crossover.expect("curves cross for a 200-requester video");
    let (a, b) = c.linear_interval.expect("hull bridges the crossover");
    assert!(a < crossover && crossover <= b, "{a} {crossover} {b}");
    assert!(c.gap() > 0.0);
}

#[test]
fn allocators_spend_budget_exactly() {
    let (t, d) = moderate_system(4);
    let budget = 300.0;
    let fw = fixed_whole_allocate(20, 3, &d, budget, 4).unwrap();
    let ff = fixed_fractional_allocate(20, 3, &d, budget).unwrap();
    let aw = adaptive_whole_allocate(&t, &d, budget, true).unwrap();
    let opts = CurveOptions::default();
    let ffc = build_curves(&t, &d, Policy::FixedFractional, &opts).unwrap();
    let awc = build_curves(&t, &d, Policy::AdaptiveWhole, &opts).unwrap();
    let th = hybrid_threshold_allocate(&ffc, &awc, 10, budget).unwrap();
    for (name, r) in [("fw", &fw), ("ff", &ff), ("aw", &aw), ("threshold", &th)] {
        assert!((r.total_copies - budget).abs() < 1e-9, "{name}");
        if let Some(p) = &r.placement {
            assert!((p.total() - budget).abs() < 1e-9, "{name}");
            assert_eq!(p.copies().len(), d.num_videos);
        }
    }
    let pol = th.policy.unwrap();
    assert!(pol[..10].iter().all(|&p| p == Policy::FixedFractional));
    assert!(pol[10..].iter().all(|&p| p == Policy::AdaptiveWhole));

    let eval_aw = evaluate_placement(&t, &d, aw.placement.as_ref().unwrap()).unwrap();
    let eval_fw = evaluate_placement(&t, &d, fw.placement.as_ref().unwrap()).unwrap();
    assert!(eval_aw.total >= eval_fw.total);
}

#[test]
fn evaluation_extremes() {
    let (t, d) = moderate_system(5);
    let empty = Placement::empty(20, d.num_videos, StorageMode::Whole);
    let e = evaluate_placement(&t, &d, &empty).unwrap();
    assert_eq!(e.total, 0.0);
    assert_eq!(e.server_load(3000), 3000.0);
    let mut full = Placement::empty(20, d.num_videos, StorageMode::Whole);
    for h in 0..20 {
        for m in 0..d.num_videos {
            full.set(h, m, 1.0).unwrap();
        }
    }
    let e = evaluate_placement(&t, &d, &full).unwrap();
    assert_eq!(e.total, 3000.0);
    assert!((e.expected_total - 3000.0).abs() < 1e-6);
    let wrong = Placement::empty(19, d.num_videos, StorageMode::Whole);
    assert!(matches!(evaluate_placement(&t, &d, &wrong), Err(Error::Dimension(_))));
}

#[test]
fn zero_requesters_give_flat_curves() {
    let t = sample_topology(10, 5, 2, 1).unwrap();
    let d = Demand::from_requests(3, 0.8, vec![0; 5], 1).unwrap();
    for policy in [Policy::FixedWhole, Policy::FixedFractional, Policy::AdaptiveWhole] {
        let curves = build_curves(&t, &d, policy, &CurveOptions::default()).unwrap();
        assert!(curves[1].values.iter().all(|&v| v == 0.0), "{policy}");
        assert!(curves[2].values.iter().all(|&v| v == 0.0), "{policy}");
    }
    let _ = zipf_popularity(3, 0.8).unwrap();
}

#[test]
fn balanced_whole_placements_on_reference_system() {
    use vodcache::experiment::{run_strategy, RunOptions, Strategy, System, SystemParams};
    let system = System::generate(SystemParams::reference(), 1).unwrap();
    let options = RunOptions::for_system(&system.params);
    let k = system.params.per_cache();
    for strategy in [Strategy::Single(Policy::AdaptiveWhole), Strategy::Hybrid] {
        let run = run_strategy(&system, strategy, &options).unwrap();
        let loads = run.allocation.placement.as_ref().unwrap().cache_loads();
        let max = loads.iter().copied().fold(0.0, f64::max);
        assert!(max <= k + 2.0 + 1e-9, "{strategy}: max load {max}");
    }
}
