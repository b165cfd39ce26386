use std::collections::HashMap;

use proptest::prelude::*;
use vodcache::model::{assign_requests, sample_topology, zipf_popularity, Demand, Placement, StorageMode, Topology};
use vodcache::Error;

#[test]
fn cache_pairs_are_uniform() {
    let mut freq: HashMap<Vec<usize>, usize> = HashMap::new();
    let samples = 10_000;
    for seed in 0..samples {
        let t = sample_topology(5, 1, 2, seed).unwrap();
        *freq.entry(t.adjacency[0].clone()).or_default() += 1;
    }
    assert_eq!(freq.len(), 10);
    for (pair, n) in freq {
        let f = n as f64 / samples as f64;
        assert!((f - 0.1).abs() <= 0.01, "{pair:?} drawn with frequency {f}");
    }
}

#[test]
fn cache_degrees_follow_binomial_spread() {
    let t = sample_topology(50, 100_000, 4, 1).unwrap();
    let degrees = t.cache_degrees();
    let mean = degrees.iter().sum::<usize>() as f64 / 50.0;
    assert_eq!(mean, 8000.0);
    let var = degrees.iter().map(|&d| (d as f64 - mean).powi(2)).sum::<f64>() / 49.0;
    let expected = (100_000.0f64 * 0.08 * 0.92).sqrt();
    assert!((var.sqrt() / expected - 1.0).abs() <= 0.05, "sd {} vs {expected}", var.sqrt());
}

#[test]
fn request_counts_concentrate() {
    let d = Demand::generate(2000, 0.8, 40_000, 1).unwrap();
    let counts = d.request_counts();
    assert_eq!(counts.iter().sum::<usize>(), 40_000);
    let within = counts
        .iter()
        .zip(&d.popularity)
        .filter(|(&c, &p)| {
            let mean = 40_000.0 * p;
            (c as f64 - mean).abs() <= 4.0 * (mean * (1.0 - p)).sqrt()
        })
        .count();
    assert!(within as f64 >= 0.99 * 2000.0, "{within} videos within 4 sd");
    let p1 = d.popularity[0];
    let sd = (40_000.0 * p1 * (1.0 - p1)).sqrt();
    assert!((counts[0] as f64 - 40_000.0 * p1).abs() <= 4.0 * sd);
}

#[test]
fn degenerate_popularity_and_forced_topology() {
    assert_eq!(assign_requests(&[1.0], 5, 3).unwrap(), vec![0; 5]);
    let t = sample_topology(1, 3, 1, 42).unwrap();
    assert!(t.adjacency.iter().all(|row| row == &[0]));
    assert_eq!(zipf_popularity(1, 0.8).unwrap(), vec![1.0]);
}

#[test]
fn zipf_reference_values() {
    let p = zipf_popularity(2, 0.8).unwrap();
    assert!((p[0] - 0.635184).abs() < 1e-6);
    assert!((p[1] - 0.364816).abs() < 1e-6);
    let p = zipf_popularity(2000, 0.8).unwrap();
    assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    assert!(p.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn parameter_errors() {
    assert!(matches!(sample_topology(50, 10, 60, 1), Err(Error::Parameter(_))));
    assert!(matches!(sample_topology(0, 10, 1, 1), Err(Error::Parameter(_))));
    assert!(zipf_popularity(0, 0.8).is_err());
    assert!(zipf_popularity(3, -1.0).is_err());
    assert!(Topology::from_adjacency(3, vec![vec![0, 0]], 0).is_err());
    assert!(Topology::from_adjacency(3, vec![vec![0, 3]], 0).is_err());
    assert!(Demand::from_requests(2, 0.8, vec![0, 2], 0).is_err());
}

#[test]
fn whole_placements_reject_fractions() {
    let mut p = Placement::empty(2, 2, StorageMode::Whole);
    assert!(p.set(0, 0, 0.5).is_err());
    p.set(0, 0, 1.0).unwrap();
    let mut f = Placement::empty(2, 2, StorageMode::Fractional);
    assert!(f.set(0, 0, 1.5).is_err());
    assert!(f.set(0, 0, -0.1).is_err());
}

proptest! {
    #[test]
    fn topologies_are_valid_and_reproducible(caches in 1usize..40, peers in 1usize..60, degree_frac in 0.0f64..1.0, seed: u64) {
        let degree = 1 + ((caches - 1) as f64 * degree_frac) as usize;
        let t = sample_topology(caches, peers, degree, seed).unwrap();
        prop_assert_eq!(t.adjacency.len(), peers);
        for row in &t.adjacency {
            prop_assert_eq!(row.len(), degree);
            prop_assert!(row.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(row.iter().all(|&h| h < caches));
        }
        prop_assert_eq!(sample_topology(caches, peers, degree, seed).unwrap(), t);
    }

    #[test]
    fn demand_partitions_peers(videos in 1usize..50, exponent in 0.0f64..2.0, peers in 1usize..300, seed: u64) {
        let d = Demand::generate(videos, exponent, peers, seed).unwrap();
        prop_assert_eq!(d.request_counts().iter().sum::<usize>(), peers);
        prop_assert!((d.popularity.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(d.popularity.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(Demand::generate(videos, exponent, peers, seed).unwrap(), d);
    }
}
