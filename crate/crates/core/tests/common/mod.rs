#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vodcache::model::Topology;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random topology with explicit small sizes, drawn from an independent test RNG.
pub fn random_topology(rng: &mut ChaCha8Rng, caches: usize, peers: usize, degree: usize) -> Topology {
    let rows = (0..peers)
        .map(|_| rand::seq::index::sample(rng, caches, degree).into_vec())
        .collect();
    Topology::from_adjacency(caches, rows, rng.gen()).unwrap()
}

/// Served rate of a single-video fractional placement `w` (one entry per cache).
pub fn served(topology: &Topology, w: &[f64]) -> f64 {
    topology
        .adjacency
        .iter()
        .map(|row| row.iter().map(|&h| w[h]).sum::<f64>().min(1.0))
        .sum()
}

/// Best single-video objective over `w` on a mesh of `1/steps` with `Σ w ≤ budget`.
pub fn grid_optimum(topology: &Topology, budget: f64, steps: usize) -> f64 {
    let mut w = vec![0.0; topology.num_caches];
    let mut best = 0.0f64;
    fn rec(topology: &Topology, w: &mut Vec<f64>, i: usize, left: f64, steps: usize, best: &mut f64) {
        if i == w.len() {
            *best = best.max(served(topology, w));
            return;
        }
        for k in 0..=steps {
            let v = k as f64 / steps as f64;
            if v > left + 1e-12 {
                break;
            }
            w[i] = v;
            rec(topology, w, i + 1, left - v, steps, best);
        }
        w[i] = 0.0;
    }
    rec(topology, &mut w, 0, budget, steps, &mut best);
    best
}
