use crate::error::{Error, Result};
use crate::model::{Demand, Placement, Topology};

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Rate served to the realized requests: `Σ_u min(Σ_{h ∈ N_u} W[h][m(u)], 1)`.
    pub total: f64,
    /// Realized served rate per video.
    pub per_video: Vec<f64>,
    /// Expected served rate on this graph when each peer's request is redrawn
    /// from the popularity law: `Σ_m p(m) Σ_u min(Σ_{h ∈ N_u} W[h][m], 1)`.
    pub expected_total: f64,
}

impl Evaluation {
    /// Requests the central server still has to carry.
    pub fn server_load(&self, num_peers: usize) -> f64 {
        num_peers as f64 - self.total
    }
}

/// Evaluates a placement on a realized graph with optimal routing and no
/// upload limits. For whole placements this is plain coverage counting.
pub fn evaluate_placement(topology: &Topology, demand: &Demand, placement: &Placement) -> Result<Evaluation> {
    demand.check_against(topology)?;
    if placement.num_caches != topology.num_caches || placement.num_videos != demand.num_videos {
        return Err(Error::Dimension(format!(
            "placement is {}x{}, system has {} caches and {} videos",
            placement.num_caches, placement.num_videos, topology.num_caches, demand.num_videos
        )));
    }
    let mut per_video = vec![0.0; demand.num_videos];
    for (row, &m) in topology.adjacency.iter().zip(&demand.requests) {
        per_video[m] += row.iter().map(|&h| placement.get(h, m)).sum::<f64>().min(1.0);
    }
    let total = per_video.iter().sum();

    let mut column = vec![0.0; topology.num_caches];
    let mut expected_total = 0.0;
    for m in 0..demand.num_videos {
        let mut any = false;
        for (h, c) in column.iter_mut().enumerate() {
            *c = placement.get(h, m);
            any |= *c > 0.0;
        }
        if !any {
            continue;
        }
        let served: f64 = topology
            .adjacency
            .iter()
            .map(|row| row.iter().map(|&h| column[h]).sum::<f64>().min(1.0))
            .sum();
        expected_total += demand.popularity[m] * served;
    }
    Ok(Evaluation {
        total,
        per_video,
        expected_total,
    })
}
