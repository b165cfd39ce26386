//! System model: caches, peers, videos, and who is connected to / asking for what.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::error::{param, Error, Result};
use crate::rng::{self, Stream};

/// Bipartite cache–peer connection graph. Peer `u` is connected to the
/// `degree` distinct caches in `adjacency[u]` (sorted ascending).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub num_caches: usize,
    pub num_peers: usize,
    pub degree: usize,
    pub adjacency: Vec<Vec<usize>>,
    pub seed: u64,
}

impl Topology {
    /// Builds a topology from explicit adjacency lists, validating every row.
    pub fn from_adjacency(num_caches: usize, adjacency: Vec<Vec<usize>>, seed: u64) -> Result<Self> {
        if num_caches == 0 || adjacency.is_empty() {
            return param("topology needs at least one cache and one peer");
        }
        let degree = adjacency[0].len();
        if degree == 0 || degree > num_caches {
            return param(format!("degree {degree} must be in 1..={num_caches}"));
        }
        let mut rows = adjacency;
        for (u, row) in rows.iter_mut().enumerate() {
            if row.len() != degree {
                return param(format!("peer {u} has {} connections, expected {degree}", row.len()));
            }
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return param(format!("peer {u} lists a cache twice"));
            }
            if row.last().is_some_and(|&h| h >= num_caches) {
                return param(format!("peer {u} references a cache outside 0..{num_caches}"));
            }
        }
        Ok(Self {
            num_caches,
            num_peers: rows.len(),
            degree,
            adjacency: rows,
            seed,
        })
    }

    pub fn caches_of(&self, peer: usize) -> &[usize] {
        &self.adjacency[peer]
    }

    /// Number of peers connected to each cache.
    pub fn cache_degrees(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_caches];
        for row in &self.adjacency {
            for &h in row {
                counts[h] += 1;
            }
        }
        counts
    }
}

/// Samples a topology in which every peer connects to a uniformly random
/// `degree`-subset of the caches, independently across peers.
pub fn sample_topology(num_caches: usize, num_peers: usize, degree: usize, seed: u64) -> Result<Topology> {
    if num_caches == 0 || num_peers == 0 || degree == 0 {
        return param("caches, peers and degree must all be at least 1");
    }
    if degree > num_caches {
        return param(format!("degree {degree} exceeds the number of caches {num_caches}"));
    }
    let mut rng = rng::stream(seed, Stream::Topology);
    let mut pool: Vec<usize> = (0..num_caches).collect();
    let adjacency = (0..num_peers)
        .map(|_| {
            let mut row = partial_shuffle(&mut pool, degree, &mut rng).to_vec();
            row.sort_unstable();
            row
        })
        .collect();
    Ok(Topology {
        num_caches,
        num_peers,
        degree,
        adjacency,
        seed,
    })
}

/// Partial Fisher–Yates: after the call the first `k` entries of `pool` are a
/// uniformly random `k`-subset (in random order) of its contents.
pub(crate) fn partial_shuffle<'a, R: Rng + ?Sized>(pool: &'a mut [usize], k: usize, rng: &mut R) -> &'a [usize] {
    let n = pool.len();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    &pool[..k]
}

/// Zipf popularity `p(m) ∝ m^(-exponent)` over `num_videos` videos, most popular first.
pub fn zipf_popularity(num_videos: usize, exponent: f64) -> Result<Vec<f64>> {
    if num_videos == 0 {
        return param("need at least one video");
    }
    if !(exponent >= 0.0 && exponent.is_finite()) {
        return param(format!("zipf exponent must be finite and nonnegative, got {exponent}"));
    }
    let weights: Vec<f64> = (1..=num_videos).map(|m| (m as f64).powf(-exponent)).collect();
    // sum smallest terms first
    let total: f64 = weights.iter().rev().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Draws one requested video per peer, i.i.d. from `popularity`.
pub fn assign_requests(popularity: &[f64], num_peers: usize, seed: u64) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(popularity).map_err(|e| Error::Parameter(format!("popularity: {e}")))?;
    let mut rng = rng::stream(seed, Stream::Requests);
    Ok((0..num_peers).map(|_| dist.sample(&mut rng)).collect())
}

/// Video popularity together with one realized request per peer.
#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub num_videos: usize,
    pub zipf_exponent: f64,
    pub popularity: Vec<f64>,
    pub requests: Vec<usize>,
    pub seed: u64,
}

impl Demand {
    pub fn generate(num_videos: usize, zipf_exponent: f64, num_peers: usize, seed: u64) -> Result<Self> {
        let popularity = zipf_popularity(num_videos, zipf_exponent)?;
        let requests = assign_requests(&popularity, num_peers, seed)?;
        Ok(Self {
            num_videos,
            zipf_exponent,
            popularity,
            requests,
            seed,
        })
    }

    /// Rebuilds a demand from a stored request list (popularity is recomputed).
    pub fn from_requests(num_videos: usize, zipf_exponent: f64, requests: Vec<usize>, seed: u64) -> Result<Self> {
        let popularity = zipf_popularity(num_videos, zipf_exponent)?;
        if let Some(u) = requests.iter().position(|&m| m >= num_videos) {
            return param(format!("peer {u} requests a video outside 0..{num_videos}"));
        }
        Ok(Self {
            num_videos,
            zipf_exponent,
            popularity,
            requests,
            seed,
        })
    }

    pub fn num_peers(&self) -> usize {
        self.requests.len()
    }

    /// `|U_m|` for every video.
    pub fn request_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_videos];
        for &m in &self.requests {
            counts[m] += 1;
        }
        counts
    }

    /// Peers requesting each video, in peer order.
    pub fn requesters(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_videos];
        for (u, &m) in self.requests.iter().enumerate() {
            groups[m].push(u);
        }
        groups
    }

    pub fn check_against(&self, topology: &Topology) -> Result<()> {
        if self.num_peers() != topology.num_peers {
            return Err(Error::Dimension(format!(
                "demand has {} peers, topology has {}",
                self.num_peers(),
                topology.num_peers
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageMode {
    Whole,
    Fractional,
}

/// Stored fraction `W[h][m]` of every video on every cache.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub num_caches: usize,
    pub num_videos: usize,
    pub mode: StorageMode,
    fractions: Vec<f64>,
}

impl Placement {
    pub fn empty(num_caches: usize, num_videos: usize, mode: StorageMode) -> Self {
        Self {
            num_caches,
            num_videos,
            mode,
            fractions: vec![0.0; num_caches * num_videos],
        }
    }

    pub fn get(&self, cache: usize, video: usize) -> f64 {
        self.fractions[cache * self.num_videos + video]
    }

    pub fn set(&mut self, cache: usize, video: usize, fraction: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&fraction) {
            return param(format!("fraction {fraction} outside [0, 1]"));
        }
        if self.mode == StorageMode::Whole && fraction != 0.0 && fraction != 1.0 {
            return param(format!("whole placement cannot store fraction {fraction}"));
        }
        self.fractions[cache * self.num_videos + video] = fraction;
        Ok(())
    }

    /// Row of fractions stored on one cache, indexed by video.
    pub fn cache_row(&self, cache: usize) -> &[f64] {
        &self.fractions[cache * self.num_videos..(cache + 1) * self.num_videos]
    }

    /// Storage used on each cache, `S_h = Σ_m W[h][m]`.
    pub fn cache_loads(&self) -> Vec<f64> {
        (0..self.num_caches).map(|h| self.cache_row(h).iter().sum()).collect()
    }

    /// Copies of each video, `C_m = Σ_h W[h][m]`.
    pub fn copies(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.num_videos];
        for h in 0..self.num_caches {
            for (acc, w) in c.iter_mut().zip(self.cache_row(h)) {
                *acc += w;
            }
        }
        c
    }

    pub fn total(&self) -> f64 {
        self.fractions.iter().sum()
    }

    /// Nonzero entries as `(video, cache, fraction)`, video-major.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for m in 0..self.num_videos {
            for h in 0..self.num_caches {
                let w = self.get(h, m);
                if w > 0.0 {
                    out.push((m, h, w));
                }
            }
        }
        out
    }
}
