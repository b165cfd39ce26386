use crate::error::{Error, Result};
use crate::model::Topology;

/// Largest number of subsets [`exact_cover`] is willing to enumerate.
pub const EXACT_COVER_GUARD: u128 = 1_000_000;

/// Caches picked by greedy peeling, in pick order, with the number of
/// newly covered requesters at each pick.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Peel {
    pub caches: Vec<usize>,
    pub gains: Vec<usize>,
}

impl Peel {
    pub fn served(&self) -> usize {
        self.gains.iter().sum()
    }

    /// Realized service curve: `curve[c]` requesters covered by the first `c` picks.
    pub fn curve(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.gains.len() + 1);
        out.push(0);
        let mut acc = 0;
        for g in &self.gains {
            acc += g;
            out.push(acc);
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub enum TieBreak<'a> {
    LowestIndex,
    /// Prefer the cache with the smallest current load, then the lowest index.
    LeastLoaded(&'a [f64]),
}

pub fn greedy_peel(topology: &Topology, requesters: &[usize], copies: usize) -> Peel {
    greedy_peel_with(topology, requesters, copies, TieBreak::LowestIndex)
}

/// Greedy peeling: repeatedly store a copy at the cache connected to the most
/// still-uncovered requesters, then drop those requesters.
pub fn greedy_peel_with(topology: &Topology, requesters: &[usize], copies: usize, tie: TieBreak<'_>) -> Peel {
    let h = topology.num_caches;
    assert!(copies <= h, "copies {copies} > caches {h}");
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); h];
    let mut counts = vec![0usize; h];
    for (i, &u) in requesters.iter().enumerate() {
        for &c in topology.caches_of(u) {
            members[c].push(i);
            counts[c] += 1;
        }
    }
    let mut covered = vec![false; requesters.len()];
    let mut used = vec![false; h];
    let mut peel = Peel {
        caches: Vec::with_capacity(copies),
        gains: Vec::with_capacity(copies),
    };
    for _ in 0..copies {
        let mut best: Option<usize> = None;
        for c in 0..h {
            if used[c] {
                continue;
            }
            best = match best {
                None => Some(c),
                Some(b) if counts[c] > counts[b] => Some(c),
                Some(b) if counts[c] == counts[b] => match tie {
                    TieBreak::LeastLoaded(load) if load[c] < load[b] => Some(c),
                    _ => Some(b),
                },
                keep => keep,
            };
        }
        let pick = best.expect("copies <= caches leaves an unused cache");
        used[pick] = true;
        peel.caches.push(pick);
        peel.gains.push(counts[pick]);
        for &i in &members[pick] {
            if !covered[i] {
                covered[i] = true;
                for &c in topology.caches_of(requesters[i]) {
                    counts[c] -= 1;
                }
            }
        }
    }
    peel
}

/// Exact maximum coverage by any `copies` caches, by exhaustive enumeration.
/// Test-scale oracle: refuses when more than [`EXACT_COVER_GUARD`] subsets exist.
pub fn exact_cover(topology: &Topology, requesters: &[usize], copies: usize) -> Result<usize> {
    let h = topology.num_caches;
    if copies == 0 || requesters.is_empty() {
        return Ok(0);
    }
    if copies >= h {
        return Ok(requesters.len());
    }
    let subsets = binomial(h, copies);
    if subsets > EXACT_COVER_GUARD {
        return Err(Error::TooLarge(subsets));
    }
    let words = requesters.len().div_ceil(64);
    let mut masks = vec![vec![0u64; words]; h];
    for (i, &u) in requesters.iter().enumerate() {
        for &c in topology.caches_of(u) {
            masks[c][i / 64] |= 1 << (i % 64);
        }
    }
    let mut best = 0;
    let mut idx: Vec<usize> = (0..copies).collect();
    let mut acc = vec![0u64; words];
    loop {
        acc.iter_mut().for_each(|w| *w = 0);
        for &c in &idx {
            for (a, m) in acc.iter_mut().zip(&masks[c]) {
                *a |= m;
            }
        }
        best = best.max(acc.iter().map(|w| w.count_ones() as usize).sum());
        // next combination in lexicographic order
        let mut i = copies;
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            if idx[i] < h - copies + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..copies {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}
