//! Seeded selection of interior pairs.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpace;

pub const DEFAULT_SEED: u64 = 17;
/// Up to this many interior points every pair is visited.
pub const EXHAUSTIVE_PAIR_LIMIT: usize = 300;
pub const DEFAULT_PAIR_SAMPLES: usize = 10_000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairSampling {
    Exhaustive,
    /// `count` pairs spread evenly over the decades of `r`.
    Stratified { count: usize, seed: u64 },
    /// Exhaustive up to [`EXHAUSTIVE_PAIR_LIMIT`] interior points, stratified above.
    Auto { count: usize, seed: u64 },
}

impl Default for PairSampling {
    fn default() -> Self {
        PairSampling::Auto {
            count: DEFAULT_PAIR_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

impl PairSampling {
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            PairSampling::Exhaustive => self,
            PairSampling::Stratified { count, .. } => PairSampling::Stratified { count, seed },
            PairSampling::Auto { count, .. } => PairSampling::Auto { count, seed },
        }
    }
}

/// Distinct interior pairs `(x, y)` as point ids, `x` before `y` in
/// interior order, sorted.
pub fn sample_pairs(dom: &DomainSpace, sampling: PairSampling) -> Vec<(usize, usize)> {
    let interior = dom.interior();
    let n = interior.len();
    let all = || {
        let mut v = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                v.push((interior[a], interior[b]));
            }
        }
        v
    };
    match sampling {
        PairSampling::Exhaustive => all(),
        PairSampling::Auto { .. } if n <= EXHAUSTIVE_PAIR_LIMIT => all(),
        PairSampling::Auto { count, seed } | PairSampling::Stratified { count, seed } => {
            stratified(dom, count, seed)
        }
    }
}

fn stratified(dom: &DomainSpace, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let interior = dom.interior();
    let d = dom.boundary_distances();
    let n = interior.len();
    let mut buckets: BTreeMap<i32, Vec<(u32, u32)>> = BTreeMap::new();
    for a in 0..n {
        for b in a + 1..n {
            let r = dom.dist(interior[a], interior[b]) / d[a].min(d[b]);
            let decade = r.log10().floor() as i32;
            buckets.entry(decade).or_default().push((a as u32, b as u32));
        }
    }
    let total: usize = buckets.values().map(Vec::len).sum();
    let mut out: Vec<(usize, usize)> = Vec::with_capacity(count.min(total));
    if total <= count {
        for v in buckets.values() {
            out.extend(v.iter().map(|&(a, b)| (interior[a as usize], interior[b as usize])));
        }
        out.sort_unstable();
        return out;
    }
    // smallest buckets first so their leftover quota flows to larger ones
    let mut sizes: Vec<(usize, i32)> = buckets.iter().map(|(k, v)| (v.len(), *k)).collect();
    sizes.sort_unstable();
    let mut quota = BTreeMap::new();
    let mut remaining = count;
    for (i, &(size, key)) in sizes.iter().enumerate() {
        let share = remaining / (sizes.len() - i);
        let take = size.min(share);
        quota.insert(key, take);
        remaining -= take;
    }
    let mut rng = rng(seed);
    for (key, v) in &buckets {
        let take = quota[key];
        let mut picks = index::sample(&mut rng, v.len(), take).into_vec();
        picks.sort_unstable();
        out.extend(picks.into_iter().map(|i| {
            let (a, b) = v[i];
            (interior[a as usize], interior[b as usize])
        }));
    }
    out.sort_unstable();
    out
}

/// Pairs grouped by first element, preserving order.
pub fn group_by_source(pairs: &[(usize, usize)]) -> Vec<(usize, Vec<usize>)> {
    let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(x, y) in pairs {
        map.entry(x).or_default().push(y);
    }
    map.into_iter().collect()
}
