//! Cross ratios and empirical distortion of finite correspondences.
//!
//! A correspondence is a list of `(input id, output id)` pairs. The scans
//! record how cross ratios (quasimöbius) or distance ratios of triples
//! (quasisymmetric) change, and fit a control function of the form
//! `eta(t) = C * max(t^alpha, t^(1/alpha))` over a fixed alpha grid.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::DomainSpace;
use crate::error::{Error, Result};
use crate::mesh::{MeshedDomain, Weighting};
use crate::metric::Distances;
use crate::quasihyperbolic::{j_distance, QhWeightMode};
use crate::sampling::{group_by_source, rng, sample_pairs, PairSampling, DEFAULT_SEED};

/// Scans enumerate every configuration when there are at most this many.
pub const EXHAUSTIVE_SCAN_LIMIT: usize = 1_000_000;
pub const ALPHA_GRID: [f64; 4] = [1.0, 0.5, 1.0 / 3.0, 0.25];
/// Step of the slope grid in the affine fits.
pub const SLOPE_STEP: f64 = 0.25;

/// `cr(Q) = d(x1, x3) d(x2, x4) / (d(x1, x4) d(x2, x3))`.
pub fn cross_ratio<D: Distances + ?Sized>(space: &D, q: [usize; 4]) -> Result<f64> {
    if let Some(&bad) = q.iter().find(|&&i| i >= space.len()) {
        return Err(Error::UnknownPoint(bad));
    }
    for a in 0..4 {
        for b in a + 1..4 {
            if q[a] == q[b] {
                return Err(Error::RepeatedPoints(q.to_vec()));
            }
        }
    }
    Ok(cross_ratio_unchecked(space, q))
}

#[inline]
fn cross_ratio_unchecked<D: Distances + ?Sized>(space: &D, [x1, x2, x3, x4]: [usize; 4]) -> f64 {
    (space.dist(x1, x3) * space.dist(x2, x4)) / (space.dist(x1, x4) * space.dist(x2, x3))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correspondence {
    pairs: Vec<(usize, usize)>,
}

impl Correspondence {
    /// Checks injectivity in both directions.
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen_in = HashSet::new();
        let mut seen_out = HashSet::new();
        for &(a, b) in &pairs {
            if !seen_in.insert(a) {
                return Err(Error::NotBijective(format!("input point {a} mapped twice")));
            }
            if !seen_out.insert(b) {
                return Err(Error::NotBijective(format!("output point {b} hit twice")));
            }
        }
        Ok(Self { pairs })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            pairs: (0..n).map(|i| (i, i)).collect(),
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn check_ranges(&self, n_in: usize, n_out: usize) -> Result<()> {
        for &(a, b) in &self.pairs {
            if a >= n_in {
                return Err(Error::UnknownPoint(a));
            }
            if b >= n_out {
                return Err(Error::UnknownPoint(b));
            }
        }
        Ok(())
    }

    fn image(&self, a: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == a).map(|p| p.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaEnvelope {
    #[serde(rename = "C")]
    pub c: f64,
    pub alpha: f64,
}

impl EtaEnvelope {
    pub const IDENTITY: EtaEnvelope = EtaEnvelope { c: 1.0, alpha: 1.0 };

    #[inline]
    pub fn shape(alpha: f64, t: f64) -> f64 {
        t.powf(alpha).max(t.powf(1.0 / alpha))
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.c * Self::shape(self.alpha, t)
    }

    /// Smallest `C >= 1` for each alpha in [`ALPHA_GRID`]; the reported
    /// envelope takes the smallest `C`, and among equal `C` (relative 1e-9)
    /// the largest alpha. The returned `C` dominates every sample exactly.
    pub fn fit(samples: &[(f64, f64)]) -> (EtaEnvelope, Option<usize>) {
        let per_alpha: Vec<(f64, Option<usize>)> = ALPHA_GRID
            .iter()
            .map(|&alpha| {
                let mut c = 1.0;
                let mut arg = None;
                for (i, &(t, s)) in samples.iter().enumerate() {
                    let ratio = s / Self::shape(alpha, t);
                    if ratio > c {
                        c = ratio;
                        arg = Some(i);
                    }
                }
                while samples.iter().any(|&(t, s)| s > c * Self::shape(alpha, t)) {
                    c = c.next_up();
                }
                (c, arg)
            })
            .collect();
        let best_c = per_alpha.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let pick = per_alpha
            .iter()
            .position(|p| p.0 <= best_c * (1.0 + 1e-9))
            .expect("grid is nonempty");
        (
            EtaEnvelope {
                c: per_alpha[pick].0,
                alpha: ALPHA_GRID[pick],
            },
            per_alpha[pick].1,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadrupleSample {
    #[serde(rename = "Q")]
    pub q: [usize; 4],
    pub cr_in: f64,
    pub cr_out: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripleSample {
    /// `(x, y, z)`; the ratio is `d(x, y) / d(x, z)`.
    pub t: [usize; 3],
    pub ratio_in: f64,
    pub ratio_out: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanSampling {
    /// Exhaustive below [`EXHAUSTIVE_SCAN_LIMIT`] configurations, else seeded.
    Auto { count: usize, seed: u64 },
    Exhaustive,
    Seeded { count: usize, seed: u64 },
}

impl Default for ScanSampling {
    fn default() -> Self {
        ScanSampling::Auto {
            count: 100_000,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Scan<S> {
    pub samples: Vec<S>,
    pub exhaustive: bool,
    pub envelope: EtaEnvelope,
    /// Sample attaining the fitted `C`, if any exceeds the bare shape.
    pub worst: Option<S>,
    /// Extremes of `out / in` over the samples.
    pub min_ratio: f64,
    pub max_ratio: f64,
}

fn finish<S: Copy>(samples: Vec<S>, exhaustive: bool, key: impl Fn(&S) -> (f64, f64)) -> Scan<S> {
    let pairs: Vec<(f64, f64)> = samples.iter().map(&key).collect();
    let (envelope, arg) = EtaEnvelope::fit(&pairs);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &(a, b) in &pairs {
        lo = lo.min(b / a);
        hi = hi.max(b / a);
    }
    if pairs.is_empty() {
        lo = 1.0;
        hi = 1.0;
    }
    Scan {
        worst: arg.map(|i| samples[i]),
        samples,
        exhaustive,
        envelope,
        min_ratio: lo,
        max_ratio: hi,
    }
}

fn choose(m: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (m - i) as u128 / (i as u128 + 1))
}

/// Orderings of a 4-set that give distinct cross ratios: the Klein
/// four-group fixes cr, and each of its cosets has one member fixing the
/// last slot.
const QUAD_ORDERS: [[usize; 4]; 6] = [
    [0, 1, 2, 3],
    [0, 2, 1, 3],
    [1, 0, 2, 3],
    [1, 2, 0, 3],
    [2, 0, 1, 3],
    [2, 1, 0, 3],
];

pub fn qm_scan<A, B>(
    input: &A,
    output: &B,
    corr: &Correspondence,
    sampling: ScanSampling,
) -> Result<Scan<QuadrupleSample>>
where
    A: Distances + ?Sized,
    B: Distances + ?Sized,
{
    corr.check_ranges(input.len(), output.len())?;
    let m = corr.len();
    if m < 4 {
        return Ok(finish(Vec::new(), true, |s: &QuadrupleSample| (s.cr_in, s.cr_out)));
    }
    let total = choose(m, 4) * 6;
    let (exhaustive, count, seed) = match sampling {
        ScanSampling::Exhaustive => (true, 0, 0),
        ScanSampling::Auto { count, seed } => (total <= EXHAUSTIVE_SCAN_LIMIT as u128, count, seed),
        ScanSampling::Seeded { count, seed } => (false, count, seed),
    };
    let ids = corr.pairs();
    let make = |idx: [usize; 4]| {
        let q_in = idx.map(|i| ids[i].0);
        let q_out = idx.map(|i| ids[i].1);
        QuadrupleSample {
            q: q_in,
            cr_in: cross_ratio_unchecked(input, q_in),
            cr_out: cross_ratio_unchecked(output, q_out),
        }
    };
    let samples: Vec<QuadrupleSample> = if exhaustive {
        (0..m)
            .into_par_iter()
            .flat_map_iter(|a| {
                let mut local = Vec::new();
                for b in a + 1..m {
                    for c in b + 1..m {
                        for d in c + 1..m {
                            let set = [a, b, c, d];
                            for ord in QUAD_ORDERS {
                                local.push(make(ord.map(|o| set[o])));
                            }
                        }
                    }
                }
                local
            })
            .collect()
    } else {
        let target = (count as u128).min(m as u128 * (m as u128 - 1) * (m as u128 - 2) * (m as u128 - 3)) as usize;
        let mut rng = rng(seed);
        let mut seen = HashSet::with_capacity(target);
        let mut picks = Vec::with_capacity(target);
        while picks.len() < target {
            let mut q = [0usize; 4];
            let mut k = 0;
            while k < 4 {
                let v = rng.gen_range(0..m);
                if !q[..k].contains(&v) {
                    q[k] = v;
                    k += 1;
                }
            }
            if seen.insert(q) {
                picks.push(q);
            }
        }
        picks.into_par_iter().map(make).collect()
    };
    Ok(finish(samples, exhaustive, |s| (s.cr_in, s.cr_out)))
}

pub fn qs_scan<A, B>(
    input: &A,
    output: &B,
    corr: &Correspondence,
    sampling: ScanSampling,
) -> Result<Scan<TripleSample>>
where
    A: Distances + ?Sized,
    B: Distances + ?Sized,
{
    corr.check_ranges(input.len(), output.len())?;
    let m = corr.len();
    if m < 3 {
        return Ok(finish(Vec::new(), true, |s: &TripleSample| (s.ratio_in, s.ratio_out)));
    }
    let total = m as u128 * (m as u128 - 1) * (m as u128 - 2);
    let (exhaustive, count, seed) = match sampling {
        ScanSampling::Exhaustive => (true, 0, 0),
        ScanSampling::Auto { count, seed } => (total <= EXHAUSTIVE_SCAN_LIMIT as u128, count, seed),
        ScanSampling::Seeded { count, seed } => (false, count, seed),
    };
    let ids = corr.pairs();
    let make = |[x, y, z]: [usize; 3]| {
        let (a, b) = (ids[x], ids[y]);
        let c = ids[z];
        TripleSample {
            t: [a.0, b.0, c.0],
            ratio_in: input.dist(a.0, b.0) / input.dist(a.0, c.0),
            ratio_out: output.dist(a.1, b.1) / output.dist(a.1, c.1),
        }
    };
    let samples: Vec<TripleSample> = if exhaustive {
        (0..m)
            .into_par_iter()
            .flat_map_iter(|x| {
                let mut local = Vec::new();
                for y in 0..m {
                    for z in 0..m {
                        if y != x && z != x && z != y {
                            local.push(make([x, y, z]));
                        }
                    }
                }
                local
            })
            .collect()
    } else {
        let target = (count as u128).min(total) as usize;
        let mut rng = rng(seed);
        let mut seen = HashSet::with_capacity(target);
        let mut picks = Vec::with_capacity(target);
        while picks.len() < target {
            let x = rng.gen_range(0..m);
            let y = rng.gen_range(0..m);
            let z = rng.gen_range(0..m);
            if x != y && x != z && y != z && seen.insert([x, y, z]) {
                picks.push([x, y, z]);
            }
        }
        picks.into_par_iter().map(make).collect()
    };
    Ok(finish(samples, exhaustive, |s| (s.ratio_in, s.ratio_out)))
}

/// Fit of `v_out <= s * v_in + c` and `v_in <= s * v_out + c`.
#[derive(Debug, Clone, Serialize)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Input pair attaining the intercept at the chosen slope.
    pub witness: Option<[usize; 2]>,
    pub pairs: usize,
    /// `(slope, induced minimal intercept)` over the grid.
    pub table: Vec<(f64, f64)>,
}

/// Slope grid `1, 1.25, 1.5, ...` up to where the intercept reaches 0; the
/// reported slope minimizes `slope + intercept` (ties to the smaller slope).
pub fn fit_two_sided(values: &[(f64, f64)], pairs: &[(usize, usize)]) -> AffineFit {
    let max_ratio = values
        .iter()
        .filter(|(a, b)| *a > 0.0 && *b > 0.0)
        .map(|&(a, b)| (a / b).max(b / a))
        .fold(1.0f64, f64::max);
    let steps = (((max_ratio - 1.0) / SLOPE_STEP).ceil() as usize + 1).min(4000);
    let intercept_at = |s: f64| -> (f64, Option<usize>) {
        let mut best = 0.0;
        let mut arg = None;
        for (i, &(a, b)) in values.iter().enumerate() {
            let v = (b - s * a).max(a - s * b);
            if v > best {
                best = v;
                arg = Some(i);
            }
        }
        (best, arg)
    };
    let mut table = Vec::with_capacity(steps + 1);
    let mut chosen = (f64::INFINITY, 0.0, 0.0, None);
    for step in 0..=steps {
        let s = 1.0 + SLOPE_STEP * step as f64;
        let (c, arg) = intercept_at(s);
        table.push((s, c));
        if s + c < chosen.0 {
            chosen = (s + c, s, c, arg);
        }
    }
    AffineFit {
        slope: chosen.1,
        intercept: chosen.2,
        witness: chosen.3.map(|i| [pairs[i].0, pairs[i].1]),
        pairs: values.len(),
        table,
    }
}

fn interior_map(corr: &Correspondence, dom_in: &DomainSpace, dom_out: &DomainSpace) -> Result<Vec<usize>> {
    corr.check_ranges(dom_in.ambient().len(), dom_out.ambient().len())?;
    let mut map = vec![usize::MAX; dom_in.ambient().len()];
    for &(a, b) in corr.pairs() {
        map[a] = b;
    }
    for &x in dom_in.interior() {
        let y = map[x];
        if y == usize::MAX {
            return Err(Error::NotBijective(format!("interior point {x} has no image")));
        }
        if !dom_out.is_interior(y) {
            return Err(Error::NotBijective(format!(
                "image {y} of interior point {x} is not interior"
            )));
        }
    }
    Ok(map)
}

/// Quasi-isometry constants `(L, A)` between quasihyperbolic metrics:
/// `k_out <= L k_in + A` and `k_in <= L k_out + A` on the sampled pairs.
pub fn qi_fit(
    md_in: &MeshedDomain,
    md_out: &MeshedDomain,
    corr: &Correspondence,
    mode: QhWeightMode,
    sampling: PairSampling,
) -> Result<AffineFit> {
    let map = interior_map(corr, md_in.domain(), md_out.domain())?;
    let pairs = sample_pairs(md_in.domain(), sampling);
    let groups = group_by_source(&pairs);
    let w = Weighting::Qh(mode);
    let values: Vec<Vec<(f64, f64)>> = groups
        .par_iter()
        .map(|(x, ys)| -> Result<Vec<(f64, f64)>> {
            let t_in = md_in.tree(*x, w)?;
            let t_out = md_out.tree(map[*x], w)?;
            ys.iter()
                .map(|&y| Ok((t_in.dist[md_in.local(y)?], t_out.dist[md_out.local(map[y])?])))
                .collect()
        })
        .collect::<Result<_>>()?;
    let flat_pairs: Vec<(usize, usize)> = groups
        .iter()
        .flat_map(|(x, ys)| ys.iter().map(move |&y| (*x, y)))
        .collect();
    let values: Vec<(f64, f64)> = values.into_iter().flatten().collect();
    Ok(fit_two_sided(&values, &flat_pairs))
}

/// Affine distortion `(a, b)` of the `j` metric, both directions.
pub fn j_affine_fit(
    dom_in: &DomainSpace,
    dom_out: &DomainSpace,
    corr: &Correspondence,
    sampling: PairSampling,
) -> Result<AffineFit> {
    let map = interior_map(corr, dom_in, dom_out)?;
    let pairs = sample_pairs(dom_in, sampling);
    let values = pairs
        .iter()
        .map(|&(x, y)| Ok((j_distance(dom_in, x, y)?, j_distance(dom_out, map[x], map[y])?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_two_sided(&values, &pairs))
}

impl Correspondence {
    /// Image of every point of `ids`, failing on points outside the domain.
    pub fn map_all(&self, ids: &[usize]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|&a| {
                self.image(a)
                    .ok_or_else(|| Error::NotBijective(format!("point {a} has no image")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::FiniteMetricSpace;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::euclidean(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn collinear_cross_ratio() {
        let s = line(&[0.0, 1.0, 2.0, 3.0]);
        assert!((cross_ratio(&s, [0, 1, 2, 3]).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            cross_ratio(&s, [0, 1, 2, 3]).unwrap(),
            cross_ratio(&s, [1, 0, 3, 2]).unwrap()
        );
        assert!(matches!(cross_ratio(&s, [0, 1, 1, 3]), Err(Error::RepeatedPoints(_))));
    }

    #[test]
    fn snowflake_cross_ratio_is_a_power() {
        let pts = [0.0, 3.0, 4.0, 1.0];
        let s = line(&pts);
        let cr = cross_ratio(&s, [0, 1, 2, 3]).unwrap();
        assert!((cr - 8.0).abs() < 1e-12);
        let snow = FiniteMetricSpace::snowflake(&pts.iter().map(|&x| vec![x]).collect::<Vec<_>>(), 0.5).unwrap();
        let cr_e = cross_ratio(&snow, [0, 1, 2, 3]).unwrap();
        assert!((cr_e - cr.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn envelope_fit_on_power_laws() {
        let samples: Vec<(f64, f64)> = (1..50).map(|i| {
            let t = 0.05 * i as f64;
            (t, t.powf(0.5))
        }).collect();
        let (env, _) = EtaEnvelope::fit(&samples);
        assert_eq!(env.alpha, 0.5);
        assert!((env.c - 1.0).abs() < 1e-9);
        for &(t, s) in &samples {
            assert!(s <= env.eval(t));
        }
        let ident: Vec<(f64, f64)> = samples.iter().map(|&(t, _)| (t, t)).collect();
        assert_eq!(EtaEnvelope::fit(&ident).0, EtaEnvelope::IDENTITY);
    }

    #[test]
    fn correspondence_must_be_injective() {
        assert!(Correspondence::new(vec![(0, 0), (1, 0)]).is_err());
        assert!(Correspondence::new(vec![(0, 0), (0, 1)]).is_err());
        assert!(Correspondence::new(vec![(0, 1), (1, 0)]).is_ok());
    }

    #[test]
    fn identity_scans() {
        let pts: Vec<Vec<f64>> = (0..12).map(|i| vec![(i as f64).sin() * 3.0, (i as f64 * 0.7).cos()]).collect();
        let s = FiniteMetricSpace::euclidean(&pts).unwrap();
        let id = Correspondence::identity(12);
        let qm = qm_scan(&s, &s, &id, ScanSampling::default()).unwrap();
        assert!(qm.exhaustive);
        assert_eq!(qm.samples.len(), 495 * 6);
        assert_eq!(qm.envelope, EtaEnvelope::IDENTITY);
        let qs = qs_scan(&s, &s, &id, ScanSampling::default()).unwrap();
        assert_eq!(qs.samples.len(), 12 * 11 * 10);
        assert_eq!(qs.envelope, EtaEnvelope::IDENTITY);
    }

    #[test]
    fn scaled_copy_keeps_ratios() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.3, (i * i) as f64 * 0.1]).collect();
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|c| 7.0 * c).collect()).collect();
        let a = FiniteMetricSpace::euclidean(&pts).unwrap();
        let b = FiniteMetricSpace::euclidean(&scaled).unwrap();
        let qs = qs_scan(&a, &b, &Correspondence::identity(10), ScanSampling::default()).unwrap();
        assert!((qs.envelope.c - 1.0).abs() < 1e-9);
        assert_eq!(qs.envelope.alpha, 1.0);
    }

    #[test]
    fn seeded_scans_are_reproducible() {
        let pts: Vec<Vec<f64>> = (0..60).map(|i| vec![(i as f64 * 1.7).sin(), (i as f64 * 0.3).cos()]).collect();
        let s = FiniteMetricSpace::euclidean(&pts).unwrap();
        let id = Correspondence::identity(60);
        let sampling = ScanSampling::Auto { count: 2000, seed: 5 };
        let a = qm_scan(&s, &s, &id, sampling).unwrap();
        let b = qm_scan(&s, &s, &id, sampling).unwrap();
        assert!(!a.exhaustive);
        assert_eq!(a.samples.len(), 2000);
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn two_sided_fit_prefers_unit_slope_for_small_offsets() {
        let values: Vec<(f64, f64)> = (1..40).map(|i| (i as f64 * 0.1, i as f64 * 0.1 + 0.01)).collect();
        let pairs: Vec<(usize, usize)> = (0..values.len()).map(|i| (i, i + 1)).collect();
        let fit = fit_two_sided(&values, &pairs);
        assert_eq!(fit.slope, 1.0);
        assert!((fit.intercept - 0.01).abs() < 1e-12);
    }
}
