//! Uniform-curve scores and estimates of domain constants.
//!
//! Every estimate is a maximum over what was sampled, so it bounds the true
//! constant of the finite model from below, and each maximum carries the
//! witness that attains it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpace;
use crate::error::{Error, Result};
use crate::graph::{ShortestPathTree, WeightedGraph};
use crate::mesh::{MeshedDomain, Weighting};
use crate::quasihyperbolic::{j_distance, QhWeightMode};
use crate::sampling::{group_by_source, sample_pairs, PairSampling};

pub const LAMBDA_GRID: [f64; 3] = [0.125, 0.25, 0.5];
/// Step of the `c` grid in [`additive_fit`].
pub const ADDITIVE_STEP: f64 = 0.25;
/// Successive growth at or above this factor marks a constant as divergent.
pub const DIVERGENCE_FACTOR: f64 = 1.3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformCurveScore {
    /// Point ids from `x` to `y`.
    pub curve: Vec<usize>,
    /// `length / d(x, y)`.
    pub turning: f64,
    /// `max_z min(prefix, suffix) / d(z)` over the curve's vertices.
    pub cigar: f64,
    pub score: f64,
}

/// Scores a polyline of interior points. Scores are at least 1, the
/// value of a degenerate curve (`x = y`).
pub fn curve_score(dom: &DomainSpace, curve: &[usize]) -> Result<UniformCurveScore> {
    let (&x, &y) = match (curve.first(), curve.last()) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::InvalidParameter("empty curve".into())),
    };
    let mut prefix = Vec::with_capacity(curve.len());
    let mut acc = 0.0;
    prefix.push(0.0);
    for w in curve.windows(2) {
        acc += dom.dist(w[0], w[1]);
        prefix.push(acc);
    }
    let total = acc;
    let mut cigar: f64 = 0.0;
    for (i, &z) in curve.iter().enumerate() {
        let reach = prefix[i].min(total - prefix[i]);
        if reach > 0.0 {
            cigar = cigar.max(reach / dom.boundary_distance(z)?);
        } else {
            dom.boundary_distance(z)?;
        }
    }
    if x == y {
        return Ok(UniformCurveScore {
            curve: curve.to_vec(),
            turning: 1.0,
            cigar,
            score: 1.0f64.max(cigar),
        });
    }
    let turning = total / dom.dist(x, y);
    Ok(UniformCurveScore {
        curve: curve.to_vec(),
        turning,
        cigar,
        score: turning.max(cigar).max(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    LengthGeodesic,
    QhUpper,
    QhTrapezoid,
}

impl CurveKind {
    pub const ALL: [CurveKind; 3] = [CurveKind::LengthGeodesic, CurveKind::QhUpper, CurveKind::QhTrapezoid];

    pub fn weighting(self) -> Weighting {
        match self {
            CurveKind::LengthGeodesic => Weighting::Length,
            CurveKind::QhUpper => Weighting::Qh(QhWeightMode::Upper),
            CurveKind::QhTrapezoid => Weighting::Qh(QhWeightMode::Trapezoid),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformityWitness {
    pub pair: [usize; 2],
    pub kind: CurveKind,
    pub score: UniformCurveScore,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformityEstimate {
    pub c: f64,
    pub pairs: usize,
    pub witness: Option<UniformityWitness>,
}

/// Best score of the candidate curves between `x` and `y`.
pub fn best_candidate(
    md: &MeshedDomain,
    trees: &[(CurveKind, &ShortestPathTree)],
    y: usize,
) -> Result<(CurveKind, UniformCurveScore)> {
    let mut best: Option<(CurveKind, UniformCurveScore)> = None;
    for &(kind, tree) in trees {
        let path = md.path_ids(tree, y)?;
        let s = curve_score(md.domain(), &path)?;
        if best.as_ref().is_none_or(|b| s.score < b.1.score) {
            best = Some((kind, s));
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no candidate curves".into()))
}

/// `c_est`: over sampled pairs, the best candidate score, maximized.
pub fn uniformity_estimate(
    md: &MeshedDomain,
    sampling: PairSampling,
    kinds: &[CurveKind],
) -> Result<UniformityEstimate> {
    let pairs = sample_pairs(md.domain(), sampling);
    uniformity_on_pairs(md, &pairs, kinds)
}

pub fn uniformity_on_pairs(
    md: &MeshedDomain,
    pairs: &[(usize, usize)],
    kinds: &[CurveKind],
) -> Result<UniformityEstimate> {
    if kinds.is_empty() {
        return Err(Error::InvalidParameter("no candidate curves".into()));
    }
    let groups = group_by_source(pairs);
    let per_source: Vec<Vec<UniformityWitness>> = groups
        .par_iter()
        .map(|(x, ys)| -> Result<Vec<UniformityWitness>> {
            let trees = kinds
                .iter()
                .map(|&k| Ok((k, md.tree(*x, k.weighting())?)))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<(CurveKind, &ShortestPathTree)> = trees.iter().map(|(k, t)| (*k, t)).collect();
            ys.iter()
                .map(|&y| {
                    let (kind, score) = best_candidate(md, &refs, y)?;
                    Ok(UniformityWitness {
                        pair: [*x, y],
                        kind,
                        score,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut out = UniformityEstimate {
        c: 1.0,
        pairs: pairs.len(),
        witness: None,
    };
    for w in per_source.into_iter().flatten() {
        if out.witness.is_none() || w.score.score > out.c {
            out.c = w.score.score.max(1.0);
            out.witness = Some(w);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct QhUniformity {
    /// `max k / j` with trapezoid quadrature.
    pub c_qh: f64,
    pub witness: Option<[usize; 2]>,
    pub c_qh_upper: f64,
    pub witness_upper: Option<[usize; 2]>,
    pub pairs: usize,
}

/// Per-pair `(j, k_upper, k_trapezoid)`.
/// A pair with `[j, k_upper, k_trapezoid]`.
pub type PairValues = ((usize, usize), [f64; 3]);

pub fn pair_values(md: &MeshedDomain, pairs: &[(usize, usize)]) -> Result<Vec<PairValues>> {
    let groups = group_by_source(pairs);
    let per: Vec<Vec<PairValues>> = groups
        .par_iter()
        .map(|(x, ys)| -> Result<Vec<_>> {
            let up = md.tree(*x, Weighting::Qh(QhWeightMode::Upper))?;
            let tr = md.tree(*x, Weighting::Qh(QhWeightMode::Trapezoid))?;
            ys.iter()
                .map(|&y| {
                    let t = md.local(y)?;
                    Ok(((*x, y), [j_distance(md.domain(), *x, y)?, up.dist[t], tr.dist[t]]))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

pub fn qh_uniformity(md: &MeshedDomain, sampling: PairSampling) -> Result<QhUniformity> {
    let pairs: Vec<_> = sample_pairs(md.domain(), sampling)
        .into_iter()
        .filter(|(x, y)| x != y)
        .collect();
    let values = pair_values(md, &pairs)?;
    Ok(qh_uniformity_from(&values))
}

pub fn qh_uniformity_from(values: &[PairValues]) -> QhUniformity {
    let mut out = QhUniformity {
        c_qh: 0.0,
        witness: None,
        c_qh_upper: 0.0,
        witness_upper: None,
        pairs: values.len(),
    };
    for &((x, y), [j, up, tr]) in values {
        if j <= 0.0 {
            continue;
        }
        if tr / j > out.c_qh {
            out.c_qh = tr / j;
            out.witness = Some([x, y]);
        }
        if up / j > out.c_qh_upper {
            out.c_qh_upper = up / j;
            out.witness_upper = Some([x, y]);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiconvexEntry {
    pub lambda: f64,
    pub c: f64,
    pub pairs: usize,
    /// `[x, y1, y2]` attaining `c`.
    pub witness: Option<[usize; 3]>,
}

/// Interior points of `B(x, lambda d(x))` for every interior `x`, as local
/// mesh indices.
fn balls(dom: &DomainSpace, lambda: f64) -> Vec<Vec<usize>> {
    let interior = dom.interior();
    let d = dom.boundary_distances();
    (0..interior.len())
        .into_par_iter()
        .map(|a| {
            let radius = lambda * d[a];
            (0..interior.len())
                .filter(|&b| dom.dist(interior[a], interior[b]) < radius)
                .collect()
        })
        .collect()
}

/// Quasiconvexity constants of a domain: for each `lambda`, the largest
/// ratio of mesh path length to distance over pairs sharing a ball
/// `B(x, lambda d(x))`, with path lengths measured by `edge_weights`.
pub fn quasiconvexity_with(
    dom: &DomainSpace,
    graph: &WeightedGraph,
    edge_weights: &[f64],
    dist: &(dyn Fn(usize, usize) -> f64 + Sync),
    lambdas: &[f64],
) -> Vec<QuasiconvexEntry> {
    let interior = dom.interior();
    let n = interior.len();
    let balls: Vec<Vec<Vec<usize>>> = lambdas.iter().map(|&l| balls(dom, l)).collect();
    // centers[l][y] = centers whose ball contains y
    let centers: Vec<Vec<Vec<usize>>> = balls
        .iter()
        .map(|bs| {
            let mut c = vec![Vec::new(); n];
            for (x, members) in bs.iter().enumerate() {
                for &y in members {
                    c[y].push(x);
                }
            }
            c
        })
        .collect();
    let per_source: Vec<Vec<(f64, usize, Option<[usize; 3]>)>> = (0..n)
        .into_par_iter()
        .map(|y1| {
            let involved = centers.iter().any(|c| !c[y1].is_empty());
            let tree = involved.then(|| graph.shortest_paths(y1, edge_weights, None));
            let mut mark = vec![false; n];
            (0..lambdas.len())
                .map(|l| {
                    let mut best = (0.0, 0usize, None);
                    let Some(tree) = &tree else { return best };
                    mark.iter_mut().for_each(|m| *m = false);
                    for &x in &centers[l][y1] {
                        for &y2 in &balls[l][x] {
                            if y2 <= y1 || mark[y2] {
                                continue;
                            }
                            mark[y2] = true;
                            best.1 += 1;
                            let ratio = tree.dist[y2] / dist(interior[y1], interior[y2]);
                            if ratio > best.0 {
                                best.0 = ratio;
                                best.2 = Some([interior[x], interior[y1], interior[y2]]);
                            }
                        }
                    }
                    best
                })
                .collect()
        })
        .collect();
    lambdas
        .iter()
        .enumerate()
        .map(|(l, &lambda)| {
            let mut e = QuasiconvexEntry {
                lambda,
                c: 1.0,
                pairs: 0,
                witness: None,
            };
            for row in &per_source {
                let (c, count, w) = row[l];
                e.pairs += count;
                if c > e.c || (e.witness.is_none() && w.is_some() && c >= e.c) {
                    e.c = c.max(1.0);
                    e.witness = w;
                }
            }
            e
        })
        .collect()
}

pub fn quasiconvexity_estimate(md: &MeshedDomain, lambdas: &[f64]) -> Vec<QuasiconvexEntry> {
    let dom = md.domain();
    quasiconvexity_with(
        dom,
        md.mesh().graph(),
        md.weights(Weighting::Length),
        &|a, b| dom.dist(a, b),
        lambdas,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Vacuous,
    Diverges,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnularWitness {
    pub center: usize,
    pub r: f64,
    pub pair: [usize; 2],
    /// `None` when removing the small ball disconnects the pair.
    pub length: Option<f64>,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnularReport {
    pub c: f64,
    pub status: CheckStatus,
    pub pairs: usize,
    pub witness: Option<AnnularWitness>,
}

/// For each center `x` and radius `r`, every pair in `r <= d(x, .) < 2r`
/// must be joined in `graph` by a path of length at most `c d(y, z)` that
/// avoids `d(x, .) < r / c`. Vertices are indices into `dist`.
pub fn annular_convexity_check(
    graph: &WeightedGraph,
    dist: &(dyn Fn(usize, usize) -> f64 + Sync),
    c: f64,
    radii: &[f64],
    centers: &[usize],
) -> Result<AnnularReport> {
    if !(c >= 1.0) {
        return Err(Error::InvalidParameter(format!("annular constant must be >= 1, got {c}")));
    }
    let n = graph.vertex_count();
    let weights: Vec<f64> = graph.edges().iter().map(|e| e.length).collect();
    let jobs: Vec<(usize, f64)> = centers
        .iter()
        .flat_map(|&x| radii.iter().map(move |&r| (x, r)))
        .collect();
    let results: Vec<(usize, Option<AnnularWitness>)> = jobs
        .par_iter()
        .map(|&(x, r)| {
            let dx: Vec<f64> = (0..n).map(|v| dist(x, v)).collect();
            let allowed: Vec<bool> = dx.iter().map(|&d| d >= r / c).collect();
            let annulus: Vec<usize> = (0..n).filter(|&v| dx[v] >= r && dx[v] < 2.0 * r).collect();
            let mut count = 0;
            let mut worst: Option<(f64, AnnularWitness)> = None;
            for (i, &y) in annulus.iter().enumerate() {
                let tree = graph.shortest_paths(y, &weights, Some(&allowed));
                for &z in &annulus[i + 1..] {
                    count += 1;
                    let d = dist(y, z);
                    let len = tree.dist[z];
                    let excess = if len.is_finite() { len / (c * d) } else { f64::INFINITY };
                    if excess > 1.0 && worst.as_ref().is_none_or(|w| excess > w.0) {
                        worst = Some((
                            excess,
                            AnnularWitness {
                                center: x,
                                r,
                                pair: [y, z],
                                length: len.is_finite().then_some(len),
                                bound: c * d,
                            },
                        ));
                    }
                }
            }
            (count, worst.map(|w| w.1))
        })
        .collect();
    let pairs = results.iter().map(|r| r.0).sum();
    let witness = results.into_iter().find_map(|r| r.1);
    let status = match (&witness, pairs) {
        (Some(_), _) => CheckStatus::Fail,
        (None, 0) => CheckStatus::Vacuous,
        (None, _) => CheckStatus::Pass,
    };
    Ok(AnnularReport {
        c,
        status,
        pairs,
        witness,
    })
}

/// Smallest `c` from `grid` that passes, or `None`.
pub fn annular_constant(
    graph: &WeightedGraph,
    dist: &(dyn Fn(usize, usize) -> f64 + Sync),
    grid: &[f64],
    radii: &[f64],
    centers: &[usize],
) -> Result<(Option<f64>, AnnularReport)> {
    let mut last = None;
    for &c in grid {
        let report = annular_convexity_check(graph, dist, c, radii, centers)?;
        match report.status {
            CheckStatus::Pass | CheckStatus::Vacuous => return Ok((Some(c), report)),
            _ => last = Some(report),
        }
    }
    Ok((None, last.expect("grid is nonempty")))
}

#[derive(Debug, Clone, Serialize)]
pub struct AdditiveFit {
    pub c: f64,
    pub cprime: f64,
    pub witness: Option<[usize; 2]>,
    pub pairs: usize,
    /// `(c, induced minimal c')` over the grid.
    pub table: Vec<(f64, f64)>,
}

/// Smallest `c'` with `k <= c j + c'` on all `(j, k)` samples.
pub fn cprime_at(values: &[(f64, f64)], c: f64) -> (f64, Option<usize>) {
    let mut best = 0.0;
    let mut arg = None;
    for (i, &(j, k)) in values.iter().enumerate() {
        let v = k - c * j;
        if v > best {
            best = v;
            arg = Some(i);
        }
    }
    (best, arg)
}

/// Fit `k <= c j + c'` over the grid `0, 0.25, ...` up to the smallest
/// grid `c` with `c' = 0`; reports the grid point minimizing `c + c'`,
/// ties to the smaller `c`.
pub fn additive_fit_values(values: &[(f64, f64)], pairs: &[(usize, usize)]) -> AdditiveFit {
    let top = values
        .iter()
        .filter(|(j, _)| *j > 0.0)
        .map(|&(j, k)| k / j)
        .fold(0.0f64, f64::max);
    let steps = ((top / ADDITIVE_STEP).ceil() as usize).min(4000);
    let mut table = Vec::with_capacity(steps + 1);
    let mut best = (f64::INFINITY, 0.0, 0.0, None);
    for s in 0..=steps {
        let c = ADDITIVE_STEP * s as f64;
        let (cp, arg) = cprime_at(values, c);
        table.push((c, cp));
        if c + cp < best.0 {
            best = (c + cp, c, cp, arg);
        }
    }
    AdditiveFit {
        c: best.1,
        cprime: best.2,
        witness: best.3.map(|i| [pairs[i].0, pairs[i].1]),
        pairs: values.len(),
        table,
    }
}

/// Additive fit of the trapezoid `k` against `j`.
pub fn additive_fit(md: &MeshedDomain, sampling: PairSampling) -> Result<AdditiveFit> {
    let pairs = sample_pairs(md.domain(), sampling);
    let values = pair_values(md, &pairs)?;
    Ok(additive_from(&values))
}

pub fn additive_from(values: &[PairValues]) -> AdditiveFit {
    let pairs: Vec<(usize, usize)> = values.iter().map(|v| v.0).collect();
    let jk: Vec<(f64, f64)> = values.iter().map(|v| (v.1[0], v.1[2])).collect();
    additive_fit_values(&jk, &pairs)
}

/// `2 lambda0 + 2 c log(2 c0 c / lambda0)`.
pub fn additive_constant(lambda0: f64, c0: f64, c: f64) -> f64 {
    2.0 * lambda0 + 2.0 * c * (2.0 * c0 * c / lambda0).ln()
}

/// `u (exp(2 c0 / u) - 1)`.
pub fn c6_objective(c0: f64, u: f64) -> f64 {
    u * (2.0 * c0 / u).exp_m1()
}

/// `2 (e^c0 - 1)`, the value of the objective at `u = 2`.
pub fn c6_closed_form(c0: f64) -> f64 {
    2.0 * c0.exp_m1()
}

/// Numeric maximum of [`c6_objective`] over `u` in `[2, 1e6]`: a log grid
/// followed by golden-section refinement around the best grid point.
/// Returns `(argmax, max)`.
pub fn c6_numeric(c0: f64) -> (f64, f64) {
    const LO: f64 = 2.0;
    const HI: f64 = 1e6;
    const GRID: usize = 4000;
    let at = |i: usize| LO * (HI / LO).powf(i as f64 / GRID as f64);
    let mut best = (LO, c6_objective(c0, LO));
    let mut best_i = 0;
    for i in 1..=GRID {
        let u = at(i);
        let v = c6_objective(c0, u);
        if v > best.1 {
            best = (u, v);
            best_i = i;
        }
    }
    let (mut a, mut b) = (at(best_i.saturating_sub(1)), at((best_i + 1).min(GRID)));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = b - phi * (b - a);
        let m2 = a + phi * (b - a);
        if c6_objective(c0, m1) >= c6_objective(c0, m2) {
            b = m2;
        } else {
            a = m1;
        }
        if b - a <= 1e-15 * b {
            break;
        }
    }
    for u in [a, b] {
        let v = c6_objective(c0, u);
        if v > best.1 {
            best = (u, v);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "trend", rename_all = "snake_case")]
pub enum Refinement {
    Stable { growth: f64 },
    Diverges { growth: f64 },
}

/// Classifies a constant measured at successively finer meshes: it
/// diverges when every successive ratio is at least [`DIVERGENCE_FACTOR`].
/// `growth` is the smallest successive ratio.
pub fn classify_refinement(values: &[f64]) -> Refinement {
    let growth = values
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(f64::INFINITY, f64::min);
    if values.len() >= 2 && growth >= DIVERGENCE_FACTOR {
        Refinement::Diverges { growth }
    } else {
        Refinement::Stable {
            growth: if growth.is_finite() { growth } else { 1.0 },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DomainConstants {
    pub c_uniform: f64,
    pub c_qh: f64,
    pub c_qh_upper: f64,
    pub quasiconvex: Vec<QuasiconvexEntry>,
    pub annular: AnnularSummary,
    pub additive: AdditiveSummary,
    pub witnesses: ConstantWitnesses,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnularSummary {
    /// Smallest passing grid value; `None` means every grid value fails.
    pub c: Option<f64>,
    pub pass: bool,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdditiveSummary {
    pub c: f64,
    pub cprime: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantWitnesses {
    pub uniform: Option<UniformityWitness>,
    pub qh: Option<[usize; 2]>,
    pub qh_upper: Option<[usize; 2]>,
    pub additive: Option<[usize; 2]>,
    pub annular: Option<AnnularWitness>,
}

pub const ANNULAR_GRID: [f64; 6] = [1.5, 2.0, 3.0, 4.0, 6.0, 8.0];

/// All constants of a meshed domain. Annular convexity is tested on the
/// interior samples with the mesh graph, at up to eight evenly spaced
/// centers and radii `diam / 16, diam / 8, diam / 4`.
pub fn domain_constants(md: &MeshedDomain, sampling: PairSampling) -> Result<DomainConstants> {
    let dom = md.domain();
    let pairs = sample_pairs(dom, sampling);
    let uniform = uniformity_on_pairs(md, &pairs, &CurveKind::ALL)?;
    let values = pair_values(md, &pairs)?;
    let qh = qh_uniformity_from(&values);
    let additive = additive_from(&values);
    let quasiconvex = quasiconvexity_estimate(md, &LAMBDA_GRID);
    let interior = dom.interior();
    let n = interior.len();
    let dist = |a: usize, b: usize| dom.dist(interior[a], interior[b]);
    let diam = (0..n).map(|b| dist(0, b)).fold(0.0, f64::max) * 2.0;
    let step = n.div_ceil(8).max(1);
    let centers: Vec<usize> = (0..n).step_by(step).collect();
    let radii = [diam / 16.0, diam / 8.0, diam / 4.0];
    let (annular_c, report) = annular_constant(md.mesh().graph(), &dist, &ANNULAR_GRID, &radii, &centers)?;
    let annular_witness = report.witness.map(|w| AnnularWitness {
        center: interior[w.center],
        pair: [interior[w.pair[0]], interior[w.pair[1]]],
        ..w
    });
    Ok(DomainConstants {
        c_uniform: uniform.c,
        c_qh: qh.c_qh,
        c_qh_upper: qh.c_qh_upper,
        quasiconvex,
        annular: AnnularSummary {
            c: annular_c,
            pass: annular_c.is_some(),
            status: report.status,
        },
        additive: AdditiveSummary {
            c: additive.c,
            cprime: additive.cprime,
        },
        witnesses: ConstantWitnesses {
            uniform: uniform.witness,
            qh: qh.witness,
            qh_upper: qh.witness_upper,
            additive: additive.witness,
            annular: annular_witness,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::MeshParams;
    use crate::metric::FiniteMetricSpace;

    fn halfline(ratio: f64, lo: i32, hi: i32) -> MeshedDomain {
        let mut pts = vec![vec![0.0]];
        pts.extend((lo..=hi).map(|i| vec![ratio.powi(i)]));
        let n = pts.len();
        let dom = DomainSpace::new(
            FiniteMetricSpace::euclidean(&pts).unwrap(),
            (1..n).collect(),
            vec![0],
            MeshParams { beta: 0.5, k: 2 },
        )
        .unwrap();
        MeshedDomain::new(dom).unwrap()
    }

    #[test]
    fn monotone_halfline_path_scores_one() {
        let pts: Vec<Vec<f64>> = [0.0, 1.0, 1.5, 2.0, 2.5, 3.0].iter().map(|&x| vec![x]).collect();
        let dom = DomainSpace::new(
            FiniteMetricSpace::euclidean(&pts).unwrap(),
            (1..6).collect(),
            vec![0],
            MeshParams::default(),
        )
        .unwrap();
        let s = curve_score(&dom, &[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(s.turning, 1.0);
        assert_eq!(s.cigar, 0.5);
        assert_eq!(s.score, 1.0);
        assert_eq!(curve_score(&dom, &[3]).unwrap().score, 1.0);
    }

    #[test]
    fn detour_near_the_boundary_scores_high() {
        let pts = vec![vec![0.0, 0.0], vec![-1.0, 1.0], vec![0.0, 0.01], vec![1.0, 1.0]];
        let dom = DomainSpace::new(
            FiniteMetricSpace::euclidean(&pts).unwrap(),
            vec![1, 2, 3],
            vec![0],
            MeshParams::default(),
        )
        .unwrap();
        let s = curve_score(&dom, &[1, 2, 3]).unwrap();
        assert!(s.cigar > 100.0);
        assert_eq!(s.score, s.cigar);
    }

    #[test]
    fn halfline_constants() {
        let md = halfline(1.05, -40, 40);
        let est = uniformity_estimate(&md, PairSampling::default(), &CurveKind::ALL).unwrap();
        assert!(est.c >= 1.0 && est.c <= 1.1, "{}", est.c);
        let w = est.witness.unwrap();
        let again = curve_score(md.domain(), &w.score.curve).unwrap();
        assert_eq!(again.score, est.c);
        let qh = qh_uniformity(&md, PairSampling::default()).unwrap();
        assert!(qh.c_qh_upper >= 1.0);
        assert!((qh.c_qh - 1.0).abs() < 0.01, "{}", qh.c_qh);
        let fit = additive_fit(&md, PairSampling::default()).unwrap();
        assert_eq!(fit.c, 1.0);
        assert!(fit.cprime < 0.01);
    }

    #[test]
    fn fewer_candidates_never_lower_the_estimate() {
        let md = halfline(1.1, -20, 20);
        let all = uniformity_estimate(&md, PairSampling::default(), &CurveKind::ALL).unwrap();
        let one = uniformity_estimate(&md, PairSampling::default(), &[CurveKind::QhUpper]).unwrap();
        assert!(one.c >= all.c);
    }

    #[test]
    fn c6_matches_closed_form() {
        for c0 in [1.0, 2.0, 4.0] {
            let (u, v) = c6_numeric(c0);
            assert_eq!(u, 2.0);
            assert!((v - c6_closed_form(c0)).abs() <= 1e-9 * c6_closed_form(c0));
        }
    }

    #[test]
    fn refinement_classes() {
        assert!(matches!(classify_refinement(&[1.0, 1.4, 2.0]), Refinement::Diverges { .. }));
        assert!(matches!(classify_refinement(&[1.0, 1.4, 1.5]), Refinement::Stable { .. }));
        assert!(matches!(classify_refinement(&[1.0]), Refinement::Stable { .. }));
    }

    fn line_graph(xs: &[f64]) -> WeightedGraph {
        WeightedGraph::knn(xs.len(), 2, |i, j| (xs[i] - xs[j]).abs(), |_, _, _| true)
    }

    #[test]
    fn the_line_is_not_annular_convex() {
        let xs: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.1).collect();
        let g = line_graph(&xs);
        let dist = |a: usize, b: usize| (xs[a] - xs[b]).abs();
        let r = annular_convexity_check(&g, &dist, 10.0, &[1.0], &[40]).unwrap();
        assert_eq!(r.status, CheckStatus::Fail);
        assert_eq!(r.witness.unwrap().length, None);
        let far = annular_convexity_check(&g, &dist, 10.0, &[100.0], &[40]).unwrap();
        assert_eq!(far.status, CheckStatus::Vacuous);
    }

    #[test]
    fn the_plane_grid_is_annular_convex() {
        let mut pts = Vec::new();
        for i in -20..=20 {
            for j in -20..=20 {
                pts.push([i as f64 * 0.1, j as f64 * 0.1]);
            }
        }
        let dist = |a: usize, b: usize| ((pts[a][0] - pts[b][0]).powi(2) + (pts[a][1] - pts[b][1]).powi(2)).sqrt();
        let g = WeightedGraph::knn(pts.len(), 8, dist, |_, _, _| true);
        let center = pts.len() / 2;
        let r = annular_convexity_check(&g, &dist, 6.0, &[0.5, 0.9], &[center]).unwrap();
        assert_eq!(r.status, CheckStatus::Pass);
        assert!(r.pairs > 1000);
    }
}
