//! Sphericalization and inversion of finite metric spaces.
//!
//! Both constructions start from a base weight (`s_p` or `f_p`) that need
//! not satisfy the triangle inequality, and take the chain metric: the
//! infimum of summed base weights over finite chains of points. Chains are
//! drawn from the finite point set only, so the result can only be larger
//! than the continuum infimum; every inequality checked below survives that
//! restriction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpace;
use crate::error::{Error, Result};
use crate::metric::{tolerance_at, DistanceMatrix, Distances, FiniteMetricSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointLabel {
    Point(usize),
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Sphericalize,
    Invert,
}

/// Base weight `s_p` or `f_p` over the transformed point set.
#[derive(Debug, Clone)]
pub struct BaseWeight {
    pub kind: TransformKind,
    /// Base point, as an id of the source space.
    pub p: usize,
    pub labels: Vec<PointLabel>,
    pub values: DistanceMatrix,
}

/// `s_p(x, y) = d(x, y) / ((1 + d(x, p)) (1 + d(y, p)))`, with
/// `s_p(x, inf) = 1 / (1 + d(x, p))`, over `X` followed by `inf`.
pub fn spherical_base<D: Distances + ?Sized>(space: &D, p: usize) -> Result<BaseWeight> {
    let n = space.len();
    if p >= n {
        return Err(Error::UnknownPoint(p));
    }
    let mut labels: Vec<PointLabel> = (0..n).map(PointLabel::Point).collect();
    labels.push(PointLabel::Infinity);
    let factor: Vec<f64> = (0..n).map(|x| 1.0 + space.dist(x, p)).collect();
    let values = DistanceMatrix::from_fn(n + 1, |a, b| match (a == n, b == n) {
        (true, true) => 0.0,
        (true, false) => 1.0 / factor[b],
        (false, true) => 1.0 / factor[a],
        (false, false) => {
            if a == b {
                0.0
            } else {
                space.dist(a, b) / (factor[a] * factor[b])
            }
        }
    });
    Ok(BaseWeight {
        kind: TransformKind::Sphericalize,
        p,
        labels,
        values,
    })
}

/// `f_p(x, y) = d(x, y) / (d(x, p) d(y, p))` over `X \ {p}`, with
/// `f_p(x, inf) = 1 / d(x, p)` when `unbounded` appends `inf`.
pub fn inversive_base<D: Distances + ?Sized>(space: &D, p: usize, unbounded: bool) -> Result<BaseWeight> {
    let n = space.len();
    if p >= n {
        return Err(Error::UnknownPoint(p));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(
            "inversion needs at least two points".into(),
        ));
    }
    let mut labels: Vec<PointLabel> = (0..n).filter(|&x| x != p).map(PointLabel::Point).collect();
    if unbounded {
        labels.push(PointLabel::Infinity);
    }
    let to_p: Vec<f64> = (0..n).map(|x| space.dist(x, p)).collect();
    if let Some(x) = (0..n).find(|&x| x != p && to_p[x] <= 0.0) {
        return Err(Error::RepeatedPoints(vec![x, p]));
    }
    let values = DistanceMatrix::from_fn(labels.len(), |a, b| match (labels[a], labels[b]) {
        (PointLabel::Infinity, PointLabel::Infinity) => 0.0,
        (PointLabel::Infinity, PointLabel::Point(y)) | (PointLabel::Point(y), PointLabel::Infinity) => {
            1.0 / to_p[y]
        }
        (PointLabel::Point(x), PointLabel::Point(y)) => {
            if x == y {
                0.0
            } else {
                space.dist(x, y) / (to_p[x] * to_p[y])
            }
        }
    });
    Ok(BaseWeight {
        kind: TransformKind::Invert,
        p,
        labels,
        values,
    })
}

/// All-pairs shortest paths over the complete graph weighted by `base`.
///
/// Floyd-Warshall with the relaxation of each row done in parallel. The
/// inner loop is a branch-free min over contiguous rows.
pub fn chain_metric(base: &DistanceMatrix) -> DistanceMatrix {
    let n = base.n();
    let mut d = base.clone();
    if n == 0 {
        return d;
    }
    let relax = |row: &mut [f64], k: usize, row_k: &[f64]| {
        let dik = row[k];
        for (dij, &dkj) in row.iter_mut().zip(row_k) {
            let via = dik + dkj;
            *dij = if via < *dij { via } else { *dij };
        }
    };
    let parallel = rayon::current_num_threads() > 1;
    let mut row_k = vec![0.0; n];
    for k in 0..n {
        row_k.copy_from_slice(d.row(k));
        let rows = d.as_mut_slice();
        if parallel {
            rows.par_chunks_mut(n)
                .with_min_len(64)
                .for_each(|row| relax(row, k, &row_k));
        } else {
            rows.chunks_mut(n).for_each(|row| relax(row, k, &row_k));
        }
    }
    d
}

#[derive(Debug, Clone)]
pub struct TransformedSpace {
    base: BaseWeight,
    chain: DistanceMatrix,
}

/// Extreme values of `chain / base` over off-diagonal pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichReport {
    /// Pair (indices into the transformed point set) with the smallest ratio.
    pub worst_pair: [usize; 2],
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Pairs outside `[base / 4, base]` beyond tolerance.
    pub violations: usize,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

impl TransformedSpace {
    pub fn from_base(base: BaseWeight) -> Self {
        let chain = chain_metric(&base.values);
        Self { base, chain }
    }

    pub fn base(&self) -> &BaseWeight {
        &self.base
    }

    pub fn labels(&self) -> &[PointLabel] {
        &self.base.labels
    }

    pub fn chain(&self) -> &DistanceMatrix {
        &self.chain
    }

    pub fn len(&self) -> usize {
        self.chain.n()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.n() == 0
    }

    pub fn index_of(&self, label: PointLabel) -> Option<usize> {
        self.base.labels.iter().position(|&l| l == label)
    }

    /// Map from source ids to indices in the transformed set.
    pub fn index_map(&self, source_len: usize) -> Vec<Option<usize>> {
        let mut map = vec![None; source_len];
        for (i, l) in self.base.labels.iter().enumerate() {
            if let PointLabel::Point(x) = l {
                if *x < source_len {
                    map[*x] = Some(i);
                }
            }
        }
        map
    }

    pub fn to_space(&self) -> FiniteMetricSpace {
        FiniteMetricSpace::from_matrix(self.chain.clone()).expect("chain metric is finite and nonnegative")
    }

    pub fn sandwich(&self) -> SandwichReport {
        let n = self.len();
        let mut report = SandwichReport {
            worst_pair: [0, 0],
            min_ratio: f64::INFINITY,
            max_ratio: 0.0,
            violations: 0,
        };
        for i in 0..n {
            for j in i + 1..n {
                let b = self.base.values.get(i, j);
                let c = self.chain.get(i, j);
                let tol = tolerance_at(b);
                if c < 0.25 * b - tol || c > b + tol {
                    report.violations += 1;
                }
                if b > 0.0 {
                    let ratio = c / b;
                    if ratio < report.min_ratio {
                        report.min_ratio = ratio;
                        report.worst_pair = [i, j];
                    }
                    report.max_ratio = report.max_ratio.max(ratio);
                }
            }
        }
        report
    }
}

impl Distances for TransformedSpace {
    fn len(&self) -> usize {
        self.chain.n()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.chain.get(i, j)
    }
}

/// `(X u {inf}, d_hat_p)`.
pub fn sphericalize<D: Distances + ?Sized>(space: &D, p: usize) -> Result<TransformedSpace> {
    Ok(TransformedSpace::from_base(spherical_base(space, p)?))
}

/// `(X \ {p}, d_p)`, with `inf` appended when `unbounded` is set. A finite
/// sample cannot decide boundedness, so the caller says which case applies.
pub fn invert<D: Distances + ?Sized>(space: &D, p: usize, unbounded: bool) -> Result<TransformedSpace> {
    Ok(TransformedSpace::from_base(inversive_base(space, p, unbounded)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundTrip {
    pub pass: bool,
    /// `max(d'/d, d/d')` over all pairs.
    pub worst_ratio: f64,
    pub worst_pair: [usize; 2],
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Sphericalize at `p`, then invert the result at `inf`, and compare the
/// metric obtained on `X` with the original: it must be 16-bilipschitz.
pub fn roundtrip_check<D: Distances + ?Sized>(space: &D, p: usize) -> Result<RoundTrip> {
    let n = space.len();
    let sph = sphericalize(space, p)?;
    let inf = sph.index_of(PointLabel::Infinity).expect("sphericalization adds inf");
    let back = invert(&sph, inf, false)?;
    // labels of `back` are Point(i) with i indexing `sph`, whose first n
    // entries are the original points in order
    let idx = back.index_map(n);
    let mut out = RoundTrip {
        pass: true,
        worst_ratio: 0.0,
        worst_pair: [0, 0],
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
    };
    for x in 0..n {
        for y in x + 1..n {
            let d = space.dist(x, y);
            let dd = back.dist(idx[x].expect("point kept"), idx[y].expect("point kept"));
            let ratio = dd / d;
            out.min_ratio = out.min_ratio.min(ratio);
            out.max_ratio = out.max_ratio.max(ratio);
            let worst = ratio.max(1.0 / ratio);
            if worst > out.worst_ratio {
                out.worst_ratio = worst;
                out.worst_pair = [x, y];
            }
            let tol = tolerance_at(16.0 * d);
            if dd > 16.0 * d + tol || 16.0 * dd < d - tol {
                out.pass = false;
            }
        }
    }
    if n < 2 {
        out.worst_ratio = 1.0;
        out.min_ratio = 1.0;
        out.max_ratio = 1.0;
    }
    Ok(out)
}

/// A domain carried into a transformed space: same interior samples, and
/// boundary `(boundary \ {p}) u {inf}` as far as those points exist there.
#[derive(Debug, Clone)]
pub struct TransformedDomain {
    pub domain: DomainSpace,
    pub space: TransformedSpace,
    /// Source point id for every point of the new domain.
    pub labels: Vec<PointLabel>,
}

impl TransformedDomain {
    /// Id in the new domain of a source point.
    pub fn id_of(&self, source: usize) -> Option<usize> {
        self.space.index_of(PointLabel::Point(source))
    }
}

fn carry_domain(dom: &DomainSpace, space: TransformedSpace) -> Result<TransformedDomain> {
    let map = space.index_map(dom.ambient().len());
    let interior = dom
        .interior()
        .iter()
        .map(|&x| {
            map[x].ok_or_else(|| {
                Error::InvalidParameter(format!("interior point {x} is removed by the transform"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut boundary: Vec<usize> = dom.boundary().iter().filter_map(|&b| map[b]).collect();
    if let Some(inf) = space.index_of(PointLabel::Infinity) {
        boundary.push(inf);
    }
    let domain = DomainSpace::new(space.to_space(), interior, boundary, dom.mesh_params())?;
    Ok(TransformedDomain {
        labels: space.labels().to_vec(),
        domain,
        space,
    })
}

pub fn sphericalize_domain(dom: &DomainSpace, p: usize) -> Result<TransformedDomain> {
    carry_domain(dom, sphericalize(dom.ambient(), p)?)
}

pub fn invert_domain(dom: &DomainSpace, p: usize, unbounded: bool) -> Result<TransformedDomain> {
    if dom.is_interior(p) {
        return Err(Error::InvalidParameter(format!(
            "cannot invert a domain at its interior point {p}"
        )));
    }
    carry_domain(dom, invert(dom.ambient(), p, unbounded)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Infimum over all simple chains, by exhaustive search.
    fn brute_force_chain(base: &DistanceMatrix) -> DistanceMatrix {
        fn dfs(base: &DistanceMatrix, cur: usize, acc: f64, seen: &mut Vec<bool>, best: &mut [f64]) {
            for next in 0..base.n() {
                if seen[next] {
                    continue;
                }
                let total = acc + base.get(cur, next);
                if total < best[next] {
                    best[next] = total;
                }
                seen[next] = true;
                dfs(base, next, total, seen, best);
                seen[next] = false;
            }
        }
        let n = base.n();
        let mut out = DistanceMatrix::zeros(n);
        for s in 0..n {
            let mut best = vec![f64::INFINITY; n];
            best[s] = 0.0;
            let mut seen = vec![false; n];
            seen[s] = true;
            dfs(base, s, 0.0, &mut seen, &mut best);
            for t in 0..n {
                out.set(s, t, best[t]);
            }
        }
        out
    }

    #[test]
    fn three_point_chain_example() {
        // a, b, c, p with d(a,b)=d(b,c)=1, d(a,c)=2, d(p,a)=d(p,c)=1, d(p,b)=2
        let space = FiniteMetricSpace::from_rows(&[
            vec![0.0, 1.0, 2.0, 1.0],
            vec![1.0, 0.0, 1.0, 2.0],
            vec![2.0, 1.0, 0.0, 1.0],
            vec![1.0, 2.0, 1.0, 0.0],
        ])
        .unwrap();
        let t = invert(&space, 3, false).unwrap();
        assert_eq!(t.labels(), &[PointLabel::Point(0), PointLabel::Point(1), PointLabel::Point(2)]);
        assert_eq!(t.base().values.get(0, 2), 2.0);
        assert_eq!(t.dist(0, 2), 1.0);
        let brute = brute_force_chain(&t.base().values);
        assert_eq!(brute.get(0, 2), 1.0);
        assert_eq!(&brute, t.chain());
    }

    #[test]
    fn floyd_warshall_matches_brute_force() {
        let mut seed = 7u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let n = 6;
            let mut m = DistanceMatrix::zeros(n);
            for i in 0..n {
                for j in i + 1..n {
                    let v = 0.1 + next();
                    m.set(i, j, v);
                    m.set(j, i, v);
                }
            }
            let fw = chain_metric(&m);
            let bf = brute_force_chain(&m);
            for i in 0..n {
                for j in 0..n {
                    assert!((fw.get(i, j) - bf.get(i, j)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn euclidean_inversion_is_exact() {
        let space = FiniteMetricSpace::euclidean(&[vec![0.0], vec![1.0], vec![2.0], vec![4.0]]).unwrap();
        let t = invert(&space, 0, false).unwrap();
        // labels are points 1, 2, 4
        assert!((t.dist(0, 2) - 0.75).abs() < 1e-15);
        for i in 0..3 {
            for j in 0..3 {
                assert!((t.dist(i, j) - t.base().values.get(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sphericalization_example() {
        let space = FiniteMetricSpace::euclidean(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let t = sphericalize(&space, 0).unwrap();
        assert_eq!(t.base().values.get(1, 2), 0.25);
        let d = t.dist(1, 2);
        assert!((0.0625..=0.25).contains(&d));
        let inf = t.index_of(PointLabel::Infinity).unwrap();
        for x in 0..3 {
            let s = 1.0 / (1.0 + space.dist(x, 0));
            assert!(t.dist(x, inf) <= s && t.dist(x, inf) >= 0.25 * s);
            if x != 0 {
                assert!(t.dist(0, x) > 0.0);
            }
        }
        assert!(t.sandwich().holds());
    }

    #[test]
    fn unbounded_inversion_appends_infinity() {
        let space = FiniteMetricSpace::euclidean(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let t = invert(&space, 0, true).unwrap();
        assert_eq!(t.labels().last(), Some(&PointLabel::Infinity));
        assert_eq!(t.base().values.get(1, 2), 0.5);
        assert!(t.sandwich().holds());
        assert!(invert(&FiniteMetricSpace::euclidean(&[vec![0.0]]).unwrap(), 0, false).is_err());
    }

    #[test]
    fn roundtrip_on_two_points() {
        let space = FiniteMetricSpace::euclidean(&[vec![0.0], vec![1.0]]).unwrap();
        let rt = roundtrip_check(&space, 0).unwrap();
        assert!(rt.pass);
        assert_eq!(rt.worst_pair, [0, 1]);
    }
}
