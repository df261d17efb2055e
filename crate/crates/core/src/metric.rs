//! Finite metric spaces.
//!
//! A space is either a list of coordinates in R^n (n <= 3) together with an
//! ambient rule for turning coordinates into distances, or an explicit
//! symmetric distance matrix. Point ids are the indices `0..len()`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute triangle-inequality tolerance for distances of unit scale.
///
/// Larger distances are compared relative to their own magnitude.
pub const METRIC_TOLERANCE: f64 = 1e-12;

/// Anything that can report distances between indexed points.
///
/// Implemented by metric spaces as well as by raw weight matrices, so that
/// cross ratios can be taken of base weights that are not metrics.
pub trait Distances: Sync {
    fn len(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense row-major square matrix of nonnegative reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidSpace(format!(
                    "matrix row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }
}

impl Distances for DistanceMatrix {
    fn len(&self) -> usize {
        self.n
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }
}

/// How coordinates are turned into distances.
#[derive(Debug, Clone, PartialEq)]
pub enum Ambient {
    Euclidean,
    /// `|x - y|^epsilon`, `0 < epsilon < 1`.
    Snowflake(f64),
    /// Distance along a curve: `|s_i - s_j|` for arclength parameters `s`.
    CurveArclength(Vec<f64>),
}

#[derive(Debug, Clone)]
enum Geometry {
    Coordinates {
        dim: usize,
        coords: Vec<f64>,
        ambient: Ambient,
    },
    Matrix(DistanceMatrix),
}

#[derive(Debug, Clone)]
pub struct FiniteMetricSpace {
    geometry: Geometry,
}

fn flatten(points: &[Vec<f64>]) -> Result<(usize, Vec<f64>)> {
    let dim = points.first().map(Vec::len).unwrap_or(0);
    if points.is_empty() {
        return Err(Error::InvalidSpace("no points".into()));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidSpace(format!(
            "coordinates must have dimension 1, 2 or 3, got {dim}"
        )));
    }
    let mut coords = Vec::with_capacity(points.len() * dim);
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::InvalidSpace(format!(
                "point {i} has dimension {}, expected {dim}",
                p.len()
            )));
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSpace(format!("point {i} is not finite")));
        }
        coords.extend_from_slice(p);
    }
    Ok((dim, coords))
}

impl FiniteMetricSpace {
    pub fn euclidean(points: &[Vec<f64>]) -> Result<Self> {
        let (dim, coords) = flatten(points)?;
        Ok(Self {
            geometry: Geometry::Coordinates {
                dim,
                coords,
                ambient: Ambient::Euclidean,
            },
        })
    }

    pub fn snowflake(points: &[Vec<f64>], epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "snowflake exponent must lie in (0, 1), got {epsilon}"
            )));
        }
        let (dim, coords) = flatten(points)?;
        Ok(Self {
            geometry: Geometry::Coordinates {
                dim,
                coords,
                ambient: Ambient::Snowflake(epsilon),
            },
        })
    }

    /// Points listed in order along a curve. Without explicit arclength
    /// parameters the cumulative polyline length is used.
    pub fn curve(points: &[Vec<f64>], arclength: Option<Vec<f64>>) -> Result<Self> {
        let (dim, coords) = flatten(points)?;
        let n = points.len();
        let arclength = match arclength {
            Some(s) => {
                if s.len() != n || s.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSpace(format!(
                        "curve needs {n} finite arclength parameters, got {}",
                        s.len()
                    )));
                }
                s
            }
            None => {
                let mut s = Vec::with_capacity(n);
                let mut acc = 0.0;
                s.push(0.0);
                for i in 1..n {
                    acc += euclid(&coords[(i - 1) * dim..i * dim], &coords[i * dim..(i + 1) * dim]);
                    s.push(acc);
                }
                s
            }
        };
        Ok(Self {
            geometry: Geometry::Coordinates {
                dim,
                coords,
                ambient: Ambient::CurveArclength(arclength),
            },
        })
    }

    /// Explicit distance matrix. Only shape, finiteness and sign are checked
    /// here; the metric axioms are checked by [`validate_metric`].
    pub fn from_matrix(matrix: DistanceMatrix) -> Result<Self> {
        if matrix.n() == 0 {
            return Err(Error::InvalidSpace("no points".into()));
        }
        if let Some(pos) = matrix
            .as_slice()
            .iter()
            .position(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::InvalidSpace(format!(
                "matrix entry ({}, {}) is negative or not finite",
                pos / matrix.n(),
                pos % matrix.n()
            )));
        }
        Ok(Self {
            geometry: Geometry::Matrix(matrix),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_matrix(DistanceMatrix::from_rows(rows)?)
    }

    pub fn len(&self) -> usize {
        match &self.geometry {
            Geometry::Coordinates { dim, coords, .. } => coords.len() / dim,
            Geometry::Matrix(m) => m.n(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The ambient rule, or `None` in matrix mode.
    pub fn ambient(&self) -> Option<&Ambient> {
        match &self.geometry {
            Geometry::Coordinates { ambient, .. } => Some(ambient),
            Geometry::Matrix(_) => None,
        }
    }

    pub fn matrix(&self) -> Option<&DistanceMatrix> {
        match &self.geometry {
            Geometry::Matrix(m) => Some(m),
            Geometry::Coordinates { .. } => None,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.geometry {
            Geometry::Coordinates { dim, .. } => Some(*dim),
            Geometry::Matrix(_) => None,
        }
    }

    pub fn point(&self, i: usize) -> Option<&[f64]> {
        match &self.geometry {
            Geometry::Coordinates { dim, coords, .. } => coords.get(i * dim..(i + 1) * dim),
            Geometry::Matrix(_) => None,
        }
    }

    pub fn points(&self) -> Option<Vec<Vec<f64>>> {
        match &self.geometry {
            Geometry::Coordinates { dim, coords, .. } => {
                Some(coords.chunks(*dim).map(<[f64]>::to_vec).collect())
            }
            Geometry::Matrix(_) => None,
        }
    }

    /// Full distance matrix, materialized.
    pub fn to_matrix(&self) -> DistanceMatrix {
        match &self.geometry {
            Geometry::Matrix(m) => m.clone(),
            Geometry::Coordinates { .. } => DistanceMatrix::from_fn(self.len(), |i, j| self.dist(i, j)),
        }
    }

    /// Same space restricted to `ids`, re-indexed in the given order.
    pub fn subspace(&self, ids: &[usize]) -> Result<Self> {
        if let Some(&bad) = ids.iter().find(|&&i| i >= self.len()) {
            return Err(Error::UnknownPoint(bad));
        }
        let geometry = match &self.geometry {
            Geometry::Coordinates {
                dim,
                coords,
                ambient,
            } => {
                let mut sub = Vec::with_capacity(ids.len() * dim);
                for &i in ids {
                    sub.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
                }
                let ambient = match ambient {
                    Ambient::CurveArclength(s) => {
                        Ambient::CurveArclength(ids.iter().map(|&i| s[i]).collect())
                    }
                    other => other.clone(),
                };
                Geometry::Coordinates {
                    dim: *dim,
                    coords: sub,
                    ambient,
                }
            }
            Geometry::Matrix(m) => {
                Geometry::Matrix(DistanceMatrix::from_fn(ids.len(), |a, b| m.get(ids[a], ids[b])))
            }
        };
        Ok(Self { geometry })
    }
}

#[inline]
fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl Distances for FiniteMetricSpace {
    fn len(&self) -> usize {
        FiniteMetricSpace::len(self)
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.geometry {
            Geometry::Matrix(m) => m.get(i, j),
            Geometry::Coordinates {
                dim,
                coords,
                ambient,
            } => {
                if i == j {
                    return 0.0;
                }
                match ambient {
                    Ambient::CurveArclength(s) => (s[i] - s[j]).abs(),
                    Ambient::Euclidean => {
                        euclid(&coords[i * dim..(i + 1) * dim], &coords[j * dim..(j + 1) * dim])
                    }
                    Ambient::Snowflake(eps) => {
                        euclid(&coords[i * dim..(i + 1) * dim], &coords[j * dim..(j + 1) * dim])
                            .powf(*eps)
                    }
                }
            }
        }
    }
}

/// Tolerance used when comparing a distance of magnitude `scale`.
#[inline]
pub fn tolerance_at(scale: f64) -> f64 {
    METRIC_TOLERANCE * scale.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum Violation {
    NonzeroDiagonal { id: usize, value: f64 },
    Asymmetric { i: usize, j: usize, slack: f64 },
    NotPositive { i: usize, j: usize },
    /// `d(i, j) > d(i, via) + d(via, j)` by `slack`.
    Triangle { i: usize, j: usize, via: usize, slack: f64 },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct MetricValidation {
    /// Total number of violations found; only the first
    /// [`MetricValidation::MAX_LISTED`] are listed.
    pub total: usize,
    pub violations: Vec<Violation>,
}

impl MetricValidation {
    pub const MAX_LISTED: usize = 1000;

    pub fn is_ok(&self) -> bool {
        self.total == 0
    }

    fn push(&mut self, v: Violation) {
        self.total += 1;
        if self.violations.len() < Self::MAX_LISTED {
            self.violations.push(v);
        }
    }
}

/// Check the metric axioms.
///
/// Coordinate spaces satisfy symmetry and the triangle inequality by
/// construction, so only positivity (distinct points) is scanned there.
/// Matrix spaces get the full O(n^3) triangle scan.
pub fn validate_metric(space: &FiniteMetricSpace) -> MetricValidation {
    let n = space.len();
    let mut report = MetricValidation::default();
    match &space.geometry {
        Geometry::Coordinates { .. } => {
            for i in 0..n {
                for j in i + 1..n {
                    if space.dist(i, j) <= 0.0 {
                        report.push(Violation::NotPositive { i, j });
                    }
                }
            }
        }
        Geometry::Matrix(m) => {
            for i in 0..n {
                let v = m.get(i, i);
                if v != 0.0 {
                    report.push(Violation::NonzeroDiagonal { id: i, value: v });
                }
            }
            for i in 0..n {
                for j in i + 1..n {
                    let (a, b) = (m.get(i, j), m.get(j, i));
                    if (a - b).abs() > tolerance_at(a.max(b)) {
                        report.push(Violation::Asymmetric {
                            i,
                            j,
                            slack: (a - b).abs(),
                        });
                    }
                    if a <= 0.0 {
                        report.push(Violation::NotPositive { i, j });
                    }
                }
            }
            for i in 0..n {
                let row_i = m.row(i);
                for j in i + 1..n {
                    let dij = row_i[j];
                    let tol = tolerance_at(dij);
                    for via in 0..n {
                        if via == i || via == j {
                            continue;
                        }
                        let slack = dij - (row_i[via] + m.get(via, j));
                        if slack > tol {
                            report.push(Violation::Triangle { i, j, via, slack });
                        }
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_triangle_violation_is_listed() {
        let space = FiniteMetricSpace::from_rows(&[
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 1.0],
            vec![3.0, 1.0, 0.0],
        ])
        .unwrap();
        let report = validate_metric(&space);
        assert_eq!(report.total, 1);
        assert_eq!(
            report.violations[0],
            Violation::Triangle {
                i: 0,
                j: 2,
                via: 1,
                slack: 1.0
            }
        );
    }

    #[test]
    fn euclidean_points_are_a_metric() {
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()])
            .collect();
        let space = FiniteMetricSpace::euclidean(&pts).unwrap();
        assert!(validate_metric(&space).is_ok());
        // the materialized matrix passes the full scan too
        let m = FiniteMetricSpace::from_matrix(space.to_matrix()).unwrap();
        assert!(validate_metric(&m).is_ok());
    }

    #[test]
    fn snowflake_on_the_line() {
        let space = FiniteMetricSpace::snowflake(&[vec![0.0], vec![1.0], vec![4.0]], 0.5).unwrap();
        assert_eq!(space.dist(0, 2), 2.0);
        assert_eq!(space.dist(0, 1), 1.0);
        assert!((space.dist(1, 2) - 3f64.sqrt()).abs() < 1e-15);
        let m = FiniteMetricSpace::from_matrix(space.to_matrix()).unwrap();
        assert!(validate_metric(&m).is_ok());
    }

    #[test]
    fn duplicate_points_are_reported() {
        let space = FiniteMetricSpace::euclidean(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let report = validate_metric(&space);
        assert_eq!(report.violations, vec![Violation::NotPositive { i: 0, j: 1 }]);
    }

    #[test]
    fn asymmetric_and_diagonal() {
        let space =
            FiniteMetricSpace::from_rows(&[vec![0.5, 1.0], vec![2.0, 0.0]]).unwrap();
        let report = validate_metric(&space);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NonzeroDiagonal { id: 0, .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Asymmetric { i: 0, j: 1, .. })));
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(FiniteMetricSpace::euclidean(&[]).is_err());
        assert!(FiniteMetricSpace::euclidean(&[vec![0.0], vec![0.0, 1.0]]).is_err());
        assert!(FiniteMetricSpace::snowflake(&[vec![0.0]], 1.0).is_err());
        assert!(FiniteMetricSpace::from_rows(&[vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        assert!(FiniteMetricSpace::from_rows(&[vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn curve_uses_polyline_length() {
        let space =
            FiniteMetricSpace::curve(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]], None)
                .unwrap();
        assert_eq!(space.dist(0, 2), 2.0);
        let sub = space.subspace(&[2, 0]).unwrap();
        assert_eq!(sub.dist(0, 1), 2.0);
    }
}
