//! Quasihyperbolic distance `k`, the quantities `r` and `j`, and geodesics
//! on the mesh.
//!
//! `k` is the shortest path over mesh edges weighted by a quadrature of
//! `1/d(z)` along each edge. Two quadratures are offered:
//!
//! * [`QhWeightMode::Upper`]: `len / (min(d(u), d(v)) - len)`. Since `d` is
//!   1-Lipschitz, `d(z) >= min - len` on the edge, so this dominates the true
//!   line integral and the discrete `k` dominates the continuum `k`.
//! * [`QhWeightMode::Trapezoid`]: `len * (1/d(u) + 1/d(v)) / 2`. Second order,
//!   no one-sided guarantee.

use serde::{Deserialize, Serialize};

use crate::domain::DomainSpace;
use crate::error::{Error, Result};
use crate::mesh::{MeshedDomain, Weighting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QhWeightMode {
    Upper,
    Trapezoid,
}

impl QhWeightMode {
    #[inline]
    pub fn edge_weight(self, len: f64, du: f64, dv: f64) -> f64 {
        match self {
            QhWeightMode::Upper => len / (du.min(dv) - len),
            QhWeightMode::Trapezoid => len * (1.0 / du + 1.0 / dv) / 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            QhWeightMode::Upper => "upper",
            QhWeightMode::Trapezoid => "trapezoid",
        }
    }
}

impl std::str::FromStr for QhWeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(Self::Upper),
            "trapezoid" => Ok(Self::Trapezoid),
            _ => Err(Error::InvalidParameter(format!("unknown quadrature mode {s:?}"))),
        }
    }
}

/// A mesh path with its quasihyperbolic and Euclidean-style lengths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QhPath {
    /// Point ids from start to end.
    pub vertices: Vec<usize>,
    pub k_length: f64,
    pub arc_length: f64,
}

pub fn qh_distance(md: &MeshedDomain, x: usize, y: usize, mode: QhWeightMode) -> Result<f64> {
    let t = md.local(y)?;
    Ok(md.tree(x, Weighting::Qh(mode))?.dist[t])
}

pub fn qh_geodesic(md: &MeshedDomain, x: usize, y: usize, mode: QhWeightMode) -> Result<QhPath> {
    let tree = md.tree(x, Weighting::Qh(mode))?;
    let vertices = md.path_ids(&tree, y)?;
    path_lengths(md, vertices, Weighting::Qh(mode))
}

/// Attach k-length and arc-length to a mesh path given in point ids.
pub fn path_lengths(md: &MeshedDomain, vertices: Vec<usize>, w: Weighting) -> Result<QhPath> {
    let weights = md.weights(w);
    let lengths = md.weights(Weighting::Length);
    let mut k_length = 0.0;
    let mut arc_length = 0.0;
    for pair in vertices.windows(2) {
        let (u, v) = (md.local(pair[0])?, md.local(pair[1])?);
        let e = md.edge_between(u, v).ok_or_else(|| {
            Error::InvalidParameter(format!("{} and {} are not joined by a mesh edge", pair[0], pair[1]))
        })?;
        k_length += weights[e];
        arc_length += lengths[e];
    }
    Ok(QhPath {
        vertices,
        k_length,
        arc_length,
    })
}

/// `r(x, y) = d(x, y) / min(d(x), d(y))`.
pub fn relative_distance(dom: &DomainSpace, x: usize, y: usize) -> Result<f64> {
    let dx = dom.boundary_distance(x)?;
    let dy = dom.boundary_distance(y)?;
    if x == y {
        return Ok(0.0);
    }
    Ok(dom.dist(x, y) / dx.min(dy))
}

/// `j(x, y) = log(1 + r(x, y))`.
pub fn j_distance(dom: &DomainSpace, x: usize, y: usize) -> Result<f64> {
    Ok(relative_distance(dom, x, y)?.ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SmallScale {
    Pass { k: f64, bound: f64 },
    Fail { k: f64, bound: f64 },
    /// `d(x, y) / d(x)` exceeds `lambda0 / (2 c0)`.
    OutOfScope { ratio: f64, limit: f64 },
}

/// Check `k(x, y) <= 2 c0 d(x, y) / d(x)` for pairs with
/// `d(x, y) / d(x) <= lambda0 / (2 c0)` in a `(lambda0, c0)`-quasiconvex
/// domain. Upper-mode distances get the `(1 + 2 beta)` quadrature allowance.
pub fn check_small_scale(
    md: &MeshedDomain,
    x: usize,
    y: usize,
    lambda0: f64,
    c0: f64,
    mode: QhWeightMode,
) -> Result<SmallScale> {
    if !(lambda0 > 0.0 && c0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need lambda0 > 0 and c0 > 0, got ({lambda0}, {c0})"
        )));
    }
    let dom = md.domain();
    let ratio = dom.dist(x, y) / dom.boundary_distance(x)?;
    let limit = lambda0 / (2.0 * c0);
    if ratio > limit {
        return Ok(SmallScale::OutOfScope { ratio, limit });
    }
    let k = qh_distance(md, x, y, mode)?;
    let allowance = match mode {
        QhWeightMode::Upper => 1.0 + 2.0 * md.beta(),
        QhWeightMode::Trapezoid => 1.0,
    };
    let bound = allowance * 2.0 * c0 * ratio;
    Ok(if k <= bound {
        SmallScale::Pass { k, bound }
    } else {
        SmallScale::Fail { k, bound }
    })
}

/// JSON record for a single pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub pair: [usize; 2],
    pub k: f64,
    pub j: f64,
    pub r: f64,
    pub mode: QhWeightMode,
}

pub fn pair_report(md: &MeshedDomain, x: usize, y: usize, mode: QhWeightMode) -> Result<PairReport> {
    Ok(PairReport {
        pair: [x, y],
        k: qh_distance(md, x, y, mode)?,
        j: j_distance(md.domain(), x, y)?,
        r: relative_distance(md.domain(), x, y)?,
        mode,
    })
}
