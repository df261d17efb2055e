//! Deterministic generators for test domains and spaces.
//!
//! Every generator is a pure function of its parameters. Interior samples
//! keep a margin from the boundary so that each one has admissible mesh
//! edges to its grid neighbors at clearance `1/2`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainFile, DomainSpace, MeshParams};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::metric::{DistanceMatrix, Distances, FiniteMetricSpace};
use crate::sampling::rng;
use crate::transforms::{chain_metric, invert_domain, TransformedDomain};

pub const CIRCLE_SAMPLES: usize = 720;
pub const DEFAULT_ANCHORS: [f64; 2] = [2.0, 3.0];
/// Geometric refinement steps toward each endpoint of the arc.
pub const ARC_LADDER: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk {
        h: f64,
    },
    SnowflakeDisk {
        epsilon: f64,
        h: f64,
    },
    Halfline {
        ratio: f64,
        span: [i32; 2],
        #[serde(default)]
        anchors: Option<Vec<f64>>,
    },
    GridRect {
        width: f64,
        height: f64,
        h: f64,
    },
    SlitDisk {
        h: f64,
    },
    ArcExample {
        u: f64,
        n: usize,
    },
    Explicit {
        domain: DomainFile,
    },
}

impl DomainSpec {
    pub fn generate(&self) -> Result<DomainSpace> {
        match self {
            DomainSpec::Disk { h } => gen_disk(*h),
            DomainSpec::SnowflakeDisk { epsilon, h } => gen_snowflake_disk(*epsilon, *h),
            DomainSpec::Halfline { ratio, span, anchors } => gen_halfline(
                *ratio,
                *span,
                anchors.as_deref().unwrap_or(&DEFAULT_ANCHORS),
            ),
            DomainSpec::GridRect { width, height, h } => gen_grid_rect(*width, *height, *h),
            DomainSpec::SlitDisk { h } => gen_slit_disk(*h),
            DomainSpec::ArcExample { u, n } => gen_arc(*u, *n),
            DomainSpec::Explicit { domain } => DomainSpace::from_file(domain.clone()),
        }
    }

    /// Short human-readable name.
    pub fn label(&self) -> String {
        match self {
            DomainSpec::Disk { h } => format!("disk(h={h})"),
            DomainSpec::SnowflakeDisk { epsilon, h } => format!("snowflake_disk(eps={epsilon},h={h})"),
            DomainSpec::Halfline { ratio, span, .. } => format!("halfline(ratio={ratio},span={span:?})"),
            DomainSpec::GridRect { width, height, h } => format!("grid_rect({width}x{height},h={h})"),
            DomainSpec::SlitDisk { h } => format!("slit_disk(h={h})"),
            DomainSpec::ArcExample { u, n } => format!("arc_example(u={u},n={n})"),
            DomainSpec::Explicit { .. } => "explicit".into(),
        }
    }
}

fn check_spacing(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= 0.2) {
        return Err(Error::InvalidParameter(format!("spacing h must lie in (0, 0.2], got {h}")));
    }
    Ok(())
}

/// Samples at half-step angles, so none lies on a grid axis or diagonal.
fn circle(center: [f64; 2], radius: f64) -> Vec<Vec<f64>> {
    (0..CIRCLE_SAMPLES)
        .map(|k| {
            let t = 2.0 * PI * (k as f64 + 0.5) / CIRCLE_SAMPLES as f64;
            vec![center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}

/// Grid points `h * (i, j)` with `|x - center| < radius - margin`, row by row.
fn disk_grid(center: [f64; 2], radius: f64, h: f64, margin: f64) -> Vec<Vec<f64>> {
    let m = (radius / h).ceil() as i64 + 1;
    let (ci, cj) = ((center[0] / h).round() as i64, (center[1] / h).round() as i64);
    let limit = radius - margin;
    let mut pts = Vec::new();
    for j in cj - m..=cj + m {
        for i in ci - m..=ci + m {
            let (x, y) = (i as f64 * h, j as f64 * h);
            if (x - center[0]).hypot(y - center[1]) < limit {
                pts.push(vec![x, y]);
            }
        }
    }
    pts
}

fn assemble(
    ambient: impl FnOnce(&[Vec<f64>]) -> Result<FiniteMetricSpace>,
    interior: Vec<Vec<f64>>,
    boundary: Vec<Vec<f64>>,
    mesh: MeshParams,
) -> Result<DomainSpace> {
    let m = interior.len();
    let b = boundary.len();
    let mut pts = interior;
    pts.extend(boundary);
    DomainSpace::new(ambient(&pts)?, (0..m).collect(), (m..m + b).collect(), mesh)
}

/// Unit disk: grid of spacing `h` with `|x| < 1 - 2h`, boundary sampled at
/// 720 points of the unit circle.
pub fn gen_disk(h: f64) -> Result<DomainSpace> {
    disk_with(h, [0.0, 0.0], 1.0)
}

/// Disk of given center and radius, same construction as [`gen_disk`].
pub fn disk_with(h: f64, center: [f64; 2], radius: f64) -> Result<DomainSpace> {
    check_spacing(h)?;
    if !(radius > 4.0 * h) {
        return Err(Error::InvalidParameter(format!("radius {radius} too small for spacing {h}")));
    }
    assemble(
        FiniteMetricSpace::euclidean,
        disk_grid(center, radius, h, 2.0 * h),
        circle(center, radius),
        MeshParams::default(),
    )
}

/// The unit disk under `d^epsilon`. An edge of length `h` has snowflake
/// length `h^epsilon`, so the margin grows to `2^(1/epsilon) h`.
pub fn gen_snowflake_disk(epsilon: f64, h: f64) -> Result<DomainSpace> {
    check_spacing(h)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let margin = 2f64.powf(1.0 / epsilon) * h;
    if margin >= 0.5 {
        return Err(Error::InvalidParameter(format!(
            "spacing {h} leaves no interior at epsilon {epsilon}"
        )));
    }
    assemble(
        |p| FiniteMetricSpace::snowflake(p, epsilon),
        disk_grid([0.0, 0.0], 1.0, h, margin),
        circle([0.0, 0.0], 1.0),
        MeshParams::default(),
    )
}

/// `(0, inf)` sampled at `ratio^i` for `i` in `span` plus `anchors`, with
/// boundary `{0}` (point id 0). Interior ids increase with position.
pub fn gen_halfline(ratio: f64, span: [i32; 2], anchors: &[f64]) -> Result<DomainSpace> {
    if !(ratio > 1.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!("ratio must exceed 1, got {ratio}")));
    }
    if span[0] > span[1] {
        return Err(Error::InvalidParameter(format!("empty span {span:?}")));
    }
    if let Some(a) = anchors.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidParameter(format!("anchor {a} is not a positive number")));
    }
    let mut xs: Vec<f64> = (span[0]..=span[1]).map(|i| ratio.powi(i)).collect();
    xs.extend_from_slice(anchors);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut pts = vec![vec![0.0]];
    pts.extend(xs.iter().map(|&x| vec![x]));
    DomainSpace::new(
        FiniteMetricSpace::euclidean(&pts)?,
        (1..pts.len()).collect(),
        vec![0],
        MeshParams { beta: 0.5, k: 2 },
    )
}

/// Point id of the sample at position `x` on a generated half-line.
pub fn halfline_id(dom: &DomainSpace, x: f64) -> Result<usize> {
    dom.interior()
        .iter()
        .copied()
        .find(|&i| dom.ambient().point(i).is_some_and(|p| p[0] == x))
        .ok_or_else(|| Error::InvalidParameter(format!("{x} is not a sample of the half-line")))
}

/// Rectangle `(0, width) x (0, height)`, half-offset grid of spacing `h`
/// kept more than `2h` from the sides, perimeter sampled at spacing `h / 4`.
pub fn gen_grid_rect(width: f64, height: f64, h: f64) -> Result<DomainSpace> {
    check_spacing(h)?;
    if !(width > 4.0 * h && height > 4.0 * h) {
        return Err(Error::InvalidParameter(format!(
            "rectangle {width} x {height} too small for spacing {h}"
        )));
    }
    let mut interior = Vec::new();
    let (ni, nj) = ((width / h).ceil() as i64, (height / h).ceil() as i64);
    for j in 0..nj {
        for i in 0..ni {
            let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            if x > 2.0 * h && x < width - 2.0 * h && y > 2.0 * h && y < height - 2.0 * h {
                interior.push(vec![x, y]);
            }
        }
    }
    let mut boundary = Vec::new();
    let step = h / 4.0;
    let (sw, sh) = ((width / step).ceil() as usize, (height / step).ceil() as usize);
    for k in 0..sw {
        let x = width * k as f64 / sw as f64;
        boundary.push(vec![x, 0.0]);
        boundary.push(vec![width - x, height]);
    }
    for k in 0..sh {
        let y = height * k as f64 / sh as f64;
        boundary.push(vec![width, y]);
        boundary.push(vec![0.0, height - y]);
    }
    assemble(FiniteMetricSpace::euclidean, interior, boundary, MeshParams::default())
}

/// Unit disk minus the slit `[0, 1) x {0}`, on the half-offset grid
/// `h * (i, j + 1/2)`, with slit samples at spacing `h / 4`.
pub fn gen_slit_disk(h: f64) -> Result<DomainSpace> {
    check_spacing(h)?;
    let m = (1.0 / h).ceil() as i64 + 1;
    let mut interior = Vec::new();
    for j in -m..m {
        for i in -m..=m {
            let (x, y) = (i as f64 * h, (j as f64 + 0.5) * h);
            let to_slit = if x >= 0.0 { y.abs() } else { x.hypot(y) };
            if x.hypot(y) < 1.0 - 2.0 * h && to_slit > 2.0 * h {
                interior.push(vec![x, y]);
            }
        }
    }
    let mut boundary = circle([0.0, 0.0], 1.0);
    let slit = (4.0 / h).round() as usize;
    boundary.extend((0..slit).map(|k| vec![k as f64 / slit as f64, 0.0]));
    assemble(FiniteMetricSpace::euclidean, interior, boundary, MeshParams::default())
}

/// Arc `{(i + e^(i theta)) / 2 : -pi/2 <= theta <= 3pi/2 - u}` minus its
/// endpoints `p = 0` (id 0) and `q` (last id). Interior samples are `n`
/// uniform angles plus geometric ladders toward both ends, ordered by angle.
pub fn gen_arc(u: f64, n: usize) -> Result<DomainSpace> {
    if !(u > 0.0 && u < PI / 2.0) {
        return Err(Error::InvalidParameter(format!("u must lie in (0, pi/2), got {u}")));
    }
    if n < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 arc samples, got {n}")));
    }
    let total = 2.0 * PI - u;
    let step = total / (n + 1) as f64;
    // angular offsets from p
    let mut offsets: Vec<f64> = Vec::new();
    let ladder: Vec<f64> = (1..=ARC_LADDER).map(|j| 3.0 * step * 0.75f64.powi(j as i32)).collect();
    offsets.extend(ladder.iter().rev());
    offsets.extend((3..=n - 2).map(|i| i as f64 * step));
    offsets.extend(ladder.iter().map(|&o| total - o));
    let point = |phi: f64| {
        // (cos(theta), 1 + sin(theta)) / 2 with theta = phi - pi/2
        let s = (phi / 2.0).sin();
        vec![phi.sin() / 2.0, s * s]
    };
    let mut pts = vec![vec![0.0, 0.0]];
    pts.extend(offsets.iter().map(|&phi| point(phi)));
    pts.push(point(total));
    let last = pts.len() - 1;
    DomainSpace::new(
        FiniteMetricSpace::euclidean(&pts)?,
        (1..last).collect(),
        vec![0, last],
        MeshParams { beta: 0.5, k: 4 },
    )
}

/// The arc domain and its inversion at `p`.
pub fn gen_arc_example(u: f64, n: usize) -> Result<(DomainSpace, TransformedDomain)> {
    let arc = gen_arc(u, n)?;
    let inverted = invert_domain(&arc, 0, false)?;
    Ok((arc, inverted))
}

/// `tau(z) = z / |z|^2`.
pub fn tau(z: &[f64]) -> Vec<f64> {
    let r2: f64 = z.iter().map(|c| c * c).sum();
    z.iter().map(|c| c / r2).collect()
}

/// `u' = cos(3pi/2 - u) / (1 + sin(3pi/2 - u)) = -cot(u/2)`, the left end
/// of the ray that the arc inverts to.
pub fn ray_start(u: f64) -> f64 {
    -1.0 / (u / 2.0).tan()
}

/// Applies a coordinate map to a Euclidean domain, keeping roles.
pub fn map_domain(dom: &DomainSpace, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<DomainSpace> {
    let pts = dom
        .ambient()
        .points()
        .ok_or_else(|| Error::InvalidDomain("domain has no coordinates".into()))?;
    let mapped: Vec<Vec<f64>> = pts.iter().map(|p| f(p)).collect();
    DomainSpace::new(
        FiniteMetricSpace::euclidean(&mapped)?,
        dom.interior().to_vec(),
        dom.boundary().to_vec(),
        dom.mesh_params(),
    )
}

/// `{2^i : i = -10..=10}` on the line, and the id of `1`.
pub fn dyadic_space() -> (FiniteMetricSpace, usize) {
    let pts: Vec<Vec<f64>> = (-10..=10).map(|i| vec![2f64.powi(i)]).collect();
    (FiniteMetricSpace::euclidean(&pts).expect("finite points"), 10)
}

/// `2m + 1` points of spacing `h` on the line, centered at 0.
pub fn line_space(m: usize, h: f64) -> FiniteMetricSpace {
    let pts: Vec<Vec<f64>> = (-(m as i64)..=m as i64).map(|i| vec![i as f64 * h]).collect();
    FiniteMetricSpace::euclidean(&pts).expect("finite points")
}

/// `(2m + 1)^2` grid points of spacing `h` in the plane, centered at 0.
pub fn plane_grid(m: usize, h: f64) -> FiniteMetricSpace {
    let m = m as i64;
    let mut pts = Vec::new();
    for j in -m..=m {
        for i in -m..=m {
            pts.push(vec![i as f64 * h, j as f64 * h]);
        }
    }
    FiniteMetricSpace::euclidean(&pts).expect("finite points")
}

/// Neighbor graph over a whole space, without clearance constraints.
pub fn space_graph(space: &FiniteMetricSpace, k: usize) -> WeightedGraph {
    WeightedGraph::knn(space.len(), k, |a, b| space.dist(a, b), |_, _, _| true)
}

/// Random finite metric space of `n` points: Euclidean samples in dimension
/// 1 to 3 for even `seed`, a shortest-path metric of random edge weights
/// for odd `seed`.
pub fn random_space(seed: u64, n: usize) -> Result<FiniteMetricSpace> {
    let mut r = rng(seed);
    if seed.is_multiple_of(2) {
        let dim = r.gen_range(1..=3);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| r.gen_range(-10.0..10.0)).collect())
            .collect();
        FiniteMetricSpace::euclidean(&pts)
    } else {
        let mut w = DistanceMatrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = r.gen_range(0.1..10.0);
                w.set(i, j, v);
                w.set(j, i, v);
            }
        }
        FiniteMetricSpace::from_matrix(chain_metric(&w))
    }
}
