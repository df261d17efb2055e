//! Clearance-constrained neighbor graphs over the interior samples.
//!
//! An edge `{u, v}` is kept only when `|uv| <= beta * min(d(u), d(v))`, with
//! `d` the boundary distance. In a Euclidean ambient `d` is 1-Lipschitz, so
//! every point of the straight edge keeps `d >= (1 - beta) * min(d(u), d(v))`
//! and the edge stays inside the domain.

use rayon::prelude::*;

use crate::domain::DomainSpace;
use crate::error::{Error, Result};
use crate::graph::{ShortestPathTree, WeightedGraph};
use crate::quasihyperbolic::QhWeightMode;

#[derive(Debug, Clone)]
pub struct MeshGraph {
    beta: f64,
    k: usize,
    /// Point ids, in the domain's interior order.
    vertices: Vec<usize>,
    graph: WeightedGraph,
}

impl MeshGraph {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edges().len()
    }

    /// Edges as `(point id, point id, length)`.
    pub fn edge_list(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.graph
            .edges()
            .iter()
            .map(|e| (self.vertices[e.u], self.vertices[e.v], e.length))
    }
}

pub fn build_mesh(dom: &DomainSpace, beta: f64, k: usize) -> Result<MeshGraph> {
    if !(beta > 0.0 && beta <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "clearance beta must lie in (0, 1/2], got {beta}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("neighbor count k must be positive".into()));
    }
    let vertices = dom.interior().to_vec();
    if vertices.is_empty() {
        return Err(Error::InvalidDomain("domain has no interior points".into()));
    }
    let clearance = dom.boundary_distances();
    let graph = WeightedGraph::knn(
        vertices.len(),
        k,
        |a, b| dom.dist(vertices[a], vertices[b]),
        |a, b, len| len <= beta * clearance[a].min(clearance[b]),
    );
    let components = graph.components();
    if components.len() > 1 {
        return Err(Error::MeshTooCoarse {
            components: components
                .into_iter()
                .map(|c| c.into_iter().map(|i| vertices[i]).collect())
                .collect(),
        });
    }
    Ok(MeshGraph {
        beta,
        k,
        vertices,
        graph,
    })
}

/// Edge weighting used for shortest paths on the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weighting {
    Length,
    Qh(QhWeightMode),
}

/// A domain together with its connected mesh and precomputed edge weights.
#[derive(Debug, Clone)]
pub struct MeshedDomain {
    domain: DomainSpace,
    mesh: MeshGraph,
    length: Vec<f64>,
    upper: Vec<f64>,
    trapezoid: Vec<f64>,
}

impl MeshedDomain {
    /// Mesh with the parameters stored in the domain.
    pub fn new(domain: DomainSpace) -> Result<Self> {
        let p = domain.mesh_params();
        Self::with_params(domain, p.beta, p.k)
    }

    pub fn with_params(domain: DomainSpace, beta: f64, k: usize) -> Result<Self> {
        let mesh = build_mesh(&domain, beta, k)?;
        Ok(Self::from_parts(domain, mesh))
    }

    pub fn from_parts(domain: DomainSpace, mesh: MeshGraph) -> Self {
        let d = domain.boundary_distances();
        let edges = mesh.graph.edges();
        let length = edges.iter().map(|e| e.length).collect();
        let upper = edges
            .iter()
            .map(|e| QhWeightMode::Upper.edge_weight(e.length, d[e.u], d[e.v]))
            .collect();
        let trapezoid = edges
            .iter()
            .map(|e| QhWeightMode::Trapezoid.edge_weight(e.length, d[e.u], d[e.v]))
            .collect();
        Self {
            domain,
            mesh,
            length,
            upper,
            trapezoid,
        }
    }

    pub fn domain(&self) -> &DomainSpace {
        &self.domain
    }

    pub fn mesh(&self) -> &MeshGraph {
        &self.mesh
    }

    pub fn beta(&self) -> f64 {
        self.mesh.beta
    }

    pub fn weights(&self, w: Weighting) -> &[f64] {
        match w {
            Weighting::Length => &self.length,
            Weighting::Qh(QhWeightMode::Upper) => &self.upper,
            Weighting::Qh(QhWeightMode::Trapezoid) => &self.trapezoid,
        }
    }

    /// Mesh vertex index of interior point `x`.
    pub fn local(&self, x: usize) -> Result<usize> {
        self.domain.interior_index(x)
    }

    pub fn point_id(&self, local: usize) -> usize {
        self.mesh.vertices[local]
    }

    pub fn tree(&self, x: usize, w: Weighting) -> Result<ShortestPathTree> {
        let s = self.local(x)?;
        Ok(self.mesh.graph.shortest_paths(s, self.weights(w), None))
    }

    /// Trees from several sources, computed in parallel; output follows
    /// the order of `sources`.
    pub fn trees(&self, sources: &[usize], w: Weighting) -> Result<Vec<ShortestPathTree>> {
        let locals = sources
            .iter()
            .map(|&x| self.local(x))
            .collect::<Result<Vec<_>>>()?;
        let weights = self.weights(w);
        Ok(locals
            .par_iter()
            .map(|&s| self.mesh.graph.shortest_paths(s, weights, None))
            .collect())
    }

    /// Path in point ids from the tree's source to interior point `y`.
    pub fn path_ids(&self, tree: &ShortestPathTree, y: usize) -> Result<Vec<usize>> {
        let t = self.local(y)?;
        let path = tree
            .path_to(t)
            .ok_or_else(|| Error::InvalidDomain(format!("point {y} unreachable in mesh")))?;
        Ok(path.into_iter().map(|l| self.mesh.vertices[l]).collect())
    }

    /// Shortest-path distance along mesh edges.
    pub fn length_distance(&self, x: usize, y: usize) -> Result<f64> {
        let t = self.local(y)?;
        Ok(self.tree(x, Weighting::Length)?.dist[t])
    }

    /// Index of the mesh edge joining two mesh vertices.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        let adj = self.mesh.graph.neighbors(u);
        adj.binary_search_by(|(n, _)| n.cmp(&v)).ok().map(|i| adj[i].1)
    }

    /// Sum of ambient distances along a vertex sequence.
    pub fn polyline_length(&self, path: &[usize]) -> f64 {
        path.windows(2).map(|w| self.domain.dist(w[0], w[1])).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::MeshParams;
    use crate::metric::FiniteMetricSpace;

    fn geometric_halfline(ratio: f64, lo: i32, hi: i32) -> DomainSpace {
        let mut pts = vec![vec![0.0]];
        pts.extend((lo..=hi).map(|i| vec![ratio.powi(i)]));
        let n = pts.len();
        DomainSpace::new(
            FiniteMetricSpace::euclidean(&pts).unwrap(),
            (1..n).collect(),
            vec![0],
            MeshParams { beta: 0.5, k: 2 },
        )
        .unwrap()
    }

    #[test]
    fn geometric_halfline_is_a_chain() {
        let dom = geometric_halfline(1.1, -50, 50);
        let mesh = build_mesh(&dom, 0.5, 1).unwrap();
        // each sample's nearest neighbor is its predecessor
        assert_eq!(mesh.edge_count(), 100);
        for (u, v, len) in mesh.edge_list() {
            assert_eq!(u.abs_diff(v), 1);
            let du = dom.boundary_distance(u).unwrap();
            let dv = dom.boundary_distance(v).unwrap();
            assert!(len <= 0.5 * du.min(dv));
        }
    }

    #[test]
    fn separated_clusters_are_too_coarse() {
        let mut pts = vec![vec![0.0, 0.0]];
        for i in 0..5 {
            pts.push(vec![10.0 + i as f64 * 0.1, 10.0]);
            pts.push(vec![-10.0 - i as f64 * 0.1, 10.0]);
        }
        let n = pts.len();
        let dom = DomainSpace::new(
            FiniteMetricSpace::euclidean(&pts).unwrap(),
            (1..n).collect(),
            vec![0],
            MeshParams::default(),
        )
        .unwrap();
        match build_mesh(&dom, 0.5, 8) {
            Err(Error::MeshTooCoarse { components }) => {
                assert_eq!(components.len(), 2);
                assert_eq!(components[0], vec![1, 3, 5, 7, 9]);
            }
            other => panic!("expected MeshTooCoarse, got {other:?}"),
        }
    }

    #[test]
    fn parameter_checks() {
        let dom = geometric_halfline(1.1, -5, 5);
        assert!(build_mesh(&dom, 0.0, 2).is_err());
        assert!(build_mesh(&dom, 0.6, 2).is_err());
        assert!(build_mesh(&dom, 0.5, 0).is_err());
    }

    #[test]
    fn length_distance_on_the_line() {
        let mut pts: Vec<Vec<f64>> = vec![vec![0.0]];
        pts.extend([1.0, 1.25, 1.5, 2.0, 2.5, 3.0].iter().map(|&x| vec![x]));
        let dom = DomainSpace::new(
            FiniteMetricSpace::euclidean(&pts).unwrap(),
            (1..pts.len()).collect(),
            vec![0],
            MeshParams { beta: 0.5, k: 2 },
        )
        .unwrap();
        let md = MeshedDomain::new(dom).unwrap();
        assert_eq!(md.length_distance(1, 6).unwrap(), 2.0);
        assert_eq!(md.length_distance(3, 3).unwrap(), 0.0);
    }
}
