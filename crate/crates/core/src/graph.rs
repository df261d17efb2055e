//! Sparse undirected graphs over local vertex indices and single-source
//! shortest paths with deterministic predecessor choice.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

pub const NO_PREDECESSOR: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct WeightedGraph {
    edges: Vec<Edge>,
    /// `(neighbor, edge index)` sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl WeightedGraph {
    pub fn from_edges(n: usize, mut edges: Vec<Edge>) -> Self {
        for e in &mut edges {
            if e.u > e.v {
                std::mem::swap(&mut e.u, &mut e.v);
            }
        }
        edges.sort_by_key(|e| (e.u, e.v));
        edges.dedup_by(|a, b| a.u == b.u && a.v == b.v);
        let mut adjacency = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            adjacency[e.u].push((e.v, idx));
            adjacency[e.v].push((e.u, idx));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self { edges, adjacency }
    }

    /// Symmetrized k-nearest-neighbor graph. Candidate edges are the `k`
    /// nearest neighbors of every vertex (ties broken by index); only those
    /// accepted by `admissible(u, v, length)` are kept.
    pub fn knn(
        n: usize,
        k: usize,
        dist: impl Fn(usize, usize) -> f64,
        admissible: impl Fn(usize, usize, f64) -> bool,
    ) -> Self {
        let mut set = BTreeSet::new();
        let mut row: Vec<(f64, usize)> = Vec::with_capacity(n);
        for i in 0..n {
            row.clear();
            row.extend((0..n).filter(|&j| j != i).map(|j| (dist(i, j), j)));
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            let take = k.min(row.len());
            if take == 0 {
                continue;
            }
            if take < row.len() {
                row.select_nth_unstable_by(take - 1, cmp);
            }
            for &(len, j) in &row[..take] {
                if admissible(i, j, len) {
                    set.insert((i.min(j), i.max(j)));
                }
            }
        }
        let edges = set
            .into_iter()
            .map(|(u, v)| Edge {
                u,
                v,
                length: dist(u, v),
            })
            .collect();
        Self::from_edges(n, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, usize)] {
        &self.adjacency[u]
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertex_count();
        let mut label = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut comp = vec![start];
            label[start] = id;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if label[v] == usize::MAX {
                        label[v] = id;
                        comp.push(v);
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Dijkstra from `source` with per-edge `weights`. Vertices with
    /// `allowed[v] == false` are never entered (the source is always allowed).
    pub fn shortest_paths(
        &self,
        source: usize,
        weights: &[f64],
        allowed: Option<&[bool]>,
    ) -> ShortestPathTree {
        let n = self.vertex_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![NO_PREDECESSOR; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(State {
            cost: 0.0,
            vertex: source,
        });
        while let Some(State { cost, vertex: u }) = heap.pop() {
            if done[u] || cost > dist[u] {
                continue;
            }
            done[u] = true;
            for &(v, e) in &self.adjacency[u] {
                if done[v] {
                    continue;
                }
                if let Some(allowed) = allowed {
                    if !allowed[v] {
                        continue;
                    }
                }
                let nd = cost + weights[e];
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = u;
                    heap.push(State { cost: nd, vertex: v });
                } else if nd == dist[v] && u < pred[v] {
                    pred[v] = u;
                }
            }
        }
        ShortestPathTree { source, dist, pred }
    }
}

#[derive(Debug, Clone, Copy)]
struct State {
    cost: f64,
    vertex: usize,
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for State {}

impl Ord for State {
    // min-heap on cost, then on vertex index
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    pub source: usize,
    pub dist: Vec<f64>,
    pub pred: Vec<usize>,
}

impl ShortestPathTree {
    /// Local vertex sequence from the source to `target`.
    pub fn path_to(&self, target: usize) -> Option<Vec<usize>> {
        if !self.dist[target].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut cur = target;
        while cur != self.source {
            cur = self.pred[cur];
            if cur == NO_PREDECESSOR {
                return None;
            }
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> WeightedGraph {
        // 0 - 1
        // |   |
        // 3 - 2
        WeightedGraph::from_edges(
            4,
            vec![
                Edge { u: 0, v: 1, length: 1.0 },
                Edge { u: 1, v: 2, length: 1.0 },
                Edge { u: 2, v: 3, length: 1.0 },
                Edge { u: 3, v: 0, length: 1.0 },
            ],
        )
    }

    #[test]
    fn ties_prefer_smallest_predecessor() {
        let g = square();
        let w: Vec<f64> = g.edges().iter().map(|e| e.length).collect();
        let t = g.shortest_paths(0, &w, None);
        assert_eq!(t.dist[2], 2.0);
        assert_eq!(t.path_to(2).unwrap(), vec![0, 1, 2]);
        let t = g.shortest_paths(2, &w, None);
        assert_eq!(t.path_to(0).unwrap(), vec![2, 1, 0]);
    }

    #[test]
    fn blocked_vertices_are_skipped() {
        let g = square();
        let w: Vec<f64> = g.edges().iter().map(|e| e.length).collect();
        let allowed = [true, false, true, true];
        let t = g.shortest_paths(0, &w, Some(&allowed));
        assert_eq!(t.path_to(2).unwrap(), vec![0, 3, 2]);
        assert!(t.path_to(1).is_none());
    }

    #[test]
    fn knn_on_a_line_links_neighbors() {
        let xs: [f64; 5] = [0.0, 1.0, 2.5, 10.0, 10.5];
        let g = WeightedGraph::knn(xs.len(), 1, |i, j| (xs[i] - xs[j]).abs(), |_, _, _| true);
        let pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (3, 4)]);
        assert_eq!(g.components(), vec![vec![0, 1, 2], vec![3, 4]]);
    }
}
