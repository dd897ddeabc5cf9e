//! K-nearest-neighbor moment graph and geodesic (shortest-path) distances.
//!
//! Each moment is a node with directed edges to its `n` nearest neighbors
//! under `d(i, j) = 1 − mᵢ·mⱼ`. Geodesics are Dijkstra distances on that
//! graph. Nodes that cannot be reached from a source get the finite distance
//! `g_cap` and are flagged unreachable.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::numcore::{dot, EmbeddingMatrix, Matrix};

/// Distance assigned to unreachable nodes.
pub const DEFAULT_G_CAP: f64 = 10.0;

/// Default neighbors per node.
pub const DEFAULT_NEIGHBORS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentGraph {
    nodes: usize,
    neighbors: usize,
    edges: Vec<Edge>,
    // CSR layout over `edges`, which are sorted by source.
    offsets: Vec<usize>,
}

impl MomentGraph {
    /// Builds a graph from an explicit edge list. Weights must be finite and
    /// nonnegative; self-loops are rejected.
    pub fn from_edges(nodes: usize, neighbors: usize, mut edges: Vec<Edge>) -> Result<Self> {
        for e in &edges {
            if e.source >= nodes || e.target >= nodes {
                return Err(Error::Domain(format!(
                    "edge {}->{} out of range for {nodes} nodes",
                    e.source, e.target
                )));
            }
            if e.source == e.target {
                return Err(Error::Domain(format!("self-loop at node {}", e.source)));
            }
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                return Err(Error::Domain(format!(
                    "edge {}->{} has invalid weight {}",
                    e.source, e.target, e.weight
                )));
            }
        }
        // stable: keeps per-source insertion order
        edges.sort_by_key(|e| e.source);
        let mut offsets = vec![0usize; nodes + 1];
        for e in &edges {
            offsets[e.source + 1] += 1;
        }
        for i in 0..nodes {
            offsets[i + 1] += offsets[i];
        }
        Ok(MomentGraph {
            nodes,
            neighbors,
            edges,
            offsets,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn neighbors_per_node(&self) -> usize {
        self.neighbors
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, node: usize) -> &[Edge] {
        &self.edges[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Returns a copy with one more edge.
    pub fn with_edge(&self, edge: Edge) -> Result<Self> {
        let mut edges = self.edges.clone();
        edges.push(edge);
        MomentGraph::from_edges(self.nodes, self.neighbors, edges)
    }
}

/// Shortest-path distances from one source.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicTable {
    pub source: usize,
    pub distances: Vec<f64>,
    pub reachable: Vec<bool>,
    /// Predecessor on the shortest-path tree; `None` for the source and for
    /// unreachable nodes.
    pub parent: Vec<Option<usize>>,
}

impl GeodesicTable {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }
}

/// Directed K-NN graph with weights `1 − mᵢ·mⱼ`.
///
/// Neighbors are ordered by `(distance, index)`, so ties go to the lower index.
pub fn build_knn_graph(moments: &EmbeddingMatrix, n: usize) -> Result<MomentGraph> {
    let nodes = moments.rows();
    if !moments.is_normalized() {
        return Err(Error::Domain("K-NN graph requires unit-norm moment embeddings".into()));
    }
    if n == 0 || n >= nodes {
        return Err(Error::Domain(format!(
            "neighbors per node must satisfy 1 <= n < {nodes}, got {n}"
        )));
    }
    let mut edges = Vec::with_capacity(nodes * n);
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(nodes - 1);
    for i in 0..nodes {
        candidates.clear();
        let mi = moments.row(i);
        for j in (0..nodes).filter(|&j| j != i) {
            // rounding can push cos slightly above 1
            let d = (1.0 - dot(mi, moments.row(j))).max(0.0);
            candidates.push((d, j));
        }
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
        };
        candidates.select_nth_unstable_by(n - 1, by_distance);
        let nearest = &mut candidates[..n];
        nearest.sort_unstable_by(by_distance);
        edges.extend(nearest.iter().map(|&(weight, target)| Edge {
            source: i,
            target,
            weight,
        }));
    }
    MomentGraph::from_edges(nodes, n, edges)
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then on node index
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths with a binary heap.
pub fn dijkstra(graph: &MomentGraph, source: usize, g_cap: f64) -> Result<GeodesicTable> {
    let nodes = graph.node_count();
    if source >= nodes {
        return Err(Error::Domain(format!(
            "source {source} out of range for {nodes} nodes"
        )));
    }
    let mut dist = vec![f64::INFINITY; nodes];
    let mut parent = vec![None; nodes];
    let mut done = vec![false; nodes];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for e in graph.out_edges(u) {
            let nd = d + e.weight;
            if nd < dist[e.target] {
                dist[e.target] = nd;
                parent[e.target] = Some(u);
                heap.push(HeapEntry {
                    dist: nd,
                    node: e.target,
                });
            }
        }
    }
    let reachable: Vec<bool> = dist.iter().map(|d| d.is_finite()).collect();
    for d in dist.iter_mut().filter(|d| !d.is_finite()) {
        *d = g_cap;
    }
    Ok(GeodesicTable {
        source,
        distances: dist,
        reachable,
        parent,
    })
}

/// Floyd–Warshall over the whole graph. Unreachable pairs hold `g_cap`.
pub fn all_pairs_oracle(graph: &MomentGraph, g_cap: f64) -> Matrix {
    let n = graph.node_count();
    let mut d = Matrix::zeros(n, n);
    d.data_mut().fill(f64::INFINITY);
    for i in 0..n {
        d[(i, i)] = 0.0;
    }
    for e in graph.edges() {
        if e.weight < d[(e.source, e.target)] {
            d[(e.source, e.target)] = e.weight;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[(i, k)];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let via = dik + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    for v in d.data_mut().iter_mut().filter(|v| !v.is_finite()) {
        *v = g_cap;
    }
    d
}

/// One table per target over a single graph built from `moments`.
pub fn geodesics_from_targets(
    moments: &EmbeddingMatrix,
    targets: &[usize],
    n: usize,
    g_cap: f64,
) -> Result<(MomentGraph, Vec<GeodesicTable>)> {
    let graph = build_knn_graph(moments, n)?;
    let tables = targets
        .iter()
        .map(|&t| dijkstra(&graph, t, g_cap))
        .collect::<Result<Vec<_>>>()?;
    Ok((graph, tables))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(rows: &[&[f64]]) -> EmbeddingMatrix {
        EmbeddingMatrix::unit(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    fn edge(source: usize, target: usize, weight: f64) -> Edge {
        Edge {
            source,
            target,
            weight,
        }
    }

    #[test]
    fn three_node_tie_example() {
        let m = unit(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let g = build_knn_graph(&m, 1).unwrap();
        assert_eq!(
            g.edges(),
            &[edge(0, 1, 0.0), edge(1, 0, 0.0), edge(2, 0, 1.0)]
        );
        let t = dijkstra(&g, 0, DEFAULT_G_CAP).unwrap();
        assert_eq!(t.distances, vec![0.0, 0.0, DEFAULT_G_CAP]);
        assert_eq!(t.reachable, vec![true, true, false]);
    }

    #[test]
    fn duplicate_rows_form_mutual_zero_edges() {
        let m = unit(&[&[0.6, 0.8], &[0.6, 0.8]]);
        let g = build_knn_graph(&m, 1).unwrap();
        assert_eq!(g.edges(), &[edge(0, 1, 0.0), edge(1, 0, 0.0)]);
    }

    #[test]
    fn orthonormal_rows_give_complete_digraph() {
        let m = EmbeddingMatrix::unit(Matrix::identity(4)).unwrap();
        let g = build_knn_graph(&m, 3).unwrap();
        assert_eq!(g.edges().len(), 12);
        assert!(g.edges().iter().all(|e| e.weight == 1.0 && e.source != e.target));
    }

    #[test]
    fn knn_rejects_bad_inputs() {
        let m = unit(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(build_knn_graph(&m, 2).is_err());
        assert!(build_knn_graph(&m, 0).is_err());
        let raw = EmbeddingMatrix::raw(Matrix::from_rows(&[&[2.0, 0.0], &[0.0, 1.0]]).unwrap());
        assert!(build_knn_graph(&raw, 1).is_err());
    }

    #[test]
    fn dijkstra_examples() {
        let single = MomentGraph::from_edges(1, 1, vec![]).unwrap();
        assert_eq!(dijkstra(&single, 0, 10.0).unwrap().distances, vec![0.0]);

        let path = MomentGraph::from_edges(3, 1, vec![edge(0, 1, 0.3), edge(1, 2, 0.4)]).unwrap();
        let t = dijkstra(&path, 0, 10.0).unwrap();
        assert!((t.distances[2] - 0.7).abs() < 1e-15);
        assert_eq!(t.parent, vec![None, Some(0), Some(1)]);

        assert!(dijkstra(&path, 3, 10.0).is_err());
    }

    #[test]
    fn oracle_examples() {
        let w = 0.37;
        let mut edges = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    edges.push(edge(i, j, w));
                }
            }
        }
        let g = MomentGraph::from_edges(4, 3, edges).unwrap();
        let d = all_pairs_oracle(&g, 10.0);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(d[(i, j)], if i == j { 0.0 } else { w });
            }
        }

        let empty = MomentGraph::from_edges(3, 1, vec![]).unwrap();
        let d = all_pairs_oracle(&empty, 10.0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d[(i, j)], if i == j { 0.0 } else { 10.0 });
            }
        }
    }

    #[test]
    fn duplicate_targets_share_tables() {
        let m = unit(&[&[1.0, 0.0], &[0.6, 0.8], &[0.0, 1.0], &[-0.6, 0.8]]);
        let (g, tables) = geodesics_from_targets(&m, &[2, 2, 0], 2, 10.0).unwrap();
        assert_eq!(tables[0], tables[1]);
        assert_eq!(tables[2], dijkstra(&g, 0, 10.0).unwrap());
    }

    #[test]
    fn graph_rejects_self_loops_and_negative_weights() {
        assert!(MomentGraph::from_edges(2, 1, vec![edge(0, 0, 0.1)]).is_err());
        assert!(MomentGraph::from_edges(2, 1, vec![edge(0, 1, -0.1)]).is_err());
        assert!(MomentGraph::from_edges(2, 1, vec![edge(0, 2, 0.1)]).is_err());
    }
}
