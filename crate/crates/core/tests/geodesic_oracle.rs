//! Dijkstra against Floyd–Warshall, plus structural properties of geodesics.

mod common;

use g2l_core::geodesic::{all_pairs_oracle, build_knn_graph, dijkstra, Edge, DEFAULT_G_CAP};
use g2l_core::numcore::{EmbeddingMatrix, RngStream};

fn random_graph(rng: &mut RngStream) -> (EmbeddingMatrix, usize) {
    let nodes = 2 + rng.below(49);
    let dim = 2 + rng.below(8);
    let n = 1 + rng.below((nodes - 1).min(10));
    (common::unit_gaussian(nodes, dim, rng), n)
}

#[test]
fn dijkstra_matches_floyd_warshall_on_random_graphs() {
    for seed in 0..100 {
        let mut rng = RngStream::new(seed, 0);
        let (moments, n) = random_graph(&mut rng);
        let graph = build_knn_graph(&moments, n).unwrap();
        let oracle = all_pairs_oracle(&graph, DEFAULT_G_CAP);
        for s in 0..graph.node_count() {
            let table = dijkstra(&graph, s, DEFAULT_G_CAP).unwrap();
            assert_eq!(table.distances[s], 0.0);
            for (t, d) in table.distances.iter().enumerate() {
                assert!((d - oracle[(s, t)]).abs() < 1e-10, "seed {seed}: d({s},{t}) {d} vs {}", oracle[(s, t)]);
                if !table.reachable[t] {
                    assert_eq!(*d, DEFAULT_G_CAP);
                }
            }
        }
    }
}

#[test]
fn shortest_paths_satisfy_the_triangle_inequality() {
    for seed in 0..30 {
        let mut rng = RngStream::new(seed, 1);
        let (moments, n) = random_graph(&mut rng);
        let graph = build_knn_graph(&moments, n).unwrap();
        for s in 0..graph.node_count() {
            let t = dijkstra(&graph, s, f64::INFINITY).unwrap();
            for e in graph.edges() {
                if t.reachable[e.source] {
                    assert!(t.distances[e.target] <= t.distances[e.source] + e.weight + 1e-12);
                }
            }
        }
    }
}

#[test]
fn adding_an_edge_never_lengthens_a_path() {
    for seed in 0..50 {
        let mut rng = RngStream::new(seed, 2);
        let (moments, n) = random_graph(&mut rng);
        let graph = build_knn_graph(&moments, n).unwrap();
        let nodes = graph.node_count();
        let (a, b) = (rng.below(nodes), rng.below(nodes));
        if a == b {
            continue;
        }
        let bigger = graph
            .with_edge(Edge {
                source: a,
                target: b,
                weight: rng.uniform(),
            })
            .unwrap();
        let before = all_pairs_oracle(&graph, DEFAULT_G_CAP);
        let after = all_pairs_oracle(&bigger, DEFAULT_G_CAP);
        for (x, y) in before.data().iter().zip(after.data()) {
            assert!(y <= x);
        }
    }
}

#[test]
fn relabelling_nodes_permutes_the_distances() {
    for seed in 0..30 {
        let mut rng = RngStream::new(seed, 3);
        let (moments, n) = random_graph(&mut rng);
        let nodes = moments.rows();
        let mut perm: Vec<usize> = (0..nodes).collect();
        rng.shuffle(&mut perm);
        // row i of the permuted set is original row perm[i]
        let permuted = moments.select_rows(&perm);
        let d = all_pairs_oracle(&build_knn_graph(&moments, n).unwrap(), DEFAULT_G_CAP);
        let dp = all_pairs_oracle(&build_knn_graph(&permuted, n).unwrap(), DEFAULT_G_CAP);
        for i in 0..nodes {
            for j in 0..nodes {
                assert!((dp[(i, j)] - d[(perm[i], perm[j])]).abs() < 1e-12);
            }
        }
    }
}
