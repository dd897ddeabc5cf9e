//! JSON dump of a K-NN graph and its geodesic tables.

use g2l_core::geodesic::{GeodesicTable, MomentGraph};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDump {
    pub source: usize,
    pub dist: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDump {
    pub nodes: usize,
    pub n: usize,
    /// `[source, target, weight]` triples.
    pub edges: Vec<(usize, usize, f64)>,
    pub tables: Vec<TableDump>,
}

impl GraphDump {
    pub fn new(graph: &MomentGraph, tables: &[GeodesicTable]) -> Self {
        GraphDump {
            nodes: graph.node_count(),
            n: graph.neighbors_per_node(),
            edges: graph
                .edges()
                .iter()
                .map(|e| (e.source, e.target, e.weight))
                .collect(),
            tables: tables
                .iter()
                .map(|t| TableDump {
                    source: t.source,
                    dist: t.distances.clone(),
                })
                .collect(),
        }
    }
}
