//! The JSON graph file format:
//! `{"vertices": 3, "edges": [{"u": 0, "v": 1, "length": 1.0}, ...], "leads": [1, 0, 0]}`.
//! `leads` may be omitted.

use reslab_core::{Edge, GraphError, QuantumGraph};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] GraphError),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    vertices: usize,
    edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    leads: Option<Vec<u32>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    u: usize,
    v: usize,
    length: f64,
}

pub fn parse_graph(text: &str) -> Result<QuantumGraph, FormatError> {
    let file: GraphFile = serde_json::from_str(text)?;
    let edges = file
        .edges
        .into_iter()
        .map(|e| Edge {
            u: e.u,
            v: e.v,
            length: e.length,
        })
        .collect();
    let leads = file.leads.unwrap_or_else(|| vec![0; file.vertices]);
    Ok(QuantumGraph::new(file.vertices, edges, leads)?)
}

pub fn graph_to_json(graph: &QuantumGraph) -> String {
    let file = GraphFile {
        vertices: graph.vertex_count(),
        edges: graph
            .edges()
            .iter()
            .map(|e| EdgeRecord {
                u: e.u,
                v: e.v,
                length: e.length,
            })
            .collect(),
        leads: Some(graph.leads().to_vec()),
    };
    serde_json::to_string_pretty(&file).expect("graph serializes") + "\n"
}
