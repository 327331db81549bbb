//! Quantum graph data model: vertices, weighted internal edges and the lead
//! map `n(v)`, plus the oriented bond table built from it.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::GraphError;

/// An internal edge joining `u` and `v`. Loops (`u == v`) and parallel
/// edges are allowed; edges are identified by position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

/// The `(V, E, L, n)` data of an open quantum graph.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    leads: Vec<u32>,
}

impl QuantumGraph {
    /// Builds a graph, checking every structural invariant.
    ///
    /// Vertices of internal degree zero are rejected even when they carry
    /// leads, since the bond formalism cannot see them.
    pub fn new(vertex_count: usize, edges: Vec<Edge>, leads: Vec<u32>) -> Result<Self, GraphError> {
        if leads.len() != vertex_count {
            return Err(GraphError::LeadCountMismatch {
                expected: vertex_count,
                found: leads.len(),
            });
        }
        let mut degree = vec![0usize; vertex_count];
        for (index, edge) in edges.iter().enumerate() {
            for endpoint in [edge.u, edge.v] {
                if endpoint >= vertex_count {
                    return Err(GraphError::EndpointOutOfRange {
                        edge: index,
                        endpoint,
                        vertex_count,
                    });
                }
            }
            if !edge.length.is_finite() {
                return Err(GraphError::NonFiniteLength { edge: index });
            }
            if edge.length <= 0.0 {
                return Err(GraphError::NonPositiveLength {
                    edge: index,
                    length: edge.length,
                });
            }
            degree[edge.u] += 1;
            degree[edge.v] += 1;
        }
        if let Some(vertex) = degree.iter().position(|&d| d == 0) {
            return Err(GraphError::IsolatedVertex { vertex });
        }
        Ok(Self {
            vertex_count,
            edges,
            leads,
        })
    }

    /// A graph without leads.
    pub fn closed(vertex_count: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        Self::new(vertex_count, edges, vec![0; vertex_count])
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn leads(&self) -> &[u32] {
        &self.leads
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Internal degree `d(v)`; a loop counts twice.
    pub fn degrees(&self) -> Vec<usize> {
        let mut degree = vec![0usize; self.vertex_count];
        for edge in &self.edges {
            degree[edge.u] += 1;
            degree[edge.v] += 1;
        }
        degree
    }

    pub fn is_closed(&self) -> bool {
        self.leads.iter().all(|&n| n == 0)
    }

    /// Number of vertices carrying at least one lead.
    pub fn lead_vertex_count(&self) -> usize {
        self.leads.iter().filter(|&&n| n > 0).count()
    }

    /// Sum of the internal edge lengths, in input order.
    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn min_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.length)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    /// The same graph with every lead removed.
    pub fn remove_leads(&self) -> QuantumGraph {
        QuantumGraph {
            vertex_count: self.vertex_count,
            edges: self.edges.clone(),
            leads: vec![0; self.vertex_count],
        }
    }

    /// Vertices with `n(v) == d(v)`.
    pub fn balanced_vertices(&self) -> Vec<usize> {
        self.degrees()
            .iter()
            .zip(&self.leads)
            .enumerate()
            .filter(|(_, (&d, &n))| d == n as usize)
            .map(|(v, _)| v)
            .collect()
    }

    pub fn is_unbalanced(&self) -> bool {
        self.balanced_vertices().is_empty()
    }

    pub fn bonds(&self) -> BondTable {
        BondTable::new(self)
    }

    /// Checks the graph against the bounds hypothesis and reports the
    /// observed extremes, the balanced vertices and the number of opened
    /// vertices.
    pub fn validate(&self, limits: Option<&Limits>) -> ValidationReport {
        let degrees = self.degrees();
        let max_degree = degrees.iter().copied().max().unwrap_or(0);
        let max_leads = self.leads.iter().copied().max().unwrap_or(0);
        let observed = Limits {
            max_degree,
            max_leads,
            min_length: self.min_length(),
            max_length: self.max_length(),
        };
        let satisfies_bounds = match limits {
            None => true,
            Some(lim) => {
                observed.max_degree <= lim.max_degree
                    && observed.max_leads <= lim.max_leads
                    && observed.min_length >= lim.min_length
                    && observed.max_length <= lim.max_length
            }
        };
        let balanced = self.balanced_vertices();
        ValidationReport {
            satisfies_bounds,
            observed,
            unbalanced: balanced.is_empty(),
            balanced_vertices: balanced,
            lead_vertex_count: self.lead_vertex_count(),
            total_length: self.total_length(),
        }
    }

    /// Explicit width `K` of the strip `Im z ∈ [−K, 0]` containing every
    /// resonance of an unbalanced graph:
    /// `K = max_v [ln(n+d) − ln|d−n|] / L_min`.
    pub fn strip_bound(&self) -> Result<f64, GraphError> {
        let degrees = self.degrees();
        let mut worst = 0.0f64;
        for (v, (&d, &n)) in degrees.iter().zip(&self.leads).enumerate() {
            let n = n as usize;
            if n == d {
                return Err(GraphError::BalancedVertex { vertex: v });
            }
            let gap = (n + d) as f64 / (d as f64 - n as f64).abs();
            worst = worst.max(gap.ln());
        }
        Ok(worst / self.min_length())
    }
}

/// Bounds `(D, n0, L_min, L_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub max_degree: usize,
    pub max_leads: u32,
    pub min_length: f64,
    pub max_length: f64,
}

impl Limits {
    /// The coarse strip width `ln(D + n0) / L_min`.
    pub fn coarse_strip_bound(&self) -> f64 {
        ((self.max_degree + self.max_leads as usize) as f64).ln() / self.min_length
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub satisfies_bounds: bool,
    /// Observed `(D, n0, L_min, L_max)`.
    pub observed: Limits,
    pub unbalanced: bool,
    pub balanced_vertices: Vec<usize>,
    /// `g`: number of vertices with `n(v) > 0`.
    pub lead_vertex_count: usize,
    pub total_length: f64,
}

/// Oriented internal edges. Edge `e` yields bond `2e` (u → v) and bond
/// `2e + 1` (v → u), so `reverse(b) = b ^ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BondTable {
    origin: Vec<usize>,
    terminus: Vec<usize>,
    length: Vec<f64>,
}

impl BondTable {
    fn new(graph: &QuantumGraph) -> Self {
        let count = 2 * graph.edge_count();
        let mut origin = Vec::with_capacity(count);
        let mut terminus = Vec::with_capacity(count);
        let mut length = Vec::with_capacity(count);
        for edge in graph.edges() {
            origin.push(edge.u);
            terminus.push(edge.v);
            length.push(edge.length);
            origin.push(edge.v);
            terminus.push(edge.u);
            length.push(edge.length);
        }
        Self {
            origin,
            terminus,
            length,
        }
    }

    pub fn len(&self) -> usize {
        self.origin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origin.is_empty()
    }

    pub fn origin(&self, bond: usize) -> usize {
        self.origin[bond]
    }

    pub fn terminus(&self, bond: usize) -> usize {
        self.terminus[bond]
    }

    pub fn reverse(&self, bond: usize) -> usize {
        bond ^ 1
    }

    pub fn edge_of(&self, bond: usize) -> usize {
        bond / 2
    }

    pub fn length(&self, bond: usize) -> f64 {
        self.length[bond]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.length
    }

    /// Bonds leaving `vertex`, in bond order.
    pub fn outgoing(&self, vertex: usize) -> impl Iterator<Item = usize> + '_ {
        self.origin
            .iter()
            .enumerate()
            .filter(move |(_, &o)| o == vertex)
            .map(|(b, _)| b)
    }
}
