//! Box counts, binned spectral measures, open-versus-closed comparisons,
//! δ-scans and strip/mirror audits.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::ensembles::HermitianPair;
use crate::error::SolveError;
use crate::graph::QuantumGraph;
use crate::linalg::C64;
use crate::secular::SecularSystem;
use crate::solver::{self, CountOptions, Rectangle, Resonance};

/// With cutoff 0 the bottom edge sits this far below the real axis.
const MIN_DEPTH: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedMeasure {
    pub window: (f64, f64),
    pub bin_width: f64,
    /// Bin `k` is `[a + k w, a + (k + 1) w)`, the last one cut at `b`.
    pub counts: Vec<usize>,
    /// `counts / L(Q)`.
    pub weights: Vec<f64>,
    pub cutoff: f64,
    pub total_length: f64,
}

impl BinnedMeasure {
    pub fn total_count(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn from_counts(window: (f64, f64), bin_width: f64, counts: Vec<usize>, cutoff: f64, total_length: f64) -> Self {
        let weights = counts.iter().map(|&c| c as f64 / total_length).collect();
        Self {
            window,
            bin_width,
            counts,
            weights,
            cutoff,
            total_length,
        }
    }
}

fn bin_edges(window: (f64, f64), bin_width: f64) -> Result<Vec<f64>, SolveError> {
    let (a, b) = window;
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(SolveError::InvalidArgument(format!("window must satisfy 0 < a < b, got ({a}, {b})")));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(SolveError::InvalidArgument(format!("bin width must be positive, got {bin_width}")));
    }
    let bins = ((b - a) / bin_width - 1e-9).ceil().max(1.0) as usize;
    let mut edges: Vec<f64> = (0..bins).map(|k| a + k as f64 * bin_width).collect();
    edges.push(b);
    Ok(edges)
}

/// Vertical lines covering `edges`, with extra lines so no column is wider
/// than `width` (long sides would exhaust the per-side evaluation budget);
/// also returns the bin index of each column.
fn columns(edges: &[f64], width: f64) -> (Vec<f64>, Vec<usize>) {
    let mut lines = vec![edges[0]];
    let mut owner = Vec::new();
    for (k, w) in edges.windows(2).enumerate() {
        let piece = solver::column_lines(w[0], w[1], width);
        lines.extend_from_slice(&piece[1..]);
        owner.extend(core::iter::repeat_n(k, piece.len() - 1));
    }
    (lines, owner)
}

fn top_edge(sys: &SecularSystem) -> f64 {
    1.0 / sys.max_length()
}

/// Total multiplicity of resonances in `rect`.
pub fn box_count(graph: &QuantumGraph, rect: &Rectangle, opts: &CountOptions) -> Result<usize, SolveError> {
    let sys = SecularSystem::assemble(graph);
    Ok(solver::count_zeros(&sys, rect, opts)?.count)
}

/// Resonances with `Re z` in the window and `Im z ≥ −cutoff`, binned by
/// real part. Resonances lie in `Im z ≤ 0`, so the count box closes at a
/// positive height where nothing can be found.
pub fn empirical_measure(
    graph: &QuantumGraph,
    window: (f64, f64),
    bin_width: f64,
    cutoff: f64,
    opts: &CountOptions,
) -> Result<BinnedMeasure, SolveError> {
    let sys = SecularSystem::assemble(graph);
    empirical_measure_of(&sys, graph.total_length(), window, bin_width, cutoff, opts)
}

fn empirical_measure_of(
    sys: &SecularSystem,
    total_length: f64,
    window: (f64, f64),
    bin_width: f64,
    cutoff: f64,
    opts: &CountOptions,
) -> Result<BinnedMeasure, SolveError> {
    if !(cutoff >= 0.0 && cutoff.is_finite()) {
        return Err(SolveError::InvalidArgument(format!("cutoff must be nonnegative, got {cutoff}")));
    }
    let edges = bin_edges(window, bin_width)?;
    let (xs, owner) = columns(&edges, 1.0 / sys.max_length());
    let ys = [-cutoff.max(MIN_DEPTH), top_edge(sys)];
    let cells = solver::count_grid_cells(sys, &xs, &ys, opts)?;
    let mut counts = vec![0usize; edges.len() - 1];
    for (c, &bin) in cells.iter().zip(&owner) {
        counts[bin] += c;
    }
    Ok(BinnedMeasure::from_counts(window, bin_width, counts, cutoff, total_length))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub open: BinnedMeasure,
    pub closed: BinnedMeasure,
    /// `Σ |w_open − w_closed| / Σ w_closed`.
    pub distance: f64,
    /// Totals over the window shrunk by one bin at each end, next to the
    /// raw totals.
    pub open_total: usize,
    pub closed_total: usize,
    pub open_shrunken: usize,
    pub closed_shrunken: usize,
}

/// Bins the open resonances (with cutoff) and the spectrum of the graph
/// with its leads removed on the same window.
pub fn compare_open_closed(
    graph: &QuantumGraph,
    window: (f64, f64),
    bin_width: f64,
    cutoff: f64,
    opts: &CountOptions,
) -> Result<Comparison, SolveError> {
    let open = empirical_measure(graph, window, bin_width, cutoff, opts)?;
    let closed_graph = graph.remove_leads();
    let closed_sys = SecularSystem::assemble(&closed_graph);
    let edges = bin_edges(window, bin_width)?;
    let closed_counts = solver::eigenphase_counts(&closed_sys, &edges)?;
    let closed = BinnedMeasure::from_counts(window, bin_width, closed_counts, 0.0, closed_graph.total_length());

    let diff: f64 = open.weights.iter().zip(&closed.weights).map(|(o, c)| (o - c).abs()).sum();
    let closed_weight = closed.total_weight();
    let distance = if closed_weight > 0.0 {
        diff / closed_weight
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let inner = |m: &BinnedMeasure| -> usize {
        let n = m.counts.len();
        if n <= 2 {
            0
        } else {
            m.counts[1..n - 1].iter().sum()
        }
    };
    Ok(Comparison {
        open_total: open.total_count(),
        closed_total: closed.total_count(),
        open_shrunken: inner(&open),
        closed_shrunken: inner(&closed),
        open,
        closed,
        distance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaScan {
    pub window: (f64, f64, f64),
    /// Decreasing.
    pub deltas: Vec<f64>,
    /// `N(δ)` = resonances in `[a1, a2] × [−a3, −δ]`, one per delta.
    pub counts: Vec<usize>,
    pub lead_vertices: usize,
    /// Slope of `ln N` against `ln(1/δ)` over points with `N ≥ 3`.
    pub fitted_exponent: f64,
    /// Fewer than two usable points: the exponent is reported as 0.
    pub fit_defined: bool,
    /// `max_δ N(δ) δ^{5/2} / g`.
    pub fitted_constant: f64,
}

/// Counts resonances in the boxes `[a1, a2] × [−a3, −δ]` for each δ, from a
/// single grid whose horizontal lines are the `−δ`.
pub fn delta_scan(
    graph: &QuantumGraph,
    a1: f64,
    a2: f64,
    a3: f64,
    deltas: &[f64],
    opts: &CountOptions,
) -> Result<DeltaScan, SolveError> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(SolveError::InvalidArgument("deltas must be positive".into()));
    }
    let mut sorted = deltas.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.dedup();
    if !(a3 > sorted[0] && a3.is_finite()) {
        return Err(SolveError::InvalidArgument(format!(
            "a3 = {a3} must exceed the largest delta {}",
            sorted[0]
        )));
    }
    if !(a2 > a1 && a1.is_finite() && a2.is_finite()) {
        return Err(SolveError::InvalidArgument(format!("need a1 < a2, got ({a1}, {a2})")));
    }
    let sys = SecularSystem::assemble(graph);
    let (xs, _) = columns(&[a1, a2], 1.0 / sys.max_length());
    let mut ys = vec![-a3];
    ys.extend(sorted.iter().map(|d| -d));
    let cells = solver::count_grid_cells(&sys, &xs, &ys, opts)?;
    let nx = xs.len() - 1;
    let mut counts = Vec::with_capacity(sorted.len());
    let mut running = 0;
    for j in 0..sorted.len() {
        running += cells[j * nx..(j + 1) * nx].iter().sum::<usize>();
        counts.push(running);
    }

    let g = graph.lead_vertex_count();
    let points: Vec<(f64, f64)> = sorted
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c >= 3)
        .map(|(d, &c)| ((1.0 / d).ln(), (c as f64).ln()))
        .collect();
    let (fitted_exponent, fit_defined) = match least_squares_slope(&points) {
        Some(slope) => (slope, true),
        None => (0.0, false),
    };
    let fitted_constant = sorted
        .iter()
        .zip(&counts)
        .map(|(d, &c)| c as f64 * d.powf(2.5) / g.max(1) as f64)
        .fold(0.0, f64::max);
    Ok(DeltaScan {
        window: (a1, a2, a3),
        deltas: sorted,
        counts,
        lead_vertices: g,
        fitted_exponent,
        fit_defined,
        fitted_constant,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Eigenvalues of `A + iB` with `Re z ∈ [a1, a2]` and `Im z ≤ −δ`.
pub fn hermitian_strip_count(pair: &HermitianPair, delta: f64, window: (f64, f64)) -> usize {
    pair.eigenvalues
        .iter()
        .filter(|z| z.re >= window.0 && z.re <= window.1 && z.im <= -delta)
        .count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditViolation {
    pub z: C64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub resonances: Vec<Resonance>,
    pub mirrored: Vec<Resonance>,
    /// `None` when the graph has a balanced vertex.
    pub strip_bound: Option<f64>,
    pub strip_violations: Vec<AuditViolation>,
    pub mirror_violations: Vec<AuditViolation>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.strip_violations.is_empty() && self.mirror_violations.is_empty()
    }
}

/// Finds the resonances in `rect` and in its mirror image under `z ↦ −z̄`,
/// then checks `−K − 1e−9 ≤ Im z ≤ 1e−9` and that each `−z̄` was found
/// (within `1e−6`).
pub fn audit(graph: &QuantumGraph, rect: &Rectangle, tol: f64, opts: &CountOptions) -> Result<AuditReport, SolveError> {
    let sys = SecularSystem::assemble(graph);
    let resonances = solver::find_resonances(&sys, rect, tol, opts)?;
    let mirrored = solver::find_resonances(&sys, &rect.mirrored(), tol, opts)?;
    let strip_bound = graph.strip_bound().ok();
    let violation = |r: &Resonance| AuditViolation {
        z: r.z,
        residual: r.residual,
    };
    let strip_violations = resonances
        .iter()
        .filter(|r| {
            let below = strip_bound.is_some_and(|k| r.z.im < -k - 1e-9);
            below || r.z.im > 1e-9
        })
        .map(violation)
        .collect();
    let mirror_violations = resonances
        .iter()
        .filter(|r| {
            let image = C64::new(-r.z.re, r.z.im);
            !mirrored.iter().any(|m| (m.z - image).norm() < 1e-6)
        })
        .map(violation)
        .collect();
    Ok(AuditReport {
        resonances,
        mirrored,
        strip_bound,
        strip_violations,
        mirror_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{hermitian_pair, Fixture};
    use core::f64::consts::PI;

    fn opts() -> CountOptions {
        CountOptions::default()
    }

    fn rect(a: f64, b: f64, c: f64, d: f64) -> Rectangle {
        Rectangle::new(a, b, c, d).unwrap()
    }

    #[test]
    fn box_counts_of_fixtures() {
        let interval = Fixture::Interval(1.0).build().unwrap();
        assert_eq!(box_count(&interval, &rect(0.5, 3.5, -0.1, 0.1), &opts()).unwrap(), 1);
        let balanced = Fixture::BalancedPath { edges: 3, length: 1.0 }.build().unwrap();
        assert_eq!(box_count(&balanced, &rect(0.5, 10.0, -3.0, -1e-4), &opts()).unwrap(), 0);
        let tri = Fixture::TriangleLead.build().unwrap();
        let k = tri.strip_bound().unwrap();
        assert_eq!(box_count(&tri, &rect(0.5, 10.0, -k - 2.0, -k - 0.01), &opts()).unwrap(), 0);
    }

    #[test]
    fn interval_measure() {
        let g = Fixture::Interval(1.0).build().unwrap();
        let m = empirical_measure(&g, (0.5, 10.0), 0.5, 3.0, &opts()).unwrap();
        assert_eq!(m.counts.len(), 19);
        assert_eq!(m.total_count(), 3);
        for k in 1..=3 {
            let bin = ((k as f64 * PI - 0.5) / 0.5).floor() as usize;
            assert_eq!(m.counts[bin], 1);
            assert_eq!(m.weights[bin], 1.0);
        }
        let m0 = empirical_measure(&g, (0.5, 10.0), 0.5, 0.0, &opts()).unwrap();
        assert_eq!(m0.counts, m.counts);
        let empty = empirical_measure(&g, (5.0, 5.1), 0.5, 3.0, &opts()).unwrap();
        assert_eq!(empty.counts, vec![0]);
    }

    #[test]
    fn measure_total_matches_box_count() {
        let g = Fixture::TriangleLead.build().unwrap();
        let m = empirical_measure(&g, (1.0, 9.0), 0.5, 2.0, &opts()).unwrap();
        let top = 1.0 / g.max_length();
        let n = box_count(&g, &rect(1.0, 9.0, -2.0, top), &opts()).unwrap();
        assert_eq!(m.total_count(), n);
        assert!((m.total_weight() * m.total_length - n as f64).abs() < 1e-12);
    }

    #[test]
    fn comparisons() {
        let closed = Fixture::NeumannPath { edges: 3, length: 1.0 }.build().unwrap();
        let c = compare_open_closed(&closed, (0.5, 10.0), 0.5, 2.0, &opts()).unwrap();
        assert_eq!(c.distance, 0.0);
        assert_eq!(c.open.counts, c.closed.counts);

        let tri = Fixture::TriangleLead.build().unwrap();
        let c = compare_open_closed(&tri, (1.0, 15.0), 0.5, 2.0, &opts()).unwrap();
        assert!(c.distance.is_finite());
        assert!(c.open_total <= c.closed_total);
    }

    #[test]
    fn scan_of_balanced_path_is_empty() {
        let g = Fixture::BalancedPath { edges: 3, length: 1.0 }.build().unwrap();
        let scan = delta_scan(&g, 0.5, 10.0, 3.0, &[0.1, 0.4, 0.2], &opts()).unwrap();
        assert_eq!(scan.deltas, vec![0.4, 0.2, 0.1]);
        assert_eq!(scan.counts, vec![0, 0, 0]);
        assert!(!scan.fit_defined);
        assert_eq!(scan.fitted_exponent, 0.0);
        assert!(delta_scan(&g, 0.5, 10.0, 0.3, &[0.4], &opts()).is_err());
    }

    #[test]
    fn scan_counts_are_nested() {
        let g = Fixture::CommensurateCycle { k: 4, leads: 2 }.build().unwrap();
        let deltas = [0.8, 0.4, 0.2, 0.1, 0.05];
        let scan = delta_scan(&g, 0.5, 12.0, 3.0, &deltas, &opts()).unwrap();
        assert!(scan.counts.windows(2).all(|w| w[0] <= w[1]));
        for (d, c) in scan.deltas.iter().zip(&scan.counts) {
            let direct = box_count(&g, &rect(0.5, 12.0, -3.0, -d), &opts()).unwrap();
            assert_eq!(*c, direct);
            assert!(*c as f64 <= scan.fitted_constant * 2.0 / d.powf(2.5) + 1e-9);
        }
    }

    #[test]
    fn least_squares_on_exact_power() {
        let pts: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0].iter().map(|x| (x.ln(), 3.0 * x.ln() + 0.5)).collect();
        assert!((least_squares_slope(&pts).unwrap() - 3.0).abs() < 1e-12);
        assert!(least_squares_slope(&pts[..1]).is_none());
    }

    #[test]
    fn hermitian_counts() {
        let p = hermitian_pair(40, 0, 0.05, 2).unwrap();
        for d in [1e-3, 1e-2, 0.1] {
            assert_eq!(hermitian_strip_count(&p, d, (-1.0, 1.0)), 0);
        }
        let q = hermitian_pair(40, 40, 0.5, 2).unwrap();
        assert!(hermitian_strip_count(&q, 0.01, (-2.0, 2.0)) <= 40);
    }

    #[test]
    fn audit_of_triangle_lead() {
        let g = Fixture::TriangleLead.build().unwrap();
        let report = audit(&g, &rect(6.0, 6.6, -0.2, 0.01), 1e-10, &opts()).unwrap();
        assert!(report.passed());
        assert!(!report.resonances.is_empty());
        assert_eq!(report.resonances.len(), report.mirrored.len());

        let closed = Fixture::NeumannPath { edges: 2, length: 1.0 }.build().unwrap();
        let report = audit(&closed, &rect(0.5, 7.0, -0.1, 0.1), 1e-10, &opts()).unwrap();
        assert!(report.resonances.iter().all(|r| r.z.im.abs() < 1e-9));
        assert!(report.strip_bound.is_none() || report.passed());
    }
}
