//! Pipelines behind each subcommand. They compute; the caller does the I/O.

use rayon::prelude::*;
use reslab_core::ensembles::{hermitian_pair, random_regular_graph};
use reslab_core::solver::{self, CountOptions, Rectangle, Resonance};
use reslab_core::statistics::{self, BinnedMeasure, Comparison};
use reslab_core::{QuantumGraph, SecularSystem};
use serde::Serialize;

use crate::config::{CompareConfig, EnsembleConfig, HermitianConfig, ResonancesConfig, ScanConfig};
use crate::error::CliError;
use crate::report::{Report, ResonanceRow};

/// Text summary of a graph's validation report and strip bound.
pub fn validate_summary(graph: &QuantumGraph) -> String {
    let report = graph.validate(None);
    let o = report.observed;
    let mut lines = vec![
        format!("vertices: {}, edges: {}, bonds: {}", graph.vertex_count(), graph.edge_count(), 2 * graph.edge_count()),
        format!(
            "max degree D: {}, max leads n0: {}, L_min: {}, L_max: {}",
            o.max_degree, o.max_leads, o.min_length, o.max_length
        ),
        format!("lead vertices g: {}, total length: {}", report.lead_vertex_count, report.total_length),
    ];
    match graph.strip_bound() {
        Ok(k) => lines.push(format!("unbalanced: true, strip bound: {k:.4}")),
        Err(e) => {
            lines.push("unbalanced: false".into());
            lines.push(format!("warning: balanced vertices: {:?} ({e})", report.balanced_vertices));
        }
    }
    lines.join("\n") + "\n"
}

pub struct ResonanceRun {
    pub rows: Vec<ResonanceRow>,
    pub strip_bound: Option<f64>,
    pub report: Report,
}

#[derive(Serialize)]
struct ResonanceDiagnostics {
    total_multiplicity: usize,
    unrefined: usize,
    clusters: usize,
    max_residual: f64,
    strip_bound: Option<f64>,
}

pub fn resonances(config: &ResonancesConfig) -> Result<ResonanceRun, CliError> {
    let graph = config.graph.load()?;
    let [a, b, c, d] = config.rect;
    let rect = Rectangle::new(a, b, c, d)?;
    let opts = CountOptions {
        allow_origin: config.allow_origin,
        max_evaluations: config.max_evaluations,
        ..CountOptions::default()
    };
    let found: Vec<Resonance> = solver::find_resonances(&SecularSystem::assemble(&graph), &rect, config.tol, &opts)?;
    let rows: Vec<ResonanceRow> = found.iter().map(ResonanceRow::from).collect();
    let strip_bound = graph.strip_bound().ok();
    let diagnostics = ResonanceDiagnostics {
        total_multiplicity: found.iter().map(|r| r.multiplicity).sum(),
        unrefined: found.iter().filter(|r| !r.refined).count(),
        clusters: found.iter().filter(|r| r.cluster).count(),
        max_residual: found.iter().map(|r| r.residual).fold(0.0, f64::max),
        strip_bound,
    };
    let report = Report::new(config, serde_json::json!({ "resonances": &rows }), diagnostics);
    Ok(ResonanceRun {
        rows,
        strip_bound,
        report,
    })
}

#[derive(Serialize)]
struct MeasureOut<'a> {
    counts: &'a [usize],
    weights: &'a [f64],
    cutoff: f64,
    total_length: f64,
}

impl<'a> From<&'a BinnedMeasure> for MeasureOut<'a> {
    fn from(m: &'a BinnedMeasure) -> Self {
        Self {
            counts: &m.counts,
            weights: &m.weights,
            cutoff: m.cutoff,
            total_length: m.total_length,
        }
    }
}

#[derive(Serialize)]
struct ComparisonOut<'a> {
    bin_edges: Vec<f64>,
    open: MeasureOut<'a>,
    closed: MeasureOut<'a>,
    distance: f64,
}

#[derive(Serialize)]
struct ComparisonDiagnostics {
    open_total: usize,
    closed_total: usize,
    /// Counts with the outermost bin on each side dropped.
    open_shrunken: usize,
    closed_shrunken: usize,
    lead_vertices: usize,
    strip_bound: Option<f64>,
}

fn default_cutoff(graph: &QuantumGraph, cutoff: Option<f64>) -> f64 {
    cutoff.unwrap_or_else(|| 2.0 / graph.min_length())
}

fn comparison_parts<'a>(graph: &QuantumGraph, c: &'a Comparison) -> (ComparisonOut<'a>, ComparisonDiagnostics) {
    let edges = (0..=c.open.counts.len())
        .map(|k| c.open.window.0 + k as f64 * c.open.bin_width)
        .map(|x| x.min(c.open.window.1))
        .collect();
    (
        ComparisonOut {
            bin_edges: edges,
            open: (&c.open).into(),
            closed: (&c.closed).into(),
            distance: c.distance,
        },
        ComparisonDiagnostics {
            open_total: c.open_total,
            closed_total: c.closed_total,
            open_shrunken: c.open_shrunken,
            closed_shrunken: c.closed_shrunken,
            lead_vertices: graph.lead_vertex_count(),
            strip_bound: graph.strip_bound().ok(),
        },
    )
}

pub fn compare(config: &CompareConfig) -> Result<Report, CliError> {
    let graph = config.graph.load()?;
    let cutoff = default_cutoff(&graph, config.cutoff);
    let window = (config.window[0], config.window[1]);
    let c = statistics::compare_open_closed(&graph, window, config.bin_width, cutoff, &CountOptions::default())?;
    let (results, diagnostics) = comparison_parts(&graph, &c);
    Ok(Report::new(config, results, diagnostics))
}

#[derive(Serialize)]
struct ScanOut<'a> {
    deltas: &'a [f64],
    counts: &'a [usize],
    fitted_exponent: f64,
    fit_defined: bool,
    fitted_constant: f64,
}

pub fn scan(config: &ScanConfig) -> Result<Report, CliError> {
    let graph = config.graph.load()?;
    let [a1, a2, a3] = config.window;
    let s = statistics::delta_scan(&graph, a1, a2, a3, &config.deltas, &CountOptions::default())?;
    let results = ScanOut {
        deltas: &s.deltas,
        counts: &s.counts,
        fitted_exponent: s.fitted_exponent,
        fit_defined: s.fit_defined,
        fitted_constant: s.fitted_constant,
    };
    let diagnostics = serde_json::json!({ "lead_vertices": s.lead_vertices, "strip_bound": graph.strip_bound().ok() });
    Ok(Report::new(config, results, diagnostics))
}

#[derive(Serialize)]
struct MemberOut {
    n_vertices: usize,
    seed: u64,
    distance: f64,
    open_total: usize,
    closed_total: usize,
    open_shrunken: usize,
    closed_shrunken: usize,
    strip_bound: Option<f64>,
}

pub fn ensemble(config: &EnsembleConfig) -> Result<Report, CliError> {
    let members: Vec<MemberOut> = (0..config.n_list.len())
        .into_par_iter()
        .map(|i| -> Result<MemberOut, CliError> {
            let spec = config.member(i);
            let graph = random_regular_graph(&spec.spec())?;
            let cutoff = default_cutoff(&graph, config.cutoff);
            let window = (config.window[0], config.window[1]);
            let c = statistics::compare_open_closed(&graph, window, config.bin_width, cutoff, &CountOptions::default())?;
            Ok(MemberOut {
                n_vertices: spec.n_vertices,
                seed: spec.seed,
                distance: c.distance,
                open_total: c.open_total,
                closed_total: c.closed_total,
                open_shrunken: c.open_shrunken,
                closed_shrunken: c.closed_shrunken,
                strip_bound: graph.strip_bound().ok(),
            })
        })
        .collect::<Result<_, _>>()?;
    let distances: Vec<f64> = members.iter().map(|m| m.distance).collect();
    let decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    Ok(Report::new(
        config,
        serde_json::json!({ "distances": distances, "members": members }),
        serde_json::json!({ "strictly_decreasing": decreasing }),
    ))
}

#[derive(Serialize)]
struct DampingOut {
    damp_count: usize,
    trace_norm_b: f64,
    /// One count per delta.
    counts: Vec<usize>,
    max_abs_eigenvalue: f64,
    max_imaginary_part: f64,
}

pub fn hermitian(config: &HermitianConfig) -> Result<Report, CliError> {
    let window = (config.window[0], config.window[1]);
    let rows: Vec<DampingOut> = config
        .damp_counts
        .par_iter()
        .map(|&damp| -> Result<DampingOut, CliError> {
            let pair = hermitian_pair(config.n, damp, config.damp_scale, config.seed)?;
            Ok(DampingOut {
                damp_count: damp,
                trace_norm_b: pair.trace_norm_b,
                counts: config
                    .deltas
                    .iter()
                    .map(|&d| statistics::hermitian_strip_count(&pair, d, window))
                    .collect(),
                max_abs_eigenvalue: pair.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max),
                max_imaginary_part: pair.eigenvalues.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect::<Result<_, _>>()?;
    // C = max over δ of count·δ^{5/2}/‖B‖₁ at the first damped row
    let fitted = rows.iter().find(|r| r.trace_norm_b > 0.0).map(|r| {
        r.counts
            .iter()
            .zip(&config.deltas)
            .map(|(&c, d)| c as f64 * d.powf(2.5) / r.trace_norm_b)
            .fold(0.0, f64::max)
    });
    let bound_holds = fitted.map(|c| {
        rows.iter().all(|r| {
            r.counts
                .iter()
                .zip(&config.deltas)
                .all(|(&n, d)| n as f64 <= 10.0 * c * r.trace_norm_b / d.powf(2.5))
        })
    });
    Ok(Report::new(
        config,
        serde_json::json!({ "rows": rows, "fitted_constant": fitted }),
        serde_json::json!({ "bound_holds": bound_holds }),
    ))
}
