//! Run configurations. Each report embeds the configuration that produced
//! it, and loading that configuration back reproduces the run.

use std::path::PathBuf;
use std::str::FromStr;

use reslab_core::ensembles::{random_regular_graph, EnsembleSpec, Fixture};
use reslab_core::solver::Rectangle;
use reslab_core::QuantumGraph;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::format::parse_graph;

pub const SEED_VAR: &str = "RESLAB_SEED";

/// Where a graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    File(PathBuf),
    Fixture(String),
    Random(RandomGraph),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomGraph {
    pub n_vertices: usize,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_lengths")]
    pub length_range: [f64; 2],
    pub lead_count: usize,
    pub seed: u64,
}

impl RandomGraph {
    pub fn spec(&self) -> EnsembleSpec {
        EnsembleSpec {
            n_vertices: self.n_vertices,
            degree: self.degree,
            length_range: (self.length_range[0], self.length_range[1]),
            lead_count: self.lead_count,
            seed: self.seed,
        }
    }
}

impl GraphSource {
    pub fn load(&self) -> Result<QuantumGraph, CliError> {
        match self {
            GraphSource::File(path) => parse_graph(&read_text(path)?).map_err(CliError::from),
            GraphSource::Fixture(name) => Ok(Fixture::from_str(name)?.build()?),
            GraphSource::Random(r) => Ok(random_regular_graph(&r.spec())?),
        }
    }

    fn set_seed(&mut self, seed: u64) {
        if let GraphSource::Random(r) = self {
            r.seed = seed;
        }
    }
}

pub fn read_text(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn default_degree() -> usize {
    3
}

fn default_lengths() -> [f64; 2] {
    [1.0, 2.0]
}

fn default_bin_width() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonancesConfig {
    pub graph: GraphSource,
    /// `[re_min, re_max, im_min, im_max]`.
    pub rect: [f64; 4],
    pub tol: f64,
    #[serde(default)]
    pub allow_origin: bool,
    /// Quadrature budget per contour segment.
    #[serde(default = "default_budget")]
    pub max_evaluations: usize,
}

fn default_budget() -> usize {
    reslab_core::solver::CountOptions::default().max_evaluations
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub graph: GraphSource,
    pub window: [f64; 2],
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    /// Depth below the real axis kept on the open side; `2/L_min` when absent.
    #[serde(default)]
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub graph: GraphSource,
    /// `[a1, a2, a3]`: real window and depth of the boxes.
    pub window: [f64; 3],
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_list: Vec<usize>,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_lengths")]
    pub length_range: [f64; 2],
    pub lead_count: usize,
    /// Member `i` of `n_list` uses `seed ^ i`.
    pub seed: u64,
    pub window: [f64; 2],
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    #[serde(default)]
    pub cutoff: Option<f64>,
}

impl EnsembleConfig {
    pub fn member(&self, index: usize) -> RandomGraph {
        RandomGraph {
            n_vertices: self.n_list[index],
            degree: self.degree,
            length_range: self.length_range,
            lead_count: self.lead_count,
            seed: self.seed ^ index as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HermitianConfig {
    pub n: usize,
    pub damp_counts: Vec<usize>,
    pub damp_scale: f64,
    pub deltas: Vec<f64>,
    #[serde(default = "default_hermitian_window")]
    pub window: [f64; 2],
    pub seed: u64,
}

fn default_hermitian_window() -> [f64; 2] {
    [-1.0, 1.0]
}

/// A command configuration as loaded from a `--config` file.
pub trait Config: Serialize + for<'de> Deserialize<'de> {
    fn validate(&self) -> Result<(), CliError>;
    fn set_seed(&mut self, seed: u64);
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Input(format!("{name} must be positive, got {x}")))
    }
}

fn ordered(name: &str, lo: f64, hi: f64) -> Result<(), CliError> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(CliError::Input(format!("{name} needs lo < hi, got {lo}:{hi}")))
    }
}

impl Config for ResonancesConfig {
    fn validate(&self) -> Result<(), CliError> {
        let [a, b, c, d] = self.rect;
        Rectangle::new(a, b, c, d)?;
        positive("tol", self.tol)
    }

    fn set_seed(&mut self, seed: u64) {
        self.graph.set_seed(seed);
    }
}

impl Config for CompareConfig {
    fn validate(&self) -> Result<(), CliError> {
        ordered("window", self.window[0], self.window[1])?;
        positive("bin_width", self.bin_width)?;
        match self.cutoff {
            Some(c) if !(c >= 0.0 && c.is_finite()) => Err(CliError::Input(format!("cutoff must be nonnegative, got {c}"))),
            _ => Ok(()),
        }
    }

    fn set_seed(&mut self, seed: u64) {
        self.graph.set_seed(seed);
    }
}

impl Config for ScanConfig {
    fn validate(&self) -> Result<(), CliError> {
        ordered("window", self.window[0], self.window[1])?;
        positive("a3", self.window[2])?;
        if self.deltas.is_empty() {
            return Err(CliError::Input("deltas must not be empty".into()));
        }
        self.deltas.iter().try_for_each(|&d| positive("delta", d))
    }

    fn set_seed(&mut self, seed: u64) {
        self.graph.set_seed(seed);
    }
}

impl Config for EnsembleConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.n_list.is_empty() {
            return Err(CliError::Input("n_list must not be empty".into()));
        }
        for i in 0..self.n_list.len() {
            self.member(i).spec().validate()?;
        }
        CompareConfig {
            graph: GraphSource::Fixture(String::new()),
            window: self.window,
            bin_width: self.bin_width,
            cutoff: self.cutoff,
        }
        .validate()
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

impl Config for HermitianConfig {
    fn validate(&self) -> Result<(), CliError> {
        ordered("window", self.window[0], self.window[1])?;
        positive("damp_scale", self.damp_scale)?;
        if let Some(&c) = self.damp_counts.iter().find(|&&c| c > self.n) {
            return Err(CliError::Input(format!("damp_count {c} exceeds n = {}", self.n)));
        }
        self.deltas.iter().try_for_each(|&d| positive("delta", d))
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

pub fn load_config<C: Config>(path: &std::path::Path) -> Result<C, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Applies `RESLAB_SEED` (if set) and validates.
pub fn finish<C: Config>(mut config: C, seed_override: Option<&str>) -> Result<C, CliError> {
    if let Some(text) = seed_override {
        let seed = text
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("{SEED_VAR} must be an unsigned integer, got {text:?}")))?;
        config.set_seed(seed);
    }
    config.validate()?;
    Ok(config)
}

/// Parses `lo:hi` with decimal or scientific literals.
pub fn parse_range(text: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = text.split_once(':').ok_or_else(|| format!("expected lo:hi, got {text:?}"))?;
    let number = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("not a number: {s:?}"));
    let (lo, hi) = (number(lo)?, number(hi)?);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("need finite lo < hi, got {text:?}"));
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("-3:-1e-4"), Ok((-3.0, -1e-4)));
        assert_eq!(parse_range("0.5:12"), Ok((0.5, 12.0)));
        assert_eq!(parse_range("-0.5:0"), Ok((-0.5, 0.0)));
        assert!(parse_range("1:1").is_err());
        assert!(parse_range("1,2").is_err());
        assert!(parse_range("a:2").is_err());
        assert!(parse_range("0:inf").is_err());
    }

    #[test]
    fn seed_override_and_validation() {
        let config = EnsembleConfig {
            n_list: vec![40, 80],
            degree: 3,
            length_range: [1.0, 2.0],
            lead_count: 2,
            seed: 1,
            window: [1.0, 20.0],
            bin_width: 0.5,
            cutoff: None,
        };
        let c = finish(config.clone(), Some("77")).unwrap();
        assert_eq!(c.seed, 77);
        assert_eq!(c.member(1).seed, 76);
        assert!(finish(config.clone(), Some("x")).is_err());
        assert!(finish(EnsembleConfig { n_list: vec![41], ..config }, None).is_err());
    }

    #[test]
    fn graph_source_json() {
        let text = r#"{"graph":{"random":{"n_vertices":10,"lead_count":1,"seed":3}},"window":[1,5]}"#;
        let c: CompareConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.bin_width, 0.5);
        let g = c.graph.load().unwrap();
        assert_eq!(g.vertex_count(), 10);
        let fixture: GraphSource = serde_json::from_str(r#"{"fixture":"triangle_lead"}"#).unwrap();
        assert_eq!(fixture.load().unwrap().lead_vertex_count(), 1);
    }
}
