//! Seeded random regular graphs, named fixtures and the damped Hermitian
//! matrix example.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::EnsembleError;
use crate::graph::{Edge, QuantumGraph};
use crate::linalg::{self, CMatrix, C64};

/// Generator streams, one per purpose, so that changing one parameter does
/// not reshuffle the draws of another.
const TOPOLOGY_STREAM: u64 = 1;
const LENGTH_STREAM: u64 = 2;
const LEAD_STREAM: u64 = 3;
const MATRIX_STREAM: u64 = 4;
const DAMPING_STREAM: u64 = 5;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub n_vertices: usize,
    pub degree: usize,
    pub length_range: (f64, f64),
    /// Number of vertices receiving one lead each.
    pub lead_count: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        let (lo, hi) = self.length_range;
        let problem = if self.n_vertices == 0 {
            Some("n_vertices must be positive".to_string())
        } else if self.degree < 3 {
            Some(format!("degree must be at least 3, got {}", self.degree))
        } else if !(self.n_vertices * self.degree).is_multiple_of(2) {
            Some(format!("degree·n_vertices must be even ({}·{})", self.degree, self.n_vertices))
        } else if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            Some(format!("need 0 < L_min ≤ L_max, got [{lo}, {hi}]"))
        } else if self.lead_count > self.n_vertices {
            Some(format!("lead_count {} exceeds n_vertices {}", self.lead_count, self.n_vertices))
        } else {
            None
        };
        problem.map_or(Ok(()), |p| Err(EnsembleError::InvalidSpec(p)))
    }

    /// Spec of ensemble member `index`: same parameters, seed `seed ^ index`.
    pub fn member(&self, index: u64) -> Self {
        Self {
            seed: self.seed ^ index,
            ..*self
        }
    }
}

/// A `d`-regular multigraph from the pairing model: `d` half-edges per
/// vertex, shuffled and joined in consecutive pairs (loops and multiple
/// edges are kept). Lengths are uniform on the length range and
/// `lead_count` distinct vertices get one lead.
pub fn random_regular_graph(spec: &EnsembleSpec) -> Result<QuantumGraph, EnsembleError> {
    spec.validate()?;
    let n = spec.n_vertices;
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| core::iter::repeat_n(v, spec.degree)).collect();
    stubs.shuffle(&mut rng(spec.seed, TOPOLOGY_STREAM));

    let (lo, hi) = spec.length_range;
    let mut lengths = rng(spec.seed, LENGTH_STREAM);
    let edges = stubs
        .chunks_exact(2)
        .map(|pair| Edge {
            u: pair[0],
            v: pair[1],
            length: if lo == hi { lo } else { lengths.random_range(lo..=hi) },
        })
        .collect();

    let mut leads = vec![0u32; n];
    let chosen = rand::seq::index::sample(&mut rng(spec.seed, LEAD_STREAM), n, spec.lead_count);
    for v in chosen.iter() {
        leads[v] = 1;
    }
    Ok(QuantumGraph::new(n, edges, leads)?)
}

/// Named deterministic graphs with known spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fixture {
    /// One closed edge of the given length.
    Interval(f64),
    /// `edges` edges of equal length in a row, no leads.
    NeumannPath { edges: usize, length: f64 },
    /// The same path with one lead at each end.
    BalancedPath { edges: usize, length: f64 },
    /// `k`-cycle of unit edges with one lead on each of the first `leads`
    /// vertices.
    CommensurateCycle { k: usize, leads: usize },
    /// Unit triangle with one lead.
    TriangleLead,
}

impl Fixture {
    pub fn build(&self) -> Result<QuantumGraph, EnsembleError> {
        match *self {
            Fixture::Interval(length) => Ok(QuantumGraph::closed(2, vec![Edge { u: 0, v: 1, length }])?),
            Fixture::NeumannPath { edges, length } => path(edges, length, false),
            Fixture::BalancedPath { edges, length } => path(edges, length, true),
            Fixture::CommensurateCycle { k, leads } => cycle(k, leads),
            Fixture::TriangleLead => cycle(3, 1),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Fixture::Interval(l) => format!("interval({l})"),
            Fixture::NeumannPath { edges, length } => format!("neumann_path({edges}, {length})"),
            Fixture::BalancedPath { edges, length } => format!("balanced_path({edges}, {length})"),
            Fixture::CommensurateCycle { k, leads } => format!("commensurate_cycle({k}, {leads})"),
            Fixture::TriangleLead => "triangle_lead".into(),
        }
    }
}

fn path(edges: usize, length: f64, balanced: bool) -> Result<QuantumGraph, EnsembleError> {
    if edges == 0 {
        return Err(EnsembleError::InvalidSpec("path needs at least one edge".into()));
    }
    let list = (0..edges).map(|i| Edge { u: i, v: i + 1, length }).collect();
    let mut leads = vec![0u32; edges + 1];
    if balanced {
        leads[0] = 1;
        leads[edges] = 1;
    }
    Ok(QuantumGraph::new(edges + 1, list, leads)?)
}

fn cycle(k: usize, leads: usize) -> Result<QuantumGraph, EnsembleError> {
    if k < 2 || leads > k {
        return Err(EnsembleError::InvalidSpec(format!(
            "commensurate_cycle needs k ≥ 2 and leads ≤ k, got k = {k}, leads = {leads}"
        )));
    }
    let list = (0..k).map(|i| Edge { u: i, v: (i + 1) % k, length: 1.0 }).collect();
    let lead_vector = (0..k).map(|i| u32::from(i < leads)).collect();
    Ok(QuantumGraph::new(k, list, lead_vector)?)
}

impl FromStr for Fixture {
    type Err = EnsembleError;

    /// Parses `interval(L)`, `neumann_path(n, L)`, `balanced_path(n, L)`,
    /// `commensurate_cycle(k, leads)` and `triangle_lead`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || EnsembleError::UnknownFixture(s.to_string());
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let inner = s[open + 1..].strip_suffix(')').ok_or_else(unknown)?;
                let args: Vec<&str> = inner.split(',').map(str::trim).filter(|a| !a.is_empty()).collect();
                (s[..open].trim(), args)
            }
            None => (s, Vec::new()),
        };
        let real = |a: &str| a.parse::<f64>().map_err(|_| unknown());
        let int = |a: &str| a.parse::<usize>().map_err(|_| unknown());
        match (name, args.as_slice()) {
            ("interval", []) => Ok(Fixture::Interval(1.0)),
            ("interval", [l]) => Ok(Fixture::Interval(real(l)?)),
            ("neumann_path", [n, l]) => Ok(Fixture::NeumannPath {
                edges: int(n)?,
                length: real(l)?,
            }),
            ("balanced_path", [n, l]) => Ok(Fixture::BalancedPath {
                edges: int(n)?,
                length: real(l)?,
            }),
            ("commensurate_cycle", [k, g]) => Ok(Fixture::CommensurateCycle { k: int(k)?, leads: int(g)? }),
            ("triangle_lead", []) => Ok(Fixture::TriangleLead),
            _ => Err(unknown()),
        }
    }
}

/// A Hermitian `A` with `‖A‖ = 1`, a diagonal damping `B ≤ 0` and the
/// spectrum of `A + iB`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianPair {
    pub a: CMatrix,
    pub b: CMatrix,
    pub eigenvalues: Vec<C64>,
    /// `‖B‖₁ = damp_scale · damp_count`.
    pub trace_norm_b: f64,
    pub damped: Vec<usize>,
}

pub fn hermitian_pair(n: usize, damp_count: usize, damp_scale: f64, seed: u64) -> Result<HermitianPair, EnsembleError> {
    if n == 0 || damp_count > n || !(damp_scale > 0.0 && damp_scale.is_finite()) {
        return Err(EnsembleError::InvalidSpec(format!(
            "need n > 0, damp_count ≤ n and damp_scale > 0 (n = {n}, damp_count = {damp_count}, damp_scale = {damp_scale})"
        )));
    }
    let mut gauss = rng(seed, MATRIX_STREAM);
    let scale = core::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = gauss.sample(StandardNormal);
        let im: f64 = gauss.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let mut a = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    let spectrum = linalg::hermitian_eigenvalues(&a);
    let norm = spectrum.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    a /= C64::new(norm, 0.0);

    let mut damped: Vec<usize> = rand::seq::index::sample(&mut rng(seed, DAMPING_STREAM), n, damp_count).into_vec();
    damped.sort_unstable();
    let mut b = CMatrix::zeros(n, n);
    for &k in &damped {
        b[(k, k)] = C64::new(-damp_scale, 0.0);
    }
    let m = &a + &b * C64::i();
    let mut eigenvalues = linalg::eigenvalues(&m);
    eigenvalues.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(HermitianPair {
        a,
        b,
        eigenvalues,
        trace_norm_b: damp_scale * damp_count as f64,
        damped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, g: usize, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            n_vertices: n,
            degree: 3,
            length_range: (1.0, 2.0),
            lead_count: g,
            seed,
        }
    }

    #[test]
    fn handshake_and_determinism() {
        let g = random_regular_graph(&spec(4, 0, 7)).unwrap();
        assert!(g.is_closed());
        assert_eq!(g.edge_count(), 6);
        assert!(g.degrees().iter().all(|&d| d == 3));
        assert_eq!(g, random_regular_graph(&spec(4, 0, 7)).unwrap());
    }

    #[test]
    fn leads_do_not_reshuffle_lengths() {
        let closed = random_regular_graph(&spec(20, 0, 11)).unwrap();
        let open = random_regular_graph(&spec(20, 2, 11)).unwrap();
        assert_eq!(closed.edges(), open.edges());
        assert_eq!(open.leads().iter().filter(|&&n| n == 1).count(), 2);
        assert!(open.is_unbalanced());
        assert!(open
            .edges()
            .iter()
            .all(|e| (1.0..=2.0).contains(&e.length)));
    }

    #[test]
    fn invalid_specs() {
        assert!(random_regular_graph(&spec(5, 0, 1)).is_err());
        assert!(random_regular_graph(&EnsembleSpec { degree: 2, ..spec(4, 0, 1) }).is_err());
        assert!(random_regular_graph(&spec(4, 5, 1)).is_err());
        assert!(random_regular_graph(&EnsembleSpec {
            length_range: (2.0, 1.0),
            ..spec(4, 0, 1)
        })
        .is_err());
    }

    #[test]
    fn member_seeds() {
        let s = spec(10, 1, 0b1010);
        assert_eq!(s.member(0b0110).seed, 0b1100);
    }

    #[test]
    fn fixtures_parse_and_build() {
        let cases = [
            ("interval(1)", 2, 1, 0),
            ("interval", 2, 1, 0),
            ("neumann_path(4, 1)", 5, 4, 0),
            ("balanced_path(5, 1)", 6, 5, 2),
            ("commensurate_cycle(4, 2)", 4, 4, 2),
            ("triangle_lead", 3, 3, 1),
        ];
        for (text, v, e, g) in cases {
            let f: Fixture = text.parse().unwrap();
            let graph = f.build().unwrap();
            assert_eq!((graph.vertex_count(), graph.edge_count(), graph.lead_vertex_count()), (v, e, g), "{text}");
            assert_eq!(f.name().parse::<Fixture>().unwrap(), f);
        }
        assert_eq!(Fixture::TriangleLead.build(), Fixture::CommensurateCycle { k: 3, leads: 1 }.build());
        assert!(matches!("square".parse::<Fixture>(), Err(EnsembleError::UnknownFixture(_))));
        assert!(matches!("interval(x)".parse::<Fixture>(), Err(EnsembleError::UnknownFixture(_))));
        let balanced = Fixture::BalancedPath { edges: 5, length: 1.0 }.build().unwrap();
        assert_eq!(balanced.balanced_vertices(), vec![0, 5]);
    }

    #[test]
    fn undamped_pair_is_real() {
        let p = hermitian_pair(30, 0, 0.1, 3).unwrap();
        assert!(p.eigenvalues.iter().all(|z| z.im.abs() < 1e-10));
        let spectrum = linalg::hermitian_eigenvalues(&p.a);
        let top = spectrum.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!((top - 1.0).abs() < 1e-12);
        assert_eq!(p.trace_norm_b, 0.0);
    }

    #[test]
    fn fully_damped_trace_identity() {
        let (n, s) = (25, 0.2);
        let p = hermitian_pair(n, n, s, 9).unwrap();
        let im_sum: f64 = p.eigenvalues.iter().map(|z| z.im).sum();
        assert!((im_sum + n as f64 * s).abs() < 1e-8 * n as f64 * s);
        assert!(p.eigenvalues.iter().all(|z| z.norm() <= 2.0 && z.im <= 1e-10));
    }

    #[test]
    fn weyl_perturbation() {
        let p = hermitian_pair(40, 6, 0.05, 5).unwrap();
        let real = linalg::hermitian_eigenvalues(&p.a);
        for z in &p.eigenvalues {
            let nearest = real.iter().map(|x| (z - C64::new(*x, 0.0)).norm()).fold(f64::INFINITY, f64::min);
            assert!(nearest <= 0.05 + 1e-8);
        }
        assert_eq!(p.damped.len(), 6);
    }
}
