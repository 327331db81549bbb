//! Bond scattering matrix `S`, the secular matrix `U(z) = S D(z)` and the
//! secular determinant `det(Id − U(z))`.
//!
//! Two evaluation routes are provided for the logarithmic derivative of the
//! determinant:
//!
//! * the bond route, a pivoted LU of the `2|E| × 2|E|` matrix `Id − U(z)`;
//! * the vertex route, which uses `S = (−Id + E c Eᵀ) J` (each vertex block
//!   of `S` is a rank-one perturbation of `−Id`, `J` swaps a bond with its
//!   reverse) and the matrix determinant lemma to get
//!
//!   `det(Id − U(z)) = Π_e (1 − w_e²) · det(Id_V − diag(c) K(z))`,
//!   `w_e = e^{i z L_e}`, `c_v = 2 / (n(v) + d(v))`,
//!
//!   with `K` a `|V| × |V|` matrix built edge by edge. The vertex route has
//!   poles where some `w_e² = 1` (real `z` only); evaluations that come
//!   close to one fall back to the bond route.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::graph::{BondTable, Edge, QuantumGraph};
use crate::linalg::{self, CMatrix, Lu, C64};

/// Below this `|1 − w_e²|` the vertex route is abandoned for the bond route.
const POLE_GUARD: f64 = 1e-3;

/// Pivot ratio under which an LU is treated as singular.
const SINGULAR_PIVOT_RATIO: f64 = 1e-14;

/// The Kirchhoff vertex scattering matrix `−Id + 2/(n+d) J` of a vertex with
/// internal degree `d` and `n` leads.
pub fn vertex_sigma(d: usize, n: u32) -> DMatrix<f64> {
    let c = 2.0 / (n as f64 + d as f64);
    DMatrix::from_fn(d, d, |i, j| if i == j { c - 1.0 } else { c })
}

/// The log-derivative could not be evaluated because `Id − U(z)` is
/// numerically singular at `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singular {
    pub z: C64,
}

/// Everything known about `det(Id − U(z))` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecularValue {
    pub z: C64,
    pub det: C64,
    /// `ln det`, finite even when `det` under- or overflows.
    pub log_det: C64,
    /// `d/dz ln det(Id − U(z))`; `None` when `Id − U(z)` is too close to
    /// singular for the trace formula.
    pub log_derivative: Option<C64>,
    pub smallest_singular: f64,
}

#[derive(Debug, Clone)]
pub struct SecularSystem {
    bonds: BondTable,
    scattering: DMatrix<f64>,
    closed: bool,
    leads: Vec<u32>,
    coupling: Vec<f64>,
    edges: Vec<Edge>,
    min_length: f64,
    max_length: f64,
}

impl SecularSystem {
    /// Assembles `S_{b,b'} = σ^{(v)}_{b, reverse(b')}` for `v = origin(b) =
    /// terminus(b')`.
    pub fn assemble(graph: &QuantumGraph) -> Self {
        let bonds = graph.bonds();
        let degrees = graph.degrees();
        let leads = graph.leads().to_vec();
        let coupling: Vec<f64> = degrees
            .iter()
            .zip(&leads)
            .map(|(&d, &n)| 2.0 / (d as f64 + n as f64))
            .collect();
        let count = bonds.len();
        let mut scattering = DMatrix::<f64>::zeros(count, count);
        for incoming in 0..count {
            let vertex = bonds.terminus(incoming);
            let reflected = bonds.reverse(incoming);
            let c = coupling[vertex];
            for outgoing in bonds.outgoing(vertex) {
                scattering[(outgoing, incoming)] = if outgoing == reflected { c - 1.0 } else { c };
            }
        }
        Self {
            closed: graph.is_closed(),
            leads,
            coupling,
            edges: graph.edges().to_vec(),
            min_length: graph.min_length(),
            max_length: graph.max_length(),
            bonds,
            scattering,
        }
    }

    pub fn bonds(&self) -> &BondTable {
        &self.bonds
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.leads.len()
    }

    pub fn scattering(&self) -> &DMatrix<f64> {
        &self.scattering
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn leads(&self) -> &[u32] {
        &self.leads
    }

    pub fn lead_vertex_count(&self) -> usize {
        self.leads.iter().filter(|&&n| n > 0).count()
    }

    pub fn min_length(&self) -> f64 {
        self.min_length
    }

    pub fn max_length(&self) -> f64 {
        self.max_length
    }

    /// `Σ_b L_b = 2 L(Q)`.
    pub fn bond_length_sum(&self) -> f64 {
        self.bonds.lengths().iter().sum()
    }

    fn phases(&self, z: C64) -> Vec<C64> {
        self.bonds
            .lengths()
            .iter()
            .map(|&l| (C64::i() * z * l).exp())
            .collect()
    }

    /// `U(z) = S diag(e^{i z L_b})`.
    pub fn u_matrix(&self, z: C64) -> CMatrix {
        let phases = self.phases(z);
        let n = self.bond_count();
        CMatrix::from_fn(n, n, |i, j| phases[j] * self.scattering[(i, j)])
    }

    /// `U′(z) = S diag(i L_b e^{i z L_b})`.
    pub fn u_derivative(&self, z: C64) -> CMatrix {
        let factors: Vec<C64> = self
            .phases(z)
            .into_iter()
            .zip(self.bonds.lengths())
            .map(|(p, &l)| C64::i() * l * p)
            .collect();
        let n = self.bond_count();
        CMatrix::from_fn(n, n, |i, j| factors[j] * self.scattering[(i, j)])
    }

    /// `Id − U(z)`.
    pub fn secular_matrix(&self, z: C64) -> CMatrix {
        let n = self.bond_count();
        let mut m = -self.u_matrix(z);
        for i in 0..n {
            m[(i, i)] += 1.0;
        }
        m
    }

    /// Full evaluation through the bond route: determinant, log-derivative
    /// and smallest singular value of `Id − U(z)`.
    pub fn secular_value(&self, z: C64) -> SecularValue {
        let matrix = self.secular_matrix(z);
        let smallest_singular = linalg::smallest_singular_value(&matrix);
        let lu = Lu::new(matrix);
        let invertible =
            !lu.is_singular() && smallest_singular >= 1e-13 * self.bond_count().max(1) as f64;
        let log_derivative = if invertible {
            Some(self.bond_trace(&lu, z))
        } else {
            None
        };
        SecularValue {
            z,
            det: lu.det(),
            log_det: lu.log_det(),
            log_derivative,
            smallest_singular,
        }
    }

    /// `−tr[(Id − U)⁻¹ U′] = −Σ_b [(Id − U)⁻¹ S]_{bb} i L_b e^{i z L_b}`.
    fn bond_trace(&self, lu: &Lu, z: C64) -> C64 {
        let mut x = linalg::to_complex(&self.scattering);
        lu.solve_in_place(&mut x);
        let mut acc = C64::new(0.0, 0.0);
        for (b, p) in self.phases(z).into_iter().enumerate() {
            acc -= x[(b, b)] * C64::i() * self.bonds.length(b) * p;
        }
        acc
    }

    /// Log-derivative through the bond route only.
    pub fn bond_log_derivative(&self, z: C64) -> Result<C64, Singular> {
        let lu = Lu::new(self.secular_matrix(z));
        if lu.pivot_ratio() < SINGULAR_PIVOT_RATIO {
            return Err(Singular { z });
        }
        Ok(self.bond_trace(&lu, z))
    }

    /// `d/dz ln det(Id − U(z))`, through the vertex route when every edge
    /// factor is away from its poles, through the bond route otherwise.
    pub fn log_derivative(&self, z: C64) -> Result<C64, Singular> {
        match self.vertex_log_derivative(z) {
            Some(result) => result,
            None => self.bond_log_derivative(z),
        }
    }

    /// Vertex route; `None` when `z` is within the pole guard of some edge.
    pub fn vertex_log_derivative(&self, z: C64) -> Option<Result<C64, Singular>> {
        let nv = self.vertex_count();
        let mut k = CMatrix::zeros(nv, nv);
        let mut dk = CMatrix::zeros(nv, nv);
        let mut acc = C64::new(0.0, 0.0);
        let i = C64::i();
        for edge in &self.edges {
            let w = (i * z * edge.length).exp();
            let w2 = w * w;
            let q = C64::new(1.0, 0.0) - w2;
            if q.norm() < POLE_GUARD {
                return None;
            }
            let il = i * edge.length;
            // d/dz ln(1 − w²)
            acc += -2.0 * il * w2 / q;
            if edge.u == edge.v {
                let p = C64::new(1.0, 0.0) + w;
                k[(edge.u, edge.u)] += 2.0 * w / p;
                dk[(edge.u, edge.u)] += 2.0 * il * w / (p * p);
            } else {
                let q2 = q * q;
                let diag = -w2 / q;
                let off = w / q;
                let ddiag = -2.0 * il * w2 / q2;
                let doff = il * w * (C64::new(1.0, 0.0) + w2) / q2;
                k[(edge.u, edge.u)] += diag;
                k[(edge.v, edge.v)] += diag;
                k[(edge.u, edge.v)] += off;
                k[(edge.v, edge.u)] += off;
                dk[(edge.u, edge.u)] += ddiag;
                dk[(edge.v, edge.v)] += ddiag;
                dk[(edge.u, edge.v)] += doff;
                dk[(edge.v, edge.u)] += doff;
            }
        }
        // M = Id − diag(c) K,  M′ = −diag(c) K′
        let mut m = CMatrix::identity(nv, nv);
        for col in 0..nv {
            for row in 0..nv {
                let kv = k[(row, col)];
                if kv.re != 0.0 || kv.im != 0.0 {
                    m[(row, col)] -= self.coupling[row] * kv;
                }
            }
        }
        let lu = Lu::new(m);
        if lu.pivot_ratio() < SINGULAR_PIVOT_RATIO {
            return Some(Err(Singular { z }));
        }
        let inv = lu.inverse();
        for col in 0..nv {
            for row in 0..nv {
                let d = dk[(row, col)];
                if d.re != 0.0 || d.im != 0.0 {
                    acc -= inv[(col, row)] * self.coupling[row] * d;
                }
            }
        }
        Some(Ok(acc))
    }

    /// Eigenphases of the unitary `U(x)` of a closed system at real `x`, in
    /// `[0, 2π)`, via a rotated Cayley transform `H = i(Id − R)(Id + R)⁻¹`,
    /// `R = e^{−iφ} U(x)`, whose Hermitian eigenvalues are `tan(θ/2)`.
    pub fn eigenphases(&self, x: f64) -> Vec<f64> {
        let u = self.u_matrix(C64::new(x, 0.0));
        let n = u.nrows();
        let mut fallback = None;
        for &phi in &[0.0, PI / 2.0, PI / 4.0, 3.0 * PI / 4.0, PI / 8.0] {
            let rotation = C64::from_polar(1.0, -phi);
            let r = &u * rotation;
            let mut plus = r.clone();
            let mut minus = -r;
            for k in 0..n {
                plus[(k, k)] += 1.0;
                minus[(k, k)] += 1.0;
            }
            let lu = Lu::new(plus);
            let ratio = lu.pivot_ratio();
            let good = ratio > 1e-6;
            if !good && fallback.as_ref().is_some_and(|(best, _, _)| *best >= ratio) {
                continue;
            }
            lu.solve_in_place(&mut minus);
            let h = minus * C64::i();
            if good {
                return phases_from_cayley(&h, phi);
            }
            fallback = Some((ratio, h, phi));
        }
        let (_, h, phi) = fallback.expect("at least one rotation evaluated");
        phases_from_cayley(&h, phi)
    }
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_phase(t: f64) -> f64 {
    let r = t % TAU;
    let r = if r < 0.0 { r + TAU } else { r };
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn phases_from_cayley(h: &CMatrix, phi: f64) -> Vec<f64> {
    let mut phases: Vec<f64> = linalg::hermitian_eigenvalues(h)
        .into_iter()
        .map(|t| wrap_phase(phi + 2.0 * t.atan()))
        .collect();
    phases.sort_by(f64::total_cmp);
    phases
}

/// Diagnostics for the open-versus-closed comparison hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    /// `‖S‖` of the open system.
    pub open_norm: f64,
    /// `‖S̃ S̃ᵀ − Id‖` of the closed system.
    pub closed_unitarity_defect: f64,
    /// `max_z ‖U(z) − Ũ(z)‖₁` over the samples.
    pub max_trace_gap: f64,
    /// `max_trace_gap / g` (0 when `g = 0`).
    pub trace_gap_per_lead: f64,
    /// Extreme eigenvalues of `−i Ũ′(x) Ũ(x)⁻¹` at `x = Re z` of each sample.
    pub positivity_min: f64,
    pub positivity_max: f64,
    /// Largest anti-Hermitian part seen in `−i Ũ′ Ũ⁻¹`.
    pub positivity_hermitian_defect: f64,
    /// `max ‖(Id − Ũ(z))⁻¹‖ |Im z|` over non-real samples.
    pub resolvent_bound: f64,
}

/// Checks the trace-norm closeness, unitarity, positivity and resolvent
/// hypotheses on a set of sample points.
pub fn hypothesis_diagnostics(
    open: &SecularSystem,
    closed: &SecularSystem,
    samples: &[C64],
) -> HypothesisReport {
    let open_norm = linalg::real_operator_norm(open.scattering());
    let closed_unitarity_defect = linalg::orthogonality_defect(closed.scattering());
    let g = open.lead_vertex_count();
    let mut max_trace_gap = 0.0f64;
    let mut positivity_min = f64::INFINITY;
    let mut positivity_max = f64::NEG_INFINITY;
    let mut positivity_hermitian_defect = 0.0f64;
    let mut resolvent_bound = 0.0f64;
    for &z in samples {
        let gap = open.u_matrix(z) - closed.u_matrix(z);
        max_trace_gap = max_trace_gap.max(linalg::trace_norm(&gap));

        let x = C64::new(z.re, 0.0);
        let u = closed.u_matrix(x);
        let du = closed.u_derivative(x);
        // −i U′ U⁻¹ = −i (U⁻ᵀ U′ᵀ)ᵀ
        let lu = Lu::new(u.transpose());
        let mut rhs = du.transpose();
        lu.solve_in_place(&mut rhs);
        let h = rhs.transpose() * C64::new(0.0, -1.0);
        let anti = (&h - h.adjoint()).norm() / 2.0;
        positivity_hermitian_defect = positivity_hermitian_defect.max(anti);
        let eig = linalg::hermitian_eigenvalues(&h);
        if let (Some(lo), Some(hi)) = (eig.first(), eig.last()) {
            positivity_min = positivity_min.min(*lo);
            positivity_max = positivity_max.max(*hi);
        }

        if z.im != 0.0 {
            let sigma = linalg::smallest_singular_value(&closed.secular_matrix(z));
            resolvent_bound = resolvent_bound.max(z.im.abs() / sigma);
        }
    }
    HypothesisReport {
        open_norm,
        closed_unitarity_defect,
        max_trace_gap,
        trace_gap_per_lead: if g == 0 {
            0.0
        } else {
            max_trace_gap / g as f64
        },
        positivity_min,
        positivity_max,
        positivity_hermitian_defect,
        resolvent_bound,
    }
}
