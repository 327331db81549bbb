//! Dense complex linear algebra used on the hot path, plus thin wrappers
//! around nalgebra's SVD and eigen solvers.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Matrices at or above this side use inverse iteration instead of a full
/// SVD for the smallest singular value.
pub const FULL_SVD_LIMIT: usize = 256;

/// Partial-pivoting LU factorization `P A = L U` of a square complex matrix,
/// stored column-major in place.
#[derive(Debug, Clone)]
pub struct Lu {
    factors: CMatrix,
    swaps: Vec<usize>,
    odd_swaps: bool,
    min_pivot: f64,
    max_pivot: f64,
}

impl Lu {
    pub fn new(mut a: CMatrix) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU needs a square matrix");
        let mut swaps = Vec::with_capacity(n);
        let mut odd_swaps = false;
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0f64;
        let data = a.as_mut_slice();
        for k in 0..n {
            let column = &data[k * n..(k + 1) * n];
            let mut p = k;
            let mut best = column[k].l1_norm();
            for (i, value) in column.iter().enumerate().skip(k + 1) {
                let m = value.l1_norm();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            swaps.push(p);
            if p != k {
                odd_swaps = !odd_swaps;
                for j in 0..n {
                    data.swap(j * n + k, j * n + p);
                }
            }
            let pivot = data[k * n + k];
            let magnitude = pivot.norm();
            min_pivot = min_pivot.min(magnitude);
            max_pivot = max_pivot.max(magnitude);
            if magnitude == 0.0 {
                continue;
            }
            let inv = pivot.inv();
            for value in &mut data[k * n + k + 1..(k + 1) * n] {
                *value *= inv;
            }
            let (left, right) = data.split_at_mut((k + 1) * n);
            let multipliers = &left[k * n + k + 1..(k + 1) * n];
            for column in right.chunks_exact_mut(n) {
                let ukj = column[k];
                if ukj.re == 0.0 && ukj.im == 0.0 {
                    continue;
                }
                for (x, &l) in column[k + 1..].iter_mut().zip(multipliers) {
                    x.re -= l.re * ukj.re - l.im * ukj.im;
                    x.im -= l.re * ukj.im + l.im * ukj.re;
                }
            }
        }
        if n == 0 {
            min_pivot = 1.0;
            max_pivot = 1.0;
        }
        Self {
            factors: a,
            swaps,
            odd_swaps,
            min_pivot,
            max_pivot,
        }
    }

    pub fn dim(&self) -> usize {
        self.factors.nrows()
    }

    /// `ln det A`, with the imaginary part accumulated (not reduced mod 2π).
    pub fn log_det(&self) -> C64 {
        let mut acc = C64::new(0.0, if self.odd_swaps { PI } else { 0.0 });
        for k in 0..self.dim() {
            acc += self.factors[(k, k)].ln();
        }
        acc
    }

    pub fn det(&self) -> C64 {
        let mut acc = C64::new(if self.odd_swaps { -1.0 } else { 1.0 }, 0.0);
        for k in 0..self.dim() {
            acc *= self.factors[(k, k)];
        }
        acc
    }

    /// Ratio of the smallest to the largest pivot magnitude; a cheap
    /// singularity indicator.
    pub fn pivot_ratio(&self) -> f64 {
        if self.max_pivot == 0.0 {
            0.0
        } else {
            self.min_pivot / self.max_pivot
        }
    }

    pub fn is_singular(&self) -> bool {
        self.min_pivot == 0.0
    }

    /// Solves `A X = B` in place.
    pub fn solve_in_place(&self, b: &mut CMatrix) {
        let n = self.dim();
        assert_eq!(b.nrows(), n);
        let f = self.factors.as_slice();
        for column in b.as_mut_slice().chunks_exact_mut(n) {
            for (k, &p) in self.swaps.iter().enumerate() {
                column.swap(k, p);
            }
            for k in 0..n {
                let xk = column[k];
                if xk.re == 0.0 && xk.im == 0.0 {
                    continue;
                }
                for (x, &l) in column[k + 1..]
                    .iter_mut()
                    .zip(&f[k * n + k + 1..(k + 1) * n])
                {
                    *x -= l * xk;
                }
            }
            for k in (0..n).rev() {
                column[k] /= f[k * n + k];
                let xk = column[k];
                for (x, &u) in column[..k].iter_mut().zip(&f[k * n..k * n + k]) {
                    *x -= u * xk;
                }
            }
        }
    }

    /// Solves `A* x = b` in place for a single vector.
    pub fn solve_adjoint_in_place(&self, x: &mut [C64]) {
        let n = self.dim();
        let f = self.factors.as_slice();
        // U* y = b, forward
        for k in 0..n {
            let mut acc = x[k];
            for (i, &u) in f[k * n..k * n + k].iter().enumerate() {
                acc -= u.conj() * x[i];
            }
            x[k] = acc / f[k * n + k].conj();
        }
        // L* w = y, backward with unit diagonal
        for k in (0..n).rev() {
            let mut acc = x[k];
            for (i, &l) in f[k * n + k + 1..(k + 1) * n].iter().enumerate() {
                acc -= l.conj() * x[k + 1 + i];
            }
            x[k] = acc;
        }
        for (k, &p) in self.swaps.iter().enumerate().rev() {
            x.swap(k, p);
        }
    }

    pub fn inverse(&self) -> CMatrix {
        let mut id = CMatrix::identity(self.dim(), self.dim());
        self.solve_in_place(&mut id);
        id
    }
}

/// Singular values in decreasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Sum of singular values (Schatten-1 norm).
pub fn trace_norm(m: &CMatrix) -> f64 {
    singular_values(m).iter().sum()
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn real_operator_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Smallest singular value: a full SVD for small matrices, inverse
/// iteration on `A* A` through the LU factors otherwise.
pub fn smallest_singular_value(m: &CMatrix) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    if n < FULL_SVD_LIMIT {
        return singular_values(m).last().copied().unwrap_or(0.0);
    }
    let lu = Lu::new(m.clone());
    if lu.is_singular() {
        return 0.0;
    }
    let mut x: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + (i as f64 * 0.618_033_988_749_895).fract(), 0.0))
        .collect();
    normalize(&mut x);
    let mut estimate = f64::INFINITY;
    for _ in 0..30 {
        let mut y = CMatrix::from_column_slice(n, 1, &x);
        lu.solve_in_place(&mut y);
        let mut w: Vec<C64> = y.as_slice().to_vec();
        lu.solve_adjoint_in_place(&mut w);
        let growth = norm(&w);
        if !growth.is_finite() || growth == 0.0 {
            return 0.0;
        }
        let next = 1.0 / growth.sqrt();
        w.iter_mut().for_each(|v| *v /= growth);
        x = w;
        if (next - estimate).abs() <= 1e-12 * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Eigenvalues of a Hermitian matrix, ascending. The input is
/// symmetrized first.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut values: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Eigenvalues of a general complex matrix via a complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    let schur = nalgebra::Schur::new(m.clone());
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

fn norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(x: &mut [C64]) {
    let n = norm(x);
    x.iter_mut().for_each(|v| *v /= n);
}

/// `‖M − Id‖_max` style defect used for unitarity checks: `‖M Mᵀ − Id‖` in
/// operator norm for a real matrix.
pub fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let product = m * m.transpose() - DMatrix::<f64>::identity(n, n);
    real_operator_norm(&product)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        let mut next = move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        CMatrix::from_fn(n, n, |_, _| C64::new(next(), next()))
    }

    #[test]
    fn lu_solves_and_inverts() {
        let a = sample(12, 3);
        let lu = Lu::new(a.clone());
        let inv = lu.inverse();
        let err = (&a * &inv - CMatrix::identity(12, 12)).norm();
        assert!(err < 1e-12, "{err}");
        let det_ref = a.clone().lu().determinant();
        assert!((lu.det() - det_ref).norm() < 1e-12 * det_ref.norm().max(1.0));
        assert!((lu.log_det().exp() - det_ref).norm() < 1e-10 * det_ref.norm().max(1.0));
    }

    #[test]
    fn adjoint_solve() {
        let a = sample(9, 11);
        let lu = Lu::new(a.clone());
        let b: Vec<C64> = (0..9).map(|i| C64::new(i as f64, 1.0)).collect();
        let mut x = b.clone();
        lu.solve_adjoint_in_place(&mut x);
        let r = a.adjoint() * CMatrix::from_column_slice(9, 1, &x);
        for i in 0..9 {
            assert!((r[(i, 0)] - b[i]).norm() < 1e-11);
        }
    }

    #[test]
    fn singular_value_helpers() {
        let id = CMatrix::identity(5, 5);
        assert!((trace_norm(&id) - 5.0).abs() < 1e-12);
        // rank one u v*: single singular value |u||v|
        let u = CMatrix::from_column_slice(
            3,
            1,
            &[C64::new(1.0, 0.0), C64::new(0.0, 2.0), C64::new(2.0, 0.0)],
        );
        let v = CMatrix::from_column_slice(
            3,
            1,
            &[C64::new(0.0, 1.0), C64::new(1.0, 1.0), C64::new(0.0, 0.0)],
        );
        let r1 = &u * v.adjoint();
        let expected = 3.0 * 3f64.sqrt();
        assert!((trace_norm(&r1) - expected).abs() < 1e-12);
        assert!((operator_norm(&r1) - expected).abs() < 1e-12);
    }

    #[test]
    fn inverse_iteration_matches_svd() {
        let a = sample(FULL_SVD_LIMIT + 4, 5);
        let reference = *singular_values(&a).last().unwrap();
        let fast = smallest_singular_value(&a);
        assert!(
            (fast - reference).abs() < 1e-8 * reference.max(1e-3),
            "{fast} vs {reference}"
        );
    }

    #[test]
    fn trace_norm_submultiplicative() {
        for seed in 0..5 {
            let a = sample(6, seed);
            let b = sample(6, seed + 100);
            assert!(trace_norm(&(&a * &b)) <= operator_norm(&a) * trace_norm(&b) + 1e-12);
        }
    }

    #[test]
    fn schur_eigenvalues_of_triangular() {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 0)] = C64::new(1.0, -1.0);
        m[(1, 1)] = C64::new(2.0, 0.5);
        m[(2, 2)] = C64::new(-3.0, 0.0);
        m[(0, 2)] = C64::new(4.0, 0.0);
        let mut ev = eigenvalues(&m);
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - C64::new(-3.0, 0.0)).norm() < 1e-12);
        assert!((ev[2] - C64::new(2.0, 0.5)).norm() < 1e-12);
    }
}
