//! Contour integrals of the log-derivative of `det(Id − U(z))` along
//! straight segments, and zero counting on rectangular grids whose cells
//! share sides.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::SolveError;
use crate::linalg::C64;
use crate::par;
use crate::secular::SecularSystem;

/// Positive Gauss–Legendre nodes and weights of the 16-point rule.
const GL16: [(f64, f64); 8] = [
    (0.09501250983763745, 0.18945061045506859),
    (0.2816035507792589, 0.1826034150449236),
    (0.45801677765722737, 0.16915651939500262),
    (0.6178762444026438, 0.14959598881657676),
    (0.755404408355003, 0.12462897125553403),
    (0.8656312023878318, 0.09515851168249259),
    (0.9445750230732326, 0.062253523938647706),
    (0.9894009349916499, 0.027152459411754037),
];

/// Absolute error target for one segment integral, then the tighter retry.
const COARSE_TOL: f64 = 1e-3;
const FINE_TOL: f64 = 1e-6;

/// Number of contour moments carried with each integral.
pub(crate) const MOMENTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Segment {
    pub value: C64,
    pub midpoint: C64,
    /// `∫ (z − m)^k ℓ dz` for `k = 1..=MOMENTS` about the midpoint `m`.
    pub moments: [C64; MOMENTS],
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SegmentFailure {
    /// The log-derivative could not be evaluated (or resolved) near `z`.
    Singular(C64),
    Budget {
        partial: C64,
        evaluations: usize,
    },
}

/// `∫_a^b ℓ(z) dz` with adaptive 16-point Gauss–Legendre panels: a panel is
/// accepted when its two halves agree with it, otherwise it is bisected.
/// The moments come from the same nodes.
pub(crate) fn integrate_segment(
    sys: &SecularSystem,
    a: C64,
    b: C64,
    tol: f64,
    budget: usize,
) -> Result<Segment, SegmentFailure> {
    let dir = b - a;
    let total = dir.norm();
    let midpoint = (a + b) * 0.5;
    let mut evaluations = 0usize;
    let panel = |t0: f64, t1: f64, evaluations: &mut usize| -> Result<([C64; MOMENTS + 1], f64), SegmentFailure> {
        let mid = 0.5 * (t0 + t1);
        let half = 0.5 * (t1 - t0);
        let mut acc = [C64::new(0.0, 0.0); MOMENTS + 1];
        let mut mag = 0.0;
        for &(x, w) in &GL16 {
            for s in [-x, x] {
                let z = a + dir * (mid + s * half);
                let f = sys
                    .log_derivative(z)
                    .map_err(|_| SegmentFailure::Singular(z))?;
                if !(f.re.is_finite() && f.im.is_finite()) {
                    return Err(SegmentFailure::Singular(z));
                }
                let offset = z - midpoint;
                let mut term = f * w;
                for slot in acc.iter_mut() {
                    *slot += term;
                    term *= offset;
                }
                mag += f.norm() * w;
            }
        }
        *evaluations += 16;
        let scale = dir * half;
        Ok((acc.map(|x| x * scale), mag * total * half))
    };

    let initial = ((total * sys.max_length()).ceil() as usize).clamp(1, 4096);
    let mut stack = Vec::with_capacity(initial + 64);
    for k in (0..initial).rev() {
        let t0 = k as f64 / initial as f64;
        let t1 = (k + 1) as f64 / initial as f64;
        let (coarse, _) = panel(t0, t1, &mut evaluations)?;
        stack.push((t0, t1, coarse));
    }
    let mut value = [C64::new(0.0, 0.0); MOMENTS + 1];
    while let Some((t0, t1, coarse)) = stack.pop() {
        let tm = 0.5 * (t0 + t1);
        let (left, lmag) = panel(t0, tm, &mut evaluations)?;
        let (right, rmag) = panel(tm, t1, &mut evaluations)?;
        let fine: [C64; MOMENTS + 1] = core::array::from_fn(|k| left[k] + right[k]);
        let err = (fine[0] - coarse[0]).norm();
        if err <= (tol * (t1 - t0)).max(1e-12 * (lmag + rmag)) {
            for (v, f) in value.iter_mut().zip(fine) {
                *v += f;
            }
        } else if (t1 - t0) * total < 1e-13 * (1.0 + a.norm()) {
            return Err(SegmentFailure::Singular(a + dir * tm));
        } else {
            stack.push((tm, t1, right));
            stack.push((t0, tm, left));
        }
        if evaluations > budget {
            return Err(SegmentFailure::Budget {
                partial: value[0],
                evaluations,
            });
        }
    }
    Ok(Segment {
        value: value[0],
        midpoint,
        moments: core::array::from_fn(|k| value[k + 1]),
        evaluations,
    })
}

impl Segment {
    /// `∫ (z − c)^k ℓ dz` for `k = 1..=MOMENTS`, by the binomial expansion
    /// of `(z − m + m − c)^k`.
    pub(crate) fn moments_about(&self, c: C64) -> [C64; MOMENTS] {
        let d = self.midpoint - c;
        let mut about_mid = [C64::new(0.0, 0.0); MOMENTS + 1];
        about_mid[0] = self.value;
        about_mid[1..].copy_from_slice(&self.moments);
        core::array::from_fn(|i| {
            let k = i + 1;
            let mut binomial = 1.0;
            let mut power = C64::new(1.0, 0.0);
            let mut total = C64::new(0.0, 0.0);
            // sum over j = k, k−1, ..., 0 of C(k, j) d^(k−j) ∫(z − m)^j
            for j in (0..=k).rev() {
                total += about_mid[j] * power * binomial;
                binomial *= j as f64 / (k - j + 1) as f64;
                power *= d;
            }
            total
        })
    }
}

/// Winding number of `det(Id − U)` around the circle `|z − c| = r`, by the
/// trapezoid rule with doubling; `None` if it does not settle on an integer.
pub(crate) fn circle_winding(
    sys: &SecularSystem,
    center: C64,
    radius: f64,
) -> Option<(usize, f64)> {
    let sample = |n: usize| -> Option<f64> {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..n {
            let e = C64::from_polar(1.0, TAU * k as f64 / n as f64);
            let f = sys.log_derivative(center + e * radius).ok()?;
            acc += f * e * radius;
        }
        Some(acc.re / n as f64)
    };
    let mut previous = sample(16)?;
    let mut n = 32;
    while n <= 512 {
        let current = sample(n)?;
        let rounded = current.round();
        if (current - previous).abs() < 1e-3 && (current - rounded).abs() < 0.05 && rounded >= 0.0 {
            return Some((rounded as usize, current));
        }
        previous = current;
        n *= 2;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GridOptions {
    pub budget: usize,
    pub integer_tolerance: f64,
    /// Outer lines may not move (the grid subdivides an already counted cell).
    pub freeze_outer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GridCount {
    /// Line positions actually used (after any jitter).
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Cell counts, row-major: cell `(i, j)` at `j * nx + i`.
    pub counts: Vec<usize>,
    pub windings: Vec<f64>,
    /// Power sums `Σ (z_j − c)^k`, `k = 1..=MOMENTS`, over the zeros of each
    /// cell about its center `c`.
    pub sums: Vec<[C64; MOMENTS]>,
    pub evaluations: usize,
    pub jittered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Line {
    X(usize),
    Y(usize),
}

/// Counts zeros in every cell of the grid `xs × ys` (both strictly
/// increasing). Interior sides are integrated once and shared by the two
/// cells they separate. A line that passes through or too close to a zero
/// is moved: interior lines by a small fraction of the neighbouring gap,
/// outer lines outward by at most `1e−4` of the grid diameter.
pub(crate) fn count_grid(
    sys: &SecularSystem,
    xs: &[f64],
    ys: &[f64],
    opts: &GridOptions,
) -> Result<GridCount, SolveError> {
    let nx = xs.len() - 1;
    let ny = ys.len() - 1;
    let origin_x = xs.to_vec();
    let origin_y = ys.to_vec();
    let mut xs = xs.to_vec();
    let mut ys = ys.to_vec();
    let diameter = ((xs[nx] - xs[0]).powi(2) + (ys[ny] - ys[0]).powi(2)).sqrt();
    let mut x_moves = vec![0u32; nx + 1];
    let mut y_moves = vec![0u32; ny + 1];
    // horizontal segment (i, j): from (x_i, y_j) to (x_{i+1}, y_j)
    let mut horizontal: Vec<Option<Segment>> = vec![None; nx * (ny + 1)];
    let mut h_tol = vec![COARSE_TOL; nx * (ny + 1)];
    // vertical segment (i, j): from (x_i, y_j) to (x_i, y_{j+1})
    let mut vertical: Vec<Option<Segment>> = vec![None; (nx + 1) * ny];
    let mut v_tol = vec![COARSE_TOL; (nx + 1) * ny];
    let mut evaluations = 0usize;
    let mut jittered = false;

    for _round in 0..12 {
        let mut jobs = Vec::new();
        for j in 0..=ny {
            for i in 0..nx {
                if horizontal[j * nx + i].is_none() {
                    jobs.push((true, i, j));
                }
            }
        }
        for i in 0..=nx {
            for j in 0..ny {
                if vertical[i * ny + j].is_none() {
                    jobs.push((false, i, j));
                }
            }
        }
        let results = par::map(&jobs, |&(is_h, i, j)| {
            if is_h {
                let a = C64::new(xs[i], ys[j]);
                let b = C64::new(xs[i + 1], ys[j]);
                integrate_segment(sys, a, b, h_tol[j * nx + i], opts.budget)
            } else {
                let a = C64::new(xs[i], ys[j]);
                let b = C64::new(xs[i], ys[j + 1]);
                integrate_segment(sys, a, b, v_tol[i * ny + j], opts.budget)
            }
        });

        let mut to_move: Vec<Line> = Vec::new();
        let mut failure: Option<SolveError> = None;
        for (&(is_h, i, j), result) in jobs.iter().zip(results) {
            match result {
                Ok(seg) => {
                    evaluations += seg.evaluations;
                    if is_h {
                        horizontal[j * nx + i] = Some(seg);
                    } else {
                        vertical[i * ny + j] = Some(seg);
                    }
                }
                Err(fail) => {
                    to_move.push(if is_h { Line::Y(j) } else { Line::X(i) });
                    failure = Some(match fail {
                        SegmentFailure::Singular(z) => {
                            SolveError::ContourOnZero { re: z.re, im: z.im }
                        }
                        SegmentFailure::Budget {
                            partial,
                            evaluations: e,
                        } => {
                            evaluations += e;
                            SolveError::QuadratureFailed {
                                evaluations: e,
                                partial_winding: partial.im / TAU,
                            }
                        }
                    });
                }
            }
        }

        let mut counts = vec![0usize; nx * ny];
        let mut windings = vec![0.0; nx * ny];
        let mut sums = vec![[C64::new(0.0, 0.0); MOMENTS]; nx * ny];
        if to_move.is_empty() {
            let mut bad = Vec::new();
            for j in 0..ny {
                for i in 0..nx {
                    let sides = [
                        (1.0, &horizontal[j * nx + i]),
                        (1.0, &vertical[(i + 1) * ny + j]),
                        (-1.0, &horizontal[(j + 1) * nx + i]),
                        (-1.0, &vertical[i * ny + j]),
                    ];
                    let center = C64::new(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
                    let mut contour = C64::new(0.0, 0.0);
                    let mut moments = [C64::new(0.0, 0.0); MOMENTS];
                    for (sign, side) in sides {
                        let seg = side.expect("segment computed");
                        contour += seg.value * sign;
                        let shifted = seg.moments_about(center);
                        for (m, x) in moments.iter_mut().zip(shifted) {
                            *m += x * sign;
                        }
                    }
                    let two_pi_i = C64::new(0.0, TAU);
                    sums[j * nx + i] = moments.map(|m| m / two_pi_i);
                    let w = contour.im / TAU;
                    let rounded = w.round();
                    windings[j * nx + i] = w;
                    if (w - rounded).abs() < opts.integer_tolerance && rounded > -0.5 {
                        counts[j * nx + i] = rounded as usize;
                    } else {
                        bad.push((i, j));
                    }
                }
            }
            for (i, j) in bad {
                let w = windings[j * nx + i];
                failure = Some(SolveError::QuadratureFailed {
                    evaluations,
                    partial_winding: w,
                });
                let sides = [
                    (true, j * nx + i),
                    (true, (j + 1) * nx + i),
                    (false, i * ny + j),
                    (false, (i + 1) * ny + j),
                ];
                let coarse = sides.iter().any(|&(h, k)| {
                    if h {
                        h_tol[k] > FINE_TOL
                    } else {
                        v_tol[k] > FINE_TOL
                    }
                });
                if coarse {
                    for (h, k) in sides {
                        if h {
                            h_tol[k] = FINE_TOL;
                            horizontal[k] = None;
                        } else {
                            v_tol[k] = FINE_TOL;
                            vertical[k] = None;
                        }
                    }
                } else {
                    to_move.extend([Line::X(i), Line::X(i + 1), Line::Y(j), Line::Y(j + 1)]);
                }
            }
            if failure.is_none() {
                return Ok(GridCount {
                    xs,
                    ys,
                    counts,
                    windings,
                    sums,
                    evaluations,
                    jittered,
                });
            }
        }

        let mut unique: Vec<Line> = Vec::new();
        for line in to_move {
            if !unique.contains(&line) {
                unique.push(line);
            }
        }
        for line in unique {
            let (positions, origin, moves, n) = match line {
                Line::X(i) => (&mut xs, &origin_x, &mut x_moves, i),
                Line::Y(j) => (&mut ys, &origin_y, &mut y_moves, j),
            };
            let last = positions.len() - 1;
            let k = moves[n];
            let offset = if n == 0 || n == last {
                if opts.freeze_outer || k >= 3 {
                    return Err(failure.expect("failure recorded"));
                }
                let magnitude = 1e-4 * diameter * [0.25, 0.5, 1.0][k as usize];
                if n == 0 {
                    -magnitude
                } else {
                    magnitude
                }
            } else {
                if k >= 6 {
                    return Err(failure.expect("failure recorded"));
                }
                let gap = (origin[n] - origin[n - 1]).min(origin[n + 1] - origin[n]);
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * gap * 1e-3 * (1u32 << (k / 2)) as f64
            };
            moves[n] += 1;
            positions[n] = origin[n] + offset;
            jittered = true;
            match line {
                Line::X(i) => {
                    for j in 0..ny {
                        vertical[i * ny + j] = None;
                    }
                    for j in 0..=ny {
                        if i > 0 {
                            horizontal[j * nx + i - 1] = None;
                        }
                        if i < nx {
                            horizontal[j * nx + i] = None;
                        }
                    }
                }
                Line::Y(j) => {
                    for i in 0..nx {
                        horizontal[j * nx + i] = None;
                    }
                    for i in 0..=nx {
                        if j > 0 {
                            vertical[i * ny + j - 1] = None;
                        }
                        if j < ny {
                            vertical[i * ny + j] = None;
                        }
                    }
                }
            }
        }
    }
    Err(SolveError::QuadratureFailed {
        evaluations,
        partial_winding: f64::NAN,
    })
}
