//! Counting and locating zeros of `det(Id − U(z))` in rectangles, and the
//! spectrum of closed systems.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)]
use num_traits::Float;

use crate::contour::{circle_winding, count_grid, GridCount, GridOptions, MOMENTS};
use crate::error::SolveError;
use crate::linalg::{self, C64};
use crate::secular::SecularSystem;

/// Half-width of the square cut out around `z = 0` when the origin is allowed.
pub const ORIGIN_EXCISION: f64 = 1e-3;

/// `{a ≤ Re z ≤ b, c ≤ Im z ≤ d}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rectangle {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self, SolveError> {
        let all_finite = [re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite());
        if !all_finite {
            return Err(SolveError::InvalidRectangle(format!(
                "non-finite bound in [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        if re_min >= re_max || im_min >= im_max {
            return Err(SolveError::InvalidRectangle(format!(
                "empty interior [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    /// Closed-rectangle membership.
    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn contains_origin(&self) -> bool {
        self.contains(C64::new(0.0, 0.0))
    }

    /// Image under `z ↦ −z̄`.
    pub fn mirrored(&self) -> Self {
        Self {
            re_min: -self.re_max,
            re_max: -self.re_min,
            ..*self
        }
    }

    fn grown(&self, margin: f64) -> Self {
        Self {
            re_min: self.re_min - margin,
            re_max: self.re_max + margin,
            im_min: self.im_min - margin,
            im_max: self.im_max + margin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountOptions {
    /// Accept rectangles containing `z = 0` by cutting out a small square
    /// around it.
    pub allow_origin: bool,
    /// Maximum log-derivative evaluations on one side of a cell.
    pub max_evaluations: usize,
    /// A cell winding must be this close to an integer.
    pub integer_tolerance: f64,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self {
            allow_origin: false,
            max_evaluations: 1 << 14,
            integer_tolerance: 0.05,
        }
    }
}

impl CountOptions {
    fn grid(&self, freeze_outer: bool) -> GridOptions {
        GridOptions {
            budget: self.max_evaluations,
            integer_tolerance: self.integer_tolerance,
            freeze_outer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountResult {
    pub count: usize,
    /// Contour integral divided by `2πi`, before rounding.
    pub winding_raw: f64,
    pub quadrature_points: usize,
    pub jittered: bool,
    /// A square of half-width [`ORIGIN_EXCISION`] around `z = 0` was left out.
    pub origin_excised: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub z: C64,
    pub multiplicity: usize,
    /// Smallest singular value of `Id − U(z)`.
    pub residual: f64,
    pub refined: bool,
    /// Several zeros closer than `16·tol` reported together.
    pub cluster: bool,
}

/// The base grid of a query: the rectangle cut into columns at most
/// `1/L_max` wide (so no side runs past too many zeros), and with a 3×3
/// block around the origin whose middle cell is excised.
struct BaseGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    skip: Option<usize>,
}

/// `lo = l_0 < … < l_k = hi` with equal gaps of at most `width`.
pub(crate) fn column_lines(lo: f64, hi: f64, width: f64) -> Vec<f64> {
    let k = ((hi - lo) / width - 1e-9).ceil().max(1.0) as usize;
    (0..=k)
        .map(|i| if i == k { hi } else { lo + (hi - lo) * i as f64 / k as f64 })
        .collect()
}

fn base_grid(rect: &Rectangle, allow_origin: bool, width: f64) -> Result<BaseGrid, SolveError> {
    if !rect.contains_origin() {
        return Ok(BaseGrid {
            xs: column_lines(rect.re_min, rect.re_max, width),
            ys: vec![rect.im_min, rect.im_max],
            skip: None,
        });
    }
    if !allow_origin {
        return Err(SolveError::OriginExcluded);
    }
    let s = ORIGIN_EXCISION;
    let clearance = [-rect.re_min, rect.re_max, -rect.im_min, rect.im_max]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if clearance < 2.0 * s {
        return Err(SolveError::OriginOnContour);
    }
    let mut xs = column_lines(rect.re_min, -s, width);
    let left = xs.len() - 1;
    xs.extend(column_lines(s, rect.re_max, width));
    let nx = xs.len() - 1;
    Ok(BaseGrid {
        xs,
        ys: vec![rect.im_min, -s, s, rect.im_max],
        skip: Some(nx + left),
    })
}

fn count_base(
    sys: &SecularSystem,
    rect: &Rectangle,
    opts: &CountOptions,
) -> Result<(GridCount, BaseGrid, CountResult), SolveError> {
    let base = base_grid(rect, opts.allow_origin, 1.0 / sys.max_length())?;
    let grid = count_grid(sys, &base.xs, &base.ys, &opts.grid(false))?;
    let mut count = 0;
    let mut winding_raw = 0.0;
    for (k, (&c, &w)) in grid.counts.iter().zip(&grid.windings).enumerate() {
        if Some(k) != base.skip {
            count += c;
            winding_raw += w;
        }
    }
    let result = CountResult {
        count,
        winding_raw,
        quadrature_points: grid.evaluations,
        jittered: grid.jittered,
        origin_excised: base.skip.is_some(),
    };
    Ok((grid, base, result))
}

/// Number of zeros of `det(Id − U)` in `rect`, with multiplicity, by the
/// argument principle.
pub fn count_zeros(
    sys: &SecularSystem,
    rect: &Rectangle,
    opts: &CountOptions,
) -> Result<CountResult, SolveError> {
    count_base(sys, rect, opts).map(|(_, _, result)| result)
}

/// Zero counts on the grid `xs × ys`, row-major (`j * (xs.len() − 1) + i`
/// for the cell `[xs_i, xs_{i+1}] × [ys_j, ys_{j+1}]`). Shared sides are
/// integrated once, so the counts are additive by construction.
pub fn count_grid_cells(
    sys: &SecularSystem,
    xs: &[f64],
    ys: &[f64],
    opts: &CountOptions,
) -> Result<Vec<usize>, SolveError> {
    validate_lines(xs)?;
    validate_lines(ys)?;
    let spans_origin = xs[0] <= 0.0 && xs[xs.len() - 1] >= 0.0 && ys[0] <= 0.0 && ys[ys.len() - 1] >= 0.0;
    if spans_origin {
        return Err(SolveError::OriginExcluded);
    }
    count_grid(sys, xs, ys, &opts.grid(false)).map(|g| g.counts)
}

fn validate_lines(lines: &[f64]) -> Result<(), SolveError> {
    if lines.len() < 2 || lines.iter().any(|x| !x.is_finite()) || lines.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SolveError::InvalidRectangle(format!(
            "grid lines must be finite and strictly increasing: {lines:?}"
        )));
    }
    Ok(())
}

const SPLIT_SHIFTS: [f64; 5] = [0.0, -0.0299, 0.0317, -0.0613, 0.0581];
const NEWTON_ITERATIONS: usize = 100;

struct Finder<'a> {
    sys: &'a SecularSystem,
    tol: f64,
    opts: CountOptions,
    found: Vec<Resonance>,
}

impl Finder<'_> {
    /// `guesses` are zero estimates from the cell's contour moments.
    fn resolve(&mut self, cell: Rectangle, count: usize, guesses: &[C64]) -> Result<(), SolveError> {
        if count == 0 {
            return Ok(());
        }
        if guesses.len() == count {
            let refined: Option<Vec<Resonance>> = guesses.iter().map(|&g| self.refine(g, &cell, 1)).collect();
            if let Some(roots) = refined {
                let distinct = roots
                    .iter()
                    .enumerate()
                    .all(|(i, a)| roots[..i].iter().all(|b| (a.z - b.z).norm() > 16.0 * self.tol));
                if distinct {
                    self.found.extend(roots);
                    return Ok(());
                }
            }
        }
        if count == 1 {
            if let Some(res) = self.refine(cell.center(), &cell, 1) {
                self.found.push(res);
                return Ok(());
            }
        }
        if cell.diameter() < 16.0 * self.tol {
            let z = self.newton(cell.center(), count, &cell).unwrap_or(cell.center());
            self.found.push(self.resonance(z, count, count > 1));
            return Ok(());
        }
        // zeros crowd towards the real axis, so crowded cells are cut
        // into vertical strips
        let (kx, ky) = if count <= 3 { (2, 2) } else { (count.div_ceil(MOMENTS / 2).clamp(2, 1024), 1) };
        let mut last_error = None;
        for shift in SPLIT_SHIFTS {
            let xs = split_lines(cell.re_min, cell.re_max, kx, shift);
            let ys = split_lines(cell.im_min, cell.im_max, ky, -shift);
            let grid = match count_grid(self.sys, &xs, &ys, &self.opts.grid(true)) {
                Ok(g) => g,
                Err(e) => {
                    last_error = Some(e);
                    continue;
                }
            };
            if grid.counts.iter().sum::<usize>() != count {
                continue;
            }
            for j in 0..ky {
                for i in 0..kx {
                    let child = Rectangle {
                        re_min: grid.xs[i],
                        re_max: grid.xs[i + 1],
                        im_min: grid.ys[j],
                        im_max: grid.ys[j + 1],
                    };
                    let k = j * kx + i;
                    self.resolve(child, grid.counts[k], &estimates(&grid, &child, k))?;
                }
            }
            return Ok(());
        }
        Err(last_error.unwrap_or(SolveError::RefinementFailed {
            re_min: cell.re_min,
            re_max: cell.re_max,
            im_min: cell.im_min,
            im_max: cell.im_max,
        }))
    }

    /// Newton from `start`; accepted when it converges inside the cell and
    /// the winding on a small circle matches `m`.
    fn refine(&self, start: C64, cell: &Rectangle, m: usize) -> Option<Resonance> {
        let z = self.newton(start, m, cell)?;
        let radius = (8.0 * self.tol).max(1e-9);
        let (winding, _) = circle_winding(self.sys, z, radius)?;
        if winding != m {
            return None;
        }
        Some(self.resonance(z, m, m > 1))
    }

    fn newton(&self, start: C64, m: usize, cell: &Rectangle) -> Option<C64> {
        let region = cell.grown(self.tol);
        let mut z = start;
        for _ in 0..NEWTON_ITERATIONS {
            let l = match self.sys.log_derivative(z) {
                Ok(l) => l,
                Err(_) => return Some(z),
            };
            let step = C64::new(m as f64, 0.0) / l;
            if !(step.re.is_finite() && step.im.is_finite()) {
                return None;
            }
            z -= step;
            if !region.contains(z) {
                return None;
            }
            if step.norm() < self.tol {
                return Some(z);
            }
        }
        None
    }

    fn resonance(&self, z: C64, multiplicity: usize, cluster: bool) -> Resonance {
        let residual = linalg::smallest_singular_value(&self.sys.secular_matrix(z));
        Resonance {
            z,
            multiplicity,
            residual,
            refined: residual < 1e-8,
            cluster,
        }
    }
}

/// Zero estimates for cell `k` of `grid`: the roots of the polynomial whose
/// power sums are the cell's contour moments. Empty when the cell holds
/// more zeros than there are moments.
fn estimates(grid: &GridCount, cell: &Rectangle, k: usize) -> Vec<C64> {
    let n = grid.counts[k];
    if n == 0 || n > MOMENTS {
        return Vec::new();
    }
    // work in w = (z − c)/r so that the roots are of order one
    let (c, r) = (cell.center(), 0.5 * cell.diameter());
    let mut scale = 1.0;
    let p: Vec<C64> = grid.sums[k][..n]
        .iter()
        .map(|s| {
            scale /= r;
            s * scale
        })
        .collect();
    // Newton's identities: k·e_k = Σ_{i=1..k} (−1)^(i−1) e_(k−i) p_i
    let mut e = vec![C64::new(1.0, 0.0)];
    for k in 1..=n {
        let mut acc = C64::new(0.0, 0.0);
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += e[k - i] * p[i - 1] * sign;
        }
        e.push(acc / k as f64);
    }
    // companion matrix of w^n − e_1 w^(n−1) + e_2 w^(n−2) − ...
    let mut companion = linalg::CMatrix::zeros(n, n);
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        companion[(0, i)] = e[i + 1] * sign;
        if i + 1 < n {
            companion[(i + 1, i)] = C64::new(1.0, 0.0);
        }
    }
    let roots: Vec<C64> = linalg::eigenvalues(&companion).into_iter().map(|w| c + w * r).collect();
    if roots.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        roots
    } else {
        Vec::new()
    }
}

fn split_lines(lo: f64, hi: f64, k: usize, shift: f64) -> Vec<f64> {
    let step = (hi - lo) / k as f64;
    let mut lines = Vec::with_capacity(k + 1);
    lines.push(lo);
    for i in 1..k {
        lines.push(lo + step * (i as f64 + shift));
    }
    lines.push(hi);
    lines
}

/// Locates every zero in `rect`: cells are subdivided until each holds one
/// zero, which Newton's method then refines. Multiplicities sum to
/// [`count_zeros`] of the same rectangle.
pub fn find_resonances(
    sys: &SecularSystem,
    rect: &Rectangle,
    tol: f64,
    opts: &CountOptions,
) -> Result<Vec<Resonance>, SolveError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(SolveError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let (grid, base, _) = count_base(sys, rect, opts)?;
    let mut finder = Finder {
        sys,
        tol,
        opts: *opts,
        found: Vec::new(),
    };
    let nx = base.xs.len() - 1;
    for j in 0..base.ys.len() - 1 {
        for i in 0..nx {
            let k = j * nx + i;
            if Some(k) == base.skip {
                continue;
            }
            let cell = Rectangle {
                re_min: grid.xs[i],
                re_max: grid.xs[i + 1],
                im_min: grid.ys[j],
                im_max: grid.ys[j + 1],
            };
            finder.resolve(cell, grid.counts[k], &estimates(&grid, &cell, k))?;
        }
    }
    let mut found = finder.found;
    found.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    Ok(found)
}

/// Number of singular values of `Id − U(z)` below `threshold`.
pub fn kernel_dimension(sys: &SecularSystem, z: C64, threshold: f64) -> usize {
    linalg::singular_values(&sys.secular_matrix(z))
        .into_iter()
        .filter(|&s| s < threshold)
        .count()
}

fn check_closed_window(sys: &SecularSystem, a: f64, b: f64) -> Result<(), SolveError> {
    if !sys.is_closed() {
        return Err(SolveError::NotClosed);
    }
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(SolveError::InvalidArgument(format!("need 0 < a < b, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// Spectrum of a closed system in `[a, b]` as `(x, multiplicity)`, found as
/// zeros in the thin box `[a, b] × [−ε, ε]`, `ε = min(0.1, 0.1 / L_max)`.
pub fn closed_spectrum(sys: &SecularSystem, a: f64, b: f64, tol: f64) -> Result<Vec<(f64, usize)>, SolveError> {
    check_closed_window(sys, a, b)?;
    let eps = (0.1f64).min(0.1 / sys.max_length());
    let rect = Rectangle::new(a, b, -eps, eps)?;
    let found = find_resonances(sys, &rect, tol, &CountOptions::default())?;
    found
        .into_iter()
        .map(|r| {
            if r.z.im.abs() > tol {
                Err(SolveError::NonRealZero { re: r.z.re, im: r.z.im })
            } else {
                Ok((r.z.re, r.multiplicity))
            }
        })
        .collect()
}

/// Number of eigenvalues of `U(x)` passing through 1 for `x ∈ (a, b]` in a
/// closed system.
pub fn eigenphase_crossing_count(sys: &SecularSystem, a: f64, b: f64) -> Result<usize, SolveError> {
    Ok(eigenphase_counts(sys, &[a, b])?[0])
}

/// Eigenphase crossings in each interval `(edges_k, edges_{k+1}]`.
///
/// Between grid points `x < x′` the eigenphases `α ∈ [0, 2π)` of `U(x)`
/// advance by exactly `Σ_b L_b (x′ − x)` in total, so the number of wraps
/// through `2π` is `(Σ_b L_b Δx + Σ α(x) − Σ α(x′)) / 2π`. Each phase moves
/// with speed in `[L_min, L_max]`, which bounds how many of the phases near
/// `2π` can have wrapped; a step that violates the bound or gives a
/// non-integer is halved.
pub fn eigenphase_counts(sys: &SecularSystem, edges: &[f64]) -> Result<Vec<usize>, SolveError> {
    if edges.len() < 2 {
        return Err(SolveError::InvalidArgument("need at least two edges".into()));
    }
    check_closed_window(sys, edges[0], edges[edges.len() - 1])?;
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SolveError::InvalidArgument("edges must be strictly increasing".into()));
    }
    let sum_l = sys.bond_length_sum();
    let (l_min, l_max) = (sys.min_length(), sys.max_length());
    let nominal = PI / (4.0 * l_max);
    let mut phases = sys.eigenphases(edges[0]);
    let mut counts = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let (mut x, end) = (w[0], w[1]);
        let mut total = 0usize;
        while x < end {
            let mut h = nominal.min(end - x);
            loop {
                let x2 = if end - (x + h) <= 1e-12 * end { end } else { x + h };
                let dx = x2 - x;
                let next = sys.eigenphases(x2);
                let raw = (sum_l * dx + phases.iter().sum::<f64>() - next.iter().sum::<f64>()) / TAU;
                let c = raw.round();
                let must = phases.iter().filter(|&&p| p >= TAU - l_min * dx + 1e-9).count() as f64;
                let may = phases.iter().filter(|&&p| p >= TAU - l_max * dx - 1e-9).count() as f64;
                if (raw - c).abs() < 0.05 && c >= must && c <= may {
                    total += c as usize;
                    phases = next;
                    x = x2;
                    break;
                }
                h *= 0.5;
                if h < 1e-4 {
                    return Err(SolveError::PhaseStepFailed { x });
                }
            }
        }
        counts.push(total);
    }
    Ok(counts)
}
