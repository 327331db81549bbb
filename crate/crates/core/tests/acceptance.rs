//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reslab_core::ensembles::{hermitian_pair, random_regular_graph, EnsembleSpec, Fixture};
use reslab_core::solver::{
    closed_spectrum, count_zeros, eigenphase_crossing_count, find_resonances, kernel_dimension, CountOptions,
    Rectangle, Resonance,
};
use reslab_core::statistics::{box_count, compare_open_closed, delta_scan, hermitian_strip_count};
use reslab_core::{QuantumGraph, SecularSystem};

fn report(n: u32, pass: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn rect(a: f64, b: f64, c: f64, d: f64) -> Rectangle {
    Rectangle::new(a, b, c, d).unwrap()
}

fn opts() -> CountOptions {
    CountOptions::default()
}

fn regular(n: usize, g: usize, seed: u64) -> QuantumGraph {
    random_regular_graph(&EnsembleSpec {
        n_vertices: n,
        degree: 3,
        length_range: (1.0, 2.0),
        lead_count: g,
        seed,
    })
    .unwrap()
}

#[test]
fn criterion_01_interval_spectrum() {
    let start = Instant::now();
    let sys = SecularSystem::assemble(&Fixture::Interval(1.0).build().unwrap());
    let spectrum = closed_spectrum(&sys, 0.5, 10.0, 1e-10).unwrap();
    let elapsed = start.elapsed();
    let errors: Vec<f64> = spectrum
        .iter()
        .zip(1..)
        .map(|(&(x, _), k)| (x - k as f64 * PI).abs())
        .collect();
    let pass = spectrum.len() == 3
        && spectrum.iter().all(|&(_, m)| m == 1)
        && errors.iter().all(|&e| e < 1e-8)
        && elapsed < Duration::from_secs(1);
    report(1, pass, format!("spectrum {spectrum:?}, errors {errors:?}, {elapsed:?}"));
}

#[test]
fn criterion_02_balanced_path_null() {
    let start = Instant::now();
    let g = Fixture::BalancedPath { edges: 5, length: 1.0 }.build().unwrap();
    let count = box_count(&g, &rect(0.5, 10.0, -3.0, -1e-4), &opts()).unwrap();
    let elapsed = start.elapsed();
    report(2, count == 0 && elapsed < Duration::from_secs(5), format!("box count {count}, {elapsed:?}"));
}

#[test]
fn criterion_03_triangle_real_resonance() {
    let sys = SecularSystem::assemble(&Fixture::TriangleLead.build().unwrap());
    let found = find_resonances(&sys, &rect(6.0, 6.6, -0.2, 0.01), 1e-10, &opts()).unwrap();
    let target = C64::new(2.0 * PI, 0.0);
    let hit = found.iter().find(|r| (r.z - target).norm() < 1e-8);
    let (pass, detail) = match hit {
        Some(r) => {
            let kernel = kernel_dimension(&sys, r.z, 1e-6);
            (
                r.z.im.abs() < 1e-8 && r.multiplicity == kernel,
                format!(
                    "z = {}, |z − 2π| = {:.2e}, multiplicity {}, kernel dimension {kernel}",
                    r.z,
                    (r.z - target).norm(),
                    r.multiplicity
                ),
            )
        }
        None => (false, format!("no resonance within 1e-8 of 2π in {found:?}")),
    };
    report(3, pass, detail);
}

struct StripRun {
    strip_bound: f64,
    found: Vec<Resonance>,
    mirrored: Vec<Resonance>,
}

/// Criterion 4's twenty graphs, shared with criterion 5.
fn strip_runs() -> &'static Vec<StripRun> {
    static RUNS: OnceLock<Vec<StripRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let window = rect(0.5, 12.0, -3.0, -1e-4);
        (0..20u64)
            .map(|i| {
                let g = regular(30, 3, 4000 ^ i);
                let sys = SecularSystem::assemble(&g);
                StripRun {
                    strip_bound: g.strip_bound().unwrap(),
                    found: find_resonances(&sys, &window, 1e-10, &opts()).unwrap(),
                    mirrored: find_resonances(&sys, &window.mirrored(), 1e-10, &opts()).unwrap(),
                }
            })
            .collect()
    })
}

#[test]
fn criterion_04_strip_bound() {
    let start = Instant::now();
    let runs = strip_runs();
    let total: usize = runs.iter().map(|r| r.found.len()).sum();
    let violations: usize = runs
        .iter()
        .map(|r| r.found.iter().filter(|z| z.z.im < -r.strip_bound - 1e-9).count())
        .sum();
    let deepest = runs
        .iter()
        .flat_map(|r| r.found.iter().map(move |z| z.z.im + r.strip_bound))
        .fold(f64::INFINITY, f64::min);
    report(
        4,
        violations == 0 && total > 0,
        format!(
            "{total} resonances on 20 graphs, {violations} violations, min(Im z + K) = {deepest:.4}, {:?}",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_05_mirror_symmetry() {
    let runs = strip_runs();
    let mut checked = 0;
    let mut missing = Vec::new();
    for run in runs {
        for r in &run.found {
            let image = C64::new(-r.z.re, r.z.im);
            checked += 1;
            if !run.mirrored.iter().any(|m| (m.z - image).norm() < 1e-6) {
                missing.push(r.z);
            }
        }
    }
    report(5, missing.is_empty() && checked > 0, format!("{checked} checked, missing mirrors {missing:?}"));
}

fn ensemble_member(n: usize) -> QuantumGraph {
    regular(n, 2, 6000 + n as u64)
}

#[test]
fn criterion_06_open_closed_trend() {
    let start = Instant::now();
    let mut distances = Vec::new();
    for n in [40, 80, 160] {
        let c = compare_open_closed(&ensemble_member(n), (1.0, 20.0), 0.5, 2.0, &opts()).unwrap();
        println!(
            "  n = {n}: distance {:.4}, open {} / closed {} ({:?})",
            c.distance,
            c.open_total,
            c.closed_total,
            start.elapsed()
        );
        distances.push(c.distance);
    }
    let elapsed = start.elapsed();
    let pass = distances.windows(2).all(|w| w[1] < w[0]) && distances[2] < 0.10 && elapsed <= Duration::from_secs(900);
    report(6, pass, format!("distances {distances:?}, {elapsed:?}"));
}

#[test]
fn criterion_07_delta_scaling() {
    let g = ensemble_member(160);
    let deltas = [0.4, 0.2, 0.1, 0.05];
    let scan = delta_scan(&g, 1.0, 20.0, 3.0, &deltas, &opts()).unwrap();
    let lead_vertices = scan.lead_vertices as f64;
    let scaled: Vec<f64> = scan
        .deltas
        .iter()
        .zip(&scan.counts)
        .map(|(d, &c)| c as f64 * d.powf(2.5) / lead_vertices)
        .collect();
    let monotone = scan.counts.windows(2).all(|w| w[0] <= w[1]);
    let stable = scaled.iter().all(|&s| s <= 3.0 * scaled[0]);
    report(
        7,
        monotone && stable,
        format!(
            "deltas {:?}, counts {:?}, count·δ^2.5/g {scaled:?}, fitted exponent {:.3}",
            scan.deltas, scan.counts, scan.fitted_exponent
        ),
    );
}

#[test]
fn criterion_08_hermitian_example() {
    let (n, scale, delta, seed) = (200, 0.05, 0.01, 8);
    let window = (-1.0, 1.0);
    let undamped = hermitian_pair(n, 0, scale, seed).unwrap();
    let zero_everywhere = [1e-4, 1e-3, 0.003, 0.01, 0.1]
        .iter()
        .all(|&d| hermitian_strip_count(&undamped, d, window) == 0);
    let mut counts = Vec::new();
    let mut norms = Vec::new();
    for damp in [5, 10, 20] {
        let pair = hermitian_pair(n, damp, scale, seed).unwrap();
        counts.push(hermitian_strip_count(&pair, delta, window));
        norms.push(pair.trace_norm_b);
        println!(
            "  damp_count {damp}: count(δ=0.01) = {}, count(δ=0.003) = {}, count(δ=0.001) = {}",
            counts.last().unwrap(),
            hermitian_strip_count(&pair, 0.003, window),
            hermitian_strip_count(&pair, 0.001, window)
        );
    }
    let constant = counts[0] as f64 * delta.powf(2.5) / norms[0];
    let bounded = counts
        .iter()
        .zip(&norms)
        .all(|(&c, &b)| c as f64 <= 10.0 * constant * b / delta.powf(2.5));
    let nondecreasing = counts.windows(2).all(|w| w[0] <= w[1]);
    report(
        8,
        zero_everywhere && bounded && nondecreasing,
        format!("counts at δ = 0.01 {counts:?}, fitted constant {constant:.3e}, undamped all zero {zero_everywhere}"),
    );
}

fn small_graphs() -> Vec<QuantumGraph> {
    (0..10u64)
        .map(|i| {
            let n = 6 + 2 * (i as usize % 5);
            regular(n, 1 + i as usize % 3, 9000 + i)
        })
        .collect()
}

#[test]
fn criterion_09_counting_consistency() {
    let window = rect(0.5, 8.0, -1.5, -1e-3);
    let (xm, ym) = (3.71, -0.613);
    let quarters = [
        rect(window.re_min, xm, window.im_min, ym),
        rect(xm, window.re_max, window.im_min, ym),
        rect(window.re_min, xm, ym, window.im_max),
        rect(xm, window.re_max, ym, window.im_max),
    ];
    let mut rows = Vec::new();
    let mut pass = true;
    for g in small_graphs() {
        let sys = SecularSystem::assemble(&g);
        let whole = count_zeros(&sys, &window, &opts()).unwrap().count;
        let parts: usize = quarters.iter().map(|q| count_zeros(&sys, q, &opts()).unwrap().count).sum();
        let roots: usize = find_resonances(&sys, &window, 1e-10, &opts())
            .unwrap()
            .iter()
            .map(|r| r.multiplicity)
            .sum();
        pass &= whole == parts && whole == roots;
        rows.push((whole, parts, roots));
    }
    report(9, pass, format!("(whole, partition, roots) {rows:?}"));
}

#[test]
fn criterion_10_derivative_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let h = 1e-6;
    let mut worst_log = 0.0f64;
    let mut worst_u = 0.0f64;
    let mut points = 0;
    for g in small_graphs() {
        let sys = SecularSystem::assemble(&g);
        let mut accepted = 0;
        while accepted < 50 {
            let z = C64::new(rng.random_range(0.5..8.0), rng.random_range(-0.5..0.3));
            let value = sys.secular_value(z);
            if value.smallest_singular <= 1e-6 {
                continue;
            }
            accepted += 1;
            // difference of the representable neighbours, not 2h
            let (zp, zm) = (z + h, z - h);
            let step = zp - zm;
            let plus = sys.secular_value(zp).log_det;
            let minus = sys.secular_value(zm).log_det;
            // principal log of det(z+h)/det(z−h) avoids branch jumps
            let fd = (plus - minus).exp().ln() / step;
            let trace = value.log_derivative.unwrap();
            let fast = sys.log_derivative(z).unwrap();
            let rel = ((trace - fd).norm() / fd.norm()).max((fast - fd).norm() / fd.norm());
            worst_log = worst_log.max(rel);
            let fd_u = (sys.u_matrix(zp) - sys.u_matrix(zm)) / step;
            let diff = (fd_u - sys.u_derivative(z)).iter().fold(0.0f64, |m, x| m.max(x.norm()));
            worst_u = worst_u.max(diff);
        }
        points += accepted;
    }
    report(
        10,
        worst_log < 1e-6 && worst_u < 1e-8,
        format!("{points} points, worst relative log-derivative error {worst_log:.2e}, worst U′ error {worst_u:.2e}"),
    );
}

#[test]
fn criterion_11_closed_cross_check() {
    let mut cases: Vec<(String, QuantumGraph, f64, f64)> = vec![
        ("interval(1)".into(), Fixture::Interval(1.0).build().unwrap(), 0.5, 10.0),
        (
            "neumann_path(3, 1)".into(),
            Fixture::NeumannPath { edges: 3, length: 1.0 }.build().unwrap(),
            0.5,
            10.0,
        ),
        (
            "commensurate_cycle(3, 0)".into(),
            Fixture::CommensurateCycle { k: 3, leads: 0 }.build().unwrap(),
            0.5,
            10.0,
        ),
        (
            "commensurate_cycle(5, 0)".into(),
            Fixture::CommensurateCycle { k: 5, leads: 0 }.build().unwrap(),
            0.5,
            10.0,
        ),
    ];
    for (i, g) in small_graphs().into_iter().enumerate() {
        cases.push((format!("random #{i}"), g.remove_leads(), 0.5, 8.0));
    }
    let mut rows = Vec::new();
    let mut pass = true;
    for (name, g, a, b) in cases {
        let sys = SecularSystem::assemble(&g);
        let spectrum: usize = closed_spectrum(&sys, a, b, 1e-10).unwrap().iter().map(|p| p.1).sum();
        let crossings = eigenphase_crossing_count(&sys, a, b).unwrap();
        pass &= spectrum == crossings;
        rows.push(format!("{name}: {spectrum}/{crossings}"));
    }
    report(11, pass, format!("closed_spectrum/crossings {}", rows.join(", ")));
}
