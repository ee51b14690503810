//! Acceptance suite. Every check prints one `PASS`/`FAIL` line; the process
//! exits non-zero when any check fails.
//!
//! Oracles here are written from scratch (plain loops, grid search) and do
//! not call into the library's norm or threshold code.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use bilevel::bench::{fit_complexity, generate_matrix, median, sparsity_sweep, time_projection, Distribution, RadiusGrid};
use bilevel::rng::SplitMix64;
use bilevel::{
    bp_l11, bp_l12, bp_l1inf, check_variational_inequality, project, project_l1_ball,
    project_l1_ball_sorted, project_l1inf_exact, BallSpec, Family, Matrix, Radius,
    DEFAULT_TOLERANCE,
};
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn radius(v: f64) -> Radius {
    Radius::new(v).unwrap()
}

fn frob_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Reference mixed norm: per-column reduction, summed in index order.
fn ref_norm(y: &Matrix, family: Family) -> f64 {
    y.columns()
        .map(|c| match family {
            Family::L1Inf | Family::L1InfExact => c.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
            Family::L11 => c.iter().map(|v| v.abs()).sum(),
            Family::L12 => c.iter().map(|v| v * v).sum::<f64>().sqrt(),
        })
        .sum()
}

fn ref_frobenius(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn diff(a: &Matrix, b: &Matrix) -> Matrix {
    let data = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x - y).collect();
    Matrix::from_col_major(a.rows(), a.cols(), data).unwrap()
}

fn identity_suite() -> Outcome {
    let start = Instant::now();
    let mut seeds = SplitMix64::new(0xA11CE);
    let cases: Vec<(usize, usize, u64, u64)> = (0..100)
        .map(|_| {
            let n = 1 + seeds.below(500);
            let m = 1 + seeds.below(500);
            (n, m, seeds.next_u64(), seeds.next_u64())
        })
        .collect();
    let worst = cases
        .par_iter()
        .map(|&(n, m, data_seed, radius_seed)| {
            let dist = if data_seed % 2 == 0 { Distribution::Gaussian } else { Distribution::Uniform };
            let y = generate_matrix(n, m, dist, data_seed).unwrap();
            let mut rng = SplitMix64::new(radius_seed);
            let mut worst = 0.0_f64;
            for family in Family::ALL {
                let norm_y = ref_norm(&y, family);
                for k in 0..20 {
                    // log-uniform radii from 1e-4 to 1.2 times the norm, plus zero
                    let eta = if k == 0 { 0.0 } else { norm_y * 10f64.powf(rng.uniform(-4.0, 0.08)) };
                    let x = project(&y, BallSpec::new(family, eta).unwrap()).unwrap();
                    let gap = ref_norm(&diff(&y, &x), family) + ref_norm(&x, family) - norm_y;
                    worst = worst.max(gap.abs() / norm_y.max(1.0));
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && secs < 120.0,
        format!("worst relative gap {worst:.3e} (limit 1e-10), {secs:.1}s (limit 120s)"),
    )
}

fn worked_examples() -> Outcome {
    let cols = |a: [f64; 2], b: [f64; 2]| Matrix::from_columns(&[&a, &b]).unwrap();
    let cases: [(&str, Matrix, Matrix); 4] = [
        (
            "bp-l1inf",
            bp_l1inf(&cols([3.0, 2.0], [1.0, 2.0]), radius(3.0)),
            cols([2.0, 2.0], [1.0, 1.0]),
        ),
        (
            "bp-l11",
            bp_l11(&cols([3.0, 1.0], [2.0, 0.0]), radius(3.0)),
            cols([2.25, 0.25], [0.5, 0.0]),
        ),
        (
            "bp-l12",
            bp_l12(&cols([3.0, 4.0], [0.0, 2.0]), radius(3.0)),
            cols([1.8, 2.4], [0.0, 0.0]),
        ),
        (
            "exact",
            project_l1inf_exact(&cols([2.0, 2.0], [2.0, 0.0]), radius(2.0), DEFAULT_TOLERANCE).unwrap().x,
            cols([4.0 / 3.0, 4.0 / 3.0], [2.0 / 3.0, 0.0]),
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, got, want) in &cases {
        let err = max_abs_diff(got.as_slice(), want.as_slice());
        pass &= err <= 1e-12;
        parts.push(format!("{name} {err:.1e}"));
    }
    outcome(pass, format!("max entry error: {} (limit 1e-12)", parts.join(", ")))
}

/// Best clipping of a two-column matrix on a threshold grid of step `step`.
/// Every candidate is feasible: `t1 + t2 <= eta`.
fn grid_search_projection(y: &Matrix, eta: f64, step: f64) -> Vec<f64> {
    let col_max = |j: usize| y.column(j).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let (max1, max2) = (col_max(0), col_max(1));
    let clip = |t1: f64, t2: f64| -> Vec<f64> {
        let mut out = y.as_slice().to_vec();
        let n = y.rows();
        for (k, v) in out.iter_mut().enumerate() {
            let t = if k < n { t1 } else { t2 };
            *v = v.signum() * v.abs().min(t);
        }
        out
    };
    let steps = (max1.min(eta) / step).floor() as usize;
    let mut best = (f64::INFINITY, Vec::new());
    for s in 0..=steps + 1 {
        let t1 = (s as f64 * step).min(max1.min(eta));
        let t2 = (eta - t1).min(max2);
        let cand = clip(t1, t2);
        let d = frob_dist(&cand, y.as_slice());
        if d < best.0 {
            best = (d, cand);
        }
    }
    best.1
}

fn exactness_oracle() -> Outcome {
    let mut rng = SplitMix64::new(0x0_0AC1E);
    let instances: Vec<(Matrix, f64, u64)> = (0..200)
        .map(|_| {
            let data = (0..6).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let y = Matrix::from_col_major(3, 2, data).unwrap();
            let norm = ref_norm(&y, Family::L1Inf);
            (y, norm * rng.uniform(0.02, 0.98), rng.next_u64())
        })
        .collect();
    let (worst_entry, worst_vi) = instances
        .par_iter()
        .map(|(y, eta, seed)| {
            let exact = project_l1inf_exact(y, radius(*eta), DEFAULT_TOLERANCE).unwrap();
            let oracle = grid_search_projection(y, *eta, 1e-3);
            let entry = max_abs_diff(exact.x.as_slice(), &oracle);
            let vi = check_variational_inequality(y, &exact.x, radius(*eta), 10_000, *seed).unwrap();
            (entry, vi)
        })
        .reduce(|| (0.0, f64::NEG_INFINITY), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    outcome(
        worst_entry <= 2e-3 && worst_vi <= 1e-9,
        format!("grid oracle max entry diff {worst_entry:.2e} (limit 2e-3), max VI violation {worst_vi:.2e} (limit 1e-9)"),
    )
}

fn optimality_dominance() -> Outcome {
    let mut rng = SplitMix64::new(0xD0_417);
    let instances: Vec<(Matrix, f64)> = (0..1000)
        .map(|_| {
            let n = 1 + rng.below(12);
            let m = 1 + rng.below(12);
            let data = (0..n * m).map(|_| rng.gaussian()).collect();
            let y = Matrix::from_col_major(n, m, data).unwrap();
            let norm = ref_norm(&y, Family::L1Inf);
            (y, norm * rng.uniform(0.0, 1.1))
        })
        .collect();
    let violations = instances
        .par_iter()
        .filter(|(y, eta)| {
            let exact = project_l1inf_exact(y, radius(*eta), DEFAULT_TOLERANCE).unwrap().x;
            let bp = bp_l1inf(y, radius(*eta));
            frob_dist(y.as_slice(), exact.as_slice()) > frob_dist(y.as_slice(), bp.as_slice()) + 1e-9
        })
        .count();
    let y = Matrix::from_columns(&[&[2.0, 2.0], &[2.0, 0.0]]).unwrap();
    let exact = project_l1inf_exact(&y, radius(2.0), DEFAULT_TOLERANCE).unwrap().x;
    let bp = bp_l1inf(&y, radius(2.0));
    let (de, db) = (frob_dist(y.as_slice(), exact.as_slice()), frob_dist(y.as_slice(), bp.as_slice()));
    outcome(
        violations == 0 && de < db,
        format!("{violations}/1000 violations; on the 2x2 instance exact {de:.6} < bp {db:.6}"),
    )
}

fn complexity() -> Outcome {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let sizes = [(1000, 1000), (1000, 2000), (1000, 4000), (1000, 8000), (2000, 8000)];
    let (fit, bp_small, exact_small) = pool.install(|| {
        let samples = time_projection(Family::L1Inf, &sizes, 5, radius(1.0), 7).unwrap();
        let fit = fit_complexity(&samples).unwrap();
        let bp: Vec<f64> = time_projection(Family::L1Inf, &[(1000, 1000)], 5, radius(1.0), 11)
            .unwrap()
            .iter()
            .map(|s| s.seconds)
            .collect();
        let exact: Vec<f64> = time_projection(Family::L1InfExact, &[(1000, 1000)], 5, radius(1.0), 11)
            .unwrap()
            .iter()
            .map(|s| s.seconds)
            .collect();
        (fit, median(&mut bp.clone()), median(&mut exact.clone()))
    });
    let secs = start.elapsed().as_secs_f64();
    let pass = (0.85..=1.15).contains(&fit.loglog_slope)
        && fit.r2_linear >= 0.98
        && bp_small < exact_small
        && secs < 300.0;
    outcome(
        pass,
        format!(
            "slope {:.3} (0.85..1.15), r2_linear {:.4} (>= 0.98), 1000x1000 median bp {:.2e}s vs exact {:.2e}s, {secs:.1}s (limit 300s)",
            fit.loglog_slope, fit.r2_linear, bp_small, exact_small
        ),
    )
}

fn l1_cross_validation() -> Outcome {
    let mut rng = SplitMix64::new(0x5_0127);
    let cases: Vec<(usize, u64)> = (0..10_000)
        .map(|k| {
            // log-uniform lengths, the first few at the maximum
            let len = if k < 20 { 100_000 } else { 10f64.powf(rng.uniform(0.0, 5.0)) as usize };
            (len.clamp(1, 100_000), rng.next_u64())
        })
        .collect();
    let worst = cases
        .par_iter()
        .map(|&(len, seed)| {
            let mut r = SplitMix64::new(seed);
            let v: Vec<f64> = match seed % 3 {
                0 => (0..len).map(|_| r.gaussian()).collect(),
                1 => (0..len).map(|_| r.uniform(-1.0, 1.0)).collect(),
                // heavy ties
                _ => (0..len).map(|_| r.below(7) as f64 - 3.0).collect(),
            };
            let l1: f64 = v.iter().map(|x| x.abs()).sum();
            let eta = l1 * r.uniform(0.0, 1.05);
            let a = project_l1_ball(&v, radius(eta)).unwrap();
            let b = project_l1_ball_sorted(&v, radius(eta)).unwrap();
            max_abs_diff(&a, &b)
        })
        .reduce(|| 0.0, f64::max);
    outcome(worst <= 1e-12, format!("max entry diff {worst:.2e} over 10^4 vectors (limit 1e-12)"))
}

fn sparsity_direction() -> Outcome {
    let y = generate_matrix(1000, 1000, Distribution::SparseSignal { informative: 64 }, 42).unwrap();
    let methods = [Family::L1Inf, Family::L1InfExact, Family::L11, Family::L12];
    let sweep = sparsity_sweep(&y, &methods, &RadiusGrid::default()).unwrap();
    let c = &sweep.cumulative;
    outcome(
        c[0] > c[1] && c[2] >= c[3],
        format!(
            "cumulative zero-column fraction: bp-l1inf {:.4} > l1inf-exact {:.4}, bp-l11 {:.4} >= bp-l12 {:.4}",
            c[0], c[1], c[2], c[3]
        ),
    )
}

fn cross_norm_gap() -> Outcome {
    let y = generate_matrix(100, 100, Distribution::Gaussian, 2024).unwrap();
    let eta = 0.5 * ref_norm(&y, Family::L1Inf);
    let gap = |x: &Matrix| {
        ref_frobenius(diff(&y, x).as_slice()) + ref_frobenius(x.as_slice()) - ref_frobenius(y.as_slice())
    };
    let bp = gap(&bp_l1inf(&y, radius(eta)));
    let exact = gap(&project_l1inf_exact(&y, radius(eta), DEFAULT_TOLERANCE).unwrap().x);
    outcome(
        bp > 1e-6 && exact > 1e-6,
        format!("Frobenius gap bp {bp:.4e}, exact {exact:.4e} (both > 1e-6)"),
    )
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_bilevel"))
        .args(args)
        .env_remove("BILEVEL_THREADS")
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let input = path("y.csv");
    if !run_cli(&["gen", "--rows", "300", "--cols", "400", "--seed", "5", "--out", &input]) {
        return outcome(false, "gen failed".into());
    }
    let read = |p: &str| std::fs::read(Path::new(p)).unwrap();
    let mut mismatches = Vec::new();
    for family in ["bp-l1inf", "bp-l11", "bp-l12", "l1inf-exact"] {
        for ext in ["csv", "blpm"] {
            let mut outputs = Vec::new();
            for (k, threads) in ["1", "1", "8"].iter().enumerate() {
                let out = path(&format!("{family}-{k}.{ext}"));
                let ok = run_cli(&[
                    "--threads", threads, "project", "--input", &input, "--output", &out,
                    "--family", family, "--radius", "25",
                ]);
                if !ok {
                    return outcome(false, format!("project {family} failed"));
                }
                outputs.push(read(&out));
            }
            if outputs[0] != outputs[1] || outputs[0] != outputs[2] {
                mismatches.push(format!("{family}.{ext}"));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "4 families x 2 formats byte-identical across reruns and 1 vs 8 threads".into()
        } else {
            format!("differing outputs: {}", mismatches.join(", "))
        },
    )
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 9] = [
        ("identity suite", identity_suite),
        ("worked examples", worked_examples),
        ("exactness oracle", exactness_oracle),
        ("optimality dominance", optimality_dominance),
        ("linear complexity", complexity),
        ("l1 pivot vs sort", l1_cross_validation),
        ("sparsity direction", sparsity_direction),
        ("cross-norm gap", cross_norm_gap),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        failures += usize::from(!result.pass);
        println!(
            "[{verdict}] {}. {name}: {} [{:.1}s]",
            k + 1,
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance check(s) failed");
        std::process::exit(1);
    }
    println!("all acceptance checks passed");
}
