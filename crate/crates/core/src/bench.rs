//! Synthetic data, timing, complexity fits and radius sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::bilevel::{make_report_in, project, BallSpec, Family};
use crate::error::{Error, Result};
use crate::matrix::{Matrix, MatrixNorm};
use crate::rng::SplitMix64;
use crate::vector::Radius;

/// Variance multiplier of the informative columns of [`Distribution::SparseSignal`].
pub const INFORMATIVE_VARIANCE: f64 = 10.0;

/// Number of points in the default radius grid.
pub const DEFAULT_GRID_POINTS: usize = 40;

/// Lower end of the default grid relative to the norm of the input.
pub const DEFAULT_GRID_SPAN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distribution {
    /// i.i.d. standard normal entries.
    Gaussian,
    /// i.i.d. uniform entries on `[-1, 1)`.
    Uniform,
    /// Standard normal background; the first `informative` columns have
    /// their variance multiplied by [`INFORMATIVE_VARIANCE`].
    SparseSignal { informative: usize },
}

/// Deterministic synthetic matrix. Entries are drawn column by column from
/// [`SplitMix64`] seeded with `seed`.
pub fn generate_matrix(rows: usize, cols: usize, dist: Distribution, seed: u64) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(format!(
            "dimensions must be positive, got {rows}x{cols}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let data: Vec<f64> = match dist {
        Distribution::Uniform => (0..rows * cols).map(|_| rng.uniform(-1.0, 1.0)).collect(),
        Distribution::Gaussian => (0..rows * cols).map(|_| rng.gaussian()).collect(),
        Distribution::SparseSignal { informative } => {
            if informative > cols {
                return Err(Error::InvalidParameter(format!(
                    "{informative} informative columns requested but only {cols} exist"
                )));
            }
            let amplitude = INFORMATIVE_VARIANCE.sqrt();
            (0..rows * cols)
                .map(|k| {
                    let z = rng.gaussian();
                    if k / rows < informative {
                        amplitude * z
                    } else {
                        z
                    }
                })
                .collect()
        }
    };
    Matrix::from_col_major(rows, cols, data)
}

/// One timed projection.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchSample {
    pub method: Family,
    pub rows: usize,
    pub cols: usize,
    pub repeat: usize,
    pub seconds: f64,
}

/// Times `repeats` projections per size, each on a freshly generated
/// Gaussian matrix. One extra warm-up run per size is discarded. Runs on
/// the current rayon pool; install a single-thread pool for serial timings.
pub fn time_projection(
    method: Family,
    sizes: &[(usize, usize)],
    repeats: usize,
    eta: Radius,
    seed: u64,
) -> Result<Vec<BenchSample>> {
    if repeats < 3 {
        return Err(Error::InvalidParameter(format!(
            "at least 3 repeats are required, got {repeats}"
        )));
    }
    let spec = BallSpec { family: method, eta };
    let mut streams = SplitMix64::new(seed);
    let mut samples = Vec::with_capacity(sizes.len() * repeats);
    for &(rows, cols) in sizes {
        for run in 0..=repeats {
            let y = generate_matrix(rows, cols, Distribution::Gaussian, streams.next_u64())?;
            let start = Instant::now();
            let x = project(&y, spec)?;
            let seconds = start.elapsed().as_secs_f64().max(1e-9);
            std::hint::black_box(x);
            if run > 0 {
                samples.push(BenchSample {
                    method,
                    rows,
                    cols,
                    repeat: run - 1,
                    seconds,
                });
            }
        }
    }
    Ok(samples)
}

/// Least-squares fits of median runtime against problem size.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityFit {
    /// `time ~ linear_coef * nm`
    pub linear_coef: f64,
    pub r2_linear: f64,
    /// `time ~ nlogn_coef * nm ln(nm)`
    pub nlogn_coef: f64,
    pub r2_nlogn: f64,
    /// Slope of `ln(time)` against `ln(nm)`.
    pub loglog_slope: f64,
    /// `(nm, median seconds)` per distinct size, ascending.
    pub medians: Vec<(f64, f64)>,
}

impl fmt::Display for ComplexityFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "linear: a={:.6e} r2={:.6}  nlogn: b={:.6e} r2={:.6}  loglog slope={:.4}",
            self.linear_coef, self.r2_linear, self.nlogn_coef, self.r2_nlogn, self.loglog_slope
        )
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_unstable_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Coefficient and r2 of the fit `y ~ c * x` through the origin.
fn fit_through_origin(x: &[f64], y: &[f64]) -> (f64, f64) {
    let coef = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - coef * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    (coef, r_squared(ss_res, ss_tot))
}

fn r_squared(ss_res: f64, ss_tot: f64) -> f64 {
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    }
}

/// Ordinary least-squares slope.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Fits linear and `n log n` models to the per-size medians of `samples`,
/// which must all come from one method and cover at least four sizes.
pub fn fit_complexity(samples: &[BenchSample]) -> Result<ComplexityFit> {
    if let Some(first) = samples.first() {
        if samples.iter().any(|s| s.method != first.method) {
            return Err(Error::InvalidParameter(
                "samples from several methods cannot be fitted together".into(),
            ));
        }
    }
    let mut by_size: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for s in samples {
        by_size.entry((s.rows, s.cols)).or_default().push(s.seconds);
    }
    if by_size.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "complexity fits need at least 4 distinct sizes, got {}",
            by_size.len()
        )));
    }
    let mut medians: Vec<(f64, f64)> = by_size
        .into_iter()
        .map(|((n, m), mut times)| ((n * m) as f64, median(&mut times)))
        .collect();
    medians.sort_by(|a, b| a.0.total_cmp(&b.0));

    let sizes: Vec<f64> = medians.iter().map(|p| p.0).collect();
    let times: Vec<f64> = medians.iter().map(|p| p.1).collect();
    let nlogn: Vec<f64> = sizes.iter().map(|s| s * s.ln()).collect();
    let (linear_coef, r2_linear) = fit_through_origin(&sizes, &times);
    let (nlogn_coef, r2_nlogn) = fit_through_origin(&nlogn, &times);
    let log_sizes: Vec<f64> = sizes.iter().map(|s| s.ln()).collect();
    let log_times: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    Ok(ComplexityFit {
        linear_coef,
        r2_linear,
        nlogn_coef,
        r2_nlogn,
        loglog_slope: slope(&log_sizes, &log_times),
        medians,
    })
}

/// Radii to sweep over.
#[derive(Clone, Debug, PartialEq)]
pub enum RadiusGrid {
    /// Listed radii, strictly ascending.
    Explicit(Vec<f64>),
    /// `count` log-spaced radii from `lo` to `hi`.
    Log { lo: f64, hi: f64, count: usize },
    /// `count` log-spaced radii from `norm / 1000` to `norm`, where `norm` is
    /// the input's norm in the family being swept.
    Relative { count: usize },
}

impl Default for RadiusGrid {
    fn default() -> Self {
        RadiusGrid::Relative {
            count: DEFAULT_GRID_POINTS,
        }
    }
}

impl FromStr for RadiusGrid {
    type Err = Error;

    /// `log:lo:hi:count`, `rel:count`, or comma separated radii.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::InvalidParameter(format!("radius grid `{s}`: {what}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
        let count = |t: &str| t.trim().parse::<usize>().map_err(|_| bad("bad point count"));
        let grid = if let Some(rest) = s.strip_prefix("log:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad("expected log:lo:hi:count"));
            }
            RadiusGrid::Log {
                lo: num(parts[0])?,
                hi: num(parts[1])?,
                count: count(parts[2])?,
            }
        } else if let Some(rest) = s.strip_prefix("rel:") {
            RadiusGrid::Relative { count: count(rest)? }
        } else {
            RadiusGrid::Explicit(s.split(',').map(num).collect::<Result<_>>()?)
        };
        // validate the shape of the grid eagerly
        grid.resolve(1.0)?;
        Ok(grid)
    }
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let ratio = (hi / lo).ln();
    (0..count)
        .map(|k| match k {
            0 => lo,
            k if k == count - 1 => hi,
            k => lo * (ratio * k as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

impl RadiusGrid {
    /// Concrete radii for an input whose norm is `norm`.
    pub fn resolve(&self, norm: f64) -> Result<Vec<f64>> {
        let invalid = |what: String| Err(Error::InvalidParameter(what));
        let radii = match *self {
            RadiusGrid::Explicit(ref radii) => radii.clone(),
            RadiusGrid::Log { lo, hi, count } => {
                if !(lo > 0.0 && hi > lo && hi.is_finite()) || count == 0 {
                    return invalid(format!("log grid needs 0 < lo < hi and count >= 1, got {lo}:{hi}:{count}"));
                }
                log_spaced(lo, hi, count)
            }
            RadiusGrid::Relative { count } => {
                if count == 0 {
                    return invalid("relative grid needs at least one point".into());
                }
                if norm == 0.0 {
                    vec![0.0]
                } else {
                    log_spaced(norm * DEFAULT_GRID_SPAN, norm, count)
                }
            }
        };
        if radii.is_empty() {
            return invalid("empty radius grid".into());
        }
        if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return invalid(format!("radii must be finite and nonnegative: {radii:?}"));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!("radii must be strictly ascending: {radii:?}"));
        }
        Ok(radii)
    }
}

/// Measurements of one method along a radius grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCurve<T> {
    pub method: Family,
    pub radii: Vec<f64>,
    pub values: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityPoint {
    pub norm_after: f64,
    pub residual: f64,
    /// `norm_before - norm_after - residual`
    pub gap: f64,
}

/// Projects `y` at every radius and records the identity triple in the
/// family's own norm.
pub fn identity_sweep(y: &Matrix, family: Family, grid: &RadiusGrid) -> Result<SweepCurve<IdentityPoint>> {
    identity_sweep_in(y, family, grid, family.norm())
}

/// [`identity_sweep`] with the triple measured in `norm`. The grid is still
/// resolved against the family's norm.
pub fn identity_sweep_in(
    y: &Matrix,
    family: Family,
    grid: &RadiusGrid,
    norm: MatrixNorm,
) -> Result<SweepCurve<IdentityPoint>> {
    let radii = grid.resolve(y.norm(family.norm()))?;
    let values = radii
        .par_iter()
        .map(|&eta| {
            let spec = BallSpec::new(family, eta)?;
            let x = project(y, spec)?;
            let report = make_report_in(y, &x, norm)?;
            Ok(IdentityPoint {
                norm_after: report.norm_after,
                residual: report.residual_norm,
                gap: report.identity_gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepCurve {
        method: family,
        radii,
        values,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparsitySweep {
    /// Zero-column counts per method.
    pub curves: Vec<SweepCurve<usize>>,
    /// Per method, the sum over the grid of the zero-column fraction.
    pub cumulative: Vec<f64>,
}

/// Counts exactly-zero columns of every method's projection along the grid.
pub fn sparsity_sweep(y: &Matrix, methods: &[Family], grid: &RadiusGrid) -> Result<SparsitySweep> {
    let mut curves = Vec::with_capacity(methods.len());
    let mut cumulative = Vec::with_capacity(methods.len());
    for &method in methods {
        let radii = grid.resolve(y.norm(method.norm()))?;
        let values = radii
            .par_iter()
            .map(|&eta| {
                let x = project(y, BallSpec::new(method, eta)?)?;
                Ok(x.column_sparsity(0.0).0)
            })
            .collect::<Result<Vec<usize>>>()?;
        cumulative.push(values.iter().map(|&z| z as f64 / y.cols() as f64).sum());
        curves.push(SweepCurve {
            method,
            radii,
            values,
        });
    }
    Ok(SparsitySweep { curves, cumulative })
}

fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer)
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

/// `method,n,m,repeat,seconds`
pub fn write_bench_csv<W: Write>(writer: W, samples: &[BenchSample]) -> Result<()> {
    let mut csv = csv_writer(writer);
    csv.write_record(["method", "n", "m", "repeat", "seconds"])?;
    for s in samples {
        csv.write_record([
            s.method.tag().to_string(),
            s.rows.to_string(),
            s.cols.to_string(),
            s.repeat.to_string(),
            num(s.seconds),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// `eta,norm_after,residual,gap`
pub fn write_identity_csv<W: Write>(writer: W, curve: &SweepCurve<IdentityPoint>) -> Result<()> {
    let mut csv = csv_writer(writer);
    csv.write_record(["eta", "norm_after", "residual", "gap"])?;
    for (eta, p) in curve.radii.iter().zip(&curve.values) {
        csv.write_record([num(*eta), num(p.norm_after), num(p.residual), num(p.gap)])?;
    }
    csv.flush()?;
    Ok(())
}

/// `eta,method,zero_columns`
pub fn write_sparsity_csv<W: Write>(writer: W, sweep: &SparsitySweep) -> Result<()> {
    let mut csv = csv_writer(writer);
    csv.write_record(["eta", "method", "zero_columns"])?;
    for curve in &sweep.curves {
        for (eta, zeros) in curve.radii.iter().zip(&curve.values) {
            csv.write_record([num(*eta), curve.method.tag().to_string(), zeros.to_string()])?;
        }
    }
    csv.flush()?;
    Ok(())
}
