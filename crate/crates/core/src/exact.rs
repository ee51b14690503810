//! Exact Euclidean projection onto the `l1,inf` ball, the prox of the dual
//! `inf,1` norm, and a variational-inequality certificate.
//!
//! The projection is a clipping operator `X_ij = sign(Y_ij) min(|Y_ij|, t_j)`.
//! The thresholds are coupled through one multiplier `lambda >= 0`: column
//! `j` gets the level `t_j(lambda)` at which it loses exactly `lambda` of `l1`
//! mass, `sum_i max(|Y_ij| - t_j, 0) = lambda` (or `t_j = 0` if the whole
//! column weighs less than `lambda`), and `lambda` is chosen so that
//! `sum_j t_j(lambda) = eta`.
//!
//! `sum_j t_j(lambda)` is continuous, non-increasing and piecewise linear in
//! `lambda`. It is solved by bisection on `[0, max_j ||y_j||_1]`. At each
//! midpoint the linear piece through it is also solved in closed form; once
//! the bracket has shrunk onto the piece that holds the root, that candidate
//! is exact and ends the search.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{ColumnNorm, Matrix};
use crate::rng::SplitMix64;
use crate::vector::{clip_in_place, Radius};

/// Relative tolerance on `|sum_j t_j - eta|` used by [`crate::project`].
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

const MAX_ITERATIONS: usize = 200;

#[derive(Clone, Debug)]
pub struct ExactSolution {
    pub x: Matrix,
    /// Clipping threshold `t_j` of every column.
    pub thresholds: Vec<f64>,
    /// Coupling multiplier: the `l1` mass removed from every active column.
    pub lambda: f64,
    pub iterations: usize,
    /// `|sum_j t_j - eta|` at the returned solution.
    pub residual: f64,
}

/// Sorted prefix data for one column, enough to evaluate `t_j(lambda)` by
/// binary search.
#[derive(Clone, Debug)]
struct ColumnProfile {
    /// `prefix[k]`: sum of the `k` largest absolute values.
    prefix: Vec<f64>,
    /// `excess[k]`: mass above the `(k+1)`-th largest value, i.e. the lambda
    /// at which the threshold reaches it. `excess[n]` is the column's `l1` norm.
    excess: Vec<f64>,
}

impl ColumnProfile {
    fn new(column: &[f64]) -> Self {
        let mut a: Vec<f64> = column.iter().map(|v| v.abs()).collect();
        a.sort_unstable_by(|x, y| y.total_cmp(x));
        let n = a.len();
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        for &v in &a {
            prefix.push(prefix.last().unwrap() + v);
        }
        let mut excess = Vec::with_capacity(n + 1);
        for (k, &v) in a.iter().enumerate() {
            excess.push(prefix[k] - k as f64 * v);
        }
        excess.push(prefix[n]);
        Self { prefix, excess }
    }

    fn l1(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    /// `(t, k)`: the threshold and the number of entries strictly above it.
    /// `k == 0` means the column is fully clipped away.
    fn threshold(&self, lambda: f64) -> (f64, usize) {
        let n = self.prefix.len() - 1;
        if lambda >= self.excess[n] {
            return (0.0, 0);
        }
        let k = self.excess[..n].partition_point(|&e| e <= lambda);
        (((self.prefix[k] - lambda) / k as f64).max(0.0), k)
    }
}

/// The map `lambda -> (t_1(lambda), ..., t_m(lambda))` for a fixed matrix.
#[derive(Clone, Debug)]
pub struct ThresholdProfile {
    columns: Vec<ColumnProfile>,
}

impl ThresholdProfile {
    pub fn new(y: &Matrix) -> Self {
        Self {
            columns: y.columns().collect::<Vec<_>>().par_iter().map(|c| ColumnProfile::new(c)).collect(),
        }
    }

    pub fn thresholds(&self, lambda: f64) -> Vec<f64> {
        self.columns.iter().map(|c| c.threshold(lambda).0).collect()
    }

    /// `sum_j t_j(lambda)`, summed in column order.
    pub fn threshold_sum(&self, lambda: f64) -> f64 {
        self.columns.iter().map(|c| c.threshold(lambda).0).sum()
    }

    /// Largest column `l1` norm; every threshold is zero from there on.
    pub fn lambda_max(&self) -> f64 {
        self.columns.iter().map(ColumnProfile::l1).fold(0.0, f64::max)
    }

    /// Root of the linear piece of `sum_j t_j` that contains `lambda`.
    fn piece_root(&self, lambda: f64, eta: f64) -> Option<f64> {
        let (mut offset, mut slope) = (0.0, 0.0);
        for c in &self.columns {
            let (_, k) = c.threshold(lambda);
            if k > 0 {
                offset += c.prefix[k] / k as f64;
                slope += 1.0 / k as f64;
            }
        }
        (slope > 0.0).then(|| (offset - eta) / slope)
    }
}

/// Exact Euclidean projection of `y` onto `{X : ||X||_{1,inf} <= eta}`.
///
/// `tol` bounds `|sum_j t_j - eta|` relative to `max(1, eta)`. Inputs inside
/// the ball come back as an exact copy.
pub fn project_l1inf_exact(y: &Matrix, eta: Radius, tol: f64) -> Result<ExactSolution> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let eta = eta.value();
    let maxima = y.aggregate_columns(ColumnNorm::Inf);
    if maxima.iter().sum::<f64>() <= eta {
        return Ok(ExactSolution {
            x: y.clone(),
            thresholds: maxima,
            lambda: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    if eta == 0.0 {
        return Ok(ExactSolution {
            x: y.zeros_like(),
            thresholds: vec![0.0; y.cols()],
            lambda: y.norm_inf1(),
            iterations: 0,
            residual: 0.0,
        });
    }

    let profile = ThresholdProfile::new(y);
    let target = tol * eta.max(1.0);
    let (mut lo, mut hi) = (0.0, profile.lambda_max());
    let mut best: Option<(f64, f64)> = None;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let sum = profile.threshold_sum(mid);
        let gap = (sum - eta).abs();
        if best.map_or(true, |(_, g)| gap < g) {
            best = Some((mid, gap));
        }
        if gap <= target {
            break;
        }
        if let Some(root) = profile.piece_root(mid, eta) {
            if (lo..=hi).contains(&root) {
                let gap = (profile.threshold_sum(root) - eta).abs();
                if gap < best.unwrap().1 {
                    best = Some((root, gap));
                }
                if gap <= target {
                    break;
                }
            }
        }
        // bracket exhausted at floating-point resolution
        if mid <= lo || mid >= hi {
            break;
        }
        if sum > eta {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let (lambda, residual) = best.expect("at least one iteration");
    if residual > target {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }
    let thresholds = profile.thresholds(lambda);
    let mut x = y.clone();
    x.par_columns_mut()
        .zip(thresholds.par_iter())
        .for_each(|(col, &t)| clip_in_place(col, t));
    Ok(ExactSolution {
        x,
        thresholds,
        lambda,
        iterations,
        residual,
    })
}

/// Proximity operator of `alpha * ||.||_{inf,1}`, through the Moreau
/// decomposition `prox(Y) = Y - P_{l1,inf ball of radius alpha}(Y)`.
pub fn prox_inf1(y: &Matrix, alpha: Radius) -> Result<Matrix> {
    let projection = project_l1inf_exact(y, alpha, DEFAULT_TOLERANCE)?;
    y.sub(&projection.x)
}

/// Largest `<Y - X, Z - X>` over `trials` random `Z` in the `l1,inf` ball of
/// radius `eta`. For the Euclidean projection `X` of `Y` this is `<= 0`.
///
/// Candidates cycle through three samplers: random clippings of `Y` with
/// thresholds summing to `eta` (boundary points of the same form as the
/// projections), Gaussian matrices rescaled into the ball, and small
/// feasible perturbations of `X` itself.
pub fn check_variational_inequality(
    y: &Matrix,
    x: &Matrix,
    eta: Radius,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    y.ensure_same_shape(x)?;
    let eta = eta.value();
    let x_norm = x.norm_l1inf();
    if x_norm > eta + 1e-9 {
        return Err(Error::Infeasible { norm: x_norm, eta });
    }
    let direction = y.sub(x)?;
    let (n, m) = y.shape();
    let y_max = y.aggregate_columns(ColumnNorm::Inf);
    let mut rng = SplitMix64::new(seed);
    let mut z = vec![0.0; n * m];
    let mut worst = f64::NEG_INFINITY;

    for trial in 0..trials {
        match trial % 3 {
            0 => {
                // thresholds ~ eta * Dirichlet(1, ..., 1)
                let weights: Vec<f64> = (0..m).map(|_| rng.exponential()).collect();
                let total: f64 = weights.iter().sum();
                z.copy_from_slice(y.as_slice());
                for (j, col) in z.chunks_mut(n).enumerate() {
                    clip_in_place(col, (eta * weights[j] / total).min(y_max[j]));
                }
            }
            1 => {
                z.iter_mut().for_each(|v| *v = rng.gaussian());
                let norm: f64 = z
                    .chunks(n)
                    .map(|c| ColumnNorm::Inf.eval(c))
                    .sum();
                let scale = if norm > 0.0 { eta * rng.next_f64() / norm } else { 0.0 };
                z.iter_mut().for_each(|v| *v *= scale);
            }
            _ => {
                let step = 10f64.powf(-rng.uniform(1.0, 6.0));
                for (zi, xi) in z.iter_mut().zip(x.as_slice()) {
                    *zi = xi + step * rng.gaussian();
                }
                let norm: f64 = z.chunks(n).map(|c| ColumnNorm::Inf.eval(c)).sum();
                if norm > eta {
                    let scale = if norm > 0.0 { eta / norm } else { 0.0 };
                    z.iter_mut().for_each(|v| *v *= scale);
                }
            }
        }
        let value: f64 = direction
            .as_slice()
            .iter()
            .zip(z.iter().zip(x.as_slice()))
            .map(|(d, (zi, xi))| d * (zi - xi))
            .sum();
        worst = worst.max(value);
    }
    Ok(worst)
}
