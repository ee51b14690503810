//! Euclidean projections of a vector onto `l1`, `l2` and `l-inf` balls.
//!
//! The `l1` projection is soft thresholding at the level `tau` that puts the
//! result on the sphere `||u||_1 = eta`. Two routes to `tau` are provided:
//! an expected-linear pivot search (the one the matrix projections use) and
//! an `O(n log n)` sort-and-scan kept as a reference.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Radius of a norm ball. Always finite and nonnegative.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Radius(f64);

impl Radius {
    pub const ZERO: Radius = Radius(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            // normalise -0.0
            Ok(Radius(value + 0.0))
        } else {
            Err(Error::InvalidRadius(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Radius {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Radius::new(value)
    }
}

/// Soft-threshold level of an `l1` projection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdResult {
    pub tau: f64,
    /// Number of entries with `|v_k| > tau`.
    pub support_size: usize,
}

/// Neumaier compensated summation.
#[derive(Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

fn compensated_sum(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::default();
    values.iter().for_each(|&v| acc.add(v));
    acc.value()
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: v[index],
        }),
        None => Ok(()),
    }
}

#[inline]
fn shrink(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

#[inline]
fn clip(x: f64, r: f64) -> f64 {
    if x > r {
        r
    } else if x < -r {
        -r
    } else {
        x
    }
}

/// Partitions `values` into `[> pivot | == pivot | < pivot]` and returns the
/// end of the first two blocks.
fn partition3(values: &mut [f64], pivot: f64) -> (usize, usize) {
    let mut gt = 0;
    let mut eq = 0;
    let mut lt = values.len();
    while eq < lt {
        let x = values[eq];
        if x > pivot {
            values.swap(gt, eq);
            gt += 1;
            eq += 1;
        } else if x < pivot {
            lt -= 1;
            values.swap(eq, lt);
        } else {
            eq += 1;
        }
    }
    (gt, eq)
}

// Fixed so that pivot choices, and therefore outputs, are reproducible.
const PIVOT_SEED: u64 = 0x5EED_0F_B11E_7E1;

/// `tau` with `sum_k max(a_k - tau, 0) = eta` for nonnegative `work`.
/// Requires `0 < eta < sum(work)`. Reorders `work`.
fn threshold_by_pivot(work: &mut [f64], eta: f64) -> f64 {
    let mut rng = SplitMix64::new(PIVOT_SEED);
    let mut support_sum = CompensatedSum::default();
    let mut support_len = 0usize;
    let (mut lo, mut hi) = (0, work.len());
    while lo < hi {
        let pivot = work[lo + rng.below(hi - lo)];
        let (gt, eq) = partition3(&mut work[lo..hi], pivot);
        let block_sum = compensated_sum(&work[lo..lo + eq]);
        let mut candidate = support_sum;
        candidate.add(block_sum);
        // excess of the ball at level `pivot`
        let excess = candidate.value() - (support_len + eq) as f64 * pivot;
        if excess < eta {
            // tau < pivot: everything >= pivot stays in the support
            support_sum = candidate;
            support_len += eq;
            lo += eq;
        } else {
            hi = lo + gt;
        }
    }
    debug_assert!(support_len > 0);
    (support_sum.value() - eta) / support_len as f64
}

/// Same contract as [`threshold_by_pivot`], by sorting.
fn threshold_by_sort(work: &mut [f64], eta: f64) -> f64 {
    work.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut prefix = CompensatedSum::default();
    let mut tau = 0.0;
    for (k, &a) in work.iter().enumerate() {
        prefix.add(a);
        let candidate = (prefix.value() - eta) / (k + 1) as f64;
        if a > candidate {
            tau = candidate;
        } else {
            break;
        }
    }
    tau
}

fn l1_threshold_with(
    v: &[f64],
    eta: f64,
    work: &mut Vec<f64>,
    method: fn(&mut [f64], f64) -> f64,
) -> Option<f64> {
    work.clear();
    work.extend(v.iter().map(|x| x.abs()));
    let total = compensated_sum(work);
    if total <= eta {
        return None;
    }
    if eta == 0.0 {
        return Some(work.iter().copied().fold(0.0, f64::max));
    }
    Some(method(work, eta).max(0.0))
}

/// Projects `v` onto the `l1` ball of radius `eta` in place. `work` is scratch
/// space reused across calls. Returns the threshold used, `None` when `v` was
/// already inside the ball and left untouched.
pub(crate) fn project_l1_ball_in_place(v: &mut [f64], eta: f64, work: &mut Vec<f64>) -> Option<f64> {
    let tau = l1_threshold_with(v, eta, work, threshold_by_pivot)?;
    if eta == 0.0 {
        v.fill(0.0);
    } else {
        v.iter_mut().for_each(|x| *x = shrink(*x, tau));
    }
    Some(tau)
}

/// Euclidean projection onto `{u : ||u||_1 <= eta}`.
///
/// Inputs already inside the ball are returned unchanged. Otherwise the
/// result is `v` soft-thresholded at the level found by an expected-linear
/// pivot search, so it lies on the sphere and keeps the signs of `v`.
pub fn project_l1_ball(v: &[f64], eta: Radius) -> Result<Vec<f64>> {
    check_finite(v)?;
    let mut out = v.to_vec();
    project_l1_ball_in_place(&mut out, eta.value(), &mut Vec::with_capacity(v.len()));
    Ok(out)
}

/// Reference `l1` projection that finds the threshold by sorting.
pub fn project_l1_ball_sorted(v: &[f64], eta: Radius) -> Result<Vec<f64>> {
    check_finite(v)?;
    let eta = eta.value();
    let mut work = Vec::with_capacity(v.len());
    match l1_threshold_with(v, eta, &mut work, threshold_by_sort) {
        None => Ok(v.to_vec()),
        Some(_) if eta == 0.0 => Ok(vec![0.0; v.len()]),
        Some(tau) => Ok(v.iter().map(|&x| shrink(x, tau)).collect()),
    }
}

/// Soft-threshold level of the `l1` projection of `v`.
///
/// When `||v||_1 <= eta` no thresholding is needed and `tau = 0` with full
/// support is returned.
pub fn find_l1_threshold(v: &[f64], eta: Radius) -> Result<ThresholdResult> {
    check_finite(v)?;
    let mut work = Vec::with_capacity(v.len());
    Ok(match l1_threshold_with(v, eta.value(), &mut work, threshold_by_pivot) {
        None => ThresholdResult {
            tau: 0.0,
            support_size: v.len(),
        },
        Some(tau) => ThresholdResult {
            tau,
            support_size: v.iter().filter(|x| x.abs() > tau).count(),
        },
    })
}

/// Entrywise clipping to `[-r, r]`.
pub fn project_linf_ball(v: &[f64], r: Radius) -> Result<Vec<f64>> {
    check_finite(v)?;
    let mut out = v.to_vec();
    clip_in_place(&mut out, r.value());
    Ok(out)
}

pub(crate) fn clip_in_place(v: &mut [f64], r: f64) {
    if r == 0.0 {
        v.fill(0.0);
    } else {
        v.iter_mut().for_each(|x| *x = clip(*x, r));
    }
}

/// Euclidean projection onto `{u : ||u||_2 <= r}`: unchanged inside, radially
/// scaled outside.
pub fn project_l2_ball(v: &[f64], r: Radius) -> Result<Vec<f64>> {
    check_finite(v)?;
    let mut out = v.to_vec();
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    scale_to_radius(&mut out, norm, r.value());
    Ok(out)
}

/// Scales `v` (whose Euclidean norm is `norm`) down to radius `r` if needed.
pub(crate) fn scale_to_radius(v: &mut [f64], norm: f64, r: f64) {
    if norm <= r {
        return;
    }
    if r == 0.0 {
        v.fill(0.0);
    } else {
        let factor = r / norm;
        v.iter_mut().for_each(|x| *x *= factor);
    }
}

/// `sign(v_k) * max(|v_k| - tau, 0)` entrywise. Panics if `tau` is negative
/// or NaN.
pub fn soft_threshold(v: &[f64], tau: f64) -> Vec<f64> {
    assert!(tau >= 0.0, "threshold must be nonnegative, got {tau}");
    v.iter().map(|&x| shrink(x, tau)).collect()
}
