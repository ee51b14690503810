//! Bi-level projections onto the `l1,inf`, `l1,1` and `l1,2` balls.
//!
//! All three run in two stages:
//!
//! 1. Aggregate every column `y_j` into its norm `v_j` and project `v` onto
//!    the `l1` ball of radius `eta`, giving per-column radii `u`. This stage
//!    is sequential and costs `O(nm)` for the aggregation plus expected
//!    `O(m)` for the projection.
//! 2. Project column `j` onto the ball of radius `u_j` in the column norm
//!    (clipping for `inf`, soft thresholding for `l1`, radial scaling for
//!    `l2`). Columns are independent once `u` is fixed and are processed in
//!    parallel; the output does not depend on the number of threads.
//!
//! Because `0 <= u_j <= ||y_j||`, every column satisfies
//! `||y_j - x_j|| = ||y_j|| - ||x_j||` in its own norm, and summing over `j`
//! gives the identity `||Y - X|| + ||X|| = ||Y||` for the matching mixed norm.
//! [`make_report`] measures both sides.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{project_l1inf_exact, DEFAULT_TOLERANCE};
use crate::matrix::{ColumnNorm, Matrix, MatrixNorm};
use crate::vector::{clip_in_place, project_l1_ball_in_place, scale_to_radius, Radius};

/// The projection families understood by [`project`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Bi-level `l1,inf`: `l1` step on column maxima, then clipping.
    L1Inf,
    /// Bi-level `l1,1`: `l1` step on column `l1` norms, then per-column `l1`.
    L11,
    /// Bi-level `l1,2`: `l1` step on column `l2` norms, then radial scaling.
    L12,
    /// Exact Euclidean projection onto the `l1,inf` ball.
    L1InfExact,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::L1Inf, Family::L11, Family::L12, Family::L1InfExact];

    /// The mixed norm whose ball this family projects onto.
    pub fn norm(self) -> MatrixNorm {
        match self {
            Family::L1Inf | Family::L1InfExact => MatrixNorm::L1Inf,
            Family::L11 => MatrixNorm::L11,
            Family::L12 => MatrixNorm::L12,
        }
    }

    /// Column norm of the bi-level scheme, `None` for the exact projection.
    pub fn column_norm(self) -> Option<ColumnNorm> {
        match self {
            Family::L1Inf => Some(ColumnNorm::Inf),
            Family::L11 => Some(ColumnNorm::One),
            Family::L12 => Some(ColumnNorm::Two),
            Family::L1InfExact => None,
        }
    }

    /// Method tag used in CSV output.
    pub fn tag(self) -> &'static str {
        match self {
            Family::L1Inf => "bp-l1inf",
            Family::L11 => "bp-l11",
            Family::L12 => "bp-l12",
            Family::L1InfExact => "l1inf-exact",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = Error;

    /// Accepts both the family names (`l1inf`, `l11`, `l12`, `l1inf-exact`)
    /// and the method tags (`bp-l1inf`, ...). Underscores work as dashes.
    fn from_str(s: &str) -> Result<Self> {
        let normalized = s.trim().to_ascii_lowercase().replace('_', "-");
        match normalized.trim_start_matches("bp-") {
            "l1inf" => Ok(Family::L1Inf),
            "l11" => Ok(Family::L11),
            "l12" => Ok(Family::L12),
            "l1inf-exact" if !normalized.starts_with("bp-") => Ok(Family::L1InfExact),
            _ => Err(Error::UnknownFamily(s.to_string())),
        }
    }
}

/// A norm ball: family plus radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallSpec {
    pub family: Family,
    pub eta: Radius,
}

impl BallSpec {
    pub fn new(family: Family, eta: f64) -> Result<Self> {
        Ok(Self {
            family,
            eta: Radius::new(eta)?,
        })
    }
}

/// Result of a bi-level projection together with the per-column radii
/// produced by the `l1` step.
#[derive(Clone, Debug)]
pub struct BilevelProjection {
    pub x: Matrix,
    /// `u_j`, the radius assigned to column `j`.
    pub thresholds: Vec<f64>,
}

/// Runs the two-stage projection with the given column norm.
///
/// When `Y` is already inside the ball the result is an exact copy of `Y`
/// and the thresholds are the column norms themselves.
pub fn bilevel_project(y: &Matrix, column_norm: ColumnNorm, eta: Radius) -> BilevelProjection {
    let mut thresholds = y.aggregate_columns(column_norm);
    let mut scratch = Vec::with_capacity(thresholds.len());
    if project_l1_ball_in_place(&mut thresholds, eta.value(), &mut scratch).is_none() {
        return BilevelProjection {
            x: y.clone(),
            thresholds,
        };
    }

    let mut x = y.clone();
    match column_norm {
        ColumnNorm::Inf => x
            .par_columns_mut()
            .zip(thresholds.par_iter())
            .for_each(|(col, &u)| clip_in_place(col, u)),
        ColumnNorm::One => x
            .par_columns_mut()
            .zip(thresholds.par_iter())
            .for_each_init(Vec::new, |work, (col, &u)| {
                project_l1_ball_in_place(col, u, work);
            }),
        ColumnNorm::Two => x
            .par_columns_mut()
            .zip(thresholds.par_iter())
            .for_each(|(col, &u)| {
                let norm = ColumnNorm::Two.eval(col);
                scale_to_radius(col, norm, u);
            }),
    }
    BilevelProjection { x, thresholds }
}

/// Bi-level `l1,inf` projection.
pub fn bp_l1inf(y: &Matrix, eta: Radius) -> Matrix {
    bilevel_project(y, ColumnNorm::Inf, eta).x
}

/// Bi-level `l1,1` projection.
pub fn bp_l11(y: &Matrix, eta: Radius) -> Matrix {
    bilevel_project(y, ColumnNorm::One, eta).x
}

/// Bi-level `l1,2` projection.
pub fn bp_l12(y: &Matrix, eta: Radius) -> Matrix {
    bilevel_project(y, ColumnNorm::Two, eta).x
}

/// Projects `y` onto the ball described by `spec`.
///
/// Only the exact family can fail, when its root finder does not reach the
/// default tolerance.
pub fn project(y: &Matrix, spec: BallSpec) -> Result<Matrix> {
    match spec.family.column_norm() {
        Some(kind) => Ok(bilevel_project(y, kind, spec.eta).x),
        None => Ok(project_l1inf_exact(y, spec.eta, DEFAULT_TOLERANCE)?.x),
    }
}

/// Before/after summary of one projection, measured in the family's norm.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionReport {
    pub norm_before: f64,
    pub norm_after: f64,
    /// `||Y - X||`
    pub residual_norm: f64,
    /// `norm_before - norm_after - residual_norm`, signed.
    pub identity_gap: f64,
    /// Columns of `X` that are exactly zero.
    pub zero_columns: usize,
    /// `||Y - X||_F`
    pub frobenius_error: f64,
}

impl ProjectionReport {
    /// `key=value` lines, one per field.
    pub fn to_key_values(&self) -> String {
        format!(
            "norm_before={:?}\nnorm_after={:?}\nresidual_norm={:?}\nidentity_gap={:?}\nzero_columns={}\nfrobenius_error={:?}\n",
            self.norm_before,
            self.norm_after,
            self.residual_norm,
            self.identity_gap,
            self.zero_columns,
            self.frobenius_error
        )
    }
}

/// Measures a projection `x` of `y` in the norm of `spec.family`.
pub fn make_report(y: &Matrix, x: &Matrix, spec: BallSpec) -> Result<ProjectionReport> {
    make_report_in(y, x, spec.family.norm())
}

/// Like [`make_report`] but measured in an arbitrary norm, e.g. Frobenius,
/// where the identity is not expected to hold.
pub fn make_report_in(y: &Matrix, x: &Matrix, norm: MatrixNorm) -> Result<ProjectionReport> {
    let residual = y.sub(x)?;
    let norm_before = y.norm(norm);
    let norm_after = x.norm(norm);
    let residual_norm = residual.norm(norm);
    Ok(ProjectionReport {
        norm_before,
        norm_after,
        residual_norm,
        identity_gap: norm_before - norm_after - residual_norm,
        zero_columns: x.column_sparsity(0.0).0,
        frobenius_error: residual.frobenius_norm(),
    })
}
