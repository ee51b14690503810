//! Structured-sparsity projections for dense matrices.
//!
//! The crate implements the linear-time bi-level projections onto the
//! `l1,inf`, `l1,1` and `l1,2` balls, an exact Euclidean projection onto the
//! `l1,inf` ball used as a baseline, and the tooling around them: norm
//! identity checks, radius sweeps, a deterministic synthetic data generator
//! and a small complexity benchmark harness.
//!
//! Every bi-level projection has the same two-stage shape. The columns of
//! `Y` are first summarised by one norm each, that vector of column norms is
//! projected onto the `l1` ball of radius `eta`, and every column is then
//! projected onto its own ball whose radius is the matching entry of the
//! projected vector.
//!
//! ```
//! use bilevel::{bp_l1inf, Matrix, Radius};
//!
//! let y = Matrix::from_columns(&[&[3.0, 2.0], &[1.0, 2.0]]).unwrap();
//! let x = bp_l1inf(&y, Radius::new(3.0).unwrap());
//! assert_eq!(x.column(0), &[2.0, 2.0]);
//! assert_eq!(x.column(1), &[1.0, 1.0]);
//! ```

pub mod bench;
pub mod bilevel;
pub mod cli;
pub mod error;
pub mod exact;
pub mod io;
pub mod matrix;
pub mod rng;
pub mod vector;

pub use crate::bilevel::{
    bilevel_project, bp_l11, bp_l12, bp_l1inf, make_report, project, BallSpec,
    BilevelProjection, Family, ProjectionReport,
};
pub use crate::error::{Error, Result};
pub use crate::exact::{
    check_variational_inequality, project_l1inf_exact, prox_inf1, ExactSolution,
    DEFAULT_TOLERANCE,
};
pub use crate::matrix::{ColumnNorm, Matrix, MatrixNorm};
pub use crate::vector::{
    find_l1_threshold, project_l1_ball, project_l1_ball_sorted, project_l2_ball,
    project_linf_ball, soft_threshold, Radius, ThresholdResult,
};
