//! Dense column-major matrices and the mixed norms used by the projections.
//!
//! Columns are stored contiguously: every algorithm in this crate works one
//! column at a time, so `column(j)` is a plain slice.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A dense `rows x cols` matrix of finite `f64` values in column-major order.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Norm used to summarise a single column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColumnNorm {
    /// Largest absolute entry.
    Inf,
    /// Sum of absolute entries.
    One,
    /// Euclidean length.
    Two,
}

impl ColumnNorm {
    /// Evaluates the norm on one column, summing in index order.
    pub fn eval(self, column: &[f64]) -> f64 {
        match self {
            ColumnNorm::Inf => column.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())),
            ColumnNorm::One => column.iter().map(|v| v.abs()).sum(),
            ColumnNorm::Two => column.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

/// Matrix norms. The mixed norms sum a per-column norm over the columns,
/// except `Inf1` which takes the largest column `l1` norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MatrixNorm {
    L1Inf,
    Inf1,
    L11,
    L12,
    Frobenius,
}

impl MatrixNorm {
    pub fn eval(self, y: &Matrix) -> f64 {
        match self {
            MatrixNorm::L1Inf => y.norm_l1inf(),
            MatrixNorm::Inf1 => y.norm_inf1(),
            MatrixNorm::L11 => y.norm_l11(),
            MatrixNorm::L12 => y.norm_l12(),
            MatrixNorm::Frobenius => y.frobenius_norm(),
        }
    }
}

impl fmt::Display for MatrixNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MatrixNorm::L1Inf => "l1inf",
            MatrixNorm::Inf1 => "inf1",
            MatrixNorm::L11 => "l11",
            MatrixNorm::L12 => "l12",
            MatrixNorm::Frobenius => "l22",
        };
        f.write_str(name)
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

impl Matrix {
    /// Builds a matrix from column-major data.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyShape { rows, cols });
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::InvalidParameter(format!("{rows}x{cols} overflows")))?;
        if data.len() != expected {
            return Err(Error::EntryCount {
                expected,
                actual: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a list of equally long columns.
    pub fn from_columns(columns: &[&[f64]]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.len());
        let mut data = Vec::with_capacity(rows * columns.len());
        for column in columns {
            if column.len() != rows {
                return Err(Error::EntryCount {
                    expected: rows,
                    actual: column.len(),
                });
            }
            data.extend_from_slice(column);
        }
        Self::from_col_major(rows, columns.len(), data)
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != m) {
            return Err(Error::EntryCount {
                expected: m,
                actual: bad.as_ref().len(),
            });
        }
        let mut data = vec![0.0; n * m];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.as_ref().iter().enumerate() {
                data[j * n + i] = v;
            }
        }
        Self::from_col_major(n, m, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_col_major(rows, cols, vec![0.0; rows.saturating_mul(cols)])
    }

    /// Wraps data that the caller guarantees is finite and correctly sized.
    pub(crate) fn from_parts_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { rows, cols, data }
    }

    pub(crate) fn zeros_like(&self) -> Self {
        Self::from_parts_unchecked(self.rows, self.cols, vec![0.0; self.data.len()])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Entry `(i, j)`. Panics when out of bounds.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        self.data[j * self.rows + i]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> std::slice::Chunks<'_, f64> {
        self.data.chunks(self.rows)
    }

    pub(crate) fn par_columns_mut(&mut self) -> rayon::slice::ChunksMut<'_, f64> {
        self.data.par_chunks_mut(self.rows)
    }

    /// Column-major view of all entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        for i in 0..self.rows {
            data.extend(self.columns().map(|c| c[i]));
        }
        Self::from_parts_unchecked(self.cols, self.rows, data)
    }

    /// `c * self`. Fails when the product overflows to infinity.
    pub fn scaled(&self, c: f64) -> Result<Matrix> {
        Self::from_col_major(self.rows, self.cols, self.data.iter().map(|v| c * v).collect())
    }

    /// `self - other`.
    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.ensure_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self::from_col_major(self.rows, self.cols, data)
    }

    pub(crate) fn ensure_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        Ok(())
    }

    /// Reorders columns so that column `j` of the result is column `order[j]`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<Matrix> {
        check_permutation(order, self.cols)?;
        let mut data = Vec::with_capacity(self.data.len());
        for &j in order {
            data.extend_from_slice(self.column(j));
        }
        Ok(Self::from_parts_unchecked(self.rows, self.cols, data))
    }

    /// Reorders rows so that row `i` of the result is row `order[i]`.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Matrix> {
        check_permutation(order, self.rows)?;
        let mut data = Vec::with_capacity(self.data.len());
        for column in self.columns() {
            data.extend(order.iter().map(|&i| column[i]));
        }
        Ok(Self::from_parts_unchecked(self.rows, self.cols, data))
    }

    /// `sum_j max_i |Y_ij|`
    pub fn norm_l1inf(&self) -> f64 {
        self.columns().map(|c| ColumnNorm::Inf.eval(c)).sum()
    }

    /// `max_j sum_i |Y_ij|`, the dual of the `l1,inf` norm.
    pub fn norm_inf1(&self) -> f64 {
        self.columns()
            .map(|c| ColumnNorm::One.eval(c))
            .fold(0.0, f64::max)
    }

    /// `sum_j sum_i |Y_ij|`
    pub fn norm_l11(&self) -> f64 {
        self.columns().map(|c| ColumnNorm::One.eval(c)).sum()
    }

    /// `sum_j ||y_j||_2`
    pub fn norm_l12(&self) -> f64 {
        self.columns().map(|c| ColumnNorm::Two.eval(c)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm(&self, kind: MatrixNorm) -> f64 {
        kind.eval(self)
    }

    /// Frobenius inner product `<self, other>`.
    pub fn dot(&self, other: &Matrix) -> Result<f64> {
        self.ensure_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// One norm per column. Columns are independent; each column is reduced
    /// sequentially, so the result does not depend on the thread count.
    pub fn aggregate_columns(&self, kind: ColumnNorm) -> Vec<f64> {
        self.data
            .par_chunks(self.rows)
            .map(|c| kind.eval(c))
            .collect()
    }

    /// Number and fraction of columns whose largest absolute entry is `<= tol`.
    pub fn column_sparsity(&self, tol: f64) -> (usize, f64) {
        assert!(tol >= 0.0, "tolerance must be nonnegative");
        let count = self
            .columns()
            .filter(|c| c.iter().all(|v| v.abs() <= tol))
            .count();
        (count, count as f64 / self.cols as f64)
    }
}

fn check_permutation(order: &[usize], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    if order.len() != len {
        return Err(Error::InvalidParameter(format!(
            "permutation has length {}, expected {len}",
            order.len()
        )));
    }
    for &k in order {
        if k >= len || std::mem::replace(&mut seen[k], true) {
            return Err(Error::InvalidParameter(format!(
                "{order:?} is not a permutation of 0..{len}"
            )));
        }
    }
    Ok(())
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cols(columns: &[&[f64]]) -> Matrix {
        Matrix::from_columns(columns).unwrap()
    }

    #[test]
    fn norms_on_small_examples() {
        let y = cols(&[&[3.0, 2.0], &[1.0, 2.0]]);
        assert_eq!(y.norm_l1inf(), 5.0);
        assert_eq!(y.norm_inf1(), 5.0);

        assert_eq!(cols(&[&[3.0, 1.0], &[2.0, 0.0]]).norm_l11(), 6.0);
        assert_eq!(cols(&[&[3.0, 4.0], &[0.0, 2.0]]).norm_l12(), 7.0);
        assert_eq!(cols(&[&[1.0, -1.0, 1.0]]).norm_inf1(), 3.0);
        assert_eq!(cols(&[&[3.0, 4.0]]).norm_l12(), 5.0);

        let single = cols(&[&[7.0]]);
        assert_eq!(single.norm_l1inf(), 7.0);
        assert_eq!(cols(&[&[-4.0]]).norm_l11(), 4.0);

        let zero = Matrix::zeros(3, 4).unwrap();
        for kind in [
            MatrixNorm::L1Inf,
            MatrixNorm::Inf1,
            MatrixNorm::L11,
            MatrixNorm::L12,
        ] {
            assert_eq!(zero.norm(kind), 0.0);
        }
    }

    #[test]
    fn aggregates() {
        let y = cols(&[&[3.0, 2.0], &[1.0, 2.0]]);
        assert_eq!(y.aggregate_columns(ColumnNorm::Inf), vec![3.0, 2.0]);
        let y = cols(&[&[3.0, 1.0], &[2.0, 0.0]]);
        assert_eq!(y.aggregate_columns(ColumnNorm::One), vec![4.0, 2.0]);
        let y = cols(&[&[3.0, 4.0], &[0.0, 2.0]]);
        assert_eq!(y.aggregate_columns(ColumnNorm::Two), vec![5.0, 2.0]);
    }

    #[test]
    fn sparsity_counts() {
        let x = cols(&[&[1.8, 2.4], &[0.0, 0.0]]);
        assert_eq!(x.column_sparsity(0.0), (1, 0.5));
        assert_eq!(Matrix::zeros(2, 5).unwrap().column_sparsity(0.0), (5, 1.0));
        let ones = Matrix::from_col_major(2, 3, vec![1.0; 6]).unwrap();
        assert_eq!(ones.column_sparsity(0.0), (0, 0.0));
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            Matrix::from_col_major(0, 2, vec![]),
            Err(Error::EmptyShape { .. })
        ));
        assert!(matches!(
            Matrix::from_col_major(2, 2, vec![1.0; 3]),
            Err(Error::EntryCount { .. })
        ));
        assert!(matches!(
            Matrix::from_col_major(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(Matrix::from_col_major(1, 1, vec![f64::INFINITY]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn rows_and_columns_agree() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(a.column(1), &[2.0, 5.0]);
        assert_eq!(a.row(1), vec![4.0, 5.0, 6.0]);
        assert_eq!(a.transpose().column(1), &[4.0, 5.0, 6.0]);
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn permutations_are_validated() {
        let a = Matrix::zeros(2, 3).unwrap();
        assert!(a.permute_columns(&[0, 1]).is_err());
        assert!(a.permute_columns(&[0, 1, 1]).is_err());
        assert!(a.permute_rows(&[1, 0]).is_ok());
    }

    fn matrix_strategy() -> impl Strategy<Value = Matrix> {
        (1usize..6, 1usize..6).prop_flat_map(|(n, m)| {
            proptest::collection::vec(-50.0f64..50.0, n * m)
                .prop_map(move |data| Matrix::from_col_major(n, m, data).unwrap())
        })
    }

    const NORMS: [MatrixNorm; 5] = [
        MatrixNorm::L1Inf,
        MatrixNorm::Inf1,
        MatrixNorm::L11,
        MatrixNorm::L12,
        MatrixNorm::Frobenius,
    ];

    proptest! {
        #[test]
        fn duality_sanity(y in matrix_strategy()) {
            prop_assert!(y.norm_inf1() <= y.norm_l11());
            prop_assert!(y.norm_l1inf() <= y.norm_l11());
        }

        #[test]
        fn norms_are_absolutely_homogeneous(y in matrix_strategy(), c in -10.0f64..10.0) {
            let cy = y.scaled(c).unwrap();
            for kind in NORMS {
                let lhs = cy.norm(kind);
                let rhs = c.abs() * y.norm(kind);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0), "{kind}: {lhs} vs {rhs}");
            }
        }

        #[test]
        fn norms_are_permutation_invariant(y in matrix_strategy(), seed in any::<u64>()) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let col_order = rng.permutation(y.cols());
            let row_order = rng.permutation(y.rows());
            let permuted = y.permute_columns(&col_order).unwrap().permute_rows(&row_order).unwrap();
            for kind in NORMS {
                let a = y.norm(kind);
                let b = permuted.norm(kind);
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{kind}: {a} vs {b}");
            }
        }

        #[test]
        fn aggregates_are_nonnegative_and_vanish_on_zero_columns(y in matrix_strategy(), zero_col in 0usize..6) {
            let mut data = y.as_slice().to_vec();
            let j = zero_col % y.cols();
            data[j * y.rows()..(j + 1) * y.rows()].fill(0.0);
            let y = Matrix::from_col_major(y.rows(), y.cols(), data).unwrap();
            for kind in [ColumnNorm::Inf, ColumnNorm::One, ColumnNorm::Two] {
                let agg = y.aggregate_columns(kind);
                for (k, (&a, col)) in agg.iter().zip(y.columns()).enumerate() {
                    prop_assert!(a >= 0.0);
                    prop_assert_eq!(a == 0.0, col.iter().all(|&v| v == 0.0), "column {}", k);
                }
            }
        }
    }
}
