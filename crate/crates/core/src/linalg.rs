//! Dense linear solves via LU with partial pivoting.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinAlgError {
    #[error("matrix is singular to working precision (pivot {pivot:.3e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("shape mismatch: matrix is {rows}×{cols}, vector has {len} entries")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },
}

/// Solves `A x = b` by LU factorization with partial pivoting.
///
/// Declares `A` singular when the chosen pivot falls below
/// `1e-14 · max|row|` of the corresponding factored row, so near-rank-deficient
/// systems fail loudly instead of amplifying noise.
pub fn lu_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, LinAlgError> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(LinAlgError::ShapeMismatch {
            rows: a.nrows(),
            cols: a.ncols(),
            len: b.len(),
        });
    }

    let mut lu = a.clone();
    let mut x = b.clone();

    for col in 0..n {
        // partial pivoting: largest magnitude on or below the diagonal
        let mut pivot_row = col;
        let mut pivot_mag = lu[(col, col)].abs();
        for row in col + 1..n {
            let mag = lu[(row, col)].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        let row_norm = (0..n).map(|j| lu[(pivot_row, j)].abs()).fold(0.0, f64::max);
        if pivot_mag <= 1e-14 * row_norm || pivot_mag == 0.0 {
            return Err(LinAlgError::Singular {
                column: col,
                pivot: pivot_mag,
            });
        }
        if pivot_row != col {
            lu.swap_rows(col, pivot_row);
            x.swap_rows(col, pivot_row);
        }

        let pivot = lu[(col, col)];
        for row in col + 1..n {
            let factor = lu[(row, col)] / pivot;
            lu[(row, col)] = factor;
            for j in col + 1..n {
                lu[(row, j)] -= factor * lu[(col, j)];
            }
            x[row] -= factor * x[col];
        }
    }

    // back substitution on U
    for col in (0..n).rev() {
        x[col] /= lu[(col, col)];
        for row in 0..col {
            let coeff = lu[(row, col)];
            x[row] -= coeff * x[col];
        }
    }
    Ok(x)
}
