//! Small dense complex-matrix helpers.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// `max |(U^dagger U - I)_ij|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let product = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..product.nrows() {
        for j in 0..product.ncols() {
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((product[(i, j)] - expected).norm());
        }
    }
    worst
}

/// Entrywise `max |a_ij - b_ij|`; infinite when the shapes differ.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn real(rows: usize, cols: usize, values: &[f64]) -> CMatrix {
    CMatrix::from_iterator(
        rows,
        cols,
        // nalgebra fills column-major; transpose the row-major input
        (0..cols).flat_map(|c| (0..rows).map(move |r| Complex64::new(values[r * cols + c], 0.0))),
    )
}
