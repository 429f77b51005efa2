//! Small dense linear algebra on top of `faer`.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::StochasticOperator;

/// The full matrix `S`, built entry by entry.
pub fn dense_s(op: &StochasticOperator) -> Mat<f64> {
    let n = op.dim();
    Mat::from_fn(n, n, |i, j| op.entry(i, j))
}

/// `S` restricted to the given rows and columns (both in the order given).
pub fn dense_block(op: &StochasticOperator, rows: &[usize], cols: &[usize]) -> Mat<f64> {
    Mat::from_fn(rows.len(), cols.len(), |a, b| op.entry(rows[a], cols[b]))
}

/// All eigenvalues of a square real matrix, multiplicities retained.
pub fn eigenvalues(m: &Mat<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    m.eigenvalues().map_err(|_| Error::EigenSolver)
}

/// Eigenvalues and (2-normalized) right eigenvectors of a square real matrix.
/// Column `k` of the returned matrix belongs to eigenvalue `k`.
pub fn eigen(m: &Mat<f64>) -> Result<(Vec<Complex64>, Mat<Complex64>)> {
    let evd = m.eigen().map_err(|_| Error::EigenSolver)?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok((values, evd.U().to_owned()))
}

/// Solves `m x = b` by LU with partial pivoting.
pub fn solve(m: &Mat<f64>, b: &[f64]) -> Vec<f64> {
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = m.partial_piv_lu().solve(&rhs);
    (0..b.len()).map(|i| x[(i, 0)]).collect()
}

/// Right singular vector of the smallest singular value, with that value.
pub fn smallest_right_singular(m: &Mat<f64>) -> Result<(f64, Vec<f64>)> {
    let svd = m.svd().map_err(|_| Error::EigenSolver)?;
    let s = svd.S().column_vector();
    let k = (0..m.ncols().min(m.nrows()))
        .min_by(|&a, &b| s[a].total_cmp(&s[b]))
        .ok_or(Error::ZeroVector)?;
    let v = svd.V();
    Ok((s[k], (0..m.ncols()).map(|i| v[(i, k)]).collect()))
}

/// Orders eigenvalues by modulus descending, then real part descending,
/// then imaginary part ascending. Moduli are compared after rounding to
/// `1e-12`, so rounding noise cannot split a `+r / -r` pair the wrong way.
pub fn spectral_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    let key = |z: &Complex64| (z.norm() * 1e12).round();
    key(b)
        .total_cmp(&key(a))
        .then(b.re.total_cmp(&a.re))
        .then(a.im.total_cmp(&b.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swap_matrix() {
        let m = Mat::from_fn(2, 2, |i, j| if i != j { 1.0 } else { 0.0 });
        let mut e = eigenvalues(&m).unwrap();
        e.sort_by(spectral_order);
        assert!((e[0] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((e[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn lu_solve() {
        let m = Mat::from_fn(2, 2, |i, j| [[2.0, 1.0], [1.0, 3.0]][i][j]);
        let x = solve(&m, &[3.0, 5.0]);
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
    }

    #[test]
    fn smallest_singular_of_rank_deficient() {
        let m = Mat::from_fn(3, 2, |i, _| i as f64 + 1.0);
        let (s, v) = smallest_right_singular(&m).unwrap();
        assert!(s < 1e-14);
        assert!((v[0] + v[1]).abs() < 1e-14);
    }
}
