//! Arnoldi factorization `A V_m = V_{m+1} H_{m+1,m}` with twice-repeated
//! Gram-Schmidt, and Ritz pairs of the resulting Hessenberg matrix.

use faer::Mat;
use num_complex::Complex64;

use crate::dense;
use crate::error::{Error, Result};

/// Orthonormal Krylov basis and projected operator.
#[derive(Debug, Clone)]
pub struct KrylovFactorization {
    /// `m + 1` orthonormal vectors, or `m` after a breakdown.
    pub basis: Vec<Vec<f64>>,
    /// `(m + 1) x m` upper Hessenberg matrix, row major.
    hessenberg: Vec<f64>,
    steps: usize,
    /// Number of completed steps when the new direction vanished.
    pub breakdown_step: Option<usize>,
}

impl KrylovFactorization {
    /// Number of Arnoldi steps `m` (columns of the Hessenberg matrix).
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.hessenberg[i * self.steps + j]
    }

    /// The square `m x m` part.
    pub fn square(&self) -> Mat<f64> {
        Mat::from_fn(self.steps, self.steps, |i, j| self.h(i, j))
    }

    /// The full rectangular `(m + 1) x m` matrix.
    pub fn rectangular(&self) -> Mat<f64> {
        Mat::from_fn(self.steps + 1, self.steps, |i, j| self.h(i, j))
    }

    /// Subdiagonal entry closing the factorization, zero after a breakdown.
    pub fn residual_norm(&self) -> f64 {
        if self.breakdown_step.is_some() {
            0.0
        } else {
            self.h(self.steps, self.steps - 1).abs()
        }
    }

    /// `sum_k y[k] basis[k]` over the first `m` basis vectors.
    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        let n = self.basis[0].len();
        let mut x = vec![0.0; n];
        for (v, &c) in self.basis.iter().zip(y) {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += c * vi;
            }
        }
        x
    }

    fn lift_complex(&self, y: &[Complex64]) -> Vec<Complex64> {
        let n = self.basis[0].len();
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (v, &c) in self.basis.iter().zip(y) {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += c * vi;
            }
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Runs up to `n_a` Arnoldi steps of `apply` from `start`.
///
/// `apply(x, y)` must write `A x` into `y`. Each new direction is
/// orthogonalized twice against the whole basis. The iteration stops early
/// when the orthogonalized direction falls below `1e-14` of `|A v_k|`.
pub fn arnoldi<F>(mut apply: F, start: &[f64], n_a: usize) -> Result<KrylovFactorization>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    if n_a == 0 {
        return Err(Error::InvalidParameter("Arnoldi dimension must be at least 1".into()));
    }
    let n = start.len();
    let s = norm2(start);
    if s == 0.0 || !s.is_finite() {
        return Err(Error::ZeroVector);
    }
    let m = n_a.min(n);
    let mut basis = Vec::with_capacity(m + 1);
    basis.push(start.iter().map(|x| x / s).collect::<Vec<f64>>());
    let mut h = vec![0.0; (m + 1) * m];
    let mut w = vec![0.0; n];
    let mut breakdown = None;
    let mut done = 0;
    for k in 0..m {
        apply(&basis[k], &mut w)?;
        let image = norm2(&w);
        for _pass in 0..2 {
            for (j, v) in basis.iter().enumerate() {
                let c = dot(v, &w);
                h[j * m + k] += c;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let beta = norm2(&w);
        done = k + 1;
        if beta <= 1e-14 * image || beta == 0.0 {
            h[(k + 1) * m + k] = 0.0;
            breakdown = Some(done);
            break;
        }
        h[(k + 1) * m + k] = beta;
        basis.push(w.iter().map(|x| x / beta).collect());
    }
    // compact the Hessenberg storage to (done + 1) x done
    let mut compact = vec![0.0; (done + 1) * done];
    for i in 0..=done {
        for j in 0..done {
            compact[i * done + j] = h[i * m + j];
        }
    }
    if breakdown.is_some() {
        basis.truncate(done);
    }
    Ok(KrylovFactorization {
        basis,
        hessenberg: compact,
        steps: done,
        breakdown_step: breakdown,
    })
}

/// A Ritz value with its residual estimate `|h_{m+1,m}| |y_m|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RitzValue {
    pub value: Complex64,
    pub residual: f64,
}

/// A Ritz value with its lifted, unit 2-norm vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RitzPair {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
    pub residual: f64,
}

/// Rotates `y` so its first entry of (numerically) maximal modulus is real
/// and positive.
fn fix_phase(y: &mut [Complex64]) {
    let max = y.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = y
        .iter()
        .position(|c| c.norm() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    let phase = y[pivot].conj() / y[pivot].norm();
    y.iter_mut().for_each(|c| *c *= phase);
}

fn small_eigen(f: &KrylovFactorization) -> Result<Vec<(Complex64, Vec<Complex64>, f64)>> {
    let m = f.steps();
    let (values, vectors) = dense::eigen(&f.square())?;
    let beta = f.residual_norm();
    let mut out: Vec<_> = values
        .into_iter()
        .enumerate()
        .map(|(k, value)| {
            let mut y: Vec<Complex64> = (0..m).map(|i| vectors[(i, k)]).collect();
            let norm = y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                y.iter_mut().for_each(|c| *c /= norm);
            }
            fix_phase(&mut y);
            let residual = beta * y[m - 1].norm();
            (value, y, residual)
        })
        .collect();
    out.sort_by(|a, b| dense::spectral_order(&a.0, &b.0));
    Ok(out)
}

/// Ritz values sorted by modulus (then real part descending, imaginary part
/// ascending), without forming vectors.
pub fn ritz_values(f: &KrylovFactorization) -> Result<Vec<RitzValue>> {
    Ok(small_eigen(f)?
        .into_iter()
        .map(|(value, _, residual)| RitzValue { value, residual })
        .collect())
}

/// All Ritz pairs, sorted like [`ritz_values`].
pub fn ritz_pairs(f: &KrylovFactorization) -> Result<Vec<RitzPair>> {
    Ok(small_eigen(f)?
        .into_iter()
        .map(|(value, y, residual)| RitzPair {
            value,
            vector: f.lift_complex(&y),
            residual,
        })
        .collect())
}

/// The leading Ritz pair only.
pub fn leading_ritz_pair(f: &KrylovFactorization) -> Result<RitzPair> {
    let (value, y, residual) = small_eigen(f)?
        .into_iter()
        .next()
        .ok_or(Error::ZeroVector)?;
    Ok(RitzPair {
        value,
        vector: f.lift_complex(&y),
        residual,
    })
}
