//! Dense complex linear-algebra helpers shared by the dynamics modules.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

pub use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Only the lower triangle of `m` is read.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_hermitian_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(f64::INFINITY)
}

/// `max |M − M†|` entrywise.
pub fn hermiticity_residual(m: &CMat) -> f64 {
    let mut r = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..=i {
            r = r.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    r
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn trace(m: &CMat) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Applies `f` to the eigenvalues of a Hermitian matrix.
pub fn hermitian_function(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (values, vectors) = hermitian_eigen(m);
    let n = values.len();
    let mut scaled = vectors.clone();
    for (k, &v) in values.iter().enumerate() {
        let fv = f(v);
        for i in 0..n {
            scaled[(i, k)] *= fv;
        }
    }
    scaled * vectors.adjoint()
}
