//! Small dense kernels for symmetric positive-definite systems.
//!
//! Matrices are row-major `n × n` slices.

use crate::scalar::Scalar;

/// In-place lower Cholesky factor of `a`. The strict upper triangle is
/// zeroed. Returns `false` on a non-positive or non-finite pivot.
pub(crate) fn cholesky_in_place<T: Scalar>(a: &mut [T], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return false;
        }
        let ljj = d.sqrt();
        a[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / ljj;
        }
        for k in (j + 1)..n {
            a[j * n + k] = T::zero();
        }
    }
    true
}

/// Solves `L z = b` in place.
pub(crate) fn forward_sub<T: Scalar>(l: &[T], n: usize, b: &mut [T]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `Lᵀ z = b` in place.
pub(crate) fn backward_sub<T: Scalar>(l: &[T], n: usize, b: &mut [T]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `L Lᵀ z = b` in place.
pub(crate) fn cho_solve<T: Scalar>(l: &[T], n: usize, b: &mut [T]) {
    forward_sub(l, n, b);
    backward_sub(l, n, b);
}

/// Full inverse from a Cholesky factor.
pub(crate) fn cho_inverse<T: Scalar>(l: &[T], n: usize) -> Vec<T> {
    let mut inv = vec![T::zero(); n * n];
    let mut col = vec![T::zero(); n];
    for j in 0..n {
        col.iter_mut().for_each(|v| *v = T::zero());
        col[j] = T::one();
        cho_solve(l, n, &mut col);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_and_solve_3x3() {
        let a = [4.0, 12.0, -16.0, 12.0, 37.0, -43.0, -16.0, -43.0, 98.0];
        let mut l = a;
        assert!(cholesky_in_place(&mut l, 3));
        assert_eq!(l, [2.0, 0.0, 0.0, 6.0, 1.0, 0.0, -8.0, 5.0, 3.0]);
        let mut b = [1.0, 2.0, 3.0];
        cho_solve(&l, 3, &mut b);
        for i in 0..3 {
            let r: f64 = (0..3).map(|k| a[i * 3 + k] * b[k]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-10);
        }
        let inv = cho_inverse(&l, 3);
        for i in 0..3 {
            for j in 0..3 {
                let r: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                assert!((r - f64::from(u8::from(i == j))).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn indefinite_rejected() {
        let mut a = [1.0, 2.0, 2.0, 1.0];
        assert!(!cholesky_in_place(&mut a, 2));
    }
}
