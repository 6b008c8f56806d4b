//! Thin wrappers over `ndarray`'s GEMM for flat row-major buffers.

use ndarray::linalg::general_mat_mul;
use ndarray::{ArrayView2, ArrayViewMut2};

use crate::nn::real::Real;

/// `out = alpha * a·b + beta * out` where `a` is `m×k`, `b` is `k×n`.
pub(crate) fn gemm<F: Real>(
    m: usize,
    k: usize,
    n: usize,
    alpha: F,
    a: &[F],
    b: &[F],
    beta: F,
    out: &mut [F],
) {
    let a = ArrayView2::from_shape((m, k), a).expect("gemm lhs shape");
    let b = ArrayView2::from_shape((k, n), b).expect("gemm rhs shape");
    let mut c = ArrayViewMut2::from_shape((m, n), out).expect("gemm out shape");
    general_mat_mul(alpha, &a, &b, beta, &mut c);
}

/// `out += aᵀ·b` where `a` is `m×k`, `b` is `m×n`; `out` is `k×n`.
pub(crate) fn gemm_at_b_acc<F: Real>(m: usize, k: usize, n: usize, a: &[F], b: &[F], out: &mut [F]) {
    let a = ArrayView2::from_shape((m, k), a).expect("gemm lhs shape");
    let b = ArrayView2::from_shape((m, n), b).expect("gemm rhs shape");
    let mut c = ArrayViewMut2::from_shape((k, n), out).expect("gemm out shape");
    general_mat_mul(F::one(), &a.t(), &b, F::one(), &mut c);
}

/// `out = beta * out + a·bᵀ` where `a` is `m×n`, `b` is `k×n`; `out` is `m×k`.
pub(crate) fn gemm_a_bt<F: Real>(
    m: usize,
    n: usize,
    k: usize,
    a: &[F],
    b: &[F],
    beta: F,
    out: &mut [F],
) {
    let a = ArrayView2::from_shape((m, n), a).expect("gemm lhs shape");
    let b = ArrayView2::from_shape((k, n), b).expect("gemm rhs shape");
    let mut c = ArrayViewMut2::from_shape((m, k), out).expect("gemm out shape");
    general_mat_mul(F::one(), &a, &b.t(), beta, &mut c);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_match_naive() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; // 2×3
        let b = [1.0, 0.5, -1.0, 2.0, 0.0, 1.0]; // 3×2
        let mut out = [0.0; 4];
        gemm(2, 3, 2, 1.0, &a, &b, 0.0, &mut out);
        assert_eq!(out, [-1.0, 7.5, -1.0, 18.0]);

        // aᵀ·c with c 2×2
        let c = [1.0, 0.0, 0.0, 1.0];
        let mut at = [0.0; 6];
        gemm_at_b_acc(2, 3, 2, &a, &c, &mut at);
        assert_eq!(at, [1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);

        // a·aᵀ
        let mut aat = [0.0; 4];
        gemm_a_bt(2, 3, 2, &a, &a, 0.0, &mut aat);
        assert_eq!(aat, [14.0, 32.0, 32.0, 77.0]);
    }
}
