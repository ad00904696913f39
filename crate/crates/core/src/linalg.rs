//! Small dense vector helpers used by every module.

use crate::Scalar;

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm_sq<F: Scalar>(a: &[F]) -> F {
    dot(a, a)
}

pub fn norm<F: Scalar>(a: &[F]) -> F {
    norm_sq(a).sqrt()
}

pub fn dist_sq<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum()
}

pub fn dist<F: Scalar>(a: &[F], b: &[F]) -> F {
    dist_sq(a, b).sqrt()
}

/// a + s * b
pub fn add_scaled<F: Scalar>(a: &[F], s: F, b: &[F]) -> Vec<F> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

pub fn sub<F: Scalar>(a: &[F], b: &[F]) -> Vec<F> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scale<F: Scalar>(a: &[F], s: F) -> Vec<F> {
    a.iter().map(|&x| x * s).collect()
}

pub fn all_finite<F: Scalar>(a: &[F]) -> bool {
    a.iter().all(|x| x.is_finite())
}
