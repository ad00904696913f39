//! Smooth constrained quadratic family: f(x; i) = 1/2 x' H_i x + c_i' x
//! with symmetric (possibly indefinite) H_i.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::StochasticProblem;
use crate::error::{Result, ShbError};
use crate::geometry::ConvexFeasibleSet;
use crate::linalg;
use crate::Scalar;

#[derive(Debug, Clone)]
pub struct SmoothConstrainedInstance<F: Scalar> {
    /// Per-sample symmetric matrices, each row-major n x n.
    h: Vec<Vec<F>>,
    c: Vec<Vec<F>>,
    n: usize,
    feasible_set: ConvexFeasibleSet<F>,
    /// max_i ||H_i||_op, the smoothness constant.
    rho_smooth: F,
}

impl<F: Scalar> SmoothConstrainedInstance<F> {
    /// Build from explicit matrices; each `h[i]` is symmetrized as
    /// `(H + H')/2` before use.
    pub fn from_parts(
        h: Vec<Vec<F>>,
        c: Vec<Vec<F>>,
        feasible_set: ConvexFeasibleSet<F>,
    ) -> Result<Self> {
        if h.is_empty() || h.len() != c.len() {
            return Err(ShbError::invalid("h/c", "need matching nonempty sample lists"));
        }
        let n = feasible_set.dim();
        for (hi, ci) in h.iter().zip(&c) {
            if hi.len() != n * n || ci.len() != n {
                return Err(ShbError::DimensionMismatch {
                    expected: n,
                    got: ci.len(),
                });
            }
        }
        let half = F::from_f64_lossy(0.5);
        let h: Vec<Vec<F>> = h
            .into_iter()
            .map(|hi| {
                let mut s = vec![F::zero(); n * n];
                for r in 0..n {
                    for col in 0..n {
                        s[r * n + col] = half * (hi[r * n + col] + hi[col * n + r]);
                    }
                }
                s
            })
            .collect();
        let rho_smooth = h
            .iter()
            .map(|hi| operator_norm(hi, n))
            .fold(F::zero(), F::max);
        Ok(SmoothConstrainedInstance {
            h,
            c,
            n,
            feasible_set,
            rho_smooth,
        })
    }

    /// m random samples with normal entries scaled by `scale`.
    pub fn random(
        n: usize,
        m: usize,
        feasible_set: ConvexFeasibleSet<F>,
        scale: F,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = Vec::with_capacity(m);
        let mut c = Vec::with_capacity(m);
        for _ in 0..m {
            let hi: Vec<F> = (0..n * n)
                .map(|_| scale * F::standard_normal(&mut rng))
                .collect();
            let ci: Vec<F> = (0..n)
                .map(|_| scale * F::standard_normal(&mut rng))
                .collect();
            h.push(hi);
            c.push(ci);
        }
        Self::from_parts(h, c, feasible_set)
    }

    /// The single-sample quadratic f(x) = 1/2 ||x||^2.
    pub fn identity_quadratic(feasible_set: ConvexFeasibleSet<F>) -> Result<Self> {
        let n = feasible_set.dim();
        let mut eye = vec![F::zero(); n * n];
        for j in 0..n {
            eye[j * n + j] = F::one();
        }
        Self::from_parts(vec![eye], vec![vec![F::zero(); n]], feasible_set)
    }
}

/// Spectral norm of a symmetric matrix by power iteration on H.
fn operator_norm<F: Scalar>(h: &[F], n: usize) -> F {
    let mut v: Vec<F> = (0..n)
        .map(|j| F::from_f64_lossy(1.0 + 0.37 * (j as f64 % 7.0)))
        .collect();
    let nv = linalg::norm(&v);
    for x in v.iter_mut() {
        *x = *x / nv;
    }
    let mut lambda = F::zero();
    for _ in 0..300 {
        let mut w = vec![F::zero(); n];
        for r in 0..n {
            w[r] = linalg::dot(&h[r * n..(r + 1) * n], &v);
        }
        let nw = linalg::norm(&w);
        if nw == F::zero() {
            return F::zero();
        }
        lambda = nw;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = *wi / nw;
        }
    }
    lambda
}

impl<F: Scalar> StochasticProblem<F> for SmoothConstrainedInstance<F> {
    fn dimension(&self) -> usize {
        self.n
    }

    fn sample_count(&self) -> usize {
        self.h.len()
    }

    fn feasible_set(&self) -> &ConvexFeasibleSet<F> {
        &self.feasible_set
    }

    fn objective(&self, x: &[F]) -> F {
        let half = F::from_f64_lossy(0.5);
        let sum: F = self
            .h
            .iter()
            .zip(&self.c)
            .map(|(hi, ci)| {
                let hx = mat_vec(hi, x, self.n);
                half * linalg::dot(x, &hx) + linalg::dot(ci, x)
            })
            .sum();
        sum / F::from_usize_lossy(self.sample_count())
    }

    fn sample_subgradient(&self, x: &[F], sample: usize) -> Result<Vec<F>> {
        if sample >= self.sample_count() {
            return Err(ShbError::SampleOutOfRange {
                index: sample,
                count: self.sample_count(),
            });
        }
        let mut g = mat_vec(&self.h[sample], x, self.n);
        for (gi, ci) in g.iter_mut().zip(&self.c[sample]) {
            *gi = *gi + *ci;
        }
        Ok(g)
    }

    fn weak_convexity_bound(&self) -> F {
        self.rho_smooth
    }
}

fn mat_vec<F: Scalar>(h: &[F], x: &[F], n: usize) -> Vec<F> {
    (0..n)
        .map(|r| linalg::dot(&h[r * n..(r + 1) * n], x))
        .collect()
}
