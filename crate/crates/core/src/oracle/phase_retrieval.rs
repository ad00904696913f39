//! Robust phase retrieval: minimize (1/m) sum_i |<a_i, x>^2 - b_i|.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::StochasticProblem;
use crate::error::{Result, ShbError};
use crate::geometry::ConvexFeasibleSet;
use crate::linalg;
use crate::Scalar;

/// How the planted signal is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XStarMode {
    UnitSphere,
    StandardNormal,
}

/// A generated phase retrieval instance.
///
/// Measurements are `b_i = <a_i, x*>^2 + delta_i zeta_i` with `delta_i`
/// Bernoulli(p_fail) and `zeta_i ~ N(0, noise_scale^2)`. The sensing matrix
/// is `A = Q D` with standard-normal `Q` and diagonal `D` linearly spaced in
/// `[1/kappa, 1]`.
#[derive(Debug, Clone)]
pub struct PhaseRetrievalInstance<F: Scalar> {
    /// Row-major m x n sensing matrix.
    a: Vec<F>,
    b: Vec<F>,
    x_star: Vec<F>,
    n: usize,
    m: usize,
    pub kappa: F,
    pub p_fail: F,
    pub noise_scale: F,
    /// Which measurements were corrupted; `None` for instances loaded from
    /// disk, where the mask is not part of the file format.
    pub corrupted: Option<Vec<bool>>,
    feasible_set: ConvexFeasibleSet<F>,
}

impl<F: Scalar> PhaseRetrievalInstance<F> {
    pub fn generate(
        n: usize,
        m: usize,
        kappa: F,
        p_fail: F,
        noise_scale: F,
        x_star_mode: XStarMode,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(ShbError::invalid("n/m", "must be >= 1"));
        }
        if kappa < F::one() {
            return Err(ShbError::invalid("kappa", format!("must be >= 1, got {kappa}")));
        }
        if p_fail < F::zero() || p_fail >= F::one() {
            return Err(ShbError::invalid("p_fail", format!("must be in [0,1), got {p_fail}")));
        }
        if noise_scale < F::zero() {
            return Err(ShbError::invalid("noise_scale", "must be >= 0"));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut x_star: Vec<F> = (0..n).map(|_| F::standard_normal(&mut rng)).collect();
        if x_star_mode == XStarMode::UnitSphere {
            let nrm = linalg::norm(&x_star);
            for v in x_star.iter_mut() {
                *v = *v / nrm;
            }
        }

        // D diagonal, linearly spaced in [1/kappa, 1]
        let lo = F::one() / kappa;
        let d: Vec<F> = if n == 1 {
            vec![F::one()]
        } else {
            (0..n)
                .map(|j| {
                    let t = F::from_usize_lossy(j) / F::from_usize_lossy(n - 1);
                    lo + t * (F::one() - lo)
                })
                .collect()
        };

        let mut a = vec![F::zero(); m * n];
        for row in a.chunks_mut(n) {
            for (v, &dj) in row.iter_mut().zip(&d) {
                *v = F::standard_normal(&mut rng) * dj;
            }
        }

        let mut b = Vec::with_capacity(m);
        let mut corrupted = Vec::with_capacity(m);
        for i in 0..m {
            let ip = linalg::dot(&a[i * n..(i + 1) * n], &x_star);
            let clean = ip * ip;
            let hit = F::uniform_01(&mut rng) < p_fail;
            let bi = if hit {
                clean + noise_scale * F::standard_normal(&mut rng)
            } else {
                clean
            };
            b.push(bi);
            corrupted.push(hit);
        }

        Ok(PhaseRetrievalInstance {
            a,
            b,
            x_star,
            n,
            m,
            kappa,
            p_fail,
            noise_scale,
            corrupted: Some(corrupted),
            feasible_set: ConvexFeasibleSet::whole_space(n),
        })
    }

    /// Build an instance from explicit data (used by tests and file loading).
    pub fn from_parts(
        a: Vec<F>,
        b: Vec<F>,
        x_star: Vec<F>,
        kappa: F,
        p_fail: F,
        noise_scale: F,
    ) -> Result<Self> {
        let n = x_star.len();
        let m = b.len();
        if n == 0 || m == 0 || a.len() != m * n {
            return Err(ShbError::invalid("a", "matrix shape must be m x n"));
        }
        Ok(PhaseRetrievalInstance {
            a,
            b,
            x_star,
            n,
            m,
            kappa,
            p_fail,
            noise_scale,
            corrupted: None,
            feasible_set: ConvexFeasibleSet::whole_space(n),
        })
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    pub fn measurements(&self) -> &[F] {
        &self.b
    }

    pub fn x_star(&self) -> &[F] {
        &self.x_star
    }
}

impl<F: Scalar> StochasticProblem<F> for PhaseRetrievalInstance<F> {
    fn dimension(&self) -> usize {
        self.n
    }

    fn sample_count(&self) -> usize {
        self.m
    }

    fn feasible_set(&self) -> &ConvexFeasibleSet<F> {
        &self.feasible_set
    }

    fn objective(&self, x: &[F]) -> F {
        let sum: F = (0..self.m)
            .map(|i| {
                let ip = linalg::dot(self.row(i), x);
                (ip * ip - self.b[i]).abs()
            })
            .sum();
        sum / F::from_usize_lossy(self.m)
    }

    /// `2 <a,x> a * sign(<a,x>^2 - b)`; the tie `<a,x>^2 = b` selects the
    /// subdifferential element 0.
    fn sample_subgradient(&self, x: &[F], sample: usize) -> Result<Vec<F>> {
        if sample >= self.m {
            return Err(ShbError::SampleOutOfRange {
                index: sample,
                count: self.m,
            });
        }
        let row = self.row(sample);
        let ip = linalg::dot(row, x);
        let resid = ip * ip - self.b[sample];
        let sign = if resid > F::zero() {
            F::one()
        } else if resid < F::zero() {
            -F::one()
        } else {
            F::zero()
        };
        let coeff = F::from_f64_lossy(2.0) * ip * sign;
        Ok(row.iter().map(|&ai| coeff * ai).collect())
    }

    /// Per-sample bound 2 max_i ||a_i||^2; valid but looser than the
    /// composite bound L_h L_c of the h(c(x)) decomposition.
    fn weak_convexity_bound(&self) -> F {
        let two = F::from_f64_lossy(2.0);
        let max_row = (0..self.m)
            .map(|i| linalg::norm_sq(self.row(i)))
            .fold(F::zero(), F::max);
        two * max_row
    }

    fn solution(&self) -> Option<&[F]> {
        Some(&self.x_star)
    }
}
