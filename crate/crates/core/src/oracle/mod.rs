//! Stochastic first-order oracles: finite-sum problems exposing per-sample
//! subgradients, full objectives, and constant estimation.

mod io;
mod phase_retrieval;
mod smooth;

pub use io::{load_phase_retrieval, save_phase_retrieval};
pub use phase_retrieval::{PhaseRetrievalInstance, XStarMode};
pub use smooth::SmoothConstrainedInstance;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, ShbError};
use crate::geometry::ConvexFeasibleSet;
use crate::linalg;
use crate::Scalar;

/// A sampled-oracle view of a finite-sum stochastic problem
/// `f(x) = (1/m) sum_i f(x; i)` over a feasible set.
pub trait StochasticProblem<F: Scalar>: Send + Sync {
    fn dimension(&self) -> usize;

    /// Number of samples m in the finite sum.
    fn sample_count(&self) -> usize;

    fn feasible_set(&self) -> &ConvexFeasibleSet<F>;

    /// Exact finite-sum objective.
    fn objective(&self, x: &[F]) -> F;

    /// An element of the per-sample subdifferential `∂f(x; sample)`.
    fn sample_subgradient(&self, x: &[F], sample: usize) -> Result<Vec<F>>;

    /// Exact average of the per-sample subgradients; an element of `∂f(x)`
    /// for the uniform finite-sum distribution.
    fn full_subgradient(&self, x: &[F]) -> Vec<F> {
        let n = self.dimension();
        let m = self.sample_count();
        let mut acc = vec![F::zero(); n];
        for i in 0..m {
            let g = self
                .sample_subgradient(x, i)
                .expect("in-range sample index");
            for (a, gi) in acc.iter_mut().zip(&g) {
                *a = *a + *gi;
            }
        }
        let inv = F::one() / F::from_usize_lossy(m);
        for a in acc.iter_mut() {
            *a = *a * inv;
        }
        acc
    }

    /// Analytic per-sample weak-convexity bound rho.
    fn weak_convexity_bound(&self) -> F;

    /// The planted solution, when one exists.
    fn solution(&self) -> Option<&[F]> {
        None
    }
}

/// Provenance of an estimated constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Empirical,
}

/// Estimates of the problem constants rho, L, sigma, G.
///
/// `l_hat` bounds the second moment of the sampled subgradient over the
/// probed region, `sigma_hat` its variance around the full subgradient, and
/// `g_hat` the full subgradient norm.
#[derive(Debug, Clone)]
pub struct ProblemConstants<F: Scalar> {
    pub rho_hat: F,
    pub rho_provenance: Provenance,
    pub l_hat: F,
    pub l_provenance: Provenance,
    pub sigma_hat: F,
    pub sigma_provenance: Provenance,
    pub g_hat: F,
    pub g_provenance: Provenance,
}

/// Draw a point uniformly from a bounded set.
pub(crate) fn sample_in_region<F: Scalar, R: Rng + ?Sized>(
    region: &ConvexFeasibleSet<F>,
    rng: &mut R,
) -> Vec<F> {
    match region {
        ConvexFeasibleSet::WholeSpace { dim } => {
            // only reached when the caller accepts an unbounded region
            (0..*dim).map(|_| F::standard_normal(rng)).collect()
        }
        ConvexFeasibleSet::Ball { center, radius } => {
            let n = center.len();
            let dir: Vec<F> = (0..n).map(|_| F::standard_normal(rng)).collect();
            let nrm = linalg::norm(&dir);
            let u = F::uniform_01(rng);
            let exp = F::one() / F::from_usize_lossy(n);
            let r = *radius * u.powf(exp);
            center
                .iter()
                .zip(&dir)
                .map(|(&c, &d)| {
                    if nrm > F::zero() {
                        c + r * d / nrm
                    } else {
                        c
                    }
                })
                .collect()
        }
        ConvexFeasibleSet::Box { lower, upper } => lower
            .iter()
            .zip(upper)
            .map(|(&l, &u)| l + F::uniform_01(rng) * (u - l))
            .collect(),
    }
}

/// Estimate the constants of a problem over a bounded probe region.
///
/// rho comes from the problem's analytic bound; L, sigma, and G are
/// empirical maxima over `probes` points drawn uniformly from `region`.
pub fn estimate_constants<F: Scalar, P: StochasticProblem<F> + ?Sized>(
    problem: &P,
    region: &ConvexFeasibleSet<F>,
    probes: usize,
    seed: u64,
) -> Result<ProblemConstants<F>> {
    if probes == 0 {
        return Err(ShbError::invalid("probes", "must be >= 1"));
    }
    if region.dim() != problem.dimension() {
        return Err(ShbError::DimensionMismatch {
            expected: problem.dimension(),
            got: region.dim(),
        });
    }
    if !region.is_bounded() {
        return Err(ShbError::NotEstimable(
            "empirical constants require a bounded probe region".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = problem.sample_count();
    let inv_m = F::one() / F::from_usize_lossy(m);

    let mut l_sq_max = F::zero();
    let mut sigma_sq_max = F::zero();
    let mut g_max = F::zero();
    for _ in 0..probes {
        let x = sample_in_region(region, &mut rng);
        let mut second_moment = F::zero();
        let mut mean = vec![F::zero(); problem.dimension()];
        let mut grads = Vec::with_capacity(m);
        for i in 0..m {
            let g = problem.sample_subgradient(&x, i)?;
            second_moment = second_moment + linalg::norm_sq(&g) * inv_m;
            for (a, gi) in mean.iter_mut().zip(&g) {
                *a = *a + *gi * inv_m;
            }
            grads.push(g);
        }
        let variance: F = grads
            .iter()
            .map(|g| linalg::dist_sq(g, &mean) * inv_m)
            .sum();
        l_sq_max = l_sq_max.max(second_moment);
        sigma_sq_max = sigma_sq_max.max(variance);
        g_max = g_max.max(linalg::norm(&mean));
    }

    Ok(ProblemConstants {
        rho_hat: problem.weak_convexity_bound(),
        rho_provenance: Provenance::Analytic,
        l_hat: l_sq_max.sqrt(),
        l_provenance: Provenance::Empirical,
        sigma_hat: sigma_sq_max.sqrt(),
        sigma_provenance: Provenance::Empirical,
        g_hat: g_max,
        g_provenance: Provenance::Empirical,
    })
}
