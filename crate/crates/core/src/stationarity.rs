//! Moreau-envelope stationarity: the prox subproblem at the corrected
//! iterate, the envelope gradient norm, and the transfer bounds.

use crate::error::{Result, ShbError};
use crate::linalg;
use crate::oracle::StochasticProblem;
use crate::Scalar;

/// Parameters of the envelope evaluation. `1/lambda >= 2 rho_hat` is
/// enforced at construction so the prox subproblem is strongly convex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoreauConfig<F: Scalar> {
    pub lambda: F,
    pub rho_hat: F,
    pub inner_iters: usize,
    pub inner_tol: F,
}

pub const DEFAULT_INNER_ITERS: usize = 2000;
pub const DEFAULT_INNER_TOL: f64 = 1e-6;

impl<F: Scalar> MoreauConfig<F> {
    pub fn new(lambda: F, rho_hat: F, inner_iters: usize, inner_tol: F) -> Result<Self> {
        if !(lambda > F::zero()) {
            return Err(ShbError::invalid("lambda", format!("must be > 0, got {lambda}")));
        }
        if rho_hat < F::zero() {
            return Err(ShbError::invalid("rho_hat", "must be >= 0"));
        }
        let two = F::from_f64_lossy(2.0);
        if F::one() / lambda < two * rho_hat {
            return Err(ShbError::invalid(
                "lambda",
                format!("1/lambda must be >= 2 rho_hat ({rho_hat})"),
            ));
        }
        if inner_iters == 0 {
            return Err(ShbError::invalid("inner_iters", "must be >= 1"));
        }
        Ok(MoreauConfig {
            lambda,
            rho_hat,
            inner_iters,
            inner_tol,
        })
    }

    /// Default lambda = 1/(2 rho_hat).
    pub fn for_rho(rho_hat: F) -> Result<Self> {
        let lambda = F::one() / (F::from_f64_lossy(2.0) * rho_hat);
        Self::new(
            lambda,
            rho_hat,
            DEFAULT_INNER_ITERS,
            F::from_f64_lossy(DEFAULT_INNER_TOL),
        )
    }

    pub fn with_inner_iters(mut self, inner_iters: usize) -> Self {
        self.inner_iters = inner_iters.max(1);
        self
    }
}

/// Result of one prox subproblem solve.
#[derive(Debug, Clone)]
pub struct MoreauEstimate<F: Scalar> {
    /// The prox point x_hat (feasible).
    pub x_hat: Vec<F>,
    /// ||x_bar - x_hat|| / lambda, the envelope gradient norm.
    pub grad_norm: F,
    /// Optimality bound 2 M^2 / (mu (T+1)) from the strongly convex
    /// subgradient certificate, with M the observed max subgradient norm.
    pub subproblem_gap_bound: F,
    /// Query point.
    pub x_bar: Vec<F>,
    /// F(x_hat) + ||x_hat - x_bar||^2 / (2 lambda), an upper estimate of the
    /// envelope value at x_bar.
    pub envelope_value: F,
}

/// Corrected iterate x_bar = x + (1-beta)/beta * (x - x_prev).
pub fn bar_iterate<F: Scalar>(x: &[F], x_prev: &[F], beta: F) -> Result<Vec<F>> {
    if !(beta > F::zero() && beta <= F::one()) {
        return Err(ShbError::invalid("beta", format!("must be in (0,1], got {beta}")));
    }
    if x.len() != x_prev.len() {
        return Err(ShbError::DimensionMismatch {
            expected: x.len(),
            got: x_prev.len(),
        });
    }
    let c = (F::one() - beta) / beta;
    Ok(x.iter()
        .zip(x_prev)
        .map(|(&a, &b)| a + c * (a - b))
        .collect())
}

/// Approximately solve the prox subproblem
/// `min_y f(y) + i_X(y) + ||y - x_bar||^2 / (2 lambda)`
/// with the deterministic projected subgradient method (full finite-sum
/// subgradients), stepsize 2/(mu (t+2)) for mu = 1/lambda - rho_hat, and
/// weighted averaging of the iterates.
pub fn prox_solve<F: Scalar, P: StochasticProblem<F> + ?Sized>(
    problem: &P,
    x_bar: &[F],
    config: &MoreauConfig<F>,
) -> Result<MoreauEstimate<F>> {
    let set = problem.feasible_set();
    if x_bar.len() != set.dim() {
        return Err(ShbError::DimensionMismatch {
            expected: set.dim(),
            got: x_bar.len(),
        });
    }
    let lambda = config.lambda;
    let mu = F::one() / lambda - config.rho_hat;
    let two = F::from_f64_lossy(2.0);

    let mut y = set.project(x_bar)?;
    let mut avg = vec![F::zero(); y.len()];
    let mut weight_sum = F::zero();
    let mut max_subgrad = F::zero();
    let mut last_grad_norm = F::infinity();
    let mut iters_used = 0usize;

    for t in 0..config.inner_iters {
        let mut g = problem.full_subgradient(&y);
        for ((gi, &yi), &bi) in g.iter_mut().zip(&y).zip(x_bar) {
            *gi = *gi + (yi - bi) / lambda;
        }
        if !linalg::all_finite(&g) {
            return Err(ShbError::Diverged { at: t });
        }
        max_subgrad = max_subgrad.max(linalg::norm(&g));

        let step = two / (mu * F::from_usize_lossy(t + 2));
        let y_next = set.project(&linalg::add_scaled(&y, -step, &g))?;

        // weight t+1 on the post-step iterate
        let w = F::from_usize_lossy(t + 1);
        for (a, &v) in avg.iter_mut().zip(&y_next) {
            *a = *a + w * v;
        }
        weight_sum = weight_sum + w;
        y = y_next;
        iters_used = t + 1;

        // cheap stop: watch the implied grad_norm movement every 50 iters
        if (t + 1) % 50 == 0 {
            let x_hat: Vec<F> = avg.iter().map(|&a| a / weight_sum).collect();
            let gn = linalg::dist(x_bar, &x_hat) / lambda;
            let denom = F::one().max(gn);
            let converged = ((gn - last_grad_norm).abs() / denom) < config.inner_tol;
            last_grad_norm = gn;
            if converged {
                break;
            }
        }
    }

    let mut x_hat: Vec<F> = avg.iter().map(|&a| a / weight_sum).collect();
    // averaging of feasible iterates stays feasible; re-project to clean up
    // floating residue
    x_hat = set.project(&x_hat)?;
    let grad_norm = linalg::dist(x_bar, &x_hat) / lambda;
    let gap_bound = two * max_subgrad * max_subgrad / (mu * F::from_usize_lossy(iters_used + 1));
    let envelope_value =
        problem.objective(&x_hat) + linalg::dist_sq(&x_hat, x_bar) / (two * lambda);

    Ok(MoreauEstimate {
        x_hat,
        grad_norm,
        subproblem_gap_bound: gap_bound,
        x_bar: x_bar.to_vec(),
        envelope_value,
    })
}

/// Right-hand side of the stationarity transfer for the iterate x_k:
/// `lambda^{-2} ||x_k - x_hat_k||^2 <= 2 ||grad F_lambda(x_bar)||^2
///  + 2 lambda^{-2} xi^2 ||d_k||^2`.
pub fn stationarity_transfer<F: Scalar>(
    estimate: &MoreauEstimate<F>,
    lambda: F,
    xi: F,
    d_norm_sq: F,
) -> F {
    let two = F::from_f64_lossy(2.0);
    two * estimate.grad_norm * estimate.grad_norm
        + two * xi * xi * d_norm_sq / (lambda * lambda)
}

/// Bound on the gradient mapping for rho-smooth problems:
/// `||G_{1/rho}(x)|| <= (3/2)(1 + 1/sqrt(2)) ||grad F_{1/(2rho)}(x)||`.
/// The input must be the envelope gradient norm at lambda = 1/(2 rho).
pub fn gradient_mapping_bound<F: Scalar>(grad_norm_at_half_rho: F) -> F {
    let c = F::from_f64_lossy(1.5 * (1.0 + 1.0 / std::f64::consts::SQRT_2));
    c * grad_norm_at_half_rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexFeasibleSet;
    use crate::oracle::SmoothConstrainedInstance;

    /// 1-D f(x) = |x| as a finite-sum problem with one sample.
    pub(crate) struct AbsValue {
        set: ConvexFeasibleSet<f64>,
    }

    impl AbsValue {
        pub(crate) fn new() -> Self {
            AbsValue {
                set: ConvexFeasibleSet::whole_space(1),
            }
        }
    }

    impl StochasticProblem<f64> for AbsValue {
        fn dimension(&self) -> usize {
            1
        }
        fn sample_count(&self) -> usize {
            1
        }
        fn feasible_set(&self) -> &ConvexFeasibleSet<f64> {
            &self.set
        }
        fn objective(&self, x: &[f64]) -> f64 {
            x[0].abs()
        }
        fn sample_subgradient(&self, x: &[f64], _s: usize) -> crate::error::Result<Vec<f64>> {
            Ok(vec![x[0].signum() * if x[0] == 0.0 { 0.0 } else { 1.0 }])
        }
        fn weak_convexity_bound(&self) -> f64 {
            0.0
        }
    }

    fn half_norm_sq() -> SmoothConstrainedInstance<f64> {
        SmoothConstrainedInstance::identity_quadratic(ConvexFeasibleSet::whole_space(2)).unwrap()
    }

    #[test]
    fn bar_iterate_cases() {
        assert_eq!(
            bar_iterate(&[1.0, 2.0], &[0.5, 0.5], 1.0).unwrap(),
            vec![1.0, 2.0]
        );
        assert_eq!(
            bar_iterate(&[1.0, 0.0], &[0.0, 0.0], 0.5).unwrap(),
            vec![2.0, 0.0]
        );
        assert_eq!(
            bar_iterate(&[3.0], &[3.0], 0.1).unwrap(),
            vec![3.0]
        );
        assert!(bar_iterate(&[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn prox_matches_closed_form_quadratic() {
        // f = 1/2 ||x||^2 has prox(x_bar) = x_bar / (1 + lambda)
        let p = half_norm_sq();
        let cfg = MoreauConfig::new(1.0, 0.0, 20000, 0.0).unwrap();
        let est = prox_solve(&p, &[2.0, 0.0], &cfg).unwrap();
        assert!((est.x_hat[0] - 1.0).abs() < 1e-4, "{:?}", est.x_hat);
        assert!(est.x_hat[1].abs() < 1e-6);
        assert!((est.grad_norm - 1.0).abs() < 1e-4);
    }

    #[test]
    fn prox_matches_soft_threshold() {
        // f = |x|, lambda = 1, x_bar = 2 -> x_hat = 1
        let p = AbsValue::new();
        let cfg = MoreauConfig::new(1.0, 0.0, 50000, 0.0).unwrap();
        let est = prox_solve(&p, &[2.0], &cfg).unwrap();
        assert!((est.x_hat[0] - 1.0).abs() < 1e-4, "{}", est.x_hat[0]);
        assert!((est.grad_norm - 1.0).abs() < 1e-4);
    }

    #[test]
    fn prox_at_stationary_point() {
        let p = half_norm_sq();
        let cfg = MoreauConfig::new(1.0, 0.0, 2000, 0.0).unwrap();
        let est = prox_solve(&p, &[0.0, 0.0], &cfg).unwrap();
        assert!(est.grad_norm < 1e-10);
        assert!(linalg::norm(&est.x_hat) < 1e-10);
    }

    #[test]
    fn envelope_gradient_identity() {
        // for f = 1/2||x||^2: grad f_lambda(x_bar) = x_bar / (1 + lambda)
        let p = half_norm_sq();
        let cfg = MoreauConfig::new(0.5, 0.0, 20000, 0.0).unwrap();
        let x_bar = [1.3, -0.7];
        let est = prox_solve(&p, &x_bar, &cfg).unwrap();
        let expected = linalg::norm(&x_bar) / (1.0 + cfg.lambda);
        assert!((est.grad_norm - expected).abs() < 1e-4);
    }

    #[test]
    fn near_stationarity_of_x_hat_for_abs() {
        // for f = |x|: grad f_lambda(x_bar) = sign(x_bar) min(|x_bar|/lambda, 1)
        let p = AbsValue::new();
        let cfg = MoreauConfig::new(1.0, 0.0, 50000, 0.0).unwrap();
        for &xb in &[2.0_f64, -3.0, 0.4] {
            let est = prox_solve(&p, &[xb], &cfg).unwrap();
            let expected = (xb.abs() / cfg.lambda).min(1.0);
            assert!(
                (est.grad_norm - expected).abs() < 1e-3,
                "xb={xb}: {} vs {expected}",
                est.grad_norm
            );
        }
    }

    #[test]
    fn envelope_smoothness_quadratic() {
        // |f_l(y) - f_l(x) - <grad f_l(x), y-x>| <= ||x-y||^2/(2 lambda)
        // For f = 1/2||x||^2, f_l(x) = ||x||^2/(2(1+l)) in closed form.
        let lambda = 0.8f64;
        let fl = |x: &[f64]| linalg::norm_sq(x) / (2.0 * (1.0 + lambda));
        let grad = |x: &[f64]| linalg::scale(x, 1.0 / (1.0 + lambda));
        let xs = [
            (vec![1.0, 2.0], vec![0.3, -0.4]),
            (vec![-2.0, 0.5], vec![1.2, 1.2]),
        ];
        for (x, y) in xs {
            let lhs = (fl(&y)
                - fl(&x)
                - linalg::dot(&grad(&x), &linalg::sub(&y, &x)))
            .abs();
            let rhs = linalg::dist_sq(&x, &y) / (2.0 * lambda);
            assert!(lhs <= rhs + 1e-8);
        }
    }

    #[test]
    fn certificate_shrinks_with_more_iterations() {
        let p = AbsValue::new();
        let mut prev = f64::INFINITY;
        for &iters in &[500usize, 1000, 2000, 4000] {
            let cfg = MoreauConfig::new(1.0, 0.0, iters, 0.0).unwrap();
            let est = prox_solve(&p, &[2.0], &cfg).unwrap();
            assert!(est.subproblem_gap_bound <= prev);
            prev = est.subproblem_gap_bound;
        }
        // doubling T should roughly halve the bound (within 20%)
        let b1 = prox_solve(&p, &[2.0], &MoreauConfig::new(1.0, 0.0, 2000, 0.0).unwrap())
            .unwrap()
            .subproblem_gap_bound;
        let b2 = prox_solve(&p, &[2.0], &MoreauConfig::new(1.0, 0.0, 4000, 0.0).unwrap())
            .unwrap()
            .subproblem_gap_bound;
        let ratio = b1 / b2;
        assert!((ratio - 2.0).abs() / 2.0 < 0.2, "ratio {ratio}");
    }

    #[test]
    fn transfer_bound_arithmetic() {
        let est = MoreauEstimate {
            x_hat: vec![0.0],
            grad_norm: 1.0,
            subproblem_gap_bound: 0.0,
            x_bar: vec![0.0],
            envelope_value: 0.0,
        };
        // grad_norm=1, lambda=0.5, xi=0.1, ||d||=2 -> 2 + 2*4*0.01*4 = 2.32
        let v: f64 = stationarity_transfer(&est, 0.5, 0.1, 4.0);
        assert!((v - 2.32).abs() < 1e-12);
        // beta=1 (xi=0): bound = 2 grad^2
        assert_eq!(stationarity_transfer(&est, 0.5, 0.0, 4.0), 2.0);
        // d = 0: same
        assert_eq!(stationarity_transfer(&est, 0.5, 0.3, 0.0), 2.0);
    }

    #[test]
    fn gradient_mapping_constant() {
        assert_eq!(gradient_mapping_bound(0.0_f64), 0.0);
        let c: f64 = gradient_mapping_bound(1.0);
        assert!((c - 2.5606601717798214).abs() < 1e-12);
        assert!((gradient_mapping_bound(2.0) - 2.0 * c).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(MoreauConfig::new(1.0, 1.0, 100, 0.0).is_err()); // 1/lambda < 2 rho
        assert!(MoreauConfig::new(0.25, 2.0, 100, 0.0).is_ok()); // 1/lambda = 4 = 2 rho
        assert!(MoreauConfig::for_rho(2.0f64).is_ok());
    }
}
