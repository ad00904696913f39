//! Lyapunov and bound machinery: the V and W functions, theorem
//! right-hand sides, and empirical descent monitors.

use rayon::prelude::*;

use crate::error::{Result, ShbError};
use crate::geometry::ConvexFeasibleSet;
use crate::linalg;
use crate::optimizer::{ParamSchedule, ShbState};
use crate::oracle::StochasticProblem;
use crate::stationarity::{bar_iterate, prox_solve, MoreauConfig};
use crate::Scalar;

/// phi = h*(x - alpha z) - 1/2 ||x||^2 + alpha <x, z> for
/// h = 1/2 ||.||^2 + i_X, using h*(y) = <y, p> - 1/2 ||p||^2 with
/// p = proj_X(y). Nonnegative for feasible x.
pub fn phi<F: Scalar>(set: &ConvexFeasibleSet<F>, x: &[F], z: &[F], alpha: F) -> Result<F> {
    let half = F::from_f64_lossy(0.5);
    let y = linalg::add_scaled(x, -alpha, z);
    let p = set.project(&y)?;
    let h_star = linalg::dot(&y, &p) - half * linalg::norm_sq(&p);
    Ok(h_star - half * linalg::norm_sq(x) + alpha * linalg::dot(x, z))
}

/// Parameters entering the V function.
#[derive(Debug, Clone, Copy)]
pub struct LyapunovParams<F: Scalar> {
    pub lambda: F,
    pub nu: F,
    pub xi: F,
    pub alpha: F,
    pub beta: F,
}

/// V = F_lambda(x_bar) + (nu xi^2 / 4 lambda^2) ||p||^2
///   + (alpha xi^2 / 2 lambda^2) ||d||^2
///   + ((1-beta) xi^2 / 2 lambda^2 + xi / lambda) f(x_{k-1}).
pub fn lyapunov_v<F: Scalar>(
    moreau_at_bar: F,
    p_norm_sq: F,
    d_norm_sq: F,
    f_prev: F,
    params: &LyapunovParams<F>,
) -> F {
    let two = F::from_f64_lossy(2.0);
    let four = F::from_f64_lossy(4.0);
    let l2 = params.lambda * params.lambda;
    let xi2 = params.xi * params.xi;
    moreau_at_bar
        + params.nu * xi2 / (four * l2) * p_norm_sq
        + params.alpha * xi2 / (two * l2) * d_norm_sq
        + ((F::one() - params.beta) * xi2 / (two * l2) + params.xi / params.lambda) * f_prev
}

/// W = 2 f(x) + phi / (nu alpha^2) + (xi / 2) ||d||^2.
pub fn lyapunov_w<F: Scalar>(f_x: F, phi_k: F, d_norm_sq: F, nu: F, alpha: F, xi: F) -> F {
    let two = F::from_f64_lossy(2.0);
    two * f_x + phi_k / (nu * alpha * alpha) + xi / two * d_norm_sq
}

/// Exact gamma = xi^2 (rho(1-beta)/2 + nu) / lambda + rho xi / 2 + 1.
pub fn gamma_exact<F: Scalar>(rho: F, beta: F, nu: F, xi: F, lambda: F) -> F {
    let half = F::from_f64_lossy(0.5);
    xi * xi * (rho * (F::one() - beta) * half + nu) / lambda + rho * xi * half + F::one()
}

/// Exact gamma_1 = 1 + (1-beta) xi^2 / (2 lambda^2) + xi / lambda.
pub fn gamma1_exact<F: Scalar>(beta: F, xi: F, lambda: F) -> F {
    let two = F::from_f64_lossy(2.0);
    F::one() + (F::one() - beta) * xi * xi / (two * lambda * lambda) + xi / lambda
}

/// Upper bound rho^2 alpha0^2 + 3 rho alpha0 + 1, valid for nu = 1/alpha0
/// and lambda = 1/(2 rho).
pub fn gamma_bound<F: Scalar>(rho: F, alpha0: F) -> F {
    let three = F::from_f64_lossy(3.0);
    rho * rho * alpha0 * alpha0 + three * rho * alpha0 + F::one()
}

/// Upper bound 2 rho^2 alpha0^2 + 2 rho alpha0 + 1 for the same setting.
pub fn gamma1_bound<F: Scalar>(rho: F, alpha0: F) -> F {
    let two = F::from_f64_lossy(2.0);
    two * rho * rho * alpha0 * alpha0 + two * rho * alpha0 + F::one()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremId {
    /// Nonsmooth rate: rhs built from rho, L.
    T1,
    /// Smooth constrained rate: L^2 replaced by sigma^2 + G^2.
    T2,
    /// Smooth unconstrained rate without the bounded-gradient hypothesis.
    T3,
}

/// Constants feeding a theorem right-hand side; nu = 1/alpha0 is assumed.
#[derive(Debug, Clone, Copy)]
pub struct TheoremConstants<F: Scalar> {
    pub rho: F,
    pub l: F,
    pub sigma: F,
    pub g: F,
    /// Initial gap f(x_0) - f*.
    pub delta: F,
    pub alpha0: F,
    pub lambda: F,
}

#[derive(Debug, Clone)]
pub struct BoundReport<F: Scalar> {
    pub theorem: TheoremId,
    pub rhs: F,
    pub constants: TheoremConstants<F>,
    pub horizon: usize,
    /// Filled in by the harness: mean over seeds of grad_norm^2 at k*.
    pub lhs_mean: Option<F>,
    pub lhs_stderr: Option<F>,
    pub pass: Option<bool>,
}

/// Evaluate a theorem's right-hand side at horizon K.
///
/// T1 and T2 use the gamma upper bounds (valid for lambda = 1/(2 rho)); with
/// alpha0 = 1/rho they reduce to 10 (rho Delta + L^2) / sqrt(K+1) and its
/// sigma^2 + G^2 analogue. T3 requires alpha0 in (0, 1/(4 rho)] and
/// 1/lambda in (3 rho / 2, 2 rho].
pub fn theorem_bound<F: Scalar>(
    theorem: TheoremId,
    constants: &TheoremConstants<F>,
    horizon: usize,
) -> Result<BoundReport<F>> {
    let two = F::from_f64_lossy(2.0);
    let c = constants;
    let sqrt_k1 = F::from_usize_lossy(horizon + 1).sqrt();
    let rhs = match theorem {
        TheoremId::T1 | TheoremId::T2 => {
            let noise_sq = match theorem {
                TheoremId::T1 => c.l * c.l,
                _ => c.sigma * c.sigma + c.g * c.g,
            };
            let gamma = gamma_bound(c.rho, c.alpha0);
            let gamma1 = gamma1_bound(c.rho, c.alpha0);
            two * (gamma1 * c.delta + gamma * noise_sq * c.alpha0 * c.alpha0 / (two * c.lambda))
                / (c.alpha0 * sqrt_k1)
        }
        TheoremId::T3 => {
            let four = F::from_f64_lossy(4.0);
            let eight = F::from_f64_lossy(8.0);
            let three = F::from_f64_lossy(3.0);
            if c.alpha0 > F::one() / (four * c.rho) {
                return Err(ShbError::invalid(
                    "alpha0",
                    format!("must be in (0, 1/(4 rho)] for T3, got {}", c.alpha0),
                ));
            }
            let inv_lambda = F::one() / c.lambda;
            let lo = three * c.rho / two;
            let hi = two * c.rho;
            if !(inv_lambda > lo && inv_lambda <= hi) {
                return Err(ShbError::invalid(
                    "lambda",
                    "1/lambda must lie in (3 rho / 2, 2 rho] for T3",
                ));
            }
            let cc = two * inv_lambda / (two * inv_lambda - three * c.rho);
            let term1 = (F::one() + two * c.alpha0 * c.alpha0 / (c.lambda * c.lambda)) * c.delta;
            let term2 = (F::one() + eight * c.alpha0 / c.lambda) * c.sigma * c.sigma * c.alpha0
                * c.alpha0
                / (two * c.lambda);
            cc * (term1 + term2) / (c.alpha0 * sqrt_k1)
        }
    };
    Ok(BoundReport {
        theorem,
        rhs,
        constants: *c,
        horizon,
        lhs_mean: None,
        lhs_stderr: None,
        pass: None,
    })
}

/// One grid-point pair of consecutive V values plus the envelope gradient.
#[derive(Debug, Clone)]
pub struct VSnapshot<F: Scalar> {
    pub k: usize,
    pub v: F,
    pub v_next: F,
    pub grad_norm_sq: F,
}

/// One grid-point pair of consecutive W values plus the next residual.
#[derive(Debug, Clone)]
pub struct WSnapshot<F: Scalar> {
    pub k: usize,
    pub w: F,
    pub w_next: F,
    pub d_next_norm_sq: F,
}

#[derive(Debug, Clone)]
pub struct MonitorPoint<F: Scalar> {
    pub k: usize,
    pub mean_slack: F,
    pub stderr: F,
    pub violated: bool,
}

#[derive(Debug, Clone)]
pub struct MonitorReport<F: Scalar> {
    pub points: Vec<MonitorPoint<F>>,
    pub violated_fraction: F,
    /// Set when the W lemma's stepsize range alpha <= 1/(4 rho) was violated.
    pub alpha_flagged: bool,
}

impl<F: Scalar> MonitorReport<F> {
    /// Columns: k, mean_slack, stderr, violated (0/1).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,mean_slack,stderr,violated\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.k,
                p.mean_slack,
                p.stderr,
                if p.violated { 1 } else { 0 }
            ));
        }
        out
    }
}

fn v_at<F: Scalar, P: StochasticProblem<F> + ?Sized>(
    problem: &P,
    state: &ShbState<F>,
    schedule: &ParamSchedule<F>,
    moreau: &MoreauConfig<F>,
) -> Result<(F, F)> {
    let k = state.k;
    let alpha = schedule.alpha(k);
    let beta = schedule.beta(k);
    let nu = schedule.effective_nu(k);
    let xi = schedule.xi(k);
    let x_bar = bar_iterate(&state.x, &state.x_prev, beta)?;
    let est = prox_solve(problem, &x_bar, moreau)?;
    let p_sq = linalg::norm_sq(&state.p_k(beta));
    let d_sq = linalg::norm_sq(&state.d_k(alpha));
    let f_prev = problem.objective(&state.x_prev);
    let params = LyapunovParams {
        lambda: moreau.lambda,
        nu,
        xi,
        alpha,
        beta,
    };
    Ok((
        lyapunov_v(est.envelope_value, p_sq, d_sq, f_prev, &params),
        est.grad_norm * est.grad_norm,
    ))
}

/// Walk one seeded run, computing (V_k, V_{k+1}, grad_norm^2 at x_bar_k)
/// at every `stride`-th iteration. Intended for constant schedules, where
/// the per-step descent relation applies verbatim.
pub fn collect_v_series<F: Scalar, P: StochasticProblem<F> + Sync + ?Sized>(
    problem: &P,
    x0: &[F],
    schedule: &ParamSchedule<F>,
    horizon: usize,
    seeds: &[u64],
    stride: usize,
    moreau: &MoreauConfig<F>,
) -> Result<Vec<Vec<VSnapshot<F>>>> {
    let stride = stride.max(1);
    seeds
        .par_iter()
        .map(|&seed| {
            let mut state = ShbState::init(problem, x0, seed)?;
            let mut snaps = Vec::new();
            while state.k < horizon {
                if state.k % stride == 0 {
                    let k = state.k;
                    let (v, grad_sq) = v_at(problem, &state, schedule, moreau)?;
                    state.step(problem, schedule)?;
                    let (v_next, _) = v_at(problem, &state, schedule, moreau)?;
                    snaps.push(VSnapshot {
                        k,
                        v,
                        v_next,
                        grad_norm_sq: grad_sq,
                    });
                } else {
                    state.step(problem, schedule)?;
                }
            }
            Ok(snaps)
        })
        .collect()
}

fn w_at<F: Scalar, P: StochasticProblem<F> + ?Sized>(
    problem: &P,
    state: &ShbState<F>,
    schedule: &ParamSchedule<F>,
) -> Result<F> {
    let k = state.k;
    let alpha = schedule.alpha(k);
    let nu = schedule.effective_nu(k);
    let xi = schedule.xi(k);
    let phi_k = phi(problem.feasible_set(), &state.x, &state.z, alpha)?;
    // z_0 = g_0 amounts to a virtual predecessor x_{-1} = x_0 + alpha g_0,
    // so d_0 = z_0 rather than 0; z_k = beta g_k + (1-beta) d_k thereafter.
    let d_sq = if k == 0 {
        linalg::norm_sq(&state.z)
    } else {
        linalg::norm_sq(&state.d_k(alpha))
    };
    Ok(lyapunov_w(
        problem.objective(&state.x),
        phi_k,
        d_sq,
        nu,
        alpha,
        xi,
    ))
}

/// Walk one seeded run, computing (W_k, W_{k+1}, ||d_{k+1}||^2) at every
/// `stride`-th iteration.
pub fn collect_w_series<F: Scalar, P: StochasticProblem<F> + Sync + ?Sized>(
    problem: &P,
    x0: &[F],
    schedule: &ParamSchedule<F>,
    horizon: usize,
    seeds: &[u64],
    stride: usize,
) -> Result<Vec<Vec<WSnapshot<F>>>> {
    let stride = stride.max(1);
    seeds
        .par_iter()
        .map(|&seed| {
            let mut state = ShbState::init(problem, x0, seed)?;
            let mut snaps = Vec::new();
            while state.k < horizon {
                if state.k % stride == 0 {
                    let k = state.k;
                    let w = w_at(problem, &state, schedule)?;
                    let alpha = schedule.alpha(k);
                    state.step(problem, schedule)?;
                    let w_next = w_at(problem, &state, schedule)?;
                    let d_next_sq = linalg::norm_sq(&state.d_k(alpha));
                    snaps.push(WSnapshot {
                        k,
                        w,
                        w_next,
                        d_next_norm_sq: d_next_sq,
                    });
                } else {
                    state.step(problem, schedule)?;
                }
            }
            Ok(snaps)
        })
        .collect()
}

const MIN_MONITOR_SEEDS: usize = 30;

fn summarize<F: Scalar>(samples: &[F]) -> (F, F) {
    let n = F::from_usize_lossy(samples.len());
    let mean = samples.iter().copied().sum::<F>() / n;
    let var = samples
        .iter()
        .map(|&s| (s - mean) * (s - mean))
        .sum::<F>()
        / (n - F::one());
    (mean, (var / n).sqrt())
}

/// Cross-seed check of the V descent relation
/// `E[V_{k+1}] <= V_k - (alpha/2) ||grad F_lambda(x_bar_k)||^2
///  + gamma alpha^2 L^2 / (2 lambda)`.
///
/// Per grid point the slack is
/// `mean(V_{k+1} - V_k + (alpha/2) grad^2) - gamma alpha^2 L^2 / (2 lambda)`;
/// a point is violated when the slack exceeds two standard errors.
pub fn v_descent_monitor<F: Scalar>(
    series: &[Vec<VSnapshot<F>>],
    alpha: F,
    gamma: F,
    l_hat: F,
    lambda: F,
) -> Result<MonitorReport<F>> {
    if series.len() < MIN_MONITOR_SEEDS {
        return Err(ShbError::InsufficientSeeds {
            need: MIN_MONITOR_SEEDS,
            got: series.len(),
        });
    }
    let half = F::from_f64_lossy(0.5);
    let two = F::from_f64_lossy(2.0);
    let noise = gamma * alpha * alpha * l_hat * l_hat / (two * lambda);
    let grid_len = series.iter().map(|s| s.len()).min().unwrap_or(0);
    let mut points = Vec::with_capacity(grid_len);
    let mut violations = 0usize;
    for i in 0..grid_len {
        let samples: Vec<F> = series
            .iter()
            .map(|s| s[i].v_next - s[i].v + half * alpha * s[i].grad_norm_sq)
            .collect();
        let (mean, stderr) = summarize(&samples);
        let mean_slack = mean - noise;
        let violated = mean_slack > two * stderr;
        if violated {
            violations += 1;
        }
        points.push(MonitorPoint {
            k: series[0][i].k,
            mean_slack,
            stderr,
            violated,
        });
    }
    Ok(MonitorReport {
        violated_fraction: F::from_usize_lossy(violations)
            / F::from_usize_lossy(grid_len.max(1)),
        points,
        alpha_flagged: false,
    })
}

/// Cross-seed check of the W descent relation
/// `E[W_{k+1}] <= W_k - alpha ||d_{k+1}||^2 + 4 nu alpha^2 sigma^2`.
///
/// `rho_hat` is only used to flag stepsizes outside the lemma's
/// alpha <= 1/(4 rho) range.
pub fn w_descent_monitor<F: Scalar>(
    series: &[Vec<WSnapshot<F>>],
    alpha: F,
    nu: F,
    sigma_hat: F,
    rho_hat: F,
) -> Result<MonitorReport<F>> {
    if series.len() < MIN_MONITOR_SEEDS {
        return Err(ShbError::InsufficientSeeds {
            need: MIN_MONITOR_SEEDS,
            got: series.len(),
        });
    }
    let two = F::from_f64_lossy(2.0);
    let four = F::from_f64_lossy(4.0);
    let noise = four * nu * alpha * alpha * sigma_hat * sigma_hat;
    let grid_len = series.iter().map(|s| s.len()).min().unwrap_or(0);
    let mut points = Vec::with_capacity(grid_len);
    let mut violations = 0usize;
    for i in 0..grid_len {
        let samples: Vec<F> = series
            .iter()
            .map(|s| s[i].w_next - s[i].w + alpha * s[i].d_next_norm_sq)
            .collect();
        let (mean, stderr) = summarize(&samples);
        let mean_slack = mean - noise;
        let violated = mean_slack > two * stderr;
        if violated {
            violations += 1;
        }
        points.push(MonitorPoint {
            k: series[0][i].k,
            mean_slack,
            stderr,
            violated,
        });
    }
    Ok(MonitorReport {
        violated_fraction: F::from_usize_lossy(violations)
            / F::from_usize_lossy(grid_len.max(1)),
        points,
        alpha_flagged: alpha > F::one() / (four * rho_hat),
    })
}
