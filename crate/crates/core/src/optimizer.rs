//! The projected stochastic heavy-ball iteration
//!
//! ```text
//! x_{k+1} = proj_X(x_k - alpha_k z_k)
//! z_{k+1} = beta_k g_{k+1} + (1 - beta_k) (x_k - x_{k+1}) / alpha_k
//! ```
//!
//! together with its beta = 1 SGD specialization and the classical
//! heavy-ball two-point form used for cross-checking.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, ShbError};
use crate::linalg;
use crate::oracle::StochasticProblem;
use crate::Scalar;

const DIVERGENCE_NORM: f64 = 1e12;
const FEASIBILITY_TOL: f64 = 1e-9;

/// Stepsize rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepsizeMode {
    /// Constant alpha = alpha0 / sqrt(K+1); requires the horizon K up front.
    ConstantHorizon { horizon: usize },
    /// alpha_k = alpha0 / sqrt(k+1).
    Decaying,
}

/// Momentum rule; beta_k is clamped into (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentumRule<F> {
    /// beta_k = min(nu * alpha_k, 1).
    Nu(F),
    /// Constant beta in (0, 1].
    FixedBeta(F),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSchedule<F: Scalar> {
    pub alpha0: F,
    pub stepsize: StepsizeMode,
    pub momentum: MomentumRule<F>,
}

impl<F: Scalar> ParamSchedule<F> {
    pub fn new(alpha0: F, stepsize: StepsizeMode, momentum: MomentumRule<F>) -> Result<Self> {
        if !(alpha0 > F::zero()) {
            return Err(ShbError::invalid("alpha0", format!("must be > 0, got {alpha0}")));
        }
        match momentum {
            MomentumRule::Nu(nu) if !(nu > F::zero()) => {
                return Err(ShbError::invalid("nu", format!("must be > 0, got {nu}")));
            }
            MomentumRule::FixedBeta(beta) if !(beta > F::zero() && beta <= F::one()) => {
                return Err(ShbError::invalid("beta", format!("must be in (0,1], got {beta}")));
            }
            _ => {}
        }
        Ok(ParamSchedule {
            alpha0,
            stepsize,
            momentum,
        })
    }

    pub fn alpha(&self, k: usize) -> F {
        match self.stepsize {
            StepsizeMode::ConstantHorizon { horizon } => {
                self.alpha0 / F::from_usize_lossy(horizon + 1).sqrt()
            }
            StepsizeMode::Decaying => self.alpha0 / F::from_usize_lossy(k + 1).sqrt(),
        }
    }

    pub fn beta(&self, k: usize) -> F {
        match self.momentum {
            MomentumRule::Nu(nu) => (nu * self.alpha(k)).min(F::one()),
            MomentumRule::FixedBeta(beta) => beta,
        }
    }

    /// Effective nu at iteration k (beta_k / alpha_k).
    pub fn effective_nu(&self, k: usize) -> F {
        self.beta(k) / self.alpha(k)
    }

    /// xi = (1 - beta) / nu at iteration k.
    pub fn xi(&self, k: usize) -> F {
        (F::one() - self.beta(k)) / self.effective_nu(k)
    }
}

/// Coefficients of the two-point heavy-ball form
/// `x_{k+1} = x_k - eta_k g_k + lambda_k (x_k - x_{k-1})`,
/// namely `eta_k = alpha_k beta_{k-1}` and
/// `lambda_k = (1 - beta_{k-1}) alpha_k / alpha_{k-1}`.
pub fn heavy_ball_params<F: Scalar>(schedule: &ParamSchedule<F>, k: usize) -> Result<(F, F)> {
    if k == 0 {
        return Err(ShbError::invalid(
            "k",
            "heavy-ball coefficients need a predecessor step (k >= 1)",
        ));
    }
    let beta_prev = schedule.beta(k - 1);
    let eta = schedule.alpha(k) * beta_prev;
    let lambda = (F::one() - beta_prev) * schedule.alpha(k) / schedule.alpha(k - 1);
    Ok((eta, lambda))
}

/// Optimizer state: the iterate pair, the search direction, and the run's
/// own RNG stream.
#[derive(Debug, Clone)]
pub struct ShbState<F: Scalar> {
    pub x: Vec<F>,
    pub x_prev: Vec<F>,
    pub z: Vec<F>,
    pub k: usize,
    pub projected_init: bool,
    rng: ChaCha8Rng,
}

impl<F: Scalar> ShbState<F> {
    /// Start at `x0` (projected if infeasible), draw the first sample, and
    /// set `z0` to its subgradient. The convention `x_{-1} = x_0` holds.
    pub fn init<P: StochasticProblem<F> + ?Sized>(
        problem: &P,
        x0: &[F],
        seed: u64,
    ) -> Result<Self> {
        let set = problem.feasible_set();
        let tol = F::from_f64_lossy(FEASIBILITY_TOL);
        let feasible = set.membership(x0, tol)?;
        let x = if feasible { x0.to_vec() } else { set.project(x0)? };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s0 = rng.gen_range(0..problem.sample_count());
        let z = problem.sample_subgradient(&x, s0)?;
        Ok(ShbState {
            x_prev: x.clone(),
            x,
            z,
            k: 0,
            projected_init: !feasible,
            rng,
        })
    }

    /// Momentum correction p_k = (1-beta)/beta * (x_k - x_{k-1}).
    pub fn p_k(&self, beta: F) -> Vec<F> {
        let c = (F::one() - beta) / beta;
        self.x
            .iter()
            .zip(&self.x_prev)
            .map(|(&a, &b)| c * (a - b))
            .collect()
    }

    /// Scaled backward step d_k = (x_{k-1} - x_k) / alpha.
    pub fn d_k(&self, alpha: F) -> Vec<F> {
        self.x_prev
            .iter()
            .zip(&self.x)
            .map(|(&a, &b)| (a - b) / alpha)
            .collect()
    }

    /// One SHB iteration. Draws the next sample from the state's stream.
    pub fn step<P: StochasticProblem<F> + ?Sized>(
        &mut self,
        problem: &P,
        schedule: &ParamSchedule<F>,
    ) -> Result<()> {
        let alpha = schedule.alpha(self.k);
        let beta = schedule.beta(self.k);

        let y = linalg::add_scaled(&self.x, -alpha, &self.z);
        let x_next = problem.feasible_set().project(&y)?;
        let guard = F::from_f64_lossy(DIVERGENCE_NORM);
        if !linalg::all_finite(&x_next) || linalg::norm(&x_next) > guard {
            return Err(ShbError::Diverged { at: self.k + 1 });
        }

        let s = self.rng.gen_range(0..problem.sample_count());
        let g = problem.sample_subgradient(&x_next, s)?;

        let z_next = if beta == F::one() {
            g
        } else {
            let inv_alpha = F::one() / alpha;
            self.x
                .iter()
                .zip(&x_next)
                .zip(&g)
                .map(|((&xk, &xn), &gi)| beta * gi + (F::one() - beta) * (xk - xn) * inv_alpha)
                .collect()
        };
        if !linalg::all_finite(&z_next) {
            return Err(ShbError::Diverged { at: self.k + 1 });
        }

        self.x_prev = std::mem::replace(&mut self.x, x_next);
        self.z = z_next;
        self.k += 1;
        Ok(())
    }

    /// Draw k* uniformly from {0,...,K} from the run's own stream.
    fn draw_k_star(&mut self, horizon: usize) -> usize {
        self.rng.gen_range(0..=horizon)
    }
}

/// One recorded trajectory row.
#[derive(Debug, Clone)]
pub struct SnapshotRow<F: Scalar> {
    pub k: usize,
    pub objective: F,
    /// f(x_k) - f(x*) when the problem has a planted solution.
    pub f_gap: Option<F>,
    pub d_norm_sq: F,
    pub z_norm_sq: F,
    pub feasible: bool,
}

/// The randomized output iterate x_{k*} together with what is needed to
/// form the corrected point.
#[derive(Debug, Clone)]
pub struct SampledIterate<F: Scalar> {
    pub k_star: usize,
    pub x: Vec<F>,
    pub x_prev: Vec<F>,
    pub beta: F,
}

#[derive(Debug, Clone)]
pub struct Trajectory<F: Scalar> {
    pub rows: Vec<SnapshotRow<F>>,
    pub projected_init: bool,
    pub sampled: Option<SampledIterate<F>>,
    pub final_x: Vec<F>,
}

/// A run that diverged, with the partial trajectory attached.
#[derive(Debug)]
pub struct RunDiverged<F: Scalar> {
    pub at: usize,
    pub partial: Trajectory<F>,
}

pub type RunResult<F> = std::result::Result<Trajectory<F>, Box<RunDiverged<F>>>;

fn record_row<F: Scalar, P: StochasticProblem<F> + ?Sized>(
    problem: &P,
    state: &ShbState<F>,
    d_norm_sq: F,
) -> SnapshotRow<F> {
    let objective = problem.objective(&state.x);
    let f_gap = problem.solution().map(|xs| objective - problem.objective(xs));
    let tol = F::from_f64_lossy(FEASIBILITY_TOL);
    SnapshotRow {
        k: state.k,
        objective,
        f_gap,
        d_norm_sq,
        z_norm_sq: linalg::norm_sq(&state.z),
        feasible: problem
            .feasible_set()
            .membership(&state.x, tol)
            .unwrap_or(false),
    }
}

/// Run K SHB steps, recording rows every `stride` iterations (plus k = 0 and
/// k = K), then draw k* and recover x_{k*} by a deterministic replay of the
/// same seed.
pub fn run<F: Scalar, P: StochasticProblem<F> + ?Sized>(
    problem: &P,
    x0: &[F],
    schedule: &ParamSchedule<F>,
    horizon: usize,
    seed: u64,
    stride: usize,
) -> RunResult<F> {
    let stride = stride.max(1);
    let mut state = match ShbState::init(problem, x0, seed) {
        Ok(s) => s,
        Err(e) => panic!("init cannot diverge: {e}"),
    };
    let projected_init = state.projected_init;
    let mut rows = vec![record_row(problem, &state, F::zero())];

    for k in 0..horizon {
        if let Err(e) = state.step(problem, schedule) {
            let at = match e {
                ShbError::Diverged { at } => at,
                other => panic!("unexpected step error: {other}"),
            };
            return Err(Box::new(RunDiverged {
                at,
                partial: Trajectory {
                    rows,
                    projected_init,
                    sampled: None,
                    final_x: state.x.clone(),
                },
            }));
        }
        if state.k % stride == 0 || state.k == horizon {
            let d = state.d_k(schedule.alpha(k));
            rows.push(record_row(problem, &state, linalg::norm_sq(&d)));
        }
    }

    let k_star = state.draw_k_star(horizon);

    // replay the same seed up to k* to recover the sampled iterate
    let mut replay = ShbState::init(problem, x0, seed).expect("replay init");
    for _ in 0..k_star {
        replay.step(problem, schedule).expect("replay step");
    }
    let beta = schedule.beta(k_star.saturating_sub(1));
    let sampled = SampledIterate {
        k_star,
        x: replay.x.clone(),
        x_prev: replay.x_prev.clone(),
        beta,
    };

    Ok(Trajectory {
        rows,
        projected_init,
        sampled: Some(sampled),
        final_x: state.x,
    })
}

/// Reference projected SGD with the same stream discipline as [`run`]:
/// `x_{k+1} = proj_X(x_k - alpha_k g_k)` with `g_k` evaluated at `x_k` on
/// the k-th drawn sample. Bitwise identical to SHB with beta = 1.
pub fn run_sgd<F: Scalar, P: StochasticProblem<F> + ?Sized>(
    problem: &P,
    x0: &[F],
    schedule: &ParamSchedule<F>,
    horizon: usize,
    seed: u64,
    stride: usize,
) -> RunResult<F> {
    let stride = stride.max(1);
    let set = problem.feasible_set();
    let tol = F::from_f64_lossy(FEASIBILITY_TOL);
    let feasible = set.membership(x0, tol).expect("x0 dims");
    let mut x = if feasible {
        x0.to_vec()
    } else {
        set.project(x0).expect("x0 dims")
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s0 = rng.gen_range(0..problem.sample_count());
    let mut g = problem.sample_subgradient(&x, s0).expect("subgradient");

    let mut x_prev;
    let guard = F::from_f64_lossy(DIVERGENCE_NORM);

    let row = |k: usize, x: &[F], g: &[F], d_sq: F| {
        let objective = problem.objective(x);
        SnapshotRow {
            k,
            objective,
            f_gap: problem.solution().map(|xs| objective - problem.objective(xs)),
            d_norm_sq: d_sq,
            z_norm_sq: linalg::norm_sq(g),
            feasible: set.membership(x, tol).unwrap_or(false),
        }
    };
    let mut rows = vec![row(0, &x, &g, F::zero())];

    for k in 0..horizon {
        let alpha = schedule.alpha(k);
        let y = linalg::add_scaled(&x, -alpha, &g);
        let x_next = set.project(&y).expect("projection");
        if !linalg::all_finite(&x_next) || linalg::norm(&x_next) > guard {
            return Err(Box::new(RunDiverged {
                at: k + 1,
                partial: Trajectory {
                    rows,
                    projected_init: !feasible,
                    sampled: None,
                    final_x: x_next,
                },
            }));
        }
        let s = rng.gen_range(0..problem.sample_count());
        g = problem.sample_subgradient(&x_next, s).expect("subgradient");
        x_prev = std::mem::replace(&mut x, x_next);
        if (k + 1) % stride == 0 || k + 1 == horizon {
            let d: Vec<F> = x_prev
                .iter()
                .zip(&x)
                .map(|(&a, &b)| (a - b) / alpha)
                .collect();
            rows.push(row(k + 1, &x, &g, linalg::norm_sq(&d)));
        }
    }

    let k_star = rng.gen_range(0..=horizon);
    // replay to recover x_{k*}
    let mut rng2 = ChaCha8Rng::seed_from_u64(seed);
    let mut xr = if feasible {
        x0.to_vec()
    } else {
        set.project(x0).expect("x0 dims")
    };
    let s0 = rng2.gen_range(0..problem.sample_count());
    let mut gr = problem.sample_subgradient(&xr, s0).expect("subgradient");
    let mut xr_prev = xr.clone();
    for k in 0..k_star {
        let alpha = schedule.alpha(k);
        let y = linalg::add_scaled(&xr, -alpha, &gr);
        let x_next = set.project(&y).expect("projection");
        let s = rng2.gen_range(0..problem.sample_count());
        gr = problem.sample_subgradient(&x_next, s).expect("subgradient");
        xr_prev = std::mem::replace(&mut xr, x_next);
    }

    Ok(Trajectory {
        rows,
        projected_init: !feasible,
        sampled: Some(SampledIterate {
            k_star,
            x: xr,
            x_prev: xr_prev,
            beta: F::one(),
        }),
        final_x: x,
    })
}

/// Unconstrained two-point heavy-ball recursion on the same sample stream
/// as [`run`]; returns all iterates x_0..x_K. Errors unless the feasible
/// set is the whole space.
pub fn run_heavy_ball_form<F: Scalar, P: StochasticProblem<F> + ?Sized>(
    problem: &P,
    x0: &[F],
    schedule: &ParamSchedule<F>,
    horizon: usize,
    seed: u64,
) -> Result<Vec<Vec<F>>> {
    use crate::geometry::ConvexFeasibleSet;
    if !matches!(problem.feasible_set(), ConvexFeasibleSet::WholeSpace { .. }) {
        return Err(ShbError::invalid(
            "feasible_set",
            "the two-point heavy-ball form is unconstrained only",
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s0 = rng.gen_range(0..problem.sample_count());
    let mut g = problem.sample_subgradient(x0, s0)?;

    let mut iterates = Vec::with_capacity(horizon + 1);
    iterates.push(x0.to_vec());
    let guard = F::from_f64_lossy(DIVERGENCE_NORM);

    for k in 0..horizon {
        let x_next = if k == 0 {
            // z_0 = g_0, so the first step is a plain subgradient step
            linalg::add_scaled(&iterates[0], -schedule.alpha(0), &g)
        } else {
            let (eta, lambda) = heavy_ball_params(schedule, k)?;
            let x = &iterates[k];
            let x_prev = &iterates[k - 1];
            x.iter()
                .zip(x_prev)
                .zip(&g)
                .map(|((&xk, &xp), &gk)| xk - eta * gk + lambda * (xk - xp))
                .collect()
        };
        if !linalg::all_finite(&x_next) || linalg::norm(&x_next) > guard {
            return Err(ShbError::Diverged { at: k + 1 });
        }
        let s = rng.gen_range(0..problem.sample_count());
        g = problem.sample_subgradient(&x_next, s)?;
        iterates.push(x_next);
    }
    Ok(iterates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexFeasibleSet;
    use crate::oracle::{PhaseRetrievalInstance, XStarMode};

    fn small_problem() -> PhaseRetrievalInstance<f64> {
        PhaseRetrievalInstance::generate(4, 10, 2.0, 0.1, 5.0, XStarMode::UnitSphere, 5).unwrap()
    }

    fn constant_schedule(alpha0: f64, horizon: usize, beta: f64) -> ParamSchedule<f64> {
        ParamSchedule::new(
            alpha0,
            StepsizeMode::ConstantHorizon { horizon },
            MomentumRule::FixedBeta(beta),
        )
        .unwrap()
    }

    #[test]
    fn init_projects_infeasible_start() {
        // constrained variant via a ball-constrained smooth instance
        let set = ConvexFeasibleSet::origin_ball(2, 1.0).unwrap();
        let p = crate::oracle::SmoothConstrainedInstance::identity_quadratic(set).unwrap();
        let st: ShbState<f64> = ShbState::init(&p, &[2.0, 0.0], 1).unwrap();
        assert!(st.projected_init);
        assert!((st.x[0] - 1.0).abs() < 1e-12 && st.x[1].abs() < 1e-12);
    }

    #[test]
    fn init_single_sample_z0() {
        let p = PhaseRetrievalInstance::from_parts(
            vec![1.0, 0.0],
            vec![1.0],
            vec![1.0, 0.0],
            1.0,
            0.0,
            5.0,
        )
        .unwrap();
        let st = ShbState::init(&p, &[2.0, 0.0], 3).unwrap();
        assert_eq!(st.z, p.sample_subgradient(&[2.0, 0.0], 0).unwrap());
    }

    #[test]
    fn init_is_seed_deterministic() {
        let p = small_problem();
        let a = ShbState::init(&p, &[0.1; 4], 9).unwrap();
        let b = ShbState::init(&p, &[0.1; 4], 9).unwrap();
        assert_eq!(a.z, b.z);
    }

    #[test]
    fn step_direct_arithmetic() {
        // X = R^2, x=(1,0), z=(2,0), alpha=0.5, g_{k+1}=(1,1), beta=0.5
        // x_next = (0,0); d_next = (2,0); z_next = 0.5*(1,1) + 0.5*(2,0) = (1.5, 0.5)
        // Build a single-sample problem whose subgradient at (0,0) is (1,1):
        // smooth family with H = 0, c = (1,1).
        let p = crate::oracle::SmoothConstrainedInstance::from_parts(
            vec![vec![0.0; 4]],
            vec![vec![1.0, 1.0]],
            ConvexFeasibleSet::whole_space(2),
        )
        .unwrap();
        let sched = constant_schedule(0.5, 0, 0.5);
        assert_eq!(sched.alpha(0), 0.5);
        let mut st = ShbState::init(&p, &[1.0, 0.0], 0).unwrap();
        st.z = vec![2.0, 0.0];
        st.step(&p, &sched).unwrap();
        assert_eq!(st.x, vec![0.0, 0.0]);
        assert_eq!(st.z, vec![1.5, 0.5]);
        assert_eq!(st.k, 1);
    }

    #[test]
    fn beta_one_direction_is_fresh_subgradient() {
        let p = small_problem();
        let sched = constant_schedule(0.05, 10, 1.0);
        let mut st = ShbState::init(&p, &[0.2; 4], 4).unwrap();
        for _ in 0..5 {
            let x_before = st.x.clone();
            let z_before = st.z.clone();
            let alpha = sched.alpha(st.k);
            st.step(&p, &sched).unwrap();
            // the new x is a plain projected step
            let expected = linalg::add_scaled(&x_before, -alpha, &z_before);
            assert_eq!(st.x, expected);
        }
    }

    #[test]
    fn projection_binds_on_ball() {
        let set = ConvexFeasibleSet::origin_ball(2, 1.0).unwrap();
        let p = crate::oracle::SmoothConstrainedInstance::identity_quadratic(set).unwrap();
        let sched = constant_schedule(1.0, 0, 1.0);
        let mut st = ShbState::init(&p, &[1.0, 0.0], 0).unwrap();
        st.z = vec![-4.0, 0.0];
        st.step(&p, &sched).unwrap();
        // x - alpha z = (5, 0) projects back to (1, 0)
        assert_eq!(st.x, vec![1.0, 0.0]);
    }

    #[test]
    fn heavy_ball_coefficients() {
        let sched = constant_schedule(0.1, 0, 0.5);
        let (eta, lambda) = heavy_ball_params(&sched, 1).unwrap();
        assert!((eta - 0.05).abs() < 1e-15);
        assert!((lambda - 0.5).abs() < 1e-15);
        assert!(heavy_ball_params(&sched, 0).is_err());

        let sgd = constant_schedule(0.1, 0, 1.0);
        let (_, lambda) = heavy_ball_params(&sgd, 1).unwrap();
        assert_eq!(lambda, 0.0);
    }

    #[test]
    fn heavy_ball_coefficients_decaying() {
        // decaying alpha0 = 1: alpha_0 = 1, alpha_1 = 1/sqrt(2); beta_0 = nu
        let nu = 0.3;
        let sched = ParamSchedule::new(
            1.0,
            StepsizeMode::Decaying,
            MomentumRule::Nu(nu),
        )
        .unwrap();
        let (eta, lambda) = heavy_ball_params(&sched, 1).unwrap();
        let a1 = 1.0 / 2.0f64.sqrt();
        assert!((eta - a1 * nu).abs() < 1e-15);
        assert!((lambda - (1.0 - nu) * a1).abs() < 1e-15);
    }

    #[test]
    fn beta_clamped_to_one() {
        let sched = ParamSchedule::new(
            2.0,
            StepsizeMode::Decaying,
            MomentumRule::Nu(3.0),
        )
        .unwrap();
        assert_eq!(sched.beta(0), 1.0);
        assert!(sched.beta(100) < 1.0);
    }

    #[test]
    fn run_degenerate_horizon_zero() {
        let p = small_problem();
        let sched = constant_schedule(0.1, 0, 0.5);
        let t = run(&p, &[0.1; 4], &sched, 0, 1, 1).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.sampled.as_ref().unwrap().k_star, 0);
    }

    #[test]
    fn run_is_deterministic() {
        let p = small_problem();
        let sched = constant_schedule(0.1, 50, 0.3);
        let a = run(&p, &[0.1; 4], &sched, 50, 2, 5).unwrap();
        let b = run(&p, &[0.1; 4], &sched, 50, 2, 5).unwrap();
        assert_eq!(a.final_x, b.final_x);
        assert_eq!(
            a.sampled.as_ref().unwrap().k_star,
            b.sampled.as_ref().unwrap().k_star
        );
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.objective, rb.objective);
        }
    }

    #[test]
    fn divergence_carries_partial_trajectory() {
        // enormous stepsize on phase retrieval forces blowup
        let p = small_problem();
        let sched = constant_schedule(1e9, 0, 1.0);
        match run(&p, &[10.0; 4], &sched, 200, 3, 1) {
            Err(d) => {
                assert!(d.at >= 1);
                assert!(!d.partial.rows.is_empty());
                assert!(d.partial.sampled.is_none());
            }
            Ok(_) => panic!("expected divergence"),
        }
    }

    #[test]
    fn recorded_iterates_stay_feasible() {
        let set = ConvexFeasibleSet::origin_ball(3, 1.5).unwrap();
        let p =
            crate::oracle::SmoothConstrainedInstance::random(3, 5, set, 1.0, 8).unwrap();
        let sched = constant_schedule(0.5, 300, 0.4);
        let t = run(&p, &[0.3; 3], &sched, 300, 6, 10).unwrap();
        assert!(t.rows.iter().all(|r| r.feasible));
    }
}
