//! Experiment orchestration: multi-seed sweeps over (α₀, β-rule), epochs-to-ε
//! statistics with percentile bands, bound-check reports, and CSV/TSV output.
//!
//! Orchestration is fixed to `f64`; the numerics underneath stay generic.

mod output;

pub use output::{aggregate_csv, emit_outputs, runs_csv};

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{theorem_bound, BoundReport, TheoremConstants, TheoremId};
use crate::error::{Result, ShbError};
use crate::optimizer::{self, MomentumRule, ParamSchedule, SnapshotRow, StepsizeMode};
use crate::oracle::{PhaseRetrievalInstance, StochasticProblem, XStarMode};
use crate::stationarity::{bar_iterate, prox_solve, MoreauConfig};
use crate::Scalar;

/// Decorrelates the x0 draw from the optimizer's sample stream, which is
/// seeded with the bare run seed.
const X0_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProblemSpec {
    PhaseRetrieval {
        n: usize,
        m: usize,
        kappa: f64,
        p_fail: f64,
        noise_scale: f64,
        #[serde(default = "default_x_star_mode")]
        x_star_mode: XStarMode,
        instance_seed: u64,
    },
    /// Load an instance saved by the oracle's save routine.
    PhaseRetrievalDir { path: PathBuf },
}

fn default_x_star_mode() -> XStarMode {
    XStarMode::UnitSphere
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BetaRule {
    /// beta = min(c / sqrt(K), 1), constant over the run.
    SqrtK { c: f64 },
    /// nu = 1 / alpha0, i.e. beta_k = min(alpha_k / alpha0, 1).
    NuAlpha,
    /// Constant beta in (0, 1].
    Fixed { beta: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodSpec {
    Shb { beta_rule: BetaRule },
    Sgd,
}

impl MethodSpec {
    /// Stable label used in CSV columns and plot-data file names.
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Sgd => "sgd".into(),
            MethodSpec::Shb { beta_rule } => match beta_rule {
                BetaRule::SqrtK { c } => format!("shb_sqrtk_c{c}"),
                BetaRule::NuAlpha => "shb_nualpha".into(),
                BetaRule::Fixed { beta } => format!("shb_beta{beta}"),
            },
        }
    }

    fn beta_rule_text(&self) -> String {
        match self {
            MethodSpec::Sgd => String::new(),
            MethodSpec::Shb { beta_rule } => match beta_rule {
                BetaRule::SqrtK { c } => format!("sqrt_k({c})"),
                BetaRule::NuAlpha => "nu_alpha".into(),
                BetaRule::Fixed { beta } => format!("fixed({beta})"),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleModeSpec {
    ConstantHorizon,
    Decaying,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum X0Mode {
    Origin,
    /// Entrywise standard normal, drawn from a per-seed stream.
    StandardNormal,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeedSpec {
    #[serde(default = "default_seed_count")]
    pub count: usize,
    #[serde(default)]
    pub base_seed: u64,
}

fn default_seed_count() -> usize {
    50
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec {
            count: default_seed_count(),
            base_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MoreauSpec {
    /// Defaults to 1/(2 rho_hat) when absent.
    pub lambda: Option<f64>,
    #[serde(default = "default_inner_iters")]
    pub inner_iters: usize,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
}

fn default_inner_iters() -> usize {
    2000
}

fn default_inner_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub methods: Vec<MethodSpec>,
    pub schedule_mode: ScheduleModeSpec,
    pub alpha0_grid: Vec<f64>,
    pub horizon: usize,
    #[serde(default)]
    pub seeds: SeedSpec,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// Snapshot stride; defaults to the sample count m (one epoch).
    #[serde(default)]
    pub stride: Option<usize>,
    #[serde(default = "default_x0_mode")]
    pub x0_mode: X0Mode,
    /// When present, the envelope gradient at x_bar_{k*} is evaluated per run.
    #[serde(default)]
    pub moreau: Option<MoreauSpec>,
    #[serde(default)]
    pub outdir: Option<PathBuf>,
}

fn default_epsilons() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}

fn default_x0_mode() -> X0Mode {
    X0Mode::StandardNormal
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ShbError::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(ShbError::Config("method list is empty".into()));
        }
        if self.alpha0_grid.is_empty() || self.alpha0_grid.iter().any(|&a| !(a > 0.0)) {
            return Err(ShbError::Config("alpha0_grid must be nonempty and > 0".into()));
        }
        if self.horizon == 0 {
            return Err(ShbError::Config("horizon must be >= 1".into()));
        }
        if self.seeds.count == 0 {
            return Err(ShbError::Config("seeds.count must be >= 1".into()));
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0)) {
            return Err(ShbError::Config("epsilons must be > 0".into()));
        }
        if let Some(0) = self.stride {
            return Err(ShbError::Config("stride must be >= 1".into()));
        }
        for m in &self.methods {
            if let MethodSpec::Shb {
                beta_rule: BetaRule::Fixed { beta },
            } = m
            {
                if !(*beta > 0.0 && *beta <= 1.0) {
                    return Err(ShbError::Config(format!("fixed beta {beta} not in (0,1]")));
                }
            }
        }
        Ok(())
    }
}

/// One completed (or diverged) run plus its derived statistics.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run_id: usize,
    /// base_seed + seed index; seeds are shared across methods and alpha0.
    pub seed: u64,
    pub method: String,
    pub alpha0: f64,
    pub beta_rule: String,
    pub rows: Vec<SnapshotRow<f64>>,
    pub k_star: Option<usize>,
    pub grad_norm_at_bar: Option<f64>,
    /// (epsilon, epoch count or None when never reached).
    pub epochs_to_eps: Vec<(f64, Option<usize>)>,
    pub diverged_at: Option<usize>,
}

/// Aggregate row per (method, alpha0, epsilon); quantiles use the
/// lower-interpolation convention and count not-reached runs as +inf.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: String,
    pub alpha0: f64,
    pub epsilon: f64,
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
    pub reach_fraction: f64,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub aggregates: Vec<AggregateRow>,
}

pub fn build_problem(spec: &ProblemSpec) -> Result<PhaseRetrievalInstance<f64>> {
    match spec {
        ProblemSpec::PhaseRetrieval {
            n,
            m,
            kappa,
            p_fail,
            noise_scale,
            x_star_mode,
            instance_seed,
        } => PhaseRetrievalInstance::generate(
            *n,
            *m,
            *kappa,
            *p_fail,
            *noise_scale,
            *x_star_mode,
            *instance_seed,
        ),
        ProblemSpec::PhaseRetrievalDir { path } => crate::oracle::load_phase_retrieval(path),
    }
}

pub fn make_schedule(
    method: &MethodSpec,
    alpha0: f64,
    mode: ScheduleModeSpec,
    horizon: usize,
) -> Result<ParamSchedule<f64>> {
    let stepsize = match mode {
        ScheduleModeSpec::ConstantHorizon => StepsizeMode::ConstantHorizon { horizon },
        ScheduleModeSpec::Decaying => StepsizeMode::Decaying,
    };
    let momentum = match method {
        // run_sgd ignores momentum; beta = 1 keeps the schedule valid
        MethodSpec::Sgd => MomentumRule::FixedBeta(1.0),
        MethodSpec::Shb { beta_rule } => match beta_rule {
            BetaRule::Fixed { beta } => MomentumRule::FixedBeta(*beta),
            BetaRule::NuAlpha => MomentumRule::Nu(1.0 / alpha0),
            BetaRule::SqrtK { c } => {
                MomentumRule::FixedBeta((c / (horizon as f64).sqrt()).min(1.0))
            }
        },
    };
    ParamSchedule::new(alpha0, stepsize, momentum)
}

fn draw_x0(mode: X0Mode, n: usize, seed: u64) -> Vec<f64> {
    match mode {
        X0Mode::Origin => vec![0.0; n],
        X0Mode::StandardNormal => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(X0_SEED_OFFSET));
            (0..n).map(|_| f64::standard_normal(&mut rng)).collect()
        }
    }
}

/// Smallest epoch q with f(x_{m q}) - f_star <= epsilon, measured only at
/// epoch boundaries present in `rows`; epochs count from 0. Errors if any
/// boundary up to the last recorded iteration is missing (snapshot stride
/// must divide m).
pub fn epochs_to_eps(
    rows: &[SnapshotRow<f64>],
    m: usize,
    epsilon: f64,
    f_star: f64,
) -> Result<Option<usize>> {
    if m == 0 {
        return Err(ShbError::Config("epoch length m must be >= 1".into()));
    }
    let last_k = rows.iter().map(|r| r.k).max().unwrap_or(0);
    let mut expected = 0usize; // next epoch boundary we must see
    for row in rows {
        if row.k % m != 0 {
            continue;
        }
        let q = row.k / m;
        if q != expected {
            return Err(ShbError::Config(format!(
                "trajectory misses epoch boundary {} (snapshot stride must divide m)",
                expected * m
            )));
        }
        expected = q + 1;
        if row.objective - f_star <= epsilon {
            return Ok(Some(q));
        }
    }
    if expected * m <= last_k {
        return Err(ShbError::Config(format!(
            "trajectory misses epoch boundary {} (snapshot stride must divide m)",
            expected * m
        )));
    }
    Ok(None)
}

/// Lower-interpolation quantile of a sorted slice: element at floor(q (n-1)).
pub fn quantile_lower(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let idx = (q * (sorted.len() - 1) as f64).floor() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

struct Job {
    run_id: usize,
    method: MethodSpec,
    alpha0: f64,
    seed: u64,
}

/// Execute the full sweep: |methods| x |alpha0_grid| x seeds runs, in
/// parallel, with divergences recorded per run rather than aborting. The
/// record order (and hence all emitted bytes) is deterministic.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let problem = build_problem(&config.problem)?;
    let n = problem.dimension();
    let m = problem.sample_count();
    let stride = config.stride.unwrap_or(m);
    if m % stride != 0 {
        return Err(ShbError::Config(format!(
            "stride {stride} does not divide the sample count {m}"
        )));
    }
    let f_star = problem
        .solution()
        .map(|xs| problem.objective(xs))
        .expect("phase retrieval carries its planted solution");

    let moreau_cfg = match &config.moreau {
        None => None,
        Some(spec) => {
            let rho = problem.weak_convexity_bound();
            let lambda = spec.lambda.unwrap_or(1.0 / (2.0 * rho));
            Some(MoreauConfig::new(lambda, rho, spec.inner_iters, spec.inner_tol)?)
        }
    };

    let mut jobs = Vec::new();
    for method in &config.methods {
        for &alpha0 in &config.alpha0_grid {
            for s in 0..config.seeds.count {
                jobs.push(Job {
                    run_id: jobs.len(),
                    method: *method,
                    alpha0,
                    seed: config.seeds.base_seed + s as u64,
                });
            }
        }
    }

    let mut records = jobs
        .par_iter()
        .map(|job| {
            let schedule = make_schedule(&job.method, job.alpha0, config.schedule_mode, config.horizon)?;
            let x0 = draw_x0(config.x0_mode, n, job.seed);
            let result = match job.method {
                MethodSpec::Sgd => optimizer::run_sgd(
                    &problem, &x0, &schedule, config.horizon, job.seed, stride,
                ),
                MethodSpec::Shb { .. } => {
                    optimizer::run(&problem, &x0, &schedule, config.horizon, job.seed, stride)
                }
            };
            let (rows, sampled, diverged_at) = match result {
                Ok(t) => (t.rows, t.sampled, None),
                Err(d) => (d.partial.rows, None, Some(d.at)),
            };
            let epochs: Vec<(f64, Option<usize>)> = if diverged_at.is_some() {
                config.epsilons.iter().map(|&e| (e, None)).collect()
            } else {
                config
                    .epsilons
                    .iter()
                    .map(|&e| Ok((e, epochs_to_eps(&rows, m, e, f_star)?)))
                    .collect::<Result<_>>()?
            };
            let mut grad_norm_at_bar = None;
            if let (Some(mc), Some(s)) = (&moreau_cfg, &sampled) {
                let x_bar = bar_iterate(&s.x, &s.x_prev, s.beta)?;
                grad_norm_at_bar = Some(prox_solve(&problem, &x_bar, mc)?.grad_norm);
            }
            Ok(RunRecord {
                run_id: job.run_id,
                seed: job.seed,
                method: job.method.label(),
                alpha0: job.alpha0,
                beta_rule: job.method.beta_rule_text(),
                rows,
                k_star: sampled.as_ref().map(|s| s.k_star),
                grad_norm_at_bar,
                epochs_to_eps: epochs,
                diverged_at,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| r.run_id);

    let aggregates = aggregate(&records, &config.epsilons);
    Ok(ExperimentOutcome {
        records,
        aggregates,
    })
}

/// Per (method, alpha0, epsilon): median/p10/p90 of epochs-to-eps with
/// not-reached runs as +inf, plus the fraction that reached epsilon.
pub fn aggregate(records: &[RunRecord], epsilons: &[f64]) -> Vec<AggregateRow> {
    let mut cells: Vec<(String, f64)> = Vec::new();
    for r in records {
        let key = (r.method.clone(), r.alpha0);
        if !cells.contains(&key) {
            cells.push(key);
        }
    }
    let mut out = Vec::new();
    for (method, alpha0) in cells {
        for (ei, &eps) in epsilons.iter().enumerate() {
            let mut vals: Vec<f64> = Vec::new();
            let mut reached = 0usize;
            for r in records.iter().filter(|r| r.method == method && r.alpha0 == alpha0) {
                let v = r.epochs_to_eps.get(ei).and_then(|&(_, q)| q);
                match v {
                    Some(q) => {
                        reached += 1;
                        vals.push(q as f64);
                    }
                    None => vals.push(f64::INFINITY),
                }
            }
            if vals.is_empty() {
                continue;
            }
            vals.sort_by(|a, b| a.partial_cmp(b).expect("no NaN epochs"));
            out.push(AggregateRow {
                method: method.clone(),
                alpha0,
                epsilon: eps,
                median: quantile_lower(&vals, 0.5),
                p10: quantile_lower(&vals, 0.1),
                p90: quantile_lower(&vals, 0.9),
                reach_fraction: reached as f64 / vals.len() as f64,
            });
        }
    }
    out
}

/// Compare the seed-mean of grad_norm^2 at x_bar_{k*} against a theorem
/// right-hand side; PASS iff mean + 2 stderr <= rhs.
pub fn bound_check_report(
    records: &[RunRecord],
    constants: &TheoremConstants<f64>,
    theorem: TheoremId,
    horizon: usize,
) -> Result<BoundReport<f64>> {
    let vals: Vec<f64> = records
        .iter()
        .map(|r| {
            r.grad_norm_at_bar
                .map(|g| g * g)
                .ok_or_else(|| ShbError::Config(format!("run {} lacks grad_norm at k*", r.run_id)))
        })
        .collect::<Result<_>>()?;
    if vals.is_empty() {
        return Err(ShbError::Config("no records to check".into()));
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let stderr = if vals.len() > 1 {
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let mut report = theorem_bound(theorem, constants, horizon)?;
    report.lhs_mean = Some(mean);
    report.lhs_stderr = Some(stderr);
    report.pass = Some(mean + 2.0 * stderr <= report.rhs);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize, objective: f64) -> SnapshotRow<f64> {
        SnapshotRow {
            k,
            objective,
            f_gap: None,
            d_norm_sq: 0.0,
            z_norm_sq: 0.0,
            feasible: true,
        }
    }

    #[test]
    fn epochs_first_crossing() {
        let rows = vec![row(0, 1.0), row(10, 0.5), row(20, 0.05)];
        assert_eq!(epochs_to_eps(&rows, 10, 0.1, 0.0).unwrap(), Some(2));
        assert_eq!(epochs_to_eps(&rows, 10, 2.0, 0.0).unwrap(), Some(0));
        assert_eq!(epochs_to_eps(&rows, 10, 1e-3, 0.0).unwrap(), None);
    }

    #[test]
    fn epochs_rejects_missing_boundary() {
        let rows = vec![row(0, 1.0), row(20, 0.05)];
        assert!(matches!(
            epochs_to_eps(&rows, 10, 0.1, 0.0),
            Err(ShbError::Config(_))
        ));
    }

    #[test]
    fn quantiles_lower_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_lower(&v, 0.5), 3.0);
        assert_eq!(quantile_lower(&v, 0.1), 1.0);
        assert_eq!(quantile_lower(&v, 0.9), 4.0);
        assert_eq!(quantile_lower(&v, 1.0), 5.0);
        assert_eq!(quantile_lower(&v, 0.0), 1.0);
    }

    pub(crate) fn smoke_config_for_output() -> ExperimentConfig {
        smoke_config()
    }

    fn smoke_config() -> ExperimentConfig {
        ExperimentConfig {
            problem: ProblemSpec::PhaseRetrieval {
                n: 4,
                m: 10,
                kappa: 2.0,
                p_fail: 0.1,
                noise_scale: 1.0,
                x_star_mode: XStarMode::UnitSphere,
                instance_seed: 7,
            },
            methods: vec![MethodSpec::Shb {
                beta_rule: BetaRule::Fixed { beta: 0.5 },
            }],
            schedule_mode: ScheduleModeSpec::ConstantHorizon,
            alpha0_grid: vec![0.1],
            horizon: 10,
            seeds: SeedSpec {
                count: 1,
                base_seed: 3,
            },
            epsilons: vec![0.1],
            stride: Some(10),
            x0_mode: X0Mode::StandardNormal,
            moreau: None,
            outdir: None,
        }
    }

    #[test]
    fn smoke_run_is_deterministic() {
        let cfg = smoke_config();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.records.len(), 1);
        assert_eq!(a.records[0].seed, 3);
        let ra = &a.records[0];
        let rb = &b.records[0];
        assert_eq!(ra.rows.len(), rb.rows.len());
        for (x, y) in ra.rows.iter().zip(&rb.rows) {
            assert_eq!(x.objective.to_bits(), y.objective.to_bits());
        }
        assert_eq!(a.aggregates, b.aggregates);
    }

    #[test]
    fn beta_one_and_sgd_aggregate_identically() {
        let mut cfg = smoke_config();
        cfg.methods = vec![
            MethodSpec::Shb {
                beta_rule: BetaRule::Fixed { beta: 1.0 },
            },
            MethodSpec::Sgd,
        ];
        cfg.seeds.count = 3;
        cfg.horizon = 50;
        cfg.stride = Some(10);
        let out = run_experiment(&cfg).unwrap();
        let shb: Vec<_> = out.aggregates.iter().filter(|a| a.method != "sgd").collect();
        let sgd: Vec<_> = out.aggregates.iter().filter(|a| a.method == "sgd").collect();
        assert_eq!(shb.len(), sgd.len());
        for (a, b) in shb.iter().zip(&sgd) {
            assert_eq!(a.median, b.median);
            assert_eq!(a.p10, b.p10);
            assert_eq!(a.p90, b.p90);
            assert_eq!(a.reach_fraction, b.reach_fraction);
        }
    }

    #[test]
    fn config_toml_round_trip() {
        let text = r#"
            schedule_mode = "constant_horizon"
            alpha0_grid = [0.1, 0.2]
            horizon = 100

            [problem]
            family = "phase_retrieval"
            n = 5
            m = 20
            kappa = 10.0
            p_fail = 0.3
            noise_scale = 10.0
            instance_seed = 1

            [[methods]]
            kind = "shb"
            beta_rule = { rule = "sqrt_k", c = 1.0 }

            [[methods]]
            kind = "sgd"

            [seeds]
            count = 2
            base_seed = 5
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.methods.len(), 2);
        assert_eq!(cfg.seeds.count, 2);
        assert_eq!(cfg.epsilons, vec![1e-1, 1e-2, 1e-3]);
        assert_eq!(cfg.methods[0].label(), "shb_sqrtk_c1");
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = smoke_config();
        cfg.alpha0_grid.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = smoke_config();
        cfg.epsilons = vec![-1.0];
        assert!(cfg.validate().is_err());
        let mut cfg = smoke_config();
        cfg.stride = Some(3); // does not divide m = 10
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn bound_check_requires_grad_norms() {
        let rec = RunRecord {
            run_id: 0,
            seed: 0,
            method: "shb".into(),
            alpha0: 1.0,
            beta_rule: String::new(),
            rows: vec![],
            k_star: Some(1),
            grad_norm_at_bar: None,
            epochs_to_eps: vec![],
            diverged_at: None,
        };
        let c = TheoremConstants {
            rho: 1.0,
            l: 1.0,
            sigma: 0.0,
            g: 0.0,
            delta: 1.0,
            alpha0: 1.0,
            lambda: 0.5,
        };
        assert!(bound_check_report(&[rec], &c, TheoremId::T1, 99).is_err());
    }
}
