use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use shb_core::diagnostics::{TheoremConstants, TheoremId};
use shb_core::harness::{self, ExperimentConfig};
use shb_core::oracle::{
    estimate_constants, load_phase_retrieval, save_phase_retrieval, PhaseRetrievalInstance,
    StochasticProblem, XStarMode,
};
use shb_core::stationarity::{prox_solve, MoreauConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

/// Stochastic heavy-ball subgradient method: instance generation, runs,
/// sweeps, stationarity evaluation, and reports.
///
/// Verbosity is controlled by the SHB_LOG environment variable
/// (error/warn/info/debug/trace).
#[derive(Parser)]
#[command(name = "shb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a phase retrieval instance and save it to a directory.
    Generate(GenerateArgs),
    /// Execute one experiment config; exits 3 if any run diverges.
    Run(RunArgs),
    /// Execute a sweep config; divergences are recorded, exit code stays 0.
    Sweep(RunArgs),
    /// Evaluate the Moreau-envelope gradient norm at saved iterates.
    Moreau(MoreauArgs),
    /// Bound-check report plus aggregate table for a config.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Output directory for header.toml, A.csv, b.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0.0)]
    p_fail: f64,
    #[arg(long, default_value_t = 10.0)]
    noise_scale: f64,
    /// unit_sphere or standard_normal
    #[arg(long, default_value = "unit_sphere")]
    x_star_mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config; flags below override its fields.
    #[arg(long)]
    config: PathBuf,
    /// Override the alpha0 grid (repeatable).
    #[arg(long = "alpha0")]
    alpha0: Vec<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    outdir: Option<PathBuf>,
}

#[derive(Args)]
struct MoreauArgs {
    /// Instance directory written by `generate`.
    #[arg(long)]
    instance: PathBuf,
    /// CSV of iterates, one comma-separated point per line.
    #[arg(long)]
    points: PathBuf,
    /// Defaults to 1/(2 rho_hat).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    inner_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    inner_tol: f64,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    run: RunArgs,
    /// t1, t2, or t3
    #[arg(long, default_value = "t1")]
    theorem: String,
    /// Probes for empirical constant estimation over the visited region.
    #[arg(long, default_value_t = 2000)]
    probes: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("SHB_LOG")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => generate(a).map(|_| 0),
        Command::Run(a) => run(a, true),
        Command::Sweep(a) => run(a, false),
        Command::Moreau(a) => moreau(a).map(|_| 0),
        Command::Report(a) => report(a).map(|_| 0),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mode = match a.x_star_mode.as_str() {
        "unit_sphere" => XStarMode::UnitSphere,
        "standard_normal" => XStarMode::StandardNormal,
        other => bail!("unknown x_star_mode '{other}'"),
    };
    let instance = PhaseRetrievalInstance::<f64>::generate(
        a.n,
        a.m,
        a.kappa,
        a.p_fail,
        a.noise_scale,
        mode,
        a.seed,
    )?;
    save_phase_retrieval(&instance, &a.out, Some(a.seed), Some(mode))?;
    println!("wrote instance to {}", a.out.display());
    Ok(())
}

fn load_config(a: &RunArgs) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(&a.config)
        .with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if !a.alpha0.is_empty() {
        cfg.alpha0_grid = a.alpha0.clone();
    }
    if let Some(k) = a.horizon {
        cfg.horizon = k;
    }
    if let Some(s) = a.seeds {
        cfg.seeds.count = s;
    }
    if let Some(b) = a.base_seed {
        cfg.seeds.base_seed = b;
    }
    if let Some(s) = a.stride {
        cfg.stride = Some(s);
    }
    if let Some(o) = &a.outdir {
        cfg.outdir = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(a: RunArgs, fail_on_divergence: bool) -> Result<u8> {
    let cfg = load_config(&a)?;
    let outcome = harness::run_experiment(&cfg)?;
    let diverged = outcome
        .records
        .iter()
        .filter(|r| r.diverged_at.is_some())
        .count();
    if let Some(outdir) = &cfg.outdir {
        let manifest = harness::emit_outputs(&outcome.records, &outcome.aggregates, outdir)?;
        println!("wrote {} files to {}", manifest.len() + 1, outdir.display());
    } else {
        print!("{}", shb_core::harness::aggregate_csv(&outcome.aggregates));
    }
    println!(
        "{} runs, {} diverged",
        outcome.records.len(),
        diverged
    );
    Ok(if fail_on_divergence && diverged > 0 {
        EXIT_DIVERGED
    } else {
        0
    })
}

fn moreau(a: MoreauArgs) -> Result<()> {
    let problem: PhaseRetrievalInstance<f64> = load_phase_retrieval(&a.instance)?;
    let rho = problem.weak_convexity_bound();
    let lambda = a.lambda.unwrap_or(1.0 / (2.0 * rho));
    let cfg = MoreauConfig::new(lambda, rho, a.inner_iters, a.inner_tol)?;
    let text = fs::read_to_string(&a.points)
        .with_context(|| format!("reading {}", a.points.display()))?;
    println!("row,grad_norm,subproblem_gap_bound");
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let point: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse().with_context(|| format!("bad number '{f}'")))
            .collect::<Result<_>>()?;
        let est = prox_solve(&problem, &point, &cfg)?;
        println!("{},{},{}", i, est.grad_norm, est.subproblem_gap_bound);
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let cfg = load_config(&a.run)?;
    if cfg.moreau.is_none() {
        bail!("report requires a [moreau] section so grad norms are evaluated");
    }
    let theorem = match a.theorem.as_str() {
        "t1" => TheoremId::T1,
        "t2" => TheoremId::T2,
        "t3" => TheoremId::T3,
        other => bail!("unknown theorem '{other}'"),
    };
    cfg.validate()?;
    let problem = harness::build_problem(&cfg.problem)?;
    let outcome = harness::run_experiment(&cfg)?;

    // empirical constants over a ball covering the visited iterates
    let radius = outcome
        .records
        .iter()
        .flat_map(|r| r.rows.iter())
        .map(|row| row.objective)
        .fold(1.0_f64, f64::max)
        .sqrt()
        .max(2.0);
    let region = shb_core::geometry::ConvexFeasibleSet::origin_ball(problem.dimension(), radius)?;
    let consts = estimate_constants(&problem, &region, a.probes, cfg.seeds.base_seed)?;

    let rho = problem.weak_convexity_bound();
    let f_star = problem
        .solution()
        .map(|xs| problem.objective(xs))
        .unwrap_or(0.0);
    let delta = outcome
        .records
        .iter()
        .filter_map(|r| r.rows.first())
        .map(|row| row.objective - f_star)
        .fold(0.0_f64, f64::max);
    let alpha0 = cfg.alpha0_grid[0];
    let lambda = cfg.moreau.and_then(|m| m.lambda).unwrap_or(1.0 / (2.0 * rho));
    let constants = TheoremConstants {
        rho,
        l: consts.l_hat,
        sigma: consts.sigma_hat,
        g: consts.g_hat,
        delta,
        alpha0,
        lambda,
    };
    let rep = harness::bound_check_report(&outcome.records, &constants, theorem, cfg.horizon)?;
    println!(
        "theorem={:?} K={} lhs_mean={} lhs_stderr={} rhs={} pass={}",
        rep.theorem,
        rep.horizon,
        rep.lhs_mean.unwrap(),
        rep.lhs_stderr.unwrap(),
        rep.rhs,
        rep.pass.unwrap()
    );
    print!("{}", shb_core::harness::aggregate_csv(&outcome.aggregates));
    Ok(())
}
