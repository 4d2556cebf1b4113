use std::path::PathBuf;
use std::time::{Instant, SystemTime};

use clap::{Args, Parser, Subcommand};
use cohest_core::dual::{build_problem, solve};
use cohest_core::oracle::{random_instance_with_state, scatter_alpha_beta, ObservableChoice, OracleConfig};
use cohest_core::seeds::derive_seed_path;
use cohest_core::simulation::simulate_werner;
use cohest_core::{PauliString, SolverConfig, SolverStatus};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{exit, CliError, Result};
use crate::output::{fmt_f64, sibling_path, write_csv, RunManifest};
use crate::problem::ProblemFile;
use crate::scenario::ScenarioFile;

/// Default root seed when none is given.
pub const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Debug, Parser)]
#[command(name = "cohest", version, about = "Lower bounds on the relative entropy of coherence")]
pub struct Cli {
    /// Worker threads (overrides COHEST_THREADS).
    #[arg(long, global = true, env = "COHEST_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute beta for one problem file.
    Estimate(EstimateArgs),
    /// Iteration counts on random instances.
    Bench(BenchArgs),
    /// Compare beta with brute-force alpha on random instances.
    OracleScatter(ScatterArgs),
    /// Monte-Carlo Werner-state experiment.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    /// Learning rate.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Stopping tolerance on the gradient norm.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<u64>,
    /// Backtracking step instead of the fixed learning rate.
    #[arg(long)]
    pub line_search: bool,
}

impl SolverFlags {
    fn apply(&self, mut c: SolverConfig) -> SolverConfig {
        if let Some(v) = self.eta {
            c.learning_rate = v;
        }
        if let Some(v) = self.tol {
            c.tolerance = v;
        }
        if let Some(v) = self.max_iters {
            c.max_iters = v;
        }
        if self.line_search {
            c.line_search = true;
        }
        c
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Qubit counts.
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4])]
    pub qubits: Vec<u32>,
    /// Multiplier counts, including the normalization multiplier.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
    pub lambdas: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[arg(long, default_value_t = 500)]
    pub points: usize,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    /// Number of random off-diagonal Pauli observables per instance.
    #[arg(long, conflicts_with = "observables")]
    pub extra: Option<usize>,
    /// Fixed observables for every instance, e.g. `XX` or `XX,YY`.
    #[arg(long, value_delimiter = ',')]
    pub observables: Option<Vec<String>>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Random starts per oracle call.
    #[arg(long)]
    pub restarts: Option<usize>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long, default_value = "oracle_scatter.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub scenario: PathBuf,
    #[arg(long, default_value = "simulate.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct SolverSettings {
    learning_rate: f64,
    tolerance: f64,
    max_iters: u64,
    line_search: bool,
    prob_floor: f64,
    divergence_bound: f64,
}

impl From<&SolverConfig> for SolverSettings {
    fn from(c: &SolverConfig) -> Self {
        Self {
            learning_rate: c.learning_rate,
            tolerance: c.tolerance,
            max_iters: c.max_iters,
            line_search: c.line_search,
            prob_floor: c.prob_floor,
            divergence_bound: c.divergence_bound,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EstimateReport {
    pub beta: f64,
    pub lambda_star: Vec<f64>,
    pub iterations: u64,
    pub grad_norm: f64,
    pub status: String,
    pub primal_constraint_residuals: Vec<f64>,
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Estimate(a) => estimate(&a),
        Command::Bench(a) => bench(&a),
        Command::OracleScatter(a) => oracle_scatter(&a),
        Command::Simulate(a) => simulate(&a),
    }
}

pub fn estimate(args: &EstimateArgs) -> Result<i32> {
    let pf = ProblemFile::read(&args.file)?;
    let record = pf.record()?;
    let config = args.solver.apply(pf.solver_config(&SolverConfig::default()));
    let prob = build_problem(&record, &config)?;
    let res = solve(&prob, &config, None)?;
    let report = EstimateReport {
        beta: res.beta,
        lambda_star: res.multipliers.clone(),
        iterations: res.iterations,
        grad_norm: res.grad_norm,
        status: res.status.to_string(),
        primal_constraint_residuals: res.residuals.clone(),
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if let Some(out) = &args.out {
        std::fs::write(out, text + "\n").map_err(|e| CliError::io(out.display().to_string(), e))?;
    }
    match res.status {
        SolverStatus::Converged => Ok(exit::OK),
        SolverStatus::Diverged => {
            eprintln!("error: multipliers diverged; the record is likely infeasible");
            Ok(exit::NON_CONVERGENCE)
        }
        SolverStatus::MaxIters => {
            eprintln!("error: iteration cap reached before the gradient tolerance");
            Ok(exit::NON_CONVERGENCE)
        }
    }
}

#[derive(Debug, Serialize)]
struct BenchConfig {
    qubits: Vec<u32>,
    lambdas: Vec<usize>,
    trials: usize,
    solver: SolverSettings,
}

struct BenchTrial {
    n_qubits: u32,
    lambdas: usize,
    trial: usize,
    seed: u64,
    iterations: u64,
    beta: f64,
    status: SolverStatus,
}

pub fn bench(args: &BenchArgs) -> Result<i32> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let config = args.solver.apply(SolverConfig::default());
    config.validate()?;
    if args.trials == 0 {
        return Err(CliError::input("--trials", "must be at least 1"));
    }
    for &n in &args.qubits {
        if !(1..=10).contains(&n) {
            return Err(CliError::input("--qubits", format!("{n} outside [1, 10]")));
        }
        let pool = (1usize << (2 * n)) - (1usize << n);
        if let Some(&l) = args.lambdas.iter().find(|&&l| l == 0 || l - 1 > pool) {
            return Err(CliError::input(
                "--lambdas",
                format!("{l} multipliers impossible with {n} qubits (allowed 1..={})", pool + 1),
            ));
        }
    }
    let jobs: Vec<(u32, usize, usize)> = args
        .qubits
        .iter()
        .flat_map(|&n| args.lambdas.iter().flat_map(move |&l| (0..args.trials).map(move |t| (n, l, t))))
        .collect();
    let trials: Vec<BenchTrial> = jobs
        .par_iter()
        .map(|&(n, l, t)| -> Result<BenchTrial> {
            let seed = derive_seed_path(args.seed, &[n as u64, l as u64, t as u64]);
            let (_, _, record) = random_instance_with_state(1 << n, l - 1, seed)?;
            let res = solve(&build_problem(&record, &config)?, &config, None)?;
            Ok(BenchTrial {
                n_qubits: n,
                lambdas: l,
                trial: t,
                seed,
                iterations: res.iterations,
                beta: res.beta,
                status: res.status,
            })
        })
        .collect::<Result<_>>()?;

    let rows: Vec<Vec<String>> = trials
        .iter()
        .map(|t| {
            vec![
                t.n_qubits.to_string(),
                t.lambdas.to_string(),
                t.trial.to_string(),
                t.seed.to_string(),
                t.iterations.to_string(),
                fmt_f64(t.beta),
                t.status.to_string(),
            ]
        })
        .collect();
    write_csv(&args.out, &["N", "lambda_count", "trial", "seed", "T", "beta", "status"], &rows)?;

    let mut summary_rows = Vec::new();
    let mut excluded = Vec::new();
    for &n in &args.qubits {
        for &l in &args.lambdas {
            let cell: Vec<&BenchTrial> = trials.iter().filter(|t| t.n_qubits == n && t.lambdas == l).collect();
            let ts: Vec<f64> =
                cell.iter().filter(|t| t.status == SolverStatus::Converged).map(|t| t.iterations as f64).collect();
            let (mean, std) = mean_std(&ts);
            if ts.len() < cell.len() {
                log::warn!("N = {n}, |lambda| = {l}: {} non-converged trials excluded", cell.len() - ts.len());
                excluded.push(serde_json::json!({"N": n, "lambda_count": l, "excluded": cell.len() - ts.len()}));
            }
            summary_rows.push(vec![n.to_string(), l.to_string(), fmt_f64(mean), fmt_f64(std)]);
        }
    }
    let summary_path = sibling_path(&args.out, "summary");
    write_csv(&summary_path, &["N", "lambda_count", "mean_T", "std_T"], &summary_rows)?;

    let cfg = BenchConfig {
        qubits: args.qubits.clone(),
        lambdas: args.lambdas.clone(),
        trials: args.trials,
        solver: (&config).into(),
    };
    let elapsed = clock.elapsed();
    let mut m = RunManifest::new(&cfg, Some(args.seed), started, elapsed);
    m.summary = serde_json::json!({ "excluded": excluded });
    m.write_for(&args.out)?;
    RunManifest::new(&cfg, Some(args.seed), started, elapsed).write_for(&summary_path)?;
    Ok(exit::OK)
}

/// Sample mean and standard deviation (`n - 1` denominator).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = if n > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
    (mean, std)
}

#[derive(Debug, Serialize)]
struct ScatterConfig {
    points: usize,
    dim: usize,
    observables: String,
    restarts: usize,
    solver: SolverSettings,
}

pub fn oracle_scatter(args: &ScatterArgs) -> Result<i32> {
    let (summary, failed) = oracle_scatter_files(args)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    if failed > 0 {
        return Err(CliError::Oracle { failed, total: args.points });
    }
    Ok(exit::OK)
}

/// Runs the scatter and writes the CSV and manifest; returns the summary and the failure count.
pub fn oracle_scatter_files(args: &ScatterArgs) -> Result<(serde_json::Value, usize)> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let choice = match (&args.observables, args.extra) {
        (Some(labels), _) => {
            let paulis = labels
                .iter()
                .map(|l| l.parse::<PauliString>().map_err(|e| CliError::input("--observables", e)))
                .collect::<Result<Vec<_>>>()?;
            ObservableChoice::Fixed(paulis)
        }
        (None, n) => ObservableChoice::Random { n_extra: n.unwrap_or(1) },
    };
    let solver = args.solver.apply(SolverConfig::default());
    let mut oracle = OracleConfig::default();
    if let Some(r) = args.restarts {
        oracle.restarts = r;
    }
    let report = scatter_alpha_beta(args.points, args.dim, &choice, args.seed, &oracle, &solver)
        .map_err(|e| CliError::input("<arguments>", e))?;
    let rows: Vec<Vec<String>> = report
        .points
        .iter()
        .map(|p| vec![p.instance_seed.to_string(), fmt_f64(p.alpha), fmt_f64(p.beta), fmt_f64(p.gap())])
        .collect();
    write_csv(&args.out, &["seed", "alpha", "beta", "gap"], &rows)?;

    let s = &report.summary;
    let summary = serde_json::json!({
        "points": s.n_points,
        "failed": s.n_failed,
        "mean_gap": s.mean_gap,
        "max_gap": s.max_gap,
        "min_gap": s.min_gap,
        "violations": s.violations,
        "failures": report.failures.iter().map(|f| serde_json::json!({
            "index": f.index, "seed": f.instance_seed, "reason": f.reason
        })).collect::<Vec<_>>(),
    });
    let cfg = ScatterConfig {
        points: args.points,
        dim: args.dim,
        observables: match &choice {
            ObservableChoice::Random { n_extra } => format!("random:{n_extra}"),
            ObservableChoice::Fixed(ps) => ps.iter().map(|p| p.label()).collect::<Vec<_>>().join(","),
        },
        restarts: oracle.restarts,
        solver: (&solver).into(),
    };
    let mut m = RunManifest::new(&cfg, Some(args.seed), started, clock.elapsed());
    m.summary = summary.clone();
    m.write_for(&args.out)?;
    Ok((summary, report.failures.len()))
}

#[derive(Debug, Serialize)]
struct SimulateConfig {
    p_values: Vec<f64>,
    observable_sets: Vec<String>,
    shots: u64,
    repetitions: usize,
    noiseless: bool,
    warm_start: bool,
    solver: SolverSettings,
}

pub fn simulate(args: &SimulateArgs) -> Result<i32> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let sc = ScenarioFile::read(&args.scenario)?.scenario()?;
    let rows = simulate_werner(&sc)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.p),
                r.obs_set.clone(),
                fmt_f64(r.beta_mean),
                fmt_f64(r.beta_std),
                fmt_f64(r.rec_qst_mean),
                fmt_f64(r.rec_qst_std),
                fmt_f64(r.rec_ideal),
            ]
        })
        .collect();
    write_csv(
        &args.out,
        &["p", "obs_set", "beta_mean", "beta_std", "rec_qst_mean", "rec_qst_std", "rec_ideal"],
        &csv_rows,
    )?;
    let cfg = SimulateConfig {
        p_values: sc.p_values.clone(),
        observable_sets: sc.observable_sets.iter().map(|s| cohest_core::simulation::set_label(s)).collect(),
        shots: sc.shots,
        repetitions: sc.repetitions,
        noiseless: sc.noiseless,
        warm_start: sc.warm_start,
        solver: (&sc.solver).into(),
    };
    let mut m = RunManifest::new(&cfg, Some(sc.seed), started, clock.elapsed());
    m.summary = serde_json::json!(rows
        .iter()
        .map(|r| serde_json::json!({
            "p": r.p,
            "obs_set": r.obs_set,
            "beta_noiseless": r.beta_noiseless,
            "diverged": r.diverged,
            "max_iters": r.max_iters,
        }))
        .collect::<Vec<_>>());
    m.write_for(&args.out)?;
    Ok(exit::OK)
}
