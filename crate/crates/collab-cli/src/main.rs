//! `collab`: solve contribution-game instances, reproduce the named
//! experiments, and sweep parameter grids.
//!
//! Exit codes for `run`: 0 on a converged solve, 2 when dynamics did not
//! converge (residuals are still reported), 1 on input errors.

mod experiments;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use collab_core::model::{parse_instance, Instance, QualityProfile};
use collab_core::solvers::{br_dynamics, solve_opt, SolverConfig};
use collab_core::Error;

#[derive(Parser)]
#[command(name = "collab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file: equilibrium, optimum, ratio, diagnostics.
    Run(RunArgs),
    /// Reproduce a named experiment as a CSV table.
    Reproduce(ReproduceArgs),
    /// Sweep the symmetric constant-elasticity family over an (n, alpha) grid.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Cap on best-response rounds.
    #[arg(long = "solver.max-iters", env = "COLLAB_MAX_ITERS", default_value_t = 10_000)]
    max_iters: usize,
    /// Convergence tolerance on the largest per-round coordinate change.
    #[arg(long = "solver.tol", env = "COLLAB_TOL", default_value_t = 1e-8)]
    tol: f64,
    /// Rounds of online learning where an experiment uses it.
    #[arg(long = "solver.horizon", env = "COLLAB_HORIZON", default_value_t = 50_000)]
    horizon: usize,
    /// Allow the golden-section fallback on non-concave sharing rules
    /// (heuristic, no optimality certificate).
    #[arg(long = "solver.fallback", env = "COLLAB_FALLBACK", default_value_t = false)]
    fallback: bool,
}

impl SolverFlags {
    fn config(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            max_iters: self.max_iters,
            profile_tol: self.tol,
            horizon: self.horizon,
            seed,
            allow_nonconcave_fallback: self.fallback,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Instance file (JSON).
    #[arg(long, env = "COLLAB_INSTANCE")]
    instance: PathBuf,
    #[arg(long, env = "COLLAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the result record (JSON) here as well.
    #[arg(long, env = "COLLAB_OUT")]
    out: Option<PathBuf>,
    /// Override the instance's epsilon floor.
    #[arg(long = "epsilon-floor", env = "COLLAB_EPSILON_FLOOR")]
    epsilon_floor: Option<f64>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct ReproduceArgs {
    /// One of: lowerbound, elasticity, linearcost, ranking, softbudget,
    /// nonmonotone, bayes.
    #[arg(long, env = "COLLAB_EXPERIMENT")]
    experiment: String,
    #[arg(long, env = "COLLAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of stdout.
    #[arg(long, env = "COLLAB_OUT")]
    out: Option<PathBuf>,
    /// Player counts, e.g. "2,4,16,100".
    #[arg(long = "n-list")]
    n_list: Option<String>,
    /// Elasticity exponents, e.g. "0.25,0.5,0.75".
    #[arg(long = "alpha-list")]
    alpha_list: Option<String>,
    /// Random cases per parameter point.
    #[arg(long)]
    cases: Option<usize>,
    /// Cost-elasticity offset for the soft-budget experiment.
    #[arg(long)]
    mu: Option<f64>,
    /// Saturation rate of the slow projects in the lower-bound family.
    #[arg(long)]
    beta: Option<f64>,
    /// Saturation rate of the fast project in the lower-bound family.
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct SweepArgs {
    /// Player counts, e.g. "1,2,4".
    #[arg(long = "n-grid")]
    n_grid: String,
    /// Exponent grid: comma list or "start:end:count".
    #[arg(long = "alpha-grid")]
    alpha_grid: String,
    /// Projects per instance.
    #[arg(long, default_value_t = 2)]
    projects: usize,
    #[arg(long, env = "COLLAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "COLLAB_OUT")]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Reproduce(args) => reproduce(args),
        Command::Sweep(args) => sweep(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn load_instance(path: &PathBuf, epsilon_floor: Option<f64>) -> anyhow::Result<Instance> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading instance file {}", path.display()))?;
    let inst = parse_instance(&text)
        .with_context(|| format!("validating instance {}", path.display()))?;
    Ok(match epsilon_floor {
        Some(eps) => inst.with_epsilon_floor(Some(eps)),
        None => inst,
    })
}

fn run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let inst = load_instance(&args.instance, args.epsilon_floor)?;
    let cfg = args.solver.config(args.seed);
    let eq = br_dynamics(&inst, &cfg, None)?;

    // The optimum: exact solver for concave objectives, otherwise the grid
    // oracle when the instance is small enough.
    let opt = match solve_opt(&inst) {
        Ok((_, value)) => Some(value),
        Err(Error::NonConcaveObjective) => {
            collab_core::solvers::brute_force_opt(&inst, 40).ok().map(|(_, v)| v)
        }
        Err(e) => return Err(e.into()),
    };

    println!("instance: {}", args.instance.display());
    println!("players: {}  projects: {}", inst.n_players(), inst.n_projects());
    println!("equilibrium welfare: {:.9}", eq.welfare);
    match opt {
        Some(v) => {
            println!("optimal welfare:     {v:.9}");
            if eq.welfare > 0.0 {
                println!("ratio (OPT/eq):      {:.6}", v / eq.welfare);
            } else {
                println!("ratio (OPT/eq):      inf");
            }
        }
        None => println!("optimal welfare:     unavailable (non-concave, oracle guard)"),
    }
    println!(
        "converged: {} (rounds: {}, max residual best-response gain: {:.3e})",
        eq.converged, eq.iterations, eq.max_gain
    );
    println!("profile:");
    for (k, &(i, j)) in inst.pairs().iter().enumerate() {
        println!(
            "  {:<12} {:<12} {:.9}",
            inst.player(i).id,
            inst.project(j).id,
            eq.profile.values[k]
        );
    }

    if let Some(out) = &args.out {
        let record = result_record(&inst, &eq.profile, &eq, opt);
        fs::write(out, serde_json::to_string_pretty(&record)?)
            .with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(if eq.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn result_record(
    inst: &Instance,
    profile: &QualityProfile,
    eq: &collab_core::solvers::EquilibriumResult,
    opt: Option<f64>,
) -> serde_json::Value {
    let entries: Vec<serde_json::Value> = inst
        .pairs()
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            serde_json::json!({
                "player": inst.player(i).id,
                "project": inst.project(j).id,
                "quality": profile.values[k],
            })
        })
        .collect();
    serde_json::json!({
        "welfare": eq.welfare,
        "opt": opt,
        "ratio": opt.map(|v| if eq.welfare > 0.0 { v / eq.welfare } else { f64::INFINITY }),
        "converged": eq.converged,
        "iterations": eq.iterations,
        "max_gain": eq.max_gain,
        "utilities": eq.utilities,
        "profile": entries,
    })
}

fn reproduce(args: ReproduceArgs) -> anyhow::Result<ExitCode> {
    let csv = experiments::run_experiment(&args)?;
    emit(&args.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let ns = parse_usize_list(&args.n_grid)?;
    let alphas = parse_float_grid(&args.alpha_grid)?;
    let cells = ns.len() * alphas.len();
    if cells > 10_000 {
        bail!("grid has {cells} cells, cap is 10000");
    }
    let cfg = args.solver.config(args.seed);
    let m = args.projects;
    let mut grid = Vec::with_capacity(cells);
    for &n in &ns {
        for &alpha in &alphas {
            grid.push((n, alpha));
        }
    }
    let rows = collab_core::exec::map_indexed(grid.len(), |idx| {
        let (n, alpha) = grid[idx];
        let inst = collab_core::analysis::corpus::uniform_power_instance(n, m, alpha);
        let eq = br_dynamics(&inst, &cfg, None)?;
        let (_, opt) = solve_opt(&inst)?;
        Ok::<String, Error>(format!(
            "{n},{alpha:.6},{m},{:.9},{:.9},{:.6},{}",
            eq.welfare,
            opt,
            opt / eq.welfare,
            eq.converged
        ))
    });
    let mut csv = String::from("n,alpha,projects,eq_welfare,opt_welfare,ratio,converged\n");
    for row in rows {
        csv.push_str(&row?);
        csv.push('\n');
    }
    emit(&args.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn emit(out: &Option<PathBuf>, csv: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, csv)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn parse_usize_list(text: &str) -> anyhow::Result<Vec<usize>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("bad integer `{t}`")))
        .collect()
}

fn parse_float_list(text: &str) -> anyhow::Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number `{t}`")))
        .collect()
}

/// Comma list, or an inclusive range "start:end:count".
fn parse_float_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    if let Some((start, rest)) = text.split_once(':') {
        let (end, count) = rest
            .split_once(':')
            .context("range syntax is start:end:count")?;
        let start: f64 = start.trim().parse().context("bad range start")?;
        let end: f64 = end.trim().parse().context("bad range end")?;
        let count: usize = count.trim().parse().context("bad range count")?;
        if count == 0 {
            return Ok(Vec::new());
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        return Ok((0..count)
            .map(|k| start + (end - start) * k as f64 / (count - 1) as f64)
            .collect());
    }
    parse_float_list(text)
}
