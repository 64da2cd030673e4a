use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polyrl_lab::chain_stats::{self, ChainStatsParams, ModelKind};
use polyrl_lab::config::{Environment, ExperimentConfig, Method};
use polyrl_lab::experiment::{self, TrajectoryRow};
use polyrl_lab::{csvio, render, sweep, LabError, Result};

#[derive(Parser)]
#[command(name = "polyrl", version, about = "Persistent exploration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate every seed, writing metrics and optional traces.
    Run(RunArgs),
    /// Run the theta x sigma_sq x beta grid from the config's [sweep] table.
    Sweep(RunArgs),
    /// Monte Carlo statistics of chain ensembles.
    ChainStats(ChainArgs),
    /// Draw a trajectory CSV as SVG.
    Render(RenderArgs),
    /// Greedy rollouts of saved weights.
    Eval(EvalArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces the configured seed list; repeat for several seeds.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    episodes: Option<u64>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Also record trajectories and draw one SVG per seed.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long, value_enum, default_value = "fjc")]
    model: ModelKind,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 100)]
    n_bonds: usize,
    #[arg(long, default_value_t = 1.0)]
    b0: f64,
    #[arg(long, default_value_t = 0.2)]
    theta: f64,
    #[arg(long, default_value_t = 10_000)]
    chains: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest correlation lag (default: min(150, n_bonds - 1)).
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long, default_value = "chain_stats")]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    trajectory: PathBuf,
    /// Config describing the layout (default: nested chambers).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shade visited cells of this size.
    #[arg(long)]
    coverage_cell: Option<f64>,
    /// Only draw this episode.
    #[arg(long)]
    episode: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    weights: PathBuf,
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long)]
    episodes: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn apply_overrides(cfg: &mut ExperimentConfig, a: &RunArgs) {
    if !a.seeds.is_empty() {
        cfg.run.seeds = a.seeds.clone();
    }
    if let Some(o) = &a.out {
        cfg.run.out_dir = o.clone();
    }
    if let Some(n) = a.episodes {
        cfg.run.episodes = n;
    }
    if let Some(m) = a.method {
        cfg.exploration.method = m;
    }
    if a.svg {
        cfg.run.trajectories = true;
    }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    apply_overrides(&mut cfg, &a);
    let env = cfg.validate()?;
    let runs = experiment::run_experiment(&cfg)?;
    let dir = &cfg.run.out_dir;
    experiment::write_outputs(&cfg, &runs, dir)?;
    if let (true, Environment::Nav(spec)) = (a.svg, &env) {
        for r in &runs {
            let svg = render::render_svg(&r.trajectory, spec, Some(cfg.run.coverage_cell));
            csvio::write_atomic(&dir.join(format!("trajectory_seed{}.svg", r.seed)), svg.as_bytes())?;
        }
    }
    for r in &runs {
        let goals = r.metrics.iter().filter(|m| m.reached_goal).count();
        let last = r.metrics.last();
        println!(
            "seed {}: {} | episodes reaching goal {} | last eval return {} | coverage {}",
            r.seed,
            r.status.as_str(),
            goals,
            last.and_then(|m| m.eval_return).map_or("-".into(), |v| v.to_string()),
            last.and_then(|m| m.coverage).map_or("-".into(), |v| format!("{v:.4}")),
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_sweep(a: RunArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    apply_overrides(&mut cfg, &a);
    let dir = cfg.run.out_dir.clone();
    let rows = sweep::sweep(&cfg, Some(&dir))?;
    for r in &rows {
        println!(
            "point {}: theta {} sigma_sq {} beta {} | eval {:?} | coverage {:?} | failed {}",
            r.point, r.theta, r.sigma_sq, r.beta, r.eval_return_mean, r.coverage_mean, r.failed
        );
    }
    println!("wrote {}", dir.join("sweep.csv").display());
    Ok(())
}

fn cmd_chain_stats(a: ChainArgs) -> Result<()> {
    let p = ChainStatsParams {
        model: a.model,
        dim: a.dim,
        n_bonds: a.n_bonds,
        b0: a.b0,
        theta: a.theta,
        n_chains: a.chains,
        seed: a.seed,
        max_lag: a.max_lag.unwrap_or(150.min(a.n_bonds.saturating_sub(1))),
    };
    let report = chain_stats::chain_stats(&p)?;
    chain_stats::write_report(&report, &a.out)?;
    for q in &report.quantities {
        let reference = q.reference.map_or("-".into(), |r| r.to_string());
        println!("{:<20} {:>14.6} ± {:<10.3e} reference {}", q.quantity, q.value, q.se, reference);
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_render(a: RenderArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let spec = match cfg.environment.build()? {
        Environment::Nav(s) => s,
        Environment::PointMass(_) => {
            return Err(LabError::Config("render needs a navigation task".into()))
        }
    };
    let mut rows: Vec<TrajectoryRow> = csvio::read_csv(&a.trajectory)?;
    if let Some(ep) = a.episode {
        rows.retain(|r| r.episode == ep);
    }
    if let Some(c) = a.coverage_cell {
        if !(c > 0.0) {
            return Err(LabError::Config("coverage cell must be > 0".into()));
        }
    }
    let svg = render::render_svg(&rows, &spec, a.coverage_cell);
    let out = a.out.unwrap_or_else(|| a.trajectory.with_extension("svg"));
    csvio::write_atomic(&out, svg.as_bytes())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let weights = experiment::read_weights(&a.weights)?;
    let seeds = if a.seeds.is_empty() { vec![0] } else { a.seeds.clone() };
    let episodes = a.episodes.unwrap_or(cfg.run.eval_episodes.max(1));
    let mut rows = Vec::new();
    for s in seeds {
        let r = experiment::eval_weights(&cfg, weights.clone(), s, episodes)?;
        let mean = r.iter().map(|x| x.ret).sum::<f64>() / r.len().max(1) as f64;
        println!("seed {s}: mean greedy return {mean} over {} episodes", r.len());
        rows.extend(r);
    }
    if let Some(dir) = a.out {
        let p = dir.join("eval.csv");
        csvio::write_csv(&p, experiment::EVAL_HEADER, &rows)?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("POLYRL_LOG", "warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::ChainStats(a) => cmd_chain_stats(a),
        Command::Render(a) => cmd_render(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
