use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cryptosel::config::defaults_reference;
use cryptosel::output::{self, OutputSet};
use cryptosel::rescale::{beta_prime_curve, solve_beta_prime, EcosystemSpec, MomentMethod, PairWeighting};
use cryptosel::seed::SimRng;
use cryptosel::{compare_heterogeneous, run_simulation, run_sweep, BetaPopulationSpec, Error, SimConfig, SweepConfig};
use log::{info, warn};
use rand::SeedableRng;
use serde_json::json;

#[derive(Parser)]
#[command(name = "cryptosel", version, about = "Crypto-asset adoption simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write trajectory, summary, final state, histogram and manifest.
    Simulate(SimArgs),
    /// Phase-diagram sweep over (beta_security, beta_stability).
    Sweep(SweepArgs),
    /// Heterogeneous population against its representative investor.
    CompareHetero(SimArgs),
    /// Match attitudes between two feature ecosystems.
    Rescale(RescaleArgs),
    /// Print a commented configuration file with every default.
    PrintConfigDefaults,
}

/// Overrides applied on top of the config file.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_assets: Option<usize>,
    /// Step budget.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Constant attitude towards returns.
    #[arg(long, allow_hyphen_values = true)]
    beta0: Option<f64>,
    /// Constant attitude towards security.
    #[arg(long, allow_hyphen_values = true)]
    beta1: Option<f64>,
    /// Constant attitude towards stability.
    #[arg(long, allow_hyphen_values = true)]
    beta2: Option<f64>,
    #[arg(long, env = "CRYPTOSEL_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, cfg: &mut SimConfig) {
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.n_assets {
            cfg.n_assets = v;
        }
        if let Some(v) = self.steps {
            cfg.max_steps = v;
        }
        if let Some(v) = self.delta {
            cfg.step.delta = v;
        }
        if let Some(v) = self.beta0 {
            cfg.beta.total_return = BetaPopulationSpec::constant(v);
        }
        if let Some(v) = self.beta1 {
            cfg.beta.security = BetaPopulationSpec::constant(v);
        }
        if let Some(v) = self.beta2 {
            cfg.beta.stability = BetaPopulationSpec::constant(v);
        }
        if let Some(dir) = &self.out_dir {
            cfg.output.dir = dir.clone();
        }
    }
}

#[derive(Args)]
struct SimArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML sweep configuration (`[base]` table plus grids).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta1_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta2_grid: Option<Vec<f64>>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    parallelism: Option<usize>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ecosystem {
    Uniform,
    Triangular,
}

impl Ecosystem {
    fn spec(self) -> EcosystemSpec {
        match self {
            Ecosystem::Uniform => EcosystemSpec::uniform(),
            Ecosystem::Triangular => EcosystemSpec::triangular(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Plain pair sampling.
    MonteCarlo,
    /// Per-class quadrature with without-replacement pair weights.
    Quadrature,
    /// Unnormalised class sum with same-class pair weights.
    Unnormalised,
}

#[derive(Args)]
struct RescaleArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, value_enum, default_value = "triangular")]
    from: Ecosystem,
    #[arg(long, value_enum, default_value = "uniform")]
    to: Ecosystem,
    #[arg(long, value_enum, default_value = "monte-carlo")]
    method: Method,
    /// Monte Carlo pair samples.
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// Quadrature nodes per axis region.
    #[arg(long, default_value_t = 64)]
    nodes: usize,
    /// Market size used by the class-partitioned pair weights.
    #[arg(long, default_value_t = 200)]
    n_assets: usize,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Solve over an evenly spaced grid instead of a single beta: LO,HI,POINTS.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    curve: Option<Vec<f64>>,
    #[arg(long, env = "CRYPTOSEL_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
}

impl RescaleArgs {
    fn method(&self) -> MomentMethod {
        match self.method {
            Method::MonteCarlo => MomentMethod::MonteCarlo { samples: self.samples },
            Method::Quadrature => MomentMethod::ClassQuadrature {
                nodes: self.nodes,
                weighting: PairWeighting::WithoutReplacement { n_assets: self.n_assets },
            },
            Method::Unnormalised => MomentMethod::ClassQuadrature {
                nodes: self.nodes,
                weighting: PairWeighting::Unnormalised { n_assets: self.n_assets },
            },
        }
    }
}

fn read_file(path: &Path) -> cryptosel::Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn load_sim_config(args: &SimArgs) -> cryptosel::Result<SimConfig> {
    let mut cfg = match &args.config {
        Some(path) => SimConfig::from_toml(&read_file(path)?)?,
        None => SimConfig::default(),
    };
    args.overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn simulate(args: &SimArgs) -> cryptosel::Result<()> {
    let cfg = load_sim_config(args)?;
    let result = run_simulation(&cfg)?;
    info!("steps run {}, t* = {:?}", result.steps_run(), result.t_star);
    print_files(&output::write_run(&result, &cfg.output.dir)?);
    Ok(())
}

fn compare(args: &SimArgs) -> cryptosel::Result<()> {
    let cfg = load_sim_config(args)?;
    let cmp = compare_heterogeneous(&cfg)?;
    let m = cmp.realized_means;
    info!("realized means: beta_security {:.4}, beta_stability {:.4}", m.beta_security, m.beta_stability);
    print_files(&output::write_comparison(&cmp, &cfg.output.dir)?);
    Ok(())
}

fn sweep(args: &SweepArgs) -> cryptosel::Result<()> {
    let mut cfg = match &args.config {
        Some(path) => SweepConfig::from_toml(&read_file(path)?)?,
        None => SweepConfig::default(),
    };
    args.overrides.apply(&mut cfg.base);
    if let Some(g) = &args.beta1_grid {
        cfg.beta1_grid = g.clone();
    }
    if let Some(g) = &args.beta2_grid {
        cfg.beta2_grid = g.clone();
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(p) = args.parallelism {
        cfg.parallelism = p;
    }
    cfg.validate()?;
    let cells = run_sweep(&cfg)?;
    let sweep_json = serde_json::to_string(&cfg).map_err(|e| Error::Serialize(e.to_string()))?;
    let manifest = json!({
        "tool": "cryptosel",
        "version": env!("CARGO_PKG_VERSION"),
        "sweep": cfg,
        "cells": cells.iter().map(|c| json!({
            "beta1": c.beta1,
            "beta2": c.beta2,
            "seeds": c.seeds,
            "class_mean_adoption": c.class_mean_adoption,
        })).collect::<Vec<_>>(),
    });
    let mut set = OutputSet::create(&cfg.base.output.dir)?;
    set.write("histogram.csv", &output::sweep_histogram_csv(&cfg.base, &sweep_json, &cells))?;
    set.write("manifest.json", &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"))?;
    print_files(set.files());
    Ok(())
}

fn rescale(args: &RescaleArgs) -> cryptosel::Result<()> {
    let method = args.method();
    let (from, to) = (args.from.spec(), args.to.spec());
    let mut rng = SimRng::seed_from_u64(args.seed);
    let rows = match &args.curve {
        None => vec![solve_beta_prime(args.beta, &from, &to, method, args.tol, &mut rng)?],
        Some(c) => {
            let [lo, hi, points] = c[..] else {
                return Err(Error::Config(format!("--curve takes LO,HI,POINTS, got {c:?}")));
            };
            if !(points >= 2.0 && points.fract() == 0.0 && lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("--curve needs LO < HI and an integer POINTS >= 2, got {c:?}")));
            }
            let n = points as usize;
            let betas: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
            beta_prime_curve(&betas, &from, &to, method, args.tol, &mut rng)?
                .into_iter()
                .filter_map(|r| r.map_err(|e| warn!("{e}")).ok())
                .collect()
        }
    };
    let request = json!({
        "beta": args.beta,
        "from": from,
        "to": to,
        "method": method,
        "tol": args.tol,
        "curve": args.curve,
    });
    for s in &rows {
        println!("beta {} -> beta' {:.6} (residual {:.3e}, {})", s.beta, s.beta_prime, s.residual, s.method.label());
    }
    let mut set = OutputSet::create(&args.out_dir)?;
    set.write("rescale.csv", &output::rescale_csv(args.seed, &request.to_string(), &rows))?;
    print_files(set.files());
    Ok(())
}

fn run(cli: &Cli) -> cryptosel::Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::CompareHetero(a) => compare(a),
        Command::Rescale(a) => rescale(a),
        Command::PrintConfigDefaults => {
            print!("{}", defaults_reference());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
