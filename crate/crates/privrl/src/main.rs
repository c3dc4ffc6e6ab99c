use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use privrl::env::{write_env, BehaviorSpec, EnvSpec};
use privrl::format::{write_dataset, LedgerRecord, RunReport};
use privrl::output::{read_csv_file, write_csv_file, write_svg_file};
use privrl::sweep::{data_seed, noise_seed, run_sweep, AlgKind, AlgSpec, ExperimentConfig, Mode, SweepContext};

#[derive(Parser)]
#[command(name = "privrl", version, about = "Differentially private offline RL experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an environment file (JSON).
    GenEnv {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one learner on one dataset and report its score and diagnostics.
    Run(RunArgs),
    /// Run a full grid from a TOML config and write CSV (and optionally SVG).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Master seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        /// CSV output; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Record wall-clock runtimes (makes the CSV non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Plot a sweep CSV as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "suboptimality vs episodes")]
        title: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvKind {
    BinaryAction,
    RandomTabular,
}

#[derive(Args)]
struct EnvArgs {
    #[arg(long, value_enum, default_value = "binary-action")]
    env: EnvKind,
    /// Load the environment from a JSON file instead.
    #[arg(long, conflicts_with = "env")]
    env_file: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    #[arg(long, default_value_t = 3)]
    states: usize,
    #[arg(long, default_value_t = 2)]
    actions: usize,
    /// Seed of the environment parameters.
    #[arg(long, default_value_t = 0)]
    env_seed: u64,
}

impl EnvArgs {
    fn spec(&self) -> EnvSpec {
        if let Some(path) = &self.env_file {
            return EnvSpec::File { path: path.clone() };
        }
        match self.env {
            EnvKind::BinaryAction => EnvSpec::BinaryAction { horizon: self.horizon, seed: self.env_seed },
            EnvKind::RandomTabular => EnvSpec::RandomTabular {
                states: self.states,
                actions: self.actions,
                horizon: self.horizon,
                seed: self.env_seed,
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Theory,
    Empirical,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    env: EnvArgs,
    /// dp-apvi, apvi, dp-vapvi, vapvi or pevi.
    #[arg(long)]
    alg: String,
    /// Privacy budget (rho, or epsilon with --laplace).
    #[arg(long)]
    rho: Option<f64>,
    /// Number of trajectories.
    #[arg(long)]
    k: usize,
    /// Master seed for data and noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Behavior policy: action-0 probability for the binary-action
    /// environment; ignored elsewhere (uniform).
    #[arg(long)]
    p: Option<f64>,
    /// Mix the optimal policy with uniform at this rate instead.
    #[arg(long)]
    eps_optimal: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    penalty: Option<f64>,
    #[arg(long)]
    laplace: bool,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    c_d: Option<f64>,
    #[arg(long)]
    split_data: bool,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Report path (JSON); stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the sampled dataset as CSV.
    #[arg(long)]
    dataset: Option<PathBuf>,
}

fn run_one(args: &RunArgs) -> Result<()> {
    let alg = AlgKind::parse(&args.alg).with_context(|| format!("unknown algorithm {:?}", args.alg))?;
    let env_spec = args.env.spec();
    let behavior = match (args.eps_optimal, args.p) {
        (Some(eps), _) => BehaviorSpec::EpsilonOptimal { eps },
        (None, Some(p)) => BehaviorSpec::BinaryAction { p },
        (None, None) => BehaviorSpec::default_for(&env_spec),
    };
    let budget = match (alg.is_private(), args.rho) {
        (true, Some(r)) => Some(r),
        (true, None) => bail!("{} needs --rho", alg.name()),
        (false, _) => None,
    };
    let spec = AlgSpec {
        delta: args.delta,
        c1: args.c1,
        c2: args.c2,
        penalty: args.penalty,
        laplace: args.laplace,
        lambda: args.lambda,
        c: args.c,
        c_d: args.c_d,
        split_data: args.split_data,
        mode: args.mode.map(|m| match m {
            ModeArg::Theory => Mode::Theory,
            ModeArg::Empirical => Mode::Empirical,
        }),
        ..AlgSpec::new(alg)
    };
    let ctx = SweepContext::new(&env_spec, behavior, spec.mode == Some(Mode::Theory))?;
    let dseed = data_seed(args.seed, args.k, 0);
    let data = ctx.sample(args.k, dseed)?;
    if let Some(path) = &args.dataset {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_dataset(&data, std::io::BufWriter::new(file))?;
    }
    let learned = ctx.learn(&spec, budget, &data, noise_seed(dseed, alg, budget))?;
    if learned.diagnostics.get("lambda_exceeds_kappa").is_some() {
        eprintln!("warning: lambda >= kappa; the pessimism guarantee assumes lambda < kappa");
    }
    let report = RunReport {
        alg: alg.name().into(),
        env: ctx.env_name.clone(),
        horizon: ctx.mdp.horizon(),
        episodes: args.k,
        rho: budget,
        seed: args.seed,
        subopt: ctx.suboptimality(&learned)?,
        policy: RunReport::policy_actions(&learned),
        scalars: learned.diagnostics.scalars.clone(),
        eigen_clamps: learned.diagnostics.eigen_clamps,
        ledger: LedgerRecord::from(&learned.diagnostics.ledger),
    };
    let text = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenEnv { env, out } => {
            let built = env.spec().build()?;
            write_env(&built, &out)?;
        }
        Command::Run(args) => run_one(&args)?,
        Command::Sweep { config, seed, out, svg, jobs, timing } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = ExperimentConfig::from_toml(&text)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            cfg.csv = out.or(cfg.csv);
            cfg.svg = svg.or(cfg.svg);
            cfg.jobs = jobs.or(cfg.jobs);
            cfg.timing |= timing;
            let result = run_sweep(&cfg)?;
            for e in &result.errors {
                eprintln!("error: {e}");
            }
            match &cfg.csv {
                Some(path) => write_csv_file(&result.rows, path)?,
                None => privrl::output::write_csv(&result.rows, std::io::stdout().lock())?,
            }
            if let Some(path) = &cfg.svg {
                write_svg_file(&result.rows, &cfg.env.name(), path)?;
            }
        }
        Command::Plot { input, out, title } => {
            let rows = read_csv_file(&input)?;
            write_svg_file(&rows, &title, &out)?;
        }
    }
    Ok(())
}
