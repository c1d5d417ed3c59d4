use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pdpsgd::config::ExperimentConfig;
use pdpsgd::error::{Error, Result};
use pdpsgd::experiment::{run_experiment, run_sweep, write_experiment, write_sweep, SweepKind};
use pdpsgd::output::output_paths;
use pdpsgd_core::accountant::{default_orders, integer_orders};
use pdpsgd_core::calibration::{get_noise_multiplier, AccountingHistory, CalibrationOptions};
use pdpsgd_core::data::{generate_epsilons, group_counts, group_levels};
use pdpsgd_core::EpsilonShape;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Personalized differentially private SGD experiments.
#[derive(Parser)]
#[command(name = "pdpsgd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration over several seeds.
    Run(RunArgs),
    /// Repeat a run over values of skew, weight or interval.
    Sweep(SweepArgs),
    /// Find the noise multiplier for a target budget.
    Calibrate(CalibrateArgs),
    /// Print a generated budget distribution.
    Epsilons(EpsilonArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds trained in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    /// skew, weight or interval.
    #[arg(long)]
    sweep: String,
    /// Comma-separated values; defaults depend on the sweep.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Vec<f64>,
    #[command(flatten)]
    run: RunArgs,
}

/// Values given here replace those from the configuration file.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long, value_name = "VALUE")]
    algorithm: Option<String>,
    #[arg(long, value_name = "VALUE")]
    dataset: Option<String>,
    #[arg(long, value_name = "VALUE")]
    images: Option<String>,
    #[arg(long, value_name = "VALUE")]
    labels: Option<String>,
    #[arg(long, value_name = "VALUE")]
    synthetic_n: Option<String>,
    #[arg(long, value_name = "VALUE")]
    synthetic_dim: Option<String>,
    #[arg(long, value_name = "VALUE")]
    synthetic_classes: Option<String>,
    #[arg(long, value_name = "VALUE")]
    separation: Option<String>,
    #[arg(long, value_name = "VALUE")]
    train_size: Option<String>,
    #[arg(long, value_name = "VALUE")]
    data_seed: Option<String>,
    #[arg(long, value_name = "VALUE")]
    eps_lo: Option<String>,
    #[arg(long, value_name = "VALUE")]
    eps_hi: Option<String>,
    #[arg(long, value_name = "VALUE")]
    skew: Option<String>,
    #[arg(long, value_name = "VALUE")]
    groups: Option<String>,
    #[arg(long, value_name = "VALUE")]
    c1: Option<String>,
    #[arg(long, value_name = "VALUE")]
    c2: Option<String>,
    #[arg(long, value_name = "VALUE")]
    dpsgd_epsilon: Option<String>,
    #[arg(long, value_name = "VALUE")]
    w1: Option<String>,
    #[arg(long, value_name = "VALUE")]
    w2: Option<String>,
    #[arg(long, value_name = "VALUE")]
    learning_rate: Option<String>,
    #[arg(long, value_name = "VALUE")]
    clip_norm: Option<String>,
    #[arg(long, value_name = "VALUE")]
    batch_size: Option<String>,
    #[arg(long, value_name = "VALUE")]
    rounds: Option<String>,
    #[arg(long, value_name = "VALUE")]
    epochs: Option<String>,
    #[arg(long, value_name = "VALUE")]
    delta: Option<String>,
    #[arg(long, value_name = "VALUE")]
    tolerance: Option<String>,
    #[arg(long, value_name = "VALUE")]
    grid_points: Option<String>,
    #[arg(long, value_name = "VALUE")]
    r_max: Option<String>,
    #[arg(long, value_name = "VALUE")]
    hidden: Option<String>,
    #[arg(long, value_name = "VALUE")]
    adapdp_noise: Option<String>,
    #[arg(long, value_name = "VALUE")]
    max_steps: Option<String>,
    #[arg(long, value_name = "VALUE")]
    seeds: Option<String>,
    #[arg(long, value_name = "VALUE")]
    seed: Option<String>,
    #[arg(long, value_name = "VALUE")]
    output: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("algorithm", &self.algorithm),
            ("dataset", &self.dataset),
            ("images", &self.images),
            ("labels", &self.labels),
            ("synthetic-n", &self.synthetic_n),
            ("synthetic-dim", &self.synthetic_dim),
            ("synthetic-classes", &self.synthetic_classes),
            ("separation", &self.separation),
            ("train-size", &self.train_size),
            ("data-seed", &self.data_seed),
            ("eps-lo", &self.eps_lo),
            ("eps-hi", &self.eps_hi),
            ("skew", &self.skew),
            ("groups", &self.groups),
            ("c1", &self.c1),
            ("c2", &self.c2),
            ("dpsgd-epsilon", &self.dpsgd_epsilon),
            ("w1", &self.w1),
            ("w2", &self.w2),
            ("learning-rate", &self.learning_rate),
            ("clip-norm", &self.clip_norm),
            ("batch-size", &self.batch_size),
            ("rounds", &self.rounds),
            ("epochs", &self.epochs),
            ("delta", &self.delta),
            ("tolerance", &self.tolerance),
            ("grid-points", &self.grid_points),
            ("r-max", &self.r_max),
            ("hidden", &self.hidden),
            ("adapdp-noise", &self.adapdp_noise),
            ("max-steps", &self.max_steps),
            ("seeds", &self.seeds),
            ("seed", &self.seed),
            ("output", &self.output),
        ]
    }

    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        for (k, v) in self.pairs() {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        Ok(())
    }
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    #[arg(long)]
    sample_rate: f64,
    #[arg(long)]
    steps: u64,
    #[arg(long, default_value_t = 0.01)]
    tolerance: f64,
    /// Earlier phases as `sigma:rate:steps`; repeatable.
    #[arg(long)]
    history: Vec<String>,
    /// Integer orders 2..=64 instead of the default grid.
    #[arg(long)]
    integer_orders: bool,
}

#[derive(Args)]
struct EpsilonArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    skew: f64,
    #[arg(long, default_value_t = 0.5)]
    eps_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_hi: f64,
    #[arg(long, default_value_t = 20)]
    groups: usize,
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c2: Option<f64>,
    /// Shuffle the assignment with this seed (falls back to PDPSGD_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Print group levels and counts instead of one budget per line.
    #[arg(long)]
    counts: bool,
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    args.overrides.apply(&mut cfg)?;
    if args.jobs == 0 {
        return Err(Error::Usage("jobs: must be at least 1".into()));
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = load_config(&args)?;
    let result = run_experiment(&cfg, args.jobs)?;
    write_experiment(&result, &cfg.output)?;
    let s = &result.summary;
    let (csv, json) = output_paths(&cfg.output);
    println!(
        "{}: test_acc {:.4} ± {:.4} over {} seeds, mean iterations {:.0}, guarantees {}",
        s.algorithm,
        s.test_acc_mean,
        s.test_acc_std,
        s.runs.len() - s.failed_runs,
        s.iterations_mean,
        if s.all_guarantees_ok { "ok" } else { "VIOLATED" }
    );
    println!("wrote {} and {}", csv.display(), json.display());
    for r in s.runs.iter().filter(|r| r.error.is_some()) {
        eprintln!("seed {} failed: {}", r.seed, r.error.as_deref().unwrap_or(""));
    }
    if !s.all_guarantees_ok {
        return Err(Error::Guarantee("a run's ledger reports a violated budget".into()));
    }
    if s.failed_runs > 0 {
        return Err(Error::Io(format!("{} of {} seeds failed", s.failed_runs, s.runs.len())));
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let kind = SweepKind::parse(&args.sweep)?;
    let cfg = load_config(&args.run)?;
    let values = if args.values.is_empty() { kind.default_values() } else { args.values };
    let result = run_sweep(&cfg, kind, &values, args.run.jobs)?;
    write_sweep(&result, &cfg.output)?;
    let mut failed = 0;
    for c in &result.cells {
        match (&c.summary, &c.error) {
            (Some(s), _) => println!(
                "{}={}: test_acc {:.4} ± {:.4}, mean iterations {:.0}, guarantees {}",
                kind.name(),
                c.value,
                s.test_acc_mean,
                s.test_acc_std,
                s.iterations_mean,
                if s.all_guarantees_ok { "ok" } else { "VIOLATED" }
            ),
            (None, e) => {
                failed += 1;
                eprintln!("{}={} failed: {}", kind.name(), c.value, e.as_deref().unwrap_or(""));
            }
        }
        if let Some(s) = &c.summary {
            failed += usize::from(s.failed_runs > 0);
        }
    }
    if !result.all_guarantees_ok() {
        return Err(Error::Guarantee("a sweep cell reports a violated budget".into()));
    }
    if failed > 0 {
        return Err(Error::Io(format!("{failed} sweep cells had failures")));
    }
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    let orders = if args.integer_orders { integer_orders(2, 64) } else { default_orders() };
    let mut history = AccountingHistory::new(&orders)?;
    for h in &args.history {
        let parts: Vec<&str> = h.split(':').collect();
        let bad = || Error::Usage(format!("history: expected sigma:rate:steps, got `{h}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let sigma: f64 = parts[0].parse().map_err(|_| bad())?;
        let rate: f64 = parts[1].parse().map_err(|_| bad())?;
        let steps: u64 = parts[2].parse().map_err(|_| bad())?;
        history.push(sigma, rate, steps).map_err(|e| Error::Usage(format!("history: {e}")))?;
    }
    let options = CalibrationOptions {
        tolerance: args.tolerance,
        ..CalibrationOptions::default()
    };
    let c = get_noise_multiplier(args.epsilon, args.delta, args.sample_rate, args.steps, &history, &options)
        .map_err(|e| match e {
            pdpsgd_core::Error::InvalidArgument(m) => Error::Usage(m),
            other => Error::Core(other),
        })?;
    println!("noise_multiplier={}", c.noise_multiplier);
    println!("epsilon={}", c.epsilon);
    Ok(())
}

fn epsilons(args: EpsilonArgs) -> Result<()> {
    let base = EpsilonShape::for_skew(args.skew);
    let shape = EpsilonShape {
        k: args.skew,
        c1: args.c1.unwrap_or(base.c1),
        c2: args.c2.unwrap_or(base.c2),
    };
    let usage = |e: pdpsgd_core::Error| match e {
        pdpsgd_core::Error::InvalidArgument(m) | pdpsgd_core::Error::InvalidParameter(m) => Error::Usage(m),
        other => Error::Core(other),
    };
    if args.counts {
        let levels = group_levels(args.eps_lo, args.eps_hi, args.groups).map_err(usage)?;
        let counts = group_counts(args.n, shape, args.eps_lo, args.eps_hi, args.groups).map_err(usage)?;
        println!("epsilon,count");
        for (e, c) in levels.iter().zip(counts) {
            println!("{e},{c}");
        }
        return Ok(());
    }
    let mut eps = generate_epsilons(args.n, shape, args.eps_lo, args.eps_hi, args.groups).map_err(usage)?;
    let seed = match args.seed {
        Some(s) => Some(s),
        None => match std::env::var("PDPSGD_SEED") {
            Ok(v) => Some(v.trim().parse().map_err(|_| Error::Usage(format!("PDPSGD_SEED: cannot parse `{v}`")))?),
            Err(_) => None,
        },
    };
    if let Some(s) = seed {
        eps.shuffle(&mut ChaCha8Rng::seed_from_u64(s));
    }
    for e in eps {
        println!("{e}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Epsilons(a) => epsilons(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
