use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use simulband::config::{self, Command, Overrides, SimulateOverrides};
use simulband::run::{exit_code, run};

/// Simultaneous confidence regions for parameter vectors.
#[derive(Parser, Debug)]
#[command(name = "simulband", version)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for Monte Carlo work (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Average causal effects on two outcomes.
    Effects(Common),
    /// Linear model with a binary effect modifier.
    EmmBinary(Common),
    /// Spline effect modification over a grid of modifier values.
    EmmContinuous(Common),
    /// Coverage simulation for the region methods.
    Simulate(SimArgs),
    /// Write a seeded synthetic trial CSV with the default column layout.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 1571)]
    n: usize,
    #[arg(long, default_value_t = config::DEFAULT_SEED)]
    seed: u64,
    /// Make treatment depend on baseline covariates.
    #[arg(long)]
    confounded: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct Shared {
    /// Output directory for result.json, table.csv and figures.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Monte Carlo draws for the sup-t critical value.
    #[arg(long)]
    m: Option<usize>,
    /// Seed; falls back to SIMULBAND_SEED, then the built-in default.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct Common {
    /// Input CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Weight by inverse propensity scores from the configured confounders.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    ipw: Option<bool>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    shared: Shared,
}

fn flags(sub: Sub) -> (Command, Overrides) {
    let shared = |s: Shared, o: &mut Overrides| {
        o.output_dir = s.out;
        o.alpha = s.alpha;
        o.m = s.m;
        o.seed = s.seed;
    };
    let mut o = Overrides::default();
    let command = match sub {
        Sub::Effects(c) => common(c, &mut o, shared, Command::Effects),
        Sub::EmmBinary(c) => common(c, &mut o, shared, Command::EmmBinary),
        Sub::EmmContinuous(c) => common(c, &mut o, shared, Command::EmmContinuous),
        Sub::Synth(_) => unreachable!("handled before configuration"),
        Sub::Simulate(a) => {
            o.simulate = Some(SimulateOverrides { k: a.k, rho: a.rho, n: a.n, reps: a.reps });
            shared(a.shared, &mut o);
            Command::Simulate
        }
    };
    (command, o)
}

fn common(c: Common, o: &mut Overrides, shared: impl Fn(Shared, &mut Overrides), command: Command) -> Command {
    o.data = c.data;
    o.ipw = c.ipw;
    o.grid_size = c.grid_size;
    shared(c.shared, o);
    command
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Sub::Synth(a) = &cli.command {
        return match simulband::ingest::write_synthetic(&a.out, a.n, a.seed, a.confounded) {
            Ok(()) => {
                println!("wrote {}", a.out.display());
                ExitCode::SUCCESS
            }
            Err(err) => {
                eprintln!("error: {err:#}");
                ExitCode::FAILURE
            }
        };
    }
    let result = (|| -> anyhow::Result<simulband::RunOutput> {
        if let Some(n) = cli.threads {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        let file = cli.config.as_deref().map(Overrides::from_file).transpose()?;
        let (command, overrides) = flags(cli.command);
        let env_seed = std::env::var(config::SEED_ENV).ok();
        let cfg = config::resolve(command, file, overrides, env_seed.as_deref())?;
        run(&cfg)
    })();
    match result {
        Ok(out) => {
            for d in out.diagnostics.iter().chain(&out.result.warnings) {
                eprintln!("note: {d}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
