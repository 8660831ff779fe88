use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tradegame::artifacts;
use tradegame::config::{parse_kappa_list, Algorithm, EtaSetting, ExperimentConfig};
use tradegame::run_experiment;
use tradegame_core::validate::{validate_suite, Fault, ValidateOptions};
use tradegame_core::{best_response, parse_increments, ActionSpace, GameSpec, Profile, Schedule};

#[derive(Parser)]
#[command(name = "tradegame", version, about = "Position-building trading game experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a κ sweep and write traces, metrics, summary and manifest.
    Run(RunArgs),
    /// Run the verification battery; exits with 2 if a check fails.
    Validate(ValidateArgs),
    /// Best response of one player to schedules read from stdin, one per line.
    Br(BrArgs),
    /// Recompute metrics from a trace.csv.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct GameArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated κ values.
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<String>,
}

impl GameArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                ExperimentConfig::from_toml(&text).with_context(|| format!("in {}", p.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(k) = &self.kappa {
            cfg.kappas = parse_kappa_list(k)?;
        }
        Ok(cfg)
    }

    fn single_kappa(cfg: &ExperimentConfig) -> Result<f64> {
        match cfg.kappas.as_slice() {
            [k] => Ok(*k),
            _ => bail!("pass a single --kappa value"),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    /// A number or one of standard, kalai-vempala, dynamics.
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// ftpl, br_dynamics or swap.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultKind {
    /// Perturb κ by 1/10 in the permanent term.
    PermKappa,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 1_000)]
    dp_instances: usize,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    #[arg(long, value_enum)]
    inject_fault: Option<FaultKind>,
}

#[derive(Args)]
struct BrArgs {
    #[command(flatten)]
    game: GameArgs,
    /// 1-based index of the responding player.
    #[arg(long, default_value_t = 1)]
    player: usize,
    /// Per-step purchase limits; default from the config.
    #[arg(long, allow_hyphen_values = true)]
    lower: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    upper: Option<i64>,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    game: GameArgs,
    /// trace.csv produced by `run` (ftpl or swap).
    #[arg(long)]
    trace: PathBuf,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut cfg = args.game.load()?;
    if let Some(r) = args.rounds {
        cfg.rounds = r;
    }
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    if let Some(e) = &args.eta {
        cfg.eta = e.parse::<EtaSetting>()?;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(a) = &args.algo {
        cfg.algo = a.parse::<Algorithm>()?;
    }
    if let Some(o) = &args.out {
        cfg.out = o.clone();
    }
    let manifest = run_experiment(&cfg)?;
    println!(
        "wrote {} files under {} ({} κ values × {} runs, {})",
        manifest.files.len() + 1,
        cfg.out.display(),
        cfg.kappas.len(),
        cfg.runs,
        cfg.algo.name()
    );
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<bool> {
    let report = validate_suite(&ValidateOptions {
        samples: args.samples,
        dp_instances: args.dp_instances,
        seed: args.seed,
        fault: args.inject_fault.map(|FaultKind::PermKappa| Fault::PermKappa { num: 1, den: 10 }),
    });
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(report.passed())
}

fn cmd_br(args: &BrArgs) -> Result<()> {
    let cfg = args.game.load()?;
    let kappa = GameArgs::single_kappa(&cfg)?;
    let mut rows = Vec::new();
    for line in io::stdin().lock().lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        rows.push(parse_increments(line)?);
    }
    if rows.is_empty() {
        bail!("no schedules on stdin");
    }
    if args.player == 0 || args.player > rows.len() {
        bail!("--player must be in 1..={}", rows.len());
    }
    let horizon = rows[0].len();
    let mut spaces = Vec::with_capacity(rows.len());
    let mut schedules = Vec::with_capacity(rows.len());
    for (i, inc) in rows.into_iter().enumerate() {
        let lower = args.lower.or(cfg.lower.get(i).copied()).unwrap_or(cfg.lower[0]);
        let upper = args.upper.or(cfg.upper.get(i).copied()).unwrap_or(cfg.upper[0]);
        let space = ActionSpace::new(inc.iter().sum(), horizon, lower, upper)?;
        schedules.push(Schedule::new(inc, &space).with_context(|| format!("schedule of player {}", i + 1))?);
        spaces.push(space);
    }
    let spec = GameSpec::new(spaces, kappa)?;
    let profile = Profile::new(&spec, schedules)?;
    let i = args.player - 1;
    let (best, cost) = best_response(&spec.players()[i], &profile, i, kappa)?;
    let mut out = io::stdout().lock();
    writeln!(out, "best_response={best}")?;
    writeln!(out, "cost={cost}")?;
    writeln!(out, "current_cost={}", profile.total_cost(i, kappa)?)?;
    Ok(())
}

fn cmd_metrics(args: &MetricsArgs) -> Result<()> {
    let cfg = args.game.load()?;
    let kappa = GameArgs::single_kappa(&cfg)?;
    let spec = cfg.game(kappa)?;
    let file = std::fs::File::open(&args.trace).with_context(|| format!("opening {}", args.trace.display()))?;
    let histories = artifacts::read_play_trace(io::BufReader::new(file), &spec)?;
    let mut summaries = Vec::with_capacity(histories.len());
    for (run, h) in &histories {
        summaries.push((*run, h.summary()?));
    }
    let rows: Vec<_> = summaries.iter().map(|(r, m)| (*r, kappa, m)).collect();
    match &args.out {
        Some(p) => {
            let f = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            artifacts::write_metrics(io::BufWriter::new(f), &rows)?;
        }
        None => artifacts::write_metrics(io::stdout().lock(), &rows)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Validate(a) => cmd_validate(a),
        Command::Br(a) => cmd_br(a).map(|_| true),
        Command::Metrics(a) => cmd_metrics(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
