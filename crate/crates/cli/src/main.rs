//! `leaklab` command-line runner.
//!
//! Exit status: 0 when every bound check passes, 1 when a check fails,
//! 2 on configuration or I/O errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use leaklab::attacks::{AttackKind, SearchStrategy};
use leaklab::bounds::{theoretical_bounds, within_greedy_bound};
use leaklab::covering::{coordinate_fixing_cover, exact_min_cover_size, greedy_cover, Cover};
use leaklab::harness::{
    bench_table, emit, emit_json_lines, format_table, run_experiment, write_json_lines,
    write_records, BenchConfig, ClientSpec, ExperimentConfig, OutputFormat, Settings,
};
use leaklab::{LeakageMode, Payload, Scope, SessionShape, SpaceParams};

#[derive(Parser)]
#[command(
    name = "leaklab",
    version,
    about = "Leakage attacks against a Hamming-distance matcher"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one active attack over many sampled secrets.
    Attack(ExperimentArgs),
    /// Run a passive collection attack (accumulation or fault_controlled).
    Accumulate(ExperimentArgs),
    /// Run every leakage scenario and print the complexity table.
    Bench(BenchArgs),
    /// Print the bounds that apply to a space and leakage mode.
    Bounds(BoundsArgs),
    /// Build a ball cover and optionally export its centers.
    Cover(CoverArgs),
}

#[derive(Args, Clone, Copy)]
struct SpaceArgs {
    /// Alphabet size.
    #[arg(long)]
    q: Option<u32>,
    /// Template length.
    #[arg(long)]
    n: Option<usize>,
    /// Acceptance threshold.
    #[arg(long)]
    epsilon: Option<usize>,
}

impl SpaceArgs {
    fn params(self) -> anyhow::Result<SpaceParams> {
        Ok(SpaceParams::new(
            self.q.unwrap_or(2),
            self.n.unwrap_or(12),
            self.epsilon.unwrap_or(3),
        )?)
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long)]
    scope: Option<Scope>,
    #[arg(long)]
    payload: Option<Payload>,
    #[arg(long)]
    attack: Option<AttackKind>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Record file; records go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Rarest coordinate errs with probability n^-alpha.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    session_shape: Option<SessionShape>,
    /// Accept-search strategy of the minimal-leak attack (fixing, greedy).
    #[arg(long)]
    strategy: Option<SearchStrategy>,
    /// Write every oracle interaction as JSON lines to this file.
    #[arg(long)]
    audit: Option<PathBuf>,
    /// Fill the `ms` column with wall time.
    #[arg(long)]
    timing: bool,
}

impl ExperimentArgs {
    fn settings(self) -> anyhow::Result<Settings> {
        let base = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                Settings::parse(&text).with_context(|| format!("in config {}", path.display()))?
            }
            None => Settings::default(),
        };
        let flags = Settings {
            q: self.space.q,
            n: self.space.n,
            epsilon: self.space.epsilon,
            scope: self.scope,
            payload: self.payload,
            attack: self.attack,
            trials: self.trials,
            seed: self.seed,
            format: self.format,
            out: self.out,
            audit: self.audit,
            workers: self.workers,
            alpha: self.alpha,
            session_shape: self.session_shape,
            strategy: self.strategy,
            timing: self.timing.then_some(true),
        };
        Ok(base.overlay(flags))
    }
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// Trials per scenario.
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Rarest-coordinate exponent of the accumulation row.
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    #[arg(long, default_value_t = SessionShape::SingleError)]
    session_shape: SessionShape,
    /// Emit rows as JSON lines instead of a text table.
    #[arg(long)]
    json: bool,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long, default_value_t = Scope::BelowOnly)]
    scope: Scope,
    #[arg(long, default_value_t = Payload::Distance)]
    payload: Payload,
    /// Print a JSON object instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoverStrategy {
    Fixing,
    Greedy,
    /// Minimum size only, by exhaustive search (tiny spaces).
    Exact,
}

#[derive(Args)]
struct CoverArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long, value_enum, default_value_t = CoverStrategy::Greedy)]
    strategy: CoverStrategy,
    /// Export centers, one base-q digit string per line.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Attack(args) => {
            let cfg = args.settings()?.into_config()?;
            if cfg.attack.is_passive() {
                bail!("{} is passive; use the accumulate subcommand", cfg.attack);
            }
            experiment(&cfg)
        }
        Command::Accumulate(args) => {
            let mut settings = args.settings()?;
            settings.attack.get_or_insert(AttackKind::Accumulation);
            let cfg = settings.into_config()?;
            if !cfg.attack.is_passive() {
                bail!(
                    "{} is an active attack; use the attack subcommand",
                    cfg.attack
                );
            }
            experiment(&cfg)
        }
        Command::Bench(args) => bench(args),
        Command::Bounds(args) => {
            let params = args.space.params()?;
            let report = theoretical_bounds(&params, LeakageMode::new(args.scope, args.payload));
            if args.json {
                write_json_lines(std::slice::from_ref(&report), io::stdout().lock())?;
            } else {
                print!("{report}");
            }
            Ok(true)
        }
        Command::Cover(args) => cover(args),
    }
}

fn experiment(cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    let out = run_experiment(cfg)?;
    match &cfg.out {
        Some(path) => emit(&out.records, cfg.format, path)?,
        None => write_records(&out.records, cfg.format, io::stdout().lock())?,
    }
    if let (Some(path), Some(audit)) = (&cfg.audit, &out.audit) {
        emit_json_lines(audit, path)?;
    }
    // Keep stdout clean for the records when they go there.
    if cfg.out.is_some() {
        print!("{}", out.summary);
    } else {
        eprint!("{}", out.summary);
    }
    Ok(out.summary.passed())
}

fn bench(args: BenchArgs) -> anyhow::Result<bool> {
    let cfg = BenchConfig {
        params: args.space.params()?,
        trials: args.trials,
        master_seed: args.seed,
        workers: args.workers,
        client: ClientSpec {
            alpha: Some(args.alpha),
            shape: args.session_shape,
        },
    };
    let rows = bench_table(&cfg)?;
    let text = if args.json {
        let mut buf = Vec::new();
        write_json_lines(&rows, &mut buf)?;
        String::from_utf8(buf)?
    } else {
        format_table(&cfg.params, &rows)
    };
    write_text(args.out.as_deref(), &text)?;
    Ok(rows.iter().all(|r| r.ok))
}

fn cover(args: CoverArgs) -> anyhow::Result<bool> {
    let params = args.space.params()?;
    let bound = theoretical_bounds(&params, LeakageMode::MINIMAL).greedy_cover_bound_f64();
    let built: Cover = match args.strategy {
        CoverStrategy::Exact => {
            if args.out.is_some() {
                bail!("exact search reports a size only; nothing to export");
            }
            let size = exact_min_cover_size(&params)?;
            println!("{params} exact minimum {size} (greedy bound {bound:.4})");
            return Ok(true);
        }
        CoverStrategy::Fixing => coordinate_fixing_cover(&params)?,
        CoverStrategy::Greedy => greedy_cover(&params)?,
    };
    let mut ok = built.is_certified();
    let size = built.len();
    if matches!(args.strategy, CoverStrategy::Greedy) {
        ok &= within_greedy_bound(&params, size);
    }
    if let Some(path) = &args.out {
        write_text(Some(path), &built.to_lines()?)?;
    }
    let summary = format!(
        "{params} {} centers, certified {}, greedy bound {bound:.4}\n",
        size,
        if built.is_certified() { "yes" } else { "no" },
    );
    if args.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
        print!("{}", built.to_lines()?);
    }
    Ok(ok)
}

fn write_text(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(io::stdout().lock().write_all(text.as_bytes())?),
    }
}
