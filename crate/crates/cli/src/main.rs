//! `ipp`: private interior points, threshold release and learning, lower-bound
//! attacks, and privacy audits from the command line.
//!
//! Worker threads follow `RAYON_NUM_THREADS`.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use ipp_core::attacks::attack::{attack_mechanism, AttackConfig, ExactMedianWords, WordMechanism};
use ipp_core::attacks::fpc::Pirate;
use ipp_core::audit::{audit_named, AUDIT_MECHANISMS};
use ipp_core::bench::{run_benchmark, BenchSpec};
use ipp_core::interior_point::{InteriorPointSolver, RecPrefix};
use ipp_core::io::{read_dataset, read_labeled};
use ipp_core::learning::{empirical_learner, ErrorReport, ThresholdLearner};
use ipp_core::release::{AccuracyParams, Thresh, Thresh2, ThresholdReleaser};
use ipp_core::{Dataset, Element, OrderedDomain, RandomSource, WideElement};

#[derive(Parser)]
#[command(name = "ipp", version, about = "Differentially private interior points and thresholds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Private interior point of a dataset.
    Solve(SolveArgs),
    /// Private answers to all threshold queries.
    #[command(subcommand)]
    Release(ReleaseCommand),
    /// Private proper learning.
    #[command(subcommand)]
    Learn(LearnCommand),
    /// Lower-bound attacks.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Empirical privacy audits.
    #[command(subcommand)]
    Audit(AuditCommand),
    /// Run a benchmark described by a JSON spec.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Bits per element.
    #[arg(long)]
    width: u32,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    beta: f64,
    /// One element per line, decimal or 0x-prefixed hex.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run even when the input is smaller than the guaranteed size.
    #[arg(long)]
    allow_undersized: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Print JSON with recursion metadata.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReleaseArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    alpha: f64,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// CSV with header threshold,answer (the default).
    #[arg(long)]
    csv: bool,
}

#[derive(Subcommand)]
enum ReleaseCommand {
    /// Block-partition release with a tree mechanism over block representatives.
    Thresh(ReleaseArgs),
    /// Approximate quantiles with tree-correlated block boundaries.
    Thresh2(ReleaseArgs),
}

#[derive(Subcommand)]
enum LearnCommand {
    /// Learn a threshold from `value,label` lines.
    Threshold {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: f64,
    },
}

#[derive(Subcommand)]
enum AttackCommand {
    /// Trace a pirate coalition of all users but the last.
    Fpc {
        #[arg(long)]
        users: usize,
        #[arg(long, default_value_t = 0.05)]
        xi: f64,
        /// min, max, median, random, midpoint, coordinate_median or exact_median.
        #[arg(long, default_value = "median")]
        pirate: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-trial CSV (trial,feasible,accused) instead of a JSON summary.
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Subcommand)]
enum AuditCommand {
    /// Estimate the privacy loss of a named mechanism on a neighboring pair.
    Eps {
        #[arg(long)]
        mech: String,
        #[arg(long, default_value_t = 4)]
        width: u32,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn load<E: Element>(c: &Common) -> Result<Dataset<E>> {
    Ok(read_dataset(OrderedDomain::new(c.width)?, open(&c.input)?)?)
}

fn solve<E: Element>(args: &SolveArgs) -> Result<()> {
    let c = &args.common;
    let data = load::<E>(c)?;
    let solver = RecPrefix::new(c.beta, c.eps, c.delta)?.allow_undersized(c.allow_undersized);
    let out = solver.run(&data, &mut RandomSource::seed_from_u64(c.seed))?;
    if args.json {
        let meta = json!({
            "point": out.point.to_string(),
            "depth": out.trace.depth(),
            "budget": InteriorPointSolver::<E>::budget(&solver),
            "level_params": out.trace.params,
            "levels": out.trace.levels,
        });
        println!("{}", serde_json::to_string_pretty(&meta)?);
    } else {
        println!("{}", out.point);
    }
    Ok(())
}

fn release<E: Element>(cmd: &ReleaseCommand) -> Result<()> {
    let (args, quantiles) = match cmd {
        ReleaseCommand::Thresh(a) => (a, false),
        ReleaseCommand::Thresh2(a) => (a, true),
    };
    let c = &args.common;
    let data = load::<E>(c)?;
    let acc = AccuracyParams::new(args.alpha, c.beta)?;
    let mut rng = RandomSource::seed_from_u64(c.seed);
    let (points, budget, report): (Vec<(String, f64)>, _, serde_json::Value) = if quantiles {
        let mech = Thresh2::new(acc, c.eps, c.delta)?.allow_undersized(c.allow_undersized);
        let out = mech.run(&data, &mut rng)?;
        let n = data.len().max(1) as f64;
        let points = out
            .quantiles
            .iter()
            .zip(&out.report.boundaries)
            .map(|(q, &t)| (q.to_string(), t as f64 / n))
            .collect();
        (points, mech.budget::<E>(), serde_json::to_value(&out.report)?)
    } else {
        let mech = Thresh::new(acc, c.eps, c.delta)?.allow_undersized(c.allow_undersized);
        let out = mech.run(&data, &mut rng)?;
        let points = out.cdf.breakpoints().iter().map(|t| t.to_string()).zip(out.cdf.values().iter().copied()).collect();
        (points, ThresholdReleaser::<E>::budget(&mech), serde_json::to_value(&out.report)?)
    };
    let stdout = io::stdout();
    if args.json {
        let rows: Vec<_> = points.iter().map(|(t, a)| json!({"threshold": t, "answer": a})).collect();
        let doc = json!({"budget": budget, "answers": rows, "diagnostics": report});
        writeln!(stdout.lock(), "{}", serde_json::to_string_pretty(&doc)?)?;
    } else {
        let mut w = stdout.lock();
        writeln!(w, "threshold,answer")?;
        for (t, a) in points {
            writeln!(w, "{t},{a}")?;
        }
    }
    Ok(())
}

fn learn<E: Element>(c: &Common, alpha: f64) -> Result<()> {
    let data = read_labeled::<E, _>(OrderedDomain::new(c.width)?, open(&c.input)?)?;
    let learner = empirical_learner(alpha, c.beta, c.eps, c.delta)?.allow_undersized(c.allow_undersized);
    let h = learner.learn(&data, &mut RandomSource::seed_from_u64(c.seed))?;
    let report = ErrorReport::evaluate(&h, &data, None);
    let doc = json!({
        "cutoff": h.cutoff.to_string(),
        "report": report,
        "budget": ThresholdLearner::<E>::budget(&learner),
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn by_width<F, G>(width: u32, narrow: F, wide: G) -> Result<()>
where
    F: FnOnce() -> Result<()>,
    G: FnOnce() -> Result<()>,
{
    if width <= 64 {
        narrow()
    } else {
        wide()
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(args) => by_width(args.common.width, || solve::<u64>(&args), || solve::<WideElement>(&args)),
        Command::Release(cmd) => {
            let width = match &cmd {
                ReleaseCommand::Thresh(a) | ReleaseCommand::Thresh2(a) => a.common.width,
            };
            by_width(width, || release::<u64>(&cmd), || release::<WideElement>(&cmd))
        }
        Command::Learn(LearnCommand::Threshold { common, alpha }) => {
            by_width(common.width, || learn::<u64>(&common, alpha), || learn::<WideElement>(&common, alpha))
        }
        Command::Attack(AttackCommand::Fpc { users, xi, pirate, trials, seed, csv }) => {
            let mech: Box<dyn WordMechanism> = match pirate.as_str() {
                "exact_median" => Box::new(ExactMedianWords),
                name => Box::new(Pirate::parse(name)?),
            };
            let report = attack_mechanism(mech.as_ref(), &AttackConfig { users, xi, trials, seed })?;
            if csv {
                report.write_csv(io::stdout().lock())?;
            } else {
                let doc = json!({
                    "mechanism": report.mechanism,
                    "users": users,
                    "xi": xi,
                    "trials": trials,
                    "feasible_rate": report.feasible_rate(),
                    "trace_rate": report.trace_rate(),
                    "failure_rate": report.failure_rate(),
                    "completeness_failures": report.completeness_failures(),
                    "accusation_rates": report.accusation_rates(),
                    "non_member_rate": report.non_member_rate(),
                });
                println!("{}", serde_json::to_string_pretty(&doc)?);
            }
            Ok(())
        }
        Command::Audit(AuditCommand::Eps { mech, width, trials, eps, delta, seed }) => {
            let report = audit_named(&mech, width, eps, delta, trials, seed)
                .with_context(|| format!("known mechanisms: {}", AUDIT_MECHANISMS.join(", ")))?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Bench { spec, out } => {
            let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let result = run_benchmark(&BenchSpec::from_json(&text)?)?;
            result.write_csv(File::create(&out).with_context(|| format!("creating {}", out.display()))?)?;
            eprintln!("wrote {} rows to {}", result.rows.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> std::process::ExitCode {
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
