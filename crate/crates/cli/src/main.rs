//! `weightlab`: generate instances, run check suites, render reports.
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage or input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use weightlab_core::instance::{GenOptions, GroupSpec, Instance};
use weightlab_core::report::{Environment, SuiteReport};
use weightlab_core::suite::{run_all, select, threads_from_env, Context, Tolerances};

const DEFAULT_SEED: u64 = 7;

#[derive(Parser)]
#[command(name = "weightlab", version, about = "Weight theory on finite-dimensional C*-algebras, checked numerically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a deterministic instance file.
    Gen {
        /// Block sizes of the algebra, e.g. 2,3 for M_2 ⊕ M_3.
        #[arg(long, value_delimiter = ',', required = true)]
        blocks: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Full-rank densities; otherwise block ranks are drawn at random.
        #[arg(long)]
        faithful: bool,
        /// Block sizes of a tensor partner algebra.
        #[arg(long, value_delimiter = ',')]
        partner: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t = Group::None)]
        group: Group,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run check suites on instance files (the reference instance when none are given).
    Run {
        instances: Vec<PathBuf>,
        /// Comma-separated suites: gns, kms, modular, tomita, slice, tensor, hullx, integrate, all.
        #[arg(long, value_delimiter = ',', default_value = "all")]
        suite: Vec<String>,
        /// One tolerance for every check, replacing the per-class defaults.
        #[arg(long)]
        tol: Option<f64>,
        /// Write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write the markdown report here.
        #[arg(long)]
        md: Option<PathBuf>,
        /// Seed of the reference instance.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Worker threads; overrides WEIGHTLAB_THREADS.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Render a JSON report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Group {
    None,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Md,
    Json,
}

/// Usage or input problem; maps to exit code 2.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

/// Blocks `3,3`, faithful, partner `2,2`: the largest desk-scale instance.
fn reference_instance(seed: u64) -> Result<Instance, InputError> {
    Ok(Instance::generate(&GenOptions {
        blocks: vec![3, 3],
        seed,
        faithful: true,
        partner: Some(vec![2, 2]),
        group: GroupSpec::None,
    })?)
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), InputError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| InputError(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Context, InputError> {
    let text = fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    let inst = Instance::from_json(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    Ok(Context::new(path.display().to_string(), inst)?)
}

fn execute(cli: Cli) -> Result<bool, InputError> {
    match cli.command {
        Command::Gen { blocks, seed, faithful, partner, group, out } => {
            let group = match group {
                Group::None => GroupSpec::None,
                Group::Random => GroupSpec::Random,
            };
            let inst = Instance::generate(&GenOptions { blocks, seed, faithful, partner, group })?;
            write_or_print(out.as_deref(), &inst.to_json())?;
            Ok(true)
        }
        Command::Run { instances, suite, tol, json, md, seed, threads } => {
            if let Some(t) = tol {
                if !(t.is_finite() && t > 0.0) {
                    return Err(InputError(format!("--tol must be a positive number, got {t}")));
                }
            }
            let checks = select(&suite)?;
            let contexts = if instances.is_empty() {
                vec![Context::new(format!("reference(seed={seed})"), reference_instance(seed)?)?]
            } else {
                instances.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?
            };
            let tolerances = tol.map_or_else(Tolerances::default, Tolerances::uniform);
            let threads = threads.or_else(threads_from_env);
            let start = Instant::now();
            let records = run_all(&contexts, &checks, &tolerances, threads);
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let env = Environment::current(threads.unwrap_or_else(rayon_threads));
            let report = SuiteReport::new(contexts[0].seed(), suite, env, records, elapsed);
            if let Some(p) = &json {
                write_or_print(Some(p), &report.to_json())?;
            }
            if let Some(p) = &md {
                write_or_print(Some(p), &report.to_markdown())?;
            }
            for r in report.records.iter().filter(|r| r.status == weightlab_core::report::Status::Fail) {
                let dev = r.max_deviation.map_or("-".into(), |d| format!("{d:.3e}"));
                let note = r.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default();
                println!("FAIL {} [{}] on {}: deviation {dev} > {:.0e}, seed {}{note}", r.id, r.anchor, r.instance, r.tolerance, r.seed);
            }
            let c = report.counts;
            println!("{} checks: {} passed, {} failed, {} skipped in {:.0} ms", c.total, c.passed, c.failed, c.skipped, elapsed);
            Ok(report.passed())
        }
        Command::Report { input, format } => {
            let text = fs::read_to_string(&input).map_err(|e| InputError(format!("{}: {e}", input.display())))?;
            let report = SuiteReport::from_json(&text)?;
            match format {
                Format::Md => print!("{}", report.to_markdown()),
                Format::Json => print!("{}", report.to_json()),
            }
            Ok(true)
        }
    }
}

fn rayon_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(InputError(msg)) => {
            eprintln!("weightlab: {msg}");
            ExitCode::from(2)
        }
    }
}
