//! `witsolve` command line: `solve` runs the equation-by-equation solver on a
//! system file, `gen` prints one of the built-in test systems, `list` shows
//! the registered modes, orderings and generators.
//!
//! Exit codes: 0 success (an empty solution set included), 1 input or usage
//! error, 2 numerical anomaly (some path failed, so witness sets may be
//! incomplete). Diagnostics on standard error start with `error: ` or
//! `anomaly: `.

use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use witsolve::generators::{generators, GenParams};
use witsolve::parse::parse_system;
use witsolve::policy::{equation_orderings, stage_policies};
use witsolve::poly::PolySystem;
use witsolve::report::{text_report, JsonReport};
use witsolve::solver::{solve, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_ANOMALY: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "witsolve", version, about = "Witness sets of polynomial systems, one equation at a time")]
struct Cli {
    /// Log solver progress to standard error (-v warnings, -vv stage summaries).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute witness sets for every component of a system.
    Solve(SolveArgs),
    /// Print a built-in system in the input grammar.
    Gen(GenArgs),
    /// List registered modes, equation orderings and generators.
    List,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// System file, or `-` for standard input.
    input: String,
    /// JSON file with a full solver configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// `all` or `nonsingular`.
    #[arg(long)]
    mode: Option<String>,
    /// System file whose solution set is excluded from the output.
    #[arg(long)]
    ignore: Option<PathBuf>,
    /// `given` or `degree`.
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// Write the JSON result to a file, or `-` for standard output.
    #[arg(long)]
    json: Option<String>,
    /// Write the stage table to a file, or `-` for standard output (the
    /// default when neither --json nor --report is given).
    #[arg(long)]
    report: Option<String>,
    /// Add wall-clock columns to the stage table.
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    tol_zero: Option<f64>,
    #[arg(long)]
    tol_dup: Option<f64>,
    #[arg(long)]
    tol_slice: Option<f64>,
    #[arg(long)]
    tol_rank: Option<f64>,
    #[arg(long)]
    tol_res: Option<f64>,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Generator name (see `witsolve list`).
    name: String,
    /// Matrix size of the eigenvalue problem.
    #[arg(long, default_value_t = 6)]
    size: usize,
    #[arg(long, default_value_t = 2)]
    rows: usize,
    #[arg(long, default_value_t = 9)]
    cols: usize,
    /// Number of equations of a random dense system.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Number of unknowns of a random dense system.
    #[arg(long, default_value_t = 2)]
    vars: usize,
    /// Degrees of a random dense system, one per equation or one for all.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    degrees: Vec<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Runs the command line with explicit streams and returns the exit code.
pub fn run<I, S>(argv: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    // clap's rendering already starts with "error: ".
                    let _ = write!(stderr, "{e}");
                    EXIT_INPUT
                }
            };
        }
    };
    init_logging(cli.verbose);
    let result = match cli.command {
        Command::Solve(args) => run_solve(&args, stdin, stdout, stderr),
        Command::Gen(args) => run_gen(&args, stdout),
        Command::List => run_list(stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            EXIT_INPUT
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Error,
        1 => log::LevelFilter::Warn,
        _ => log::LevelFilter::Info,
    };
    // Repeated in-process runs (tests) keep the first logger.
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
}

fn read_source(path: &str, stdin: &mut dyn Read) -> anyhow::Result<String> {
    if path == "-" {
        let mut text = String::new();
        stdin.read_to_string(&mut text).context("reading standard input")?;
        Ok(text)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn load_system(path: &str, stdin: &mut dyn Read) -> anyhow::Result<PolySystem> {
    let text = read_source(path, stdin)?;
    parse_system(&text).with_context(|| format!("parsing {path}"))
}

fn config_from(args: &SolveArgs) -> anyhow::Result<SolverConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing configuration {}", path.display()))?
        }
        None => SolverConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = &args.mode {
        cfg.mode = mode.clone();
    }
    if let Some(order) = &args.order {
        cfg.order = order.clone();
    }
    if let Some(threads) = args.threads {
        cfg.worker_count = threads;
    }
    let t = &mut cfg.tolerances;
    for (flag, slot) in [
        (args.tol_zero, &mut t.zero),
        (args.tol_dup, &mut t.dup),
        (args.tol_slice, &mut t.slice),
        (args.tol_rank, &mut t.rank),
        (args.tol_res, &mut t.res),
    ] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(target: &str, text: &str, stdout: &mut dyn Write) -> anyhow::Result<()> {
    if target == "-" {
        stdout.write_all(text.as_bytes()).context("writing standard output")
    } else {
        fs::write(target, text).with_context(|| format!("writing {target}"))
    }
}

fn run_solve(args: &SolveArgs, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> anyhow::Result<i32> {
    let cfg = config_from(args)?;
    let sys = load_system(&args.input, stdin)?;
    let q = match &args.ignore {
        Some(path) => {
            let path = path.to_string_lossy();
            if path == "-" && args.input == "-" {
                bail!("system and ignore set cannot both come from standard input");
            }
            let q = load_system(&path, stdin)?;
            if q.names() != sys.names() {
                bail!("ignore set declares variables [{}], system declares [{}]", q.names().join(", "), sys.names().join(", "));
            }
            Some(q)
        }
        None => None,
    };
    let out = solve(&sys, q.as_ref(), &cfg)?;

    if let Some(target) = &args.json {
        emit(target, &JsonReport::new(&out, &cfg).to_json(), stdout)?;
    }
    let report_target = args.report.as_deref().or(if args.json.is_none() { Some("-") } else { None });
    if let Some(target) = report_target {
        emit(target, &text_report(&out, &cfg, args.timings), stdout)?;
    }
    let failed = out.failed_paths();
    if failed > 0 {
        let _ = writeln!(stderr, "anomaly: {failed} paths failed; witness sets may be incomplete");
        return Ok(EXIT_ANOMALY);
    }
    Ok(EXIT_OK)
}

fn run_gen(args: &GenArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let params = GenParams {
        size: args.size,
        rows: args.rows,
        cols: args.cols,
        n: args.n,
        vars: args.vars,
        degrees: args.degrees.clone(),
        seed: args.seed,
    };
    let generator = generators().require(&args.name)?;
    let text = generator.generate(&params)?;
    stdout.write_all(text.as_bytes()).context("writing standard output")?;
    Ok(EXIT_OK)
}

fn run_list(stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let mut s = String::new();
    s.push_str("modes:\n");
    let policies = stage_policies();
    for name in policies.names() {
        s.push_str(&format!("  {name}\n"));
    }
    s.push_str("orders:\n");
    for name in equation_orderings().names() {
        s.push_str(&format!("  {name}\n"));
    }
    s.push_str("generators:\n");
    let gens = generators();
    for name in gens.names() {
        let g = gens.get(name).expect("listed name is registered");
        s.push_str(&format!("  {name:<12} {}\n", g.description()));
    }
    stdout.write_all(s.as_bytes()).context("writing standard output")?;
    Ok(EXIT_OK)
}
