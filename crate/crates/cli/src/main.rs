use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use energylab::cli::{run, Command, Format, RunConfig};
use energylab::SetOp;

/// Exact energy, decomposition and incidence experiments on finite sets.
///
/// Sets are given as a path to a file with one value per line, an inline
/// list like `{1,2,4}`, or a sized family spec like `ap:0:1:64`,
/// `gp:1:2:32`, `convex:square:50` or `rand:1000000:0x2a:40`.
#[derive(Parser, Debug)]
#[command(name = "energylab", version)]
struct Cli {
    /// JSON file whose keys are run-config fields; replaces the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Args, Debug)]
struct Common {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    /// Comparison tolerance for decimal inputs.
    #[arg(long)]
    tau: Option<f64>,
    /// Disable the parallel kernels.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Print the elements of a family, one per line.
    Gen {
        /// Family spec, with or without a trailing `:n`.
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Compute E_k(A, B) for the chosen operation.
    Energy {
        #[arg(long)]
        set: String,
        /// Second set; defaults to the first.
        #[arg(long)]
        with: Option<String>,
        #[arg(long)]
        k: Option<String>,
        #[arg(long, value_parser = parse_op)]
        op: Option<SetOp>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the regularising decomposition and write a certificate.
    Decomp {
        #[arg(long = "A")]
        a: String,
        #[arg(long = "V")]
        v: Option<String>,
        #[arg(long, value_parser = parse_op)]
        op: Option<SetOp>,
        #[arg(long)]
        k: Option<String>,
        #[arg(long)]
        c1: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-check every inequality recorded in a certificate.
    Verify {
        cert: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate one claim, or balance two exponent bounds with `--claim balance`.
    Check {
        #[arg(long)]
        claim: String,
        #[command(flatten)]
        sets: Box<SetArgs>,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        g: Option<String>,
        #[arg(long)]
        k: Option<String>,
        #[arg(long)]
        c1: Option<String>,
        #[arg(long)]
        t: Option<u64>,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long, value_parser = parse_op)]
        qr_op: Option<SetOp>,
        #[arg(long, value_parser = parse_op)]
        sign: Option<SetOp>,
        /// First bound `e_const:e_energy`; either part may be negative.
        #[arg(long, allow_hyphen_values = true)]
        b1: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        b2: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a claim over increasing sizes and fit the log-margin slope.
    Scan {
        #[arg(long)]
        claim: String,
        #[arg(long)]
        family: String,
        #[arg(long)]
        family_b: Option<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        g: Option<String>,
        #[arg(long)]
        k: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Count point-line incidences from files, or run the line-energy experiment on --A/--B.
    Incidence {
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long)]
        lines: Option<PathBuf>,
        #[arg(long = "A")]
        a: Option<String>,
        #[arg(long = "B")]
        b: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct SetArgs {
    #[arg(long = "A")]
    a: Option<String>,
    #[arg(long = "B")]
    b: Option<String>,
    #[arg(long = "C")]
    c: Option<String>,
    #[arg(long = "Q")]
    q: Option<String>,
    #[arg(long = "R")]
    r: Option<String>,
    #[arg(long = "U")]
    u: Option<String>,
    #[arg(long = "V")]
    v: Option<String>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => Err(format!("unknown format {s:?}, expected csv or json")),
    }
}

fn parse_op(s: &str) -> Result<SetOp, String> {
    s.parse::<SetOp>().map_err(|e| e.to_string())
}

fn config_from(sub: Sub) -> RunConfig {
    fn base(command: Command, common: Common) -> RunConfig {
        let mut cfg = RunConfig::new(command);
        cfg.out = common.out;
        cfg.format = common.format;
        cfg.tau = common.tau;
        cfg.sequential = common.sequential;
        cfg
    }
    match sub {
        Sub::Gen { family, n, common } => {
            let mut cfg = base(Command::Gen, common);
            cfg.family = Some(family);
            cfg.n = n;
            cfg
        }
        Sub::Energy { set, with, k, op, common } => {
            let mut cfg = base(Command::Energy, common);
            cfg.set = Some(set);
            cfg.with = with;
            cfg.k = k;
            cfg.op = op;
            cfg
        }
        Sub::Decomp { a, v, op, k, c1, common } => {
            let mut cfg = base(Command::Decomp, common);
            cfg.a = Some(a);
            cfg.v = v;
            cfg.op = op;
            cfg.k = k;
            cfg.c1 = c1;
            cfg
        }
        Sub::Verify { cert, common } => {
            let mut cfg = base(Command::Verify, common);
            cfg.cert = Some(cert);
            cfg
        }
        Sub::Check { claim, sets, f, g, k, c1, t, lambda, qr_op, sign, b1, b2, common } => {
            let mut cfg = base(Command::Check, common);
            cfg.claim = Some(claim);
            cfg.a = sets.a;
            cfg.b = sets.b;
            cfg.c = sets.c;
            cfg.q = sets.q;
            cfg.r = sets.r;
            cfg.u = sets.u;
            cfg.v = sets.v;
            cfg.f = f;
            cfg.g = g;
            cfg.k = k;
            cfg.c1 = c1;
            cfg.t = t;
            cfg.lambda = lambda;
            cfg.qr_op = qr_op;
            cfg.sign = sign;
            cfg.b1 = b1;
            cfg.b2 = b2;
            cfg
        }
        Sub::Scan { claim, family, family_b, sizes, f, g, k, common } => {
            let mut cfg = base(Command::Scan, common);
            cfg.claim = Some(claim);
            cfg.family = Some(family);
            cfg.family_b = family_b;
            cfg.sizes = Some(sizes);
            cfg.f = f;
            cfg.g = g;
            cfg.k = k;
            cfg
        }
        Sub::Incidence { points, lines, a, b, common } => {
            let mut cfg = base(Command::Incidence, common);
            cfg.points = points;
            cfg.lines = lines;
            cfg.a = a;
            cfg.b = b;
            cfg
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("ENERGYLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("ENERGYLAB_THREADS must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        bail!("ENERGYLAB_THREADS must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("cannot size the worker pool")?;
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() -> Result<()> {
    Ok(())
}

fn execute(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let cfg = match (cli.config, cli.command) {
        (Some(path), None) => RunConfig::from_file(&path)?,
        (None, Some(sub)) => config_from(sub),
        (Some(_), Some(_)) => bail!("--config replaces the subcommand; give one or the other"),
        (None, None) => bail!("nothing to do: give a subcommand or --config (see --help)"),
    };
    log::debug!("running {cfg:?}");
    let out = run(&cfg)?;
    std::io::stdout().write_all(out.stdout.as_bytes())?;
    Ok(out.exact_ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
