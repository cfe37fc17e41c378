//! `treealign`: correlation detection in random trees and sparse graph alignment.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use commands::{render, Report};
use config::{resolve, EigenCheck, Validate, SEED_ENV};

const EXIT_CONFIG: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_STATISTICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "treealign", version, about = "Correlation detection in random trees and sparse graph alignment")]
struct Cli {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exit with status 4 when a built-in statistical check fails.
    #[arg(long, global = true)]
    acceptance: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Table of A_n, or A_{d,n} with --depth.
    Enumerate(EnumerateArgs),
    /// Estimate of Otter's constant from the ratios A_n/A_{n+1}.
    Otter(OtterArgs),
    /// Growth rate of matching weights (null, correlated or shifted model).
    Gamma(GammaArgs),
    /// Monte Carlo KL divergence against depth for several s.
    KlCurve(KlCurveArgs),
    /// Monte Carlo cyclic moments against their closed form.
    Cyclic(CyclicArgs),
    /// Eigenbasis checks: orthogonality, decomposition, mixed moments, covariance, Gaussian KL.
    Eigencheck(EigencheckArgs),
    /// Type-I error and power of the one-sided likelihood-ratio test.
    LrTest(LrTestArgs),
    /// Moments of the centred cross-count statistic Z_S.
    Zstat(ZstatArgs),
    /// NTMA or NTMA-2 on correlated Erdős–Rényi graphs.
    Align(AlignArgs),
}

#[derive(Args, Serialize)]
struct EnumerateArgs {
    #[arg(long)]
    max_n: Option<usize>,
    /// Restrict to trees of depth at most this.
    #[arg(long)]
    depth: Option<u32>,
}

#[derive(Args, Serialize)]
struct OtterArgs {
    #[arg(long)]
    max_n: Option<usize>,
}

#[derive(Args, Serialize)]
struct GammaArgs {
    /// null, correlated or shifted
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    delta: Option<u32>,
    #[arg(long)]
    d_min: Option<u32>,
    #[arg(long)]
    d_max: Option<u32>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct KlCurveArgs {
    #[arg(long)]
    lambda: Option<f64>,
    /// Comma-separated correlation values.
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<f64>>,
    /// Depths as a..b (inclusive) or a,b,c.
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct CyclicArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<u32>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    series_terms: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct EigencheckArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    d: Option<u32>,
    /// Largest index size kept in the basis.
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<EigenCheck>>,
    #[arg(long)]
    support_cut: Option<f64>,
    #[arg(long)]
    ell_max: Option<u32>,
    #[arg(long)]
    pair_size: Option<usize>,
    /// Comma-separated tree encodings for the mixed moment, e.g. "(()),(())".
    #[arg(long, value_delimiter = ',')]
    indices: Option<Vec<String>>,
    #[arg(long)]
    mixed_cut: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct LrTestArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    trials: Option<usize>,
    /// A positive threshold, or C2_pow_1_16 for C_{d,2}^{1/16}.
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct ZstatArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Event as JSON; defaults to both root degrees ≥ --min-degree.
    #[arg(long)]
    event: Option<String>,
    #[arg(long)]
    min_degree: Option<u32>,
    #[arg(long)]
    moment4_mu: Option<f64>,
    #[arg(long)]
    moment4_draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct AlignArgs {
    /// ntma or ntma2
    #[arg(long)]
    algorithm: Option<String>,
    /// Comma-separated graph sizes.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Independent graph pairs per size.
    #[arg(long)]
    reps: Option<u32>,
    #[arg(long)]
    node_budget: Option<usize>,
    /// Directory for per-run alignment CSVs.
    #[arg(long)]
    pairs_dir: Option<String>,
    /// Path for the JSON run summary.
    #[arg(long)]
    summary: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Config(Vec<String>),
    Checks(Vec<String>),
    Library(treealign::Error),
    Io(String),
}

impl From<treealign::Error> for Failure {
    fn from(e: treealign::Error) -> Self {
        Failure::Library(e)
    }
}

fn flags<A: Serialize>(args: &A) -> std::result::Result<Value, Failure> {
    let mut v = serde_json::to_value(args).expect("flag structs serialize");
    // Numeric thresholds arrive as text alongside named rules.
    if let Some(b) = v.get("beta").and_then(Value::as_str) {
        if let Ok(x) = b.parse::<f64>() {
            v["beta"] = json!(x);
        }
    }
    if let Some(e) = v.get("event").and_then(Value::as_str) {
        let parsed = serde_json::from_str::<Value>(e).map_err(|err| Failure::Config(vec![format!("--event is not JSON: {err}")]))?;
        v["event"] = parsed;
    }
    Ok(v)
}

fn load<C: DeserializeOwned + Validate + Serialize, A: Serialize>(
    cli: &Cli,
    args: &A,
) -> std::result::Result<C, Failure> {
    let env = std::env::var(SEED_ENV).ok();
    resolve(cli.config.as_deref(), flags(args)?, env.as_deref()).map_err(Failure::Config)
}

fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Config(vec!["threads must be at least 1".into()]));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Io(format!("cannot start thread pool: {e}")))?;
    }
    let (prov, report): (Value, Report) = match &cli.command {
        Command::Enumerate(a) => {
            let c: config::EnumerateConfig = load(cli, a)?;
            (commands::provenance("enumerate", &c), commands::enumerate(&c)?)
        }
        Command::Otter(a) => {
            let c: config::OtterConfig = load(cli, a)?;
            (commands::provenance("otter", &c), commands::otter(&c)?)
        }
        Command::Gamma(a) => {
            let c: config::GammaConfig = load(cli, a)?;
            (commands::provenance("gamma", &c), commands::gamma(&c)?)
        }
        Command::KlCurve(a) => {
            let c: config::KlCurveConfig = load(cli, a)?;
            (commands::provenance("kl-curve", &c), commands::kl(&c)?)
        }
        Command::Cyclic(a) => {
            let c: config::CyclicConfig = load(cli, a)?;
            (commands::provenance("cyclic", &c), commands::cyclic(&c)?)
        }
        Command::Eigencheck(a) => {
            let c: config::EigencheckConfig = load(cli, a)?;
            (commands::provenance("eigencheck", &c), commands::eigencheck(&c)?)
        }
        Command::LrTest(a) => {
            let c: config::LrTestConfig = load(cli, a)?;
            (commands::provenance("lr-test", &c), commands::lr_test(&c)?)
        }
        Command::Zstat(a) => {
            let c: config::ZstatConfig = load(cli, a)?;
            (commands::provenance("zstat", &c), commands::zstat(&c)?)
        }
        Command::Align(a) => {
            let c: config::AlignConfig = load(cli, a)?;
            let prov = commands::provenance("align", &c);
            let report = commands::align(&c, &prov)?;
            (prov, report)
        }
    };
    write(cli.out.as_deref(), &render(&prov, &report.body))?;
    for (path, text) in &report.extra {
        write(Some(path), text)?;
    }
    if cli.acceptance && !report.failures.is_empty() {
        return Err(Failure::Checks(report.failures));
    }
    Ok(())
}

fn write(path: Option<&Path>, text: &str) -> std::result::Result<(), Failure> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
            }
            std::fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(v)) => {
            eprintln!("{}", json!({ "error": "config", "violations": v }));
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Library(e)) => {
            use treealign::Error;
            let (kind, code) = match &e {
                Error::Resource(_) => ("resource", EXIT_RESOURCE),
                Error::Statistical(_) => ("statistical", EXIT_STATISTICAL),
                Error::Domain(_) | Error::Structural(_) => ("config", EXIT_CONFIG),
            };
            eprintln!("{}", json!({ "error": kind, "message": e.to_string() }));
            ExitCode::from(code)
        }
        Err(Failure::Checks(v)) => {
            eprintln!("{}", json!({ "error": "statistical", "failures": v }));
            ExitCode::from(EXIT_STATISTICAL)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("{}", json!({ "error": "io", "message": msg }));
            ExitCode::FAILURE
        }
    }
}
