use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mapcones::bipartite::MatrixJson;
use mapcones::certify::{classify, ClassifyOpts, SeesawOpts};
use mapcones::fuzz::{run_suite, FuzzOpts, Suite};
use mapcones::maps::from_kraus;
use mapcones::witness::{linspace, threshold_scan, to_csv, Family};
use mapcones::{Error, KrausSet, MapRep};
use serde::Deserialize;

/// Classify linear maps on matrix algebras within the positive-map cone
/// hierarchy, scan state and map families for detection thresholds, and run
/// seeded property batteries.
#[derive(Parser, Debug)]
#[command(name = "mapcones", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// JSON config with any of: seed, restarts, max_iters, eps_conv, eps_neg, tol, crosscheck, out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed (default 42).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// See-saw restarts per certification (default 20).
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Eigenvalue tolerance for PSD decisions and detector firing (default 1e-9).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a map or Choi matrix read from a JSON file.
    ///
    /// Accepted inputs: a superoperator ({"repr": "super", ...}), a Kraus
    /// family ({"kraus": [...]}), or any other matrix, which is read as a
    /// Choi matrix.
    Classify {
        input: PathBuf,
        /// Re-derive k-positivity violations through a k-dimensional projection.
        #[arg(long)]
        crosscheck: bool,
    },
    /// Scan a family over a parameter grid and write CSV.
    Scan {
        /// reduction:D, isotropic:D or werner.
        #[arg(long)]
        family: String,
        /// Schmidt-rank level (ignored for werner).
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// lo:hi:steps
        #[arg(long)]
        grid: String,
    },
    /// Run a seeded invariant suite and print a JSON summary.
    Fuzz {
        /// duality, composition, bijection, adjoint or characterization.
        suite: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    restarts: Option<usize>,
    max_iters: Option<usize>,
    eps_conv: Option<f64>,
    eps_neg: Option<f64>,
    tol: Option<f64>,
    crosscheck: Option<bool>,
    out: Option<PathBuf>,
}

#[derive(Debug)]
struct Config {
    seesaw: SeesawOpts,
    tol: f64,
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Parse(String),
    Invariant(String),
    FuzzFailed,
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Invariant(_) => 3,
            Failure::FuzzFailed => 4,
            Failure::Io(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_)
            | Error::BadFamily(_)
            | Error::BadParam(_)
            | Error::BadK { .. }
            | Error::BadRank { .. }
            | Error::DimMismatch { .. }
            | Error::MissingDims
            | Error::EmptyList => Failure::Parse(e.to_string()),
            _ => Failure::Invariant(e.to_string()),
        }
    }
}

fn parse_error(context: &str, e: impl std::fmt::Display) -> Failure {
    Failure::Parse(format!("{context}: {e}"))
}

fn load_config(global: &GlobalArgs) -> Result<Config, Failure> {
    let file = match &global.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| parse_error(&path.display().to_string(), e))?;
            serde_json::from_str::<ConfigFile>(&text).map_err(|e| parse_error("config", e))?
        }
        None => ConfigFile::default(),
    };
    let defaults = SeesawOpts::default();
    let seesaw = SeesawOpts {
        restarts: global
            .restarts
            .or(file.restarts)
            .unwrap_or(defaults.restarts),
        max_iters: file.max_iters.unwrap_or(defaults.max_iters),
        eps_conv: file.eps_conv.unwrap_or(defaults.eps_conv),
        eps_neg: file.eps_neg.unwrap_or(defaults.eps_neg),
        seed: global.seed.or(file.seed).unwrap_or(defaults.seed),
        crosscheck: file.crosscheck.unwrap_or(false),
    };
    let tol = global.tol.or(file.tol).unwrap_or(1e-9);
    for (name, value) in [
        ("tol", tol),
        ("eps_conv", seesaw.eps_conv),
        ("eps_neg", seesaw.eps_neg),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Failure::Parse(format!(
                "{name} must be positive, got {value}"
            )));
        }
    }
    if seesaw.restarts == 0 || seesaw.max_iters == 0 {
        return Err(Failure::Parse(
            "restarts and max_iters must be at least 1".into(),
        ));
    }
    Ok(Config {
        seesaw,
        tol,
        out: global.out.clone().or(file.out),
    })
}

/// Superoperator, Kraus family, or (by default) Choi matrix.
fn load_map(path: &Path) -> Result<MapRep, Failure> {
    let text = fs::read_to_string(path).map_err(|e| parse_error(&path.display().to_string(), e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| parse_error("input", e))?;
    if value.get("kraus").is_some() {
        let kraus: KrausSet = serde_json::from_value(value).map_err(|e| parse_error("kraus", e))?;
        return Ok(from_kraus(&kraus.operators)?);
    }
    let raw: MatrixJson = serde_json::from_value(value).map_err(|e| parse_error("matrix", e))?;
    let op = raw.to_op()?;
    match raw.repr.as_deref() {
        Some("super") => Ok(MapRep::from_superoperator(op.into_matrix())?),
        None | Some("choi") => Ok(MapRep::from_choi(&op)?),
        Some(other) => Err(Failure::Parse(format!("unknown repr {other:?}"))),
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, steps] = parts[..] else {
        return Err(Failure::Parse(format!("grid {spec:?} is not lo:hi:steps")));
    };
    let lo: f64 = lo.parse().map_err(|e| parse_error("grid lo", e))?;
    let hi: f64 = hi.parse().map_err(|e| parse_error("grid hi", e))?;
    let steps: usize = steps.parse().map_err(|e| parse_error("grid steps", e))?;
    Ok(linspace(lo, hi, steps)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = load_config(&cli.global)?;
    match cli.command {
        Command::Classify { input, crosscheck } => {
            let map = load_map(&input)?;
            let opts = ClassifyOpts {
                seesaw: SeesawOpts {
                    crosscheck: crosscheck || config.seesaw.crosscheck,
                    ..config.seesaw
                },
                tol: config.tol,
                ..ClassifyOpts::default()
            };
            let report = classify(&map, &opts)?;
            emit(config.out.as_deref(), &to_json(&report))
        }
        Command::Scan { family, k, grid } => {
            let family: Family = family.parse()?;
            let grid = parse_grid(&grid)?;
            let k = if family == Family::Werner { 1 } else { k };
            let rows = threshold_scan(family, k, &grid, config.tol, &config.seesaw)?;
            emit(config.out.as_deref(), &to_csv(&rows))
        }
        Command::Fuzz { suite, n, dim, k } => {
            let suite: Suite = suite.parse()?;
            let opts = FuzzOpts {
                d: dim,
                k,
                seed: config.seesaw.seed,
                tol: config.tol,
            };
            let summary = run_suite(suite, n, &opts)?;
            emit(config.out.as_deref(), &to_json(&summary))?;
            if summary.failed > 0 {
                Err(Failure::FuzzFailed)
            } else {
                Ok(())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Parse(msg) | Failure::Io(msg) => eprintln!("error: {msg}"),
                Failure::Invariant(msg) => eprintln!("invariant violated: {msg}"),
                Failure::FuzzFailed => eprintln!("fuzz suite reported failures"),
            }
            ExitCode::from(failure.code())
        }
    }
}
