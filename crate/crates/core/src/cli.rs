//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 capacity exceeded,
//! 4 verification failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::clustering::{cost, kl_median_constant_factor, CenterSet, SolverConfig, SolverMode};
use crate::coreset::{build_coreset, CoresetConfig};
use crate::curve::io::{load_dataset, save_dataset, save_weighted_set, Format};
use crate::curve::{CurveDataset, PolygonalCurve};
use crate::error::{Error, Result};
use crate::frechet::{frechet_distance, DistanceQueryOptions};
use crate::median1::{one_median_5eps, Median1Config, DEFAULT_CANDIDATE_CAP};
use crate::synthetic::{generate, GeneratorConfig};
use crate::verify::{parse_frechet_cases, verify, Suite, BUNDLED_FRECHET_CASES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "frechet-coreset", version, about = "Coresets and (k,l)-median clustering of polygonal curves")]
struct Cli {
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// RNG seed. When omitted a seed is drawn from entropy and printed to stderr.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Dataset format; guessed from the file extension when omitted.
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,

    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic clustered dataset.
    Generate(GenerateArgs),
    /// Print the Fréchet distance between the single curves of two files.
    Distance { a: PathBuf, b: PathBuf },
    /// Sample a weighted coreset.
    Coreset(CoresetArgs),
    /// Constant-factor (k,l)-median clustering.
    Cluster(ClusterArgs),
    /// Approximate (1,l)-median via a coreset and candidate search.
    Median1(Median1Args),
    /// Run the oracle suites and emit a JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    #[arg(long, default_value_t = 10)]
    per_cluster: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 10)]
    complexity: usize,
    #[arg(long, default_value_t = 0.1)]
    spread: f64,
    #[arg(long, default_value_t = 20.0)]
    separation: f64,
}

#[derive(Debug, Args)]
struct CoresetArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    ell: usize,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Overrides the theoretical sample size.
    #[arg(long)]
    coreset_size: Option<usize>,
    #[arg(long, default_value = "exhaustive", value_parser = parse_mode)]
    mode: SolverMode,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    ell: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value = "exhaustive", value_parser = parse_mode)]
    mode: SolverMode,
}

#[derive(Debug, Args)]
struct Median1Args {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    ell: usize,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    #[arg(long)]
    coreset_size: Option<usize>,
    /// Largest number of raw candidate tuples to enumerate.
    #[arg(long, default_value_t = DEFAULT_CANDIDATE_CAP)]
    candidate_cap: u64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// One of frechet, simplify, sensitivity, coreset, median1 or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Replaces the bundled Fréchet fixtures.
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> std::result::Result<SolverMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Capacity { .. } => EXIT_CAPACITY,
        _ => EXIT_INVALID,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("CORESET_LOG", "warn")).try_init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return EXIT_INVALID;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not configure the thread pool: {e}");
        }
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn seed(cli: &Cli) -> u64 {
    cli.seed.unwrap_or_else(|| {
        let s = rand::rng().random();
        eprintln!("seed: {s}");
        s
    })
}

fn read_dataset(path: &Path, format: Option<Format>) -> Result<CurveDataset> {
    let file = File::open(path).map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    load_dataset(std::io::BufReader::new(file), format.unwrap_or_else(|| Format::from_path(path)))
}

fn read_single_curve(path: &Path, format: Option<Format>) -> Result<PolygonalCurve> {
    let ds = read_dataset(path, format)?;
    if ds.len() != 1 {
        return Err(Error::invalid(format!("{} holds {} curves, expected one", path.display(), ds.len())));
    }
    Ok(ds.into_curves().remove(0))
}

/// Stdout when no path is given.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn vertices(c: &PolygonalCurve) -> Vec<Vec<f64>> {
    c.vertices().map(<[f64]>::to_vec).collect()
}

fn execute(cli: &Cli) -> Result<i32> {
    let out = cli.output.as_deref();
    match &cli.command {
        Command::Generate(a) => {
            let mut cfg = GeneratorConfig::new(a.clusters, a.per_cluster, a.dim, a.complexity, seed(cli));
            cfg.spread = a.spread;
            cfg.separation = a.separation;
            let (ds, _) = generate(&cfg)?;
            let format = cli.format.or_else(|| out.map(Format::from_path)).unwrap_or(Format::Jsonl);
            save_dataset(&ds, sink(out)?, format)?;
        }
        Command::Distance { a, b } => {
            let a = read_single_curve(a, cli.format)?;
            let b = read_single_curve(b, cli.format)?;
            if a.dim() != b.dim() {
                return Err(Error::invalid("the curves have different dimensions"));
            }
            let d = frechet_distance(&a, &b, &DistanceQueryOptions::default());
            let mut w = sink(out)?;
            writeln!(w, "{d:.16e}")?;
            w.flush()?;
        }
        Command::Coreset(a) => {
            let t = read_dataset(&a.input, cli.format)?;
            let mut cfg = CoresetConfig::new(a.k, a.ell, a.epsilon, a.delta, seed(cli));
            cfg.sample_size_override = a.coreset_size;
            cfg.solver = SolverConfig::new(a.mode);
            let set = build_coreset(&t, &cfg)?;
            save_weighted_set(&set, sink(out)?)?;
            if let (Some(path), Some(meta)) = (out, &set.meta) {
                let mut doc = serde_json::to_value(meta)?;
                doc["profile_sha256"] = json!(meta.profile_hash);
                doc["mode"] = json!(a.mode.name());
                let mut side = path.as_os_str().to_owned();
                side.push(".meta.json");
                write_json(Some(Path::new(&side)), &doc)?;
            }
        }
        Command::Cluster(a) => {
            let t = read_dataset(&a.input, cli.format)?;
            let seed = seed(cli);
            let r = kl_median_constant_factor(&t, a.k, a.ell, a.delta, seed, &SolverConfig::new(a.mode))?;
            let doc = json!({
                "k": a.k,
                "ell": a.ell,
                "mode": a.mode.name(),
                "seed": seed,
                "approx_factor": r.approx_factor,
                "total_cost": r.total_cost,
                "centers": r.centers.centers().iter().map(vertices).collect::<Vec<_>>(),
                "center_indices": r.center_indices,
                "assignment": r.assignment,
                "distances": r.distances,
                "cluster_costs": r.cluster_costs,
            });
            write_json(out, &doc)?;
        }
        Command::Median1(a) => {
            let t = read_dataset(&a.input, cli.format)?;
            let mut cfg = Median1Config::new(a.epsilon, a.delta, a.ell, seed(cli));
            cfg.coreset_size = a.coreset_size;
            cfg.candidate_cap = a.candidate_cap;
            let (c, trace) = one_median_5eps(&t, &cfg)?;
            let full = cost(&t, &CenterSet::single(c.clone()));
            let doc = json!({
                "seed": cfg.seed,
                "median": vertices(&c),
                "cost": full,
                "trace": trace,
            });
            write_json(out, &doc)?;
        }
        Command::Verify(a) => {
            let suites = Suite::parse_list(&a.suite)?;
            let text = match &a.fixtures {
                Some(p) => std::fs::read_to_string(p)
                    .map_err(|e| Error::invalid(format!("cannot read {}: {e}", p.display())))?,
                None => BUNDLED_FRECHET_CASES.to_string(),
            };
            let cases = parse_frechet_cases(&text)?;
            let report = verify(&suites, &cases, cli.seed.unwrap_or(0))?;
            write_json(out, &report)?;
            if !report.passed {
                for f in report.failures() {
                    eprintln!("failed: {f}");
                }
                return Ok(EXIT_VERIFY_FAILED);
            }
        }
    }
    Ok(EXIT_OK)
}
