use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use paintwalk::batch::{self, to_json, BatchSummary, ExactReport, RunConfig};
use paintwalk::constants::{alpha_four, alpha_high_d, alpha_three, lattice_green, AlphaThreeSettings, GreenSettings, WalkConvention};
use paintwalk::exact::{check_assumptions, green_function, transition_kernel, uniform_mixing_time, AssumptionReport};
use paintwalk::painter::PaintMode;
use paintwalk::stats::qq_data;
use paintwalk::{Error, Graph};

#[derive(Parser)]
#[command(name = "paintwalk", version, about = "Two-walk painting process: simulation, exact analysis and constants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo batch and write per-run CSV plus a JSON summary.
    Simulate(Common),
    /// Mixing time, hitting table, F and the F/4 variance prediction.
    Exact(ExactArgs),
    /// Evaluate a limiting constant.
    Constants(ConstantsArgs),
    /// Ratios from the standing assumptions on the graph sequence.
    Assumptions(Common),
    /// Normal Q-Q data for |A_1|.
    Qq(Common),
    /// KS test of first-painted against last-painted marking.
    Equivalence(Common),
    /// Compare the results stored in --out (summary.json, exact.json).
    Compare(CompareArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// torus:d=3,n=8 | hypercube:n=12 | sym:n=5 | explicit:path=FILE
    #[arg(long)]
    graph: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    #[arg(long, default_value_t = 0.5)]
    laziness: f64,
    /// Horizon multiplier for hitting probabilities.
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    /// first | last
    #[arg(long, default_value = "first")]
    mode: PaintMode,
    /// Worker threads; 0 means one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> RunConfig {
        RunConfig {
            graph: self.graph.clone(),
            seed: self.seed,
            runs: self.runs,
            laziness: self.laziness,
            mode: self.mode,
            c: self.c,
            workers: self.workers,
            out: self.out.clone(),
        }
    }
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    common: Common,
    /// Hitting-table cache; defaults to <out>/cache.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long)]
    d: usize,
    /// Ball radius for d >= 5.
    #[arg(long, default_value_t = 20)]
    radius: u32,
    /// Largest radius for d = 4.
    #[arg(long, default_value_t = 64)]
    nmax: u32,
    /// Horizon for d = 3.
    #[arg(long = "T", default_value_t = 16.0)]
    horizon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Directory holding summary.json (optional) and exact.json.
    #[arg(long)]
    out: PathBuf,
    /// Skip the limiting-constant ratio.
    #[arg(long)]
    no_alpha: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}

fn exit_status(e: &Error) -> u8 {
    match e {
        Error::SizeCap { .. } => 3,
        Error::InvalidSpec(..)
        | Error::InvalidGraph(_)
        | Error::InvalidVertex { .. }
        | Error::UnsupportedFamily(_)
        | Error::InvalidParameter(_)
        | Error::TooFewSamples { .. }
        | Error::Malformed(_) => 2,
        _ => 1,
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>, name: &str) -> paintwalk::Result<()> {
    let text = to_json(value)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
        let path = dir.join(name);
        std::fs::write(&path, &text).map_err(|e| Error::Io { path, source: e })?;
    }
    print!("{text}");
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> paintwalk::Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}

fn run(command: Command) -> paintwalk::Result<()> {
    let start = Instant::now();
    match command {
        Command::Simulate(args) => {
            let config = args.config();
            let result = batch::simulate_batch(&config)?;
            if let Some(dir) = &args.out {
                result.write(dir)?;
                batch::log_sidecar(dir, "simulate", &config, start.elapsed())?;
            }
            print!("{}", to_json(&result.summary)?);
        }
        Command::Exact(args) => {
            let config = args.common.config();
            let cache = args.cache.clone().or_else(|| args.common.out.as_ref().map(|d| d.join("cache")));
            let (report, table) = batch::exact_report(&config, cache.as_deref())?;
            if let Some(dir) = &args.common.out {
                report.write(dir)?;
                if cache.is_none() {
                    table.write(dir)?;
                }
                batch::log_sidecar(dir, "exact", &config, start.elapsed())?;
            }
            print!("{}", to_json(&report)?);
        }
        Command::Constants(args) => {
            let settings = GreenSettings::default();
            match args.d {
                3 => {
                    let estimate = alpha_three(args.horizon, &AlphaThreeSettings::default())?;
                    let g0 = lattice_green(3, &[0, 0, 0], WalkConvention::Lazy, &settings)?;
                    #[derive(Serialize)]
                    struct Three {
                        alpha: paintwalk::constants::AlphaEstimate,
                        lazy_green_origin: f64,
                        lazy_green_origin_error: f64,
                    }
                    let three = Three {
                        alpha: estimate,
                        lazy_green_origin: g0.value,
                        lazy_green_origin_error: g0.error,
                    };
                    emit(&three, args.out.as_deref(), "constants_d3.json")?;
                }
                4 => emit(&alpha_four(args.nmax, &settings)?, args.out.as_deref(), "constants_d4.json")?,
                d if d >= 5 => emit(&alpha_high_d(d, args.radius, &settings)?, args.out.as_deref(), &format!("constants_d{d}.json"))?,
                d => return Err(Error::InvalidParameter(format!("no limiting constant for d = {d}"))),
            }
        }
        Command::Assumptions(args) => {
            let config = args.config();
            config.validate()?;
            #[derive(Serialize)]
            struct Assumptions {
                spec: String,
                vertex_count: usize,
                t_mix: u64,
                report: AssumptionReport,
            }
            let g = Graph::build(config.spec()?)?;
            let kernel = transition_kernel(&g, &config.walk()?)?;
            let mixing = uniform_mixing_time(&kernel)?;
            let green = green_function(&kernel, mixing.t_mix)?;
            let report = check_assumptions(&kernel, &mixing, &green)?;
            let out = Assumptions {
                spec: g.spec().to_string(),
                vertex_count: g.vertex_count(),
                t_mix: mixing.t_mix,
                report,
            };
            emit(&out, args.out.as_deref(), "assumptions.json")?;
        }
        Command::Qq(args) => {
            let config = args.config();
            let result = batch::simulate_batch(&config)?;
            let qq = qq_data(&result.a1_samples())?;
            if let Some(dir) = &args.out {
                std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
                let path = dir.join("qq.csv");
                std::fs::write(&path, qq.to_csv()).map_err(|e| Error::Io { path, source: e })?;
                batch::log_sidecar(dir, "qq", &config, start.elapsed())?;
            }
            println!(
                "qq {} runs={} correlation={:.6} (normality is conjectured; this is support, not proof)",
                result.summary.spec, result.summary.runs_completed, qq.correlation
            );
        }
        Command::Equivalence(args) => {
            let config = args.config();
            let report = batch::equivalence(&config)?;
            emit(&report, args.out.as_deref(), "equivalence.json")?;
            println!(
                "equivalence {}: KS D={:.5} p={:.4} -> {} at level {}",
                report.spec,
                report.ks.statistic,
                report.ks.p_value,
                if report.rejected { "rejected" } else { "not rejected" },
                report.level
            );
        }
        Command::Compare(args) => {
            let exact_path = args.out.join("exact.json");
            if !exact_path.exists() {
                return Err(Error::InvalidParameter(format!("missing {}; run `exact --out` first", exact_path.display())));
            }
            let exact: ExactReport = read_json(&exact_path)?;
            let summary_path = args.out.join("summary.json");
            let summary: Option<BatchSummary> = if summary_path.exists() { Some(read_json(&summary_path)?) } else { None };
            let alpha = if args.no_alpha || !exact.spec.starts_with("torus:") {
                None
            } else {
                let spec = paintwalk::GraphSpec::parse(&exact.spec)?;
                batch::matched_alpha(&spec, exact.c, exact.t_mix)?
            };
            let report = batch::compare(summary.as_ref(), &exact, alpha.as_ref())?;
            let text = report.to_text();
            let path = args.out.join("compare.txt");
            std::fs::write(&path, &text).map_err(|e| Error::Io { path, source: e })?;
            let path = args.out.join("compare.json");
            std::fs::write(&path, to_json(&report)?).map_err(|e| Error::Io { path, source: e })?;
            print!("{text}");
        }
    }
    Ok(())
}
