//! Batch orchestration: Monte Carlo runs, exact reports and comparisons,
//! with their on-disk artifacts.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{alpha_high_d, alpha_three_at, AlphaEstimate, AlphaThreeSettings, GreenSettings};
use crate::error::{Error, Result};
use crate::exact::{
    cached_hitting_table, check_assumptions, predicted_variance, transition_kernel, tv_decay_check, AssumptionReport,
    HittingTable, MixingReport, VariancePrediction, EXACT_VERTEX_CAP,
};
use crate::graph::{Graph, GraphSpec};
use crate::painter::{boundary_fraction, run_painting_with, BoundaryEstimate, PaintMode, PaintOptions, PaintScratch, PaintingOutcome};
use crate::stats::{bootstrap_variance_ci, ks_two_sample, variance_estimate, KsResult, SampleSummary};
use crate::walk::{derive_stream, WalkConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Stream id reserved for the bootstrap; run indices never reach it.
const BOOTSTRAP_STREAM: u64 = u64::MAX;

/// Largest graph on which the exact report runs the all-pairs decay check.
pub const TV_CHECK_VERTEX_CAP: usize = 1024;

/// Everything that determines a batch. `workers` affects only the wall
/// clock and is kept out of the artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub graph: String,
    pub seed: u64,
    pub runs: u64,
    pub laziness: f64,
    pub mode: PaintMode,
    pub c: f64,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            graph: String::new(),
            seed: 0,
            runs: 1000,
            laziness: 0.5,
            mode: PaintMode::FirstPainted,
            c: 2.0,
            workers: 0,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn new(graph: impl Into<String>) -> Self {
        RunConfig {
            graph: graph.into(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::param("runs must be at least 1"));
        }
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(Error::param(format!("c must be at least 1, got {}", self.c)));
        }
        self.spec()?;
        self.walk()?;
        Ok(())
    }

    pub fn spec(&self) -> Result<GraphSpec> {
        GraphSpec::parse(&self.graph)
    }

    pub fn walk(&self) -> Result<WalkConfig> {
        WalkConfig::lazy(self.laziness)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::param(format!("thread pool: {e}")))
    }
}

/// Code version and configuration embedded in every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config: RunConfig,
}

impl Provenance {
    fn of(config: &RunConfig) -> Self {
        Provenance {
            version: VERSION.to_string(),
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingRun {
    pub run_id: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCheck {
    pub target: f64,
    /// `|mean - target| / SE`.
    pub deviation_in_se: f64,
    pub within_4se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub provenance: Provenance,
    pub spec: String,
    pub vertex_count: usize,
    pub edge_count: usize,
    pub runs_requested: u64,
    pub runs_completed: u64,
    pub missing_runs: Vec<MissingRun>,
    /// `|A_1|`.
    pub a1: Option<SampleSummary>,
    pub a1_bootstrap_ci: Option<(f64, f64)>,
    pub a1_variance_over_v: Option<f64>,
    /// `Var |A_1| / h_d(n)` for tori of dimension at least 3.
    pub a1_variance_over_h: Option<f64>,
    pub mean_check: Option<MeanCheck>,
    pub b: Option<SampleSummary>,
    /// `Var(B) / (4 Var |A_1|)`.
    pub b_ratio: Option<f64>,
    pub tie_fraction_mean: Option<f64>,
    pub cover_time_mean: Option<f64>,
    pub boundary: Option<BoundaryEstimate>,
}

/// Per-run outcomes in run order plus the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub outcomes: Vec<(u64, PaintingOutcome)>,
    pub summary: BatchSummary,
}

pub const RUN_CSV_HEADER: &str = "run_id,a1,a2,ties,wins1,wins2,b,cover_time,boundary_edges";

impl BatchResult {
    pub fn a1_samples(&self) -> Vec<f64> {
        self.outcomes.iter().map(|(_, o)| o.a1_count as f64).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.outcomes.len() + 4));
        s.push_str(&format!("# {}\n", provenance_line(&self.summary.provenance)));
        s.push_str(RUN_CSV_HEADER);
        s.push('\n');
        for (id, o) in &self.outcomes {
            s.push_str(&format!(
                "{id},{},{},{},{},{},{},{},{}\n",
                o.a1_count, o.a2_count, o.tie_count, o.wins1, o.wins2, o.b_statistic, o.cover_time, o.boundary_edges
            ));
        }
        s
    }

    /// Writes `runs.csv`, `summary.json` and, when runs failed,
    /// `missing_runs.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut paths = vec![
            write_file(dir, "runs.csv", &self.to_csv())?,
            write_file(dir, "summary.json", &to_json(&self.summary)?)?,
        ];
        if !self.summary.missing_runs.is_empty() {
            let mut s = String::from("run_id,error\n");
            for m in &self.summary.missing_runs {
                s.push_str(&format!("{},\"{}\"\n", m.run_id, m.error.replace('"', "'")));
            }
            paths.push(write_file(dir, "missing_runs.csv", &s)?);
        }
        Ok(paths)
    }
}

fn provenance_line(p: &Provenance) -> String {
    serde_json::to_string(p).expect("provenance serializes")
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Malformed(e.to_string()))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Appends a timestamped line to `<dir>/run.log`. Wall-clock data lives
/// only here so that the other artifacts stay reproducible.
pub fn log_sidecar(dir: &Path, command: &str, config: &RunConfig, elapsed: std::time::Duration) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("run.log");
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| Error::io(&path, e))?;
    writeln!(
        f,
        "unix={stamp} command={command} workers={} elapsed_s={:.3} config={}",
        config.workers,
        elapsed.as_secs_f64(),
        serde_json::to_string(config).unwrap_or_default()
    )
    .map_err(|e| Error::io(&path, e))
}

/// Runs the paintings `0..runs` with streams `derive_stream(seed, run)`.
/// A run that hits the step cap is listed in `missing_runs`; the others
/// are unaffected.
pub fn simulate_batch(config: &RunConfig) -> Result<BatchResult> {
    config.validate()?;
    let g = Graph::build(config.spec()?)?;
    let cfg = config.walk()?;
    let opts = PaintOptions::with_mode(config.mode);
    let results: Vec<(u64, Result<PaintingOutcome>)> = config.pool()?.install(|| {
        (0..config.runs)
            .into_par_iter()
            .map_init(PaintScratch::default, |scratch, id| {
                let mut rng = derive_stream(config.seed, id);
                (id, run_painting_with(&g, &cfg, &opts, &mut rng, scratch))
            })
            .collect()
    });
    let mut outcomes = Vec::with_capacity(results.len());
    let mut missing_runs = Vec::new();
    for (run_id, r) in results {
        match r {
            Ok(o) => outcomes.push((run_id, o)),
            Err(e) => missing_runs.push(MissingRun {
                run_id,
                error: e.to_string(),
            }),
        }
    }
    let summary = summarize(config, &g, &outcomes, missing_runs)?;
    Ok(BatchResult { outcomes, summary })
}

fn summarize(config: &RunConfig, g: &Graph, outcomes: &[(u64, PaintingOutcome)], missing_runs: Vec<MissingRun>) -> Result<BatchSummary> {
    let n = g.vertex_count() as f64;
    let a1: Vec<f64> = outcomes.iter().map(|(_, o)| o.a1_count as f64).collect();
    let b: Vec<f64> = outcomes.iter().map(|(_, o)| o.b_statistic as f64).collect();
    let plain: Vec<PaintingOutcome> = outcomes.iter().map(|(_, o)| *o).collect();
    let level = 0.95;
    let (a1_summary, b_summary) = if a1.len() >= 2 {
        (Some(variance_estimate(&a1, level)?), Some(variance_estimate(&b, level)?))
    } else {
        (None, None)
    };
    let a1_bootstrap_ci = match a1_summary {
        Some(_) => Some(bootstrap_variance_ci(&a1, level, 1000, &mut derive_stream(config.seed, BOOTSTRAP_STREAM))?),
        None => None,
    };
    let mean_check = a1_summary.map(|s| {
        let se = s.std_error_of_mean();
        let dev = (s.mean - n / 2.0).abs();
        let deviation_in_se = if se > 0.0 { dev / se } else if dev == 0.0 { 0.0 } else { f64::INFINITY };
        MeanCheck {
            target: n / 2.0,
            deviation_in_se,
            within_4se: deviation_in_se < 4.0,
        }
    });
    let b_ratio = match (a1_summary, b_summary) {
        (Some(a), Some(b)) if a.variance > 0.0 => Some(b.variance / (4.0 * a.variance)),
        _ => None,
    };
    let mean_of = |f: &dyn Fn(&PaintingOutcome) -> f64| {
        if plain.is_empty() {
            None
        } else {
            Some(plain.iter().map(f).sum::<f64>() / plain.len() as f64)
        }
    };
    Ok(BatchSummary {
        provenance: Provenance::of(config),
        spec: g.spec().to_string(),
        vertex_count: g.vertex_count(),
        edge_count: g.edge_count(),
        runs_requested: config.runs,
        runs_completed: outcomes.len() as u64,
        missing_runs,
        a1: a1_summary,
        a1_bootstrap_ci,
        a1_variance_over_v: a1_summary.map(|s| s.variance / n),
        a1_variance_over_h: match (a1_summary, g.spec().torus_normalization()) {
            (Some(s), Some(h)) => Some(s.variance / h),
            _ => None,
        },
        mean_check,
        b: b_summary,
        b_ratio,
        tie_fraction_mean: mean_of(&|o| o.tie_count as f64 / n),
        cover_time_mean: mean_of(&|o| o.cover_time as f64),
        boundary: if plain.len() >= 2 {
            Some(boundary_fraction(g, &plain, level)?)
        } else {
            None
        },
    })
}

/// Summary of the mixing-decay check (the curves stay in memory only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvSummary {
    pub passed: bool,
    pub worst_tv_excess: f64,
    pub worst_ratio_excess: f64,
    pub pairs_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    pub provenance: Provenance,
    pub spec: String,
    pub vertex_count: usize,
    pub laziness: f64,
    pub c: f64,
    pub t_mix: u64,
    pub horizon: u64,
    pub f_bar: f64,
    pub f_statistic: f64,
    pub f_over_v: f64,
    /// `F / h_d(n)` for tori of dimension at least 3.
    pub f_over_h: Option<f64>,
    pub prediction: Option<VariancePrediction>,
    pub assumptions: AssumptionReport,
    /// Absent above [`TV_CHECK_VERTEX_CAP`] vertices.
    pub tv_check: Option<TvSummary>,
    #[serde(skip)]
    pub from_cache: bool,
}

/// Runs the exact pipeline. Hitting tables are cached under `cache_dir`.
pub fn exact_report(config: &RunConfig, cache_dir: Option<&Path>) -> Result<(ExactReport, HittingTable)> {
    config.validate()?;
    let spec = config.spec()?;
    let count = spec.vertex_count_hint();
    if count > EXACT_VERTEX_CAP as u128 {
        return Err(Error::SizeCap {
            what: format!("exact analysis of {spec}"),
            actual: count,
            cap: EXACT_VERTEX_CAP as u128,
        });
    }
    let g = Graph::build(spec.clone())?;
    let cfg = config.walk()?;
    let pool = config.pool()?;
    let (table, from_cache) = pool.install(|| cached_hitting_table(&g, &cfg, config.c, cache_dir))?;
    let kernel = transition_kernel(&g, &cfg)?;
    let mixing = MixingReport {
        t_mix: table.t_mix,
        deviation_curve: Vec::new(),
    };
    let assumptions = pool.install(|| check_assumptions(&kernel, &mixing, &table.green_values))?;
    let tv_check = if g.vertex_count() <= TV_CHECK_VERTEX_CAP {
        let r = pool.install(|| tv_decay_check(&kernel, table.t_mix))?;
        Some(TvSummary {
            passed: r.passed,
            worst_tv_excess: r.worst_tv_excess,
            worst_ratio_excess: r.worst_ratio_excess,
            pairs_checked: r.pairs_checked,
        })
    } else {
        None
    };
    let n = g.vertex_count() as f64;
    let report = ExactReport {
        provenance: Provenance::of(config),
        spec: spec.to_string(),
        vertex_count: g.vertex_count(),
        laziness: cfg.laziness,
        c: config.c,
        t_mix: table.t_mix,
        horizon: table.horizon,
        f_bar: table.f_bar,
        f_statistic: table.f_statistic,
        f_over_v: table.f_statistic / n,
        f_over_h: spec.torus_normalization().map(|h| table.f_statistic / h),
        prediction: predicted_variance(&table).ok(),
        assumptions,
        tv_check,
        from_cache,
    };
    Ok((report, table))
}

impl ExactReport {
    /// Writes `exact.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        write_file(dir, "exact.json", &to_json(self)?)
    }
}

/// A ratio with an optional interval and an informational verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    pub name: String,
    pub value: f64,
    pub ci: Option<(f64, f64)>,
    pub tolerance: (f64, f64),
    pub within: bool,
}

impl RatioCheck {
    fn new(name: &str, value: f64, ci: Option<(f64, f64)>, tolerance: (f64, f64)) -> Self {
        RatioCheck {
            name: name.to_string(),
            value,
            ci,
            tolerance,
            within: value >= tolerance.0 && value <= tolerance.1,
        }
    }

    pub fn verdict_line(&self) -> String {
        let ci = match self.ci {
            Some((lo, hi)) => format!(" CI [{lo:.4}, {hi:.4}]"),
            None => String::new(),
        };
        format!(
            "{}: {:.4}{} tolerance [{}, {}] -> {}",
            self.name,
            self.value,
            ci,
            self.tolerance.0,
            self.tolerance.1,
            if self.within { "within" } else { "outside" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub spec: String,
    pub checks: Vec<RatioCheck>,
    pub alpha: Option<AlphaEstimate>,
}

impl CompareReport {
    pub fn to_text(&self) -> String {
        let mut s = format!("compare {}\n", self.spec);
        for c in &self.checks {
            s.push_str(&c.verdict_line());
            s.push('\n');
        }
        s
    }
}

/// Tolerance on `Var |A_1| / (F/4)` at finite size.
pub const VARIANCE_RATIO_TOLERANCE: (f64, f64) = (0.7, 1.3);
/// Tolerance on `(F/4) / (|V|/4)` for hypercubes and symmetric groups.
pub const LINEAR_RATIO_TOLERANCE: (f64, f64) = (0.8, 1.2);
/// Tolerance on `(F / h_d(n)) / alpha_d`.
pub const ALPHA_RATIO_TOLERANCE: (f64, f64) = (0.8, 1.2);

/// Limiting constant matched to a torus: `alpha_3` at the horizon
/// `c t_mix / n^2`, or `alpha_d` for `d >= 5`. Four dimensions are skipped.
pub fn matched_alpha(spec: &GraphSpec, c: f64, t_mix: u64) -> Result<Option<AlphaEstimate>> {
    match *spec {
        GraphSpec::Torus { dim: 3, side } => {
            let horizon = c * t_mix as f64 / (side * side) as f64;
            let (value, error_bar) = alpha_three_at(horizon, &AlphaThreeSettings::default())?;
            let mut parameters = std::collections::BTreeMap::new();
            parameters.insert("T".into(), horizon);
            Ok(Some(AlphaEstimate {
                d: 3,
                value,
                error_bar,
                parameters,
            }))
        }
        GraphSpec::Torus { dim, .. } if dim >= 5 => Ok(Some(alpha_high_d(dim, 12, &GreenSettings::default())?)),
        _ => Ok(None),
    }
}

/// Ratios between a simulated summary, an exact report and, where one
/// applies, a limiting constant. Never fails on a ratio being off; only
/// inconsistent inputs are errors.
pub fn compare(summary: Option<&BatchSummary>, exact: &ExactReport, alpha: Option<&AlphaEstimate>) -> Result<CompareReport> {
    if let Some(s) = summary {
        if s.spec != exact.spec {
            return Err(Error::param(format!("summary is for {} but the exact report is for {}", s.spec, exact.spec)));
        }
    }
    let quarter_f = exact.f_statistic / 4.0;
    let mut checks = Vec::new();
    if let Some(a1) = summary.and_then(|s| s.a1) {
        if quarter_f > 0.0 {
            checks.push(RatioCheck::new(
                "mc_variance_over_quarter_f",
                a1.variance / quarter_f,
                Some((a1.variance_ci.0 / quarter_f, a1.variance_ci.1 / quarter_f)),
                VARIANCE_RATIO_TOLERANCE,
            ));
        }
    }
    if exact.spec.starts_with("hypercube:") || exact.spec.starts_with("sym:") {
        checks.push(RatioCheck::new(
            "quarter_f_over_quarter_v",
            exact.f_statistic / exact.vertex_count as f64,
            None,
            LINEAR_RATIO_TOLERANCE,
        ));
    }
    if let (Some(fh), Some(a)) = (exact.f_over_h, alpha) {
        let ci = (a.value > a.error_bar).then(|| (fh / (a.value + a.error_bar), fh / (a.value - a.error_bar)));
        checks.push(RatioCheck::new("f_over_h_over_alpha", fh / a.value, ci, ALPHA_RATIO_TOLERANCE));
    }
    Ok(CompareReport {
        spec: exact.spec.clone(),
        checks,
        alpha: alpha.cloned(),
    })
}

/// Compares a summary with itself: the variance ratio is 1 by construction.
pub fn self_ratio(summary: &BatchSummary) -> Option<f64> {
    summary.a1.map(|s| if s.variance > 0.0 { s.variance / s.variance } else { 1.0 })
}

/// Master-seed offset for the last-painted batch, so that the two samples
/// are independent.
const SECOND_SAMPLE_SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

/// Significance level of the equivalence test.
pub const EQUIVALENCE_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub provenance: Provenance,
    pub spec: String,
    pub first_painted: SampleSummary,
    pub last_painted: SampleSummary,
    pub ks: KsResult,
    pub level: f64,
    pub rejected: bool,
}

/// Two-sample test of `|A_1|` under first-painted against last-painted
/// marking, `runs` independent paintings each.
pub fn equivalence(config: &RunConfig) -> Result<EquivalenceReport> {
    let first_cfg = RunConfig {
        mode: PaintMode::FirstPainted,
        ..config.clone()
    };
    let last_cfg = RunConfig {
        mode: PaintMode::LastPainted,
        seed: config.seed ^ SECOND_SAMPLE_SEED_MIX,
        ..config.clone()
    };
    let first = simulate_batch(&first_cfg)?;
    let last = simulate_batch(&last_cfg)?;
    let (a, b) = (first.a1_samples(), last.a1_samples());
    let ks = ks_two_sample(&a, &b)?;
    Ok(EquivalenceReport {
        provenance: Provenance::of(config),
        spec: first.summary.spec.clone(),
        first_painted: variance_estimate(&a, 0.95)?,
        last_painted: variance_estimate(&b, 0.95)?,
        rejected: ks.p_value < EQUIVALENCE_LEVEL,
        ks,
        level: EQUIVALENCE_LEVEL,
    })
}
