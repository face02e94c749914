//! The two-walk painting process.
//!
//! Both walks start from independent uniform vertices and advance in
//! lockstep on a shared clock. In [`PaintMode::FirstPainted`] a site keeps
//! the mark of the walk that reached it first; in
//! [`PaintMode::LastPainted`] every visit overwrites the mark. Simultaneous
//! visits are resolved by independent fair coins drawn after the walk ends,
//! in vertex order.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::stats;
use crate::walk::{step, WalkConfig};

/// Which visit decides a site's final mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaintMode {
    #[default]
    FirstPainted,
    LastPainted,
}

impl std::str::FromStr for PaintMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" | "first_painted" | "first-painted" => Ok(PaintMode::FirstPainted),
            "last" | "last_painted" | "last-painted" => Ok(PaintMode::LastPainted),
            other => Err(Error::param(format!("unknown paint mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for PaintMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PaintMode::FirstPainted => "first_painted",
            PaintMode::LastPainted => "last_painted",
        })
    }
}

/// Per-run statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaintingOutcome {
    pub a1_count: u64,
    pub a2_count: u64,
    pub tie_count: u64,
    pub wins1: u64,
    pub wins2: u64,
    pub b_statistic: i64,
    pub cover_time: u64,
    pub boundary_edges: u64,
}

/// Knobs that rarely need changing.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PaintOptions {
    pub mode: PaintMode,
    /// Hard cap on the number of ticks; `None` means
    /// `10^4 |V| ln |V|` (at least 10^4).
    pub step_cap: Option<u64>,
    /// Fixed horizon for last-painted runs; `None` means
    /// [`default_last_painted_horizon`].
    pub horizon: Option<u64>,
}

impl PaintOptions {
    pub fn with_mode(mode: PaintMode) -> Self {
        PaintOptions {
            mode,
            ..Default::default()
        }
    }
}

pub fn default_step_cap(vertex_count: usize) -> u64 {
    let n = vertex_count as f64;
    (1e4 * n * n.ln().max(1.0)).ceil() as u64
}

/// Horizon at which last-painted marks are read: ten times `|V| ln |V|`,
/// and at least 256 ticks. If the union has not covered the graph by then
/// the horizon is doubled until it has.
pub fn default_last_painted_horizon(vertex_count: usize) -> u64 {
    let n = vertex_count as f64;
    ((10.0 * n * n.ln()).ceil() as u64).max(256)
}

const NEVER: u64 = u64::MAX;

/// Reusable per-worker buffers.
#[derive(Debug, Default, Clone)]
pub struct PaintScratch {
    times1: Vec<u64>,
    times2: Vec<u64>,
    marks: Vec<u8>,
}

impl PaintScratch {
    fn reset(&mut self, n: usize) {
        self.times1.clear();
        self.times1.resize(n, NEVER);
        self.times2.clear();
        self.times2.resize(n, NEVER);
        self.marks.clear();
        self.marks.resize(n, 0);
    }

    /// Final marks of the most recent run (1 or 2 per vertex).
    pub fn marks(&self) -> &[u8] {
        &self.marks
    }
}

/// Runs one painting to full coverage.
pub fn run_painting<R: Rng + ?Sized>(g: &Graph, cfg: &WalkConfig, opts: &PaintOptions, rng: &mut R) -> Result<PaintingOutcome> {
    run_painting_with(g, cfg, opts, rng, &mut PaintScratch::default())
}

pub fn run_painting_with<R: Rng + ?Sized>(
    g: &Graph,
    cfg: &WalkConfig,
    opts: &PaintOptions,
    rng: &mut R,
    scratch: &mut PaintScratch,
) -> Result<PaintingOutcome> {
    let n = g.vertex_count();
    if n < 2 {
        return Err(Error::param("painting needs at least two vertices"));
    }
    if !(cfg.laziness > 0.0 && cfg.laziness < 1.0) {
        return Err(Error::param(format!("painting needs laziness in (0, 1), got {}", cfg.laziness)));
    }
    let cap = opts.step_cap.unwrap_or_else(|| default_step_cap(n));
    scratch.reset(n);

    let mut x1 = g.sample_uniform_vertex(rng);
    let mut x2 = g.sample_uniform_vertex(rng);
    let mut uncovered = n;
    let PaintScratch { times1, times2, marks } = scratch;

    // In first-painted mode `times*` hold first-visit times, in last-painted
    // mode the latest visit time. Either way a slot is NEVER until visited.
    let record = |times: &mut [u64], other: &[u64], v: Vertex, t: u64, uncovered: &mut usize, overwrite: bool| {
        let slot = &mut times[v.index()];
        if *slot == NEVER {
            if other[v.index()] == NEVER {
                *uncovered -= 1;
            }
            *slot = t;
        } else if overwrite {
            *slot = t;
        }
    };

    let overwrite = opts.mode == PaintMode::LastPainted;
    record(times1, times2, x1, 0, &mut uncovered, overwrite);
    record(times2, times1, x2, 0, &mut uncovered, overwrite);

    let mut t = 0u64;
    let mut cover_time = if uncovered == 0 { 0 } else { NEVER };
    match opts.mode {
        PaintMode::FirstPainted => {
            while uncovered > 0 {
                t += 1;
                if t > cap {
                    return Err(Error::StepCapExceeded {
                        cap,
                        covered: n - uncovered,
                        total: n,
                    });
                }
                x1 = step(g, x1, cfg, rng);
                x2 = step(g, x2, cfg, rng);
                record(times1, times2, x1, t, &mut uncovered, false);
                record(times2, times1, x2, t, &mut uncovered, false);
            }
            cover_time = t;
        }
        PaintMode::LastPainted => {
            let mut horizon = opts.horizon.unwrap_or_else(|| default_last_painted_horizon(n));
            loop {
                while t < horizon {
                    t += 1;
                    x1 = step(g, x1, cfg, rng);
                    x2 = step(g, x2, cfg, rng);
                    record(times1, times2, x1, t, &mut uncovered, true);
                    record(times2, times1, x2, t, &mut uncovered, true);
                    if uncovered == 0 && cover_time == NEVER {
                        cover_time = t;
                    }
                }
                if uncovered == 0 {
                    break;
                }
                if horizon >= cap {
                    return Err(Error::StepCapExceeded {
                        cap,
                        covered: n - uncovered,
                        total: n,
                    });
                }
                horizon = (horizon * 2).min(cap);
            }
        }
    }

    let mut out = PaintingOutcome {
        a1_count: 0,
        a2_count: 0,
        tie_count: 0,
        wins1: 0,
        wins2: 0,
        b_statistic: 0,
        cover_time,
        boundary_edges: 0,
    };
    // NEVER sorts as "latest" for first visits and must sort as "earliest"
    // for last visits.
    let key = |time: u64| -> u64 {
        match (overwrite, time) {
            (true, NEVER) => 0,
            (true, t) => t + 1,
            (false, t) => t,
        }
    };
    for v in 0..n {
        let (k1, k2) = (key(times1[v]), key(times2[v]));
        let walk1_wins = if overwrite { k1 > k2 } else { k1 < k2 };
        let mark = if k1 == k2 {
            out.tie_count += 1;
            if rng.random::<bool>() {
                1
            } else {
                2
            }
        } else if walk1_wins {
            out.wins1 += 1;
            1
        } else {
            out.wins2 += 1;
            2
        };
        marks[v] = mark;
        if mark == 1 {
            out.a1_count += 1;
        }
    }
    out.a2_count = n as u64 - out.a1_count;
    out.b_statistic = out.wins1 as i64 - out.wins2 as i64;
    out.boundary_edges = count_boundary_edges(g, marks);
    Ok(out)
}

/// Number of edges whose endpoints carry different marks.
pub fn count_boundary_edges(g: &Graph, marks: &[u8]) -> u64 {
    let mut twice = 0u64;
    for v in 0..g.vertex_count() {
        let m = marks[v];
        g.for_each_neighbor(Vertex(v as u32), |u| {
            if marks[u.index()] != m {
                twice += 1;
            }
        });
    }
    twice / 2
}

/// Estimate of `E|B| / |V|` with a normal-theory confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub runs: usize,
}

pub fn boundary_fraction(g: &Graph, outcomes: &[PaintingOutcome], level: f64) -> Result<BoundaryEstimate> {
    let n = g.vertex_count() as f64;
    let xs: Vec<f64> = outcomes.iter().map(|o| o.boundary_edges as f64 / n).collect();
    let s = stats::variance_estimate(&xs, level)?;
    let std_error = (s.variance / s.count as f64).sqrt();
    let z = stats::normal_quantile(0.5 + level / 2.0);
    Ok(BoundaryEstimate {
        mean: s.mean,
        std_error,
        ci_low: s.mean - z * std_error,
        ci_high: s.mean + z * std_error,
        runs: s.count,
    })
}

/// Exact law of `|A_1|` for the first-painted process on a tiny graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PaintingLaw {
    /// `probabilities[k] = P[|A_1| = k]`, ties resolved by fair coins.
    pub probabilities: Vec<f64>,
    /// `joint[(wins1, ties)]`: law of the strict-win and tie counts.
    pub joint: HashMap<(usize, usize), f64>,
}

impl PaintingLaw {
    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.probabilities.iter().enumerate().map(|(k, p)| (k as f64 - m).powi(2) * p).sum()
    }
}

/// Largest graph the exact oracle accepts.
pub const BRUTE_FORCE_MAX_VERTICES: usize = 5;

const UNMARKED: u8 = 0;
const MARK1: u8 = 1;
const MARK2: u8 = 2;
const TIED: u8 = 3;

/// Solves the absorbing chain on (position 1, position 2, mark status per
/// vertex) exactly. Mark configurations only ever gain marks, so they are
/// processed from fully marked downwards; within a configuration the
/// positions form a small linear system.
pub fn brute_force_painting_law(g: &Graph, cfg: &WalkConfig) -> Result<PaintingLaw> {
    let n = g.vertex_count();
    if n > BRUTE_FORCE_MAX_VERTICES {
        return Err(Error::SizeCap {
            what: format!("{} (exact painting law)", g.spec()),
            actual: n as u128,
            cap: BRUTE_FORCE_MAX_VERTICES as u128,
        });
    }
    if n < 2 {
        return Err(Error::param("painting needs at least two vertices"));
    }
    cfg.validate()?;
    let kernel = dense_step_law(g, cfg);
    let outcomes = (n + 1) * (n + 1);
    let mut solver = LawSolver {
        n,
        kernel,
        memo: HashMap::new(),
        outcomes,
    };

    let mut total = vec![0.0; outcomes];
    let start_p = 1.0 / (n * n) as f64;
    for s1 in 0..n {
        for s2 in 0..n {
            let mut marks = vec![UNMARKED; n];
            if s1 == s2 {
                marks[s1] = TIED;
            } else {
                marks[s1] = MARK1;
                marks[s2] = MARK2;
            }
            let dist = solver.value(&marks, s1, s2);
            for (acc, d) in total.iter_mut().zip(dist) {
                *acc += start_p * d;
            }
        }
    }

    let mut probabilities = vec![0.0; n + 1];
    let mut joint = HashMap::new();
    for wins1 in 0..=n {
        for ties in 0..=n - wins1 {
            let p = total[wins1 * (n + 1) + ties];
            if p == 0.0 {
                continue;
            }
            joint.insert((wins1, ties), p);
            // each tie goes to walk 1 with probability 1/2
            let mut binom = 1.0;
            for k in 0..=ties {
                if k > 0 {
                    binom *= (ties - k + 1) as f64 / k as f64;
                }
                probabilities[wins1 + k] += p * binom * 0.5f64.powi(ties as i32);
            }
        }
    }
    Ok(PaintingLaw { probabilities, joint })
}

fn dense_step_law(g: &Graph, cfg: &WalkConfig) -> Vec<Vec<f64>> {
    let n = g.vertex_count();
    let mut p = vec![vec![0.0; n]; n];
    for (x, row) in p.iter_mut().enumerate() {
        let v = Vertex(x as u32);
        let deg = g.degree_of(v) as f64;
        row[x] += cfg.laziness;
        g.for_each_neighbor(v, |u| row[u.index()] += (1.0 - cfg.laziness) / deg);
    }
    p
}

struct LawSolver {
    n: usize,
    kernel: Vec<Vec<f64>>,
    /// Outcome distribution for every (marks, p1, p2) already solved; the
    /// vector is indexed by `wins1 * (n + 1) + ties`.
    memo: HashMap<Vec<u8>, Vec<Vec<f64>>>,
    outcomes: usize,
}

impl LawSolver {
    fn value(&mut self, marks: &[u8], p1: usize, p2: usize) -> Vec<f64> {
        if !self.memo.contains_key(marks) {
            let table = self.solve_configuration(marks);
            self.memo.insert(marks.to_vec(), table);
        }
        self.memo[marks][p1 * self.n + p2].clone()
    }

    fn terminal(&self, marks: &[u8]) -> Vec<f64> {
        let wins1 = marks.iter().filter(|&&m| m == MARK1).count();
        let ties = marks.iter().filter(|&&m| m == TIED).count();
        let mut d = vec![0.0; self.outcomes];
        d[wins1 * (self.n + 1) + ties] = 1.0;
        d
    }

    /// Values for every position pair under a fixed mark configuration.
    fn solve_configuration(&mut self, marks: &[u8]) -> Vec<Vec<f64>> {
        let n = self.n;
        if marks.iter().all(|&m| m != UNMARKED) {
            let t = self.terminal(marks);
            return vec![t; n * n];
        }
        // Only positions on marked vertices are reachable; others get zero rows.
        let states: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| marks[a] != UNMARKED && marks[b] != UNMARKED)
            .collect();
        let index: HashMap<(usize, usize), usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let m = states.len();
        let mut a = vec![vec![0.0; m]; m];
        let mut rhs = vec![vec![0.0; self.outcomes]; m];
        for (i, &(p1, p2)) in states.iter().enumerate() {
            a[i][i] += 1.0;
            for q1 in 0..n {
                let w1 = self.kernel[p1][q1];
                if w1 == 0.0 {
                    continue;
                }
                for q2 in 0..n {
                    let w = w1 * self.kernel[p2][q2];
                    if w == 0.0 {
                        continue;
                    }
                    let new1 = marks[q1] == UNMARKED;
                    let new2 = marks[q2] == UNMARKED;
                    if !new1 && !new2 {
                        a[i][index[&(q1, q2)]] -= w;
                        continue;
                    }
                    let mut next = marks.to_vec();
                    if new1 && new2 && q1 == q2 {
                        next[q1] = TIED;
                    } else {
                        if new1 {
                            next[q1] = MARK1;
                        }
                        if new2 {
                            next[q2] = MARK2;
                        }
                    }
                    let d = self.value(&next, q1, q2);
                    for (r, dv) in rhs[i].iter_mut().zip(d) {
                        *r += w * dv;
                    }
                }
            }
        }
        let sol = solve_dense(a, rhs);
        let mut table = vec![vec![0.0; self.outcomes]; n * n];
        for (i, &(p1, p2)) in states.iter().enumerate() {
            table[p1 * n + p2] = sol[i].clone();
        }
        table
    }
}

/// Gaussian elimination with partial pivoting, matrix right-hand side.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        a.swap(col, pivot);
        b.swap(col, pivot);
        let d = a[col][col];
        for row in col + 1..m {
            let f = a[row][col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..m {
                a[row][k] -= f * a[col][k];
            }
            let (top, bottom) = b.split_at_mut(row);
            for (x, y) in bottom[0].iter_mut().zip(&top[col]) {
                *x -= f * y;
            }
        }
    }
    for col in (0..m).rev() {
        let d = a[col][col];
        for x in b[col].iter_mut() {
            *x /= d;
        }
        for row in 0..col {
            let f = a[row][col];
            if f == 0.0 {
                continue;
            }
            let (top, bottom) = b.split_at_mut(col);
            for (x, y) in top[row].iter_mut().zip(&bottom[0]) {
                *x -= f * y;
            }
        }
    }
    b
}
