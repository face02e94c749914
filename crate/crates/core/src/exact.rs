//! Exact computations on small graphs by kernel powering.
//!
//! The kernel is stored sparsely; a dense view is available for small
//! graphs. For the built-in vertex-transitive families every quantity that
//! is a maximum or a sum over pairs reduces to the row of the origin.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::numeric::NeumaierSum;
use crate::walk::WalkConfig;

/// Largest graph accepted by the exact path.
pub const EXACT_VERTEX_CAP: usize = 1 << 16;
/// Largest graph for which all rows are powered at once.
pub const DENSE_VERTEX_CAP: usize = 4096;
/// Largest graph for the two-walk product chain.
pub const PRODUCT_VERTEX_CAP: usize = 2048;
pub const DEFAULT_ITERATION_CAP: u64 = 1_000_000;

/// One-step transition kernel of the lazy walk, in compressed rows.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    graph: Graph,
    laziness: f64,
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    pi: Vec<f64>,
}

pub fn transition_kernel(g: &Graph, cfg: &WalkConfig) -> Result<KernelMatrix> {
    cfg.validate()?;
    let n = g.vertex_count();
    if n > EXACT_VERTEX_CAP {
        return Err(Error::SizeCap {
            what: format!("exact analysis of {}", g.spec()),
            actual: n as u128,
            cap: EXACT_VERTEX_CAP as u128,
        });
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    offsets.push(0);
    let mut row: Vec<(u32, f64)> = Vec::new();
    for x in 0..n {
        let v = Vertex(x as u32);
        let move_p = (1.0 - cfg.laziness) / g.degree_of(v) as f64;
        row.clear();
        row.push((x as u32, cfg.laziness));
        g.for_each_neighbor(v, |u| row.push((u.0, move_p)));
        row.sort_by_key(|e| e.0);
        for &(c, p) in &row {
            match cols.last() {
                Some(&last) if last == c && cols.len() > offsets[x] => *vals.last_mut().expect("paired") += p,
                _ => {
                    cols.push(c);
                    vals.push(p);
                }
            }
        }
        offsets.push(cols.len());
    }
    let two_e: f64 = (0..n).map(|x| g.degree_of(Vertex(x as u32)) as f64).sum();
    let pi = (0..n).map(|x| g.degree_of(Vertex(x as u32)) as f64 / two_e).collect();
    Ok(KernelMatrix {
        graph: g.clone(),
        laziness: cfg.laziness,
        offsets,
        cols,
        vals,
        pi,
    })
}

impl KernelMatrix {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn laziness(&self) -> f64 {
        self.laziness
    }

    pub fn vertex_count(&self) -> usize {
        self.pi.len()
    }

    /// Stationary law, `deg(y) / 2|E|`.
    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// Nonzero entries of row `x` as `(column, probability)`.
    pub fn row(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[x]..self.offsets[x + 1];
        self.cols[r.clone()].iter().map(|&c| c as usize).zip(self.vals[r].iter().copied())
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.row(x).find(|&(c, _)| c == y).map_or(0.0, |(_, p)| p)
    }

    /// Row-major dense copy.
    pub fn dense(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.vertex_count();
        dense_guard(n, "dense kernel")?;
        Ok((0..n)
            .map(|x| {
                let mut r = vec![0.0; n];
                for (c, p) in self.row(x) {
                    r[c] = p;
                }
                r
            })
            .collect())
    }

    /// `dst = src · P` (one step of a distribution).
    pub fn push(&self, src: &[f64], dst: &mut [f64]) {
        dst.fill(0.0);
        for (x, &m) in src.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for k in self.offsets[x]..self.offsets[x + 1] {
                dst[self.cols[k] as usize] += m * self.vals[k];
            }
        }
    }

    /// `dst = P · src` (one step of a function).
    pub fn pull(&self, src: &[f64], dst: &mut [f64]) {
        for (x, d) in dst.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.offsets[x]..self.offsets[x + 1] {
                s += self.vals[k] * src[self.cols[k] as usize];
            }
            *d = s;
        }
    }

    /// `t`-step distribution from `source`.
    pub fn power_row(&self, source: Vertex, t: u64) -> Result<Vec<f64>> {
        self.graph.check_vertex(source)?;
        let n = self.vertex_count();
        let mut cur = vec![0.0; n];
        let mut next = vec![0.0; n];
        cur[source.index()] = 1.0;
        for _ in 0..t {
            self.push(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }
}

fn dense_guard(n: usize, what: &str) -> Result<()> {
    if n > DENSE_VERTEX_CAP {
        return Err(Error::SizeCap {
            what: what.to_string(),
            actual: n as u128,
            cap: DENSE_VERTEX_CAP as u128,
        });
    }
    Ok(())
}

/// Rows that must be powered to take maxima over all starting points.
fn representative_rows(k: &KernelMatrix) -> Result<Vec<usize>> {
    if k.graph.is_transitive_family() {
        Ok(vec![0])
    } else {
        dense_guard(k.vertex_count(), "all-rows powering")?;
        Ok((0..k.vertex_count()).collect())
    }
}

/// Distributions of several starting rows, advanced together.
struct RowPowers<'a> {
    kernel: &'a KernelMatrix,
    rows: Vec<Vec<f64>>,
    scratch: Vec<f64>,
}

impl<'a> RowPowers<'a> {
    fn new(kernel: &'a KernelMatrix, starts: &[usize]) -> Self {
        let n = kernel.vertex_count();
        let rows = starts
            .iter()
            .map(|&s| {
                let mut r = vec![0.0; n];
                r[s] = 1.0;
                r
            })
            .collect();
        RowPowers {
            kernel,
            rows,
            scratch: vec![0.0; n],
        }
    }

    fn advance(&mut self) {
        for r in &mut self.rows {
            self.kernel.push(r, &mut self.scratch);
            std::mem::swap(r, &mut self.scratch);
        }
    }

    fn max_ratio_deviation(&self) -> f64 {
        let pi = self.kernel.stationary();
        self.rows
            .iter()
            .flat_map(|r| r.iter().zip(pi).map(|(p, q)| (p / q - 1.0).abs()))
            .fold(0.0, f64::max)
    }

    fn max_ratio(&self) -> f64 {
        let pi = self.kernel.stationary();
        self.rows.iter().flat_map(|r| r.iter().zip(pi).map(|(p, q)| p / q)).fold(0.0, f64::max)
    }

    fn max_tv(&self) -> f64 {
        let pi = self.kernel.stationary();
        self.rows
            .iter()
            .map(|r| 0.5 * r.iter().zip(pi).map(|(p, q)| (p - q).abs()).collect::<NeumaierSum>().value())
            .fold(0.0, f64::max)
    }
}

/// Uniform mixing time and the deviation curve leading to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub t_mix: u64,
    /// `max |p^t(x,y)/pi(y) - 1|` for `t = 0..=t_mix`.
    pub deviation_curve: Vec<f64>,
}

pub fn uniform_mixing_time(kernel: &KernelMatrix) -> Result<MixingReport> {
    uniform_mixing_time_capped(kernel, DEFAULT_ITERATION_CAP)
}

pub fn uniform_mixing_time_capped(kernel: &KernelMatrix, cap: u64) -> Result<MixingReport> {
    let starts = representative_rows(kernel)?;
    let mut powers = RowPowers::new(kernel, &starts);
    let mut curve = vec![powers.max_ratio_deviation()];
    let mut t = 0;
    while *curve.last().expect("non-empty") > 0.25 {
        if t >= cap {
            return Err(Error::IterationCap(cap));
        }
        powers.advance();
        t += 1;
        curve.push(powers.max_ratio_deviation());
    }
    Ok(MixingReport {
        t_mix: t,
        deviation_curve: curve,
    })
}

/// `g(source, .)` summed over `t = 0..=horizon`.
pub fn green_row(kernel: &KernelMatrix, source: Vertex, horizon: u64) -> Result<Vec<f64>> {
    kernel.graph.check_vertex(source)?;
    let n = kernel.vertex_count();
    let mut cur = vec![0.0; n];
    let mut next = vec![0.0; n];
    cur[source.index()] = 1.0;
    let mut acc = vec![NeumaierSum::new(); n];
    for t in 0..=horizon {
        for (a, &p) in acc.iter_mut().zip(&cur) {
            a.add(p);
        }
        if t < horizon {
            kernel.push(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    Ok(acc.iter().map(NeumaierSum::value).collect())
}

/// Green's function `g(0, .)` over the mixing horizon.
pub fn green_function(kernel: &KernelMatrix, t_mix: u64) -> Result<Vec<f64>> {
    green_row(kernel, Vertex::ORIGIN, t_mix)
}

/// `P_x[tau(A) <= horizon]` for every `x`, by the backward recursion with
/// the target set made absorbing.
pub fn absorbing_recursion(kernel: &KernelMatrix, targets: &[Vertex], horizon: u64) -> Vec<f64> {
    let n = kernel.vertex_count();
    let mut u = vec![0.0; n];
    let mut next = vec![0.0; n];
    for t in targets {
        u[t.index()] = 1.0;
    }
    for _ in 0..horizon {
        kernel.pull(&u, &mut next);
        for t in targets {
            next[t.index()] = 1.0;
        }
        std::mem::swap(&mut u, &mut next);
    }
    u
}

/// `P_source[tau(y) <= horizon]` for every `y`, one absorbing recursion per
/// target.
pub fn hitting_row_per_target(kernel: &KernelMatrix, source: Vertex, horizon: u64) -> Result<Vec<f64>> {
    kernel.graph.check_vertex(source)?;
    Ok((0..kernel.vertex_count())
        .into_par_iter()
        .map(|y| absorbing_recursion(kernel, &[Vertex(y as u32)], horizon)[source.index()])
        .collect())
}

/// Hitting probabilities within `c * t_mix` steps from the base vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingTable {
    pub spec: String,
    pub laziness: f64,
    pub c: f64,
    pub t_mix: u64,
    pub horizon: u64,
    pub base: Vertex,
    /// `f_c(base, y)`.
    pub f_values: Vec<f64>,
    /// `g(base, y)` over the mixing horizon.
    pub green_values: Vec<f64>,
    pub f_bar: f64,
    pub f_statistic: f64,
}

/// `floor(c * t_mix)`.
pub fn horizon_steps(c: f64, t_mix: u64) -> u64 {
    (c * t_mix as f64 + 1e-9).floor() as u64
}

pub fn hitting_prob_table(kernel: &KernelMatrix, mixing: &MixingReport, c: f64) -> Result<HittingTable> {
    if !(c >= 1.0) || !c.is_finite() {
        return Err(Error::param(format!("horizon multiplier must be at least 1, got {c}")));
    }
    let horizon = horizon_steps(c, mixing.t_mix);
    if horizon > DEFAULT_ITERATION_CAP {
        return Err(Error::IterationCap(DEFAULT_ITERATION_CAP));
    }
    let g = &kernel.graph;
    let n = kernel.vertex_count();
    let green_values = green_function(kernel, mixing.t_mix)?;
    let (f_values, f_bar, f_statistic) = if g.is_transitive_family() {
        // P_0[tau(y) <= H] = P_y[tau(0) <= H]: every family has an
        // automorphism swapping 0 and y, so one recursion gives the row.
        let f = absorbing_recursion(kernel, &[Vertex::ORIGIN], horizon);
        let (bar, stat) = centered_statistic(&f);
        (f, bar, stat)
    } else {
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|y| absorbing_recursion(kernel, &[Vertex(y as u32)], horizon))
            .collect();
        let pi = kernel.stationary();
        let bar = (0..n)
            .flat_map(|x| columns.iter().zip(pi).map(move |(col, p)| col[x] * p))
            .collect::<NeumaierSum>()
            .value()
            / n as f64;
        let stat = columns
            .iter()
            .flat_map(|col| col.iter().map(|f| (f - bar).powi(2)))
            .collect::<NeumaierSum>()
            .value();
        let row = columns.iter().map(|col| col[0]).collect();
        (row, bar, stat)
    };
    Ok(HittingTable {
        spec: g.spec().to_string(),
        laziness: kernel.laziness,
        c,
        t_mix: mixing.t_mix,
        horizon,
        base: Vertex::ORIGIN,
        f_values,
        green_values,
        f_bar,
        f_statistic,
    })
}

/// `(f_bar, F)` for a row of a vertex-transitive table under the uniform law.
pub fn centered_statistic(f_row: &[f64]) -> (f64, f64) {
    let n = f_row.len() as f64;
    let bar = f_row.iter().copied().collect::<NeumaierSum>().value() / n;
    let ss = f_row.iter().map(|f| (f - bar).powi(2)).collect::<NeumaierSum>().value();
    (bar, n * ss)
}

/// `(f_bar, F)` of a table.
pub fn f_statistic(table: &HittingTable) -> (f64, f64) {
    (table.f_bar, table.f_statistic)
}

/// Variance prediction and its error scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariancePrediction {
    pub quarter_f: f64,
    /// `t_mix^2`, the scale of the unresolved additive error.
    pub error_scale: f64,
    /// `t_mix log|V| / |V|`.
    pub delta_n: f64,
}

pub fn predicted_variance(table: &HittingTable) -> Result<VariancePrediction> {
    if table.c < 2.0 {
        return Err(Error::param(format!("the prediction needs c >= 2, got {}", table.c)));
    }
    let n = table.f_values.len() as f64;
    let t = table.t_mix as f64;
    Ok(VariancePrediction {
        quarter_f: table.f_statistic / 4.0,
        error_scale: t * t,
        delta_n: t * n.ln() / n,
    })
}

/// Raw ratios for the three parts of the standing assumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    /// `sum_{y != 0} g(0,y)^2`.
    pub green_square_sum: f64,
    pub delta_n: f64,
    /// Target pairs examined for `r3`.
    pub r3_pairs: usize,
}

/// Number of extra far targets sampled for `r3` beyond the neighbors.
const R3_EXTRA_TARGETS: usize = 32;

pub fn check_assumptions(kernel: &KernelMatrix, mixing: &MixingReport, green: &[f64]) -> Result<AssumptionReport> {
    let n = kernel.vertex_count();
    if green.len() != n {
        return Err(Error::param("Green's row has the wrong length"));
    }
    let t = mixing.t_mix.max(1) as f64;
    let log_n = (n as f64).ln();
    let green_square_sum = green[1..].iter().map(|v| v * v).collect::<NeumaierSum>().value();

    // Pairs {y, z}: for transitive families y = 0 and z ranges over the
    // neighbors of 0 plus an evenly spaced sample; otherwise evenly spaced
    // pairs. The walk start x is maximized exactly, excluding y and z.
    let g = &kernel.graph;
    let mut pairs: Vec<(Vertex, Vertex)> = Vec::new();
    if g.is_transitive_family() {
        g.for_each_neighbor(Vertex::ORIGIN, |z| pairs.push((Vertex::ORIGIN, z)));
        let stride = (n / R3_EXTRA_TARGETS).max(1);
        pairs.extend((1..n).step_by(stride).map(|z| (Vertex::ORIGIN, Vertex(z as u32))));
    } else {
        for y in 0..n {
            g.for_each_neighbor(Vertex(y as u32), |z| {
                if z.index() > y {
                    pairs.push((Vertex(y as u32), z));
                }
            });
        }
        pairs.truncate(4 * R3_EXTRA_TARGETS);
    }
    pairs.sort();
    pairs.dedup();
    pairs.retain(|(y, z)| y != z);
    let r3 = pairs
        .par_iter()
        .map(|&(y, z)| {
            let u = absorbing_recursion(kernel, &[y, z], mixing.t_mix);
            u.iter()
                .enumerate()
                .filter(|&(x, _)| x != y.index() && x != z.index())
                .map(|(_, &p)| p)
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(AssumptionReport {
        r1: t * log_n * log_n / n as f64,
        r2: green_square_sum * log_n / t,
        r3,
        green_square_sum,
        delta_n: t * log_n / n as f64,
        r3_pairs: pairs.len(),
    })
}

/// Outcome of checking both mixing-decay inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvDecayReport {
    pub passed: bool,
    /// `max_x TV(p^t(x,.), pi)` for `t = 0..=4 t_mix`.
    pub tv_curve: Vec<f64>,
    /// `max_{x,y} |p^t(x,y)/pi(y) - 1|`.
    pub deviation_curve: Vec<f64>,
    /// `max_{x,y} p^t(x,y)/pi(y)`.
    pub max_ratio_curve: Vec<f64>,
    /// Largest `lhs - rhs` seen in the submultiplicative inequality.
    pub worst_tv_excess: f64,
    /// Largest `lhs - rhs` seen in the ratio inequality.
    pub worst_ratio_excess: f64,
    pub pairs_checked: usize,
}

pub const TV_SLACK: f64 = 1e-10;

pub fn tv_decay_check(kernel: &KernelMatrix, t_mix: u64) -> Result<TvDecayReport> {
    let n = kernel.vertex_count();
    dense_guard(n, "mixing-decay check")?;
    let starts: Vec<usize> = (0..n).collect();
    let mut powers = RowPowers::new(kernel, &starts);
    let last = 4 * t_mix.max(1);
    let (mut tv, mut dev, mut ratio) = (Vec::new(), Vec::new(), Vec::new());
    for t in 0..=last {
        if t > 0 {
            powers.advance();
        }
        tv.push(powers.max_tv());
        dev.push(powers.max_ratio_deviation());
        ratio.push(powers.max_ratio());
    }
    let mut worst_tv = f64::NEG_INFINITY;
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut pairs = 0;
    let last = last as usize;
    for t in 0..=last {
        for s in 0..=last - t {
            worst_tv = worst_tv.max(tv[t + s] - 4.0 * tv[t] * tv[s]);
            worst_ratio = worst_ratio.max(dev[t + s] - ratio[s] * tv[t]);
            pairs += 1;
        }
    }
    Ok(TvDecayReport {
        passed: worst_tv <= TV_SLACK && worst_ratio <= TV_SLACK,
        tv_curve: tv,
        deviation_curve: dev,
        max_ratio_curve: ratio,
        worst_tv_excess: worst_tv,
        worst_ratio_excess: worst_ratio,
        pairs_checked: pairs,
    })
}

/// Law of the first entrance of two independent stationary walks into
/// `{x, y}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointHitReport {
    /// Walk 1 enters at `x` while walk 2 is outside `{x, y}`.
    pub walk1_at_x: f64,
    pub walk1_at_y: f64,
    pub walk2_at_x: f64,
    pub walk2_at_y: f64,
    /// Both walks inside `{x, y}` at the first entrance time.
    pub simultaneous: f64,
    /// Mass not yet absorbed when the iteration stopped.
    pub unresolved: f64,
    pub steps: u64,
}

impl JointHitReport {
    /// `P[H(x, y)]`.
    pub fn p_h(&self) -> f64 {
        self.walk1_at_x
    }

    /// `P[H(y, x)]`.
    pub fn p_h_swapped(&self) -> f64 {
        self.walk1_at_y
    }

    pub fn total(&self) -> f64 {
        self.walk1_at_x + self.walk1_at_y + self.walk2_at_x + self.walk2_at_y + self.simultaneous + self.unresolved
    }
}

const JOINT_TOLERANCE: f64 = 1e-14;

pub fn joint_first_hit(kernel: &KernelMatrix, x: Vertex, y: Vertex) -> Result<JointHitReport> {
    let g = &kernel.graph;
    g.check_vertex(x)?;
    g.check_vertex(y)?;
    if x == y {
        return Err(Error::param("x and y must differ"));
    }
    let n = kernel.vertex_count();
    if n > PRODUCT_VERTEX_CAP {
        return Err(Error::SizeCap {
            what: "two-walk product chain".into(),
            actual: n as u128,
            cap: PRODUCT_VERTEX_CAP as u128,
        });
    }
    let pi = kernel.stationary();
    // mass[a * n + b]: walk 1 at a, walk 2 at b, neither has entered.
    let mut mass: Vec<f64> = (0..n * n).map(|i| pi[i / n] * pi[i % n]).collect();
    let mut tmp = vec![0.0; n * n];
    let mut out = JointHitReport {
        walk1_at_x: 0.0,
        walk1_at_y: 0.0,
        walk2_at_x: 0.0,
        walk2_at_y: 0.0,
        simultaneous: 0.0,
        unresolved: 0.0,
        steps: 0,
    };
    let mut acc = [NeumaierSum::new(); 5];
    let absorb = |mass: &mut [f64], acc: &mut [NeumaierSum; 5]| {
        for a in [x, y] {
            for b in 0..n {
                let m = std::mem::take(&mut mass[a.index() * n + b]);
                let slot = if b == x.index() || b == y.index() {
                    4
                } else if a == x {
                    0
                } else {
                    1
                };
                acc[slot].add(m);
            }
        }
        for b in [x, y] {
            for a in 0..n {
                let m = std::mem::take(&mut mass[a * n + b.index()]);
                acc[if b == x { 2 } else { 3 }].add(m);
            }
        }
    };
    absorb(&mut mass, &mut acc);
    let mut remaining: f64 = mass.iter().sum();
    while remaining > JOINT_TOLERANCE && out.steps < DEFAULT_ITERATION_CAP {
        // walk 2 moves: each row of the mass matrix is pushed through P
        mass.par_chunks(n).zip(tmp.par_chunks_mut(n)).for_each(|(src, dst)| kernel.push(src, dst));
        // walk 1 moves: row a spreads over rows a'
        mass.fill(0.0);
        for a in 0..n {
            let src = &tmp[a * n..(a + 1) * n];
            for (a2, p) in kernel.row(a) {
                let dst = &mut mass[a2 * n..(a2 + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += p * s;
                }
            }
        }
        absorb(&mut mass, &mut acc);
        out.steps += 1;
        if out.steps % 16 == 0 {
            remaining = mass.iter().copied().collect::<NeumaierSum>().value();
        }
    }
    out.walk1_at_x = acc[0].value();
    out.walk1_at_y = acc[1].value();
    out.walk2_at_x = acc[2].value();
    out.walk2_at_y = acc[3].value();
    out.simultaneous = acc[4].value();
    out.unresolved = mass.iter().copied().collect::<NeumaierSum>().value();
    Ok(out)
}

/// `sum_{x,y} (f_c(x,y) g_c(y,y) - g_c(x,y))^2` with `g_c` summed up to
/// `floor(c t_mix)`, for a vertex-transitive family.
pub fn green_reduction_discrepancy(kernel: &KernelMatrix, mixing: &MixingReport, c: f64) -> Result<f64> {
    if !kernel.graph.is_transitive_family() {
        return Err(Error::UnsupportedFamily("green_reduction_discrepancy"));
    }
    let horizon = horizon_steps(c, mixing.t_mix);
    let f = absorbing_recursion(kernel, &[Vertex::ORIGIN], horizon);
    let gc = green_row(kernel, Vertex::ORIGIN, horizon)?;
    let n = kernel.vertex_count() as f64;
    let s = f
        .iter()
        .zip(&gc)
        .map(|(fv, gv)| (fv * gc[0] - gv).powi(2))
        .collect::<NeumaierSum>()
        .value();
    Ok(n * s)
}

/// Header stored next to a hitting table's CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableHeader {
    pub spec: String,
    pub laziness: f64,
    pub c: f64,
    pub t_mix: u64,
    pub horizon: u64,
    pub base: u32,
    pub vertex_count: usize,
    pub f_bar: f64,
    pub f_statistic: f64,
    pub version: String,
}

/// File stem for a table keyed by `(spec, laziness, c)`.
pub fn cache_key(spec: &str, laziness: f64, c: f64) -> String {
    let clean: String = spec
        .chars()
        .map(|ch| if ch.is_ascii_alphanumeric() { ch } else { '_' })
        .collect();
    format!("{clean}__lambda{laziness}__c{c}")
}

impl HittingTable {
    pub fn header(&self) -> TableHeader {
        TableHeader {
            spec: self.spec.clone(),
            laziness: self.laziness,
            c: self.c,
            t_mix: self.t_mix,
            horizon: self.horizon,
            base: self.base.0,
            vertex_count: self.f_values.len(),
            f_bar: self.f_bar,
            f_statistic: self.f_statistic,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("y_index,f_value,g_value\n");
        for (y, (f, g)) in self.f_values.iter().zip(&self.green_values).enumerate() {
            s.push_str(&format!("{y},{f},{g}\n"));
        }
        s
    }

    /// Writes `<key>.csv` and `<key>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let key = cache_key(&self.spec, self.laziness, self.c);
        let csv = dir.join(format!("{key}.csv"));
        let json = dir.join(format!("{key}.json"));
        fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))?;
        let header = serde_json::to_string_pretty(&self.header()).map_err(|e| Error::Malformed(e.to_string()))?;
        fs::write(&json, header).map_err(|e| Error::io(&json, e))?;
        Ok((csv, json))
    }

    pub fn read(csv: &Path, json: &Path) -> Result<Self> {
        let header: TableHeader = serde_json::from_str(&fs::read_to_string(json).map_err(|e| Error::io(json, e))?)
            .map_err(|e| Error::Malformed(format!("{}: {e}", json.display())))?;
        let text = fs::read_to_string(csv).map_err(|e| Error::io(csv, e))?;
        let mut f_values = Vec::with_capacity(header.vertex_count);
        let mut green_values = Vec::with_capacity(header.vertex_count);
        for (i, line) in text.lines().skip(1).enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            let bad = || Error::Malformed(format!("{}: line {}", csv.display(), i + 2));
            if fields.len() != 3 || fields[0].parse::<usize>().ok() != Some(i) {
                return Err(bad());
            }
            f_values.push(fields[1].parse::<f64>().map_err(|_| bad())?);
            green_values.push(fields[2].parse::<f64>().map_err(|_| bad())?);
        }
        if f_values.len() != header.vertex_count {
            return Err(Error::Malformed(format!("{}: expected {} rows", csv.display(), header.vertex_count)));
        }
        Ok(HittingTable {
            spec: header.spec,
            laziness: header.laziness,
            c: header.c,
            t_mix: header.t_mix,
            horizon: header.horizon,
            base: Vertex(header.base),
            f_values,
            green_values,
            f_bar: header.f_bar,
            f_statistic: header.f_statistic,
        })
    }
}

/// Builds the table, reusing `<cache_dir>/<key>.{csv,json}` when present.
/// Returns the table and whether it came from the cache.
pub fn cached_hitting_table(g: &Graph, cfg: &WalkConfig, c: f64, cache_dir: Option<&Path>) -> Result<(HittingTable, bool)> {
    if let Some(dir) = cache_dir {
        let key = cache_key(&g.spec().to_string(), cfg.laziness, c);
        let (csv, json) = (dir.join(format!("{key}.csv")), dir.join(format!("{key}.json")));
        if csv.exists() && json.exists() {
            if let Ok(t) = HittingTable::read(&csv, &json) {
                return Ok((t, true));
            }
        }
    }
    let kernel = transition_kernel(g, cfg)?;
    let mixing = uniform_mixing_time(&kernel)?;
    let table = hitting_prob_table(&kernel, &mixing, c)?;
    if let Some(dir) = cache_dir {
        table.write(dir)?;
    }
    Ok((table, false))
}
