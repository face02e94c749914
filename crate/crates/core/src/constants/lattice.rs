//! Lattice Green's functions on `Z^d` and the constants built from them.
//!
//! `G(y)` for the simple walk is evaluated as
//! `int_0^inf prod_j e^{-s/d} I_{y_j}(s/d) ds` (the occupation density of
//! the continuous-time walk) on a fixed composite Gauss-Legendre grid,
//! with the tail beyond the last panel integrated from the large-argument
//! expansion of the Bessel factors.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::bessel::{asymptotic_coefficients, scaled_bessel_i};
use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre_on, least_squares, NeumaierSum};

/// Which walk the Green's values describe. The lazy walk holds half the
/// time, so its values are exactly twice the simple-walk values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WalkConvention {
    Simple,
    Lazy,
}

impl WalkConvention {
    pub fn scale(self) -> f64 {
        match self {
            WalkConvention::Simple => 1.0,
            WalkConvention::Lazy => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenSettings {
    /// Gauss-Legendre nodes per panel.
    pub nodes_per_panel: usize,
    /// Terms of the large-argument expansion used for the tail.
    pub tail_terms: usize,
    /// Requested absolute accuracy of `G(0)` for the simple walk.
    pub tolerance: f64,
}

impl Default for GreenSettings {
    fn default() -> Self {
        GreenSettings {
            nodes_per_panel: 24,
            tail_terms: 6,
            tolerance: 1e-10,
        }
    }
}

const FIRST_PANEL_END: f64 = 0.5;

/// Quadrature grid with the Bessel factors tabulated at every node.
#[derive(Debug, Clone)]
pub struct BesselGrid {
    d: usize,
    kmax: usize,
    weights: Vec<f64>,
    /// `table[k][i] = e^{-x_i} I_k(x_i)` with `x_i = s_i / d`.
    table: Vec<Vec<f64>>,
    /// Tail start in the scaled variable `x = s / d`.
    tail_x: f64,
    tail_coeffs: Vec<Vec<f64>>,
    tail_terms: usize,
    quadrature_error: f64,
}

impl BesselGrid {
    pub fn new(d: usize, kmax: usize, settings: &GreenSettings) -> Result<Self> {
        if d < 3 {
            return Err(Error::param(format!("the lattice Green's function needs d >= 3, got {d}")));
        }
        if settings.nodes_per_panel < 8 || settings.tail_terms < 2 {
            return Err(Error::param("too few quadrature nodes or tail terms"));
        }
        let grid = Self::build(d, kmax, settings.nodes_per_panel, settings.tail_terms);
        let coarse = Self::build(d, kmax, settings.nodes_per_panel - 6, settings.tail_terms - 1);
        let probes: Vec<Vec<u32>> = vec![vec![0; d], {
            let mut v = vec![0; d];
            v[0] = kmax as u32;
            v
        }];
        let err = probes
            .iter()
            .map(|y| (grid.simple_value(y) - coarse.simple_value(y)).abs())
            .fold(0.0, f64::max);
        if err > settings.tolerance {
            return Err(Error::Numerical(format!(
                "lattice Green's quadrature did not reach {:e} (estimated error {err:e})",
                settings.tolerance
            )));
        }
        Ok(BesselGrid {
            quadrature_error: err,
            ..grid
        })
    }

    fn build(d: usize, kmax: usize, nodes: usize, tail_terms: usize) -> Self {
        let x_end = (64.0 * ((kmax + 1) as f64).powi(2)).max(1e4);
        let s_end = x_end * d as f64;
        let mut panels = vec![(0.0, FIRST_PANEL_END)];
        let mut a = FIRST_PANEL_END;
        while a < s_end {
            panels.push((a, 2.0 * a));
            a *= 2.0;
        }
        let mut s = Vec::new();
        let mut weights = Vec::new();
        for (lo, hi) in panels {
            let (x, w) = gauss_legendre_on(nodes, lo, hi);
            s.extend(x);
            weights.extend(w);
        }
        let mut table = vec![vec![0.0; s.len()]; kmax + 1];
        for (i, &si) in s.iter().enumerate() {
            for (k, v) in scaled_bessel_i(si / d as f64, kmax).into_iter().enumerate() {
                table[k][i] = v;
            }
        }
        BesselGrid {
            d,
            kmax,
            weights,
            table,
            tail_x: a / d as f64,
            tail_coeffs: (0..=kmax as u64).map(|k| asymptotic_coefficients(k, tail_terms)).collect(),
            tail_terms,
            quadrature_error: 0.0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn quadrature_error(&self) -> f64 {
        self.quadrature_error
    }

    /// `d (2 pi)^{-d/2} sum_m C_m X^{1-d/2-m} / (d/2 + m - 1)`.
    fn tail(&self, coeffs: &[f64]) -> f64 {
        let h = self.d as f64 / 2.0;
        let x = self.tail_x;
        let pre = self.d as f64 * (2.0 * PI).powf(-h);
        coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c * x.powf(1.0 - h - m as f64) / (h + m as f64 - 1.0))
            .sum::<f64>()
            * pre
    }

    fn multiply_series(&self, acc: &[f64], k: usize) -> Vec<f64> {
        let b = &self.tail_coeffs[k];
        (0..self.tail_terms)
            .map(|m| (0..=m).map(|i| acc[i] * b[m - i]).sum())
            .collect()
    }

    /// Simple-walk `G(y)`; coordinates are taken in absolute value.
    pub fn simple_value(&self, y: &[u32]) -> f64 {
        assert_eq!(y.len(), self.d);
        let mut prod = vec![1.0; self.weights.len()];
        let mut series = vec![0.0; self.tail_terms];
        series[0] = 1.0;
        for &k in y {
            let k = k as usize;
            assert!(k <= self.kmax, "coordinate {k} beyond the tabulated range");
            for (p, t) in prod.iter_mut().zip(&self.table[k]) {
                *p *= t;
            }
            series = self.multiply_series(&series, k);
        }
        dot(&self.weights, &prod) + self.tail(&series)
    }

    /// Calls `f(class, multiplicity, G_simple)` for every class of lattice
    /// points with `|y|^2 <= radius_sq`. A class is a sorted nonincreasing
    /// vector of absolute coordinates; its multiplicity counts the signed
    /// permutations it represents.
    pub fn for_each_class(&self, radius_sq: u64, mut f: impl FnMut(&[u32], u64, f64)) {
        let d = self.d;
        let r = (radius_sq as f64).sqrt().floor() as u32;
        assert!(r as usize <= self.kmax, "radius beyond the tabulated range");
        let nodes = self.weights.len();
        let mut prods = vec![vec![1.0; nodes]; d + 1];
        let mut series = vec![vec![0.0; self.tail_terms]; d + 1];
        series[0][0] = 1.0;
        let mut y = vec![0u32; d];
        self.recurse(0, r, radius_sq, &mut y, &mut prods, &mut series, &mut f);
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &self,
        j: usize,
        max: u32,
        budget: u64,
        y: &mut Vec<u32>,
        prods: &mut Vec<Vec<f64>>,
        series: &mut Vec<Vec<f64>>,
        f: &mut impl FnMut(&[u32], u64, f64),
    ) {
        let d = self.d;
        if j == d {
            let value = dot(&self.weights, &prods[d]) + self.tail(&series[d]);
            f(y, multiplicity(y), value);
            return;
        }
        for k in 0..=max {
            let k2 = (k as u64) * (k as u64);
            if k2 > budget {
                break;
            }
            y[j] = k;
            let (before, after) = prods.split_at_mut(j + 1);
            for ((o, p), t) in after[0].iter_mut().zip(&before[j]).zip(&self.table[k as usize]) {
                *o = p * t;
            }
            series[j + 1] = self.multiply_series(&series[j], k as usize);
            self.recurse(j + 1, k, budget - k2, y, prods, series, f);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).collect::<NeumaierSum>().value()
}

/// Number of signed permutations of a class.
fn multiplicity(class: &[u32]) -> u64 {
    let d = class.len() as u64;
    let mut m: u64 = (1..=d).product();
    let mut i = 0;
    while i < class.len() {
        let mut j = i;
        while j < class.len() && class[j] == class[i] {
            j += 1;
        }
        m /= (1..=(j - i) as u64).product::<u64>();
        i = j;
    }
    m << class.iter().filter(|&&v| v != 0).count()
}

fn canonical_class(y: &[i64]) -> Vec<u32> {
    let mut c: Vec<u32> = y.iter().map(|v| v.unsigned_abs() as u32).collect();
    c.sort_unstable_by(|a, b| b.cmp(a));
    c
}

/// A Green's value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenValue {
    pub value: f64,
    pub error: f64,
}

/// `G(y; Z^d)` for the given walk convention.
pub fn lattice_green(d: usize, y: &[i64], convention: WalkConvention, settings: &GreenSettings) -> Result<GreenValue> {
    if y.len() != d {
        return Err(Error::param(format!("point has {} coordinates, expected {d}", y.len())));
    }
    let class = canonical_class(y);
    let grid = BesselGrid::new(d, class[0] as usize, settings)?;
    let s = convention.scale();
    Ok(GreenValue {
        value: s * grid.simple_value(&class),
        error: s * grid.quadrature_error(),
    })
}

/// Green's values on a ball, stored by symmetry class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeGreenTable {
    pub d: usize,
    pub radius: u32,
    pub convention: WalkConvention,
    pub quadrature_error: f64,
    values: HashMap<Vec<u32>, f64>,
}

impl LatticeGreenTable {
    pub fn build(d: usize, radius: u32, convention: WalkConvention, settings: &GreenSettings) -> Result<Self> {
        let grid = BesselGrid::new(d, radius as usize, settings)?;
        let mut values = HashMap::new();
        let s = convention.scale();
        grid.for_each_class((radius as u64).pow(2), |c, _, v| {
            values.insert(c.to_vec(), s * v);
        });
        Ok(LatticeGreenTable {
            d,
            radius,
            convention,
            quadrature_error: s * grid.quadrature_error(),
            values,
        })
    }

    /// `G(y)`, or `None` outside the ball.
    pub fn get(&self, y: &[i64]) -> Option<f64> {
        if y.len() != self.d {
            return None;
        }
        self.values.get(&canonical_class(y)).copied()
    }

    pub fn class_count(&self) -> usize {
        self.values.len()
    }
}

/// Coefficient `a_d` of `G(y) ~ a_d |y|^{2-d}` for the simple walk.
pub fn green_asymptotic_coefficient(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    h * gamma(h - 1.0) * PI.powf(-h)
}

/// Surface area of the unit sphere in `R^d`.
fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

fn ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

/// A limiting constant with its error bar and the parameters used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub d: usize,
    pub value: f64,
    pub error_bar: f64,
    pub parameters: BTreeMap<String, f64>,
}

/// Per-shell sums of `mult * G^2` and lattice-point counts, indexed by `|y|^2`.
struct Shells {
    green_sq: Vec<NeumaierSum>,
    counts: Vec<u64>,
    g0: f64,
}

fn shells(grid: &BesselGrid, radius: u32, scale: f64) -> Shells {
    let r2 = (radius as u64).pow(2);
    let mut green_sq = vec![NeumaierSum::new(); r2 as usize + 1];
    let mut counts = vec![0u64; r2 as usize + 1];
    let mut g0 = 0.0;
    grid.for_each_class(r2, |c, m, v| {
        let v = scale * v;
        let k: u64 = c.iter().map(|&x| (x as u64).pow(2)).sum();
        green_sq[k as usize].add(m as f64 * v * v);
        counts[k as usize] += m;
        if k == 0 {
            g0 = v;
        }
    });
    Shells { green_sq, counts, g0 }
}

impl Shells {
    /// `(sum_{|y| <= r} G^2, #points)`.
    fn ball(&self, radius: u32) -> (f64, u64) {
        let r2 = (radius as usize).pow(2).min(self.counts.len() - 1);
        let mut s = NeumaierSum::new();
        for v in &self.green_sq[..=r2] {
            s.merge(v);
        }
        (s.value(), self.counts[..=r2].iter().sum())
    }
}

/// `alpha_d = sum_y G(y)^2 / G(0)^2` for `d >= 5`.
pub fn alpha_high_d(d: usize, radius: u32, settings: &GreenSettings) -> Result<AlphaEstimate> {
    alpha_high_d_with(d, radius, WalkConvention::Lazy, settings)
}

pub fn alpha_high_d_with(d: usize, radius: u32, convention: WalkConvention, settings: &GreenSettings) -> Result<AlphaEstimate> {
    if d < 5 {
        return Err(Error::param(format!("alpha_high_d needs d >= 5, got {d}")));
    }
    if radius < 4 {
        return Err(Error::param(format!("radius {radius} is too small for a tail correction")));
    }
    let grid = BesselGrid::new(d, radius as usize, settings)?;
    let scale = convention.scale();
    let sh = shells(&grid, radius, scale);
    let a = scale * green_asymptotic_coefficient(d);
    let estimate = |r: u32| {
        let (sum, count) = sh.ball(r);
        let r_eff = (count as f64 / ball_volume(d)).powf(1.0 / d as f64);
        let tail = a * a * sphere_area(d) * r_eff.powf(4.0 - d as f64) / (d as f64 - 4.0);
        (sum / (sh.g0 * sh.g0), tail / (sh.g0 * sh.g0))
    };
    let (partial, tail) = estimate(radius);
    let (half_partial, half_tail) = estimate(radius / 2);
    let value = partial + tail;
    let quad = 4.0 * partial * scale * grid.quadrature_error() / sh.g0;
    let error_bar = (value - half_partial - half_tail).abs() + quad;
    let mut parameters = BTreeMap::new();
    parameters.insert("radius".into(), radius as f64);
    parameters.insert("partial_sum".into(), partial);
    parameters.insert("tail".into(), tail);
    parameters.insert("nodes_per_panel".into(), settings.nodes_per_panel as f64);
    parameters.insert("g0".into(), sh.g0);
    Ok(AlphaEstimate { d, value, error_bar, parameters })
}

/// Slope of `S(n) = sum_{|y| <= n} G(y)^2 / G(0)^2` against `log n` in
/// four dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaFourReport {
    /// Fit over `[n_max / 4, n_max]`.
    pub estimate: AlphaEstimate,
    /// Fit over `[n_max / 2, n_max]`.
    pub narrow_window: AlphaEstimate,
    /// `2 pi^2 a_4^2 / G(0)^2` from the asymptotic form of `G`.
    pub closed_form_slope: f64,
    /// `(n, S(n))` for `n = 1..=n_max`.
    pub partial_sums: Vec<(u32, f64)>,
}

impl AlphaFourReport {
    pub fn ratio_to_closed_form(&self) -> f64 {
        self.estimate.value / self.closed_form_slope
    }

    pub fn windows_agree(&self) -> bool {
        (self.estimate.value - self.narrow_window.value).abs() <= self.estimate.error_bar + self.narrow_window.error_bar
    }
}

/// Largest relative fit residual accepted.
const ALPHA_FOUR_MAX_RMS: f64 = 1e-2;

pub fn alpha_four(n_max: u32, settings: &GreenSettings) -> Result<AlphaFourReport> {
    if n_max < 32 {
        return Err(Error::param(format!("n_max must be at least 32, got {n_max}")));
    }
    let grid = BesselGrid::new(4, n_max as usize, settings)?;
    let sh = shells(&grid, n_max, WalkConvention::Lazy.scale());
    let g0sq = sh.g0 * sh.g0;
    // cumulative sums at every integer radius
    let mut partial_sums = Vec::with_capacity(n_max as usize);
    let mut acc = NeumaierSum::new();
    let mut next_r2 = 0usize;
    for n in 1..=n_max {
        let r2 = (n as usize).pow(2);
        while next_r2 <= r2 {
            acc.merge(&sh.green_sq[next_r2]);
            next_r2 += 1;
        }
        partial_sums.push((n, acc.value() / g0sq));
    }
    let fit = |lo: u32| -> Result<AlphaEstimate> {
        let pts: Vec<&(u32, f64)> = partial_sums.iter().filter(|(n, _)| *n >= lo).collect();
        let cols = vec![
            vec![1.0; pts.len()],
            pts.iter().map(|(n, _)| (*n as f64).ln()).collect(),
            pts.iter().map(|(n, _)| (*n as f64).powi(-2)).collect(),
        ];
        let ys: Vec<f64> = pts.iter().map(|(_, s)| *s).collect();
        let ls = least_squares(&cols, &ys)?;
        let slope = ls.coefficients[1];
        if ls.rms > ALPHA_FOUR_MAX_RMS * slope.abs() {
            return Err(Error::Numerical(format!("alpha_4 fit residual {} too large", ls.rms)));
        }
        let mut parameters = BTreeMap::new();
        parameters.insert("n_max".into(), n_max as f64);
        parameters.insert("window_lo".into(), lo as f64);
        parameters.insert("fit_rms".into(), ls.rms);
        parameters.insert("g0".into(), sh.g0);
        Ok(AlphaEstimate {
            d: 4,
            value: slope,
            error_bar: 2.0 * ls.std_errors[1],
            parameters,
        })
    };
    let a = WalkConvention::Lazy.scale() * green_asymptotic_coefficient(4);
    Ok(AlphaFourReport {
        estimate: fit(n_max / 4)?,
        narrow_window: fit(n_max / 2)?,
        closed_form_slope: 2.0 * PI * PI * a * a / g0sq,
        partial_sums,
    })
}
