//! Estimators and tests used to check simulated batches against the exact
//! predictions.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::numeric::NeumaierSum;
use crate::painter::default_step_cap;
use crate::walk::{derive_stream, step, WalkConfig};

/// Mergeable first and second moments with compensated sums.
///
/// Merging is exact up to rounding of the compensated totals, so the merge
/// order does not change results beyond ~1e-12 relative.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    count: usize,
    sum: NeumaierSum,
    sum_sq: NeumaierSum,
    min: f64,
    max: f64,
}

impl Moments {
    pub fn new() -> Self {
        Moments {
            count: 0,
            sum: NeumaierSum::new(),
            sum_sq: NeumaierSum::new(),
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.sum.value() / self.count as f64
    }

    /// Unbiased variance.
    pub fn variance(&self) -> f64 {
        let n = self.count as f64;
        let m = self.mean();
        ((self.sum_sq.value() - n * m * m) / (n - 1.0)).max(0.0)
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Point estimates with a variance confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Chi-square interval for the variance. Exact only for normal data.
    pub variance_ci: (f64, f64),
    pub level: f64,
    pub min: f64,
    pub max: f64,
}

impl SampleSummary {
    pub fn std_error_of_mean(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }
}

pub fn variance_estimate(samples: &[f64], level: f64) -> Result<SampleSummary> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: samples.len(),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param(format!("confidence level must lie in (0, 1), got {level}")));
    }
    // Two-pass variance: the moment accumulator is for merges, this is for accuracy.
    let n = samples.len();
    let mean = samples.iter().copied().collect::<NeumaierSum>().value() / n as f64;
    let ss = samples.iter().map(|x| (x - mean).powi(2)).collect::<NeumaierSum>().value();
    let variance = ss / (n - 1) as f64;
    let chi = ChiSquared::new((n - 1) as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    let alpha = 1.0 - level;
    let lo = ss / chi.inverse_cdf(1.0 - alpha / 2.0);
    let hi = ss / chi.inverse_cdf(alpha / 2.0);
    let (min, max) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    Ok(SampleSummary {
        count: n,
        mean,
        variance,
        variance_ci: (lo.min(variance), hi.max(variance)),
        level,
        min,
        max,
    })
}

/// Percentile bootstrap interval for the variance.
pub fn bootstrap_variance_ci<R: Rng + ?Sized>(samples: &[f64], level: f64, resamples: usize, rng: &mut R) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: samples.len(),
        });
    }
    let n = samples.len();
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            let m: Moments = (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
            m.variance()
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    let at = |q: f64| stats[((q * resamples as f64).floor() as usize).min(resamples - 1)];
    Ok((at(alpha / 2.0), at(1.0 - alpha / 2.0)))
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// `|mean - target| < k * SE`.
pub fn mean_within(summary: &SampleSummary, target: f64, k: f64) -> bool {
    (summary.mean - target).abs() < k * summary.std_error_of_mean()
}

/// Sorted standardized values against normal plotting positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QQData {
    /// `(normal quantile, standardized order statistic)` pairs.
    pub pairs: Vec<(f64, f64)>,
    pub correlation: f64,
}

impl QQData {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("normal_quantile,sample_quantile\n");
        for (q, s) in &self.pairs {
            out.push_str(&format!("{q},{s}\n"));
        }
        out
    }
}

pub const QQ_MIN_SAMPLES: usize = 100;

pub fn qq_data(samples: &[f64]) -> Result<QQData> {
    if samples.len() < QQ_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            need: QQ_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let s = variance_estimate(samples, 0.95)?;
    let sd = s.variance.sqrt();
    if sd == 0.0 {
        return Err(Error::Numerical("sample standard deviation is zero".into()));
    }
    let mut z: Vec<f64> = samples.iter().map(|x| (x - s.mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    let normal = Normal::standard();
    let pairs: Vec<(f64, f64)> = z
        .into_iter()
        .enumerate()
        .map(|(i, v)| (normal.inverse_cdf((i as f64 + 0.5) / n), v))
        .collect();
    let correlation = pearson(pairs.iter().map(|p| p.0), pairs.iter().map(|p| p.1));
    Ok(QQData { pairs, correlation })
}

fn pearson(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count() as f64;
    let mx = xs.clone().sum::<f64>() / n;
    let my = ys.clone().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Two-sample Kolmogorov-Smirnov result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample KS test with the asymptotic Kolmogorov p-value.
///
/// The statistic is evaluated only after each distinct value has been
/// absorbed into both empirical CDFs, so ties never inflate either side;
/// for discrete data the asymptotic p-value is then conservative.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    const MIN: usize = 50;
    for s in [a, b] {
        if s.len() < MIN {
            return Err(Error::TooFewSamples { need: MIN, got: s.len() });
        }
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    })
}

/// `P[K > lambda]` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // Jacobi-transformed series, fast for small lambda.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|k| ((2 * k - 1) as f64).powi(2) * c).map(f64::exp).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Monte Carlo estimate of the law of walk 2's position at the moment walk 1
/// first enters `{x, y}`, conditioned on walk 1 entering at `x` strictly
/// before walk 2 touches `{x, y}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnReport {
    pub runs: u64,
    /// Runs where the conditioning event held.
    pub conditioned: u64,
    pub p_event: f64,
    pub p_event_std_error: f64,
    /// Conditional hit counts per vertex `z`.
    pub counts: Vec<u64>,
    /// Largest `|ratio - 1| / (g(x,y) + g(y,z) + g(x,z))` over cells with
    /// at least `min_cell_hits` hits.
    pub max_scaled_deviation: f64,
    pub cells_used: usize,
    /// Pooled ratio `pi_tilde(F) / pi(F)` over the far set `F` of vertices
    /// whose Green's values to both `x` and `y` are below `far_threshold`.
    pub far_pooled_ratio: Option<f64>,
    /// Largest per-cell `|ratio - 1|` over the far set.
    pub far_max_deviation: Option<f64>,
    pub far_cells: usize,
    pub far_threshold: f64,
    pub min_cell_hits: u64,
}

impl RnReport {
    pub fn conditional_law(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.conditioned as f64).collect()
    }
}

/// Settings for [`rn_diagnostic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RnSettings {
    pub runs: u64,
    pub master_seed: u64,
    pub min_cell_hits: u64,
    pub far_threshold: f64,
}

impl Default for RnSettings {
    fn default() -> Self {
        RnSettings {
            runs: 100_000,
            master_seed: 0,
            min_cell_hits: 50,
            far_threshold: 0.05,
        }
    }
}

/// `green` is the row `g(0, w)` indexed by canonical difference `w`, so the
/// graph must be one of the built-in transitive families.
pub fn rn_diagnostic(g: &Graph, green: &[f64], x: Vertex, y: Vertex, cfg: &WalkConfig, settings: &RnSettings) -> Result<RnReport> {
    use rayon::prelude::*;

    if x == y {
        return Err(Error::param("x and y must differ"));
    }
    if green.len() != g.vertex_count() {
        return Err(Error::param("Green's row has the wrong length"));
    }
    let green_at = |a: Vertex, b: Vertex| -> Result<f64> { Ok(green[g.canonical_difference(a, b)?.index()]) };
    let gxy = green_at(x, y)?;
    let n = g.vertex_count();
    let cap = default_step_cap(n);

    const CHUNK: u64 = 4096;
    let chunks = settings.runs.div_ceil(CHUNK);
    let partials: Vec<Result<(u64, Vec<u64>)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; n];
            let mut hits = 0u64;
            for r in c * CHUNK..((c + 1) * CHUNK).min(settings.runs) {
                let mut rng = derive_stream(settings.master_seed, r);
                let mut a = g.sample_uniform_vertex(&mut rng);
                let mut b = g.sample_uniform_vertex(&mut rng);
                let mut t = 0;
                let inside = |v: Vertex| v == x || v == y;
                while !inside(a) && !inside(b) {
                    t += 1;
                    if t > cap {
                        return Err(Error::StepCapExceeded {
                            cap,
                            covered: 0,
                            total: n,
                        });
                    }
                    a = step(g, a, cfg, &mut rng);
                    b = step(g, b, cfg, &mut rng);
                }
                if a == x && !inside(b) {
                    hits += 1;
                    counts[b.index()] += 1;
                }
            }
            Ok((hits, counts))
        })
        .collect();
    let mut counts = vec![0u64; n];
    let mut conditioned = 0u64;
    for p in partials {
        let (h, c) = p?;
        conditioned += h;
        for (acc, v) in counts.iter_mut().zip(c) {
            *acc += v;
        }
    }
    if conditioned < settings.min_cell_hits {
        return Err(Error::TooFewSamples {
            need: settings.min_cell_hits as usize,
            got: conditioned as usize,
        });
    }
    let p_event = conditioned as f64 / settings.runs as f64;
    let p_event_std_error = (p_event * (1.0 - p_event) / settings.runs as f64).sqrt();

    let pi = 1.0 / n as f64;
    let mut max_scaled = 0.0f64;
    let mut cells_used = 0;
    let mut far_mass = 0u64;
    let mut far_cells = 0usize;
    let mut far_max: Option<f64> = None;
    for z in 0..n {
        let zv = Vertex(z as u32);
        if zv == x || zv == y {
            continue;
        }
        let (gxz, gyz) = (green_at(x, zv)?, green_at(y, zv)?);
        let ratio = counts[z] as f64 / conditioned as f64 / pi;
        if gxz < settings.far_threshold && gyz < settings.far_threshold {
            far_cells += 1;
            far_mass += counts[z];
            if counts[z] >= settings.min_cell_hits {
                let dev = (ratio - 1.0).abs();
                far_max = Some(far_max.map_or(dev, |m: f64| m.max(dev)));
            }
        }
        if counts[z] >= settings.min_cell_hits {
            cells_used += 1;
            max_scaled = max_scaled.max((ratio - 1.0).abs() / (gxy + gyz + gxz));
        }
    }
    let far_pooled_ratio = (far_cells > 0).then(|| far_mass as f64 / conditioned as f64 / (far_cells as f64 * pi));
    Ok(RnReport {
        runs: settings.runs,
        conditioned,
        p_event,
        p_event_std_error,
        counts,
        max_scaled_deviation: max_scaled,
        cells_used,
        far_pooled_ratio,
        far_max_deviation: far_max,
        far_cells,
        far_threshold: settings.far_threshold,
        min_cell_hits: settings.min_cell_hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::derive_stream;
    use rand_distr_free::standard_normal;

    /// Box-Muller on top of the crate's streams; keeps the tests free of an
    /// extra distribution dependency.
    mod rand_distr_free {
        use rand::Rng;
        pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
    }

    #[test]
    fn variance_closed_forms() {
        let s = variance_estimate(&[3.0; 10], 0.95).unwrap();
        assert_eq!(s.variance, 0.0);
        let s = variance_estimate(&[0.0, 2.0], 0.95).unwrap();
        assert_eq!(s.variance, 2.0);
        assert!(s.variance_ci.0 <= 2.0 && 2.0 <= s.variance_ci.1);
        assert!(matches!(variance_estimate(&[1.0], 0.95), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn chi_square_interval_coverage() {
        let trials = 200;
        let mut covered = 0;
        for t in 0..trials {
            let mut rng = derive_stream(2024, t);
            let xs: Vec<f64> = (0..10_000).map(|_| standard_normal(&mut rng)).collect();
            let s = variance_estimate(&xs, 0.95).unwrap();
            if s.variance_ci.0 <= 1.0 && 1.0 <= s.variance_ci.1 {
                covered += 1;
            }
        }
        assert!(covered as f64 >= 0.93 * trials as f64, "{covered}/{trials}");
    }

    #[test]
    fn bootstrap_interval_brackets_estimate() {
        let mut rng = derive_stream(5, 0);
        let xs: Vec<f64> = (0..2000).map(|_| standard_normal(&mut rng)).collect();
        let s = variance_estimate(&xs, 0.95).unwrap();
        let (lo, hi) = bootstrap_variance_ci(&xs, 0.95, 1000, &mut rng).unwrap();
        assert!(lo < s.variance && s.variance < hi);
        assert!(lo > 0.85 && hi < 1.15);
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let mut rng = derive_stream(6, 0);
        let xs: Vec<f64> = (0..5000).map(|_| 1e6 + standard_normal(&mut rng)).collect();
        let whole: Moments = xs.iter().copied().collect();
        let mut left: Moments = xs[..1234].iter().copied().collect();
        let right: Moments = xs[1234..].iter().copied().collect();
        left.merge(&right);
        assert_eq!(left.count(), whole.count());
        assert!((left.mean() - whole.mean()).abs() < 1e-12 * whole.mean());
        let two_pass = variance_estimate(&xs, 0.95).unwrap().variance;
        assert!((left.variance() - two_pass).abs() < 1e-3 * two_pass);
    }

    #[test]
    fn qq_exact_quantiles_correlate_perfectly() {
        let n = 500;
        let xs: Vec<f64> = (0..n).map(|i| normal_quantile((i as f64 + 0.5) / n as f64)).collect();
        let qq = qq_data(&xs).unwrap();
        assert!((qq.correlation - 1.0).abs() < 1e-12);
        for w in qq.pairs.windows(2) {
            assert!(w[0].0 <= w[1].0 && w[0].1 <= w[1].1);
        }
        assert!(qq.to_csv().lines().count() == n + 1);
    }

    #[test]
    fn qq_on_simulated_normals() {
        let mut rng = derive_stream(7, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| standard_normal(&mut rng)).collect();
        assert!(qq_data(&xs).unwrap().correlation > 0.999);
    }

    #[test]
    fn qq_errors() {
        assert!(matches!(qq_data(&[1.0; 50]), Err(Error::TooFewSamples { .. })));
        assert!(matches!(qq_data(&[1.0; 200]), Err(Error::Numerical(_))));
    }

    #[test]
    fn ks_edge_cases() {
        let a: Vec<f64> = (0..100).map(|i| (i % 10) as f64).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value > 0.99);
        let lo: Vec<f64> = (0..100).map(|i| (i % 10) as f64).collect();
        let hi: Vec<f64> = (0..100).map(|i| 100.0 + (i % 10) as f64).collect();
        let r = ks_two_sample(&lo, &hi).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 1e-10);
        assert!(ks_two_sample(&lo[..10], &hi).is_err());
    }

    #[test]
    fn kolmogorov_series_agree_and_match_table() {
        // Both branches agree near the switch point.
        let a = kolmogorov_survival(0.999_999);
        let b = kolmogorov_survival(1.000_001);
        assert!((a - b).abs() < 1e-5);
        // Classical critical values: P[K > 1.358] = 0.05, P[K > 1.628] = 0.01.
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 2e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_survival(0.8276) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn ks_same_distribution_rarely_rejects() {
        let mut rejects = 0;
        for t in 0..100 {
            let mut rng = derive_stream(99, t);
            let a: Vec<f64> = (0..400).map(|_| rng.random_range(0..20) as f64).collect();
            let b: Vec<f64> = (0..300).map(|_| rng.random_range(0..20) as f64).collect();
            if ks_two_sample(&a, &b).unwrap().p_value < 0.05 {
                rejects += 1;
            }
        }
        // conservative under ties: well under the nominal 5 per 100
        assert!(rejects <= 8, "{rejects}");
    }
}
