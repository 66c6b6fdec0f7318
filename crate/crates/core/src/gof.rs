//! Goodness-of-fit tools and running estimates.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

/// Poisson probability `P(N = k)` for mean `mean >= 0`.
pub fn poisson_pmf(k: usize, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let k = k as f64;
    (k * mean.ln() - mean - ln_gamma(k + 1.0)).exp()
}

/// `½ Σ |p_k - q_k|` over the union of supports (missing entries are zero).
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..n).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Pearson chi-square test of integer counts against cell probabilities.
/// The last cell absorbs all remaining probability mass; adjacent cells are
/// pooled from the right until every expected count reaches `min_expected`.
pub fn chi_square_gof(observed: &[u64], probabilities: &[f64], min_expected: f64) -> TestResult {
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let len = observed.len().max(probabilities.len());
    let mut obs: Vec<f64> = (0..len).map(|i| observed.get(i).copied().unwrap_or(0) as f64).collect();
    let mut exp: Vec<f64> = (0..len)
        .map(|i| probabilities.get(i).copied().unwrap_or(0.0) * nf)
        .collect();
    let covered: f64 = exp.iter().sum();
    if let Some(last) = exp.last_mut() {
        *last += (nf - covered).max(0.0);
    }
    // pool small cells from the tail, then from the head
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    while let (Some(o), Some(e)) = (obs.pop(), exp.pop()) {
        o_acc += o;
        e_acc += e;
        if e_acc >= min_expected {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(c) => {
                c.0 += o_acc;
                c.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    let statistic: f64 = cells
        .iter()
        .filter(|c| c.1 > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = cells.len().saturating_sub(1);
    TestResult {
        statistic,
        p_value: chi_square_sf(statistic, dof),
    }
}

/// Chi-square test of homogeneity for a table of counts (rows are groups).
pub fn chi_square_homogeneity(table: &[Vec<u64>]) -> TestResult {
    let cols = table.iter().map(Vec::len).max().unwrap_or(0);
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|j| table.iter().map(|r| r.get(j).copied().unwrap_or(0) as f64).sum())
        .collect();
    let total: f64 = row_sums.iter().sum();
    let used_cols = col_sums.iter().filter(|&&c| c > 0.0).count();
    let used_rows = row_sums.iter().filter(|&&r| r > 0.0).count();
    let mut statistic = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &cs) in col_sums.iter().enumerate() {
            let e = row_sums[i] * cs / total;
            if e > 0.0 {
                let o = row.get(j).copied().unwrap_or(0) as f64;
                statistic += (o - e) * (o - e) / e;
            }
        }
    }
    let dof = used_rows.saturating_sub(1) * used_cols.saturating_sub(1);
    TestResult {
        statistic,
        p_value: chi_square_sf(statistic, dof),
    }
}

fn chi_square_sf(x: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    dist.sf(x)
}

/// Asymptotic Kolmogorov survival function at `sqrt(n_eff) · D`, with the
/// usual small-sample correction.
fn kolmogorov_sf(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> TestResult {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    TestResult {
        statistic: d,
        p_value: kolmogorov_sf(d, n),
    }
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    TestResult {
        statistic: d,
        p_value: kolmogorov_sf(d, n * m / (n + m)),
    }
}

/// A Monte-Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    /// Whether `value` lies within `k` standard errors.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

/// Welford accumulator for mean and variance.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningStats {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            std_error: if self.n == 0 {
                f64::INFINITY
            } else {
                (self.variance() / self.n as f64).sqrt()
            },
            samples: self.n,
        }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Least-squares slope of `y` on `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
