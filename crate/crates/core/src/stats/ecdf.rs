use crate::error::{Error, Result};

/// Empirical CDF of a finite sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "empirical CDF of an empty sample"));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::invalid("samples", "NaN in sample"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted: samples })
    }

    pub fn from_slice(samples: &[f64]) -> Result<Self> {
        Ecdf::new(samples.to_vec())
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Right-continuous `#{x_i <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// Runs of tied samples as `(value, count_below, count_through)`.
    fn steps(&self) -> impl Iterator<Item = (f64, usize, usize)> + '_ {
        let n = self.sorted.len();
        let mut i = 0;
        std::iter::from_fn(move || {
            if i >= n {
                return None;
            }
            let x = self.sorted[i];
            let mut j = i + 1;
            while j < n && self.sorted[j] == x {
                j += 1;
            }
            let out = (x, i, j);
            i = j;
            Some(out)
        })
    }
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n - F|`, with both
/// one-sided gaps checked at every jump of the ECDF. The left gap uses
/// `F` just below the jump, so a CDF with atoms is handled too.
pub fn ks_distance(e: &Ecdf, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = e.len() as f64;
    e.steps()
        .map(|(x, below, through)| {
            let right = (through as f64 / n - cdf(x)).abs();
            let left = (cdf(next_below(x)) - below as f64 / n).abs();
            right.max(left)
        })
        .fold(0.0, f64::max)
}

fn next_below(x: f64) -> f64 {
    if x.is_infinite() || x.is_nan() {
        x
    } else {
        x.next_down()
    }
}

/// Two-sample statistic `sup |F_n - G_m|`.
pub fn ks_two_sample(a: &Ecdf, b: &Ecdf) -> f64 {
    let (xs, ys) = (a.sorted_samples(), b.sorted_samples());
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// `sup |F - G|` over a grid, for two continuous CDFs.
pub fn ks_between_cdfs(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, grid: &[f64]) -> f64 {
    grid.iter().map(|&x| (f(x) - g(x)).abs()).fold(0.0, f64::max)
}

/// Asymptotic one-sample critical value `c / sqrt(n)`; `c = 1.95`
/// corresponds to level 0.001.
pub fn ks_critical(c: f64, n: usize) -> f64 {
    c / (n as f64).sqrt()
}

/// Asymptotic two-sample critical value `c sqrt((n + m) / (n m))`.
pub fn ks_critical_two_sample(c: f64, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}
