//! Weighted Gaussian kernel density estimates.

use std::f64::consts::PI;

use crate::analytic::DensityCurve;
use crate::error::{Error, Result};

/// Kernel contributions beyond this many bandwidths are dropped.
const CUTOFF: f64 = 9.0;

/// Samples sorted once so each grid point only visits its neighbourhood.
#[derive(Debug, Clone)]
pub struct KernelSum {
    points: Vec<(f64, f64)>,
    bandwidth: f64,
}

impl KernelSum {
    pub fn new(samples: &[f64], weights: Option<&[f64]>, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::invalid(
                "bandwidth",
                format!("must be finite and > 0, got {bandwidth}"),
            ));
        }
        if let Some(w) = weights {
            if w.len() != samples.len() {
                return Err(Error::invalid("weights", "length differs from samples"));
            }
            if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(Error::invalid("weights", "weights must be finite and >= 0"));
            }
        }
        let mut points: Vec<(f64, f64)> = samples
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, weights.map_or(1.0, |w| w[i])))
            .collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(KernelSum { points, bandwidth })
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum()
    }

    /// `sum_i w_i K_h(x_i - x)` with a Gaussian `K_h`.
    pub fn eval(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let lo = self.points.partition_point(|p| p.0 < x - CUTOFF * h);
        let hi = self.points.partition_point(|p| p.0 <= x + CUTOFF * h);
        let norm = 1.0 / ((2.0 * PI).sqrt() * h);
        self.points[lo..hi]
            .iter()
            .map(|&(xi, wi)| {
                let z = (xi - x) / h;
                wi * (-0.5 * z * z).exp()
            })
            .sum::<f64>()
            * norm
    }
}

/// Weighted KDE normalized by the total weight.
pub fn kernel_density(samples: &[f64], weights: Option<&[f64]>, bandwidth: f64, grid: &[f64]) -> Result<DensityCurve> {
    let sum = KernelSum::new(samples, weights, bandwidth)?;
    let total = sum.total_weight();
    if !(total > 0.0) {
        return Err(Error::invalid("weights", "all weights are zero"));
    }
    let curve = DensityCurve::from_fn(grid, |x| sum.eval(x) / total)?;
    Ok(curve.with_meta("kind", "kde").with_meta("bandwidth", bandwidth))
}

/// Silverman's rule `0.9 min(sd, IQR / 1.34) n^(-1/5)`.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::invalid("samples", "bandwidth rule needs at least two samples"));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let sd = (samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| sorted[((n - 1) as f64 * p).round() as usize];
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(spread > 0.0) {
        return Err(Error::invalid("samples", "degenerate sample (zero spread)"));
    }
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{gaussian_kernel, linspace};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn single_sample_is_the_kernel() {
        let grid = linspace(-4.0, 4.0, 33);
        let c = kernel_density(&[0.0], Some(&[1.0]), 1.0, &grid).unwrap();
        for (x, v) in grid.iter().zip(&c.values) {
            assert!((v - gaussian_kernel(1.0, *x).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_pair_gives_even_curve() {
        let grid = linspace(-3.0, 3.0, 61);
        let c = kernel_density(&[-1.0, 1.0], None, 0.5, &grid).unwrap();
        for i in 0..grid.len() {
            assert!((c.values[i] - c.values[grid.len() - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(kernel_density(&[0.0], Some(&[0.0]), 1.0, &[0.0, 1.0]).is_err());
        assert!(kernel_density(&[0.0], None, 0.0, &[0.0, 1.0]).is_err());
        assert!(kernel_density(&[0.0], Some(&[-1.0]), 1.0, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn normal_sample_recovers_peak() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let c = kernel_density(&xs, None, 0.05, &[0.0]).unwrap();
        let peak = 0.398_942_280_401_432_7;
        assert!((c.values[0] / peak - 1.0).abs() < 0.03, "{}", c.values[0]);
    }

    #[test]
    fn curve_integrates_to_one() {
        let xs = [-2.0, -0.3, 0.1, 0.4, 1.7];
        let w = [0.5, 2.0, 1.0, 0.1, 3.0];
        let h = 0.2;
        let grid = linspace(-2.0 - 8.0 * h, 1.7 + 8.0 * h, 4001);
        let c = kernel_density(&xs, Some(&w), h, &grid).unwrap();
        assert!((c.trapezoid_integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn silverman_on_standard_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let h = silverman_bandwidth(&xs).unwrap();
        let expected = 0.9 * 10_000f64.powf(-0.2);
        assert!((h / expected - 1.0).abs() < 0.05);
    }
}
