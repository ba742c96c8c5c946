use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::curve::fmt17;
use crate::error::{Error, Result};
use crate::model::{sgn, DriftScale, ModelParams};
use crate::stats::pairwise_sum;

/// Ensemble request. The horizon is split into `ceil(t_final / dt)` equal
/// steps, so the step actually used never exceeds `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub v0: f64,
    pub t_final: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub record_functionals: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        check_horizon(self.v0, self.t_final, self.dt, self.n_paths)
    }

    pub fn n_steps(&self) -> usize {
        step_count(self.t_final, self.dt)
    }
}

fn check_horizon(v0: f64, t: f64, dt: f64, n_paths: usize) -> Result<()> {
    if !v0.is_finite() {
        return Err(Error::invalid("v0", "must be finite"));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid("t", format!("must be finite and > 0, got {t}")));
    }
    if !(dt > 0.0) || dt > t {
        return Err(Error::invalid("dt", format!("must satisfy 0 < dt <= t, got {dt}")));
    }
    if n_paths == 0 {
        return Err(Error::invalid("n_paths", "must be >= 1"));
    }
    Ok(())
}

fn step_count(t: f64, dt: f64) -> usize {
    // tolerate t / dt landing a hair above an integer
    ((t / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Functionals of one discrete path `x_0, ..., x_N` on a grid of step `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrownianFunctionals {
    pub b_t: f64,
    /// `(|x_N| - |x_0| - sum sgn(x_k)(x_{k+1} - x_k)) / 2`.
    pub l_t: f64,
    /// Left-endpoint sum of `1[x_k >= 0] h`.
    pub occupation: f64,
    pub int_b: f64,
    pub int_abs_b: f64,
    pub int_b2: f64,
}

/// Running sums for [`BrownianFunctionals`], plus the band count used by
/// the `eps`-band local time estimate.
#[derive(Debug, Clone, Copy)]
struct Accumulator {
    h: f64,
    eps: f64,
    l: f64,
    occupation: f64,
    int_b: f64,
    int_abs_b: f64,
    int_b2: f64,
    band_time: f64,
}

impl Accumulator {
    fn new(h: f64, eps: f64) -> Self {
        Accumulator {
            h,
            eps,
            l: 0.0,
            occupation: 0.0,
            int_b: 0.0,
            int_abs_b: 0.0,
            int_b2: 0.0,
            band_time: 0.0,
        }
    }

    #[inline]
    fn step(&mut self, x: f64, next: f64) {
        // each Tanaka increment is >= 0; clamp the rounding noise
        self.l += (0.5 * (next.abs() - x.abs() - sgn(x) * (next - x))).max(0.0);
        if x >= 0.0 {
            self.occupation += self.h;
        }
        self.int_b += x * self.h;
        self.int_abs_b += x.abs() * self.h;
        self.int_b2 += x * x * self.h;
        if x.abs() < self.eps {
            self.band_time += self.h;
        }
    }

    fn finish(&self, b_t: f64) -> BrownianFunctionals {
        BrownianFunctionals {
            b_t,
            l_t: self.l,
            occupation: self.occupation,
            int_b: self.int_b,
            int_abs_b: self.int_abs_b,
            int_b2: self.int_b2,
        }
    }

    /// `(1 / 4 eps) int 1[|x| < eps] ds`, matching the `L` normalization.
    fn band_local_time(&self) -> f64 {
        self.band_time / (4.0 * self.eps)
    }
}

#[inline]
fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// One drifted path; returns the terminal value and, if asked, functionals.
fn simulate_path(
    params: &ModelParams,
    v0: f64,
    h: f64,
    n_steps: usize,
    seed: u64,
    index: usize,
    record: bool,
) -> (f64, Option<BrownianFunctionals>) {
    let mut rng = path_rng(seed, index);
    let noise = (params.diffusion() * h).sqrt();
    let mut acc = Accumulator::new(h, 2.0 * h.sqrt());
    let mut v = v0;
    for _ in 0..n_steps {
        let xi: f64 = StandardNormal.sample(&mut rng);
        let next = v + params.drift(v) * h + noise * xi;
        if record {
            acc.step(v, next);
        }
        v = next;
    }
    (v, record.then(|| acc.finish(v)))
}

/// Driftless unit Brownian path with its functionals and band local time.
fn brownian_path(v0: f64, h: f64, n_steps: usize, seed: u64, index: usize) -> (BrownianFunctionals, f64) {
    let mut rng = path_rng(seed, index);
    let s = h.sqrt();
    let mut acc = Accumulator::new(h, 2.0 * s);
    let mut x = v0;
    for _ in 0..n_steps {
        let xi: f64 = StandardNormal.sample(&mut rng);
        let next = x + s * xi;
        acc.step(x, next);
        x = next;
    }
    (acc.finish(x), acc.band_local_time())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub terminal: Vec<f64>,
    pub functionals: Option<Vec<BrownianFunctionals>>,
    pub config: SimConfig,
}

/// Explicit Euler–Maruyama: `v += -c (alpha v - a + delta sgn v) h + sqrt(D h) xi`.
pub fn euler_maruyama_ensemble(cfg: &SimConfig) -> Result<PathEnsemble> {
    cfg.validate()?;
    let n_steps = cfg.n_steps();
    let h = cfg.t_final / n_steps as f64;
    let out: Vec<(f64, Option<BrownianFunctionals>)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| simulate_path(&cfg.params, cfg.v0, h, n_steps, cfg.seed, i, cfg.record_functionals))
        .collect();
    if let Some(i) = out.iter().position(|(v, _)| !v.is_finite()) {
        return Err(Error::NonConvergence {
            context: "Euler-Maruyama ensemble",
            detail: format!("path {i} produced a non-finite value"),
        });
    }
    let (terminal, functionals): (Vec<f64>, Vec<Option<BrownianFunctionals>>) = out.into_iter().unzip();
    Ok(PathEnsemble {
        terminal,
        functionals: if cfg.record_functionals {
            Some(functionals.into_iter().flatten().collect())
        } else {
            None
        },
        config: *cfg,
    })
}

/// Euler–Maruyama at several step sizes driven by the same Brownian paths.
///
/// `cfg.dt` sets the finest step; level `j` takes `coarsening[j]` fine
/// steps at a time, summing their increments. Returns one terminal sample
/// per level. Sharing the noise leaves the discretization bias as the main
/// difference between levels.
pub fn euler_maruyama_coupled(cfg: &SimConfig, coarsening: &[usize]) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let n_steps = cfg.n_steps();
    if let Some(&k) = coarsening.iter().find(|&&k| k == 0 || !n_steps.is_multiple_of(k)) {
        return Err(Error::invalid(
            "coarsening",
            format!("factor {k} does not divide the {n_steps} fine steps"),
        ));
    }
    let h = cfg.t_final / n_steps as f64;
    let noise = (cfg.params.diffusion() * h).sqrt();
    let levels = coarsening.len();
    let paths: Vec<Vec<f64>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i);
            let mut v = vec![cfg.v0; levels];
            let mut pending = vec![0.0; levels];
            for k in 1..=n_steps {
                let xi: f64 = StandardNormal.sample(&mut rng);
                for j in 0..levels {
                    pending[j] += noise * xi;
                    if k % coarsening[j] == 0 {
                        let step = h * coarsening[j] as f64;
                        v[j] = v[j] + cfg.params.drift(v[j]) * step + pending[j];
                        pending[j] = 0.0;
                    }
                }
            }
            v
        })
        .collect();
    if paths.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence {
            context: "coupled Euler-Maruyama",
            detail: "non-finite path value".into(),
        });
    }
    Ok((0..levels).map(|j| paths.iter().map(|p| p[j]).collect()).collect())
}

fn brownian_config(v0: f64, t: f64, dt: f64, n_paths: usize, seed: u64) -> Result<SimConfig> {
    check_horizon(v0, t, dt, n_paths)?;
    Ok(SimConfig {
        params: ModelParams::new(0.0, 0.0, f64::MIN_POSITIVE, 1.0, DriftScale::Unit)?,
        v0,
        t_final: t,
        dt,
        n_paths,
        seed,
        record_functionals: true,
    })
}

/// Driftless Brownian paths from `v0` with all six functionals recorded.
/// The echoed config carries unit diffusion and no drift (its `delta` is
/// the smallest positive float, standing in for zero).
pub fn brownian_ensemble_with_functionals(v0: f64, t: f64, dt: f64, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    let cfg = brownian_config(v0, t, dt, n_paths, seed)?;
    let n_steps = cfg.n_steps();
    let h = t / n_steps as f64;
    let fs: Vec<BrownianFunctionals> = (0..n_paths)
        .into_par_iter()
        .map(|i| brownian_path(v0, h, n_steps, seed, i).0)
        .collect();
    Ok(PathEnsemble {
        terminal: fs.iter().map(|f| f.b_t).collect(),
        functionals: Some(fs),
        config: cfg,
    })
}

/// Pairs `(tanaka, band)` of local time estimates on the same paths as
/// [`brownian_ensemble_with_functionals`], the band having half-width
/// `2 sqrt(dt)`.
pub fn local_time_estimators(v0: f64, t: f64, dt: f64, n_paths: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let cfg = brownian_config(v0, t, dt, n_paths, seed)?;
    let n_steps = cfg.n_steps();
    let h = t / n_steps as f64;
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| {
            let (f, band) = brownian_path(v0, h, n_steps, seed, i);
            (f.l_t, band)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub quantiles: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
    pub seed: u64,
    pub dt: f64,
}

pub const SUMMARY_QUANTILES: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.terminal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminal.is_empty()
    }

    pub fn summary(&self) -> EnsembleSummary {
        let n = self.terminal.len();
        let mean = pairwise_sum(&self.terminal) / n as f64;
        let sq: Vec<f64> = self.terminal.iter().map(|x| (x - mean) * (x - mean)).collect();
        let variance = if n > 1 { pairwise_sum(&sq) / (n - 1) as f64 } else { 0.0 };
        let mut sorted = self.terminal.clone();
        sorted.sort_by(f64::total_cmp);
        let quantiles = SUMMARY_QUANTILES
            .iter()
            .map(|&p| {
                let i = ((n - 1) as f64 * p).round() as usize;
                (format!("{p}"), sorted[i])
            })
            .collect();
        EnsembleSummary {
            n,
            mean,
            variance,
            quantiles,
            ess: None,
            seed: self.config.seed,
            dt: self.config.dt,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.terminal.len() * 32);
        match &self.functionals {
            None => {
                s.push_str("path_index,terminal\n");
                for (i, v) in self.terminal.iter().enumerate() {
                    s.push_str(&format!("{i},{}\n", fmt17(*v)));
                }
            }
            Some(fs) => {
                s.push_str("path_index,terminal,l_t,occupation,int_b,int_abs_b,int_b2\n");
                for (i, (v, f)) in self.terminal.iter().zip(fs).enumerate() {
                    s.push_str(&format!(
                        "{i},{},{},{},{},{},{}\n",
                        fmt17(*v),
                        fmt17(f.l_t),
                        fmt17(f.occupation),
                        fmt17(f.int_b),
                        fmt17(f.int_abs_b),
                        fmt17(f.int_b2)
                    ));
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[allow(clippy::too_many_arguments)]
    fn cfg(alpha: f64, a: f64, delta: f64, d: f64, v0: f64, t: f64, dt: f64, n: usize) -> SimConfig {
        SimConfig {
            params: ModelParams::new(alpha, a, delta, d, DriftScale::Unit).unwrap(),
            v0,
            t_final: t,
            dt,
            n_paths: n,
            seed: 7,
            record_functionals: false,
        }
    }

    #[test]
    fn one_deterministic_step() {
        let e = euler_maruyama_ensemble(&cfg(0.0, 0.0, 1.0, 0.0, 1.0, 0.1, 0.1, 1)).unwrap();
        assert!((e.terminal[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn deterministic_chatter_stays_in_band() {
        let e = euler_maruyama_ensemble(&cfg(0.0, 0.0, 1.0, 0.0, 0.05, 5.0, 0.1, 1)).unwrap();
        assert!(e.terminal[0].abs() <= 0.1 + 1e-12);
        for n in 1..50 {
            let e = euler_maruyama_ensemble(&cfg(0.0, 0.0, 1.0, 0.0, 0.05, 0.1 * n as f64, 0.1, 1)).unwrap();
            assert!(e.terminal[0].abs() <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn deterministic_decay() {
        let e = euler_maruyama_ensemble(&cfg(0.0, 0.0, 1.0, 0.0, 1.0, 0.5, 1e-3, 3)).unwrap();
        for v in &e.terminal {
            assert!((v - 0.5).abs() <= 1e-3 + 1e-12);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(euler_maruyama_ensemble(&cfg(0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 2.0, 1)).is_err());
        assert!(euler_maruyama_ensemble(&cfg(0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.1, 0)).is_err());
        assert!(brownian_ensemble_with_functionals(f64::NAN, 1.0, 0.1, 1, 0).is_err());
    }

    #[test]
    fn same_seed_same_bits_any_thread_count() {
        let mut c = cfg(0.5, 0.2, 1.0, 1.0, 0.3, 0.5, 1e-2, 257);
        c.record_functionals = true;
        let a = euler_maruyama_ensemble(&c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| euler_maruyama_ensemble(&c).unwrap());
        assert_eq!(a.to_csv(), b.to_csv());
        c.seed += 1;
        assert_ne!(a.terminal, euler_maruyama_ensemble(&c).unwrap().terminal);
    }

    #[test]
    fn coupled_finest_level_is_the_plain_ensemble() {
        let c = cfg(0.5, 0.2, 1.0, 1.0, 0.3, 0.4, 1e-2, 64);
        let levels = euler_maruyama_coupled(&c, &[4, 1]).unwrap();
        let plain = euler_maruyama_ensemble(&c).unwrap();
        assert_eq!(levels[1], plain.terminal);
        let mut coarse = c;
        coarse.dt = 4e-2;
        let coarse_plain = euler_maruyama_ensemble(&coarse).unwrap().terminal;
        assert_ne!(levels[0], coarse_plain);
        assert!(euler_maruyama_coupled(&c, &[3]).is_err());
    }

    #[test]
    fn functional_invariants_and_tanaka_identity() {
        let e = brownian_ensemble_with_functionals(0.1, 1.0, 1e-3, 200, 3).unwrap();
        for f in e.functionals.as_ref().unwrap() {
            assert!(f.l_t >= 0.0);
            assert!(f.occupation >= 0.0 && f.occupation <= 1.0 + 1e-12);
            assert!(f.int_b2 >= 0.0);
            assert!(f.int_abs_b >= f.int_b.abs());
        }
    }

    #[test]
    fn far_start_has_no_local_time() {
        let dt = 1e-4;
        let e = brownian_ensemble_with_functionals(5.0, 0.01, dt, 50, 1).unwrap();
        for f in e.functionals.unwrap() {
            assert!(f.l_t.abs() <= 10.0 * dt.sqrt());
            assert!((f.occupation - 0.01).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_shape() {
        let e = brownian_ensemble_with_functionals(0.0, 0.1, 0.05, 2, 1).unwrap();
        let csv = e.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "path_index,terminal,l_t,occupation,int_b,int_abs_b,int_b2"
        );
        assert_eq!(lines.count(), 2);
        let s = e.summary();
        assert_eq!(s.n, 2);
        assert!(s.quantiles.contains_key("0.5"));
    }
}
