use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Grid size used for emitted curves unless the caller supplies a grid.
pub const DEFAULT_GRID_POINTS: usize = 2001;

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

/// Evenly spaced grid on `[lo, hi]` fine enough to resolve features of
/// width `scale` (forty points per `scale`), never coarser than
/// [`DEFAULT_GRID_POINTS`] and capped at 400 001 points.
pub fn resolved_grid(lo: f64, hi: f64, scale: f64) -> Vec<f64> {
    let wanted = ((hi - lo) / scale * 40.0).ceil() + 1.0;
    let n = if wanted.is_finite() {
        wanted.clamp(DEFAULT_GRID_POINTS as f64, 400_001.0) as usize
    } else {
        DEFAULT_GRID_POINTS
    };
    linspace(lo, hi, n)
}

/// A real function sampled on a strictly increasing velocity grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub meta: BTreeMap<String, Value>,
}

impl DensityCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::invalid(
                "grid",
                format!("{} grid points but {} values", grid.len(), values.len()),
            ));
        }
        if grid.is_empty() {
            return Err(Error::invalid("grid", "empty grid"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid", "must be strictly increasing"));
        }
        if let Some(bad) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(
                "values",
                format!("densities must be finite and >= 0, got {bad}"),
            ));
        }
        Ok(DensityCurve {
            grid,
            values,
            meta: BTreeMap::new(),
        })
    }

    /// Evaluates `f` at every grid point.
    pub fn from_fn(grid: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&v| f(v)).collect();
        DensityCurve::new(grid.to_vec(), values)
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn trapezoid_integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
            .sum()
    }

    /// Running trapezoid integral, starting at 0 on the first grid point.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.len());
        out.push(0.0);
        for (g, v) in self.grid.windows(2).zip(self.values.windows(2)) {
            acc += 0.5 * (g[1] - g[0]) * (v[0] + v[1]);
            out.push(acc);
        }
        out
    }

    /// Cumulative integral rescaled to end at 1.
    pub fn normalized_cdf(&self) -> Vec<f64> {
        let mut c = self.cumulative();
        let total = *c.last().unwrap();
        if total > 0.0 {
            c.iter_mut().for_each(|x| *x /= total);
        }
        c
    }

    /// Linear interpolation; zero outside the grid.
    pub fn value_at(&self, v: f64) -> f64 {
        interpolate(&self.grid, &self.values, v, 0.0, 0.0)
    }

    /// `(mean, variance)` of the curve treated as an (unnormalized) density.
    pub fn moments(&self) -> (f64, f64) {
        let mass = self.trapezoid_integral();
        let weighted = |f: &dyn Fn(f64) -> f64| -> f64 {
            self.grid
                .windows(2)
                .zip(self.values.windows(2))
                .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] * f(g[0]) + v[1] * f(g[1])))
                .sum::<f64>()
                / mass
        };
        let mean = weighted(&|x| x);
        let var = weighted(&|x| (x - mean) * (x - mean));
        (mean, var)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(48 * self.len() + 12);
        out.push_str("v,density\n");
        for (g, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{},{}\n", fmt17(*g), fmt17(*v)));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("v,density") => {}
            other => {
                return Err(Error::Parse {
                    what: "curve CSV",
                    detail: format!("expected header `v,density`, got {other:?}"),
                })
            }
        }
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            let (g, v) = line.split_once(',').ok_or_else(|| Error::Parse {
                what: "curve CSV",
                detail: format!("line {}: expected two columns", i + 2),
            })?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse {
                    what: "curve CSV",
                    detail: format!("line {}: {e}", i + 2),
                })
            };
            grid.push(parse(g)?);
            values.push(parse(v)?);
        }
        DensityCurve::new(grid, values)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve serializes")
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Piecewise-linear interpolation on a sorted grid with constant
/// extrapolation values.
pub fn interpolate(grid: &[f64], values: &[f64], x: f64, left: f64, right: f64) -> f64 {
    let n = grid.len();
    if n == 0 || x < grid[0] {
        return left;
    }
    if x > grid[n - 1] {
        return right;
    }
    let i = grid.partition_point(|&g| g <= x);
    if i == 0 {
        return values[0];
    }
    if i == n {
        return values[n - 1];
    }
    let (x0, x1) = (grid[i - 1], grid[i]);
    let s = (x - x0) / (x1 - x0);
    values[i - 1] + s * (values[i] - values[i - 1])
}
