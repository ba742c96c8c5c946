use crate::analytic::curve::interpolate;
use crate::error::{Error, Result};

/// A CDF tabulated on a grid and linearly interpolated between nodes;
/// 0 below the grid and the last tabulated value above it.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl CdfTable {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::invalid("grid", "need at least two nodes and one value per node"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid", "must be strictly increasing"));
        }
        Ok(CdfTable { grid, values })
    }

    /// Integrates `density` from `grid[0]` with Simpson's rule on every
    /// grid cell (the mass below `grid[0]` is taken as zero).
    pub fn from_density(grid: &[f64], density: impl Fn(f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        values.push(0.0);
        if let Some(&first) = grid.first() {
            let mut left = density(first);
            for w in grid.windows(2) {
                let right = density(w[1]);
                acc += (w[1] - w[0]) / 6.0 * (left + 4.0 * density(0.5 * (w[0] + w[1])) + right);
                values.push(acc);
                left = right;
            }
        }
        CdfTable::new(grid.to_vec(), values)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let last = *self.values.last().unwrap_or(&1.0);
        interpolate(&self.grid, &self.values, x, 0.0, last)
    }

    /// Value at the right end of the table, the tabulated total mass.
    pub fn total(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
