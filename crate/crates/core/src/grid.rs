//! Periodic uniform grids on `[-L, L)^d` and real fields sampled on them.

use crate::error::{domain, Error, Result};
use serde::{Deserialize, Serialize};

/// Periodic uniform grid with `n` points per axis on `[-L, L)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return domain(format!("grid dimension {dim} not in {{1, 2}}"));
        }
        if n < 64 || !n.is_power_of_two() {
            return domain(format!("points per axis n = {n} must be a power of two >= 64"));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return domain(format!("half-width L = {half_width} must be positive"));
        }
        Ok(Grid { dim, n, half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Half-width `L`.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Spacing `h = 2L/n`.
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Total number of nodes `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h^d`.
    pub fn cell(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    /// Index of the origin along each axis.
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }

    /// Coordinate of node `j` along an axis.
    pub fn axis_coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.h()
    }

    /// Axis indices of a flat (row-major) index.
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.n, idx % self.n]
        }
    }

    pub fn flatten(&self, ij: [usize; 2]) -> usize {
        if self.dim == 1 {
            ij[0]
        } else {
            ij[0] * self.n + ij[1]
        }
    }

    /// Coordinates of a flat index (second entry unused for `d = 1`).
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.unflatten(idx);
        if self.dim == 1 {
            [self.axis_coord(i), 0.0]
        } else {
            [self.axis_coord(i), self.axis_coord(j)]
        }
    }

    /// Euclidean norm of the node position.
    pub fn radius(&self, idx: usize) -> f64 {
        let c = self.coords(idx);
        (c[0] * c[0] + c[1] * c[1]).sqrt()
    }

    /// Flat index of the mirror node `-x` (periodic).
    pub fn mirror(&self, idx: usize) -> usize {
        let n = self.n;
        let [i, j] = self.unflatten(idx);
        let m = |k: usize| (n - k) % n;
        self.flatten([m(i), if self.dim == 1 { 0 } else { m(j) }])
    }

    /// Signed frequency index of DFT bin `m`.
    pub fn freq_index(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    /// Angular frequency `pi k / L` of DFT bin `m`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        std::f64::consts::PI * self.freq_index(m) as f64 / self.half_width
    }

    /// Frequency vector of a flat DFT index (second entry unused for `d = 1`).
    pub fn xi(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.unflatten(idx);
        if self.dim == 1 {
            [self.wavenumber(i), 0.0]
        } else {
            [self.wavenumber(i), self.wavenumber(j)]
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}

/// Real-valued function sampled on a [`Grid`], with a time label.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return domain(format!("field value {v} is not finite"));
        }
        if !(time >= 0.0) {
            return domain(format!("time label {time} must be non-negative"));
        }
        Ok(Field { grid, values, time })
    }

    /// Samples `f(x)` at every node.
    pub fn from_fn(grid: Grid, time: f64, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| {
                let c = grid.coords(i);
                f(&c[..grid.dim()])
            })
            .collect();
        Field::new(grid, values, time)
    }

    pub fn zeros(grid: Grid, time: f64) -> Self {
        Field { grid, values: vec![0.0; grid.len()], time }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    /// `h^d * sum(values)`.
    pub fn mass(&self) -> f64 {
        self.grid.cell() * self.values.iter().sum::<f64>()
    }

    pub fn l1(&self) -> f64 {
        self.grid.cell() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn lp(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.linf();
        }
        (self.grid.cell() * self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Value at the origin node.
    pub fn at_origin(&self) -> f64 {
        let o = self.grid.origin_index();
        self.values[self.grid.flatten([o, o])]
    }

    /// Max of `|f(x) - f(-x)|`.
    pub fn evenness_residual(&self) -> f64 {
        (0..self.values.len()).map(|i| (self.values[i] - self.values[self.grid.mirror(i)]).abs()).fold(0.0, f64::max)
    }

    /// Max of `|self - other|`.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch("fields on different grids".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}
