use super::grid::Grid;
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

/// Nodal values of a scalar function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(DiscreteField { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        DiscreteField { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        DiscreteField { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        DiscreteField { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Values at the boundary nodes, aligned with `grid().boundary()`.
    pub fn boundary_view(&self) -> Vec<f64> {
        self.grid.boundary().iter().map(|b| self.values[b.index]).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DiscreteField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &DiscreteField) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(DiscreteField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn check_same_grid(&self, other: &DiscreteField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::InvalidInput("fields live on different grids".into()))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Discrete partial derivative along `axis`.
    pub fn partial(&self, axis: usize) -> DiscreteField {
        DiscreteField {
            grid: self.grid.clone(),
            values: self.grid.partial(&self.values, axis),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid `(∫|u|^p)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| w * v.abs().powf(p))
            .sum();
        s.powf(1.0 / p)
    }

    /// `T_n(u)`: nodal values clamped to `[-n, n]`.
    pub fn truncate(&self, n: f64) -> Result<Self> {
        if !(n > 0.0) {
            return Err(Error::InvalidInput("truncation level must be positive".into()));
        }
        Ok(self.map(|v| v.clamp(-n, n)))
    }

    /// CSV text: node counts per axis, then rows along the last axis.
    pub fn to_csv(&self) -> String {
        let res = self.grid.resolution();
        let mut out = res.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
        out.push('\n');
        let row = *res.last().expect("grid has an axis");
        for chunk in self.values.chunks(row) {
            let line = chunk.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",");
            let _ = writeln!(out, "{line}");
        }
        out
    }

    /// Parses [`DiscreteField::to_csv`] output onto a grid over `intervals`.
    pub fn from_csv(text: &str, intervals: &[(f64, f64)]) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty field CSV".into()))?;
        let res = header
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidInput(format!("bad CSV header: {e}")))?;
        let mut values = Vec::new();
        for (k, line) in lines.enumerate() {
            for item in line.split(',') {
                values.push(
                    item.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidInput(format!("bad value on data line {}: {e}", k + 1)))?,
                );
            }
        }
        let grid = Arc::new(Grid::new(intervals, &res)?);
        DiscreteField::new(grid, values)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path, intervals: &[(f64, f64)]) -> Result<Self> {
        DiscreteField::from_csv(&std::fs::read_to_string(path)?, intervals)
    }
}
