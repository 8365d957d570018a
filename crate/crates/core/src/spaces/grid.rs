use crate::error::{Error, Result};
use std::sync::Arc;

/// A node on `∂Ω` with its surface quadrature weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub index: usize,
    pub weight: f64,
}

/// Uniform tensor grid on an axis-aligned box. Nodes are stored row-major
/// (axis 0 slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    intervals: Vec<(f64, f64)>,
    resolution: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    points: Vec<f64>,
    weights: Vec<f64>,
    boundary: Vec<BoundaryNode>,
}

/// 1-D trapezoid weights for `n` nodes with spacing `h`.
fn trapezoid(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

impl Grid {
    pub fn new(intervals: &[(f64, f64)], resolution: &[usize]) -> Result<Self> {
        if intervals.is_empty() || intervals.len() != resolution.len() {
            return Err(Error::InvalidInput(format!(
                "grid needs one resolution per axis ({} intervals, {} resolutions)",
                intervals.len(),
                resolution.len()
            )));
        }
        for (i, (&(a, b), &n)) in intervals.iter().zip(resolution).enumerate() {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidInput(format!(
                    "axis {} interval [{a}, {b}] is empty",
                    i + 1
                )));
            }
            if n < 3 {
                return Err(Error::InvalidInput(format!(
                    "axis {} needs at least 3 nodes, got {n}",
                    i + 1
                )));
            }
        }
        let dim = intervals.len();
        let spacing: Vec<f64> = intervals
            .iter()
            .zip(resolution)
            .map(|(&(a, b), &n)| (b - a) / (n - 1) as f64)
            .collect();
        let mut strides = vec![1usize; dim];
        for i in (0..dim.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * resolution[i + 1];
        }
        let len: usize = resolution.iter().product();
        let axis_w: Vec<Vec<f64>> = resolution
            .iter()
            .zip(&spacing)
            .map(|(&n, &h)| trapezoid(n, h))
            .collect();
        let mut points = Vec::with_capacity(len * dim);
        let mut weights = Vec::with_capacity(len);
        let mut bweight = vec![0.0; len];
        let mut multi = vec![0usize; dim];
        for (idx, bw) in bweight.iter_mut().enumerate() {
            let mut rem = idx;
            for i in 0..dim {
                multi[i] = rem / strides[i];
                rem %= strides[i];
            }
            let mut w = 1.0;
            for i in 0..dim {
                let (a, b) = intervals[i];
                // exact endpoints avoid round-off on the faces
                let x = if multi[i] + 1 == resolution[i] {
                    b
                } else {
                    a + spacing[i] * multi[i] as f64
                };
                points.push(x);
                w *= axis_w[i][multi[i]];
            }
            weights.push(w);
            for i in 0..dim {
                if multi[i] == 0 || multi[i] + 1 == resolution[i] {
                    let face: f64 = (0..dim).filter(|&j| j != i).map(|j| axis_w[j][multi[j]]).product();
                    *bw += face;
                }
            }
        }
        let boundary = bweight
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(index, &weight)| BoundaryNode { index, weight })
            .collect();
        Ok(Grid {
            intervals: intervals.to_vec(),
            resolution: resolution.to_vec(),
            spacing,
            strides,
            points,
            weights,
            boundary,
        })
    }

    /// `[0,1]^N` with `n` nodes per axis.
    pub fn unit(dim: usize, n: usize) -> Result<Self> {
        Grid::new(&vec![(0.0, 1.0); dim], &vec![n; dim])
    }

    pub fn shared(self) -> Arc<Grid> {
        Arc::new(self)
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Coordinates of node `idx`.
    #[inline]
    pub fn point(&self, idx: usize) -> &[f64] {
        let d = self.dim();
        &self.points[idx * d..(idx + 1) * d]
    }

    /// Tensor trapezoid weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Boundary nodes with per-face trapezoid weights; corners collect one
    /// contribution per incident face.
    pub fn boundary(&self) -> &[BoundaryNode] {
        &self.boundary
    }

    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).product()
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|&s| {
                let k = idx / s;
                idx %= s;
                k
            })
            .collect()
    }

    /// Discrete `∂_axis` of nodal values: central differences inside,
    /// second-order one-sided at the faces.
    pub fn partial(&self, values: &[f64], axis: usize) -> Vec<f64> {
        let mut out = vec![0.0; values.len()];
        self.partial_into(values, axis, &mut out);
        out
    }

    pub fn partial_into(&self, values: &[f64], axis: usize, out: &mut [f64]) {
        let n = self.resolution[axis];
        let s = self.strides[axis];
        let inv = 0.5 / self.spacing[axis];
        for idx in 0..values.len() {
            let k = (idx / s) % n;
            out[idx] = if k == 0 {
                (-3.0 * values[idx] + 4.0 * values[idx + s] - values[idx + 2 * s]) * inv
            } else if k + 1 == n {
                (3.0 * values[idx] - 4.0 * values[idx - s] + values[idx - 2 * s]) * inv
            } else {
                (values[idx + s] - values[idx - s]) * inv
            };
        }
    }

    /// `out += D_axisᵀ c`, the adjoint of [`Grid::partial`].
    pub fn partial_transpose_add(&self, c: &[f64], axis: usize, out: &mut [f64]) {
        let n = self.resolution[axis];
        let s = self.strides[axis];
        let inv = 0.5 / self.spacing[axis];
        for idx in 0..c.len() {
            let k = (idx / s) % n;
            let ci = c[idx] * inv;
            if k == 0 {
                out[idx] -= 3.0 * ci;
                out[idx + s] += 4.0 * ci;
                out[idx + 2 * s] -= ci;
            } else if k + 1 == n {
                out[idx] += 3.0 * ci;
                out[idx - s] -= 4.0 * ci;
                out[idx - 2 * s] += ci;
            } else {
                out[idx + s] += ci;
                out[idx - s] -= ci;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_volume_and_perimeter() {
        let g = Grid::new(&[(0.0, 2.0), (-1.0, 0.5)], &[5, 7]).unwrap();
        let vol: f64 = g.weights().iter().sum();
        assert!((vol - 3.0).abs() < 1e-14);
        let per: f64 = g.boundary().iter().map(|b| b.weight).sum();
        assert!((per - 2.0 * (2.0 + 1.5)).abs() < 1e-14);
        let g3 = Grid::unit(3, 4).unwrap();
        let area: f64 = g3.boundary().iter().map(|b| b.weight).sum();
        assert!((area - 6.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_coarse_axes() {
        assert!(Grid::new(&[(0.0, 1.0), (0.0, 1.0)], &[2, 5]).is_err());
        assert!(Grid::new(&[(1.0, 1.0)], &[5]).is_err());
    }

    #[test]
    fn row_major_with_axis_zero_slowest() {
        let g = Grid::new(&[(0.0, 1.0), (0.0, 2.0)], &[3, 5]).unwrap();
        assert_eq!(g.point(1), &[0.0, 0.5]);
        assert_eq!(g.point(5), &[0.5, 0.0]);
        assert_eq!(g.multi_index(7), vec![1, 2]);
        assert_eq!(g.point(14), &[1.0, 2.0]);
    }

    #[test]
    fn partial_is_exact_on_quadratics() {
        let g = Grid::new(&[(0.0, 1.0), (0.0, 1.0)], &[6, 4]).unwrap();
        let u: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.point(i);
                x[0] * x[0] + 3.0 * x[1]
            })
            .collect();
        let d0 = g.partial(&u, 0);
        let d1 = g.partial(&u, 1);
        for i in 0..g.len() {
            assert!((d0[i] - 2.0 * g.point(i)[0]).abs() < 1e-12);
            assert!((d1[i] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_is_adjoint() {
        let g = Grid::new(&[(0.0, 1.0), (0.0, 1.0)], &[5, 4]).unwrap();
        let u: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let c: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.71).cos()).collect();
        for axis in 0..2 {
            let du = g.partial(&u, axis);
            let lhs: f64 = du.iter().zip(&c).map(|(a, b)| a * b).sum();
            let mut dtc = vec![0.0; g.len()];
            g.partial_transpose_add(&c, axis, &mut dtc);
            let rhs: f64 = dtc.iter().zip(&u).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
