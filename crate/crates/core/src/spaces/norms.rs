use super::field::DiscreteField;
use super::grid::Grid;
use crate::error::{Error, Result};
use crate::mo::{AnisotropicFamily, MoFunction};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    pub value: f64,
    /// Modular of `u / value` (1 up to the bisection tolerance).
    pub modular_at_value: f64,
    pub bisection_iterations: usize,
    pub bracket: (f64, f64),
}

impl NormReport {
    fn zero() -> Self {
        NormReport {
            value: 0.0,
            modular_at_value: 0.0,
            bisection_iterations: 0,
            bracket: (0.0, 0.0),
        }
    }
}

/// Weighted sample set `Σ w_j φ(x_j, u_j / λ)`.
struct Samples<'a> {
    grid: &'a Grid,
    nodes: Vec<(usize, f64)>,
    values: Vec<f64>,
}

impl Samples<'_> {
    fn interior<'a>(u: &'a DiscreteField) -> Samples<'a> {
        let g = u.grid();
        Samples {
            grid: g,
            nodes: g.weights().iter().copied().enumerate().collect(),
            values: u.values().to_vec(),
        }
    }

    fn boundary<'a>(u: &'a DiscreteField) -> Samples<'a> {
        let g = u.grid();
        Samples {
            grid: g,
            nodes: g.boundary().iter().map(|b| (b.index, b.weight)).collect(),
            values: u.boundary_view(),
        }
    }

    fn modular(&self, phi: &MoFunction, lambda: f64) -> f64 {
        let inv = 1.0 / lambda;
        self.nodes
            .iter()
            .zip(&self.values)
            .map(|(&(idx, w), &v)| {
                if v == 0.0 {
                    0.0
                } else {
                    w * phi.evaluate(self.grid.point(idx), v * inv)
                }
            })
            .sum()
    }

    fn luxemburg(&self, phi: &MoFunction) -> Result<NormReport> {
        if self.values.iter().all(|&v| v == 0.0) {
            return Ok(NormReport::zero());
        }
        let m = |l: f64| self.modular(phi, l);
        // ‖u‖ ≤ modular(u) + 1 by convexity
        let m0 = m(1.0);
        let mut hi = if m0.is_finite() {
            m0 + 1.0
        } else {
            self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
        };
        let mut doublings = 0;
        while !(m(hi) <= 1.0) {
            hi *= 2.0;
            doublings += 1;
            if doublings > 2000 || !hi.is_finite() {
                return Err(Error::NonFiniteModular);
            }
        }
        let mut lo = 0.5 * hi;
        while m(lo) < 1.0 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::NonFiniteModular);
            }
        }
        let bracket = (lo, hi);
        let mut iterations = 0;
        while hi - lo > 1e-15 * hi && iterations < 200 {
            let mid = 0.5 * (lo + hi);
            let v = m(mid);
            if !v.is_finite() {
                return Err(Error::NonFiniteModular);
            }
            if v >= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        let (mlo, mhi) = (m(lo), m(hi));
        let (value, modular_at_value) = if (mlo - 1.0).abs() <= (mhi - 1.0).abs() {
            (lo, mlo)
        } else {
            (hi, mhi)
        };
        Ok(NormReport {
            value,
            modular_at_value,
            bisection_iterations: iterations,
            bracket,
        })
    }
}

/// `∫_Ω φ(x, |u(x)|) dx` by tensor trapezoid.
pub fn modular(phi: &MoFunction, u: &DiscreteField) -> f64 {
    Samples::interior(u).modular(phi, 1.0)
}

/// `inf{λ > 0 : ∫ φ(x, u/λ) ≤ 1}` by bisection.
pub fn luxemburg_norm(phi: &MoFunction, u: &DiscreteField) -> Result<NormReport> {
    Samples::interior(u).luxemburg(phi)
}

/// Luxemburg norm over `∂Ω` with per-face trapezoid weights.
pub fn boundary_norm(psi: &MoFunction, u: &DiscreteField) -> Result<NormReport> {
    Samples::boundary(u).luxemburg(psi)
}

/// `∫_{∂Ω} ψ(x, |u|) dσ`.
pub fn boundary_modular(psi: &MoFunction, u: &DiscreteField) -> f64 {
    Samples::boundary(u).modular(psi, 1.0)
}

/// `(∫|uv|, 2‖u‖_φ ‖v‖_{φ*})`.
pub fn holder_pairing(u: &DiscreteField, v: &DiscreteField, phi: &MoFunction) -> Result<(f64, f64)> {
    holder_pairing_with(u, v, phi, &phi.conjugate_function())
}

/// As [`holder_pairing`] with a precomputed conjugate.
pub fn holder_pairing_with(
    u: &DiscreteField,
    v: &DiscreteField,
    phi: &MoFunction,
    phi_star: &MoFunction,
) -> Result<(f64, f64)> {
    u.check_same_grid(v)?;
    let lhs = u
        .values()
        .iter()
        .zip(v.values())
        .zip(u.grid().weights())
        .map(|((a, b), w)| w * (a * b).abs())
        .sum();
    let rhs = 2.0 * luxemburg_norm(phi, u)?.value * luxemburg_norm(phi_star, v)?.value;
    Ok((lhs, rhs))
}

/// `‖u‖_{φ_max} + Σ_i ‖∂_i u‖_{φ_i}`.
pub fn anisotropic_norm(family: &AnisotropicFamily, u: &DiscreteField) -> Result<f64> {
    if family.dim() != u.grid().dim() {
        return Err(Error::InvalidInput(format!(
            "family has {} components but the grid has {} axes",
            family.dim(),
            u.grid().dim()
        )));
    }
    let mut total = luxemburg_norm(family.phi_max(), u)?.value;
    for i in 0..family.dim() {
        total += luxemburg_norm(family.component(i), &u.partial(i))?.value;
    }
    Ok(total)
}
