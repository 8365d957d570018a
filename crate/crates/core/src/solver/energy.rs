use super::problem::ProblemSpec;
use crate::error::{Error, Result};
use crate::spaces::DiscreteField;

fn check_grid(spec: &ProblemSpec, u: &DiscreteField) -> Result<()> {
    if u.grid().as_ref() != spec.grid.as_ref() {
        return Err(Error::InvalidInput("field and problem live on different grids".into()));
    }
    Ok(())
}

/// `I(u) = ∫ Σ_i A_i(x,∂_i u) + ∫ b φ_max(x,u) - ∫ F(x,u) - ∫_∂Ω G(x,u)`
/// with tensor trapezoid weights and the grid difference operators.
pub fn energy(spec: &ProblemSpec, u: &DiscreteField) -> Result<f64> {
    check_grid(spec, u)?;
    let e = energy_values(spec, u.values());
    if e.is_finite() {
        Ok(e)
    } else {
        Err(Error::NonFiniteEnergy)
    }
}

/// Neumaier-compensated running sum. Near a minimizer consecutive energies
/// differ by less than the round-off of a plain sum over the grid.
#[derive(Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.s + v;
        if self.s.abs() >= v.abs() {
            self.c += (self.s - t) + v;
        } else {
            self.c += (v - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// Energy of raw nodal values; may be non-finite.
pub(crate) fn energy_values(spec: &ProblemSpec, u: &[f64]) -> f64 {
    let grid = &spec.grid;
    let w = grid.weights();
    let phi_max = spec.family.phi_max();
    let mut du = vec![0.0; u.len()];
    let mut total = Sum::default();
    for (i, flux) in spec.fluxes.iter().enumerate() {
        grid.partial_into(u, i, &mut du);
        for (j, (&d, &wj)) in du.iter().zip(w).enumerate() {
            total.add(wj * flux.primitive(grid.point(j), d));
        }
    }
    for (j, (&v, &wj)) in u.iter().zip(w).enumerate() {
        let x = grid.point(j);
        total.add(wj * spec.b[j] * phi_max.evaluate(x, v));
        total.add(-wj * spec.f.primitive(x, v));
    }
    for node in grid.boundary() {
        total.add(-node.weight * spec.g.primitive(grid.point(node.index), u[node.index]));
    }
    let e = total.value();
    if total.s.is_finite() {
        e
    } else {
        total.s
    }
}

/// Nodal components `⟨I'(u), e_k⟩` of the Gateaux derivative of the discrete
/// energy, through the adjoint of the difference operators.
pub fn gateaux_gradient(spec: &ProblemSpec, u: &DiscreteField) -> Result<Vec<f64>> {
    check_grid(spec, u)?;
    let g = gradient_values(spec, u.values());
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::NonFiniteEnergy)
    }
}

pub(crate) fn gradient_values(spec: &ProblemSpec, u: &[f64]) -> Vec<f64> {
    let grid = &spec.grid;
    let w = grid.weights();
    let phi_max = spec.family.phi_max();
    let mut out = vec![0.0; u.len()];
    let mut du = vec![0.0; u.len()];
    for (i, flux) in spec.fluxes.iter().enumerate() {
        grid.partial_into(u, i, &mut du);
        for (j, d) in du.iter_mut().enumerate() {
            *d = w[j] * flux.eval(grid.point(j), *d);
        }
        grid.partial_transpose_add(&du, i, &mut out);
    }
    for (j, &v) in u.iter().enumerate() {
        let x = grid.point(j);
        out[j] += w[j] * (spec.b[j] * phi_max.signed_derivative(x, v) - spec.f.eval(x, v));
    }
    for node in grid.boundary() {
        out[node.index] -= node.weight * spec.g.eval(grid.point(node.index), u[node.index]);
    }
    out
}

/// `sup_k |g_k| / w_k`, the nodal residual in the weighted sup norm.
pub fn gradient_norm(spec: &ProblemSpec, g: &[f64]) -> f64 {
    g.iter()
        .zip(spec.grid.weights())
        .fold(0.0, |m, (v, w)| m.max(v.abs() / w))
}
