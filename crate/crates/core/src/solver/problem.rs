use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mo::{AnisotropicFamily, Kernel, MoFunction, ScalarField};
use crate::quad::integrate;
use crate::spaces::Grid;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// `∫_0^s k(x,τ) dτ` by adaptive quadrature.
fn numeric_antiderivative(k: Kernel) -> Kernel {
    Arc::new(move |x: &[f64], s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        integrate(|t| k(x, t), 0.0, s, 1e-14, 1e-11, 200).value
    })
}

/// A flux `a_i(x,s)` together with its primitive `A_i(x,s) = ∫_0^s a_i(x,τ)dτ`.
#[derive(Clone)]
pub struct Flux {
    a: Kernel,
    primitive: Kernel,
    label: String,
    analytic_primitive: bool,
}

impl fmt::Debug for Flux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Flux")
            .field("label", &self.label)
            .field("analytic_primitive", &self.analytic_primitive)
            .finish()
    }
}

impl Flux {
    /// `a(x,s) = sign(s) φ(x,|s|)/|s|`, so that `a(x,s)s = φ(x,|s|)`.
    /// For `φ = |t|^p` this is `|s|^{p-2}s` with `A = |s|^p/p`.
    pub fn model(phi: &MoFunction) -> Flux {
        let f = phi.clone();
        let a: Kernel = Arc::new(move |x: &[f64], s: f64| {
            if s == 0.0 {
                0.0
            } else {
                s.signum() * f.evaluate(x, s) / s.abs()
            }
        });
        match phi.exponent() {
            Some(p) => {
                let (f, p) = (phi.clone(), p.clone());
                Flux {
                    a,
                    primitive: Arc::new(move |x: &[f64], s: f64| f.evaluate(x, s) / p.eval(x)),
                    label: format!("model[{}]", phi.label()),
                    analytic_primitive: true,
                }
            }
            None => Flux {
                primitive: numeric_antiderivative(a.clone()),
                a,
                label: format!("model[{}]", phi.label()),
                analytic_primitive: false,
            },
        }
    }

    /// Custom flux; the primitive is computed by quadrature when not given.
    pub fn new(label: &str, a: Kernel, primitive: Option<Kernel>) -> Flux {
        let analytic_primitive = primitive.is_some();
        Flux {
            primitive: primitive.unwrap_or_else(|| numeric_antiderivative(a.clone())),
            a,
            label: label.to_string(),
            analytic_primitive,
        }
    }

    /// Flux from an expression in `s` (and `x1..xN`).
    pub fn from_expr(a: Expr, primitive: Option<Expr>) -> Flux {
        let label = a.to_string();
        let ak: Kernel = Arc::new(move |x: &[f64], s: f64| a.eval_or_nan(x, s));
        let pk = primitive.map(|e| -> Kernel { Arc::new(move |x: &[f64], s: f64| e.eval_or_nan(x, s)) });
        Flux::new(&label, ak, pk)
    }

    #[inline]
    pub fn eval(&self, x: &[f64], s: f64) -> f64 {
        (self.a)(x, s)
    }

    #[inline]
    pub fn primitive(&self, x: &[f64], s: f64) -> f64 {
        (self.primitive)(x, s)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_primitive(&self) -> bool {
        self.analytic_primitive
    }
}

/// A data term `f(x,s)` with primitive `F(x,s) = ∫_0^s f(x,τ)dτ`.
#[derive(Clone)]
pub struct DataTerm {
    value: Kernel,
    primitive: Kernel,
    label: String,
    s_dependent: bool,
}

impl fmt::Debug for DataTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DataTerm")
            .field("label", &self.label)
            .field("s_dependent", &self.s_dependent)
            .finish()
    }
}

impl DataTerm {
    pub fn zero() -> DataTerm {
        DataTerm {
            value: Arc::new(|_: &[f64], _: f64| 0.0),
            primitive: Arc::new(|_: &[f64], _: f64| 0.0),
            label: "0".into(),
            s_dependent: false,
        }
    }

    /// `f` independent of `s`, so `F(x,s) = f(x)s`.
    pub fn source(field: ScalarField) -> DataTerm {
        let label = format!("{field:?}");
        let (a, b) = (field.clone(), field);
        DataTerm {
            value: Arc::new(move |x: &[f64], _| a.eval(x)),
            primitive: Arc::new(move |x: &[f64], s: f64| b.eval(x) * s),
            label,
            s_dependent: false,
        }
    }

    pub fn new(label: &str, value: Kernel, primitive: Option<Kernel>, s_dependent: bool) -> DataTerm {
        DataTerm {
            primitive: primitive.unwrap_or_else(|| numeric_antiderivative(value.clone())),
            value,
            label: label.to_string(),
            s_dependent,
        }
    }

    /// From an expression in `s` and `x1..xN`. Without a primitive, an
    /// `s`-free expression integrates to `f(x)s`, otherwise by quadrature.
    pub fn from_expr(f: Expr, primitive: Option<Expr>) -> DataTerm {
        let label = f.to_string();
        let s_dependent = f.uses_arg();
        let f2 = f.clone();
        let vk: Kernel = Arc::new(move |x: &[f64], s: f64| f.eval_or_nan(x, s));
        let pk: Option<Kernel> = match primitive {
            Some(e) => Some(Arc::new(move |x: &[f64], s: f64| e.eval_or_nan(x, s))),
            None if !s_dependent => Some(Arc::new(move |x: &[f64], s: f64| f2.eval_or_nan(x, 0.0) * s)),
            None => None,
        };
        DataTerm::new(&label, vk, pk, s_dependent)
    }

    #[inline]
    pub fn eval(&self, x: &[f64], s: f64) -> f64 {
        (self.value)(x, s)
    }

    #[inline]
    pub fn primitive(&self, x: &[f64], s: f64) -> f64 {
        (self.primitive)(x, s)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_s_dependent(&self) -> bool {
        self.s_dependent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Standard,
    /// Data built from a known solution; the sign requirement on `f` is not enforced.
    Manufactured,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "standard" => Ok(Mode::Standard),
            "manufactured" => Ok(Mode::Manufactured),
            other => Err(Error::InvalidInput(format!("unknown mode '{other}'"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Standard => "standard",
            Mode::Manufactured => "manufactured",
        })
    }
}

/// Comparison functions and constants entering the growth conditions.
/// Anything left unset makes the corresponding check inconclusive.
#[derive(Debug, Clone, Default)]
pub struct Comparisons {
    /// `P_i` in (a1), one per axis.
    pub p: Vec<Option<MoFunction>>,
    pub c: Vec<f64>,
    pub d: Vec<ScalarField>,
    /// `R` and `D` in (phi.max1).
    pub r: Option<MoFunction>,
    pub big_d: Option<ScalarField>,
    /// `M` and `k₁` in (F).
    pub m: Option<MoFunction>,
    pub k1: Option<f64>,
    /// `H` and `k₂` in (G).
    pub h: Option<MoFunction>,
    pub k2: Option<f64>,
}

/// Discretised anisotropic Neumann problem
/// `-Σ ∂_i a_i(x,∂_i u) + b φ'_max(x,u) = f(x,u)` in Ω,
/// `Σ a_i(x,∂_i u) ν_i = g(x,u)` on ∂Ω.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: Arc<Grid>,
    pub family: AnisotropicFamily,
    pub fluxes: Vec<Flux>,
    /// Nodal values of `b`.
    pub b: Vec<f64>,
    pub b0: f64,
    pub f: DataTerm,
    pub g: DataTerm,
    pub comparisons: Comparisons,
    pub mode: Mode,
}

impl ProblemSpec {
    /// Model fluxes, `b ≡ 1`, `b₀ = 1`, zero data.
    pub fn new(grid: Arc<Grid>, family: AnisotropicFamily) -> Result<Self> {
        if grid.dim() != family.dim() {
            return Err(Error::InvalidInput(format!(
                "family has {} components but the grid has {} axes",
                family.dim(),
                grid.dim()
            )));
        }
        let fluxes = family.components().iter().map(Flux::model).collect();
        let b = vec![1.0; grid.len()];
        Ok(ProblemSpec {
            grid,
            family,
            fluxes,
            b,
            b0: 1.0,
            f: DataTerm::zero(),
            g: DataTerm::zero(),
            comparisons: Comparisons::default(),
            mode: Mode::Standard,
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn with_fluxes(mut self, fluxes: Vec<Flux>) -> Result<Self> {
        if fluxes.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "expected {} fluxes, got {}",
                self.dim(),
                fluxes.len()
            )));
        }
        self.fluxes = fluxes;
        Ok(self)
    }

    pub fn with_b(mut self, b: &ScalarField, b0: f64) -> Self {
        self.b = (0..self.grid.len()).map(|i| b.eval(self.grid.point(i))).collect();
        self.b0 = b0;
        self
    }

    pub fn with_source(mut self, f: DataTerm) -> Self {
        self.f = f;
        self
    }

    pub fn with_boundary(mut self, g: DataTerm) -> Self {
        self.g = g;
        self
    }

    pub fn with_comparisons(mut self, c: Comparisons) -> Self {
        self.comparisons = c;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    /// Same data on another grid (nodal `b` is resampled from `b_field`).
    pub fn on_grid(&self, grid: Arc<Grid>, b_field: &ScalarField) -> Result<Self> {
        let mut p = ProblemSpec::new(grid, self.family.clone())?
            .with_fluxes(self.fluxes.clone())?
            .with_b(b_field, self.b0)
            .with_source(self.f.clone())
            .with_boundary(self.g.clone())
            .with_comparisons(self.comparisons.clone());
        p.mode = self.mode;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_flux_for_powers() {
        let phi = MoFunction::power(ScalarField::constant(3.0));
        let a = Flux::model(&phi);
        assert!(a.has_analytic_primitive());
        assert_eq!(a.eval(&[0.0], 0.0), 0.0);
        assert!((a.eval(&[0.0], -2.0) + 4.0).abs() < 1e-14);
        assert!((a.primitive(&[0.0], -2.0) - 8.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn numeric_primitive_matches_closed_form() {
        let phi = MoFunction::power_log(ScalarField::constant(2.0));
        let a = Flux::model(&phi);
        assert!(!a.has_analytic_primitive());
        // A(s) = ∫_0^s t log(e+t) dt; differentiate numerically
        let h = 1e-4;
        let d = (a.primitive(&[0.0], 1.5 + h) - a.primitive(&[0.0], 1.5 - h)) / (2.0 * h);
        assert!((d - a.eval(&[0.0], 1.5)).abs() < 1e-7);
    }

    #[test]
    fn data_term_primitives() {
        let f = DataTerm::from_expr(Expr::parse("2*x1").unwrap(), None);
        assert!(!f.is_s_dependent());
        assert_eq!(f.primitive(&[0.5], 3.0), 3.0);
        let f = DataTerm::from_expr(Expr::parse("max(1 - 0.1*s, 0)").unwrap(), None);
        assert!(f.is_s_dependent());
        let closed = |s: f64| if s <= 10.0 { s - 0.05 * s * s } else { 5.0 };
        for s in [-3.0, 0.5, 9.0, 14.0] {
            assert!((f.primitive(&[0.0], s) - closed(s)).abs() < 1e-9, "{s}");
        }
    }
}
