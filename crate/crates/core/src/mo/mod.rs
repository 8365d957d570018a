//! Musielak-Orlicz functions and their pointwise convex calculus.
//!
//! A [`MoFunction`] is an x-dependent N-function `φ(x, t)`. Values are always
//! taken at `|t|` (even extension to negative arguments).

mod calculus;
mod family;
mod growth;
mod probe;

pub use calculus::{biconjugate, conjugate, conjugate_point, generalized_inverse, ConjugatePoint, BRACKET_CAP};
pub use family::AnisotropicFamily;
pub use growth::{delta2_check, epsilon_bound_constant, grows_essentially_slower, Delta2Report, GrowthReport};
pub use probe::{
    biconjugate_check, derivative_sandwich, inverse_sandwich, probe_n_function, NFunctionReport, ProbeEntry,
    SampledInequality,
};

use crate::error::{Error, Result};
use crate::expr::Expr;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

pub type Kernel = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Parametric family a function was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    Power,
    PowerLog,
    Tabulated,
    Custom,
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyTag::Power => "power",
            FamilyTag::PowerLog => "power-log",
            FamilyTag::Tabulated => "tabulated",
            FamilyTag::Custom => "custom",
        })
    }
}

/// Declared structural properties, consumed by validators and fast paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Smoothness {
    pub derivable_in_t: bool,
    pub lipschitz_in_x: bool,
    /// Convex in `t` by construction (enables `φ** = φ`).
    pub convex: bool,
    /// No dependence on `x` at all.
    pub x_independent: bool,
}

/// Multilinear interpolation of nodal values on a rectilinear grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulation {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Tabulation {
    /// `axes[i]` are strictly increasing node coordinates along axis `i`;
    /// `values` are row-major (last axis fastest).
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidInput("tabulation needs at least one axis".into()));
        }
        for (i, a) in axes.iter().enumerate() {
            if a.len() < 2 || a.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidInput(format!(
                    "tabulation axis {} must have at least two strictly increasing nodes",
                    i + 1
                )));
            }
        }
        let count: usize = axes.iter().map(Vec::len).product();
        if count != values.len() {
            return Err(Error::InvalidInput(format!(
                "tabulation expects {count} values, got {}",
                values.len()
            )));
        }
        Ok(Tabulation { axes, values })
    }

    /// Uniformly spaced nodes over per-axis intervals.
    pub fn uniform(intervals: &[(f64, f64)], counts: &[usize], values: Vec<f64>) -> Result<Self> {
        if intervals.len() != counts.len() {
            return Err(Error::InvalidInput("interval/count dimension mismatch".into()));
        }
        let axes = intervals
            .iter()
            .zip(counts)
            .map(|(&(a, b), &n)| {
                let n = n.max(2);
                (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
            })
            .collect();
        Tabulation::new(axes, values)
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interpolated value; coordinates outside the table are clamped.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let dim = self.axes.len();
        let mut base = 0usize;
        let mut cell = Vec::with_capacity(dim);
        let mut stride = 1usize;
        let mut strides = vec![0usize; dim];
        for i in (0..dim).rev() {
            strides[i] = stride;
            stride *= self.axes[i].len();
        }
        for (i, axis) in self.axes.iter().enumerate() {
            let xi = x
                .get(i)
                .copied()
                .unwrap_or(axis[0])
                .clamp(axis[0], axis[axis.len() - 1]);
            let k = match axis.partition_point(|&a| a <= xi) {
                0 => 0,
                p => (p - 1).min(axis.len() - 2),
            };
            let w = (xi - axis[k]) / (axis[k + 1] - axis[k]);
            base += k * strides[i];
            cell.push(w);
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dim) {
            let mut weight = 1.0;
            let mut idx = base;
            for i in 0..dim {
                if corner >> i & 1 == 1 {
                    weight *= cell[i];
                    idx += strides[i];
                } else {
                    weight *= 1.0 - cell[i];
                }
            }
            if weight != 0.0 {
                acc += weight * self.values[idx];
            }
        }
        acc
    }
}

/// A scalar coefficient field `x ↦ c(x)` such as an exponent `p(x)` or `b(x)`.
#[derive(Clone)]
pub struct ScalarField {
    kind: FieldKind,
}

#[derive(Clone)]
enum FieldKind {
    Constant(f64),
    Expression(Arc<Expr>),
    Table(Arc<Tabulation>),
    Closure(PointFn),
}

impl ScalarField {
    pub fn constant(v: f64) -> Self {
        ScalarField {
            kind: FieldKind::Constant(v),
        }
    }

    pub fn expression(e: Expr) -> Self {
        if !e.uses_arg() && e.max_coord() == 0 {
            if let Ok(v) = e.eval(&[], 0.0) {
                return ScalarField::constant(v);
            }
        }
        ScalarField {
            kind: FieldKind::Expression(Arc::new(e)),
        }
    }

    pub fn tabulated(t: Tabulation) -> Self {
        ScalarField {
            kind: FieldKind::Table(Arc::new(t)),
        }
    }

    pub fn from_fn(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            kind: FieldKind::Closure(Arc::new(f)),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            FieldKind::Constant(v) => *v,
            FieldKind::Expression(e) => e.eval_or_nan(x, 0.0),
            FieldKind::Table(t) => t.eval(x),
            FieldKind::Closure(f) => f(x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            FieldKind::Constant(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.kind, FieldKind::Table(_))
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FieldKind::Constant(v) => write!(f, "ScalarField({v:?})"),
            FieldKind::Expression(e) => write!(f, "ScalarField({e})"),
            FieldKind::Table(_) => f.write_str("ScalarField(<table>)"),
            FieldKind::Closure(_) => f.write_str("ScalarField(<fn>)"),
        }
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FieldKind::Constant(v) => write!(f, "{v:?}"),
            FieldKind::Expression(e) => write!(f, "({e})"),
            FieldKind::Table(_) | FieldKind::Closure(_) => f.write_str("p(x)"),
        }
    }
}

/// An x-dependent N-function `φ(x, t)` with optional analytic derivative and inverse.
#[derive(Clone)]
pub struct MoFunction {
    value: Kernel,
    derivative: Option<Kernel>,
    inverse: Option<Kernel>,
    family: FamilyTag,
    smoothness: Smoothness,
    label: Arc<str>,
    exponent: Option<ScalarField>,
}

impl fmt::Debug for MoFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MoFunction")
            .field("label", &self.label)
            .field("family", &self.family)
            .field("smoothness", &self.smoothness)
            .field("analytic_derivative", &self.derivative.is_some())
            .field("analytic_inverse", &self.inverse.is_some())
            .finish()
    }
}

impl MoFunction {
    /// `φ(x,t) = |t|^{p(x)}`.
    pub fn power(p: ScalarField) -> Self {
        let tag = if p.is_tabulated() {
            FamilyTag::Tabulated
        } else {
            FamilyTag::Power
        };
        let label: Arc<str> = Arc::from(format!("|t|^{p}"));
        let x_independent = p.as_constant().is_some();
        let exponent = Some(p.clone());
        let (pv, pd, pi) = (p.clone(), p.clone(), p);
        MoFunction {
            value: Arc::new(move |x, t| t.powf(pv.eval(x))),
            derivative: Some(Arc::new(move |x, t| {
                let e = pd.eval(x);
                e * t.powf(e - 1.0)
            })),
            inverse: Some(Arc::new(move |x, s| s.powf(1.0 / pi.eval(x)))),
            family: tag,
            smoothness: Smoothness {
                derivable_in_t: true,
                lipschitz_in_x: true,
                convex: true,
                x_independent,
            },
            label,
            exponent,
        }
    }

    /// `φ(x,t) = |t|^{p(x)} log(e + |t|)`.
    pub fn power_log(p: ScalarField) -> Self {
        let label: Arc<str> = Arc::from(format!("|t|^{p} log(e+|t|)"));
        let x_independent = p.as_constant().is_some();
        let (pv, pd, pi) = (p.clone(), p.clone(), p);
        MoFunction {
            value: Arc::new(move |x, t| t.powf(pv.eval(x)) * (std::f64::consts::E + t).ln()),
            derivative: Some(Arc::new(move |x, t| {
                let e = pd.eval(x);
                let l = (std::f64::consts::E + t).ln();
                e * t.powf(e - 1.0) * l + t.powf(e) / (std::f64::consts::E + t)
            })),
            inverse: Some(Arc::new(move |x, s| power_log_inverse(pi.eval(x), s))),
            family: FamilyTag::PowerLog,
            smoothness: Smoothness {
                derivable_in_t: true,
                lipschitz_in_x: true,
                convex: true,
                x_independent,
            },
            label,
            exponent: None,
        }
    }

    /// Arbitrary map without declared convexity or analytic derivative.
    pub fn custom(label: &str, f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        MoFunction {
            value: Arc::new(f),
            derivative: None,
            inverse: None,
            family: FamilyTag::Custom,
            smoothness: Smoothness::default(),
            label: Arc::from(label),
            exponent: None,
        }
    }

    /// Custom map with an analytic `∂/∂t`.
    pub fn custom_with_derivative(
        label: &str,
        f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        MoFunction {
            value: Arc::new(f),
            derivative: Some(Arc::new(df)),
            inverse: None,
            family: FamilyTag::Custom,
            smoothness: Smoothness {
                derivable_in_t: true,
                ..Smoothness::default()
            },
            label: Arc::from(label),
            exponent: None,
        }
    }

    /// Custom function given by an expression in `t` (and `x1..xN`).
    pub fn from_expression(e: Expr) -> Self {
        let label = e.to_string();
        let x_independent = e.max_coord() == 0;
        let mut f = MoFunction::custom(&label, move |x, t| e.eval_or_nan(x, t));
        f.smoothness.x_independent = x_independent;
        f
    }

    pub(crate) fn from_parts(
        label: &str,
        value: Kernel,
        derivative: Option<Kernel>,
        inverse: Option<Kernel>,
        family: FamilyTag,
        smoothness: Smoothness,
    ) -> Self {
        MoFunction {
            value,
            derivative,
            inverse,
            family,
            smoothness,
            label: Arc::from(label),
            exponent: None,
        }
    }

    pub fn with_smoothness(mut self, smoothness: Smoothness) -> Self {
        self.smoothness = smoothness;
        self
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Arc::from(label);
        self
    }

    /// `k · φ`.
    pub fn scaled(&self, k: f64) -> Self {
        let v = self.value.clone();
        let derivative = self
            .derivative
            .clone()
            .map(|d| -> Kernel { Arc::new(move |x, t| k * d(x, t)) });
        let inverse = self
            .inverse
            .clone()
            .map(|inv| -> Kernel { Arc::new(move |x, s| inv(x, s / k)) });
        MoFunction {
            value: Arc::new(move |x, t| k * v(x, t)),
            derivative,
            inverse,
            family: self.family,
            smoothness: self.smoothness,
            label: Arc::from(format!("{k:?}*{}", self.label)),
            exponent: None,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Exponent field of a pure power `|t|^{p(x)}`.
    pub fn exponent(&self) -> Option<&ScalarField> {
        self.exponent.as_ref()
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    /// True when both handles share the same value kernel.
    pub fn same_as(&self, other: &MoFunction) -> bool {
        Arc::ptr_eq(&self.value, &other.value)
    }

    /// `φ(x, |t|)`.
    #[inline]
    pub fn evaluate(&self, x: &[f64], t: f64) -> f64 {
        (self.value)(x, t.abs())
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn has_analytic_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    /// `∂φ/∂t` at `|t|`; central difference with `h = max(1e-6, 1e-6·t)` when no
    /// analytic derivative is attached (forward difference when `t < h`).
    pub fn derivative(&self, x: &[f64], t: f64) -> f64 {
        let t = t.abs();
        if let Some(d) = &self.derivative {
            return d(x, t);
        }
        let h = (1e-6 * t).max(1e-6);
        if t >= h {
            ((self.value)(x, t + h) - (self.value)(x, t - h)) / (2.0 * h)
        } else {
            ((self.value)(x, t + h) - (self.value)(x, t)) / h
        }
    }

    /// Derivative of the even extension: `sign(t) · ∂φ/∂t(x, |t|)`.
    pub fn signed_derivative(&self, x: &[f64], t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            t.signum() * self.derivative(x, t)
        }
    }

    /// `sup{τ ≥ 0 : φ(x,τ) ≤ s}`, analytic when available.
    pub fn inverse(&self, x: &[f64], s: f64) -> f64 {
        match &self.inverse {
            Some(inv) if s > 0.0 => inv(x, s),
            Some(_) => 0.0,
            None => generalized_inverse(self, x, s),
        }
    }

    /// The complementary function `φ*` as a function in its own right.
    ///
    /// Its derivative is the maximiser of `st - φ(x,t)`. Where the supremum
    /// cannot be bracketed the value is `+∞`.
    pub fn conjugate_function(&self) -> MoFunction {
        let a = self.clone();
        let b = self.clone();
        MoFunction {
            value: Arc::new(move |x, s| conjugate(&a, x, s).unwrap_or(f64::INFINITY)),
            derivative: Some(Arc::new(move |x, s| {
                conjugate_point(&b, x, s).map(|c| c.argmax).unwrap_or(f64::INFINITY)
            })),
            inverse: None,
            family: FamilyTag::Custom,
            smoothness: Smoothness {
                derivable_in_t: true,
                lipschitz_in_x: self.smoothness.lipschitz_in_x,
                convex: true,
                x_independent: self.smoothness.x_independent,
            },
            label: Arc::from(format!("({})*", self.label)),
            exponent: None,
        }
    }

    /// The biconjugate `φ**`; returns `self` when convexity is declared.
    pub fn convex_envelope(&self) -> MoFunction {
        if self.smoothness.convex {
            return self.clone();
        }
        let a = self.clone();
        MoFunction {
            value: Arc::new(move |x, t| biconjugate(&a, x, t).unwrap_or(f64::NAN)),
            derivative: None,
            inverse: None,
            family: FamilyTag::Custom,
            smoothness: Smoothness {
                derivable_in_t: false,
                lipschitz_in_x: self.smoothness.lipschitz_in_x,
                convex: true,
                x_independent: self.smoothness.x_independent,
            },
            label: Arc::from(format!("({})**", self.label)),
            exponent: None,
        }
    }
}

/// Solves `p u + ln ln(e + e^u) = ln s` for `u = ln t` by bracketed Newton.
fn power_log_inverse(p: f64, s: f64) -> f64 {
    let ls = s.ln();
    let h = |u: f64| {
        let l = (std::f64::consts::E + u.exp()).ln();
        (p * u + l.ln() - ls, p + u.exp() / ((std::f64::consts::E + u.exp()) * l))
    };
    // log(e + t) ≥ 1 puts the root below ln(s)/p
    let mut hi = ls / p;
    let mut lo = (ls - (std::f64::consts::E + hi.exp()).ln().ln()) / p;
    let mut u = hi;
    for _ in 0..100 {
        let (v, d) = h(u);
        if v == 0.0 {
            return u.exp();
        }
        if v > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let mut next = u - v / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 1e-15 * (1.0 + u.abs()) {
            return next.exp();
        }
        u = next;
    }
    u.exp()
}

/// Geometric grid with `per_decade` points per decade covering `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && per_decade > 0);
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    (0..=n)
        .map(|k| {
            if k == n {
                hi
            } else {
                lo * 10f64.powf(decades * k as f64 / n as f64)
            }
        })
        .collect()
}
