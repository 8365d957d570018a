//! Sobolev conjugate `(φ_min**)_*` and the trace function `ψ_min`.
//!
//! The inverse transform is
//! `G(x,s) = ∫₀^s φ^{-1}(x,t) / t^{1+1/N} dt` with `φ = φ_min**`, and the
//! Sobolev conjugate is its inverse `F = G^{-1}`.

use crate::error::{Error, Result};
use crate::mo::{AnisotropicFamily, FamilyTag, Kernel, MoFunction, Smoothness};
use crate::quad::{gk15, integrate};
use crate::verdict::{Verdict, Witness};
use serde::Serialize;
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

/// Smallest and largest `s` covered by a forward table.
const TABLE_LO: f64 = 1e-280;
const TABLE_HI: f64 = 1e280;
const TABLE_PER_DECADE: usize = 8;
const MAX_LEVELS: usize = 60;
/// Relative tolerance of the exact forward inversion.
pub const FORWARD_RTOL: f64 = 1e-10;
/// Largest `s` searched by the exact forward inversion.
pub const FORWARD_CAP: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureReport {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
    /// Number of graded panels toward `t = 0`.
    pub levels: usize,
}

/// Integrand of `G` in the variable `u = ln t`.
fn log_integrand(phi: &MoFunction, n: usize, x: &[f64], u: f64) -> f64 {
    let t = u.exp();
    if t == 0.0 {
        return 0.0;
    }
    let v = phi.inverse(x, t) * (-u / n as f64).exp();
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// `G(x,s)` by the substitution `t = s·e^{-τ}` and doubling panels in `τ`.
pub fn sobolev_conjugate_inverse(phi_mm: &MoFunction, n: usize, x: &[f64], s: f64) -> Result<f64> {
    inverse_report(phi_mm, n, x, s).map(|r| r.value)
}

fn inverse_report(phi: &MoFunction, n: usize, x: &[f64], s: f64) -> Result<QuadratureReport> {
    if n < 2 {
        return Err(Error::InvalidInput("dimension N must be at least 2".into()));
    }
    let s = s.abs();
    if s == 0.0 {
        return Ok(QuadratureReport {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
            levels: 0,
        });
    }
    let ls = s.ln();
    let f = |tau: f64| log_integrand(phi, n, x, ls - tau);
    let mut report = QuadratureReport {
        value: 0.0,
        error: 0.0,
        subdivisions: 0,
        levels: 0,
    };
    let (mut a, mut width) = (0.0f64, 1.0f64);
    loop {
        // stop short of underflow in t = s·e^{-τ}
        let b = (a + width).min(ls + 690.0);
        let piece = integrate(f, a, b, 1e-300, 1e-12, 200);
        report.value += piece.value;
        report.error += piece.error;
        report.subdivisions += piece.subdivisions + 1;
        report.levels += 1;
        if !report.value.is_finite() {
            return Err(Error::QuadratureDivergence { levels: report.levels });
        }
        if report.levels >= 2 && piece.value.abs() <= 1e-16 * report.value.abs() {
            break;
        }
        if b >= ls + 690.0 {
            // About to underflow: close with the exponential tail fitted on the
            // last unit of τ, which is exact for power-type integrands.
            let (fa, fb) = (f(b - 1.0), f(b));
            let rate = (fa / fb).ln();
            if !(rate > 0.0) || !rate.is_finite() {
                return Err(Error::QuadratureDivergence { levels: report.levels });
            }
            let rest = fb / rate;
            report.value += rest;
            report.error += 1e-3 * rest;
            break;
        }
        if report.levels >= MAX_LEVELS {
            return Err(Error::QuadratureDivergence { levels: report.levels });
        }
        a = b;
        if report.levels >= 2 {
            width *= 2.0;
        }
    }
    Ok(report)
}

/// Cumulative table of `G` on a geometric `s`-grid, inverted by cubic Hermite
/// interpolation of `ln s` against `ln G`.
#[derive(Debug, Clone)]
pub struct ForwardTable {
    ln_g: Vec<f64>,
    ln_s: Vec<f64>,
    /// `d ln s / d ln G` at the nodes.
    slope: Vec<f64>,
}

impl ForwardTable {
    fn build(phi: &MoFunction, n: usize, x: &[f64]) -> Result<Self> {
        let decades = TABLE_HI.log10() - TABLE_LO.log10();
        let count = (decades as usize) * TABLE_PER_DECADE;
        let (u0, u1) = (TABLE_LO.ln(), TABLE_HI.ln());
        let du = (u1 - u0) / count as f64;
        let mut ln_s = Vec::with_capacity(count + 1);
        let mut ln_g = Vec::with_capacity(count + 1);
        let mut slope = Vec::with_capacity(count + 1);
        let mut g = sobolev_conjugate_inverse(phi, n, x, TABLE_LO)?;
        let f = |u: f64| log_integrand(phi, n, x, u);
        for k in 0..=count {
            let u = u0 + du * k as f64;
            if k > 0 {
                g += gk15(&f, u - du, u).0;
            }
            let dlng = f(u) / g;
            if !(g > 0.0) || !g.is_finite() || !(dlng > 0.0) {
                continue;
            }
            ln_s.push(u);
            ln_g.push(g.ln());
            slope.push(1.0 / dlng);
        }
        if ln_s.len() < 2 {
            return Err(Error::QuadratureDivergence { levels: 0 });
        }
        Ok(ForwardTable { ln_g, ln_s, slope })
    }

    /// `F(t)` from the table.
    pub fn forward(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let y = t.ln();
        let last = self.ln_g.len() - 1;
        let ln_s = if y <= self.ln_g[0] {
            self.ln_s[0] + (y - self.ln_g[0]) * self.slope[0]
        } else if y >= self.ln_g[last] {
            self.ln_s[last] + (y - self.ln_g[last]) * self.slope[last]
        } else {
            let k = self.ln_g.partition_point(|&v| v <= y) - 1;
            let (y0, y1) = (self.ln_g[k], self.ln_g[k + 1]);
            let h = y1 - y0;
            let r = (y - y0) / h;
            let (r2, r3) = (r * r, r * r * r);
            (2.0 * r3 - 3.0 * r2 + 1.0) * self.ln_s[k]
                + (r3 - 2.0 * r2 + r) * h * self.slope[k]
                + (-2.0 * r3 + 3.0 * r2) * self.ln_s[k + 1]
                + (r3 - r2) * h * self.slope[k + 1]
        };
        ln_s.exp()
    }
}

/// The Sobolev conjugate of a fixed `φ_min**` in dimension `N`.
pub struct SobolevConjugate {
    phi: MoFunction,
    n: usize,
    tables: RwLock<HashMap<Vec<u64>, Arc<ForwardTable>>>,
}

impl std::fmt::Debug for SobolevConjugate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SobolevConjugate")
            .field("phi", &self.phi.label())
            .field("n", &self.n)
            .finish()
    }
}

impl SobolevConjugate {
    /// `phi_mm` must already be convex (pass `φ_min**`).
    pub fn new(phi_mm: MoFunction, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput("dimension N must be at least 2".into()));
        }
        Ok(SobolevConjugate {
            phi: phi_mm,
            n,
            tables: RwLock::new(HashMap::new()),
        })
    }

    pub fn from_family(family: &AnisotropicFamily) -> Result<Self> {
        SobolevConjugate::new(family.phi_min_envelope(), family.dim())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn base(&self) -> &MoFunction {
        &self.phi
    }

    pub fn inverse(&self, x: &[f64], s: f64) -> Result<f64> {
        sobolev_conjugate_inverse(&self.phi, self.n, x, s)
    }

    pub fn inverse_report(&self, x: &[f64], s: f64) -> Result<QuadratureReport> {
        inverse_report(&self.phi, self.n, x, s)
    }

    /// `F(x,t) = sup{s : G(x,s) ≤ t}` by bisection in `ln s` to relative
    /// tolerance [`FORWARD_RTOL`].
    pub fn forward(&self, x: &[f64], t: f64) -> Result<f64> {
        let t = t.abs();
        if t == 0.0 {
            return Ok(0.0);
        }
        let g = |s: f64| self.inverse(x, s);
        let mut hi = 1.0;
        while g(hi)? < t {
            hi *= 1e4;
            if hi > FORWARD_CAP {
                return Err(Error::BracketFailure { cap: FORWARD_CAP });
            }
        }
        let mut lo = hi * 1e-4;
        while g(lo)? > t {
            hi = lo;
            lo *= 1e-4;
            if lo < 1e-300 {
                return Ok(0.0);
            }
        }
        let (mut a, mut b) = (lo.ln(), hi.ln());
        while b - a > FORWARD_RTOL {
            let m = 0.5 * (a + b);
            if g(m.exp())? <= t {
                a = m;
            } else {
                b = m;
            }
        }
        Ok((0.5 * (a + b)).exp())
    }

    fn key(&self, x: &[f64]) -> Vec<u64> {
        if self.phi.smoothness().x_independent {
            Vec::new()
        } else {
            x.iter().map(|v| v.to_bits()).collect()
        }
    }

    /// Memoised forward table for the slice at `x`.
    pub fn table(&self, x: &[f64]) -> Result<Arc<ForwardTable>> {
        let key = self.key(x);
        if let Some(t) = self.tables.read().expect("table lock").get(&key) {
            return Ok(t.clone());
        }
        let table = Arc::new(ForwardTable::build(&self.phi, self.n, x)?);
        self.tables
            .write()
            .expect("table lock")
            .entry(key)
            .or_insert_with(|| table.clone());
        Ok(table)
    }

    /// Table-interpolated `F(x,t)`; used in bulk norm computations.
    pub fn forward_fast(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.table(x)?.forward(t.abs()))
    }

    /// `∂F/∂t = F^{(N+1)/N} / φ^{-1}(x, F)`.
    pub fn forward_derivative_at(&self, x: &[f64], f: f64) -> f64 {
        if f == 0.0 {
            return 0.0;
        }
        f.powf(1.0 + 1.0 / self.n as f64) / self.phi.inverse(x, f)
    }

    /// `F` as a Musielak-Orlicz function (table-backed, analytic derivative
    /// and inverse).
    pub fn as_mo_function(self: &Arc<Self>) -> MoFunction {
        let a = self.clone();
        let b = self.clone();
        let c = self.clone();
        let value: Kernel = Arc::new(move |x, t| a.forward_fast(x, t).unwrap_or(f64::NAN));
        let derivative: Kernel = Arc::new(move |x, t| match b.forward_fast(x, t) {
            Ok(f) => b.forward_derivative_at(x, f),
            Err(_) => f64::NAN,
        });
        let inverse: Kernel = Arc::new(move |x, s| c.inverse(x, s).unwrap_or(f64::NAN));
        MoFunction::from_parts(
            &format!("({})_*", self.phi.label()),
            value,
            Some(derivative),
            Some(inverse),
            FamilyTag::Custom,
            Smoothness {
                derivable_in_t: true,
                lipschitz_in_x: self.phi.smoothness().lipschitz_in_x,
                convex: true,
                x_independent: self.phi.smoothness().x_independent,
            },
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilityReport {
    pub verdict: Verdict,
    pub head: Verdict,
    pub tail: Verdict,
    /// Extrapolated head integral `∫₀¹` at the first sample.
    pub head_value: f64,
    pub witness: Option<Witness>,
}

const PROBE_DECADES: i32 = 40;

/// Per-decade integrals `∫_{10^{k-1}}^{10^k}` in the log variable.
fn decade_increments(phi: &MoFunction, n: usize, x: &[f64], toward_zero: bool) -> Vec<f64> {
    let ln10 = std::f64::consts::LN_10;
    (1..=PROBE_DECADES)
        .map(|k| {
            let (a, b) = if toward_zero {
                (-(k as f64) * ln10, -((k - 1) as f64) * ln10)
            } else {
                (((k - 1) as f64) * ln10, k as f64 * ln10)
            };
            integrate(|u| log_integrand(phi, n, x, u), a, b, 1e-300, 1e-10, 50).value
        })
        .collect()
}

/// Probes the finiteness of `∫₀¹ φ^{-1}(x,t)/t^{1+1/N} dt` and the divergence
/// of the same integral over `[1, ∞)`.
pub fn check_integrability(phi_mm: &MoFunction, n: usize, x_samples: &[Vec<f64>]) -> Result<IntegrabilityReport> {
    if n < 2 {
        return Err(Error::InvalidInput("dimension N must be at least 2".into()));
    }
    let origin = [vec![0.0; n]];
    let xs: &[Vec<f64>] = if x_samples.is_empty() { &origin } else { x_samples };
    let mut head = Verdict::Holds;
    let mut tail = Verdict::Holds;
    let mut witness = None;
    let mut head_value = f64::NAN;
    for x in xs {
        let h = decade_increments(phi_mm, n, x, true);
        let m = h.len();
        let ratios = [h[m - 3] / h[m - 4], h[m - 2] / h[m - 3], h[m - 1] / h[m - 2]];
        let v = if ratios.iter().all(|&r| r < 0.999) {
            // geometric remainder of the decade series
            let r = ratios[2];
            if head_value.is_nan() {
                head_value = h.iter().sum::<f64>() + h[m - 1] * r / (1.0 - r);
            }
            Verdict::Holds
        } else if ratios.iter().all(|&r| r >= 1.0) || h.iter().any(|v| !v.is_finite()) {
            witness.get_or_insert_with(|| Witness::new(x, &[("t", 10f64.powi(-PROBE_DECADES))], ratios[2]));
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        };
        head = head.and(v);

        let t = decade_increments(phi_mm, n, x, false);
        let m = t.len();
        let ratios = [t[m - 3] / t[m - 4], t[m - 2] / t[m - 3], t[m - 1] / t[m - 2]];
        let v = if ratios.iter().all(|&r| r >= 1.0 - 1e-9) {
            Verdict::Holds
        } else if ratios.iter().all(|&r| r < 0.999) {
            witness.get_or_insert_with(|| Witness::new(x, &[("t", 10f64.powi(PROBE_DECADES))], ratios[2]));
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        };
        tail = tail.and(v);
    }
    Ok(IntegrabilityReport {
        verdict: head.and(tail),
        head,
        tail,
        head_value,
        witness,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativeGrowthReport {
    pub verdict: Verdict,
    /// `max |∂F/∂x_i| / (c₀ (F + F^{1+ν}))` over the samples.
    pub worst_ratio: f64,
    pub witness: Option<Witness>,
}

/// Checks `|∂F/∂x_i| ≤ c₀ (F + F^{1+ν})` with central differences in `x`
/// (step `1e-4` of the domain width along each axis).
pub fn check_derivative_growth(
    sc: &SobolevConjugate,
    nu: f64,
    c0: f64,
    x_samples: &[Vec<f64>],
    t_grid: &[f64],
    domain: &[(f64, f64)],
) -> Result<DerivativeGrowthReport> {
    let n = sc.dim();
    if !(nu > 0.0 && nu < 1.0 / n as f64) {
        return Err(Error::InvalidInput(format!("nu must lie in (0, 1/{n})")));
    }
    if !(c0 > 0.0) {
        return Err(Error::InvalidInput("c0 must be positive".into()));
    }
    if domain.len() < x_samples.iter().map(Vec::len).max().unwrap_or(0) {
        return Err(Error::InvalidInput("domain has fewer axes than the samples".into()));
    }
    let mut worst = 0.0f64;
    let mut witness = None;
    for x in x_samples {
        for &t in t_grid {
            let f = sc.forward(x, t)?;
            let bracket = c0 * (f + f.powf(1.0 + nu));
            for i in 0..x.len() {
                let (a, b) = domain[i];
                let h = 1e-4 * (b - a);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] = (x[i] + h).min(b);
                xm[i] = (x[i] - h).max(a);
                let d = (sc.forward(&xp, t)? - sc.forward(&xm, t)?) / (xp[i] - xm[i]);
                let ratio = d.abs() / bracket;
                if ratio > worst || ratio.is_nan() {
                    worst = if ratio.is_nan() { f64::INFINITY } else { ratio };
                    witness = Some(Witness::new(x, &[("t", t), ("axis", (i + 1) as f64)], d));
                }
            }
        }
    }
    Ok(DerivativeGrowthReport {
        verdict: if worst <= 1.0 { Verdict::Holds } else { Verdict::Fails },
        worst_ratio: worst,
        witness: if worst <= 1.0 { None } else { witness },
    })
}

/// `ψ_min(x,t) = F(x,t)^{(N-1)/N}`.
#[derive(Debug, Clone)]
pub struct TraceFunction {
    pub psi_min: MoFunction,
}

pub fn build_trace_function(sc: &Arc<SobolevConjugate>) -> TraceFunction {
    let n = sc.dim() as f64;
    let e = (n - 1.0) / n;
    let a = sc.clone();
    let b = sc.clone();
    let c = sc.clone();
    let value: Kernel = Arc::new(move |x, t| a.forward_fast(x, t).map(|f| f.powf(e)).unwrap_or(f64::NAN));
    // ψ' = (N-1)/N · F / φ^{-1}(F)
    let derivative: Kernel = Arc::new(move |x, t| match b.forward_fast(x, t) {
        Ok(f) if f > 0.0 => e * f / b.base().inverse(x, f),
        Ok(_) => 0.0,
        Err(_) => f64::NAN,
    });
    let inverse: Kernel = Arc::new(move |x, s| c.inverse(x, s.powf(1.0 / e)).unwrap_or(f64::NAN));
    let smooth = sc.base().smoothness();
    TraceFunction {
        psi_min: MoFunction::from_parts(
            &format!("(({})_*)^{e:?}", sc.base().label()),
            value,
            Some(derivative),
            Some(inverse),
            FamilyTag::Custom,
            Smoothness {
                derivable_in_t: true,
                lipschitz_in_x: smooth.lipschitz_in_x,
                convex: true,
                x_independent: smooth.x_independent,
            },
        ),
    }
}

/// `p_* = Np/(N-p)`.
pub fn critical_exponent(p: f64, n: usize) -> f64 {
    let n = n as f64;
    n * p / (n - p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mo::{probe_n_function, ScalarField, Tabulation};

    fn power(p: f64) -> MoFunction {
        MoFunction::power(ScalarField::constant(p))
    }

    fn closed_forward(p: f64, n: usize, t: f64) -> f64 {
        let ps = critical_exponent(p, n);
        (t / ps).powf(ps)
    }

    #[test]
    fn inverse_matches_antiderivative() {
        for &(p, n) in &[(1.2, 2), (1.5, 2), (1.8, 2), (1.5, 3), (2.5, 3)] {
            let ps = critical_exponent(p, n);
            for &s in &[1e-6, 0.3, 1.0, 7.0, 1e5] {
                let got = sobolev_conjugate_inverse(&power(p), n, &[0.0; 3], s).unwrap();
                let want = ps * s.powf(1.0 / ps);
                assert!((got - want).abs() < 1e-9 * want, "p={p} n={n} s={s}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn three_halves_in_the_plane() {
        let sc = SobolevConjugate::new(power(1.5), 2).unwrap();
        assert!((sc.inverse(&[0.0, 0.0], 1.0).unwrap() - 6.0).abs() < 1e-10);
        assert!((sc.forward(&[0.0, 0.0], 6.0).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(sc.inverse(&[0.0, 0.0], 0.0).unwrap(), 0.0);
        assert_eq!(sc.forward(&[0.0, 0.0], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn head_divergence_is_reported() {
        let r = sobolev_conjugate_inverse(&power(3.0), 2, &[0.0, 0.0], 1.0);
        assert!(matches!(r, Err(Error::QuadratureDivergence { .. })));
    }

    #[test]
    fn forward_and_table_match_closed_form() {
        for &p in &[1.2, 1.5, 1.8] {
            for &n in &[2usize, 3] {
                let sc = SobolevConjugate::new(power(p), n).unwrap();
                for k in 0..=20 {
                    let t = 10f64.powf(-2.0 + 0.2 * k as f64);
                    let want = closed_forward(p, n, t);
                    let exact = sc.forward(&[0.0; 3], t).unwrap();
                    let fast = sc.forward_fast(&[0.0; 3], t).unwrap();
                    assert!((exact - want).abs() <= 1e-4 * want, "p={p} n={n} t={t}");
                    assert!(
                        (fast - want).abs() <= 1e-8 * want,
                        "p={p} n={n} t={t}: {fast} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn variable_exponent_forward_matches_frozen_exponent() {
        let sc = SobolevConjugate::new(MoFunction::power(ScalarField::from_fn(|x| 1.5 + 0.2 * x[0])), 2).unwrap();
        let x = [0.5, 0.5];
        let got = sc.forward(&x, 2.0).unwrap();
        assert!((got - closed_forward(1.6, 2, 2.0)).abs() < 1e-8 * got);
        assert!((sc.inverse(&x, got).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn inverse_is_concave_and_forward_is_n_function() {
        let sc = Arc::new(SobolevConjugate::new(power_log_like(), 2).unwrap());
        let grid = crate::mo::geometric_grid(1e-3, 1e3, 8);
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = sc.inverse(&[0.0, 0.0], 0.5 * (a + b)).unwrap();
            let chord = 0.5 * (sc.inverse(&[0.0, 0.0], a).unwrap() + sc.inverse(&[0.0, 0.0], b).unwrap());
            assert!(mid >= chord - 1e-8 * chord);
        }
        let f = sc.as_mo_function();
        let r = probe_n_function(&f, &[vec![0.0, 0.0]], 1e2);
        assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
    }

    fn power_log_like() -> MoFunction {
        MoFunction::power_log(ScalarField::constant(1.4))
    }

    #[test]
    fn differential_identity_and_young_bound() {
        let phi = power_log_like();
        let sc = Arc::new(SobolevConjugate::new(phi.clone(), 2).unwrap());
        let x = [0.0, 0.0];
        let conj = phi.conjugate_function();
        for &t in &[0.05, 0.5, 2.0, 10.0, 40.0] {
            let f = sc.forward(&x, t).unwrap();
            let h = 1e-5 * t;
            let df = (sc.forward(&x, t + h).unwrap() - sc.forward(&x, t - h).unwrap()) / (2.0 * h);
            let lhs = phi.inverse(&x, f) * df;
            let rhs = f.powf(1.5);
            assert!((lhs - rhs).abs() <= 1e-3 * rhs, "t={t}: {lhs} vs {rhs}");
            let bound = f.sqrt() * conj.inverse(&x, f);
            assert!(df <= bound + 1e-6, "t={t}: {df} vs {bound}");
        }
    }

    #[test]
    fn integrability_examples() {
        let r = check_integrability(&power(1.5), 2, &[]).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        // closed form ∫₀¹ t^{1/p-1-1/N} dt = 1/(1/p - 1/N)
        assert!((r.head_value - 6.0).abs() < 1e-6, "{}", r.head_value);
        let r = check_integrability(&power(3.0), 2, &[]).unwrap();
        assert_eq!(r.head, Verdict::Fails);
        assert!(r.witness.is_some());
    }

    #[test]
    fn variable_exponent_integrability_in_three_dimensions() {
        let phi = MoFunction::power(ScalarField::from_fn(|x| 1.2 + 0.6 * x[0]));
        let xs: Vec<Vec<f64>> = (0..=4).map(|k| vec![0.25 * k as f64, 0.5, 0.5]).collect();
        let r = check_integrability(&phi, 3, &xs).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        for x in &xs {
            let p = 1.2 + 0.6 * x[0];
            // exponent arithmetic: both conditions reduce to 1/p - 1/N > 0
            assert!(1.0 / p - 1.0 / 3.0 > 0.0);
            let head = integrate(|t: f64| t.powf(1.0 / p - 1.0 - 1.0 / 3.0), 0.0, 1.0, 1e-12, 1e-10, 400).value;
            assert!((head - 1.0 / (1.0 / p - 1.0 / 3.0)).abs() < 1e-3 * head);
        }
    }

    #[test]
    fn constant_exponent_has_no_x_derivative() {
        let sc = SobolevConjugate::new(power(1.5), 2).unwrap();
        let xs = vec![vec![0.3, 0.3], vec![0.7, 0.2]];
        let r = check_derivative_growth(&sc, 0.4, 1.0, &xs, &[0.1, 1.0, 10.0], &[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!(r.worst_ratio < 1e-12);
    }

    /// `c₀ = max|∂p_*/∂x₁| · max|log(t/(e·p_*))|` over the probed `t` range,
    /// from `∂F/∂x = p_*' log(t/(e p_*)) F`.
    fn smooth_c0(t_lo: f64, t_hi: f64) -> f64 {
        let (p_lo, p_hi) = (1.5, 1.7);
        let dps = |p: f64| 4.0 / ((2.0 - p) * (2.0 - p)) * 0.2;
        let max_dps = dps(p_hi);
        let max_log = [p_lo, p_hi]
            .iter()
            .flat_map(|&p| {
                let ps = critical_exponent(p, 2);
                [
                    (t_lo / (std::f64::consts::E * ps)).ln().abs(),
                    (t_hi / (std::f64::consts::E * ps)).ln().abs(),
                ]
            })
            .fold(0.0, f64::max);
        max_dps * max_log
    }

    #[test]
    fn smooth_exponent_satisfies_growth_bound() {
        let sc = SobolevConjugate::new(MoFunction::power(ScalarField::from_fn(|x| 1.5 + 0.2 * x[0])), 2).unwrap();
        let xs: Vec<Vec<f64>> = [0.1, 0.4, 0.7, 0.9].iter().map(|&a| vec![a, 0.5]).collect();
        let ts = crate::mo::geometric_grid(1e-2, 1e2, 2);
        let c0 = smooth_c0(1e-2, 1e2);
        let r = check_derivative_growth(&sc, 0.4, c0, &xs, &ts, &[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
        assert!(r.worst_ratio > 1e-3);
    }

    #[test]
    fn rough_exponent_fails_growth_bound() {
        let table = Tabulation::new(
            vec![vec![0.0, 0.5, 0.5 + 1e-6, 1.0], vec![0.0, 1.0]],
            vec![1.3, 1.3, 1.3, 1.3, 1.7, 1.7, 1.7, 1.7],
        )
        .unwrap();
        let sc = SobolevConjugate::new(MoFunction::power(ScalarField::tabulated(table)), 2).unwrap();
        let c0 = smooth_c0(1e-2, 1e2);
        let r = check_derivative_growth(
            &sc,
            0.4,
            c0,
            &[vec![0.5, 0.5]],
            &[0.1, 1.0, 10.0],
            &[(0.0, 1.0), (0.0, 1.0)],
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(r.witness.is_some());
    }

    #[test]
    fn trace_function_of_three_halves() {
        let sc = Arc::new(SobolevConjugate::new(power(1.5), 2).unwrap());
        let psi = build_trace_function(&sc).psi_min;
        for &t in &[0.01, 0.5, 3.0, 50.0] {
            let want = (t / 6.0f64).powi(3);
            assert!((psi.evaluate(&[0.0, 0.0], t) - want).abs() < 1e-8 * want);
            let dwant = 3.0 * t * t / 216.0;
            assert!((psi.derivative(&[0.0, 0.0], t) - dwant).abs() < 1e-7 * dwant);
        }
        assert_eq!(psi.evaluate(&[0.0, 0.0], 0.0), 0.0);
        let r = probe_n_function(&psi, &[vec![0.0, 0.0]], 1e3);
        assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
    }

    #[test]
    fn memoisation_is_per_x_for_variable_exponent() {
        let sc = SobolevConjugate::new(MoFunction::power(ScalarField::from_fn(|x| 1.4 + 0.1 * x[1])), 2).unwrap();
        let a = sc.table(&[0.0, 0.0]).unwrap();
        let b = sc.table(&[0.0, 0.0]).unwrap();
        let c = sc.table(&[0.0, 1.0]).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert!(!Arc::ptr_eq(&a, &c));
    }
}
