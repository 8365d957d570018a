use super::MoFunction;
use crate::error::{Error, Result};

/// Largest `t` searched when bracketing the maximiser of `st - φ(x,t)`.
pub const BRACKET_CAP: f64 = 1e12;

const SCAN_PER_DECADE: usize = 32;
const SCAN_DECADES: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugatePoint {
    pub value: f64,
    pub argmax: f64,
}

/// `φ*(x,s) = sup_{t≥0} (st - φ(x,t))`.
pub fn conjugate(phi: &MoFunction, x: &[f64], s: f64) -> Result<f64> {
    conjugate_point(phi, x, s).map(|c| c.value)
}

/// Conjugate value together with a maximising `t`.
pub fn conjugate_point(phi: &MoFunction, x: &[f64], s: f64) -> Result<ConjugatePoint> {
    let s = s.abs();
    if s == 0.0 {
        return Ok(ConjugatePoint {
            value: 0.0,
            argmax: 0.0,
        });
    }
    if !s.is_finite() {
        return Err(Error::BracketFailure { cap: BRACKET_CAP });
    }
    // the derivative bisection assumes φ' nondecreasing
    if phi.has_analytic_derivative() && phi.smoothness().convex {
        conjugate_by_derivative(phi, x, s)
    } else {
        conjugate_by_search(phi, x, s)
    }
}

fn conjugate_by_derivative(phi: &MoFunction, x: &[f64], s: f64) -> Result<ConjugatePoint> {
    let d = |t: f64| phi.derivative(x, t);
    let mut hi = 1.0;
    while !(d(hi) >= s) {
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return Err(Error::BracketFailure { cap: BRACKET_CAP });
        }
    }
    while hi > 1e-300 && d(0.5 * hi) >= s {
        hi *= 0.5;
    }
    let mut lo = if hi > 1e-300 { 0.5 * hi } else { 0.0 };
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if d(mid) >= s {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Both ends are near-maximisers; keep the better one.
    let g = |t: f64| s * t - phi.evaluate(x, t);
    let (argmax, value) = if g(lo) >= g(hi) { (lo, g(lo)) } else { (hi, g(hi)) };
    Ok(ConjugatePoint {
        value: value.max(0.0),
        argmax,
    })
}

fn conjugate_by_search(phi: &MoFunction, x: &[f64], s: f64) -> Result<ConjugatePoint> {
    let g = |t: f64| s * t - phi.evaluate(x, t);
    // Past the first t with φ(t)/t ≥ 2s the objective is negative; nonconvex
    // inputs may still dip, so scan a further factor 16 beyond it.
    let mut hi = 1.0;
    while !(phi.evaluate(x, hi) >= 2.0 * s * hi) {
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return Err(Error::BracketFailure { cap: BRACKET_CAP });
        }
    }
    hi *= 16.0;
    let lo = hi * 10f64.powf(-SCAN_DECADES);
    let n = (SCAN_DECADES as usize) * SCAN_PER_DECADE;
    let grid: Vec<f64> = std::iter::once(0.0)
        .chain((0..=n).map(|k| lo * 10f64.powf(SCAN_DECADES * k as f64 / n as f64)))
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&t| g(t)).collect();
    let mut best = (0.0, vals[0]);
    // refine every local maximum of the scan; nonconvex inputs can have several
    for k in 1..grid.len() {
        let left = vals[k - 1];
        let right = vals.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
        if vals[k] >= left && vals[k] >= right {
            let b = grid[(k + 1).min(grid.len() - 1)];
            let cand = golden_max(&g, grid[k - 1], b, (grid[k], vals[k]));
            if cand.1 > best.1 {
                best = cand;
            }
        }
    }
    let (argmax, value) = best;
    Ok(ConjugatePoint {
        value: value.max(0.0),
        argmax,
    })
}

/// Golden-section maximisation on `[a, b]`; `seed` is a known point whose value
/// is never undercut by the result.
pub(crate) fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, seed: (f64, f64)) -> (f64, f64) {
    const R: f64 = 0.618_033_988_749_894_9;
    let mut best = seed;
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if fc > best.1 {
            best = (c, fc);
        }
        if fd > best.1 {
            best = (d, fd);
        }
        if (b - a) <= 1e-13 * (a.abs() + b.abs()) + 1e-300 {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - R * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + R * (b - a);
            fd = f(d);
        }
    }
    best
}

/// `h**(x,t)`, the convex envelope of `h(x,·)`, by double conjugation.
pub fn biconjugate(h: &MoFunction, x: &[f64], t: f64) -> Result<f64> {
    let t = t.abs();
    if t == 0.0 {
        return Ok(0.0);
    }
    let mut first_err = None;
    let mut q = |s: f64| match conjugate(h, x, s) {
        Ok(c) => t * s - c,
        Err(e) => {
            first_err.get_or_insert(e);
            f64::NEG_INFINITY
        }
    };
    // q is concave in s; expand until it starts decreasing.
    let mut hi = 1.0;
    let mut prev = q(0.5);
    loop {
        let cur = q(hi);
        if !(cur > prev) {
            break;
        }
        prev = cur;
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return Err(Error::BracketFailure { cap: BRACKET_CAP });
        }
    }
    let q0 = q(0.0);
    let cell = std::cell::RefCell::new(q);
    let (_, value) = golden_max(&|s| (cell.borrow_mut())(s), 0.0, hi, (0.0, q0));
    if !value.is_finite() {
        if let Some(e) = first_err {
            return Err(e);
        }
    }
    Ok(value.max(0.0))
}

/// `sup{τ ≥ 0 : φ(x,τ) ≤ s}`; the returned `τ` always satisfies `φ(x,τ) ≤ s`.
pub fn generalized_inverse(phi: &MoFunction, x: &[f64], s: f64) -> f64 {
    if !(s > 0.0) {
        return 0.0;
    }
    let f = |t: f64| phi.evaluate(x, t);
    let mut hi = 1.0;
    while f(hi) <= s {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    while hi > 1e-300 && f(0.5 * hi) > s {
        hi *= 0.5;
    }
    let mut lo = if hi > 1e-300 { 0.5 * hi } else { 0.0 };
    for _ in 0..200 {
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) <= s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
