use super::{biconjugate, geometric_grid, MoFunction};
use crate::verdict::{Verdict, Witness};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ProbeEntry {
    pub name: &'static str,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NFunctionReport {
    pub verdict: Verdict,
    pub entries: Vec<ProbeEntry>,
}

impl NFunctionReport {
    pub fn first_failure(&self) -> Option<&ProbeEntry> {
        self.entries.iter().find(|e| e.verdict == Verdict::Fails)
    }
}

/// Finite probes of the N-function axioms on a geometric grid `[1e-6, t_max]`.
pub fn probe_n_function(phi: &MoFunction, x_samples: &[Vec<f64>], t_max: f64) -> NFunctionReport {
    let origin = [vec![0.0]];
    let xs: &[Vec<f64>] = if x_samples.is_empty() { &origin } else { x_samples };
    let grid = geometric_grid(1e-6, t_max.max(10.0), 64);
    let mut entries = Vec::new();
    let mut push = |name, w: Option<Witness>| {
        entries.push(ProbeEntry {
            name,
            verdict: if w.is_some() { Verdict::Fails } else { Verdict::Holds },
            witness: w,
        })
    };

    push(
        "vanishes-at-zero",
        xs.iter()
            .find(|x| phi.evaluate(x, 0.0) != 0.0)
            .map(|x| Witness::new(x, &[("t", 0.0)], phi.evaluate(x, 0.0))),
    );

    let mut positive = None;
    let mut monotone = None;
    let mut convex = None;
    'outer: for x in xs {
        let vals: Vec<f64> = grid.iter().map(|&t| phi.evaluate(x, t)).collect();
        for (k, &t) in grid.iter().enumerate() {
            let v = vals[k];
            if positive.is_none() && !(v > 0.0) {
                positive = Some(Witness::new(x, &[("t", t)], v));
            }
            if monotone.is_none() && k > 0 && v < vals[k - 1] {
                monotone = Some(Witness::new(x, &[("t", t)], v - vals[k - 1]));
            }
            if convex.is_none() && k > 0 {
                let a = grid[k - 1];
                let mid = phi.evaluate(x, 0.5 * (a + t));
                let chord = 0.5 * (vals[k - 1] + v);
                if mid > chord + 1e-10 * chord.abs() {
                    convex = Some(Witness::new(x, &[("t", 0.5 * (a + t))], mid - chord));
                }
            }
            if positive.is_some() && monotone.is_some() && convex.is_some() {
                break 'outer;
            }
        }
    }
    push("positive", positive);
    push("nondecreasing", monotone);
    push("convex", convex);

    let mut superlinear = None;
    let mut sublinear = None;
    let mut inf_at_one = f64::INFINITY;
    for x in xs {
        let one = phi.evaluate(x, 1.0);
        inf_at_one = inf_at_one.min(one);
        let big = (1..=100)
            .map(|k| 10f64.powi(k))
            .any(|t| phi.evaluate(x, t) / t >= 1e3 * one);
        if !big && superlinear.is_none() {
            superlinear = Some(Witness::new(x, &[("t", 1e100)], phi.evaluate(x, 1e100) / 1e100));
        }
        let small = (1..=100)
            .map(|k| 10f64.powi(-k))
            .any(|t| phi.evaluate(x, t) / t <= 1e-3 * one);
        if !small && sublinear.is_none() {
            sublinear = Some(Witness::new(x, &[("t", 1e-100)], phi.evaluate(x, 1e-100) / 1e-100));
        }
    }
    push("superlinear-at-infinity", superlinear);
    push("sublinear-at-zero", sublinear);
    push(
        "inf-at-one-positive",
        if inf_at_one > 0.0 {
            None
        } else {
            Some(Witness::new(&[], &[("t", 1.0)], inf_at_one))
        },
    );

    let verdict = if entries.iter().any(|e| e.verdict == Verdict::Fails) {
        Verdict::Fails
    } else {
        Verdict::Holds
    };
    NFunctionReport { verdict, entries }
}

/// Outcome of a sampled inequality `lo ≤ mid ≤ hi`.
#[derive(Debug, Clone, Serialize)]
pub struct SampledInequality {
    pub verdict: Verdict,
    pub samples: usize,
    pub violations: usize,
    /// Largest violation, relative to the slack scale.
    pub worst: f64,
    pub witness: Option<Witness>,
}

fn sampled(
    samples: &[(Vec<f64>, f64)],
    slack: f64,
    mut sides: impl FnMut(&[f64], f64) -> (f64, f64, f64),
) -> SampledInequality {
    let mut violations = 0;
    let mut worst = 0.0f64;
    let mut witness = None;
    for (x, s) in samples {
        let (lo, mid, hi) = sides(x, *s);
        let tol = slack * (1.0 + lo.abs().max(hi.abs()));
        let excess = (lo - mid).max(mid - hi);
        if !(excess <= tol) {
            violations += 1;
            let e = if excess.is_nan() { f64::INFINITY } else { excess };
            if e > worst || witness.is_none() {
                worst = worst.max(e);
                witness = Some(Witness::new(x, &[("s", *s), ("lo", lo), ("hi", hi)], mid));
            }
        }
    }
    SampledInequality {
        verdict: if violations == 0 {
            Verdict::Holds
        } else {
            Verdict::Fails
        },
        samples: samples.len(),
        violations,
        worst,
        witness,
    }
}

/// (prop2): `s ≤ φ*^{-1}(x,s) φ^{-1}(x,s) ≤ 2s`, `φ_star` the conjugate of `phi`.
pub fn inverse_sandwich(
    phi: &MoFunction,
    phi_star: &MoFunction,
    samples: &[(Vec<f64>, f64)],
    slack: f64,
) -> SampledInequality {
    sampled(samples, slack, |x, s| {
        (s, phi_star.inverse(x, s) * phi.inverse(x, s), 2.0 * s)
    })
}

/// (prop3): `φ(x,s) ≤ s ∂φ/∂s(x,s) ≤ φ(x,2s)`.
pub fn derivative_sandwich(phi: &MoFunction, samples: &[(Vec<f64>, f64)], slack: f64) -> SampledInequality {
    sampled(samples, slack, |x, s| {
        (phi.evaluate(x, s), s * phi.derivative(x, s), phi.evaluate(x, 2.0 * s))
    })
}

/// (astast): `φ** ≤ φ`, and `|φ** - φ| ≤ tol (1 + φ)` when `φ` is declared convex.
pub fn biconjugate_check(phi: &MoFunction, samples: &[(Vec<f64>, f64)], tol: f64) -> SampledInequality {
    let convex = phi.smoothness().convex;
    sampled(samples, tol, |x, t| {
        let v = phi.evaluate(x, t);
        let b = biconjugate(phi, x, t).unwrap_or(f64::NAN);
        (if convex { v } else { f64::NEG_INFINITY }, b, v)
    })
}
