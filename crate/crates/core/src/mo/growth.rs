use super::{geometric_grid, MoFunction};
use crate::error::{Error, Result};
use crate::verdict::{Verdict, Witness};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub verdict: Verdict,
    /// Largest ratio `ψ(x,t_max)/φ(x,c·t_max)` over all samples.
    pub final_ratio: f64,
    pub witness: Option<Witness>,
}

/// Finite probe of `ψ ≪ φ`: `ψ(x,t)/φ(x,ct) → 0` for every `c > 0`.
///
/// The ratio is read at `t_max/10³, …, t_max`. It holds when the ratio
/// strictly decreases across these decades and either ends below `1e-3` or
/// its reciprocal grows by non-shrinking steps (which still diverges). It
/// fails when the ratio is nondecreasing over the final two decades and ends
/// above 1.
pub fn grows_essentially_slower(
    psi: &MoFunction,
    phi: &MoFunction,
    c_grid: &[f64],
    t_max: f64,
    x_samples: &[Vec<f64>],
) -> Result<GrowthReport> {
    if c_grid.is_empty() || c_grid.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::InvalidInput("c_grid must be nonempty and positive".into()));
    }
    if !(t_max >= 1e3) {
        return Err(Error::InvalidInput("t_max must be at least 1e3".into()));
    }
    let origin = [vec![0.0]];
    let xs: &[Vec<f64>] = if x_samples.is_empty() { &origin } else { x_samples };
    let mut all_hold = true;
    let mut final_ratio = 0.0f64;
    for x in xs {
        for &c in c_grid {
            let r: Vec<f64> = (0..4)
                .map(|k| {
                    let t = t_max / 10f64.powi(3 - k);
                    psi.evaluate(x, t) / phi.evaluate(x, c * t)
                })
                .collect();
            if r.iter().any(|v| v.is_nan()) {
                all_hold = false;
                continue;
            }
            final_ratio = final_ratio.max(r[3]);
            let nondecreasing = r[3] >= r[2] * (1.0 - 1e-12) && r[2] >= r[1] * (1.0 - 1e-12);
            if nondecreasing && r[3] > 1.0 {
                return Ok(GrowthReport {
                    verdict: Verdict::Fails,
                    final_ratio: r[3],
                    witness: Some(Witness::new(x, &[("c", c), ("t", t_max)], r[3])),
                });
            }
            let decreasing = r.windows(2).all(|w| w[1] < w[0]);
            let inv: Vec<f64> = r.iter().map(|v| 1.0 / v).collect();
            let steps = [inv[1] - inv[0], inv[2] - inv[1], inv[3] - inv[2]];
            let steady = steps[1] >= 0.9 * steps[0] && steps[2] >= 0.9 * steps[1];
            if !(decreasing && (r[3] < 1e-3 || steady)) {
                all_hold = false;
            }
        }
    }
    Ok(GrowthReport {
        verdict: if all_hold {
            Verdict::Holds
        } else {
            Verdict::Inconclusive
        },
        final_ratio,
        witness: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Delta2Report {
    pub verdict: Verdict,
    /// Estimated doubling constant over `t ≥ 1`.
    pub k_hat: f64,
    /// `sup (φ(x,2t) - k̂ φ(x,t))⁺` over sampled `t < 1`, the `h(x)` surrogate.
    pub h_envelope: f64,
    pub witness: Option<Witness>,
}

/// Heuristic Δ₂ probe: `φ(x,2t) ≤ k φ(x,t) + h(x)`.
pub fn delta2_check(phi: &MoFunction, x_samples: &[Vec<f64>], t_max: f64) -> Result<Delta2Report> {
    if !(t_max >= 1e3) {
        return Err(Error::InvalidInput("t_max must be at least 1e3".into()));
    }
    let origin = [vec![0.0]];
    let xs: &[Vec<f64>] = if x_samples.is_empty() { &origin } else { x_samples };
    let grid = geometric_grid(1.0, t_max, 64);
    let decades = t_max.log10().ceil().max(1.0) as usize;
    // per-decade maxima with their location
    let mut per_decade: Vec<(f64, Option<(usize, f64)>)> = vec![(0.0, None); decades];
    for (xi, x) in xs.iter().enumerate() {
        for &t in &grid {
            let ratio = phi.evaluate(x, 2.0 * t) / phi.evaluate(x, t);
            if !ratio.is_finite() {
                return Ok(Delta2Report {
                    verdict: Verdict::Fails,
                    k_hat: f64::INFINITY,
                    h_envelope: f64::NAN,
                    witness: Some(Witness::new(x, &[("t", t)], ratio)),
                });
            }
            let d = (t.log10().floor() as usize).min(decades - 1);
            if ratio > per_decade[d].0 {
                per_decade[d] = (ratio, Some((xi, t)));
            }
        }
    }
    let k_hat = per_decade.iter().map(|d| d.0).fold(0.0, f64::max);
    let mut h_envelope = 0.0f64;
    for x in xs {
        for t in geometric_grid(1e-6, 1.0, 64) {
            h_envelope = h_envelope.max(phi.evaluate(x, 2.0 * t) - k_hat * phi.evaluate(x, t));
        }
    }
    let last = per_decade[decades - 1];
    let prev = per_decade[decades.saturating_sub(2)];
    let growth = (last.0 - prev.0) / prev.0;
    if growth < 0.05 {
        Ok(Delta2Report {
            verdict: Verdict::Holds,
            k_hat,
            h_envelope,
            witness: None,
        })
    } else {
        let (xi, t) = last.1.unwrap_or((0, t_max));
        Ok(Delta2Report {
            verdict: Verdict::Fails,
            k_hat,
            h_envelope,
            witness: Some(Witness::new(&xs[xi], &[("t", t), ("growth", growth)], last.0)),
        })
    }
}

/// `K̂₀ = max (g - εf)⁺` over the sample set, so that `g ≤ εf + K̂₀` there.
///
/// Fails with `DivergenceSuspected` when the per-decade maximum of the
/// excess still increases over the last two decades of `t_grid`.
pub fn epsilon_bound_constant(
    f: &dyn Fn(&[f64], f64) -> f64,
    g: &dyn Fn(&[f64], f64) -> f64,
    epsilon: f64,
    x_samples: &[Vec<f64>],
    t_grid: &[f64],
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    let origin = [vec![0.0]];
    let xs: &[Vec<f64>] = if x_samples.is_empty() { &origin } else { x_samples };
    let mut k0 = 0.0f64;
    let mut decades: std::collections::BTreeMap<i64, f64> = Default::default();
    for x in xs {
        for &t in t_grid {
            let excess = (g(x, t) - epsilon * f(x, t)).max(0.0);
            k0 = k0.max(excess);
            if t > 0.0 {
                let e = decades.entry(t.log10().floor() as i64).or_insert(0.0);
                *e = e.max(excess);
            }
        }
    }
    let tail: Vec<f64> = decades.values().rev().take(3).copied().collect();
    if tail.len() == 3 && tail[0] > tail[1] && tail[1] > tail[2] {
        return Err(Error::DivergenceSuspected {
            prev: tail[1],
            last: tail[0],
        });
    }
    Ok(k0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mo::ScalarField;

    fn pw(p: f64) -> MoFunction {
        MoFunction::power(ScalarField::constant(p))
    }

    const CS: [f64; 3] = [0.1, 1.0, 10.0];

    #[test]
    fn square_is_slower_than_cube() {
        let r = grows_essentially_slower(&pw(2.0), &pw(3.0), &CS, 1e6, &[]).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn identical_growth_fails_with_witness() {
        let r = grows_essentially_slower(&pw(2.0), &pw(2.0), &CS, 1e6, &[]).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        let w = r.witness.unwrap();
        // ratio is 1/c²
        assert!((w.value - 100.0).abs() < 1e-9);
    }

    #[test]
    fn logarithmic_gap_holds() {
        let phi = MoFunction::power_log(ScalarField::constant(2.0));
        let r = grows_essentially_slower(&pw(2.0), &phi, &CS, 1e6, &[]).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        // direct evaluation at t = 1e6, c = 0.1
        let direct = 1.0 / (0.01 * (std::f64::consts::E + 1e5).ln());
        assert!((r.final_ratio - direct).abs() < 1e-9 * direct);
    }

    #[test]
    fn slowly_converging_ratio_is_inconclusive() {
        let psi = MoFunction::custom("t^2 (1 + 1/log(e+t))", |_, t| {
            t * t * (1.0 + 1.0 / (std::f64::consts::E + t).ln())
        });
        let r = grows_essentially_slower(&psi, &pw(2.0), &[1.0], 1e6, &[]).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn cube_doubles_by_eight() {
        let r = delta2_check(&pw(3.0), &[vec![0.0, 0.0]], 1e3).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!((r.k_hat - 8.0).abs() < 1e-12);
        assert!(r.h_envelope <= 1e-12);
    }

    #[test]
    fn exponential_fails_delta2() {
        // oracle: the ratio at t = 10, 20, 40 grows without bound
        let f = |t: f64| t.exp() - t - 1.0;
        let rs: Vec<f64> = [10.0, 20.0, 40.0].iter().map(|&t| f(2.0 * t) / f(t)).collect();
        assert!(rs[1] > 1e3 * rs[0] && rs[2] > 1e3 * rs[1]);
        let phi = MoFunction::custom("e^t-t-1", move |_, t| f(t));
        let r = delta2_check(&phi, &[vec![0.0]], 1e3).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(r.witness.is_some());
    }

    #[test]
    fn power_log_holds_delta2() {
        let phi = MoFunction::power_log(ScalarField::constant(2.0));
        let r = delta2_check(&phi, &[vec![0.0]], 1e6).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        // sweep oracle
        let k = super::super::geometric_grid(1.0, 1e6, 200)
            .into_iter()
            .map(|t| phi.evaluate(&[], 2.0 * t) / phi.evaluate(&[], t))
            .fold(0.0, f64::max);
        assert!((r.k_hat - k).abs() < 1e-3 * k);
        assert!(r.k_hat <= 4.0 * (1.0 + 2f64.ln()));
    }

    #[test]
    fn epsilon_bound_examples() {
        let grid = geometric_grid(1e-6, 1e4, 2000);
        let k = epsilon_bound_constant(&|_, t| t * t, &|_, t| t, 1.0, &[], &grid).unwrap();
        assert!((k - 0.25).abs() < 1e-6);
        let k = epsilon_bound_constant(&|_, t| t * t, &|_, t| t * t, 1.0, &[], &grid).unwrap();
        assert_eq!(k, 0.0);
        let k = epsilon_bound_constant(&|_, t| t * t, &|_, t: f64| t.powf(1.5), 0.1, &[], &grid).unwrap();
        let dense = (0..=1_000_000)
            .map(|i| {
                let t = 200.0 * i as f64 / 1e6;
                t.powf(1.5) - 0.1 * t * t
            })
            .fold(0.0, f64::max);
        assert!((k - dense).abs() < 1e-4 * dense, "{k} vs {dense}");
    }

    #[test]
    fn epsilon_bound_flags_divergence() {
        let grid = geometric_grid(1.0, 1e6, 16);
        let r = epsilon_bound_constant(&|_, t| t, &|_, t| t * t, 1.0, &[], &grid);
        assert!(matches!(r, Err(Error::DivergenceSuspected { .. })));
    }
}
