use super::{geometric_grid, FamilyTag, Kernel, MoFunction, Smoothness};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

/// `φ⃗ = (φ₁, …, φ_N)` with pointwise `φ_min` and `φ_max`.
#[derive(Debug, Clone)]
pub struct AnisotropicFamily {
    components: Vec<MoFunction>,
    phi_min: MoFunction,
    phi_max: MoFunction,
}

fn argext(components: &[MoFunction], x: &[f64], t: f64, want_max: bool) -> usize {
    let mut best = 0;
    let mut best_v = components[0].evaluate(x, t);
    for (i, c) in components.iter().enumerate().skip(1) {
        let v = c.evaluate(x, t);
        let better = if want_max { v > best_v } else { v < best_v };
        if better {
            best = i;
            best_v = v;
        }
    }
    best
}

fn extremal(components: &[MoFunction], want_max: bool) -> MoFunction {
    let comps: Arc<[MoFunction]> = components.into();
    let c1 = comps.clone();
    let value: Kernel = Arc::new(move |x, t| c1[argext(&c1, x, t, want_max)].evaluate(x, t));
    let c2 = comps.clone();
    let derivative: Kernel = Arc::new(move |x, t| c2[argext(&c2, x, t, want_max)].derivative(x, t));
    let inverse: Option<Kernel> = if comps.iter().all(MoFunction::has_analytic_inverse) {
        let c3 = comps.clone();
        // the smallest function has the largest inverse
        Some(Arc::new(move |x, s| {
            let it = c3.iter().map(|c| c.inverse(x, s));
            if want_max {
                it.fold(f64::INFINITY, f64::min)
            } else {
                it.fold(0.0, f64::max)
            }
        }))
    } else {
        None
    };
    let all_same = comps.iter().all(|c| c.same_as(&comps[0]));
    let all = |f: fn(&Smoothness) -> bool| comps.iter().all(|c| f(&c.smoothness()));
    let smoothness = Smoothness {
        derivable_in_t: all(|s| s.derivable_in_t) && all_same,
        lipschitz_in_x: all(|s| s.lipschitz_in_x),
        convex: all(|s| s.convex) && (want_max || all_same),
        x_independent: all(|s| s.x_independent),
    };
    let family = if all_same { comps[0].family() } else { FamilyTag::Custom };
    let label = format!(
        "{}({})",
        if want_max { "max" } else { "min" },
        comps
            .iter()
            .map(|c| c.label().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    MoFunction::from_parts(&label, value, Some(derivative), inverse, family, smoothness)
}

impl AnisotropicFamily {
    pub fn new(components: Vec<MoFunction>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::InvalidInput(
                "an anisotropic family needs at least two components".into(),
            ));
        }
        let phi_min = extremal(&components, false);
        let phi_max = extremal(&components, true);
        Ok(AnisotropicFamily {
            components,
            phi_min,
            phi_max,
        })
    }

    /// `N` copies of one function.
    pub fn isotropic(phi: MoFunction, n: usize) -> Result<Self> {
        AnisotropicFamily::new(vec![phi; n])
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[MoFunction] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &MoFunction {
        &self.components[i]
    }

    pub fn phi_min(&self) -> &MoFunction {
        &self.phi_min
    }

    pub fn phi_max(&self) -> &MoFunction {
        &self.phi_max
    }

    /// Index attaining `φ_min(x,t)`; lowest index wins ties.
    pub fn argmin(&self, x: &[f64], t: f64) -> usize {
        argext(&self.components, x, t, false)
    }

    /// Index attaining `φ_max(x,t)`; lowest index wins ties.
    pub fn argmax(&self, x: &[f64], t: f64) -> usize {
        argext(&self.components, x, t, true)
    }

    /// `φ_min**`, the convex envelope of the pointwise minimum.
    ///
    /// When `φ_min` is not declared convex the envelope is the lower convex
    /// hull of `φ_min(x,·)` sampled on [`HULL_RANGE`], built once per `x`;
    /// outside that range `φ_min` itself is used.
    pub fn phi_min_envelope(&self) -> MoFunction {
        if self.phi_min.smoothness().convex {
            return self.phi_min.clone();
        }
        hull_envelope(&self.phi_min)
    }
}

/// `(lo, hi, points per decade)` of the hull sample grid.
pub const HULL_RANGE: (f64, f64, usize) = (1e-6, 1e6, 100);

/// Hull vertices `(t, φ(t), sample index)`.
type Hull = Arc<Vec<(f64, f64, usize)>>;

fn lower_hull(phi: &MoFunction, x: &[f64]) -> Vec<(f64, f64, usize)> {
    let mut hull: Vec<(f64, f64, usize)> = Vec::new();
    let pts = std::iter::once(0.0).chain(geometric_grid(HULL_RANGE.0, HULL_RANGE.1, HULL_RANGE.2));
    for (i, t) in pts.enumerate() {
        let p = (t, phi.evaluate(x, t), i);
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or above the chord a-p
            if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

fn hull_envelope(phi: &MoFunction) -> MoFunction {
    let cache: Arc<RwLock<HashMap<Vec<u64>, Hull>>> = Arc::default();
    let base = phi.clone();
    let lookup = move |x: &[f64]| -> Hull {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(h) = cache.read().expect("hull cache").get(&key) {
            return h.clone();
        }
        let h = Arc::new(lower_hull(&base, x));
        cache.write().expect("hull cache").insert(key, h.clone());
        h
    };
    let lookup = Arc::new(lookup);
    // hull segment bridging skipped samples around t; None where φ is its own envelope
    fn segment(h: &[(f64, f64, usize)], t: f64) -> Option<usize> {
        if t > h[h.len() - 1].0 || t < HULL_RANGE.0 {
            return None;
        }
        let k = h.partition_point(|p| p.0 <= t).clamp(1, h.len() - 1) - 1;
        (h[k + 1].2 > h[k].2 + 1).then_some(k)
    }
    let (l1, p1) = (lookup.clone(), phi.clone());
    let value: Kernel = Arc::new(move |x, t| {
        let h = l1(x);
        match segment(&h, t) {
            Some(k) => {
                let ((a, fa, _), (b, fb, _)) = (h[k], h[k + 1]);
                fa + (fb - fa) * (t - a) / (b - a)
            }
            None => p1.evaluate(x, t),
        }
    });
    let (l2, p2) = (lookup.clone(), phi.clone());
    let derivative: Kernel = Arc::new(move |x, t| {
        let h = l2(x);
        match segment(&h, t) {
            Some(k) => (h[k + 1].1 - h[k].1) / (h[k + 1].0 - h[k].0),
            None => p2.derivative(x, t),
        }
    });
    // hull values increase with t, so the segment holding level s is found by value
    let (l3, p3) = (lookup, phi.clone());
    let inverse: Kernel = Arc::new(move |x, s| {
        let h = l3(x);
        let k = h.partition_point(|p| p.1 <= s);
        if k == 0 || k == h.len() || h[k].2 == h[k - 1].2 + 1 {
            return p3.inverse(x, s);
        }
        let ((a, fa, _), (b, fb, _)) = (h[k - 1], h[k]);
        a + (b - a) * (s - fa) / (fb - fa)
    });
    let smooth = phi.smoothness();
    MoFunction::from_parts(
        &format!("({})**", phi.label()),
        value,
        Some(derivative),
        Some(inverse),
        FamilyTag::Custom,
        Smoothness {
            derivable_in_t: false,
            lipschitz_in_x: smooth.lipschitz_in_x,
            convex: true,
            x_independent: smooth.x_independent,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mo::{probe_n_function, ScalarField};
    use proptest::prelude::*;

    fn family() -> AnisotropicFamily {
        AnisotropicFamily::new(vec![
            MoFunction::power(ScalarField::from_fn(|x| 1.6 + 0.3 * x[0])),
            MoFunction::power(ScalarField::constant(2.2)),
            MoFunction::power_log(ScalarField::constant(1.5)),
        ])
        .unwrap()
    }

    #[test]
    fn hull_envelope_matches_biconjugate() {
        let fam = AnisotropicFamily::new(vec![
            MoFunction::power(ScalarField::constant(1.5)),
            MoFunction::power(ScalarField::constant(3.0)).scaled(0.2),
        ])
        .unwrap();
        assert!(!fam.phi_min().smoothness().convex);
        let env = fam.phi_min_envelope();
        let x = [0.0, 0.0];
        for t in [1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0] {
            let exact = crate::mo::biconjugate(fam.phi_min(), &x, t).unwrap();
            let v = env.evaluate(&x, t);
            assert!(v <= fam.phi_min().evaluate(&x, t) * (1.0 + 1e-12));
            assert!((v - exact).abs() <= 1e-3 * exact, "{t}: {v} vs {exact}");
            let back = env.inverse(&x, v);
            assert!((back - t).abs() <= 1e-9 * t, "{t}: inverse {back}");
        }
    }

    #[test]
    fn needs_two_components() {
        assert!(AnisotropicFamily::new(vec![MoFunction::power(ScalarField::constant(2.0))]).is_err());
    }

    #[test]
    fn ties_pick_lowest_index() {
        let p = MoFunction::power(ScalarField::constant(2.0));
        let q = MoFunction::power(ScalarField::constant(3.0));
        let fam = AnisotropicFamily::new(vec![q.clone(), p.clone(), p.clone()]).unwrap();
        assert_eq!(fam.argmin(&[0.0], 0.5), 0);
        assert_eq!(fam.argmin(&[0.0], 2.0), 1);
        assert_eq!(fam.argmax(&[0.0], 0.5), 1);
        let permuted = AnisotropicFamily::new(vec![p.clone(), q, p]).unwrap();
        assert_eq!(permuted.argmin(&[0.0], 2.0), 0);
        assert_eq!(permuted.argmax(&[0.0], 0.5), 0);
        assert_eq!(
            permuted.phi_min().evaluate(&[0.0], 2.0),
            fam.phi_min().evaluate(&[0.0], 2.0)
        );
        // all three coincide at t = 1
        assert_eq!(fam.argmin(&[0.0], 1.0), 0);
        assert_eq!(fam.argmax(&[0.0], 1.0), 0);
    }

    #[test]
    fn phi_max_is_convex_on_slices() {
        let fam = family();
        let r = probe_n_function(fam.phi_max(), &[vec![0.0, 0.0], vec![1.0, 0.5]], 1e3);
        assert_eq!(r.verdict, crate::verdict::Verdict::Holds, "{r:?}");
    }

    #[test]
    fn min_inverse_is_max_of_inverses() {
        let fam = AnisotropicFamily::new(vec![
            MoFunction::power(ScalarField::constant(2.0)),
            MoFunction::power(ScalarField::constant(3.0)),
        ])
        .unwrap();
        for &s in &[0.1, 1.0, 8.0] {
            let t = fam.phi_min().inverse(&[0.0], s);
            assert!((fam.phi_min().evaluate(&[0.0], t) - s).abs() < 1e-12 * (1.0 + s));
            let t = fam.phi_max().inverse(&[0.0], s);
            assert!((fam.phi_max().evaluate(&[0.0], t) - s).abs() < 1e-12 * (1.0 + s));
        }
    }

    proptest! {
        #[test]
        fn min_and_max_sandwich_components(x0 in 0.0f64..1.0, x1 in 0.0f64..1.0, t in 0.0f64..100.0) {
            let fam = family();
            let x = [x0, x1];
            let lo = fam.phi_min().evaluate(&x, t);
            let hi = fam.phi_max().evaluate(&x, t);
            for c in fam.components() {
                let v = c.evaluate(&x, t);
                prop_assert!(lo <= v && v <= hi);
            }
        }
    }
}
