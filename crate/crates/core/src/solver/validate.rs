use super::problem::{Mode, ProblemSpec};
use crate::error::Result;
use crate::mo::{delta2_check, grows_essentially_slower, MoFunction};
use crate::sobolev::{build_trace_function, check_integrability, SobolevConjugate};
use crate::verdict::{Verdict, Witness};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt::Write as _;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationOptions {
    /// Random `s` values on top of the fixed ones.
    pub samples: usize,
    /// Interior (and boundary) nodes sampled.
    pub points: usize,
    pub seed: u64,
    /// Horizon of the growth probes.
    pub t_max: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            samples: 32,
            points: 6,
            seed: 0,
            t_max: 1e6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub id: String,
    pub verdict: Verdict,
    /// Hard conditions gate the solver; the rest are informational.
    pub hard: bool,
    pub detail: String,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
}

impl ValidationReport {
    pub fn get(&self, id: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn hard_failures(&self) -> Vec<&ConditionCheck> {
        self.checks.iter().filter(|c| c.hard && c.verdict.fails()).collect()
    }

    pub fn passed(&self) -> bool {
        self.hard_failures().is_empty()
    }

    /// Combined verdict of the monotonicity premises of uniqueness.
    pub fn monotonicity(&self) -> Verdict {
        ["(a3)", "(uneq1)", "(uneq2)", "(uneq3)"]
            .iter()
            .map(|id| self.get(id).map_or(Verdict::Inconclusive, |c| c.verdict))
            .fold(Verdict::Holds, Verdict::and)
    }

    /// `condition,verdict,hard,x,args,value,detail` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,verdict,hard,x,args,value,detail\n");
        for c in &self.checks {
            let (x, args, value) = match &c.witness {
                Some(w) => (
                    w.x.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" "),
                    w.args
                        .iter()
                        .map(|(k, v)| format!("{k}={v:?}"))
                        .collect::<Vec<_>>()
                        .join(" "),
                    format!("{:?}", w.value),
                ),
                None => (String::new(), String::new(), String::new()),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},\"{}\"",
                c.id,
                c.verdict,
                c.hard,
                x,
                args,
                value,
                c.detail.replace('"', "'")
            );
        }
        out
    }

    /// Fixed-width table for terminals.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let mark = match (c.verdict, c.hard) {
                (Verdict::Holds, _) => "PASS",
                (Verdict::Fails, true) => "FAIL",
                (Verdict::Fails, false) => "WARN",
                (Verdict::Inconclusive, _) => "----",
            };
            let _ = write!(out, "{mark}  {:<26} {:<13}", c.id, c.verdict.to_string());
            if let Some(w) = &c.witness {
                let args = w
                    .args
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                let _ = write!(out, " at x={:?} {args} (value {:e})", w.x, w.value);
            }
            if !c.detail.is_empty() {
                let _ = write!(out, "  [{}]", c.detail);
            }
            out.push('\n');
        }
        out
    }
}

/// `s` values checked first, in this order, before the random ones.
const FIXED_S: [f64; 9] = [0.5, 1.0, 2.0, 0.1, 0.25, 5.0, 10.0, 30.0, 100.0];

struct Cloud {
    interior: Vec<Vec<f64>>,
    boundary: Vec<Vec<f64>>,
    /// Nonnegative magnitudes.
    mags: Vec<f64>,
    /// Signed values, fixed ones first.
    signed: Vec<f64>,
}

impl Cloud {
    fn new(spec: &ProblemSpec, opts: &ValidationOptions) -> Cloud {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let grid = &spec.grid;
        let k = opts.points.clamp(1, grid.len());
        let mut idx = sample(&mut rng, grid.len(), k).into_vec();
        idx.sort_unstable();
        let interior = idx.iter().map(|&i| grid.point(i).to_vec()).collect();
        let bnodes = grid.boundary();
        let kb = opts.points.clamp(1, bnodes.len());
        let mut bidx = sample(&mut rng, bnodes.len(), kb).into_vec();
        bidx.sort_unstable();
        let boundary = bidx.iter().map(|&i| grid.point(bnodes[i].index).to_vec()).collect();
        let mut mags: Vec<f64> = FIXED_S.to_vec();
        for _ in 0..opts.samples {
            mags.push(10f64.powf(rng.gen_range(-2.0..2.0)));
        }
        let mut signed = mags.clone();
        signed.extend(mags.iter().map(|v| -v));
        Cloud {
            interior,
            boundary,
            mags,
            signed,
        }
    }
}

fn check(
    id: &str,
    hard: bool,
    verdict: Verdict,
    detail: impl Into<String>,
    witness: Option<Witness>,
) -> ConditionCheck {
    ConditionCheck {
        id: id.to_string(),
        verdict,
        hard,
        detail: detail.into(),
        witness,
    }
}

fn missing(id: &str, what: &str) -> ConditionCheck {
    check(id, true, Verdict::Inconclusive, format!("{what} not supplied"), None)
}

/// Pointwise inequality `lhs ≤ rhs` over `points × values`; first violation wins.
fn pointwise(
    id: &str,
    hard: bool,
    points: &[Vec<f64>],
    values: &[f64],
    extra: &[(&str, f64)],
    mut test: impl FnMut(&[f64], f64) -> (f64, f64),
) -> ConditionCheck {
    for x in points {
        for &s in values {
            let (lhs, rhs) = test(x, s);
            if lhs.is_nan() || rhs.is_nan() || lhs > rhs + 1e-9 * (1.0 + rhs.abs()) {
                let mut args = vec![("s", s)];
                args.extend_from_slice(extra);
                return check(
                    id,
                    hard,
                    Verdict::Fails,
                    format!("lhs {lhs:e} > rhs {rhs:e}"),
                    Some(Witness::new(x, &args, lhs - rhs)),
                );
            }
        }
    }
    check(id, hard, Verdict::Holds, "", None)
}

/// Sign of `(k(s) - k(t))(s - t)` over all ordered pairs; `want` is +1 for
/// strictly increasing and -1 for strictly decreasing.
fn monotone(
    id: &str,
    hard: bool,
    points: &[Vec<f64>],
    values: &[f64],
    want: f64,
    k: impl Fn(&[f64], f64) -> f64,
) -> ConditionCheck {
    let mut flat: Option<Witness> = None;
    for x in points {
        for (i, &s) in values.iter().enumerate() {
            for &t in &values[..i] {
                if s == t {
                    continue;
                }
                let v = (k(x, s) - k(x, t)) * (s - t) * want;
                if v.is_nan() || v < 0.0 {
                    let w = Witness::new(x, &[("s", s), ("t", t)], v * want);
                    return check(id, hard, Verdict::Fails, "", Some(w));
                }
                if v == 0.0 && flat.is_none() {
                    flat = Some(Witness::new(x, &[("s", s), ("t", t)], 0.0));
                }
            }
        }
    }
    match flat {
        Some(w) => check(id, hard, Verdict::Inconclusive, "monotone but not strictly", Some(w)),
        None => check(id, hard, Verdict::Holds, "", None),
    }
}

fn growth(id: &str, psi: &MoFunction, phi: &MoFunction, xs: &[Vec<f64>], t_max: f64) -> ConditionCheck {
    match grows_essentially_slower(psi, phi, &[0.1, 1.0, 10.0], t_max, xs) {
        Ok(r) => check(
            id,
            true,
            r.verdict,
            format!("final ratio {:e}", r.final_ratio),
            r.witness,
        ),
        Err(e) => check(id, true, Verdict::Inconclusive, e.to_string(), None),
    }
}

/// Checks the structure and growth conditions on a seeded sample cloud.
pub fn validate(spec: &ProblemSpec, opts: &ValidationOptions) -> ValidationReport {
    let cloud = Cloud::new(spec, opts);
    let fam = &spec.family;
    let cmp = &spec.comparisons;
    let xs = &cloud.interior;
    let mut checks = Vec::new();

    // (b)
    let (jmin, bmin) = spec
        .b
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |a, (j, v)| if v < a.1 { (j, v) } else { a });
    checks.push(if spec.b0 > 0.0 && bmin >= spec.b0 {
        check("(b)", true, Verdict::Holds, format!("min b = {bmin}"), None)
    } else {
        let detail = if spec.b0 > 0.0 {
            format!("b0 = {}", spec.b0)
        } else {
            "b0 must be positive".into()
        };
        check(
            "(b)",
            true,
            Verdict::Fails,
            detail,
            Some(Witness::new(spec.grid.point(jmin), &[], bmin)),
        )
    });

    // (a1)
    let mut a1 = Vec::new();
    for (i, flux) in spec.fluxes.iter().enumerate() {
        let Some(Some(p)) = cmp.p.get(i) else {
            a1.clear();
            break;
        };
        let c = cmp.c.get(i).copied().unwrap_or(1.0);
        let d = cmp.d.get(i).cloned();
        let star = fam.component(i).conjugate_function();
        let r = pointwise("(a1)", true, xs, &cloud.signed, &[("i", (i + 1) as f64)], |x, s| {
            let di = d.as_ref().map_or(0.0, |d| d.eval(x));
            (flux.eval(x, s).abs(), c * (di + star.inverse(x, p.evaluate(x, s))))
        });
        a1.push(r);
    }
    checks.push(if a1.len() == spec.fluxes.len() {
        a1.into_iter()
            .find(|r| r.verdict.fails())
            .unwrap_or_else(|| check("(a1)", true, Verdict::Holds, "", None))
    } else {
        missing("(a1)", "P_i")
    });

    // (a2)
    let mut left = check("(a2-left)", true, Verdict::Holds, "", None);
    let mut right = check("(a2-right)", false, Verdict::Holds, "warning only", None);
    for (i, flux) in spec.fluxes.iter().enumerate() {
        let phi = fam.component(i);
        let id = [("i", (i + 1) as f64)];
        if !left.verdict.fails() {
            left = pointwise("(a2-left)", true, xs, &cloud.signed, &id, |x, s| {
                (phi.evaluate(x, s), flux.eval(x, s) * s)
            });
        }
        if !right.verdict.fails() {
            right = pointwise("(a2-right)", false, xs, &cloud.signed, &id, |x, s| {
                (flux.eval(x, s) * s, flux.primitive(x, s))
            });
            right.detail = format!("warning only; {}", right.detail)
                .trim_end_matches("; ")
                .to_string();
        }
    }
    checks.push(left);
    checks.push(right);

    // (a3)
    let mut a3 = check("(a3)", true, Verdict::Holds, "", None);
    for flux in &spec.fluxes {
        let r = monotone("(a3)", true, xs, &cloud.signed, 1.0, |x, s| flux.eval(x, s));
        if r.verdict != Verdict::Holds {
            a3 = r;
            if a3.verdict.fails() {
                break;
            }
        }
    }
    checks.push(a3);

    // a_i(x,0) = 0
    let origin = spec
        .fluxes
        .iter()
        .enumerate()
        .flat_map(|(i, f)| xs.iter().map(move |x| (i, x, f.eval(x, 0.0))))
        .find(|(_, _, v)| *v != 0.0);
    checks.push(match origin {
        None => check("(flux-origin)", false, Verdict::Holds, "", None),
        Some((i, x, v)) => check(
            "(flux-origin)",
            false,
            Verdict::Fails,
            "",
            Some(Witness::new(x, &[("i", (i + 1) as f64)], v)),
        ),
    });

    // (phi.max1)
    let phi_max = fam.phi_max();
    checks.push(match &cmp.r {
        Some(r) => {
            let star = phi_max.conjugate_function();
            pointwise("(phi.max1)", true, xs, &cloud.signed, &[], |x, s| {
                let d = cmp.big_d.as_ref().map_or(0.0, |d| d.eval(x));
                (
                    phi_max.signed_derivative(x, s).abs(),
                    d + star.inverse(x, r.evaluate(x, s)),
                )
            })
        }
        None => missing("(phi.max1)", "R"),
    });

    // (F), (G)
    checks.push(match (&cmp.m, cmp.k1) {
        (Some(m), Some(k1)) => pointwise("(F)", true, xs, &cloud.mags, &[], |x, s| {
            (spec.f.eval(x, s).abs(), k1 * m.derivative(x, s))
        }),
        _ => missing("(F)", "M and k1"),
    });
    checks.push(match (&cmp.h, cmp.k2) {
        (Some(h), Some(k2)) => pointwise("(G)", true, &cloud.boundary, &cloud.mags, &[], |x, s| {
            (spec.g.eval(x, s).abs(), k2 * h.derivative(x, s))
        }),
        _ => missing("(G)", "H and k2"),
    });

    // f ≥ 0 on s ≥ 0
    checks.push(match spec.mode {
        Mode::Standard => pointwise("(f-sign)", true, xs, &cloud.mags, &[], |x, s| (-spec.f.eval(x, s), 0.0)),
        Mode::Manufactured => check(
            "(f-sign)",
            false,
            Verdict::Inconclusive,
            "skipped in manufactured mode",
            None,
        ),
    });

    // Δ₂ for M and H
    for (name, func) in [("M", &cmp.m), ("H", &cmp.h)] {
        let id = format!("(Delta2) {name}");
        checks.push(match func {
            Some(f) => match delta2_check(f, xs, opts.t_max) {
                Ok(r) => check(&id, true, r.verdict, format!("k = {:e}", r.k_hat), r.witness),
                Err(e) => check(&id, true, Verdict::Inconclusive, e.to_string(), None),
            },
            None => missing(&id, name),
        });
    }

    // ≪ relations
    for (i, p) in cmp.p.iter().enumerate() {
        if let Some(p) = p {
            checks.push(growth(
                &format!("(grows) P{0} << phi{0}", i + 1),
                p,
                fam.component(i),
                xs,
                opts.t_max,
            ));
        }
    }
    if let Some(r) = &cmp.r {
        checks.push(growth("(grows) R << phi_max", r, phi_max, xs, opts.t_max));
    }
    let envelope = fam.phi_min_envelope();
    if let Some(m) = &cmp.m {
        checks.push(growth("(grows) M << phi_min**", m, &envelope, xs, opts.t_max));
    }
    if let Some(h) = &cmp.h {
        checks.push(growth("(grows) H << phi_min**", h, &envelope, xs, opts.t_max));
        checks.push(trace_growth(spec, h, &envelope, &cloud.boundary, opts.t_max));
    }

    // uniqueness premises
    let f_detail = if spec.f.is_s_dependent() {
        ""
    } else {
        "f independent of s"
    };
    let mut u1 = monotone("(uneq1)", false, xs, &cloud.signed, -1.0, |x, s| spec.f.eval(x, s));
    if u1.detail.is_empty() {
        u1.detail = f_detail.into();
    }
    checks.push(u1);
    checks.push(monotone(
        "(uneq2)",
        false,
        &cloud.boundary,
        &cloud.signed,
        -1.0,
        |x, s| spec.g.eval(x, s),
    ));
    checks.push(monotone("(uneq3)", false, xs, &cloud.signed, 1.0, |x, s| {
        phi_max.signed_derivative(x, s)
    }));

    ValidationReport { checks }
}

fn trace_growth(
    spec: &ProblemSpec,
    h: &MoFunction,
    envelope: &MoFunction,
    xs: &[Vec<f64>],
    t_max: f64,
) -> ConditionCheck {
    let id = "(grows) H << psi_min";
    let n = spec.dim();
    match check_integrability(envelope, n, xs) {
        Ok(r) if r.verdict.holds() => {}
        Ok(r) => {
            return check(
                id,
                true,
                Verdict::Inconclusive,
                format!("Sobolev conjugate unavailable: integrability {}", r.verdict),
                None,
            )
        }
        Err(e) => return check(id, true, Verdict::Inconclusive, e.to_string(), None),
    }
    let sc: Result<_> = SobolevConjugate::new(envelope.clone(), n).map(Arc::new);
    match sc {
        Ok(sc) => growth(id, h, &build_trace_function(&sc).psi_min, xs, t_max),
        Err(e) => check(id, true, Verdict::Inconclusive, e.to_string(), None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::mo::{AnisotropicFamily, ScalarField};
    use crate::solver::problem::{Comparisons, DataTerm, Flux};
    use crate::spaces::Grid;

    fn spec(p: f64) -> ProblemSpec {
        let fam = AnisotropicFamily::isotropic(MoFunction::power(ScalarField::constant(p)), 2).unwrap();
        ProblemSpec::new(Arc::new(Grid::unit(2, 9).unwrap()), fam).unwrap()
    }

    #[test]
    fn model_problem_passes_hard_conditions() {
        let s = spec(2.5).with_source(DataTerm::from_expr(Expr::parse("max(1 - 0.1*s, 0)").unwrap(), None));
        let r = validate(&s, &ValidationOptions::default());
        assert!(r.passed(), "{}", r.table());
        assert_eq!(r.get("(a2-left)").unwrap().verdict, Verdict::Holds);
        assert_eq!(r.get("(a3)").unwrap().verdict, Verdict::Holds);
        assert_eq!(r.get("(uneq3)").unwrap().verdict, Verdict::Holds);
        // a s = |s|^p > |s|^p / p = A
        let right = r.get("(a2-right)").unwrap();
        assert!(right.verdict.fails() && !right.hard);
        // f is flat beyond s = 10
        assert_eq!(r.get("(uneq1)").unwrap().verdict, Verdict::Inconclusive);
        assert_eq!(r.get("(a1)").unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn non_monotone_flux_fails_a3_at_the_first_pair() {
        let s = spec(2.0)
            .with_fluxes(vec![
                Flux::from_expr(Expr::parse("s - s^3").unwrap(), None),
                Flux::model(&MoFunction::power(ScalarField::constant(2.0))),
            ])
            .unwrap();
        let r = validate(&s, &ValidationOptions::default());
        let a3 = r.get("(a3)").unwrap();
        assert!(a3.verdict.fails());
        let w = a3.witness.as_ref().unwrap();
        assert_eq!(w.args, vec![("s".to_string(), 1.0), ("t".to_string(), 0.5)]);
        // (a(1) - a(0.5))(0.5) = (0 - 0.375)(0.5)
        assert!((w.value + 0.1875).abs() < 1e-15);
        assert!(!r.passed());
    }

    #[test]
    fn cubic_flux_is_monotone() {
        let cubic = Flux::from_expr(Expr::parse("s^3").unwrap(), None);
        let s = spec(2.0).with_fluxes(vec![cubic.clone(), cubic]).unwrap();
        let r = validate(&s, &ValidationOptions::default());
        assert_eq!(r.get("(a3)").unwrap().verdict, Verdict::Holds);
    }

    #[test]
    fn bad_b_and_negative_source() {
        let s = spec(2.0)
            .with_b(&ScalarField::from_fn(|x| 0.5 + x[0]), 1.0)
            .with_source(DataTerm::source(ScalarField::constant(-1.0)));
        let r = validate(&s, &ValidationOptions::default());
        assert!(r.get("(b)").unwrap().verdict.fails());
        assert!(r.get("(f-sign)").unwrap().verdict.fails());
        let m = s.with_mode(Mode::Manufactured);
        let r = validate(&m, &ValidationOptions::default());
        assert_eq!(r.get("(f-sign)").unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn comparison_functions() {
        let phi = MoFunction::power(ScalarField::constant(2.0));
        let m_ok = MoFunction::power(ScalarField::constant(1.5));
        let good = Comparisons {
            p: vec![Some(m_ok.clone()), Some(m_ok.clone())],
            c: vec![2.0, 2.0],
            d: vec![ScalarField::constant(1.0), ScalarField::constant(1.0)],
            r: Some(m_ok.clone()),
            big_d: Some(ScalarField::constant(1.0)),
            m: Some(m_ok.clone()),
            k1: Some(1.0),
            h: None,
            k2: None,
        };
        let s = spec(2.0)
            .with_source(DataTerm::source(ScalarField::constant(1.0)))
            .with_comparisons(good.clone());
        let r = validate(&s, &ValidationOptions::default());
        assert_eq!(
            r.get("(grows) P1 << phi1").unwrap().verdict,
            Verdict::Holds,
            "{}",
            r.table()
        );
        assert_eq!(r.get("(grows) M << phi_min**").unwrap().verdict, Verdict::Holds);
        assert_eq!(r.get("(Delta2) M").unwrap().verdict, Verdict::Holds);

        let bad = Comparisons {
            p: vec![Some(phi.clone()), Some(phi)],
            m: Some(MoFunction::custom("exp", |_, t| t.exp() - t - 1.0)),
            ..good
        };
        let r = validate(&s.with_comparisons(bad), &ValidationOptions::default());
        let g = r.get("(grows) P1 << phi1").unwrap();
        assert!(g.verdict.fails() && g.witness.is_some());
        let d = r.get("(Delta2) M").unwrap();
        assert!(d.verdict.fails() && d.witness.is_some());
        assert!(!r.passed());
        assert!(r.to_csv().lines().any(|l| l.starts_with("(Delta2) M,fails,true,")));
    }

    #[test]
    fn double_well_source_fails_uneq1() {
        let s = spec(2.0).with_source(DataTerm::from_expr(Expr::parse("4*s - s^3").unwrap(), None));
        let r = validate(&s, &ValidationOptions::default());
        assert!(r.get("(uneq1)").unwrap().verdict.fails());
        assert_eq!(r.monotonicity(), Verdict::Fails);
    }
}
