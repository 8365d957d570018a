use super::energy::{energy, gateaux_gradient};
use super::minimize::{minimize, SolveReport, SolverOptions};
use super::problem::{Mode, ProblemSpec};
use super::validate::{validate, ValidationOptions};
use crate::error::Result;
use crate::spaces::{random_field, trial_rng, DiscreteField, RandomSmoothField, DEFAULT_MODES};
use crate::verdict::Verdict;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_TEST_FIELDS: usize = 16;

/// Seeded smooth test fields with unit sup norm: even slots are monomials
/// `Π ξ_i^{k_i}` (ξ rescaled to `[0,1]`, `k_i ≤ 3`), odd slots cosine series.
pub fn test_fields(u: &DiscreteField, count: usize, seed: u64) -> Vec<DiscreteField> {
    let grid = u.grid();
    let intervals = grid.intervals().to_vec();
    (0..count)
        .filter_map(|j| {
            let mut rng = trial_rng(seed, j as u64);
            let v = if j % 2 == 0 {
                let k: Vec<i32> = (0..grid.dim()).map(|_| rng.gen_range(0..=3)).collect();
                let iv = intervals.clone();
                DiscreteField::from_fn(grid.clone(), move |x| {
                    x.iter()
                        .zip(&iv)
                        .zip(&k)
                        .map(|((v, (a, b)), &k)| ((v - a) / (b - a)).powi(k))
                        .product()
                })
            } else {
                RandomSmoothField::sample(&mut rng, &intervals, DEFAULT_MODES).on_grid(grid)
            };
            let m = v.sup_norm();
            (m > 0.0).then(|| v.scaled(1.0 / m))
        })
        .collect()
}

/// `max_v |⟨I'(u), v⟩|` over [`test_fields`].
pub fn weak_residual(spec: &ProblemSpec, u: &DiscreteField, test_count: usize, seed: u64) -> Result<f64> {
    let g = gateaux_gradient(spec, u)?;
    Ok(test_fields(u, test_count, seed)
        .iter()
        .map(|v| g.iter().zip(v.values()).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    /// Largest pairwise sup-norm distance between minimizers.
    pub max_distance: f64,
    /// `max_distance / (1 + max ‖u‖_∞)`.
    pub relative_distance: f64,
    pub sup_norm: f64,
    pub energies: Vec<f64>,
    pub converged: Vec<bool>,
    /// Combined verdict of (a3), (uneq1), (uneq2), (uneq3).
    pub monotonicity: Verdict,
}

/// Random start with sup norm `scale`.
pub fn random_start(spec: &ProblemSpec, seed: u64, trial: u64, scale: f64) -> DiscreteField {
    random_field(&spec.grid, seed, trial, scale)
}

/// Minimizes from `starts` seeded random fields in parallel and compares the results.
pub fn uniqueness_probe(
    spec: &ProblemSpec,
    starts: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<UniquenessReport> {
    let runs = (0..starts)
        .into_par_iter()
        .map(|k| minimize(spec, &random_start(spec, seed, k as u64, 2.0), opts))
        .collect::<Result<Vec<_>>>()?;
    let mut max_distance = 0.0f64;
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[..i] {
            let d = a
                .minimizer
                .values()
                .iter()
                .zip(b.minimizer.values())
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            max_distance = max_distance.max(d);
        }
    }
    let sup_norm = runs.iter().map(|r| r.minimizer.sup_norm()).fold(0.0, f64::max);
    let monotonicity = validate(
        spec,
        &ValidationOptions {
            seed,
            ..ValidationOptions::default()
        },
    )
    .monotonicity();
    Ok(UniquenessReport {
        max_distance,
        relative_distance: max_distance / (1.0 + sup_norm),
        sup_norm,
        energies: runs.iter().map(|r| r.energy()).collect(),
        converged: runs.iter().map(|r| r.converged()).collect(),
        monotonicity,
    })
}

/// Records the sign violation and, when `f ≥ 0` and `φ'_max` is monotone on
/// the samples, reruns from `max(u, 0)`.
pub fn nonnegativity_enforce(spec: &ProblemSpec, mut report: SolveReport, opts: &SolverOptions) -> Result<SolveReport> {
    report.nonnegativity_violation = report.minimizer.values().iter().fold(0.0f64, |m, &v| m.max(-v));
    if spec.mode == Mode::Manufactured {
        report.nonnegativity_checked = false;
        return Ok(report);
    }
    report.nonnegativity_checked = true;
    if report.nonnegativity_violation > 1e-8 {
        let v = validate(spec, &ValidationOptions::default());
        let f_sign = v.get("(f-sign)").is_some_and(|c| c.verdict.holds());
        let mono = v.get("(uneq3)").is_some_and(|c| c.verdict.holds());
        if f_sign && mono {
            let clamped = report.minimizer.map(|x| x.max(0.0));
            let mut rerun = minimize(spec, &clamped, opts)?;
            rerun.nonnegativity_violation = rerun.minimizer.values().iter().fold(0.0f64, |m, &v| m.max(-v));
            report.clamped_rerun = Some(Box::new(rerun));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoercivityReport {
    pub scales: Vec<f64>,
    /// `energies[k][j]`: direction `k` at `scales[j]`.
    pub energies: Vec<Vec<f64>>,
    /// Directions along which the energy is not strictly increasing.
    pub failures: usize,
}

/// Energy along `t·w` for seeded unit-sup directions `w`.
pub fn coercivity_probe(spec: &ProblemSpec, directions: usize, seed: u64, scales: &[f64]) -> Result<CoercivityReport> {
    let mut energies = Vec::with_capacity(directions);
    let mut failures = 0;
    for k in 0..directions {
        let w = random_start(spec, seed, k as u64, 1.0);
        let e = scales
            .iter()
            .map(|&t| energy(spec, &w.scaled(t)))
            .collect::<Result<Vec<_>>>()?;
        if !e.windows(2).all(|p| p[1] > p[0]) {
            failures += 1;
        }
        energies.push(e);
    }
    Ok(CoercivityReport {
        scales: scales.to_vec(),
        energies,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::mo::{AnisotropicFamily, MoFunction, ScalarField};
    use crate::solver::problem::DataTerm;
    use crate::spaces::Grid;
    use std::sync::Arc;

    fn spec(p: f64, n: usize) -> ProblemSpec {
        let fam = AnisotropicFamily::isotropic(MoFunction::power(ScalarField::constant(p)), 2).unwrap();
        ProblemSpec::new(Arc::new(Grid::unit(2, n).unwrap()), fam).unwrap()
    }

    #[test]
    fn test_fields_are_unit_and_seeded() {
        let u = DiscreteField::zeros(Arc::new(Grid::unit(2, 9).unwrap()));
        let a = test_fields(&u, 6, 4);
        let b = test_fields(&u, 6, 4);
        assert_eq!(a, b);
        assert!(a.iter().all(|v| (v.sup_norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn zero_problem_has_zero_residual() {
        let s = spec(2.0, 9);
        let u = DiscreteField::zeros(s.grid.clone());
        assert_eq!(weak_residual(&s, &u, 8, 0).unwrap(), 0.0);
    }

    #[test]
    fn residual_detects_perturbation() {
        let s = spec(2.0, 17).with_source(DataTerm::from_expr(Expr::parse("1 + x1").unwrap(), None));
        let r = minimize(&s, &DiscreteField::zeros(s.grid.clone()), &SolverOptions::default()).unwrap();
        assert!(r.weak_residual <= 10.0 * 1e-6, "{}", r.weak_residual);
        let w = random_start(&s, 1, 0, 1.0);
        let moved = r.minimizer.add(&w.scaled(0.1)).unwrap();
        assert!(weak_residual(&s, &moved, 16, 0).unwrap() > 1e-3);
    }

    #[test]
    fn quadratic_minimizer_is_unique() {
        let s = spec(2.0, 13).with_source(DataTerm::from_expr(Expr::parse("1 + x1*x2").unwrap(), None));
        let opts = SolverOptions {
            grad_tol: 1e-9,
            ..SolverOptions::default()
        };
        let r = uniqueness_probe(&s, 5, 3, &opts).unwrap();
        assert!(r.max_distance <= 1e-6, "{}", r.max_distance);
        let zero = spec(2.0, 9);
        let r = uniqueness_probe(&zero, 3, 3, &SolverOptions::default()).unwrap();
        assert!(r.sup_norm < 1e-5);
    }

    #[test]
    fn double_well_gives_distinct_minimizers() {
        // b u² - (2s² - s⁴/4) has wells at ±√2
        let s = spec(2.0, 9).with_source(DataTerm::from_expr(Expr::parse("4*s - s^3").unwrap(), None));
        let r = uniqueness_probe(&s, 6, 1, &SolverOptions::default()).unwrap();
        assert!(r.max_distance > 2.0, "{}", r.max_distance);
        assert_eq!(r.monotonicity, Verdict::Fails);
    }

    #[test]
    fn positive_source_gives_nonnegative_solution() {
        let s = spec(2.5, 9).with_source(DataTerm::from_expr(Expr::parse("max(1 - 0.1*s, 0)").unwrap(), None));
        let r = minimize(&s, &DiscreteField::zeros(s.grid.clone()), &SolverOptions::default()).unwrap();
        let r = nonnegativity_enforce(&s, r, &SolverOptions::default()).unwrap();
        assert!(r.nonnegativity_checked);
        assert!(r.nonnegativity_violation <= 1e-8);
        assert!(r.clamped_rerun.is_none());
    }

    #[test]
    fn negative_start_is_restarted_when_enforced() {
        let s = spec(2.0, 9).with_source(DataTerm::source(ScalarField::constant(1.0)));
        let opts = SolverOptions {
            max_iters: 0,
            ..SolverOptions::default()
        };
        let r = minimize(&s, &DiscreteField::constant(s.grid.clone(), -5.0), &opts).unwrap();
        let r = nonnegativity_enforce(&s, r, &SolverOptions::default()).unwrap();
        assert!(r.nonnegativity_violation > 1e-8);
        let rerun = r.clamped_rerun.as_ref().unwrap();
        assert!(rerun.converged() && rerun.nonnegativity_violation == 0.0);
        let m = s.with_mode(Mode::Manufactured);
        let r = minimize(&m, &DiscreteField::constant(m.grid.clone(), -5.0), &opts).unwrap();
        let r = nonnegativity_enforce(&m, r, &opts).unwrap();
        assert!(!r.nonnegativity_checked && r.clamped_rerun.is_none());
    }

    #[test]
    fn energy_grows_along_rays() {
        let s = spec(2.5, 17).with_source(DataTerm::from_expr(Expr::parse("max(1 - 0.1*s, 0)").unwrap(), None));
        let r = coercivity_probe(&s, 8, 2, &[1.0, 10.0, 100.0]).unwrap();
        assert_eq!(r.failures, 0, "{:?}", r.energies);
    }
}
