use super::field::DiscreteField;
use super::grid::Grid;
use super::norms::{anisotropic_norm, boundary_norm, luxemburg_norm};
use crate::error::Result;
use crate::mo::AnisotropicFamily;
use crate::sobolev::{SobolevConjugate, TraceFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// Default number of cosine modes per axis.
pub const DEFAULT_MODES: usize = 4;

/// Independent stream `trial` of the master `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Truncated cosine series `Σ_k a_k Π_i cos(π k_i ξ_i + θ_{k,i})` on the box,
/// `ξ` the rescaled coordinates, amplitudes decaying like `(1+|k|)^{-2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSmoothField {
    intervals: Vec<(f64, f64)>,
    terms: Vec<(Vec<f64>, f64, Vec<f64>)>,
}

impl RandomSmoothField {
    pub fn sample(rng: &mut impl Rng, intervals: &[(f64, f64)], modes: usize) -> Self {
        let dim = intervals.len();
        let modes = modes.max(1);
        let count = modes.pow(dim as u32);
        let mut terms = Vec::with_capacity(count);
        for flat in 0..count {
            let mut rem = flat;
            let k: Vec<f64> = (0..dim)
                .map(|_| {
                    let v = rem % modes;
                    rem /= modes;
                    v as f64
                })
                .collect();
            let norm = k.iter().map(|v| v * v).sum::<f64>().sqrt();
            let amp = rng.gen_range(-1.0..1.0) / (1.0 + norm).powi(2);
            let phase = (0..dim).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            terms.push((k, amp, phase));
        }
        RandomSmoothField {
            intervals: intervals.to_vec(),
            terms,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let xi: Vec<f64> = x
            .iter()
            .zip(&self.intervals)
            .map(|(v, (a, b))| (v - a) / (b - a))
            .collect();
        self.terms
            .iter()
            .map(|(k, amp, phase)| {
                amp * k
                    .iter()
                    .zip(&xi)
                    .zip(phase)
                    .map(|((k, x), th)| (std::f64::consts::PI * k * x + th).cos())
                    .product::<f64>()
            })
            .sum()
    }

    pub fn on_grid(&self, grid: &Arc<Grid>) -> DiscreteField {
        DiscreteField::from_fn(grid.clone(), |x| self.eval(x))
    }
}

/// Seeded random smooth field on `grid` rescaled to sup norm `scale`.
pub fn random_field(grid: &Arc<Grid>, seed: u64, trial: u64, scale: f64) -> DiscreteField {
    let mut rng = trial_rng(seed, trial);
    let v = RandomSmoothField::sample(&mut rng, grid.intervals(), DEFAULT_MODES).on_grid(grid);
    let m = v.sup_norm();
    if m > 0.0 {
        v.scaled(scale / m)
    } else {
        v
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentStats {
    pub trials: usize,
    /// Zero fields skipped (ratio undefined).
    pub filtered: usize,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    pub ratios: Vec<f64>,
}

impl ExperimentStats {
    fn from_ratios(trials: usize, raw: Vec<Option<f64>>) -> Self {
        let ratios: Vec<f64> = raw.into_iter().flatten().collect();
        let filtered = trials - ratios.len();
        let n = ratios.len().max(1) as f64;
        let mean = ratios.iter().sum::<f64>() / n;
        let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        ExperimentStats {
            trials,
            filtered,
            max: ratios.iter().copied().fold(0.0, f64::max),
            mean,
            std: var.sqrt(),
            ratios,
        }
    }

    /// `|max_b - max_a| / max_a`.
    pub fn relative_change(&self, finer: &ExperimentStats) -> f64 {
        (finer.max - self.max).abs() / self.max
    }
}

fn run(
    grid: &Arc<Grid>,
    trials: usize,
    seed: u64,
    ratio: impl Fn(&DiscreteField) -> Result<f64> + Sync,
) -> Result<ExperimentStats> {
    let raw = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let u = RandomSmoothField::sample(&mut rng, grid.intervals(), DEFAULT_MODES).on_grid(grid);
            if u.is_zero() {
                Ok(None)
            } else {
                ratio(&u).map(Some)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentStats::from_ratios(trials, raw))
}

/// Ratios `‖u‖_{(φ_min**)_*} / ‖u‖_{W¹L_φ⃗}` over seeded random smooth fields.
pub fn embedding_experiment(
    family: &AnisotropicFamily,
    sc: &Arc<SobolevConjugate>,
    grid: &Arc<Grid>,
    trials: usize,
    seed: u64,
) -> Result<ExperimentStats> {
    let target = sc.as_mo_function();
    run(grid, trials, seed, |u| {
        Ok(luxemburg_norm(&target, u)?.value / anisotropic_norm(family, u)?)
    })
}

/// Ratios `‖u‖_{L_{ψ_min}(∂Ω)} / ‖u‖_{W¹L_φ⃗}` over seeded random smooth fields.
pub fn trace_experiment(
    family: &AnisotropicFamily,
    tf: &TraceFunction,
    grid: &Arc<Grid>,
    trials: usize,
    seed: u64,
) -> Result<ExperimentStats> {
    run(grid, trials, seed, |u| {
        Ok(boundary_norm(&tf.psi_min, u)?.value / anisotropic_norm(family, u)?)
    })
}

/// Values of `f` on successively refined grids, with relative changes
/// between consecutive levels.
pub fn refinement_study(
    intervals: &[(f64, f64)],
    resolutions: &[usize],
    f: impl Fn(&Arc<Grid>) -> Result<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut values = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let grid = Arc::new(Grid::new(intervals, &vec![n; intervals.len()])?);
        values.push(f(&grid)?);
    }
    let changes = values.windows(2).map(|w| (w[1] - w[0]).abs() / w[0].abs()).collect();
    Ok((values, changes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mo::{MoFunction, ScalarField};
    use crate::sobolev::build_trace_function;

    #[test]
    fn trial_streams_are_reproducible_and_distinct() {
        let a: f64 = trial_rng(5, 1).gen();
        let b: f64 = trial_rng(5, 1).gen();
        let c: f64 = trial_rng(5, 2).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn same_field_on_two_grids() {
        let mut rng = trial_rng(1, 0);
        let f = RandomSmoothField::sample(&mut rng, &[(0.0, 1.0), (0.0, 2.0)], 4);
        let g1 = Arc::new(Grid::new(&[(0.0, 1.0), (0.0, 2.0)], &[5, 5]).unwrap());
        let g2 = Arc::new(Grid::new(&[(0.0, 1.0), (0.0, 2.0)], &[9, 9]).unwrap());
        let u1 = f.on_grid(&g1);
        let u2 = f.on_grid(&g2);
        // node (1,1) of the coarse grid is node (2,2) of the fine one
        assert_eq!(u1.values()[6], u2.values()[20]);
    }

    #[test]
    fn embedding_ratios_are_bounded_for_square_family() {
        let phi = MoFunction::power(ScalarField::constant(1.5));
        let fam = AnisotropicFamily::isotropic(phi, 2).unwrap();
        let sc = Arc::new(SobolevConjugate::from_family(&fam).unwrap());
        let g = Arc::new(Grid::unit(2, 17).unwrap());
        let s = embedding_experiment(&fam, &sc, &g, 8, 3).unwrap();
        assert_eq!(s.ratios.len(), 8);
        assert!(s.max.is_finite() && s.max > 0.0);
        let tf = build_trace_function(&sc);
        let t = trace_experiment(&fam, &tf, &g, 8, 3).unwrap();
        assert!(t.max.is_finite() && t.max > 0.0);
    }

    #[test]
    fn variable_exponent_embedding_is_bounded() {
        let phi = MoFunction::power(ScalarField::from_fn(|x| 1.5 + 0.2 * x[0]));
        let fam = AnisotropicFamily::isotropic(phi, 2).unwrap();
        let sc = Arc::new(SobolevConjugate::from_family(&fam).unwrap());
        let g = Arc::new(Grid::unit(2, 9).unwrap());
        let s = embedding_experiment(&fam, &sc, &g, 4, 9).unwrap();
        assert!(s.max.is_finite() && s.max > 0.0);
    }

    #[test]
    fn boundary_norm_is_stable_under_refinement() {
        let phi = MoFunction::power(ScalarField::constant(1.5));
        let sc = Arc::new(SobolevConjugate::new(phi, 2).unwrap());
        let tf = build_trace_function(&sc);
        let (vals, changes) = refinement_study(&[(0.0, 1.0), (0.0, 1.0)], &[17, 33, 65], |g| {
            let u = DiscreteField::from_fn(g.clone(), |x| 1.0 + x[0] * x[1] + (3.0 * x[1]).sin());
            Ok(boundary_norm(&tf.psi_min, &u)?.value)
        })
        .unwrap();
        assert!(vals.iter().all(|v| v.is_finite() && *v > 0.0));
        assert!(changes.iter().all(|&c| c < 0.02), "{changes:?}");
    }
}
