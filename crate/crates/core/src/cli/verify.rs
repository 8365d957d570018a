//! The full invariant suite behind `orlicz-var verify`.

use super::config::Config;
use crate::error::Result;
use crate::mo::{biconjugate_check, derivative_sandwich, inverse_sandwich, probe_n_function, SampledInequality};
use crate::sobolev::check_integrability;
use crate::solver::{validate, ConditionCheck, ProblemSpec, ValidationOptions, ValidationReport};
use crate::spaces::{holder_pairing_with, random_field, trial_rng, Grid};
use crate::verdict::{Verdict, Witness};
use rand::Rng;
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteOptions {
    /// `(x, s)` samples per component for (prop2) and (prop3).
    pub sandwich_samples: usize,
    /// `(x, t)` samples per component for (astast).
    pub biconjugate_samples: usize,
    /// Random field pairs per component for (Holder).
    pub holder_pairs: usize,
    /// Nodes per axis of the (Holder) grid.
    pub holder_resolution: usize,
    pub seed: u64,
    pub t_max: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            sandwich_samples: 200,
            biconjugate_samples: 8,
            holder_pairs: 4,
            holder_resolution: 9,
            seed: 0,
            t_max: 1e6,
        }
    }
}

fn from_sampled(id: String, what: &str, r: SampledInequality) -> ConditionCheck {
    ConditionCheck {
        id,
        verdict: r.verdict,
        hard: true,
        detail: format!("{what}: {} of {} samples violate", r.violations, r.samples),
        witness: r.witness,
    }
}

fn point(rng: &mut impl Rng, intervals: &[(f64, f64)]) -> Vec<f64> {
    intervals.iter().map(|&(a, b)| rng.gen_range(a..=b)).collect()
}

/// N-function axioms, (prop2), (prop3), (astast) and (Holder) per component,
/// the integrability premise of the Sobolev conjugate, then every structural
/// condition of the problem.
pub fn verify_suite(config: &Config, spec: &ProblemSpec, opts: &SuiteOptions) -> Result<ValidationReport> {
    let intervals = config.intervals.as_slice();
    let n = intervals.len();
    let mut rng = trial_rng(opts.seed, u64::MAX);
    let mut xs: Vec<Vec<f64>> = vec![config.x0()];
    xs.extend((0..4).map(|_| point(&mut rng, intervals)));
    let mut checks = Vec::new();
    let holder_grid = Arc::new(Grid::new(intervals, &vec![opts.holder_resolution; n])?);

    for (i, phi) in spec.family.components().iter().enumerate() {
        let k = i + 1;
        let mut rng = trial_rng(opts.seed, i as u64);
        let nf = probe_n_function(phi, &xs, opts.t_max.min(1e6));
        let failed = nf.first_failure();
        checks.push(ConditionCheck {
            id: format!("(N-function) phi{k}"),
            verdict: nf.verdict,
            hard: true,
            detail: match failed {
                Some(e) => format!("{} fails for {}", e.name, phi.label()),
                None => format!("{} is an N-function on the probe grid", phi.label()),
            },
            witness: failed.and_then(|e| e.witness.clone()),
        });

        let mut samples = |count: usize, lo: f64, hi: f64| -> Vec<(Vec<f64>, f64)> {
            (0..count)
                .map(|_| {
                    let x = point(&mut rng, intervals);
                    (x, 10f64.powf(rng.gen_range(lo..hi)))
                })
                .collect()
        };
        let sandwich = samples(opts.sandwich_samples, -3.0, 3.0);
        let phi_star = phi.conjugate_function();
        checks.push(from_sampled(
            format!("(prop2) phi{k}"),
            "s <= inv(phi*)(s) inv(phi)(s) <= 2s",
            inverse_sandwich(phi, &phi_star, &sandwich, 1e-8),
        ));
        checks.push(from_sampled(
            format!("(prop3) phi{k}"),
            "phi(s) <= s phi'(s) <= phi(2s)",
            derivative_sandwich(phi, &sandwich, 1e-8),
        ));
        let bic = samples(opts.biconjugate_samples, -1.0, 1.0);
        checks.push(from_sampled(
            format!("(astast) phi{k}"),
            "phi** <= phi, equal for convex phi",
            biconjugate_check(phi, &bic, 1e-6),
        ));

        let mut violations = 0;
        let mut witness = None;
        for j in 0..opts.holder_pairs {
            let stream = (opts.seed, 1000 + (i * opts.holder_pairs + j) as u64);
            let u = random_field(&holder_grid, stream.0, 2 * stream.1, 1.0 + j as f64);
            let v = random_field(&holder_grid, stream.0, 2 * stream.1 + 1, 1.0);
            let (lhs, rhs) = holder_pairing_with(&u, &v, phi, &phi_star)?;
            if lhs > rhs + 1e-8 * (1.0 + rhs) {
                violations += 1;
                witness.get_or_insert(Witness::new(&[], &[("pair", j as f64), ("rhs", rhs)], lhs));
            }
        }
        checks.push(ConditionCheck {
            id: format!("(Holder) phi{k}"),
            verdict: if violations == 0 {
                Verdict::Holds
            } else {
                Verdict::Fails
            },
            hard: true,
            detail: format!(
                "int|uv| <= 2 |u|_phi |v|_phi*: {violations} of {} pairs violate",
                opts.holder_pairs
            ),
            witness,
        });
    }

    let envelope = spec.family.phi_min_envelope();
    checks.push(match check_integrability(&envelope, n, &xs) {
        Ok(r) => ConditionCheck {
            id: "(phi.min3)".into(),
            verdict: r.verdict,
            hard: false,
            detail: format!(
                "int_0^1 inv(phi_min**)(t)/t^(1+1/N) finite ({}), int_1^inf diverges ({})",
                r.head, r.tail
            ),
            witness: r.witness,
        },
        Err(e) => ConditionCheck {
            id: "(phi.min3)".into(),
            verdict: Verdict::Inconclusive,
            hard: false,
            detail: e.to_string(),
            witness: None,
        },
    });

    let structural = validate(
        spec,
        &ValidationOptions {
            seed: opts.seed,
            t_max: opts.t_max,
            ..ValidationOptions::default()
        },
    );
    checks.extend(structural.checks);
    Ok(ValidationReport { checks })
}
