use super::energy::{energy_values, gradient_norm, gradient_values};
use super::probe::{weak_residual, DEFAULT_TEST_FIELDS};
use super::problem::{Mode, ProblemSpec};
use crate::error::{Error, Result};
use crate::spaces::DiscreteField;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop when `sup_k |g_k|/w_k` falls below this.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// L-BFGS memory.
    pub memory: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub max_halvings: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            grad_tol: 1e-6,
            max_iters: 5000,
            memory: 10,
            armijo_c: 1e-4,
            backtrack: 0.5,
            max_halvings: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTol,
    MaxIters,
    LineSearchFailure,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub minimizer: DiscreteField,
    /// Energy at every accepted iterate, starting with the initial guess.
    pub energy_history: Vec<f64>,
    pub gradient_norm_history: Vec<f64>,
    pub termination: Termination,
    pub iterations: usize,
    /// `max_v |⟨I'(u), v⟩|` over the default test fields.
    pub weak_residual: f64,
    /// `max(0, -min u)`.
    pub nonnegativity_violation: f64,
    /// False when the sign check was skipped (manufactured mode).
    pub nonnegativity_checked: bool,
    /// Run restarted from `max(u, 0)`, when one was needed.
    pub clamped_rerun: Option<Box<SolveReport>>,
}

impl SolveReport {
    pub fn energy(&self) -> f64 {
        *self
            .energy_history
            .last()
            .expect("history starts with the initial energy")
    }

    pub fn gradient_norm(&self) -> f64 {
        *self
            .gradient_norm_history
            .last()
            .expect("history starts with the initial gradient")
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::GradientTol
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L-BFGS on the discrete energy with Armijo backtracking. The initial
/// inverse Hessian is `γ W⁻¹` (`W` the quadrature weights), so the first step
/// is steepest descent in the discrete `L²` metric.
pub fn minimize(spec: &ProblemSpec, u0: &DiscreteField, opts: &SolverOptions) -> Result<SolveReport> {
    if u0.grid().as_ref() != spec.grid.as_ref() {
        return Err(Error::InvalidInput("initial guess lives on another grid".into()));
    }
    if !(opts.grad_tol > 0.0) || opts.memory == 0 || !(opts.backtrack > 0.0 && opts.backtrack < 1.0) {
        return Err(Error::InvalidInput("invalid solver options".into()));
    }
    let w = spec.grid.weights();
    let mut u = u0.values().to_vec();
    let mut e = energy_values(spec, &u);
    let mut g = gradient_values(spec, &u);
    if !e.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteEnergy);
    }
    let mut energy_history = vec![e];
    let mut gradient_norm_history = vec![gradient_norm(spec, &g)];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;
    let n = u.len();
    let mut trial = vec![0.0; n];

    while iterations < opts.max_iters {
        if *gradient_norm_history.last().unwrap() < opts.grad_tol {
            termination = Termination::GradientTol;
            break;
        }
        let mut d = direction(&g, w, &pairs);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            d = g.iter().zip(w).map(|(gi, wi)| -gi / wi).collect();
            slope = dot(&g, &d);
        }
        let mut alpha = 1.0;
        let mut halvings = 0;
        let accepted = loop {
            for k in 0..n {
                trial[k] = u[k] + alpha * d[k];
            }
            let et = energy_values(spec, &trial);
            if et.is_finite() && et <= e + opts.armijo_c * alpha * slope {
                break Some(et);
            }
            if halvings == opts.max_halvings {
                break None;
            }
            alpha *= opts.backtrack;
            halvings += 1;
        };
        let Some(e_new) = accepted else {
            termination = Termination::LineSearchFailure;
            break;
        };
        let g_new = gradient_values(spec, &trial);
        if g_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEnergy);
        }
        let s: Vec<f64> = d.iter().map(|v| alpha * v).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut u, &mut trial);
        g = g_new;
        e = e_new;
        iterations += 1;
        energy_history.push(e);
        gradient_norm_history.push(gradient_norm(spec, &g));
    }
    if termination == Termination::MaxIters && *gradient_norm_history.last().unwrap() < opts.grad_tol {
        termination = Termination::GradientTol;
    }
    let minimizer = DiscreteField::new(spec.grid.clone(), u)?;
    let weak = weak_residual(spec, &minimizer, DEFAULT_TEST_FIELDS, 0)?;
    let violation = minimizer.values().iter().fold(0.0f64, |m, &v| m.max(-v));
    Ok(SolveReport {
        minimizer,
        energy_history,
        gradient_norm_history,
        termination,
        iterations,
        weak_residual: weak,
        nonnegativity_violation: violation,
        nonnegativity_checked: spec.mode == Mode::Standard,
        clamped_rerun: None,
    })
}

/// Two-loop recursion for `-H g`.
fn direction(g: &[f64], w: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let gamma = match pairs.back() {
        Some((s, y, _)) => {
            let ywy: f64 = y.iter().zip(w).map(|(v, wi)| v * v / wi).sum();
            dot(s, y) / ywy
        }
        None => 1.0,
    };
    let mut r: Vec<f64> = q.iter().zip(w).map(|(v, wi)| gamma * v / wi).collect();
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &r);
        for (ri, si) in r.iter_mut().zip(s) {
            *ri += (a - b) * si;
        }
    }
    r.iter_mut().for_each(|v| *v = -*v);
    r
}
