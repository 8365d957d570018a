//! Energy functional, descent solver and condition checks for the
//! anisotropic Neumann problem.

mod energy;
mod minimize;
mod probe;
mod problem;
mod validate;

pub use energy::{energy, gateaux_gradient, gradient_norm};
pub use minimize::{minimize, SolveReport, SolverOptions, Termination};
pub use probe::{
    coercivity_probe, nonnegativity_enforce, random_start, test_fields, uniqueness_probe, weak_residual,
    CoercivityReport, UniquenessReport, DEFAULT_TEST_FIELDS,
};
pub use problem::{Comparisons, DataTerm, Flux, Mode, ProblemSpec};
pub use validate::{validate, ConditionCheck, ValidationOptions, ValidationReport};

use serde::Serialize;

#[derive(Serialize)]
struct FieldJson<'a> {
    intervals: &'a [(f64, f64)],
    resolution: &'a [usize],
    values: &'a [f64],
}

#[derive(Serialize)]
struct ReportJson<'a> {
    minimizer: FieldJson<'a>,
    energy_history: &'a [f64],
    gradient_norm_history: &'a [f64],
    termination: Termination,
    iterations: usize,
    weak_residual: f64,
    nonnegativity_violation: f64,
    nonnegativity_checked: bool,
    clamped_rerun: Option<Box<ReportJson<'a>>>,
}

impl<'a> ReportJson<'a> {
    fn new(r: &'a SolveReport) -> Self {
        let g = r.minimizer.grid();
        ReportJson {
            minimizer: FieldJson {
                intervals: g.intervals(),
                resolution: g.resolution(),
                values: r.minimizer.values(),
            },
            energy_history: &r.energy_history,
            gradient_norm_history: &r.gradient_norm_history,
            termination: r.termination,
            iterations: r.iterations,
            weak_residual: r.weak_residual,
            nonnegativity_violation: r.nonnegativity_violation,
            nonnegativity_checked: r.nonnegativity_checked,
            clamped_rerun: r.clamped_rerun.as_deref().map(|c| Box::new(ReportJson::new(c))),
        }
    }
}

impl Serialize for SolveReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ReportJson::new(self).serialize(s)
    }
}

impl SolveReport {
    /// `iteration,energy,gradient_norm` rows.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("iteration,energy,gradient_norm\n");
        for (k, (e, g)) in self.energy_history.iter().zip(&self.gradient_norm_history).enumerate() {
            out.push_str(&format!("{k},{e:?},{g:?}\n"));
        }
        out
    }
}
