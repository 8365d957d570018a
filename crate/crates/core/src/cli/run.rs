use super::config::{parse_config, Config};
use super::verify::{verify_suite, SuiteOptions};
use crate::error::{Error, Result};
use crate::mo::conjugate;
use crate::sobolev::{build_trace_function, check_integrability, SobolevConjugate};
use crate::solver::{
    minimize, nonnegativity_enforce, uniqueness_probe, validate, weak_residual, Mode, ProblemSpec, ValidationOptions,
    ValidationReport,
};
use crate::spaces::{
    anisotropic_norm, embedding_experiment, luxemburg_norm, random_field, trace_experiment, DiscreteField,
    ExperimentStats,
};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// Relative sup distance above which `uniq` reports distinct minimizers.
pub const UNIQUENESS_TOL: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(
    name = "orlicz-var",
    version,
    about = "Musielak-Orlicz calculus and anisotropic Neumann solver"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Problem file (`orlicz-var v1`).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Resolution override, e.g. `33x33`.
    #[arg(long)]
    pub grid: Option<String>,
    /// `standard` or `manufactured`.
    #[arg(long)]
    pub mode: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate `φ_k*(x0, s)` over the probe s-grid.
    Conjugate {
        #[command(flatten)]
        flags: Flags,
        #[arg(long, default_value_t = 1)]
        component: usize,
    },
    /// Luxemburg norms of a field (seeded random unless `--field` is given).
    Norm {
        #[command(flatten)]
        flags: Flags,
        /// Field CSV as written by `solve`.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Forward Sobolev conjugate of `φ_min**` at `x0`.
    Sobolev {
        #[command(flatten)]
        flags: Flags,
    },
    /// Embedding ratio experiment.
    Embed {
        #[command(flatten)]
        flags: Flags,
    },
    /// Trace ratio experiment.
    Trace {
        #[command(flatten)]
        flags: Flags,
    },
    /// Minimize the energy from `u ≡ 0`.
    Solve {
        #[command(flatten)]
        flags: Flags,
    },
    /// Full invariant suite and condition table.
    Verify {
        #[command(flatten)]
        flags: Flags,
    },
    /// Multi-start uniqueness probe.
    Uniq {
        #[command(flatten)]
        flags: Flags,
    },
}

impl Command {
    pub fn flags(&self) -> &Flags {
        match self {
            Command::Conjugate { flags, .. }
            | Command::Norm { flags, .. }
            | Command::Sobolev { flags }
            | Command::Embed { flags }
            | Command::Trace { flags }
            | Command::Solve { flags }
            | Command::Verify { flags }
            | Command::Uniq { flags } => flags,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Conjugate { .. } => "conjugate",
            Command::Norm { .. } => "norm",
            Command::Sobolev { .. } => "sobolev",
            Command::Embed { .. } => "embed",
            Command::Trace { .. } => "trace",
            Command::Solve { .. } => "solve",
            Command::Verify { .. } => "verify",
            Command::Uniq { .. } => "uniq",
        }
    }
}

/// Result of one invocation.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    /// Human-readable output for stdout.
    pub stdout: String,
    /// Diagnostics for stderr.
    pub messages: Vec<String>,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

struct Step {
    code: i32,
    result: Value,
    stdout: String,
    messages: Vec<String>,
}

impl Step {
    fn ok(result: Value) -> Self {
        Step {
            code: EXIT_OK,
            result,
            stdout: String::new(),
            messages: Vec::new(),
        }
    }
}

struct Ctx {
    config: Config,
    out: PathBuf,
    seed: u64,
    files: Vec<PathBuf>,
}

impl Ctx {
    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.out.join(name);
        std::fs::write(&path, text)?;
        self.files.push(path);
        Ok(())
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Syntax { .. } | Error::Semantic(_) | Error::InvalidInput(_) | Error::Domain(_) => EXIT_VALIDATION,
        _ => EXIT_NUMERICAL,
    }
}

fn status(code: i32) -> &'static str {
    match code {
        EXIT_OK => "ok",
        EXIT_VALIDATION => "validation_failure",
        _ => "numerical_failure",
    }
}

/// Parses `NxM[xK]`.
pub fn parse_grid(text: &str) -> Result<Vec<usize>> {
    text.split('x')
        .map(|c| {
            c.trim()
                .parse::<usize>()
                .map_err(|_| Error::Semantic(format!("bad --grid '{text}'; expected NxM[xK]")))
        })
        .collect()
}

/// Reads the config and applies the command-line overrides.
pub fn load_config(flags: &Flags) -> Result<Config> {
    let text =
        std::fs::read_to_string(&flags.config).map_err(|e| Error::Io(format!("{}: {e}", flags.config.display())))?;
    let mut config = parse_config(&text)?;
    if let Some(g) = &flags.grid {
        let res = parse_grid(g)?;
        if res.len() != config.dim() {
            return Err(Error::Semantic(format!(
                "--grid has {} axes but the domain has {}",
                res.len(),
                config.dim()
            )));
        }
        if res.iter().any(|&r| r < 3) {
            return Err(Error::Semantic("--grid needs at least 3 nodes per axis".into()));
        }
        config.resolution = res;
    }
    if let Some(m) = &flags.mode {
        config.solver.mode = m
            .parse::<Mode>()
            .map_err(|_| Error::Semantic(format!("unknown --mode '{m}'")))?;
    }
    if let Some(s) = flags.seed {
        config.solver.seed = s;
    }
    Ok(config)
}

/// Runs one subcommand, writing its artifacts and `report.json`.
pub fn execute(cli: &Cli) -> Outcome {
    let flags = cli.command.flags();
    let loaded = load_config(flags);
    let out = flags
        .out
        .clone()
        .or_else(|| {
            loaded
                .as_ref()
                .ok()
                .and_then(|c| c.output_dir.clone())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut outcome = Outcome {
        code: EXIT_OK,
        stdout: String::new(),
        messages: Vec::new(),
        out_dir: out.clone(),
        files: Vec::new(),
    };
    if let Err(e) = std::fs::create_dir_all(&out) {
        outcome.code = EXIT_NUMERICAL;
        outcome.messages.push(format!("cannot create {}: {e}", out.display()));
        return outcome;
    }
    let mut ctx = None;
    let step = loaded.and_then(|config| {
        let seed = config.solver.seed;
        let c = ctx.insert(Ctx {
            config,
            out: out.clone(),
            seed,
            files: Vec::new(),
        });
        dispatch(&cli.command, c)
    });
    let (code, result, stdout, mut messages) = match step {
        Ok(s) => (s.code, s.result, s.stdout, s.messages),
        Err(e) => (exit_code(&e), Value::Null, String::new(), vec![e.to_string()]),
    };
    let mut diagnostics = json!({
        "subcommand": cli.command.name(),
        "status": status(code),
        "exit_code": code,
        "messages": messages,
        "config": flags.config.display().to_string(),
    });
    if let Some(c) = &ctx {
        diagnostics["seed"] = json!(c.seed);
        diagnostics["resolution"] = json!(c.config.resolution);
        diagnostics["mode"] = json!(c.config.solver.mode.to_string());
    }
    let report = json!({ "result": result, "diagnostics": diagnostics });
    let path = out.join("report.json");
    let mut files = ctx.map(|c| c.files).unwrap_or_default();
    match serde_json::to_string_pretty(&report) {
        Ok(text) => match std::fs::write(&path, text + "\n") {
            Ok(()) => files.push(path),
            Err(e) => messages.push(format!("cannot write {}: {e}", path.display())),
        },
        Err(e) => messages.push(format!("cannot serialize report: {e}")),
    }
    outcome.code = code;
    outcome.stdout = stdout;
    outcome.messages = messages;
    outcome.files = files;
    outcome
}

fn dispatch(cmd: &Command, ctx: &mut Ctx) -> Result<Step> {
    match cmd {
        Command::Conjugate { component, .. } => run_conjugate(ctx, *component),
        Command::Norm { field, .. } => run_norm(ctx, field.as_deref()),
        Command::Sobolev { .. } => run_sobolev(ctx),
        Command::Embed { .. } => run_experiment(ctx, false),
        Command::Trace { .. } => run_experiment(ctx, true),
        Command::Solve { .. } => run_solve(ctx),
        Command::Verify { .. } => run_verify(ctx),
        Command::Uniq { .. } => run_uniq(ctx),
    }
}

/// Log-spaced `[probe] s_grid` points used by `conjugate` and `sobolev`.
pub fn s_grid(config: &Config) -> Vec<f64> {
    let p = &config.probe;
    let ratio = p.s_max / p.s_min;
    (0..p.s_count)
        .map(|k| p.s_min * ratio.powf(k as f64 / (p.s_count - 1) as f64))
        .collect()
}

fn run_conjugate(ctx: &mut Ctx, component: usize) -> Result<Step> {
    let family = ctx.config.family()?;
    if component == 0 || component > family.dim() {
        return Err(Error::Semantic(format!("--component must be in 1..={}", family.dim())));
    }
    let phi = family.component(component - 1);
    let x0 = ctx.config.x0();
    let mut csv = String::from("s,phi_star\n");
    let mut rows = Vec::new();
    for s in s_grid(&ctx.config) {
        let v = conjugate(phi, &x0, s)?;
        let _ = writeln!(csv, "{s:?},{v:?}");
        rows.push((s, v));
    }
    ctx.write("conjugate.csv", &csv)?;
    Ok(Step::ok(json!({
        "component": component,
        "function": phi.label(),
        "x0": x0,
        "points": rows.len(),
    })))
}

fn run_norm(ctx: &mut Ctx, field: Option<&Path>) -> Result<Step> {
    let family = ctx.config.family()?;
    let u = match field {
        Some(p) => DiscreteField::read_csv(p, &ctx.config.intervals)?,
        None => random_field(&ctx.config.grid()?, ctx.seed, 0, 1.0),
    };
    let mut csv = String::from("function,norm,modular_at_norm,iterations\n");
    let mut named: Vec<(String, &crate::mo::MoFunction)> = family
        .components()
        .iter()
        .enumerate()
        .map(|(i, c)| (format!("phi{}", i + 1), c))
        .collect();
    named.push(("phi_max".into(), family.phi_max()));
    named.push(("phi_min".into(), family.phi_min()));
    let mut norms = serde_json::Map::new();
    for (name, phi) in named {
        let r = luxemburg_norm(phi, &u)?;
        let _ = writeln!(
            csv,
            "{name},{:?},{:?},{}",
            r.value, r.modular_at_value, r.bisection_iterations
        );
        norms.insert(name, json!(r));
    }
    let aniso = anisotropic_norm(&family, &u)?;
    let _ = writeln!(csv, "anisotropic,{aniso:?},,");
    ctx.write("norm.csv", &csv)?;
    Ok(Step::ok(json!({
        "field": field.map_or_else(|| format!("random (seed {})", ctx.seed), |p| p.display().to_string()),
        "sup_norm": u.sup_norm(),
        "norms": norms,
        "anisotropic": aniso,
    })))
}

/// `φ_min**` with its integrability verdict; `Err` step when the Sobolev
/// conjugate does not exist.
fn sobolev_conjugate(ctx: &Ctx) -> Result<std::result::Result<Arc<SobolevConjugate>, Step>> {
    let family = ctx.config.family()?;
    let x0 = ctx.config.x0();
    let envelope = family.phi_min_envelope();
    let integ = check_integrability(&envelope, family.dim(), &[x0])?;
    if !integ.verdict.holds() {
        return Ok(Err(Step {
            code: EXIT_VALIDATION,
            result: json!({ "integrability": integ }),
            stdout: String::new(),
            messages: vec![format!(
                "(phi.min3) integrability premise {} for {}; no Sobolev conjugate",
                integ.verdict,
                envelope.label()
            )],
        }));
    }
    Ok(Ok(Arc::new(SobolevConjugate::new(envelope, family.dim())?)))
}

fn run_sobolev(ctx: &mut Ctx) -> Result<Step> {
    let sc = match sobolev_conjugate(ctx)? {
        Ok(sc) => sc,
        Err(step) => return Ok(step),
    };
    let x0 = ctx.config.x0();
    let mut csv = String::from("t,forward\n");
    for t in s_grid(&ctx.config) {
        let f = sc.forward(&x0, t)?;
        let _ = writeln!(csv, "{t:?},{f:?}");
    }
    ctx.write("sobolev.csv", &csv)?;
    Ok(Step::ok(
        json!({ "function": sc.base().label(), "x0": x0, "dim": sc.dim() }),
    ))
}

fn stats_csv(stats: &ExperimentStats) -> String {
    let mut csv = String::from("trial,ratio\n");
    for (k, r) in stats.ratios.iter().enumerate() {
        let _ = writeln!(csv, "{k},{r:?}");
    }
    csv
}

fn run_experiment(ctx: &mut Ctx, trace: bool) -> Result<Step> {
    let sc = match sobolev_conjugate(ctx)? {
        Ok(sc) => sc,
        Err(step) => return Ok(step),
    };
    let family = ctx.config.family()?;
    let grid = ctx.config.grid()?;
    let trials = ctx.config.probe.trials;
    let stats = if trace {
        trace_experiment(&family, &build_trace_function(&sc), &grid, trials, ctx.seed)?
    } else {
        embedding_experiment(&family, &sc, &grid, trials, ctx.seed)?
    };
    ctx.write(if trace { "trace.csv" } else { "embed.csv" }, &stats_csv(&stats))?;
    let mut step = Step::ok(json!({
        "trials": stats.trials,
        "filtered": stats.filtered,
        "max": stats.max,
        "mean": stats.mean,
        "std": stats.std,
    }));
    if !stats.max.is_finite() {
        step.code = EXIT_NUMERICAL;
        step.messages.push("ratio diverged".into());
    }
    Ok(step)
}

fn validation_options(ctx: &Ctx) -> ValidationOptions {
    ValidationOptions {
        seed: ctx.seed,
        t_max: ctx.config.probe.t_max,
        ..ValidationOptions::default()
    }
}

fn l2_error(u: &DiscreteField, exact: &crate::expr::Expr) -> (f64, f64) {
    let g = u.grid();
    let mut l2 = 0.0;
    let mut sup = 0.0f64;
    for (k, (&v, &w)) in u.values().iter().zip(g.weights()).enumerate() {
        let d = v - exact.eval_or_nan(g.point(k), 0.0);
        l2 += w * d * d;
        sup = sup.max(d.abs());
    }
    (l2.sqrt(), sup)
}

fn run_solve(ctx: &mut Ctx) -> Result<Step> {
    let spec = ctx.config.problem()?;
    let validation = validate(&spec, &validation_options(ctx));
    ctx.write("verify.csv", &validation.to_csv())?;
    if !validation.passed() {
        return Ok(hard_failure_step(&validation, json!({ "validation": validation })));
    }
    let opts = ctx.config.solver_options();
    let report = minimize(&spec, &DiscreteField::zeros(spec.grid.clone()), &opts)?;
    let mut report = nonnegativity_enforce(&spec, report, &opts)?;
    report.weak_residual = weak_residual(&spec, &report.minimizer, ctx.config.solver.test_fields, ctx.seed)?;
    let best = report.clamped_rerun.as_deref().unwrap_or(&report);
    ctx.write("field.csv", &best.minimizer.to_csv())?;
    ctx.write("history.csv", &report.history_csv())?;
    let mut result = json!({ "solve": report, "validation": validation });
    if let Some(exact) = &ctx.config.data.exact {
        let (l2, sup) = l2_error(&best.minimizer, exact);
        result["error"] = json!({ "l2": l2, "sup": sup });
    }
    let mut step = Step::ok(result);
    if !best.converged() {
        step.code = EXIT_NUMERICAL;
        step.messages.push(format!(
            "not converged: {:?} after {} iterations, gradient norm {:e}",
            best.termination,
            best.iterations,
            best.gradient_norm()
        ));
    }
    if spec.mode == Mode::Standard && best.nonnegativity_violation > 1e-8 {
        step.messages.push(format!(
            "minimizer has negative values (violation {:e})",
            best.nonnegativity_violation
        ));
    }
    Ok(step)
}

fn hard_failure_step(v: &ValidationReport, result: Value) -> Step {
    Step {
        code: EXIT_VALIDATION,
        result,
        stdout: v.table(),
        messages: v
            .hard_failures()
            .iter()
            .map(|c| format!("{} {}: {}", c.id, c.verdict, c.detail))
            .collect(),
    }
}

fn run_verify(ctx: &mut Ctx) -> Result<Step> {
    let spec = ctx.config.problem()?;
    let opts = SuiteOptions {
        seed: ctx.seed,
        t_max: ctx.config.probe.t_max,
        ..SuiteOptions::default()
    };
    let report = verify_suite(&ctx.config, &spec, &opts)?;
    ctx.write("verify.csv", &report.to_csv())?;
    let result = json!({ "checks": report.checks, "passed": report.passed() });
    if report.passed() {
        let mut step = Step::ok(result);
        step.stdout = report.table();
        Ok(step)
    } else {
        Ok(hard_failure_step(&report, result))
    }
}

fn run_uniq(ctx: &mut Ctx) -> Result<Step> {
    let spec: ProblemSpec = ctx.config.problem()?;
    let validation = validate(&spec, &validation_options(ctx));
    if !validation.passed() {
        return Ok(hard_failure_step(&validation, json!({ "validation": validation })));
    }
    let r = uniqueness_probe(&spec, ctx.config.solver.starts, ctx.seed, &ctx.config.solver_options())?;
    let mut csv = String::from("start,energy,converged\n");
    for (k, (e, c)) in r.energies.iter().zip(&r.converged).enumerate() {
        let _ = writeln!(csv, "{k},{e:?},{c}");
    }
    ctx.write("uniq.csv", &csv)?;
    let unique = r.relative_distance <= UNIQUENESS_TOL;
    let mut step = Step::ok(json!({ "uniqueness": r, "unique": unique, "tolerance": UNIQUENESS_TOL }));
    if !r.converged.iter().all(|&c| c) {
        step.code = EXIT_NUMERICAL;
        step.messages.push("some starts did not converge".into());
    } else if !unique {
        step.code = EXIT_VALIDATION;
        step.messages.push(format!(
            "distinct minimizers: relative sup distance {:e} (monotonicity {})",
            r.relative_distance, r.monotonicity
        ));
    }
    Ok(step)
}
