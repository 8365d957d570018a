//! The `orlicz-var v1` problem file.
//!
//! ```text
//! orlicz-var v1
//! # comment
//! [domain]
//! intervals = [0, 1] x [0, 1]
//! resolution = 33x33
//!
//! [family]
//! phi1 = power: 2
//! phi2 = power-log: 1.5 + 0.2*x1
//!
//! [flux]
//! kind = model              # or custom with a1 = ..., A1 = ...
//!
//! [data]
//! b = 1
//! b0 = 1
//! f = max(1 - 0.1*s, 0)
//! F = s - 0.05*s^2 + 0.05*max(s - 10, 0)^2
//! g = 0
//! P1 = power: 1.5
//! M = expr: exp(t) - t - 1
//! k1 = 1
//! u_exact = 2 + 0.1*cos(pi*x1)*cos(pi*x2)   # optional, reported by solve
//!
//! [solver]
//! grad_tol = 1e-6
//! max_iters = 5000
//! seed = 0
//! mode = standard
//!
//! [probe]
//! x0 = 0.5, 0.5
//! s_grid = 0.01:100:50
//! trials = 200
//!
//! [output]
//! dir = out
//! ```
//!
//! Function values are `<kind>: <payload>` with kinds `power`, `power-log`
//! (payload: exponent expression), `tabulated` (payload: `NxM; v1, v2, ...`
//! sampled on a uniform grid over the domain) and, outside `[family]`,
//! `expr` (payload: expression in `t` and `x1..xN`).

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mo::{AnisotropicFamily, MoFunction, ScalarField, Tabulation};
use crate::solver::{Comparisons, DataTerm, Flux, Mode, ProblemSpec, SolverOptions};
use crate::spaces::Grid;
use std::fmt::Write as _;
use std::sync::Arc;

pub const HEADER: &str = "orlicz-var v1";

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Power(Expr),
    PowerLog(Expr),
    Tabulated { counts: Vec<usize>, values: Vec<f64> },
    Expr(Expr),
}

impl FunctionSpec {
    fn exponent(&self) -> Option<&Expr> {
        match self {
            FunctionSpec::Power(e) | FunctionSpec::PowerLog(e) => Some(e),
            _ => None,
        }
    }

    pub fn build(&self, intervals: &[(f64, f64)]) -> Result<MoFunction> {
        Ok(match self {
            FunctionSpec::Power(e) => MoFunction::power(field(e)),
            FunctionSpec::PowerLog(e) => MoFunction::power_log(field(e)),
            FunctionSpec::Tabulated { counts, values } => MoFunction::power(ScalarField::tabulated(
                Tabulation::uniform(intervals, counts, values.clone())?,
            )),
            FunctionSpec::Expr(e) => MoFunction::from_expression(e.clone()),
        })
    }

    fn to_text(&self) -> String {
        match self {
            FunctionSpec::Power(e) => format!("power: {e}"),
            FunctionSpec::PowerLog(e) => format!("power-log: {e}"),
            FunctionSpec::Tabulated { counts, values } => format!(
                "tabulated: {}; {}",
                counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("x"),
                values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
            ),
            FunctionSpec::Expr(e) => format!("expr: {e}"),
        }
    }
}

fn field(e: &Expr) -> ScalarField {
    match e {
        Expr::Num(v) => ScalarField::constant(*v),
        _ => ScalarField::expression(e.clone()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FluxSpec {
    Model,
    /// `(a_i, A_i)` per axis.
    Custom(Vec<(Expr, Option<Expr>)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSpec {
    pub b: Expr,
    pub b0: f64,
    pub f: Expr,
    pub big_f: Option<Expr>,
    pub g: Expr,
    pub big_g: Option<Expr>,
    pub p: Vec<Option<FunctionSpec>>,
    pub c: Vec<Option<f64>>,
    pub d: Vec<Option<Expr>>,
    pub r: Option<FunctionSpec>,
    pub big_d: Option<Expr>,
    pub m: Option<FunctionSpec>,
    pub k1: Option<f64>,
    pub h: Option<FunctionSpec>,
    pub k2: Option<f64>,
    /// Known solution, compared against in `solve` (manufactured runs).
    pub exact: Option<Expr>,
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec {
            b: Expr::Num(1.0),
            b0: 1.0,
            f: Expr::Num(0.0),
            big_f: None,
            g: Expr::Num(0.0),
            big_g: None,
            p: Vec::new(),
            c: Vec::new(),
            d: Vec::new(),
            r: None,
            big_d: None,
            m: None,
            k1: None,
            h: None,
            k2: None,
            exact: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSection {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub memory: usize,
    pub seed: u64,
    pub mode: Mode,
    pub starts: usize,
    pub test_fields: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = SolverOptions::default();
        SolverSection {
            grad_tol: o.grad_tol,
            max_iters: o.max_iters,
            memory: o.memory,
            seed: 0,
            mode: Mode::Standard,
            starts: 5,
            test_fields: crate::solver::DEFAULT_TEST_FIELDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSection {
    /// Evaluation point for pointwise subcommands; the domain centre when unset.
    pub x0: Option<Vec<f64>>,
    pub s_min: f64,
    pub s_max: f64,
    pub s_count: usize,
    pub trials: usize,
    pub t_max: f64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection {
            x0: None,
            s_min: 1e-2,
            s_max: 1e2,
            s_count: 50,
            trials: 200,
            t_max: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub intervals: Vec<(f64, f64)>,
    pub resolution: Vec<usize>,
    pub family: Vec<FunctionSpec>,
    pub flux: FluxSpec,
    pub data: DataSpec,
    pub solver: SolverSection,
    pub probe: ProbeSection,
    pub output_dir: Option<String>,
}

impl Config {
    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn x0(&self) -> Vec<f64> {
        self.probe
            .x0
            .clone()
            .unwrap_or_else(|| self.intervals.iter().map(|(a, b)| 0.5 * (a + b)).collect())
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::new(&self.intervals, &self.resolution)?))
    }

    pub fn family(&self) -> Result<AnisotropicFamily> {
        AnisotropicFamily::new(
            self.family
                .iter()
                .map(|f| f.build(&self.intervals))
                .collect::<Result<_>>()?,
        )
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            grad_tol: self.solver.grad_tol,
            max_iters: self.solver.max_iters,
            memory: self.solver.memory,
            ..SolverOptions::default()
        }
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let family = self.family()?;
        let mut spec = ProblemSpec::new(self.grid()?, family)?;
        if let FluxSpec::Custom(list) = &self.flux {
            spec = spec.with_fluxes(
                list.iter()
                    .map(|(a, aa)| Flux::from_expr(a.clone(), aa.clone()))
                    .collect(),
            )?;
        }
        let d = &self.data;
        let build = |f: &Option<FunctionSpec>| f.as_ref().map(|f| f.build(&self.intervals)).transpose();
        let comparisons = Comparisons {
            p: d.p.iter().map(build).collect::<Result<_>>()?,
            c: d.c.iter().map(|c| c.unwrap_or(1.0)).collect(),
            d: d.d
                .iter()
                .map(|e| e.as_ref().map_or(ScalarField::constant(0.0), field))
                .collect(),
            r: build(&d.r)?,
            big_d: d.big_d.as_ref().map(field),
            m: build(&d.m)?,
            k1: d.k1,
            h: build(&d.h)?,
            k2: d.k2,
        };
        Ok(spec
            .with_b(&field(&d.b), d.b0)
            .with_source(DataTerm::from_expr(d.f.clone(), d.big_f.clone()))
            .with_boundary(DataTerm::from_expr(d.g.clone(), d.big_g.clone()))
            .with_comparisons(comparisons)
            .with_mode(self.solver.mode))
    }

    /// Canonical text; [`parse_config`] of the result equals `self`.
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "{HEADER}");
        let _ = writeln!(o, "[domain]");
        let iv = self
            .intervals
            .iter()
            .map(|(a, b)| format!("[{a:?}, {b:?}]"))
            .collect::<Vec<_>>()
            .join(" x ");
        let _ = writeln!(o, "intervals = {iv}");
        let _ = writeln!(o, "resolution = {}", join_counts(&self.resolution));
        let _ = writeln!(o, "\n[family]");
        for (i, f) in self.family.iter().enumerate() {
            let _ = writeln!(o, "phi{} = {}", i + 1, f.to_text());
        }
        let _ = writeln!(o, "\n[flux]");
        match &self.flux {
            FluxSpec::Model => {
                let _ = writeln!(o, "kind = model");
            }
            FluxSpec::Custom(list) => {
                let _ = writeln!(o, "kind = custom");
                for (i, (a, aa)) in list.iter().enumerate() {
                    let _ = writeln!(o, "a{} = {a}", i + 1);
                    if let Some(aa) = aa {
                        let _ = writeln!(o, "A{} = {aa}", i + 1);
                    }
                }
            }
        }
        let d = &self.data;
        let _ = writeln!(o, "\n[data]");
        let _ = writeln!(o, "b = {}", d.b);
        let _ = writeln!(o, "b0 = {:?}", d.b0);
        let _ = writeln!(o, "f = {}", d.f);
        if let Some(e) = &d.big_f {
            let _ = writeln!(o, "F = {e}");
        }
        let _ = writeln!(o, "g = {}", d.g);
        if let Some(e) = &d.big_g {
            let _ = writeln!(o, "G = {e}");
        }
        for i in 0..d.p.len().max(d.c.len()).max(d.d.len()) {
            if let Some(Some(p)) = d.p.get(i) {
                let _ = writeln!(o, "P{} = {}", i + 1, p.to_text());
            }
            if let Some(Some(c)) = d.c.get(i) {
                let _ = writeln!(o, "c{} = {c:?}", i + 1);
            }
            if let Some(Some(e)) = d.d.get(i) {
                let _ = writeln!(o, "d{} = {e}", i + 1);
            }
        }
        let funcs = [("R", &d.r), ("M", &d.m), ("H", &d.h)];
        for (k, v) in funcs {
            if let Some(v) = v {
                let _ = writeln!(o, "{k} = {}", v.to_text());
            }
        }
        if let Some(e) = &d.big_d {
            let _ = writeln!(o, "D = {e}");
        }
        for (k, v) in [("k1", d.k1), ("k2", d.k2)] {
            if let Some(v) = v {
                let _ = writeln!(o, "{k} = {v:?}");
            }
        }
        if let Some(e) = &d.exact {
            let _ = writeln!(o, "u_exact = {e}");
        }
        let s = &self.solver;
        let _ = writeln!(o, "\n[solver]");
        let _ = writeln!(o, "grad_tol = {:?}", s.grad_tol);
        let _ = writeln!(o, "max_iters = {}", s.max_iters);
        let _ = writeln!(o, "memory = {}", s.memory);
        let _ = writeln!(o, "seed = {}", s.seed);
        let _ = writeln!(o, "mode = {}", s.mode);
        let _ = writeln!(o, "starts = {}", s.starts);
        let _ = writeln!(o, "test_fields = {}", s.test_fields);
        let p = &self.probe;
        let _ = writeln!(o, "\n[probe]");
        if let Some(x0) = &p.x0 {
            let _ = writeln!(
                o,
                "x0 = {}",
                x0.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
            );
        }
        let _ = writeln!(o, "s_grid = {:?}:{:?}:{}", p.s_min, p.s_max, p.s_count);
        let _ = writeln!(o, "trials = {}", p.trials);
        let _ = writeln!(o, "t_max = {:?}", p.t_max);
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(o, "\n[output]\ndir = {dir}");
        }
        o
    }
}

fn join_counts(c: &[usize]) -> String {
    c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("x")
}

/// Position of a value inside the document, for diagnostics.
#[derive(Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

fn syntax(pos: Pos, message: impl Into<String>) -> Error {
    Error::Syntax {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

fn expr_at(text: &str, pos: Pos) -> Result<Expr> {
    Expr::parse(text).map_err(|e| match e {
        Error::Syntax { column, message, .. } => syntax(
            Pos {
                line: pos.line,
                column: pos.column + column - 1,
            },
            message,
        ),
        other => other,
    })
}

fn number_at<T: std::str::FromStr>(text: &str, pos: Pos) -> Result<T> {
    text.trim()
        .parse::<T>()
        .map_err(|_| syntax(pos, format!("expected a number, found '{text}'")))
}

fn counts_at(text: &str, pos: Pos) -> Result<Vec<usize>> {
    text.split('x').map(|c| number_at::<usize>(c, pos)).collect()
}

fn function_at(text: &str, pos: Pos, allow_expr: bool) -> Result<FunctionSpec> {
    let Some((kind, payload)) = text.split_once(':') else {
        return Err(syntax(pos, "expected '<kind>: <payload>'"));
    };
    let offset = kind.chars().count() + 1;
    let lead = payload.chars().take_while(|c| c.is_whitespace()).count();
    let ppos = Pos {
        line: pos.line,
        column: pos.column + offset + lead,
    };
    let payload = payload.trim();
    match kind.trim() {
        "power" => Ok(FunctionSpec::Power(expr_at(payload, ppos)?)),
        "power-log" => Ok(FunctionSpec::PowerLog(expr_at(payload, ppos)?)),
        "tabulated" => {
            let Some((counts, values)) = payload.split_once(';') else {
                return Err(syntax(ppos, "tabulated payload is '<counts>; <values>'"));
            };
            let counts = counts_at(counts.trim(), ppos)?;
            let values = values
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|v| !v.is_empty())
                .map(|v| number_at::<f64>(v, ppos))
                .collect::<Result<Vec<_>>>()?;
            Ok(FunctionSpec::Tabulated { counts, values })
        }
        "expr" if allow_expr => Ok(FunctionSpec::Expr(expr_at(payload, ppos)?)),
        other => Err(syntax(pos, format!("unknown function kind '{other}'"))),
    }
}

fn indexed(key: &str, prefix: &str) -> Option<usize> {
    key.strip_prefix(prefix)?.parse::<usize>().ok().filter(|&i| i >= 1)
}

fn set_indexed<T>(v: &mut Vec<Option<T>>, i: usize, value: T) {
    if v.len() < i {
        v.resize_with(i, || None);
    }
    v[i - 1] = Some(value);
}

fn parse_intervals(text: &str, pos: Pos) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for part in text.split('x') {
        let p = part.trim();
        let inner = p
            .strip_prefix('[')
            .and_then(|p| p.strip_suffix(']'))
            .ok_or_else(|| syntax(pos, format!("expected '[a, b]', found '{p}'")))?;
        let (a, b) = inner.split_once(',').ok_or_else(|| syntax(pos, "expected '[a, b]'"))?;
        out.push((number_at(a, pos)?, number_at(b, pos)?));
    }
    Ok(out)
}

/// Parses and validates a problem file.
pub fn parse_config(text: &str) -> Result<Config> {
    let mut section = String::new();
    let mut header_seen = false;
    let mut intervals: Option<(Vec<(f64, f64)>, Pos)> = None;
    let mut resolution: Option<(Vec<usize>, Pos)> = None;
    let mut family: Vec<Option<(FunctionSpec, Pos)>> = Vec::new();
    let mut flux_kind: Option<(String, Pos)> = None;
    let mut a: Vec<Option<Expr>> = Vec::new();
    let mut big_a: Vec<Option<Expr>> = Vec::new();
    let mut data = DataSpec::default();
    let mut solver = SolverSection::default();
    let mut probe = ProbeSection::default();
    let mut output_dir = None;
    let mut exprs: Vec<(Expr, Pos, &'static str)> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.chars().take_while(|c| c.is_whitespace()).count();
        let lpos = Pos {
            line: line_no,
            column: indent + 1,
        };
        if !header_seen {
            if trimmed != HEADER {
                return Err(syntax(lpos, format!("expected header '{HEADER}'")));
            }
            header_seen = true;
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| syntax(lpos, "unterminated section header"))?;
            match name.trim() {
                s @ ("domain" | "family" | "flux" | "data" | "solver" | "probe" | "output") => section = s.to_string(),
                other => return Err(syntax(lpos, format!("unknown section '{other}'"))),
            }
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(syntax(lpos, "expected 'key = value'"));
        };
        let key = content[..eq].trim();
        let value_raw = &content[eq + 1..];
        let lead = value_raw.chars().take_while(|c| c.is_whitespace()).count();
        let vpos = Pos {
            line: line_no,
            column: content[..eq].chars().count() + 2 + lead,
        };
        let value = value_raw.trim();
        if value.is_empty() {
            return Err(syntax(vpos, format!("missing value for '{key}'")));
        }
        let unknown = || syntax(lpos, format!("unknown key '{key}' in [{section}]"));
        match section.as_str() {
            "domain" => match key {
                "intervals" => intervals = Some((parse_intervals(value, vpos)?, vpos)),
                "resolution" => resolution = Some((counts_at(value, vpos)?, vpos)),
                _ => return Err(unknown()),
            },
            "family" => {
                let i = indexed(key, "phi").ok_or_else(unknown)?;
                let f = function_at(value, vpos, false)?;
                set_indexed(&mut family, i, (f, vpos));
            }
            "flux" => {
                if key == "kind" {
                    flux_kind = Some((value.to_string(), vpos));
                } else if let Some(i) = indexed(key, "a") {
                    set_indexed(&mut a, i, expr_at(value, vpos)?);
                } else if let Some(i) = indexed(key, "A") {
                    set_indexed(&mut big_a, i, expr_at(value, vpos)?);
                } else {
                    return Err(unknown());
                }
            }
            "data" => match key {
                "b" => {
                    data.b = expr_at(value, vpos)?;
                    exprs.push((data.b.clone(), vpos, "b"));
                }
                "b0" => data.b0 = number_at(value, vpos)?,
                "f" => {
                    data.f = expr_at(value, vpos)?;
                    exprs.push((data.f.clone(), vpos, "f"));
                }
                "F" => data.big_f = Some(expr_at(value, vpos)?),
                "g" => {
                    data.g = expr_at(value, vpos)?;
                    exprs.push((data.g.clone(), vpos, "g"));
                }
                "G" => data.big_g = Some(expr_at(value, vpos)?),
                "R" => data.r = Some(function_at(value, vpos, true)?),
                "M" => data.m = Some(function_at(value, vpos, true)?),
                "H" => data.h = Some(function_at(value, vpos, true)?),
                "D" => data.big_d = Some(expr_at(value, vpos)?),
                "k1" => data.k1 = Some(number_at(value, vpos)?),
                "k2" => data.k2 = Some(number_at(value, vpos)?),
                "u_exact" => {
                    let e = expr_at(value, vpos)?;
                    exprs.push((e.clone(), vpos, "u_exact"));
                    data.exact = Some(e);
                }
                _ => {
                    if let Some(i) = indexed(key, "P") {
                        set_indexed(&mut data.p, i, function_at(value, vpos, true)?);
                    } else if let Some(i) = indexed(key, "c") {
                        set_indexed(&mut data.c, i, number_at(value, vpos)?);
                    } else if let Some(i) = indexed(key, "d") {
                        set_indexed(&mut data.d, i, expr_at(value, vpos)?);
                    } else {
                        return Err(unknown());
                    }
                }
            },
            "solver" => match key {
                "grad_tol" => solver.grad_tol = number_at(value, vpos)?,
                "max_iters" => solver.max_iters = number_at(value, vpos)?,
                "memory" => solver.memory = number_at(value, vpos)?,
                "seed" => solver.seed = number_at(value, vpos)?,
                "mode" => {
                    solver.mode = value
                        .parse()
                        .map_err(|_| syntax(vpos, format!("unknown mode '{value}'")))?
                }
                "starts" => solver.starts = number_at(value, vpos)?,
                "test_fields" => solver.test_fields = number_at(value, vpos)?,
                _ => return Err(unknown()),
            },
            "probe" => match key {
                "x0" => probe.x0 = Some(value.split(',').map(|v| number_at(v, vpos)).collect::<Result<_>>()?),
                "s_grid" => {
                    let parts: Vec<&str> = value.split(':').collect();
                    if parts.len() != 3 {
                        return Err(syntax(vpos, "s_grid is 'min:max:count'"));
                    }
                    probe.s_min = number_at(parts[0], vpos)?;
                    probe.s_max = number_at(parts[1], vpos)?;
                    probe.s_count = number_at(parts[2], vpos)?;
                }
                "trials" => probe.trials = number_at(value, vpos)?,
                "t_max" => probe.t_max = number_at(value, vpos)?,
                _ => return Err(unknown()),
            },
            "output" => match key {
                "dir" => output_dir = Some(value.to_string()),
                _ => return Err(unknown()),
            },
            _ => return Err(syntax(lpos, "key outside of a section")),
        }
    }
    if !header_seen {
        return Err(syntax(
            Pos { line: 1, column: 1 },
            format!("expected header '{HEADER}'"),
        ));
    }
    let (intervals, ipos) = intervals.ok_or_else(|| Error::Semantic("[domain] intervals missing".into()))?;
    let (resolution, rpos) = resolution.ok_or_else(|| Error::Semantic("[domain] resolution missing".into()))?;
    let n = intervals.len();
    if n < 2 {
        return Err(Error::Semantic(format!(
            "line {}: the domain needs at least two axes",
            ipos.line
        )));
    }
    if resolution.len() != n {
        return Err(Error::Semantic(format!(
            "line {}: resolution has {} axes but the domain has {n}",
            rpos.line,
            resolution.len()
        )));
    }
    if let Some(&r) = resolution.iter().find(|&&r| r < 3) {
        return Err(Error::Semantic(format!(
            "line {}: resolution {r} is below 3 nodes per axis",
            rpos.line
        )));
    }
    if let Some((a, b)) = intervals.iter().find(|(a, b)| !(b > a)) {
        return Err(Error::Semantic(format!(
            "line {}: empty interval [{a}, {b}]",
            ipos.line
        )));
    }
    if family.len() != n || family.iter().any(Option::is_none) {
        return Err(Error::Semantic(format!(
            "[family] needs phi1..phi{n} for a {n}-dimensional domain"
        )));
    }
    let family: Vec<(FunctionSpec, Pos)> = family.into_iter().flatten().collect();
    let corners = corners(&intervals);
    for (i, (f, pos)) in family.iter().enumerate() {
        if let Some(e) = f.exponent() {
            check_coords(e, n, *pos)?;
            for x in &corners {
                let p = e
                    .eval(x, 0.0)
                    .map_err(|err| Error::Semantic(format!("line {}: phi{}: {err}", pos.line, i + 1)))?;
                if !(p > 1.0) {
                    return Err(Error::Semantic(format!(
                        "line {}: exponent of phi{} is {p} at {x:?}; N-functions need exponents above 1",
                        pos.line,
                        i + 1
                    )));
                }
            }
        }
        if let FunctionSpec::Tabulated { counts, values } = f {
            if counts.len() != n || counts.iter().product::<usize>() != values.len() {
                return Err(Error::Semantic(format!(
                    "line {}: table shape does not match its values",
                    pos.line
                )));
            }
            if let Some(v) = values.iter().find(|v| !(**v > 1.0)) {
                return Err(Error::Semantic(format!(
                    "line {}: tabulated exponent {v} is not above 1",
                    pos.line
                )));
            }
        }
    }
    let flux = match flux_kind.as_ref().map(|(k, p)| (k.as_str(), *p)) {
        None | Some(("model", _)) if a.is_empty() => FluxSpec::Model,
        None | Some(("custom", _)) => {
            if a.len() != n || a.iter().any(Option::is_none) {
                return Err(Error::Semantic(format!("[flux] custom needs a1..a{n}")));
            }
            big_a.resize_with(n, || None);
            FluxSpec::Custom(a.into_iter().flatten().zip(big_a).collect())
        }
        Some(("model", p)) => {
            return Err(Error::Semantic(format!(
                "line {}: model flux takes no a_i entries",
                p.line
            )))
        }
        Some((other, p)) => return Err(syntax(p, format!("unknown flux kind '{other}'"))),
    };
    if let FluxSpec::Custom(list) = &flux {
        for (e, aa) in list {
            check_coords(e, n, ipos)?;
            if let Some(aa) = aa {
                check_coords(aa, n, ipos)?;
            }
        }
    }
    for (e, pos, name) in &exprs {
        check_coords(e, n, *pos)?;
        for x in &corners {
            let v = e
                .eval(x, 1.0)
                .map_err(|err| Error::Semantic(format!("line {}: {name}: {err}", pos.line)))?;
            if !v.is_finite() {
                return Err(Error::Semantic(format!(
                    "line {}: {name} is not finite at {x:?}",
                    pos.line
                )));
            }
        }
    }
    if data.p.len() > n || data.c.len() > n || data.d.len() > n {
        return Err(Error::Semantic(format!("[data] P_i, c_i, d_i are indexed 1..{n}")));
    }
    if let Some(x0) = &probe.x0 {
        if x0.len() != n {
            return Err(Error::Semantic(format!(
                "[probe] x0 has {} coordinates, expected {n}",
                x0.len()
            )));
        }
    }
    if !(solver.grad_tol > 0.0) || solver.memory == 0 {
        return Err(Error::Semantic(
            "[solver] grad_tol must be positive and memory nonzero".into(),
        ));
    }
    if !(probe.s_min > 0.0 && probe.s_max > probe.s_min && probe.s_count >= 2) {
        return Err(Error::Semantic(
            "[probe] s_grid needs 0 < min < max and count >= 2".into(),
        ));
    }
    Ok(Config {
        intervals,
        resolution,
        family: family.into_iter().map(|(f, _)| f).collect(),
        flux,
        data,
        solver,
        probe,
        output_dir,
    })
}

fn check_coords(e: &Expr, n: usize, pos: Pos) -> Result<()> {
    if e.max_coord() > n {
        return Err(Error::Semantic(format!(
            "line {}: '{e}' uses x{} on a {n}-dimensional domain",
            pos.line,
            e.max_coord()
        )));
    }
    Ok(())
}

fn corners(intervals: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let n = intervals.len();
    (0..1usize << n)
        .map(|mask| {
            intervals
                .iter()
                .enumerate()
                .map(|(i, (a, b))| if mask >> i & 1 == 1 { *b } else { *a })
                .collect()
        })
        .collect()
}
