//! Batch driver: configuration, the decision pipeline and its report files.
//!
//! A run validates the hypotheses, minimizes `J` and `I` over `W`, decides
//! the branch, runs the minimization or the mountain-pass search, verifies
//! the candidate and writes `report.json`, `solution.csv` and (mountain pass)
//! `family.csv` into the output directory.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::conditions::{
    check_cor1, check_cor2, classify_alternative, default_cor1_scan, AlternativeReport, Branch,
    CorollaryReport, PwVariant,
};
use crate::error::{Result, SolverError};
use crate::expr::{Expr, Var};
use crate::grid::{write_path_csv, PeriodicGrid, PeriodicPath};
use crate::mountainpass::{
    select_endpoints, string_search, write_family_csv, Endpoints, MountainPassResult, PathFamily,
    StringOptions,
};
use crate::optimize::{minimize_over_k, DescentOptions};
use crate::problem::{
    relativistic, validate_hypotheses, FieldMap, Forcing, HypothesisReport, Nonlinearity, Preset,
    ProblemSpec, ScanConfig, ValidationConfig,
};
use crate::verify::{verify_candidate, SolutionReport, Verdict, VerifyOptions};

pub const SCHEMA_VERSION: &str = "1";
pub const DEFAULT_FORCING: &str = "0.1*sin(2*pi*t/T)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Mode {
    #[default]
    #[serde(rename = "auto")]
    Auto,
    #[serde(rename = "minimize")]
    Minimize,
    #[serde(rename = "mountainpass")]
    MountainPass,
    #[serde(rename = "conditions-only")]
    ConditionsOnly,
}

impl FromStr for Mode {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Mode::Auto),
            "minimize" => Ok(Mode::Minimize),
            "mountainpass" => Ok(Mode::MountainPass),
            "conditions-only" => Ok(Mode::ConditionsOnly),
            _ => Err(SolverError::Config(format!(
                "unknown mode `{s}` (expected auto, minimize, mountainpass or conditions-only)"
            ))),
        }
    }
}

fn two_pi() -> f64 {
    2.0 * PI
}

fn one() -> f64 {
    1.0
}

fn relativistic_name() -> String {
    "relativistic".into()
}

/// The instance: a preset nonlinearity or expressions in `s`, `t`, `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub preset: Option<String>,
    /// `A` for the classical pendulum preset.
    #[serde(default = "one")]
    pub amplitude: f64,
    pub f: Option<String>,
    #[serde(rename = "F")]
    pub primitive: Option<String>,
    pub alpha: Option<f64>,
    /// Forcing in `t` and `T`; defaults to `0.1*sin(2*pi*t/T)`.
    pub h: Option<String>,
    #[serde(rename = "T", default = "two_pi")]
    pub period: f64,
    #[serde(default = "relativistic_name")]
    pub phi: String,
    #[serde(default = "one")]
    pub a: f64,
    pub k: Option<f64>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            preset: None,
            amplitude: 1.0,
            f: None,
            primitive: None,
            alpha: None,
            h: None,
            period: two_pi(),
            phi: relativistic_name(),
            a: 1.0,
            k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "N", default = "GridConfig::default_n")]
    pub n: usize,
    #[serde(default = "GridConfig::default_margin")]
    pub margin: f64,
}

impl GridConfig {
    fn default_n() -> usize {
        256
    }

    fn default_margin() -> f64 {
        crate::grid::DEFAULT_MARGIN
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n: Self::default_n(),
            margin: Self::default_margin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub rounds: usize,
    pub string_images: usize,
    pub string_grad_tol: f64,
    pub string_max_iters: usize,
    pub probes: usize,
    pub el_tol: Option<f64>,
    pub ci_tol: f64,
    pub tol_border: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let d = DescentOptions::default();
        let s = StringOptions::default();
        Tolerances {
            grad_tol: d.grad_tol,
            max_iters: d.max_iters,
            restarts: d.restarts,
            rounds: d.rounds,
            string_images: s.images,
            string_grad_tol: s.grad_tol,
            string_max_iters: s.max_iters,
            probes: 1000,
            el_tol: None,
            ci_tol: 1e-8,
            tol_border: crate::conditions::DEFAULT_TOL_BORDER,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("solve-output")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Command-line overrides applied on top of a parsed configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub preset: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid_n: Option<usize>,
}

fn config_err(msg: impl Into<String>) -> SolverError {
    SolverError::Config(msg.into())
}

/// Strict parse of a TOML document, or JSON when the text starts with `{`.
/// Unknown and duplicate keys are errors; defaults are filled in.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg: RunConfig = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| config_err(format!("invalid JSON config: {e}")))?
    } else {
        toml::from_str(text).map_err(|e| config_err(format!("invalid TOML config: {e}")))?
    };
    cfg.resolve()?;
    Ok(cfg)
}

impl RunConfig {
    /// Fills remaining defaults and checks invariants.
    pub fn resolve(&mut self) -> Result<()> {
        let p = &mut self.problem;
        if p.h.is_none() {
            p.h = Some(DEFAULT_FORCING.into());
        }
        if p.k.is_none() && p.phi == "relativistic" {
            p.k = Some(0.25);
        }
        self.validate()
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(m) = o.mode {
            self.mode = m;
        }
        if let Some(p) = &o.preset {
            self.problem.preset = Some(p.clone());
            self.problem.f = None;
            self.problem.primitive = None;
            self.problem.alpha = None;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.grid_n {
            self.grid.n = n;
        }
        self.resolve()
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if !(p.period > 0.0 && p.period.is_finite()) {
            return Err(config_err(format!(
                "problem.T = {} must be positive",
                p.period
            )));
        }
        if !(p.a > 0.0 && p.a.is_finite()) {
            return Err(config_err(format!("problem.a = {} must be positive", p.a)));
        }
        if p.phi != "relativistic" {
            return Err(config_err(format!(
                "problem.phi = `{}` is not a known operator (expected relativistic)",
                p.phi
            )));
        }
        if let Some(k) = p.k {
            if !(k > 0.0) {
                return Err(config_err(format!("problem.k = {k} must be positive")));
            }
        }
        if let Some(name) = &p.preset {
            if Preset::from_name(name, p.amplitude).is_none() {
                return Err(config_err(format!(
                    "problem.preset = `{name}` is unknown (expected one of {})",
                    Preset::NAMES.join(", ")
                )));
            }
            if p.f.is_some() || p.primitive.is_some() {
                return Err(config_err(
                    "problem.preset and problem.f are mutually exclusive",
                ));
            }
        } else if p.primitive.is_some() && p.f.is_none() {
            return Err(config_err("problem.F requires problem.f"));
        }
        if self.grid.n < 8 {
            return Err(config_err(format!(
                "grid.N = {} must be at least 8",
                self.grid.n
            )));
        }
        if !(self.grid.margin > 0.0 && self.grid.margin <= 0.1) {
            return Err(config_err(format!(
                "grid.margin = {} must lie in (0, 0.1]",
                self.grid.margin
            )));
        }
        let t = &self.tolerances;
        let positive = [
            ("grad_tol", t.grad_tol),
            ("string_grad_tol", t.string_grad_tol),
            ("ci_tol", t.ci_tol),
            ("tol_border", t.tol_border),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err(format!(
                    "tolerances.{key} = {v} must be positive"
                )));
            }
        }
        if t.string_images < 9 {
            return Err(config_err(format!(
                "tolerances.string_images = {} must be at least 9",
                t.string_images
            )));
        }
        if t.max_iters == 0 || t.rounds == 0 || t.string_max_iters == 0 {
            return Err(config_err("iteration limits and rounds must be positive"));
        }
        Ok(())
    }

    pub fn descent_options(&self) -> DescentOptions {
        let t = &self.tolerances;
        DescentOptions {
            max_iters: t.max_iters,
            grad_tol: t.grad_tol,
            restarts: t.restarts,
            rounds: t.rounds,
            seed: self.seed,
            ..Default::default()
        }
    }

    pub fn string_options(&self) -> StringOptions {
        let t = &self.tolerances;
        StringOptions {
            images: t.string_images,
            grad_tol: t.string_grad_tol,
            max_iters: t.string_max_iters,
            ..Default::default()
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        let t = &self.tolerances;
        VerifyOptions {
            probes: t.probes,
            seed: self.seed,
            el_tolerance: t.el_tol,
            ci_tolerance: t.ci_tol,
        }
    }
}

fn parse_expr(key: &str, text: &str, vars: &[Var]) -> Result<Expr> {
    Expr::parse(text, vars).map_err(|e| config_err(format!("problem.{key}: {e}")))
}

/// Builds the instance described by a resolved configuration.
pub fn build_problem(cfg: &ProblemConfig) -> Result<ProblemSpec> {
    let period = cfg.period;
    let mut phi_model = relativistic(cfg.a);
    if cfg.k.is_some() {
        phi_model.k = cfg.k;
    }
    let h_text = cfg.h.clone().unwrap_or_else(|| DEFAULT_FORCING.into());
    let h = parse_expr("h", &h_text, &[Var::T, Var::Period])?;
    let forcing = Forcing::from_map(h_text, Arc::new(move |t| h.eval(0.0, t, period)));
    let nonlinearity = match (&cfg.preset, &cfg.f) {
        (Some(name), _) => Preset::from_name(name, cfg.amplitude)
            .ok_or_else(|| config_err(format!("unknown preset `{name}`")))?
            .nonlinearity(),
        (None, Some(f_text)) => {
            let vars = [Var::S, Var::T, Var::Period];
            let f = parse_expr("f", f_text, &vars)?;
            let f_map: FieldMap = Arc::new(move |t, s| f.eval(s, t, period));
            let primitive = match &cfg.primitive {
                Some(text) => {
                    let e = parse_expr("F", text, &vars)?;
                    Some(Arc::new(move |t, s| e.eval(s, t, period)) as FieldMap)
                }
                None => None,
            };
            Nonlinearity::estimated(
                f_text.clone(),
                f_map,
                primitive,
                cfg.alpha,
                period,
                &ScanConfig::default(),
            )
            .map_err(|e| config_err(format!("problem.f: {e}")))?
        }
        (None, None) => return Err(config_err("problem needs either `preset` or `f`")),
    };
    ProblemSpec::new(period, phi_model, nonlinearity, forcing)
        .map_err(|e| config_err(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateKind {
    Minimum,
    MountainPass,
}

/// A located critical point with how it was found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPointReport {
    pub kind: CandidateKind,
    pub value: f64,
    pub mean: f64,
    pub max_abs_derivative: f64,
    pub projected_grad_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoints: Option<Endpoints>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mountain_pass: Option<MountainPassResult>,
    pub verification: SolutionReport,
    #[serde(skip_serializing)]
    pub path: PeriodicPath,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub schema: &'static str,
    pub package: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cor2Reports {
    pub unscaled: CorollaryReport,
    pub sharp_constant: CorollaryReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub versions: Versions,
    pub config: RunConfig,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub notes: Vec<String>,
    pub hypotheses: Option<HypothesisReport>,
    pub m: Option<f64>,
    pub beta: Option<f64>,
    pub alpha_t: Option<f64>,
    pub alternative: Option<AlternativeReport>,
    pub corollary1: Option<CorollaryReport>,
    pub corollary2: Option<Cor2Reports>,
    /// The primary candidate; in the borderline case the minimum.
    pub result: Option<CriticalPointReport>,
    /// The mountain-pass candidate in the borderline case.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub secondary: Option<CriticalPointReport>,
    /// Copy of `result.verification`.
    pub verification: Option<SolutionReport>,
    /// Wall-clock milliseconds per stage; the only nondeterministic field.
    pub timings: BTreeMap<String, f64>,
    #[serde(skip_serializing)]
    pub family: Option<PathFamily>,
}

impl RunReport {
    fn new(config: &RunConfig) -> Self {
        RunReport {
            versions: Versions {
                schema: SCHEMA_VERSION,
                package: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
            },
            config: config.clone(),
            status: RunStatus::Error,
            error: None,
            notes: Vec::new(),
            hypotheses: None,
            m: None,
            beta: None,
            alpha_t: None,
            alternative: None,
            corollary1: None,
            corollary2: None,
            result: None,
            secondary: None,
            verification: None,
            timings: BTreeMap::new(),
            family: None,
        }
    }

    /// 0 on pass, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.status == RunStatus::Pass {
            0
        } else {
            1
        }
    }
}

fn timed<T>(
    timings: &mut BTreeMap<String, f64>,
    stage: &str,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let start = Instant::now();
    let out = f();
    timings.insert(stage.into(), start.elapsed().as_secs_f64() * 1e3);
    out
}

struct Context<'a> {
    spec: &'a ProblemSpec,
    grid: &'a PeriodicGrid,
    config: &'a RunConfig,
    w_tilde: PeriodicPath,
    i_min: PeriodicPath,
    beta: f64,
}

fn run_minimum(cx: &Context, timings: &mut BTreeMap<String, f64>) -> Result<CriticalPointReport> {
    let r = timed(timings, "minimize_over_k", || {
        minimize_over_k(
            cx.spec,
            cx.grid,
            &cx.config.descent_options(),
            Some(&cx.i_min),
        )
    })?;
    let verification = timed(timings, "verify_minimum", || {
        verify_candidate(
            cx.spec,
            cx.grid,
            &r.path,
            &cx.config.verify_options(),
            Some(&cx.w_tilde),
        )
    })?;
    Ok(CriticalPointReport {
        kind: CandidateKind::Minimum,
        value: r.value,
        mean: r.path.mean,
        max_abs_derivative: r.path.max_abs_derivative(),
        projected_grad_norm: r.projected_grad_norm,
        converged: r.converged,
        iterations: r.iterations,
        endpoints: None,
        mountain_pass: None,
        verification,
        path: r.path,
    })
}

fn run_mountain_pass(
    cx: &Context,
    timings: &mut BTreeMap<String, f64>,
) -> Result<(CriticalPointReport, PathFamily)> {
    let e = timed(timings, "select_endpoints", || {
        select_endpoints(cx.spec, cx.grid, &cx.w_tilde, cx.beta)
    })?;
    let mut mp = timed(timings, "string_search", || {
        string_search(cx.spec, cx.grid, &e.a, &e.b, &cx.config.string_options())
    })?;
    let verification = timed(timings, "verify_saddle", || {
        verify_candidate(
            cx.spec,
            cx.grid,
            &mp.saddle,
            &cx.config.verify_options(),
            Some(&cx.w_tilde),
        )
    })?;
    let family = std::mem::replace(
        &mut mp.family,
        PathFamily {
            images: Vec::new(),
            values: Vec::new(),
        },
    );
    Ok((
        CriticalPointReport {
            kind: CandidateKind::MountainPass,
            value: mp.c_hat,
            mean: mp.saddle.mean,
            max_abs_derivative: mp.saddle.max_abs_derivative(),
            projected_grad_norm: mp.saddle_grad_norm,
            converged: mp.converged,
            iterations: mp.string_iterations,
            endpoints: Some(e),
            path: mp.saddle.clone(),
            mountain_pass: Some(mp),
            verification,
        },
        family,
    ))
}

fn execute(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    config: &RunConfig,
    report: &mut RunReport,
) -> Result<()> {
    let timings = &mut report.timings;
    report.hypotheses = Some(timed(timings, "hypotheses", || {
        validate_hypotheses(spec, &ValidationConfig::default())
    })?);
    let alt = timed(timings, "classify_alternative", || {
        classify_alternative(
            spec,
            grid,
            &config.descent_options(),
            config.tolerances.tol_border,
        )
    })?;
    report.m = Some(alt.report.m);
    report.beta = Some(alt.report.beta);
    report.alpha_t = Some(alt.report.alpha_t);
    report.alternative = Some(alt.report.clone());
    report.corollary1 = Some(timed(timings, "corollary1", || {
        check_cor1(spec, grid, &alt.j_min.path, &default_cor1_scan())
    })?);
    match (
        check_cor2(spec, grid, alt.report.m, PwVariant::Unscaled),
        check_cor2(spec, grid, alt.report.m, PwVariant::SharpConstant),
    ) {
        (Ok(unscaled), Ok(sharp_constant)) => {
            report.corollary2 = Some(Cor2Reports {
                unscaled,
                sharp_constant,
            })
        }
        (Err(e), _) | (_, Err(e)) => report.notes.push(format!("corollary2 skipped: {e}")),
    }
    let cx = Context {
        spec,
        grid,
        config,
        w_tilde: alt.j_min.path.clone(),
        i_min: alt.i_min.path.clone(),
        beta: alt.report.beta,
    };
    let (minimum, mountain) = match config.mode {
        Mode::ConditionsOnly => (false, false),
        Mode::Minimize => (true, false),
        Mode::MountainPass => (false, true),
        Mode::Auto => match alt.report.branch {
            Branch::Minimum => (true, false),
            Branch::MountainPass => (false, true),
            Branch::Borderline => (true, true),
        },
    };
    if minimum {
        report.result = Some(run_minimum(&cx, &mut report.timings)?);
    }
    if mountain {
        match run_mountain_pass(&cx, &mut report.timings) {
            Ok((r, fam)) => {
                report.family = Some(fam);
                if report.result.is_none() {
                    report.result = Some(r);
                } else {
                    report.secondary = Some(r);
                }
            }
            // borderline: the minimum is the answer, the pass search is a bonus
            Err(e) if minimum => report
                .notes
                .push(format!("mountain-pass search skipped: {e}")),
            Err(e) => return Err(e),
        }
    }
    report.verification = report.result.as_ref().map(|r| r.verification.clone());
    Ok(())
}

/// Runs the pipeline and writes the output files. Configuration problems are
/// returned as [`SolverError::Config`]; pipeline failures are recorded in the
/// report with status `error`.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let mut config = config.clone();
    config.resolve()?;
    let spec = build_problem(&config.problem)?;
    let grid = PeriodicGrid::with_margin(config.grid.n, spec.period, config.grid.margin)
        .map_err(|e| config_err(e.to_string()))?;
    let mut report = RunReport::new(&config);
    match execute(&spec, &grid, &config, &mut report) {
        Err(e) => {
            report.error = Some(e.to_string());
            report.status = RunStatus::Error;
        }
        Ok(()) => {
            let all_pass = [&report.result, &report.secondary]
                .iter()
                .filter_map(|r| r.as_ref())
                .all(|r| r.verification.verdict == Verdict::Pass);
            report.status = if all_pass {
                RunStatus::Pass
            } else {
                RunStatus::Fail
            };
        }
    }
    write_outputs(&report, &grid)?;
    Ok(report)
}

fn write_outputs(report: &RunReport, grid: &PeriodicGrid) -> Result<()> {
    let dir = &report.config.output_dir;
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).map_err(|e| SolverError::Io(e.to_string()))?;
    fs::write(dir.join("report.json"), json + "\n")?;
    if let Some(r) = &report.result {
        let mut out = BufWriter::new(fs::File::create(dir.join("solution.csv"))?);
        write_path_csv(&mut out, &r.path, grid)?;
    }
    if let Some(fam) = &report.family {
        let mut out = BufWriter::new(fs::File::create(dir.join("family.csv"))?);
        write_family_csv(&mut out, fam, grid)?;
    }
    Ok(())
}

/// Exit code for a finished [`run`] call: 2 for configuration errors.
pub fn exit_code(outcome: &Result<RunReport>) -> i32 {
    match outcome {
        Ok(r) => r.exit_code(),
        Err(SolverError::Config(_)) => 2,
        Err(_) => 1,
    }
}
