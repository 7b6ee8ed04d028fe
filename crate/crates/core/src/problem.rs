//! Problem instances: the singular operator, the nonlinearity, the forcing,
//! built-in presets and numeric checks of the standing hypotheses.
//!
//! The hypotheses are asymptotic statements. Everything here samples them on
//! finite grids, so a passing report means "numerically consistent", never
//! "proved".

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Result, SolverError};
use crate::quadrature::adaptive_simpson;

pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type FieldMap = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// The singular operator `u -> (phi(u'))'` with potential `Phi`, `Phi' = phi`,
/// defined for `|u'| <= a`.
#[derive(Clone)]
pub struct PhiModel {
    pub name: String,
    /// Half-width of the derivative constraint.
    pub a: f64,
    potential: ScalarMap,
    phi: ScalarMap,
    phi_inv: ScalarMap,
    dphi: Option<ScalarMap>,
    /// Coefficient with `Phi(s) >= k s^2` on `[-a, a]`, when known.
    pub k: Option<f64>,
}

impl PhiModel {
    pub fn new(
        name: impl Into<String>,
        a: f64,
        potential: ScalarMap,
        phi: ScalarMap,
        phi_inv: ScalarMap,
        k: Option<f64>,
    ) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(SolverError::InvalidProblem(format!(
                "operator half-width a = {a} must be positive"
            )));
        }
        Ok(PhiModel {
            name: name.into(),
            a,
            potential,
            phi,
            phi_inv,
            dphi: None,
            k,
        })
    }

    /// Attaches a closed-form `phi'`; otherwise it is taken by central differences.
    pub fn with_derivative(mut self, dphi: ScalarMap) -> Self {
        self.dphi = Some(dphi);
        self
    }

    /// `Phi(s)`.
    pub fn potential(&self, s: f64) -> f64 {
        (self.potential)(s)
    }

    pub fn phi(&self, s: f64) -> f64 {
        (self.phi)(s)
    }

    pub fn phi_inv(&self, y: f64) -> f64 {
        (self.phi_inv)(y)
    }

    /// `phi'(s)` for `|s| < a`.
    pub fn dphi(&self, s: f64) -> f64 {
        match &self.dphi {
            Some(d) => d(s),
            None => {
                let room = self.a - s.abs();
                let step = (1e-6 * self.a).min(0.5 * room);
                (self.phi(s + step) - self.phi(s - step)) / (2.0 * step)
            }
        }
    }
}

impl fmt::Debug for PhiModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiModel")
            .field("name", &self.name)
            .field("a", &self.a)
            .field("k", &self.k)
            .finish()
    }
}

/// The relativistic operator with `a = 1`: `Phi(s) = 1 - sqrt(1 - s^2)`,
/// `phi(s) = s / sqrt(1 - s^2)`, `k = 1/4`.
pub fn builtin_relativistic() -> PhiModel {
    relativistic(1.0)
}

/// Relativistic operator with speed limit `c`:
/// `Phi(s) = c^2 (1 - sqrt(1 - s^2/c^2))`, which still satisfies `Phi(s) >= s^2 / 4`.
pub fn relativistic(c: f64) -> PhiModel {
    let c2 = c * c;
    PhiModel {
        name: "relativistic".into(),
        a: c,
        potential: Arc::new(move |s: f64| {
            let x = (s * s / c2).min(1.0);
            // 1 - sqrt(1 - x) without cancellation
            c2 * x / (1.0 + (1.0 - x).sqrt())
        }),
        phi: Arc::new(move |s: f64| s / (1.0 - s * s / c2).sqrt()),
        phi_inv: Arc::new(move |y: f64| y / (1.0 + y * y / c2).sqrt()),
        dphi: Some(Arc::new(move |s: f64| (1.0 - s * s / c2).powf(-1.5))),
        k: Some(0.25),
    }
}

/// The nonlinearity `f(t, s)` with primitive `F(t, s) = int_0^s f(t, r) dr`.
#[derive(Clone)]
pub struct Nonlinearity {
    pub name: String,
    f: FieldMap,
    primitive: FieldMap,
    /// Common limit of `F(t, s)` as `|s| -> inf`.
    pub alpha: f64,
    /// Bound on `|f| + |F|` over the sampled domain.
    pub c_bound: f64,
    /// Infimum of `F`.
    pub f0: f64,
}

impl Nonlinearity {
    pub fn new(
        name: impl Into<String>,
        f: FieldMap,
        primitive: FieldMap,
        alpha: f64,
        c_bound: f64,
        f0: f64,
    ) -> Self {
        Nonlinearity {
            name: name.into(),
            f,
            primitive,
            alpha,
            c_bound,
            f0,
        }
    }

    /// Builds a nonlinearity from user maps, estimating `alpha` (unless given),
    /// `F0` and the bound `C` by scanning. A missing primitive is built by
    /// quadrature of `f`.
    pub fn estimated(
        name: impl Into<String>,
        f: FieldMap,
        primitive: Option<FieldMap>,
        alpha: Option<f64>,
        period: f64,
        cfg: &ScanConfig,
    ) -> Result<Self> {
        let primitive = primitive.unwrap_or_else(|| primitive_by_quadrature(f.clone()));
        let mut nl = Nonlinearity::new(name, f, primitive, 0.0, 0.0, 0.0);
        let est = estimate_alpha_f0(&nl, period, cfg)?;
        nl.alpha = alpha.unwrap_or(est.alpha_hat);
        nl.f0 = est.f0_hat;
        nl.c_bound = est.c_hat;
        Ok(nl)
    }

    pub fn f(&self, t: f64, s: f64) -> f64 {
        (self.f)(t, s)
    }

    /// `F(t, s)`.
    pub fn primitive(&self, t: f64, s: f64) -> f64 {
        (self.primitive)(t, s)
    }

    /// `df/ds` by central differences.
    pub fn df(&self, t: f64, s: f64) -> f64 {
        let step = 1e-5 * (1.0 + s.abs());
        (self.f(t, s + step) - self.f(t, s - step)) / (2.0 * step)
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("c_bound", &self.c_bound)
            .field("f0", &self.f0)
            .finish()
    }
}

/// `F(t, s) = int_0^s f(t, r) dr` by adaptive Simpson on geometric panels
/// `[0, 1], [1, 2], [2, 4], ...` (structure concentrates near the origin).
pub fn primitive_by_quadrature(f: FieldMap) -> FieldMap {
    Arc::new(move |t: f64, s: f64| {
        let sign = s.signum();
        let end = s.abs();
        let g = |r: f64| sign * f(t, sign * r);
        let mut total = 0.0;
        let mut lo = 0.0;
        let mut hi = 1.0f64.min(end);
        while lo < end {
            total += adaptive_simpson(&g, lo, hi, 1e-12 * (hi - lo).max(1.0));
            lo = hi;
            hi = (2.0 * hi).min(end);
        }
        total
    })
}

/// Named presets for the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Preset {
    /// `f(s) = A sin(s)`, the classical pendulum nonlinearity (not strongly resonant).
    ClassicPendulum { amplitude: f64 },
    /// `f(s) = 2s / (1 + s^2)^2`, `F(s) = 1 - 1/(1 + s^2)`, `alpha = 1`.
    AttractiveResonance,
    /// `f(s) = -2s / (1 + s^2)^2`, `F(s) = 1/(1 + s^2) - 1`, `alpha = -1`.
    RepulsiveResonance,
}

impl Preset {
    pub const NAMES: [&'static str; 3] = [
        "relativistic-pendulum-classic-f",
        "strong-resonance-attractive",
        "strong-resonance-repulsive",
    ];

    pub fn from_name(name: &str, amplitude: f64) -> Option<Self> {
        match name {
            "relativistic-pendulum-classic-f" => Some(Preset::ClassicPendulum { amplitude }),
            "strong-resonance-attractive" => Some(Preset::AttractiveResonance),
            "strong-resonance-repulsive" => Some(Preset::RepulsiveResonance),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::ClassicPendulum { .. } => Self::NAMES[0],
            Preset::AttractiveResonance => Self::NAMES[1],
            Preset::RepulsiveResonance => Self::NAMES[2],
        }
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        match *self {
            Preset::ClassicPendulum { amplitude } => {
                let amp = amplitude;
                Nonlinearity::new(
                    self.name(),
                    Arc::new(move |_t, s: f64| amp * s.sin()),
                    Arc::new(move |_t, s: f64| amp * (1.0 - s.cos())),
                    // F has no limit at infinity; its average value stands in.
                    amp,
                    3.0 * amp.abs(),
                    amp.min(0.0) * 2.0,
                )
            }
            Preset::AttractiveResonance => Nonlinearity::new(
                self.name(),
                Arc::new(|_t, s: f64| 2.0 * s / (1.0 + s * s).powi(2)),
                Arc::new(|_t, s: f64| s * s / (1.0 + s * s)),
                1.0,
                // sup |f| = 3 sqrt(3) / 8 at s = 1/sqrt(3); sup |F| = 1
                1.0 + 3.0 * 3f64.sqrt() / 8.0,
                0.0,
            ),
            Preset::RepulsiveResonance => Nonlinearity::new(
                self.name(),
                Arc::new(|_t, s: f64| -2.0 * s / (1.0 + s * s).powi(2)),
                Arc::new(|_t, s: f64| -s * s / (1.0 + s * s)),
                -1.0,
                1.0 + 3.0 * 3f64.sqrt() / 8.0,
                -1.0,
            ),
        }
    }
}

/// The forcing `h` and its primitive `H(t) = int_0^t h`.
#[derive(Clone)]
pub struct Forcing {
    pub description: String,
    h: ScalarMap,
    primitive: ScalarMap,
}

impl Forcing {
    pub fn new(description: impl Into<String>, h: ScalarMap, primitive: ScalarMap) -> Self {
        Forcing {
            description: description.into(),
            h,
            primitive,
        }
    }

    /// Primitive by adaptive quadrature.
    pub fn from_map(description: impl Into<String>, h: ScalarMap) -> Self {
        let hq = h.clone();
        let primitive: ScalarMap =
            Arc::new(move |t: f64| adaptive_simpson(&|x| hq(x), 0.0, t, 1e-13));
        Forcing::new(description, h, primitive)
    }

    pub fn zero() -> Self {
        Forcing::new("0", Arc::new(|_| 0.0), Arc::new(|_| 0.0))
    }

    /// `h(t) = amp * sin(omega t)`.
    pub fn sine(amp: f64, omega: f64) -> Self {
        Forcing::new(
            format!("{amp}*sin({omega}*t)"),
            Arc::new(move |t: f64| amp * (omega * t).sin()),
            Arc::new(move |t: f64| amp * (1.0 - (omega * t).cos()) / omega),
        )
    }

    /// `h(t) = amp * cos(omega t)`.
    pub fn cosine(amp: f64, omega: f64) -> Self {
        Forcing::new(
            format!("{amp}*cos({omega}*t)"),
            Arc::new(move |t: f64| amp * (omega * t).cos()),
            Arc::new(move |t: f64| amp * (omega * t).sin() / omega),
        )
    }

    pub fn h(&self, t: f64) -> f64 {
        (self.h)(t)
    }

    /// `H(t)`.
    pub fn primitive(&self, t: f64) -> f64 {
        (self.primitive)(t)
    }

    /// `sup |h|` sampled on `samples` equispaced points of `[0, T]`.
    pub fn sup_norm(&self, period: f64, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| self.h(period * i as f64 / samples as f64).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Forcing")
            .field("description", &self.description)
            .finish()
    }
}

/// A full instance `(phi(u'))' = f(t, u) + h(t)` with period `T`.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub period: f64,
    pub phi_model: PhiModel,
    pub nonlinearity: Nonlinearity,
    pub forcing: Forcing,
}

impl ProblemSpec {
    pub fn new(
        period: f64,
        phi_model: PhiModel,
        nonlinearity: Nonlinearity,
        forcing: Forcing,
    ) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(SolverError::InvalidProblem(format!(
                "period T = {period} must be positive"
            )));
        }
        Ok(ProblemSpec {
            period,
            phi_model,
            nonlinearity,
            forcing,
        })
    }

    /// Relativistic operator with a preset nonlinearity.
    pub fn preset(preset: Preset, period: f64, forcing: Forcing) -> Result<Self> {
        ProblemSpec::new(
            period,
            builtin_relativistic(),
            preset.nonlinearity(),
            forcing,
        )
    }

    /// `sup |h|` on a fine sample.
    pub fn h_sup(&self) -> f64 {
        self.forcing.sup_norm(self.period, 4096)
    }
}

/// Sampling parameters for [`validate_hypotheses`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationConfig {
    pub t_samples: usize,
    pub s_samples: usize,
    pub phi_samples: usize,
    pub tail_radii: Vec<f64>,
    pub tail_tol: f64,
    pub zero_mean_tol: f64,
    pub inverse_tol: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            t_samples: 33,
            s_samples: 801,
            phi_samples: 2001,
            tail_radii: vec![1e2, 1e3, 1e4],
            tail_tol: 1e-3,
            zero_mean_tol: 1e-10,
            inverse_tol: 1e-10,
        }
    }
}

/// Pass/fail verdict for one hypothesis with the worst observed violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub hypothesis: String,
    pub pass: bool,
    pub worst_violation: f64,
    pub failures: Vec<String>,
}

impl HypothesisCheck {
    fn new(name: &str) -> Self {
        HypothesisCheck {
            hypothesis: name.into(),
            pass: true,
            worst_violation: 0.0,
            failures: Vec::new(),
        }
    }

    fn fail(&mut self, violation: f64, message: String) {
        self.pass = false;
        self.worst_violation = self.worst_violation.max(violation);
        self.failures.push(message);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub operator: HypothesisCheck,
    pub nonlinearity: HypothesisCheck,
    pub forcing: HypothesisCheck,
    pub all_pass: bool,
    /// "numerically consistent" or "violated".
    pub verdict: String,
}

fn finite(what: &str, t: f64, s: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SolverError::Evaluation {
            what: what.into(),
            t,
            s,
        })
    }
}

/// Symmetric scan of `[-s_max, s_max]`: a fine linear band near 0 plus
/// log-spaced tails, always containing `0` and `+-s_max`.
pub fn scan_points(s_max: f64, samples: usize) -> Vec<f64> {
    let band = 10f64.min(s_max);
    let half = samples.max(8) / 2;
    let mut pts = vec![0.0];
    for i in 1..=half {
        let x = band * i as f64 / half as f64;
        pts.push(x);
        pts.push(-x);
    }
    if s_max > band {
        let (lo, hi) = (band.ln(), s_max.ln());
        for i in 1..=half {
            let x = (lo + (hi - lo) * i as f64 / half as f64).exp();
            pts.push(x);
            pts.push(-x);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Checks the operator, nonlinearity and forcing hypotheses on sample grids.
pub fn validate_hypotheses(spec: &ProblemSpec, cfg: &ValidationConfig) -> Result<HypothesisReport> {
    let operator = check_operator(&spec.phi_model, cfg)?;
    let nonlinearity = check_nonlinearity(&spec.nonlinearity, spec.period, cfg)?;
    let forcing = check_forcing(&spec.forcing, spec.period, cfg)?;
    let all_pass = operator.pass && nonlinearity.pass && forcing.pass;
    Ok(HypothesisReport {
        operator,
        nonlinearity,
        forcing,
        all_pass,
        verdict: if all_pass {
            "numerically consistent"
        } else {
            "violated"
        }
        .into(),
    })
}

fn check_operator(pm: &PhiModel, cfg: &ValidationConfig) -> Result<HypothesisCheck> {
    let mut check = HypothesisCheck::new("operator");
    let p0 = finite("Phi", 0.0, 0.0, pm.potential(0.0))?;
    let d0 = finite("phi", 0.0, 0.0, pm.phi(0.0))?;
    if p0 != 0.0 {
        check.fail(p0.abs(), format!("Phi(0) = {p0}"));
    }
    if d0 != 0.0 {
        check.fail(d0.abs(), format!("phi(0) = {d0}"));
    }
    let n = cfg.phi_samples.max(3);
    let mut prev = f64::NEG_INFINITY;
    for i in 0..n {
        // open interval (-a, a)
        let s = pm.a * (-1.0 + 2.0 * (i as f64 + 0.5) / n as f64);
        let y = finite("phi", 0.0, s, pm.phi(s))?;
        if y <= prev {
            check.fail(prev - y, format!("phi not increasing at s = {s}"));
        }
        prev = y;
        if s.abs() <= 0.999 * pm.a {
            let back = finite("phi_inv", 0.0, y, pm.phi_inv(y))?;
            let err = (back - s).abs();
            if err > cfg.inverse_tol {
                check.fail(err, format!("phi_inv(phi({s})) off by {err:e}"));
            }
        }
    }
    if let Some(k) = pm.k {
        for i in 0..=n {
            let s = pm.a * (-1.0 + 2.0 * i as f64 / n as f64);
            let v = finite("Phi", 0.0, s, pm.potential(s))?;
            let deficit = k * s * s - v;
            if deficit > 1e-14 * (1.0 + v.abs()) {
                check.fail(deficit, format!("Phi({s}) = {v} below k s^2"));
            }
        }
    }
    Ok(check)
}

fn t_grid(period: f64, samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    (0..n).map(|i| period * i as f64 / (n - 1) as f64).collect()
}

fn check_nonlinearity(
    nl: &Nonlinearity,
    period: f64,
    cfg: &ValidationConfig,
) -> Result<HypothesisCheck> {
    let mut check = HypothesisCheck::new("nonlinearity");
    let ts = t_grid(period, cfg.t_samples);
    let s_max = cfg.tail_radii.iter().copied().fold(0.0, f64::max);
    let ss = scan_points(s_max, cfg.s_samples);
    for &t in &ts {
        let f0 = finite("F", t, 0.0, nl.primitive(t, 0.0))?;
        if f0.abs() > 1e-12 {
            check.fail(f0.abs(), format!("F({t}, 0) = {f0}"));
        }
        for &s in &ss {
            let fv = finite("f", t, s, nl.f(t, s))?;
            let pv = finite("F", t, s, nl.primitive(t, s))?;
            let total = fv.abs() + pv.abs();
            if total > nl.c_bound * (1.0 + 1e-12) {
                check.fail(
                    total - nl.c_bound,
                    format!("|f| + |F| = {total} > C at ({t}, {s})"),
                );
            }
            if pv < nl.f0 - 1e-12 * (1.0 + nl.f0.abs()) {
                check.fail(
                    nl.f0 - pv,
                    format!("F({t}, {s}) = {pv} below F0 = {}", nl.f0),
                );
            }
        }
    }
    // tails: max over t and both signs of |f| and |F - alpha| at each radius
    let mut tails = Vec::new();
    for &radius in &cfg.tail_radii {
        let mut worst: f64 = 0.0;
        for &t in &ts {
            for s in [radius, -radius] {
                let fv = finite("f", t, s, nl.f(t, s))?;
                let pv = finite("F", t, s, nl.primitive(t, s))?;
                worst = worst.max(fv.abs()).max((pv - nl.alpha).abs());
            }
        }
        tails.push((radius, worst));
    }
    for w in tails.windows(2) {
        if w[1].1 > w[0].1 {
            check.fail(
                w[1].1 - w[0].1,
                format!(
                    "tail deviation grows from {:e} at S = {} to {:e} at S = {}",
                    w[0].1, w[0].0, w[1].1, w[1].0
                ),
            );
        }
    }
    if let Some(&(radius, worst)) = tails.last() {
        if worst > cfg.tail_tol {
            check.fail(
                worst,
                format!(
                    "tail deviation {worst:e} at S = {radius} exceeds {:e}",
                    cfg.tail_tol
                ),
            );
        }
    }
    Ok(check)
}

fn check_forcing(
    forcing: &Forcing,
    period: f64,
    cfg: &ValidationConfig,
) -> Result<HypothesisCheck> {
    let mut check = HypothesisCheck::new("forcing");
    for t in t_grid(period, cfg.t_samples) {
        finite("h", t, 0.0, forcing.h(t))?;
    }
    let integral = adaptive_simpson(&|t| forcing.h(t), 0.0, period, 1e-14);
    if !integral.is_finite() {
        return Err(SolverError::Evaluation {
            what: "h".into(),
            t: f64::NAN,
            s: 0.0,
        });
    }
    if integral.abs() > cfg.zero_mean_tol {
        check.fail(integral.abs(), format!("int_0^T h = {integral}"));
    }
    let (h0, ht) = (forcing.primitive(0.0), forcing.primitive(period));
    for (at, v) in [(0.0, h0), (period, ht)] {
        let v = finite("H", at, 0.0, v)?;
        if v.abs() > cfg.zero_mean_tol.max(1e-9) {
            check.fail(v.abs(), format!("H({at}) = {v}"));
        }
    }
    Ok(check)
}

/// Scan parameters for [`estimate_alpha_f0`].
#[derive(Debug, Clone, Serialize)]
pub struct ScanConfig {
    pub s_max: f64,
    pub t_samples: usize,
    pub s_samples: usize,
    pub tail_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            s_max: 1e4,
            t_samples: 17,
            s_samples: 801,
            tail_tol: 1e-3,
        }
    }
}

/// Estimated limit `alpha`, infimum `F0` and bound `C`, with the grid used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaF0Estimate {
    pub alpha_hat: f64,
    pub f0_hat: f64,
    pub c_hat: f64,
    pub s_max: f64,
    pub t_samples: usize,
    pub s_samples: usize,
}

/// `alpha_hat` is the mean of `F(t, +-S_max)` over sampled `t`; `F0_hat` the
/// minimum of `F` on the scan grid of `[0, T] x [-S_max, S_max]`.
pub fn estimate_alpha_f0(
    nl: &Nonlinearity,
    period: f64,
    cfg: &ScanConfig,
) -> Result<AlphaF0Estimate> {
    let ts = t_grid(period, cfg.t_samples);
    let ss = scan_points(cfg.s_max, cfg.s_samples);
    let (mut plus, mut minus) = (0.0, 0.0);
    let mut f0 = f64::INFINITY;
    let mut c: f64 = 0.0;
    for &t in &ts {
        plus += finite("F", t, cfg.s_max, nl.primitive(t, cfg.s_max))?;
        minus += finite("F", t, -cfg.s_max, nl.primitive(t, -cfg.s_max))?;
        for &s in &ss {
            let pv = finite("F", t, s, nl.primitive(t, s))?;
            let fv = finite("f", t, s, nl.f(t, s))?;
            f0 = f0.min(pv);
            c = c.max(pv.abs() + fv.abs());
        }
    }
    plus /= ts.len() as f64;
    minus /= ts.len() as f64;
    if (plus - minus).abs() > cfg.tail_tol {
        return Err(SolverError::ScanDivergence { plus, minus });
    }
    Ok(AlphaF0Estimate {
        alpha_hat: 0.5 * (plus + minus),
        f0_hat: f0,
        c_hat: c,
        s_max: cfg.s_max,
        t_samples: ts.len(),
        s_samples: ss.len(),
    })
}

/// Default forcing used when a preset is run without an explicit `h`:
/// `0.1 sin(2 pi t / T)`.
pub fn default_forcing(period: f64) -> Forcing {
    Forcing::sine(0.1, 2.0 * PI / period)
}
