//! Which branch of the existence argument applies, and the two sufficient
//! conditions that decide it a priori.
//!
//! With `m = min_W J` and `beta = min_W I`, the energy either dips to
//! `m + alpha T` or below somewhere (a global minimum exists), or stays
//! strictly above it on `W` (mountain-pass geometry between `w~ - n` and
//! `w~ + n`).

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SolverError};
use crate::functional::Objective;
use crate::grid::{node_values, PeriodicGrid, PeriodicPath};
use crate::optimize::{minimize_over_w, DescentOptions, MinimizeResult};
use crate::problem::ProblemSpec;

pub const DEFAULT_TOL_BORDER: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Minimum,
    MountainPass,
    Borderline,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlternativeReport {
    pub m: f64,
    pub alpha_t: f64,
    pub beta: f64,
    pub branch: Branch,
    /// `beta - (m + alpha T)`.
    pub gap: f64,
    pub tol_border: f64,
    pub m_converged: bool,
    pub beta_converged: bool,
}

impl AlternativeReport {
    pub fn new(m: f64, alpha_t: f64, beta: f64, tol_border: f64) -> Self {
        let gap = beta - (m + alpha_t);
        let branch = if gap <= -tol_border {
            Branch::Minimum
        } else if gap >= tol_border {
            Branch::MountainPass
        } else {
            Branch::Borderline
        };
        AlternativeReport {
            m,
            alpha_t,
            beta,
            branch,
            gap,
            tol_border,
            m_converged: true,
            beta_converged: true,
        }
    }
}

/// The report together with the two minimizers over `W` it was built from.
#[derive(Debug, Clone)]
pub struct Alternative {
    pub report: AlternativeReport,
    /// Minimizer of `J` over `W`, i.e. `w~` with value `m`.
    pub j_min: MinimizeResult,
    /// Minimizer of `I` over `W`, value `beta`.
    pub i_min: MinimizeResult,
}

pub fn classify_alternative(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    opts: &DescentOptions,
    tol_border: f64,
) -> Result<Alternative> {
    let j_min = minimize_over_w(spec, grid, opts, Objective::J)?;
    let i_min = minimize_over_w(spec, grid, opts, Objective::I)?;
    let mut report = AlternativeReport::new(
        j_min.value,
        spec.nonlinearity.alpha * spec.period,
        i_min.value,
        tol_border,
    );
    report.m_converged = j_min.converged;
    report.beta_converged = i_min.converged;
    Ok(Alternative {
        report,
        j_min,
        i_min,
    })
}

/// Which Poincare-Wirtinger constant the energy bound uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PwVariant {
    /// `int v~^2 <= int v~'^2`, valid only for `T <= 2 pi`.
    Unscaled,
    /// `int v~^2 <= (T / 2 pi)^2 int v~'^2`.
    SharpConstant,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Witnesses {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_sup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryReport {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub witnesses: Witnesses,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<PwVariant>,
}

/// Shifts for the first sufficient condition: `0`, a linear band on
/// `[-10, 10]`, and log-spaced magnitudes in `[1e-2, 1e4]` of both signs.
pub fn default_cor1_scan() -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend((0..=400).map(|i| -10.0 + 0.05 * i as f64));
    for i in 0..=240 {
        let r = 10f64.powf(-2.0 + 6.0 * i as f64 / 240.0);
        out.push(r);
        out.push(-r);
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn f_integral(spec: &ProblemSpec, grid: &PeriodicGrid, u: &[f64], v0: f64) -> f64 {
    u.iter()
        .enumerate()
        .map(|(i, &s)| spec.nonlinearity.primitive(grid.node(i), s + v0))
        .sum::<f64>()
        * grid.dt
}

/// `lhs = min_v0 sum F(t_i, w~_i + v0) dt` over `scan`, refined once between
/// the neighbours of the best point; `holds = lhs <= alpha T`.
pub fn check_cor1(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    w_tilde: &PeriodicPath,
    scan: &[f64],
) -> Result<CorollaryReport> {
    let u = node_values(w_tilde, grid)?;
    let mut pts: Vec<f64> = scan.to_vec();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.is_empty() {
        return Err(SolverError::Precondition("empty shift scan".into()));
    }
    let eval = |pts: &[f64]| -> Vec<(f64, f64)> {
        pts.par_iter()
            .map(|&v| (v, f_integral(spec, grid, &u, v)))
            .collect()
    };
    let best_of = |vals: &[(f64, f64)]| {
        vals.iter()
            .enumerate()
            .fold(0, |b, (i, x)| if x.1 < vals[b].1 { i } else { b })
    };
    let coarse = eval(&pts);
    let b = best_of(&coarse);
    let lo = coarse[b.saturating_sub(1)].0;
    let hi = coarse[(b + 1).min(coarse.len() - 1)].0;
    let fine_pts: Vec<f64> = (0..=200)
        .map(|i| lo + (hi - lo) * i as f64 / 200.0)
        .collect();
    let mut all = coarse;
    all.extend(eval(&fine_pts));
    let (v0, lhs) = all[best_of(&all)];
    let rhs = spec.nonlinearity.alpha * spec.period;
    Ok(CorollaryReport {
        holds: lhs <= rhs,
        lhs,
        rhs,
        witnesses: Witnesses {
            v0: Some(v0),
            ..Default::default()
        },
        variant: None,
    })
}

/// The a priori bound `F0 T + min_s (k s^2 - c s)` on `beta` against `m + alpha T`.
///
/// For zero-mean `v` with `s = |v'|_{L^2}`, `J(v) >= k s^2 - |h|_inf sqrt(T) |v|_{L^2}`
/// and `|v|_{L^2} <= C s`, with `C = 1` (unscaled) or `C = T / 2 pi` (sharp).
/// The vertex of `k s^2 - C sqrt(T) |h|_inf s` is at `s = C sqrt(T) |h|_inf / 2k`
/// with value `-C^2 T |h|_inf^2 / 4k`, so `lhs = F0 T - C^2 T |h|_inf^2 / 4k`.
pub fn check_cor2(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    m: f64,
    variant: PwVariant,
) -> Result<CorollaryReport> {
    let k = spec.phi_model.k.ok_or(SolverError::MissingK)?;
    let t = spec.period;
    let h_sup = grid
        .nodes()
        .iter()
        .fold(spec.h_sup(), |a, &x| a.max(spec.forcing.h(x).abs()));
    let c = match variant {
        PwVariant::Unscaled => 1.0,
        PwVariant::SharpConstant => t / (2.0 * std::f64::consts::PI),
    };
    let f0 = spec.nonlinearity.f0;
    let lhs = f0 * t - c * c * t * h_sup * h_sup / (4.0 * k);
    let rhs = m + spec.nonlinearity.alpha * t;
    Ok(CorollaryReport {
        holds: lhs > rhs,
        lhs,
        rhs,
        witnesses: Witnesses {
            v0: None,
            f0: Some(f0),
            k: Some(k),
            h_sup: Some(h_sup),
        },
        variant: Some(variant),
    })
}
