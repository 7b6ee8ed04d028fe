//! Certification of candidate solutions: the discrete Euler-Lagrange defect,
//! the strict velocity bound and the critical point inequality
//!
//! ```text
//! J(v) - J(u) + sum_i f(t_i, u_i) (v_i - u_i) dt >= 0
//! ```
//!
//! tested on a finite family of probes `v`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SolverError};
use crate::functional::{eval_objective, gradient, Extended, Objective};
use crate::grid::{node_values, project_box_zero_sum, PeriodicGrid, PeriodicPath};
use crate::optimize::random_smooth_path;
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    /// Random probes; structured probes are added when this is positive.
    pub probes: usize,
    pub seed: u64,
    /// Overrides the default `max(1e-5, 10 dt (C + |h|_inf))`.
    pub el_tolerance: Option<f64>,
    pub ci_tolerance: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            probes: 1000,
            seed: 0,
            el_tolerance: None,
            ci_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionReport {
    pub el_residual_inf: f64,
    pub el_residual_l2: f64,
    /// `a - max |d_i|`; must be positive.
    pub velocity_margin: f64,
    pub ci_worst: Extended,
    pub el_tolerance: f64,
    pub ci_tolerance: f64,
    pub probes: usize,
    pub periodic: bool,
    pub verdict: Verdict,
}

/// Default sup-norm tolerance on the Euler-Lagrange defect.
pub fn default_el_tolerance(spec: &ProblemSpec, grid: &PeriodicGrid) -> f64 {
    (10.0 * grid.dt * (spec.nonlinearity.c_bound + spec.h_sup())).max(1e-5)
}

/// Defect `(phi(d_i) - phi(d_{i-1})) / dt - f(t_i, u_i) - h(t_i)` with
/// periodic wrap, as `(sup norm, L^2 norm)`.
pub fn el_residual(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    path: &PeriodicPath,
) -> Result<(f64, f64)> {
    let a = spec.phi_model.a;
    for (index, &value) in path.d.iter().enumerate() {
        if value.abs() >= a {
            return Err(SolverError::SingularEvaluation {
                index,
                value,
                bound: a,
            });
        }
    }
    let u = node_values(path, grid)?;
    let phi: Vec<f64> = path.d.iter().map(|&s| spec.phi_model.phi(s)).collect();
    let n = grid.n;
    let mut sup: f64 = 0.0;
    let mut sq = 0.0;
    for i in 0..n {
        let t = grid.node(i);
        let r = (phi[i] - phi[(i + n - 1) % n]) / grid.dt
            - spec.nonlinearity.f(t, u[i])
            - spec.forcing.h(t);
        if !r.is_finite() {
            return Err(SolverError::Evaluation {
                what: "Euler-Lagrange defect".into(),
                t,
                s: u[i],
            });
        }
        sup = sup.max(r.abs());
        sq += r * r;
    }
    Ok((sup, (sq * grid.dt).sqrt()))
}

/// Left-hand side of the critical point inequality at `u` for one probe `v`.
fn ci_value(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    j_u: f64,
    u_nodes: &[f64],
    f_u: &[f64],
    v: &PeriodicPath,
) -> Result<f64> {
    let j_v = match eval_objective(spec, grid, v, Objective::J)? {
        Extended::Finite(x) => x,
        Extended::PlusInfinity => return Ok(f64::INFINITY),
    };
    let v_nodes = node_values(v, grid)?;
    let pairing: f64 = f_u
        .iter()
        .zip(v_nodes.iter().zip(u_nodes))
        .map(|(f, (a, b))| f * (a - b))
        .sum::<f64>()
        * grid.dt;
    Ok(j_v - j_u + pairing)
}

/// Most negative left-hand side over the probes, `+inf` when `probes == 0`.
///
/// Besides `probes` random paths, the family contains projected
/// gradient-direction steps at several lengths, the constants `+-1`, the
/// translates `u +- 1`, and `w_tilde` when given. Random probes are either
/// global (a fresh smooth path) or local (`u` plus a small smooth
/// perturbation). Draws are sequential from `seed`, evaluation is parallel
/// and reduced by `min`, so the result does not depend on the thread count.
pub fn check_critical_inequality(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    path: &PeriodicPath,
    probes: usize,
    seed: u64,
    w_tilde: Option<&PeriodicPath>,
) -> Result<Extended> {
    if probes == 0 {
        return Ok(Extended::PlusInfinity);
    }
    let j_u = eval_objective(spec, grid, path, Objective::J)?
        .finite()
        .ok_or_else(|| {
            SolverError::Precondition("critical point inequality needs a feasible path".into())
        })?;
    let u_nodes = node_values(path, grid)?;
    let f_u: Vec<f64> = u_nodes
        .iter()
        .enumerate()
        .map(|(i, &s)| spec.nonlinearity.f(grid.node(i), s))
        .collect();
    let bound = grid.bound(&spec.phi_model);
    let project = |mean: f64, d: Vec<f64>| -> Result<PeriodicPath> {
        Ok(PeriodicPath {
            mean,
            d: project_box_zero_sum(&d, bound)?,
        })
    };

    let mut family = Vec::with_capacity(probes + 16);
    if path.max_abs_derivative() <= bound * (1.0 + 1e-12) {
        let g = gradient(spec, grid, path, Objective::I)?.preconditioned(grid);
        for k in -4..=1 {
            let s = 10f64.powi(k);
            let d: Vec<f64> = path.d.iter().zip(&g.d_d).map(|(x, y)| x - s * y).collect();
            family.push(project(path.mean - s * g.d_mean, d)?);
        }
    }
    for r in [-1.0, 1.0] {
        family.push(PeriodicPath::constant(r, grid.n));
        family.push(path.shifted(r));
    }
    if let Some(w) = w_tilde {
        family.push(project(w.mean, w.d.clone())?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..probes {
        if rng.random_bool(0.5) {
            let mean = path.mean + rng.random_range(-10.0..10.0);
            family.push(random_smooth_path(&mut rng, grid, bound, mean));
        } else {
            let eps = 10f64.powf(rng.random_range(-4.0..-0.5));
            let dm = rng.random_range(-1.0..1.0);
            let dir = random_smooth_path(&mut rng, grid, bound, dm);
            let d: Vec<f64> = path
                .d
                .iter()
                .zip(&dir.d)
                .map(|(x, y)| x + eps * y)
                .collect();
            family.push(project(path.mean + eps * dir.mean, d)?);
        }
    }
    let worst = family
        .par_iter()
        .map(|v| ci_value(spec, grid, j_u, &u_nodes, &f_u, v))
        .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))?;
    Ok(if worst.is_finite() {
        Extended::Finite(worst)
    } else {
        Extended::PlusInfinity
    })
}

/// Full certificate for a candidate path.
pub fn verify_candidate(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    path: &PeriodicPath,
    opts: &VerifyOptions,
    w_tilde: Option<&PeriodicPath>,
) -> Result<SolutionReport> {
    let (el_inf, el_l2) = el_residual(spec, grid, path)?;
    let velocity_margin = spec.phi_model.a - path.max_abs_derivative();
    let ci_worst = check_critical_inequality(spec, grid, path, opts.probes, opts.seed, w_tilde)?;
    let el_tolerance = opts
        .el_tolerance
        .unwrap_or_else(|| default_el_tolerance(spec, grid));
    let periodic = path.is_periodic(grid);
    let ci_ok = match ci_worst {
        Extended::Finite(v) => v >= -opts.ci_tolerance,
        Extended::PlusInfinity => true,
    };
    let pass = el_inf <= el_tolerance && velocity_margin > 0.0 && ci_ok && periodic;
    Ok(SolutionReport {
        el_residual_inf: el_inf,
        el_residual_l2: el_l2,
        velocity_margin,
        ci_worst,
        el_tolerance,
        ci_tolerance: opts.ci_tolerance,
        probes: opts.probes,
        periodic,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
    })
}
