//! Projected-gradient minimization over `W` (zero mean) and over the whole
//! constraint set, with multi-start, a tolerance schedule that tightens as
//! `1/n` across rounds, and a Newton polish for interior critical points.
//!
//! Steps are taken in the metric `T mean^2 + dt |d|^2` (see
//! [`metric_norm`](crate::functional::metric_norm)); since the constraint only
//! involves `d` and that block is a multiple of the identity, the Euclidean
//! projection onto the box-and-hyperplane is also the metric projection.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SolverError};
use crate::functional::{
    eval_objective, gradient, metric_norm, nodes_and_forcing, GradientVector, Objective,
};
use crate::grid::{project_box_zero_sum, PeriodicGrid, PeriodicPath};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentOptions {
    pub max_iters: usize,
    pub step_init: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    /// Tolerance on the projected-gradient step norm.
    pub grad_tol: f64,
    /// Random initial paths in addition to the zero path.
    pub restarts: usize,
    /// Rounds of the tolerance schedule; round `n` keeps candidates within `1/n` of the best value.
    pub rounds: usize,
    pub seed: u64,
    /// Finish interior runs with Newton steps on the stationarity system.
    pub polish: bool,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            max_iters: 50_000,
            step_init: 0.1,
            armijo_c: 1e-4,
            backtrack: 0.5,
            grad_tol: 1e-8,
            restarts: 8,
            rounds: 4,
            seed: 0,
            polish: true,
        }
    }
}

impl DescentOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.step_init > 0.0
            && self.armijo_c > 0.0
            && self.armijo_c < 1.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.grad_tol > 0.0
            && self.rounds > 0;
        if ok {
            Ok(())
        } else {
            Err(SolverError::Precondition(format!(
                "invalid descent options {self:?}"
            )))
        }
    }
}

/// One entry of the Palais-Smale trace: value and stationarity residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsEntry {
    pub value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeResult {
    pub path: PeriodicPath,
    pub value: f64,
    pub projected_grad_norm: f64,
    pub iterations: usize,
    /// `false` when `grad_tol` was not reached (the result is still the best found).
    pub converged: bool,
    #[serde(skip_serializing)]
    pub ps_log: Vec<PsEntry>,
}

/// A single projected-descent problem: functional, grid and whether the mean is frozen.
#[derive(Clone, Copy)]
pub(crate) struct Descent<'a> {
    pub spec: &'a ProblemSpec,
    pub grid: &'a PeriodicGrid,
    pub objective: Objective,
    pub freeze_mean: bool,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct RunState {
    pub path: PeriodicPath,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub log: Vec<PsEntry>,
}

impl<'a> Descent<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        grid: &'a PeriodicGrid,
        objective: Objective,
        freeze_mean: bool,
    ) -> Self {
        Descent {
            spec,
            grid,
            objective,
            freeze_mean,
            bound: grid.bound(&spec.phi_model),
        }
    }

    pub fn project(&self, path: &PeriodicPath) -> Result<PeriodicPath> {
        Ok(PeriodicPath {
            mean: if self.freeze_mean { 0.0 } else { path.mean },
            d: project_box_zero_sum(&path.d, self.bound)?,
        })
    }

    pub fn value(&self, path: &PeriodicPath) -> Result<f64> {
        Ok(eval_objective(self.spec, self.grid, path, self.objective)?
            .finite()
            .unwrap_or(f64::INFINITY))
    }

    pub fn grad(&self, path: &PeriodicPath) -> Result<GradientVector> {
        let mut g = gradient(self.spec, self.grid, path, self.objective)?;
        if self.freeze_mean {
            g.d_mean = 0.0;
        }
        Ok(g)
    }

    /// `P(x - s * G^{-1} grad)`.
    pub fn step(&self, x: &PeriodicPath, pg: &GradientVector, s: f64) -> Result<PeriodicPath> {
        let d: Vec<f64> = x.d.iter().zip(&pg.d_d).map(|(a, b)| a - s * b).collect();
        Ok(PeriodicPath {
            mean: if self.freeze_mean {
                x.mean
            } else {
                x.mean - s * pg.d_mean
            },
            d: project_box_zero_sum(&d, self.bound)?,
        })
    }

    /// Norm of the unit projected-gradient step `x - P(x - G^{-1} grad)`.
    pub fn residual(&self, x: &PeriodicPath, g: &GradientVector) -> Result<f64> {
        let pg = g.preconditioned(self.grid);
        let y = self.step(x, &pg, 1.0)?;
        let dd: Vec<f64> = x.d.iter().zip(&y.d).map(|(a, b)| a - b).collect();
        Ok(metric_norm(x.mean - y.mean, &dd, self.grid))
    }

    /// Projected gradient with Armijo backtracking from a Barzilai-Borwein trial step.
    pub fn run(&self, start: &PeriodicPath, tol: f64, opts: &DescentOptions) -> Result<RunState> {
        let mut x = self.project(start)?;
        let mut v = self.value(&x)?;
        let mut g = self.grad(&x)?;
        let mut r = self.residual(&x, &g)?;
        let mut log = vec![PsEntry {
            value: v,
            residual: r,
        }];
        let mut s = opts.step_init;
        let mut iterations = 0;
        while iterations < opts.max_iters && r > tol {
            let pg = g.preconditioned(self.grid);
            let mut accepted = None;
            loop {
                let y = self.step(&x, &pg, s)?;
                let dd: Vec<f64> = y.d.iter().zip(&x.d).map(|(a, b)| a - b).collect();
                let dm = y.mean - x.mean;
                let slope = g.pair(dm, &dd);
                if slope >= 0.0 || !slope.is_finite() {
                    break;
                }
                let vy = self.value(&y)?;
                if vy <= v + opts.armijo_c * slope {
                    accepted = Some((y, vy, dm, dd));
                    break;
                }
                s *= opts.backtrack;
                if s < 1e-18 {
                    break;
                }
            }
            let Some((y, vy, dm, dd)) = accepted else {
                break;
            };
            let gy = self.grad(&y)?;
            let sty = (gy.d_mean - g.d_mean) * dm
                + gy.d_d
                    .iter()
                    .zip(&g.d_d)
                    .zip(&dd)
                    .map(|((a, b), c)| (a - b) * c)
                    .sum::<f64>();
            let sts = metric_norm(dm, &dd, self.grid).powi(2);
            s = if sty > 0.0 {
                (sts / sty).clamp(1e-10, 1e10)
            } else {
                (2.0 * s).min(1e10)
            };
            x = y;
            v = vy;
            g = gy;
            r = self.residual(&x, &g)?;
            iterations += 1;
            log.push(PsEntry {
                value: v,
                residual: r,
            });
        }
        Ok(RunState {
            path: x,
            value: v,
            residual: r,
            iterations,
            log,
        })
    }

    /// Hessian of the objective in Euclidean `(mean, d)` coordinates
    /// (mean row and column omitted when frozen). `f'` comes from central
    /// differences of `f`, so this is an approximation used only for polishing.
    fn hessian(&self, x: &PeriodicPath) -> Result<DMatrix<f64>> {
        let n = self.grid.n;
        let dt = self.grid.dt;
        let (u, _) = nodes_and_forcing(self.spec, self.grid, x)?;
        let off = if self.freeze_mean { 0 } else { 1 };
        let mut h = DMatrix::<f64>::zeros(n + off, n + off);
        for k in 0..n {
            h[(off + k, off + k)] = self.spec.phi_model.dphi(x.d[k]) * dt;
        }
        if self.objective == Objective::I {
            // C = [1 | B], B_ik = dt ([k < i] - (N-1-k)/N)
            let mut c = DMatrix::<f64>::zeros(n, n + off);
            for i in 0..n {
                if off == 1 {
                    c[(i, 0)] = 1.0;
                }
                for k in 0..n {
                    let ind = if k < i { 1.0 } else { 0.0 };
                    c[(i, off + k)] = dt * (ind - (n - 1 - k) as f64 / n as f64);
                }
            }
            let w = DVector::from_iterator(
                n,
                (0..n).map(|i| self.spec.nonlinearity.df(self.grid.node(i), u[i]) * dt),
            );
            let mut wc = c.clone();
            for i in 0..n {
                wc.row_mut(i).scale_mut(w[i]);
            }
            h += c.transpose() * wc;
        }
        Ok(h)
    }

    /// Damped Newton iteration on the stationarity system with the zero-sum
    /// multiplier. Steps are accepted only if they reduce the residual (and,
    /// when `descent` is set, do not raise the value). Stops at the first
    /// non-improving step, at a boundary contact, or after `max_steps`.
    pub fn polish(&self, state: RunState, descent: bool, max_steps: usize) -> Result<RunState> {
        let mut st = state;
        let n = self.grid.n;
        let off = if self.freeze_mean { 0 } else { 1 };
        for _ in 0..max_steps {
            if st.path.max_abs_derivative() >= self.bound {
                break;
            }
            let g = self.grad(&st.path)?;
            let h = self.hessian(&st.path)?;
            let dim = n + off + 1;
            let mut kkt = DMatrix::<f64>::zeros(dim, dim);
            kkt.view_mut((0, 0), (n + off, n + off)).copy_from(&h);
            let mut rhs = DVector::<f64>::zeros(dim);
            if off == 1 {
                rhs[0] = -g.d_mean;
            }
            for k in 0..n {
                kkt[(off + k, n + off)] = 1.0;
                kkt[(n + off, off + k)] = 1.0;
                rhs[off + k] = -g.d_d[k];
            }
            let Some(sol) = kkt.lu().solve(&rhs) else {
                break;
            };
            let dm = if off == 1 { sol[0] } else { 0.0 };
            let dd: Vec<f64> = (0..n).map(|k| sol[off + k]).collect();
            let mut alpha = 1.0;
            let mut improved = None;
            while alpha > 1e-4 {
                let trial = PeriodicPath {
                    mean: st.path.mean + alpha * dm,
                    d: PeriodicPath::from_derivative(
                        0.0,
                        st.path
                            .d
                            .iter()
                            .zip(&dd)
                            .map(|(a, b)| a + alpha * b)
                            .collect(),
                    )
                    .d,
                };
                if trial.max_abs_derivative() < self.bound {
                    let vt = self.value(&trial)?;
                    let gt = self.grad(&trial)?;
                    let rt = self.residual(&trial, &gt)?;
                    let value_ok = !descent || vt <= st.value + 1e-14 * (1.0 + st.value.abs());
                    if rt < st.residual && value_ok {
                        improved = Some((trial, vt, rt));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some((path, value, residual)) = improved else {
                break;
            };
            st.path = path;
            st.value = value;
            st.residual = residual;
            st.iterations += 1;
            st.log.push(PsEntry { value, residual });
            if residual < 1e-14 {
                break;
            }
        }
        Ok(st)
    }
}

/// Smooth random path: a few random Fourier modes with `1/k` decay, scaled
/// so `max |d|` is a random fraction of the bound.
pub fn random_smooth_path<R: Rng>(
    rng: &mut R,
    grid: &PeriodicGrid,
    bound: f64,
    mean: f64,
) -> PeriodicPath {
    let modes = 5;
    let coeffs: Vec<(f64, f64)> = (1..=modes)
        .map(|k| {
            (
                rng.random_range(-1.0..1.0) / k as f64,
                rng.random_range(-1.0..1.0) / k as f64,
            )
        })
        .collect();
    let w = 2.0 * std::f64::consts::PI / grid.period;
    let raw: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|t| {
            coeffs
                .iter()
                .enumerate()
                .map(|(j, (a, b))| {
                    let k = (j + 1) as f64;
                    a * (k * w * t).cos() + b * (k * w * t).sin()
                })
                .sum()
        })
        .collect();
    let p = PeriodicPath::from_derivative(mean, raw);
    let scale = p.max_abs_derivative();
    let target = rng.random_range(0.1..0.9) * bound;
    let d = if scale > 0.0 {
        p.d.iter().map(|x| x * target / scale).collect()
    } else {
        p.d
    };
    PeriodicPath { mean, d }
}

fn best_index(states: &[RunState]) -> usize {
    let mut best = 0;
    for (i, s) in states.iter().enumerate() {
        if s.value < states[best].value {
            best = i;
        }
    }
    best
}

/// Multi-start descent. Round `n` of `R` descends every surviving candidate
/// to tolerance `max(grad_tol, 1e-2 / n)` (the last round to `grad_tol`) and
/// keeps only candidates within `1/n` of the best value.
pub(crate) fn multistart(
    desc: &Descent,
    starts: Vec<PeriodicPath>,
    opts: &DescentOptions,
) -> Result<MinimizeResult> {
    opts.validate()?;
    let mut states: Vec<RunState> = starts
        .into_iter()
        .map(|p| {
            let path = desc.project(&p)?;
            let value = desc.value(&path)?;
            Ok(RunState {
                path,
                value,
                residual: f64::INFINITY,
                iterations: 0,
                log: Vec::new(),
            })
        })
        .collect::<Result<_>>()?;
    let rounds = opts.rounds;
    for n in 1..=rounds {
        let tol = if n == rounds {
            opts.grad_tol
        } else {
            opts.grad_tol.max(1e-2 / n as f64)
        };
        let next: Vec<RunState> = states
            .par_iter()
            .map(|st| {
                let mut run = desc.run(&st.path, tol, opts)?;
                let mut log = st.log.clone();
                log.append(&mut run.log);
                run.log = log;
                run.iterations += st.iterations;
                Ok(run)
            })
            .collect::<Result<_>>()?;
        let best = next[best_index(&next)].value;
        let keep = 1.0 / n as f64;
        states = next
            .into_iter()
            .filter(|s| s.value <= best + keep)
            .collect();
    }
    if opts.polish {
        states = states
            .into_par_iter()
            .map(|st| {
                if st.residual > 1e-14 {
                    desc.polish(st, true, 30)
                } else {
                    Ok(st)
                }
            })
            .collect::<Result<_>>()?;
    }
    let best = states.swap_remove(best_index(&states));
    Ok(MinimizeResult {
        converged: best.residual <= opts.grad_tol,
        path: best.path,
        value: best.value,
        projected_grad_norm: best.residual,
        iterations: best.iterations,
        ps_log: best.log,
    })
}

fn starts(
    grid: &PeriodicGrid,
    bound: f64,
    opts: &DescentOptions,
    mean_range: f64,
) -> Vec<PeriodicPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = vec![PeriodicPath::constant(0.0, grid.n)];
    for _ in 0..opts.restarts {
        let mean = if mean_range > 0.0 {
            rng.random_range(-mean_range..mean_range)
        } else {
            0.0
        };
        out.push(random_smooth_path(&mut rng, grid, bound, mean));
    }
    out
}

/// Minimizes `objective` over `W` (mean frozen at 0).
pub fn minimize_over_w(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    opts: &DescentOptions,
    objective: Objective,
) -> Result<MinimizeResult> {
    let desc = Descent::new(spec, grid, objective, true);
    multistart(&desc, starts(grid, desc.bound, opts, 0.0), opts)
}

/// Minimum value `m` of `J` over `W` and its minimizer `w_tilde`.
pub fn minimize_j_over_w(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    opts: &DescentOptions,
) -> Result<MinimizeResult> {
    minimize_over_w(spec, grid, opts, Objective::J)
}

/// Minimizes `I` over the whole constraint set, mean included. `init`, when
/// given, joins the zero path and the random restarts as a candidate.
pub fn minimize_over_k(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    opts: &DescentOptions,
    init: Option<&PeriodicPath>,
) -> Result<MinimizeResult> {
    let desc = Descent::new(spec, grid, Objective::I, false);
    let mut candidates = starts(grid, desc.bound, opts, spec.phi_model.a * spec.period / 2.0);
    if let Some(p) = init {
        candidates.push(p.clone());
    }
    multistart(&desc, candidates, opts)
}

/// `I(tilde + r)` for each `r`.
pub fn scan_mean_section(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    tilde: &PeriodicPath,
    means: &[f64],
) -> Result<Vec<(f64, f64)>> {
    means
        .iter()
        .map(|&r| {
            let v = eval_objective(spec, grid, &tilde.shifted(r), Objective::I)?;
            Ok((r, v.finite().unwrap_or(f64::INFINITY)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::eval_i;
    use crate::grid::node_values;
    use crate::problem::{builtin_relativistic, Forcing, Nonlinearity, Preset};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn zero_nl() -> Nonlinearity {
        Nonlinearity::new(
            "zero",
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| 0.0),
            0.0,
            0.0,
            0.0,
        )
    }

    fn quick() -> DescentOptions {
        DescentOptions {
            restarts: 3,
            ..Default::default()
        }
    }

    #[test]
    fn zero_forcing_gives_zero_minimizer() {
        let spec =
            ProblemSpec::new(2.0 * PI, builtin_relativistic(), zero_nl(), Forcing::zero()).unwrap();
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let r = minimize_j_over_w(&spec, &g, &quick()).unwrap();
        assert!(r.value.abs() < 1e-14 && r.value <= 0.0);
        assert!(r.path.max_abs_derivative() < 1e-7);
    }

    #[test]
    fn m_is_nonpositive_and_restarts_agree() {
        let spec = ProblemSpec::new(
            3.0,
            builtin_relativistic(),
            zero_nl(),
            Forcing::sine(0.7, 2.0 * PI / 3.0),
        )
        .unwrap();
        let g = PeriodicGrid::new(64, 3.0).unwrap();
        let desc = Descent::new(&spec, &g, Objective::J, true);
        let values: Vec<f64> = starts(&g, desc.bound, &quick(), 0.0)
            .iter()
            .map(|p| multistart(&desc, vec![p.clone()], &quick()).unwrap().value)
            .collect();
        assert!(values[0] < 0.0);
        for v in &values {
            assert!((v - values[0]).abs() < 1e-8, "{values:?}");
        }
    }

    #[test]
    fn descent_trace_is_monotone_and_feasible() {
        let spec = ProblemSpec::preset(
            Preset::AttractiveResonance,
            2.0 * PI,
            Forcing::sine(0.1, 1.0),
        )
        .unwrap();
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let r = minimize_over_k(&spec, &g, &quick(), None).unwrap();
        assert!(r.converged);
        for w in r.ps_log.windows(2) {
            assert!(w[1].value <= w[0].value + 1e-12 * (1.0 + w[0].value.abs()));
        }
        assert!(r.path.max_abs_derivative() <= g.bound(&spec.phi_model));
        assert!(r.path.is_periodic(&g));
        assert_eq!(
            r.value,
            eval_i(&spec, &g, &r.path)
                .unwrap()
                .i_value
                .finite()
                .unwrap()
        );
    }

    #[test]
    fn free_problem_minimum_is_zero_at_a_constant() {
        let spec =
            ProblemSpec::new(2.0 * PI, builtin_relativistic(), zero_nl(), Forcing::zero()).unwrap();
        let g = PeriodicGrid::new(32, 2.0 * PI).unwrap();
        let r = minimize_over_k(&spec, &g, &quick(), None).unwrap();
        assert!(r.value.abs() < 1e-12);
        let u = node_values(&r.path, &g).unwrap();
        let spread = u.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b))
            - u.iter().fold(f64::INFINITY, |a, b| a.min(*b));
        assert!(spread < 1e-6);
    }

    #[test]
    fn far_initialization_reaches_same_value() {
        let spec = ProblemSpec::preset(
            Preset::AttractiveResonance,
            2.0 * PI,
            Forcing::sine(0.1, 1.0),
        )
        .unwrap();
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let base = minimize_over_k(&spec, &g, &quick(), None).unwrap();
        let far =
            minimize_over_k(&spec, &g, &quick(), Some(&PeriodicPath::constant(1e3, 64))).unwrap();
        assert!((base.value - far.value).abs() < 1e-6);
    }

    #[test]
    fn mean_section_properties() {
        let spec = ProblemSpec::new(
            2.0,
            builtin_relativistic(),
            zero_nl(),
            Forcing::cosine(0.3, PI),
        )
        .unwrap();
        let g = PeriodicGrid::new(32, 2.0).unwrap();
        let tilde = PeriodicPath::from_derivative(
            0.0,
            g.nodes().iter().map(|t| 0.2 * (PI * t).sin()).collect(),
        );
        let sec = scan_mean_section(&spec, &g, &tilde, &[-5.0, 0.0, 3.0, 100.0]).unwrap();
        for (_, v) in &sec {
            assert!((v - sec[1].1).abs() < 1e-13);
        }
        assert_eq!(
            sec[1].1,
            eval_i(&spec, &g, &tilde).unwrap().i_value.finite().unwrap()
        );
    }

    #[test]
    fn invalid_options_rejected() {
        let spec =
            ProblemSpec::new(1.0, builtin_relativistic(), zero_nl(), Forcing::zero()).unwrap();
        let g = PeriodicGrid::new(8, 1.0).unwrap();
        let bad = DescentOptions {
            armijo_c: 1.5,
            ..Default::default()
        };
        assert!(minimize_over_k(&spec, &g, &bad, None).is_err());
    }
}
