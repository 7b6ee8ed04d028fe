//! Mountain-pass search between two low translates `w~ - n1` and `w~ + n1`
//! of the `J`-minimizer, which lie on opposite sides of `W`.
//!
//! The saddle is located in three stages:
//!
//! 1. a string of `P` images relaxed by one projected-descent step per
//!    interior image followed by equal-arclength reparametrization;
//! 2. a climbing image on the highest image, which ascends along the string
//!    tangent and descends in every other direction;
//! 3. a Newton polish of the climbed image on the stationarity system.
//!
//! Stage 1 approximates the minimax value from below by interpolation between
//! images, so stages 2 and 3 can lift `c_hat` slightly above the last string
//! value.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SolverError};
use crate::functional::{eval_objective, metric_norm, path_distance, GradientVector, Objective};
use crate::grid::{PeriodicGrid, PeriodicPath};
use crate::optimize::{Descent, RunState};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StringOptions {
    /// Number of images `P >= 9`, endpoints included.
    pub images: usize,
    pub max_iters: usize,
    /// Stage 1 stops once `c_hat` changes by less than this (relative) for 10 iterations.
    pub string_tol: f64,
    /// Target for the saddle's projected-gradient norm.
    pub grad_tol: f64,
    pub step_init: f64,
    pub armijo_c: f64,
    pub climb_iters: usize,
    pub polish: bool,
    /// Double `P` once when the highest image is next to an endpoint.
    pub refine: bool,
    /// Keep the zero-mean part of every image equal to that of `A` and move only the mean.
    pub freeze_tilde: bool,
}

impl Default for StringOptions {
    fn default() -> Self {
        StringOptions {
            images: 33,
            max_iters: 5000,
            string_tol: 1e-10,
            grad_tol: 1e-6,
            step_init: 0.1,
            armijo_c: 1e-4,
            climb_iters: 5000,
            polish: true,
            refine: true,
            freeze_tilde: false,
        }
    }
}

/// A discrete path from `images[0] = A` to `images[P-1] = B`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFamily {
    pub images: Vec<PeriodicPath>,
    pub values: Vec<f64>,
}

impl PathFamily {
    /// Normalized cumulative arclength in the working metric.
    pub fn parameters(&self, grid: &PeriodicGrid) -> Vec<f64> {
        let mut s = vec![0.0];
        for w in self.images.windows(2) {
            s.push(s.last().unwrap() + path_distance(&w[0], &w[1], grid));
        }
        let total = *s.last().unwrap();
        if total > 0.0 {
            s.iter_mut().for_each(|x| *x /= total);
        }
        s
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.values[self.argmax()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Endpoints {
    #[serde(skip_serializing)]
    pub a: PeriodicPath,
    #[serde(skip_serializing)]
    pub b: PeriodicPath,
    pub n1: f64,
    pub epsilon1: f64,
    /// `m + alpha T + epsilon1`.
    pub target: f64,
    pub level_a: f64,
    pub level_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MountainPassResult {
    pub c_hat: f64,
    /// Written to `solution.csv` rather than the report.
    #[serde(skip_serializing)]
    pub saddle: PeriodicPath,
    pub saddle_index: usize,
    pub saddle_grad_norm: f64,
    /// `max(I(A), I(B))`.
    pub endpoint_level: f64,
    pub barrier_gap: f64,
    pub images: usize,
    pub refined: bool,
    pub string_iterations: usize,
    pub converged: bool,
    /// `c_hat` after every stage-1 iteration.
    #[serde(skip_serializing)]
    pub c_hat_history: Vec<f64>,
    #[serde(skip_serializing)]
    pub family: PathFamily,
}

/// Scans `n in {1, 2, 4, ...}` up to `1e6` for the first `n` with
/// `I(w~ +- n) <= m + alpha T + epsilon1`, `epsilon1 = (beta - (m + alpha T)) / 2`,
/// where `m = J(w~)`.
pub fn select_endpoints(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    w_tilde: &PeriodicPath,
    beta: f64,
) -> Result<Endpoints> {
    let m = eval_objective(spec, grid, w_tilde, Objective::J)?
        .finite()
        .ok_or_else(|| SolverError::Precondition("w_tilde is not feasible".into()))?;
    let level = m + spec.nonlinearity.alpha * spec.period;
    if !(beta > level) {
        return Err(SolverError::Precondition(format!(
            "mountain pass needs beta > m + alpha T, got beta = {beta}, m + alpha T = {level}"
        )));
    }
    let epsilon1 = (beta - level) / 2.0;
    let target = level + epsilon1;
    let value = |p: &PeriodicPath| -> Result<f64> {
        Ok(eval_objective(spec, grid, p, Objective::I)?
            .finite()
            .unwrap_or(f64::INFINITY))
    };
    let mut n = 1.0;
    while n <= 1e6 {
        let a = w_tilde.shifted(-n);
        let b = w_tilde.shifted(n);
        let (level_a, level_b) = (value(&a)?, value(&b)?);
        if level_a <= target && level_b <= target {
            return Ok(Endpoints {
                a,
                b,
                n1: n,
                epsilon1,
                target,
                level_a,
                level_b,
            });
        }
        n *= 2.0;
    }
    Err(SolverError::EndpointSearchFailure { limit: 1e6, target })
}

/// Search space for the images: everything, or the mean only.
struct Landscape<'a> {
    desc: Descent<'a>,
    frozen: bool,
}

impl Landscape<'_> {
    fn value(&self, x: &PeriodicPath) -> Result<f64> {
        self.desc.value(x)
    }

    fn grad(&self, x: &PeriodicPath) -> Result<GradientVector> {
        let mut g = self.desc.grad(x)?;
        if self.frozen {
            g.d_d.iter_mut().for_each(|v| *v = 0.0);
        }
        Ok(g)
    }

    fn step(&self, x: &PeriodicPath, pg: &GradientVector, s: f64) -> Result<PeriodicPath> {
        if self.frozen {
            Ok(x.shifted(-s * pg.d_mean))
        } else {
            self.desc.step(x, pg, s)
        }
    }

    fn residual(&self, x: &PeriodicPath) -> Result<f64> {
        let g = self.grad(x)?;
        if self.frozen {
            Ok(metric_norm(
                g.d_mean / self.desc.grid.period,
                &[],
                self.desc.grid,
            ))
        } else {
            self.desc.residual(x, &g)
        }
    }

    fn lerp(&self, p: &PeriodicPath, q: &PeriodicPath, tau: f64) -> Result<PeriodicPath> {
        if self.frozen {
            Ok(PeriodicPath {
                mean: (1.0 - tau) * p.mean + tau * q.mean,
                d: p.d.clone(),
            })
        } else {
            self.desc.project(&p.lerp(q, tau))
        }
    }

    /// One Armijo-backtracked projected-gradient step; returns the new point,
    /// its value and the next trial step.
    fn descend(
        &self,
        x: &PeriodicPath,
        v: f64,
        s: f64,
        armijo_c: f64,
    ) -> Result<(PeriodicPath, f64, f64)> {
        let g = self.grad(x)?;
        let pg = g.preconditioned(self.desc.grid);
        let mut s = s;
        for _ in 0..40 {
            let y = self.step(x, &pg, s)?;
            let dd: Vec<f64> = y.d.iter().zip(&x.d).map(|(a, b)| a - b).collect();
            let slope = g.pair(y.mean - x.mean, &dd);
            if !(slope < 0.0) {
                break;
            }
            let vy = self.value(&y)?;
            if vy <= v + armijo_c * slope {
                return Ok((y, vy, (2.0 * s).min(1.0)));
            }
            s *= 0.5;
        }
        Ok((x.clone(), v, s.max(1e-12)))
    }

    /// Redistributes the interior images to equal arclength.
    fn reparametrize(&self, fam: &PathFamily) -> Result<PathFamily> {
        let grid = self.desc.grid;
        let s = fam.parameters(grid);
        let p = fam.images.len();
        if *s.last().unwrap() == 0.0 {
            return Ok(fam.clone());
        }
        let mut images = Vec::with_capacity(p);
        images.push(fam.images[0].clone());
        let mut k = 0;
        for j in 1..p - 1 {
            let target = j as f64 / (p - 1) as f64;
            while k + 2 < p && s[k + 1] < target {
                k += 1;
            }
            let width = s[k + 1] - s[k];
            let tau = if width > 0.0 {
                ((target - s[k]) / width).clamp(0.0, 1.0)
            } else {
                0.0
            };
            images.push(self.lerp(&fam.images[k], &fam.images[k + 1], tau)?);
        }
        images.push(fam.images[p - 1].clone());
        let mut values = Vec::with_capacity(p);
        values.push(fam.values[0]);
        let interior: Vec<f64> = images[1..p - 1]
            .par_iter()
            .map(|x| self.value(x))
            .collect::<Result<_>>()?;
        values.extend(interior);
        values.push(fam.values[p - 1]);
        Ok(PathFamily { images, values })
    }

    /// Climbing image: ascend along the tangent `tau` through the neighbours,
    /// descend orthogonally. Step length adapts to decrease the force norm.
    fn climb(
        &self,
        x: PeriodicPath,
        prev: &PeriodicPath,
        next: &PeriodicPath,
        iters: usize,
        tol: f64,
    ) -> Result<PeriodicPath> {
        let grid = self.desc.grid;
        let td: Vec<f64> = next.d.iter().zip(&prev.d).map(|(a, b)| a - b).collect();
        let tm = next.mean - prev.mean;
        let tn = metric_norm(tm, &td, grid);
        if tn == 0.0 {
            return Ok(x);
        }
        let (tm, td): (f64, Vec<f64>) = (tm / tn, td.iter().map(|v| v / tn).collect());
        let force = |x: &PeriodicPath| -> Result<(f64, Vec<f64>, f64)> {
            let g = self.grad(x)?.preconditioned(grid);
            let proj = grid.period * g.d_mean * tm
                + grid.dt * g.d_d.iter().zip(&td).map(|(a, b)| a * b).sum::<f64>();
            let fm = -g.d_mean + 2.0 * proj * tm;
            let fd: Vec<f64> = g
                .d_d
                .iter()
                .zip(&td)
                .map(|(a, b)| -a + 2.0 * proj * b)
                .collect();
            let norm = metric_norm(fm, &fd, grid);
            Ok((fm, fd, norm))
        };
        let mut x = x;
        let (mut fm, mut fd, mut fnorm) = force(&x)?;
        let mut s = 0.1;
        for _ in 0..iters {
            if fnorm <= tol || s < 1e-14 {
                break;
            }
            let d: Vec<f64> = x.d.iter().zip(&fd).map(|(a, b)| a + s * b).collect();
            let trial = if self.frozen {
                x.shifted(s * fm)
            } else {
                self.desc.project(&PeriodicPath {
                    mean: x.mean + s * fm,
                    d,
                })?
            };
            let (tfm, tfd, tnorm) = force(&trial)?;
            if tnorm < fnorm {
                x = trial;
                fm = tfm;
                fd = tfd;
                fnorm = tnorm;
                s *= 1.5;
            } else {
                s *= 0.5;
            }
        }
        Ok(x)
    }

    /// Mean-only maximization by golden-section search on `[lo, hi]`.
    fn maximize_mean(&self, x: &PeriodicPath, lo: f64, hi: f64) -> Result<PeriodicPath> {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo.min(hi), lo.max(hi));
        let at = |r: f64| PeriodicPath {
            mean: r,
            d: x.d.clone(),
        };
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = self.value(&at(c))?;
        let mut fd = self.value(&at(d))?;
        for _ in 0..200 {
            if b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
                break;
            }
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.value(&at(c))?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.value(&at(d))?;
            }
        }
        Ok(at(0.5 * (a + b)))
    }
}

fn initial_family(
    land: &Landscape,
    a: &PeriodicPath,
    b: &PeriodicPath,
    p: usize,
) -> Result<PathFamily> {
    let images: Vec<PeriodicPath> = (0..p)
        .map(|j| match j {
            0 => Ok(a.clone()),
            _ if j == p - 1 => Ok(b.clone()),
            _ => land.lerp(a, b, j as f64 / (p - 1) as f64),
        })
        .collect::<Result<_>>()?;
    let values = images
        .par_iter()
        .map(|x| land.value(x))
        .collect::<Result<_>>()?;
    Ok(PathFamily { images, values })
}

/// Inserts the midpoint of every segment: `P -> 2P - 1`.
fn densify(land: &Landscape, fam: &PathFamily) -> Result<PathFamily> {
    let mut images = Vec::with_capacity(2 * fam.images.len() - 1);
    for w in fam.images.windows(2) {
        images.push(w[0].clone());
        images.push(land.lerp(&w[0], &w[1], 0.5)?);
    }
    images.push(fam.images.last().unwrap().clone());
    let values = images
        .par_iter()
        .map(|x| land.value(x))
        .collect::<Result<_>>()?;
    Ok(PathFamily { images, values })
}

/// String search for the mountain-pass level between `a` and `b`.
pub fn string_search(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    a: &PeriodicPath,
    b: &PeriodicPath,
    opts: &StringOptions,
) -> Result<MountainPassResult> {
    if opts.images < 9 {
        return Err(SolverError::Precondition(format!(
            "string needs at least 9 images, got {}",
            opts.images
        )));
    }
    let land = Landscape {
        desc: Descent::new(spec, grid, Objective::I, false),
        frozen: opts.freeze_tilde,
    };
    for p in [a, b] {
        if p.len() != grid.n {
            return Err(SolverError::DimensionMismatch {
                expected: grid.n,
                got: p.len(),
            });
        }
        if land.desc.project(p)? != *p {
            return Err(SolverError::Precondition(
                "string endpoints must be feasible".into(),
            ));
        }
    }
    if opts.freeze_tilde && a.d != b.d {
        return Err(SolverError::Precondition(
            "frozen search needs endpoints with equal zero-mean parts".into(),
        ));
    }
    let mut fam = initial_family(&land, a, b, opts.images)?;
    let endpoint_level = fam.values[0].max(*fam.values.last().unwrap());
    let collapse = |fam: &PathFamily| -> Result<()> {
        let max = fam.max();
        if max <= endpoint_level + 1e-12 {
            Err(SolverError::CollapseDetected {
                max,
                endpoint_level,
            })
        } else {
            Ok(())
        }
    };
    collapse(&fam)?;

    let mut steps = vec![opts.step_init; fam.images.len()];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut refined = false;
    let mut quiet = 0;
    loop {
        let p = fam.images.len();
        let moved: Vec<(PeriodicPath, f64, f64)> = (1..p - 1)
            .into_par_iter()
            .map(|j| land.descend(&fam.images[j], fam.values[j], steps[j], opts.armijo_c))
            .collect::<Result<_>>()?;
        for (j, (x, v, s)) in moved.into_iter().enumerate() {
            fam.images[j + 1] = x;
            fam.values[j + 1] = v;
            steps[j + 1] = s;
        }
        fam = land.reparametrize(&fam)?;
        collapse(&fam)?;
        let c = fam.max();
        if let Some(&last) = history.last() {
            let change: f64 = c - last;
            quiet = if change.abs() <= opts.string_tol * (1.0 + c.abs()) {
                quiet + 1
            } else {
                0
            };
        }
        history.push(c);
        iterations += 1;
        let settled = quiet >= 10 || iterations >= opts.max_iters;
        if !settled {
            continue;
        }
        let j = fam.argmax();
        if opts.refine && !refined && (j == 1 || j == p - 2) && iterations < opts.max_iters {
            fam = densify(&land, &fam)?;
            steps = vec![opts.step_init; fam.images.len()];
            refined = true;
            quiet = 0;
            continue;
        }
        break;
    }

    let p = fam.images.len();
    let j = fam.argmax().clamp(1, p - 2);
    let mut saddle = if land.frozen {
        land.maximize_mean(
            &fam.images[j],
            fam.images[j - 1].mean,
            fam.images[j + 1].mean,
        )?
    } else {
        land.climb(
            fam.images[j].clone(),
            &fam.images[j - 1],
            &fam.images[j + 1],
            opts.climb_iters,
            0.1 * opts.grad_tol,
        )?
    };
    let mut value = land.value(&saddle)?;
    let mut residual = land.residual(&saddle)?;
    if opts.polish && !land.frozen && residual > 1e-14 {
        let st = land.desc.polish(
            RunState {
                path: saddle,
                value,
                residual,
                iterations: 0,
                log: Vec::new(),
            },
            false,
            50,
        )?;
        saddle = st.path;
        value = st.value;
        residual = st.residual;
    }
    fam.images[j] = saddle.clone();
    fam.values[j] = value;
    let c_hat = fam.max();
    Ok(MountainPassResult {
        c_hat,
        saddle,
        saddle_index: j,
        saddle_grad_norm: residual,
        endpoint_level,
        barrier_gap: c_hat - endpoint_level,
        images: p,
        refined,
        string_iterations: iterations,
        converged: residual <= opts.grad_tol,
        c_hat_history: history,
        family: fam,
    })
}

/// Writes `image_index,x,I_value` rows, `x` the normalized arclength.
pub fn write_family_csv<W: Write>(
    out: &mut W,
    family: &PathFamily,
    grid: &PeriodicGrid,
) -> Result<()> {
    writeln!(out, "image_index,x,I_value")?;
    for (i, (x, v)) in family
        .parameters(grid)
        .iter()
        .zip(&family.values)
        .enumerate()
    {
        writeln!(out, "{i},{x:.16e},{v:.16e}")?;
    }
    Ok(())
}
