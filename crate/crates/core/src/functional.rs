//! The discrete energy `I = J + F`:
//!
//! ```text
//! J(u) = sum_i [Phi(d_i) + h(t_i) u_i] dt      (+inf when ||d||_inf > a)
//! F(u) = sum_i F(t_i, u_i) dt
//! ```
//!
//! and the gradient of `I` in `(mean, d)` coordinates. Convexity of `Phi`
//! makes the discrete `J` convex on the constraint set.

use serde::{Serialize, Serializer};

use crate::error::{Result, SolverError};
use crate::grid::{centered_values, PeriodicGrid, PeriodicPath};
use crate::problem::ProblemSpec;

/// A real number or `+inf`, kept as an explicit tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    PlusInfinity,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::PlusInfinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::PlusInfinity)
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => s.serialize_f64(*v),
            Extended::PlusInfinity => s.serialize_str("+inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub j_value: Extended,
    pub f_value: f64,
    pub i_value: Extended,
}

/// Gradient of the smooth-in-the-interior discrete `I`. `d_d` is reduced to
/// the zero-sum tangent space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientVector {
    pub d_mean: f64,
    pub d_d: Vec<f64>,
}

/// Which functional a routine works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Objective {
    /// The convex part `J` only.
    J,
    /// The full energy `I = J + F`.
    I,
}

fn checked(what: &str, t: f64, s: f64, v: f64) -> Result<f64> {
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

/// Node values together with `h(t_i)`, the shared ingredients of every evaluation.
pub(crate) fn nodes_and_forcing(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    path: &PeriodicPath,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if path.len() != grid.n {
        return Err(SolverError::DimensionMismatch {
            expected: grid.n,
            got: path.len(),
        });
    }
    let u: Vec<f64> = centered_values(&path.d, grid.dt)
        .into_iter()
        .map(|x| path.mean + x)
        .collect();
    let mut h = Vec::with_capacity(grid.n);
    for i in 0..grid.n {
        let t = grid.node(i);
        h.push(checked("h", t, 0.0, spec.forcing.h(t))?);
    }
    Ok((u, h))
}

/// Evaluates `J`, `F` and `I` on a path.
pub fn eval_i(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    path: &PeriodicPath,
) -> Result<EnergyBreakdown> {
    let (u, h) = nodes_and_forcing(spec, grid, path)?;
    let mut f_sum = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        let t = grid.node(i);
        f_sum += checked("F", t, ui, spec.nonlinearity.primitive(t, ui))?;
    }
    let f_value = f_sum * grid.dt;
    let a = spec.phi_model.a;
    if path.d.iter().any(|x| x.abs() > a) {
        return Ok(EnergyBreakdown {
            j_value: Extended::PlusInfinity,
            f_value,
            i_value: Extended::PlusInfinity,
        });
    }
    let mut j_sum = 0.0;
    for (i, (&di, &ui)) in path.d.iter().zip(&u).enumerate() {
        j_sum += checked("Phi", grid.node(i), di, spec.phi_model.potential(di))? + h[i] * ui;
    }
    let j_value = j_sum * grid.dt;
    Ok(EnergyBreakdown {
        j_value: Extended::Finite(j_value),
        f_value,
        i_value: Extended::Finite(j_value + f_value),
    })
}

/// Value of the chosen functional.
pub fn eval_objective(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    path: &PeriodicPath,
    objective: Objective,
) -> Result<Extended> {
    match objective {
        Objective::I => Ok(eval_i(spec, grid, path)?.i_value),
        Objective::J => {
            let (u, h) = nodes_and_forcing(spec, grid, path)?;
            if path.d.iter().any(|x| x.abs() > spec.phi_model.a) {
                return Ok(Extended::PlusInfinity);
            }
            let mut sum = 0.0;
            for (i, (&di, &ui)) in path.d.iter().zip(&u).enumerate() {
                sum += checked("Phi", grid.node(i), di, spec.phi_model.potential(di))? + h[i] * ui;
            }
            Ok(Extended::Finite(sum * grid.dt))
        }
    }
}

/// Gradient of `I` at an interior path.
pub fn grad_smooth(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    path: &PeriodicPath,
) -> Result<GradientVector> {
    gradient(spec, grid, path, Objective::I)
}

/// Gradient of the chosen functional at an interior path.
///
/// With node weights `g_i = (f(t_i, u_i) + h(t_i)) dt` (no `f` for `J`), the
/// derivative with respect to the mean is `sum g_i` and, through
/// `du_i/dd_k = dt ([k < i] - (N-1-k)/N)`, the derivative with respect to
/// `d_k` is `phi(d_k) dt + dt (sum_{i>k} g_i - (N-1-k)/N sum g_i)`.
pub fn gradient(
    spec: &ProblemSpec,
    grid: &PeriodicGrid,
    path: &PeriodicPath,
    objective: Objective,
) -> Result<GradientVector> {
    let bound = grid.bound(&spec.phi_model);
    for (index, &value) in path.d.iter().enumerate() {
        if value.abs() > bound * (1.0 + 1e-12) {
            return Err(SolverError::SingularEvaluation {
                index,
                value,
                bound,
            });
        }
    }
    let (u, h) = nodes_and_forcing(spec, grid, path)?;
    let n = grid.n;
    let dt = grid.dt;
    let mut g = h;
    if objective == Objective::I {
        for (i, gi) in g.iter_mut().enumerate() {
            let t = grid.node(i);
            *gi += checked("f", t, u[i], spec.nonlinearity.f(t, u[i]))?;
        }
    }
    g.iter_mut().for_each(|x| *x *= dt);
    let total: f64 = g.iter().sum();
    let mut d_d = vec![0.0; n];
    let mut suffix = 0.0;
    for k in (0..n).rev() {
        let phi = checked(
            "phi",
            grid.node(k),
            path.d[k],
            spec.phi_model.phi(path.d[k]),
        )?;
        d_d[k] = phi * dt + dt * (suffix - (n - 1 - k) as f64 / n as f64 * total);
        suffix += g[k];
    }
    let avg = d_d.iter().sum::<f64>() / n as f64;
    d_d.iter_mut().for_each(|x| *x -= avg);
    Ok(GradientVector { d_mean: total, d_d })
}

/// The working metric on `(mean, d)`: `||x||^2 = T mean^2 + dt sum d_i^2`,
/// the `L^2(0, T)` norm of `(u_bar, u')`.
pub fn metric_norm(mean: f64, d: &[f64], grid: &PeriodicGrid) -> f64 {
    (grid.period * mean * mean + grid.dt * d.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

pub fn path_distance(p: &PeriodicPath, q: &PeriodicPath, grid: &PeriodicGrid) -> f64 {
    let d: Vec<f64> = p.d.iter().zip(&q.d).map(|(a, b)| a - b).collect();
    metric_norm(p.mean - q.mean, &d, grid)
}

impl GradientVector {
    /// Riesz representative in the working metric: `(d_mean / T, d_d / dt)`.
    pub fn preconditioned(&self, grid: &PeriodicGrid) -> GradientVector {
        GradientVector {
            d_mean: self.d_mean / grid.period,
            d_d: self.d_d.iter().map(|x| x / grid.dt).collect(),
        }
    }

    /// Euclidean pairing with a displacement in `(mean, d)` coordinates.
    pub fn pair(&self, d_mean: f64, d_d: &[f64]) -> f64 {
        self.d_mean * d_mean + self.d_d.iter().zip(d_d).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin_relativistic, Forcing, Nonlinearity, Preset};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn free_spec(period: f64, forcing: Forcing) -> ProblemSpec {
        let zero = Nonlinearity::new(
            "zero",
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| 0.0),
            0.0,
            0.0,
            0.0,
        );
        ProblemSpec::new(period, builtin_relativistic(), zero, forcing).unwrap()
    }

    #[test]
    fn constant_path_has_zero_energy() {
        let spec = free_spec(2.0 * PI, Forcing::zero());
        let g = PeriodicGrid::new(16, 2.0 * PI).unwrap();
        let e = eval_i(&spec, &g, &PeriodicPath::constant(7.0, 16)).unwrap();
        assert_eq!(e.i_value, Extended::Finite(0.0));
    }

    #[test]
    fn hand_evaluated_two_slope_path() {
        // T = 2 split in two unit cells (the grid type requires N >= 8, so
        // the same path is spread over 8 cells of width 1/4).
        let spec = free_spec(2.0, Forcing::zero());
        let g = PeriodicGrid::new(8, 2.0).unwrap();
        let p = PeriodicPath {
            mean: 0.0,
            d: vec![0.6, 0.6, 0.6, 0.6, -0.6, -0.6, -0.6, -0.6],
        };
        let e = eval_i(&spec, &g, &p).unwrap();
        assert!((e.i_value.finite().unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn outside_k_is_infinite_but_f_is_finite() {
        let spec = ProblemSpec::preset(Preset::AttractiveResonance, 1.0, Forcing::zero()).unwrap();
        let g = PeriodicGrid::new(8, 1.0).unwrap();
        let p = PeriodicPath::from_derivative(0.0, vec![1.5, -1.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let e = eval_i(&spec, &g, &p).unwrap();
        assert!(e.i_value.is_infinite() && e.j_value.is_infinite());
        assert!(e.f_value.is_finite());
        assert!(matches!(
            grad_smooth(&spec, &g, &p),
            Err(SolverError::SingularEvaluation { index: 0, .. })
        ));
    }

    #[test]
    fn zero_gradient_at_trivial_minimizer() {
        let spec = free_spec(3.0, Forcing::zero());
        let g = PeriodicGrid::new(16, 3.0).unwrap();
        let gr = grad_smooth(&spec, &g, &PeriodicPath::constant(0.0, 16)).unwrap();
        assert_eq!(gr.d_mean, 0.0);
        assert!(gr.d_d.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn mean_derivative_is_forcing_integral() {
        let spec = free_spec(2.0 * PI, Forcing::sine(0.3, 1.0));
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let p = PeriodicPath::from_derivative(
            1.0,
            g.nodes().iter().map(|t| 0.4 * (2.0 * t).cos()).collect(),
        );
        let gr = grad_smooth(&spec, &g, &p).unwrap();
        assert!(gr.d_mean.abs() < 1e-15);
        assert!(gr.d_d.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn objective_j_matches_breakdown() {
        let spec = ProblemSpec::preset(
            Preset::RepulsiveResonance,
            4.0,
            Forcing::cosine(0.2, PI / 2.0),
        )
        .unwrap();
        let g = PeriodicGrid::new(32, 4.0).unwrap();
        let p = PeriodicPath::from_derivative(
            0.5,
            g.nodes()
                .iter()
                .map(|t| 0.3 * (t * PI / 2.0).sin())
                .collect(),
        );
        let e = eval_i(&spec, &g, &p).unwrap();
        assert_eq!(
            eval_objective(&spec, &g, &p, Objective::J).unwrap(),
            e.j_value
        );
        assert_eq!(
            e.i_value.finite().unwrap(),
            e.j_value.finite().unwrap() + e.f_value
        );
    }
}
