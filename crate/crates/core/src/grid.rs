//! Discrete T-periodic Lipschitz paths.
//!
//! A path is stored as its mean value plus derivative samples `d_i ~ u'` on
//! `[t_i, t_{i+1})` with `sum d_i = 0`. Node values are the zero-drift
//! cumulative sums shifted to the prescribed mean, so `u(0) = u(T)` holds by
//! construction and the constraint set `||u'|| <= a` is a box intersected
//! with one hyperplane.

use std::io::Write;

use serde::Serialize;

use crate::error::{Result, SolverError};
use crate::problem::PhiModel;

pub const DEFAULT_MARGIN: f64 = 1e-6;

/// `N` equispaced nodes on `[0, T)`, plus the interior margin used to keep
/// derivative samples away from the singularity at `+-a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicGrid {
    pub n: usize,
    pub period: f64,
    pub dt: f64,
    pub margin: f64,
}

impl PeriodicGrid {
    pub fn new(n: usize, period: f64) -> Result<Self> {
        Self::with_margin(n, period, DEFAULT_MARGIN)
    }

    pub fn with_margin(n: usize, period: f64, margin: f64) -> Result<Self> {
        if n < 8 {
            return Err(SolverError::InvalidProblem(format!(
                "grid needs N >= 8 nodes, got {n}"
            )));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(SolverError::InvalidProblem(format!(
                "period T = {period} must be positive"
            )));
        }
        KProjectionConfig::new(margin)?;
        Ok(PeriodicGrid {
            n,
            period,
            dt: period / n as f64,
            margin,
        })
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn projection(&self) -> KProjectionConfig {
        KProjectionConfig {
            margin: self.margin,
        }
    }

    /// Largest admissible `|d_i|` for the operator.
    pub fn bound(&self, pm: &PhiModel) -> f64 {
        pm.a * (1.0 - self.margin)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(SolverError::DimensionMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }
}

/// Paths are projected into `||d||_inf <= a (1 - margin)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KProjectionConfig {
    pub margin: f64,
}

impl KProjectionConfig {
    pub fn new(margin: f64) -> Result<Self> {
        if !(margin > 0.0 && margin <= 0.1) {
            return Err(SolverError::InvalidProblem(format!(
                "margin {margin} must lie in (0, 0.1]"
            )));
        }
        Ok(KProjectionConfig { margin })
    }
}

impl Default for KProjectionConfig {
    fn default() -> Self {
        KProjectionConfig {
            margin: DEFAULT_MARGIN,
        }
    }
}

/// A discrete periodic function: mean value plus zero-sum derivative samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicPath {
    pub mean: f64,
    pub d: Vec<f64>,
}

impl PeriodicPath {
    /// Constant path.
    pub fn constant(mean: f64, n: usize) -> Self {
        PeriodicPath {
            mean,
            d: vec![0.0; n],
        }
    }

    /// Builds a path from arbitrary derivative samples by removing their
    /// average, which makes them zero-sum.
    pub fn from_derivative(mean: f64, mut d: Vec<f64>) -> Self {
        let avg = d.iter().sum::<f64>() / d.len().max(1) as f64;
        d.iter_mut().for_each(|x| *x -= avg);
        PeriodicPath { mean, d }
    }

    /// Path whose node values approximate `u` (forward differences, mean of
    /// the node samples).
    pub fn from_values(values: &[f64], grid: &PeriodicGrid) -> Result<Self> {
        grid.check_len(values.len())?;
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let d = (0..n)
            .map(|i| (values[(i + 1) % n] - values[i]) / grid.dt)
            .collect();
        Ok(PeriodicPath::from_derivative(mean, d))
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn max_abs_derivative(&self) -> f64 {
        self.d.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `sum d_i dt = 0` to `1e-12`.
    pub fn is_periodic(&self, grid: &PeriodicGrid) -> bool {
        (self.d.iter().sum::<f64>() * grid.dt).abs() <= 1e-12
    }

    /// The same path translated by `r`.
    pub fn shifted(&self, r: f64) -> Self {
        PeriodicPath {
            mean: self.mean + r,
            d: self.d.clone(),
        }
    }

    /// `(1 - tau) self + tau other` in (mean, d) coordinates.
    pub fn lerp(&self, other: &PeriodicPath, tau: f64) -> Self {
        PeriodicPath {
            mean: (1.0 - tau) * self.mean + tau * other.mean,
            d: self
                .d
                .iter()
                .zip(&other.d)
                .map(|(a, b)| (1.0 - tau) * a + tau * b)
                .collect(),
        }
    }
}

/// Splits a path into its mean and zero-mean part. Both share `d`.
pub fn decompose(path: &PeriodicPath) -> (f64, PeriodicPath) {
    (
        path.mean,
        PeriodicPath {
            mean: 0.0,
            d: path.d.clone(),
        },
    )
}

/// Zero-mean node values `c_i - avg(c)` with `c_i = sum_{j<i} d_j dt`.
pub fn centered_values(d: &[f64], dt: f64) -> Vec<f64> {
    let mut c = Vec::with_capacity(d.len());
    let mut acc = 0.0;
    for &x in d {
        c.push(acc);
        acc += x * dt;
    }
    let avg = c.iter().sum::<f64>() / c.len().max(1) as f64;
    c.iter_mut().for_each(|x| *x -= avg);
    c
}

/// Node values `u_i = mean + c_i - avg(c)`.
pub fn node_values(path: &PeriodicPath, grid: &PeriodicGrid) -> Result<Vec<f64>> {
    grid.check_len(path.len())?;
    Ok(centered_values(&path.d, grid.dt)
        .into_iter()
        .map(|x| path.mean + x)
        .collect())
}

/// Periodic rectangle rule `sum samples_i dt`.
pub fn integrate(samples: &[f64], grid: &PeriodicGrid) -> Result<f64> {
    grid.check_len(samples.len())?;
    Ok(samples.iter().sum::<f64>() * grid.dt)
}

/// Euclidean projection of `d` onto `{|d_i| <= bound, sum d_i = 0}`.
///
/// The solution is `clamp(d_i - lambda, -bound, bound)` for the unique
/// `lambda` making the sum vanish; `lambda` is bracketed and bisected, then
/// recomputed exactly from the resulting active set.
pub fn project_box_zero_sum(d: &[f64], bound: f64) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let sum: f64 = d.iter().sum();
    let feasible =
        d.iter().all(|x| x.abs() <= bound) && sum.abs() <= 1e-14 * n as f64 * bound.max(1.0);
    if feasible {
        return Ok(d.to_vec());
    }
    let clamp_sum = |lam: f64| {
        d.iter()
            .map(|x| (x - lam).clamp(-bound, bound))
            .sum::<f64>()
    };
    let mut lo = d.iter().copied().fold(f64::INFINITY, f64::min) - bound;
    let mut hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max) + bound;
    if !(lo.is_finite() && hi.is_finite()) || clamp_sum(lo) < 0.0 || clamp_sum(hi) > 0.0 {
        return Err(SolverError::BisectionFailure);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if clamp_sum(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    // exact multiplier on the free set
    let mut free_sum = 0.0;
    let mut free = 0usize;
    let mut clamped_sum = 0.0;
    for &x in d {
        let y = x - lam;
        if y > bound {
            clamped_sum += bound;
        } else if y < -bound {
            clamped_sum -= bound;
        } else {
            free_sum += x;
            free += 1;
        }
    }
    let lam = if free > 0 {
        (free_sum + clamped_sum) / free as f64
    } else {
        lam
    };
    let out: Vec<f64> = d.iter().map(|x| (x - lam).clamp(-bound, bound)).collect();
    Ok(out)
}

/// Projects a path onto the discrete constraint set; the mean is unchanged.
pub fn project_to_k(
    path: &PeriodicPath,
    phi_model: &PhiModel,
    cfg: &KProjectionConfig,
) -> Result<PeriodicPath> {
    let bound = phi_model.a * (1.0 - cfg.margin);
    Ok(PeriodicPath {
        mean: path.mean,
        d: project_box_zero_sum(&path.d, bound)?,
    })
}

/// Writes `t,u,du` rows with 17 significant digits.
pub fn write_path_csv<W: Write>(
    out: &mut W,
    path: &PeriodicPath,
    grid: &PeriodicGrid,
) -> Result<()> {
    let u = node_values(path, grid)?;
    writeln!(out, "t,u,du")?;
    for (i, (ui, di)) in u.iter().zip(&path.d).enumerate() {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", grid.node(i), ui, di)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin_relativistic;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_rejects_small_n() {
        assert!(PeriodicGrid::new(4, 1.0).is_err());
        assert!(PeriodicGrid::new(8, -1.0).is_err());
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        assert!((g.dt * 64.0 - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn decompose_constant() {
        let (m, tilde) = decompose(&PeriodicPath::constant(3.0, 16));
        assert_eq!(m, 3.0);
        assert_eq!(tilde, PeriodicPath::constant(0.0, 16));
    }

    #[test]
    fn decompose_recombine_is_bitwise() {
        let g = PeriodicGrid::new(32, 5.0).unwrap();
        let p = PeriodicPath::from_derivative(
            -1.25,
            (0..32).map(|i| (i as f64 * 0.7).sin() * 0.3).collect(),
        );
        let (m, tilde) = decompose(&p);
        let direct = node_values(&p, &g).unwrap();
        let recombined: Vec<f64> = node_values(&tilde, &g)
            .unwrap()
            .into_iter()
            .map(|x| m + x)
            .collect();
        assert_eq!(direct, recombined);
    }

    #[test]
    fn decompose_sine_mean() {
        let g = PeriodicGrid::new(128, 3.0).unwrap();
        let w = 2.0 * PI / g.period;
        let values: Vec<f64> = g.nodes().iter().map(|t| 2.0 + (w * t).sin()).collect();
        let p = PeriodicPath::from_values(&values, &g).unwrap();
        let (m, _) = decompose(&p);
        assert!((m - 2.0).abs() < 1e-14);
    }

    #[test]
    fn node_values_constant_and_sawtooth() {
        let g = PeriodicGrid::new(8, 8.0).unwrap();
        assert_eq!(
            node_values(&PeriodicPath::constant(5.0, 8), &g).unwrap(),
            vec![5.0; 8]
        );
        // c = 0, 1, 0, 1, ... ; avg 1/2
        let p = PeriodicPath {
            mean: 0.0,
            d: (0..8)
                .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
                .collect(),
        };
        let u = node_values(&p, &g).unwrap();
        for (i, x) in u.iter().enumerate() {
            assert_eq!(*x, if i % 2 == 0 { -0.5 } else { 0.5 });
        }
        assert!(node_values(&PeriodicPath::constant(0.0, 7), &g).is_err());
    }

    #[test]
    fn node_values_of_cosine_derivative() {
        let g = PeriodicGrid::new(256, 2.0 * PI).unwrap();
        let w = 2.0 * PI / g.period;
        let p =
            PeriodicPath::from_derivative(0.0, g.nodes().iter().map(|t| (w * t).cos()).collect());
        let u = node_values(&p, &g).unwrap();
        let err = g
            .nodes()
            .iter()
            .zip(&u)
            .map(|(t, x)| (x - (w * t).sin() / w).abs())
            .fold(0.0, f64::max);
        assert!(err < g.dt, "err {err}");
    }

    #[test]
    fn integrate_rules() {
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        assert!((integrate(&vec![1.0; 64], &g).unwrap() - 2.0 * PI).abs() < 1e-14);
        let s: Vec<f64> = g.nodes().iter().map(|t| t.sin()).collect();
        assert!(integrate(&s, &g).unwrap().abs() < 1e-12);
        let s2: Vec<f64> = g.nodes().iter().map(|t| t.sin().powi(2)).collect();
        assert!((integrate(&s2, &g).unwrap() - PI).abs() < 1e-10);
        assert!(integrate(&s2[..10], &g).is_err());
    }

    #[test]
    fn projection_two_point_example() {
        let out = project_box_zero_sum(&[3.0, -1.0], 1.0).unwrap();
        assert_eq!(out, vec![1.0, -1.0]);
    }

    #[test]
    fn projection_keeps_feasible_and_mean() {
        let pm = builtin_relativistic();
        let p =
            PeriodicPath::from_derivative(4.0, vec![0.1, -0.2, 0.3, 0.0, -0.1, 0.05, -0.05, -0.1]);
        let q = project_to_k(&p, &pm, &KProjectionConfig::default()).unwrap();
        assert_eq!(p, q);
        let far = PeriodicPath {
            mean: -2.0,
            d: vec![5.0, -3.0, 2.0, 0.0, 0.1, -9.0, 1.0, 0.3],
        };
        let q = project_to_k(&far, &pm, &KProjectionConfig::default()).unwrap();
        assert_eq!(q.mean, -2.0);
        assert!(q.max_abs_derivative() <= 1.0 - 1e-6);
        assert!(q.d.iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn csv_dump_format() {
        let g = PeriodicGrid::new(8, 1.0).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &PeriodicPath::constant(0.5, 8), &g).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,u,du"));
        let row: Vec<f64> = lines
            .nth(1)
            .unwrap()
            .split(',')
            .map(|x| x.parse().unwrap())
            .collect();
        assert_eq!(row, vec![0.125, 0.5, 0.0]);
    }

    proptest! {
        #[test]
        fn zero_sum_integrates_to_zero(raw in prop::collection::vec(-10.0f64..10.0, 8..64)) {
            let n = raw.len();
            let g = PeriodicGrid::new(n, 3.7).unwrap();
            let p = PeriodicPath::from_derivative(0.0, raw);
            prop_assert!(integrate(&p.d, &g).unwrap().abs() < 1e-12);
            let u = node_values(&p, &g).unwrap();
            prop_assert!((u.iter().sum::<f64>() / n as f64).abs() < 1e-12);
            prop_assert!(p.is_periodic(&g));
        }

        #[test]
        fn projection_is_feasible_and_idempotent(raw in prop::collection::vec(-3.0f64..3.0, 2..40), bound in 0.1f64..2.0) {
            let once = project_box_zero_sum(&raw, bound).unwrap();
            prop_assert!(once.iter().all(|x| x.abs() <= bound));
            prop_assert!(once.iter().sum::<f64>().abs() <= 1e-12 * raw.len() as f64);
            let twice = project_box_zero_sum(&once, bound).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
