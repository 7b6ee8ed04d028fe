use std::f64::consts::PI;

use phi_periodic::functional::{
    eval_i, eval_objective, gradient, path_distance, Extended, Objective,
};
use phi_periodic::grid::{node_values, PeriodicGrid, PeriodicPath};
use phi_periodic::optimize::{minimize_over_w, DescentOptions};
use phi_periodic::problem::{default_forcing, Preset, ProblemSpec};
use phi_periodic::verify::{check_critical_inequality, el_residual};
use proptest::prelude::*;

fn spec(preset: usize, period: f64) -> ProblemSpec {
    let p = [
        Preset::ClassicPendulum { amplitude: 1.0 },
        Preset::AttractiveResonance,
        Preset::RepulsiveResonance,
    ][preset];
    ProblemSpec::preset(p, period, default_forcing(period)).unwrap()
}

fn path_strategy(n: usize) -> impl Strategy<Value = PeriodicPath> {
    (-5.0f64..5.0, prop::collection::vec(-0.9f64..0.9, n)).prop_map(|(mean, raw)| {
        let p = PeriodicPath::from_derivative(mean, raw);
        let s = p.max_abs_derivative();
        // keep |d| <= 0.9 after centering
        let d = if s > 0.9 {
            p.d.iter().map(|x| x * 0.9 / s).collect()
        } else {
            p.d
        };
        PeriodicPath { mean, d }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_splits(p in path_strategy(16), preset in 0usize..3, period in 1.0f64..30.0) {
        let spec = spec(preset, period);
        let grid = PeriodicGrid::new(16, period).unwrap();
        let e = eval_i(&spec, &grid, &p).unwrap();
        let j = e.j_value.finite().unwrap();
        prop_assert_eq!(e.i_value, Extended::Finite(j + e.f_value));
        prop_assert_eq!(eval_objective(&spec, &grid, &p, Objective::J).unwrap(), e.j_value);
    }

    #[test]
    fn node_values_are_periodic_and_centered(p in path_strategy(32), period in 0.5f64..20.0) {
        let grid = PeriodicGrid::new(32, period).unwrap();
        let u = node_values(&p, &grid).unwrap();
        let mean = u.iter().sum::<f64>() / 32.0;
        prop_assert!((mean - p.mean).abs() <= 1e-12 * (1.0 + p.mean.abs()));
        // stepping once around the circle returns to the start
        let wrap = u[31] + p.d[31] * grid.dt;
        prop_assert!((wrap - u[0]).abs() <= 1e-12 * (1.0 + u[0].abs()));
    }

    #[test]
    fn infeasible_paths_have_infinite_energy(p in path_strategy(16), k in 0usize..16) {
        let spec = spec(1, 2.0 * PI);
        let grid = PeriodicGrid::new(16, spec.period).unwrap();
        let mut d = p.d.clone();
        d[k] = 1.5;
        let q = PeriodicPath::from_derivative(p.mean, d);
        prop_assume!(q.max_abs_derivative() > 1.0);
        let e = eval_i(&spec, &grid, &q).unwrap();
        prop_assert!(e.i_value.is_infinite() && e.f_value.is_finite());
    }

    #[test]
    fn mean_gradient_is_total_forcing(p in path_strategy(16), preset in 0usize..3) {
        let spec = spec(preset, 2.0 * PI);
        let grid = PeriodicGrid::new(16, spec.period).unwrap();
        let g = gradient(&spec, &grid, &p, Objective::I).unwrap();
        let u = node_values(&p, &grid).unwrap();
        let total: f64 = (0..16).map(|i| (spec.nonlinearity.f(grid.node(i), u[i]) + spec.forcing.h(grid.node(i))) * grid.dt).sum();
        prop_assert!((g.d_mean - total).abs() <= 1e-13);
        prop_assert!(g.d_d.iter().sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn distance_is_a_metric(p in path_strategy(16), q in path_strategy(16), r in path_strategy(16)) {
        let grid = PeriodicGrid::new(16, 3.0).unwrap();
        let (pq, qr, pr) = (path_distance(&p, &q, &grid), path_distance(&q, &r, &grid), path_distance(&p, &r, &grid));
        prop_assert!((pq - path_distance(&q, &p, &grid)).abs() <= 1e-15 * (1.0 + pq));
        prop_assert!(pr <= pq + qr + 1e-12);
        prop_assert_eq!(path_distance(&p, &p, &grid), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Every critical point of `I` on `W` found by descent satisfies the
    /// discrete Euler-Lagrange equation up to the mean constraint, which
    /// contributes a constant to the defect.
    #[test]
    fn restricted_minimizer_has_constant_defect(preset in 0usize..3, amp in 0.01f64..0.3) {
        let spec = ProblemSpec::preset(
            [Preset::ClassicPendulum { amplitude: 1.0 }, Preset::AttractiveResonance, Preset::RepulsiveResonance][preset],
            2.0 * PI,
            phi_periodic::problem::Forcing::cosine(amp, 1.0),
        ).unwrap();
        let grid = PeriodicGrid::new(32, spec.period).unwrap();
        let opts = DescentOptions { restarts: 1, rounds: 1, ..Default::default() };
        let w = minimize_over_w(&spec, &grid, &opts, Objective::I).unwrap();
        prop_assume!(w.converged && w.path.max_abs_derivative() < grid.bound(&spec.phi_model));
        // the defect equals -(Lagrange multiplier of the zero-mean constraint) everywhere
        let u = node_values(&w.path, &grid).unwrap();
        let phi: Vec<f64> = w.path.d.iter().map(|&s| spec.phi_model.phi(s)).collect();
        let defect: Vec<f64> = (0..32)
            .map(|i| (phi[i] - phi[(i + 31) % 32]) / grid.dt - spec.nonlinearity.f(grid.node(i), u[i]) - spec.forcing.h(grid.node(i)))
            .collect();
        let spread = defect.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - defect.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        prop_assert!(spread <= 1e-7, "spread {}", spread);
        let sup = defect.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        prop_assert!((el_residual(&spec, &grid, &w.path).unwrap().0 - sup).abs() <= 1e-12 * (1.0 + sup));
    }

    #[test]
    fn zero_mean_minimizer_of_j_passes_inequality(amp in 0.01f64..0.5, seed in 0u64..1000) {
        let spec = ProblemSpec::new(
            2.0 * PI,
            phi_periodic::problem::builtin_relativistic(),
            phi_periodic::problem::Nonlinearity::new("zero", std::sync::Arc::new(|_, _| 0.0), std::sync::Arc::new(|_, _| 0.0), 0.0, 0.0, 0.0),
            phi_periodic::problem::Forcing::sine(amp, 2.0),
        ).unwrap();
        let grid = PeriodicGrid::new(32, spec.period).unwrap();
        let w = minimize_over_w(&spec, &grid, &DescentOptions { restarts: 1, ..Default::default() }, Objective::J).unwrap();
        let worst = check_critical_inequality(&spec, &grid, &w.path, 100, seed, None).unwrap().finite().unwrap();
        prop_assert!(worst >= -1e-8, "{}", worst);
    }
}
