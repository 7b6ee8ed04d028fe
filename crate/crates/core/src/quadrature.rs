//! Adaptive Simpson quadrature on bounded intervals.

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrates over `[a, b]` by splitting into `panels` equal pieces first.
///
/// Long intervals with localized structure (a bump near the origin on
/// `[0, 1e4]`) need the initial split to avoid false convergence.
pub fn paneled_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + width * p as f64;
            let hi = if p + 1 == panels { b } else { lo + width };
            adaptive_simpson(f, lo, hi, tol / panels as f64)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(&|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert!((v - 0.0).abs() < 1e-12);
    }

    #[test]
    fn sine_squared_over_period() {
        let v = adaptive_simpson(&|x: f64| x.sin().powi(2), 0.0, 2.0 * PI, 1e-12);
        assert!((v - PI).abs() < 1e-10);
    }

    #[test]
    fn localized_bump_with_panels() {
        // atan(1e4) - atan(0)
        let v = paneled_simpson(&|x: f64| 1.0 / (1.0 + x * x), 0.0, 1e4, 64, 1e-11);
        assert!((v - 1e4f64.atan()).abs() < 1e-9);
    }
}
