//! Hardy-Littlewood and uniform submajorization between step functions.

use crate::rearrangement::StepFunction;

pub const DEFAULT_LAMBDA_MAX: u32 = 64;
/// Relative slack for comparing partial integrals.
pub const MAJORIZATION_TOLERANCE: f64 = 1e-10;

fn slack(y: &StepFunction, x: &StepFunction) -> f64 {
    MAJORIZATION_TOLERANCE * (1.0 + y.total_integral() + x.total_integral())
}

/// `y <<< x`: `int_0^t mu(y) <= int_0^t mu(x)` for every `t > 0`.
///
/// Both sides are concave and piecewise linear with kinks at the step
/// endpoints, so checking the union of breakpoints (the last of which covers
/// `t -> infty`) is exact.
pub fn hl_submajorize(y: &StepFunction, x: &StepFunction) -> bool {
    let tol = slack(y, x);
    y.breakpoints()
        .into_iter()
        .chain(x.breakpoints())
        .all(|t| y.cumulative(t) <= x.cumulative(t) + tol)
}

/// Smallest `lambda in 1..=lambda_max` with
/// `int_{lambda a}^b mu(y) <= int_a^b mu(x)` for all `0 <= lambda a <= b`.
///
/// The gap `g(a, b) = [F_x(b) - F_y(b)] + [F_y(lambda a) - F_x(a)]` is a sum
/// of a function of `b` and a function of `a`, each piecewise linear, so on
/// every grid cell it is linear and its minimum over the constraint region
/// sits at a vertex: grid points with `lambda a <= b`, or intersections of
/// the grid lines with the diagonal `b = lambda a`.
pub fn uniform_submajorize(y: &StepFunction, x: &StepFunction, lambda_max: u32) -> Option<u32> {
    (1..=lambda_max.max(1)).find(|&lambda| uniform_holds(y, x, lambda as f64))
}

fn uniform_holds(y: &StepFunction, x: &StepFunction, lambda: f64) -> bool {
    let tol = slack(y, x);
    let h_b = |b: f64| x.cumulative(b) - y.cumulative(b);
    let h_a = |a: f64| y.cumulative(lambda * a) - x.cumulative(a);

    let mut b_grid: Vec<f64> = std::iter::once(0.0).chain(x.breakpoints()).chain(y.breakpoints()).collect();
    b_grid.sort_by(f64::total_cmp);
    b_grid.dedup();
    // suffix minimum of h_b over the grid
    let mut suffix_min = vec![f64::INFINITY; b_grid.len() + 1];
    for i in (0..b_grid.len()).rev() {
        suffix_min[i] = suffix_min[i + 1].min(h_b(b_grid[i]));
    }

    let a_candidates = std::iter::once(0.0)
        .chain(x.breakpoints())
        .chain(y.breakpoints().into_iter().map(|t| t / lambda))
        .chain(b_grid.iter().map(|&b| b / lambda));
    for a in a_candidates {
        let b0 = lambda * a;
        let first = b_grid.partition_point(|&b| b < b0);
        let best_b = h_b(b0).min(suffix_min[first]);
        if h_a(a) + best_b < -tol {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(pairs: &[(f64, f64)]) -> StepFunction {
        StepFunction::from_pairs(pairs.iter().copied())
    }

    /// Dense-grid oracle for the two-parameter inequality.
    fn uniform_brute(y: &StepFunction, x: &StepFunction, lambda: f64, horizon: f64, n: usize) -> bool {
        let h = horizon / n as f64;
        for i in 0..=n {
            let a = i as f64 * h;
            for j in 0..=n {
                let b = j as f64 * h;
                if lambda * a > b {
                    continue;
                }
                let lhs = y.cumulative(b) - y.cumulative(lambda * a);
                let rhs = x.cumulative(b) - x.cumulative(a);
                if lhs > rhs + 1e-12 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn hl_examples() {
        let y = sf(&[(1.0, 2.0)]);
        let x = sf(&[(2.0, 1.0)]);
        assert!(hl_submajorize(&y, &x));
        assert!(hl_submajorize(&x, &x));
        assert!(!hl_submajorize(&x, &y));
        assert!(hl_submajorize(&StepFunction::zero(), &x));
        assert!(!hl_submajorize(&x, &StepFunction::zero()));
    }

    #[test]
    fn hl_detects_tail_violation() {
        // partial integrals agree up to t = 1 but y has more total mass
        let y = sf(&[(1.0, 1.5)]);
        let x = sf(&[(1.0, 1.0)]);
        assert!(!hl_submajorize(&y, &x));
    }

    #[test]
    fn uniform_example_needs_lambda_two() {
        let y = sf(&[(1.0, 2.0)]);
        let x = sf(&[(2.0, 1.0)]);
        assert!(!uniform_brute(&y, &x, 1.0, 3.0, 300));
        assert!(uniform_brute(&y, &x, 2.0, 3.0, 300));
        assert_eq!(uniform_submajorize(&y, &x, 8), Some(2));
        assert_eq!(uniform_submajorize(&y, &x, 1), None);
        assert_eq!(uniform_submajorize(&x, &x, DEFAULT_LAMBDA_MAX), Some(1));
    }

    #[test]
    fn uniform_matches_grid_oracle_on_fixed_cases() {
        let cases = [
            (sf(&[(3.0, 0.25), (1.0, 1.0)]), sf(&[(2.0, 1.0), (0.5, 1.0)])),
            (sf(&[(1.0, 1.0), (0.5, 2.0)]), sf(&[(4.0, 0.5)])),
            (sf(&[(2.0, 0.5)]), sf(&[(1.0, 1.0)])),
            (sf(&[(1.0, 4.0)]), sf(&[(4.0, 1.0)])),
        ];
        for (y, x) in &cases {
            for lambda in 1..=5 {
                let fast = uniform_holds(y, x, lambda as f64);
                let slow = uniform_brute(y, x, lambda as f64, 6.0, 480);
                assert_eq!(fast, slow, "lambda={lambda} y={y:?} x={x:?}");
            }
        }
    }

    #[test]
    fn uniform_implies_hl() {
        let cases = [
            (sf(&[(3.0, 0.25), (1.0, 1.0)]), sf(&[(2.0, 1.0), (0.5, 1.0)])),
            (sf(&[(1.0, 4.0)]), sf(&[(4.0, 1.0)])),
            (sf(&[(2.0, 0.5)]), sf(&[(1.0, 1.0)])),
        ];
        for (y, x) in &cases {
            if uniform_submajorize(y, x, 16).is_some() {
                assert!(hl_submajorize(y, x));
            }
        }
    }
}
