use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `max((1 - 4 sqrt(u)) / 2, 0)`.
pub fn survival_floor(u: f64) -> f64 {
    (0.5 * (1.0 - 4.0 * u.max(0.0).sqrt())).max(0.0)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive(
    f: &impl Fn(f64) -> f64,
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
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

pub(crate) fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `P(X + X' > x)` for independent `X, X'` with survival function
/// `survival_floor`: an atom of mass 1/2 at 0 and density `1/sqrt(s)` on
/// `(0, 1/16)`.
fn sum_tail(x: f64) -> f64 {
    let g = survival_floor(x);
    // Substituting s = v^2 turns the density into 2 dv.
    let upper = x.min(1.0 / 16.0).sqrt();
    let lower = if x > 1.0 / 16.0 { (x - 1.0 / 16.0).sqrt() } else { 0.0 };
    let conv = integrate(|v| 2.0 * survival_floor(x - v * v), lower, upper, 1e-14);
    g + 0.5 * g + conv
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GFloorPoint {
    pub x: f64,
    pub floor: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GFloorReport {
    pub points: Vec<GFloorPoint>,
    /// `min (rhs - floor)` over the grid.
    pub min_margin: f64,
    pub argmin_x: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Evaluates `(1 + x/2)/2 P(X > x, X' > x) + (1 - x/2)/2 P(X + X' > x)` with
/// `X, X'` distributed by the floor survival function and compares it to the
/// floor on an evenly spaced grid of `[0, 1]`.
pub fn andor_survival_floor_check(grid_resolution: usize) -> Result<GFloorReport> {
    if grid_resolution < 100 {
        return Err(Error::params("grid_resolution must be at least 100"));
    }
    let points: Vec<GFloorPoint> = (0..grid_resolution)
        .map(|j| {
            let x = j as f64 / (grid_resolution - 1) as f64;
            let g = survival_floor(x);
            let rhs = 0.5 * (1.0 + 0.5 * x) * g * g + 0.5 * (1.0 - 0.5 * x) * sum_tail(x);
            GFloorPoint { x, floor: g, rhs }
        })
        .collect();
    let (argmin_x, min_margin) = points
        .iter()
        .map(|p| (p.x, p.rhs - p.floor))
        .fold((0.0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
    let tolerance = 1e-6;
    Ok(GFloorReport {
        points,
        min_margin,
        argmin_x,
        tolerance,
        holds: min_margin >= -tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed form of the convolution integral.
    fn conv_exact(x: f64) -> f64 {
        let upper = x.min(1.0 / 16.0).sqrt();
        let lower = if x > 1.0 / 16.0 { (x - 1.0 / 16.0).sqrt() } else { 0.0 };
        if upper <= lower {
            return 0.0;
        }
        let prim = |v: f64| {
            let r = (x - v * v).max(0.0).sqrt();
            v - 2.0 * (v * r + x * (v / x.sqrt()).min(1.0).asin())
        };
        prim(upper) - prim(lower)
    }

    #[test]
    fn floor_values() {
        assert_eq!(survival_floor(0.0), 0.5);
        assert_eq!(survival_floor(1.0 / 16.0), 0.0);
        assert_eq!(survival_floor(0.5), 0.0);
    }

    #[test]
    fn convolution_matches_closed_form() {
        for x in [0.001, 0.01, 0.04, 0.0625, 0.08, 0.1, 0.2] {
            let g = survival_floor(x);
            let num = sum_tail(x) - 1.5 * g;
            assert!((num - conv_exact(x)).abs() < 1e-10, "x={x}");
        }
        assert!((sum_tail(1e-12) - 0.75).abs() < 1e-5);
    }

    #[test]
    fn floor_is_a_fixed_point_bound() {
        let r = andor_survival_floor_check(1000).unwrap();
        assert!(r.holds, "min margin {} at {}", r.min_margin, r.argmin_x);
        assert_eq!(r.points[0].floor, 0.5);
        assert!(andor_survival_floor_check(10).is_err());
    }
}
