//! Bracketed root finding for monotone functions.

use crate::error::{MddError, Result};

/// Smallest `x` in `[lo, hi]` (up to `tol`) with `f(x) >= target`, for a
/// nondecreasing `f`. Returns the endpoint when the target lies outside the
/// range of `f` on the bracket.
pub fn invert_monotone<F>(f: F, target: f64, lo: f64, hi: f64, tol: f64, max_iter: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    if f(a) >= target {
        return a;
    }
    if f(b) < target {
        return b;
    }
    for _ in 0..max_iter {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if f(m) >= target {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// Bisection to width `tol` followed by secant polishing steps kept inside
/// the final bracket.
pub fn bisect_secant<F>(f: F, target: f64, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let g = |x: f64| f(x) - target;
    let (ga, gb) = (g(lo), g(hi));
    if ga == 0.0 {
        return Ok(lo);
    }
    if gb == 0.0 {
        return Ok(hi);
    }
    if ga.signum() == gb.signum() {
        return Err(MddError::RootNotBracketed { lo, hi });
    }
    let increasing = gb > 0.0;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let gm = g(m);
        if gm == 0.0 {
            return Ok(m);
        }
        if (gm > 0.0) == increasing {
            b = m;
        } else {
            a = m;
        }
    }
    let (mut x0, mut x1) = (a, b);
    let (mut g0, mut g1) = (g(a), g(b));
    for _ in 0..3 {
        if g1 == g0 {
            break;
        }
        let x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
        if !(x2 >= a && x2 <= b) {
            break;
        }
        x0 = x1;
        g0 = g1;
        x1 = x2;
        g1 = g(x1);
    }
    if g0.abs() < g1.abs() {
        Ok(x0)
    } else {
        Ok(x1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_square() {
        let x = invert_monotone(|x| x * x, 0.25, 0.0, 1.0, 1e-14, 200);
        assert!((x - 0.5).abs() < 1e-13);
        let y = bisect_secant(|x| x * x, 0.5, 0.0, 1.0, 1e-12).unwrap();
        assert!((y - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn endpoints_and_unbracketed() {
        assert_eq!(invert_monotone(|x| x, -1.0, 0.0, 1.0, 1e-12, 100), 0.0);
        assert_eq!(invert_monotone(|x| x, 2.0, 0.0, 1.0, 1e-12, 100), 1.0);
        assert!(bisect_secant(|x| x, 2.0, 0.0, 1.0, 1e-12).is_err());
    }
}
