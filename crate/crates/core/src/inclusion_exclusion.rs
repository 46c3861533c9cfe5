//! Signed subset sums: unions of threshold events, box volumes and
//! reflections of distribution functions on the unit cube.
//!
//! A threshold event is a vector `t` standing for `{U_1 <= t_1, ..., U_n <= t_n}`.
//! The intersection of threshold events is again a threshold event (the
//! componentwise minimum), so the probability of a union of `m` events is an
//! exact signed sum over the `2^m - 1` nonempty subsets.

use crate::error::{MddError, Result};

/// Largest number of events accepted by [`union_probability`].
pub const MAX_EVENTS: usize = 16;

/// `Pr(E_1 ∪ … ∪ E_m)` for threshold events, given the joint distribution
/// function `cdf` evaluated at thresholds.
pub fn union_probability<F>(events: &[Vec<f64>], cdf: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let m = events.len();
    if m > MAX_EVENTS {
        return Err(MddError::TooManyEvents {
            events: m,
            limit: MAX_EVENTS,
        });
    }
    if m == 0 {
        return Ok(0.0);
    }
    let n = events[0].len();
    if let Some(bad) = events.iter().find(|e| e.len() != n) {
        return Err(MddError::DimensionMismatch {
            expected: n,
            got: bad.len(),
        });
    }
    // One scratch row per subset size: row k holds the running minimum of
    // the current k-element subset.
    let mut scratch = vec![vec![1.0; n]; m + 1];
    let mut total = 0.0;
    walk(events, &cdf, 0, 0, &mut scratch, &mut total);
    Ok(total)
}

fn walk<F>(events: &[Vec<f64>], cdf: &F, start: usize, size: usize, scratch: &mut [Vec<f64>], total: &mut f64)
where
    F: Fn(&[f64]) -> f64,
{
    for j in start..events.len() {
        let (head, tail) = scratch.split_at_mut(size + 1);
        let cur = &head[size];
        let next = &mut tail[0];
        for ((dst, a), b) in next.iter_mut().zip(cur.iter()).zip(events[j].iter()) {
            *dst = a.min(*b);
        }
        let p = cdf(next);
        if size.is_multiple_of(2) {
            *total += p;
        } else {
            *total -= p;
        }
        walk(events, cdf, j + 1, size + 1, scratch, total);
    }
}

/// Box volume `Δ_{lo}^{hi} f = Σ_corners (-1)^{#lower} f(corner)`.
pub fn box_volume<F>(lo: &[f64], hi: &[f64], f: F) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let n = lo.len();
    let mut corner = vec![0.0; n];
    let mut total = 0.0;
    for mask in 0u32..(1u32 << n) {
        let mut lower = 0;
        for i in 0..n {
            if mask & (1 << i) != 0 {
                corner[i] = hi[i];
            } else {
                corner[i] = lo[i];
                lower += 1;
            }
        }
        let v = f(&corner);
        if lower % 2 == 0 {
            total += v;
        } else {
            total -= v;
        }
    }
    total
}

/// `Σ_{S ⊆ [n]} (-1)^{|S|} f(w^S)` with `w_i = 1 - u_i` for `i ∈ S` and `1`
/// otherwise. If `f` is the distribution function of `V` on `[0,1]^n` this is
/// the distribution function of `1 - V` at `u`: the dual distortion of a
/// distortion, and the survival copula of a copula.
pub fn reflect<F>(u: &[f64], f: F) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let lo: Vec<f64> = u.iter().map(|x| 1.0 - x).collect();
    let hi = vec![1.0; u.len()];
    box_volume(&lo, &hi, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn product(u: &[f64]) -> f64 {
        u.iter().product()
    }

    #[test]
    fn union_of_two_independent_events() {
        // Pr(U1<=a or U2<=b) = a + b - ab
        let events = vec![vec![0.3, 1.0], vec![1.0, 0.6]];
        let p = union_probability(&events, product).unwrap();
        assert!((p - (0.3 + 0.6 - 0.18)).abs() < 1e-15);
    }

    #[test]
    fn union_brute_force_three_dims() {
        // Compare the signed sum with direct enumeration of a fine grid.
        let events = vec![vec![0.2, 0.9, 1.0], vec![0.5, 0.5, 0.5], vec![1.0, 0.1, 0.7]];
        let p = union_probability(&events, product).unwrap();
        let k = 100;
        let mut hits = 0usize;
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    let x = [
                        (a as f64 + 0.5) / k as f64,
                        (b as f64 + 0.5) / k as f64,
                        (c as f64 + 0.5) / k as f64,
                    ];
                    if events.iter().any(|e| x.iter().zip(e).all(|(xi, ti)| xi <= ti)) {
                        hits += 1;
                    }
                }
            }
        }
        assert!((p - hits as f64 / (k * k * k) as f64).abs() < 1e-12);
    }

    #[test]
    fn rejects_too_many_events() {
        let events = vec![vec![0.5]; 17];
        assert!(matches!(
            union_probability(&events, product),
            Err(MddError::TooManyEvents { events: 17, .. })
        ));
    }

    #[test]
    fn box_volume_and_reflection() {
        let v = box_volume(&[0.1, 0.2], &[0.5, 0.7], product);
        assert!((v - 0.4 * 0.5).abs() < 1e-15);
        let r = reflect(&[0.3, 0.4], |u: &[f64]| u[0].min(u[1]));
        assert!((r - 0.3).abs() < 1e-15);
    }
}
