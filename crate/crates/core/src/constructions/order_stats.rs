//! Order statistics of identically distributed, possibly dependent,
//! variables.
//!
//! For `n = 3` the joint CDF of `(X_{1:3}, X_{2:3}, X_{3:3})` is `D(F(x_1),
//! F(x_2), F(x_3))` with `D` the probability of a union of nine threshold
//! events `B = A_a ∩ A_{i,j} ∩ A_{1,2,3}`, evaluated by inclusion–exclusion.

use crate::copulas::Copula;
use crate::distortion::{Distortion, DistortionFn, Provenance};
use crate::error::{MddError, Result};
use crate::inclusion_exclusion::union_probability;

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// The nine events as threshold vectors, in the order
/// `A_1∩A_{12}, A_2∩A_{12}, A_3∩A_{12}, A_1∩A_{13}, …` (each also ∩ `A_{123}`).
pub(crate) fn events(u: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(9);
    for (i, j) in PAIRS {
        for a in 0..3 {
            let mut t = vec![u[2]; 3];
            t[i] = t[i].min(u[1]);
            t[j] = t[j].min(u[1]);
            t[a] = t[a].min(u[0]);
            out.push(t);
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct OrderStats3 {
    pub copula: Copula,
}

impl DistortionFn for OrderStats3 {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, u: &[f64]) -> f64 {
        union_probability(&events(u), |t| self.copula.eval(t)).expect("nine events")
    }

    fn density(&self, u: &[f64]) -> Option<f64> {
        if !is_sorted(u) {
            return self.copula.density_at(u).map(|_| 0.0);
        }
        density_sum(&self.copula, u)
    }

    fn name(&self) -> String {
        format!("order-stats-3({})", self.copula)
    }
}

fn is_sorted(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[0] <= w[1])
}

fn density_sum(c: &Copula, u: &[f64]) -> Option<f64> {
    let n = u.len();
    if c.is_exchangeable() {
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        return Some(fact * c.density_at(u)?);
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    let mut buf = vec![0.0; n];
    for_each_permutation(&mut perm, n, &mut |p| {
        for (slot, &i) in buf.iter_mut().zip(p.iter()) {
            *slot = u[i];
        }
        total += c.density_at(&buf).unwrap_or(f64::NAN);
    });
    if total.is_nan() {
        None
    } else {
        Some(total)
    }
}

/// Heap's algorithm.
fn for_each_permutation<F: FnMut(&[usize])>(p: &mut [usize], k: usize, f: &mut F) {
    if k <= 1 {
        f(p);
        return;
    }
    for i in 0..k - 1 {
        for_each_permutation(p, k - 1, f);
        if k.is_multiple_of(2) {
            p.swap(i, k - 1);
        } else {
            p.swap(0, k - 1);
        }
    }
    for_each_permutation(p, k - 1, f);
}

/// Distortion of `(X_{1:3}, X_{2:3}, X_{3:3})` for a trivariate copula.
pub fn order_stats_distortion(c: Copula) -> Result<Distortion> {
    if c.dim() != 3 {
        return Err(MddError::DimensionMismatch {
            expected: 3,
            got: c.dim(),
        });
    }
    Ok(Distortion::new(OrderStats3 { copula: c }, Provenance::OrderStats))
}

/// `D(u_1, u_2, u_3)` for `0 <= u_1 <= u_2 <= u_3 <= 1`.
pub fn order_stats_distortion_3(c: Copula, u1: f64, u2: f64, u3: f64) -> Result<f64> {
    let d = order_stats_distortion(c)?;
    if !(u1 <= u2 && u2 <= u3) {
        return Err(MddError::UnorderedInput(vec![u1, u2, u3]));
    }
    d.eval(&[u1, u2, u3])
}

/// Density of the order statistics, `Σ_σ c(u_σ(1), …, u_σ(n))`, computed as
/// `n! c(u)` for exchangeable copulas.
pub fn order_stats_density(c: Copula, u: &[f64]) -> Result<f64> {
    if u.len() != c.dim() {
        return Err(MddError::DimensionMismatch {
            expected: c.dim(),
            got: u.len(),
        });
    }
    if !is_sorted(u) {
        return Err(MddError::UnorderedInput(u.to_vec()));
    }
    if u.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
        return Err(MddError::BoundaryInput(u.to_vec()));
    }
    density_sum(&c, u).ok_or_else(|| MddError::Unsupported(format!("{c} has no density")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_terms_match_the_event_algebra() {
        let u = [0.2, 0.5, 0.9];
        let ev = events(&u);
        assert_eq!(ev.len(), 9);
        assert_eq!(ev[0], vec![0.2, 0.5, 0.9]);
        // B_1 ∩ B_2 = {X_1 <= u_1, X_2 <= u_1, X_3 <= u_3}
        let meet: Vec<f64> = ev[0].iter().zip(&ev[1]).map(|(a, b)| a.min(*b)).collect();
        assert_eq!(meet, vec![0.2, 0.2, 0.9]);
    }

    #[test]
    fn independence_matches_order_statistics_of_uniforms() {
        let c = Copula::independence(3).unwrap();
        for i in 0..=10 {
            let u = i as f64 / 10.0;
            assert!((order_stats_distortion_3(c, u, u, u).unwrap() - u.powi(3)).abs() < 1e-15);
        }
        // Pr(X_{1:3} <= a, X_{3:3} <= b) brute-forced from the binomial form:
        // b^3 - (b - a)^3 for a <= b.
        let d = order_stats_distortion(c).unwrap();
        for &(a, b) in &[(0.1f64, 0.4f64), (0.3, 0.9), (0.5, 0.5)] {
            let expect = b * b * b - (b - a).powi(3);
            assert!((d.eval(&[a, b, b]).unwrap() - expect).abs() < 1e-14);
        }
        // Pr(X_{2:3} <= s, X_{3:3} <= b) = 3 s^2 (b - s) + s^3
        for &(s, b) in &[(0.2f64, 0.7f64), (0.6, 0.8)] {
            let expect = 3.0 * s * s * (b - s) + s.powi(3);
            assert!((d.eval(&[1.0, s, b]).unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn minimum_marginal_agrees_with_series_survival() {
        let c = Copula::fgm(3, 0.8).unwrap();
        let hat = c.survival_copula();
        let d = order_stats_distortion(c).unwrap();
        for i in 0..=20 {
            let u = i as f64 / 20.0;
            let series = 1.0 - hat.cdf(&[1.0 - u, 1.0 - u, 1.0 - u]).unwrap();
            assert!((d.eval(&[u, 1.0, 1.0]).unwrap() - series).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_unordered() {
        let c = Copula::independence(3).unwrap();
        assert!(matches!(
            order_stats_distortion_3(c, 0.5, 0.2, 0.9),
            Err(MddError::UnorderedInput(_))
        ));
        assert!(matches!(
            order_stats_density(c, &[0.5, 0.2, 0.9]),
            Err(MddError::UnorderedInput(_))
        ));
    }

    #[test]
    fn densities() {
        let c = Copula::independence(3).unwrap();
        assert_eq!(order_stats_density(c, &[0.1, 0.5, 0.7]).unwrap(), 6.0);
        let f = Copula::fgm(2, 0.3).unwrap();
        let (u, v) = (0.2, 0.6);
        let expect = 2.0 + 2.0 * 0.3 * (1.0 - 2.0 * u) * (1.0 - 2.0 * v);
        assert!((order_stats_density(f, &[u, v]).unwrap() - expect).abs() < 1e-15);
        let mut count = 0;
        let mut p = [0, 1, 2, 3];
        for_each_permutation(&mut p, 4, &mut |_| count += 1);
        assert_eq!(count, 24);
    }

    #[test]
    fn density_integrates_to_one_over_the_simplex() {
        // midpoint rule on the ordered simplex
        let c = Copula::fgm(3, -0.6).unwrap();
        let m = 60;
        let h = 1.0 / m as f64;
        let mut total = 0.0;
        for i in 0..m {
            for j in i..m {
                for k in j..m {
                    let u = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h, (k as f64 + 0.5) * h];
                    let w = match (i == j, j == k) {
                        (true, true) => 1.0 / 6.0,
                        (true, false) | (false, true) => 0.5,
                        _ => 1.0,
                    };
                    total += w * order_stats_density(c, &u).unwrap() * h * h * h;
                }
            }
        }
        assert!((total - 1.0).abs() < 0.01, "{total}");
    }
}
