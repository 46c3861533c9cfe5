//! Ordered paired data `(L, U) = (min(X, Y), max(X, Y))` for `(X, Y)` with
//! copula `C` and common marginal `F`: `G(x, y) = D(F(x), F(y))` with
//!
//! ```text
//! D(u, v) = C(v, v)                        for v <= u
//! D(u, v) = C(u, v) + C(v, u) - C(u, u)    for u < v
//! ```

use crate::copulas::Copula;
use crate::distortion::{Distortion, DistortionFn, Provenance};
use crate::error::{MddError, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct OrderedPair {
    pub copula: Copula,
}

impl DistortionFn for OrderedPair {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, u: &[f64]) -> f64 {
        let c = &self.copula;
        let (a, b) = (u[0], u[1]);
        if b <= a {
            c.eval(&[b, b])
        } else {
            c.eval(&[a, b]) + c.eval(&[b, a]) - c.eval(&[a, a])
        }
    }

    fn partial(&self, k: usize, u: &[f64]) -> Option<f64> {
        let c = &self.copula;
        let (a, b) = (u[0], u[1]);
        if matches!(c, Copula::Comonotone { .. }) {
            return None;
        }
        Some(match k {
            0 if b > a => {
                c.partial_at(0, &[a, b]) + c.partial_at(1, &[b, a])
                    - c.partial_at(0, &[a, a])
                    - c.partial_at(1, &[a, a])
            }
            0 => 0.0,
            _ if a < b => c.partial_at(1, &[a, b]) + c.partial_at(0, &[b, a]),
            _ => c.partial_at(0, &[b, b]) + c.partial_at(1, &[b, b]),
        })
    }

    fn density(&self, u: &[f64]) -> Option<f64> {
        let (a, b) = (u[0], u[1]);
        let c = &self.copula;
        if b < a {
            c.density_at(&[a, b]).map(|_| 0.0)
        } else {
            Some(c.density_at(&[a, b])? + c.density_at(&[b, a])?)
        }
    }

    fn name(&self) -> String {
        format!("ordered-pair({})", self.copula)
    }
}

/// Distortion of `(L, U)` for a bivariate copula `c`.
pub fn ordered_pair_distortion(c: Copula) -> Result<Distortion> {
    if c.dim() != 2 {
        return Err(MddError::DimensionMismatch {
            expected: 2,
            got: c.dim(),
        });
    }
    Ok(Distortion::new(OrderedPair { copula: c }, Provenance::OrderedPair))
}

/// `∂_{12} D(u, v) = c(u, v) + c(v, u)` on `u <= v`, and `0` below the diagonal.
pub fn ordered_pair_density(c: Copula, u: f64, v: f64) -> Result<f64> {
    if c.dim() != 2 {
        return Err(MddError::DimensionMismatch {
            expected: 2,
            got: c.dim(),
        });
    }
    if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
        return Err(MddError::BoundaryInput(vec![u, v]));
    }
    OrderedPair { copula: c }
        .density(&[u, v])
        .ok_or_else(|| MddError::Unsupported(format!("{c} has no density")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::fd_partial;

    fn grid(n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| i as f64 / (n - 1) as f64)
    }

    #[test]
    fn independence_closed_forms() {
        let d = ordered_pair_distortion(Copula::independence(2).unwrap()).unwrap();
        for u in grid(50) {
            for v in grid(50) {
                let expect = if u < v { 2.0 * u * v - u * u } else { v * v };
                assert!((d.eval(&[u, v]).unwrap() - expect).abs() < 1e-15);
            }
            assert!((d.eval(&[u, 1.0]).unwrap() - (2.0 * u - u * u)).abs() < 1e-15);
            assert!((d.eval(&[1.0, u]).unwrap() - u * u).abs() < 1e-15);
        }
        assert!((d.eval(&[0.5, 0.7]).unwrap() - 0.45).abs() < 1e-15);
    }

    #[test]
    fn clayton_marginals() {
        let d = ordered_pair_distortion(Copula::Clayton1).unwrap();
        for u in grid(50) {
            let d1 = (3.0 * u - 2.0 * u * u) / (2.0 - u);
            let d2 = u / (2.0 - u);
            assert!((d.eval(&[u, 1.0]).unwrap() - d1).abs() < 1e-12);
            assert!((d.eval(&[1.0, u]).unwrap() - d2).abs() < 1e-12);
            if u > 0.0 && u < 1.0 {
                let d2p = 2.0 / (2.0 - u).powi(2);
                assert!((d.partial(1, &[1.0, u]).unwrap() - d2p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn comonotone_collapses_to_min() {
        let d = ordered_pair_distortion(Copula::comonotone(2).unwrap()).unwrap();
        for u in grid(21) {
            for v in grid(21) {
                assert!((d.eval(&[u, v]).unwrap() - u.min(v)).abs() < 1e-15);
            }
        }
        assert!(!d.has_density());
    }

    #[test]
    fn continuous_across_diagonal() {
        for c in [
            Copula::independence(2).unwrap(),
            Copula::fgm(2, -0.7).unwrap(),
            Copula::Clayton1,
        ] {
            let op = OrderedPair { copula: c };
            for i in 0..100 {
                let u = i as f64 / 99.0;
                let above = c.eval(&[u, u]) + c.eval(&[u, u]) - c.eval(&[u, u]);
                assert!((op.eval(&[u, u]) - above).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        for c in [
            Copula::independence(2).unwrap(),
            Copula::fgm(2, 0.6).unwrap(),
            Copula::Clayton1,
        ] {
            let d = ordered_pair_distortion(c).unwrap();
            for &(u, v) in &[(0.2, 0.7), (0.6, 0.3), (0.45, 0.9), (0.8, 0.1)] {
                for k in 0..2 {
                    let an = d.partial(k, &[u, v]).unwrap();
                    let fd = fd_partial(|w| d.eval(w).unwrap(), k, &[u, v]);
                    assert!((an - fd).abs() < 1e-7, "{c} k={k} ({u},{v})");
                }
            }
        }
    }

    #[test]
    fn densities() {
        let ind = Copula::independence(2).unwrap();
        assert_eq!(ordered_pair_density(ind, 0.2, 0.6).unwrap(), 2.0);
        assert_eq!(ordered_pair_density(ind, 0.6, 0.2).unwrap(), 0.0);
        let (u, v) = (0.3, 0.5);
        let s = u + v - u * v;
        assert!((ordered_pair_density(Copula::Clayton1, u, v).unwrap() - 4.0 * u * v / s.powi(3)).abs() < 1e-14);
        assert!(ordered_pair_density(Copula::Clayton1, 0.0, 0.5).is_err());
        let fgm = Copula::fgm(2, 0.4).unwrap();
        let expect = 2.0 + 2.0 * 0.4 * (1.0 - 2.0 * u) * (1.0 - 2.0 * v);
        assert!((ordered_pair_density(fgm, u, v).unwrap() - expect).abs() < 1e-15);
    }
}
