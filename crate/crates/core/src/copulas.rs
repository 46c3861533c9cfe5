//! Copula families with the analytic partials and conditionals that the
//! distortion constructions and the samplers rely on.
//!
//! Spec strings: `indep:n=2`, `fgm:n=3,theta=-0.5`, `clayton1`, `comonotone:n=2`.

use std::fmt;
use std::str::FromStr;

use crate::error::{MddError, Result};
use crate::inclusion_exclusion::reflect;
use crate::params::SpecString;

/// Inputs within this distance outside `[0, 1]` are snapped onto the cube.
pub const SNAP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Copula {
    /// Product copula `Π u_i`.
    Independence { dim: usize },
    /// `Π u_i · [1 + θ Π (1 - u_i)]` for `dim ∈ {2, 3}` and `|θ| <= 1`.
    Fgm { dim: usize, theta: f64 },
    /// The Clayton member `uv / (u + v - uv)`.
    Clayton1,
    /// Upper Fréchet bound `min(u_i)`; the law of a vector with equal coordinates.
    Comonotone { dim: usize },
}

impl Copula {
    pub fn independence(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(MddError::param("n", format!("dimension must be >= 2, got {dim}")));
        }
        Ok(Copula::Independence { dim })
    }

    pub fn fgm(dim: usize, theta: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(MddError::param("n", format!("must be 2 or 3 for fgm, got {dim}")));
        }
        if !(-1.0..=1.0).contains(&theta) {
            return Err(MddError::param("theta", "out of [-1,1]"));
        }
        Ok(Copula::Fgm { dim, theta })
    }

    pub fn comonotone(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(MddError::param("n", format!("dimension must be >= 2, got {dim}")));
        }
        Ok(Copula::Comonotone { dim })
    }

    pub fn dim(&self) -> usize {
        match *self {
            Copula::Independence { dim } | Copula::Fgm { dim, .. } | Copula::Comonotone { dim } => dim,
            Copula::Clayton1 => 2,
        }
    }

    /// Invariant under permutations of the coordinates. All families offered
    /// here are.
    pub fn is_exchangeable(&self) -> bool {
        true
    }

    /// Whether the copula has a density (is absolutely continuous).
    pub fn has_density(&self) -> bool {
        !matches!(self, Copula::Comonotone { .. })
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(MddError::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        if u.iter().any(|x| x.is_nan() || *x < -SNAP_TOL || *x > 1.0 + SNAP_TOL) {
            return Err(MddError::param("u", format!("{u:?} outside [0,1]")));
        }
        Ok(())
    }

    fn check_interior(&self, u: &[f64]) -> Result<()> {
        self.check(u)?;
        if u.iter().any(|x| *x <= 0.0 || *x >= 1.0) {
            return Err(MddError::BoundaryInput(u.to_vec()));
        }
        Ok(())
    }

    /// `C(u)` with dimension and range checks.
    pub fn cdf(&self, u: &[f64]) -> Result<f64> {
        self.check(u)?;
        Ok(self.eval(u))
    }

    /// `C(u)` without checks; coordinates are clamped into `[0, 1]`.
    pub(crate) fn eval(&self, u: &[f64]) -> f64 {
        match *self {
            Copula::Independence { .. } => u.iter().map(|x| x.clamp(0.0, 1.0)).product(),
            Copula::Fgm { theta, .. } => {
                let (p, q) = u.iter().fold((1.0, 1.0), |(p, q), x| {
                    let x = x.clamp(0.0, 1.0);
                    (p * x, q * (1.0 - x))
                });
                p * (1.0 + theta * q)
            }
            Copula::Clayton1 => {
                let a = u[0].clamp(0.0, 1.0);
                let b = u[1].clamp(0.0, 1.0);
                if a == 0.0 || b == 0.0 {
                    0.0
                } else {
                    a * b / (a + b - a * b)
                }
            }
            Copula::Comonotone { .. } => u.iter().fold(1.0f64, |m, x| m.min(x.clamp(0.0, 1.0))),
        }
    }

    /// Copula density `∂_{1..n} C`.
    pub fn density(&self, u: &[f64]) -> Result<f64> {
        self.check(u)?;
        if let Copula::Clayton1 = self {
            self.check_interior(u)?;
        }
        self.density_at(u)
            .ok_or_else(|| MddError::Unsupported("the comonotone copula is singular and has no density".into()))
    }

    /// Density without checks; `None` for the singular comonotone copula.
    pub(crate) fn density_at(&self, u: &[f64]) -> Option<f64> {
        match *self {
            Copula::Independence { .. } => Some(1.0),
            Copula::Fgm { theta, .. } => Some(1.0 + theta * u.iter().map(|x| 1.0 - 2.0 * x).product::<f64>()),
            Copula::Clayton1 => {
                let (a, b) = (u[0], u[1]);
                Some(2.0 * a * b / (a + b - a * b).powi(3))
            }
            Copula::Comonotone { .. } => None,
        }
    }

    /// `∂C/∂u_k` (zero-based `k`) with checks.
    pub fn partial(&self, k: usize, u: &[f64]) -> Result<f64> {
        self.check(u)?;
        if k >= self.dim() {
            return Err(MddError::param("k", format!("coordinate {k} out of range")));
        }
        Ok(self.partial_at(k, u))
    }

    pub(crate) fn partial_at(&self, k: usize, u: &[f64]) -> f64 {
        match *self {
            Copula::Independence { .. } => u
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, x)| x.clamp(0.0, 1.0))
                .product(),
            Copula::Fgm { theta, .. } => {
                let (p, q) = u
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .fold((1.0, 1.0), |(p, q), (_, x)| {
                        let x = x.clamp(0.0, 1.0);
                        (p * x, q * (1.0 - x))
                    });
                let uk = u[k].clamp(0.0, 1.0);
                p * (1.0 + theta * (1.0 - 2.0 * uk) * q)
            }
            Copula::Clayton1 => {
                let a = u[0].clamp(0.0, 1.0);
                let b = u[1].clamp(0.0, 1.0);
                let s = a + b - a * b;
                if s == 0.0 {
                    return 0.0;
                }
                let other = if k == 0 { b } else { a };
                other * other / (s * s)
            }
            Copula::Comonotone { .. } => {
                let uk = u[k];
                let first_min = u
                    .iter()
                    .enumerate()
                    .all(|(j, x)| j == k || (j < k && uk < *x) || (j > k && uk <= *x));
                if first_min {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn require_bivariate(&self) -> Result<()> {
        if self.dim() != 2 {
            return Err(MddError::DimensionMismatch {
                expected: 2,
                got: self.dim(),
            });
        }
        Ok(())
    }

    /// `C_{2|1}(v | u) = ∂_1 C(u, v)`: the law of `V` given `U = u`.
    pub fn conditional_cdf(&self, v: f64, given_u: f64) -> Result<f64> {
        self.require_bivariate()?;
        if !(given_u > 0.0 && given_u < 1.0) {
            return Err(MddError::ProbabilityOutOfRange(given_u));
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(MddError::param("v", format!("{v} outside [0,1]")));
        }
        if let Copula::Comonotone { .. } = self {
            return Ok(if v >= given_u { 1.0 } else { 0.0 });
        }
        Ok(self.partial_at(0, &[given_u, v]))
    }

    /// Inverse of [`Copula::conditional_cdf`] in `v`.
    pub fn conditional_quantile(&self, q: f64, given_u: f64) -> Result<f64> {
        self.require_bivariate()?;
        if !(q > 0.0 && q < 1.0) {
            return Err(MddError::ProbabilityOutOfRange(q));
        }
        if !(given_u > 0.0 && given_u < 1.0) {
            return Err(MddError::ProbabilityOutOfRange(given_u));
        }
        Ok(self.conditional_quantile_at(q, given_u))
    }

    pub(crate) fn conditional_quantile_at(&self, q: f64, u: f64) -> f64 {
        match *self {
            Copula::Independence { .. } => q,
            Copula::Clayton1 => u / (u - 1.0 + 1.0 / q.sqrt()),
            Copula::Fgm { theta, .. } => fgm_conditional_quantile(theta * (1.0 - 2.0 * u), q),
            Copula::Comonotone { .. } => u,
        }
    }

    /// The survival copula `Ĉ`, in closed form where the family is closed
    /// under reflection and by inclusion–exclusion otherwise.
    pub fn survival_copula(&self) -> SurvivalCopula {
        match *self {
            Copula::Independence { .. } | Copula::Comonotone { .. } => SurvivalCopula::direct(*self),
            Copula::Fgm { dim: 2, .. } => SurvivalCopula::direct(*self),
            // Only the top-order term carries θ, and it flips sign under reflection.
            Copula::Fgm { dim, theta } => SurvivalCopula::direct(Copula::Fgm { dim, theta: -theta }),
            Copula::Clayton1 => SurvivalCopula::reflected(*self),
        }
    }
}

/// Root in `[0, 1]` of `v + a v (1 - v) = q`, the bivariate FGM conditional
/// with `a = θ (1 - 2u)`.
pub(crate) fn fgm_conditional_quantile(a: f64, q: f64) -> f64 {
    if a.abs() < 1e-15 {
        return q;
    }
    // a v^2 - (1 + a) v + q = 0, smaller root in the cancellation-free form.
    let b = 1.0 + a;
    let disc = (b * b - 4.0 * a * q).max(0.0);
    (2.0 * q / (b + disc.sqrt())).clamp(0.0, 1.0)
}

impl fmt::Display for Copula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Copula::Independence { dim } => write!(f, "indep:n={dim}"),
            Copula::Fgm { dim, theta } => write!(f, "fgm:n={dim},theta={theta}"),
            Copula::Clayton1 => write!(f, "clayton1"),
            Copula::Comonotone { dim } => write!(f, "comonotone:n={dim}"),
        }
    }
}

impl FromStr for Copula {
    type Err = MddError;

    fn from_str(s: &str) -> Result<Self> {
        let spec = SpecString::parse(s, "copula")?;
        match spec.name {
            "indep" | "independence" => {
                spec.only(&["n"])?;
                Copula::independence(spec.usize_or("n", 2)?)
            }
            "fgm" => {
                spec.only(&["n", "theta"])?;
                Copula::fgm(spec.usize_or("n", 2)?, spec.f64("theta")?)
            }
            "clayton1" => {
                spec.only(&[])?;
                Ok(Copula::Clayton1)
            }
            "comonotone" | "min" => {
                spec.only(&["n"])?;
                Copula::comonotone(spec.usize_or("n", 2)?)
            }
            other => Err(spec.error(format!("unknown family {other:?}"))),
        }
    }
}

/// A survival copula `Ĉ`, linking marginal survival functions to the joint
/// survival function: `F̄(x) = Ĉ(F̄_1(x_1), …, F̄_n(x_n))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalCopula {
    base: Copula,
    reflected: bool,
}

impl SurvivalCopula {
    /// Use `c` itself as the survival copula.
    pub fn direct(c: Copula) -> Self {
        SurvivalCopula {
            base: c,
            reflected: false,
        }
    }

    /// The survival copula of the distributional copula `c`, evaluated by
    /// inclusion–exclusion.
    pub fn reflected(c: Copula) -> Self {
        SurvivalCopula {
            base: c,
            reflected: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// The copula whose law is sampled; see [`SurvivalCopula::is_reflected`].
    pub fn base(&self) -> Copula {
        self.base
    }

    /// If true, `Ĉ` is the law of `1 - V` for `V ~ base`; otherwise `Ĉ = base`.
    pub fn is_reflected(&self) -> bool {
        self.reflected
    }

    pub fn cdf(&self, u: &[f64]) -> Result<f64> {
        self.base.check(u)?;
        Ok(self.eval(u))
    }

    pub(crate) fn eval(&self, u: &[f64]) -> f64 {
        if self.reflected {
            reflect(u, |w| self.base.eval(w))
        } else {
            self.base.eval(u)
        }
    }
}

impl fmt::Display for SurvivalCopula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.reflected {
            write!(f, "survival-of({})", self.base)
        } else {
            write!(f, "{}", self.base)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inclusion_exclusion::box_volume;
    use crate::quadrature::gauss_legendre_on;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn families() -> Vec<Copula> {
        vec![
            Copula::independence(2).unwrap(),
            Copula::independence(3).unwrap(),
            Copula::fgm(2, -1.0).unwrap(),
            Copula::fgm(2, 0.7).unwrap(),
            Copula::fgm(3, 1.0).unwrap(),
            Copula::fgm(3, -0.5).unwrap(),
            Copula::Clayton1,
        ]
    }

    fn interior(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(0.01..0.99)).collect()
    }

    #[test]
    fn spot_values() {
        let c = Copula::independence(2).unwrap();
        assert!((c.cdf(&[0.3, 0.5]).unwrap() - 0.15).abs() < 1e-16);
        assert!((Copula::Clayton1.cdf(&[0.5, 0.5]).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert!((Copula::fgm(2, 1.0).unwrap().cdf(&[0.5, 0.5]).unwrap() - 0.3125).abs() < 1e-16);
        assert!((Copula::Clayton1.density(&[0.5, 0.5]).unwrap() - 32.0 / 27.0).abs() < 1e-15);
        assert_eq!(c.density(&[0.2, 0.9]).unwrap(), 1.0);
        let f = Copula::fgm(2, 0.4).unwrap();
        let (u, v) = (0.2, 0.7);
        assert!((f.density(&[u, v]).unwrap() - (1.0 + 0.4 * (1.0 - 2.0 * u) * (1.0 - 2.0 * v))).abs() < 1e-15);
        assert!((f.partial(0, &[u, v]).unwrap() - (v + 0.4 * v * (1.0 - v) * (1.0 - 2.0 * u))).abs() < 1e-15);
        assert!((Copula::Clayton1.partial(0, &[u, v]).unwrap() - v * v / (u + v - u * v).powi(2)).abs() < 1e-15);
        assert_eq!(c.partial(0, &[u, v]).unwrap(), v);
    }

    #[test]
    fn errors() {
        assert_eq!(
            Copula::fgm(2, 3.0).unwrap_err().to_string(),
            "invalid parameter: theta out of [-1,1]"
        );
        assert!(Copula::fgm(4, 0.0).is_err());
        assert!(matches!(
            Copula::Clayton1.cdf(&[0.1, 0.2, 0.3]),
            Err(MddError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Copula::Clayton1.density(&[0.0, 0.5]),
            Err(MddError::BoundaryInput(_))
        ));
        assert!(Copula::Clayton1.conditional_quantile(1.0, 0.5).is_err());
        assert!(Copula::fgm(3, 0.1).unwrap().conditional_cdf(0.5, 0.5).is_err());
    }

    #[test]
    fn grounded_with_uniform_margins() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for c in families() {
            let n = c.dim();
            for _ in 0..200 {
                let mut u = interior(&mut rng, n);
                let x = u[0];
                for k in 0..n {
                    let saved = u[k];
                    u[k] = 0.0;
                    assert_eq!(c.eval(&u), 0.0, "{c}");
                    u[k] = saved;
                }
                let mut ones = vec![1.0; n];
                ones[0] = x;
                assert!((c.eval(&ones) - x).abs() < 1e-15, "{c}");
            }
        }
    }

    #[test]
    fn rectangle_inequality_on_random_boxes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for c in families() {
            let n = c.dim();
            for _ in 0..1000 {
                let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                let lo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
                let hi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
                assert!(box_volume(&lo, &hi, |u| c.eval(u)) >= -1e-12, "{c}");
            }
        }
    }

    #[test]
    fn partials_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        for c in families() {
            let n = c.dim();
            for _ in 0..500 {
                let u = interior(&mut rng, n);
                for k in 0..n {
                    let mut up = u.clone();
                    let mut dn = u.clone();
                    up[k] += h;
                    dn[k] -= h;
                    let fd = (c.eval(&up) - c.eval(&dn)) / (2.0 * h);
                    let an = c.partial_at(k, &u);
                    assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3), "{c} k={k} {fd} {an}");
                }
            }
        }
    }

    #[test]
    fn density_matches_mixed_difference() {
        let h = 1e-4;
        for c in [Copula::fgm(2, 0.6).unwrap(), Copula::Clayton1] {
            for &(u, v) in &[(0.2, 0.3), (0.5, 0.5), (0.8, 0.1)] {
                let fd = (c.eval(&[u + h, v + h]) - c.eval(&[u + h, v - h]) - c.eval(&[u - h, v + h])
                    + c.eval(&[u - h, v - h]))
                    / (4.0 * h * h);
                let d = c.density(&[u, v]).unwrap();
                assert!((fd - d).abs() < 1e-5 * d.max(1.0), "{c}");
            }
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        let (x, w) = gauss_legendre_on(128, 0.0, 1.0);
        for c in [
            Copula::independence(2).unwrap(),
            Copula::fgm(2, -1.0).unwrap(),
            Copula::fgm(2, 1.0).unwrap(),
            Copula::Clayton1,
        ] {
            // u = s^2, v = t^2 tames the Clayton peak at the origin.
            let mut total = 0.0;
            for (si, wi) in x.iter().zip(&w) {
                for (tj, wj) in x.iter().zip(&w) {
                    let d = c.density(&[si * si, tj * tj]).unwrap();
                    assert!(d >= 0.0);
                    total += wi * wj * d * 4.0 * si * tj;
                }
            }
            assert!((total - 1.0).abs() < 1e-6, "{c}: {total}");
        }
    }

    #[test]
    fn conditional_round_trip_grid() {
        for c in [
            Copula::independence(2).unwrap(),
            Copula::fgm(2, -1.0).unwrap(),
            Copula::fgm(2, 0.5).unwrap(),
            Copula::fgm(2, 1.0).unwrap(),
            Copula::Clayton1,
        ] {
            for i in 1..=30 {
                for j in 1..=30 {
                    let q = i as f64 / 31.0;
                    let u = j as f64 / 31.0;
                    let v = c.conditional_quantile(q, u).unwrap();
                    assert!((c.conditional_cdf(v, u).unwrap() - q).abs() < 1e-9, "{c}");
                }
            }
        }
        // Clayton conditional quantile from the closed form
        assert!((Copula::Clayton1.conditional_quantile(0.25, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let u = 0.37;
        assert!((Copula::Clayton1.conditional_cdf(u, u).unwrap() - 1.0 / (2.0 - u).powi(2)).abs() < 1e-15);
        assert_eq!(
            Copula::independence(2).unwrap().conditional_quantile(0.3, 0.9).unwrap(),
            0.3
        );
    }

    #[test]
    fn survival_copula_closed_forms_match_reflection() {
        let cases = [
            Copula::independence(2).unwrap(),
            Copula::independence(3).unwrap(),
            Copula::fgm(2, 0.8).unwrap(),
            Copula::fgm(2, -1.0).unwrap(),
            Copula::fgm(3, 0.6).unwrap(),
            Copula::fgm(3, -1.0).unwrap(),
            Copula::comonotone(2).unwrap(),
        ];
        for c in cases {
            let closed = c.survival_copula();
            let via_ie = SurvivalCopula::reflected(c);
            let n = c.dim();
            let g: usize = 50;
            for idx in 0..g.pow(n as u32) {
                let u: Vec<f64> = (0..n)
                    .map(|k| ((idx / g.pow(k as u32)) % g) as f64 / (g - 1) as f64)
                    .collect();
                assert!((closed.eval(&u) - via_ie.eval(&u)).abs() < 1e-14, "{c} at {u:?}");
            }
        }
        let s = Copula::Clayton1.survival_copula();
        let (u, v) = (0.3, 0.8);
        let expect = u + v - 1.0 + Copula::Clayton1.eval(&[1.0 - u, 1.0 - v]);
        assert!((s.cdf(&[u, v]).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn spec_strings() {
        for s in ["indep:n=2", "fgm:n=3,theta=-0.5", "clayton1", "comonotone:n=2"] {
            assert_eq!(s.parse::<Copula>().unwrap().to_string(), s);
        }
        let e = "fgm:n=2,theta=3".parse::<Copula>().unwrap_err();
        assert!(e.to_string().contains("theta out of [-1,1]"));
    }
}
