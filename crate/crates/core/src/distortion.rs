//! Multivariate distortion functions and distorted distributions.
//!
//! A [`Distortion`] `D` is a continuous distribution function on `[0,1]^n`;
//! composed with baselines `G_i` it gives the joint CDF
//! `F(x) = D(G_1(x_1), …, G_n(x_n))` of an [`MddModel`]. Its
//! [`DualDistortion`] `D̂` does the same for joint survival functions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::copulas::{Copula, SNAP_TOL};
use crate::error::{MddError, Result};
use crate::exec::{map_range, Execution};
use crate::inclusion_exclusion::{box_volume, reflect};
use crate::marginals::UnivariateDist;
use crate::quadrature::gauss_legendre_on;
use crate::rng::stream_rng;
use crate::roots::bisect_secant;
use rand::Rng;

/// Step for finite-difference partials.
pub const FD_STEP: f64 = 1e-6;
/// Pass threshold of [`validate`].
pub const VALIDATION_TOL: f64 = 1e-10;
/// Tolerance of orthant-order grid certificates.
pub const ORDER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    FromCopula,
    OrderedPair,
    ResidualLifetime,
    OrderStats,
    CoherentPair,
    Custom,
}

/// The evaluation core of a distortion. Constructions implement this and
/// register analytic partials or densities where they have them.
pub trait DistortionFn: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, u: &[f64]) -> f64;
    /// `∂D/∂u_k`, if known in closed form.
    fn partial(&self, _k: usize, _u: &[f64]) -> Option<f64> {
        None
    }
    /// Mixed density `∂_1…∂_n D`, if known in closed form.
    fn density(&self, _u: &[f64]) -> Option<f64> {
        None
    }
    fn name(&self) -> String;
}

/// An `n`-variate distortion function.
#[derive(Clone)]
pub struct Distortion {
    inner: Arc<dyn DistortionFn>,
    provenance: Provenance,
}

impl fmt::Debug for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Distortion")
            .field("name", &self.inner.name())
            .field("dim", &self.inner.dim())
            .field("provenance", &self.provenance)
            .finish()
    }
}

struct Closure<F> {
    dim: usize,
    name: String,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> DistortionFn for Closure<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, u: &[f64]) -> f64 {
        (self.f)(u)
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

pub(crate) fn snap(u: &[f64]) -> Result<Vec<f64>> {
    u.iter()
        .map(|&x| {
            if x.is_nan() || !(-SNAP_TOL..=1.0 + SNAP_TOL).contains(&x) {
                Err(MddError::param("u", format!("{u:?} outside [0,1]")))
            } else {
                Ok(x.clamp(0.0, 1.0))
            }
        })
        .collect()
}

/// Central difference in coordinate `k`, one-sided within `FD_STEP` of the
/// boundary.
pub(crate) fn fd_partial<F: Fn(&[f64]) -> f64>(f: F, k: usize, u: &[f64]) -> f64 {
    let h = FD_STEP;
    let x = u[k];
    let (a, b) = if x - h < 0.0 {
        (x, x + h)
    } else if x + h > 1.0 {
        (x - h, x)
    } else {
        (x - h, x + h)
    };
    let mut w = u.to_vec();
    w[k] = b;
    let fb = f(&w);
    w[k] = a;
    let fa = f(&w);
    (fb - fa) / (b - a)
}

impl Distortion {
    pub fn new<T: DistortionFn + 'static>(f: T, provenance: Provenance) -> Self {
        Distortion {
            inner: Arc::new(f),
            provenance,
        }
    }

    /// Wrap an arbitrary function. Nothing is assumed about it; run
    /// [`validate`] to see whether it is a distortion.
    pub fn custom<F>(dim: usize, name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Distortion::new(
            Closure {
                dim,
                name: name.into(),
                f,
            },
            Provenance::Custom,
        )
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn name(&self) -> String {
        self.inner.name()
    }

    fn check(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dim() {
            return Err(MddError::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        snap(u)
    }

    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        let u = self.check(u)?;
        Ok(self.inner.eval(&u))
    }

    pub(crate) fn eval_at(&self, u: &[f64]) -> f64 {
        self.inner.eval(u)
    }

    /// `∂D/∂u_k`: analytic where registered, finite differences otherwise.
    pub fn partial(&self, k: usize, u: &[f64]) -> Result<f64> {
        let u = self.check(u)?;
        if k >= self.dim() {
            return Err(MddError::param("k", format!("coordinate {k} out of range")));
        }
        Ok(self.partial_at(k, &u))
    }

    pub(crate) fn partial_at(&self, k: usize, u: &[f64]) -> f64 {
        match self.inner.partial(k, u) {
            Some(p) => p,
            None => fd_partial(|w| self.inner.eval(w), k, u),
        }
    }

    /// Whether coordinate `k` has a closed-form partial.
    pub fn has_analytic_partial(&self, k: usize) -> bool {
        let probe = vec![0.5; self.dim()];
        k < self.dim() && self.inner.partial(k, &probe).is_some()
    }

    /// Mixed density `∂_1…∂_n D`; only available where registered.
    pub fn density(&self, u: &[f64]) -> Result<f64> {
        let u = self.check(u)?;
        self.inner
            .density(&u)
            .ok_or_else(|| MddError::Unsupported(format!("no density registered for {}", self.name())))
    }

    pub(crate) fn density_at(&self, u: &[f64]) -> Option<f64> {
        self.inner.density(u)
    }

    pub fn has_density(&self) -> bool {
        self.inner.density(&vec![0.3; self.dim()]).is_some()
    }

    /// Marginal distortion of the coordinates in `keep` (zero-based), obtained
    /// by pinning the others at 1.
    pub fn marginal(&self, keep: &[usize]) -> Result<Distortion> {
        let n = self.dim();
        if keep.is_empty() {
            return Err(MddError::param("keep", "must be nonempty"));
        }
        for (i, &k) in keep.iter().enumerate() {
            if k >= n {
                return Err(MddError::param("keep", format!("index {} out of range 1..={n}", k + 1)));
            }
            if keep[..i].contains(&k) {
                return Err(MddError::param("keep", format!("index {} repeated", k + 1)));
            }
        }
        if keep.len() == n && keep.iter().enumerate().all(|(i, k)| i == *k) {
            return Ok(self.clone());
        }
        Ok(Distortion {
            inner: Arc::new(Marginal {
                parent: self.clone(),
                keep: keep.to_vec(),
            }),
            provenance: self.provenance,
        })
    }

    /// Univariate marginal `D_i(u) = D(1, …, u, …, 1)`.
    pub fn univariate(&self, i: usize) -> Result<Distortion> {
        self.marginal(&[i])
    }

    /// Dual distortion `D̂(u) = Σ_S (-1)^{|S|} D(w^S)` with `w_i = 1 - u_i` on
    /// `S` and `1` elsewhere.
    pub fn dual(&self) -> DualDistortion {
        DualDistortion {
            surface: Distortion {
                inner: Arc::new(Reflected { parent: self.clone() }),
                provenance: self.provenance,
            },
            primal: Some(self.clone()),
        }
    }

    /// `D + eps`, used to check that validation harnesses can fail.
    pub fn shifted(&self, eps: f64) -> Distortion {
        Distortion {
            inner: Arc::new(Shifted {
                parent: self.clone(),
                eps,
            }),
            provenance: self.provenance,
        }
    }
}

struct Marginal {
    parent: Distortion,
    keep: Vec<usize>,
}

impl Marginal {
    fn lift(&self, u: &[f64]) -> Vec<f64> {
        let mut full = vec![1.0; self.parent.dim()];
        for (x, &k) in u.iter().zip(&self.keep) {
            full[k] = *x;
        }
        full
    }
}

impl DistortionFn for Marginal {
    fn dim(&self) -> usize {
        self.keep.len()
    }
    fn eval(&self, u: &[f64]) -> f64 {
        self.parent.eval_at(&self.lift(u))
    }
    fn partial(&self, k: usize, u: &[f64]) -> Option<f64> {
        self.parent.inner.partial(self.keep[k], &self.lift(u))
    }
    fn name(&self) -> String {
        let idx: Vec<String> = self.keep.iter().map(|k| (k + 1).to_string()).collect();
        format!("{}[{}]", self.parent.name(), idx.join(","))
    }
}

struct Reflected {
    parent: Distortion,
}

impl DistortionFn for Reflected {
    fn dim(&self) -> usize {
        self.parent.dim()
    }
    fn eval(&self, u: &[f64]) -> f64 {
        reflect(u, |w| self.parent.eval_at(w))
    }
    fn partial(&self, k: usize, u: &[f64]) -> Option<f64> {
        // Only the terms with k ∈ S move with u_k, through w_k = 1 - u_k.
        let n = u.len();
        let mut w = vec![1.0; n];
        let mut total = 0.0;
        for mask in 0u32..(1u32 << n) {
            if mask & (1 << k) == 0 {
                continue;
            }
            for i in 0..n {
                w[i] = if mask & (1 << i) != 0 { 1.0 - u[i] } else { 1.0 };
            }
            let p = self.parent.inner.partial(k, &w)?;
            if mask.count_ones() % 2 == 1 {
                total += p;
            } else {
                total -= p;
            }
        }
        Some(total)
    }
    fn density(&self, u: &[f64]) -> Option<f64> {
        let w: Vec<f64> = u.iter().map(|x| 1.0 - x).collect();
        self.parent.inner.density(&w)
    }
    fn name(&self) -> String {
        format!("dual({})", self.parent.name())
    }
}

struct Shifted {
    parent: Distortion,
    eps: f64,
}

impl DistortionFn for Shifted {
    fn dim(&self) -> usize {
        self.parent.dim()
    }
    fn eval(&self, u: &[f64]) -> f64 {
        self.parent.eval_at(u) + self.eps
    }
    fn partial(&self, k: usize, u: &[f64]) -> Option<f64> {
        self.parent.inner.partial(k, u)
    }
    fn density(&self, u: &[f64]) -> Option<f64> {
        self.parent.inner.density(u)
    }
    fn name(&self) -> String {
        format!("{}+{:e}", self.parent.name(), self.eps)
    }
}

/// A dual (survival) distortion `D̂`: `F̄(x) = D̂(Ḡ_1(x_1), …, Ḡ_n(x_n))`.
///
/// `D̂` is itself a distribution function on the unit cube, so it can be
/// validated and compared like any [`Distortion`].
#[derive(Debug, Clone)]
pub struct DualDistortion {
    surface: Distortion,
    primal: Option<Distortion>,
}

impl DualDistortion {
    /// Take `d_hat` as a dual distortion given directly.
    pub fn new(d_hat: Distortion) -> Self {
        DualDistortion {
            surface: d_hat,
            primal: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.surface.dim()
    }

    pub fn name(&self) -> String {
        self.surface.name()
    }

    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        self.surface.eval(u)
    }

    pub(crate) fn eval_at(&self, u: &[f64]) -> f64 {
        self.surface.eval_at(u)
    }

    /// `D̂` viewed as a function on the cube.
    pub fn as_distortion(&self) -> &Distortion {
        &self.surface
    }

    /// The distortion `D` with this dual; reflection is an involution.
    pub fn primal(&self) -> Distortion {
        match &self.primal {
            Some(d) => d.clone(),
            None => self.surface.dual().surface,
        }
    }

    pub fn marginal(&self, keep: &[usize]) -> Result<DualDistortion> {
        Ok(DualDistortion::new(self.surface.marginal(keep)?))
    }

    pub fn shifted(&self, eps: f64) -> DualDistortion {
        DualDistortion::new(self.surface.shifted(eps))
    }
}

/// A univariate distortion `d` with `d(0) = 0`, `d(1) = 1`, nondecreasing.
#[derive(Clone)]
pub enum UnivariateDistortion {
    Identity,
    /// `u^p` for `p > 0`.
    Power(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for UnivariateDistortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnivariateDistortion::Identity => write!(f, "Identity"),
            UnivariateDistortion::Power(p) => write!(f, "Power({p})"),
            UnivariateDistortion::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl UnivariateDistortion {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            UnivariateDistortion::Identity => u,
            UnivariateDistortion::Power(p) => u.powf(*p),
            UnivariateDistortion::Custom(f) => f(u),
        }
    }

    pub fn derivative(&self, u: f64) -> Option<f64> {
        match self {
            UnivariateDistortion::Identity => Some(1.0),
            UnivariateDistortion::Power(p) => Some(if u == 0.0 && *p < 1.0 {
                f64::INFINITY
            } else {
                p * u.powf(p - 1.0)
            }),
            UnivariateDistortion::Custom(_) => None,
        }
    }

    /// Spot checks: endpoints and monotonicity on a 100-point grid.
    fn check(&self, index: usize) -> Result<()> {
        if let UnivariateDistortion::Power(p) = self {
            if !(*p > 0.0 && p.is_finite()) {
                return Err(MddError::NotADistortion(format!(
                    "d{}: power {p} must be positive",
                    index + 1
                )));
            }
        }
        let at0 = self.eval(0.0);
        let at1 = self.eval(1.0);
        if at0.abs() > 1e-12 || (at1 - 1.0).abs() > 1e-12 {
            return Err(MddError::NotADistortion(format!(
                "d{}(0) = {at0}, d{}(1) = {at1}",
                index + 1,
                index + 1
            )));
        }
        let mut prev = at0;
        for i in 1..100 {
            let x = i as f64 / 99.0;
            let y = self.eval(x);
            if y.is_nan() || y < prev - 1e-12 || !(0.0..=1.0).contains(&y) {
                return Err(MddError::NotADistortion(format!(
                    "d{} is not nondecreasing near {x}",
                    index + 1
                )));
            }
            prev = y;
        }
        Ok(())
    }
}

struct FromCopula {
    copula: Copula,
    maps: Vec<UnivariateDistortion>,
}

impl FromCopula {
    fn mapped(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.maps).map(|(x, d)| d.eval(*x)).collect()
    }
}

impl DistortionFn for FromCopula {
    fn dim(&self) -> usize {
        self.copula.dim()
    }
    fn eval(&self, u: &[f64]) -> f64 {
        self.copula.eval(&self.mapped(u))
    }
    fn partial(&self, k: usize, u: &[f64]) -> Option<f64> {
        if matches!(self.copula, Copula::Comonotone { .. }) {
            return None;
        }
        let dk = self.maps[k].derivative(u[k])?;
        Some(self.copula.partial_at(k, &self.mapped(u)) * dk)
    }
    fn density(&self, u: &[f64]) -> Option<f64> {
        let c = self.copula.density(&self.mapped(u)).ok()?;
        let mut jac = 1.0;
        for (x, d) in u.iter().zip(&self.maps) {
            jac *= d.derivative(*x)?;
        }
        Some(c * jac)
    }
    fn name(&self) -> String {
        if self.maps.iter().all(|m| matches!(m, UnivariateDistortion::Identity)) {
            self.copula.to_string()
        } else {
            format!("{}∘d", self.copula)
        }
    }
}

/// `D(u) = C(d_1(u_1), …, d_n(u_n))`.
pub fn from_copula(c: Copula, maps: Vec<UnivariateDistortion>) -> Result<Distortion> {
    if maps.len() != c.dim() {
        return Err(MddError::DimensionMismatch {
            expected: c.dim(),
            got: maps.len(),
        });
    }
    for (i, m) in maps.iter().enumerate() {
        m.check(i)?;
    }
    Ok(Distortion::new(FromCopula { copula: c, maps }, Provenance::FromCopula))
}

/// The copula itself as a distortion (`d_i` the identity).
pub fn copula_distortion(c: Copula) -> Distortion {
    Distortion::new(
        FromCopula {
            copula: c,
            maps: vec![UnivariateDistortion::Identity; c.dim()],
        },
        Provenance::FromCopula,
    )
}

/// Simple aggregation functions on the cube, including the mean, which is
/// increasing with uniform-looking corners but not grounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// `(u_1 + … + u_n) / n`: not a distortion.
    MeanAggregation(usize),
    Product(usize),
    Min(usize),
}

impl DistortionFn for Builtin {
    fn dim(&self) -> usize {
        match *self {
            Builtin::MeanAggregation(n) | Builtin::Product(n) | Builtin::Min(n) => n,
        }
    }
    fn eval(&self, u: &[f64]) -> f64 {
        match self {
            Builtin::MeanAggregation(n) => u.iter().sum::<f64>() / *n as f64,
            Builtin::Product(_) => u.iter().product(),
            Builtin::Min(_) => u.iter().fold(1.0f64, |m, x| m.min(*x)),
        }
    }
    fn partial(&self, k: usize, u: &[f64]) -> Option<f64> {
        match self {
            Builtin::MeanAggregation(n) => Some(1.0 / *n as f64),
            Builtin::Product(_) => Some(u.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, x)| x).product()),
            Builtin::Min(_) => None,
        }
    }
    fn density(&self, _u: &[f64]) -> Option<f64> {
        match self {
            Builtin::Product(_) => Some(1.0),
            _ => None,
        }
    }
    fn name(&self) -> String {
        match self {
            Builtin::MeanAggregation(n) => format!("mean-aggregation:n={n}"),
            Builtin::Product(n) => format!("product:n={n}"),
            Builtin::Min(n) => format!("min:n={n}"),
        }
    }
}

impl Builtin {
    /// Parse `mean-aggregation`, `product` or `min`, optionally with `:n=3`.
    pub fn parse(s: &str) -> Result<Builtin> {
        let spec = crate::params::SpecString::parse(s, "distortion")?;
        spec.only(&["n"])?;
        let n = spec.usize_or("n", 2)?;
        if n < 1 {
            return Err(spec.error("n must be >= 1"));
        }
        match spec.name {
            "mean-aggregation" | "mean" => Ok(Builtin::MeanAggregation(n)),
            "product" => Ok(Builtin::Product(n)),
            "min" => Ok(Builtin::Min(n)),
            other => Err(spec.error(format!("unknown built-in distortion {other:?}"))),
        }
    }

    pub fn distortion(self) -> Distortion {
        Distortion::new(self, Provenance::Custom)
    }
}

/// A distortion paired with its baselines: `F(x) = D(G_1(x_1), …, G_n(x_n))`.
#[derive(Debug, Clone)]
pub struct MddModel {
    distortion: Distortion,
    baselines: Vec<UnivariateDist>,
}

impl MddModel {
    pub fn new(distortion: Distortion, baselines: Vec<UnivariateDist>) -> Result<Self> {
        if baselines.len() != distortion.dim() {
            return Err(MddError::DimensionMismatch {
                expected: distortion.dim(),
                got: baselines.len(),
            });
        }
        Ok(MddModel { distortion, baselines })
    }

    /// All coordinates share the baseline `g`.
    pub fn common(distortion: Distortion, g: UnivariateDist) -> Self {
        let n = distortion.dim();
        MddModel {
            distortion,
            baselines: vec![g; n],
        }
    }

    pub fn distortion(&self) -> &Distortion {
        &self.distortion
    }

    pub fn baselines(&self) -> &[UnivariateDist] {
        &self.baselines
    }

    pub fn dim(&self) -> usize {
        self.distortion.dim()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(MddError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| v.is_nan()) {
            return Err(MddError::param("x", "NaN coordinate"));
        }
        Ok(())
    }

    pub fn joint_cdf(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let u: Vec<f64> = x.iter().zip(&self.baselines).map(|(x, g)| g.cdf(*x)).collect();
        Ok(self.distortion.eval_at(&u))
    }

    /// `Pr(X_1 > x_1, …, X_n > x_n) = D̂(Ḡ_1(x_1), …)`.
    pub fn joint_survival(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let u: Vec<f64> = x.iter().zip(&self.baselines).map(|(x, g)| g.survival(*x)).collect();
        Ok(self.distortion.dual().eval_at(&u))
    }

    /// Marginal CDF `F_i(x) = D_i(G_i(x))`.
    pub fn marginal_cdf(&self, i: usize, x: f64) -> Result<f64> {
        let di = self.distortion.univariate(i)?;
        Ok(di.eval_at(&[self.baselines[i].cdf(x)]))
    }

    /// Marginal density `g_i(x) D_i'(G_i(x))`; the derivative is analytic
    /// where registered, a finite difference otherwise.
    pub fn marginal_pdf(&self, i: usize, x: f64) -> Result<f64> {
        let di = self.distortion.univariate(i)?;
        let g = &self.baselines[i];
        let f = g.pdf(x);
        if f == 0.0 {
            return Ok(0.0);
        }
        Ok(f * di.partial_at(0, &[g.cdf(x)]))
    }

    /// Joint density `Π g_i(x_i) · ∂_1…∂_n D(G(x))`, where the distortion
    /// has a registered density.
    pub fn joint_pdf(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        if !self.distortion.has_density() {
            return Err(MddError::Unsupported(format!(
                "no density registered for {}",
                self.distortion.name()
            )));
        }
        let mut w = 1.0;
        let mut u = Vec::with_capacity(x.len());
        for (x, g) in x.iter().zip(&self.baselines) {
            w *= g.pdf(*x);
            u.push(g.cdf(*x));
        }
        if w == 0.0 {
            return Ok(0.0);
        }
        Ok(w * self.distortion.density_at(&u).unwrap_or(0.0))
    }

    /// Re-express the model over the common baseline `g`:
    /// `D_G(u) = D(G_1(G^{-1}(u_1)), …, G_n(G^{-1}(u_n)))`.
    ///
    /// Resolution is limited by `g`: where `g.cdf(x)` rounds to 0 or 1 the
    /// rebased model can no longer tell such points apart.
    pub fn rebase(&self, g: UnivariateDist) -> Result<MddModel> {
        for b in &self.baselines {
            if b.support() != g.support() {
                return Err(MddError::SupportMismatch(format!(
                    "baseline {b} has support {:?}, target {g} has {:?}",
                    b.support(),
                    g.support()
                )));
            }
        }
        if self.baselines.iter().all(|b| *b == g) {
            return Ok(self.clone());
        }
        let rebased = Rebased {
            parent: self.distortion.clone(),
            from: self.baselines.clone(),
            to: g,
        };
        Ok(MddModel::common(
            Distortion::new(rebased, self.distortion.provenance()),
            g,
        ))
    }

    /// The copula of the model, `C(u) = D(D_1^{-1}(u_1), …, D_n^{-1}(u_n))`;
    /// the baselines cancel for continuous strictly increasing `G_i`.
    pub fn recover_copula(&self) -> Distortion {
        let margins = (0..self.dim())
            .map(|i| self.distortion.univariate(i).expect("index in range"))
            .collect();
        Distortion::new(
            Recovered {
                parent: self.distortion.clone(),
                margins,
            },
            Provenance::FromCopula,
        )
    }
}

struct Rebased {
    parent: Distortion,
    from: Vec<UnivariateDist>,
    to: UnivariateDist,
}

impl Rebased {
    fn mapped(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.from)
            .map(|(x, gi)| gi.cdf(self.to.quantile_clamped(*x)))
            .collect()
    }
}

impl DistortionFn for Rebased {
    fn dim(&self) -> usize {
        self.parent.dim()
    }
    fn eval(&self, u: &[f64]) -> f64 {
        self.parent.eval_at(&self.mapped(u))
    }
    fn partial(&self, k: usize, u: &[f64]) -> Option<f64> {
        let x = self.to.quantile_clamped(u[k]);
        let g = self.to.pdf(x);
        if !x.is_finite() || g <= 0.0 {
            return None;
        }
        let p = self.parent.inner.partial(k, &self.mapped(u))?;
        Some(p * self.from[k].pdf(x) / g)
    }
    fn name(&self) -> String {
        format!("{} rebased to {}", self.parent.name(), self.to)
    }
}

struct Recovered {
    parent: Distortion,
    margins: Vec<Distortion>,
}

/// `D_i^{-1}(u)` by bisection refined with secant steps, tolerance 1e-12.
pub(crate) fn invert_margin(margin: &Distortion, u: f64) -> f64 {
    bisect_secant(|w| margin.eval_at(&[w]), u, 0.0, 1.0, 1e-12).unwrap_or(if u <= 0.0 { 0.0 } else { 1.0 })
}

impl DistortionFn for Recovered {
    fn dim(&self) -> usize {
        self.parent.dim()
    }
    fn eval(&self, u: &[f64]) -> f64 {
        let w: Vec<f64> = u
            .iter()
            .zip(&self.margins)
            .map(|(x, m)| invert_margin(m, x.clamp(0.0, 1.0)))
            .collect();
        self.parent.eval_at(&w)
    }
    fn name(&self) -> String {
        format!("copula of {}", self.parent.name())
    }
}

/// Outcome of [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Largest `|D(u)|` over grid points with some `u_i = 0`.
    pub grounded_max_violation: f64,
    /// The grid point where that value was attained.
    pub grounded_worst_point: Vec<f64>,
    /// `D(1, …, 1)`.
    pub corner_value: f64,
    /// Smallest box volume over the random boxes (negative means a violation).
    pub worst_box_volume: f64,
    pub n_boxes: usize,
    pub grid_size: usize,
    pub seed: u64,
    pub pass: bool,
}

const BOXES_PER_STREAM: usize = 64;

/// Check the distortion axioms: groundedness on a `grid_size^(n-1)` grid of
/// every face `u_i = 0`, the corner value `D(1,…,1) = 1`, and nonnegative
/// volume of `n_boxes` seeded random boxes. Passes at [`VALIDATION_TOL`].
pub fn validate(
    d: &Distortion,
    grid_size: usize,
    n_boxes: usize,
    seed: u64,
    exec: Execution,
) -> Result<ValidationReport> {
    if grid_size < 2 {
        return Err(MddError::param("grid_size", format!("must be >= 2, got {grid_size}")));
    }
    let n = d.dim();
    let step = 1.0 / (grid_size - 1) as f64;
    let face_points = grid_size.pow(n as u32 - 1);
    let mut worst = 0.0f64;
    let mut worst_point = vec![0.0; n];
    let mut u = vec![0.0; n];
    for face in 0..n {
        for idx in 0..face_points {
            let mut rest = idx;
            for (k, slot) in u.iter_mut().enumerate() {
                if k == face {
                    *slot = 0.0;
                } else {
                    *slot = (rest % grid_size) as f64 * step;
                    rest /= grid_size;
                }
            }
            let v = d.eval_at(&u).abs();
            if v > worst || v.is_nan() {
                worst = v;
                worst_point.copy_from_slice(&u);
            }
        }
    }
    let corner_value = d.eval_at(&vec![1.0; n]);

    let streams = n_boxes.div_ceil(BOXES_PER_STREAM);
    let minima = map_range(streams, exec, |s| {
        let mut rng = stream_rng(seed, s as u64);
        let count = BOXES_PER_STREAM.min(n_boxes - s * BOXES_PER_STREAM);
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        let mut m = f64::INFINITY;
        for _ in 0..count {
            for k in 0..n {
                let a: f64 = rng.random();
                let b: f64 = rng.random();
                lo[k] = a.min(b);
                hi[k] = a.max(b);
            }
            m = m.min(box_volume(&lo, &hi, |w| d.eval_at(w)));
        }
        m
    });
    let worst_box_volume = minima.into_iter().fold(f64::INFINITY, f64::min);
    let worst_box_volume = if n_boxes == 0 { 0.0 } else { worst_box_volume };
    let pass =
        worst <= VALIDATION_TOL && (corner_value - 1.0).abs() <= VALIDATION_TOL && worst_box_volume >= -VALIDATION_TOL;
    Ok(ValidationReport {
        grounded_max_violation: worst,
        grounded_worst_point: worst_point,
        corner_value,
        worst_box_volume,
        n_boxes,
        grid_size,
        seed,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderVerdict {
    #[serde(rename = "holds_X_le_Y")]
    HoldsXLeY,
    #[serde(rename = "holds_Y_le_X")]
    HoldsYLeX,
    #[serde(rename = "incomparable")]
    Incomparable,
    #[serde(rename = "equal")]
    Equal,
}

/// A grid certificate for an orthant order: the verdict holds at every grid
/// point up to `tolerance`, and says nothing off the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub verdict: OrderVerdict,
    /// Which order the verdict refers to: `lower-orthant`, `upper-orthant` or
    /// `baseline`.
    pub order: String,
    pub grid_size: usize,
    pub points: usize,
    /// `max (f_X - f_Y)` over the grid.
    pub max_x_minus_y: f64,
    /// `max (f_Y - f_X)` over the grid.
    pub max_y_minus_x: f64,
    pub tolerance: f64,
}

fn grid_extremes(fx: &Distortion, fy: &Distortion, grid_size: usize) -> Result<(f64, f64, usize)> {
    if fx.dim() != fy.dim() {
        return Err(MddError::DimensionMismatch {
            expected: fx.dim(),
            got: fy.dim(),
        });
    }
    if grid_size < 2 {
        return Err(MddError::param("grid_size", format!("must be >= 2, got {grid_size}")));
    }
    let n = fx.dim();
    let total = grid_size.pow(n as u32);
    let step = 1.0 / (grid_size - 1) as f64;
    let mut u = vec![0.0; n];
    let (mut a, mut b) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for idx in 0..total {
        let mut rest = idx;
        for slot in u.iter_mut() {
            *slot = (rest % grid_size) as f64 * step;
            rest /= grid_size;
        }
        let d = fx.eval_at(&u) - fy.eval_at(&u);
        a = a.max(d);
        b = b.max(-d);
    }
    Ok((a, b, total))
}

fn verdict(x_ge_y: bool, y_ge_x: bool) -> OrderVerdict {
    match (x_ge_y, y_ge_x) {
        (true, true) => OrderVerdict::Equal,
        (true, false) => OrderVerdict::HoldsXLeY,
        (false, true) => OrderVerdict::HoldsYLeX,
        (false, false) => OrderVerdict::Incomparable,
    }
}

/// `D_X >= D_Y` on the grid certifies `X <=_lo Y` there.
pub fn compare_lower_orthant(dx: &Distortion, dy: &Distortion, grid_size: usize) -> Result<OrderReport> {
    let (x_minus_y, y_minus_x, points) = grid_extremes(dx, dy, grid_size)?;
    Ok(OrderReport {
        verdict: verdict(y_minus_x <= ORDER_TOL, x_minus_y <= ORDER_TOL),
        order: "lower-orthant".into(),
        grid_size,
        points,
        max_x_minus_y: x_minus_y,
        max_y_minus_x: y_minus_x,
        tolerance: ORDER_TOL,
    })
}

/// `D̂_X <= D̂_Y` on the grid certifies `X <=_uo Y` there.
pub fn compare_upper_orthant(
    dx_hat: &DualDistortion,
    dy_hat: &DualDistortion,
    grid_size: usize,
) -> Result<OrderReport> {
    let (x_minus_y, y_minus_x, points) = grid_extremes(dx_hat.as_distortion(), dy_hat.as_distortion(), grid_size)?;
    Ok(OrderReport {
        verdict: verdict(x_minus_y <= ORDER_TOL, y_minus_x <= ORDER_TOL),
        order: "upper-orthant".into(),
        grid_size,
        points,
        max_x_minus_y: x_minus_y,
        max_y_minus_x: y_minus_x,
        tolerance: ORDER_TOL,
    })
}

/// Compare baselines under a shared distortion: `G_i >= H_i` for all `i`
/// gives both `X <=_lo Y` and `X <=_uo Y`. Each coordinate is probed at the
/// quantiles of levels `k / (grid_size + 1)` of both laws.
pub fn compare_baselines(g: &[UnivariateDist], h: &[UnivariateDist], grid_size: usize) -> Result<OrderReport> {
    if g.len() != h.len() {
        return Err(MddError::DimensionMismatch {
            expected: g.len(),
            got: h.len(),
        });
    }
    if grid_size < 1 {
        return Err(MddError::param("grid_size", "must be >= 1"));
    }
    let (mut a, mut b) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut points = 0;
    for (gi, hi) in g.iter().zip(h) {
        for k in 1..=grid_size {
            let p = k as f64 / (grid_size + 1) as f64;
            for x in [gi.quantile_clamped(p), hi.quantile_clamped(p)] {
                let d = gi.cdf(x) - hi.cdf(x);
                a = a.max(d);
                b = b.max(-d);
                points += 1;
            }
        }
    }
    Ok(OrderReport {
        verdict: verdict(b <= ORDER_TOL, a <= ORDER_TOL),
        order: "baseline".into(),
        grid_size,
        points,
        max_x_minus_y: a,
        max_y_minus_x: b,
        tolerance: ORDER_TOL,
    })
}

/// Kendall's tau of a bivariate copula, `1 - 4 ∫∫ ∂_1C ∂_2C`, by a
/// Gauss–Legendre product rule with `nodes` points per axis.
pub fn kendall_tau(copula: &Distortion, nodes: usize) -> Result<f64> {
    if copula.dim() != 2 {
        return Err(MddError::DimensionMismatch {
            expected: 2,
            got: copula.dim(),
        });
    }
    let (x, w) = gauss_legendre_on(nodes, 0.0, 1.0);
    let mut acc = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        for (yj, wj) in x.iter().zip(&w) {
            let u = [*xi, *yj];
            acc += wi * wj * copula.partial_at(0, &u) * copula.partial_at(1, &u);
        }
    }
    Ok(1.0 - 4.0 * acc)
}
