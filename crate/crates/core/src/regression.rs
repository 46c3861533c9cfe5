//! Conditional law of `X_2` given `X_1 = x` for a bivariate MDD model:
//!
//! ```text
//! F_{2|1}(y | x) = D_{2|1}(G_2(y) | G_1(x)),   D_{2|1}(v | u) = ∂_1 D(u, v) / ∂_1 D(u, 1)
//! ```
//!
//! with its density, mean and median regression curves and quantile bands.

use serde::{Deserialize, Serialize};

use crate::distortion::MddModel;
use crate::error::{MddError, Result};
use crate::exec::{map_slice, Execution};
use crate::marginals::UnivariateDist;
use crate::quadrature::{integrate_range, QuadOptions};
use crate::roots::invert_monotone;

/// `G_1(x)` is clamped to `[U_CLAMP, 1 - U_CLAMP]` before conditioning.
pub const U_CLAMP: f64 = 1e-12;
/// Point at which `D_{2|1}(v | u) → 0` as `v → 0⁺` is probed.
pub const VANISH_PROBE: f64 = 1e-8;
pub const VANISH_TOL: f64 = 1e-6;
const ROOT_TOL: f64 = 1e-12;
const NEWTON_STEPS: usize = 3;

/// The 50% and 90% bands.
pub const DEFAULT_LEVELS: [(f64, f64); 2] = [(0.25, 0.75), (0.05, 0.95)];

/// `(X_2 | X_1 = x)` for a bivariate model.
#[derive(Debug, Clone)]
pub struct ConditionalLaw {
    model: MddModel,
    given_x: f64,
    u: f64,
    norm: f64,
}

impl ConditionalLaw {
    /// Fails with [`MddError::ConditionalUnavailable`] when `∂_1 D(u, 1)`
    /// vanishes or `∂_1 D(u, v)` does not tend to zero with `v`.
    pub fn new(model: &MddModel, x: f64) -> Result<Self> {
        if model.dim() != 2 {
            return Err(MddError::DimensionMismatch {
                expected: 2,
                got: model.dim(),
            });
        }
        if x.is_nan() {
            return Err(MddError::param("x", "NaN"));
        }
        let u = model.baselines()[0].cdf(x).clamp(U_CLAMP, 1.0 - U_CLAMP);
        let norm = model.distortion().partial_at(0, &[u, 1.0]);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(MddError::ConditionalUnavailable(format!(
                "∂1 D({u}, 1) = {norm} at x = {x}"
            )));
        }
        let law = ConditionalLaw {
            model: model.clone(),
            given_x: x,
            u,
            norm,
        };
        let tail = law.distortion_cdf(VANISH_PROBE);
        if tail > VANISH_TOL {
            return Err(MddError::ConditionalUnavailable(format!(
                "∂1 D({u}, v) does not vanish as v → 0 (ratio {tail} at v = {VANISH_PROBE})"
            )));
        }
        Ok(law)
    }

    pub fn given_x(&self) -> f64 {
        self.given_x
    }

    /// The clamped `G_1(x)`.
    pub fn given_u(&self) -> f64 {
        self.u
    }

    pub fn model(&self) -> &MddModel {
        &self.model
    }

    fn target(&self) -> &UnivariateDist {
        &self.model.baselines()[1]
    }

    /// `D_{2|1}(v | G_1(x))`.
    pub fn distortion_cdf(&self, v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        if v == 0.0 {
            return 0.0;
        }
        (self.model.distortion().partial_at(0, &[self.u, v]) / self.norm).clamp(0.0, 1.0)
    }

    /// `d_{2|1}(v | G_1(x)) = ∂_{12} D(u, v) / ∂_1 D(u, 1)`.
    pub fn distortion_density(&self, v: f64) -> f64 {
        let d = self.model.distortion();
        let p = [self.u, v.clamp(0.0, 1.0)];
        if let Some(c) = d.density_at(&p) {
            return c / self.norm;
        }
        let h = if d.has_analytic_partial(0) { 1e-5 } else { 1e-4 };
        let (a, b) = if p[1] - h < 0.0 {
            (p[1], p[1] + h)
        } else if p[1] + h > 1.0 {
            (p[1] - h, p[1])
        } else {
            (p[1] - h, p[1] + h)
        };
        let fb = d.partial_at(0, &[self.u, b]);
        let fa = d.partial_at(0, &[self.u, a]);
        ((fb - fa) / (b - a) / self.norm).max(0.0)
    }

    /// `F_{2|1}(y | x)`.
    pub fn cdf(&self, y: f64) -> f64 {
        self.distortion_cdf(self.target().cdf(y))
    }

    /// `f_{2|1}(y | x) = g_2(y) d_{2|1}(G_2(y) | G_1(x))`.
    pub fn pdf(&self, y: f64) -> f64 {
        let g = self.target().pdf(y);
        if g == 0.0 {
            return 0.0;
        }
        g * self.distortion_density(self.target().cdf(y))
    }

    /// `D_{2|1}^{-1}(q)`: bisection to width 1e-12, then Newton steps kept
    /// inside the final bracket when a closed-form density exists.
    pub fn distortion_quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(MddError::ProbabilityOutOfRange(q));
        }
        let v0 = invert_monotone(|v| self.distortion_cdf(v), q, 0.0, 1.0, ROOT_TOL, 200);
        if !self.model.distortion().has_density() {
            return Ok(v0);
        }
        let (lo, hi) = ((v0 - ROOT_TOL).max(0.0), (v0 + ROOT_TOL).min(1.0));
        let mut v = v0;
        for _ in 0..NEWTON_STEPS {
            let f = self.distortion_cdf(v) - q;
            let d = self.distortion_density(v);
            if f == 0.0 || !(d > 0.0 && d.is_finite()) {
                break;
            }
            v = (v - f / d).clamp(lo, hi);
        }
        if (self.distortion_cdf(v) - q).abs() <= (self.distortion_cdf(v0) - q).abs() {
            Ok(v)
        } else {
            Ok(v0)
        }
    }

    /// `F_{2|1}^{-1}(q | x) = G_2^{-1}(D_{2|1}^{-1}(q | G_1(x)))`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        let v = self.distortion_quantile(q)?;
        Ok(self.target().quantile_clamped(v))
    }

    /// Median regression `m̃_{2|1}(x)`.
    pub fn median(&self) -> Result<f64> {
        self.quantile(0.5)
    }

    /// Anchor splitting the real line for the mean integrals: the point where
    /// `G_2` reaches `G_1(x)`, i.e. the diagonal for common baselines.
    fn anchor(&self) -> f64 {
        self.target().quantile_clamped(self.u)
    }

    fn scale(&self) -> f64 {
        let g = self.target();
        let s = g.quantile_clamped(0.75) - g.quantile_clamped(0.25);
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    }

    fn integrate_scaled<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let s = self.scale();
        let opts = QuadOptions::default();
        let r = integrate_range(|t| f(t * s) * s, a / s, b / s, opts);
        if !r.value.is_finite() {
            return Err(MddError::ConditionalUnavailable(format!(
                "divergent integral on [{a}, {b}] at x = {}",
                self.given_x
            )));
        }
        Ok(r.value)
    }

    /// Mean regression `m_{2|1}(x) = E(X_2 | X_1 = x)` in survival form:
    /// `a + ∫_a^∞ (1 - F_{2|1}) - ∫_{-∞}^a F_{2|1}`.
    pub fn mean(&self) -> Result<f64> {
        let a = self.anchor();
        let (lo, hi) = self.target().support();
        let upper = self.integrate_scaled(|y| 1.0 - self.cdf(y), a, hi)?;
        let lower = self.integrate_scaled(|y| self.cdf(y), lo, a)?;
        Ok(a + upper - lower)
    }

    /// Mean regression as `∫ y f_{2|1}(y | x) dy`, split at the anchor.
    pub fn mean_density_form(&self) -> Result<f64> {
        let a = self.anchor();
        let (lo, hi) = self.target().support();
        let upper = self.integrate_scaled(|y| y * self.pdf(y), a, hi)?;
        let lower = self.integrate_scaled(|y| y * self.pdf(y), lo, a)?;
        Ok(upper + lower)
    }

    /// `∫ f_{2|1}(y | x) dy`, split at the anchor.
    pub fn pdf_mass(&self) -> Result<f64> {
        let a = self.anchor();
        let (lo, hi) = self.target().support();
        Ok(self.integrate_scaled(|y| self.pdf(y), lo, a)? + self.integrate_scaled(|y| self.pdf(y), a, hi)?)
    }
}

pub fn conditional_cdf(law: &ConditionalLaw, y: f64) -> f64 {
    law.cdf(y)
}

pub fn conditional_pdf(law: &ConditionalLaw, y: f64) -> f64 {
    law.pdf(y)
}

pub fn conditional_quantile(law: &ConditionalLaw, q: f64) -> Result<f64> {
    law.quantile(q)
}

pub fn median_regression(law: &ConditionalLaw) -> Result<f64> {
    law.median()
}

pub fn mean_regression(law: &ConditionalLaw) -> Result<f64> {
    law.mean()
}

/// Median curve with lower/upper quantile curves per level over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileBand {
    pub xs: Vec<f64>,
    pub levels: Vec<(f64, f64)>,
    pub median: Vec<f64>,
    /// `lower[l][i]` is the `levels[l].0` quantile at `xs[i]`.
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

impl QuantileBand {
    /// Whether `lower <= median <= upper` holds at every grid point and
    /// level.
    pub fn is_ordered(&self) -> bool {
        (0..self.levels.len()).all(|l| {
            (0..self.xs.len()).all(|i| self.lower[l][i] <= self.median[i] && self.median[i] <= self.upper[l][i])
        })
    }
}

fn check_levels(levels: &[(f64, f64)]) -> Result<()> {
    for &(a, b) in levels {
        for p in [a, b] {
            if !(p > 0.0 && p < 1.0) {
                return Err(MddError::ProbabilityOutOfRange(p));
            }
        }
        if a > b {
            return Err(MddError::param(
                "levels",
                format!("lower level {a} exceeds upper level {b}"),
            ));
        }
    }
    Ok(())
}

/// Quantile bands of `(X_2 | X_1 = x)` at every `x` in `xs`.
pub fn quantile_band(model: &MddModel, xs: &[f64], levels: &[(f64, f64)], exec: Execution) -> Result<QuantileBand> {
    check_levels(levels)?;
    let rows = map_slice(xs, exec, |&x| -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let law = ConditionalLaw::new(model, x)?;
        let mut lo = Vec::with_capacity(levels.len());
        let mut hi = Vec::with_capacity(levels.len());
        for &(a, b) in levels {
            lo.push(law.quantile(a)?);
            hi.push(law.quantile(b)?);
        }
        Ok((law.median()?, lo, hi))
    });
    let mut band = QuantileBand {
        xs: xs.to_vec(),
        levels: levels.to_vec(),
        median: Vec::with_capacity(xs.len()),
        lower: vec![Vec::with_capacity(xs.len()); levels.len()],
        upper: vec![Vec::with_capacity(xs.len()); levels.len()],
    };
    for row in rows {
        let (m, lo, hi) = row?;
        band.median.push(m);
        for l in 0..levels.len() {
            band.lower[l].push(lo[l]);
            band.upper[l].push(hi[l]);
        }
    }
    Ok(band)
}

/// One row of the regression table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub x: f64,
    pub median: f64,
    pub q05: f64,
    pub q25: f64,
    pub q75: f64,
    pub q95: f64,
    pub mean: f64,
}

/// Median, the 5/25/75/95% quantiles and the mean at every `x` in `xs`.
pub fn regression_table(model: &MddModel, xs: &[f64], exec: Execution) -> Result<Vec<RegressionRow>> {
    map_slice(xs, exec, |&x| {
        let law = ConditionalLaw::new(model, x)?;
        Ok(RegressionRow {
            x,
            median: law.median()?,
            q05: law.quantile(0.05)?,
            q25: law.quantile(0.25)?,
            q75: law.quantile(0.75)?,
            q95: law.quantile(0.95)?,
            mean: law.mean()?,
        })
    })
    .into_iter()
    .collect()
}

/// Closed-form median of `(U | L = x)` for ordered pairs under the
/// copula `C(u, v) = uv / (u + v - uv)`, at level `q`.
pub fn clayton_ordered_pair_quantile(f: &UnivariateDist, x: f64, q: f64) -> f64 {
    let fx = f.cdf(x);
    let r = (1.0 - q + q * (2.0 - fx).powi(2)).sqrt();
    f.quantile_clamped(fx / (fx - 1.0 + (2.0 - fx) / r))
}
