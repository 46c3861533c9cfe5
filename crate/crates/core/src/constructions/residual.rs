//! Joint residual lifetimes `(X_i - t | conditioning event at t)`.
//!
//! With survival copula `Ĉ` and `k_i = F̄_i(t)`, the residual survival
//! function is `D̂(F̄_{1,t}(x_1), …)` where `D̂` is a ratio of `Ĉ` values:
//!
//! - all residual components alive: `Ĉ(k_1 u_1, …) / Ĉ(k_1, …)`;
//! - one component failed by `t`: the numerator and denominator become
//!   differences `Ĉ(…, 1) - Ĉ(…, k_j)`;
//! - a sub-vector given every component alive: the other coordinates are
//!   pinned at `k_i` instead of 1.

use crate::copulas::SurvivalCopula;
use crate::distortion::{Distortion, DistortionFn, DualDistortion, Provenance};
use crate::error::{MddError, Result};
use crate::marginals::UnivariateDist;

/// The conditioning event at time `t`. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conditioning {
    /// The residual components are alive.
    AllAlive,
    /// Component `j` has failed by `t` and the residual components are alive.
    LastFailedByT(usize),
    /// Every component is alive; the residual vector is this sub-vector.
    SubsetAlive(Vec<usize>),
}

/// Input of the residual-lifetime constructions.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSpec {
    pub survival_copula: SurvivalCopula,
    pub marginals: Vec<UnivariateDist>,
    pub t: f64,
    pub conditioning: Conditioning,
    /// Residual components for [`Conditioning::AllAlive`] and
    /// [`Conditioning::LastFailedByT`]; all eligible components when `None`.
    pub components: Option<Vec<usize>>,
}

impl ResidualSpec {
    /// All components alive, every component residual.
    pub fn all_alive(survival_copula: SurvivalCopula, marginals: Vec<UnivariateDist>, t: f64) -> Self {
        ResidualSpec {
            survival_copula,
            marginals,
            t,
            conditioning: Conditioning::AllAlive,
            components: None,
        }
    }

    pub fn with_conditioning(mut self, conditioning: Conditioning) -> Self {
        self.conditioning = conditioning;
        self
    }

    pub fn with_components(mut self, components: Vec<usize>) -> Self {
        self.components = Some(components);
        self
    }

    /// Zero-based indices of the residual vector, in order.
    pub fn residual_components(&self) -> Result<Vec<usize>> {
        let n = self.survival_copula.dim();
        let list = match (&self.conditioning, &self.components) {
            (Conditioning::SubsetAlive(_), Some(_)) => {
                return Err(MddError::param(
                    "keep",
                    "the sub-vector is already given by the conditioning",
                ))
            }
            (Conditioning::SubsetAlive(k), None) => k.clone(),
            (Conditioning::LastFailedByT(j), None) => (0..n).filter(|i| i != j).collect(),
            (Conditioning::LastFailedByT(j), Some(k)) => {
                if k.contains(j) {
                    return Err(MddError::param(
                        "keep",
                        format!("failed component {} cannot be residual", j + 1),
                    ));
                }
                k.clone()
            }
            (Conditioning::AllAlive, None) => (0..n).collect(),
            (Conditioning::AllAlive, Some(k)) => k.clone(),
        };
        if list.is_empty() {
            return Err(MddError::param("keep", "the residual vector is empty"));
        }
        for (i, k) in list.iter().enumerate() {
            if *k >= n {
                return Err(MddError::param(
                    "keep",
                    format!("component {} out of range 1..={n}", k + 1),
                ));
            }
            if list[..i].contains(k) {
                return Err(MddError::param("keep", format!("component {} repeated", k + 1)));
            }
        }
        Ok(list)
    }
}

#[derive(Debug, Clone)]
struct ResidualDual {
    chat: SurvivalCopula,
    kbar: Vec<f64>,
    residual: Vec<usize>,
    /// Pinned at `k_i` (alive but not residual).
    alive: Vec<usize>,
    failed: Vec<usize>,
    denom: f64,
    label: String,
}

impl ResidualDual {
    /// `Pr(X_i > t + x_i for residual i, X_j > t for alive j, X_f <= t for failed f)`
    /// with `u_i = F̄_{i,t}(x_i)`.
    fn numerator(&self, u: &[f64]) -> f64 {
        let n = self.kbar.len();
        let mut base = vec![1.0; n];
        for (x, &i) in u.iter().zip(&self.residual) {
            base[i] = self.kbar[i] * x;
        }
        for &i in &self.alive {
            base[i] = self.kbar[i];
        }
        let mut total = 0.0;
        let mut w = base.clone();
        for mask in 0u32..(1u32 << self.failed.len()) {
            for (b, &f) in self.failed.iter().enumerate() {
                w[f] = if mask & (1 << b) != 0 { self.kbar[f] } else { 1.0 };
            }
            let p = self.chat.eval(&w);
            if mask.count_ones() % 2 == 0 {
                total += p;
            } else {
                total -= p;
            }
        }
        total
    }
}

impl DistortionFn for ResidualDual {
    fn dim(&self) -> usize {
        self.residual.len()
    }
    fn eval(&self, u: &[f64]) -> f64 {
        self.numerator(u) / self.denom
    }
    fn name(&self) -> String {
        self.label.clone()
    }
}

/// Smallest conditioning probability accepted.
const MIN_CONDITIONING: f64 = 1e-300;

/// Dual distortion of the residual lifetimes described by `spec`.
pub fn residual_dual(spec: &ResidualSpec) -> Result<DualDistortion> {
    let n = spec.survival_copula.dim();
    if spec.marginals.len() != n {
        return Err(MddError::DimensionMismatch {
            expected: n,
            got: spec.marginals.len(),
        });
    }
    if !(spec.t >= 0.0 && spec.t.is_finite()) {
        return Err(MddError::param(
            "t",
            format!("must be finite and nonnegative, got {}", spec.t),
        ));
    }
    let residual = spec.residual_components()?;
    let kbar: Vec<f64> = spec.marginals.iter().map(|g| g.survival(spec.t)).collect();
    let (alive, failed, tag) = match &spec.conditioning {
        Conditioning::AllAlive => (vec![], vec![], "all".to_string()),
        Conditioning::LastFailedByT(j) => {
            if *j >= n {
                return Err(MddError::param(
                    "cond",
                    format!("component {} out of range 1..={n}", j + 1),
                ));
            }
            (vec![], vec![*j], format!("failed:{}", j + 1))
        }
        Conditioning::SubsetAlive(_) => {
            let alive: Vec<usize> = (0..n).filter(|i| !residual.contains(i)).collect();
            (alive, vec![], "subset".to_string())
        }
    };
    if residual.iter().chain(&alive).any(|&i| kbar[i] <= 0.0) {
        return Err(MddError::ConditioningEventNull);
    }
    let keep: Vec<String> = residual.iter().map(|k| (k + 1).to_string()).collect();
    let mut d = ResidualDual {
        chat: spec.survival_copula,
        kbar,
        residual,
        alive,
        failed,
        denom: 1.0,
        label: format!("residual(t={},cond={},keep={})", spec.t, tag, keep.join("+")),
    };
    let denom = d.numerator(&vec![1.0; d.residual.len()]);
    if denom.is_nan() || denom <= MIN_CONDITIONING {
        return Err(MddError::ConditioningEventNull);
    }
    d.denom = denom;
    Ok(DualDistortion::new(Distortion::new(d, Provenance::ResidualLifetime)))
}

fn expect_conditioning(spec: &ResidualSpec, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(MddError::param(
            "cond",
            format!("expected {what} conditioning, got {:?}", spec.conditioning),
        ))
    }
}

/// `D̂_t(u) = Ĉ(F̄_1(t) u_1, …) / Ĉ(F̄_1(t), …)`.
pub fn residual_dual_distortion(spec: &ResidualSpec) -> Result<DualDistortion> {
    expect_conditioning(spec, spec.conditioning == Conditioning::AllAlive, "all-alive")?;
    residual_dual(spec)
}

/// Residuals of the other components given that component `j` failed by `t`.
pub fn residual_dual_last_failed(spec: &ResidualSpec) -> Result<DualDistortion> {
    expect_conditioning(
        spec,
        matches!(spec.conditioning, Conditioning::LastFailedByT(_)),
        "failed-by-t",
    )?;
    residual_dual(spec)
}

/// Residuals of a sub-vector given that every component is alive.
pub fn residual_dual_subset_alive(spec: &ResidualSpec) -> Result<DualDistortion> {
    expect_conditioning(
        spec,
        matches!(spec.conditioning, Conditioning::SubsetAlive(_)),
        "subset-alive",
    )?;
    residual_dual(spec)
}

/// Joint survival of the residual vector: `D̂(F̄_{1,t}(x_1), …)`.
pub fn residual_joint_survival(spec: &ResidualSpec, dual: &DualDistortion, x: &[f64]) -> Result<f64> {
    let comps = spec.residual_components()?;
    if x.len() != comps.len() {
        return Err(MddError::DimensionMismatch {
            expected: comps.len(),
            got: x.len(),
        });
    }
    let mut u = Vec::with_capacity(x.len());
    for (xi, &k) in x.iter().zip(&comps) {
        u.push(spec.marginals[k].residual_survival(spec.t, *xi)?);
    }
    dual.eval(&u)
}
