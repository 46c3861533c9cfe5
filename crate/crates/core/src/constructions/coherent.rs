//! Pairs of coherent systems built from the same components.
//!
//! With minimal cut sets `C_1..C_s`, the lifetime is
//! `T = min_i max_{j ∈ C_i} X_j`, so `{T <= x} = ∪_i A_i` with
//! `A_i = {X_j <= x for all j ∈ C_i}`. For a second system with cut sets
//! `C*_1..C*_{s*}`, `Pr(T <= x, T* <= y)` is the probability of the union of
//! the `s s*` threshold events `B_ij = A_i ∩ A*_j`, and with identically
//! distributed components it equals `D(F(x), F(y))`.

use serde::{Deserialize, Serialize};

use crate::copulas::{Copula, SurvivalCopula};
use crate::distortion::{Distortion, DistortionFn, Provenance};
use crate::error::{MddError, Result};
use crate::inclusion_exclusion::MAX_EVENTS;

/// A structure function given by its minimal cut sets (zero-based indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureFunction {
    n: usize,
    cuts: Vec<Vec<usize>>,
}

/// The JSON shape, with one-based component indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureJson {
    pub n: usize,
    pub cuts: Vec<Vec<usize>>,
}

impl StructureFunction {
    pub fn new(n: usize, cuts: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(MddError::param("n", format!("need 1..=64 components, got {n}")));
        }
        if cuts.is_empty() {
            return Err(MddError::param("cuts", "at least one cut set is required"));
        }
        let mut normalized = Vec::with_capacity(cuts.len());
        for cut in cuts {
            if cut.is_empty() {
                return Err(MddError::param("cuts", "cut sets must be nonempty"));
            }
            let mut c = cut.clone();
            c.sort_unstable();
            c.dedup();
            if let Some(bad) = c.iter().find(|k| **k >= n) {
                return Err(MddError::param(
                    "cuts",
                    format!("component {} out of range 1..={n}", bad + 1),
                ));
            }
            normalized.push(c);
        }
        for (i, a) in normalized.iter().enumerate() {
            for (j, b) in normalized.iter().enumerate() {
                if i != j && a.iter().all(|k| b.contains(k)) {
                    return Err(MddError::param(
                        "cuts",
                        format!(
                            "cut set {} is contained in {}, so the cuts are not minimal",
                            one_based(a),
                            one_based(b)
                        ),
                    ));
                }
            }
        }
        Ok(StructureFunction { n, cuts: normalized })
    }

    /// Build from one-based indices as they appear in configuration files.
    pub fn from_one_based(n: usize, cuts: Vec<Vec<usize>>) -> Result<Self> {
        let mut zero = Vec::with_capacity(cuts.len());
        for cut in cuts {
            let mut c = Vec::with_capacity(cut.len());
            for k in cut {
                if k == 0 {
                    return Err(MddError::param("cuts", "component indices start at 1"));
                }
                c.push(k - 1);
            }
            zero.push(c);
        }
        StructureFunction::new(n, zero)
    }

    /// Series system: every component is a cut.
    pub fn series(n: usize) -> Result<Self> {
        StructureFunction::new(n, (0..n).map(|k| vec![k]).collect())
    }

    /// Parallel system: a single cut with every component.
    pub fn parallel(n: usize) -> Result<Self> {
        StructureFunction::new(n, vec![(0..n).collect()])
    }

    pub fn n_components(&self) -> usize {
        self.n
    }

    pub fn cuts(&self) -> &[Vec<usize>] {
        &self.cuts
    }

    /// `T = min_i max_{j ∈ C_i} x_j`.
    pub fn lifetime(&self, x: &[f64]) -> f64 {
        self.cuts
            .iter()
            .map(|c| c.iter().map(|&k| x[k]).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> StructureJson {
        StructureJson {
            n: self.n,
            cuts: self.cuts.iter().map(|c| c.iter().map(|k| k + 1).collect()).collect(),
        }
    }

    pub fn from_json(j: &StructureJson) -> Result<Self> {
        StructureFunction::from_one_based(j.n, j.cuts.clone())
    }

    fn mask(cut: &[usize]) -> u64 {
        cut.iter().fold(0u64, |m, k| m | (1u64 << k))
    }
}

fn one_based(c: &[usize]) -> String {
    let items: Vec<String> = c.iter().map(|k| (k + 1).to_string()).collect();
    format!("{{{}}}", items.join(","))
}

#[derive(Debug, Clone)]
pub(crate) struct CoherentPair {
    copula: Copula,
    n: usize,
    /// Per event: components thresholded at `u`, components thresholded at `v`.
    events: Vec<(u64, u64)>,
    label: String,
}

/// Visit every nonempty subset of events with the union of its masks and
/// whether its size is odd.
fn walk<F: FnMut(u64, u64, bool)>(events: &[(u64, u64)], start: usize, um: u64, vm: u64, odd: bool, f: &mut F) {
    for j in start..events.len() {
        let (nu, nv) = (um | events[j].0, vm | events[j].1);
        f(nu, nv, !odd);
        walk(events, j + 1, nu, nv, !odd, f);
    }
}

/// Which argument sets a component's threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    One,
    U,
    V,
}

impl CoherentPair {
    /// Threshold per component; ties between `u` and `v` go to `u`.
    fn thresholds(&self, um: u64, vm: u64, u: f64, v: f64, t: &mut [f64], src: &mut [Source]) {
        for k in 0..self.n {
            let (hu, hv) = (um >> k & 1 == 1, vm >> k & 1 == 1);
            (t[k], src[k]) = if hu && (!hv || u <= v) {
                (u, Source::U)
            } else if hv {
                (v, Source::V)
            } else {
                (1.0, Source::One)
            };
        }
    }

    fn sum<F: Fn(&[f64], &[Source]) -> f64>(&self, u: f64, v: f64, term: F) -> f64 {
        let mut t = vec![1.0; self.n];
        let mut src = vec![Source::One; self.n];
        let mut total = 0.0;
        walk(&self.events, 0, 0, 0, false, &mut |um, vm, odd| {
            self.thresholds(um, vm, u, v, &mut t, &mut src);
            let x = term(&t, &src);
            if odd {
                total += x;
            } else {
                total -= x;
            }
        });
        total
    }
}

impl DistortionFn for CoherentPair {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, w: &[f64]) -> f64 {
        self.sum(w[0], w[1], |t, _| self.copula.eval(t))
    }

    /// Chain rule through every component whose threshold is the argument.
    fn partial(&self, k: usize, w: &[f64]) -> Option<f64> {
        if matches!(self.copula, Copula::Comonotone { .. }) {
            return None;
        }
        let want = if k == 0 { Source::U } else { Source::V };
        Some(self.sum(w[0], w[1], |t, src| {
            src.iter()
                .enumerate()
                .filter(|(_, s)| **s == want)
                .map(|(j, _)| self.copula.partial_at(j, t))
                .sum()
        }))
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}

/// Distortion of `(T, T*)` for two structure functions on the components of
/// `c`.
pub fn coherent_pair(psi: &StructureFunction, psi_star: &StructureFunction, c: Copula) -> Result<Distortion> {
    if psi.n != psi_star.n || psi.n != c.dim() {
        return Err(MddError::DimensionMismatch {
            expected: c.dim(),
            got: if psi.n != c.dim() { psi.n } else { psi_star.n },
        });
    }
    let m = psi.cuts.len() * psi_star.cuts.len();
    if m > MAX_EVENTS {
        return Err(MddError::TooManyEvents {
            events: m,
            limit: MAX_EVENTS,
        });
    }
    let mut events = Vec::with_capacity(m);
    for a in &psi.cuts {
        for b in &psi_star.cuts {
            events.push((StructureFunction::mask(a), StructureFunction::mask(b)));
        }
    }
    let label = format!(
        "coherent({};{};{})",
        serde_json::to_string(&psi.to_json().cuts).unwrap_or_default(),
        serde_json::to_string(&psi_star.to_json().cuts).unwrap_or_default(),
        c
    );
    Ok(Distortion::new(
        CoherentPair {
            copula: c,
            n: psi.n,
            events,
            label,
        },
        Provenance::CoherentPair,
    ))
}

/// `D(u, v)` for the pair `(T, T*)`.
pub fn coherent_pair_distortion(
    psi: &StructureFunction,
    psi_star: &StructureFunction,
    c: Copula,
    u: f64,
    v: f64,
) -> Result<f64> {
    coherent_pair(psi, psi_star, c)?.eval(&[u, v])
}

/// Joint survival distortion of `T = X_{1:3}` and `T* = max(X_1, min(X_2, X_3))`
/// in terms of the survival copula:
/// `Ĉ(u, v, v) + Ĉ(v, u, u) - Ĉ(v, v, v)` for `v <= u`. Since `T <= T*`, the
/// value for `u < v` is `Pr(T > x) = Ĉ(u, u, u)`.
pub fn coherent_pair_survival_example(c_hat: &SurvivalCopula, u: f64, v: f64) -> Result<f64> {
    if c_hat.dim() != 3 {
        return Err(MddError::DimensionMismatch {
            expected: 3,
            got: c_hat.dim(),
        });
    }
    if v <= u {
        Ok(c_hat.cdf(&[u, v, v])? + c_hat.cdf(&[v, u, u])? - c_hat.cdf(&[v, v, v])?)
    } else {
        c_hat.cdf(&[u, u, u])
    }
}
