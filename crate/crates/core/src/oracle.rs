//! Monte Carlo ground truth: samplers built from conditional inverse
//! transforms, sorting and structure functions, plus empirical estimators
//! with standard errors.
//!
//! Samples are drawn in chunks of [`CHUNK`] points; chunk `i` uses stream `i`
//! of the seed (see [`crate::rng`]), so output is identical for sequential and
//! parallel execution.

use serde::{Deserialize, Serialize};

use crate::constructions::{Conditioning, ResidualSpec, StructureFunction};
use crate::copulas::{Copula, SurvivalCopula};
use crate::distortion::MddModel;
use crate::error::{MddError, Result};
use crate::exec::{map_range, Execution};
use crate::marginals::UnivariateDist;
use crate::regression::ConditionalLaw;
use crate::rng::{open01, stream_rng, StreamRng};
use crate::roots::invert_monotone;

pub const CHUNK: usize = 4096;
/// Width of the bisection used where no closed-form conditional inverse is
/// used.
pub const BISECTION_TOL: f64 = 1e-12;

fn chunked<T, F>(n: usize, seed: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng) -> T + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    map_range(chunks, exec, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let m = CHUNK.min(n - i * CHUNK);
        (0..m).map(|_| f(&mut rng)).collect::<Vec<T>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

fn check_sampleable(c: &Copula) -> Result<()> {
    match *c {
        Copula::Fgm { dim, .. } if dim > 3 => Err(MddError::Unsupported(format!(
            "sampling {c}: only the bivariate and trivariate FGM copulas are supported"
        ))),
        _ => Ok(()),
    }
}

/// `U_3` given `(U_1, U_2)` for the trivariate FGM copula: the root of
/// `w + a w (1 - w) = q` with `a = θ (1 - 2u_1)(1 - 2u_2)`, by bisection.
fn fgm3_third(theta: f64, u1: f64, u2: f64, q: f64) -> f64 {
    let a = theta * (1.0 - 2.0 * u1) * (1.0 - 2.0 * u2);
    invert_monotone(|w| w + a * w * (1.0 - w), q, 0.0, 1.0, BISECTION_TOL, 200)
}

fn draw(c: &Copula, rng: &mut StreamRng, out: &mut [f64]) {
    match *c {
        Copula::Independence { .. } => {
            for x in out.iter_mut() {
                *x = open01(rng);
            }
        }
        Copula::Comonotone { .. } => {
            let u = open01(rng);
            out.fill(u);
        }
        Copula::Fgm { dim: 3, theta } => {
            // The bivariate margins of the trivariate FGM copula are
            // independent, so U_2 | U_1 is uniform.
            out[0] = open01(rng);
            out[1] = open01(rng);
            out[2] = fgm3_third(theta, out[0], out[1], open01(rng));
        }
        Copula::Fgm { .. } | Copula::Clayton1 => {
            let u = open01(rng);
            let q = open01(rng);
            out[0] = u;
            out[1] = c.conditional_quantile_at(q, u);
        }
    }
}

/// `n` points of the copula `c`, as rows.
pub fn sample_copula_points(c: &Copula, n: usize, seed: u64, exec: Execution) -> Result<Vec<Vec<f64>>> {
    check_sampleable(c)?;
    let d = c.dim();
    Ok(chunked(n, seed, exec, |rng| {
        let mut p = vec![0.0; d];
        draw(c, rng, &mut p);
        p
    }))
}

/// `n` pairs `(U, V)` with `U` uniform and `V = C^{-1}_{2|1}(Q | U)`.
pub fn sample_copula(c: &Copula, n: usize, seed: u64, exec: Execution) -> Result<Vec<[f64; 2]>> {
    if c.dim() != 2 {
        return Err(MddError::DimensionMismatch {
            expected: 2,
            got: c.dim(),
        });
    }
    Ok(chunked(n, seed, exec, |rng| {
        let mut p = [0.0; 2];
        draw(c, rng, &mut p);
        p
    }))
}

/// `n` points of the survival copula: points of the base copula, reflected
/// through `1 - u` when `Ĉ` is not in closed form.
pub fn sample_survival_copula(c: &SurvivalCopula, n: usize, seed: u64, exec: Execution) -> Result<Vec<Vec<f64>>> {
    let mut pts = sample_copula_points(&c.base(), n, seed, exec)?;
    if c.is_reflected() {
        for p in &mut pts {
            for x in p.iter_mut() {
                *x = 1.0 - *x;
            }
        }
    }
    Ok(pts)
}

/// `n` points of the trivariate FGM copula by sequential conditional
/// sampling.
pub fn sample_trivariate_fgm(theta: f64, n: usize, seed: u64, exec: Execution) -> Result<Vec<[f64; 3]>> {
    let c = Copula::fgm(3, theta)?;
    Ok(chunked(n, seed, exec, |rng| {
        let mut p = [0.0; 3];
        draw(&c, rng, &mut p);
        p
    }))
}

/// Pairs `(X, Y) = (F^{-1}(U), F^{-1}(V))` and the ordered pairs
/// `(L, U) = (min, max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub xy: Vec<[f64; 2]>,
    pub ordered: Vec<[f64; 2]>,
}

pub fn sample_mdd_pairs(c: &Copula, f: &UnivariateDist, n: usize, seed: u64, exec: Execution) -> Result<PairSample> {
    let uv = sample_copula(c, n, seed, exec)?;
    let xy: Vec<[f64; 2]> = uv
        .iter()
        .map(|p| [f.quantile_clamped(p[0]), f.quantile_clamped(p[1])])
        .collect();
    let ordered = xy.iter().map(|p| [p[0].min(p[1]), p[0].max(p[1])]).collect();
    Ok(PairSample { xy, ordered })
}

/// Sorted points `(X_{1:n}, …, X_{n:n})` of `n`-variate copula draws mapped
/// through `f`.
pub fn sample_order_statistics(
    c: &Copula,
    f: &UnivariateDist,
    n: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    let mut pts = sample_copula_points(c, n, seed, exec)?;
    for p in &mut pts {
        for x in p.iter_mut() {
            *x = f.quantile_clamped(*x);
        }
        p.sort_by(f64::total_cmp);
    }
    Ok(pts)
}

/// Lifetimes `(T, T*) = (ψ(X), ψ*(X))` for components with copula `c` and
/// common marginal `f`.
pub fn sample_system_pair(
    psi: &StructureFunction,
    psi_star: &StructureFunction,
    c: &Copula,
    f: &UnivariateDist,
    n: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<[f64; 2]>> {
    if psi.n_components() != c.dim() || psi_star.n_components() != c.dim() {
        return Err(MddError::DimensionMismatch {
            expected: c.dim(),
            got: psi.n_components().max(psi_star.n_components()),
        });
    }
    let pts = sample_copula_points(c, n, seed, exec)?;
    Ok(pts
        .iter()
        .map(|p| {
            let x: Vec<f64> = p.iter().map(|u| f.quantile_clamped(*u)).collect();
            [psi.lifetime(&x), psi_star.lifetime(&x)]
        })
        .collect())
}

const RESIDUAL_BATCH: usize = 64;
const RESIDUAL_MAX_BATCHES: usize = 4096;

/// `n` residual vectors `(X_i - t)_i` drawn by rejection from the
/// conditioning event of `spec`. Component lifetimes are
/// `X_i = F̄_i^{-1}(W_i)` with `W` drawn from the survival copula.
pub fn sample_residual(spec: &ResidualSpec, n: usize, seed: u64, exec: Execution) -> Result<Vec<Vec<f64>>> {
    let comps = spec.residual_components()?;
    let d = spec.survival_copula.dim();
    if spec.marginals.len() != d {
        return Err(MddError::DimensionMismatch {
            expected: d,
            got: spec.marginals.len(),
        });
    }
    check_sampleable(&spec.survival_copula.base())?;
    let (alive, failed): (Vec<usize>, Vec<usize>) = match &spec.conditioning {
        Conditioning::AllAlive => (comps.clone(), vec![]),
        Conditioning::LastFailedByT(j) => (comps.clone(), vec![*j]),
        Conditioning::SubsetAlive(_) => ((0..d).collect(), vec![]),
    };
    let t = spec.t;
    let one_chunk = |i: usize| -> Vec<Vec<f64>> {
        let mut rng = stream_rng(seed, i as u64);
        let base = spec.survival_copula.base();
        let reflect = spec.survival_copula.is_reflected();
        let mut w = vec![0.0; d];
        let mut out = Vec::new();
        for _ in 0..CHUNK {
            draw(&base, &mut rng, &mut w);
            let x: Vec<f64> = w
                .iter()
                .zip(&spec.marginals)
                .map(|(&wi, g)| {
                    let s = if reflect { 1.0 - wi } else { wi };
                    g.quantile_clamped(1.0 - s)
                })
                .collect();
            if alive.iter().all(|&i| x[i] > t) && failed.iter().all(|&i| x[i] <= t) {
                out.push(comps.iter().map(|&i| x[i] - t).collect());
            }
        }
        out
    };
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(n);
    for batch in 0..RESIDUAL_MAX_BATCHES {
        if accepted.len() >= n {
            break;
        }
        let results = map_range(RESIDUAL_BATCH, exec, |j| one_chunk(batch * RESIDUAL_BATCH + j));
        for r in results {
            accepted.extend(r);
        }
        if batch == 0 && accepted.is_empty() {
            return Err(MddError::ConditioningEventNull);
        }
    }
    if accepted.len() < n {
        return Err(MddError::ConditioningEventNull);
    }
    accepted.truncate(n);
    Ok(accepted)
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEstimate {
    pub value: f64,
    pub n: usize,
    pub std_error: f64,
    pub seed: Option<u64>,
    /// Whether `value` is a proportion (binomial standard error).
    pub probability: bool,
}

impl EmpiricalEstimate {
    pub fn proportion(hits: usize, n: usize) -> Self {
        let p = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        EmpiricalEstimate {
            value: p,
            n,
            std_error: if n == 0 {
                f64::INFINITY
            } else {
                (p * (1.0 - p) / n as f64).sqrt()
            },
            seed: None,
            probability: true,
        }
    }

    /// Sample mean with standard error `s / √n`.
    pub fn mean(values: &[f64]) -> Self {
        let n = values.len();
        let m = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n as f64 - 1.0);
        EmpiricalEstimate {
            value: m,
            n,
            std_error: (var / n as f64).sqrt(),
            seed: None,
            probability: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Standard error used to judge agreement with `expected`: for
    /// proportions the larger of the empirical and the hypothesised binomial
    /// errors, so that `p̂ ∈ {0, 1}` is not judged with zero error.
    pub fn reference_error(&self, expected: f64) -> f64 {
        if self.probability {
            let e = expected.clamp(0.0, 1.0);
            self.std_error.max((e * (1.0 - e) / self.n as f64).sqrt())
        } else {
            self.std_error
        }
    }

    /// `|value - expected|` in units of [`Self::reference_error`].
    pub fn z_score(&self, expected: f64) -> f64 {
        let d = (self.value - expected).abs();
        if d == 0.0 {
            return 0.0;
        }
        d / self.reference_error(expected)
    }

    pub fn agrees_with(&self, expected: f64, n_se: f64) -> bool {
        self.z_score(expected) <= n_se
    }
}

/// Proportion of points with every coordinate `<= query`.
pub fn empirical_cdf<P: AsRef<[f64]>>(points: &[P], query: &[f64]) -> EmpiricalEstimate {
    let hits = points
        .iter()
        .filter(|p| p.as_ref().iter().zip(query).all(|(x, q)| x <= q))
        .count();
    EmpiricalEstimate::proportion(hits, points.len())
}

/// Proportion of points with every coordinate `> query`.
pub fn empirical_survival<P: AsRef<[f64]>>(points: &[P], query: &[f64]) -> EmpiricalEstimate {
    let hits = points
        .iter()
        .filter(|p| p.as_ref().iter().zip(query).all(|(x, q)| x > q))
        .count();
    EmpiricalEstimate::proportion(hits, points.len())
}

/// One bin of [`empirical_conditional_median`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMedian {
    pub x_lo: f64,
    pub x_hi: f64,
    pub count: usize,
    pub median_y: f64,
}

fn median_sorted(v: &[f64]) -> f64 {
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Pairs sorted by `x` and split into `bins` groups of (nearly) equal size.
fn quantile_bins(pairs: &[[f64; 2]], bins: usize) -> Result<Vec<Vec<[f64; 2]>>> {
    if pairs.len() < 100 {
        return Err(MddError::param(
            "pairs",
            format!("need at least 100 pairs, got {}", pairs.len()),
        ));
    }
    if bins == 0 || bins > pairs.len() {
        return Err(MddError::param(
            "bins",
            format!("{bins} bins for {} pairs", pairs.len()),
        ));
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let n = sorted.len();
    Ok((0..bins)
        .map(|b| sorted[b * n / bins..(b + 1) * n / bins].to_vec())
        .collect())
}

/// Median of `y` within bins of equal count along the empirical quantiles of
/// `x`.
pub fn empirical_conditional_median(pairs: &[[f64; 2]], bins: usize) -> Result<Vec<BinMedian>> {
    Ok(quantile_bins(pairs, bins)?
        .into_iter()
        .map(|bin| {
            let mut ys: Vec<f64> = bin.iter().map(|p| p[1]).collect();
            ys.sort_by(f64::total_cmp);
            BinMedian {
                x_lo: bin[0][0],
                x_hi: bin[bin.len() - 1][0],
                count: bin.len(),
                median_y: median_sorted(&ys),
            }
        })
        .collect())
}

/// Outcome of [`binned_median_check`] for one bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinCheck {
    pub bin: BinMedian,
    /// Number of pairs in the bin with `y <= median_y`.
    pub below: usize,
    /// `Σ_i F_{2|1}(median_y | x_i)` over the bin.
    pub expected_below: f64,
    pub band_half_width: f64,
    pub inside: bool,
}

/// Checks each bin's empirical median of `y` against the model: the count of
/// `y_i <= m̂` must lie within `1.96 √(Σ p_i (1 - p_i)) + 1` of `Σ p_i`, with
/// `p_i = F_{2|1}(m̂ | x_i)`. The slack of one absorbs the discreteness of
/// the median.
pub fn binned_median_check(
    pairs: &[[f64; 2]],
    model: &MddModel,
    bins: usize,
    exec: Execution,
) -> Result<Vec<BinCheck>> {
    let groups = quantile_bins(pairs, bins)?;
    let medians = empirical_conditional_median(pairs, bins)?;
    let checks = map_range(groups.len(), exec, |b| -> Result<BinCheck> {
        let bin = &groups[b];
        let m = medians[b].median_y;
        let mut mean = 0.0;
        let mut var = 0.0;
        for p in bin {
            let law = ConditionalLaw::new(model, p[0])?;
            let q = law.cdf(m);
            mean += q;
            var += q * (1.0 - q);
        }
        let below = bin.iter().filter(|p| p[1] <= m).count();
        let half = 1.96 * var.sqrt() + 1.0;
        Ok(BinCheck {
            bin: medians[b].clone(),
            below,
            expected_below: mean,
            band_half_width: half,
            inside: (below as f64 - mean).abs() <= half,
        })
    });
    checks.into_iter().collect()
}

/// Kendall's τ_b in `O(n log n)` (Knight's algorithm).
pub fn kendall_tau_sample(pairs: &[[f64; 2]]) -> f64 {
    let n = pairs.len();
    if n < 2 {
        return f64::NAN;
    }
    let mut v = pairs.to_vec();
    v.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let n0 = (n * (n - 1) / 2) as f64;
    let tie_pairs = |groups: &mut dyn Iterator<Item = usize>| -> f64 { groups.map(|t| (t * (t - 1) / 2) as f64).sum() };

    let mut runs = Vec::new();
    let mut joint = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && v[j][0] == v[i][0] {
            j += 1;
        }
        runs.push(j - i);
        let mut k = i;
        while k < j {
            let mut l = k;
            while l < j && v[l][1] == v[k][1] {
                l += 1;
            }
            joint.push(l - k);
            k = l;
        }
        i = j;
    }
    let n1 = tie_pairs(&mut runs.into_iter());
    let n3 = tie_pairs(&mut joint.into_iter());

    let mut ys: Vec<f64> = v.iter().map(|p| p[1]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf) as f64;

    let mut y_runs = Vec::new();
    let mut a = 0;
    while a < n {
        let mut b = a;
        while b < n && ys[b] == ys[a] {
            b += 1;
        }
        y_runs.push(b - a);
        a = b;
    }
    let n2 = tie_pairs(&mut y_runs.into_iter());
    (n0 - n1 - n2 + n3 - 2.0 * swaps) / ((n0 - n1) * (n0 - n2)).sqrt()
}

/// Sort `v` ascending and return the number of inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            count += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    let k = k + mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    count
}

/// Kolmogorov–Smirnov distance of a sample from the standard uniform law.
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Critical KS distance at the 1% level, `1.63 / √n`.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{coherent_pair, ordered_pair_distortion, residual_dual, residual_joint_survival};

    const N: usize = 100_000;

    fn within_3se<P: AsRef<[f64]>>(pts: &[P], q: &[f64], expect: f64) {
        let e = empirical_cdf(pts, q);
        assert!(
            e.agrees_with(expect, 3.0),
            "at {q:?}: {} vs {expect} (se {})",
            e.value,
            e.std_error
        );
    }

    #[test]
    fn deterministic_and_execution_independent() {
        let c = Copula::Clayton1;
        let a = sample_copula(&c, 10_000, 42, Execution::Sequential).unwrap();
        let b = sample_copula(&c, 10_000, 42, Execution::Parallel).unwrap();
        let d = sample_copula(&c, 10_000, 43, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
        assert_eq!(a.len(), 10_000);
        let e = sample_copula(&c, 5000, 42, Execution::Sequential).unwrap();
        assert_eq!(&a[..CHUNK], &e[..CHUNK]);
    }

    #[test]
    fn clayton_sample_matches_cdf_and_tau() {
        let pts = sample_copula(&Copula::Clayton1, N, 42, Execution::Parallel).unwrap();
        within_3se(&pts, &[0.5, 0.5], 1.0 / 3.0);
        let u: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        let v: Vec<f64> = pts.iter().map(|p| p[1]).collect();
        assert!(ks_uniform(&u) < ks_critical_1pct(N));
        assert!(ks_uniform(&v) < ks_critical_1pct(N));
        let tau = kendall_tau_sample(&pts);
        assert!((tau - 1.0 / 3.0).abs() < 0.01, "{tau}");
    }

    #[test]
    fn clayton_conditional_by_decile() {
        let c = Copula::Clayton1;
        let pts = sample_copula(&c, N, 7, Execution::Parallel).unwrap();
        for d in 0..10 {
            let (lo, hi) = (d as f64 / 10.0, (d + 1) as f64 / 10.0);
            let bin: Vec<[f64; 2]> = pts.iter().filter(|p| p[0] > lo && p[0] <= hi).copied().collect();
            for q in [0.1, 0.3, 0.5, 0.7, 0.9] {
                // Pr(V <= q | U in bin) = (C(hi, q) - C(lo, q)) / (hi - lo)
                let expect = (c.cdf(&[hi, q]).unwrap() - c.cdf(&[lo, q]).unwrap()) / (hi - lo);
                let hits = bin.iter().filter(|p| p[1] <= q).count();
                let e = EmpiricalEstimate::proportion(hits, bin.len());
                assert!(e.agrees_with(expect, 3.0), "decile {d} q {q}: {} vs {expect}", e.value);
            }
        }
    }

    #[test]
    fn trivariate_fgm() {
        let theta = 1.0;
        let pts = sample_trivariate_fgm(theta, N, 42, Execution::Parallel).unwrap();
        let c = Copula::fgm(3, theta).unwrap();
        for a in [0.25, 0.5, 0.75] {
            for b in [0.25, 0.5, 0.75] {
                for d in [0.25, 0.5, 0.75] {
                    within_3se(&pts, &[a, b, d], c.cdf(&[a, b, d]).unwrap());
                }
            }
        }
        // Pr(all > 1/2) by inclusion–exclusion: 1 - 3/2 + 3/4 - C(1/2,1/2,1/2)
        let corner = 1.0 - 1.5 + 0.75 - c.cdf(&[0.5, 0.5, 0.5]).unwrap();
        let e = empirical_survival(&pts, &[0.5, 0.5, 0.5]);
        assert!(e.agrees_with(corner, 3.0));
        for k in 0..3 {
            let col: Vec<f64> = pts.iter().map(|p| p[k]).collect();
            assert!(ks_uniform(&col) < ks_critical_1pct(N));
        }
        let ind = sample_trivariate_fgm(0.0, 1000, 1, Execution::Sequential).unwrap();
        let direct = sample_copula_points(&Copula::independence(3).unwrap(), 1000, 1, Execution::Sequential).unwrap();
        for (a, b) in ind.iter().zip(&direct) {
            assert!((a[2] - b[2]).abs() < 1e-11);
        }
    }

    #[test]
    fn mdd_pairs() {
        let f = UnivariateDist::normal(60.0, 5.0).unwrap();
        let s = sample_mdd_pairs(&Copula::independence(2).unwrap(), &f, N, 42, Execution::Parallel).unwrap();
        let gaps: Vec<f64> = s.ordered.iter().map(|p| p[1] - p[0]).collect();
        let e = EmpiricalEstimate::mean(&gaps);
        let expect = 2.0 * 5.0 / std::f64::consts::PI.sqrt();
        assert!(e.agrees_with(expect, 3.0), "{} vs {expect}", e.value);
        let s = sample_mdd_pairs(&Copula::comonotone(2).unwrap(), &f, 100, 1, Execution::Sequential).unwrap();
        assert!(s.ordered.iter().all(|p| p[0] == p[1]));
    }

    #[test]
    fn ordered_pair_cdf_matches_distortion() {
        let c = Copula::Clayton1;
        let s = sample_mdd_pairs(&c, &UnivariateDist::standard_uniform(), N, 42, Execution::Parallel).unwrap();
        let d = ordered_pair_distortion(c).unwrap();
        for i in 1..=5 {
            for j in 1..=5 {
                let q = [i as f64 / 6.0, j as f64 / 6.0];
                within_3se(&s.ordered, &q, d.eval(&q).unwrap());
            }
        }
    }

    #[test]
    fn series_and_parallel_systems() {
        let psi = StructureFunction::series(3).unwrap();
        let psi_star = StructureFunction::parallel(3).unwrap();
        let u = UnivariateDist::standard_uniform();
        let c = Copula::independence(3).unwrap();
        let pts = sample_system_pair(&psi, &psi_star, &c, &u, N, 42, Execution::Parallel).unwrap();
        let (a, b) = (0.3f64, 0.6f64);
        within_3se(&pts, &[a, b], 3.0 * a * b * b - 3.0 * a * a * b + a.powi(3));
        let d = coherent_pair(&psi, &psi_star, c).unwrap();
        for i in 1..=4 {
            for j in 1..=4 {
                let q = [i as f64 / 5.0, j as f64 / 5.0];
                within_3se(&pts, &q, d.eval(&q).unwrap());
            }
        }
        let same = sample_system_pair(&psi, &psi, &c, &u, 1000, 3, Execution::Sequential).unwrap();
        assert!(same.iter().all(|p| p[0] == p[1]));
    }

    #[test]
    fn residual_sampler_matches_dual() {
        let e = UnivariateDist::exponential(1.0).unwrap();
        let c = Copula::fgm(3, 0.9).unwrap();
        let spec = ResidualSpec::all_alive(c.survival_copula(), vec![e; 3], -(0.5f64).ln())
            .with_conditioning(Conditioning::LastFailedByT(2));
        let dual = residual_dual(&spec).unwrap();
        let pts = sample_residual(&spec, 50_000, 42, Execution::Parallel).unwrap();
        assert_eq!(pts.len(), 50_000);
        for a in [0.2, 0.7, 1.5] {
            for b in [0.2, 0.7, 1.5] {
                let expect = residual_joint_survival(&spec, &dual, &[a, b]).unwrap();
                let est = empirical_survival(&pts, &[a, b]);
                assert!(est.agrees_with(expect, 3.0), "({a},{b}): {} vs {expect}", est.value);
            }
        }
        let seq = sample_residual(&spec, 5000, 42, Execution::Sequential).unwrap();
        assert_eq!(&seq[..], &pts[..5000]);
    }

    #[test]
    fn estimators() {
        let pts = vec![[0.1, 0.2]; 200];
        let e = empirical_cdf(&pts, &[0.5, 0.5]);
        assert_eq!((e.value, e.std_error), (1.0, 0.0));
        let u: Vec<[f64; 1]> = {
            let mut r = stream_rng(9, 0);
            (0..10_000).map(|_| [open01(&mut r)]).collect()
        };
        let e = empirical_cdf(&u, &[0.5]);
        assert!((e.value - 0.5).abs() < 3.0 * 0.005);
        assert!((e.std_error - 0.005).abs() < 1e-4);
        assert!(empirical_conditional_median(&[[0.0, 0.0]; 50], 5).is_err());
    }

    #[test]
    fn knight_matches_brute_force() {
        let mut r = stream_rng(5, 0);
        let pts: Vec<[f64; 2]> = (0..300)
            .map(|_| {
                let x = (open01(&mut r) * 10.0).floor();
                [x, (x + open01(&mut r) * 8.0).floor()]
            })
            .collect();
        let (mut conc, mut disc, mut tx, mut ty) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let dx = pts[i][0] - pts[j][0];
                let dy = pts[i][1] - pts[j][1];
                if dx == 0.0 && dy == 0.0 {
                    continue;
                } else if dx == 0.0 {
                    tx += 1.0;
                } else if dy == 0.0 {
                    ty += 1.0;
                } else if dx * dy > 0.0 {
                    conc += 1.0;
                } else {
                    disc += 1.0;
                }
            }
        }
        let brute = (conc - disc) / ((conc + disc + tx) * (conc + disc + ty)).sqrt();
        assert!((kendall_tau_sample(&pts) - brute).abs() < 1e-12);
    }

    #[test]
    fn binned_medians_track_the_model() {
        let f = UnivariateDist::exponential(60.0).unwrap();
        let s = sample_mdd_pairs(&Copula::Clayton1, &f, N, 42, Execution::Parallel).unwrap();
        let model = MddModel::common(ordered_pair_distortion(Copula::Clayton1).unwrap(), f);
        let checks = binned_median_check(&s.ordered, &model, 20, Execution::Parallel).unwrap();
        assert_eq!(checks.len(), 20);
        let outside = checks.iter().filter(|c| !c.inside).count();
        assert!(outside <= 3, "{outside} bins outside");
        // A distorted model (independence instead of Clayton) is caught.
        let wrong = MddModel::common(ordered_pair_distortion(Copula::independence(2).unwrap()).unwrap(), f);
        let checks = binned_median_check(&s.ordered, &wrong, 20, Execution::Parallel).unwrap();
        assert!(checks.iter().filter(|c| !c.inside).count() > 3);
    }
}
