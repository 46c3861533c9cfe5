//! Continuous univariate baselines: exponential, normal and uniform laws.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{MddError, Result};
use crate::params::SpecString;

/// A continuous univariate distribution used as a baseline `G_i` or as the
/// common marginal `F` of a construction.
///
/// Spec strings: `exp:mean=60`, `normal:mu=60,sd=5`, `uniform:lo=0,hi=1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnivariateDist {
    Exponential { mean: f64 },
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl UnivariateDist {
    pub fn exponential(mean: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(MddError::param("mean", format!("must be positive, got {mean}")));
        }
        Ok(UnivariateDist::Exponential { mean })
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(MddError::param("mu", format!("must be finite, got {mean}")));
        }
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(MddError::param("sd", format!("must be positive, got {sd}")));
        }
        Ok(UnivariateDist::Normal { mean, sd })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(MddError::param("lo", format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        Ok(UnivariateDist::Uniform { lo, hi })
    }

    /// Standard uniform on `[0, 1]`.
    pub fn standard_uniform() -> Self {
        UnivariateDist::Uniform { lo: 0.0, hi: 1.0 }
    }

    /// Closure of the support `(lo, hi)`; endpoints may be infinite.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            UnivariateDist::Exponential { .. } => (0.0, f64::INFINITY),
            UnivariateDist::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            UnivariateDist::Uniform { lo, hi } => (lo, hi),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            UnivariateDist::Exponential { mean } => mean,
            UnivariateDist::Normal { mean, .. } => mean,
            UnivariateDist::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            UnivariateDist::Exponential { mean } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / mean).exp_m1()
                }
            }
            UnivariateDist::Normal { mean, sd } => 0.5 * libm::erfc(-(x - mean) / sd * FRAC_1_SQRT_2),
            UnivariateDist::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            UnivariateDist::Exponential { mean } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x / mean).exp()
                }
            }
            UnivariateDist::Normal { mean, sd } => 0.5 * libm::erfc((x - mean) / sd * FRAC_1_SQRT_2),
            UnivariateDist::Uniform { lo, hi } => ((hi - x) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            UnivariateDist::Exponential { mean } => {
                if x < 0.0 {
                    0.0
                } else {
                    (-x / mean).exp() / mean
                }
            }
            UnivariateDist::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
            }
            UnivariateDist::Uniform { lo, hi } => {
                if x < lo || x > hi {
                    0.0
                } else {
                    1.0 / (hi - lo)
                }
            }
        }
    }

    /// Inverse CDF. `p` must lie in `[0, 1]`; the endpoints map to finite
    /// support endpoints and are rejected where the support is unbounded.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(MddError::ProbabilityOutOfRange(p));
        }
        let q = self.quantile_clamped(p);
        if q.is_finite() {
            Ok(q)
        } else {
            Err(MddError::ProbabilityOutOfRange(p))
        }
    }

    /// Inverse CDF that maps `p <= 0` and `p >= 1` to the (possibly infinite)
    /// support endpoints. Used internally where `±∞` is meaningful, e.g. as an
    /// argument to another CDF.
    pub fn quantile_clamped(&self, p: f64) -> f64 {
        let (lo, hi) = self.support();
        if p.is_nan() {
            return f64::NAN;
        }
        if p <= 0.0 {
            return lo;
        }
        if p >= 1.0 {
            return hi;
        }
        match *self {
            UnivariateDist::Exponential { mean } => -mean * (-p).ln_1p(),
            UnivariateDist::Normal { mean, sd } => mean + sd * std_normal_quantile(p),
            UnivariateDist::Uniform { lo, hi } => lo + p * (hi - lo),
        }
    }

    /// Survival function of the residual life `(X - t | X > t)` at `x`.
    pub fn residual_survival(&self, t: f64, x: f64) -> Result<f64> {
        let st = self.survival(t);
        if st <= 0.0 {
            return Err(MddError::ConditioningEventNull);
        }
        if x <= 0.0 {
            return Ok(1.0);
        }
        Ok(match *self {
            UnivariateDist::Exponential { mean } => (-x / mean).exp(),
            _ => (self.survival(t + x) / st).min(1.0),
        })
    }

    /// Inverse of the residual survival function: the `x >= 0` with
    /// `residual_survival(t, x) = s`.
    pub fn residual_quantile(&self, t: f64, s: f64) -> Result<f64> {
        let st = self.survival(t);
        if st <= 0.0 {
            return Err(MddError::ConditioningEventNull);
        }
        if !(0.0..=1.0).contains(&s) {
            return Err(MddError::ProbabilityOutOfRange(s));
        }
        // survival(t + x) = s * st  <=>  cdf(t + x) = 1 - s * st
        let y = match *self {
            UnivariateDist::Exponential { mean } => return Ok(if s <= 0.0 { f64::INFINITY } else { -mean * s.ln() }),
            _ => self.quantile_clamped(1.0 - s * st),
        };
        Ok((y - t).max(0.0))
    }
}

/// Standard normal quantile: Acklam's rational approximation refined by one
/// Newton step against the `erfc`-based CDF.
fn std_normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (-p).ln_1p()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let density = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    if density <= 0.0 {
        return x;
    }
    // Work on whichever tail keeps the residual accurate.
    if x <= 0.0 {
        let err = 0.5 * libm::erfc(-x * FRAC_1_SQRT_2) - p;
        x - err / density
    } else {
        let err = 0.5 * libm::erfc(x * FRAC_1_SQRT_2) - (1.0 - p);
        x + err / density
    }
}

impl fmt::Display for UnivariateDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnivariateDist::Exponential { mean } => write!(f, "exp:mean={mean}"),
            UnivariateDist::Normal { mean, sd } => write!(f, "normal:mu={mean},sd={sd}"),
            UnivariateDist::Uniform { lo, hi } => write!(f, "uniform:lo={lo},hi={hi}"),
        }
    }
}

impl FromStr for UnivariateDist {
    type Err = MddError;

    fn from_str(s: &str) -> Result<Self> {
        let spec = SpecString::parse(s, "distribution")?;
        match spec.name {
            "exp" | "exponential" => {
                spec.only(&["mean"])?;
                UnivariateDist::exponential(spec.f64("mean")?)
            }
            "normal" => {
                spec.only(&["mu", "sd"])?;
                UnivariateDist::normal(spec.f64("mu")?, spec.f64("sd")?)
            }
            "uniform" => {
                spec.only(&["lo", "hi"])?;
                UnivariateDist::uniform(spec.f64("lo")?, spec.f64("hi")?)
            }
            other => Err(spec.error(format!("unknown family {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_range, QuadOptions};

    fn families() -> Vec<UnivariateDist> {
        vec![
            UnivariateDist::exponential(60.0).unwrap(),
            UnivariateDist::exponential(1.0).unwrap(),
            UnivariateDist::normal(60.0, 5.0).unwrap(),
            UnivariateDist::normal(0.0, 1.0).unwrap(),
            UnivariateDist::uniform(0.0, 1.0).unwrap(),
            UnivariateDist::uniform(-2.0, 3.0).unwrap(),
        ]
    }

    #[test]
    fn spot_values() {
        let e60 = UnivariateDist::exponential(60.0).unwrap();
        let e1 = UnivariateDist::exponential(1.0).unwrap();
        assert_eq!(e60.cdf(0.0), 0.0);
        assert!((e1.cdf(2f64.ln()) - 0.5).abs() < 1e-15);
        assert!((UnivariateDist::normal(60.0, 5.0).unwrap().cdf(60.0) - 0.5).abs() < 1e-15);
        assert!((e1.quantile(0.5).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(UnivariateDist::standard_uniform().survival(0.25), 0.75);
        assert!((e60.pdf(0.0) - 1.0 / 60.0).abs() < 1e-18);
    }

    #[test]
    fn normal_cdf_reference_values() {
        let z = UnivariateDist::normal(0.0, 1.0).unwrap();
        // Φ(1), Φ(-3), Φ(2.5) to 16 digits
        assert!((z.cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((z.cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-17);
        assert!((z.cdf(2.5) - 0.993_790_334_674_223_8).abs() < 1e-15);
    }

    #[test]
    fn residual_survival_examples() {
        let e60 = UnivariateDist::exponential(60.0).unwrap();
        assert!((e60.residual_survival(10.0, 5.0).unwrap() - (-5.0f64 / 60.0).exp()).abs() < 1e-15);
        let u = UnivariateDist::standard_uniform();
        assert_eq!(u.residual_survival(0.3, 0.0).unwrap(), 1.0);
        assert!((u.residual_survival(0.5, 0.25).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(u.residual_survival(1.0, 0.1), Err(MddError::ConditioningEventNull));
    }

    #[test]
    fn quantile_endpoints() {
        let u = UnivariateDist::uniform(2.0, 5.0).unwrap();
        assert_eq!(u.quantile(0.0).unwrap(), 2.0);
        assert_eq!(u.quantile(1.0).unwrap(), 5.0);
        let e = UnivariateDist::exponential(1.0).unwrap();
        assert_eq!(e.quantile(0.0).unwrap(), 0.0);
        assert!(e.quantile(1.0).is_err());
        assert!(UnivariateDist::normal(0.0, 1.0).unwrap().quantile(0.0).is_err());
        assert!(e.quantile(1.5).is_err());
        assert!(e.quantile(-0.1).is_err());
    }

    #[test]
    fn round_trip_cdf_quantile() {
        // 1000 deterministic p values spread over (0.001, 0.999)
        for d in families() {
            for i in 0..1000 {
                let p = 0.001 + 0.998 * ((i as f64 * 0.618_033_988_749_894_9) % 1.0);
                let x = d.quantile(p).unwrap();
                assert!((d.cdf(x) - p).abs() < 1e-10, "{d} p={p}");
            }
        }
    }

    #[test]
    fn normal_quantile_deep_tails() {
        let z = UnivariateDist::normal(0.0, 1.0).unwrap();
        for p in [1e-300, 1e-12, 1e-6, 0.02, 0.5, 0.98] {
            let x = z.quantile(p).unwrap();
            assert!(((z.cdf(x) - p) / p).abs() < 1e-12, "p={p}");
        }
        let p = 1.0 - 1e-12;
        let x = z.quantile(p).unwrap();
        assert!(((z.survival(x) - (1.0 - p)) / (1.0 - p)).abs() < 1e-12);
    }

    #[test]
    fn memoryless_exponential_grid() {
        let e = UnivariateDist::exponential(3.0).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let t = i as f64 * 0.5;
                let x = j as f64 * 0.5;
                assert!((e.residual_survival(t, x).unwrap() - e.survival(x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pdf_matches_central_difference() {
        let h = 1e-5;
        for d in families() {
            for i in 1..=100 {
                let x = d.quantile(i as f64 / 101.0).unwrap();
                let fd = (d.cdf(x + h) - d.cdf(x - h)) / (2.0 * h);
                let pdf = d.pdf(x);
                assert!(((fd - pdf) / pdf).abs() < 1e-4, "{d} x={x}");
            }
        }
    }

    #[test]
    fn pdf_integrates_to_one() {
        for d in families() {
            let (lo, hi) = d.support();
            let r = integrate_range(|x| d.pdf(x), lo, hi, QuadOptions::default());
            assert!((r.value - 1.0).abs() < 1e-6, "{d}");
        }
    }

    #[test]
    fn survival_complements_cdf() {
        for d in families() {
            for i in 0..50 {
                let x = d.quantile_clamped(i as f64 / 49.0).clamp(-1e3, 1e3);
                assert!((d.survival(x) + d.cdf(x) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in ["exp:mean=60", "normal:mu=60,sd=5", "uniform:lo=0,hi=1"] {
            let d: UnivariateDist = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
        assert!("exp:mean=-1".parse::<UnivariateDist>().is_err());
        assert!("gamma:k=2".parse::<UnivariateDist>().is_err());
        assert!("uniform:lo=1,hi=0".parse::<UnivariateDist>().is_err());
    }

    #[test]
    fn residual_quantile_inverts() {
        let n = UnivariateDist::normal(60.0, 5.0).unwrap();
        let x = n.residual_quantile(58.0, 0.3).unwrap();
        assert!((n.residual_survival(58.0, x).unwrap() - 0.3).abs() < 1e-12);
        let e = UnivariateDist::exponential(2.0).unwrap();
        let x = e.residual_quantile(1.0, 0.3).unwrap();
        assert!((e.residual_survival(1.0, x).unwrap() - 0.3).abs() < 1e-15);
    }
}
