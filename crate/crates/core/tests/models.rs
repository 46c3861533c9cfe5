use std::f64::consts::PI;

use mdd_core::constructions::{ordered_pair_distortion, ConstructionSpec};
use mdd_core::quadrature::{integrate_range, QuadOptions};
use mdd_core::{Copula, MddModel, UnivariateDist};
use proptest::prelude::*;

fn clayton_normal() -> MddModel {
    MddModel::common(
        ordered_pair_distortion(Copula::Clayton1).unwrap(),
        UnivariateDist::normal(60.0, 5.0).unwrap(),
    )
}

#[test]
fn ordered_pair_density_vanishes_below_diagonal() {
    let m = clayton_normal();
    assert_eq!(m.joint_pdf(&[62.0, 58.0]).unwrap(), 0.0);
    assert!(m.joint_pdf(&[58.0, 62.0]).unwrap() > 0.0);
}

#[test]
fn clayton_normal_density_at_centre() {
    let f = 1.0 / (5.0 * (2.0 * PI).sqrt());
    let expect = 2.0 * f * f * 32.0 / 27.0;
    let got = clayton_normal().joint_pdf(&[60.0, 60.0]).unwrap();
    assert!((got - expect).abs() < 1e-14, "{got} vs {expect}");
}

#[test]
fn contour_grid_integrates_to_one() {
    let m = clayton_normal();
    // cell midpoints; cells cut by the diagonal keep half their area
    let (lo, hi, n) = (35.0, 85.0, 200);
    let h = (hi - lo) / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = lo + h * (i as f64 + 0.5);
            let y = lo + h * (j as f64 + 0.5);
            let w = if i == j { 0.5 } else { 1.0 };
            total += w * m.joint_pdf(&[x, y]).unwrap() * h * h;
        }
    }
    assert!((total - 1.0).abs() < 0.01, "{total}");
}

#[test]
fn coherent_pair_has_no_joint_density() {
    let spec: ConstructionSpec = "coherent:cuts=[[1],[2],[3]];cuts_star=[[1,2,3]]".parse().unwrap();
    let d = spec
        .build(
            Copula::independence(3).unwrap(),
            false,
            &[UnivariateDist::standard_uniform()],
        )
        .unwrap()
        .primal();
    let m = MddModel::common(d, UnivariateDist::exponential(1.0).unwrap());
    assert!(m.joint_pdf(&[0.5, 1.0]).is_err());
}

#[test]
fn iid_marginal_densities() {
    let g = UnivariateDist::exponential(60.0).unwrap();
    let m = MddModel::common(ordered_pair_distortion(Copula::independence(2).unwrap()).unwrap(), g);
    for x in [0.0, 10.0, 45.0, 120.0, 300.0] {
        let (f, s) = (g.pdf(x), g.survival(x));
        assert!((m.marginal_pdf(0, x).unwrap() - 2.0 * f * s).abs() < 1e-15);
        assert!((m.marginal_pdf(1, x).unwrap() - 2.0 * f * (1.0 - s)).abs() < 1e-15);
    }
}

#[test]
fn clayton_upper_marginal_derivative() {
    let g = UnivariateDist::exponential(60.0).unwrap();
    let m = MddModel::common(ordered_pair_distortion(Copula::Clayton1).unwrap(), g);
    let d2 = ordered_pair_distortion(Copula::Clayton1)
        .unwrap()
        .univariate(1)
        .unwrap();
    for x in [1.0, 20.0, 60.0, 150.0] {
        let u = g.cdf(x);
        let analytic = 2.0 / (2.0 - u).powi(2);
        assert!((m.marginal_pdf(1, x).unwrap() - g.pdf(x) * analytic).abs() < 1e-12);
        let h = 1e-6;
        let fd = (d2.eval(&[u + h]).unwrap() - d2.eval(&[u - h]).unwrap()) / (2.0 * h);
        assert!((fd - analytic).abs() < 1e-6, "{fd} vs {analytic}");
    }
}

#[test]
fn marginal_densities_integrate_to_one() {
    for c in [
        Copula::independence(2).unwrap(),
        Copula::Clayton1,
        Copula::fgm(2, -0.7).unwrap(),
    ] {
        for g in [
            UnivariateDist::exponential(60.0).unwrap(),
            UnivariateDist::normal(60.0, 5.0).unwrap(),
        ] {
            let m = MddModel::common(ordered_pair_distortion(c).unwrap(), g);
            let (a, b) = g.support();
            for i in 0..2 {
                let mass = integrate_range(|x| m.marginal_pdf(i, x).unwrap(), a, b, QuadOptions::default()).value;
                assert!((mass - 1.0).abs() < 1e-4, "{c} {g} coordinate {i}: {mass}");
            }
        }
    }
}

fn arb_copula() -> impl Strategy<Value = Copula> {
    prop_oneof![
        (2usize..5).prop_map(|n| Copula::independence(n).unwrap()),
        (2usize..4, -1.0f64..=1.0).prop_map(|(n, t)| Copula::fgm(n, t).unwrap()),
        Just(Copula::Clayton1),
        (2usize..5).prop_map(|n| Copula::comonotone(n).unwrap()),
    ]
}

fn arb_dist() -> impl Strategy<Value = UnivariateDist> {
    prop_oneof![
        (1e-3f64..1e3).prop_map(|m| UnivariateDist::exponential(m).unwrap()),
        (-1e3f64..1e3, 1e-3f64..1e2).prop_map(|(m, s)| UnivariateDist::normal(m, s).unwrap()),
        (-1e3f64..1e3, 1e-3f64..1e3).prop_map(|(a, w)| UnivariateDist::uniform(a, a + w).unwrap()),
    ]
}

proptest! {
    #[test]
    fn copula_spec_round_trips(c in arb_copula()) {
        let s = c.to_string();
        let back: Copula = s.parse().unwrap();
        prop_assert_eq!(back, c);
        prop_assert_eq!(back.to_string(), s);
    }

    #[test]
    fn marginal_spec_round_trips(g in arb_dist()) {
        let s = g.to_string();
        let back: UnivariateDist = s.parse().unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn residual_spec_round_trips(t in 0.0f64..100.0, which in 0usize..4, k in 1usize..4) {
        let cond = match which {
            0 => "all".to_string(),
            1 => "last".to_string(),
            2 => format!("failed:{k}"),
            _ => format!("subset:1+{}", k + 1),
        };
        let s = format!("residual:t={t},cond={cond}");
        let spec: ConstructionSpec = s.parse().unwrap();
        prop_assert_eq!(spec.to_string(), s);
    }

    #[test]
    fn theta_outside_unit_interval_is_rejected(t in 1.0f64..1e6) {
        let e = format!("fgm:n=2,theta={}", t + f64::EPSILON * 4.0).parse::<Copula>().unwrap_err();
        prop_assert!(e.to_string().contains("theta out of [-1,1]"));
    }
}
