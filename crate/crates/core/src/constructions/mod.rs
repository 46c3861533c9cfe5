//! Distortions built from a copula: residual lifetimes, ordered pairs, order
//! statistics and pairs of coherent systems.
//!
//! Construction spec strings (component indices one-based):
//!
//! - `copula`: the copula itself
//! - `ordered-pair`
//! - `order-stats-3`
//! - `residual:t=1,cond=all[,keep=1+2]`, `cond=failed:3`, `cond=last`,
//!   `cond=subset:1+2`
//! - `coherent:cuts=[[1],[2],[3]];cuts_star=[[1,2,3]]`

pub mod coherent;
pub mod order_stats;
pub mod ordered_pair;
pub mod residual;

use std::fmt;
use std::str::FromStr;

pub use coherent::{
    coherent_pair, coherent_pair_distortion, coherent_pair_survival_example, StructureFunction, StructureJson,
};
pub use order_stats::{order_stats_density, order_stats_distortion, order_stats_distortion_3};
pub use ordered_pair::{ordered_pair_density, ordered_pair_distortion};
pub use residual::{
    residual_dual, residual_dual_distortion, residual_dual_last_failed, residual_dual_subset_alive,
    residual_joint_survival, Conditioning, ResidualSpec,
};

use crate::copulas::{Copula, SurvivalCopula};
use crate::distortion::{copula_distortion, Distortion, DualDistortion};
use crate::error::{MddError, Result};
use crate::marginals::UnivariateDist;

/// A parsed construction spec string.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstructionSpec {
    Copula,
    OrderedPair,
    OrderStats3,
    Residual {
        t: f64,
        /// `None` for `cond=last`: the last component of the copula.
        conditioning: ResidualCond,
        keep: Option<Vec<usize>>,
    },
    Coherent {
        cuts: Vec<Vec<usize>>,
        cuts_star: Vec<Vec<usize>>,
    },
}

/// Residual conditioning as written in a spec string (one-based indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResidualCond {
    All,
    Failed(usize),
    Last,
    Subset(Vec<usize>),
}

/// The object a construction produces: a distortion, or a dual distortion
/// for the residual constructions.
#[derive(Debug, Clone)]
pub enum Built {
    Primal(Distortion),
    Dual(DualDistortion),
}

impl Built {
    /// The function the construction defines directly (`D` or `D̂`).
    pub fn surface(&self) -> &Distortion {
        match self {
            Built::Primal(d) => d,
            Built::Dual(d) => d.as_distortion(),
        }
    }

    pub fn primal(&self) -> Distortion {
        match self {
            Built::Primal(d) => d.clone(),
            Built::Dual(d) => d.primal(),
        }
    }

    pub fn dual(&self) -> DualDistortion {
        match self {
            Built::Primal(d) => d.dual(),
            Built::Dual(d) => d.clone(),
        }
    }

    pub fn is_dual(&self) -> bool {
        matches!(self, Built::Dual(_))
    }
}

fn parse_index_list(s: &str, input: &str) -> Result<Vec<usize>> {
    s.split('+')
        .map(|x| {
            let k: usize = x
                .trim()
                .parse()
                .map_err(|e| MddError::parse("construction", input, format!("index {x:?}: {e}")))?;
            if k == 0 {
                return Err(MddError::parse("construction", input, "component indices start at 1"));
            }
            Ok(k - 1)
        })
        .collect()
}

fn format_index_list(v: &[usize]) -> String {
    v.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join("+")
}

fn parse_cuts(s: &str, input: &str) -> Result<Vec<Vec<usize>>> {
    let one: Vec<Vec<usize>> =
        serde_json::from_str(s).map_err(|e| MddError::parse("construction", input, format!("cut sets {s:?}: {e}")))?;
    one.into_iter()
        .map(|c| {
            c.into_iter()
                .map(|k| {
                    k.checked_sub(1)
                        .ok_or_else(|| MddError::parse("construction", input, "component indices start at 1"))
                })
                .collect()
        })
        .collect()
}

fn format_cuts(c: &[Vec<usize>]) -> String {
    let one: Vec<Vec<usize>> = c.iter().map(|c| c.iter().map(|k| k + 1).collect()).collect();
    serde_json::to_string(&one).expect("plain integers")
}

impl FromStr for ConstructionSpec {
    type Err = MddError;

    fn from_str(input: &str) -> Result<Self> {
        let s = input.trim();
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let err = |reason: String| MddError::parse("construction", input, reason);
        match name.trim() {
            "copula" if rest.is_empty() => Ok(ConstructionSpec::Copula),
            "ordered-pair" if rest.is_empty() => Ok(ConstructionSpec::OrderedPair),
            "order-stats-3" if rest.is_empty() => Ok(ConstructionSpec::OrderStats3),
            "residual" => {
                let mut t = None;
                let mut cond = ResidualCond::All;
                let mut keep = None;
                for item in rest.split(',').filter(|x| !x.trim().is_empty()) {
                    let (k, v) = item
                        .split_once('=')
                        .ok_or_else(|| err(format!("expected key=value, got {item:?}")))?;
                    match k.trim() {
                        "t" => t = Some(v.trim().parse::<f64>().map_err(|e| err(format!("t: {e}")))?),
                        "cond" => {
                            let v = v.trim();
                            cond = match v.split_once(':') {
                                None if v == "all" => ResidualCond::All,
                                None if v == "last" => ResidualCond::Last,
                                Some(("failed", j)) => {
                                    let idx = parse_index_list(j, input)?;
                                    if idx.len() != 1 {
                                        return Err(err("cond=failed takes one component".into()));
                                    }
                                    ResidualCond::Failed(idx[0])
                                }
                                Some(("subset", list)) => ResidualCond::Subset(parse_index_list(list, input)?),
                                _ => return Err(err(format!("unknown conditioning {v:?}"))),
                            };
                        }
                        "keep" => keep = Some(parse_index_list(v, input)?),
                        other => return Err(err(format!("unknown key {other:?}"))),
                    }
                }
                let t = t.ok_or_else(|| err("missing t".into()))?;
                if matches!(cond, ResidualCond::Subset(_)) && keep.is_some() {
                    return Err(err("keep cannot be combined with cond=subset".into()));
                }
                Ok(ConstructionSpec::Residual {
                    t,
                    conditioning: cond,
                    keep,
                })
            }
            "coherent" => {
                let mut cuts = None;
                let mut cuts_star = None;
                for item in rest.split(';').filter(|x| !x.trim().is_empty()) {
                    let (k, v) = item
                        .split_once('=')
                        .ok_or_else(|| err(format!("expected key=value, got {item:?}")))?;
                    match k.trim() {
                        "cuts" => cuts = Some(parse_cuts(v.trim(), input)?),
                        "cuts_star" => cuts_star = Some(parse_cuts(v.trim(), input)?),
                        other => return Err(err(format!("unknown key {other:?}"))),
                    }
                }
                Ok(ConstructionSpec::Coherent {
                    cuts: cuts.ok_or_else(|| err("missing cuts".into()))?,
                    cuts_star: cuts_star.ok_or_else(|| err("missing cuts_star".into()))?,
                })
            }
            other => Err(err(format!("unknown construction {other:?}"))),
        }
    }
}

impl fmt::Display for ConstructionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstructionSpec::Copula => write!(f, "copula"),
            ConstructionSpec::OrderedPair => write!(f, "ordered-pair"),
            ConstructionSpec::OrderStats3 => write!(f, "order-stats-3"),
            ConstructionSpec::Residual { t, conditioning, keep } => {
                let cond = match conditioning {
                    ResidualCond::All => "all".to_string(),
                    ResidualCond::Last => "last".to_string(),
                    ResidualCond::Failed(j) => format!("failed:{}", j + 1),
                    ResidualCond::Subset(k) => format!("subset:{}", format_index_list(k)),
                };
                write!(f, "residual:t={t},cond={cond}")?;
                if let Some(k) = keep {
                    write!(f, ",keep={}", format_index_list(k))?;
                }
                Ok(())
            }
            ConstructionSpec::Coherent { cuts, cuts_star } => {
                write!(
                    f,
                    "coherent:cuts={};cuts_star={}",
                    format_cuts(cuts),
                    format_cuts(cuts_star)
                )
            }
        }
    }
}

impl ConstructionSpec {
    /// Build the construction on `copula`. For residual constructions
    /// `copula` is the distributional copula unless `copula_is_survival`, and
    /// `marginals` holds one law per component (or one shared law).
    pub fn build(&self, copula: Copula, copula_is_survival: bool, marginals: &[UnivariateDist]) -> Result<Built> {
        if copula_is_survival && !matches!(self, ConstructionSpec::Residual { .. }) {
            return Err(MddError::Unsupported(
                "a survival copula can only be supplied to residual constructions".into(),
            ));
        }
        match self {
            ConstructionSpec::Copula => Ok(Built::Primal(copula_distortion(copula))),
            ConstructionSpec::OrderedPair => Ok(Built::Primal(ordered_pair_distortion(copula)?)),
            ConstructionSpec::OrderStats3 => Ok(Built::Primal(order_stats_distortion(copula)?)),
            ConstructionSpec::Coherent { cuts, cuts_star } => {
                let n = copula.dim();
                let psi = StructureFunction::new(n, cuts.clone())?;
                let psi_star = StructureFunction::new(n, cuts_star.clone())?;
                Ok(Built::Primal(coherent_pair(&psi, &psi_star, copula)?))
            }
            ConstructionSpec::Residual { .. } => {
                let spec = self.residual_spec(copula, copula_is_survival, marginals)?;
                Ok(Built::Dual(residual_dual(&spec)?))
            }
        }
    }

    /// The [`ResidualSpec`] of a residual construction.
    pub fn residual_spec(
        &self,
        copula: Copula,
        copula_is_survival: bool,
        marginals: &[UnivariateDist],
    ) -> Result<ResidualSpec> {
        let ConstructionSpec::Residual { t, conditioning, keep } = self else {
            return Err(MddError::Unsupported(format!("{self} is not a residual construction")));
        };
        let n = copula.dim();
        let marginals = match marginals.len() {
            1 => vec![marginals[0]; n],
            m if m == n => marginals.to_vec(),
            m => return Err(MddError::DimensionMismatch { expected: n, got: m }),
        };
        let chat = if copula_is_survival {
            SurvivalCopula::direct(copula)
        } else {
            copula.survival_copula()
        };
        let conditioning = match conditioning {
            ResidualCond::All => Conditioning::AllAlive,
            ResidualCond::Last => Conditioning::LastFailedByT(n - 1),
            ResidualCond::Failed(j) => Conditioning::LastFailedByT(*j),
            ResidualCond::Subset(k) => Conditioning::SubsetAlive(k.clone()),
        };
        Ok(ResidualSpec {
            survival_copula: chat,
            marginals,
            t: *t,
            conditioning,
            components: keep.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_strings_round_trip() {
        for s in [
            "copula",
            "ordered-pair",
            "order-stats-3",
            "residual:t=1,cond=all",
            "residual:t=0.5,cond=all,keep=1+2",
            "residual:t=2,cond=failed:3",
            "residual:t=2,cond=last",
            "residual:t=1,cond=subset:1+2",
            "coherent:cuts=[[1],[2],[3]];cuts_star=[[1,2,3]]",
        ] {
            let parsed: ConstructionSpec = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
        for bad in [
            "residual:cond=all",
            "residual:t=1,cond=maybe",
            "residual:t=1,cond=subset:1,keep=2",
            "residual:t=1,keep=0",
            "coherent:cuts=[[1]]",
            "coherent:cuts=[[0]];cuts_star=[[1]]",
            "ordered-pair:x=1",
            "triangle",
        ] {
            assert!(bad.parse::<ConstructionSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn build_dispatch() {
        let e = UnivariateDist::exponential(1.0).unwrap();
        let c3 = Copula::fgm(3, -0.5).unwrap();
        let built = "residual:t=1,cond=last"
            .parse::<ConstructionSpec>()
            .unwrap()
            .build(c3, false, &[e])
            .unwrap();
        assert!(built.is_dual());
        assert_eq!(built.surface().dim(), 2);
        let built = "coherent:cuts=[[1],[2],[3]];cuts_star=[[1,2,3]]"
            .parse::<ConstructionSpec>()
            .unwrap()
            .build(c3, false, &[e])
            .unwrap();
        assert!(!built.is_dual());
        assert!("ordered-pair"
            .parse::<ConstructionSpec>()
            .unwrap()
            .build(c3, false, &[e])
            .is_err());
        assert!("ordered-pair"
            .parse::<ConstructionSpec>()
            .unwrap()
            .build(Copula::Clayton1, true, &[e])
            .is_err());
    }
}
