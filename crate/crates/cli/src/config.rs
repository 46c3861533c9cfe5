use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Check the distortion axioms of a construction or built-in function.
    Validate,
    /// Draw seeded Monte Carlo samples of a construction.
    Sample,
    /// Conditional median, quantiles and mean of the second coordinate given the first.
    Regress,
    /// Conditional median with quantile bands.
    Band,
    /// Joint density on a rectangular grid.
    Contour,
    /// Marginal densities of both coordinates.
    MarginalPdf,
    /// Orthant-order certificate between two constructions.
    Compare,
    /// Run the acceptance checks.
    Report,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        f.write_str(s.as_str().ok_or(fmt::Error)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderKind {
    Lower,
    Upper,
}

/// A central interval `(lo, hi)` of conditional quantile levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level(pub f64, pub f64);

/// Parse `0.25:0.75,0.05:0.95`.
pub fn parse_levels(s: &str) -> anyhow::Result<Vec<Level>> {
    s.split(',')
        .map(|pair| {
            let (lo, hi) = pair
                .split_once(':')
                .with_context(|| format!("level {pair:?} is not of the form lo:hi"))?;
            Ok(Level(lo.trim().parse()?, hi.trim().parse()?))
        })
        .collect()
}

/// Everything a command needs. Serialises to JSON for `--config` and for the
/// manifests written next to outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub copula: String,
    pub copula_is_survival: bool,
    pub marginals: Vec<String>,
    pub construction: String,
    /// Second construction for `compare`.
    pub against: Option<String>,
    /// Built-in function validated instead of the construction.
    pub distortion: Option<String>,
    /// Order for `compare`; upper for residual constructions, lower otherwise.
    pub order: Option<OrderKind>,
    pub seed: u64,
    pub samples: usize,
    /// Points per axis for regress, band, contour and marginal-pdf.
    pub points: usize,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub levels: Vec<Level>,
    /// Grid size for validate (default 21) and compare (default 50).
    pub grid: Option<usize>,
    pub boxes: usize,
    pub perturb: f64,
    pub list: bool,
    pub sequential: bool,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Report,
            copula: "indep:n=2".into(),
            copula_is_survival: false,
            marginals: vec!["exp:mean=60".into()],
            construction: "ordered-pair".into(),
            against: None,
            distortion: None,
            order: None,
            seed: 42,
            samples: 100_000,
            points: 101,
            x_min: None,
            x_max: None,
            levels: vec![Level(0.25, 0.75), Level(0.05, 0.95)],
            grid: None,
            boxes: 2000,
            perturb: 0.0,
            list: false,
            sequential: false,
            output: None,
        }
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_string_pretty(self).map_err(|_| fmt::Error)?;
        f.write_str(&s)
    }
}

impl FromStr for RunConfig {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Parser)]
#[command(name = "mdd", version, about = "Multivariate distorted distributions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

/// Command-line overrides; anything left unset comes from `--config` or the
/// defaults.
#[derive(Debug, Default, Args)]
pub struct Opts {
    /// JSON RunConfig to start from.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Copula, e.g. `clayton1`, `fgm:n=3,theta=0.5`, `indep:n=3`.
    #[arg(long, global = true)]
    pub copula: Option<String>,
    /// Treat `--copula` as the survival copula (residual constructions).
    #[arg(long, global = true)]
    pub copula_is_survival: bool,
    /// Baseline, e.g. `exp:mean=60` or `normal:mu=60,sd=5`; repeat for one per component.
    #[arg(long, global = true)]
    pub marginal: Vec<String>,
    /// `copula`, `ordered-pair`, `order-stats-3`, `residual:t=..,cond=..` or `coherent:cuts=..;cuts_star=..`.
    #[arg(long, global = true)]
    pub construction: Option<String>,
    /// Second construction for `compare`.
    #[arg(long, global = true)]
    pub against: Option<String>,
    /// Built-in function for `validate`: `mean-aggregation`, `product` or `min`, optionally `:n=3`.
    #[arg(long, global = true)]
    pub distortion: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub order: Option<OrderKind>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo sample size.
    #[arg(long, short = 'n', global = true)]
    pub samples: Option<usize>,
    /// Points per axis.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    /// Band levels, e.g. `0.25:0.75,0.05:0.95`.
    #[arg(long, global = true)]
    pub levels: Option<String>,
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Random boxes checked by `validate`.
    #[arg(long, global = true)]
    pub boxes: Option<usize>,
    /// Constant added to every distortion under test.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub perturb: Option<f64>,
    /// List the checks of `report` without running them.
    #[arg(long, global = true)]
    pub list: bool,
    /// Run sweeps on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    /// Output path; stdout when absent.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
    /// Print the resolved RunConfig as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
}

impl Cli {
    /// Resolve the configuration: defaults, then `--config`, then flags.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let o = &self.opts;
        let mut c = match &o.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                text.parse::<RunConfig>()
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        c.command = self.command;
        if let Some(v) = &o.copula {
            c.copula = v.clone();
        }
        if o.copula_is_survival {
            c.copula_is_survival = true;
        }
        if !o.marginal.is_empty() {
            c.marginals = o.marginal.clone();
        }
        if let Some(v) = &o.construction {
            c.construction = v.clone();
        }
        if o.against.is_some() {
            c.against = o.against.clone();
        }
        if o.distortion.is_some() {
            c.distortion = o.distortion.clone();
        }
        if o.order.is_some() {
            c.order = o.order;
        }
        if let Some(v) = o.seed {
            c.seed = v;
        }
        if let Some(v) = o.samples {
            c.samples = v;
        }
        if let Some(v) = o.points {
            c.points = v;
        }
        if o.x_min.is_some() {
            c.x_min = o.x_min;
        }
        if o.x_max.is_some() {
            c.x_max = o.x_max;
        }
        if let Some(v) = &o.levels {
            c.levels = parse_levels(v)?;
        }
        if o.grid.is_some() {
            c.grid = o.grid;
        }
        if let Some(v) = o.boxes {
            c.boxes = v;
        }
        if let Some(v) = o.perturb {
            c.perturb = v;
        }
        if o.list {
            c.list = true;
        }
        if o.sequential {
            c.sequential = true;
        }
        if o.output.is_some() {
            c.output = o.output.clone();
        }
        if c.marginals.is_empty() {
            bail!("at least one marginal is required");
        }
        if !c.perturb.is_finite() {
            bail!("perturb must be finite");
        }
        Ok(c)
    }
}
