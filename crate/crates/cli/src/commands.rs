use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use mdd_core::checks::{self, CheckConfig};
use mdd_core::constructions::{Built, ConstructionSpec, StructureFunction};
use mdd_core::distortion::{compare_lower_orthant, compare_upper_orthant, validate, Builtin};
use mdd_core::oracle::{
    sample_copula_points, sample_mdd_pairs, sample_order_statistics, sample_residual, sample_system_pair,
};
use mdd_core::regression::{quantile_band, regression_table};
use mdd_core::{Copula, Distortion, Execution, MddModel, UnivariateDist};
use serde::Serialize;

use crate::config::{Command, OrderKind, RunConfig};

/// Whether a command's criterion held. Errors are reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

pub fn run(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    match cfg.command {
        Command::Validate => cmd_validate(cfg),
        Command::Sample => cmd_sample(cfg),
        Command::Regress => cmd_regress(cfg),
        Command::Band => cmd_band(cfg),
        Command::Contour => cmd_contour(cfg),
        Command::MarginalPdf => cmd_marginal_pdf(cfg),
        Command::Compare => cmd_compare(cfg),
        Command::Report => cmd_report(cfg),
    }
}

fn exec(cfg: &RunConfig) -> Execution {
    if cfg.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn copula(cfg: &RunConfig) -> anyhow::Result<Copula> {
    Ok(cfg.copula.parse()?)
}

fn marginals(cfg: &RunConfig) -> anyhow::Result<Vec<UnivariateDist>> {
    cfg.marginals.iter().map(|s| Ok(s.parse()?)).collect()
}

fn construction(s: &str) -> anyhow::Result<ConstructionSpec> {
    Ok(s.parse()?)
}

/// The single baseline shared by every component.
fn common_marginal(cfg: &RunConfig) -> anyhow::Result<UnivariateDist> {
    let m = marginals(cfg)?;
    if m.iter().any(|g| *g != m[0]) {
        bail!(
            "construction {} needs identically distributed components: give one --marginal",
            cfg.construction
        );
    }
    Ok(m[0])
}

fn build(cfg: &RunConfig, spec: &ConstructionSpec) -> anyhow::Result<Built> {
    Ok(spec.build(copula(cfg)?, cfg.copula_is_survival, &marginals(cfg)?)?)
}

/// The model `D(G_1(x_1), …)` of a construction with a primal distortion.
fn model(cfg: &RunConfig) -> anyhow::Result<(MddModel, ConstructionSpec)> {
    let spec = construction(&cfg.construction)?;
    let d = match build(cfg, &spec)? {
        Built::Primal(d) => d,
        Built::Dual(_) => bail!(
            "{} is a residual construction with a dual distortion; regress, band, contour and marginal-pdf need a primal model",
            cfg.construction
        ),
    };
    let m = match spec {
        ConstructionSpec::Copula => {
            let g = marginals(cfg)?;
            match g.len() {
                1 => MddModel::common(d, g[0]),
                _ => MddModel::new(d, g)?,
            }
        }
        _ => MddModel::common(d, common_marginal(cfg)?),
    };
    Ok((m, spec))
}

fn bivariate(m: &MddModel) -> anyhow::Result<()> {
    if m.dim() != 2 {
        bail!("this command needs a bivariate model, got dimension {}", m.dim());
    }
    Ok(())
}

fn axis(cfg: &RunConfig, g: &UnivariateDist) -> anyhow::Result<Vec<f64>> {
    let lo = match cfg.x_min {
        Some(v) => v,
        None => g.quantile(0.005)?,
    };
    let hi = match cfg.x_max {
        Some(v) => v,
        None => g.quantile(0.995)?,
    };
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        bail!("need finite x-min <= x-max, got {lo} and {hi}");
    }
    Ok(match cfg.points {
        0 => bail!("points must be >= 1"),
        1 => vec![lo],
        n => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    })
}

/// Rows of numbers with a header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// CSV with every value at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                write!(s, "{v:.16e}").expect("writing to a String");
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: Command,
    seed: u64,
    model: String,
    rows: usize,
    columns: &'a [String],
    config: &'a RunConfig,
}

fn write_out(cfg: &RunConfig, text: &str) -> anyhow::Result<()> {
    match &cfg.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn manifest_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Write the table and, next to a file output, a JSON manifest recording
/// the configuration and seed.
fn emit_table(cfg: &RunConfig, model: String, table: &Table) -> anyhow::Result<()> {
    write_out(cfg, &table.to_csv())?;
    if let Some(path) = &cfg.output {
        let manifest = Manifest {
            command: cfg.command,
            seed: cfg.seed,
            model,
            rows: table.rows.len(),
            columns: &table.header,
            config: cfg,
        };
        let p = manifest_path(path);
        std::fs::write(&p, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn emit_json<T: Serialize>(cfg: &RunConfig, value: &T) -> anyhow::Result<()> {
    write_out(cfg, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn perturbed(cfg: &RunConfig, d: Distortion) -> Distortion {
    if cfg.perturb == 0.0 {
        d
    } else {
        d.shifted(cfg.perturb)
    }
}

#[derive(Serialize)]
struct ValidateOutput {
    distortion: String,
    seed: u64,
    perturb: f64,
    report: mdd_core::ValidationReport,
}

pub fn cmd_validate(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let d = match &cfg.distortion {
        Some(s) => Builtin::parse(s)?.distortion(),
        None => {
            let spec = construction(&cfg.construction)?;
            build(cfg, &spec)?.surface().clone()
        }
    };
    let d = perturbed(cfg, d);
    let report = validate(&d, cfg.grid.unwrap_or(21), cfg.boxes, cfg.seed, exec(cfg))?;
    let pass = report.pass;
    if !pass {
        eprintln!(
            "validation failed for {}: groundedness violation {} at {:?}, corner {}, worst box volume {}",
            d.name(),
            report.grounded_max_violation,
            report.grounded_worst_point,
            report.corner_value,
            report.worst_box_volume
        );
    }
    emit_json(
        cfg,
        &ValidateOutput {
            distortion: d.name(),
            seed: cfg.seed,
            perturb: cfg.perturb,
            report,
        },
    )?;
    Ok(Outcome::from_pass(pass))
}

fn rows<const N: usize>(pts: Vec<[f64; N]>) -> Vec<Vec<f64>> {
    pts.into_iter().map(|p| p.to_vec()).collect()
}

pub fn cmd_sample(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let spec = construction(&cfg.construction)?;
    let c = copula(cfg)?;
    let (n, seed, ex) = (cfg.samples, cfg.seed, exec(cfg));
    let numbered = |p: &str, k: usize| (1..=k).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let table = match &spec {
        ConstructionSpec::Copula => {
            if cfg.copula_is_survival {
                bail!("--copula-is-survival only applies to residual constructions");
            }
            let mut t = Table::new(numbered("u", c.dim()));
            t.rows = sample_copula_points(&c, n, seed, ex)?;
            t
        }
        ConstructionSpec::OrderedPair => {
            let mut t = Table::new(["x", "y"]);
            t.rows = rows(sample_mdd_pairs(&c, &common_marginal(cfg)?, n, seed, ex)?.ordered);
            t
        }
        ConstructionSpec::OrderStats3 => {
            let mut t = Table::new(numbered("x", c.dim()));
            t.rows = sample_order_statistics(&c, &common_marginal(cfg)?, n, seed, ex)?;
            t
        }
        ConstructionSpec::Residual { .. } => {
            let rs = spec.residual_spec(c, cfg.copula_is_survival, &marginals(cfg)?)?;
            let comps = rs.residual_components()?;
            let mut t = Table::new(comps.iter().map(|i| format!("x{}", i + 1)));
            t.rows = sample_residual(&rs, n, seed, ex)?;
            t
        }
        ConstructionSpec::Coherent { cuts, cuts_star } => {
            let psi = StructureFunction::new(c.dim(), cuts.clone())?;
            let psi_star = StructureFunction::new(c.dim(), cuts_star.clone())?;
            let mut t = Table::new(["t", "t_star"]);
            t.rows = rows(sample_system_pair(
                &psi,
                &psi_star,
                &c,
                &common_marginal(cfg)?,
                n,
                seed,
                ex,
            )?);
            t
        }
    };
    emit_table(cfg, format!("{spec} on {c}"), &table)?;
    Ok(Outcome::Pass)
}

pub fn cmd_regress(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (m, spec) = model(cfg)?;
    bivariate(&m)?;
    let xs = axis(cfg, &m.baselines()[0])?;
    let mut t = Table::new(["x", "median", "q05", "q25", "q75", "q95", "mean"]);
    for r in regression_table(&m, &xs, exec(cfg))? {
        t.rows.push(vec![r.x, r.median, r.q05, r.q25, r.q75, r.q95, r.mean]);
    }
    emit_table(cfg, format!("{spec} on {}", cfg.copula), &t)?;
    Ok(Outcome::Pass)
}

pub fn cmd_band(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (m, spec) = model(cfg)?;
    bivariate(&m)?;
    let xs = axis(cfg, &m.baselines()[0])?;
    let levels: Vec<(f64, f64)> = cfg.levels.iter().map(|l| (l.0, l.1)).collect();
    let band = quantile_band(&m, &xs, &levels, exec(cfg))?;
    let mut header = vec!["x".to_string(), "median".to_string()];
    for (lo, hi) in &levels {
        header.push(format!("q{lo}"));
        header.push(format!("q{hi}"));
    }
    let mut t = Table::new(header);
    for (i, x) in band.xs.iter().enumerate() {
        let mut row = vec![*x, band.median[i]];
        for k in 0..levels.len() {
            row.push(band.lower[k][i]);
            row.push(band.upper[k][i]);
        }
        t.rows.push(row);
    }
    emit_table(cfg, format!("{spec} on {}", cfg.copula), &t)?;
    Ok(Outcome::Pass)
}

pub fn cmd_contour(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (m, spec) = model(cfg)?;
    bivariate(&m)?;
    let xs = axis(cfg, &m.baselines()[0])?;
    let ys = axis(cfg, &m.baselines()[1])?;
    let mut t = Table::new(["x", "y", "joint_pdf"]);
    for x in &xs {
        for y in &ys {
            t.rows.push(vec![*x, *y, m.joint_pdf(&[*x, *y])?]);
        }
    }
    emit_table(cfg, format!("{spec} on {}", cfg.copula), &t)?;
    Ok(Outcome::Pass)
}

pub fn cmd_marginal_pdf(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let (m, spec) = model(cfg)?;
    let header: Vec<String> = match (&spec, m.dim()) {
        (ConstructionSpec::OrderedPair, _) => vec!["x".into(), "pdf_L".into(), "pdf_U".into()],
        (_, n) => std::iter::once("x".to_string())
            .chain((1..=n).map(|i| format!("pdf_{i}")))
            .collect(),
    };
    let xs = axis(cfg, &m.baselines()[0])?;
    let mut t = Table::new(header);
    for x in xs {
        let mut row = vec![x];
        for i in 0..m.dim() {
            row.push(m.marginal_pdf(i, x)?);
        }
        t.rows.push(row);
    }
    emit_table(cfg, format!("{spec} on {}", cfg.copula), &t)?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct CompareOutput {
    x: String,
    y: String,
    report: mdd_core::OrderReport,
}

pub fn cmd_compare(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let Some(against) = &cfg.against else {
        bail!("compare needs --against <construction>");
    };
    let (sx, sy) = (construction(&cfg.construction)?, construction(against)?);
    let (bx, by) = (build(cfg, &sx)?, build(cfg, &sy)?);
    let grid = cfg.grid.unwrap_or(50);
    let default_order = if bx.is_dual() || by.is_dual() {
        OrderKind::Upper
    } else {
        OrderKind::Lower
    };
    let report = match cfg.order.unwrap_or(default_order) {
        OrderKind::Upper => compare_upper_orthant(&bx.dual(), &by.dual(), grid)?,
        OrderKind::Lower => compare_lower_orthant(&bx.primal(), &by.primal(), grid)?,
    };
    emit_json(
        cfg,
        &CompareOutput {
            x: sx.to_string(),
            y: sy.to_string(),
            report,
        },
    )?;
    Ok(Outcome::Pass)
}

pub fn cmd_report(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    if cfg.list {
        let mut s = String::new();
        for c in checks::list() {
            writeln!(s, "{}\t{}\t{}", c.id, c.name, c.description)?;
        }
        write_out(cfg, &s)?;
        return Ok(Outcome::Pass);
    }
    let cc = CheckConfig {
        seed: cfg.seed,
        n_samples: cfg.samples,
        perturb: cfg.perturb,
        exec: exec(cfg),
    };
    let mut outcomes = Vec::new();
    for c in checks::list() {
        let o = checks::run(c.id, &cc)?;
        eprintln!("{}", o.line());
        outcomes.push(o);
    }
    let summary = checks::Summary {
        config: cc,
        pass: outcomes.iter().all(|o| o.pass),
        outcomes,
    };
    emit_json(cfg, &summary)?;
    Ok(Outcome::from_pass(summary.pass))
}
