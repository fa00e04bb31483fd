//! Command-line front end.
//!
//! Precedence, lowest first: built-in defaults, the `--config` file, flags.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::carnot::constants::estimate_volume_constant;
use crate::carnot::{CarnotGroup, GaugeBall, Point};
use crate::error::{LabError, Result};
use crate::lab::inequality::ball_sample_points;
use crate::lab::{
    campanato_norm, counterexample_report, leibniz_sweep, leibniz_test, morrey_norm, parse_eps_range, poincare_sweep,
    poincare_test, representation_check, sobolev_sublaplacian_test, sobolev_test, LeibnizScales, Normalization,
};
use crate::weights::{validate_exponents, weight_condition_sup, DEFAULT_T_GRID};
use config::{
    CounterexampleConfig, ExperimentConfig, InequalityConfig, LeibnizConfig, MorreyConfig, RepformulaConfig,
    WeightsConfig,
};
use output::{Artifact, Table};

pub const SCHEMA_VERSION: u32 = 1;
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Parser)]
#[command(name = "carnot-lab", version, about = "Weighted multilinear Poincaré and Sobolev experiments on Carnot groups")]
pub struct Cli {
    /// TOML experiment config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo samples per integral (grid points per axis for grid schemes).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Directory for reports; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dimensions, layers and constants of a group.
    GroupInfo { group: Option<String> },
    /// Smoothed-ramp counterexample table.
    Counterexample(CounterexampleArgs),
    /// Weighted multilinear Poincaré ratio on a ball, or a randomized sweep.
    Poincare(InequalityArgs),
    /// Global higher-order Sobolev ratio.
    Sobolev(InequalityArgs),
    /// Second-order Sobolev ratio with the sub-Laplacian.
    SobolevSublaplacian(InequalityArgs),
    /// Sampled weight-condition supremum and divergence verdict.
    WeightsCheck(ExponentArgs),
    /// Pointwise representation bound at sample points.
    Repformula(RepformulaArgs),
    /// Weighted Morrey norm over sampled balls.
    Morrey(MorreyArgs),
    /// Weighted Campanato norm over sampled balls.
    Campanato(MorreyArgs),
    /// Leibniz rule between Campanato and Morrey norms.
    Leibniz(LeibnizArgs),
    /// Monte Carlo estimate of the unit-ball volume constant.
    VolumeConstants { group: Option<String> },
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// `2^-2..2^-8` or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExponentArgs {
    #[arg(long)]
    pub group: Option<String>,
    /// Comma-separated `p_1,…,p_m`.
    #[arg(long, value_delimiter = ',')]
    pub p_list: Option<Vec<f64>>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub k: Option<u32>,
}

#[derive(Debug, Args)]
pub struct InequalityArgs {
    #[command(flatten)]
    pub exponents: ExponentArgs,
    /// Run a randomized sweep with this many trials (`poincare` only).
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RepformulaArgs {
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MorreyArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub k: Option<u32>,
    /// Divide λ by the homogeneous dimension instead of the ambient one.
    #[arg(long)]
    pub homogeneous: bool,
}

#[derive(Debug, Args)]
pub struct LeibnizArgs {
    #[arg(long)]
    pub configurations: Option<usize>,
    #[arg(long)]
    pub homogeneous: bool,
}

fn exit_code(err: &LabError) -> i32 {
    match err {
        LabError::Parse(_) => EXIT_USAGE,
        LabError::Integration { .. } | LabError::Conditioning(_) => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

/// Parses `argv`, runs the command and writes its artifacts. Returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(artifact) => {
            if !artifact.stdout_summary {
                for line in &artifact.summary {
                    eprintln!("{line}");
                }
            }
            if let Err(e) = artifact.emit(cli.out.as_deref(), cli.format) {
                eprintln!("error: {e}");
                return exit_code(&e);
            }
            if artifact.numerical_failure {
                EXIT_NUMERICAL
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Resolves the config and runs the command on a pool of `--threads` workers.
pub fn execute(cli: &Cli) -> Result<Artifact> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(samples) = cli.samples {
        cfg.samples = samples;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| LabError::Io(e.to_string()))?;
    let (name, result) = pool.install(|| dispatch(&cli.command, &mut cfg))?;
    let mut artifact = result;
    artifact.envelope = json!({
        "schema_version": SCHEMA_VERSION,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "config": serde_json::to_value(&cfg).map_err(|e| LabError::Parse(e.to_string()))?,
        "result": std::mem::take(&mut artifact.envelope),
        "metadata": {
            "timestamp_unix": std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            "threads": pool.current_num_threads(),
        },
    });
    artifact.name = name.to_string();
    Ok(artifact)
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| LabError::Parse(e.to_string()))
}

fn apply_exponents(args: &ExponentArgs, group: &mut String, p_list: &mut Vec<f64>, q: &mut f64, k: &mut u32) {
    if let Some(g) = &args.group {
        *group = g.clone();
    }
    if let Some(p) = &args.p_list {
        *p_list = p.clone();
    }
    if let Some(v) = args.q {
        *q = v;
    }
    if let Some(v) = args.k {
        *k = v;
    }
}

fn dispatch(command: &Command, cfg: &mut ExperimentConfig) -> Result<(&'static str, Artifact)> {
    match command {
        Command::GroupInfo { group } => {
            let id = group
                .clone()
                .or_else(|| cfg.group_info.as_ref().map(|g| g.group.clone()))
                .unwrap_or_else(|| "heisenberg:1".into());
            cfg.group_info = Some(config::GroupInfoConfig { group: id.clone() });
            Ok(("group-info", group_info(&id)?))
        }
        Command::Counterexample(args) => {
            let mut c = cfg.counterexample.clone().unwrap_or_default();
            if let Some(p) = args.p {
                c.p = p;
            }
            if let Some(q) = args.q {
                c.q = q;
            }
            if let Some(e) = &args.eps {
                c.eps = e.clone();
            }
            cfg.counterexample = Some(c.clone());
            Ok(("counterexample", counterexample(&c)?))
        }
        Command::Poincare(args) => {
            let mut c = cfg.poincare.clone().unwrap_or_else(InequalityConfig::default_poincare);
            apply_exponents(&args.exponents, &mut c.group, &mut c.p_list, &mut c.q, &mut c.k);
            if let Some(t) = args.trials {
                c.trials = t;
            }
            cfg.poincare = Some(c.clone());
            Ok(("poincare", inequality("poincare", &c, cfg)?))
        }
        Command::Sobolev(args) => {
            let mut c = cfg.sobolev.clone().unwrap_or_else(InequalityConfig::default_sobolev);
            apply_exponents(&args.exponents, &mut c.group, &mut c.p_list, &mut c.q, &mut c.k);
            cfg.sobolev = Some(c.clone());
            Ok(("sobolev", inequality("sobolev", &c, cfg)?))
        }
        Command::SobolevSublaplacian(args) => {
            let mut c = cfg.sobolev_sublaplacian.clone().unwrap_or_else(InequalityConfig::default_sobolev_sublaplacian);
            apply_exponents(&args.exponents, &mut c.group, &mut c.p_list, &mut c.q, &mut c.k);
            cfg.sobolev_sublaplacian = Some(c.clone());
            Ok(("sobolev-sublaplacian", inequality("sobolev-sublaplacian", &c, cfg)?))
        }
        Command::WeightsCheck(args) => {
            let mut c = cfg.weights_check.clone().unwrap_or_default();
            apply_exponents(args, &mut c.group, &mut c.p_list, &mut c.q, &mut c.k);
            cfg.weights_check = Some(c.clone());
            Ok(("weights-check", weights_check(&c, cfg)?))
        }
        Command::Repformula(args) => {
            let mut c = cfg.repformula.clone().unwrap_or_default();
            if let Some(g) = &args.group {
                c.group = g.clone();
            }
            if let Some(k) = args.k {
                c.k = k;
            }
            if let Some(n) = args.points {
                c.points = n;
            }
            cfg.repformula = Some(c.clone());
            Ok(("repformula", repformula(&c, cfg)?))
        }
        Command::Morrey(args) | Command::Campanato(args) => {
            let campanato = matches!(command, Command::Campanato(_));
            let slot = if campanato { &mut cfg.campanato } else { &mut cfg.morrey };
            let mut c = slot.clone().unwrap_or_default();
            if let Some(p) = args.p {
                c.p = p;
            }
            if let Some(l) = args.lambda {
                c.lambda = l;
            }
            if let Some(k) = args.k {
                c.k = k;
            }
            if args.homogeneous {
                c.normalization = Normalization::Homogeneous;
            }
            *slot = Some(c.clone());
            let name = if campanato { "campanato" } else { "morrey" };
            Ok((name, morrey(&c, campanato, cfg)?))
        }
        Command::Leibniz(args) => {
            let mut c = cfg.leibniz.clone().unwrap_or_default();
            if let Some(n) = args.configurations {
                c.configurations = n;
            }
            if args.homogeneous {
                c.normalization = Normalization::Homogeneous;
            }
            cfg.leibniz = Some(c.clone());
            Ok(("leibniz", leibniz(&c, cfg)?))
        }
        Command::VolumeConstants { group } => {
            let id = group
                .clone()
                .or_else(|| cfg.volume_constants.as_ref().map(|g| g.group.clone()))
                .unwrap_or_else(|| "heisenberg:1".into());
            cfg.volume_constants = Some(config::VolumeConfig { group: id.clone() });
            let g = CarnotGroup::parse(&id)?;
            let est = estimate_volume_constant(&g, cfg.samples, cfg.seed);
            let summary = vec![format!(
                "{} {}: c = {:.9} ± {:.3e} ({} samples), builtin {:.9}",
                g.id(),
                g.gauge_key(),
                est.value,
                est.std_error,
                est.samples,
                g.volume_constant().value
            )];
            Ok((
                "volume-constants",
                Artifact::new(json!({ "group": g.id(), "gauge": g.gauge_key(), "estimate": to_value(&est)?, "builtin": to_value(g.volume_constant())? }), summary),
            ))
        }
    }
}

fn group_info(id: &str) -> Result<Artifact> {
    let g = CarnotGroup::parse(id)?;
    let layers: Vec<String> = g.layers().iter().map(|l| l.to_string()).collect();
    let summary = vec![format!(
        "{}: n={} layers=({}) Q={} step={} generators={} c_d={}",
        g.id(),
        g.ambient_dim(),
        layers.join(","),
        g.homogeneous_dimension(),
        g.step(),
        g.generators(),
        g.volume_constant().value
    )];
    let mut a = Artifact::new(
        json!({
            "id": g.id(),
            "kind": to_value(&g.kind())?,
            "n": g.ambient_dim(),
            "layers": g.layers(),
            "homogeneous_dimension": g.homogeneous_dimension(),
            "step": g.step(),
            "generators": g.generators(),
            "gauge": g.gauge_key(),
            "volume_constant": to_value(g.volume_constant())?,
        }),
        summary.clone(),
    );
    a.stdout_summary = true;
    Ok(a)
}

fn counterexample(c: &CounterexampleConfig) -> Result<Artifact> {
    let eps = parse_eps_range(&c.eps)?;
    let report = counterexample_report(c.p, c.q, &eps)?;
    let mut table = Table::new("rows", &["eps", "R", "R_predicted", "R_scaled", "L", "a", "b", "ratio", "converged"]);
    for r in &report.rows {
        table.push(vec![
            r.eps.to_string(),
            r.r.to_string(),
            r.r_predicted.to_string(),
            r.r_scaled.to_string(),
            r.l.to_string(),
            r.a.to_string(),
            r.b.to_string(),
            r.ratio.to_string(),
            r.converged.to_string(),
        ]);
    }
    let rel = (report.slope - report.expected_slope).abs() / report.expected_slope;
    let summary = vec![
        format!(
            "slope of ln R vs ln eps: {:.6} (expected {:.6}, relative deviation {:.2e}) {}",
            report.slope,
            report.expected_slope,
            rel,
            if rel <= 0.02 { "ok" } else { "off" }
        ),
        format!("L variation across eps: {:.3e}; lower bound {:.6}", report.l_variation, report.lower_bound),
    ];
    let mut a = Artifact::new(to_value(&report)?, summary);
    a.numerical_failure = !report.all_converged;
    a.tables.push(table);
    Ok(a)
}

fn inequality(kind: &str, c: &InequalityConfig, cfg: &ExperimentConfig) -> Result<Artifact> {
    let g = CarnotGroup::parse(&c.group)?;
    let system = c.system();
    validate_exponents(&system, &g)?;
    let vs = c.weights();
    let scheme = cfg.quadrature();
    let verdict = if c.check_weights {
        let sampler = crate::weights::BallSampler { seed: cfg.seed, ..c.sampler.clone() };
        Some(weight_condition_sup(&g, &c.u, &vs, &system, &sampler, &DEFAULT_T_GRID, &scheme.fork_label("weights"))?)
    } else {
        None
    };
    let verdict_text = verdict.as_ref().map(|v| v.verdict.clone());
    if kind == "poincare" && c.trials > 0 {
        let mut sweep = poincare_sweep(&g, &c.u, &vs, &system, c.trials, cfg.seed, &scheme)?;
        sweep.weight_verdict = verdict_text.clone();
        let mut table = Table::new("trials", &["index", "seed", "center", "radius", "lhs", "lhs_se", "rhs", "rhs_se", "ratio", "violation"]);
        for t in &sweep.trials {
            table.push(vec![
                t.index.to_string(),
                t.seed.to_string(),
                output::join(t.ball.center.coords()),
                t.ball.radius.to_string(),
                t.lhs.to_string(),
                t.lhs_std_error.to_string(),
                t.rhs.to_string(),
                t.rhs_std_error.to_string(),
                t.ratio.to_string(),
                t.violation.to_string(),
            ]);
        }
        let summary = vec![format!(
            "{} trials: max ratio {:.6}, violations {}, all finite {}, weight verdict {}",
            sweep.trials.len(),
            sweep.max_ratio,
            sweep.violations,
            sweep.all_finite,
            verdict_text.as_deref().unwrap_or("not checked")
        )];
        let mut a = Artifact::new(json!({ "sweep": to_value(&sweep)?, "weights": to_value(&verdict)? }), summary);
        a.numerical_failure = sweep.violations > 0;
        a.tables.push(table);
        return Ok(a);
    }
    if c.functions.len() != system.m() {
        return Err(LabError::Validation(vec![format!(
            "{} functions given for m = {} exponents",
            c.functions.len(),
            system.m()
        )]));
    }
    let mut report = match kind {
        "poincare" => {
            let ball = c.ball.clone().unwrap_or(GaugeBall { center: Point::origin(g.ambient_dim()), radius: 1.0 });
            let ball = GaugeBall::new(&g, ball.center, ball.radius)?;
            poincare_test(&g, &c.functions, &c.u, &vs, &system, &ball, &scheme)?
        }
        "sobolev" => sobolev_test(&g, &c.functions, &c.u, &vs, &system, &scheme)?,
        _ => sobolev_sublaplacian_test(&g, &c.functions, &c.u, &vs, &system, &scheme)?,
    };
    if let Some(v) = &verdict {
        report = report.with_weight_report(v);
    }
    let mut table = Table::new("terms", &["label", "product", "std_error"]);
    for t in &report.terms {
        table.push(vec![t.label.clone(), t.product.value.to_string(), t.product.std_error.to_string()]);
    }
    let summary = vec![format!(
        "{kind}: lhs {:.6e} ± {:.1e}, rhs {:.6e} ± {:.1e}, ratio {:.6}, weight verdict {}",
        report.lhs.value,
        report.lhs.std_error,
        report.rhs.value,
        report.rhs.std_error,
        report.ratio,
        report.weight_verdict.as_deref().unwrap_or("not checked")
    )];
    let mut a = Artifact::new(json!({ "report": to_value(&report)?, "weights": to_value(&verdict)? }), summary);
    a.numerical_failure = report.violation;
    a.tables.push(table);
    Ok(a)
}

fn weights_check(c: &WeightsConfig, cfg: &ExperimentConfig) -> Result<Artifact> {
    let g = CarnotGroup::parse(&c.group)?;
    let system = validate_exponents(&c.system(), &g)?;
    let sampler = crate::weights::BallSampler { seed: cfg.seed, ..c.sampler.clone() };
    let report = weight_condition_sup(&g, &c.u, &c.weights(), &system, &sampler, &c.t_grid, &cfg.quadrature())?;
    let mut table = Table::new("t", &["t", "sup", "sup_std_error", "slope", "verdict", "flagged", "evaluated"]);
    for r in &report.rows {
        table.push(vec![
            r.t.to_string(),
            r.sup.to_string(),
            r.sup_std_error.to_string(),
            r.slope.to_string(),
            r.verdict.clone(),
            r.flagged.to_string(),
            r.evaluated.to_string(),
        ]);
    }
    let summary = vec![format!(
        "scaling exponent {:.6}; verdict {} over r in [{}, {}]",
        report.scaling_exponent, report.verdict, report.r_min, report.r_max
    )];
    let mut a = Artifact::new(to_value(&report)?, summary);
    a.tables.push(table);
    Ok(a)
}

fn repformula(c: &RepformulaConfig, cfg: &ExperimentConfig) -> Result<Artifact> {
    let g = CarnotGroup::parse(&c.group)?;
    let ball = GaugeBall::new(&g, c.ball.center.clone(), c.ball.radius)?;
    let points = ball_sample_points(&g, &ball, c.points, cfg.seed);
    let report = representation_check(&g, &c.functions, &ball, c.k, &points, &cfg.singular_quadrature())?;
    let mut table = Table::new("points", &["index", "x", "lhs", "rhs", "rhs_std_error", "ratio", "core_fraction"]);
    for (i, p) in report.points.iter().enumerate() {
        table.push(vec![
            i.to_string(),
            output::join(p.x.coords()),
            p.lhs.to_string(),
            p.rhs.value.to_string(),
            p.rhs.std_error.to_string(),
            p.ratio.to_string(),
            p.core_fraction.to_string(),
        ]);
    }
    let summary = vec![format!("{} points: max ratio {:.6}", report.points.len(), report.max_ratio)];
    let mut a = Artifact::new(to_value(&report)?, summary);
    a.numerical_failure = !report.max_ratio.is_finite();
    a.tables.push(table);
    Ok(a)
}

fn morrey(c: &MorreyConfig, campanato: bool, cfg: &ExperimentConfig) -> Result<Artifact> {
    let g = CarnotGroup::parse(&c.group)?;
    let sampler = crate::weights::BallSampler { seed: cfg.seed, ..c.sampler.clone() };
    let f = |y: &[f64]| c.function.value(&g, y);
    let scheme = cfg.quadrature();
    let sup = if campanato {
        campanato_norm(&g, f, &c.w, c.p, c.lambda, c.k, &sampler, &scheme, c.normalization)?
    } else {
        morrey_norm(&g, f, &c.w, c.p, c.lambda, &sampler, &scheme, c.normalization)?
    };
    let mut table = Table::new("balls", &["index", "center", "radius", "value", "std_error"]);
    for (i, b) in sup.balls.iter().enumerate() {
        table.push(vec![
            i.to_string(),
            output::join(b.ball.center.coords()),
            b.ball.radius.to_string(),
            b.value.to_string(),
            b.std_error.to_string(),
        ]);
    }
    let summary = vec![format!(
        "{}: sup {:.6e} ± {:.1e} over {} balls, r in [{}, {}] ({})",
        if campanato { "campanato" } else { "morrey" },
        sup.estimate.value,
        sup.estimate.std_error,
        sup.balls.len(),
        sup.r_min,
        sup.r_max,
        sup.note
    )];
    let mut a = Artifact::new(to_value(&sup)?, summary);
    a.tables.push(table);
    Ok(a)
}

fn leibniz(c: &LeibnizConfig, cfg: &ExperimentConfig) -> Result<Artifact> {
    let g = CarnotGroup::parse(&c.group)?;
    let system = crate::weights::ExponentSystem::new(c.p_list.clone(), c.q, c.k);
    let vs = if c.v.is_empty() { vec![crate::weights::Weight::one(); 2] } else { c.v.clone() };
    if vs.len() != 2 {
        return Err(LabError::Validation(vec![format!("Leibniz rule needs two weights v, got {}", vs.len())]));
    }
    let scales = LeibnizScales { lambda: c.lambda, lambda1: c.lambda1, lambda2: c.lambda2 };
    let sampler = crate::weights::BallSampler { seed: cfg.seed, ..c.sampler.clone() };
    let scheme = cfg.quadrature();
    if c.configurations > 0 {
        let sweep = leibniz_sweep(&g, &c.u, [&vs[0], &vs[1]], &system, scales, &sampler, c.configurations, cfg.seed, &scheme, c.normalization)?;
        let mut table = Table::new("configurations", &["index", "lhs", "rhs", "ratio", "violation"]);
        for r in &sweep.rows {
            table.push(vec![r.index.to_string(), r.lhs.to_string(), r.rhs.to_string(), r.ratio.to_string(), r.violation.to_string()]);
        }
        let summary = vec![format!(
            "{} configurations: max ratio {:.6}, all finite {}, violations {}",
            sweep.rows.len(),
            sweep.max_ratio,
            sweep.all_finite,
            sweep.violations
        )];
        let mut a = Artifact::new(to_value(&sweep)?, summary);
        a.numerical_failure = sweep.violations > 0;
        a.tables.push(table);
        return Ok(a);
    }
    if c.functions.len() != 2 {
        return Err(LabError::Validation(vec![format!("Leibniz rule needs functions f and g, got {}", c.functions.len())]));
    }
    let report = leibniz_test(&g, &c.functions[0], &c.functions[1], &c.u, [&vs[0], &vs[1]], &system, scales, &sampler, &scheme, c.normalization)?;
    let mut table = Table::new("terms", &["label", "product", "std_error"]);
    for t in &report.terms {
        table.push(vec![t.label.clone(), t.product.value.to_string(), t.product.std_error.to_string()]);
    }
    let summary = vec![format!("leibniz: lhs {:.6e}, rhs {:.6e}, ratio {:.6}", report.lhs.value, report.rhs.value, report.ratio)];
    let mut a = Artifact::new(to_value(&report)?, summary);
    a.numerical_failure = report.violation;
    a.tables.push(table);
    Ok(a)
}
