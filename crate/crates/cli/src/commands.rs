use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use shrinkpred_core::risk::{risk_curve, risk_integration_check, theorem1_derivative_check, ExtendedModel, Method};
use shrinkpred_core::{PriorSpec, ProblemConfig};

use crate::config::{read_text, ExperimentArgs, Settings};
use crate::error::{CliError, CliResult};
use crate::plot::{render_svg, PlotOptions};
use crate::table::{emit, parse_risk_csv, render, RiskRow, RISK_HEADER};

pub const THEOREM1_HEADER: [&str; 7] =
    ["t", "method", "derivative_estimate", "target", "std_err", "mu_norm", "target_std_err"];

pub const INTEGRATION_HEADER: [&str; 13] = [
    "mu_norm", "d", "s", "t", "nodes", "trials", "seed", "lhs", "lhs_std_err", "rhs", "rhs_std_err", "diff",
    "combined_std_err",
];

pub const DENSITY_HEADER: [&str; 5] = ["method", "d", "u", "v", "log_density"];

#[derive(Debug, Parser)]
#[command(name = "shrinkpred", version, about = "Predictive densities under shrinkage priors: KL risk experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// KL risk of each method along a grid of |mu|.
    RiskCurve(ExperimentArgs),
    /// Small-t derivative of the risk gap between p_U and the extended plug-ins.
    Theorem1(ExperimentArgs),
    /// Both sides of the risk-integration identity for Stein's prior (s = 1/u, t = 1/v).
    IntegrationCheck(ExperimentArgs),
    /// Log-density of each method's predictive at a given (x, y).
    DensityEval(DensityArgs),
    /// Render a risk-curve CSV as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Observation, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    /// Evaluation point, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub y: String,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Risk-curve CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// SVG output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Draw one-standard-error bars.
    #[arg(long)]
    pub error_bars: bool,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::RiskCurve(args) => with_settings(&args, |s| emit(&risk_curve_csv(s)?, s.out.as_deref())),
        Command::Theorem1(args) => with_settings(&args, |s| emit(&theorem1_csv(s)?, s.out.as_deref())),
        Command::IntegrationCheck(args) => {
            with_settings(&args, |s| emit(&integration_csv(s)?, s.out.as_deref()))
        }
        Command::DensityEval(args) => {
            let x = parse_vector("--x", &args.x)?;
            let y = parse_vector("--y", &args.y)?;
            let mut experiment = args.experiment.clone();
            if let Some(d) = experiment.d {
                if d != x.len() {
                    return Err(CliError::config(format!("d: --d {d} but --x has {} entries", x.len())));
                }
            }
            experiment.d = Some(x.len());
            with_settings(&experiment, |s| emit(&density_csv(s, &x, &y)?, s.out.as_deref()))
        }
        Command::Plot(args) => plot(&args),
    }
}

fn with_settings<F>(args: &ExperimentArgs, f: F) -> CliResult<()>
where
    F: FnOnce(&Settings) -> CliResult<()> + Send,
{
    let settings = args.resolve()?;
    match settings.threads {
        None => f(&settings),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config(format!("threads: {e}")))?
            .install(|| f(&settings)),
    }
}

fn parse_vector(flag: &str, s: &str) -> CliResult<DVector<f64>> {
    let values = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::config(format!("{flag}: cannot parse '{p}'"))))
        .collect::<CliResult<Vec<f64>>>()?;
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::config(format!("{flag}: need finite comma-separated numbers")));
    }
    Ok(DVector::from_vec(values))
}

fn methods(s: &Settings) -> CliResult<Vec<Method>> {
    s.methods
        .iter()
        .map(|id| Method::from_id(id, s.d, s.eb_c).map_err(|e| CliError::config(format!("methods: {e}"))))
        .collect()
}

pub fn risk_curve_csv(s: &Settings) -> CliResult<Vec<u8>> {
    let methods = methods(s)?;
    let curve = risk_curve(&methods, &s.grid.points(), s.d, s.u, s.v, s.trials, s.seed, s.y_draws)?;
    let mut rows = Vec::new();
    for (k, method) in curve.methods.iter().enumerate() {
        for (g, est) in curve.grid.iter().zip(&curve.estimates[k]) {
            let row = RiskRow {
                method: method.id().to_string(),
                mu_norm: *g,
                d: s.d,
                u: s.u,
                v: s.v,
                trials: s.trials,
                seed: s.seed,
                kl_risk: est.value,
                std_err: est.std_err,
            };
            rows.push(row.to_record());
        }
    }
    render(&RISK_HEADER, &rows)
}

pub fn theorem1_csv(s: &Settings) -> CliResult<Vec<u8>> {
    if let Some(m) = s.methods.iter().find(|m| !["pu", "e1", "e2"].contains(&m.as_str())) {
        return Err(CliError::config(format!("methods: theorem1 compares pu, e1 and e2; got '{m}'")));
    }
    let s_prec = 1.0 / s.u;
    let mut rows = Vec::new();
    for norm in s.grid.points() {
        let mu = ProblemConfig::on_axis(s.d, s.u, s.v, norm)?.mu().clone();
        let stein = if s.methods.iter().any(|m| m != "pu") {
            theorem1_derivative_check(PriorSpec::Stein, &mu, s_prec, &s.t_values, s.trials, s.seed)?
        } else {
            Vec::new()
        };
        let flat = if s.methods.iter().any(|m| m == "pu") {
            theorem1_derivative_check(PriorSpec::Uniform, &mu, s_prec, &s.t_values, s.trials, s.seed)?
        } else {
            Vec::new()
        };
        for &t in &s.t_values {
            for id in &s.methods {
                let (source, model) = match id.as_str() {
                    "pu" => (&flat, ExtendedModel::E1),
                    "e1" => (&stein, ExtendedModel::E1),
                    _ => (&stein, ExtendedModel::E2),
                };
                let r = source
                    .iter()
                    .find(|r| r.t == t && r.model == model)
                    .expect("one row per (t, model)");
                rows.push(vec![
                    t.to_string(),
                    id.clone(),
                    r.estimate.to_string(),
                    r.target.to_string(),
                    r.estimate_se.to_string(),
                    norm.to_string(),
                    r.target_se.to_string(),
                ]);
            }
        }
    }
    render(&THEOREM1_HEADER, &rows)
}

pub fn integration_csv(s: &Settings) -> CliResult<Vec<u8>> {
    let (s_prec, t_prec) = (1.0 / s.u, 1.0 / s.v);
    let mut rows = Vec::new();
    for norm in s.grid.points() {
        let mu = ProblemConfig::on_axis(s.d, s.u, s.v, norm)?.mu().clone();
        let chk = risk_integration_check(&mu, s_prec, t_prec, s.nodes, s.trials, s.seed, s.y_draws)?;
        rows.push(vec![
            norm.to_string(),
            s.d.to_string(),
            s_prec.to_string(),
            t_prec.to_string(),
            s.nodes.to_string(),
            s.trials.to_string(),
            s.seed.to_string(),
            chk.lhs.to_string(),
            chk.lhs_se.to_string(),
            chk.rhs.to_string(),
            chk.rhs_se.to_string(),
            chk.diff().to_string(),
            chk.combined_se().to_string(),
        ]);
    }
    render(&INTEGRATION_HEADER, &rows)
}

pub fn density_csv(s: &Settings, x: &DVector<f64>, y: &DVector<f64>) -> CliResult<Vec<u8>> {
    if y.len() != x.len() {
        return Err(CliError::config(format!("--y: expected {} entries, got {}", x.len(), y.len())));
    }
    let cfg = ProblemConfig::centered(s.d, s.u, s.v)?;
    let mut rows = Vec::new();
    for method in methods(s)? {
        let value = method.build(x, &cfg)?.log_density(y)?;
        rows.push(vec![
            method.id().to_string(),
            s.d.to_string(),
            s.u.to_string(),
            s.v.to_string(),
            value.to_string(),
        ]);
    }
    render(&DENSITY_HEADER, &rows)
}

fn plot(args: &PlotArgs) -> CliResult<()> {
    let text = read_text(&args.input)?;
    let rows = parse_risk_csv(&args.input, &text)?;
    let svg = render_svg(&rows, PlotOptions { error_bars: args.error_bars });
    std::fs::write(&args.out, svg).map_err(|e| CliError::io(&args.out, e))
}
