//! Command-line front end: evaluate bounds, estimate tails, certify grids,
//! inspect ergodicity coefficients, solve Poisson equations, check the
//! standing conditions, and wire subordinated clocks onto the base models.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use whoeffding::concentration::{
    check_conditions, default_gamma, hoeffding_bound, poisson_solution, BoundInput, DriftSpec,
    Regime, DEFAULT_TRUNC,
};
use whoeffding::error::{Error, Result};
use whoeffding::harness::{
    estimate_tail, parse_functional, parse_model, parse_subordinator, run_experiment,
    OutputFormat,
};
use whoeffding::markov::{State, TimeDomain};
use whoeffding::models::ModelSpec;
use whoeffding::subordination::{sample_subordinator, subordinate_model};

#[derive(Parser)]
#[command(
    name = "whoeffding",
    version,
    about = "Hoeffding bounds for Lipschitz statistics of contracting Markov models"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ModelArgs {
    /// Base model: flow, ar1 or torus.
    #[arg(long)]
    model: String,
    /// Flow exponent in [1, 2); ignored by the other models.
    #[arg(long)]
    alpha: Option<f64>,
    /// Random clock: poisson:<rate>, iid:<file.json> or unit.
    #[arg(long)]
    sub: Option<String>,
}

impl ModelArgs {
    fn build(&self) -> Result<ModelSpec> {
        let base = parse_model(&self.model, self.alpha)?;
        match &self.sub {
            Some(s) if s != "none" => subordinate_model(base, parse_subordinator(s)?),
            _ => Ok(base),
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, default_value = "csv")]
    format: String,
}

impl OutputArgs {
    fn format(&self) -> Result<OutputFormat> {
        match self.format.as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Argument(format!(
                "format must be csv or json, got `{other}`"
            ))),
        }
    }

    fn emit(&self, text: String) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the concentration bound at one (t, eps) point.
    Bound {
        #[command(flatten)]
        model: ModelArgs,
        /// Statistic: identity, const:<c>, cos or clipped:<r>.
        #[arg(long, default_value = "identity")]
        functional: String,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo estimate of the tail probability with a 99% interval.
    Tail {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "identity")]
        functional: String,
        #[arg(long)]
        x0: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value = "1000")]
        samples: u64,
        #[arg(long, default_value = "0")]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Report the integrated ergodicity coefficient and its provenance.
    Gamma {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve the Poisson equation at a point.
    Poisson {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "identity")]
        functional: String,
        #[arg(long)]
        x0: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check the standing conditions on a probe grid.
    Check {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Attach a random clock to a base model and sample it.
    Subordinate {
        #[command(flatten)]
        model: ModelArgs,
        /// Clock time to sample at.
        #[arg(long)]
        t: f64,
        #[arg(long, default_value = "0")]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a config file: certify a (t, eps) grid and write CSV + JSON reports.
    Certify {
        /// Flat key = value experiment config.
        #[arg(long)]
        config: PathBuf,
    },
}

fn regime_name(regime: Regime) -> &'static str {
    match regime {
        Regime::Informative => "informative",
        Regime::Vacuous => "vacuous",
        Regime::Degenerate => "degenerate",
    }
}

fn json_pretty(value: &serde_json::Value) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Config(format!("report serialization failed: {e}")))
}

/// Runs one subcommand; the bool is the certification verdict (always true
/// for purely descriptive commands).
fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Bound {
            model,
            functional,
            t,
            eps,
            output,
        } => {
            let model = model.build()?;
            let f = parse_functional(&functional)?;
            let space = model.space();
            let gamma = default_gamma(&model)?;
            let report = hoeffding_bound(&BoundInput {
                lip: f.lip(),
                sup_f: f.sup_norm(&space),
                gamma: gamma.value,
                eps,
                t,
                domain: model.time_domain(),
            })?;
            let text = match output.format()? {
                OutputFormat::Json => json_pretty(&serde_json::json!({
                    "model": model.id(),
                    "functional": f.name(),
                    "t": t,
                    "eps": eps,
                    "lip": f.lip(),
                    "sup_f": f.sup_norm(&space),
                    "gamma": gamma,
                    "bound": report.bound,
                    "theta_star": report.theta_star,
                    "regime": regime_name(report.regime),
                }))?,
                OutputFormat::Csv => format!(
                    "model,functional,t,eps,gamma,bound,theta_star,regime\n{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                    model.id(),
                    f.name(),
                    t,
                    eps,
                    gamma.value,
                    report.bound,
                    report.theta_star,
                    regime_name(report.regime),
                ),
            };
            output.emit(text)?;
            Ok(true)
        }
        Cmd::Tail {
            model,
            functional,
            x0,
            t,
            eps,
            samples,
            seed,
            output,
        } => {
            let model = model.build()?;
            let f = parse_functional(&functional)?;
            let x0 = State::new(x0, model.space())?;
            let est = estimate_tail(&model, &f, x0, t, eps, samples, seed)?;
            let text = match output.format()? {
                OutputFormat::Json => json_pretty(&serde_json::json!({
                    "model": model.id(),
                    "functional": f.name(),
                    "estimate": est,
                }))?,
                OutputFormat::Csv => format!(
                    "model,t,eps,p_hat,ci_lo,ci_hi,n,seed\n{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
                    model.id(),
                    est.t,
                    est.eps,
                    est.p_hat,
                    est.ci_lo,
                    est.ci_hi,
                    est.n,
                    est.seed,
                ),
            };
            output.emit(text)?;
            Ok(true)
        }
        Cmd::Gamma { model, output } => {
            let model = model.build()?;
            let gamma = default_gamma(&model)?;
            let text = match output.format()? {
                OutputFormat::Json => json_pretty(&serde_json::json!({
                    "model": model.id(),
                    "gamma": gamma,
                }))?,
                OutputFormat::Csv => format!(
                    "model,gamma,certified,lower_bound\n{},{:.16e},{},{:.16e}\n",
                    model.id(),
                    gamma.value,
                    gamma.certified,
                    gamma.lower_bound.unwrap_or(f64::NAN),
                ),
            };
            output.emit(text)?;
            Ok(true)
        }
        Cmd::Poisson {
            model,
            functional,
            x0,
            output,
        } => {
            let model = model.build()?;
            let f = parse_functional(&functional)?;
            let x = State::new(x0, model.space())?;
            let sol = poisson_solution(&model, &f, x, DEFAULT_TRUNC)?;
            let text = match output.format()? {
                OutputFormat::Json => json_pretty(&serde_json::json!({
                    "model": model.id(),
                    "functional": f.name(),
                    "x0": x0,
                    "solution": sol,
                }))?,
                OutputFormat::Csv => format!(
                    "model,functional,x0,value,tail_bound\n{},{},{:.16e},{:.16e},{:.16e}\n",
                    model.id(),
                    f.name(),
                    x0,
                    sol.value,
                    sol.tail_bound,
                ),
            };
            output.emit(text)?;
            Ok(true)
        }
        Cmd::Check { model, output } => {
            let model = model.build()?;
            // On a bounded space the drift condition holds with V the
            // distance to a reference point, phi the identity and a slack
            // level set by the diameter.
            let space = model.space();
            let diameter = space.diameter();
            let drift = DriftSpec {
                v: Box::new(move |x| space.distance(x, space.canonicalize(0.0))),
                phi: Box::new(|u| u),
                kappa: diameter + 1.0,
            };
            let report = check_conditions(&model, &drift, 0.25, 0.5)?;
            let all_pass = report.metric_bounded
                && report.contraction_pass
                && report.drift_pass
                && report.phi_integral_pass;
            let text = match output.format()? {
                OutputFormat::Json => json_pretty(&serde_json::json!({
                    "model": model.id(),
                    "report": report,
                    "all_pass": all_pass,
                }))?,
                OutputFormat::Csv => format!(
                    "model,metric_bounded,diameter,contraction_factor,contraction_pass,drift_pass,phi_integral_pass,all_pass\n{},{},{:.16e},{:.16e},{},{},{},{}\n",
                    model.id(),
                    report.metric_bounded,
                    report.diameter,
                    report.contraction_factor,
                    report.contraction_pass,
                    report.drift_pass,
                    report.phi_integral_pass,
                    all_pass,
                ),
            };
            output.emit(text)?;
            Ok(all_pass)
        }
        Cmd::Subordinate {
            model,
            t,
            seed,
            output,
        } => {
            let ModelArgs { sub: Some(sub), .. } = &model else {
                return Err(Error::Argument(
                    "subordinate requires --sub (poisson:<rate>, iid:<file.json> or unit)".into(),
                ));
            };
            let spec = parse_subordinator(sub)?;
            let model = model.build()?;
            let sample = sample_subordinator(&spec, t, seed)?;
            let domain = match model.time_domain() {
                TimeDomain::Discrete => "discrete",
                TimeDomain::Continuous => "continuous",
            };
            let gamma = default_gamma(&model)?;
            let text = match output.format()? {
                OutputFormat::Json => json_pretty(&serde_json::json!({
                    "model": model.id(),
                    "domain": domain,
                    "t": t,
                    "seed": seed,
                    "sample": sample,
                    "gamma": gamma,
                }))?,
                OutputFormat::Csv => format!(
                    "model,domain,t,seed,sample,gamma\n{},{},{:.16e},{},{:.16e},{:.16e}\n",
                    model.id(),
                    domain,
                    t,
                    seed,
                    sample,
                    gamma.value,
                ),
            };
            output.emit(text)?;
            Ok(true)
        }
        Cmd::Certify { config } => {
            let artifacts = run_experiment(&config)?;
            println!("wrote {}", artifacts.csv_path.display());
            println!("wrote {}", artifacts.json_path.display());
            println!(
                "certification: {}",
                if artifacts.all_pass { "pass" } else { "FAIL" }
            );
            Ok(artifacts.all_pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
