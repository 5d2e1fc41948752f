//! Experiment harness: Monte Carlo tail estimation with exact binomial
//! confidence intervals, bound-versus-empirical certification tables, flat
//! key-value experiment configs, and CSV/JSON report emission.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::concentration::{
    default_gamma, hoeffding_bound, BoundInput, BoundReport, GammaReport, Regime,
};
use crate::error::{Error, Result};
use crate::markov::{simulate_path, time_average_statistic, Functional, State, TimeDomain};
use crate::models::ModelSpec;
use crate::numeric::mix_seed;
use crate::subordination::{subordinate_model, SubordinatorSpec};

/// Confidence level of all certification intervals.
pub const CONFIDENCE: f64 = 0.99;

/// Exact binomial (Clopper-Pearson) two-sided interval for `successes`
/// out of `n` at the given confidence level.
pub fn clopper_pearson(successes: u64, n: u64, confidence: f64) -> Result<(f64, f64)> {
    if n == 0 || successes > n {
        return Err(Error::Argument(format!(
            "invalid binomial count {successes}/{n}"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Argument(format!("bad confidence {confidence}")));
    }
    let alpha = 1.0 - confidence;
    let k = successes as f64;
    let nf = n as f64;
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(k, nf - k + 1.0)
            .map_err(|e| Error::Argument(e.to_string()))?
            .inverse_cdf(alpha / 2.0)
    };
    let hi = if successes == n {
        1.0
    } else {
        Beta::new(k + 1.0, nf - k)
            .map_err(|e| Error::Argument(e.to_string()))?
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    Ok((lo, hi))
}

/// Monte Carlo estimate of the tail probability with its exact binomial
/// confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: u64,
    pub seed: u64,
    pub t: f64,
    pub eps: f64,
}

/// Estimate P_x(|S_{t-1} - pi(f) t| > t eps) from n independent replicas.
/// Replica r runs on the derived seed mix(seed, r), so the count is
/// order-independent and parallel-safe.
pub fn estimate_tail(
    model: &ModelSpec,
    f: &Functional,
    x0: State,
    t: f64,
    eps: f64,
    n: u64,
    seed: u64,
) -> Result<TailEstimate> {
    model.validate()?;
    if n < 100 {
        return Err(Error::Argument(format!("need at least 100 samples, got {n}")));
    }
    if !(t > 0.0 && eps > 0.0) {
        return Err(Error::Argument(format!("need t > 0 and eps > 0, got {t}, {eps}")));
    }
    let pi_f = model.invariant_measure().mean_of(f);
    if !pi_f.is_finite() {
        return Err(Error::Config(format!(
            "invariant mean of {} is not available",
            f.name()
        )));
    }
    let domain = model.time_domain();
    let threshold = t * eps;
    let exceedances = (0..n)
        .into_par_iter()
        .map(|r| -> Result<u64> {
            let traj = simulate_path(model, x0, t, mix_seed(seed, r))?;
            let s = time_average_statistic(&traj, f, t, domain)?;
            Ok(u64::from((s - pi_f * t).abs() > threshold))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let (ci_lo, ci_hi) = clopper_pearson(exceedances, n, CONFIDENCE)?;
    Ok(TailEstimate {
        p_hat: exceedances as f64 / n as f64,
        ci_lo,
        ci_hi,
        n,
        seed,
        t,
        eps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// A fully resolved experiment: model, functional, start point, the (t, eps)
/// grid, and sampling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub functional: Functional,
    pub x0: f64,
    /// (t, eps) pairs, certified in order.
    pub grid: Vec<(f64, f64)>,
    pub samples: u64,
    pub seed: u64,
    pub out: Option<String>,
    pub format: OutputFormat,
}

/// One certification row: the analytic bound against the Monte Carlo
/// estimate at a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyRow {
    pub t: f64,
    pub eps: f64,
    pub bound: f64,
    pub regime: Regime,
    pub theta_star: f64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: u64,
    /// ci_lo <= bound: the bound is not violated beyond statistical noise.
    pub pass: bool,
    /// bound / p_hat slack ratio (infinite when no exceedance was seen).
    pub tightness: f64,
}

/// Full certification outcome with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyOutcome {
    pub model_id: String,
    pub functional: String,
    pub x0: f64,
    pub lip: f64,
    pub sup_f: f64,
    pub gamma: GammaReport,
    pub domain: TimeDomain,
    pub rows: Vec<CertifyRow>,
    pub all_pass: bool,
    /// Aggregated expected decay rate of the subordinated clock, when the
    /// model is subordinated and the base has a certified envelope.
    pub integrated_rate: Option<f64>,
}

/// Evaluate the bound and the Monte Carlo tail at every grid point; a point
/// passes when ci_lo <= bound.
pub fn certify(config: &ExperimentConfig) -> Result<CertifyOutcome> {
    config.model.validate()?;
    let space = config.model.space();
    let x0 = State::new(config.x0, space)?;
    let f = config.functional;
    let lip = f.lip();
    let sup_f = f.sup_norm(&space);
    if !sup_f.is_finite() {
        return Err(Error::Config(format!(
            "functional {} is unbounded on {:?}",
            f.name(),
            space
        )));
    }
    let gamma = default_gamma(&config.model)?;
    let domain = config.model.time_domain();
    let mut rows = Vec::with_capacity(config.grid.len());
    for &(t, eps) in &config.grid {
        let BoundReport {
            bound,
            theta_star,
            regime,
        } = hoeffding_bound(&BoundInput {
            lip,
            sup_f,
            gamma: gamma.value,
            eps,
            t,
            domain,
        })?;
        let est = estimate_tail(&config.model, &f, x0, t, eps, config.samples, config.seed)?;
        rows.push(CertifyRow {
            t,
            eps,
            bound,
            regime,
            theta_star,
            p_hat: est.p_hat,
            ci_lo: est.ci_lo,
            ci_hi: est.ci_hi,
            n: est.n,
            pass: est.ci_lo <= bound + 1e-12,
            tightness: if est.p_hat > 0.0 {
                bound / est.p_hat
            } else {
                f64::INFINITY
            },
        });
    }
    let integrated_rate = match &config.model {
        ModelSpec::Subordinated { base, sub } => {
            crate::concentration::base_rate(base).ok().and_then(|(_, rate)| {
                crate::subordination::integrated_rate(sub, &rate, domain).ok()
            })
        }
        _ => None,
    };
    Ok(CertifyOutcome {
        model_id: config.model.id(),
        functional: f.name(),
        x0: config.x0,
        lip,
        sup_f,
        gamma,
        domain,
        all_pass: rows.iter().all(|r| r.pass),
        rows,
        integrated_rate,
    })
}

fn regime_name(regime: Regime) -> &'static str {
    match regime {
        Regime::Informative => "informative",
        Regime::Vacuous => "vacuous",
        Regime::Degenerate => "degenerate",
    }
}

fn domain_name(domain: TimeDomain) -> &'static str {
    match domain {
        TimeDomain::Discrete => "discrete",
        TimeDomain::Continuous => "continuous",
    }
}

/// Parse a flat `key = value` config (UTF-8, `#` comments) with per-line
/// diagnostics.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut model_name: Option<String> = None;
    let mut alpha: Option<f64> = None;
    let mut functional: Option<Functional> = None;
    let mut x0: Option<f64> = None;
    let mut ts: Vec<f64> = Vec::new();
    let mut epses: Vec<f64> = Vec::new();
    let mut samples: Option<u64> = None;
    let mut seed: Option<u64> = None;
    let mut sub: Option<String> = None;
    let mut out: Option<String> = None;
    let mut format = OutputFormat::Csv;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {lineno}: expected `key = value`, got `{line}`"))
        })?;
        let key = key.trim();
        let value = value.trim();
        let parse_f64 = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|_| Error::Config(format!("line {lineno}: bad number `{v}`")))
        };
        let parse_list = |v: &str| -> Result<Vec<f64>> {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(parse_f64)
                .collect()
        };
        match key {
            "model" => model_name = Some(value.to_string()),
            "alpha" => alpha = Some(parse_f64(value)?),
            "functional" => functional = Some(parse_functional(value).map_err(|e| {
                Error::Config(format!("line {lineno}: {e}"))
            })?),
            "x0" => x0 = Some(parse_f64(value)?),
            "t" => ts = parse_list(value)?,
            "eps" => epses = parse_list(value)?,
            "samples" => {
                samples = Some(value.parse().map_err(|_| {
                    Error::Config(format!("line {lineno}: bad count `{value}`"))
                })?)
            }
            "seed" => {
                seed = Some(value.parse().map_err(|_| {
                    Error::Config(format!("line {lineno}: bad seed `{value}`"))
                })?)
            }
            "sub" => sub = Some(value.to_string()),
            "out" => out = Some(value.to_string()),
            "format" => {
                format = match value {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    _ => {
                        return Err(Error::Config(format!(
                            "line {lineno}: format must be csv or json, got `{value}`"
                        )))
                    }
                }
            }
            _ => return Err(Error::Config(format!("line {lineno}: unknown key `{key}`"))),
        }
    }

    let model_name =
        model_name.ok_or_else(|| Error::Config("missing required key `model`".into()))?;
    let mut model = parse_model(&model_name, alpha)?;
    if let Some(sub) = sub {
        if sub != "none" {
            model = subordinate_model(model, parse_subordinator(&sub)?)?;
        }
    }
    let grid: Vec<(f64, f64)> = ts
        .iter()
        .flat_map(|&t| epses.iter().map(move |&e| (t, e)))
        .collect();
    Ok(ExperimentConfig {
        model,
        functional: functional
            .ok_or_else(|| Error::Config("missing required key `functional`".into()))?,
        x0: x0.ok_or_else(|| Error::Config("missing required key `x0`".into()))?,
        grid,
        samples: samples.ok_or_else(|| Error::Config("missing required key `samples`".into()))?,
        seed: seed.ok_or_else(|| Error::Config("missing required key `seed`".into()))?,
        out,
        format,
    })
}

/// Resolve a model name (`flow`, `ar1`, `torus`) and optional alpha.
pub fn parse_model(name: &str, alpha: Option<f64>) -> Result<ModelSpec> {
    let model = match name {
        "flow" => ModelSpec::Flow {
            alpha: alpha.unwrap_or(1.0),
        },
        "ar1" => ModelSpec::Ar1Binary,
        "torus" => ModelSpec::TorusWalk,
        _ => {
            return Err(Error::Config(format!(
                "unknown model `{name}` (expected flow, ar1 or torus)"
            )))
        }
    };
    model.validate()?;
    Ok(model)
}

/// Resolve a functional name: `identity`, `const:<c>`, `cos`,
/// `clipped:<clip>`.
pub fn parse_functional(name: &str) -> Result<Functional> {
    if name == "identity" {
        return Ok(Functional::Identity);
    }
    if name == "cos" {
        return Ok(Functional::CosineCircle);
    }
    if let Some(c) = name.strip_prefix("const:") {
        return Ok(Functional::Constant(c.parse().map_err(|_| {
            Error::Config(format!("bad constant in `{name}`"))
        })?));
    }
    if let Some(c) = name.strip_prefix("clipped:") {
        return Ok(Functional::ClippedArcDistance {
            clip: c
                .parse()
                .map_err(|_| Error::Config(format!("bad clip in `{name}`")))?,
        });
    }
    Err(Error::Config(format!(
        "unknown functional `{name}` (expected identity, const:<c>, cos or clipped:<r>)"
    )))
}

/// Resolve a subordinator flag: `poisson:<lambda>`, `iid:<file.json>`,
/// `unit`.
pub fn parse_subordinator(name: &str) -> Result<SubordinatorSpec> {
    if name == "unit" {
        return Ok(SubordinatorSpec::unit());
    }
    if let Some(l) = name.strip_prefix("poisson:") {
        let lambda: f64 = l
            .parse()
            .map_err(|_| Error::Config(format!("bad rate in `{name}`")))?;
        let spec = SubordinatorSpec::PoissonProcess { lambda };
        spec.validate()?;
        return Ok(spec);
    }
    if let Some(path) = name.strip_prefix("iid:") {
        let text = std::fs::read_to_string(path)?;
        let step_law = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("bad step-law JSON in {path}: {e}")))?;
        let spec = SubordinatorSpec::DiscreteIid { step_law };
        spec.validate()?;
        return Ok(spec);
    }
    Err(Error::Config(format!(
        "unknown subordinator `{name}` (expected poisson:<rate>, iid:<file.json> or unit)"
    )))
}

/// Paths of the report files written by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub all_pass: bool,
}

/// Run a config file end to end: certify and write the CSV table plus a
/// JSON sidecar with full provenance.
pub fn run_experiment(config_file: &Path) -> Result<RunArtifacts> {
    let text = std::fs::read_to_string(config_file)?;
    let config = parse_config(&text)?;
    let outcome = certify(&config)?;
    let stem: PathBuf = match &config.out {
        Some(out) => PathBuf::from(out),
        None => config_file.with_extension(""),
    };
    let csv_path = stem.with_extension("csv");
    let json_path = stem.with_extension("json");
    let mut csv = String::from(
        "model,x0,t,eps,lip,sup_f,gamma,domain,bound,regime,p_hat,ci_lo,ci_hi,n,seed\n",
    );
    for row in &outcome.rows {
        csv.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{},{:.16e},{:.16e},{:.16e},{},{}\n",
            outcome.model_id,
            outcome.x0,
            row.t,
            row.eps,
            outcome.lip,
            outcome.sup_f,
            outcome.gamma.value,
            domain_name(outcome.domain),
            row.bound,
            regime_name(row.regime),
            row.p_hat,
            row.ci_lo,
            row.ci_hi,
            row.n,
            config.seed,
        ));
    }
    std::fs::write(&csv_path, csv)?;
    let sidecar = serde_json::json!({
        "config": &config,
        "outcome": &outcome,
    });
    let pretty = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::Config(format!("report serialization failed: {e}")))?;
    std::fs::write(&json_path, pretty + "\n")?;
    Ok(RunArtifacts {
        csv_path,
        json_path,
        all_pass: outcome.all_pass,
    })
}
