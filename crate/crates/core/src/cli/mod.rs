//! Command-line front end.
//!
//! ```text
//! organic-mediation simulate  --spec s.json --n N --seed S [--out d.csv]
//! organic-mediation estimate  (--data d.csv | --spec s.json --n N) [--bootstrap B --alpha A --seed S]
//! organic-mediation identify  (--data d.csv | --spec s.json --n N) [--bins c=2,m=3] [--smooth 0.5]
//! organic-mediation bootstrap (--data d.csv | --spec s.json --n N) --bootstrap B [--alpha A --seed S]
//! organic-mediation oracle    --spec s.json --n N --seed S
//! ```
//!
//! Errors print one line `error[<code>]: <Kind>: <detail>` on stderr and exit
//! with the code of [`Error::exit_code`].

mod binning;
mod io;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use binning::Binning;
pub use io::{read_csv, read_csv_from, write_csv, write_csv_to};

use crate::bootstrap::{bootstrap_with, BootstrapConfig, BootstrapSummary, Estimator};
use crate::discrete::{self, DiscreteOptions};
use crate::error::{Error, Result};
use crate::json;
use crate::model::{Dataset, EffectEstimates, EstimandValues, FeatureSpec, OutcomeModelFit, ShiftModelFit};
use crate::parametric::{self, FitOptions, ShiftMode};
use crate::scm_sim::{self, ClosedForm, ScmSpec};

#[derive(Debug, Parser)]
#[command(
    name = "organic-mediation",
    version,
    about = "Organic direct and indirect effects with post-treatment confounders"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw an observed dataset from a structural model and write it as CSV.
    Simulate(SimulateArgs),
    /// Estimate E(Y0), E(Y1), E(Y1^I) and the organic effects.
    Estimate(EstimateArgs),
    /// Run the exact discrete engine.
    Identify(EstimateArgs),
    /// Estimate with bootstrap standard errors and percentile intervals.
    Bootstrap(EstimateArgs),
    /// Monte Carlo ground truth from counterfactual draws.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Observed data as CSV.
    #[arg(long, conflicts_with = "spec")]
    data: Option<PathBuf>,
    /// Generator spec; the data are simulated with `--n` and `--seed`.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Seed for the bootstrap and, with `--spec`, for the simulation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Outcome-model features, e.g. `1,m,l1,c1,m*l1`.
    #[arg(long)]
    features: Option<String>,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorChoice>,
    /// Number of bootstrap replicates.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Equal-width bins for the discrete engine, e.g. `c=4,l=3,m=2`.
    #[arg(long)]
    bins: Option<String>,
    /// Laplace pseudo-count for the discrete engine's conditional tables.
    #[arg(long)]
    smooth: Option<f64>,
    /// Fail on rank-deficient regressions.
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum, default_value_t = ShiftModeArg::Joint)]
    shift_mode: ShiftModeArg,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    Parametric,
    Discrete,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ShiftModeArg {
    Joint,
    Stratified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Data(PathBuf),
    Generator { spec: PathBuf, n: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSettings {
    pub b: usize,
    pub alpha: f64,
    pub seed: u64,
}

/// Validated settings of one estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Input,
    pub features: Option<FeatureSpec>,
    pub estimator: EstimatorChoice,
    pub fit: FitOptions,
    pub bootstrap: Option<BootstrapSettings>,
    pub binning: Option<Binning>,
    pub smoothing: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    fn from_args(args: EstimateArgs, default_estimator: EstimatorChoice, require_bootstrap: bool) -> Result<Self> {
        let input = match (args.data, args.spec) {
            (Some(path), None) => {
                if args.n.is_some() {
                    return Err(Error::InvalidArgument("--n only applies together with --spec".into()));
                }
                Input::Data(path)
            }
            (None, Some(spec)) => Input::Generator {
                spec,
                n: args
                    .n
                    .ok_or_else(|| Error::InvalidArgument("--spec input needs --n".into()))?,
                seed: args.seed,
            },
            _ => {
                return Err(Error::InvalidArgument(
                    "exactly one of --data or --spec is required".into(),
                ))
            }
        };
        let b = match (args.bootstrap, require_bootstrap) {
            (Some(b), _) => Some(b),
            (None, true) => Some(1000),
            (None, false) => None,
        };
        if let Some(b) = b {
            if b < 2 {
                return Err(Error::InvalidArgument(format!("--bootstrap must be at least 2, got {b}")));
            }
        }
        if !(args.alpha > 0.0 && args.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "--alpha must lie in (0, 1), got {}",
                args.alpha
            )));
        }
        if let Some(s) = args.smooth {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidArgument(format!("--smooth must be positive, got {s}")));
            }
        }
        Ok(RunConfig {
            input,
            features: args.features.as_deref().map(FeatureSpec::parse).transpose()?,
            estimator: args.estimator.unwrap_or(default_estimator),
            fit: FitOptions {
                strict: args.strict,
                shift_mode: match args.shift_mode {
                    ShiftModeArg::Joint => ShiftMode::Joint,
                    ShiftModeArg::Stratified => ShiftMode::Stratified,
                },
            },
            bootstrap: b.map(|b| BootstrapSettings {
                b,
                alpha: args.alpha,
                seed: args.seed,
            }),
            binning: args.bins.as_deref().map(Binning::parse).transpose()?,
            smoothing: args.smooth,
            out: args.out,
            format: args.format,
        })
    }
}

/// Runs the CLI with `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            let _ = writeln!(stderr, "error[{}]: {line}", e.exit_code());
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match command {
        Command::Simulate(args) => {
            let spec = load_spec(&args.spec)?;
            let ds = scm_sim::simulate_observed(&spec, args.n, args.seed)?;
            match &args.out {
                Some(path) => write_csv(&ds, path),
                None => write_csv_to(&ds, stdout),
            }
        }
        Command::Estimate(args) => {
            let cfg = RunConfig::from_args(args, EstimatorChoice::Parametric, false)?;
            run_estimate(&cfg, stdout, stderr)
        }
        Command::Identify(args) => {
            let cfg = RunConfig::from_args(args, EstimatorChoice::Discrete, false)?;
            run_estimate(&cfg, stdout, stderr)
        }
        Command::Bootstrap(args) => {
            let cfg = RunConfig::from_args(args, EstimatorChoice::Parametric, true)?;
            run_estimate(&cfg, stdout, stderr)
        }
        Command::Oracle(args) => {
            let spec = load_spec(&args.spec)?;
            let oracle = scm_sim::oracle_effects(&spec, args.n, args.seed)?;
            let (closed_form, closed_form_status) = match scm_sim::closed_form_effects(&spec)? {
                ClosedForm::Exact(e) => (Some(e), "exact".to_string()),
                ClosedForm::Unsupported(why) => (None, format!("unsupported: {why}")),
            };
            let out = OracleOutput {
                n: args.n,
                seed: args.seed,
                effects: oracle.effects,
                se: oracle.se,
                closed_form,
                closed_form_status,
            };
            let text = match args.format {
                Format::Json => json::to_string_pretty(&out)? + "\n",
                Format::Table => oracle_table(&out),
            };
            emit(&text, args.out.as_deref(), stdout)
        }
    }
}

fn load_spec(path: &Path) -> Result<ScmSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScmSpec::from_json(&text)
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

#[derive(Debug, Serialize)]
struct OracleOutput {
    n: usize,
    seed: u64,
    #[serde(flatten)]
    effects: EffectEstimates,
    se: EstimandValues,
    closed_form: Option<EffectEstimates>,
    closed_form_status: String,
}

#[derive(Debug, Serialize)]
struct ModelDetails {
    features: Vec<String>,
    shift_model: ShiftModelFit,
    outcome_model: OutcomeModelFit,
    #[serde(serialize_with = "json::f64_17")]
    variance_ratio: f64,
}

#[derive(Debug, Serialize)]
struct EstimateOutput {
    estimator: &'static str,
    n: usize,
    k: usize,
    p: usize,
    #[serde(flatten)]
    effects: EffectEstimates,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<ModelDetails>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bins: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "opt_f64_17")]
    smoothing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<BootstrapSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    discrete: Option<Box<EstimateOutput>>,
    warnings: Vec<String>,
}

fn opt_f64_17<S: serde::Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => json::f64_17(x, s),
        None => s.serialize_none(),
    }
}

fn load_input(input: &Input) -> Result<Dataset> {
    match input {
        Input::Data(path) => read_csv(path),
        Input::Generator { spec, n, seed } => scm_sim::simulate_observed(&load_spec(spec)?, *n, *seed),
    }
}

fn run_parametric(ds: &Dataset, cfg: &RunConfig) -> Result<EstimateOutput> {
    let spec = cfg
        .features
        .clone()
        .unwrap_or_else(|| FeatureSpec::default_for(ds.k(), ds.p()));
    let est = parametric::estimate_effects_with(ds, &spec, &cfg.fit)?;
    let bootstrap = match cfg.bootstrap {
        Some(b) => Some(bootstrap_with(
            ds,
            &Estimator::Parametric {
                spec: spec.clone(),
                options: cfg.fit,
            },
            &BootstrapConfig::new(b.b, b.alpha, b.seed),
        )?),
        None => None,
    };
    Ok(EstimateOutput {
        estimator: "parametric",
        n: ds.len(),
        k: ds.k(),
        p: ds.p(),
        effects: est.effects,
        model: Some(ModelDetails {
            features: spec.labels(),
            shift_model: est.shift,
            outcome_model: est.outcome,
            variance_ratio: est.variance_ratio,
        }),
        bins: None,
        smoothing: None,
        bootstrap,
        discrete: None,
        warnings: est.warnings,
    })
}

fn run_discrete(ds: &Dataset, cfg: &RunConfig) -> Result<EstimateOutput> {
    let binned = match &cfg.binning {
        Some(b) => b.apply(ds)?,
        None => ds.clone(),
    };
    let options = DiscreteOptions {
        smoothing: cfg.smoothing,
    };
    let effects = discrete::identify_effects_with(&binned, &options)?;
    let bootstrap = match cfg.bootstrap {
        Some(b) => Some(bootstrap_with(
            &binned,
            &Estimator::Discrete(options),
            &BootstrapConfig::new(b.b, b.alpha, b.seed),
        )?),
        None => None,
    };
    let mut warnings = Vec::new();
    if cfg.binning.is_some() {
        warnings.push("binned data: the exact engine estimates the functional of the discretized variables".into());
    }
    Ok(EstimateOutput {
        estimator: "discrete",
        n: ds.len(),
        k: ds.k(),
        p: ds.p(),
        effects,
        model: None,
        bins: cfg.binning.as_ref().map(|_| "equal-width, midpoint labels".to_string()),
        smoothing: cfg.smoothing,
        bootstrap,
        discrete: None,
        warnings,
    })
}

fn run_estimate(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let ds = load_input(&cfg.input)?;
    let out = match cfg.estimator {
        EstimatorChoice::Parametric => run_parametric(&ds, cfg)?,
        EstimatorChoice::Discrete => run_discrete(&ds, cfg)?,
        EstimatorChoice::Both => {
            let mut out = run_parametric(&ds, cfg)?;
            out.discrete = Some(Box::new(run_discrete(&ds, cfg)?));
            out
        }
    };
    for w in out.warnings.iter().chain(out.discrete.iter().flat_map(|d| d.warnings.iter())) {
        let _ = writeln!(stderr, "warning: {w}");
    }
    let text = match cfg.format {
        Format::Json => json::to_string_pretty(&out)? + "\n",
        Format::Table => estimate_table(&out),
    };
    emit(&text, cfg.out.as_deref(), stdout)
}

fn fmt_num(v: f64) -> String {
    format!("{v:>14.6}")
}

fn effects_rows(buf: &mut String, effects: &EffectEstimates, boot: Option<&BootstrapSummary>) {
    match boot {
        Some(b) => {
            let level = 100.0 * (1.0 - b.alpha);
            let _ = writeln!(
                buf,
                "{:<18}{:>14}{:>14}{:>14}{:>14}",
                "estimand",
                "estimate",
                "se",
                "lower",
                format!("upper ({level:.0}%)")
            );
            let (se, lo, hi) = (b.se.to_array(), b.ci_lower.to_array(), b.ci_upper.to_array());
            for (j, (name, v)) in EstimandValues::NAMES
                .iter()
                .zip(effects.values().to_array())
                .enumerate()
            {
                let _ = writeln!(
                    buf,
                    "{name:<18}{}{}{}{}",
                    fmt_num(v),
                    fmt_num(se[j]),
                    fmt_num(lo[j]),
                    fmt_num(hi[j])
                );
            }
            let _ = writeln!(buf, "replicates: {} (failed: {}), seed {}", b.b, b.failures, b.seed);
        }
        None => {
            let _ = writeln!(buf, "{:<18}{:>14}", "estimand", "estimate");
            for (name, v) in EstimandValues::NAMES.iter().zip(effects.values().to_array()) {
                let _ = writeln!(buf, "{name:<18}{}", fmt_num(v));
            }
        }
    }
}

fn estimate_table(out: &EstimateOutput) -> String {
    let mut buf = String::new();
    let _ = writeln!(buf, "estimator: {} (n={}, k={}, p={})", out.estimator, out.n, out.k, out.p);
    effects_rows(&mut buf, &out.effects, out.bootstrap.as_ref());
    if let Some(model) = &out.model {
        let _ = writeln!(buf, "outcome features: {}", model.features.join(","));
        let _ = writeln!(buf, "mediator residual variance ratio (treated/control): {:.4}", model.variance_ratio);
    }
    if let Some(d) = &out.discrete {
        let _ = writeln!(buf);
        buf.push_str(&estimate_table(d));
    }
    buf
}

fn oracle_table(out: &OracleOutput) -> String {
    let mut buf = String::new();
    let _ = writeln!(buf, "oracle: n={}, seed={}", out.n, out.seed);
    let _ = writeln!(buf, "{:<18}{:>14}{:>14}{:>14}", "estimand", "monte carlo", "mc se", "closed form");
    let closed = out.closed_form.map(|e| e.values().to_array());
    for (j, (name, v)) in EstimandValues::NAMES
        .iter()
        .zip(out.effects.values().to_array())
        .enumerate()
    {
        let cf = closed.map_or(format!("{:>14}", "-"), |c| fmt_num(c[j]));
        let _ = writeln!(buf, "{name:<18}{}{}{cf}", fmt_num(v), fmt_num(out.se.to_array()[j]));
    }
    let _ = writeln!(buf, "closed form: {}", out.closed_form_status);
    buf
}
