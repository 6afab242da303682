//! Command-line definitions and parsers for the compact value syntaxes.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use copula_ci::copula::CorrelationMatrix;
use copula_ci::dist::FamilyTag;
use copula_ci::engine::{MethodTag, DEFAULT_DRAWS, DEFAULT_LEVEL};
use copula_ci::fit::QuantileConstraint;
use serde::{Deserialize, Serialize};

const EXPRESSION_HELP: &str = "\
Expressions use + - * / ^ (right associative), unary minus, parentheses, \
numbers and the functions log, exp, sqrt, min, max. Precedence from tightest: \
^, unary -, * /, + -. So -2^2 = -4 and 2^3^2 = 512. Variables bind to the \
--dist marginals in order of first appearance unless --vars lists them.";

const SCENARIO_HELP: &str = "\
The scenario file is TOML:

    name = \"two proportions\"     # optional
    true_params = [0.035, 0.045]  # true probabilities, one per parameter
    sample_sizes = [2000, 1500]   # binomial experiment size per parameter
    combiner = \"product\"          # built-in name, or instead:
    # expression = \"x1*x2\"
    # true_combined = 0.001575    # optional check against the combiner
    # sigma = [[1, 0], [0, 1]]    # correlation assumed by the method
    ci_level = 0.95               # level of the simulated exact intervals
    level = 0.95                  # level of the combined interval
    method = \"percentile\"         # or \"hdi\"
    n = 100000                    # bootstrap draws per trial
    trials = 1000

Each trial draws binomial successes at the true values, forms Clopper-Pearson \
intervals, fits beta marginals to them and checks whether the combined \
interval contains the combiner at the true values.";

#[derive(Debug, Parser)]
#[command(
    name = "copula-ci",
    version,
    about = "Confidence intervals for functions of several estimated parameters"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// More log output on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Combine marginals fitted to confidence intervals through a function.
    #[command(after_long_help = EXPRESSION_HELP)]
    Combine(CombineArgs),
    /// Adjust an apparent prevalence for test sensitivity and specificity.
    AdjustPrev(AdjustArgs),
    /// Adjusted-prevalence interval over a grid of sensitivity/specificity
    /// correlations, as CSV `rho,low,upp,width`.
    Sweep(SweepArgs),
    /// Joint sensitivity/specificity draws as CSV `sens,spec`.
    Scatter(ScatterArgs),
    /// Monte-Carlo coverage of the combined interval for a scenario file.
    #[command(after_long_help = SCENARIO_HELP)]
    Coverage(CoverageArgs),
    /// Re-run the manifest embedded in a JSON result.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Bootstrap draws.
    #[arg(long, default_value_t = DEFAULT_DRAWS, value_parser = parse_count)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "percentile", value_parser = parse_method)]
    pub method: MethodTag,
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    pub level: f64,
    /// Record the wall-clock time (seconds since the Unix epoch) in the manifest.
    #[arg(long)]
    pub timestamp: bool,
}

#[derive(Debug, Args)]
pub struct EstimateOutput {
    /// Write the joint input draws and combined values to this CSV file.
    #[arg(long, value_name = "PATH")]
    pub boot_vals: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub out: OutFormat,
}

#[derive(Debug, Args)]
pub struct CombineArgs {
    /// Marginal as family:qLow:qUpp[:alphaLow:alphaUpp], e.g. beta:0.027:0.05.
    /// Families: beta, normal, gamma, exponential. Levels default to 0.025:0.975.
    #[arg(long = "dist", required = true, value_name = "SPEC", value_parser = parse_marginal)]
    pub dists: Vec<MarginalInput>,
    /// Combination function as an expression.
    #[arg(long, conflicts_with = "combiner", required_unless_present = "combiner")]
    pub expr: Option<String>,
    /// Built-in combination function: product, sum, identity, roganGladen.
    #[arg(long)]
    pub combiner: Option<String>,
    /// Expression variables in marginal order, comma separated.
    #[arg(long, requires = "expr", value_delimiter = ',')]
    pub vars: Option<Vec<String>>,
    /// Correlation matrix, rows separated by `;`, e.g. "1,0.5;0.5,1".
    #[arg(long, value_parser = parse_sigma)]
    pub sigma: Option<SigmaRows>,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub output: EstimateOutput,
}

#[derive(Debug, Args)]
pub struct PrevalenceArgs {
    /// 95% interval of the apparent prevalence, as low,upp.
    #[arg(long, value_parser = parse_pair)]
    pub prev_ci: (f64, f64),
    /// 95% interval of the sensitivity.
    #[arg(long, value_parser = parse_pair)]
    pub sens_ci: (f64, f64),
    /// 95% interval of the specificity.
    #[arg(long, value_parser = parse_pair)]
    pub spec_ci: (f64, f64),
    /// Point estimate of the apparent prevalence.
    #[arg(long, requires_all = ["sens", "spec"])]
    pub prev: Option<f64>,
    #[arg(long, requires_all = ["prev", "spec"])]
    pub sens: Option<f64>,
    #[arg(long, requires_all = ["prev", "sens"])]
    pub spec: Option<f64>,
    /// Full 3x3 correlation matrix in the order prevalence, sensitivity, specificity.
    #[arg(long, value_parser = parse_sigma)]
    pub sigma: Option<SigmaRows>,
}

#[derive(Debug, Args)]
pub struct AdjustArgs {
    #[command(flatten)]
    pub inputs: PrevalenceArgs,
    /// Correlation between sensitivity and specificity; the prevalence stays independent.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "sigma")]
    pub rho_sens_spec: Option<f64>,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub output: EstimateOutput,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub inputs: PrevalenceArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub rho_from: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub rho_to: f64,
    /// Grid intervals; the sweep has steps + 1 rows.
    #[arg(long)]
    pub steps: usize,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub out: OutFormat,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[arg(long, value_parser = parse_pair)]
    pub sens_ci: (f64, f64),
    #[arg(long, value_parser = parse_pair)]
    pub spec_ci: (f64, f64),
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub rho: f64,
    /// Number of draws.
    #[arg(long, default_value_t = 10_000)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    pub out: OutFormat,
    #[arg(long)]
    pub timestamp: bool,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    /// Scenario file (TOML, see below).
    #[arg(long, value_name = "PATH")]
    pub scenario: PathBuf,
    /// Override the scenario's trial count.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub out: OutFormat,
    #[arg(long)]
    pub timestamp: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// JSON output of an earlier run, or a bare manifest.
    pub file: PathBuf,
    /// Also write bootstrap values for commands that produce them.
    #[arg(long, value_name = "PATH")]
    pub boot_vals: Option<PathBuf>,
}

/// A marginal as given on the command line: family plus the interval it is
/// fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MarginalInput {
    pub family: FamilyTag,
    #[serde(flatten)]
    pub constraint: QuantileConstraint,
}

fn number(text: &str, what: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .with_context(|| format!("{what} `{text}` is not a number"))?;
    if !v.is_finite() {
        bail!("{what} `{text}` is not finite");
    }
    Ok(v)
}

pub fn parse_marginal(text: &str) -> Result<MarginalInput> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 && parts.len() != 5 {
        bail!("expected family:qLow:qUpp[:alphaLow:alphaUpp], got `{text}`");
    }
    let family: FamilyTag = parts[0].trim().parse()?;
    let (q_low, q_upp) = (number(parts[1], "qLow")?, number(parts[2], "qUpp")?);
    let constraint = if parts.len() == 5 {
        QuantileConstraint::with_levels(
            q_low,
            q_upp,
            number(parts[3], "alphaLow")?,
            number(parts[4], "alphaUpp")?,
        )?
    } else {
        QuantileConstraint::new(q_low, q_upp)?
    };
    Ok(MarginalInput { family, constraint })
}

/// Correlation matrix rows as typed; validated when the run is resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaRows(pub Vec<Vec<f64>>);

impl SigmaRows {
    pub fn matrix(&self) -> Result<CorrelationMatrix> {
        CorrelationMatrix::new(&self.0).context("--sigma")
    }
}

pub fn parse_sigma(text: &str) -> Result<SigmaRows> {
    let rows = text
        .split(';')
        .enumerate()
        .map(|(i, row)| {
            row.split(',')
                .map(|v| number(v, &format!("entry in row {}", i + 1)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SigmaRows(rows))
}

pub fn parse_pair(text: &str) -> Result<(f64, f64)> {
    match text.split_once(',') {
        Some((a, b)) => Ok((number(a, "lower limit")?, number(b, "upper limit")?)),
        None => bail!("expected low,upp, got `{text}`"),
    }
}

/// Accepts plain integers and exact scientific forms such as `1e6`.
pub fn parse_count(text: &str) -> Result<usize> {
    if let Ok(v) = text.parse::<usize>() {
        return Ok(v);
    }
    let v = number(text, "count")?;
    if v < 0.0 || v.fract() != 0.0 || v > 1e15 {
        bail!("`{text}` is not a whole number");
    }
    Ok(v as usize)
}

pub fn parse_method(text: &str) -> Result<MethodTag> {
    Ok(text.parse()?)
}
