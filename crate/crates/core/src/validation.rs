//! Monte-Carlo coverage checks.
//!
//! Each trial simulates a binomial experiment per parameter, turns the
//! outcomes into exact (Clopper-Pearson) intervals, fits beta marginals to
//! them, runs the bootstrap combination, and records whether the interval
//! contains the true combined value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{derive_seed, CorrelationMatrix};
use crate::dist::DistributionSpec;
use crate::engine::{boot_comb, BootstrapConfig, Combiner, MethodTag};
use crate::epi::fit_beta_ci;
use crate::error::{Error, Result};

/// Tolerance for a user-supplied true combined value.
pub const TRUE_VALUE_TOLERANCE: f64 = 1e-12;

/// Largest tolerated fraction of trials excluded for failed fits.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

pub const DEFAULT_TRIAL_DRAWS: usize = 100_000;
pub const DEFAULT_TRIALS: usize = 1_000;

/// Exact binomial interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, level: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n {
        return Err(Error::Domain(format!("need 0 <= k <= n and n > 0, got k={k}, n={n}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level must lie in (0, 1), got {level}")));
    }
    let tail = 0.5 * (1.0 - level);
    let (kf, nf) = (k as f64, n as f64);
    let low = if k == 0 {
        0.0
    } else {
        DistributionSpec::beta(kf, nf - kf + 1.0)?.quantile(tail)?
    };
    let upp = if k == n {
        1.0
    } else {
        DistributionSpec::beta(kf + 1.0, nf - kf)?.quantile(1.0 - tail)?
    };
    Ok((low, upp))
}

fn default_level() -> f64 {
    0.95
}

fn default_draws() -> usize {
    DEFAULT_TRIAL_DRAWS
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

/// A coverage experiment. Exactly one of `combiner` (a built-in name) and
/// `expression` must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageScenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// True parameter values, one per marginal.
    pub true_params: Vec<f64>,
    /// Binomial experiment size for each parameter.
    pub sample_sizes: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combiner: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    /// Checked against the combiner at `true_params` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_combined: Option<f64>,
    /// Correlation matrix assumed by the method; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
    /// Level of the simulated exact binomial intervals.
    #[serde(default = "default_level")]
    pub ci_level: f64,
    /// Level of the combined interval.
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub method: MethodTag,
    /// Bootstrap draws per trial.
    #[serde(default = "default_draws")]
    pub n: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

/// A scenario with its combiner, correlation matrix and true value resolved.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub scenario: CoverageScenario,
    pub combiner: Combiner,
    pub sigma: CorrelationMatrix,
    pub true_combined: f64,
}

impl CoverageScenario {
    pub fn resolve(&self) -> Result<ResolvedScenario> {
        let d = self.true_params.len();
        if d == 0 {
            return Err(Error::Config("true_params must not be empty".into()));
        }
        if self.sample_sizes.len() != d {
            return Err(Error::Dimension(format!(
                "{} sample sizes for {d} parameters",
                self.sample_sizes.len()
            )));
        }
        if let Some(p) = self.true_params.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::Config(format!(
                "true parameter {p} is not a probability in (0, 1)"
            )));
        }
        if self.sample_sizes.contains(&0) {
            return Err(Error::Config("sample sizes must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Config(format!(
                "ci_level must lie in (0, 1), got {}",
                self.ci_level
            )));
        }
        let combiner = match (&self.combiner, &self.expression) {
            (Some(name), None) => Combiner::builtin(name, d)?,
            (None, Some(text)) => Combiner::expression(text, None)?,
            _ => {
                return Err(Error::Config(
                    "exactly one of `combiner` and `expression` must be set".into(),
                ))
            }
        };
        if combiner.arity() != d {
            return Err(Error::Dimension(format!(
                "combiner takes {} inputs but {d} parameters are given",
                combiner.arity()
            )));
        }
        let sigma = match &self.sigma {
            Some(rows) => CorrelationMatrix::new(rows)?,
            None => CorrelationMatrix::identity(d),
        };
        if sigma.dim() != d {
            return Err(Error::Dimension(format!(
                "{0}x{0} correlation matrix for {d} parameters",
                sigma.dim()
            )));
        }
        let computed = combiner.eval(&self.true_params)?;
        if let Some(given) = self.true_combined {
            if (given - computed).abs() > TRUE_VALUE_TOLERANCE {
                return Err(Error::Config(format!(
                    "true_combined {given} differs from the combiner at true_params ({computed})"
                )));
            }
        }
        self.bootstrap_config(0).validate()?;
        Ok(ResolvedScenario {
            scenario: self.clone(),
            combiner,
            sigma,
            true_combined: computed,
        })
    }

    fn bootstrap_config(&self, seed: u64) -> BootstrapConfig {
        BootstrapConfig {
            n: self.n,
            seed,
            method: self.method,
            level: self.level,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverageResult {
    pub coverage: f64,
    pub mean_width: f64,
    pub mc_std_err: f64,
    pub excluded_trials: usize,
    /// Trials that produced an interval.
    pub completed_trials: usize,
}

enum TrialOutcome {
    Scored { covered: bool, width: f64 },
    Excluded(String),
}

/// Runs every trial; trial `t` uses seed `derive_seed(master_seed, t)`.
pub fn run_coverage(scenario: &CoverageScenario, master_seed: u64) -> Result<CoverageResult> {
    let resolved = scenario.resolve()?;
    let outcomes = (0..scenario.trials)
        .into_par_iter()
        .map(|t| run_trial(&resolved, derive_seed(master_seed, t as u64)))
        .collect::<Result<Vec<_>>>()?;

    let mut covered = 0usize;
    let mut width_sum = 0.0;
    let mut completed = 0usize;
    let mut excluded = 0usize;
    for (t, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            TrialOutcome::Scored { covered: c, width } => {
                completed += 1;
                covered += usize::from(c);
                width_sum += width;
            }
            TrialOutcome::Excluded(reason) => {
                log::warn!("coverage trial {t} excluded: {reason}");
                excluded += 1;
            }
        }
    }
    if excluded as f64 > MAX_EXCLUDED_FRACTION * scenario.trials as f64 || completed == 0 {
        return Err(Error::TooManyExclusions {
            excluded,
            trials: scenario.trials,
        });
    }
    let coverage = covered as f64 / completed as f64;
    Ok(CoverageResult {
        coverage,
        mean_width: width_sum / completed as f64,
        mc_std_err: (coverage * (1.0 - coverage) / completed as f64).sqrt(),
        excluded_trials: excluded,
        completed_trials: completed,
    })
}

fn run_trial(s: &ResolvedScenario, seed: u64) -> Result<TrialOutcome> {
    let sc = &s.scenario;
    let mut data_rng = ChaCha8Rng::seed_from_u64(seed);
    data_rng.set_stream(1);
    let mut marginals = Vec::with_capacity(sc.true_params.len());
    for (i, (&p, &size)) in sc.true_params.iter().zip(&sc.sample_sizes).enumerate() {
        let binomial = Binomial::new(size, p).map_err(|e| Error::Config(e.to_string()))?;
        let k = binomial.sample(&mut data_rng);
        let ci = clopper_pearson(k, size, sc.ci_level)?;
        match fit_beta_ci("simulated", ci) {
            Ok(m) => marginals.push(m),
            Err(e) => {
                return Ok(TrialOutcome::Excluded(format!(
                    "parameter {i}: {k}/{size} successes, interval {ci:?}: {e}"
                )))
            }
        }
    }
    let est = boot_comb(&marginals, &s.sigma, &s.combiner, &sc.bootstrap_config(seed), None)?.estimate;
    Ok(TrialOutcome::Scored {
        covered: est.low <= s.true_combined && s.true_combined <= est.upp,
        width: est.width(),
    })
}
