//! Parametric bootstrap over copula-coupled marginals.
//!
//! [`boot_comb`] draws `n` joint samples, applies the combiner to each, and
//! summarizes the combined sample with the configured interval method.

mod combiner;
mod interval;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use self::combiner::{builtin_combiner_names, CombineFn, Combiner, CombinerSource};
pub use self::interval::{
    empirical_quantile, hdi_interval, hdi_window, interval_methods, lookup_interval_method, percentile_interval, Hdi,
    IntervalMethod, MethodTag, Percentile,
};

use crate::copula::{CopulaSampler, CorrelationMatrix, DrawMatrix, RngStream, DEFAULT_CHUNK_SIZE};
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::expr::EvalError;
use crate::fit::FittedDistribution;

/// Fewer draws than this give unstable interval endpoints.
pub const MIN_DRAWS: usize = 1_000;
pub const DEFAULT_DRAWS: usize = 1_000_000;
pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(default = "default_draws")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub method: MethodTag,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub return_boot_vals: bool,
    #[serde(default = "default_chunk_size")]
    pub chunk_size: usize,
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

fn default_level() -> f64 {
    DEFAULT_LEVEL
}

fn default_chunk_size() -> usize {
    DEFAULT_CHUNK_SIZE
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n: DEFAULT_DRAWS,
            seed: 0,
            method: MethodTag::default(),
            level: DEFAULT_LEVEL,
            return_boot_vals: false,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_DRAWS {
            return Err(Error::Config(format!("n must be at least {MIN_DRAWS}, got {}", self.n)));
        }
        interval::check_level(self.level)?;
        if self.chunk_size == 0 {
            return Err(Error::Config("chunk size must be positive".into()));
        }
        Ok(())
    }
}

/// The combined bootstrap values in draw order, optionally with the joint
/// input draws that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    pub values: Vec<f64>,
    pub input_draws: Option<DrawMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PointSource {
    /// Combiner applied to supplied marginal point estimates.
    Supplied,
    /// Median of the combined sample.
    SampleMedian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Diagnostics {
    pub fit_residuals: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fit_warnings: Vec<String>,
    pub sigma_min_eigenvalue: f64,
    pub sigma_max_eigenvalue: f64,
    /// `None` when the correlation matrix is singular.
    pub sigma_condition: Option<f64>,
    pub factor_rank: usize,
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CombinedEstimate {
    pub low: f64,
    pub upp: f64,
    pub method: MethodTag,
    pub level: f64,
    pub n: usize,
    pub point_estimate: Option<f64>,
    pub point_source: PointSource,
    pub diagnostics: Diagnostics,
}

impl CombinedEstimate {
    pub fn width(&self) -> f64 {
        self.upp - self.low
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootOutput {
    pub estimate: CombinedEstimate,
    /// Present when `return_boot_vals` was set.
    pub sample: Option<EmpiricalSample>,
}

struct DrawFailure {
    index: usize,
    inputs: Vec<f64>,
    source: EvalError,
    count: usize,
}

/// Runs the bootstrap combination.
///
/// `point_inputs`, when given, are marginal point estimates in marginal
/// order; the combiner applied to them becomes the reported point estimate.
pub fn boot_comb(
    marginals: &[FittedDistribution],
    sigma: &CorrelationMatrix,
    combiner: &Combiner,
    config: &BootstrapConfig,
    point_inputs: Option<&[f64]>,
) -> Result<BootOutput> {
    config.validate()?;
    let d = marginals.len();
    if sigma.dim() != d || combiner.arity() != d {
        return Err(Error::Dimension(format!(
            "{d} marginals, {0}x{0} correlation matrix, combiner of {1} inputs",
            sigma.dim(),
            combiner.arity()
        )));
    }
    if let Some(points) = point_inputs {
        if points.len() != d {
            return Err(Error::Dimension(format!(
                "{} point estimates for {d} marginals",
                points.len()
            )));
        }
    }
    let specs: Vec<DistributionSpec> = marginals.iter().map(|m| m.spec.clone()).collect();
    let sampler = CopulaSampler::new(&specs, sigma)?;
    let (values, input_draws) = combine_draws(&sampler, combiner, config)?;

    let mut sorted = values.clone();
    sorted.par_sort_unstable_by(f64::total_cmp);
    let (low, upp) = config.method.method().interval_sorted(&sorted, config.level);

    let (point_estimate, point_source) = match point_inputs {
        Some(points) => (combiner.eval(points)?, PointSource::Supplied),
        None => (empirical_quantile(&sorted, 0.5), PointSource::SampleMedian),
    };

    let condition = sigma.condition_number();
    let estimate = CombinedEstimate {
        low,
        upp,
        method: config.method,
        level: config.level,
        n: config.n,
        point_estimate: Some(point_estimate),
        point_source,
        diagnostics: Diagnostics {
            fit_residuals: marginals.iter().map(|m| m.residual).collect(),
            fit_warnings: marginals.iter().filter_map(|m| m.warning.clone()).collect(),
            sigma_min_eigenvalue: sigma.min_eigenvalue(),
            sigma_max_eigenvalue: sigma.max_eigenvalue(),
            sigma_condition: condition.is_finite().then_some(condition),
            factor_rank: sampler.factor().rank(),
            draws: values.len(),
        },
    };
    let sample = config
        .return_boot_vals
        .then_some(EmpiricalSample { values, input_draws });
    Ok(BootOutput { estimate, sample })
}

/// Draws and combines in parallel chunks. Each chunk writes to its own index
/// range, so the result does not depend on scheduling.
fn combine_draws(
    sampler: &CopulaSampler,
    combiner: &Combiner,
    config: &BootstrapConfig,
) -> Result<(Vec<f64>, Option<DrawMatrix>)> {
    let n = config.n;
    let d = sampler.dim();
    let cs = config.chunk_size;
    let base = RngStream::new(config.seed, 0);
    let mut values = vec![0.0; n];

    let process = |k: usize, out: &mut [f64], rows: &mut [f64]| -> Option<DrawFailure> {
        let first = k * cs;
        sampler.fill_rows(&base, first, rows);
        let mut failure: Option<DrawFailure> = None;
        for (i, (slot, row)) in out.iter_mut().zip(rows.chunks_exact(d)).enumerate() {
            match combiner.eval(row) {
                Ok(v) => *slot = v,
                Err(source) => {
                    *slot = f64::NAN;
                    match failure.as_mut() {
                        Some(f) => f.count += 1,
                        None => {
                            failure = Some(DrawFailure {
                                index: first + i,
                                inputs: row.to_vec(),
                                source,
                                count: 1,
                            })
                        }
                    }
                }
            }
        }
        failure
    };

    let (failures, draws): (Vec<Option<DrawFailure>>, Option<Vec<f64>>) = if config.return_boot_vals {
        let mut draws = vec![0.0; n * d];
        let failures = values
            .par_chunks_mut(cs)
            .zip(draws.par_chunks_mut(cs * d))
            .enumerate()
            .map(|(k, (out, rows))| process(k, out, rows))
            .collect();
        (failures, Some(draws))
    } else {
        let failures = values
            .par_chunks_mut(cs)
            .enumerate()
            .map(|(k, out)| {
                let mut rows = vec![0.0; out.len() * d];
                process(k, out, &mut rows)
            })
            .collect();
        (failures, None)
    };

    let mut failures = failures.into_iter().flatten();
    if let Some(first) = failures.next() {
        let count = first.count + failures.map(|f| f.count).sum::<usize>();
        return Err(Error::DrawFailed {
            index: first.index,
            inputs: first.inputs,
            count,
            error: first.source,
        });
    }
    Ok((values, draws.map(|data| DrawMatrix::from_vec(n, d, data))))
}
