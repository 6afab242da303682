//! Prevalence adjustment for an imperfect diagnostic test, with dependent
//! sensitivity and specificity.

use serde::{Deserialize, Serialize};

use crate::copula::{derive_seed, CopulaSampler, CorrelationMatrix, DrawMatrix, RngStream, DEFAULT_CHUNK_SIZE};
use crate::dist::FamilyTag;
use crate::engine::{boot_comb, BootOutput, BootstrapConfig, Combiner};
use crate::error::{Error, Result};
use crate::expr::EvalError;
use crate::fit::{fit_from_quantiles, FittedDistribution, QuantileConstraint};

/// Parameter positions in the three-dimensional problem.
pub const PREV: usize = 0;
pub const SENS: usize = 1;
pub const SPEC: usize = 2;

/// True prevalence from apparent prevalence, sensitivity and specificity:
/// `(prev + spec - 1) / (sens + spec - 1)`, truncated to `[0, 1]`.
///
/// Evaluated as `(prev - fp) / (sens - fp)` with `fp = 1 - spec`, which is
/// exact for a perfect test.
pub fn rogan_gladen(prev: f64, sens: f64, spec: f64) -> Result<f64, EvalError> {
    for v in [prev, sens, spec] {
        if !(0.0..=1.0).contains(&v) {
            return Err(EvalError::Domain {
                func: "roganGladen",
                arg: v,
            });
        }
    }
    let fp = 1.0 - spec;
    let informative = sens - fp;
    if informative <= 0.0 {
        return Err(EvalError::UninformativeTest { sens, spec });
    }
    Ok(((prev - fp) / informative).clamp(0.0, 1.0))
}

/// A probability interval `(low, upp)`.
pub type ProbInterval = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PointEstimates {
    pub prev: f64,
    pub sens: f64,
    pub spec: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PrevAdjustRequest {
    pub prev_ci: ProbInterval,
    pub sens_ci: ProbInterval,
    pub spec_ci: ProbInterval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_estimates: Option<PointEstimates>,
    /// Order: prevalence, sensitivity, specificity.
    pub sigma: CorrelationMatrix,
    pub config: BootstrapConfig,
}

/// Three-dimensional correlation matrix with only the sensitivity and
/// specificity coupled.
pub fn sens_spec_sigma(rho: f64) -> Result<CorrelationMatrix> {
    check_rho(rho)?;
    Ok(CorrelationMatrix::from_pairs(3, &[(SENS, SPEC, rho)])?)
}

fn check_rho(rho: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::Domain(format!("correlation must lie in [-1, 1], got {rho}")))
    }
}

fn check_ci(name: &str, (low, upp): ProbInterval) -> Result<()> {
    if low > 0.0 && upp < 1.0 && low < upp {
        Ok(())
    } else {
        Err(Error::Constraint(format!(
            "{name} interval must satisfy 0 < low < upp < 1, got ({low}, {upp})"
        )))
    }
}

/// Beta distribution whose 2.5% and 97.5% quantiles are the interval ends.
pub fn fit_beta_ci(name: &str, ci: ProbInterval) -> Result<FittedDistribution> {
    check_ci(name, ci)?;
    fit_from_quantiles(FamilyTag::Beta, QuantileConstraint::new(ci.0, ci.1)?)
}

impl PrevAdjustRequest {
    pub fn validate(&self) -> Result<()> {
        check_ci("prevalence", self.prev_ci)?;
        check_ci("sensitivity", self.sens_ci)?;
        check_ci("specificity", self.spec_ci)?;
        if self.sigma.dim() != 3 {
            return Err(Error::Dimension(format!(
                "prevalence adjustment needs a 3x3 correlation matrix, got {0}x{0}",
                self.sigma.dim()
            )));
        }
        self.config.validate()
    }

    /// Beta marginals for prevalence, sensitivity and specificity.
    pub fn marginals(&self) -> Result<Vec<FittedDistribution>> {
        Ok(vec![
            fit_beta_ci("prevalence", self.prev_ci)?,
            fit_beta_ci("sensitivity", self.sens_ci)?,
            fit_beta_ci("specificity", self.spec_ci)?,
        ])
    }

    /// Copy with the sensitivity/specificity correlation replaced.
    pub fn with_sens_spec_rho(&self, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let mut rows = self.sigma.rows();
        rows[SENS][SPEC] = rho;
        rows[SPEC][SENS] = rho;
        Ok(Self {
            sigma: CorrelationMatrix::new(&rows)?,
            ..self.clone()
        })
    }
}

/// Bootstrap interval for the adjusted prevalence.
pub fn adjust_prevalence(req: &PrevAdjustRequest) -> Result<BootOutput> {
    req.validate()?;
    let marginals = req.marginals()?;
    let points = req.point_estimates.map(|p| [p.prev, p.sens, p.spec]);
    boot_comb(
        &marginals,
        &req.sigma,
        &Combiner::builtin("roganGladen", 3)?,
        &req.config,
        points.as_ref().map(|p| p.as_slice()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoSweepRow {
    pub rho: f64,
    pub low: f64,
    pub upp: f64,
    pub width: f64,
}

/// Evenly spaced grid from `from` to `to` with `steps` intervals
/// (`steps + 1` points).
pub fn rho_grid(from: f64, to: f64, steps: usize) -> Vec<f64> {
    if steps == 0 {
        return vec![from];
    }
    (0..=steps)
        .map(|k| {
            if k == steps {
                to
            } else {
                from + (to - from) * k as f64 / steps as f64
            }
        })
        .collect()
}

/// Re-runs the adjustment at each sensitivity/specificity correlation in
/// `grid`. Row `k` uses seed `derive_seed(config.seed, k)`, so the first row
/// matches a plain run with the base seed.
pub fn rho_sweep(req: &PrevAdjustRequest, grid: &[f64]) -> Result<Vec<RhoSweepRow>> {
    if let Some(&bad) = grid.iter().find(|r| !(-1.0..=1.0).contains(*r)) {
        return Err(Error::Domain(format!("correlation must lie in [-1, 1], got {bad}")));
    }
    grid.iter()
        .enumerate()
        .map(|(k, &rho)| {
            let mut row_req = req.with_sens_spec_rho(rho)?;
            row_req.config.seed = derive_seed(req.config.seed, k as u64);
            row_req.config.return_boot_vals = false;
            let e = adjust_prevalence(&row_req)?.estimate;
            Ok(RhoSweepRow {
                rho,
                low: e.low,
                upp: e.upp,
                width: e.width(),
            })
        })
        .collect()
}

/// `m` joint (sensitivity, specificity) draws at correlation `rho`.
pub fn scatter_draws(
    sens_ci: ProbInterval,
    spec_ci: ProbInterval,
    rho: f64,
    m: usize,
    seed: u64,
) -> Result<DrawMatrix> {
    if m == 0 {
        return Err(Error::Config("number of draws must be at least 1".into()));
    }
    check_rho(rho)?;
    let marginals = [
        fit_beta_ci("sensitivity", sens_ci)?.spec,
        fit_beta_ci("specificity", spec_ci)?.spec,
    ];
    let sigma = CorrelationMatrix::from_pairs(2, &[(0, 1, rho)])?;
    let sampler = CopulaSampler::new(&marginals, &sigma)?;
    Ok(sampler.sample(m, &mut RngStream::new(seed, 0), DEFAULT_CHUNK_SIZE))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rogan_gladen_examples() {
        let v = rogan_gladen(0.168, 238.0 / 270.0, 82.0 / 88.0).unwrap();
        assert!((v - 0.1227).abs() < 1e-4, "{v}");
        assert_eq!(rogan_gladen(0.3, 1.0, 1.0).unwrap(), 0.3);
        assert_eq!(rogan_gladen(0.05, 0.9, 0.9).unwrap(), 0.0);
        assert_eq!(rogan_gladen(0.99, 0.9, 0.9).unwrap(), 1.0);
        assert!(matches!(
            rogan_gladen(0.2, 0.5, 0.5),
            Err(EvalError::UninformativeTest { .. })
        ));
        assert!(rogan_gladen(1.2, 0.9, 0.9).is_err());
    }

    #[test]
    fn grid() {
        assert_eq!(rho_grid(0.0, -0.9, 0), vec![0.0]);
        let g = rho_grid(0.0, -0.9, 9);
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[9], -0.9);
        assert!((g[5] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn sweep_rejects_out_of_range() {
        let req = PrevAdjustRequest {
            prev_ci: (0.136, 0.204),
            sens_ci: (0.837, 0.918),
            spec_ci: (0.857, 0.975),
            point_estimates: None,
            sigma: CorrelationMatrix::identity(3),
            config: BootstrapConfig {
                n: 1_000,
                ..Default::default()
            },
        };
        assert!(matches!(rho_sweep(&req, &[0.0, 1.5]), Err(Error::Domain(_))));
    }

    #[test]
    fn scatter_validates() {
        assert!(scatter_draws((0.8, 0.9), (0.85, 0.95), 0.0, 0, 1).is_err());
        assert!(scatter_draws((0.8, 0.9), (0.85, 0.95), -1.2, 10, 1).is_err());
        assert!(scatter_draws((0.9, 0.8), (0.85, 0.95), 0.0, 10, 1).is_err());
        let m = scatter_draws((0.8, 0.9), (0.85, 0.95), -1.0, 10, 1).unwrap();
        assert_eq!((m.rows(), m.cols()), (10, 2));
    }
}
