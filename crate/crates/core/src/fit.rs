//! Recovering marginal distributions from reported confidence intervals.
//!
//! A reported interval `(q_low, q_upp)` at levels `(alpha_low, alpha_upp)` is
//! read as two quantile constraints. Two-parameter families are solved to
//! (numerically) exact agreement; the one-parameter exponential is fitted in
//! the least-squares sense. The objective is measured on the probability
//! scale: `sqrt((F(q_low) - alpha_low)^2 + (F(q_upp) - alpha_upp)^2)`.

use serde::{Deserialize, Serialize};

use crate::dist::{DistributionSpec, FamilyTag};
use crate::error::{Error, Result};
use crate::simplex::{nelder_mead, SimplexOptions};
use crate::special::std_normal_quantile;

/// Residual above which a two-parameter fit is reported as a failure.
pub const FIT_TOLERANCE: f64 = 1e-6;
/// Residual above which a least-squares (overdetermined) fit logs a warning.
pub const LOOSE_FIT_WARNING: f64 = 1e-3;
const RESTARTS: usize = 5;
const GOOD_ENOUGH: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuantileConstraint {
    pub q_low: f64,
    pub q_upp: f64,
    pub alpha_low: f64,
    pub alpha_upp: f64,
}

impl QuantileConstraint {
    /// A two-sided 95% interval.
    pub fn new(q_low: f64, q_upp: f64) -> Result<Self> {
        Self::with_levels(q_low, q_upp, 0.025, 0.975)
    }

    pub fn with_levels(q_low: f64, q_upp: f64, alpha_low: f64, alpha_upp: f64) -> Result<Self> {
        let c = Self {
            q_low,
            q_upp,
            alpha_low,
            alpha_upp,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_low.is_finite() && self.q_upp.is_finite()) {
            return Err(Error::Constraint("interval limits must be finite".into()));
        }
        if self.q_low >= self.q_upp {
            return Err(Error::Constraint(format!(
                "qLow must be < qUpp (got {} and {})",
                self.q_low, self.q_upp
            )));
        }
        if !(self.alpha_low > 0.0 && self.alpha_low < self.alpha_upp && self.alpha_upp < 1.0) {
            return Err(Error::Constraint(format!(
                "need 0 < alphaLow < alphaUpp < 1 (got {} and {})",
                self.alpha_low, self.alpha_upp
            )));
        }
        Ok(())
    }

    /// Standard deviation a normal distribution with these quantiles would
    /// have; `(q_upp - q_low) / 3.92` for a 95% interval.
    pub fn normal_sd(&self) -> f64 {
        (self.q_upp - self.q_low) / (std_normal_quantile(self.alpha_upp) - std_normal_quantile(self.alpha_low))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedDistribution {
    pub spec: DistributionSpec,
    pub constraint: QuantileConstraint,
    /// Achieved objective value, probability scale.
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl FittedDistribution {
    /// Wraps an already-known distribution, computing its residual.
    pub fn from_spec(spec: DistributionSpec, constraint: QuantileConstraint) -> Self {
        let residual = fit_residual(&spec, &constraint);
        Self {
            spec,
            constraint,
            residual,
            warning: None,
        }
    }
}

/// Probability-scale distance between the distribution and the constraint.
pub fn fit_residual(spec: &DistributionSpec, c: &QuantileConstraint) -> f64 {
    let lo = spec.cdf_unchecked(c.q_low) - c.alpha_low;
    let hi = spec.cdf_unchecked(c.q_upp) - c.alpha_upp;
    lo.hypot(hi)
}

/// Fits `family` so that its CDF passes through both constraint points.
pub fn fit_from_quantiles(family: FamilyTag, constraint: QuantileConstraint) -> Result<FittedDistribution> {
    constraint.validate()?;
    let fam = family.family();
    let support = fam.support();
    if !(support.interior_contains(constraint.q_low) && support.interior_contains(constraint.q_upp)) {
        let (lo, hi) = support.bounds();
        return Err(Error::Domain(format!(
            "interval ({}, {}) must lie strictly inside the {} support [{lo}, {hi}]",
            constraint.q_low,
            constraint.q_upp,
            fam.name()
        )));
    }

    let objective = |free: &[f64]| -> f64 {
        let params = fam.from_free(free);
        match DistributionSpec::new(family, &params) {
            Ok(spec) => fit_residual(&spec, &constraint),
            Err(_) => f64::INFINITY,
        }
    };

    let start = fam
        .closed_form_fit(&constraint)
        .unwrap_or_else(|| fam.initial_params(&constraint));
    let mut best_free = fam.to_free(&start);
    let mut best_value = objective(&best_free);

    let steps = [0.1, 0.5, 0.02, 1.0, 0.005, 0.2];
    let mut restarts = 0;
    for (attempt, &step) in steps.iter().enumerate() {
        if best_value <= GOOD_ENOUGH {
            break;
        }
        if attempt > 0 {
            restarts += 1;
        }
        let opts = SimplexOptions {
            initial_step: step,
            ..SimplexOptions::default()
        };
        let run = nelder_mead(objective, &best_free, &opts);
        let improved = run.value < best_value;
        if improved {
            best_free = run.x;
            best_value = run.value;
        }
        // A converged run that could not improve has found the optimum.
        if attempt > 0 && run.converged && !improved {
            break;
        }
        if restarts == RESTARTS {
            break;
        }
    }

    let params = fam.from_free(&best_free);
    let spec = DistributionSpec::new(family, &params)?;
    let residual = fit_residual(&spec, &constraint);
    let overdetermined = fam.param_names().len() < 2;

    if !overdetermined && (residual.is_nan() || residual > FIT_TOLERANCE) {
        return Err(Error::FitFailure {
            family: fam.name(),
            best_residual: residual,
            restarts,
        });
    }
    let warning = (overdetermined && residual > LOOSE_FIT_WARNING).then(|| {
        let msg = format!(
            "{} cannot match both quantiles; least-squares residual {residual:.3e}",
            fam.name()
        );
        log::warn!("{msg}");
        msg
    });
    Ok(FittedDistribution {
        spec,
        constraint,
        residual,
        warning,
    })
}
