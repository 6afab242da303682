//! Resolved run descriptions. Every command first builds a [`RunManifest`];
//! the result is a pure function of it, which is what makes replay exact.

use std::time::{SystemTime, UNIX_EPOCH};

use copula_ci::copula::CorrelationMatrix;
use copula_ci::engine::{BootstrapConfig, CombinerSource};
use copula_ci::epi::{PrevAdjustRequest, ProbInterval};
use copula_ci::validation::CoverageScenario;
use serde::{Deserialize, Serialize};

use crate::args::MarginalInput;

pub const TOOL: &str = "copula-ci";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch, recorded only on request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub run: Run,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Run {
    #[serde(rename_all = "camelCase")]
    Combine {
        marginals: Vec<MarginalInput>,
        sigma: CorrelationMatrix,
        combiner: CombinerSource,
        config: BootstrapConfig,
    },
    AdjustPrev {
        request: PrevAdjustRequest,
    },
    #[serde(rename_all = "camelCase")]
    Sweep {
        request: PrevAdjustRequest,
        rho_from: f64,
        rho_to: f64,
        steps: usize,
    },
    #[serde(rename_all = "camelCase")]
    Scatter {
        sens_ci: ProbInterval,
        spec_ci: ProbInterval,
        rho: f64,
        m: usize,
        seed: u64,
    },
    Coverage {
        scenario: CoverageScenario,
        seed: u64,
    },
}

impl RunManifest {
    pub fn new(run: Run, timestamp: bool) -> Self {
        let timestamp = timestamp.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()));
        Self {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            timestamp,
            run,
        }
    }
}
