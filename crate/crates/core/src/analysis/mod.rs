//! Strong-error studies, rate fits and asymptotic error-law diagnostics.

mod ks;
mod limit;
mod rate;
mod source;
pub mod stats;
mod strong;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::FlowSettings;

pub use ks::{compare_distributions, kolmogorov_survival, ks_two_sample, KsResult, LimitLawReport};
pub use limit::{limit_law, normalized_error_samples, simulate_limit_sde};
pub use rate::{fit_rate, RateFit};
pub use source::{source_term_theory, source_term_variance, SourceTermEstimate, SourceTermSpec};
pub use strong::{coupled_distance, strong_error, strong_error_ladder, ErrorPoint, LadderStudy};

/// Knobs shared by the Monte Carlo studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudySettings {
    /// Fine steps per step of the finest studied grid used for references.
    pub refine_factor: usize,
    /// Batches for standard errors.
    pub batches: usize,
    pub flows: FlowSettings,
}

impl Default for StudySettings {
    fn default() -> Self {
        StudySettings {
            refine_factor: 64,
            batches: 20,
            flows: FlowSettings::default(),
        }
    }
}

impl StudySettings {
    pub fn validate(&self) -> Result<()> {
        if self.refine_factor < 2 {
            return Err(Error::invalid("refine_factor must be at least 2"));
        }
        if self.batches < 2 {
            return Err(Error::invalid(
                "at least two batches are needed for standard errors",
            ));
        }
        self.flows.validate()
    }
}
