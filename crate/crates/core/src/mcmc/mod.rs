//! Metropolis-within-Gibbs sampler for the augmented model.
//!
//! One sweep updates, in order: the thinned and outside-cell latent points,
//! the generators jointly with all point labels, the field values at the
//! anchor points, `lambda*`, the scale `phi` (when sampled) and the covariate
//! coefficients (when present).

mod alpha;
mod beta;
pub mod chain;
mod lambda;
mod partition;
mod theta;
mod tilde_z;
pub mod truncnorm;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::covariates::CovariateRaster;
use crate::error::{Error, Result};
use crate::model::{MarkedPointSet, ParamState, PriorConfig};
use crate::{Location, SpatialDomain};

pub use alpha::{alpha_conditional, update_alpha};
pub use beta::{update_beta_anchors, BetaSweep};
pub use chain::{initial_state, run_chain, sweep, ChainRun, Checkpoint, RunSettings, TraceRecord, CHECKPOINT_FORMAT};
pub use lambda::update_lambda_star;
pub use partition::{
    allocation_prob, evaluate_move, neighbor_set_probability, propose_generators, update_partition_block,
    PartitionMove, PartitionProposal,
};
pub use theta::{theta_log_acceptance, update_theta};
pub use tilde_z::update_tilde_z;

/// Proposal settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    /// Small disk radius for generator moves.
    pub radius: f64,
    /// Large radius as a multiple of the small one.
    pub radius_multiplier: f64,
    /// Probability of the small disk.
    pub p_small: f64,
    /// Number of generators moved together (the selected one included).
    pub neighbors: usize,
    /// Standard deviation of the random walk on `log phi`.
    pub phi_rw_sd: f64,
}

impl Tuning {
    /// Defaults for a domain of area `area` with `n_regions` regions.
    pub fn default_for(area: f64, n_regions: usize) -> Self {
        Tuning {
            radius: 0.025 * area.sqrt(),
            radius_multiplier: 2.0,
            p_small: 0.95,
            neighbors: default_neighbors(n_regions),
            phi_rw_sd: 0.2,
        }
    }

    pub fn validate(&self, n_regions: usize) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::config("tuning.radius", "must be positive"));
        }
        if !(self.radius_multiplier > 1.0 && self.radius_multiplier.is_finite()) {
            return Err(Error::config("tuning.radius_multiplier", "must exceed 1"));
        }
        if !(self.p_small > 0.0 && self.p_small < 1.0) {
            return Err(Error::config("tuning.p_small", "must lie in (0, 1)"));
        }
        if self.neighbors == 0 || self.neighbors > n_regions {
            return Err(Error::config(
                "tuning.neighbors",
                format!("must lie in 1..={n_regions}"),
            ));
        }
        if !(self.phi_rw_sd > 0.0 && self.phi_rw_sd.is_finite()) {
            return Err(Error::config("tuning.phi_rw_sd", "must be positive"));
        }
        Ok(())
    }
}

/// `ceil(ln L)`, at least 1.
pub fn default_neighbors(n_regions: usize) -> usize {
    ((n_regions as f64).ln().ceil() as usize).clamp(1, n_regions.max(1))
}

/// Fixed inputs of a fit.
#[derive(Clone, Debug)]
pub struct FitModel {
    pub domain: SpatialDomain,
    pub area: f64,
    pub observed: Vec<Location>,
    pub n_regions: usize,
    pub priors: PriorConfig,
    pub tuning: Tuning,
    pub covariates: Option<Arc<CovariateRaster>>,
}

impl FitModel {
    pub fn new(
        domain: SpatialDomain,
        observed: Vec<Location>,
        n_regions: usize,
        priors: PriorConfig,
        tuning: Tuning,
        covariates: Option<Arc<CovariateRaster>>,
    ) -> Result<Self> {
        priors.validate()?;
        if n_regions == 0 {
            return Err(Error::config("model.L", "need at least one region"));
        }
        tuning.validate(n_regions)?;
        let outside: Vec<&Location> = observed.iter().filter(|s| !domain.contains(s)).collect();
        if !outside.is_empty() {
            let list: Vec<String> = outside.iter().take(20).map(|s| format!("({}, {})", s.x, s.y)).collect();
            return Err(Error::Data(format!(
                "{} observed point(s) outside the domain: {}",
                outside.len(),
                list.join(", ")
            )));
        }
        if let Some(c) = &covariates {
            for s in &observed {
                c.linear_term(s, &vec![0.0; c.dim()])?;
            }
        }
        Ok(FitModel {
            area: domain.area(),
            domain,
            observed,
            n_regions,
            priors,
            tuning,
            covariates,
        })
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.as_ref().map_or(0, |c| c.dim())
    }
}

/// Full sampler state at a sweep boundary.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub points: MarkedPointSet,
    pub params: ParamState,
    /// Number of completed sweeps.
    pub iteration: u64,
}

/// Acceptance flags of one sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepFlags {
    pub partition: bool,
    /// Number of regions whose `phi` proposal was accepted.
    pub theta_accepted: u32,
}
