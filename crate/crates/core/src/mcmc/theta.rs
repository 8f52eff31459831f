use rand::Rng;
use rand_distr::StandardNormal;

use super::{ChainState, FitModel};
use crate::error::Result;
use crate::model::{PhiPrior, PriorConfig};
use crate::rng::{stream, Stage};
use crate::GpHyper;

/// Log acceptance ratio of a move `phi -> phi_new` given the anchor log
/// densities under both values. The random walk acts on `log phi`, so the
/// ratio carries the Jacobian `phi_new / phi`.
pub fn theta_log_acceptance(priors: &PriorConfig, phi: f64, phi_new: f64, logdens: f64, logdens_new: f64) -> f64 {
    let prior_new = priors.phi_log_prior(phi_new);
    if prior_new == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    logdens_new - logdens + prior_new - priors.phi_log_prior(phi) + phi_new.ln() - phi.ln()
}

/// Random-walk update of each region's `phi`; a no-op when `phi` is fixed.
/// Returns the number of accepted regions.
pub fn update_theta(state: &mut ChainState, model: &FitModel, seed: u64) -> Result<u32> {
    if model.priors.phi_prior == PhiPrior::Fixed {
        return Ok(0);
    }
    let it = state.iteration + 1;
    let mut accepted = 0;
    for (l, gp) in state.params.gp.iter_mut().enumerate() {
        let mut rng = stream(seed, it, Stage::Theta, l as u64);
        let step: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let hyper = *gp.hyper();
        let phi_new = hyper.phi * (model.tuning.phi_rw_sd * step).exp();
        if model.priors.phi_log_prior(phi_new) == f64::NEG_INFINITY {
            continue;
        }
        let proposed = GpHyper { phi: phi_new, ..hyper };
        let (ld_new, factor, jitter) = gp.anchor_logdensity_under(&proposed)?;
        let log_ratio = theta_log_acceptance(&model.priors, hyper.phi, phi_new, gp.anchor_logdensity(), ld_new);
        if u.ln() < log_ratio {
            gp.set_hyper_factored(proposed, factor, jitter);
            accepted += 1;
        }
    }
    Ok(accepted)
}
