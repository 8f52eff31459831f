//! Field values at the anchor points by probit augmentation.
//!
//! With `V(s) = eta(s) + e`, `e ~ N(0, 1)`, an observed point has `V > 0` and
//! a thinned point `V <= 0`. Given `V` the anchor values are Gaussian; the
//! draw uses a prior sample corrected by a solve with `Sigma + I`, which
//! avoids forming the posterior covariance.

use faer::Mat;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::truncnorm::{normal_nonpositive, normal_positive};
use super::{ChainState, FitModel};
use crate::error::Result;
use crate::gp::covariance_lower;
use crate::linalg::{factor_exact, factor_with_jitter, CholFactor};
use crate::model::covariate_offset;
use crate::rng::{stream, Stage};
use crate::Location;

/// Augmentation variables of one sweep, kept for the covariate update.
#[derive(Clone, Debug, Default)]
pub struct BetaSweep {
    /// Per region: anchor locations (observed first, then thinned).
    pub locs: Vec<Vec<Location>>,
    /// Per region: latent normals `V`, aligned with `locs`.
    pub latent: Vec<Vec<f64>>,
}

/// Redraws the field at `y_l` and `ytilde_l` for every region and makes those
/// points the anchors (clearing the caches).
pub fn update_beta_anchors(state: &mut ChainState, _model: &FitModel, seed: u64) -> Result<BetaSweep> {
    let it = state.iteration + 1;
    let points = &state.points;
    let cov = state.params.covariates.as_deref();
    let alpha = &state.params.alpha;
    let results: Vec<Result<(Vec<Location>, Vec<f64>)>> = state
        .params
        .gp
        .par_iter_mut()
        .enumerate()
        .map(|(l, gp)| {
            let mut rng = stream(seed, it, Stage::Beta, l as u64);
            let n_obs = points.y[l].len();
            let locs: Vec<Location> = points.y[l].iter().chain(&points.ytilde[l]).copied().collect();
            let n = locs.len();
            if n == 0 {
                gp.set_anchors(Vec::new(), Vec::new())?;
                return Ok((locs, Vec::new()));
            }
            let current = gp.reveal(&locs, &mut rng)?;
            let offsets = locs
                .iter()
                .map(|s| covariate_offset(cov, alpha, s))
                .collect::<Result<Vec<f64>>>()?;
            let latent: Vec<f64> = (0..n)
                .map(|i| {
                    let m = current[i] + offsets[i];
                    if i < n_obs {
                        normal_positive(m, &mut rng)
                    } else {
                        normal_nonpositive(m, &mut rng)
                    }
                })
                .collect();

            let hyper = *gp.hyper();
            let k = covariance_lower(&locs, &hyper);
            let (lower, jitter) = factor_with_jitter(k.as_ref(), hyper.sigma2)?;
            let mut k1 = k;
            let shift = jitter * hyper.sigma2 + 1.0;
            for i in 0..n {
                k1[(i, i)] += shift;
            }
            let l1 = CholFactor::from_lower(factor_exact(k1.as_ref())?);
            let prior = CholFactor::from_lower(lower);

            let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let delta_p = prior.mul_vec(&z);
            let mut x = Mat::from_fn(n, 1, |i, _| {
                let e: f64 = rng.sample(StandardNormal);
                latent[i] - offsets[i] - hyper.mu - delta_p[i] - e
            });
            let x0 = x.clone();
            l1.solve_lower(x.as_mut());
            l1.solve_upper(x.as_mut());
            let values: Vec<f64> = (0..n).map(|i| hyper.mu + delta_p[i] + x0[(i, 0)] - x[(i, 0)]).collect();
            gp.set_anchors_factored(locs.clone(), values, prior, jitter);
            Ok((locs, latent))
        })
        .collect();
    let mut sweep = BetaSweep::default();
    for r in results {
        let (locs, latent) = r?;
        sweep.locs.push(locs);
        sweep.latent.push(latent);
    }
    Ok(sweep)
}
