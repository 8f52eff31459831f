use rand::Rng;
use rayon::prelude::*;

use super::{ChainState, FitModel};
use crate::error::Result;
use crate::geometry::sample_uniform;
use crate::model::{covariate_offset, link_f};
use crate::rng::{stream, Stage, StreamRng};
use crate::simulate::poisson_count;
use crate::Location;

/// Redraws every `ytilde_l` and `z_l` by thinning a rate-`lambda*_l` process
/// on the whole domain: candidates outside cell `l` become `z_l`, candidates
/// inside are kept in `ytilde_l` with probability `1 - F(eta_l)`.
pub fn update_tilde_z(state: &mut ChainState, model: &FitModel, seed: u64) -> Result<()> {
    let it = state.iteration + 1;
    tilde_z_with(state, model, |l| stream(seed, it, Stage::TildeZ, l as u64))
}

pub(crate) fn tilde_z_with(
    state: &mut ChainState,
    model: &FitModel,
    rng_for: impl Fn(usize) -> StreamRng + Sync,
) -> Result<()> {
    let params = &mut state.params;
    let partition = &params.partition;
    let lambda = &params.lambda_star;
    let cov = params.covariates.as_deref();
    let alpha = &params.alpha;
    let results: Vec<Result<(Vec<Location>, Vec<Location>)>> = params
        .gp
        .par_iter_mut()
        .enumerate()
        .map(|(l, gp)| {
            let mut rng = rng_for(l);
            let k = poisson_count(lambda[l] * model.area, &mut rng)?;
            let cand = sample_uniform(&model.domain, k, &mut rng);
            let (inside, z): (Vec<Location>, Vec<Location>) = cand.into_iter().partition(|s| partition.assign(s) == l);
            let beta = gp.reveal(&inside, &mut rng)?;
            let mut ytilde = Vec::new();
            for (s, b) in inside.into_iter().zip(beta) {
                let f = link_f(b + covariate_offset(cov, alpha, &s)?);
                if rng.random::<f64>() >= f {
                    ytilde.push(s);
                }
            }
            Ok((ytilde, z))
        })
        .collect();
    for (l, r) in results.into_iter().enumerate() {
        let (yt, z) = r?;
        state.points.ytilde[l] = yt;
        state.points.z[l] = z;
    }
    Ok(())
}
