use rand_distr::{Distribution, Gamma};

use super::{ChainState, FitModel};
use crate::error::{Error, Result};
use crate::model::lambda_star_conditional_params;
use crate::rng::{stream, Stage};

/// Draws each `lambda*_l` from its Gamma full conditional.
pub fn update_lambda_star(state: &mut ChainState, model: &FitModel, seed: u64) -> Result<()> {
    let it = state.iteration + 1;
    for l in 0..state.params.n_regions() {
        let (shape, rate) = lambda_star_conditional_params(&state.points, &model.priors, model.area, l);
        let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut rng = stream(seed, it, Stage::LambdaStar, l as u64);
        state.params.lambda_star[l] = g.sample(&mut rng);
    }
    Ok(())
}
