use faer::Mat;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{BetaSweep, ChainState, FitModel};
use crate::error::{Error, Result};
use crate::linalg::factor_exact;
use crate::rng::{stream, Stage};

/// Gaussian conditional of the coefficients in `r = W alpha + e`,
/// `e ~ N(0, I)`, `alpha ~ N(0, prior_var I)`: returns the mean and the
/// lower Cholesky factor of the posterior precision.
pub fn alpha_conditional(rows: &[Vec<f64>], residuals: &[f64], prior_var: f64) -> Result<(Vec<f64>, Mat<f64>)> {
    let p = rows.first().map_or(0, Vec::len);
    let mut prec = Mat::<f64>::zeros(p, p);
    let mut rhs = Mat::<f64>::zeros(p, 1);
    for (w, r) in rows.iter().zip(residuals) {
        for a in 0..p {
            rhs[(a, 0)] += w[a] * r;
            for b in 0..=a {
                prec[(a, b)] += w[a] * w[b];
            }
        }
    }
    for a in 0..p {
        prec[(a, a)] += 1.0 / prior_var;
    }
    let l = factor_exact(prec.as_ref()).map_err(|e| Error::SingularDesign(e.to_string()))?;
    let mut mean = rhs;
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l.as_ref(), mean.as_mut(), faer::Par::Seq);
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(
        l.as_ref().transpose(),
        mean.as_mut(),
        faer::Par::Seq,
    );
    Ok(((0..p).map(|i| mean[(i, 0)]).collect(), l))
}

/// Draws the shared covariate coefficients given the augmentation variables
/// of the preceding field update.
pub fn update_alpha(state: &mut ChainState, model: &FitModel, sweep: &BetaSweep, seed: u64) -> Result<()> {
    let Some(cov) = state.params.covariates.clone() else {
        return Ok(());
    };
    let it = state.iteration + 1;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut resid = Vec::new();
    for (l, locs) in sweep.locs.iter().enumerate() {
        let values = state.params.gp[l].anchor_values();
        for (i, s) in locs.iter().enumerate() {
            rows.push(cov.eval(s)?);
            resid.push(sweep.latent[l][i] - values[i]);
        }
    }
    let p = cov.dim();
    let (mean, l) = if rows.is_empty() {
        let sd = model.priors.alpha_var.sqrt();
        let l = Mat::from_fn(p, p, |i, j| if i == j { 1.0 / sd } else { 0.0 });
        (vec![0.0; p], l)
    } else {
        alpha_conditional(&rows, &resid, model.priors.alpha_var)?
    };
    let mut rng = stream(seed, it, Stage::Alpha, 0);
    let mut z = Mat::from_fn(p, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(l.as_ref().transpose(), z.as_mut(), faer::Par::Seq);
    state.params.alpha = (0..p).map(|i| mean[i] + z[(i, 0)]).collect();
    Ok(())
}
