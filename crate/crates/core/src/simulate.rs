//! Exact simulation: Poisson thinning, repulsive generators and complete
//! synthetic datasets whose true intensity can be queried afterwards.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::covariates::CovariateRaster;
use crate::error::{Error, Result};
use crate::geometry::sample_uniform;
use crate::gp::GpRegionState;
use crate::model::{link_f, repulsive_log_prior, ParamState};
use crate::rng::{stream, Stage};
use crate::{GpHyper, Location, Partition, SpatialDomain};

/// Proposal budget of the repulsive-generator rejection sampler.
pub const MAX_GENERATOR_PROPOSALS: usize = 1_000_000;

/// Draws a Poisson count with mean `mean`, allowing zero.
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<usize> {
    if mean == 0.0 {
        return Ok(0);
    }
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::InvalidArgument(format!("Poisson mean must be >= 0, got {mean}")));
    }
    let d = Poisson::new(mean).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(d.sample(rng) as usize)
}

/// Thinning with the intensity evaluated on the whole candidate batch at
/// once. `intensity` returns one value per candidate.
pub fn thinning_sample_batch<R, F>(
    domain: &SpatialDomain,
    bound: f64,
    intensity: F,
    rng: &mut R,
) -> Result<Vec<Location>>
where
    R: Rng + ?Sized,
    F: FnOnce(&[Location], &mut R) -> Result<Vec<f64>>,
{
    let k = poisson_count(bound * domain.area(), rng)?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let cand = sample_uniform(domain, k, rng);
    let vals = intensity(&cand, rng)?;
    debug_assert_eq!(vals.len(), cand.len());
    let limit = bound * (1.0 + 1e-9);
    let mut out = Vec::new();
    for (s, v) in cand.into_iter().zip(vals) {
        if !(v <= limit) || v < 0.0 {
            return Err(Error::IntensityBound {
                value: v,
                bound,
                x: s.x,
                y: s.y,
            });
        }
        if rng.random::<f64>() * bound < v {
            out.push(s);
        }
    }
    Ok(out)
}

/// Exact draw of a Poisson process with intensity `intensity <= bound`.
pub fn thinning_sample<R, F>(domain: &SpatialDomain, bound: f64, mut intensity: F, rng: &mut R) -> Result<Vec<Location>>
where
    R: Rng + ?Sized,
    F: FnMut(&Location) -> Result<f64>,
{
    thinning_sample_batch(domain, bound, |c, _| c.iter().map(&mut intensity).collect(), rng)
}

/// Exact draw of `L` generators from the repulsive prior by rejection from
/// independent uniforms.
pub fn sample_generators_repulsive<R: Rng + ?Sized>(
    domain: &SpatialDomain,
    n_regions: usize,
    eta: f64,
    nu: f64,
    rng: &mut R,
) -> Result<Partition> {
    if n_regions == 0 {
        return Err(Error::InvalidArgument("need at least one region".into()));
    }
    for _ in 0..MAX_GENERATOR_PROPOSALS {
        let g = sample_uniform(domain, n_regions, rng);
        let lp = repulsive_log_prior(&g, eta, nu);
        if rng.random::<f64>().ln() < lp {
            return Partition::new(g);
        }
    }
    Err(Error::RejectionExhausted {
        attempts: MAX_GENERATOR_PROPOSALS,
        hint: format!(
            "{n_regions} generators almost never clear the repulsion (eta={eta}, nu={nu}) on this domain; \
             lower eta, raise nu or use fewer regions"
        ),
    })
}

/// Everything needed to generate a synthetic pattern.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub domain: SpatialDomain,
    pub lambda_star: Vec<f64>,
    /// One hyperparameter set per region.
    pub hypers: Vec<GpHyper>,
    /// Fixed generators; drawn from the repulsive prior when `None`.
    pub generators: Option<Vec<Location>>,
    pub eta: f64,
    pub nu: f64,
    pub covariates: Option<Arc<CovariateRaster>>,
    pub alpha: Vec<f64>,
}

impl SimConfig {
    pub fn n_regions(&self) -> usize {
        self.lambda_star.len()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.n_regions();
        if l == 0 {
            return Err(Error::config("model.L", "need at least one region"));
        }
        if self.hypers.len() != l {
            return Err(Error::config(
                "model.phi",
                format!("expected {l} per-region values, got {}", self.hypers.len()),
            ));
        }
        if let Some(g) = &self.generators {
            if g.len() != l {
                return Err(Error::config(
                    "truth.generators",
                    format!("expected {l} generators, got {}", g.len()),
                ));
            }
        }
        if self.lambda_star.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::config("truth.lambda_star", "values must be finite and >= 0"));
        }
        for h in &self.hypers {
            h.validate().map_err(|e| Error::config("model", e.to_string()))?;
        }
        match &self.covariates {
            Some(c) if c.dim() != self.alpha.len() => Err(Error::config(
                "truth.alpha",
                format!(
                    "raster has {} covariates but {} coefficients given",
                    c.dim(),
                    self.alpha.len()
                ),
            )),
            None if !self.alpha.is_empty() => Err(Error::config(
                "truth.alpha",
                "coefficients given without a covariate raster",
            )),
            _ => Ok(()),
        }
    }
}

/// A simulated pattern together with the latent truth.
#[derive(Clone, Debug)]
pub struct SyntheticDataset {
    pub points: Vec<Location>,
    /// True parameters; each region's GP store holds every value revealed
    /// during simulation, so later queries condition on them.
    pub truth: ParamState,
    pub seed: u64,
    queries: u64,
}

impl SyntheticDataset {
    pub fn partition(&self) -> &Partition {
        &self.truth.partition
    }

    /// True intensity at `locs`, revealing the fields jointly per region
    /// where needed. Successive calls stay consistent with each other.
    pub fn true_intensity(&mut self, locs: &[Location]) -> Result<Vec<f64>> {
        self.queries += 1;
        true_intensity_with(&mut self.truth, locs, self.seed, self.queries)
    }
}

/// Intensity at `locs` for a parameter state, revealing per region.
fn true_intensity_with(params: &mut ParamState, locs: &[Location], seed: u64, tag: u64) -> Result<Vec<f64>> {
    let l_count = params.n_regions();
    let mut by_region: Vec<Vec<usize>> = vec![Vec::new(); l_count];
    for (i, s) in locs.iter().enumerate() {
        by_region[params.partition.assign(s)].push(i);
    }
    let mut out = vec![0.0; locs.len()];
    for (l, idx) in by_region.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let pts: Vec<Location> = idx.iter().map(|&i| locs[i]).collect();
        let mut rng = stream(seed, tag, Stage::Simulate, l as u64 + 1);
        let beta = params.gp[l].reveal(&pts, &mut rng)?;
        for (k, &i) in idx.iter().enumerate() {
            out[i] = params.lambda_star[l] * link_f(beta[k] + params.offset(&pts[k])?);
        }
    }
    Ok(out)
}

/// Draws generators (unless fixed) and then, region by region, an exact
/// Poisson process with intensity `lambda*_l F(beta_l + W'alpha)` on the
/// cell of region `l`.
///
/// Candidates for region `l` come from a homogeneous process of rate
/// `lambda*_l` on the whole domain; those outside the cell are dropped before
/// the field is revealed, so cell areas are never needed.
pub fn simulate_dataset(config: &SimConfig, seed: u64) -> Result<SyntheticDataset> {
    config.validate()?;
    let l_count = config.n_regions();
    let partition = match &config.generators {
        Some(g) => Partition::new(g.clone())?,
        None => {
            let mut rng = stream(seed, 0, Stage::Simulate, 0);
            sample_generators_repulsive(&config.domain, l_count, config.eta, config.nu, &mut rng)?
        }
    };
    let mut truth = ParamState {
        lambda_star: config.lambda_star.clone(),
        partition,
        gp: config.hypers.iter().map(|h| GpRegionState::new(*h)).collect(),
        alpha: config.alpha.clone(),
        covariates: config.covariates.clone(),
    };
    let mut points = Vec::new();
    for l in 0..l_count {
        let mut rng = stream(seed, 0, Stage::Simulate, l as u64 + 1);
        let lam = truth.lambda_star[l];
        let cand_n = poisson_count(lam * config.domain.area(), &mut rng)?;
        let cand: Vec<Location> = sample_uniform(&config.domain, cand_n, &mut rng)
            .into_iter()
            .filter(|s| truth.partition.assign(s) == l)
            .collect();
        let beta = truth.gp[l].reveal(&cand, &mut rng)?;
        for (s, b) in cand.iter().zip(beta) {
            let keep = link_f(b + truth.offset(s)?);
            if rng.random::<f64>() < keep {
                points.push(*s);
            }
        }
    }
    Ok(SyntheticDataset {
        points,
        truth,
        seed,
        queries: 0,
    })
}
