//! Joint-distribution ("getting it right") test of the whole sampler.
//!
//! Draws of (parameters, latent points, data) from the prior predictive are
//! compared with a chain that alternates one sampler sweep with a fresh draw
//! of the data given the parameters. Both have the same stationary law, so
//! every tracked statistic must agree up to Monte Carlo error.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::stats::{batch_means_se, iid_se, mean};
use crate::error::{Error, Result};
use crate::gp::GpRegionState;
use crate::mcmc::{chain::monitor_draw, sweep, ChainState, FitModel, Tuning};
use crate::model::{link_f, MarkedPointSet, ParamState, PhiPrior, PriorConfig};
use crate::rng::{stream, Stage, StreamRng};
use crate::simulate::{poisson_count, sample_generators_repulsive};
use crate::{GpHyper, Location, SpatialDomain};

#[derive(Clone, Debug)]
pub struct GewekeConfig {
    /// Draws per arm.
    pub samples: usize,
    pub seed: u64,
    /// Sample `phi` (truncated-uniform prior) instead of fixing it.
    pub sample_phi: bool,
    pub n_regions: usize,
    /// Generators moved together by the partition update.
    pub neighbors: usize,
}

impl Default for GewekeConfig {
    fn default() -> Self {
        GewekeConfig {
            samples: 20_000,
            seed: 2024,
            sample_phi: true,
            n_regions: 2,
            neighbors: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GewekeStat {
    pub name: String,
    pub prior_mean: f64,
    pub prior_se: f64,
    pub chain_mean: f64,
    pub chain_se: f64,
    pub z: f64,
}

#[derive(Clone, Debug)]
pub struct GewekeReport {
    pub stats: Vec<GewekeStat>,
}

impl GewekeReport {
    pub fn max_abs_z(&self) -> f64 {
        self.stats.iter().map(|s| s.z.abs()).fold(0.0, f64::max)
    }
}

/// The small model used by the test: a 2x2 square with a Gamma(10, rate 2)
/// prior on `lambda*` (mean 5).
pub fn tiny_model(sample_phi: bool, n_regions: usize, neighbors: usize) -> Result<FitModel> {
    let domain = SpatialDomain::rectangle(0.0, 2.0, 0.0, 2.0)?;
    let priors = PriorConfig {
        a: 10.0,
        b: 2.0,
        phi: 0.5,
        phi_prior: if sample_phi {
            PhiPrior::TruncatedUniform { lower: 0.2, upper: 2.0 }
        } else {
            PhiPrior::Fixed
        },
        ..PriorConfig::default()
    };
    let tuning = Tuning {
        radius: 0.3,
        radius_multiplier: 2.0,
        p_small: 0.95,
        neighbors,
        phi_rw_sd: 0.4,
    };
    FitModel::new(domain, Vec::new(), n_regions, priors, tuning, None)
}

pub fn monitors() -> Vec<Location> {
    vec![
        Location::new(0.5, 0.5),
        Location::new(1.0, 1.5),
        Location::new(1.7, 0.3),
    ]
}

/// Observed points of region `l` given the parameters, by thinning.
fn draw_observed(
    params: &mut ParamState,
    model: &FitModel,
    l: usize,
    rng: &mut StreamRng,
) -> Result<(Vec<Location>, Vec<Location>, Vec<Location>)> {
    let k = poisson_count(params.lambda_star[l] * model.area, rng)?;
    let cand = crate::geometry::sample_uniform(&model.domain, k, rng);
    let (inside, outside): (Vec<Location>, Vec<Location>) =
        cand.into_iter().partition(|s| params.partition.assign(s) == l);
    let beta = params.gp[l].reveal(&inside, rng)?;
    let mut y = Vec::new();
    let mut thinned = Vec::new();
    for (s, b) in inside.into_iter().zip(beta) {
        if rng.random::<f64>() < link_f(b + params.offset(&s)?) {
            y.push(s);
        } else {
            thinned.push(s);
        }
    }
    Ok((y, thinned, outside))
}

/// Joint prior-predictive draw of parameters, latent points and data.
fn prior_draw(model: &FitModel, seed: u64, index: u64) -> Result<ChainState> {
    let mut rng = stream(seed, index, Stage::Check, 0);
    let partition = sample_generators_repulsive(
        &model.domain,
        model.n_regions,
        model.priors.eta,
        model.priors.nu,
        &mut rng,
    )?;
    let gamma = Gamma::new(model.priors.a, 1.0 / model.priors.b).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let lambda_star: Vec<f64> = (0..model.n_regions).map(|_| gamma.sample(&mut rng)).collect();
    let mut gp = Vec::new();
    for _ in 0..model.n_regions {
        let phi = match model.priors.phi_prior {
            PhiPrior::Fixed => model.priors.phi,
            PhiPrior::TruncatedUniform { lower, upper } => rng.random_range(lower..upper),
        };
        gp.push(GpRegionState::new(GpHyper {
            phi,
            ..model.priors.hyper()
        }));
    }
    let mut params = ParamState {
        lambda_star,
        partition,
        gp,
        alpha: Vec::new(),
        covariates: None,
    };
    let mut points = MarkedPointSet::empty(model.n_regions);
    for l in 0..model.n_regions {
        let mut r = stream(seed, index, Stage::Check, l as u64 + 1);
        let (y, t, z) = draw_observed(&mut params, model, l, &mut r)?;
        points.y[l] = y;
        points.ytilde[l] = t;
        points.z[l] = z;
    }
    Ok(ChainState {
        points,
        params,
        iteration: 0,
    })
}

fn statistics(state: &ChainState, mon: &[Location], seed: u64) -> Result<Vec<f64>> {
    let p = &state.params;
    let mut v = Vec::new();
    for l in 0..p.n_regions() {
        v.push(p.lambda_star[l]);
    }
    for l in 0..p.n_regions() {
        v.push(state.points.ytilde[l].len() as f64);
    }
    v.extend(monitor_draw(state, mon, seed)?);
    v.push(p.partition.generators()[0].x);
    v.push(p.gp[0].hyper().phi);
    Ok(v)
}

fn stat_names(n_regions: usize, n_mon: usize) -> Vec<String> {
    let mut names = Vec::new();
    for l in 0..n_regions {
        names.push(format!("lambda*_{}", l + 1));
    }
    for l in 0..n_regions {
        names.push(format!("|ytilde_{}|", l + 1));
    }
    for i in 0..n_mon {
        names.push(format!("beta(m{})", i + 1));
    }
    names.push("u_1.x".into());
    names.push("phi_1".into());
    names
}

/// Runs both arms and compares first and second moments.
pub fn run_geweke(cfg: &GewekeConfig) -> Result<GewekeReport> {
    let mut model = tiny_model(cfg.sample_phi, cfg.n_regions, cfg.neighbors)?;
    let mon = monitors();
    let names = stat_names(model.n_regions, mon.len());
    let k = names.len();

    let mut prior_stats: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.samples); k];
    for i in 0..cfg.samples {
        let mut s = prior_draw(&model, cfg.seed, i as u64 + 1)?;
        // distinct monitor stream per draw
        s.iteration = i as u64 + 1;
        for (j, v) in statistics(&s, &mon, cfg.seed)?.into_iter().enumerate() {
            prior_stats[j].push(v);
        }
    }

    let chain_seed = cfg.seed.wrapping_add(1);
    let mut state = prior_draw(&model, chain_seed, 0)?;
    let mut chain_stats: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.samples); k];
    for _ in 0..cfg.samples {
        model.observed = state.points.y.iter().flatten().copied().collect();
        sweep(&mut state, &model, chain_seed)?;
        for l in 0..model.n_regions {
            let mut r = stream(chain_seed, state.iteration, Stage::Check, l as u64 + 1);
            let (y, _, _) = draw_observed(&mut state.params, &model, l, &mut r)?;
            state.points.y[l] = y;
        }
        for (j, v) in statistics(&state, &mon, chain_seed)?.into_iter().enumerate() {
            chain_stats[j].push(v);
        }
    }

    let mut stats = Vec::new();
    for j in 0..k {
        for (suffix, power) in [("", 1), ("^2", 2)] {
            let a: Vec<f64> = prior_stats[j].iter().map(|v| v.powi(power)).collect();
            let b: Vec<f64> = chain_stats[j].iter().map(|v| v.powi(power)).collect();
            let (ma, sa) = (mean(&a), iid_se(&a));
            let (mb, sb) = (mean(&b), batch_means_se(&b));
            let se = (sa * sa + sb * sb).sqrt();
            let z = if se > 0.0 {
                (ma - mb) / se
            } else if ma == mb {
                0.0
            } else {
                f64::INFINITY
            };
            stats.push(GewekeStat {
                name: format!("{}{}", names[j], suffix),
                prior_mean: ma,
                prior_se: sa,
                chain_mean: mb,
                chain_se: sb,
                z,
            });
        }
    }
    Ok(GewekeReport { stats })
}
