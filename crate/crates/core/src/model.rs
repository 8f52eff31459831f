//! The augmented model: link function, intensity, priors and the tractable
//! augmented log-likelihood.
//!
//! Per region `l` the state holds the observed points `y_l` (in cell `l`),
//! the thinned points `ytilde_l` (in cell `l`, rejected with probability
//! `F(beta_l)`) and the points `z_l` of the dominating process for region `l`
//! that fall outside cell `l`. Given the three sets the likelihood has no
//! intractable integral.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::covariates::CovariateRaster;
use crate::error::{Error, Result};
use crate::gp::{GpHyper, GpRegionState};
use crate::{Location, Partition};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF.
#[inline]
pub fn link_f(t: f64) -> f64 {
    0.5 * libm::erfc(-t * std::f64::consts::FRAC_1_SQRT_2)
}

/// `log F(t)`, accurate far into the lower tail.
pub fn log_link_f(t: f64) -> f64 {
    if t > -30.0 {
        link_f(t).ln()
    } else {
        // Mills-ratio expansion; relative error below 1e-14 at t <= -30.
        let t2 = t * t;
        let series = 1.0 - 1.0 / t2 + 3.0 / (t2 * t2) - 15.0 / (t2 * t2 * t2);
        -0.5 * t2 - (-t).ln() - LN_SQRT_2PI + series.ln()
    }
}

/// `log(1 - F(t))`.
#[inline]
pub fn log_one_minus_link_f(t: f64) -> f64 {
    log_link_f(-t)
}

/// Unnormalised log density of the repulsive generator prior: the sum over
/// pairs of `log(1 - exp(-eta * d^nu))`.
pub fn repulsive_log_prior(generators: &[Location], eta: f64, nu: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..generators.len() {
        for j in 0..i {
            let d2 = generators[i].dist2(&generators[j]);
            if d2 == 0.0 {
                return f64::NEG_INFINITY;
            }
            let e = (-eta * d2.powf(0.5 * nu)).exp();
            acc += (-e).ln_1p();
        }
    }
    acc
}

/// Prior on the GP scale parameter `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PhiPrior {
    Fixed,
    TruncatedUniform { lower: f64, upper: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    /// Gamma shape of the `lambda*` prior.
    pub a: f64,
    /// Gamma rate of the `lambda*` prior.
    pub b: f64,
    pub eta: f64,
    pub nu: f64,
    pub mu: f64,
    pub sigma2: f64,
    pub gamma: f64,
    /// Starting (or fixed) value of `phi`.
    pub phi: f64,
    pub phi_prior: PhiPrior,
    /// Prior variance of each covariate coefficient.
    pub alpha_var: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            a: 0.001,
            b: 0.001,
            eta: 1.5,
            nu: 4.0,
            mu: 0.0,
            sigma2: 4.0,
            gamma: 1.9,
            phi: 0.5,
            phi_prior: PhiPrior::Fixed,
            alpha_var: 1e6,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, k: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(k, format!("must be positive and finite, got {v}")))
            }
        };
        pos(self.a, "priors.a")?;
        pos(self.b, "priors.b")?;
        pos(self.eta, "priors.eta")?;
        pos(self.nu, "priors.nu")?;
        pos(self.sigma2, "model.sigma2")?;
        pos(self.phi, "model.phi")?;
        pos(self.alpha_var, "priors.alpha_var")?;
        if !(self.gamma > 0.0 && self.gamma <= 2.0) {
            return Err(Error::config(
                "model.gamma",
                format!("must lie in (0, 2], got {}", self.gamma),
            ));
        }
        if !self.mu.is_finite() {
            return Err(Error::config("model.mu", "must be finite"));
        }
        if let PhiPrior::TruncatedUniform { lower, upper } = self.phi_prior {
            if !(lower > 0.0 && lower < upper && upper.is_finite()) {
                return Err(Error::config("model.phi_bounds", "need 0 < lower < upper < inf"));
            }
            if !(self.phi >= lower && self.phi <= upper) {
                return Err(Error::config("model.phi", "initial phi outside its prior bounds"));
            }
        }
        Ok(())
    }

    pub fn hyper(&self) -> GpHyper<f64> {
        GpHyper {
            mu: self.mu,
            sigma2: self.sigma2,
            gamma: self.gamma,
            phi: self.phi,
        }
    }

    /// Log prior density of `phi` up to a constant.
    pub fn phi_log_prior(&self, phi: f64) -> f64 {
        match self.phi_prior {
            PhiPrior::Fixed => 0.0,
            PhiPrior::TruncatedUniform { lower, upper } => {
                if phi >= lower && phi <= upper {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

/// Latent and observed points, split by region.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MarkedPointSet {
    pub y: Vec<Vec<Location>>,
    pub ytilde: Vec<Vec<Location>>,
    pub z: Vec<Vec<Location>>,
}

impl MarkedPointSet {
    pub fn empty(n_regions: usize) -> Self {
        MarkedPointSet {
            y: vec![Vec::new(); n_regions],
            ytilde: vec![Vec::new(); n_regions],
            z: vec![Vec::new(); n_regions],
        }
    }

    /// Observed points labelled by the partition.
    pub fn from_observed(observed: &[Location], partition: &Partition) -> Self {
        let mut s = Self::empty(partition.len());
        for p in observed {
            s.y[partition.assign(p)].push(*p);
        }
        s
    }

    pub fn n_regions(&self) -> usize {
        self.y.len()
    }

    /// `T_l = |y_l| + |ytilde_l| + |z_l|`.
    pub fn total(&self, l: usize) -> usize {
        self.y[l].len() + self.ytilde[l].len() + self.z[l].len()
    }

    /// Checks region consistency and, if given, that the `y` sets hold
    /// exactly the observed pattern.
    pub fn check(&self, partition: &Partition, observed: Option<&[Location]>) -> Result<()> {
        let n = partition.len();
        if self.y.len() != n || self.ytilde.len() != n || self.z.len() != n {
            return Err(Error::State(format!(
                "point sets sized for {} regions, partition has {n}",
                self.y.len()
            )));
        }
        for l in 0..n {
            if let Some(p) = self.y[l]
                .iter()
                .chain(&self.ytilde[l])
                .find(|p| partition.assign(p) != l)
            {
                return Err(Error::State(format!(
                    "point ({}, {}) listed in region {} lies in region {}",
                    p.x,
                    p.y,
                    l + 1,
                    partition.assign(p) + 1
                )));
            }
            if let Some(p) = self.z[l].iter().find(|p| partition.assign(p) == l) {
                return Err(Error::State(format!(
                    "z point ({}, {}) of region {} lies inside its own cell",
                    p.x,
                    p.y,
                    l + 1
                )));
            }
        }
        if let Some(obs) = observed {
            if !same_multiset(obs, self.y.iter().flatten()) {
                return Err(Error::State("observed pattern differs from the union of y sets".into()));
            }
        }
        Ok(())
    }
}

fn key(p: &Location) -> (u64, u64) {
    (p.x.to_bits(), p.y.to_bits())
}

fn same_multiset<'a>(a: &[Location], b: impl Iterator<Item = &'a Location>) -> bool {
    let mut ka: Vec<_> = a.iter().map(key).collect();
    let mut kb: Vec<_> = b.map(key).collect();
    ka.sort_unstable();
    kb.sort_unstable();
    ka == kb
}

/// Parameters other than the point sets.
#[derive(Clone, Debug)]
pub struct ParamState {
    pub lambda_star: Vec<f64>,
    pub partition: Partition,
    pub gp: Vec<GpRegionState<f64>>,
    /// Covariate coefficients; empty without covariates.
    pub alpha: Vec<f64>,
    pub covariates: Option<Arc<CovariateRaster>>,
}

impl ParamState {
    pub fn n_regions(&self) -> usize {
        self.lambda_star.len()
    }

    /// `W(s)' alpha`, or zero without covariates.
    #[inline]
    pub fn offset(&self, s: &Location) -> Result<f64> {
        covariate_offset(self.covariates.as_deref(), &self.alpha, s)
    }

    /// Linear predictor `beta_l(s) + W(s)' alpha`, revealing `beta_l(s)` if
    /// it is not stored yet.
    pub fn predictor<R: Rng + ?Sized>(&mut self, l: usize, s: &Location, rng: &mut R) -> Result<f64> {
        let off = self.offset(s)?;
        let beta = match self.gp[l].value_at(s) {
            Some(v) => v,
            None => self.gp[l].reveal(std::slice::from_ref(s), rng)?[0],
        };
        Ok(beta + off)
    }

    /// Linear predictor at an already revealed location.
    pub fn predictor_known(&self, l: usize, s: &Location) -> Result<f64> {
        let beta = self.gp[l]
            .value_at(s)
            .ok_or_else(|| Error::State(format!("beta_{} not revealed at ({}, {})", l + 1, s.x, s.y)))?;
        Ok(beta + self.offset(s)?)
    }
}

/// `W(s)' alpha`, or zero without covariates.
#[inline]
pub fn covariate_offset(covariates: Option<&CovariateRaster>, alpha: &[f64], s: &Location) -> Result<f64> {
    match covariates {
        Some(c) => c.linear_term(s, alpha),
        None => Ok(0.0),
    }
}

/// `lambda(s) = lambda*_l F(beta_l(s) + W(s)' alpha)` with `l` the cell of `s`.
pub fn intensity_at<R: Rng + ?Sized>(s: &Location, params: &mut ParamState, rng: &mut R) -> Result<f64> {
    let l = params.partition.assign(s);
    let eta = params.predictor(l, s, rng)?;
    Ok(params.lambda_star[l] * link_f(eta))
}

fn count_term(t: usize, lambda: f64) -> f64 {
    if t == 0 {
        0.0
    } else {
        t as f64 * lambda.ln()
    }
}

/// Augmented log-likelihood, up to a constant. `beta` must already be
/// revealed at every `y` and `ytilde` point. Returns `-inf` if the point
/// sets violate their region constraints or do not reproduce `observed`.
pub fn augmented_loglik(
    points: &MarkedPointSet,
    params: &ParamState,
    observed: Option<&[Location]>,
    area: f64,
) -> Result<f64> {
    if points.check(&params.partition, observed).is_err() {
        return Ok(f64::NEG_INFINITY);
    }
    let mut acc = 0.0;
    for l in 0..points.n_regions() {
        let lam = params.lambda_star[l];
        acc += count_term(points.total(l), lam) - lam * area;
        for s in &points.y[l] {
            acc += log_link_f(params.predictor_known(l, s)?);
        }
        for s in &points.ytilde[l] {
            acc += log_one_minus_link_f(params.predictor_known(l, s)?);
        }
    }
    Ok(acc)
}

/// Shape and rate of the Gamma full conditional of `lambda*_l`.
pub fn lambda_star_conditional_params(
    points: &MarkedPointSet,
    priors: &PriorConfig,
    area: f64,
    l: usize,
) -> (f64, f64) {
    (priors.a + points.total(l) as f64, priors.b + area)
}
