//! Direct simulation of the prior field and intensity at two locations,
//! used to check the membership-weight covariance formulas.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::geometry::nearest_index;
use crate::gp::correlation;
use crate::model::link_f;
use crate::simulate::sample_generators_repulsive;
use crate::summaries::McEstimate;
use crate::{GpHyper, Location, SpatialDomain};

/// Sample covariance of paired draws with the standard error of the mean of
/// centred products.
pub fn sample_cov(a: &[f64], b: &[f64]) -> McEstimate {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let value = prods.iter().sum::<f64>() / (n - 1.0);
    let mp = prods.iter().sum::<f64>() / n;
    let var = prods.iter().map(|p| (p - mp) * (p - mp)).sum::<f64>() / (n - 1.0);
    McEstimate {
        value,
        se: (var / n).sqrt(),
    }
}

/// Draws `(beta_0(s), beta_0(s'))` `n` times: a partition from the prior,
/// then the field of each covering cell.
pub fn field_pairs<R: Rng + ?Sized>(
    s: &Location,
    s2: &Location,
    hypers: &[GpHyper],
    domain: &SpatialDomain,
    eta: f64,
    nu: f64,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = s.dist(s2);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        let p = sample_generators_repulsive(domain, hypers.len(), eta, nu, rng)?;
        let (l, m) = (nearest_index(p.generators(), s), nearest_index(p.generators(), s2));
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let (hl, hm) = (&hypers[l], &hypers[m]);
        a.push(hl.mu + hl.sigma2.sqrt() * z1);
        if l == m {
            let r = correlation(h, hl.gamma, hl.phi);
            b.push(hl.mu + hl.sigma2.sqrt() * (r * z1 + (1.0 - r * r).max(0.0).sqrt() * z2));
        } else {
            b.push(hm.mu + hm.sigma2.sqrt() * z2);
        }
    }
    Ok((a, b))
}

/// Empirical prior covariance of the field at two locations.
pub fn direct_beta_cov<R: Rng + ?Sized>(
    s: &Location,
    s2: &Location,
    hypers: &[GpHyper],
    domain: &SpatialDomain,
    eta: f64,
    nu: f64,
    n: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    let (a, b) = field_pairs(s, s2, hypers, domain, eta, nu, n, rng)?;
    Ok(sample_cov(&a, &b))
}

/// Empirical prior covariance of the intensity at two locations.
#[allow(clippy::too_many_arguments)]
pub fn direct_lambda_cov<R: Rng + ?Sized>(
    s: &Location,
    s2: &Location,
    lambda_star: &[f64],
    hypers: &[GpHyper],
    domain: &SpatialDomain,
    eta: f64,
    nu: f64,
    n: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    let h = s.dist(s2);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        let p = sample_generators_repulsive(domain, hypers.len(), eta, nu, rng)?;
        let (l, m) = (nearest_index(p.generators(), s), nearest_index(p.generators(), s2));
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let (hl, hm) = (&hypers[l], &hypers[m]);
        let b1 = hl.mu + hl.sigma2.sqrt() * z1;
        let b2 = if l == m {
            let r = correlation(h, hl.gamma, hl.phi);
            hl.mu + hl.sigma2.sqrt() * (r * z1 + (1.0 - r * r).max(0.0).sqrt() * z2)
        } else {
            hm.mu + hm.sigma2.sqrt() * z2
        };
        a.push(lambda_star[l] * link_f(b1));
        b.push(lambda_star[m] * link_f(b2));
    }
    Ok(sample_cov(&a, &b))
}
