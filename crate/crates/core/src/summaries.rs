//! Functionals of the posterior and of the prior: intensity surfaces on a
//! mesh, integral estimates, error indicators, prior covariances of the
//! field and of the intensity, and correlation maps.
//!
//! Posterior draws never touch the sampler's stores: every reveal happens on
//! a clone of the region state that is dropped afterwards.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{nearest_index, DomainShape};
use crate::gp::correlation;
use crate::model::{link_f, ParamState};
use crate::simulate::sample_generators_repulsive;
use crate::verify::stats::{mean, quantile};
use crate::{GpHyper, Location, SpatialDomain};

pub const DEFAULT_MESH_SIDE: usize = 75;
pub const DEFAULT_RESERVOIR: usize = 2000;
pub const MIN_CORRELATION_DRAWS: usize = 30;
/// Field pairs drawn per partition in [`prior_lambda_cov`].
pub const INNER_DRAWS: usize = 64;

/// Regular lattice of cell centres over the bounding box of a domain,
/// restricted to the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshGrid {
    pub nx: usize,
    pub ny: usize,
    locs: Vec<Location>,
}

impl MeshGrid {
    pub fn regular(domain: &SpatialDomain, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::config("io.mesh", "mesh needs at least one point per side"));
        }
        let [x0, x1, y0, y1] = domain.bbox();
        let (dx, dy) = ((x1 - x0) / nx as f64, (y1 - y0) / ny as f64);
        let mut locs = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let s = Location::new(x0 + (i as f64 + 0.5) * dx, y0 + (j as f64 + 0.5) * dy);
                if domain.contains(&s) {
                    locs.push(s);
                }
            }
        }
        if locs.is_empty() {
            return Err(Error::config("io.mesh", "no mesh point falls inside the domain"));
        }
        Ok(MeshGrid { nx, ny, locs })
    }

    pub fn len(&self) -> usize {
        self.locs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locs.is_empty()
    }

    pub fn locs(&self) -> &[Location] {
        &self.locs
    }
}

fn by_region(params: &ParamState, locs: &[Location]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); params.n_regions()];
    for (i, s) in locs.iter().enumerate() {
        out[params.partition.assign(s)].push(i);
    }
    out
}

/// One joint draw of the intensity at `mesh` given a stored state: the field
/// of each region is revealed jointly at the mesh points of its cell.
pub fn mesh_intensity_draw<R: Rng + ?Sized>(params: &ParamState, mesh: &[Location], rng: &mut R) -> Result<Vec<f64>> {
    let mut out = vec![0.0; mesh.len()];
    for (l, idx) in by_region(params, mesh).into_iter().enumerate() {
        if idx.is_empty() || params.lambda_star[l] == 0.0 {
            continue;
        }
        let pts: Vec<Location> = idx.iter().map(|&i| mesh[i]).collect();
        let mut fork = params.gp[l].clone();
        let beta = fork.reveal(&pts, rng)?;
        for (k, &i) in idx.iter().enumerate() {
            out[i] = params.lambda_star[l] * link_f(beta[k] + params.offset(&pts[k])?);
        }
    }
    Ok(out)
}

/// Pointwise conditional law of the linear predictor at mesh points.
#[derive(Clone, Debug)]
pub struct MeshMarginals {
    /// `lambda*` of the covering cell.
    pub scale: Vec<f64>,
    /// Conditional mean of `beta + W'alpha`.
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl MeshMarginals {
    /// `E[lambda(s) | state] = lambda* Phi(m / sqrt(1 + v))`.
    pub fn intensity_mean(&self) -> Vec<f64> {
        (0..self.mean.len())
            .map(|i| self.scale[i] * link_f(self.mean[i] / (1.0 + self.var[i]).sqrt()))
            .collect()
    }

    /// Independent draws at each point from its conditional marginal.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.mean.len())
            .map(|i| {
                let z: f64 = StandardNormal.sample(rng);
                self.scale[i] * link_f(self.mean[i] + self.var[i].sqrt() * z)
            })
            .collect()
    }
}

/// Conditional means and variances of the predictor at `mesh`, given
/// everything revealed in `params`.
pub fn mesh_marginals(params: &ParamState, mesh: &[Location]) -> Result<MeshMarginals> {
    let n = mesh.len();
    let mut m = MeshMarginals {
        scale: vec![0.0; n],
        mean: vec![0.0; n],
        var: vec![0.0; n],
    };
    for (l, idx) in by_region(params, mesh).into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let pts: Vec<Location> = idx.iter().map(|&i| mesh[i]).collect();
        let (mu, var) = params.gp[l].conditional_marginals(&pts);
        for (k, &i) in idx.iter().enumerate() {
            m.scale[i] = params.lambda_star[l];
            m.mean[i] = mu[k] + params.offset(&pts[k])?;
            m.var[i] = var[k];
        }
    }
    Ok(m)
}

/// Posterior quantities extracted from one stored state.
#[derive(Clone, Debug)]
pub struct StateDraw {
    /// Intensity at the reference locations, drawn jointly.
    pub reference: Vec<f64>,
    /// Intensity at each mesh point, drawn jointly with the references but
    /// independently across mesh points.
    pub mesh: Vec<f64>,
    /// Conditional mean of the intensity at each mesh point.
    pub mesh_mean: Vec<f64>,
}

/// Reveals the field at `refs`, then draws every mesh point from its law
/// given the anchors and the reference values. Each pair
/// `(reference[i], mesh[j])` is a draw from the joint posterior, which is
/// all that pointwise quantiles and correlation maps need.
pub fn state_draw<R: Rng + ?Sized>(
    params: &ParamState,
    mesh: &[Location],
    refs: &[Location],
    rng: &mut R,
) -> Result<StateDraw> {
    let mut fork = params.clone();
    let mut reference = vec![0.0; refs.len()];
    for (l, idx) in by_region(params, refs).into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let pts: Vec<Location> = idx.iter().map(|&i| refs[i]).collect();
        let beta = fork.gp[l].reveal(&pts, rng)?;
        for (k, &i) in idx.iter().enumerate() {
            reference[i] = params.lambda_star[l] * link_f(beta[k] + params.offset(&pts[k])?);
        }
    }
    let marg = mesh_marginals(&fork, mesh)?;
    Ok(StateDraw {
        reference,
        mesh: marg.draw(rng),
        mesh_mean: marg.intensity_mean(),
    })
}

/// Running mean of conditional intensity means plus a reservoir of draws
/// for quantiles and correlation maps.
#[derive(Clone, Debug)]
pub struct MeshAccumulator {
    count: usize,
    sum: Vec<f64>,
    capacity: usize,
    reservoir: Vec<Vec<f64>>,
    references: Vec<Vec<f64>>,
}

impl MeshAccumulator {
    pub fn new(mesh_len: usize, capacity: usize) -> Self {
        MeshAccumulator {
            count: 0,
            sum: vec![0.0; mesh_len],
            capacity: capacity.max(1),
            reservoir: Vec::new(),
            references: Vec::new(),
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Adds one stored iteration. Once the reservoir is full, draws are kept
    /// with probability `capacity / count`.
    pub fn push<R: Rng + ?Sized>(&mut self, draw: &StateDraw, rng: &mut R) {
        assert_eq!(draw.mesh_mean.len(), self.sum.len());
        assert_eq!(draw.mesh.len(), self.sum.len());
        for (a, v) in self.sum.iter_mut().zip(&draw.mesh_mean) {
            *a += v;
        }
        self.count += 1;
        if self.reservoir.len() < self.capacity {
            self.reservoir.push(draw.mesh.clone());
            self.references.push(draw.reference.clone());
        } else {
            let j = rng.random_range(0..self.count);
            if j < self.capacity {
                self.reservoir[j] = draw.mesh.clone();
                self.references[j] = draw.reference.clone();
            }
        }
    }

    /// Correlation map for reference location `i` over the kept draws.
    pub fn correlation_map(&self, i: usize) -> Result<Vec<f64>> {
        let r: Vec<f64> = self.references.iter().map(|v| v[i]).collect();
        posterior_correlation_map(&r, &self.reservoir)
    }

    pub fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|v| v / self.count as f64).collect()
    }

    /// Pointwise empirical quantiles of the stored draws.
    pub fn quantiles(&self, qs: &[f64]) -> Result<Vec<Vec<f64>>> {
        if self.reservoir.is_empty() {
            return Err(Error::State("no draws accumulated".into()));
        }
        let m = self.sum.len();
        let mut out = vec![vec![0.0; m]; qs.len()];
        let mut col = Vec::with_capacity(self.reservoir.len());
        for i in 0..m {
            col.clear();
            col.extend(self.reservoir.iter().map(|d| d[i]));
            col.sort_by(f64::total_cmp);
            for (k, &q) in qs.iter().enumerate() {
                out[k][i] = quantile(&col, q);
            }
        }
        Ok(out)
    }
}

/// `(1/M) sum (truth - estimate)^2`.
pub fn mse_indicator(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::InvalidArgument(format!(
            "truth has {} values but the estimate {}",
            truth.len(),
            estimate.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("empty mesh".into()));
    }
    Ok(truth.iter().zip(estimate).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / truth.len() as f64)
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }

    fn within(&self, domain: &SpatialDomain) -> bool {
        match domain.shape() {
            DomainShape::Rectangle { xmin, xmax, ymin, ymax } => {
                self.x0 >= *xmin && self.x1 <= *xmax && self.y0 >= *ymin && self.y1 <= *ymax
            }
            DomainShape::Polygon(_) => [
                Location::new(self.x0, self.y0),
                Location::new(self.x1, self.y0),
                Location::new(self.x1, self.y1),
                Location::new(self.x0, self.y1),
            ]
            .iter()
            .all(|c| domain.contains(c)),
        }
    }
}

/// Splits `rect` into `k` equal cells (a `kx x ky` grid with `kx` the largest
/// divisor of `k` not above `sqrt(k)`) and draws one uniform point per cell.
/// Returns the points and the common cell area.
pub fn stratified_points<R: Rng + ?Sized>(rect: &Rect, k: usize, rng: &mut R) -> Result<(Vec<Location>, f64)> {
    if !(rect.area() > 0.0) {
        return Err(Error::InvalidArgument("integration region is empty".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one stratum".into()));
    }
    let kx = (1..=k).filter(|d| k % d == 0 && d * d <= k).max().unwrap_or(1);
    let ky = k / kx;
    let (w, h) = ((rect.x1 - rect.x0) / kx as f64, (rect.y1 - rect.y0) / ky as f64);
    let mut pts = Vec::with_capacity(k);
    for j in 0..ky {
        for i in 0..kx {
            let x = rect.x0 + (i as f64 + rng.random::<f64>()) * w;
            let y = rect.y0 + (j as f64 + rng.random::<f64>()) * h;
            pts.push(Location::new(x, y));
        }
    }
    Ok((pts, w * h))
}

/// Unbiased estimate of the integral of the intensity of a stored state over
/// `rect`, with one point per stratum.
pub fn integral_estimate<R: Rng + ?Sized>(
    params: &ParamState,
    domain: &SpatialDomain,
    rect: &Rect,
    k: usize,
    rng: &mut R,
) -> Result<f64> {
    if !rect.within(domain) {
        return Err(Error::InvalidArgument("integration region leaves the domain".into()));
    }
    let (pts, cell) = stratified_points(rect, k, rng)?;
    let lam = mesh_intensity_draw(params, &pts, rng)?;
    Ok(cell * lam.iter().sum::<f64>())
}

/// Pearson correlation between the intensity at a reference location and at
/// each mesh point across stored draws. Mesh points whose draws are constant
/// get 0.
pub fn posterior_correlation_map(reference: &[f64], draws: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = reference.len();
    if n != draws.len() {
        return Err(Error::InvalidArgument("one reference value per draw required".into()));
    }
    if n < MIN_CORRELATION_DRAWS {
        return Err(Error::InvalidArgument(format!(
            "correlation maps need at least {MIN_CORRELATION_DRAWS} draws, got {n}"
        )));
    }
    let mr = mean(reference);
    let cr: Vec<f64> = reference.iter().map(|v| v - mr).collect();
    let srr: f64 = cr.iter().map(|v| v * v).sum();
    if !(srr > 0.0) {
        return Err(Error::InvalidArgument(
            "reference intensity has zero posterior variance".into(),
        ));
    }
    let m = draws[0].len();
    let mut out = vec![0.0; m];
    for (j, o) in out.iter_mut().enumerate() {
        let ms = draws.iter().map(|d| d[j]).sum::<f64>() / n as f64;
        let (mut sxy, mut sss) = (0.0, 0.0);
        for (d, r) in draws.iter().zip(&cr) {
            let c = d[j] - ms;
            sxy += c * r;
            sss += c * c;
        }
        if sss > 0.0 {
            *o = (sxy / (srr * sss).sqrt()).clamp(-1.0, 1.0);
        }
    }
    Ok(out)
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub se: f64,
}

/// Plug-in `sum_i a_i + Cov_n(b, c)` with a standard error from the
/// per-draw influence values.
fn mean_plus_cov(a: &[f64], b: &[f64], c: &[f64]) -> McEstimate {
    let n = a.len() as f64;
    let (mb, mc) = (mean(b), mean(c));
    let z: Vec<f64> = (0..a.len()).map(|i| a[i] + (b[i] - mb) * (c[i] - mc)).collect();
    let value = mean(&z);
    let se = if a.len() > 1 {
        (z.iter().map(|v| (v - value) * (v - value)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        f64::NAN
    };
    McEstimate { value, se }
}

/// Membership probabilities of two locations under the partition prior.
#[derive(Clone, Debug)]
pub struct MembershipWeights {
    /// `P(s in S_l)`.
    pub first: Vec<f64>,
    /// `P(s' in S_l)`.
    pub second: Vec<f64>,
    /// `joint[l1][l2] = P(s in S_l1, s' in S_l2)`.
    pub joint: Vec<Vec<f64>>,
    /// Cell labels of `(s, s')` in each partition draw.
    pub labels: Vec<(usize, usize)>,
}

impl MembershipWeights {
    /// `w_l(s, s') = P(s, s' in S_l)`.
    pub fn same(&self, l: usize) -> f64 {
        self.joint[l][l]
    }

    /// `w_{l1,l2}(s, s') = P(s in S_l1, s' in S_l2) - P(s in S_l1) P(s' in S_l2)`.
    pub fn cross(&self, l1: usize, l2: usize) -> f64 {
        self.joint[l1][l2] - self.first[l1] * self.second[l2]
    }
}

/// Estimates membership probabilities from `n_mc` exact draws of the
/// repulsive partition prior.
pub fn membership_weights<R: Rng + ?Sized>(
    s: &Location,
    s2: &Location,
    n_regions: usize,
    domain: &SpatialDomain,
    eta: f64,
    nu: f64,
    n_mc: usize,
    rng: &mut R,
) -> Result<MembershipWeights> {
    if n_mc < 2 {
        return Err(Error::InvalidArgument("need at least two partition draws".into()));
    }
    let mut w = MembershipWeights {
        first: vec![0.0; n_regions],
        second: vec![0.0; n_regions],
        joint: vec![vec![0.0; n_regions]; n_regions],
        labels: Vec::with_capacity(n_mc),
    };
    let inc = 1.0 / n_mc as f64;
    for _ in 0..n_mc {
        let p = sample_generators_repulsive(domain, n_regions, eta, nu, rng)?;
        let (a, b) = (nearest_index(p.generators(), s), nearest_index(p.generators(), s2));
        w.first[a] += inc;
        w.second[b] += inc;
        w.joint[a][b] += inc;
        w.labels.push((a, b));
    }
    Ok(w)
}

/// Prior covariance of the field `beta_0(s) = beta_{l(s)}(s)` at two
/// locations, by plugging Monte Carlo membership weights into
/// `sum_l w_l sigma_l^2 rho_l(h) + sum_{l1,l2} w_{l1,l2} mu_l1 mu_l2`.
pub fn prior_beta_cov<R: Rng + ?Sized>(
    s: &Location,
    s2: &Location,
    hypers: &[GpHyper],
    domain: &SpatialDomain,
    eta: f64,
    nu: f64,
    n_mc: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    for h in hypers {
        h.validate()?;
    }
    let n = hypers.len();
    let w = membership_weights(s, s2, n, domain, eta, nu, n_mc, rng)?;
    let h = s.dist(s2);
    let mut value = 0.0;
    for (l, hy) in hypers.iter().enumerate() {
        value += w.same(l) * hy.sigma2 * correlation(h, hy.gamma, hy.phi);
    }
    for l1 in 0..n {
        for l2 in 0..n {
            value += w.cross(l1, l2) * hypers[l1].mu * hypers[l2].mu;
        }
    }
    let a: Vec<f64> = w
        .labels
        .iter()
        .map(|&(p, q)| {
            if p == q {
                hypers[p].sigma2 * correlation(h, hypers[p].gamma, hypers[p].phi)
            } else {
                0.0
            }
        })
        .collect();
    let b: Vec<f64> = w.labels.iter().map(|&(p, _)| hypers[p].mu).collect();
    let c: Vec<f64> = w.labels.iter().map(|&(_, q)| hypers[q].mu).collect();
    Ok(McEstimate {
        value,
        se: mean_plus_cov(&a, &b, &c).se,
    })
}

/// Prior covariance of the intensity split by the law of total covariance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaCov {
    pub value: f64,
    /// Expected within-partition covariance.
    pub within: f64,
    /// Covariance across partitions of the conditional means.
    pub between: f64,
    pub se: f64,
}

/// `E[F(X)]` for `X ~ N(mu, sigma2)`.
fn probit_normal_mean(h: &GpHyper) -> f64 {
    link_f(h.mu / (1.0 + h.sigma2).sqrt())
}

/// Prior covariance of `lambda(s)` and `lambda(s')` given `lambda*` and the
/// hyperparameters. The outer expectation runs over partition draws; the
/// within-cell covariance of `F(beta_l)` is estimated from
/// [`INNER_DRAWS`] field pairs per partition.
#[allow(clippy::too_many_arguments)]
pub fn prior_lambda_cov<R: Rng + ?Sized>(
    s: &Location,
    s2: &Location,
    lambda_star: &[f64],
    hypers: &[GpHyper],
    domain: &SpatialDomain,
    eta: f64,
    nu: f64,
    n_mc: usize,
    rng: &mut R,
) -> Result<LambdaCov> {
    if lambda_star.len() != hypers.len() {
        return Err(Error::InvalidArgument(
            "one lambda* per hyperparameter set required".into(),
        ));
    }
    for h in hypers {
        h.validate()?;
    }
    let w = membership_weights(s, s2, hypers.len(), domain, eta, nu, n_mc, rng)?;
    let h = s.dist(s2);
    let mut within = Vec::with_capacity(n_mc);
    let mut f1 = vec![0.0; INNER_DRAWS];
    let mut f2 = vec![0.0; INNER_DRAWS];
    for &(p, q) in &w.labels {
        if p != q || lambda_star[p] == 0.0 {
            within.push(0.0);
            continue;
        }
        let hy = &hypers[p];
        let r = correlation(h, hy.gamma, hy.phi);
        let sd = hy.sigma2.sqrt();
        let tail = (1.0 - r * r).max(0.0).sqrt();
        for k in 0..INNER_DRAWS {
            let z1: f64 = StandardNormal.sample(rng);
            let z2: f64 = StandardNormal.sample(rng);
            f1[k] = link_f(hy.mu + sd * z1);
            f2[k] = link_f(hy.mu + sd * (r * z1 + tail * z2));
        }
        let (m1, m2) = (mean(&f1), mean(&f2));
        let c = (0..INNER_DRAWS).map(|k| (f1[k] - m1) * (f2[k] - m2)).sum::<f64>() / (INNER_DRAWS as f64 - 1.0);
        within.push(lambda_star[p] * lambda_star[p] * c);
    }
    let b: Vec<f64> = w
        .labels
        .iter()
        .map(|&(p, _)| lambda_star[p] * probit_normal_mean(&hypers[p]))
        .collect();
    let c: Vec<f64> = w
        .labels
        .iter()
        .map(|&(_, q)| lambda_star[q] * probit_normal_mean(&hypers[q]))
        .collect();
    let total = mean_plus_cov(&within, &b, &c);
    let within_mean = mean(&within);
    Ok(LambdaCov {
        value: total.value,
        within: within_mean,
        between: total.value - within_mean,
        se: total.se,
    })
}

/// Posterior summary of one region's `lambda*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub region: usize,
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
}

/// Mean and central 95% interval of each `lambda*_l` over stored draws
/// (one vector of `lambda*` per draw).
pub fn lambda_star_summary(draws: &[Vec<f64>]) -> Result<Vec<RegionSummary>> {
    let first = draws.first().ok_or_else(|| Error::State("no stored draws".into()))?;
    let n = first.len();
    (0..n)
        .map(|l| {
            let mut v: Vec<f64> = draws.iter().map(|r| r[l]).collect();
            v.sort_by(f64::total_cmp);
            Ok(RegionSummary {
                region: l + 1,
                mean: mean(&v),
                q025: quantile(&v, 0.025),
                q975: quantile(&v, 0.975),
            })
        })
        .collect()
}

/// Abscissas in `(x0, x1)` where the horizontal line at height `y` crosses
/// from one Voronoi cell to another, in increasing order.
pub fn line_crossings(generators: &[Location], y: f64, x0: f64, x1: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut x = x0;
    let mut cur = nearest_index(generators, &Location::new(x0, y));
    loop {
        // next point where some other generator becomes at least as close
        let g = generators[cur];
        let mut best: Option<(f64, usize)> = None;
        for (k, h) in generators.iter().enumerate() {
            if k == cur || h.x <= g.x {
                continue;
            }
            // |p - h|^2 = |p - g|^2 along the line
            let t = ((h.x * h.x - g.x * g.x) + (h.y - y) * (h.y - y) - (g.y - y) * (g.y - y)) / (2.0 * (h.x - g.x));
            if t > x && best.is_none_or(|(b, _)| t < b) {
                best = Some((t, k));
            }
        }
        match best {
            Some((t, _)) if t < x1 => {
                // ties resolve to the lowest index just past the crossing
                let next = nearest_index(generators, &Location::new(t + 1e-12 * (1.0 + t.abs()), y));
                if next == cur {
                    x = t;
                    continue;
                }
                out.push(t);
                x = t;
                cur = next;
            }
            _ => return out,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::GpRegionState;
    use crate::Partition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(lambda: Vec<f64>, generators: Vec<Location>) -> ParamState {
        let h = GpHyper::new(0.0, 4.0, 1.9, 0.5).unwrap();
        ParamState {
            gp: lambda.iter().map(|_| GpRegionState::new(h)).collect(),
            lambda_star: lambda,
            partition: Partition::new(generators).unwrap(),
            alpha: vec![],
            covariates: None,
        }
    }

    #[test]
    fn mesh_covers_domain() {
        let d = SpatialDomain::rectangle(0.0, 10.0, 0.0, 10.0).unwrap();
        let m = MeshGrid::regular(&d, 75, 75).unwrap();
        assert_eq!(m.len(), 5625);
        assert!(m.locs().iter().all(|s| d.contains(s)));
        let tri = SpatialDomain::polygon(vec![
            Location::new(0.0, 0.0),
            Location::new(1.0, 0.0),
            Location::new(0.0, 1.0),
        ])
        .unwrap();
        let m = MeshGrid::regular(&tri, 10, 10).unwrap();
        assert!(m.len() < 100 && m.len() > 30);
    }

    #[test]
    fn zero_rates_give_zero_surface() {
        let p = params(vec![0.0, 0.0], vec![Location::new(1.0, 1.0), Location::new(3.0, 1.0)]);
        let mesh = [Location::new(0.5, 0.5), Location::new(3.5, 0.5)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(mesh_intensity_draw(&p, &mesh, &mut rng).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn anchor_point_is_exact_and_state_untouched() {
        let mut p = params(vec![15.0], vec![Location::new(1.0, 1.0)]);
        let a = Location::new(0.3, 0.7);
        p.gp[0].set_anchors(vec![a], vec![0.8]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = mesh_intensity_draw(&p, &[a, Location::new(2.0, 2.0)], &mut rng).unwrap();
        assert_eq!(d[0], 15.0 * link_f(0.8));
        assert_eq!(p.gp[0].n_revealed(), 1);
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse_indicator(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((mse_indicator(&[1.0, 2.0], &[1.5, 2.5]).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(mse_indicator(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 2.5);
        assert!(mse_indicator(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn crossing_of_two_generators() {
        let g = [Location::new(2.0, 3.0), Location::new(8.0, 3.0)];
        assert_eq!(line_crossings(&g, 5.0, 0.0, 10.0), vec![5.0]);
        let g = [Location::new(5.0, 1.0), Location::new(5.0, 9.0)];
        assert!(line_crossings(&g, 4.0, 0.0, 10.0).is_empty());
        let g = [
            Location::new(1.0, 5.0),
            Location::new(4.0, 5.0),
            Location::new(9.0, 5.0),
        ];
        assert_eq!(line_crossings(&g, 5.0, 0.0, 10.0), vec![2.5, 6.5]);
    }

    #[test]
    fn stratification_layout() {
        let r = Rect {
            x0: 0.0,
            x1: 2.0,
            y0: 0.0,
            y1: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (pts, cell) = stratified_points(&r, 16, &mut rng).unwrap();
        assert_eq!(pts.len(), 16);
        assert!((cell - 2.0 / 16.0).abs() < 1e-15);
        let (pts, _) = stratified_points(&r, 7, &mut rng).unwrap();
        assert_eq!(pts.len(), 7);
        let empty = Rect {
            x0: 1.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        };
        assert!(stratified_points(&empty, 4, &mut rng).is_err());
    }

    #[test]
    fn reservoir_keeps_capacity() {
        let mut acc = MeshAccumulator::new(1, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..50 {
            let d = StateDraw {
                reference: vec![],
                mesh: vec![i as f64],
                mesh_mean: vec![i as f64],
            };
            acc.push(&d, &mut rng);
        }
        assert_eq!(acc.count(), 50);
        assert_eq!(acc.reservoir.len(), 5);
        assert!((acc.mean()[0] - 24.5).abs() < 1e-12);
    }
}
