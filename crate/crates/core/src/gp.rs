//! Power-exponential Gaussian processes and the retrospective value store.
//!
//! A [`GpRegionState`] holds every value of one region's process that has
//! been revealed so far: the anchors (values at observed and thinned points,
//! jointly resampled by the sampler) followed by a cache of values revealed
//! on demand. A single growing Cholesky factor covers both, ordered the same
//! way, together with the whitened values `L^{-1}(v - mu)`. A reveal appends
//! a block to the factor and the fresh standard normals become the new
//! whitened entries.

use faer::{Mat, MatRef};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Location;
use crate::linalg::{factor_with_jitter, CholFactor};
use crate::scalar::Real;

/// Locations closer than this are treated as the same point.
pub const MERGE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpHyper<T> {
    pub mu: T,
    pub sigma2: T,
    pub gamma: T,
    pub phi: T,
}

impl<T: Real> GpHyper<T> {
    pub fn new(mu: T, sigma2: T, gamma: T, phi: T) -> Result<Self> {
        let h = GpHyper { mu, sigma2, gamma, phi };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::InvalidArgument("mu must be finite".into()));
        }
        if !(self.sigma2 > T::zero()) || !self.sigma2.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sigma2 must be > 0, got {}",
                self.sigma2
            )));
        }
        if !(self.gamma > T::zero() && self.gamma <= T::lit(2.0)) {
            return Err(Error::InvalidArgument(format!(
                "gamma must lie in (0, 2], got {}",
                self.gamma
            )));
        }
        if !(self.phi > T::zero()) || !self.phi.is_finite() {
            return Err(Error::InvalidArgument(format!("phi must be > 0, got {}", self.phi)));
        }
        Ok(())
    }

    /// Covariance at squared distance `d2`.
    #[inline]
    pub fn cov_d2(&self, d2: T) -> T {
        let p = if self.gamma == T::lit(2.0) {
            d2
        } else if d2 == T::zero() {
            T::zero()
        } else {
            (self.gamma * T::lit(0.5) * d2.ln()).exp()
        };
        self.sigma2 * (-p / (self.phi + self.phi)).exp()
    }
}

/// `exp(-h^gamma / (2 phi))`.
pub fn correlation<T: Real>(h: T, gamma: T, phi: T) -> T {
    (-h.powf(gamma) / (phi + phi)).exp()
}

/// Covariance matrix `sigma2 * rho(|s_i - s_j|)`, without jitter.
pub fn covariance_matrix<T: Real>(locs: &[Location<T>], hyper: &GpHyper<T>) -> Mat<T> {
    let n = locs.len();
    let mut k = Mat::zeros(n, n);
    for j in 0..n {
        k[(j, j)] = hyper.sigma2;
        for i in (j + 1)..n {
            let c = hyper.cov_d2(locs[i].dist2(&locs[j]));
            k[(i, j)] = c;
            k[(j, i)] = c;
        }
    }
    k
}

/// `|a| x |b|` cross covariance.
pub fn cross_covariance<T: Real>(a: &[Location<T>], b: &[Location<T>], hyper: &GpHyper<T>) -> Mat<T> {
    Mat::from_fn(a.len(), b.len(), |i, j| hyper.cov_d2(a[i].dist2(&b[j])))
}

/// Covariance matrix with only the lower triangle filled.
pub fn covariance_lower<T: Real>(locs: &[Location<T>], hyper: &GpHyper<T>) -> Mat<T> {
    let n = locs.len();
    let mut k = Mat::zeros(n, n);
    for j in 0..n {
        k[(j, j)] = hyper.sigma2;
        let sj = locs[j];
        let col = k.col_mut(j).try_as_col_major_mut().unwrap().as_slice_mut();
        for i in (j + 1)..n {
            col[i] = hyper.cov_d2(locs[i].dist2(&sj));
        }
    }
    k
}

/// Factor of the (jittered) covariance at `locs`; returns the factor and the
/// relative jitter used.
pub fn factor_covariance<T: Real>(locs: &[Location<T>], hyper: &GpHyper<T>) -> Result<(CholFactor<T>, T)> {
    let k = covariance_lower(locs, hyper);
    let (l, j) = factor_with_jitter(k.as_ref(), hyper.sigma2)?;
    Ok((CholFactor::from_lower(l), j))
}

fn whiten<T: Real>(factor: MatRef<'_, T>, values: &[T], mu: T) -> Vec<T> {
    let mut w = Mat::from_fn(values.len(), 1, |i, _| values[i] - mu);
    if !values.is_empty() {
        faer::linalg::triangular_solve::solve_lower_triangular_in_place(factor, w.as_mut(), faer::Par::Seq);
    }
    (0..values.len()).map(|i| w[(i, 0)]).collect()
}

fn log_density_whitened<T: Real>(factor: MatRef<'_, T>, whitened: &[T]) -> T {
    let n = whitened.len();
    let mut logdet = T::zero();
    for i in 0..n {
        logdet = logdet + factor[(i, i)].ln();
    }
    let quad = whitened.iter().fold(T::zero(), |acc, &w| acc + w * w);
    let ln2pi = (T::lit(2.0) * T::PI()).ln();
    -T::lit(0.5) * (T::from_usize(n).unwrap() * ln2pi + quad) - logdet
}

/// Multivariate normal log-density with mean `mu * 1` and the jittered
/// power-exponential covariance.
pub fn gp_logdensity<T: Real>(values: &[T], locs: &[Location<T>], hyper: &GpHyper<T>) -> Result<T> {
    if values.len() != locs.len() || values.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "need matching non-empty values/locations, got {} and {}",
            values.len(),
            locs.len()
        )));
    }
    let (f, _) = factor_covariance(locs, hyper)?;
    let w = whiten(f.as_ref(), values, hyper.mu);
    Ok(log_density_whitened(f.as_ref(), &w))
}

fn std_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Revealed values of one region's Gaussian process.
#[derive(Clone, Debug)]
pub struct GpRegionState<T: Real> {
    hyper: GpHyper<T>,
    locs: Vec<Location<T>>,
    values: Vec<T>,
    whitened: Vec<T>,
    n_anchor: usize,
    factor: CholFactor<T>,
    jitter: T,
}

impl<T: Real> GpRegionState<T> {
    pub fn new(hyper: GpHyper<T>) -> Self {
        GpRegionState {
            hyper,
            locs: Vec::new(),
            values: Vec::new(),
            whitened: Vec::new(),
            n_anchor: 0,
            factor: CholFactor::default(),
            jitter: T::lit(crate::linalg::JITTER_LADDER[0]),
        }
    }

    pub fn with_anchors(hyper: GpHyper<T>, locs: Vec<Location<T>>, values: Vec<T>) -> Result<Self> {
        let mut s = Self::new(hyper);
        s.set_anchors(locs, values)?;
        Ok(s)
    }

    #[inline]
    pub fn hyper(&self) -> &GpHyper<T> {
        &self.hyper
    }

    #[inline]
    pub fn n_anchor(&self) -> usize {
        self.n_anchor
    }

    #[inline]
    pub fn n_revealed(&self) -> usize {
        self.locs.len()
    }

    pub fn anchor_locs(&self) -> &[Location<T>] {
        &self.locs[..self.n_anchor]
    }

    pub fn anchor_values(&self) -> &[T] {
        &self.values[..self.n_anchor]
    }

    pub fn cache_locs(&self) -> &[Location<T>] {
        &self.locs[self.n_anchor..]
    }

    pub fn cache_values(&self) -> &[T] {
        &self.values[self.n_anchor..]
    }

    /// Relative jitter of the anchor factorization.
    pub fn jitter(&self) -> T {
        self.jitter
    }

    pub fn factor(&self) -> &CholFactor<T> {
        &self.factor
    }

    /// Index of a stored location within the merge tolerance.
    pub fn find(&self, s: &Location<T>) -> Option<usize> {
        let tol2 = T::lit(MERGE_TOLERANCE * MERGE_TOLERANCE);
        self.locs.iter().position(|p| p.dist2(s) <= tol2)
    }

    pub fn value_at(&self, s: &Location<T>) -> Option<T> {
        self.find(s).map(|i| self.values[i])
    }

    /// Drops the cache and keeps the anchors.
    pub fn clear_cache(&mut self) {
        self.locs.truncate(self.n_anchor);
        self.values.truncate(self.n_anchor);
        self.whitened.truncate(self.n_anchor);
        self.factor.truncate(self.n_anchor);
    }

    /// Replaces the anchors, clears the cache and refactors.
    pub fn set_anchors(&mut self, locs: Vec<Location<T>>, values: Vec<T>) -> Result<()> {
        let (factor, jitter) = factor_covariance(&locs, &self.hyper)?;
        self.set_anchors_factored(locs, values, factor, jitter);
        Ok(())
    }

    /// As [`set_anchors`](Self::set_anchors) with a factor of the anchor
    /// covariance computed by [`factor_covariance`] under the current hyper.
    pub fn set_anchors_factored(&mut self, locs: Vec<Location<T>>, values: Vec<T>, factor: CholFactor<T>, jitter: T) {
        assert_eq!(locs.len(), values.len());
        assert_eq!(factor.dim(), locs.len());
        self.whitened = whiten(factor.as_ref(), &values, self.hyper.mu);
        self.n_anchor = locs.len();
        self.locs = locs;
        self.values = values;
        self.factor = factor;
        self.jitter = jitter;
    }

    /// Replaces the hyperparameters, keeps anchor values, clears the cache.
    pub fn set_hyper(&mut self, hyper: GpHyper<T>) -> Result<()> {
        hyper.validate()?;
        self.clear_cache();
        let (factor, jitter) = factor_covariance(&self.locs, &hyper)?;
        self.set_hyper_factored(hyper, factor, jitter);
        Ok(())
    }

    pub fn set_hyper_factored(&mut self, hyper: GpHyper<T>, factor: CholFactor<T>, jitter: T) {
        self.clear_cache();
        assert_eq!(factor.dim(), self.n_anchor);
        self.hyper = hyper;
        self.whitened = whiten(factor.as_ref(), &self.values, hyper.mu);
        self.factor = factor;
        self.jitter = jitter;
    }

    /// Log prior density of the anchor values under the current hyper.
    pub fn anchor_logdensity(&self) -> T {
        let n = self.n_anchor;
        log_density_whitened(self.factor.leading(n), &self.whitened[..n])
    }

    /// Log density of the anchor values under `hyper`, with the factor that
    /// [`set_hyper_factored`](Self::set_hyper_factored) would need.
    pub fn anchor_logdensity_under(&self, hyper: &GpHyper<T>) -> Result<(T, CholFactor<T>, T)> {
        let locs = self.anchor_locs();
        let (factor, jitter) = factor_covariance(locs, hyper)?;
        let w = whiten(factor.as_ref(), self.anchor_values(), hyper.mu);
        let ld = log_density_whitened(factor.as_ref(), &w);
        Ok((ld, factor, jitter))
    }

    /// Draws the process at `new_locs` jointly, conditional on everything
    /// revealed so far, and stores the draw. Locations already stored (or
    /// repeated within `new_locs`) return the stored value.
    pub fn reveal<R: Rng + ?Sized>(&mut self, new_locs: &[Location<T>], rng: &mut R) -> Result<Vec<T>> {
        let tol2 = T::lit(MERGE_TOLERANCE * MERGE_TOLERANCE);
        // slot: Ok(stored index) or Err(index into fresh)
        let mut fresh: Vec<Location<T>> = Vec::new();
        let mut slots: Vec<std::result::Result<usize, usize>> = Vec::with_capacity(new_locs.len());
        for s in new_locs {
            if let Some(i) = self.find(s) {
                slots.push(Ok(i));
            } else if let Some(k) = fresh.iter().position(|p| p.dist2(s) <= tol2) {
                slots.push(Err(k));
            } else {
                slots.push(Err(fresh.len()));
                fresh.push(*s);
            }
        }
        let start = self.locs.len();
        if !fresh.is_empty() {
            self.append(fresh, rng)?;
        }
        Ok(slots
            .into_iter()
            .map(|s| match s {
                Ok(i) => self.values[i],
                Err(k) => self.values[start + k],
            })
            .collect())
    }

    fn append<R: Rng + ?Sized>(&mut self, fresh: Vec<Location<T>>, rng: &mut R) -> Result<()> {
        let n = self.locs.len();
        let m = fresh.len();
        let cross = cross_covariance(&self.locs, &fresh, &self.hyper);
        let mut block = covariance_lower(&fresh, &self.hyper);
        let nugget = self.jitter * self.hyper.sigma2;
        for i in 0..m {
            block[(i, i)] = block[(i, i)] + nugget;
        }
        self.factor.extend(cross.as_ref(), block.as_ref(), self.hyper.sigma2)?;
        let l = self.factor.as_ref();
        let z: Vec<T> = (0..m).map(|_| std_normal(rng)).collect();
        self.whitened.extend_from_slice(&z);
        for i in 0..m {
            let row = n + i;
            let mut v = self.hyper.mu;
            for c in 0..=row {
                v = v + l[(row, c)] * self.whitened[c];
            }
            self.values.push(v);
        }
        self.locs.extend(fresh);
        Ok(())
    }

    /// Kriging mean and covariance at `locs` given everything revealed,
    /// without storing anything.
    pub fn conditional(&self, locs: &[Location<T>]) -> (Vec<T>, Mat<T>) {
        let n = self.locs.len();
        let m = locs.len();
        let mut cov = covariance_matrix(locs, &self.hyper);
        let nugget = self.jitter * self.hyper.sigma2;
        for i in 0..m {
            cov[(i, i)] = cov[(i, i)] + nugget;
        }
        if n == 0 {
            return (vec![self.hyper.mu; m], cov);
        }
        let mut w = cross_covariance(&self.locs, locs, &self.hyper);
        self.factor.solve_lower(w.as_mut());
        cov = cov - w.transpose() * &w;
        let mean = (0..m)
            .map(|j| {
                let col = w.col(j);
                let mut acc = self.hyper.mu;
                for i in 0..n {
                    acc = acc + col[i] * self.whitened[i];
                }
                acc
            })
            .collect();
        (mean, cov)
    }

    /// Pointwise kriging means and variances (no cross covariances).
    pub fn conditional_marginals(&self, locs: &[Location<T>]) -> (Vec<T>, Vec<T>) {
        let n = self.locs.len();
        let m = locs.len();
        let prior_var = self.hyper.sigma2 * (T::one() + self.jitter);
        if n == 0 {
            return (vec![self.hyper.mu; m], vec![prior_var; m]);
        }
        let mut means = Vec::with_capacity(m);
        let mut vars = Vec::with_capacity(m);
        const CHUNK: usize = 512;
        for chunk in locs.chunks(CHUNK) {
            let mut w = cross_covariance(&self.locs, chunk, &self.hyper);
            self.factor.solve_lower(w.as_mut());
            for j in 0..chunk.len() {
                let col = w.col(j);
                let mut mean = self.hyper.mu;
                let mut ss = T::zero();
                for i in 0..n {
                    mean = mean + col[i] * self.whitened[i];
                    ss = ss + col[i] * col[i];
                }
                means.push(mean);
                vars.push((prior_var - ss).max(T::zero()));
            }
        }
        (means, vars)
    }
}
