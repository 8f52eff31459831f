//! Brute-force Metropolis-Hastings ratio for the partition move.
//!
//! The ratio is assembled from the full joint probability of the point
//! labels given the superposed pattern, the repulsive prior, and the complete
//! proposal law: selection of the moved set, the disk-mixture densities and
//! the reallocation probabilities. Nothing cancels analytically here, so it
//! checks the simplified ratio used by the sampler.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covariates::{CovariateRaster, Interpolation};
use crate::error::Result;
use crate::gp::GpRegionState;
use crate::mcmc::{evaluate_move, propose_generators, Tuning};
use crate::model::{link_f, MarkedPointSet, ParamState};
use crate::{GpHyper, Location, Partition, SpatialDomain};

/// Parameters of the move law shared by both directions.
#[derive(Clone, Debug)]
pub struct MoveLaw {
    pub radius: f64,
    pub multiplier: f64,
    pub p_small: f64,
    pub eta: f64,
    pub nu: f64,
}

fn cell(g: &[Location], s: &Location) -> usize {
    let mut best = 0;
    let mut bd = f64::INFINITY;
    for (i, u) in g.iter().enumerate() {
        let d = ((u.x - s.x).powi(2) + (u.y - s.y).powi(2)).sqrt();
        if d < bd {
            bd = d;
            best = i;
        }
    }
    best
}

fn nearest_set(g: &[Location], j: usize, b: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..g.len()).collect();
    let dist = |i: usize| ((g[i].x - g[j].x).powi(2) + (g[i].y - g[j].y).powi(2)).sqrt();
    idx.sort_by(|&a, &c| dist(a).partial_cmp(&dist(c)).unwrap().then(a.cmp(&c)));
    let mut s: Vec<usize> = idx.into_iter().take(b).collect();
    s.sort_unstable();
    s
}

fn log_prior(g: &[Location], law: &MoveLaw) -> f64 {
    let mut p = 1.0;
    for i in 0..g.len() {
        for j in (i + 1)..g.len() {
            let d = ((g[i].x - g[j].x).powi(2) + (g[i].y - g[j].y).powi(2)).sqrt();
            p *= 1.0 - (-law.eta * d.powf(law.nu)).exp();
        }
    }
    p.ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Owner {
    Observed(usize),
    Thinned(usize),
    Outside(usize),
}

fn bits(s: &Location) -> (u64, u64) {
    (s.x.to_bits(), s.y.to_bits())
}

fn owners(p: &MarkedPointSet) -> HashMap<(u64, u64), (Location, Owner)> {
    let mut m = HashMap::new();
    for l in 0..p.n_regions() {
        for s in &p.y[l] {
            m.insert(bits(s), (*s, Owner::Observed(l)));
        }
        for s in &p.ytilde[l] {
            m.insert(bits(s), (*s, Owner::Thinned(l)));
        }
        for s in &p.z[l] {
            m.insert(bits(s), (*s, Owner::Outside(l)));
        }
    }
    m
}

/// Log of the joint label probability given the superposition, times the
/// generator prior.
fn log_target(
    p: &MarkedPointSet,
    g: &[Location],
    lambda: &[f64],
    field: &dyn Fn(usize, &Location) -> f64,
    law: &MoveLaw,
) -> f64 {
    let total: f64 = lambda.iter().sum();
    let mut acc = log_prior(g, law);
    for (_, (s, o)) in owners(p) {
        let c = cell(g, &s);
        acc += match o {
            Owner::Observed(l) if c == l => (lambda[l] * link_f(field(l, &s)) / total).ln(),
            Owner::Thinned(l) if c == l => (lambda[l] * (1.0 - link_f(field(l, &s))) / total).ln(),
            Owner::Outside(k) if c != k => (lambda[k] / total).ln(),
            _ => f64::NEG_INFINITY,
        };
    }
    acc
}

fn disk_density(d: f64, law: &MoveLaw) -> f64 {
    let r = law.radius;
    let big = law.radius * law.multiplier;
    let mut f = 0.0;
    if d <= r {
        f += law.p_small / (std::f64::consts::PI * r * r);
    }
    if d <= big {
        f += (1.0 - law.p_small) / (std::f64::consts::PI * big * big);
    }
    f
}

/// Log proposal density of `(ga, pa) -> (gb, pb)` moving the set `moved`.
#[allow(clippy::too_many_arguments)]
fn log_proposal(
    ga: &[Location],
    pa: &MarkedPointSet,
    gb: &[Location],
    pb: &MarkedPointSet,
    moved: &[usize],
    lambda: &[f64],
    field: &dyn Fn(usize, &Location) -> f64,
    law: &MoveLaw,
) -> f64 {
    let n = ga.len();
    let mut set = moved.to_vec();
    set.sort_unstable();
    let hits = (0..n).filter(|&j| nearest_set(ga, j, moved.len()) == set).count();
    let mut acc = (hits as f64 / n as f64).ln();
    for j in 0..n {
        let d = ((gb[j].x - ga[j].x).powi(2) + (gb[j].y - ga[j].y).powi(2)).sqrt();
        if set.contains(&j) {
            acc += disk_density(d, law).ln();
        } else if d != 0.0 {
            return f64::NEG_INFINITY;
        }
    }
    let ob = owners(pb);
    for (key, (s, oa)) in owners(pa) {
        let Some(&(_, obb)) = ob.get(&key) else {
            return f64::NEG_INFINITY;
        };
        let (k, l) = (cell(ga, &s), cell(gb, &s));
        let factor = match oa {
            Owner::Observed(_) => {
                if obb == Owner::Observed(l) {
                    1.0
                } else {
                    0.0
                }
            }
            _ if k == l => {
                if obb == oa {
                    1.0
                } else {
                    0.0
                }
            }
            Owner::Thinned(o) | Owner::Outside(o)
                if o == k && matches!(oa, Owner::Thinned(_)) || o == l && matches!(oa, Owner::Outside(_)) =>
            {
                let w = lambda[l] * (1.0 - link_f(field(l, &s)));
                let p = w / (lambda[k] + w);
                match obb {
                    Owner::Thinned(x) if x == l => p,
                    Owner::Outside(x) if x == k => 1.0 - p,
                    _ => 0.0,
                }
            }
            _ => {
                if obb == oa {
                    1.0
                } else {
                    0.0
                }
            }
        };
        acc += factor.ln();
    }
    if ob.len() != owners(pa).len() {
        return f64::NEG_INFINITY;
    }
    acc
}

/// Brute-force log ratio of the move `(ga, pa) -> (gb, pb)`.
#[allow(clippy::too_many_arguments)]
pub fn brute_force_log_ratio(
    ga: &[Location],
    pa: &MarkedPointSet,
    gb: &[Location],
    pb: &MarkedPointSet,
    moved: &[usize],
    lambda: &[f64],
    field: &dyn Fn(usize, &Location) -> f64,
    law: &MoveLaw,
) -> f64 {
    log_target(pb, gb, lambda, field, law) + log_proposal(gb, pb, ga, pa, moved, lambda, field, law)
        - log_target(pa, ga, lambda, field, law)
        - log_proposal(ga, pa, gb, pb, moved, lambda, field, law)
}

/// Outcome of [`run_partition_oracle`].
#[derive(Clone, Debug, Default)]
pub struct OracleReport {
    pub configurations: usize,
    /// Configurations where at least one point changed region.
    pub with_relabelling: usize,
    pub max_relative_error: f64,
}

/// Compares the sampler's ratio with the brute-force one on `n` random small
/// configurations (up to three regions and twelve latent points).
pub fn run_partition_oracle(n: usize, seed: u64) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = SpatialDomain::rectangle(0.0, 4.0, 0.0, 4.0)?;
    let mut report = OracleReport::default();
    while report.configurations < n {
        let n_regions = rng.random_range(1..=3);
        let generators: Vec<Location> = (0..n_regions).map(|_| domain.sample_one(&mut rng)).collect();
        let partition = Partition::new(generators.clone())?;
        let lambda: Vec<f64> = (0..n_regions).map(|_| rng.random_range(1.0..10.0)).collect();
        let mut points = MarkedPointSet::empty(n_regions);
        for _ in 0..rng.random_range(0..6) {
            let s = domain.sample_one(&mut rng);
            points.y[partition.assign(&s)].push(s);
        }
        for _ in 0..rng.random_range(0..=12) {
            let s = domain.sample_one(&mut rng);
            let c = partition.assign(&s);
            if n_regions > 1 && rng.random::<bool>() {
                let o = (c + rng.random_range(1..n_regions)) % n_regions;
                points.z[o].push(s);
            } else {
                points.ytilde[c].push(s);
            }
        }
        let covariates = if rng.random::<bool>() {
            let mut rows = Vec::new();
            for j in 0..7 {
                for i in 0..7 {
                    rows.push((i as f64 - 1.0, j as f64 - 1.0, vec![rng.random::<f64>()]));
                }
            }
            Some(Arc::new(CovariateRaster::from_rows(&rows, Interpolation::Bilinear)?))
        } else {
            None
        };
        let alpha = if covariates.is_some() {
            vec![rng.random_range(-1.0..1.0)]
        } else {
            vec![]
        };
        let mut gp = Vec::new();
        for l in 0..n_regions {
            let hyper = GpHyper::new(0.0, 4.0, 1.9, rng.random_range(0.3..2.0))?;
            let locs: Vec<Location> = points.y[l].iter().chain(&points.ytilde[l]).copied().collect();
            let vals: Vec<f64> = locs.iter().map(|_| rng.random_range(-2.0..2.0)).collect();
            gp.push(GpRegionState::with_anchors(hyper, locs, vals)?);
        }
        let mut params = ParamState {
            lambda_star: lambda.clone(),
            partition,
            gp,
            alpha,
            covariates,
        };
        let tuning = Tuning {
            radius: rng.random_range(0.3..2.0),
            radius_multiplier: 2.0,
            p_small: 0.7,
            neighbors: rng.random_range(1..=n_regions),
            phi_rw_sd: 0.1,
        };
        let law = MoveLaw {
            radius: tuning.radius,
            multiplier: tuning.radius_multiplier,
            p_small: tuning.p_small,
            eta: 1.5,
            nu: 4.0,
        };
        let proposal = propose_generators(&generators, &tuning, &mut rng);
        let mv = evaluate_move(
            &points,
            &mut params,
            &domain,
            law.eta,
            law.nu,
            proposal,
            &mut rng,
            |r| r.random::<f64>(),
        )?;
        let Some(new_points) = mv.points else {
            continue;
        };
        let field = |l: usize, s: &Location| params.predictor_known(l, s).expect("field revealed by the move");
        let oracle = brute_force_log_ratio(
            &generators,
            &points,
            &mv.proposal.generators,
            &new_points,
            &mv.proposal.moved,
            &lambda,
            &field,
            &law,
        );
        if !oracle.is_finite() {
            continue;
        }
        let changed = new_points != points;
        let err = (mv.log_ratio - oracle).exp_m1().abs();
        report.configurations += 1;
        report.with_relabelling += changed as usize;
        report.max_relative_error = report
            .max_relative_error
            .max(if err.is_nan() { f64::INFINITY } else { err });
    }
    Ok(report)
}
