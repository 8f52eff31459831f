//! Joint move of generators and point labels.
//!
//! A region `l*` is picked uniformly and it moves together with its nearest
//! generators; each moved generator is displaced uniformly in a disk whose
//! radius is small with probability `p_small` and `radius_multiplier` times
//! larger otherwise. Observed points are relabelled by the new cells. A
//! latent point that changes cell from `k` to `l` and belongs to process `k`
//! (thinned) or `l` (outside-cell) is reallocated to the thinned set of `l`
//! or the outside-cell set of `k` at random; every other point keeps its
//! owner. The disk densities are symmetric and cancel in the ratio; the
//! probability of selecting the same moved set from the proposed generators
//! does not cancel in general and is included.

use rand::Rng;

use super::{ChainState, FitModel, Tuning};
use crate::error::Result;
use crate::geometry::{nearest_index, neighborhood};

use crate::model::{link_f, log_link_f, log_one_minus_link_f, repulsive_log_prior, MarkedPointSet, ParamState};
use crate::rng::{stream, Stage};
use crate::{GpRegionState, Location, Partition, SpatialDomain};

/// `lambda*_l (1 - F(eta_l)) / (lambda*_k + lambda*_l (1 - F(eta_l)))`: the
/// probability that a point moving from cell `k` to cell `l` joins the
/// thinned set of `l` rather than the outside-cell set of `k`.
pub fn allocation_prob(lambda_k: f64, lambda_l: f64, eta_l: f64) -> f64 {
    let w = lambda_l * (1.0 - link_f(eta_l));
    let total = lambda_k + w;
    if total > 0.0 {
        w / total
    } else {
        0.0
    }
}

/// Draw of the generator part of a move.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionProposal {
    pub selected: usize,
    /// Moved generators: `selected` first, then its nearest neighbours.
    pub moved: Vec<usize>,
    /// Full proposed generator vector.
    pub generators: Vec<Location>,
}

/// Proposes new positions for `l*` and its neighbours.
pub fn propose_generators<R: Rng + ?Sized>(generators: &[Location], tuning: &Tuning, rng: &mut R) -> PartitionProposal {
    let n = generators.len();
    let selected = rng.random_range(0..n);
    let moved = neighborhood(generators, selected, tuning.neighbors.min(n));
    let mut proposed = generators.to_vec();
    for &j in &moved {
        let small = rng.random::<f64>() < tuning.p_small;
        let radius = if small {
            tuning.radius
        } else {
            tuning.radius * tuning.radius_multiplier
        };
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        let tau = radius * rng.random::<f64>().sqrt();
        proposed[j] = Location::new(generators[j].x + tau * theta.cos(), generators[j].y + tau * theta.sin());
    }
    PartitionProposal {
        selected,
        moved,
        generators: proposed,
    }
}

/// Probability that the move selects exactly the set `moved` from
/// `generators`: `#{j : N_b(j) = moved} / L`.
pub fn neighbor_set_probability(generators: &[Location], moved: &[usize]) -> f64 {
    let n = generators.len();
    let b = moved.len();
    let mut target = moved.to_vec();
    target.sort_unstable();
    let hits = (0..n)
        .filter(|&j| {
            let mut s = neighborhood(generators, j, b);
            s.sort_unstable();
            s == target
        })
        .count();
    hits as f64 / n as f64
}

/// A latent point whose cell changes under the proposal.
#[derive(Clone, Copy, Debug)]
struct Relocated {
    s: Location,
    /// Old cell.
    k: usize,
    /// New cell.
    l: usize,
    /// Currently in the thinned set of `k` (else in the outside-cell set of `l`).
    was_thinned: bool,
}

/// Evaluated proposal.
#[derive(Clone, Debug)]
pub struct PartitionMove {
    pub proposal: PartitionProposal,
    /// Log of the Metropolis-Hastings ratio (`-inf` for impossible moves).
    pub log_ratio: f64,
    /// Proposed point sets; `None` when the move was rejected outright.
    pub points: Option<MarkedPointSet>,
}

fn eta(gp: &GpRegionState, params: &ParamState, s: &Location) -> Result<f64> {
    Ok(gp.value_at(s).expect("revealed above") + params.offset(s)?)
}

/// Completes a proposal: relabels points, draws reallocations (revealing
/// field values where needed, with `rng`) and computes the log ratio.
/// `alloc_uniform` supplies the uniforms of the reallocation draws.
pub fn evaluate_move<R: Rng + ?Sized>(
    points: &MarkedPointSet,
    params: &mut ParamState,
    domain: &SpatialDomain,
    eta_prior: f64,
    nu_prior: f64,
    proposal: PartitionProposal,
    rng: &mut R,
    mut alloc_uniform: impl FnMut(&mut R) -> f64,
) -> Result<PartitionMove> {
    let old = params.partition.generators().to_vec();
    let new = &proposal.generators;
    let reject = |proposal| {
        Ok(PartitionMove {
            proposal,
            log_ratio: f64::NEG_INFINITY,
            points: None,
        })
    };
    if proposal.moved.iter().any(|&j| !domain.contains(&new[j])) {
        return reject(proposal);
    }
    let log_prior_ratio =
        repulsive_log_prior(new, eta_prior, nu_prior) - repulsive_log_prior(&old, eta_prior, nu_prior);
    if log_prior_ratio == f64::NEG_INFINITY || log_prior_ratio.is_nan() {
        return reject(proposal);
    }
    let n_regions = old.len();

    // Relabel observed points; collect relocated latent points.
    let mut moved_obs: Vec<(Location, usize, usize)> = Vec::new();
    let mut new_points = MarkedPointSet::empty(n_regions);
    for (k, ys) in points.y.iter().enumerate() {
        for s in ys {
            let l = nearest_index(new, s);
            if l != k {
                moved_obs.push((*s, k, l));
            }
            new_points.y[l].push(*s);
        }
    }
    let mut relocated: Vec<Relocated> = Vec::new();
    for (k, ys) in points.ytilde.iter().enumerate() {
        for s in ys {
            let l = nearest_index(new, s);
            if l == k {
                new_points.ytilde[k].push(*s);
            } else {
                relocated.push(Relocated {
                    s: *s,
                    k,
                    l,
                    was_thinned: true,
                });
            }
        }
    }
    for (o, zs) in points.z.iter().enumerate() {
        for s in zs {
            let l = nearest_index(new, s);
            if l == o {
                let k = nearest_index(&old, s);
                relocated.push(Relocated {
                    s: *s,
                    k,
                    l,
                    was_thinned: false,
                });
            } else {
                new_points.z[o].push(*s);
            }
        }
    }

    // Reveal the field values the ratio needs, one joint draw per region.
    let mut need: Vec<Vec<Location>> = vec![Vec::new(); n_regions];
    for &(s, k, l) in &moved_obs {
        need[k].push(s);
        need[l].push(s);
    }
    for r in &relocated {
        need[r.k].push(r.s);
        need[r.l].push(r.s);
    }
    for (l, locs) in need.iter().enumerate() {
        if !locs.is_empty() {
            params.gp[l].reveal(locs, rng)?;
        }
    }

    let lam = &params.lambda_star;
    let mut count_delta = vec![0i64; n_regions];
    let mut log_ratio = log_prior_ratio;

    for &(s, k, l) in &moved_obs {
        count_delta[k] -= 1;
        count_delta[l] += 1;
        log_ratio += log_link_f(eta(&params.gp[l], params, &s)?) - log_link_f(eta(&params.gp[k], params, &s)?);
    }

    for r in &relocated {
        let eta_l = eta(&params.gp[r.l], params, &r.s)?;
        let eta_k = eta(&params.gp[r.k], params, &r.s)?;
        let p_fwd = allocation_prob(lam[r.k], lam[r.l], eta_l);
        let p_rev = allocation_prob(lam[r.l], lam[r.k], eta_k);
        let to_thinned = alloc_uniform(rng) < p_fwd;
        // Old owner and its thinning factor.
        if r.was_thinned {
            count_delta[r.k] -= 1;
            log_ratio -= log_one_minus_link_f(eta_k);
            log_ratio += p_rev.ln();
        } else {
            count_delta[r.l] -= 1;
            log_ratio += (1.0 - p_rev).ln();
        }
        if to_thinned {
            count_delta[r.l] += 1;
            log_ratio += log_one_minus_link_f(eta_l);
            log_ratio -= p_fwd.ln();
            new_points.ytilde[r.l].push(r.s);
        } else {
            count_delta[r.k] += 1;
            log_ratio -= (1.0 - p_fwd).ln();
            new_points.z[r.k].push(r.s);
        }
    }
    for (l, &d) in count_delta.iter().enumerate() {
        if d != 0 {
            log_ratio += d as f64 * lam[l].ln();
        }
    }
    log_ratio +=
        neighbor_set_probability(new, &proposal.moved).ln() - neighbor_set_probability(&old, &proposal.moved).ln();
    if log_ratio.is_nan() {
        log_ratio = f64::NEG_INFINITY;
    }
    Ok(PartitionMove {
        proposal,
        log_ratio,
        points: Some(new_points),
    })
}

/// One Metropolis-Hastings update of generators and labels. Field values
/// revealed while evaluating the proposal are kept whatever the outcome.
pub fn update_partition_block(state: &mut ChainState, model: &FitModel, seed: u64) -> Result<bool> {
    let it = state.iteration + 1;
    let mut rng = stream(seed, it, Stage::Partition, 0);
    let proposal = propose_generators(state.params.partition.generators(), &model.tuning, &mut rng);
    let mv = evaluate_move(
        &state.points,
        &mut state.params,
        &model.domain,
        model.priors.eta,
        model.priors.nu,
        proposal,
        &mut rng,
        |r| r.random::<f64>(),
    )?;
    let u: f64 = rng.random();
    let accept = mv.points.is_some() && u.ln() < mv.log_ratio;
    if accept {
        state.params.partition = Partition::new(mv.proposal.generators)?;
        state.points = mv.points.unwrap();
    }
    Ok(accept)
}
