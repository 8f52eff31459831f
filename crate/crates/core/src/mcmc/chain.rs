use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::tilde_z::tilde_z_with;
use super::{
    update_alpha, update_beta_anchors, update_lambda_star, update_partition_block, update_theta, update_tilde_z,
    ChainState, FitModel, SweepFlags,
};
use crate::error::{Error, Result};
use crate::gp::GpRegionState;
use crate::linalg::factor_with_jitter;
use crate::model::{MarkedPointSet, ParamState};
use crate::rng::{stream, Stage};
use crate::simulate::sample_generators_repulsive;
use crate::{GpHyper, Location, Partition};

pub const CHECKPOINT_FORMAT: &str = "nspp-checkpoint-v1";

/// Length and storage of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    /// Sweeps to perform in this call.
    pub iterations: u64,
    /// Sweeps (counted from the start of the chain) that are not stored.
    pub burnin: u64,
    pub thin: u64,
    pub seed: u64,
    /// Locations where the field of the covering cell is recorded.
    pub monitors: Vec<Location>,
}

/// One stored iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: u64,
    pub lambda_star: Vec<f64>,
    pub generators: Vec<Location>,
    pub phi: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Per region `(|y_l|, |ytilde_l|, |z_l|)`.
    pub counts: Vec<[usize; 3]>,
    /// Field of the covering cell at each monitor location.
    pub monitor_beta: Vec<f64>,
    pub flags: SweepFlags,
}

/// Result of [`run_chain`].
#[derive(Clone, Debug)]
pub struct ChainRun {
    pub state: ChainState,
    /// Record of the starting state when the chain was freshly initialised.
    pub initial: Option<TraceRecord>,
    pub records: Vec<TraceRecord>,
    pub partition_accepted: u64,
    pub theta_accepted: u64,
    pub sweeps: u64,
}

/// Starting state: generators from the repulsive prior, `lambda*` at the
/// prior mean (at least 1), zero field at the observed points, and latent
/// points from one thinning pass.
pub fn initial_state(model: &FitModel, seed: u64) -> Result<ChainState> {
    let mut rng = stream(seed, 0, Stage::Init, 0);
    let partition = sample_generators_repulsive(
        &model.domain,
        model.n_regions,
        model.priors.eta,
        model.priors.nu,
        &mut rng,
    )?;
    let points = MarkedPointSet::from_observed(&model.observed, &partition);
    let hyper = model.priors.hyper();
    let mut gp = Vec::with_capacity(model.n_regions);
    for l in 0..model.n_regions {
        gp.push(GpRegionState::with_anchors(
            hyper,
            points.y[l].clone(),
            vec![model.priors.mu; points.y[l].len()],
        )?);
    }
    let lam0 = (model.priors.a / model.priors.b).max(1.0);
    let mut state = ChainState {
        points,
        params: ParamState {
            lambda_star: vec![lam0; model.n_regions],
            partition,
            gp,
            alpha: vec![0.0; model.n_covariates()],
            covariates: model.covariates.clone(),
        },
        iteration: 0,
    };
    tilde_z_with(&mut state, model, |l| stream(seed, 0, Stage::Init, l as u64 + 1))?;
    Ok(state)
}

fn block<T>(iteration: u64, name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Block {
        iteration,
        block: name,
        source: Box::new(e),
    })
}

/// One full sweep of all blocks.
pub fn sweep(state: &mut ChainState, model: &FitModel, seed: u64) -> Result<SweepFlags> {
    let it = state.iteration + 1;
    block(it, "latent points", update_tilde_z(state, model, seed))?;
    let partition = block(it, "partition", update_partition_block(state, model, seed))?;
    let beta = block(it, "field", update_beta_anchors(state, model, seed))?;
    block(it, "lambda*", update_lambda_star(state, model, seed))?;
    let theta_accepted = block(it, "phi", update_theta(state, model, seed))?;
    block(it, "alpha", update_alpha(state, model, &beta, seed))?;
    state.iteration = it;
    if cfg!(debug_assertions) {
        state.points.check(&state.params.partition, Some(&model.observed))?;
    }
    Ok(SweepFlags {
        partition,
        theta_accepted,
    })
}

/// Draws the field of the covering cell at `monitors` without touching the
/// state.
pub fn monitor_draw(state: &ChainState, monitors: &[Location], seed: u64) -> Result<Vec<f64>> {
    let params = &state.params;
    let mut out = vec![0.0; monitors.len()];
    for l in 0..params.n_regions() {
        let idx: Vec<usize> = (0..monitors.len())
            .filter(|&i| params.partition.assign(&monitors[i]) == l)
            .collect();
        if idx.is_empty() {
            continue;
        }
        let locs: Vec<Location> = idx.iter().map(|&i| monitors[i]).collect();
        let (mean, cov) = params.gp[l].conditional(&locs);
        let (lower, _) = factor_with_jitter(cov.as_ref(), params.gp[l].hyper().sigma2)?;
        let mut rng = stream(seed, state.iteration, Stage::Monitor, l as u64);
        let z: Vec<f64> = (0..locs.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        for (r, &i) in idx.iter().enumerate() {
            let mut v = mean[r];
            for c in 0..=r {
                v += lower[(r, c)] * z[c];
            }
            out[i] = v;
        }
    }
    Ok(out)
}

/// Summary of a state for the trace.
pub fn record(state: &ChainState, monitors: &[Location], seed: u64, flags: SweepFlags) -> Result<TraceRecord> {
    let p = &state.params;
    Ok(TraceRecord {
        iteration: state.iteration,
        lambda_star: p.lambda_star.clone(),
        generators: p.partition.generators().to_vec(),
        phi: p.gp.iter().map(|g| g.hyper().phi).collect(),
        alpha: p.alpha.clone(),
        counts: (0..p.n_regions())
            .map(|l| {
                [
                    state.points.y[l].len(),
                    state.points.ytilde[l].len(),
                    state.points.z[l].len(),
                ]
            })
            .collect(),
        monitor_beta: monitor_draw(state, monitors, seed)?,
        flags,
    })
}

/// Runs `settings.iterations` sweeps from `start` (or from a fresh initial
/// state), calling `observer` on every stored iteration.
pub fn run_chain<F>(
    model: &FitModel,
    settings: &RunSettings,
    start: Option<ChainState>,
    mut observer: F,
) -> Result<ChainRun>
where
    F: FnMut(&ChainState, &TraceRecord) -> Result<()>,
{
    if settings.thin == 0 {
        return Err(Error::config("tuning.thin", "must be at least 1"));
    }
    let seed = settings.seed;
    let (mut state, initial) = match start {
        Some(s) => (s, None),
        None => {
            let s = initial_state(model, seed)?;
            let r = record(&s, &settings.monitors, seed, SweepFlags::default())?;
            (s, Some(r))
        }
    };
    let mut run = ChainRun {
        state: state.clone(),
        initial,
        records: Vec::new(),
        partition_accepted: 0,
        theta_accepted: 0,
        sweeps: 0,
    };
    for _ in 0..settings.iterations {
        let flags = sweep(&mut state, model, seed)?;
        run.sweeps += 1;
        run.partition_accepted += flags.partition as u64;
        run.theta_accepted += flags.theta_accepted as u64;
        let it = state.iteration;
        if it > settings.burnin && (it - settings.burnin) % settings.thin == 0 {
            let rec = record(&state, &settings.monitors, seed, flags)?;
            observer(&state, &rec)?;
            run.records.push(rec);
        }
    }
    run.state = state;
    Ok(run)
}

/// Serializable sweep-boundary state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub seed: u64,
    pub iteration: u64,
    pub lambda_star: Vec<f64>,
    pub generators: Vec<Location>,
    pub phi: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Per region: anchor locations and field values.
    pub anchor_locs: Vec<Vec<Location>>,
    pub anchor_values: Vec<Vec<f64>>,
    pub points: MarkedPointSet,
}

impl Checkpoint {
    pub fn from_state(state: &ChainState, seed: u64) -> Result<Self> {
        let p = &state.params;
        if p.gp.iter().any(|g| g.n_revealed() != g.n_anchor()) {
            return Err(Error::State("checkpoint requested away from a sweep boundary".into()));
        }
        Ok(Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            seed,
            iteration: state.iteration,
            lambda_star: p.lambda_star.clone(),
            generators: p.partition.generators().to_vec(),
            phi: p.gp.iter().map(|g| g.hyper().phi).collect(),
            alpha: p.alpha.clone(),
            anchor_locs: p.gp.iter().map(|g| g.anchor_locs().to_vec()).collect(),
            anchor_values: p.gp.iter().map(|g| g.anchor_values().to_vec()).collect(),
            points: state.points.clone(),
        })
    }

    /// Rebuilds the state; factorizations are recomputed exactly as the
    /// sampler computed them.
    pub fn to_state(&self, model: &FitModel) -> Result<ChainState> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::State(format!("unsupported checkpoint format `{}`", self.format)));
        }
        let n = model.n_regions;
        let sizes = [
            self.lambda_star.len(),
            self.generators.len(),
            self.phi.len(),
            self.anchor_locs.len(),
            self.anchor_values.len(),
            self.points.n_regions(),
        ];
        if sizes.iter().any(|&s| s != n) {
            return Err(Error::State(format!("checkpoint does not describe {n} regions")));
        }
        if self.alpha.len() != model.n_covariates() {
            return Err(Error::State("checkpoint covariate dimension mismatch".into()));
        }
        let partition = Partition::new(self.generators.clone())?;
        let mut gp = Vec::with_capacity(n);
        for l in 0..n {
            let hyper = GpHyper {
                phi: self.phi[l],
                ..model.priors.hyper()
            };
            gp.push(GpRegionState::with_anchors(
                hyper,
                self.anchor_locs[l].clone(),
                self.anchor_values[l].clone(),
            )?);
        }
        let state = ChainState {
            points: self.points.clone(),
            params: ParamState {
                lambda_star: self.lambda_star.clone(),
                partition,
                gp,
                alpha: self.alpha.clone(),
                covariates: model.covariates.clone(),
            },
            iteration: self.iteration,
        };
        state.points.check(&state.params.partition, Some(&model.observed))?;
        Ok(state)
    }
}
