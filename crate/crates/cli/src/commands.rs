use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use nspp::covariates::CovariateRaster;
use nspp::mcmc::{run_chain, Checkpoint, FitModel, RunSettings};
use nspp::rng::{stream, Stage};
use nspp::simulate::{simulate_dataset, SimConfig};
use nspp::summaries::{
    lambda_star_summary, mse_indicator, state_draw, MeshAccumulator, MeshGrid, StateDraw, MIN_CORRELATION_DRAWS,
};
use nspp::verify::geweke::{run_geweke, GewekeConfig};
use nspp::verify::partition_oracle::run_partition_oracle;
use nspp::{GpHyper, Location};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io;

pub const CONFIG_ECHO: &str = "config.ini";
pub const POINTS: &str = "points.csv";
pub const TRACE: &str = "trace.csv";
pub const SAMPLES: &str = "samples.jsonl";
pub const CHECKPOINT: &str = "checkpoint.json";

/// States rebuilt at once by `summarize`; bounds memory on fine meshes.
const SUMMARY_BATCH: usize = 64;

fn load_covariates(cfg: &RunConfig) -> CliResult<Option<Arc<CovariateRaster>>> {
    match &cfg.model.covariates {
        Some(p) => Ok(Some(Arc::new(io::read_raster(p, cfg.model.interpolation)?))),
        None => Ok(None),
    }
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))
}

pub struct SimulateArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    /// Also write the true intensity on the configured mesh.
    pub truth_mesh: bool,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut cfg = RunConfig::from_file(&args.config)?;
    if let Some(s) = args.seed {
        cfg.tuning.seed = s;
    }
    let truth = cfg
        .truth
        .clone()
        .ok_or_else(|| CliError::config("truth: section required by simulate"))?;
    let domain = cfg.io.domain.build()?;
    let l = truth.lambda_star.len();
    let phis = match truth.phi.len() {
        0 => vec![cfg.model.phi; l],
        1 => vec![truth.phi[0]; l],
        _ => truth.phi.clone(),
    };
    let hypers = phis
        .iter()
        .map(|&phi| GpHyper::new(cfg.model.mu, cfg.model.sigma2, cfg.model.gamma, phi))
        .collect::<nspp::Result<Vec<_>>>()
        .map_err(|e| CliError::config(format!("truth.phi: {e}")))?;
    let sim = SimConfig {
        domain: domain.clone(),
        lambda_star: truth.lambda_star.clone(),
        hypers,
        generators: truth.generators.clone(),
        eta: cfg.priors.eta,
        nu: cfg.priors.nu,
        covariates: load_covariates(&cfg)?,
        alpha: truth.alpha.clone(),
    };
    let mut data = simulate_dataset(&sim, cfg.tuning.seed)?;

    ensure_dir(&args.out)?;
    io::write_points(&args.out.join(POINTS), &data.points)?;
    io::write_points(&args.out.join("truth_generators.csv"), data.partition().generators())?;
    fs::write(args.out.join("truth_config.ini"), cfg.resolved()?.to_ini())?;
    if args.truth_mesh {
        let mesh = MeshGrid::regular(&domain, cfg.io.mesh.0, cfg.io.mesh.1)?;
        let values = data.true_intensity(mesh.locs())?;
        io::write_surface(&args.out.join("truth_intensity_mesh.csv"), mesh.locs(), &values)?;
    }
    println!(
        "simulated {} points in {} regions -> {}",
        data.points.len(),
        l,
        args.out.display()
    );
    Ok(())
}

pub struct FitArgs {
    pub points: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub resume: Option<PathBuf>,
    pub iters: Option<u64>,
    pub burnin: Option<u64>,
    pub thin: Option<u64>,
    pub regions: Option<usize>,
    pub seed: Option<u64>,
}

fn build_model(cfg: &RunConfig, points: Vec<Location>) -> CliResult<FitModel> {
    let domain = cfg.io.domain.build()?;
    let tuning = cfg.tuning(domain.area());
    let covariates = load_covariates(cfg)?;
    if points.is_empty() {
        return Err(CliError::data("no observed points"));
    }
    Ok(FitModel::new(
        domain,
        points,
        cfg.model.regions,
        cfg.priors(),
        tuning,
        covariates,
    )?)
}

fn settings(cfg: &RunConfig, iterations: u64) -> RunSettings {
    RunSettings {
        iterations,
        burnin: cfg.tuning.burnin,
        thin: cfg.tuning.thin,
        seed: cfg.tuning.seed,
        monitors: cfg.io.monitors.clone(),
    }
}

/// Loads the config echo and observed points of a run directory.
pub fn load_run(dir: &Path) -> CliResult<(RunConfig, FitModel)> {
    let cfg = RunConfig::from_file(&dir.join(CONFIG_ECHO))?;
    let points = io::read_points(&dir.join(POINTS))?;
    let model = build_model(&cfg, points)?;
    Ok((cfg, model))
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let (dir, cfg, model, start) = match &args.resume {
        Some(ckpt_path) => {
            if args.regions.is_some() || args.seed.is_some() || args.burnin.is_some() || args.thin.is_some() {
                return Err(CliError::config(
                    "--L, --seed, --burnin and --thin cannot change on resume",
                ));
            }
            let dir = ckpt_path.parent().map(Path::to_path_buf).unwrap_or_default();
            let (cfg, model) = load_run(&dir)?;
            let ckpt = io::read_checkpoint(ckpt_path)?;
            if ckpt.seed != cfg.tuning.seed {
                return Err(CliError::state("checkpoint seed differs from the config echo"));
            }
            let state = ckpt.to_state(&model)?;
            (dir, cfg, model, Some(state))
        }
        None => {
            let config = args
                .config
                .as_ref()
                .ok_or_else(|| CliError::config("--config is required"))?;
            let points_path = args
                .points
                .as_ref()
                .ok_or_else(|| CliError::config("points file is required"))?;
            let out = args.out.as_ref().ok_or_else(|| CliError::config("--out is required"))?;
            let mut cfg = RunConfig::from_file(config)?;
            if let Some(l) = args.regions {
                cfg.model.regions = l;
            }
            if let Some(v) = args.iters {
                cfg.tuning.iterations = v;
            }
            if let Some(v) = args.burnin {
                cfg.tuning.burnin = v;
            }
            if let Some(v) = args.thin {
                cfg.tuning.thin = v;
            }
            if let Some(v) = args.seed {
                cfg.tuning.seed = v;
            }
            cfg.validate()?;
            let cfg = cfg.resolved()?;
            let points = io::read_points(points_path)?;
            let model = build_model(&cfg, points.clone())?;
            ensure_dir(out)?;
            fs::write(out.join(CONFIG_ECHO), cfg.to_ini())?;
            io::write_points(&out.join(POINTS), &points)?;
            (out.clone(), cfg, model, None)
        }
    };
    let resuming = start.is_some();
    let iterations = args.iters.unwrap_or(cfg.tuning.iterations);
    let settings = settings(&cfg, iterations);

    let mut trace = io::TraceWriter::open(&dir.join(TRACE), resuming)?;
    let mut samples = io::SampleWriter::open(&dir.join(SAMPLES), resuming)?;
    let t0 = Instant::now();
    let run = run_chain(&model, &settings, start, |state, rec| {
        let write = |r: CliResult<()>| r.map_err(|e| nspp::Error::State(e.msg));
        write(trace.write(rec))?;
        write(samples.write(&Checkpoint::from_state(state, settings.seed)?))
    })?;
    trace.finish()?;
    samples.finish()?;
    io::write_checkpoint(
        &dir.join(CHECKPOINT),
        &Checkpoint::from_state(&run.state, settings.seed)?,
    )?;

    let sweeps = run.sweeps.max(1) as f64;
    println!(
        "{} sweeps in {:.1}s (now at iteration {}), {} stored",
        run.sweeps,
        t0.elapsed().as_secs_f64(),
        run.state.iteration,
        run.records.len()
    );
    println!("  partition acceptance {:.3}", run.partition_accepted as f64 / sweeps);
    if cfg.model.phi_prior != nspp::model::PhiPrior::Fixed {
        println!(
            "  phi acceptance       {:.3}",
            run.theta_accepted as f64 / (sweeps * model.n_regions as f64)
        );
    }
    println!("  output in {}", dir.display());
    Ok(())
}

pub struct SummarizeArgs {
    pub run: PathBuf,
    pub out: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    /// Overrides the configured mesh.
    pub mesh: Option<(usize, usize)>,
    /// Overrides the configured reference locations.
    pub references: Option<Vec<Location>>,
}

pub fn summarize(args: &SummarizeArgs) -> CliResult<()> {
    let (cfg, model) = load_run(&args.run)?;
    let samples = io::read_samples(&args.run.join(SAMPLES))?;
    if samples.is_empty() {
        return Err(CliError::state(format!(
            "{}: no stored iterations",
            args.run.join(SAMPLES).display()
        )));
    }
    let (nx, ny) = args.mesh.unwrap_or(cfg.io.mesh);
    let mesh = MeshGrid::regular(&model.domain, nx, ny)?;
    let refs = args.references.clone().unwrap_or_else(|| cfg.io.references.clone());
    let truth = match &args.truth {
        Some(p) => {
            let (locs, vals) = io::read_surface(p)?;
            let same = locs.len() == mesh.len()
                && locs
                    .iter()
                    .zip(mesh.locs())
                    .all(|(a, b)| a.dist(b) <= 1e-9 * (1.0 + b.x.abs() + b.y.abs()));
            if !same {
                return Err(CliError::data(format!(
                    "{}: truth has {} points that do not match the {}x{} mesh ({} points)",
                    p.display(),
                    locs.len(),
                    nx,
                    ny,
                    mesh.len()
                )));
            }
            Some(vals)
        }
        None => None,
    };

    let seed = cfg.tuning.seed;
    let mut acc = MeshAccumulator::new(mesh.len(), cfg.io.reservoir);
    let mut keep_rng = stream(seed, 0, Stage::Summary, 1);
    for batch in samples.chunks(SUMMARY_BATCH) {
        let draws: Vec<StateDraw> = batch
            .par_iter()
            .map(|c| {
                let state = c.to_state(&model)?;
                let mut rng = stream(seed, c.iteration, Stage::Summary, 0);
                state_draw(&state.params, mesh.locs(), &refs, &mut rng)
            })
            .collect::<nspp::Result<_>>()?;
        for d in &draws {
            acc.push(d, &mut keep_rng);
        }
    }

    let out = args.out.clone().unwrap_or_else(|| args.run.clone());
    ensure_dir(&out)?;
    let mean = acc.mean();
    let q = acc.quantiles(&[0.025, 0.975])?;
    io::write_surface(&out.join("mesh_mean.csv"), mesh.locs(), &mean)?;
    io::write_surface(&out.join("mesh_q025.csv"), mesh.locs(), &q[0])?;
    io::write_surface(&out.join("mesh_q975.csv"), mesh.locs(), &q[1])?;
    if !refs.is_empty() && acc.count().min(cfg.io.reservoir) < MIN_CORRELATION_DRAWS {
        eprintln!("note: fewer than {MIN_CORRELATION_DRAWS} stored iterations, correlation maps skipped");
    }
    for i in (0..refs.len()).filter(|_| acc.count().min(cfg.io.reservoir) >= MIN_CORRELATION_DRAWS) {
        let map = acc.correlation_map(i)?;
        io::write_surface(&out.join(format!("corrmap_{}.csv", i + 1)), mesh.locs(), &map)?;
    }

    let lam: Vec<Vec<f64>> = samples.iter().map(|c| c.lambda_star.clone()).collect();
    let table = lambda_star_summary(&lam)?;
    let mut text = String::from("region,mean,q025,q975\n");
    println!("{} stored iterations, {}x{} mesh", samples.len(), nx, ny);
    println!("region  lambda* mean   95% interval");
    for r in &table {
        text.push_str(&format!(
            "{},{},{},{}\n",
            r.region,
            io::num(r.mean),
            io::num(r.q025),
            io::num(r.q975)
        ));
        println!("{:>6}  {:>12.4}   [{:.4}, {:.4}]", r.region, r.mean, r.q025, r.q975);
    }
    fs::write(out.join("lambda_star_posterior.csv"), text)?;
    if let Some(t) = truth {
        println!("MSE {:.6}", mse_indicator(&t, &mean)?);
    }
    Ok(())
}

pub fn check(suite: &str, n: Option<usize>, seed: Option<u64>) -> CliResult<bool> {
    match suite {
        "geweke" => {
            let d = GewekeConfig::default();
            let cfg = GewekeConfig {
                samples: n.unwrap_or(d.samples),
                seed: seed.unwrap_or(d.seed),
                ..d
            };
            let report = run_geweke(&cfg)?;
            println!("{:<24} {:>12} {:>12} {:>8}", "functional", "prior", "chain", "z");
            for s in &report.stats {
                println!(
                    "{:<24} {:>12.5} {:>12.5} {:>8.3}",
                    s.name, s.prior_mean, s.chain_mean, s.z
                );
            }
            let max = report.max_abs_z();
            let ok = max < 4.0;
            println!("max |z| = {max:.3}: {}", if ok { "ok" } else { "FAILED" });
            Ok(ok)
        }
        "acceptance-oracle" => {
            let r = run_partition_oracle(n.unwrap_or(200), seed.unwrap_or(7))?;
            let ok = r.max_relative_error < 1e-8;
            println!(
                "{} configurations ({} with relabelling), max relative error {:.3e}: {}",
                r.configurations,
                r.with_relabelling,
                r.max_relative_error,
                if ok { "ok" } else { "FAILED" }
            );
            Ok(ok)
        }
        other => Err(CliError::config(format!(
            "unknown suite `{other}` (expected geweke or acceptance-oracle)"
        ))),
    }
}
