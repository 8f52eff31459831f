//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 4 to 8 always run at full size and fail the target when they
//! fail. The model-fit criteria 1 to 3 need hours at full size on one core,
//! so by default they run at reduced scale and are reported without failing
//! the target. Set `NSPP_ACCEPTANCE_FULL=1` for the full-size runs, which
//! are then enforced like the others.

use std::process::ExitCode;
use std::time::Instant;

use nspp::gp::{covariance_matrix, factor_covariance};
use nspp::mcmc::{run_chain, FitModel, RunSettings, Tuning};
use nspp::model::PriorConfig;
use nspp::rng::{stream, Stage};
use nspp::simulate::{sample_generators_repulsive, simulate_dataset, thinning_sample, SimConfig};
use nspp::summaries::{line_crossings, mesh_marginals, mse_indicator, prior_beta_cov, MeshGrid};
use nspp::verify::covariance::{direct_beta_cov, sample_cov};
use nspp::verify::geweke::{run_geweke, GewekeConfig};
use nspp::verify::partition_oracle::run_partition_oracle;
use nspp::verify::stats::{mean, variance};
use nspp::{GpHyper, GpRegionState, Location, SpatialDomain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Reduced or full size for the fit criteria.
#[derive(Clone, Copy)]
struct Scale {
    full: bool,
    replications: usize,
    iterations: u64,
    burnin: u64,
    thin: u64,
    mesh: usize,
}

impl Scale {
    fn from_env() -> Self {
        let full = std::env::var("NSPP_ACCEPTANCE_FULL").is_ok_and(|v| v == "1");
        if full {
            Scale {
                full,
                replications: 20,
                iterations: 10_000,
                burnin: 2_000,
                thin: 10,
                mesh: 75,
            }
        } else {
            Scale {
                full,
                replications: 1,
                iterations: 300,
                burnin: 100,
                thin: 2,
                mesh: 25,
            }
        }
    }

    fn label(&self) -> &'static str {
        if self.full {
            "full"
        } else {
            "reduced"
        }
    }
}

fn hyper(phi: f64) -> GpHyper {
    GpHyper::new(0.0, 4.0, 1.9, phi).unwrap()
}

fn square10() -> SpatialDomain {
    SpatialDomain::rectangle(0.0, 10.0, 0.0, 10.0).unwrap()
}

struct FitSummary {
    /// Posterior mean intensity on the mesh.
    mean: Vec<f64>,
    /// Stored `lambda*` draws with regions ordered by generator x.
    lambda_by_x: Vec<Vec<f64>>,
    /// First crossing of the midline `y = 5` per stored draw, if any.
    crossings: Vec<f64>,
    partition_rate: f64,
    secs: f64,
}

fn fit(points: &[Location], regions: usize, scale: &Scale, mesh: &MeshGrid, seed: u64) -> FitSummary {
    let domain = square10();
    let model = FitModel::new(
        domain.clone(),
        points.to_vec(),
        regions,
        PriorConfig::default(),
        Tuning::default_for(domain.area(), regions),
        None,
    )
    .unwrap();
    let settings = RunSettings {
        iterations: scale.iterations,
        burnin: scale.burnin,
        thin: scale.thin,
        seed,
        monitors: vec![],
    };
    let t = Instant::now();
    let mut sum = vec![0.0; mesh.len()];
    let mut count = 0usize;
    let run = run_chain(&model, &settings, None, |state, _| {
        let m = mesh_marginals(&state.params, mesh.locs())?.intensity_mean();
        for (a, v) in sum.iter_mut().zip(m) {
            *a += v;
        }
        count += 1;
        Ok(())
    })
    .unwrap();
    let lambda_by_x = run
        .records
        .iter()
        .map(|r| {
            let mut idx: Vec<usize> = (0..regions).collect();
            idx.sort_by(|&a, &b| r.generators[a].x.total_cmp(&r.generators[b].x));
            idx.iter().map(|&i| r.lambda_star[i]).collect()
        })
        .collect();
    let crossings = run
        .records
        .iter()
        .filter_map(|r| line_crossings(&r.generators, 5.0, 0.0, 10.0).first().copied())
        .collect();
    FitSummary {
        mean: sum.iter().map(|v| v / count as f64).collect(),
        lambda_by_x,
        crossings,
        partition_rate: run.partition_accepted as f64 / run.sweeps as f64,
        secs: t.elapsed().as_secs_f64(),
    }
}

fn interval(draws: &[f64]) -> (f64, f64) {
    let mut v = draws.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
    (q(0.025), q(0.975))
}

fn example1(seed: u64) -> nspp::simulate::SyntheticDataset {
    let cfg = SimConfig {
        domain: square10(),
        lambda_star: vec![5.0, 15.0],
        hypers: vec![hyper(2.5), hyper(0.5)],
        generators: Some(vec![Location::new(2.5, 5.0), Location::new(7.5, 5.0)]),
        eta: 1.5,
        nu: 4.0,
        covariates: None,
        alpha: vec![],
    };
    simulate_dataset(&cfg, seed).unwrap()
}

/// Criteria 1 and 2 share the first dataset and its L=2 fit.
fn criteria_1_2(scale: &Scale) -> (Outcome, Outcome) {
    let mesh = MeshGrid::regular(&square10(), scale.mesh, scale.mesh).unwrap();
    let truth_lambda = [5.0, 15.0];
    let mut covered = 0;
    let mut first = None;
    for rep in 0..scale.replications {
        let mut data = example1(rep as u64 + 1);
        let f2 = fit(&data.points, 2, scale, &mesh, 1000 + rep as u64);
        let ok = (0..2).all(|l| {
            let draws: Vec<f64> = f2.lambda_by_x.iter().map(|v| v[l]).collect();
            let (lo, hi) = interval(&draws);
            lo <= truth_lambda[l] && truth_lambda[l] <= hi
        });
        covered += ok as usize;
        if rep == 0 {
            let truth = data.true_intensity(mesh.locs()).unwrap();
            first = Some((data.points.clone(), truth, f2));
        }
    }
    let (points, truth, f2) = first.unwrap();
    let f1 = fit(&points, 1, scale, &mesh, 2000);
    let f3 = fit(&points, 3, scale, &mesh, 3000);
    let mse = |f: &FitSummary| mse_indicator(&truth, &f.mean).unwrap();
    let (m1, m2, m3) = (mse(&f1), mse(&f2), mse(&f3));
    let need = (0.9 * scale.replications as f64).ceil() as usize;
    let crossing = mean(&f2.crossings);
    let a = covered >= need;
    let b = m1 / m2 > 1.2;
    let c = !f2.crossings.is_empty() && (4.0..=6.0).contains(&crossing);
    let (lo1, hi1) = interval(&f2.lambda_by_x.iter().map(|v| v[0]).collect::<Vec<_>>());
    let (lo2, hi2) = interval(&f2.lambda_by_x.iter().map(|v| v[1]).collect::<Vec<_>>());
    let c1 = outcome(
        a && b && c,
        format!(
            "{} n={}: (a) coverage {covered}/{} [need {need}] {}; first fit 95% intervals [{lo1:.2},{hi1:.2}] \
             [{lo2:.2},{hi2:.2}]; (b) MSE L=1 {m1:.3} / L=2 {m2:.3} = {:.3} [> 1.2] {}; (c) midline crossing \
             mean {crossing:.2} over {} draws [4,6] {}; partition acceptance {:.3}; L=2 fit {:.0}s",
            scale.label(),
            points.len(),
            scale.replications,
            ok_str(a),
            m1 / m2,
            ok_str(b),
            f2.crossings.len(),
            ok_str(c),
            f2.partition_rate,
            f2.secs,
        ),
    );
    let c2 = outcome(
        m3 < 1.5 * m2,
        format!(
            "{}: MSE L=3 {m3:.3} / L=2 {m2:.3} = {:.3} [< 1.5]; L=3 fit {:.0}s",
            scale.label(),
            m3 / m2,
            f3.secs
        ),
    );
    (c1, c2)
}

fn ok_str(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "MISSED"
    }
}

/// Hotspot data: 14 cells from the repulsive prior; the four smallest get
/// the high rate.
fn criterion_3(scale: &Scale) -> Outcome {
    let domain = square10();
    let (high, low) = if scale.full { (150.0, 30.0) } else { (30.0, 6.0) };
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let partition = sample_generators_repulsive(&domain, 14, 1.5, 4.0, &mut rng).unwrap();
    let grid = MeshGrid::regular(&domain, 200, 200).unwrap();
    let mut area = [0usize; 14];
    for s in grid.locs() {
        area[partition.assign(s)] += 1;
    }
    let mut order: Vec<usize> = (0..14).collect();
    order.sort_by_key(|&l| area[l]);
    let mut lambda_star = vec![low; 14];
    for &l in &order[..4] {
        lambda_star[l] = high;
    }
    let cfg = SimConfig {
        domain: domain.clone(),
        lambda_star,
        hypers: vec![hyper(0.5); 14],
        generators: Some(partition.generators().to_vec()),
        eta: 1.5,
        nu: 4.0,
        covariates: None,
        alpha: vec![],
    };
    let mut data = simulate_dataset(&cfg, 77).unwrap();
    let mesh = MeshGrid::regular(&domain, scale.mesh, scale.mesh).unwrap();
    let truth = data.true_intensity(mesh.locs()).unwrap();
    let f = fit(&data.points, 15, scale, &mesh, 4000);
    let top = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
        let k = v.len().div_ceil(10);
        let mut set = idx[..k].to_vec();
        set.sort_unstable();
        set
    };
    let (t, e) = (top(&truth), top(&f.mean));
    let inter = t.iter().filter(|i| e.binary_search(i).is_ok()).count();
    let jaccard = inter as f64 / (t.len() + e.len() - inter) as f64;
    outcome(
        jaccard >= 0.5,
        format!(
            "{} (rates {high}/{low}) n={}: top-decile Jaccard {jaccard:.3} [>= 0.5]; fit {:.0}s",
            scale.label(),
            data.points.len(),
            f.secs
        ),
    )
}

fn criterion_4() -> Outcome {
    let r = run_partition_oracle(100, 4).unwrap();
    outcome(
        r.max_relative_error < 1e-8,
        format!(
            "{} configurations ({} relabelling): max relative error {:.2e} [< 1e-8]",
            r.configurations, r.with_relabelling, r.max_relative_error
        ),
    )
}

fn criterion_5() -> Outcome {
    let cfg = GewekeConfig::default();
    let r = run_geweke(&cfg).unwrap();
    let worst = r.stats.iter().max_by(|a, b| a.z.abs().total_cmp(&b.z.abs())).unwrap();
    outcome(
        r.max_abs_z() < 4.0,
        format!(
            "{} samples, L={}, {} functionals: max |z| {:.2} ({}) [< 4]",
            cfg.samples,
            cfg.n_regions,
            r.stats.len(),
            r.max_abs_z(),
            worst.name
        ),
    )
}

fn criterion_6() -> Outcome {
    // lambda = 4 on x < 5, 1 elsewhere, 0 on a disk; counts over [0,6]x[0,10]
    let domain = square10();
    let hole = Location::new(2.0, 2.0);
    let intensity = |s: &Location| -> nspp::Result<f64> {
        Ok(if s.dist(&hole) < 1.0 {
            0.0
        } else if s.x < 5.0 {
            4.0
        } else {
            1.0
        })
    };
    let exact = 4.0 * (50.0 - std::f64::consts::PI) + 1.0 * 10.0;
    let reps = 2000;
    let mut counts = Vec::with_capacity(reps);
    let mut support_ok = true;
    for r in 0..reps {
        let mut rng = stream(6, r as u64, Stage::Simulate, 0);
        let pts = thinning_sample(&domain, 4.0, intensity, &mut rng).unwrap();
        support_ok &= pts.iter().all(|s| domain.contains(s) && s.dist(&hole) >= 1.0);
        counts.push(pts.iter().filter(|s| s.x < 6.0).count() as f64);
    }
    let (m, v) = (mean(&counts), variance(&counts));
    let ratio = v / m;
    let z = (m - exact) / (exact / reps as f64).sqrt();
    let pass = (0.9..=1.1).contains(&ratio) && z.abs() < 4.0 && support_ok;
    outcome(
        pass,
        format!(
            "{reps} replicates: dispersion {ratio:.3} [0.9,1.1]; mean {m:.2} vs exact {exact:.2} (z {z:.2}); support {}",
            ok_str(support_ok)
        ),
    )
}

fn criterion_7() -> Outcome {
    let domain = square10();
    let hypers = vec![
        GpHyper::new(-0.8, 4.0, 1.9, 0.5).unwrap(),
        GpHyper::new(0.6, 2.0, 1.9, 2.0).unwrap(),
        GpHyper::new(1.5, 1.0, 1.5, 1.0).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 20_000;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let s = Location::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
        let s2 = Location::new(
            (s.x + rng.random_range(-3.0..3.0)).clamp(0.0, 10.0),
            (s.y + rng.random_range(-3.0..3.0)).clamp(0.0, 10.0),
        );
        let a = prior_beta_cov(&s, &s2, &hypers, &domain, 1.5, 4.0, n, &mut rng).unwrap();
        let b = direct_beta_cov(&s, &s2, &hypers, &domain, 1.5, 4.0, n, &mut rng).unwrap();
        worst = worst.max((a.value - b.value).abs() / (a.se * a.se + b.se * b.se).sqrt());
    }
    outcome(
        worst < 4.0,
        format!("10 location pairs, {n} draws each: max |difference| / combined s.e. {worst:.2} [< 4]"),
    )
}

fn criterion_8() -> Outcome {
    let h = hyper(0.5);
    let anchors = vec![Location::new(0.0, 0.0), Location::new(1.0, 0.0)];
    let base = GpRegionState::with_anchors(h, anchors, vec![0.3, -0.5]).unwrap();
    let targets = [
        Location::new(0.5, 0.2),
        Location::new(0.6, 0.4),
        Location::new(2.0, 1.0),
    ];
    let reps = 20_000;
    let mut joint = vec![Vec::with_capacity(reps); 3];
    let mut seq = vec![Vec::with_capacity(reps); 3];
    for r in 0..reps {
        let mut rng = stream(8, r as u64, Stage::Check, 0);
        let mut g = base.clone();
        for (k, v) in g.reveal(&targets, &mut rng).unwrap().into_iter().enumerate() {
            joint[k].push(v);
        }
        let mut g = base.clone();
        for (k, s) in targets.iter().enumerate() {
            seq[k].push(g.reveal(&[*s], &mut rng).unwrap()[0]);
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        let se = ((variance(&joint[i]) + variance(&seq[i])) / reps as f64).sqrt();
        worst = worst.max((mean(&joint[i]) - mean(&seq[i])).abs() / se);
        for j in i..3 {
            let a = sample_cov(&joint[i], &joint[j]);
            let b = sample_cov(&seq[i], &seq[j]);
            worst = worst.max((a.value - b.value).abs() / (a.se * a.se + b.se * b.se).sqrt());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let locs: Vec<Location> = (0..60)
        .map(|_| Location::new(rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)))
        .collect();
    let (factor, jitter) = factor_covariance(&locs, &h).unwrap();
    let mut k = covariance_matrix(&locs, &h);
    for i in 0..locs.len() {
        k[(i, i)] += jitter * h.sigma2;
    }
    let l = factor.as_ref();
    let err = (l * l.transpose() - &k).norm_max() / h.sigma2;
    outcome(
        worst < 4.0 && err < 1e-10,
        format!(
            "sequential vs joint over {reps} draws: max |difference| / s.e. {worst:.2} [< 4]; \
             factorization round trip {err:.1e} [< 1e-10]"
        ),
    )
}

fn main() -> ExitCode {
    let scale = Scale::from_env();
    let mut failed = false;
    let mut report = |id: usize, name: &str, enforced: bool, run: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let note = if enforced { "" } else { " (reported only)" };
        println!(
            "criterion {id} {name}: {verdict}{note} | {} | {:.1}s",
            o.detail,
            t.elapsed().as_secs_f64()
        );
        failed |= enforced && !o.pass;
    };
    report(4, "acceptance-ratio oracle", true, &mut criterion_4);
    report(6, "thinning", true, &mut criterion_6);
    report(8, "retrospective GP", true, &mut criterion_8);
    report(7, "membership-weight covariance", true, &mut criterion_7);
    report(5, "getting it right", true, &mut criterion_5);
    let mut c12 = None;
    report(1, "example 1", scale.full, &mut || {
        let (a, b) = criteria_1_2(&scale);
        c12 = Some(b);
        a
    });
    report(2, "robustness to L", scale.full, &mut || c12.take().unwrap());
    report(3, "hotspot recovery", scale.full, &mut || criterion_3(&scale));
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
