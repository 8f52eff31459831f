//! Times sweeps on a simulated two-region pattern and reports fit quality
//! for L = 2, 1, 3.
//!
//! Usage: `cargo run --release --example bench_sweep -- [iters] [mesh side] [data seed] [chain seed]`

use std::time::Instant;

use nspp::mcmc::{run_chain, FitModel, RunSettings, Tuning};
use nspp::model::PriorConfig;
use nspp::rng::{stream, Stage};
use nspp::simulate::{simulate_dataset, SimConfig};
use nspp::summaries::*;
use nspp::{GpHyper, Location, SpatialDomain};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let iters: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(50);
    let side: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(30);
    let seed: u64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1);
    let chain_seed: u64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(1000);
    let domain = SpatialDomain::rectangle(0.0, 10.0, 0.0, 10.0).unwrap();
    let h = |phi| GpHyper::new(0.0, 4.0, 1.9, phi).unwrap();
    let cfg = SimConfig {
        domain: domain.clone(),
        lambda_star: vec![5.0, 15.0],
        hypers: vec![h(2.5), h(0.5)],
        generators: Some(vec![Location::new(2.5, 5.0), Location::new(7.5, 5.0)]),
        eta: 1.5,
        nu: 4.0,
        covariates: None,
        alpha: vec![],
    };
    let mut data = simulate_dataset(&cfg, seed).unwrap();
    let mesh = MeshGrid::regular(&domain, side, side).unwrap();
    let t = Instant::now();
    let truth = data.true_intensity(mesh.locs()).unwrap();
    println!(
        "n = {}, truth on mesh in {:.1}s",
        data.points.len(),
        t.elapsed().as_secs_f64()
    );
    for l in [2usize, 1, 3] {
        let model = FitModel::new(
            domain.clone(),
            data.points.clone(),
            l,
            PriorConfig::default(),
            Tuning::default_for(100.0, l),
            None,
        )
        .unwrap();
        let settings = RunSettings {
            iterations: iters,
            burnin: iters / 4,
            thin: (iters / 100).max(1),
            seed: chain_seed,
            monitors: vec![],
        };
        let t = Instant::now();
        let mut acc = MeshAccumulator::new(mesh.len(), 500);
        let mut tdraw = 0.0;
        let run = run_chain(&model, &settings, None, |st, rec| {
            let t2 = Instant::now();
            let mut rng = stream(chain_seed, rec.iteration, Stage::Summary, 0);
            let d = state_draw(&st.params, mesh.locs(), &[], &mut rng)?;
            acc.push(&d, &mut rng);
            tdraw += t2.elapsed().as_secs_f64();
            Ok(())
        })
        .unwrap();
        let dt = t.elapsed().as_secs_f64() - tdraw;
        let mse = mse_indicator(&truth, &acc.mean()).unwrap();
        let tab = lambda_star_summary(&run.records.iter().map(|r| r.lambda_star.clone()).collect::<Vec<_>>()).unwrap();
        let cross: Vec<f64> = run
            .records
            .iter()
            .filter_map(|r| line_crossings(&r.generators, 5.0, 0.0, 10.0).first().copied())
            .collect();
        println!(
            "L={l}: {:.1} ms/iter, {:.0} ms/draw, partition acc {}/{}, mse {:.3}, crossing mean {:.2} ({} of {})",
            1e3 * dt / iters as f64,
            1e3 * tdraw / run.records.len() as f64,
            run.partition_accepted,
            iters,
            mse,
            cross.iter().sum::<f64>() / cross.len().max(1) as f64,
            cross.len(),
            run.records.len()
        );
        for r in tab {
            println!("   {:?}", r);
        }
    }
}
