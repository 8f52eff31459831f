use std::sync::Arc;

use nspp::covariates::{CovariateRaster, Interpolation};
use nspp::model::{link_f, ParamState};
use nspp::summaries::*;
use nspp::verify::covariance::{direct_beta_cov, direct_lambda_cov};
use nspp::{GpHyper, GpRegionState, Location, Partition, SpatialDomain};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn hyper(mu: f64, phi: f64) -> GpHyper {
    GpHyper::new(mu, 4.0, 1.9, phi).unwrap()
}

fn one_region(lambda: f64, h: GpHyper) -> ParamState {
    ParamState {
        lambda_star: vec![lambda],
        partition: Partition::new(vec![Location::new(0.0, 0.0)]).unwrap(),
        gp: vec![GpRegionState::new(h)],
        alpha: vec![],
        covariates: None,
    }
}

/// `E[c F(mu + sd Z)]` by the trapezoid rule on a wide grid.
fn probit_quadrature(c: f64, mu: f64, sd: f64) -> f64 {
    let n = 20_000;
    let (a, b) = (-12.0, 12.0);
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let z: f64 = a + h * i as f64;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += w * c * link_f(mu + sd * z) * (-0.5 * z * z).exp();
    }
    acc * h / (2.0 * std::f64::consts::PI).sqrt()
}

#[test]
fn single_point_draw_matches_quadrature() {
    for mu in [0.0, 0.7] {
        let p = one_region(15.0, hyper(mu, 0.5));
        let s = [Location::new(1.0, 1.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let draws: Vec<f64> = (0..20_000)
            .map(|_| mesh_intensity_draw(&p, &s, &mut rng).unwrap()[0])
            .collect();
        let n = draws.len() as f64;
        let m = draws.iter().sum::<f64>() / n;
        let se = (draws.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let q = probit_quadrature(15.0, mu, 2.0);
        assert!((m - q).abs() < 4.0 * se, "mu={mu}: {m} vs {q} (se {se})");
        // the conditional mean needs no draws
        let rb = mesh_marginals(&p, &s).unwrap().intensity_mean()[0];
        assert!((rb - q).abs() < 1e-6 * q, "{rb} vs {q}");
    }
}

#[test]
fn constant_intensity_integrates_exactly() {
    let d = SpatialDomain::rectangle(0.0, 4.0, 0.0, 4.0).unwrap();
    let p = one_region(3.0, GpHyper::new(40.0, 1e-12, 1.9, 0.5).unwrap());
    let a = Rect {
        x0: 0.5,
        x1: 3.0,
        y0: 1.0,
        y1: 2.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in [1, 2, 7, 16] {
        let est = integral_estimate(&p, &d, &a, k, &mut rng).unwrap();
        assert!((est - 3.0 * 2.5).abs() < 1e-12, "k={k}: {est}");
    }
    let empty = Rect {
        x0: 1.0,
        x1: 1.0,
        y0: 1.0,
        y1: 2.0,
    };
    assert!(integral_estimate(&p, &d, &empty, 4, &mut rng).is_err());
    let outside = Rect {
        x0: 3.0,
        x1: 5.0,
        y0: 1.0,
        y1: 2.0,
    };
    assert!(integral_estimate(&p, &d, &outside, 4, &mut rng).is_err());
}

fn covariate_surface() -> (ParamState, SpatialDomain) {
    let d = SpatialDomain::rectangle(0.0, 4.0, 0.0, 4.0).unwrap();
    let mut rows = Vec::new();
    for j in 0..=10 {
        for i in 0..=10 {
            let (x, y) = (0.4 * i as f64, 0.4 * j as f64);
            rows.push((x, y, vec![(1.3 * x).sin() + y.cos()]));
        }
    }
    let raster = CovariateRaster::from_rows(&rows, Interpolation::Bilinear).unwrap();
    let mut p = one_region(12.0, GpHyper::new(0.2, 1e-12, 1.9, 0.5).unwrap());
    p.alpha = vec![1.1];
    p.covariates = Some(Arc::new(raster));
    (p, d)
}

#[test]
fn stratified_estimator_is_unbiased_and_stratification_helps() {
    let (p, d) = covariate_surface();
    let a = Rect {
        x0: 0.3,
        x1: 3.7,
        y0: 0.5,
        y1: 3.1,
    };
    // midpoint rule on the fixed surface
    let n = 400;
    let (hx, hy) = ((a.x1 - a.x0) / n as f64, (a.y1 - a.y0) / n as f64);
    let mut truth = 0.0;
    for j in 0..n {
        for i in 0..n {
            let s = Location::new(a.x0 + (i as f64 + 0.5) * hx, a.y0 + (j as f64 + 0.5) * hy);
            truth += 12.0 * link_f(0.2 + p.offset(&s).unwrap());
        }
    }
    truth *= hx * hy;

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let reps = 10_000;
    let mut e1 = Vec::with_capacity(reps);
    let mut e16 = Vec::with_capacity(reps);
    for _ in 0..reps {
        e1.push(integral_estimate(&p, &d, &a, 1, &mut rng).unwrap());
        e16.push(integral_estimate(&p, &d, &a, 16, &mut rng).unwrap());
    }
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0);
        (m, var)
    };
    let (m1, v1) = stats(&e1);
    let (m16, v16) = stats(&e16);
    let se1 = (v1 / reps as f64).sqrt();
    let se16 = (v16 / reps as f64).sqrt();
    assert!((m1 - truth).abs() < 4.0 * se1, "{m1} vs {truth}");
    assert!((m16 - truth).abs() < 4.0 * se16, "{m16} vs {truth}");
    assert!(v16 <= v1, "{v16} > {v1}");
}

#[test]
fn beta_cov_at_a_single_location_is_the_variance() {
    let d = SpatialDomain::rectangle(0.0, 10.0, 0.0, 10.0).unwrap();
    let hs = vec![hyper(0.0, 2.5), hyper(0.0, 0.5), hyper(0.0, 1.0)];
    let s = Location::new(3.0, 4.0);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let c = prior_beta_cov(&s, &s, &hs, &d, 1.5, 4.0, 2000, &mut rng).unwrap();
    assert!((c.value - 4.0).abs() < 1e-12, "{}", c.value);
}

#[test]
fn beta_cov_with_one_region_is_stationary() {
    let d = SpatialDomain::rectangle(0.0, 10.0, 0.0, 10.0).unwrap();
    let h = hyper(0.3, 1.2);
    let s = Location::new(5.0, 5.0);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for dist in [0.0, 0.3, 0.8, 1.5, 3.0] {
        let s2 = Location::new(5.0 + dist, 5.0);
        let c = prior_beta_cov(&s, &s2, &[h], &d, 1.5, 4.0, 500, &mut rng).unwrap();
        let expect = 4.0 * (-dist.powf(1.9) / 2.4).exp();
        assert!((c.value - expect).abs() < 1e-12, "{dist}: {} vs {expect}", c.value);
    }
}

#[test]
fn beta_cov_agrees_with_direct_field_simulation() {
    let d = SpatialDomain::rectangle(0.0, 10.0, 0.0, 10.0).unwrap();
    let hs = vec![hyper(-0.5, 2.5), hyper(1.0, 0.8)];
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for (s, s2) in [
        (Location::new(2.0, 5.0), Location::new(2.6, 5.0)),
        (Location::new(1.0, 1.0), Location::new(9.0, 9.0)),
    ] {
        let a = prior_beta_cov(&s, &s2, &hs, &d, 1.5, 4.0, 40_000, &mut rng).unwrap();
        let b = direct_beta_cov(&s, &s2, &hs, &d, 1.5, 4.0, 40_000, &mut rng).unwrap();
        let tol = 4.0 * (a.se * a.se + b.se * b.se).sqrt();
        assert!((a.value - b.value).abs() < tol, "{a:?} vs {b:?}");
    }
}

#[test]
fn lambda_cov_with_one_region_matches_direct_simulation() {
    let d = SpatialDomain::rectangle(0.0, 10.0, 0.0, 10.0).unwrap();
    let hs = [hyper(0.0, 1.0)];
    let (s, s2) = (Location::new(4.0, 4.0), Location::new(4.5, 4.2));
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let a = prior_lambda_cov(&s, &s2, &[10.0], &hs, &d, 1.5, 4.0, 4000, &mut rng).unwrap();
    // independent check: correlated normal pairs pushed through the link
    let r = (-s.dist(&s2).powf(1.9) / 2.0).exp();
    let n = 200_000;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        x.push(10.0 * link_f(2.0 * z1));
        y.push(10.0 * link_f(2.0 * (r * z1 + (1.0 - r * r).sqrt() * z2)));
    }
    let b = nspp::verify::covariance::sample_cov(&x, &y);
    let tol = 4.0 * (a.se * a.se + b.se * b.se).sqrt();
    assert!((a.value - b.value).abs() < tol, "{a:?} vs {b:?}");
    assert!(a.between.abs() < 1e-9);
}

#[test]
fn lambda_variance_components() {
    let d = SpatialDomain::rectangle(0.0, 10.0, 0.0, 10.0).unwrap();
    let hs = vec![hyper(0.0, 2.5), hyper(0.0, 0.5)];
    let s = Location::new(5.0, 5.0);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let v = prior_lambda_cov(&s, &s, &[5.0, 15.0], &hs, &d, 1.5, 4.0, 4000, &mut rng).unwrap();
    assert!(v.within >= 0.0 && v.between >= 0.0);
    assert!(v.value >= v.within && v.value >= v.between);
    let direct = direct_lambda_cov(&s, &s, &[5.0, 15.0], &hs, &d, 1.5, 4.0, 100_000, &mut rng).unwrap();
    let tol = 4.0 * (v.se * v.se + direct.se * direct.se).sqrt();
    assert!((v.value - direct.value).abs() < tol, "{v:?} vs {direct:?}");
    let z = prior_lambda_cov(
        &s,
        &Location::new(6.0, 5.0),
        &[0.0, 0.0],
        &hs,
        &d,
        1.5,
        4.0,
        200,
        &mut rng,
    )
    .unwrap();
    assert_eq!(z.value, 0.0);
}

#[test]
fn correlation_map_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let n = 400;
    let draws: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..20).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let reference: Vec<f64> = draws.iter().map(|d| d[3]).collect();
    let map = posterior_correlation_map(&reference, &draws).unwrap();
    assert!((map[3] - 1.0).abs() < 1e-12);
    for (j, c) in map.iter().enumerate() {
        assert!((-1.0..=1.0).contains(c));
        if j != 3 {
            assert!(c.abs() < 4.0 / (n as f64).sqrt(), "{j}: {c}");
        }
    }
    assert!(posterior_correlation_map(&vec![1.0; n], &draws).is_err());
    assert!(posterior_correlation_map(&reference[..10], &draws[..10]).is_err());
}

#[test]
fn state_draws_leave_state_alone_and_quantiles_bracket_mean() {
    let mut p = one_region(8.0, hyper(0.0, 1.0));
    let anchors = vec![Location::new(0.5, 0.5), Location::new(1.5, 1.0)];
    p.gp[0].set_anchors(anchors, vec![0.4, -0.3]).unwrap();
    let d = SpatialDomain::rectangle(0.0, 2.0, 0.0, 2.0).unwrap();
    let mesh = MeshGrid::regular(&d, 6, 6).unwrap();
    let refs = [Location::new(1.0, 1.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut acc = MeshAccumulator::new(mesh.len(), DEFAULT_RESERVOIR);
    for _ in 0..500 {
        let dr = state_draw(&p, mesh.locs(), &refs, &mut rng).unwrap();
        acc.push(&dr, &mut rng);
    }
    assert_eq!(p.gp[0].n_revealed(), 2);
    let map = acc.correlation_map(0).unwrap();
    // the mesh point nearest the reference is strongly correlated with it
    let near = mesh.locs().iter().position(|s| s.dist(&refs[0]) < 0.3).unwrap();
    assert!(map[near] > 0.5, "{}", map[near]);
    let m = acc.mean();
    let q = acc.quantiles(&[0.025, 0.975]).unwrap();
    for i in 0..mesh.len() {
        assert!(q[0][i] <= m[i] && m[i] <= q[1][i] && m[i] <= 8.0);
    }
}
