//! Unit-variance normal truncated to a half line.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

/// Draws `X ~ N(0, 1)` conditioned on `X > a`.
pub fn std_normal_above<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a <= 0.45 {
        loop {
            let x: f64 = rng.sample(StandardNormal);
            if x > a {
                return x;
            }
        }
    }
    // Exponential proposal with the optimal rate.
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let e: f64 = rng.sample(Exp1);
        let x = a + e / rate;
        let d = x - rate;
        let u: f64 = rng.random();
        if u.ln() <= -0.5 * d * d {
            return x;
        }
    }
}

/// `N(mean, 1)` conditioned on being positive.
pub fn normal_positive<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    mean + std_normal_above(-mean, rng)
}

/// `N(mean, 1)` conditioned on being non-positive.
pub fn normal_nonpositive<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    mean - std_normal_above(mean, rng)
}
