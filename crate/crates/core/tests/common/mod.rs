#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tripose::problem::{BenchmarkProblem, GroundTruth, MeasurementSet};
use tripose::ReducedModel;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ground truth with well separated poses, none at the origin.
pub fn random_ground_truth(rng: &mut impl Rng) -> GroundTruth {
    loop {
        let p1 = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let p2 = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let d = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
        if d(p1, [0.0, 0.0]) > 0.3 && d(p2, [0.0, 0.0]) > 0.3 && d(p1, p2) > 0.3 {
            let phi1 = rng.random_range(-PI..PI);
            let phi2 = rng.random_range(-PI..PI);
            return GroundTruth::new(p1, p2, phi1, phi2).unwrap();
        }
    }
}

pub fn random_perfect(rng: &mut impl Rng, sigma: f64) -> ReducedModel {
    let gt = random_ground_truth(rng);
    ReducedModel::new(&MeasurementSet::from_ground_truth(&gt, sigma).unwrap()).unwrap()
}

/// Mismatch `eps` applied with φ₀₁ held exact.
pub fn random_anchored(rng: &mut impl Rng, sigma: f64, eps: f64) -> (BenchmarkProblem, ReducedModel) {
    let gt = random_ground_truth(rng);
    let ms = MeasurementSet::from_ground_truth(&gt, sigma)
        .unwrap()
        .with_anchored_mismatch(eps);
    let problem = BenchmarkProblem {
        label: format!("anchored-{eps:.3}"),
        ground_truth: gt,
        epsilon: eps,
        measurements: ms,
    };
    let model = ReducedModel::new(&ms).unwrap();
    (problem, model)
}

pub fn random_problem(rng: &mut impl Rng, sigma: f64, eps: f64) -> BenchmarkProblem {
    BenchmarkProblem::new("random", random_ground_truth(rng), eps, sigma).unwrap()
}
