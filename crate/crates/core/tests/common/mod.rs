//! Random small instances shared by the integration suites.

#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vqoco::problem::{AffineConstraints, AssumptionConstants, DecisionVector, FeasibleSet, ProblemInstance, Round, TrackingLoss};
use vqoco::vecops;

/// A tracking instance with `n ≤ 5`, `K ≤ 3` and drifting affine
/// constraints, plus the loss targets (used as `x_t^*` stand-ins; the queue
/// properties hold for any comparator sequence).
pub struct RandomCase {
    pub instance: ProblemInstance,
    pub targets: Vec<DecisionVector>,
}

pub fn random_case(seed: u64, horizon: usize) -> RandomCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=5);
    let k = rng.random_range(1..=3);
    let set = if rng.random_bool(0.5) {
        FeasibleSet::cube(n, -1.0, 1.0).unwrap()
    } else {
        FeasibleSet::ball(vec![0.0; n], 1.0).unwrap()
    };
    let diameter = if matches!(set, FeasibleSet::Ball { .. }) { 2.0 } else { 2.0 * (n as f64).sqrt() };
    let weight = rng.random_range(0.5..2.0);
    let mut base: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    // negative margins put the target outside the constraint set
    let margins: Vec<f64> = (0..k).map(|_| rng.random_range(-0.3..0.3)).collect();
    let mut z: Vec<f64> = (0..n).map(|_| rng.random_range(-0.4..0.4)).collect();

    let mut rounds = Vec::with_capacity(horizon);
    let mut targets = Vec::with_capacity(horizon);
    let mut beta: f64 = 0.0;
    let mut row_max: f64 = 0.0;
    for t in 1..=horizon {
        if t > 1 {
            for v in z.iter_mut() {
                *v = (*v + rng.random_range(-0.05..0.05)).clamp(-0.4, 0.4);
            }
            for row in base.iter_mut() {
                for v in row.iter_mut() {
                    *v = (*v + rng.random_range(-0.02..0.02)).clamp(-1.0, 1.0);
                }
            }
        }
        let offset: Vec<f64> = base
            .iter()
            .zip(&margins)
            .map(|(row, m)| -vecops::dot(row, &z) - m)
            .collect();
        beta = beta.max(base.iter().flatten().map(|v| v * v).sum::<f64>().sqrt());
        row_max = row_max.max(base.iter().map(|r| vecops::norm(r)).fold(0.0, f64::max));
        rounds.push(Round {
            loss: Arc::new(TrackingLoss {
                target: z.clone(),
                weight,
            }),
            constraints: Arc::new(AffineConstraints {
                matrix: base.clone(),
                offset,
            }),
            set: set.clone(),
            minimizer: None,
            sup_deviation: None,
        });
        targets.push(DecisionVector::new(z.clone()).unwrap());
    }
    let value = weight * diameter * diameter + (k as f64).sqrt() * (row_max * diameter + 1.0);
    let grad = 2.0 * weight * diameter + row_max;
    let constants = AssumptionConstants::new(value, grad, diameter, k)
        .unwrap()
        .with_beta(beta.max(1e-3))
        .unwrap();
    RandomCase {
        instance: ProblemInstance::new("random", n, k, constants, rounds).unwrap(),
        targets,
    }
}

/// A corner of the bounding box, projected: starts far from the targets so
/// the queues see violations early.
pub fn far_start(set: &FeasibleSet, seed: u64) -> DecisionVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = set.dim();
    let corner: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    set.project(&DecisionVector::new(corner).unwrap()).unwrap()
}
