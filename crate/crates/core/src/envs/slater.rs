//! Two-dimensional instances with a strictly feasible point at the origin
//! and a bounded per-round constraint drift.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{AffineConstraints, AssumptionConstants, DecisionVector, FeasibleSet, ProblemInstance, Round, TrackingLoss};

#[derive(Debug, Clone, PartialEq)]
pub struct SlaterConfig {
    pub horizon: usize,
    pub seed: u64,
    /// Slater margin: `g_t(0) = −eps`.
    pub eps: f64,
    /// Cap on `sup_x |g_{t+1}(x) − g_t(x)|`; must be below `eps`.
    pub drift_cap: f64,
    /// Length of the constraint normal.
    pub rho: f64,
    /// The loss tracks `target_scale · c_t/‖c_t‖`.
    pub target_scale: f64,
}

impl SlaterConfig {
    pub fn new(horizon: usize, seed: u64, eps: f64, drift_cap: f64) -> Self {
        Self {
            horizon,
            seed,
            eps,
            drift_cap,
            rho: 1.0,
            target_scale: 0.8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(self.eps > 0.0 && self.eps < self.rho) {
            return Err(Error::Config(format!(
                "slater margin must lie in (0, rho={}), got {}",
                self.rho, self.eps
            )));
        }
        if !(self.drift_cap >= 0.0 && self.drift_cap < self.eps) {
            return Err(Error::Config(format!(
                "drift cap must lie in [0, eps={}), got {}",
                self.eps, self.drift_cap
            )));
        }
        if !(self.target_scale > 0.0 && self.target_scale <= 1.0) {
            return Err(Error::Config(format!(
                "target scale must lie in (0, 1], got {}",
                self.target_scale
            )));
        }
        Ok(())
    }
}

/// `χ = [−1, 1]²`, `g_t(x) = c_tᵀx − eps` with `c_t = ρ(cos θ_t, sin θ_t)`,
/// and `f_t(x) = ‖x − s·c_t/ρ‖²`. The angle takes uniform steps of at most
/// `drift_cap/(√2ρ)`, which keeps `sup_x |Δg| = ‖Δc‖₁ ≤ drift_cap`.
pub fn slater_instance(cfg: &SlaterConfig) -> Result<ProblemInstance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let set = FeasibleSet::cube(2, -1.0, 1.0)?;
    let max_step = cfg.drift_cap / (SQRT_2 * cfg.rho);
    let mut theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let mut prev_c: Option<[f64; 2]> = None;
    let mut rounds = Vec::with_capacity(cfg.horizon);
    for t in 1..=cfg.horizon {
        if t > 1 && max_step > 0.0 {
            theta += rng.random_range(-max_step..=max_step);
        }
        let dir = [theta.cos(), theta.sin()];
        let c = [cfg.rho * dir[0], cfg.rho * dir[1]];
        // projection of the target onto {cᵀx ≤ eps}; it lies inside the box
        let r = cfg.eps / cfg.rho;
        rounds.push(Round {
            loss: Arc::new(TrackingLoss {
                target: vec![cfg.target_scale * dir[0], cfg.target_scale * dir[1]],
                weight: 1.0,
            }),
            constraints: Arc::new(AffineConstraints {
                matrix: vec![c.to_vec()],
                offset: vec![-cfg.eps],
            }),
            set: set.clone(),
            minimizer: Some(DecisionVector::new(if cfg.target_scale * cfg.rho > cfg.eps {
                vec![r * dir[0], r * dir[1]]
            } else {
                vec![cfg.target_scale * dir[0], cfg.target_scale * dir[1]]
            })?),
            sup_deviation: prev_c.map(|p| (c[0] - p[0]).abs() + (c[1] - p[1]).abs()),
        });
        prev_c = Some(c);
    }
    let reach = 2.0 * SQRT_2;
    let dist = SQRT_2 + cfg.target_scale;
    let value_bound = (dist * dist).max(cfg.rho * SQRT_2 + cfg.eps);
    let grad_bound = (2.0 * dist).max(cfg.rho);
    let constants = AssumptionConstants::new(value_bound, grad_bound, reach, 1)?
        .with_beta(cfg.rho)?
        .with_slater(cfg.eps, cfg.drift_cap)?;
    Ok(ProblemInstance::new("slater", 2, 1, constants, rounds)?
        .with_metadata("env", "slater")
        .with_metadata("eps", format!("{}", cfg.eps))
        .with_metadata("drift_cap", format!("{}", cfg.drift_cap)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{slater_params, slater_queue_bound};
    use crate::problem::check_assumption_bounds;

    fn inst(seed: u64) -> ProblemInstance {
        slater_instance(&SlaterConfig::new(300, seed, 0.3, 0.05)).unwrap()
    }

    #[test]
    fn origin_is_strictly_feasible() {
        for r in inst(1).rounds() {
            assert_eq!(r.constraints.values(&[0.0, 0.0]), vec![-0.3]);
        }
    }

    #[test]
    fn drift_respects_cap_and_is_exact_on_corners() {
        let i = inst(2);
        let corners = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
        for t in 2..=i.horizon() {
            let d = i.round(t).unwrap().sup_deviation.unwrap();
            assert!(d <= 0.05 + 1e-15);
            let (a, b) = (i.constraints_at(t - 1).unwrap(), i.constraints_at(t).unwrap());
            let corner_max = corners
                .iter()
                .map(|x| (a.values(x)[0] - b.values(x)[0]).abs())
                .fold(0.0, f64::max);
            assert!((corner_max - d).abs() < 1e-12);
        }
    }

    #[test]
    fn minimizers_verified() {
        let i = inst(3);
        for r in i.rounds() {
            let x = r.minimizer.as_ref().unwrap();
            assert!(r.constraints.values(x)[0].abs() < 1e-12);
        }
        i.verify_minimizers(1e-6).unwrap();
    }

    #[test]
    fn constants_hold_and_queue_bound_is_finite() {
        let i = inst(4);
        assert!(!check_assumption_bounds(&i, 64, 9).unwrap().any_flag());
        let c = i.constants();
        assert!(c.slater_eps.unwrap() > c.max_variation.unwrap());
        let (a, g) = slater_params(0.5, i.horizon(), c.beta).unwrap();
        let b = slater_queue_bound(c, a, g).unwrap();
        assert!(b.is_finite() && b > 0.0);
    }

    #[test]
    fn rejects_drift_above_margin() {
        assert!(slater_instance(&SlaterConfig::new(10, 1, 0.1, 0.2)).is_err());
    }
}
