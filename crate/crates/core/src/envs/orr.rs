//! Online ridge regression with a drifting target and a drifting norm cap.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{
    AssumptionConstants, DecisionVector, FeasibleSet, LeastSquaresLoss, NormConstraint, ProblemInstance, Round,
};
use crate::vecops;

/// How fast the target and the features drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Drift {
    /// Increments uniform on `[−1/(2t), 1/(2t)]`.
    Log,
    /// Increments uniform on `[−1/(2√t), 1/(2√t)]`.
    Sqrt,
}

impl Drift {
    /// Half-width of the round-`t` increment interval.
    pub fn half_width(self, t: usize) -> f64 {
        match self {
            Drift::Log => 1.0 / (2.0 * t as f64),
            Drift::Sqrt => 1.0 / (2.0 * (t as f64).sqrt()),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Drift::Log => "log",
            Drift::Sqrt => "sqrt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "log" => Some(Drift::Log),
            "sqrt" => Some(Drift::Sqrt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrrConfig {
    /// Training pairs per round.
    pub n: usize,
    /// Dimension.
    pub k: usize,
    /// Box bound: `χ = {‖x‖_∞ ≤ C}`.
    pub c: f64,
    /// Intercept.
    pub b: f64,
    pub drift: Drift,
    pub horizon: usize,
    pub seed: u64,
}

impl OrrConfig {
    pub fn new(drift: Drift, horizon: usize, seed: u64) -> Self {
        Self {
            n: 5,
            k: 5,
            c: 7.0,
            b: 1.0,
            drift,
            horizon,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::Config(format!("orr needs n, k >= 1, got n={} k={}", self.n, self.k)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("orr box bound C must be positive, got {}", self.c)));
        }
        if !self.b.is_finite() {
            return Err(Error::Config("orr intercept must be finite".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        Ok(())
    }
}

/// Builds the instance. The target starts at the origin and the features
/// start uniform on `[−1, 1]`; every round both take a uniform increment
/// from the drift interval, the target is clipped to the box, and
/// `q_i = p_iᵀx^* + b`, `a = ‖x^*‖`, so `x^*` is an exact per-slot minimizer
/// with zero loss and zero constraint value.
pub fn orr_generate(cfg: &OrrConfig) -> Result<ProblemInstance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let set = FeasibleSet::cube(cfg.k, -cfg.c, cfg.c)?;
    let mut p: Vec<Vec<f64>> = (0..cfg.n)
        .map(|_| (0..cfg.k).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let mut star = vec![0.0; cfg.k];
    let mut prev_a = 0.0;
    let mut rounds = Vec::with_capacity(cfg.horizon);
    let mut width_sum = 0.0;
    for t in 1..=cfg.horizon {
        let w = cfg.drift.half_width(t);
        width_sum += w;
        for s in star.iter_mut() {
            *s += rng.random_range(-w..=w);
        }
        set.project_in_place(&mut star);
        for row in p.iter_mut() {
            for v in row.iter_mut() {
                *v += rng.random_range(-w..=w);
            }
        }
        let targets: Vec<f64> = p.iter().map(|row| vecops::dot(row, &star) + cfg.b).collect();
        let a = vecops::norm(&star);
        rounds.push(Round {
            loss: Arc::new(LeastSquaresLoss {
                features: p.clone(),
                intercept: cfg.b,
                targets,
            }),
            constraints: Arc::new(NormConstraint { radius: a }),
            set: set.clone(),
            minimizer: Some(DecisionVector::new(star.clone())?),
            sup_deviation: (t > 1).then(|| (a - prev_a).abs()),
        });
        prev_a = a;
    }
    let constants = orr_constants(cfg, width_sum)?;
    Ok(ProblemInstance::new("orr", cfg.k, 1, constants, rounds)?
        .with_metadata("env", "orr")
        .with_metadata("drift", cfg.drift.as_str())
        .with_metadata("n", cfg.n.to_string())
        .with_metadata("k", cfg.k.to_string())
        .with_metadata("C", format!("{}", cfg.c))
        .with_metadata("b", format!("{}", cfg.b))
        .with_metadata("p0", "uniform[-1,1]")
        .with_metadata("x0_star", "0"))
}

/// Analytic bounds from the feature envelope `|p_ij| ≤ 1 + Σ_t w_t`.
fn orr_constants(cfg: &OrrConfig, width_sum: f64) -> Result<AssumptionConstants> {
    let k = cfg.k as f64;
    let diameter = 2.0 * cfg.c * k.sqrt();
    let p_norm = k.sqrt() * (1.0 + width_sum);
    // every residual is (x − x^*)ᵀp_i
    let resid = diameter * p_norm;
    let f_bound = cfg.n as f64 * resid * resid;
    let g_bound = cfg.c * k.sqrt();
    let grad_f = 2.0 * cfg.n as f64 * resid * p_norm;
    AssumptionConstants::new(f_bound.max(g_bound), grad_f.max(1.0), diameter, 1)?.with_beta(1.0)
}

/// `|a_t − a_{t−1}|` read back from a generated instance.
pub fn orr_sup_deviation(instance: &ProblemInstance, t: usize) -> Result<f64> {
    if t < 2 {
        return Err(Error::Config(format!("constraint deviation needs t >= 2, got {t}")));
    }
    instance
        .round(t)?
        .sup_deviation
        .ok_or_else(|| Error::Config("instance carries no analytic constraint deviation".into()))
}

/// `|a − a'|` for two norm caps.
pub fn norm_cap_deviation(a_prev: f64, a_now: f64) -> f64 {
    (a_now - a_prev).abs()
}
