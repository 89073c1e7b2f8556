use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DecisionVector, FeasibleSet, SharedConstraints, SharedLoss};
use crate::error::{Error, Result};
use crate::vecops;

/// Boundedness constants of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionConstants {
    /// Bound on `|f_t(x)|` and `‖g_t(x)‖` over the feasible set.
    pub value_bound: f64,
    /// Bound on `‖∇f_t(x)‖` and every `‖∇g_{t,k}(x)‖`.
    pub grad_bound: f64,
    /// Diameter of the feasible set.
    pub diameter: f64,
    /// Lipschitz constant of `g_t`; `K·G` unless something tighter is known.
    pub beta: f64,
    /// Slater margin: some point has `g_t ≤ −ε` for every round.
    pub slater_eps: Option<f64>,
    /// Largest per-step constraint variation `max_t sup_x ‖g_{t+1}(x) − g_t(x)‖`.
    pub max_variation: Option<f64>,
}

impl AssumptionConstants {
    /// Constants with `β = K·G`.
    pub fn new(value_bound: f64, grad_bound: f64, diameter: f64, num_constraints: usize) -> Result<Self> {
        let c = Self {
            value_bound,
            grad_bound,
            diameter,
            beta: num_constraints.max(1) as f64 * grad_bound,
            slater_eps: None,
            max_variation: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_slater(mut self, eps: f64, max_variation: f64) -> Result<Self> {
        self.slater_eps = Some(eps);
        self.max_variation = Some(max_variation);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("F", self.value_bound)?;
        positive("G", self.grad_bound)?;
        positive("R", self.diameter)?;
        positive("beta", self.beta)?;
        if let Some(eps) = self.slater_eps {
            positive("epsilon", eps)?;
        }
        if let Some(v) = self.max_variation {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("max variation must be nonnegative, got {v}")));
            }
        }
        if let (Some(eps), Some(v)) = (self.slater_eps, self.max_variation) {
            if eps <= v {
                return Err(Error::Config(format!(
                    "Slater margin {eps} must exceed the max constraint variation {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Everything revealed about one round.
#[derive(Debug, Clone)]
pub struct Round {
    pub loss: SharedLoss,
    pub constraints: SharedConstraints,
    pub set: FeasibleSet,
    /// Ground-truth per-slot minimizer when the generator knows it.
    pub minimizer: Option<DecisionVector>,
    /// Exact `sup_x ‖g_t(x) − g_{t−1}(x)‖` when the generator knows it
    /// (ignored for the first round).
    pub sup_deviation: Option<f64>,
}

/// A finite-horizon OCO instance. Rounds are indexed `1..=horizon`.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    name: String,
    dim: usize,
    num_constraints: usize,
    rounds: Vec<Round>,
    constants: AssumptionConstants,
    metadata: Vec<(String, String)>,
}

impl ProblemInstance {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        num_constraints: usize,
        constants: AssumptionConstants,
        rounds: Vec<Round>,
    ) -> Result<Self> {
        if rounds.is_empty() {
            return Err(Error::Config("instance needs at least one round".into()));
        }
        constants.validate()?;
        for (i, r) in rounds.iter().enumerate() {
            let t = i + 1;
            r.set.validate().map_err(|e| e.at_round(t))?;
            if r.set.dim() != dim {
                return Err(Error::LengthMismatch {
                    what: "round feasible set",
                    expected: dim,
                    actual: r.set.dim(),
                }
                .at_round(t));
            }
            if r.constraints.num_constraints() != num_constraints {
                return Err(Error::LengthMismatch {
                    what: "round constraint count",
                    expected: num_constraints,
                    actual: r.constraints.num_constraints(),
                }
                .at_round(t));
            }
            if let Some(m) = &r.minimizer {
                if m.len() != dim {
                    return Err(Error::LengthMismatch {
                        what: "round minimizer",
                        expected: dim,
                        actual: m.len(),
                    }
                    .at_round(t));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            dim,
            num_constraints,
            rounds,
            constants,
            metadata: Vec::new(),
        })
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.push((key.into(), value.into()));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn num_constraints(&self) -> usize {
        self.num_constraints
    }
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }
    pub fn constants(&self) -> &AssumptionConstants {
        &self.constants
    }
    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }
    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn round(&self, t: usize) -> Result<&Round> {
        if t == 0 || t > self.rounds.len() {
            return Err(Error::RoundOutOfRange {
                round: t,
                horizon: self.rounds.len(),
            });
        }
        Ok(&self.rounds[t - 1])
    }

    pub fn loss_at(&self, t: usize) -> Result<&SharedLoss> {
        Ok(&self.round(t)?.loss)
    }
    pub fn constraints_at(&self, t: usize) -> Result<&SharedConstraints> {
        Ok(&self.round(t)?.constraints)
    }
    pub fn set_at(&self, t: usize) -> Result<&FeasibleSet> {
        Ok(&self.round(t)?.set)
    }
    pub fn minimizer_at(&self, t: usize) -> Result<Option<&DecisionVector>> {
        Ok(self.round(t)?.minimizer.as_ref())
    }

    pub fn has_minimizers(&self) -> bool {
        self.rounds.iter().all(|r| r.minimizer.is_some())
    }

    pub fn has_analytic_variation(&self) -> bool {
        self.rounds.iter().skip(1).all(|r| r.sup_deviation.is_some())
    }

    /// Checks every supplied minimizer is feasible for its round within `tol`.
    pub fn verify_minimizers(&self, tol: f64) -> Result<()> {
        for (i, r) in self.rounds.iter().enumerate() {
            let Some(m) = &r.minimizer else { continue };
            let worst = r.constraints.values(m).into_iter().fold(f64::NEG_INFINITY, f64::max);
            if worst > tol || !r.set.contains(m, tol) {
                return Err(Error::Config(format!(
                    "minimizer infeasible: max constraint {worst}, in set {}",
                    r.set.contains(m, tol)
                ))
                .at_round(i + 1));
            }
        }
        Ok(())
    }
}

/// Observed maxima of the boundedness quantities, with flags where they
/// exceed the declared constants.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub max_loss_abs: f64,
    pub max_constraint_norm: f64,
    pub max_loss_grad: f64,
    pub max_constraint_grad: f64,
    pub value_flag: bool,
    pub grad_flag: bool,
    pub rounds_checked: usize,
}

impl BoundsReport {
    pub fn any_flag(&self) -> bool {
        self.value_flag || self.grad_flag
    }
}

/// At most this many rounds are probed, evenly spread over the horizon.
const MAX_PROBED_ROUNDS: usize = 256;

/// Samples `samples` uniform points per probed round and compares observed
/// maxima of `|f|`, `‖g‖`, `‖∇f‖`, `‖∇g_k‖` against `F` and `G`.
pub fn check_assumption_bounds(
    instance: &ProblemInstance,
    samples: usize,
    seed: u64,
) -> Result<BoundsReport> {
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    let horizon = instance.horizon();
    let probed: Vec<usize> = if horizon <= MAX_PROBED_ROUNDS {
        (1..=horizon).collect()
    } else {
        (0..MAX_PROBED_ROUNDS)
            .map(|i| 1 + i * (horizon - 1) / (MAX_PROBED_ROUNDS - 1))
            .collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = BoundsReport {
        max_loss_abs: 0.0,
        max_constraint_norm: 0.0,
        max_loss_grad: 0.0,
        max_constraint_grad: 0.0,
        value_flag: false,
        grad_flag: false,
        rounds_checked: probed.len(),
    };
    for &t in &probed {
        let r = instance.round(t)?;
        for _ in 0..samples {
            let x = r.set.sample_uniform(&mut rng);
            report.max_loss_abs = report.max_loss_abs.max(r.loss.value(&x).abs());
            report.max_constraint_norm = report
                .max_constraint_norm
                .max(vecops::norm(&r.constraints.values(&x)));
            report.max_loss_grad = report.max_loss_grad.max(vecops::norm(&r.loss.gradient(&x)));
            for row in r.constraints.jacobian(&x) {
                report.max_constraint_grad = report.max_constraint_grad.max(vecops::norm(&row));
            }
        }
    }
    let c = instance.constants();
    report.value_flag =
        report.max_loss_abs > c.value_bound || report.max_constraint_norm > c.value_bound;
    report.grad_flag =
        report.max_loss_grad > c.grad_bound || report.max_constraint_grad > c.grad_bound;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::problem::{LinearLoss, NoConstraints, ZeroLoss};

    fn constant_instance(loss: SharedLoss, f_bound: f64) -> ProblemInstance {
        let rounds = (0..5)
            .map(|_| Round {
                loss: loss.clone(),
                constraints: Arc::new(NoConstraints { k: 1 }),
                set: FeasibleSet::cube(2, -1.0, 1.0).unwrap(),
                minimizer: None,
                sup_deviation: None,
            })
            .collect();
        let c = AssumptionConstants::new(f_bound, 1.0, 8f64.sqrt(), 1).unwrap();
        ProblemInstance::new("test", 2, 1, c, rounds).unwrap()
    }

    #[test]
    fn zero_instance_has_no_flags() {
        let inst = constant_instance(Arc::new(ZeroLoss), 1.0);
        let rep = check_assumption_bounds(&inst, 10, 3).unwrap();
        assert!(!rep.any_flag());
        assert_eq!(rep.max_loss_abs, 0.0);
        assert_eq!(rep.max_constraint_grad, 0.0);
    }

    #[test]
    fn understated_value_bound_is_flagged() {
        let one = Arc::new(LinearLoss {
            coeffs: vec![0.0, 0.0],
            offset: 1.0,
        });
        let rep = check_assumption_bounds(&constant_instance(one, 0.1), 4, 3).unwrap();
        assert!(rep.value_flag);
        assert!(!rep.grad_flag);
    }

    #[test]
    fn round_indexing_is_one_based() {
        let inst = constant_instance(Arc::new(ZeroLoss), 1.0);
        assert!(inst.round(0).is_err());
        assert!(inst.round(1).is_ok());
        assert!(inst.round(5).is_ok());
        assert!(matches!(inst.round(6), Err(Error::RoundOutOfRange { .. })));
    }

    #[test]
    fn constants_validation() {
        assert!(AssumptionConstants::new(0.0, 1.0, 1.0, 1).is_err());
        let c = AssumptionConstants::new(1.0, 2.0, 1.0, 3).unwrap();
        assert_eq!(c.beta, 6.0);
        assert!(c.clone().with_slater(0.1, 0.2).is_err());
        assert!(c.with_slater(0.2, 0.1).is_ok());
    }
}
