//! Virtual-queue learner with constant parameters for instances with a
//! Slater point.

use super::{OnlineLearner, RoundFeedback, StepInfo};
use crate::error::{Error, Result};
use crate::problem::{ConstraintOracle, DecisionVector, FeasibleSet, LossOracle};
use crate::subsolver::{solve_primal_subproblem, SolverConfig, SubproblemSpec};

/// `max{λ + γg, −γg}` componentwise, with `g = g_t(x_t)`.
pub fn slater_dual_update(lambda_prev: &[f64], gamma: f64, g_now_at_x: &[f64]) -> Vec<f64> {
    lambda_prev
        .iter()
        .zip(g_now_at_x)
        .map(|(l, g)| {
            let s = gamma * g;
            // + 0.0 turns a -0.0 from max(0, -0) into +0
            (l + s).max(-s) + 0.0
        })
        .collect()
}

/// State before round `t`: `x_t` and `λ(t−1)`. `g_now_at_x` holds
/// `g_{t−1}(x_{t−1})` from the previous step (zero initially).
#[derive(Debug, Clone, PartialEq)]
pub struct SlaterState {
    t: usize,
    x: DecisionVector,
    lambda: Vec<f64>,
    g_now_at_x: Vec<f64>,
    alpha: f64,
    gamma: f64,
}

impl SlaterState {
    pub fn new(alpha: f64, gamma: f64, num_constraints: usize, x1: DecisionVector) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!(
                "need alpha > 0 and gamma >= 0, got alpha={alpha} gamma={gamma}"
            )));
        }
        Ok(Self {
            t: 1,
            x: x1,
            lambda: vec![0.0; num_constraints],
            g_now_at_x: vec![0.0; num_constraints],
            alpha,
            gamma,
        })
    }

    pub fn round(&self) -> usize {
        self.t
    }
    pub fn action(&self) -> &DecisionVector {
        &self.x
    }
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }
    /// Constraint values at the previous action, as seen in the previous round.
    pub fn g_now_at_x(&self) -> &[f64] {
        &self.g_now_at_x
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// One round: dual update with `g_t(x_t)`, then the primal update with
/// dual weight `λ(t) + γ g_t(x_t)` over `chi_next`.
pub fn slater_step(
    state: &SlaterState,
    loss: &dyn LossOracle,
    constraints: &dyn ConstraintOracle,
    chi_next: &FeasibleSet,
    cfg: &SolverConfig,
) -> Result<(SlaterState, StepInfo)> {
    let k = state.lambda.len();
    if constraints.num_constraints() != k {
        return Err(Error::LengthMismatch {
            what: "constraint count",
            expected: k,
            actual: constraints.num_constraints(),
        });
    }
    let g_now = constraints.values(&state.x);
    let lambda = slater_dual_update(&state.lambda, state.gamma, &g_now);
    let dual_weight: Vec<f64> = lambda
        .iter()
        .zip(&g_now)
        .map(|(l, g)| (l + state.gamma * g).max(0.0))
        .collect();
    let grad = loss.gradient(&state.x);
    let spec = SubproblemSpec {
        anchor: &state.x,
        loss_grad: &grad,
        dual_weight: &dual_weight,
        gamma: state.gamma,
        alpha: state.alpha,
        constraints,
        set: chi_next,
    };
    let out = solve_primal_subproblem(&spec, cfg)?;
    let next = SlaterState {
        t: state.t + 1,
        x: out.point,
        lambda: lambda.clone(),
        g_now_at_x: g_now,
        alpha: state.alpha,
        gamma: state.gamma,
    };
    Ok((
        next,
        StepInfo {
            lambda,
            alpha: state.alpha,
            gamma: state.gamma,
            residual: out.residual,
        },
    ))
}

/// [`SlaterState`] behind the [`OnlineLearner`] interface.
#[derive(Debug, Clone)]
pub struct SlaterLearner {
    name: String,
    state: SlaterState,
    solver: SolverConfig,
}

impl SlaterLearner {
    pub fn new(name: impl Into<String>, state: SlaterState, solver: SolverConfig) -> Self {
        Self {
            name: name.into(),
            state,
            solver,
        }
    }

    pub fn state(&self) -> &SlaterState {
        &self.state
    }
}

impl OnlineLearner for SlaterLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn action(&self) -> &DecisionVector {
        &self.state.x
    }

    fn observe(&mut self, fb: &RoundFeedback<'_>) -> Result<StepInfo> {
        let (next, info) = slater_step(&self.state, fb.loss, fb.constraints, fb.next_set, &self.solver)?;
        self.state = next;
        Ok(info)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{AffineConstraints, NoConstraints, ZeroLoss};

    #[test]
    fn dual_update_examples() {
        assert_eq!(slater_dual_update(&[0.0], 1.0, &[0.0]), vec![0.0]);
        assert_eq!(slater_dual_update(&[1.0, 0.0], 0.5, &[2.0, -1.0]), vec![2.0, 0.5]);
        assert_eq!(slater_dual_update(&[5.0], 1.0, &[-2.0]), vec![3.0]);
    }

    #[test]
    fn no_forces_keeps_state() {
        let set = FeasibleSet::cube(2, -1.0, 1.0).unwrap();
        let x1 = DecisionVector::new(vec![0.1, 0.9]).unwrap();
        let s = SlaterState::new(2.0, 1.0, 1, x1.clone()).unwrap();
        let (n, info) = slater_step(&s, &ZeroLoss, &NoConstraints { k: 1 }, &set, &SolverConfig::default()).unwrap();
        assert_eq!(n.action(), &x1);
        assert_eq!(info.lambda, vec![0.0]);
    }

    #[test]
    fn stepwise_arithmetic() {
        // g(x) = x − 0.5 at x = 1 with γ = 1: λ = 0.5, weight = 1.0
        let set = FeasibleSet::cube(1, -1.0, 1.0).unwrap();
        let s = SlaterState::new(1.0, 1.0, 1, DecisionVector::new(vec![1.0]).unwrap()).unwrap();
        let g = AffineConstraints {
            matrix: vec![vec![1.0]],
            offset: vec![-0.5],
        };
        let (n, info) = slater_step(&s, &ZeroLoss, &g, &set, &SolverConfig::default()).unwrap();
        assert_eq!(info.lambda, vec![0.5]);
        // primal: minimize 1.0·(x − 0.5) + (x − 1)² → x = 0.5
        assert!((n.action()[0] - 0.5).abs() < 1e-8);
    }
}
