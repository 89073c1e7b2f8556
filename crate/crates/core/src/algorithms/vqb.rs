//! Virtual-queue learner with time-varying step sizes.

use super::schedule::{alpha_schedule, gamma_schedule, ScheduleCase};
use super::{minimizer_or_solve, OnlineLearner, RoundFeedback, StepInfo};
use crate::error::{Error, Result};
use crate::problem::{AssumptionConstants, ConstraintOracle, DecisionVector, FeasibleSet, LossOracle};
use crate::subsolver::{solve_primal_subproblem, SolverConfig, SubproblemSpec};
use crate::vecops;

/// `max{λ + γg, −γg}` componentwise.
pub fn vqb_dual_update(lambda_prev: &[f64], gamma_prev: f64, g_prev_at_x: &[f64]) -> Vec<f64> {
    lambda_prev
        .iter()
        .zip(g_prev_at_x)
        .map(|(l, g)| {
            let s = gamma_prev * g;
            // + 0.0 turns a -0.0 from max(0, -0) into +0
            (l + s).max(-s) + 0.0
        })
        .collect()
}

/// State before round `t`: the action `x_t`, `λ(t−1)`, `g_{t−1}(x_t)` and
/// `γ_{t−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VqbState {
    t: usize,
    x: DecisionVector,
    lambda: Vec<f64>,
    g_prev_at_x: Vec<f64>,
    gamma_prev: f64,
    path_len: f64,
    prev_star: Option<DecisionVector>,
    case: ScheduleCase,
    constants: AssumptionConstants,
    horizon: usize,
}

impl VqbState {
    /// Round-1 state: `λ(0) = 0`, `g_0 ≡ 0`, `γ_0` from the schedule at `t = 0`.
    pub fn new(
        case: ScheduleCase,
        constants: AssumptionConstants,
        horizon: usize,
        num_constraints: usize,
        x1: DecisionVector,
    ) -> Result<Self> {
        constants.validate()?;
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        let gamma_prev = gamma_schedule(case, 0, constants.beta, constants.diameter);
        Ok(Self {
            t: 1,
            x: x1,
            lambda: vec![0.0; num_constraints],
            g_prev_at_x: vec![0.0; num_constraints],
            gamma_prev,
            path_len: 0.0,
            prev_star: None,
            case,
            constants,
            horizon,
        })
    }

    pub fn round(&self) -> usize {
        self.t
    }
    pub fn action(&self) -> &DecisionVector {
        &self.x
    }
    /// `λ(t−1)`.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }
    /// `g_{t−1}(x_t)`.
    pub fn g_prev_at_x(&self) -> &[f64] {
        &self.g_prev_at_x
    }
    /// `γ_{t−1}`.
    pub fn gamma_prev(&self) -> f64 {
        self.gamma_prev
    }
    /// `Σ_{i<t} ‖x_i^* − x_{i−1}^*‖`.
    pub fn path_len(&self) -> f64 {
        self.path_len
    }
    pub fn case(&self) -> ScheduleCase {
        self.case
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

/// One round: dual update with `(γ_{t−1}, g_{t−1}(x_t))`, then the primal
/// update over `chi_next` with `α_t`, `γ_t`. Returns the state for round
/// `t+1` and the round's diagnostics (`lambda` is `λ(t)`).
pub fn vqb_step(
    state: &VqbState,
    loss: &dyn LossOracle,
    constraints: &dyn ConstraintOracle,
    chi_next: &FeasibleSet,
    x_star: &DecisionVector,
    cfg: &SolverConfig,
) -> Result<(VqbState, StepInfo)> {
    let k = state.lambda.len();
    if constraints.num_constraints() != k {
        return Err(Error::LengthMismatch {
            what: "constraint count",
            expected: k,
            actual: constraints.num_constraints(),
        });
    }
    let t = state.t;
    let lambda = vqb_dual_update(&state.lambda, state.gamma_prev, &state.g_prev_at_x);

    let step = state.prev_star.as_ref().map_or(0.0, |p| vecops::dist(p, x_star));
    let path_len = state.path_len + step;
    let c = &state.constants;
    let alpha = alpha_schedule(t, state.horizon, c.diameter, path_len);
    let gamma = gamma_schedule(state.case, t, c.beta, c.diameter);

    let dual_weight: Vec<f64> = lambda
        .iter()
        .zip(&state.g_prev_at_x)
        .map(|(l, g)| (l + state.gamma_prev * g).max(0.0))
        .collect();
    let grad = loss.gradient(&state.x);
    let spec = SubproblemSpec {
        anchor: &state.x,
        loss_grad: &grad,
        dual_weight: &dual_weight,
        gamma,
        alpha,
        constraints,
        set: chi_next,
    };
    let out = solve_primal_subproblem(&spec, cfg)?;
    let g_next = constraints.values(&out.point);

    let next = VqbState {
        t: t + 1,
        x: out.point,
        lambda: lambda.clone(),
        g_prev_at_x: g_next,
        gamma_prev: gamma,
        path_len,
        prev_star: Some(x_star.clone()),
        case: state.case,
        constants: state.constants.clone(),
        horizon: state.horizon,
    };
    Ok((
        next,
        StepInfo {
            lambda,
            alpha,
            gamma,
            residual: out.residual,
        },
    ))
}

/// [`VqbState`] behind the [`OnlineLearner`] interface.
#[derive(Debug, Clone)]
pub struct VqbLearner {
    name: String,
    state: VqbState,
    solver: SolverConfig,
}

impl VqbLearner {
    pub fn new(name: impl Into<String>, state: VqbState, solver: SolverConfig) -> Self {
        Self {
            name: name.into(),
            state,
            solver,
        }
    }

    pub fn state(&self) -> &VqbState {
        &self.state
    }
}

impl OnlineLearner for VqbLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn action(&self) -> &DecisionVector {
        &self.state.x
    }

    fn observe(&mut self, fb: &RoundFeedback<'_>) -> Result<StepInfo> {
        let star = minimizer_or_solve(fb)?;
        let (next, info) = vqb_step(&self.state, fb.loss, fb.constraints, fb.next_set, &star, &self.solver)?;
        self.state = next;
        Ok(info)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{AffineConstraints, LinearLoss, NoConstraints, ZeroLoss};

    #[test]
    fn dual_update_examples() {
        assert_eq!(vqb_dual_update(&[0.0, 0.0], 3.0, &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(vqb_dual_update(&[1.0, 0.0], 0.5, &[2.0, -1.0]), vec![2.0, 0.5]);
        assert_eq!(vqb_dual_update(&[0.2], 1.0, &[-3.0]), vec![3.0]);
    }

    fn constants() -> AssumptionConstants {
        AssumptionConstants::new(1.0, 1.0, 2.0, 1).unwrap()
    }

    #[test]
    fn no_forces_keeps_action_and_queue() {
        let set = FeasibleSet::cube(2, -1.0, 1.0).unwrap();
        let x1 = DecisionVector::new(vec![0.3, -0.4]).unwrap();
        let mut s = VqbState::new(ScheduleCase::Case2, constants(), 10, 1, x1.clone()).unwrap();
        for _ in 0..5 {
            let (n, info) = vqb_step(&s, &ZeroLoss, &NoConstraints { k: 1 }, &set, &x1, &SolverConfig::default()).unwrap();
            assert_eq!(n.action(), &x1);
            assert_eq!(info.lambda, vec![0.0]);
            s = n;
        }
    }

    #[test]
    fn single_round_closed_form() {
        let set = FeasibleSet::cube(1, -1.0, 1.0).unwrap();
        let s = VqbState::new(ScheduleCase::Case1, constants(), 4, 1, DecisionVector::zeros(1)).unwrap();
        assert!((s.gamma_prev() - 0.5).abs() < 1e-15);
        let f = LinearLoss {
            coeffs: vec![1.0],
            offset: 0.0,
        };
        let g = AffineConstraints {
            matrix: vec![vec![1.0]],
            offset: vec![-2.0],
        };
        let star = DecisionVector::new(vec![-1.0]).unwrap();
        let (n, info) = vqb_step(&s, &f, &g, &set, &star, &SolverConfig::default()).unwrap();
        assert_eq!(info.lambda, vec![0.0]);
        assert!((info.alpha - 2f64.sqrt()).abs() < 1e-15);
        assert!((info.gamma - 0.5).abs() < 1e-15);
        assert!((n.action()[0] + 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-7, "{:?}", n.action());
        assert_eq!(n.g_prev_at_x(), &[n.action()[0] - 2.0]);
    }

    #[test]
    fn queue_composes_with_dual_update() {
        let set = FeasibleSet::cube(2, -1.0, 1.0).unwrap();
        let c = AssumptionConstants::new(1.0, 1.0, 2.0, 2).unwrap();
        let mut s = VqbState::new(ScheduleCase::Case1, c, 4, 2, DecisionVector::zeros(2)).unwrap();
        s.lambda = vec![1.0, 0.0];
        s.gamma_prev = 0.5;
        s.g_prev_at_x = vec![2.0, -1.0];
        let g = NoConstraints { k: 2 };
        let star = DecisionVector::zeros(2);
        let (n, info) = vqb_step(&s, &ZeroLoss, &g, &set, &star, &SolverConfig::default()).unwrap();
        assert_eq!(info.lambda, vec![2.0, 0.5]);
        assert_eq!(n.lambda(), &[2.0, 0.5]);
    }

    #[test]
    fn constraint_count_mismatch_is_error() {
        let set = FeasibleSet::cube(1, -1.0, 1.0).unwrap();
        let s = VqbState::new(ScheduleCase::Case1, constants(), 4, 1, DecisionVector::zeros(1)).unwrap();
        let err = vqb_step(&s, &ZeroLoss, &NoConstraints { k: 2 }, &set, &DecisionVector::zeros(1), &SolverConfig::default());
        assert!(matches!(err, Err(Error::LengthMismatch { .. })));
    }
}
