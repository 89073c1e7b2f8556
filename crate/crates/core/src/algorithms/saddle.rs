//! Generic online primal-dual (saddle-point) baseline.

use super::schedule::SaddleParams;
use super::{OnlineLearner, RoundFeedback, StepInfo};
use crate::error::{Error, Result};
use crate::problem::{ConstraintOracle, DecisionVector, FeasibleSet, LossOracle};
use crate::vecops;

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleState {
    t: usize,
    x: DecisionVector,
    lambda: Vec<f64>,
    eta: f64,
    mu: f64,
}

impl SaddleState {
    pub fn new(eta: f64, mu: f64, num_constraints: usize, x1: DecisionVector) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite() && mu >= 0.0 && mu.is_finite()) {
            return Err(Error::Config(format!("need eta > 0 and mu >= 0, got eta={eta} mu={mu}")));
        }
        Ok(Self {
            t: 1,
            x: x1,
            lambda: vec![0.0; num_constraints],
            eta,
            mu,
        })
    }

    pub fn with_lambda(mut self, lambda: Vec<f64>) -> Result<Self> {
        if lambda.len() != self.lambda.len() {
            return Err(Error::LengthMismatch {
                what: "initial queue",
                expected: self.lambda.len(),
                actual: lambda.len(),
            });
        }
        if lambda.iter().any(|l| !(*l >= 0.0)) {
            return Err(Error::Config("initial queue must be nonnegative".into()));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn action(&self) -> &DecisionVector {
        &self.x
    }
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// `x' = Π(x − η(∇f(x) + J(x)ᵀλ))`, `λ' = [λ + μ g(x')]_+`.
pub fn saddle_step(
    state: &SaddleState,
    loss: &dyn LossOracle,
    constraints: &dyn ConstraintOracle,
    chi_next: &FeasibleSet,
) -> Result<SaddleState> {
    let n = state.x.len();
    let mut dir = loss.gradient(&state.x);
    if state.lambda.iter().any(|l| *l > 0.0) {
        let jl = vecops::jac_t_times(&constraints.jacobian(&state.x), &state.lambda, n);
        vecops::axpy(1.0, &jl, &mut dir);
    }
    let mut x: Vec<f64> = state.x.iter().zip(&dir).map(|(xi, d)| xi - state.eta * d).collect();
    if !vecops::all_finite(&x) {
        return Err(Error::NonFinite {
            context: "saddle-point primal step".into(),
            iterate: x,
        });
    }
    chi_next.project_in_place(&mut x);
    let g = constraints.values(&x);
    let lambda = state
        .lambda
        .iter()
        .zip(&g)
        .map(|(l, gk)| (l + state.mu * gk).max(0.0))
        .collect();
    Ok(SaddleState {
        t: state.t + 1,
        x: DecisionVector::from_finite(x),
        lambda,
        eta: state.eta,
        mu: state.mu,
    })
}

/// Saddle-point baseline as an [`OnlineLearner`]. Trajectories report
/// `alpha = 1/(2η)` (the equivalent proximal weight) and `gamma = μ`.
#[derive(Debug, Clone)]
pub struct SaddleLearner {
    name: String,
    state: SaddleState,
}

impl SaddleLearner {
    pub fn new(name: impl Into<String>, state: SaddleState) -> Self {
        Self {
            name: name.into(),
            state,
        }
    }

    pub fn from_params(name: impl Into<String>, p: &SaddleParams, num_constraints: usize, x1: DecisionVector) -> Result<Self> {
        Ok(Self::new(name, SaddleState::new(p.eta, p.mu, num_constraints, x1)?))
    }

    pub fn state(&self) -> &SaddleState {
        &self.state
    }
}

impl OnlineLearner for SaddleLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn action(&self) -> &DecisionVector {
        &self.state.x
    }

    fn observe(&mut self, fb: &RoundFeedback<'_>) -> Result<StepInfo> {
        if fb.constraints.num_constraints() != self.state.lambda.len() {
            return Err(Error::LengthMismatch {
                what: "constraint count",
                expected: self.state.lambda.len(),
                actual: fb.constraints.num_constraints(),
            });
        }
        let lambda = self.state.lambda.clone();
        self.state = saddle_step(&self.state, fb.loss, fb.constraints, fb.next_set)?;
        Ok(StepInfo {
            lambda,
            alpha: 1.0 / (2.0 * self.state.eta),
            gamma: self.state.mu,
            residual: 0.0,
        })
    }
}
