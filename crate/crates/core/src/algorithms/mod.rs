//! Online learners and the loop that drives them through an instance.

mod doubling;
mod saddle;
mod schedule;
mod slater;
mod vqb;

pub use doubling::{doubling_run, epoch_schedule, DoublingLearner, LearnerFactory};
pub use saddle::{saddle_step, SaddleLearner, SaddleState};
pub use schedule::{
    alpha_schedule, gamma_schedule, preset_params, slater_params, slater_queue_bound, PresetParams,
    SaddleParams, ScheduleCase, PRESET_NAMES,
};
pub use slater::{slater_dual_update, slater_step, SlaterLearner, SlaterState};
pub use vqb::{vqb_dual_update, vqb_step, VqbLearner, VqbState};

use rayon::prelude::*;

use crate::error::Result;
use crate::metrics::{RoundRecord, Trajectory};
use crate::problem::{ConstraintOracle, DecisionVector, FeasibleSet, LossOracle, ProblemInstance};
use crate::subsolver::{per_slot_minimizer, SolverConfig};
use crate::vecops;

/// Full-information feedback revealed after the round-`t` decision.
#[derive(Debug, Clone, Copy)]
pub struct RoundFeedback<'a> {
    pub t: usize,
    pub loss: &'a dyn LossOracle,
    pub constraints: &'a dyn ConstraintOracle,
    /// Feasible set of this round.
    pub set: &'a FeasibleSet,
    /// Feasible set of the next round (the current one at the last round).
    pub next_set: &'a FeasibleSet,
    pub minimizer: Option<&'a DecisionVector>,
}

/// Per-round diagnostics returned by `observe`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Queue vector after this round's dual update.
    pub lambda: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    /// Fixed-point residual of the primal update that produced the next action.
    pub residual: f64,
}

/// A learner that commits to an action, then observes the round.
pub trait OnlineLearner: Send {
    fn name(&self) -> &str;
    /// The action for the current round.
    fn action(&self) -> &DecisionVector;
    fn observe(&mut self, feedback: &RoundFeedback<'_>) -> Result<StepInfo>;
}

impl<L: OnlineLearner + ?Sized> OnlineLearner for Box<L> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn action(&self) -> &DecisionVector {
        (**self).action()
    }
    fn observe(&mut self, feedback: &RoundFeedback<'_>) -> Result<StepInfo> {
        (**self).observe(feedback)
    }
}

/// Per-slot minimizers of an instance and their losses.
#[derive(Debug, Clone)]
pub struct Comparators {
    pub points: Vec<DecisionVector>,
    pub losses: Vec<f64>,
    /// Largest constraint value of any comparator (0 when all feasible).
    pub max_violation: f64,
    /// True when the points came from the numerical minimizer rather than
    /// the generator.
    pub solver_computed: bool,
    pub warnings: Vec<String>,
}

impl Comparators {
    /// Uses the generator's minimizers when present, otherwise solves each
    /// round (in parallel; results do not depend on thread count).
    pub fn for_instance(instance: &ProblemInstance, cfg: &SolverConfig) -> Result<Self> {
        let rounds = instance.rounds();
        let solved: Vec<Result<(DecisionVector, Option<String>)>> = rounds
            .par_iter()
            .enumerate()
            .map(|(i, r)| match &r.minimizer {
                Some(p) => Ok((p.clone(), None)),
                None => per_slot_minimizer(r.loss.as_ref(), r.constraints.as_ref(), &r.set, cfg)
                    .map(|o| (o.point, o.warning.map(|w| format!("round {}: {w}", i + 1))))
                    .map_err(|e| e.at_round(i + 1)),
            })
            .collect();
        let mut points = Vec::with_capacity(rounds.len());
        let mut warnings = Vec::new();
        for s in solved {
            let (p, w) = s?;
            points.push(p);
            warnings.extend(w);
        }
        let losses = rounds.iter().zip(&points).map(|(r, p)| r.loss.value(p)).collect();
        let max_violation = rounds
            .iter()
            .zip(&points)
            .flat_map(|(r, p)| r.constraints.values(p))
            .fold(0.0, f64::max);
        Ok(Self {
            points,
            losses,
            max_violation,
            solver_computed: !instance.has_minimizers(),
            warnings,
        })
    }
}

/// Runs a learner through every round of `instance`, feeding it the
/// comparator points as `x_t^*`.
pub fn run_learner(
    learner: &mut dyn OnlineLearner,
    instance: &ProblemInstance,
    comparators: &Comparators,
) -> Result<Trajectory> {
    let horizon = instance.horizon();
    let mut records = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let round = instance.round(t)?;
        let x = learner.action().clone();
        let loss = round.loss.value(&x);
        let constraints = round.constraints.values(&x);
        let next_set = if t < horizon { &instance.round(t + 1)?.set } else { &round.set };
        let feedback = RoundFeedback {
            t,
            loss: round.loss.as_ref(),
            constraints: round.constraints.as_ref(),
            set: &round.set,
            next_set,
            minimizer: comparators.points.get(t - 1),
        };
        let info = learner.observe(&feedback).map_err(|e| e.at_round(t))?;
        records.push(RoundRecord {
            t,
            action: x.into_inner(),
            loss,
            constraints,
            lambda_norm: vecops::norm(&info.lambda),
            lambda: info.lambda,
            alpha: info.alpha,
            gamma: info.gamma,
            residual: info.residual,
        });
    }
    Ok(Trajectory {
        algorithm: learner.name().to_string(),
        seed: None,
        records,
    })
}

/// `x_t^*` from the feedback, or from the numerical minimizer when absent.
pub(crate) fn minimizer_or_solve(fb: &RoundFeedback<'_>) -> Result<DecisionVector> {
    match fb.minimizer {
        Some(p) => Ok(p.clone()),
        None => Ok(per_slot_minimizer(fb.loss, fb.constraints, fb.set, &SolverConfig::for_minimizer())?.point),
    }
}
