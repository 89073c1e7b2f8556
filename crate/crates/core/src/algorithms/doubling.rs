//! Doubling-trick wrapper for learners that need the horizon up front.

use super::{run_learner, Comparators, OnlineLearner, RoundFeedback, StepInfo};
use crate::error::Result;
use crate::metrics::Trajectory;
use crate::problem::{DecisionVector, ProblemInstance};

/// Builds a fresh learner for an epoch of the given length, starting from
/// the given action.
pub type LearnerFactory = Box<dyn Fn(usize, DecisionVector) -> Result<Box<dyn OnlineLearner>> + Send + Sync>;

/// Epoch lengths `2, 4, 8, …` covering `horizon` rounds, the last one
/// truncated.
pub fn epoch_schedule(horizon: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut covered = 0;
    let mut len = 2;
    while covered < horizon {
        out.push(len.min(horizon - covered));
        covered += len;
        len *= 2;
    }
    out
}

/// Runs epoch `i = 1, 2, …` with a learner built for horizon `2^i`. All
/// inner state is dropped at an epoch boundary; only the last action
/// carries over as the next epoch's starting point.
pub struct DoublingLearner {
    name: String,
    factory: LearnerFactory,
    epoch: u32,
    rounds_in_epoch: usize,
    inner: Box<dyn OnlineLearner>,
}

impl DoublingLearner {
    pub fn new(name: impl Into<String>, factory: LearnerFactory, x1: DecisionVector) -> Result<Self> {
        let inner = factory(2, x1)?;
        Ok(Self {
            name: name.into(),
            factory,
            epoch: 1,
            rounds_in_epoch: 0,
            inner,
        })
    }

    /// Current epoch index, starting at 1.
    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn rounds_in_epoch(&self) -> usize {
        self.rounds_in_epoch
    }
}

impl std::fmt::Debug for DoublingLearner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DoublingLearner")
            .field("name", &self.name)
            .field("epoch", &self.epoch)
            .field("rounds_in_epoch", &self.rounds_in_epoch)
            .finish()
    }
}

impl OnlineLearner for DoublingLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn action(&self) -> &DecisionVector {
        self.inner.action()
    }

    fn observe(&mut self, fb: &RoundFeedback<'_>) -> Result<StepInfo> {
        let info = self.inner.observe(fb)?;
        self.rounds_in_epoch += 1;
        if self.rounds_in_epoch == 1usize << self.epoch {
            self.epoch += 1;
            self.rounds_in_epoch = 0;
            let start = self.inner.action().clone();
            self.inner = (self.factory)(1usize << self.epoch, start)?;
        }
        Ok(info)
    }
}

/// Drives a [`DoublingLearner`] through `instance` without telling it the
/// horizon.
pub fn doubling_run(
    name: &str,
    factory: LearnerFactory,
    instance: &ProblemInstance,
    comparators: &Comparators,
    x1: DecisionVector,
) -> Result<Trajectory> {
    let mut learner = DoublingLearner::new(name, factory, x1)?;
    run_learner(&mut learner, instance, comparators)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_lengths() {
        assert_eq!(epoch_schedule(2), vec![2]);
        assert_eq!(epoch_schedule(10), vec![2, 4, 4]);
        assert_eq!(epoch_schedule(14), vec![2, 4, 8]);
        assert_eq!(epoch_schedule(1), vec![1]);
        assert!(epoch_schedule(0).is_empty());
        for t in 1..300 {
            assert_eq!(epoch_schedule(t).iter().sum::<usize>(), t);
        }
    }
}
