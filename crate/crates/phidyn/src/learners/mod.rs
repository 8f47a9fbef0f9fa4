//! Online learning primitives behind one regret-minimizer contract.
//!
//! Every learner alternates strictly between [`RegretMinimizer::next_strategy`]
//! and [`RegretMinimizer::observe_utility`]; violating the alternation is an
//! error, not a panic. Learners are deterministic functions of their state.

pub mod lifted;
pub mod matching;

pub use lifted::{lift_utility, lrl_oftrl_step, LiftedLearner, LiftedPoint, OftrlState, SolveOptions};
pub use matching::{regret_matching_strategy, CfrSubtreeLearner, MatchingLearner};

use crate::scalar::Real;

/// Failure modes of the learners.
#[derive(Debug, Clone, thiserror::Error)]
pub enum LearnerError {
    #[error("alternation violation: expected a call to `{expected}`")]
    Alternation { expected: &'static str },
    #[error("utility has dimension {got}, learner domain has {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("barrier solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
}

/// The two-call-per-round online learning contract.
pub trait RegretMinimizer<R: Real> {
    /// Emits the learner's next point in its domain.
    fn next_strategy(&mut self) -> Result<Vec<R>, LearnerError>;
    /// Feeds back the utility vector for the round.
    fn observe_utility(&mut self, utility: &[R]) -> Result<(), LearnerError>;
}

/// Tracks the next/observe alternation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Phase {
    ExpectNext,
    ExpectObserve,
}

impl Phase {
    pub(crate) fn next(&mut self) -> Result<(), LearnerError> {
        match self {
            Phase::ExpectNext => {
                *self = Phase::ExpectObserve;
                Ok(())
            }
            Phase::ExpectObserve => Err(LearnerError::Alternation {
                expected: "observe_utility",
            }),
        }
    }

    pub(crate) fn observe(&mut self) -> Result<(), LearnerError> {
        match self {
            Phase::ExpectObserve => {
                *self = Phase::ExpectNext;
                Ok(())
            }
            Phase::ExpectNext => Err(LearnerError::Alternation {
                expected: "next_strategy",
            }),
        }
    }
}
