//! The composed regret minimizer over a deviation set.
//!
//! One local learner per trigger (over the trigger infoset's subtree
//! polytope) plus one simplex learner mixing the triggers form an external
//! regret minimizer over the deviation set's convex hull. Each round the
//! mixture is turned into a strategy through its unique fixed point, and the
//! observed utility `u` fans out as:
//!
//! - to the trigger's local learner: `v[s] = u[s] * x[mass seq]` over the
//!   subtree (the only coordinates of `u (x)^T` its continuation touches);
//! - to the mixing learner: the deviation value of each trigger's current
//!   continuation.
//!
//! With exact fixed points the external regret of this composition equals
//! the deviation regret of the realized strategies, so driving it down
//! drives play toward the corresponding correlated equilibrium.
//!
//! Regret matching can put zero weight on triggers or actions, which would
//! break the fixed point's uniqueness, so the played profile mixes every
//! learner output with `1e-12` of uniform mass. This applies identically to
//! all algorithm kinds; the learners themselves are updated with their own
//! unmixed plays.

use super::fixed_point::fixed_point;
use super::{
    deviation_value, local_utility, num_triggers, trigger_infoset, DeviationMode, RankOneUtility,
    TriggerError, TriggerProfile,
};
use crate::efg::index::{PlayerTreeIndex, SeqVec, TreePolytope};
use crate::learners::{
    CfrSubtreeLearner, LearnerError, LiftedLearner, MatchingLearner, RegretMinimizer,
};
use crate::scalar::{real, Real};
use std::sync::Arc;

/// Which learners sit behind the composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    /// Log-barrier optimistic FTRL on lifted polytopes, everywhere.
    LrlOftrl,
    /// CFR with regret matching locally, regret matching on the mixture.
    CfrRm,
    /// CFR with RM+ locally, RM+ on the mixture.
    CfrRmPlus,
}

impl AlgorithmKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmKind::LrlOftrl => "lrl-oftrl",
            AlgorithmKind::CfrRm => "cfr-rm",
            AlgorithmKind::CfrRmPlus => "cfr-rm+",
        }
    }
}

/// Composition failures: learner errors or deviation/fixed-point errors.
#[derive(Debug, Clone, thiserror::Error)]
pub enum PsiError {
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Trigger(#[from] TriggerError),
}

enum LocalLearner<R> {
    Lifted(LiftedLearner<R>),
    Cfr(CfrSubtreeLearner<R>),
}

impl<R: Real> LocalLearner<R> {
    fn next(&mut self) -> Result<Vec<R>, LearnerError> {
        match self {
            LocalLearner::Lifted(l) => l.next_strategy(),
            LocalLearner::Cfr(l) => l.next_strategy(),
        }
    }

    fn observe(&mut self, u: &[R]) -> Result<(), LearnerError> {
        match self {
            LocalLearner::Lifted(l) => l.observe_utility(u),
            LocalLearner::Cfr(l) => l.observe_utility(u),
        }
    }
}

enum MixLearner<R> {
    Lifted(LiftedLearner<R>),
    Matching(MatchingLearner<R>),
}

impl<R: Real> MixLearner<R> {
    fn next(&mut self) -> Result<Vec<R>, LearnerError> {
        match self {
            MixLearner::Lifted(l) => l.next_strategy(),
            MixLearner::Matching(l) => l.next_strategy(),
        }
    }

    fn observe(&mut self, u: &[R]) -> Result<(), LearnerError> {
        match self {
            MixLearner::Lifted(l) => l.observe_utility(u),
            MixLearner::Matching(l) => l.observe_utility(u),
        }
    }
}

/// Deviation-set regret minimizer for one player. Each round emits the
/// played [`TriggerProfile`] and its fixed-point strategy, then expects the
/// player's utility gradient.
pub struct PsiMinimizer<R> {
    index: Arc<PlayerTreeIndex<R>>,
    mode: DeviationMode,
    locals: Vec<LocalLearner<R>>,
    mix: MixLearner<R>,
    epsilon: R,
    played: Option<(TriggerProfile<R>, SeqVec<R>)>,
    expect_next: bool,
}

impl<R: Real> PsiMinimizer<R> {
    /// `eta` drives the local lifted learners, `eta_delta` the mixing
    /// learner; both are ignored by the matching-based kinds.
    pub fn new(
        index: Arc<PlayerTreeIndex<R>>,
        mode: DeviationMode,
        kind: AlgorithmKind,
        eta: R,
        eta_delta: R,
    ) -> Result<Self, PsiError> {
        let k = num_triggers(&index, mode);
        assert!(k > 0, "player never acts; no triggers to deviate through");
        let mut locals = Vec::with_capacity(k);
        for t in 0..k {
            let j = trigger_infoset(&index, mode, t)?;
            let local = match kind {
                AlgorithmKind::LrlOftrl => {
                    LocalLearner::Lifted(LiftedLearner::new(index.subtree(j).shape.clone(), eta)?)
                }
                AlgorithmKind::CfrRm => {
                    LocalLearner::Cfr(CfrSubtreeLearner::new(index.clone(), j, false))
                }
                AlgorithmKind::CfrRmPlus => {
                    LocalLearner::Cfr(CfrSubtreeLearner::new(index.clone(), j, true))
                }
            };
            locals.push(local);
        }
        let mix = match kind {
            AlgorithmKind::LrlOftrl => {
                MixLearner::Lifted(LiftedLearner::new(TreePolytope::simplex(k), eta_delta)?)
            }
            AlgorithmKind::CfrRm => MixLearner::Matching(MatchingLearner::new(k, false)),
            AlgorithmKind::CfrRmPlus => MixLearner::Matching(MatchingLearner::new(k, true)),
        };
        Ok(PsiMinimizer {
            index,
            mode,
            locals,
            mix,
            epsilon: real(1e-12),
            played: None,
            expect_next: true,
        })
    }

    pub fn mode(&self) -> DeviationMode {
        self.mode
    }

    pub fn index(&self) -> &Arc<PlayerTreeIndex<R>> {
        &self.index
    }

    /// Emits the played profile and its fixed-point strategy.
    pub fn next_strategy(&mut self) -> Result<(TriggerProfile<R>, SeqVec<R>), PsiError> {
        if !self.expect_next {
            return Err(LearnerError::Alternation {
                expected: "observe_utility",
            }
            .into());
        }
        let k = self.locals.len();
        let lambda_raw = self.mix.next()?;
        let keep = R::one() - self.epsilon;
        let lambda: Vec<R> = lambda_raw
            .iter()
            .map(|l| keep * *l + self.epsilon / real(k as f64))
            .collect();
        let mut continuations = Vec::with_capacity(k);
        for (t, local) in self.locals.iter_mut().enumerate() {
            let q_raw = local.next()?;
            let j = trigger_infoset(&self.index, self.mode, t)?;
            let uniform = self.index.uniform_subtree(j);
            continuations.push(
                q_raw
                    .iter()
                    .zip(&uniform)
                    .map(|(q, u)| keep * *q + self.epsilon * *u)
                    .collect(),
            );
        }
        let profile = TriggerProfile {
            mode: self.mode,
            lambda,
            continuations,
        };
        let strategy = fixed_point(&profile, &self.index)?;
        self.played = Some((profile.clone(), strategy.clone()));
        self.expect_next = false;
        Ok((profile, strategy))
    }

    /// Feeds the round's utility gradient back through the circuit.
    pub fn observe_utility(&mut self, utility: &SeqVec<R>) -> Result<(), PsiError> {
        if self.expect_next {
            return Err(LearnerError::Alternation {
                expected: "next_strategy",
            }
            .into());
        }
        let (profile, strategy) = self.played.as_ref().expect("played round cached");
        if utility.len() != self.index.num_seqs() || utility.player != self.index.player() {
            return Err(LearnerError::Dimension {
                got: utility.len(),
                expected: self.index.num_seqs(),
            }
            .into());
        }
        let rank_one = RankOneUtility {
            utility: &utility.values,
            strategy,
        };
        let mut mix_utility = Vec::with_capacity(self.locals.len());
        for t in 0..self.locals.len() {
            mix_utility.push(deviation_value(
                &self.index,
                self.mode,
                t,
                &profile.continuations[t],
                &rank_one,
            )?);
        }
        for (t, local) in self.locals.iter_mut().enumerate() {
            let v = local_utility(&self.index, self.mode, t, &rank_one)?;
            local.observe(&v)?;
        }
        self.mix.observe(&mix_utility)?;
        self.expect_next = true;
        Ok(())
    }
}
