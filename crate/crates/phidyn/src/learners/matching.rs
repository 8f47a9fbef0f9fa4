//! Regret matching, regret matching plus, and the CFR composition that
//! turns per-infoset matching learners into a regret minimizer over a
//! sequence-form subtree polytope.

use super::{LearnerError, Phase, RegretMinimizer};
use crate::efg::index::{InfosetId, PlayerTreeIndex};
use crate::efg::PlayerId;
use crate::scalar::{real, Real};
use std::sync::Arc;

/// Strategy proportional to the positive part of the cumulative regrets;
/// uniform when no regret is positive.
pub fn regret_matching_strategy<R: Real>(cumulative: &[R]) -> Vec<R> {
    let total = cumulative
        .iter()
        .fold(R::zero(), |acc, r| acc + r.max(R::zero()));
    if total > R::zero() {
        cumulative.iter().map(|r| r.max(R::zero()) / total).collect()
    } else {
        vec![R::one() / real(cumulative.len() as f64); cumulative.len()]
    }
}

/// Regret matching (or RM+) on a probability simplex.
#[derive(Debug, Clone)]
pub struct MatchingLearner<R> {
    plus: bool,
    cumulative: Vec<R>,
    last: Vec<R>,
    phase: Phase,
}

impl<R: Real> MatchingLearner<R> {
    pub fn new(num_actions: usize, plus: bool) -> Self {
        MatchingLearner {
            plus,
            cumulative: vec![R::zero(); num_actions],
            last: vec![R::zero(); num_actions],
            phase: Phase::ExpectNext,
        }
    }

    fn strategy(&self) -> Vec<R> {
        regret_matching_strategy(&self.cumulative)
    }

    /// Regret update against the learner's own last play; RM+ clamps the
    /// stored regrets at zero afterwards.
    fn update(&mut self, utility: &[R]) {
        let value = self
            .last
            .iter()
            .zip(utility)
            .fold(R::zero(), |acc, (p, u)| acc + *p * *u);
        for (c, u) in self.cumulative.iter_mut().zip(utility) {
            *c = *c + *u - value;
            if self.plus {
                *c = c.max(R::zero());
            }
        }
    }

    pub fn cumulative_regrets(&self) -> &[R] {
        &self.cumulative
    }
}

impl<R: Real> RegretMinimizer<R> for MatchingLearner<R> {
    fn next_strategy(&mut self) -> Result<Vec<R>, LearnerError> {
        self.phase.next()?;
        self.last = self.strategy();
        Ok(self.last.clone())
    }

    fn observe_utility(&mut self, utility: &[R]) -> Result<(), LearnerError> {
        self.phase.observe()?;
        if utility.len() != self.cumulative.len() {
            return Err(LearnerError::Dimension {
                got: utility.len(),
                expected: self.cumulative.len(),
            });
        }
        self.update(utility);
        Ok(())
    }
}

/// CFR over the subtree polytope rooted at one infoset: one matching
/// learner per infoset of the subtree, composed by counterfactual-value
/// propagation. Strategies are behavioral products pushed into sequence
/// form; utilities flow bottom-up.
#[derive(Debug, Clone)]
pub struct CfrSubtreeLearner<R> {
    index: Arc<PlayerTreeIndex<R>>,
    root: InfosetId,
    /// One simplex learner per subtree infoset, in the subtree's local
    /// infoset order.
    locals: Vec<MatchingLearner<R>>,
    last_behavioral: Vec<Vec<R>>,
    phase: Phase,
}

impl<R: Real> CfrSubtreeLearner<R> {
    pub fn new(index: Arc<PlayerTreeIndex<R>>, root: InfosetId, plus: bool) -> Self {
        let sub = index.subtree(root);
        let locals = sub
            .infosets
            .iter()
            .map(|j| MatchingLearner::new(index.infoset(*j).num_actions(), plus))
            .collect();
        let last_behavioral = sub
            .infosets
            .iter()
            .map(|j| {
                let n = index.infoset(*j).num_actions();
                vec![R::one() / real(n as f64); n]
            })
            .collect();
        CfrSubtreeLearner {
            index,
            root,
            locals,
            last_behavioral,
            phase: Phase::ExpectNext,
        }
    }

    pub fn player(&self) -> PlayerId {
        self.index.player()
    }

    fn pushforward(&self, behavioral: &[Vec<R>]) -> Vec<R> {
        let sub = self.index.subtree(self.root);
        let mut q = vec![R::zero(); sub.dim()];
        for (pos, j) in sub.infosets.iter().enumerate() {
            let info = self.index.infoset(*j);
            let reach = if *j == self.root {
                R::one()
            } else {
                q[sub.local_of(info.parent_seq).expect("subtree parent")]
            };
            for a in 0..info.num_actions() {
                q[sub.local_of(info.seq(a)).unwrap()] = reach * behavioral[pos][a];
            }
        }
        q
    }
}

impl<R: Real> RegretMinimizer<R> for CfrSubtreeLearner<R> {
    fn next_strategy(&mut self) -> Result<Vec<R>, LearnerError> {
        self.phase.next()?;
        for (beh, local) in self.last_behavioral.iter_mut().zip(&mut self.locals) {
            local.phase = Phase::ExpectNext;
            *beh = local.next_strategy()?;
        }
        Ok(self.pushforward(&self.last_behavioral))
    }

    fn observe_utility(&mut self, utility: &[R]) -> Result<(), LearnerError> {
        self.phase.observe()?;
        let sub = self.index.subtree(self.root);
        if utility.len() != sub.dim() {
            return Err(LearnerError::Dimension {
                got: utility.len(),
                expected: sub.dim(),
            });
        }
        // Counterfactual values bottom-up: children have larger local
        // positions, so one reverse pass suffices.
        let n = sub.infosets.len();
        let local_pos: std::collections::HashMap<InfosetId, usize> = sub
            .infosets
            .iter()
            .enumerate()
            .map(|(p, j)| (*j, p))
            .collect();
        let mut value = vec![R::zero(); n];
        let mut cf: Vec<Vec<R>> = Vec::with_capacity(n);
        cf.resize_with(n, Vec::new);
        for pos in (0..n).rev() {
            let j = sub.infosets[pos];
            let info = self.index.infoset(j);
            let mut vals = Vec::with_capacity(info.num_actions());
            let mut node_value = R::zero();
            for a in 0..info.num_actions() {
                let seq = info.seq(a);
                let mut v = utility[sub.local_of(seq).unwrap()];
                for j2 in self.index.children_of_seq(seq) {
                    v = v + value[local_pos[j2]];
                }
                node_value = node_value + self.last_behavioral[pos][a] * v;
                vals.push(v);
            }
            value[pos] = node_value;
            cf[pos] = vals;
        }
        for (pos, local) in self.locals.iter_mut().enumerate() {
            local.phase = Phase::ExpectObserve;
            local.observe_utility(&cf[pos])?;
        }
        Ok(())
    }
}
