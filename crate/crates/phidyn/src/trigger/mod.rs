//! Trigger and coarse-trigger deviations.
//!
//! A trigger deviation is identified by a trigger sequence `(j, a)` (or, in
//! the coarse variant, a trigger infoset `j`) and a continuation over the
//! subtree polytope rooted at `j`. Applied to a strategy `x`, it keeps every
//! sequence outside the erased block, erases play weakly below the trigger,
//! and adds the continuation scaled by the trigger mass:
//!
//! ```text
//! (M x)[s] = x[s] * [s not erased] + q[s] * x[mass seq] * [s below j]
//! ```
//!
//! where the erased block is the set below the trigger sequence (coarse:
//! below the infoset) and the mass sequence is the trigger sequence (coarse:
//! the infoset's parent sequence). Deviations are never materialized as
//! matrices; everything uses this rank-one form. Mixtures of deviations
//! ([`TriggerProfile`]) admit unique fixed points when strictly positive,
//! computed in [`fixed_point`]; the composed regret minimizer over the
//! deviation set lives in [`circuit`].

pub mod circuit;
pub mod fixed_point;

pub use circuit::{AlgorithmKind, PsiError, PsiMinimizer};
pub use fixed_point::{fixed_point, stationary_distribution};

use crate::efg::index::{InfosetId, PlayerTreeIndex, SeqId, SeqVec, EMPTY_SEQ};
use crate::scalar::{is_positive, real, Real};

/// Which deviation family a profile ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviationMode {
    /// Trigger deviations, one per non-empty sequence.
    Efce,
    /// Coarse trigger deviations, one per infoset.
    Efcce,
}

impl DeviationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DeviationMode::Efce => "efce",
            DeviationMode::Efcce => "efcce",
        }
    }
}

/// Errors from deviation application and fixed-point computation.
#[derive(Debug, Clone, thiserror::Error)]
pub enum TriggerError {
    #[error("trigger {0} out of range for this index/mode")]
    TriggerOutOfRange(usize),
    #[error("continuation has dimension {got}, subtree has {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("trigger weights must be strictly positive and sum to 1")]
    BadLambda,
    #[error("continuation {0} is not strictly inside its subtree polytope")]
    BadContinuation(usize),
    #[error("matrix is not column-stochastic: column {column} sums to {sum}")]
    NotStochastic { column: usize, sum: f64 },
    #[error(
        "matrix entry ({row},{column}) is not strictly positive; the stationary distribution may not be unique"
    )]
    NonPositiveEntry { row: usize, column: usize },
    #[error("stationary distribution residual {0:.3e} exceeds 1e-11")]
    StationaryResidual(f64),
    #[error("singular linear system while solving for a stationary distribution")]
    Singular,
    #[error("reach probability underflow at infoset {0}")]
    ReachUnderflow(usize),
}

/// Number of triggers of a deviation family on one player's tree.
pub fn num_triggers<R: Real>(index: &PlayerTreeIndex<R>, mode: DeviationMode) -> usize {
    match mode {
        DeviationMode::Efce => index.num_seqs() - 1,
        DeviationMode::Efcce => index.num_infosets(),
    }
}

/// The infoset whose subtree a trigger's continuation ranges over.
pub fn trigger_infoset<R: Real>(
    index: &PlayerTreeIndex<R>,
    mode: DeviationMode,
    trigger: usize,
) -> Result<InfosetId, TriggerError> {
    if trigger >= num_triggers(index, mode) {
        return Err(TriggerError::TriggerOutOfRange(trigger));
    }
    match mode {
        DeviationMode::Efce => Ok(index
            .seq_owner(SeqId(trigger + 1))
            .expect("non-empty sequence")
            .0),
        DeviationMode::Efcce => Ok(InfosetId(trigger)),
    }
}

/// The sequence whose probability gates the deviation: the trigger sequence
/// itself, or the infoset's parent sequence in the coarse case.
pub fn trigger_mass_seq<R: Real>(
    index: &PlayerTreeIndex<R>,
    mode: DeviationMode,
    trigger: usize,
) -> Result<SeqId, TriggerError> {
    if trigger >= num_triggers(index, mode) {
        return Err(TriggerError::TriggerOutOfRange(trigger));
    }
    match mode {
        DeviationMode::Efce => Ok(SeqId(trigger + 1)),
        DeviationMode::Efcce => Ok(index.infoset(InfosetId(trigger)).parent_seq),
    }
}

/// Sequences whose play the deviation erases: weakly below the trigger
/// sequence, or the whole subtree for a coarse trigger.
fn erased_seqs<R: Real>(
    index: &PlayerTreeIndex<R>,
    mode: DeviationMode,
    trigger: usize,
) -> &[SeqId] {
    match mode {
        DeviationMode::Efce => index.below_seq(SeqId(trigger + 1)),
        DeviationMode::Efcce => &index.subtree(InfosetId(trigger)).seqs,
    }
}

/// A rank-one deviation utility `U = u (x)^T`, kept as the pair.
#[derive(Debug, Clone, Copy)]
pub struct RankOneUtility<'a, R> {
    pub utility: &'a [R],
    pub strategy: &'a SeqVec<R>,
}

fn apply_impl<R: Real>(
    index: &PlayerTreeIndex<R>,
    mode: DeviationMode,
    trigger: usize,
    q: &[R],
    x: &SeqVec<R>,
) -> Result<SeqVec<R>, TriggerError> {
    let j = trigger_infoset(index, mode, trigger)?;
    let sub = index.subtree(j);
    if q.len() != sub.dim() {
        return Err(TriggerError::Dimension {
            got: q.len(),
            expected: sub.dim(),
        });
    }
    let mass = x.get(trigger_mass_seq(index, mode, trigger)?);
    let mut out = x.values.clone();
    for s in erased_seqs(index, mode, trigger) {
        out[s.0] = R::zero();
    }
    for (local, s) in sub.seqs.iter().enumerate() {
        out[s.0] = out[s.0] + q[local] * mass;
    }
    Ok(SeqVec::new(x.player, out))
}

/// Applies the trigger deviation `(sigma_hat -> q)` to `x`. `q` is in the
/// local coordinates of the subtree at the trigger sequence's infoset.
pub fn apply_trigger_deviation<R: Real>(
    index: &PlayerTreeIndex<R>,
    trigger_seq: SeqId,
    q: &[R],
    x: &SeqVec<R>,
) -> Result<SeqVec<R>, TriggerError> {
    if trigger_seq == EMPTY_SEQ || trigger_seq.0 >= index.num_seqs() {
        return Err(TriggerError::TriggerOutOfRange(trigger_seq.0));
    }
    apply_impl(index, DeviationMode::Efce, trigger_seq.0 - 1, q, x)
}

/// Applies the coarse deviation `(j -> q)` to `x`.
pub fn apply_coarse_deviation<R: Real>(
    index: &PlayerTreeIndex<R>,
    trigger: InfosetId,
    q: &[R],
    x: &SeqVec<R>,
) -> Result<SeqVec<R>, TriggerError> {
    if trigger.0 >= index.num_infosets() {
        return Err(TriggerError::TriggerOutOfRange(trigger.0));
    }
    apply_impl(index, DeviationMode::Efcce, trigger.0, q, x)
}

/// `<apply(trigger, q, x), u>` in `O(|Sigma|)` via the rank-one form.
pub fn deviation_value<R: Real>(
    index: &PlayerTreeIndex<R>,
    mode: DeviationMode,
    trigger: usize,
    q: &[R],
    rank_one: &RankOneUtility<'_, R>,
) -> Result<R, TriggerError> {
    let j = trigger_infoset(index, mode, trigger)?;
    let sub = index.subtree(j);
    if q.len() != sub.dim() {
        return Err(TriggerError::Dimension {
            got: q.len(),
            expected: sub.dim(),
        });
    }
    let x = rank_one.strategy;
    let u = rank_one.utility;
    let mut total = x.dot(u);
    for s in erased_seqs(index, mode, trigger) {
        total = total - x.get(*s) * u[s.0];
    }
    let mass = x.get(trigger_mass_seq(index, mode, trigger)?);
    let cont = sub
        .seqs
        .iter()
        .enumerate()
        .fold(R::zero(), |acc, (local, s)| acc + q[local] * u[s.0]);
    Ok(total + mass * cont)
}

/// Utility vector seen by a trigger's local learner: the coordinates of
/// `U = u (x)^T` that interact with the continuation, i.e.
/// `v[s] = u[s] * x[mass seq]` over the subtree.
pub fn local_utility<R: Real>(
    index: &PlayerTreeIndex<R>,
    mode: DeviationMode,
    trigger: usize,
    rank_one: &RankOneUtility<'_, R>,
) -> Result<Vec<R>, TriggerError> {
    let j = trigger_infoset(index, mode, trigger)?;
    let mass = rank_one
        .strategy
        .get(trigger_mass_seq(index, mode, trigger)?);
    Ok(index
        .subtree(j)
        .seqs
        .iter()
        .map(|s| rank_one.utility[s.0] * mass)
        .collect())
}

/// A point of the deviation set's convex hull in its natural coordinates:
/// strictly positive mixing weights over the triggers plus one continuation
/// per trigger.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerProfile<R> {
    pub mode: DeviationMode,
    pub lambda: Vec<R>,
    /// Per trigger, a subtree vector in the local coordinates of the
    /// trigger infoset's subtree.
    pub continuations: Vec<Vec<R>>,
}

impl<R: Real> TriggerProfile<R> {
    /// Uniform mixing weights and uniform continuations.
    pub fn uniform(index: &PlayerTreeIndex<R>, mode: DeviationMode) -> Self {
        let k = num_triggers(index, mode);
        let continuations = (0..k)
            .map(|t| {
                let j = trigger_infoset(index, mode, t).expect("trigger in range");
                index.uniform_subtree(j)
            })
            .collect();
        TriggerProfile {
            mode,
            lambda: vec![R::one() / real(k as f64); k],
            continuations,
        }
    }

    pub fn num_triggers(&self) -> usize {
        self.lambda.len()
    }

    /// Checks strict positivity, the lambda simplex constraint, and
    /// membership of every continuation in its subtree polytope.
    pub fn validate(&self, index: &PlayerTreeIndex<R>, tol: R) -> Result<(), TriggerError> {
        let k = num_triggers(index, self.mode);
        if self.lambda.len() != k || self.continuations.len() != k {
            return Err(TriggerError::TriggerOutOfRange(k));
        }
        let sum = self.lambda.iter().fold(R::zero(), |a, b| a + *b);
        if (sum - R::one()).abs() > tol || !self.lambda.iter().all(|l| is_positive(*l)) {
            return Err(TriggerError::BadLambda);
        }
        for t in 0..k {
            let j = trigger_infoset(index, self.mode, t)?;
            let sub = index.subtree(j);
            let q = &self.continuations[t];
            if q.len() != sub.dim() {
                return Err(TriggerError::Dimension {
                    got: q.len(),
                    expected: sub.dim(),
                });
            }
            if !sub.shape.is_member(q, tol) || !q.iter().all(|v| is_positive(*v)) {
                return Err(TriggerError::BadContinuation(t));
            }
        }
        Ok(())
    }

    /// The lambda-mixture of the deviations applied to `x`.
    pub fn apply(
        &self,
        index: &PlayerTreeIndex<R>,
        x: &SeqVec<R>,
    ) -> Result<SeqVec<R>, TriggerError> {
        let mut out = vec![R::zero(); index.num_seqs()];
        for t in 0..self.num_triggers() {
            let image = apply_impl(index, self.mode, t, &self.continuations[t], x)?;
            for (o, v) in out.iter_mut().zip(&image.values) {
                *o = *o + self.lambda[t] * *v;
            }
        }
        Ok(SeqVec::new(x.player, out))
    }

    /// `max_s |apply(x)[s] - x[s]|`.
    pub fn fixed_point_residual(
        &self,
        index: &PlayerTreeIndex<R>,
        x: &SeqVec<R>,
    ) -> Result<R, TriggerError> {
        let image = self.apply(index, x)?;
        Ok(image
            .values
            .iter()
            .zip(&x.values)
            .fold(R::zero(), |m, (a, b)| m.max((*a - *b).abs())))
    }
}
