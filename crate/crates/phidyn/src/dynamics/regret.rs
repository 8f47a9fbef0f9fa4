//! Exact hindsight regret evaluation.
//!
//! Regrets are evaluated from the realized play `(x^t, u^t)` by dynamic
//! programming, independently of any learner's internal bookkeeping. The
//! accumulator form is O(number of subtree sequences) per round; a
//! checkpoint report runs one best-response pass per trigger.
//!
//! For a trigger `s` with subtree root `j`, the accumulated quantities are
//!
//! ```text
//! w_s[sigma] = sum_t x^t[mass(s)] u^t[sigma]      (sigma in the subtree)
//! b_s        = sum_t sum_{sigma erased by s} x^t[sigma] u^t[sigma]
//! ```
//!
//! and the trigger regret is `max_s (best_response(w_s) - b_s)`; linearity
//! in the mixing weights makes the best single trigger optimal over the
//! whole deviation set. When the played [`TriggerProfile`]s are supplied as
//! well, the accumulator also tracks the deviation values of the played
//! continuations, which yields the external regret of the composed
//! deviation-set minimizer and its circuit components (`mix_regret`,
//! `local_regrets`) through the rank-one route.

use crate::efg::index::{PlayerTreeIndex, SeqVec};
use crate::efg::values::best_response;
use crate::scalar::Real;
use crate::trigger::{
    self, DeviationMode, RankOneUtility, TriggerProfile,
};

use super::DynamicsError;

/// Hindsight regrets of one player at one point in time.
#[derive(Debug, Clone)]
pub struct RegretReport<R> {
    pub rounds: u64,
    /// Exact regret against the best pure deviation (DP route).
    pub trigger_regret: R,
    /// Exact external regret against the best fixed strategy.
    pub external_regret: R,
    /// External regret of the composed deviation-set minimizer, computed
    /// through the played profiles' deviation values (rank-one route).
    /// Available only when profiles were recorded.
    pub composed_regret: Option<R>,
    /// Regret of the mixing learner over the played deviation values.
    pub mix_regret: Option<R>,
    /// Per-trigger regret of the played continuations.
    pub local_regrets: Option<Vec<R>>,
}

/// Streaming regret state for one player.
#[derive(Debug, Clone)]
pub struct RegretAccumulator<R> {
    mode: DeviationMode,
    rounds: u64,
    sum_realized: R,
    sum_utility: Vec<R>,
    weighted: Vec<Vec<R>>,
    baseline: Vec<R>,
    sum_dev_value: Vec<R>,
    sum_played_mix: R,
    sum_played_local: Vec<R>,
    profiles_recorded: u64,
}

impl<R: Real> RegretAccumulator<R> {
    pub fn new(index: &PlayerTreeIndex<R>, mode: DeviationMode) -> Self {
        let k = trigger::num_triggers(index, mode);
        let weighted = (0..k)
            .map(|t| {
                let j = trigger::trigger_infoset(index, mode, t).expect("trigger in range");
                vec![R::zero(); index.subtree(j).dim()]
            })
            .collect();
        RegretAccumulator {
            mode,
            rounds: 0,
            sum_realized: R::zero(),
            sum_utility: vec![R::zero(); index.num_seqs()],
            weighted,
            baseline: vec![R::zero(); k],
            sum_dev_value: vec![R::zero(); k],
            sum_played_mix: R::zero(),
            sum_played_local: vec![R::zero(); k],
            profiles_recorded: 0,
        }
    }

    /// Absorbs one round. `profile` is the deviation profile the player
    /// actually mixed this round; pass `None` when only the DP regrets are
    /// needed.
    pub fn update(
        &mut self,
        index: &PlayerTreeIndex<R>,
        strategy: &SeqVec<R>,
        utility: &SeqVec<R>,
        profile: Option<&TriggerProfile<R>>,
    ) {
        self.rounds += 1;
        self.sum_realized = self.sum_realized + strategy.dot(&utility.values);
        for (s, u) in self.sum_utility.iter_mut().zip(&utility.values) {
            *s = *s + *u;
        }
        let rank_one = RankOneUtility {
            utility: &utility.values,
            strategy,
        };
        let k = self.baseline.len();
        for t in 0..k {
            let mass = strategy.get(
                trigger::trigger_mass_seq(index, self.mode, t).expect("trigger in range"),
            );
            let j = trigger::trigger_infoset(index, self.mode, t).expect("trigger in range");
            let sub = index.subtree(j);
            for (local, s) in sub.seqs.iter().enumerate() {
                self.weighted[t][local] = self.weighted[t][local] + mass * utility.values[s.0];
            }
            let erased: &[_] = match self.mode {
                DeviationMode::Efce => index.below_seq(crate::efg::index::SeqId(t + 1)),
                DeviationMode::Efcce => &sub.seqs,
            };
            let mut below = R::zero();
            for s in erased {
                below = below + strategy.get(*s) * utility.values[s.0];
            }
            self.baseline[t] = self.baseline[t] + below;
            if let Some(p) = profile {
                let value = trigger::deviation_value(
                    index,
                    self.mode,
                    t,
                    &p.continuations[t],
                    &rank_one,
                )
                .expect("profile consistent with index");
                self.sum_dev_value[t] = self.sum_dev_value[t] + value;
                self.sum_played_mix = self.sum_played_mix + p.lambda[t] * value;
                let local = trigger::local_utility(index, self.mode, t, &rank_one)
                    .expect("profile consistent with index");
                let played: R = p.continuations[t]
                    .iter()
                    .zip(&local)
                    .fold(R::zero(), |acc, (q, v)| acc + *q * *v);
                self.sum_played_local[t] = self.sum_played_local[t] + played;
            }
        }
        if profile.is_some() {
            self.profiles_recorded += 1;
        }
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Evaluates all regrets at the current time.
    pub fn report(&self, index: &PlayerTreeIndex<R>) -> RegretReport<R> {
        let k = self.baseline.len();
        let mut trigger_regret = R::neg_infinity();
        let mut local = Vec::with_capacity(k);
        for t in 0..k {
            let j = trigger::trigger_infoset(index, self.mode, t).expect("trigger in range");
            let best = best_response(index, &self.weighted[t], Some(j)).value;
            trigger_regret = trigger_regret.max(best - self.baseline[t]);
            local.push(best - self.sum_played_local[t]);
        }
        let external_regret =
            best_response(index, &self.sum_utility, None).value - self.sum_realized;
        let with_profiles = self.profiles_recorded == self.rounds && self.rounds > 0;
        let (composed, mix, locals) = if with_profiles {
            let mix = self
                .sum_dev_value
                .iter()
                .fold(R::neg_infinity(), |m, v| m.max(*v))
                - self.sum_played_mix;
            let composed = self
                .sum_dev_value
                .iter()
                .zip(&local)
                .fold(R::neg_infinity(), |m, (s, l)| m.max(*s + *l))
                - self.sum_played_mix;
            (Some(composed), Some(mix), Some(local))
        } else {
            (None, None, None)
        };
        RegretReport {
            rounds: self.rounds,
            trigger_regret,
            external_regret,
            composed_regret: composed,
            mix_regret: mix,
            local_regrets: locals,
        }
    }
}

fn check_history<R: Real>(
    strategies: &[SeqVec<R>],
    utilities: &[SeqVec<R>],
) -> Result<(), DynamicsError> {
    if strategies.is_empty() || strategies.len() != utilities.len() {
        return Err(DynamicsError::EmptyHistory);
    }
    Ok(())
}

/// Exact deviation regret of a recorded history, from scratch.
pub fn trigger_regret_of_history<R: Real>(
    index: &PlayerTreeIndex<R>,
    mode: DeviationMode,
    strategies: &[SeqVec<R>],
    utilities: &[SeqVec<R>],
) -> Result<R, DynamicsError> {
    check_history(strategies, utilities)?;
    let mut acc = RegretAccumulator::new(index, mode);
    for (x, u) in strategies.iter().zip(utilities) {
        acc.update(index, x, u, None);
    }
    Ok(acc.report(index).trigger_regret)
}

/// Exact external regret of a recorded history: best response to the
/// summed utilities versus realized value.
pub fn external_regret_of_history<R: Real>(
    index: &PlayerTreeIndex<R>,
    strategies: &[SeqVec<R>],
    utilities: &[SeqVec<R>],
) -> Result<R, DynamicsError> {
    check_history(strategies, utilities)?;
    let mut sum_u = vec![R::zero(); index.num_seqs()];
    let mut realized = R::zero();
    for (x, u) in strategies.iter().zip(utilities) {
        realized = realized + x.dot(&u.values);
        for (s, v) in sum_u.iter_mut().zip(&u.values) {
            *s = *s + *v;
        }
    }
    Ok(best_response(index, &sum_u, None).value - realized)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::games::load_game_str;
    use crate::efg::index::build_index;
    use crate::efg::PlayerId;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_seq_vec(index: &PlayerTreeIndex<f64>, rng: &mut ChaCha8Rng) -> SeqVec<f64> {
        let beh: Vec<Vec<f64>> = index
            .infosets()
            .map(|(_, info)| {
                (0..info.num_actions())
                    .map(|_| rng.random::<f64>() + 1e-3)
                    .collect()
            })
            .collect();
        index.seq_vec_from_behavioral(&beh)
    }

    fn random_utility(index: &PlayerTreeIndex<f64>, rng: &mut ChaCha8Rng) -> SeqVec<f64> {
        SeqVec::new(
            index.player(),
            (0..index.num_seqs())
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect(),
        )
    }

    #[test]
    fn empty_history_is_an_error() {
        let game = load_game_str::<f64>("micro").unwrap();
        let index = build_index(&game, PlayerId(0)).unwrap();
        assert!(matches!(
            external_regret_of_history(&index, &[], &[]),
            Err(DynamicsError::EmptyHistory)
        ));
        assert!(trigger_regret_of_history(&index, DeviationMode::Efce, &[], &[]).is_err());
    }

    #[test]
    fn external_regret_of_best_response_is_zero() {
        let game = load_game_str::<f64>("micro").unwrap();
        let index = build_index(&game, PlayerId(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let u = random_utility(&index, &mut rng);
        let br = best_response(&index, &u.values, None);
        let x = SeqVec::new(PlayerId(0), br.vector.clone());
        let reg = external_regret_of_history(&index, &[x], &[u]).unwrap();
        assert!(reg.abs() < 1e-12);
    }

    #[test]
    fn constant_gap_scales_linearly() {
        let game = load_game_str::<f64>("micro").unwrap();
        let index = build_index(&game, PlayerId(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let u = random_utility(&index, &mut rng);
        let x = index.uniform_seq_vec();
        let br = best_response(&index, &u.values, None);
        let gap = br.value - x.dot(&u.values);
        let horizon = 7;
        let xs = vec![x; horizon];
        let us = vec![u; horizon];
        let reg = external_regret_of_history(&index, &xs, &us).unwrap();
        assert!((reg - gap * horizon as f64).abs() < 1e-10);
    }

    #[test]
    fn external_regret_matches_pure_enumeration_on_micro() {
        let game = load_game_str::<f64>("micro").unwrap();
        let index = build_index(&game, PlayerId(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let horizon = rng.random_range(1..10);
            let xs: Vec<_> = (0..horizon).map(|_| random_seq_vec(&index, &mut rng)).collect();
            let us: Vec<_> = (0..horizon).map(|_| random_utility(&index, &mut rng)).collect();
            let reg = external_regret_of_history(&index, &xs, &us).unwrap();
            // Enumerate the 4 pure strategies of the micro player.
            let mut best = f64::NEG_INFINITY;
            for a in 0..2 {
                for b in 0..2 {
                    let total: f64 = us
                        .iter()
                        .map(|u| u.values[0] + u.values[1 + a] + u.values[3 + b])
                        .sum();
                    best = best.max(total);
                }
            }
            let realized: f64 = xs.iter().zip(&us).map(|(x, u)| x.dot(&u.values)).sum();
            assert!((reg - (best - realized)).abs() < 1e-10);
        }
    }

    #[test]
    fn trigger_regret_matches_dense_enumeration_on_micro() {
        // Oracle: enumerate all (trigger, pure continuation) pairs and
        // apply each deviation per round.
        let game = load_game_str::<f64>("micro").unwrap();
        let index = build_index(&game, PlayerId(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for mode in [DeviationMode::Efce, DeviationMode::Efcce] {
            for _ in 0..30 {
                let horizon = rng.random_range(1..8);
                let xs: Vec<_> =
                    (0..horizon).map(|_| random_seq_vec(&index, &mut rng)).collect();
                let us: Vec<_> =
                    (0..horizon).map(|_| random_utility(&index, &mut rng)).collect();
                let reg = trigger_regret_of_history(&index, mode, &xs, &us).unwrap();
                let k = trigger::num_triggers(&index, mode);
                let mut best = f64::NEG_INFINITY;
                for t in 0..k {
                    let j = trigger::trigger_infoset(&index, mode, t).unwrap();
                    let dim = index.subtree(j).dim();
                    for pure in 0..dim {
                        // subtree polytopes here are bare 2-simplices
                        let q: Vec<f64> =
                            (0..dim).map(|i| if i == pure { 1.0 } else { 0.0 }).collect();
                        let mut gain = 0.0;
                        for (x, u) in xs.iter().zip(&us) {
                            let image = match mode {
                                DeviationMode::Efce => trigger::apply_trigger_deviation(
                                    &index,
                                    crate::efg::index::SeqId(t + 1),
                                    &q,
                                    x,
                                )
                                .unwrap(),
                                DeviationMode::Efcce => trigger::apply_coarse_deviation(
                                    &index,
                                    crate::efg::index::InfosetId(t),
                                    &q,
                                    x,
                                )
                                .unwrap(),
                            };
                            gain += image.dot(&u.values) - x.dot(&u.values);
                        }
                        best = best.max(gain);
                    }
                }
                assert!(
                    (reg - best).abs() < 1e-10,
                    "{mode:?}: dp {reg} vs enum {best}"
                );
            }
        }
    }

    #[test]
    fn incremental_equals_scratch_on_prefixes() {
        let game = load_game_str::<f64>("kuhn:players=2,ranks=3").unwrap();
        let index = build_index(&game, PlayerId(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let horizon = 20;
        let xs: Vec<_> = (0..horizon).map(|_| random_seq_vec(&index, &mut rng)).collect();
        let us: Vec<_> = (0..horizon).map(|_| random_utility(&index, &mut rng)).collect();
        let mut acc = RegretAccumulator::new(&index, DeviationMode::Efce);
        for t in 0..horizon {
            acc.update(&index, &xs[t], &us[t], None);
            if t % 5 == 4 {
                let scratch = trigger_regret_of_history(
                    &index,
                    DeviationMode::Efce,
                    &xs[..=t],
                    &us[..=t],
                )
                .unwrap();
                let inc = acc.report(&index).trigger_regret;
                assert!((scratch - inc).abs() < 1e-10);
            }
        }
    }
}
