//! Shared oracles for the integration suites: dense deviation matrices
//! built directly from the precedence predicates (independent of the
//! rank-one code paths under test) and seeded generators for random
//! strategies, utilities and deviation profiles.

use phidyn::efg::index::{InfosetId, PlayerTreeIndex, SeqId, SeqVec};
use phidyn::efg::PlayerId;
use phidyn::trigger::{self, DeviationMode, TriggerProfile};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Dense trigger-deviation matrix (row-major over the player's sequences):
/// identity outside the block below the trigger sequence; the trigger
/// sequence's column carries the continuation over the subtree.
#[allow(dead_code)]
pub fn dense_trigger_matrix(
    index: &PlayerTreeIndex<f64>,
    trigger_seq: SeqId,
    q_local: &[f64],
) -> Vec<Vec<f64>> {
    let n = index.num_seqs();
    let (j, _) = index.seq_owner(trigger_seq).expect("non-empty trigger");
    let sub = index.subtree(j);
    let mut m = vec![vec![0.0; n]; n];
    for col in 0..n {
        let col_below_trigger = index.seq_weakly_precedes(trigger_seq, SeqId(col));
        if !col_below_trigger {
            m[col][col] = 1.0;
        }
        if SeqId(col) == trigger_seq {
            for (row, out) in m.iter_mut().enumerate() {
                if let Some(local) = sub.local_of(SeqId(row)) {
                    out[col] += q_local[local];
                }
            }
        }
    }
    m
}

/// Dense coarse-deviation matrix: identity outside the trigger infoset's
/// subtree; the parent sequence's column carries the continuation.
#[allow(dead_code)]
pub fn dense_coarse_matrix(
    index: &PlayerTreeIndex<f64>,
    trigger: InfosetId,
    q_local: &[f64],
) -> Vec<Vec<f64>> {
    let n = index.num_seqs();
    let sub = index.subtree(trigger);
    let parent = index.infoset(trigger).parent_seq;
    let mut m = vec![vec![0.0; n]; n];
    for col in 0..n {
        if sub.local_of(SeqId(col)).is_none() {
            m[col][col] = 1.0;
        }
        if SeqId(col) == parent {
            for (row, out) in m.iter_mut().enumerate() {
                if let Some(local) = sub.local_of(SeqId(row)) {
                    out[col] += q_local[local];
                }
            }
        }
    }
    m
}

/// Dense matrix of one trigger in either mode.
#[allow(dead_code)]
pub fn dense_deviation_matrix(
    index: &PlayerTreeIndex<f64>,
    mode: DeviationMode,
    t: usize,
    q_local: &[f64],
) -> Vec<Vec<f64>> {
    match mode {
        DeviationMode::Efce => dense_trigger_matrix(index, SeqId(t + 1), q_local),
        DeviationMode::Efcce => dense_coarse_matrix(index, InfosetId(t), q_local),
    }
}

#[allow(dead_code)]
pub fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Random strictly positive behavioral strategy pushed to sequence form.
#[allow(dead_code)]
pub fn random_seq_vec(index: &PlayerTreeIndex<f64>, rng: &mut ChaCha8Rng) -> SeqVec<f64> {
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

/// Random utility vector with entries in `[-1, 1]`.
#[allow(dead_code)]
pub fn random_utility(index: &PlayerTreeIndex<f64>, rng: &mut ChaCha8Rng) -> SeqVec<f64> {
    SeqVec::new(
        index.player(),
        (0..index.num_seqs())
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect(),
    )
}

/// Random strictly positive subtree vector (behavioral-style pushforward).
#[allow(dead_code)]
pub fn random_subtree_vec(
    index: &PlayerTreeIndex<f64>,
    j: InfosetId,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let sub = index.subtree(j);
    let mut q = vec![0.0; sub.dim()];
    for g in &sub.shape.groups {
        let mass = match g.parent {
            None => 1.0,
            Some(p) => q[p],
        };
        let weights: Vec<f64> = (0..g.len).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = weights.iter().sum();
        for (i, w) in weights.iter().enumerate() {
            q[g.first + i] = mass * w / total;
        }
    }
    q
}

/// Random strictly positive deviation profile.
#[allow(dead_code)]
pub fn random_profile(
    index: &PlayerTreeIndex<f64>,
    mode: DeviationMode,
    rng: &mut ChaCha8Rng,
) -> TriggerProfile<f64> {
    let k = trigger::num_triggers(index, mode);
    let mut lambda: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = lambda.iter().sum();
    lambda.iter_mut().for_each(|l| *l /= total);
    let continuations = (0..k)
        .map(|t| {
            let j = trigger::trigger_infoset(index, mode, t).expect("trigger in range");
            random_subtree_vec(index, j, rng)
        })
        .collect();
    TriggerProfile {
        mode,
        lambda,
        continuations,
    }
}

/// Enumerates the deterministic points of a subtree polytope.
#[allow(dead_code)]
pub fn pure_subtree_points(index: &PlayerTreeIndex<f64>, j: InfosetId) -> Vec<Vec<f64>> {
    let sub = index.subtree(j);
    let groups = &sub.shape.groups;
    let mut out = Vec::new();
    let mut choice = vec![0usize; groups.len()];
    loop {
        let mut q = vec![0.0; sub.dim()];
        for (g_idx, g) in groups.iter().enumerate() {
            let mass = match g.parent {
                None => 1.0,
                Some(p) => q[p],
            };
            if mass > 0.0 {
                q[g.first + choice[g_idx]] = mass;
            }
        }
        out.push(q);
        // odometer over action choices
        let mut pos = 0;
        loop {
            if pos == groups.len() {
                // dedupe: unreachable infosets generate duplicates
                out.sort_by(|a, b| a.partial_cmp(b).unwrap());
                out.dedup();
                return out;
            }
            choice[pos] += 1;
            if choice[pos] < groups[pos].len {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

#[allow(dead_code)]
pub fn player_id(i: usize) -> PlayerId {
    PlayerId(i)
}

