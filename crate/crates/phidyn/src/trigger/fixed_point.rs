//! Fixed points of strictly positive deviation mixtures.
//!
//! A strictly positive [`TriggerProfile`] has a unique fixed point in the
//! sequence-form polytope. For coarse triggers it is given in closed form,
//! top-down over infosets:
//!
//! ```text
//! x[(j,a)] = sum over ancestors j' of lambda[j'] q_{j'}[(j,a)] x[parent of j']
//!            / sum over ancestors j' of lambda[j']
//! ```
//!
//! For sequence triggers the fixed point extends trunk by trunk: at each
//! infoset the restriction of the fixed-point equations to the infoset's
//! actions is a column-stochastic matrix with strictly positive entries
//! whose stationary distribution, scaled by the parent-sequence mass, is the
//! unique consistent extension.

use super::{DeviationMode, TriggerError, TriggerProfile};
use crate::efg::index::{PlayerTreeIndex, SeqVec};
use crate::scalar::{is_positive, real, Real};

/// Stationary distribution of a column-stochastic matrix with strictly
/// positive entries (row-major, `d x d`): the unique `b` with `W b = b`,
/// `sum b = 1`. Solved by Grassmann-Taksar-Heyman elimination, which is
/// subtraction-free: every component comes out with small relative error
/// even when components span many orders of magnitude. That matters here
/// because trunk extension divides by these components one level further
/// down, so absolute-error solves (e.g. pivoted LU on `W - I`) poison the
/// next level's stochastic matrix. Deterministic; fails rather than
/// answering when the input is not stochastic or has a non-positive entry
/// (uniqueness would be lost).
pub fn stationary_distribution<R: Real>(w: &[R], d: usize) -> Result<Vec<R>, TriggerError> {
    assert_eq!(w.len(), d * d, "matrix must be d x d");
    let tol_stochastic: R = real(1e-9);
    for c in 0..d {
        let mut sum = R::zero();
        for r in 0..d {
            let entry = w[r * d + c];
            if !is_positive(entry) {
                return Err(TriggerError::NonPositiveEntry { row: r, column: c });
            }
            sum = sum + entry;
        }
        if (sum - R::one()).abs() > tol_stochastic {
            return Err(TriggerError::NotStochastic {
                column: c,
                sum: sum.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    if d == 1 {
        return Ok(vec![R::one()]);
    }
    // GTH works on the row-stochastic transition matrix; our `w` maps state
    // c to state r, so transpose on load: p[i][j] = P(i -> j) = w[j,i].
    let mut p = vec![R::zero(); d * d];
    for i in 0..d {
        for j in 0..d {
            p[i * d + j] = w[j * d + i];
        }
    }
    // Reduction: eliminate states from the last to the second, rescaling
    // each eliminated column by the departure mass (a sum of positives).
    for n in (1..d).rev() {
        let mut departure = R::zero();
        for j in 0..n {
            departure = departure + p[n * d + j];
        }
        if !is_positive(departure) {
            return Err(TriggerError::Singular);
        }
        for i in 0..n {
            p[i * d + n] = p[i * d + n] / departure;
        }
        for i in 0..n {
            let fold = p[i * d + n];
            for j in 0..n {
                p[i * d + j] = p[i * d + j] + fold * p[n * d + j];
            }
        }
    }
    // Back-substitution and normalization.
    let mut b = vec![R::zero(); d];
    b[0] = R::one();
    for n in 1..d {
        let mut acc = R::zero();
        for i in 0..n {
            acc = acc + b[i] * p[i * d + n];
        }
        b[n] = acc;
    }
    let total = b.iter().fold(R::zero(), |a, v| a + *v);
    for v in b.iter_mut() {
        *v = *v / total;
    }
    // Certify the solve.
    let mut resid = R::zero();
    for r in 0..d {
        let mut acc = -b[r];
        for c in 0..d {
            acc = acc + w[r * d + c] * b[c];
        }
        resid = resid.max(acc.abs());
    }
    if resid > real(1e-11) {
        return Err(TriggerError::StationaryResidual(
            resid.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(b)
}

/// The unique fixed point of a strictly positive deviation mixture.
pub fn fixed_point<R: Real>(
    profile: &TriggerProfile<R>,
    index: &PlayerTreeIndex<R>,
) -> Result<SeqVec<R>, TriggerError> {
    match profile.mode {
        DeviationMode::Efcce => fixed_point_coarse(profile, index),
        DeviationMode::Efce => fixed_point_sequence(profile, index),
    }
}

fn fixed_point_coarse<R: Real>(
    profile: &TriggerProfile<R>,
    index: &PlayerTreeIndex<R>,
) -> Result<SeqVec<R>, TriggerError> {
    let k = profile.num_triggers();
    if k != index.num_infosets() || profile.continuations.len() != k {
        return Err(TriggerError::TriggerOutOfRange(k));
    }
    if !profile.lambda.iter().all(|l| is_positive(*l)) {
        return Err(TriggerError::BadLambda);
    }
    let mut x = vec![R::zero(); index.num_seqs()];
    x[0] = R::one();
    // Infoset ids are topological, so parents are resolved first.
    for (j, info) in index.infosets() {
        let mut denom = R::zero();
        for anc in &info.ancestors {
            denom = denom + profile.lambda[anc.0];
        }
        for a in 0..info.num_actions() {
            let seq = info.seq(a);
            let mut num = R::zero();
            for anc in &info.ancestors {
                let q = &profile.continuations[anc.0];
                let local = index
                    .subtree(*anc)
                    .local_of(seq)
                    .expect("sequence below ancestor infoset");
                num = num
                    + profile.lambda[anc.0] * q[local] * x[index.infoset(*anc).parent_seq.0];
            }
            x[seq.0] = num / denom;
        }
        let _ = j;
    }
    Ok(SeqVec::new(index.player(), x))
}

fn fixed_point_sequence<R: Real>(
    profile: &TriggerProfile<R>,
    index: &PlayerTreeIndex<R>,
) -> Result<SeqVec<R>, TriggerError> {
    let k = profile.num_triggers();
    if k != index.num_seqs() - 1 || profile.continuations.len() != k {
        return Err(TriggerError::TriggerOutOfRange(k));
    }
    if !profile.lambda.iter().all(|l| is_positive(*l)) {
        return Err(TriggerError::BadLambda);
    }
    let mut x = vec![R::zero(); index.num_seqs()];
    x[0] = R::one();
    // Trunk extension in topological infoset order: every infoset's parent
    // sequence is already fixed when it is processed.
    for (j, info) in index.infosets() {
        let d = info.num_actions();
        let parent_mass = x[info.parent_seq.0];
        if parent_mass < real(1e-300) {
            return Err(TriggerError::ReachUnderflow(j.0));
        }
        // r[a]: contribution of triggers at strict-ancestor infosets.
        let mut r_vec = vec![R::zero(); d];
        for anc in &info.ancestors[..info.ancestors.len() - 1] {
            let anc_info = index.infoset(*anc);
            let sub = index.subtree(*anc);
            for a_anc in 0..anc_info.num_actions() {
                let trig_seq = anc_info.seq(a_anc);
                let lam = profile.lambda[trig_seq.0 - 1];
                let q = &profile.continuations[trig_seq.0 - 1];
                let weight = lam * x[trig_seq.0];
                for (a, r) in r_vec.iter_mut().enumerate() {
                    let local = sub
                        .local_of(info.seq(a))
                        .expect("sequence below ancestor infoset");
                    *r = *r + weight * q[local];
                }
            }
        }
        // lambda mass on the path strictly above this infoset.
        let mut path_lambda = R::zero();
        for s in &info.path_seqs {
            path_lambda = path_lambda + profile.lambda[s.0 - 1];
        }
        let own_sub = index.subtree(j);
        let mut w = vec![R::zero(); d * d];
        for a_col in 0..d {
            let trig_seq = info.seq(a_col);
            let lam = profile.lambda[trig_seq.0 - 1];
            let q = &profile.continuations[trig_seq.0 - 1];
            let slack = R::one() - path_lambda - lam;
            for a_row in 0..d {
                let local = own_sub.local_of(info.seq(a_row)).expect("own sequence");
                let mut entry = r_vec[a_row] / parent_mass + lam * q[local];
                if a_row == a_col {
                    entry = entry + slack;
                }
                w[a_row * d + a_col] = entry;
            }
        }
        let b = stationary_distribution(&w, d)?;
        for a in 0..d {
            x[info.seq(a).0] = parent_mass * b[a];
        }
    }
    Ok(SeqVec::new(index.player(), x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::games::load_game_str;
    use crate::efg::index::build_index;
    use crate::efg::PlayerId;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn power_iteration(w: &[f64], d: usize) -> Vec<f64> {
        let mut b = vec![1.0 / d as f64; d];
        for _ in 0..100_000 {
            let mut next = vec![0.0; d];
            for r in 0..d {
                for c in 0..d {
                    next[r] += w[r * d + c] * b[c];
                }
            }
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v /= total);
            let delta = next
                .iter()
                .zip(&b)
                .fold(0.0f64, |m, (a, x)| m.max((a - x).abs()));
            b = next;
            if delta < 1e-15 {
                break;
            }
        }
        b
    }

    fn random_stochastic(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        let mut w = vec![0.0; d * d];
        for c in 0..d {
            let col: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 0.05).collect();
            let sum: f64 = col.iter().sum();
            for r in 0..d {
                w[r * d + c] = col[r] / sum;
            }
        }
        w
    }

    fn random_profile(
        index: &PlayerTreeIndex<f64>,
        mode: DeviationMode,
        rng: &mut ChaCha8Rng,
    ) -> TriggerProfile<f64> {
        let k = super::super::num_triggers(index, mode);
        let mut lambda: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = lambda.iter().sum();
        lambda.iter_mut().for_each(|l| *l /= total);
        let continuations = (0..k)
            .map(|t| {
                let j = super::super::trigger_infoset(index, mode, t).unwrap();
                let sub = index.subtree(j);
                // random positive behavioral pushforward within the subtree
                let mut q = vec![0.0; sub.dim()];
                for (g_idx, g) in sub.shape.groups.iter().enumerate() {
                    let mass = match g.parent {
                        None => 1.0,
                        Some(p) => q[p],
                    };
                    let weights: Vec<f64> =
                        (0..g.len).map(|_| rng.random::<f64>() + 0.05).collect();
                    let sum: f64 = weights.iter().sum();
                    for (i, wgt) in weights.iter().enumerate() {
                        q[g.first + i] = mass * wgt / sum;
                    }
                    let _ = g_idx;
                }
                q
            })
            .collect();
        TriggerProfile {
            mode,
            lambda,
            continuations,
        }
    }

    #[test]
    fn uniform_matrix_gives_uniform_distribution() {
        for d in 2..=6 {
            let w = vec![1.0 / d as f64; d * d];
            let b = stationary_distribution(&w, d).unwrap();
            for v in b {
                assert!((v - 1.0 / d as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_state_chain_known_answer() {
        // Columns sum to one; stationary distribution is (2/3, 1/3).
        let w: Vec<f64> = vec![0.75, 0.5, 0.25, 0.5];
        let b = stationary_distribution(&w, 2).unwrap();
        assert!((b[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((b[1] - 1.0 / 3.0).abs() < 1e-12);
        let p = power_iteration(&w, 2);
        assert!((b[0] - p[0]).abs() < 1e-12);
    }

    #[test]
    fn identity_matrix_is_rejected() {
        let w = vec![1.0, 0.0, 0.0, 1.0];
        assert!(matches!(
            stationary_distribution(&w, 2),
            Err(TriggerError::NonPositiveEntry { .. })
        ));
    }

    #[test]
    fn non_stochastic_is_rejected() {
        let w = vec![0.9, 0.5, 0.25, 0.5];
        assert!(matches!(
            stationary_distribution(&w, 2),
            Err(TriggerError::NotStochastic { .. })
        ));
    }

    #[test]
    fn direct_solve_matches_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let d = rng.random_range(2..=6);
            let w = random_stochastic(&mut rng, d);
            let direct = stationary_distribution(&w, d).unwrap();
            let power = power_iteration(&w, d);
            for (a, b) in direct.iter().zip(&power) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn coarse_fixed_point_symmetric_micro() {
        let game = load_game_str::<f64>("micro").unwrap();
        let index = build_index(&game, PlayerId(0)).unwrap();
        let profile = TriggerProfile {
            mode: DeviationMode::Efcce,
            lambda: vec![0.5, 0.5],
            continuations: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        };
        let x = fixed_point(&profile, &index).unwrap();
        assert_eq!(x.values, vec![1.0, 0.5, 0.5, 0.5, 0.5]);
        assert!(profile.fixed_point_residual(&index, &x).unwrap() < 1e-15);
    }

    #[test]
    fn sequence_fixed_point_single_infoset_symmetry() {
        // One infoset, two actions: uniform lambda and uniform
        // continuations leave the uniform strategy fixed.
        let game = load_game_str::<f64>("micro").unwrap();
        let index = build_index(&game, PlayerId(0)).unwrap();
        let profile = TriggerProfile {
            mode: DeviationMode::Efce,
            lambda: vec![0.25; 4],
            continuations: vec![vec![0.5, 0.5]; 4],
        };
        let x = fixed_point(&profile, &index).unwrap();
        for v in &x.values[1..] {
            assert!((v - 0.5).abs() < 1e-12);
        }
        assert!(profile.fixed_point_residual(&index, &x).unwrap() < 1e-12);
    }

    #[test]
    fn random_profiles_have_tiny_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for spec in ["micro", "kuhn:players=2,ranks=3", "kuhn:players=3,ranks=3"] {
            let game = load_game_str::<f64>(spec).unwrap();
            for p in 0..game.num_players() {
                let index = build_index(&game, PlayerId(p)).unwrap();
                for mode in [DeviationMode::Efce, DeviationMode::Efcce] {
                    for _ in 0..20 {
                        let profile = random_profile(&index, mode, &mut rng);
                        let x = fixed_point(&profile, &index).unwrap();
                        index.validate_seq_vec(&x, 1e-9).unwrap();
                        let resid = profile.fixed_point_residual(&index, &x).unwrap();
                        assert!(
                            resid <= 1e-9,
                            "{spec} player {p} {:?}: residual {resid}",
                            mode
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn point_mass_continuations_still_flow() {
        // Every continuation concentrated on the trigger's own first
        // action; the fixed point remains a valid flow.
        let game = load_game_str::<f64>("kuhn:players=2,ranks=3").unwrap();
        let index = build_index(&game, PlayerId(0)).unwrap();
        let k = super::super::num_triggers(&index, DeviationMode::Efce);
        let eps = 1e-9;
        let continuations: Vec<Vec<f64>> = (0..k)
            .map(|t| {
                let j = super::super::trigger_infoset(&index, DeviationMode::Efce, t).unwrap();
                let sub = index.subtree(j);
                // near-point-mass on the first action of each group
                let mut q = vec![0.0; sub.dim()];
                for g in &sub.shape.groups {
                    let mass = match g.parent {
                        None => 1.0,
                        Some(p) => q[p],
                    };
                    for i in 0..g.len {
                        q[g.first + i] = if i == 0 {
                            mass * (1.0 - eps * (g.len - 1) as f64)
                        } else {
                            mass * eps
                        };
                    }
                }
                q
            })
            .collect();
        let profile = TriggerProfile {
            mode: DeviationMode::Efce,
            lambda: vec![1.0 / k as f64; k],
            continuations,
        };
        let x = fixed_point(&profile, &index).unwrap();
        index.validate_seq_vec(&x, 1e-9).unwrap();
        assert!(profile.fixed_point_residual(&index, &x).unwrap() <= 1e-9);
    }
}
