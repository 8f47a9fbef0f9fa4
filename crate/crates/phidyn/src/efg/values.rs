//! Linear utility evaluation: terminal tables, utility gradients, expected
//! values, and the bottom-up best-response dynamic program.

use super::index::{InfosetId, PlayerTreeIndex, SeqId, SeqVec, EMPTY_SEQ};
use super::{GameError, GameTree, Node, PlayerId};
use crate::scalar::Real;

/// Flattened terminal data: chance reach, payoffs, and every player's last
/// sequence at each leaf. Expected utilities and gradients are plain sums
/// over these rows.
#[derive(Debug, Clone)]
pub struct TerminalTable<R> {
    num_players: usize,
    rows: Vec<TerminalRow<R>>,
}

#[derive(Debug, Clone)]
struct TerminalRow<R> {
    chance: R,
    payoffs: Vec<R>,
    seqs: Vec<SeqId>,
}

impl<R: Real> TerminalTable<R> {
    /// Builds the table; `indexes` must hold one index per player, in order
    /// (owned, borrowed or `Arc`-wrapped all work).
    pub fn build<I>(game: &GameTree<R>, indexes: &[I]) -> Result<Self, GameError>
    where
        I: std::borrow::Borrow<PlayerTreeIndex<R>>,
    {
        if indexes.len() != game.num_players() {
            return Err(GameError::BadParameter(format!(
                "expected {} player indexes, got {}",
                game.num_players(),
                indexes.len()
            )));
        }
        for (i, idx) in indexes.iter().enumerate() {
            if idx.borrow().player() != PlayerId(i) {
                return Err(GameError::BadParameter(format!(
                    "index {} belongs to player {}",
                    i,
                    idx.borrow().player().0
                )));
            }
        }
        let mut rows = Vec::new();
        let mut stack = vec![(game.root(), R::one())];
        while let Some((id, chance)) = stack.pop() {
            match game.node(id) {
                Node::Terminal { payoffs } => rows.push(TerminalRow {
                    chance,
                    payoffs: payoffs.clone(),
                    seqs: indexes.iter().map(|idx| idx.borrow().seq_of_node(id)).collect(),
                }),
                Node::Chance { outcomes } => {
                    for (p, child) in outcomes.iter().rev() {
                        stack.push((*child, chance * *p));
                    }
                }
                Node::Decision { actions, .. } => {
                    for a in actions.iter().rev() {
                        stack.push((a.child, chance));
                    }
                }
            }
        }
        Ok(TerminalTable {
            num_players: game.num_players(),
            rows,
        })
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn num_terminals(&self) -> usize {
        self.rows.len()
    }
}

fn check_profile<R: Real>(
    table: &TerminalTable<R>,
    profile: &[SeqVec<R>],
) -> Result<(), GameError> {
    if profile.len() != table.num_players {
        return Err(GameError::BadParameter(format!(
            "expected {} strategies, got {}",
            table.num_players,
            profile.len()
        )));
    }
    for (i, v) in profile.iter().enumerate() {
        if v.player != PlayerId(i) {
            return Err(GameError::BadParameter(format!(
                "strategy {} belongs to player {}",
                i, v.player.0
            )));
        }
    }
    Ok(())
}

/// Gradient of `player`'s utility with respect to their own sequence-form
/// strategy: `u[s] = sum over leaves reached with last sequence s of
/// payoff * chance reach * product of the other players' sequence weights`.
/// `profile[player]` is ignored.
pub fn utility_gradient<R: Real>(
    table: &TerminalTable<R>,
    player: PlayerId,
    profile: &[SeqVec<R>],
) -> Result<SeqVec<R>, GameError> {
    check_profile(table, profile)?;
    let dim = profile[player.0].len();
    let mut u = vec![R::zero(); dim];
    for row in &table.rows {
        let mut w = row.chance * row.payoffs[player.0];
        for (i, seq) in row.seqs.iter().enumerate() {
            if i != player.0 {
                w = w * profile[i].get(*seq);
            }
        }
        u[row.seqs[player.0].0] = u[row.seqs[player.0].0] + w;
    }
    Ok(SeqVec::new(player, u))
}

/// Expected utility of every player under a full strategy profile.
pub fn expected_utilities<R: Real>(
    table: &TerminalTable<R>,
    profile: &[SeqVec<R>],
) -> Result<Vec<R>, GameError> {
    check_profile(table, profile)?;
    let mut out = vec![R::zero(); table.num_players];
    for row in &table.rows {
        let mut reach = row.chance;
        for (i, seq) in row.seqs.iter().enumerate() {
            reach = reach * profile[i].get(*seq);
        }
        for (i, p) in row.payoffs.iter().enumerate() {
            out[i] = out[i] + reach * *p;
        }
    }
    Ok(out)
}

/// A deterministic best response together with its value.
#[derive(Debug, Clone)]
pub struct BestResponse<R> {
    /// 0/1 vector: the full sequence vector for whole-tree responses, or a
    /// local subtree vector when `root` was given.
    pub vector: Vec<R>,
    pub value: R,
}

/// Maximizes `<x, u>` over deterministic strategies by the bottom-up
/// dynamic program. With `root = None` the response ranges over the whole
/// polytope and the value includes the empty-sequence entry of `u`; with
/// `root = Some(j)` it ranges over the subtree polytope at `j` and `u` is
/// in the subtree's local coordinates. Ties break to the lowest action
/// index.
pub fn best_response<R: Real>(
    index: &PlayerTreeIndex<R>,
    u: &[R],
    root: Option<InfosetId>,
) -> BestResponse<R> {
    match root {
        None => best_response_full(index, u),
        Some(j) => best_response_subtree(index, u, j),
    }
}

fn best_response_full<R: Real>(index: &PlayerTreeIndex<R>, u: &[R]) -> BestResponse<R> {
    assert_eq!(u.len(), index.num_seqs());
    let nj = index.num_infosets();
    let mut val = vec![R::zero(); nj];
    let mut best_action = vec![0usize; nj];
    // Children have larger ids: one reverse pass.
    for j_idx in (0..nj).rev() {
        let info = index.infoset(InfosetId(j_idx));
        let mut best = R::neg_infinity();
        for a in 0..info.num_actions() {
            let seq = info.seq(a);
            let mut v = u[seq.0];
            for j2 in index.children_of_seq(seq) {
                v = v + val[j2.0];
            }
            if v > best {
                best = v;
                best_action[j_idx] = a;
            }
        }
        val[j_idx] = best;
    }
    let mut vector = vec![R::zero(); index.num_seqs()];
    vector[0] = R::one();
    let mut value = u[0];
    // Fill chosen actions top-down wherever the parent sequence is reached.
    for j_idx in 0..nj {
        let info = index.infoset(InfosetId(j_idx));
        if vector[info.parent_seq.0] > R::zero() {
            vector[info.seq(best_action[j_idx]).0] = R::one();
        }
    }
    for j in index.children_of_seq(EMPTY_SEQ) {
        value = value + val[j.0];
    }
    BestResponse { vector, value }
}

fn best_response_subtree<R: Real>(
    index: &PlayerTreeIndex<R>,
    u: &[R],
    root: InfosetId,
) -> BestResponse<R> {
    let sub = index.subtree(root);
    assert_eq!(u.len(), sub.dim());
    let n = sub.infosets.len();
    let mut val = vec![R::zero(); n];
    let mut best_action = vec![0usize; n];
    // Map from global infoset to local position within the subtree.
    let local_pos: std::collections::HashMap<InfosetId, usize> = sub
        .infosets
        .iter()
        .enumerate()
        .map(|(p, j)| (*j, p))
        .collect();
    for pos in (0..n).rev() {
        let j = sub.infosets[pos];
        let info = index.infoset(j);
        let mut best = R::neg_infinity();
        for a in 0..info.num_actions() {
            let seq = info.seq(a);
            let local = sub.local_of(seq).expect("subtree sequence");
            let mut v = u[local];
            for j2 in index.children_of_seq(seq) {
                v = v + val[local_pos[j2]];
            }
            if v > best {
                best = v;
                best_action[pos] = a;
            }
        }
        val[pos] = best;
    }
    let mut vector = vec![R::zero(); sub.dim()];
    for (pos, j) in sub.infosets.iter().enumerate() {
        let info = index.infoset(*j);
        let reached = if *j == root {
            true
        } else {
            let parent_local = sub.local_of(info.parent_seq).expect("subtree parent");
            vector[parent_local] > R::zero()
        };
        if reached {
            let local = sub.local_of(info.seq(best_action[pos])).unwrap();
            vector[local] = R::one();
        }
    }
    BestResponse {
        vector,
        value: val[0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::games::load_game_str;
    use crate::efg::index::build_index;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn setup(spec: &str) -> (GameTree<f64>, Vec<PlayerTreeIndex<f64>>, TerminalTable<f64>) {
        let game = load_game_str::<f64>(spec).unwrap();
        let indexes: Vec<_> = (0..game.num_players())
            .map(|p| build_index(&game, PlayerId(p)).unwrap())
            .collect();
        let table = TerminalTable::build(&game, &indexes).unwrap();
        (game, indexes, table)
    }

    fn random_profile(
        indexes: &[PlayerTreeIndex<f64>],
        rng: &mut ChaCha8Rng,
    ) -> Vec<SeqVec<f64>> {
        indexes
            .iter()
            .map(|idx| {
                let beh: Vec<Vec<f64>> = idx
                    .infosets()
                    .map(|(_, info)| {
                        (0..info.num_actions())
                            .map(|_| rng.random::<f64>() + 1e-3)
                            .collect()
                    })
                    .collect();
                idx.seq_vec_from_behavioral(&beh)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_expected_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for spec in ["micro", "kuhn:players=2,ranks=3", "kuhn:players=3,ranks=3"] {
            let (game, indexes, table) = setup(spec);
            for _ in 0..20 {
                let profile = random_profile(&indexes, &mut rng);
                let values = expected_utilities(&table, &profile).unwrap();
                for p in 0..game.num_players() {
                    let grad = utility_gradient(&table, PlayerId(p), &profile).unwrap();
                    let paired = profile[p].dot(&grad.values);
                    assert!(
                        (values[p] - paired).abs() < 1e-10,
                        "{spec} player {p}: {} vs {}",
                        values[p],
                        paired
                    );
                }
            }
        }
    }

    #[test]
    fn kuhn_games_are_zero_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for spec in ["kuhn:players=2,ranks=3", "kuhn:players=3,ranks=4"] {
            let (_, indexes, table) = setup(spec);
            for _ in 0..20 {
                let profile = random_profile(&indexes, &mut rng);
                let values = expected_utilities(&table, &profile).unwrap();
                let sum: f64 = values.iter().sum();
                assert!(sum.abs() < 1e-10, "{spec}: {sum}");
            }
        }
    }

    #[test]
    fn gradient_infty_norm_at_most_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (_, indexes, table) = setup("goofspiel:ranks=3");
        for _ in 0..10 {
            let profile = random_profile(&indexes, &mut rng);
            for p in 0..2 {
                let grad = utility_gradient(&table, PlayerId(p), &profile).unwrap();
                let max = grad.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(max <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn zero_reach_opponent_zeroes_contribution() {
        let (_, indexes, table) = setup("micro");
        // Player 2 puts no mass on their first action anywhere.
        let beh = vec![vec![0.0, 1.0], vec![0.0, 1.0]];
        let p2 = indexes[1].seq_vec_from_behavioral(&beh);
        let profile = vec![indexes[0].uniform_seq_vec(), p2];
        let grad = utility_gradient(&table, PlayerId(0), &profile).unwrap();
        // Sequence 1 = (A, action 1) is reached through either of player
        // 2's actions; with all mass on action 2 only the (s2, a1) leaf
        // with raw payoff 0 remains.
        assert!(grad.values[1].abs() < 1e-15);
    }

    #[test]
    fn best_response_single_infoset() {
        let (_, indexes, _) = setup("micro");
        let idx = &indexes[0];
        // Subtree at infoset A is a bare simplex over two actions.
        let br = best_response(idx, &[0.2, 0.7], Some(InfosetId(0)));
        assert_eq!(br.vector, vec![0.0, 1.0]);
        assert!((br.value - 0.7).abs() < 1e-15);
    }

    #[test]
    fn best_response_micro_whole_tree() {
        let (_, indexes, _) = setup("micro");
        let u = [0.0, 0.5, 0.1, 0.2, 0.9];
        let br = best_response(&indexes[0], &u, None);
        assert!((br.value - 1.4).abs() < 1e-15);
        assert_eq!(br.vector, vec![1.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn best_response_breaks_ties_low() {
        let (_, indexes, _) = setup("micro");
        let u = [0.0; 5];
        let br = best_response(&indexes[0], &u, None);
        assert_eq!(br.vector, vec![1.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(br.value, 0.0);
    }

    #[test]
    fn best_response_dominates_random_strategies() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for spec in ["micro", "kuhn:players=2,ranks=3", "goofspiel:ranks=3"] {
            let (game, indexes, table) = setup(spec);
            for _ in 0..100 {
                let profile = random_profile(&indexes, &mut rng);
                for p in 0..game.num_players() {
                    let grad = utility_gradient(&table, PlayerId(p), &profile).unwrap();
                    let br = best_response(&indexes[p], &grad.values, None);
                    let actual = profile[p].dot(&grad.values);
                    assert!(
                        br.value >= actual - 1e-10,
                        "{spec} player {p}: br {} < actual {}",
                        br.value,
                        actual
                    );
                }
            }
        }
    }

    #[test]
    fn best_response_matches_pure_enumeration_on_micro() {
        let (_, indexes, _) = setup("micro");
        let idx = &indexes[0];
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let u: Vec<f64> = (0..5).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let br = best_response(idx, &u, None);
            // 4 pure strategies: (A action, B action).
            let mut best = f64::NEG_INFINITY;
            for a in 0..2 {
                for b in 0..2 {
                    let v = u[0] + u[1 + a] + u[3 + b];
                    best = best.max(v);
                }
            }
            assert!((br.value - best).abs() < 1e-12);
        }
    }

    /// Independent recursive evaluator: walks the tree multiplying
    /// behavioral probabilities derived from the sequence-form profile
    /// (a different traversal than the flattened terminal table).
    fn recursive_values(
        game: &GameTree<f64>,
        indexes: &[PlayerTreeIndex<f64>],
        profile: &[SeqVec<f64>],
        node: crate::efg::NodeId,
    ) -> Vec<f64> {
        match game.node(node) {
            crate::efg::Node::Terminal { payoffs } => payoffs.clone(),
            crate::efg::Node::Chance { outcomes } => {
                let mut acc = vec![0.0; game.num_players()];
                for (p, child) in outcomes {
                    let v = recursive_values(game, indexes, profile, *child);
                    for (a, b) in acc.iter_mut().zip(v) {
                        *a += p * b;
                    }
                }
                acc
            }
            crate::efg::Node::Decision { player, actions, .. } => {
                let idx = &indexes[player.0];
                let parent = idx.seq_of_node(node);
                let reach = profile[player.0].get(parent);
                let mut acc = vec![0.0; game.num_players()];
                for (a_idx, action) in actions.iter().enumerate() {
                    let (j, _) = idx
                        .seq_owner(idx.seq_of_node(action.child))
                        .expect("child has a sequence");
                    let seq = idx.infoset(j).seq(a_idx);
                    let prob = profile[player.0].get(seq) / reach;
                    let v = recursive_values(game, indexes, profile, action.child);
                    for (x, y) in acc.iter_mut().zip(v) {
                        *x += prob * y;
                    }
                }
                acc
            }
        }
    }

    #[test]
    fn terminal_table_matches_recursive_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for spec in ["micro", "kuhn:players=3,ranks=3", "goofspiel:ranks=3"] {
            let (game, indexes, table) = setup(spec);
            for _ in 0..10 {
                let profile = random_profile(&indexes, &mut rng);
                let fast = expected_utilities(&table, &profile).unwrap();
                let slow = recursive_values(&game, &indexes, &profile, game.root());
                for (a, b) in fast.iter().zip(&slow) {
                    assert!((a - b).abs() < 1e-10, "{spec}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn one_player_one_terminal_per_sequence() {
        use crate::efg::{Action, Node, NodeId};
        let nodes = vec![
            Node::Terminal { payoffs: vec![0.3] },
            Node::Terminal { payoffs: vec![-0.4] },
            Node::Decision {
                player: PlayerId(0),
                infoset_key: "only".into(),
                actions: vec![
                    Action { label: "a".into(), child: NodeId(0) },
                    Action { label: "b".into(), child: NodeId(1) },
                ],
            },
        ];
        let game = GameTree::new("single", 1, NodeId(2), nodes).unwrap();
        let index = build_index(&game, PlayerId(0)).unwrap();
        let table = TerminalTable::build(&game, std::slice::from_ref(&index)).unwrap();
        let profile = vec![index.uniform_seq_vec()];
        let grad = utility_gradient(&table, PlayerId(0), &profile).unwrap();
        assert_eq!(grad.values, vec![0.0, 0.3, -0.4]);
    }

    #[test]
    fn three_action_best_response_example() {
        use crate::efg::{Action, Node, NodeId};
        let nodes = vec![
            Node::Terminal { payoffs: vec![0.0] },
            Node::Terminal { payoffs: vec![0.0] },
            Node::Terminal { payoffs: vec![0.0] },
            Node::Decision {
                player: PlayerId(0),
                infoset_key: "only".into(),
                actions: (0..3)
                    .map(|i| Action {
                        label: format!("a{i}"),
                        child: NodeId(i),
                    })
                    .collect(),
            },
        ];
        let game = GameTree::new("simplex", 1, NodeId(3), nodes).unwrap();
        let index = build_index(&game, PlayerId(0)).unwrap();
        let u: [f64; 3] = [0.2, 0.7, 0.1];
        let br = best_response(&index, &u, Some(InfosetId(0)));
        assert_eq!(br.vector, vec![0.0, 1.0, 0.0]);
        assert!((br.value - 0.7).abs() < 1e-15);
    }

    #[test]
    fn kuhn_bet_with_highest_card_value() {
        // Against a uniform-behavioral opponent, betting the highest card
        // in kuhn(2,3) is worth 1/6 * (1/2 * 1 + 1/2 * 2) per deal in raw
        // units, two deals, normalized by the maximum raw payoff 2.
        let (_, indexes, table) = setup("kuhn:players=2,ranks=3");
        let profile = vec![indexes[0].uniform_seq_vec(), indexes[1].uniform_seq_vec()];
        let grad = utility_gradient(&table, PlayerId(0), &profile).unwrap();
        let (j, _) = indexes[0]
            .infosets()
            .find(|(_, info)| info.key == "card=2|")
            .unwrap();
        let bet_seq = indexes[0].infoset(j).seq(1);
        assert!((grad.values[bet_seq.0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn profile_mismatch_is_an_error() {
        let (_, indexes, table) = setup("micro");
        let profile = vec![indexes[0].uniform_seq_vec(), indexes[0].uniform_seq_vec()];
        assert!(utility_gradient(&table, PlayerId(0), &profile).is_err());
    }
}
