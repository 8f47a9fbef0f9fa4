//! Per-player sequence-form indexing.
//!
//! [`PlayerTreeIndex`] derives, for one player of a [`GameTree`], the
//! information sets, the sequence list (empty sequence plus one per
//! (infoset, action) pair), parent maps, the precedence relation, per-infoset
//! subtree views and the polytope constants used by the learners. Ordering is
//! deterministic: infosets are numbered by pre-order of first node
//! occurrence, sequences by infoset then action index, so ancestor infosets
//! always have smaller ids.

use super::{GameError, GameTree, Node, NodeId, PlayerId};
use crate::scalar::{real, Real};
use std::collections::HashMap;

/// A sequence id. `SeqId(0)` is the empty sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeqId(pub usize);

/// The empty sequence.
pub const EMPTY_SEQ: SeqId = SeqId(0);

/// An information set id, local to one player's index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InfosetId(pub usize);

/// Static data about one information set.
#[derive(Debug, Clone)]
pub struct InfosetInfo {
    pub key: String,
    pub parent_seq: SeqId,
    /// First sequence of this infoset; sequences `first_seq..first_seq+len`
    /// correspond to actions `0..len`.
    pub first_seq: usize,
    pub actions: Vec<String>,
    pub nodes: Vec<NodeId>,
    /// Ancestor infosets from the root infoset down to (and including) self.
    pub ancestors: Vec<InfosetId>,
    /// Own sequences on the path to this infoset, excluding the empty
    /// sequence (outermost first; the last entry is `parent_seq` unless the
    /// infoset is a root infoset).
    pub path_seqs: Vec<SeqId>,
}

impl InfosetInfo {
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn seq(&self, action: usize) -> SeqId {
        SeqId(self.first_seq + action)
    }
}

/// Tree-structured flow constraints for a polytope over `dim` coordinates:
/// one group per infoset; group members must sum to the parent coordinate
/// (or to the root mass when `parent` is `None`).
#[derive(Debug, Clone)]
pub struct TreePolytope {
    pub dim: usize,
    pub groups: Vec<FlowGroup>,
}

/// One flow-conservation constraint.
#[derive(Debug, Clone, Copy)]
pub struct FlowGroup {
    pub parent: Option<usize>,
    pub first: usize,
    pub len: usize,
}

impl TreePolytope {
    /// The probability simplex over `dim` coordinates.
    pub fn simplex(dim: usize) -> Self {
        TreePolytope {
            dim,
            groups: vec![FlowGroup {
                parent: None,
                first: 0,
                len: dim,
            }],
        }
    }

    /// The point with every group split uniformly from root mass 1.
    pub fn uniform<R: Real>(&self) -> Vec<R> {
        let mut v = vec![R::zero(); self.dim];
        for g in &self.groups {
            let mass = match g.parent {
                None => R::one(),
                Some(p) => v[p],
            };
            let share = mass / real(g.len as f64);
            for slot in v[g.first..g.first + g.len].iter_mut() {
                *slot = share;
            }
        }
        v
    }

    /// Checks nonnegativity, root mass 1 and flow conservation within `tol`.
    pub fn is_member<R: Real>(&self, v: &[R], tol: R) -> bool {
        if v.len() != self.dim {
            return false;
        }
        if v.iter().any(|x| *x < -tol || !x.is_finite()) {
            return false;
        }
        for g in &self.groups {
            let mass = match g.parent {
                None => R::one(),
                Some(p) => v[p],
            };
            let sum = v[g.first..g.first + g.len]
                .iter()
                .fold(R::zero(), |a, b| a + *b);
            if (sum - mass).abs() > tol {
                return false;
            }
        }
        true
    }
}

/// View of the sequences at or below one infoset, with local coordinates in
/// pre-order (the infoset's own sequences first).
#[derive(Debug, Clone)]
pub struct SubtreeIndex {
    pub root: InfosetId,
    /// Local coordinate -> global sequence.
    pub seqs: Vec<SeqId>,
    /// Infosets of the subtree in topological (pre-)order.
    pub infosets: Vec<InfosetId>,
    /// Global sequence -> local coordinate.
    local_of_seq: Vec<Option<usize>>,
    pub shape: TreePolytope,
}

impl SubtreeIndex {
    pub fn dim(&self) -> usize {
        self.seqs.len()
    }

    /// Local coordinate of a global sequence, if it lies in this subtree.
    pub fn local_of(&self, seq: SeqId) -> Option<usize> {
        self.local_of_seq[seq.0]
    }
}

/// A nonnegative vector over a player's full sequence set, `[0]` being the
/// empty sequence. Valid instances satisfy the sequence-form flow
/// constraints (see [`PlayerTreeIndex::validate_seq_vec`]).
#[derive(Debug, Clone, PartialEq)]
pub struct SeqVec<R> {
    pub player: PlayerId,
    pub values: Vec<R>,
}

impl<R: Real> SeqVec<R> {
    pub fn new(player: PlayerId, values: Vec<R>) -> Self {
        SeqVec { player, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, seq: SeqId) -> R {
        self.values[seq.0]
    }

    pub fn dot(&self, other: &[R]) -> R {
        debug_assert_eq!(self.values.len(), other.len());
        self.values
            .iter()
            .zip(other)
            .fold(R::zero(), |acc, (a, b)| acc + *a * *b)
    }
}

impl<R> std::ops::Index<SeqId> for SeqVec<R> {
    type Output = R;
    fn index(&self, seq: SeqId) -> &R {
        &self.values[seq.0]
    }
}

impl<R> std::ops::IndexMut<SeqId> for SeqVec<R> {
    fn index_mut(&mut self, seq: SeqId) -> &mut R {
        &mut self.values[seq.0]
    }
}

/// Sequence-form index of one player in one game.
#[derive(Debug, Clone)]
pub struct PlayerTreeIndex<R> {
    player: PlayerId,
    infosets: Vec<InfosetInfo>,
    num_seqs: usize,
    /// Per sequence: the (infoset, action) that produced it; `None` for the
    /// empty sequence.
    seq_owner: Vec<Option<(InfosetId, usize)>>,
    /// Infosets whose parent sequence is the given sequence.
    children_of_seq: Vec<Vec<InfosetId>>,
    /// For each game node, the player's last sequence on the path to it.
    seq_of_node: Vec<SeqId>,
    /// Sequences weakly below each sequence (the sequence itself included).
    below_seq: Vec<Vec<SeqId>>,
    subtrees: Vec<SubtreeIndex>,
    subtree_norm1: Vec<R>,
    q_norm1: R,
    depth: usize,
    max_branching: usize,
}

/// Builds the sequence-form index for `player`, checking perfect recall.
pub fn build_index<R: Real>(
    game: &GameTree<R>,
    player: PlayerId,
) -> Result<PlayerTreeIndex<R>, GameError> {
    PlayerTreeIndex::build(game, player)
}

impl<R: Real> PlayerTreeIndex<R> {
    pub fn build(game: &GameTree<R>, player: PlayerId) -> Result<Self, GameError> {
        if player.0 >= game.num_players() {
            return Err(GameError::PlayerRange(player.0));
        }
        let mut infosets: Vec<InfosetInfo> = Vec::new();
        let mut by_key: HashMap<String, InfosetId> = HashMap::new();
        let mut num_seqs = 1usize;
        let mut seq_of_node = vec![EMPTY_SEQ; game.num_nodes()];

        // Pre-order traversal carrying the player's current sequence.
        let mut stack: Vec<(NodeId, SeqId)> = vec![(game.root(), EMPTY_SEQ)];
        while let Some((node_id, cur_seq)) = stack.pop() {
            seq_of_node[node_id.0] = cur_seq;
            match game.node(node_id) {
                Node::Terminal { .. } => {}
                Node::Chance { outcomes } => {
                    for (_, child) in outcomes.iter().rev() {
                        stack.push((*child, cur_seq));
                    }
                }
                Node::Decision {
                    player: owner,
                    infoset_key,
                    actions,
                } => {
                    if *owner != player {
                        for a in actions.iter().rev() {
                            stack.push((a.child, cur_seq));
                        }
                        continue;
                    }
                    let id = match by_key.get(infoset_key) {
                        Some(id) => {
                            let info = &mut infosets[id.0];
                            if info.parent_seq != cur_seq {
                                return Err(GameError::PerfectRecall {
                                    infoset: infoset_key.clone(),
                                    player: player.0,
                                });
                            }
                            if info.actions.len() != actions.len()
                                || info
                                    .actions
                                    .iter()
                                    .zip(actions)
                                    .any(|(l, a)| *l != a.label)
                            {
                                return Err(GameError::InconsistentActions {
                                    infoset: infoset_key.clone(),
                                    player: player.0,
                                });
                            }
                            info.nodes.push(node_id);
                            *id
                        }
                        None => {
                            let id = InfosetId(infosets.len());
                            by_key.insert(infoset_key.clone(), id);
                            infosets.push(InfosetInfo {
                                key: infoset_key.clone(),
                                parent_seq: cur_seq,
                                first_seq: num_seqs,
                                actions: actions.iter().map(|a| a.label.clone()).collect(),
                                nodes: vec![node_id],
                                ancestors: Vec::new(),
                                path_seqs: Vec::new(),
                            });
                            num_seqs += actions.len();
                            id
                        }
                    };
                    let first = infosets[id.0].first_seq;
                    for (a_idx, a) in actions.iter().enumerate().rev() {
                        stack.push((a.child, SeqId(first + a_idx)));
                    }
                }
            }
        }

        let mut seq_owner = vec![None; num_seqs];
        let mut children_of_seq: Vec<Vec<InfosetId>> = vec![Vec::new(); num_seqs];
        for (j_idx, info) in infosets.iter().enumerate() {
            for a in 0..info.actions.len() {
                seq_owner[info.first_seq + a] = Some((InfosetId(j_idx), a));
            }
            children_of_seq[info.parent_seq.0].push(InfosetId(j_idx));
        }

        // Ancestor chains (parents have smaller ids, so one forward pass).
        for j_idx in 0..infosets.len() {
            let parent_seq = infosets[j_idx].parent_seq;
            let (ancestors, path_seqs) = if parent_seq == EMPTY_SEQ {
                (vec![InfosetId(j_idx)], Vec::new())
            } else {
                let (pj, _) = seq_owner[parent_seq.0].expect("non-empty parent sequence");
                let mut anc = infosets[pj.0].ancestors.clone();
                anc.push(InfosetId(j_idx));
                let mut path = infosets[pj.0].path_seqs.clone();
                path.push(parent_seq);
                (anc, path)
            };
            infosets[j_idx].ancestors = ancestors;
            infosets[j_idx].path_seqs = path_seqs;
        }

        // Sequences weakly below each sequence. Child infosets have larger
        // first_seq, so a reverse pass sees descendants first.
        let mut below_seq: Vec<Vec<SeqId>> = vec![Vec::new(); num_seqs];
        for s in (0..num_seqs).rev() {
            let mut acc = vec![SeqId(s)];
            for j in &children_of_seq[s] {
                let info = &infosets[j.0];
                for a in 0..info.actions.len() {
                    acc.extend(below_seq[info.first_seq + a].iter().copied());
                }
            }
            below_seq[s] = acc;
        }

        // Per-infoset subtree views.
        let mut subtrees = Vec::with_capacity(infosets.len());
        for j_idx in 0..infosets.len() {
            subtrees.push(Self::build_subtree(
                &infosets,
                &children_of_seq,
                num_seqs,
                InfosetId(j_idx),
            ));
        }

        // ||Q||_1 via the deterministic-strategy DP.
        let mut w = vec![R::zero(); infosets.len()];
        for j_idx in (0..infosets.len()).rev() {
            let info = &infosets[j_idx];
            let mut best = R::zero();
            for a in 0..info.actions.len() {
                let mut val = R::one();
                for j2 in &children_of_seq[info.first_seq + a] {
                    val = val + w[j2.0];
                }
                if a == 0 || val > best {
                    best = val;
                }
            }
            w[j_idx] = best;
        }
        let subtree_norm1 = w.clone();
        let q_norm1 = children_of_seq[0]
            .iter()
            .fold(R::one(), |acc, j| acc + w[j.0]);

        let depth = infosets.iter().map(|i| i.ancestors.len()).max().unwrap_or(0);
        let max_branching = infosets.iter().map(|i| i.actions.len()).max().unwrap_or(0);

        Ok(PlayerTreeIndex {
            player,
            infosets,
            num_seqs,
            seq_owner,
            children_of_seq,
            seq_of_node,
            below_seq,
            subtrees,
            subtree_norm1,
            q_norm1,
            depth,
            max_branching,
        })
    }

    fn build_subtree(
        infosets: &[InfosetInfo],
        children_of_seq: &[Vec<InfosetId>],
        num_seqs: usize,
        root: InfosetId,
    ) -> SubtreeIndex {
        let mut seqs = Vec::new();
        let mut local_infosets = Vec::new();
        let mut local_of_seq = vec![None; num_seqs];
        let mut groups = Vec::new();
        // Pre-order over infosets: parent coordinates come first.
        let mut stack = vec![(root, None::<usize>)];
        while let Some((j, parent_local)) = stack.pop() {
            let info = &infosets[j.0];
            let first_local = seqs.len();
            for a in 0..info.actions.len() {
                local_of_seq[info.first_seq + a] = Some(seqs.len());
                seqs.push(SeqId(info.first_seq + a));
            }
            local_infosets.push(j);
            groups.push(FlowGroup {
                parent: parent_local,
                first: first_local,
                len: info.actions.len(),
            });
            for a in (0..info.actions.len()).rev() {
                for j2 in children_of_seq[info.first_seq + a].iter().rev() {
                    stack.push((*j2, Some(first_local + a)));
                }
            }
        }
        let dim = seqs.len();
        SubtreeIndex {
            root,
            seqs,
            infosets: local_infosets,
            local_of_seq,
            shape: TreePolytope { dim, groups },
        }
    }

    pub fn player(&self) -> PlayerId {
        self.player
    }

    pub fn num_seqs(&self) -> usize {
        self.num_seqs
    }

    pub fn num_infosets(&self) -> usize {
        self.infosets.len()
    }

    pub fn infoset(&self, j: InfosetId) -> &InfosetInfo {
        &self.infosets[j.0]
    }

    pub fn infosets(&self) -> impl Iterator<Item = (InfosetId, &InfosetInfo)> {
        self.infosets
            .iter()
            .enumerate()
            .map(|(i, info)| (InfosetId(i), info))
    }

    /// The (infoset, action) pair of a sequence; `None` for the empty one.
    pub fn seq_owner(&self, seq: SeqId) -> Option<(InfosetId, usize)> {
        self.seq_owner[seq.0]
    }

    /// Infosets whose parent sequence is `seq`.
    pub fn children_of_seq(&self, seq: SeqId) -> &[InfosetId] {
        &self.children_of_seq[seq.0]
    }

    /// The player's last sequence on the path to `node`.
    pub fn seq_of_node(&self, node: NodeId) -> SeqId {
        self.seq_of_node[node.0]
    }

    /// Sequences weakly below `seq`, `seq` itself included.
    pub fn below_seq(&self, seq: SeqId) -> &[SeqId] {
        &self.below_seq[seq.0]
    }

    /// Subtree view rooted at infoset `j`.
    pub fn subtree(&self, j: InfosetId) -> &SubtreeIndex {
        &self.subtrees[j.0]
    }

    /// `true` iff `seq` lies weakly below infoset `j` (passes through `j`).
    pub fn seq_below_infoset(&self, seq: SeqId, j: InfosetId) -> bool {
        self.subtrees[j.0].local_of(seq).is_some()
    }

    /// `true` iff `a` weakly precedes `b` in the sequence order (the empty
    /// sequence precedes everything).
    pub fn seq_weakly_precedes(&self, a: SeqId, b: SeqId) -> bool {
        if a == EMPTY_SEQ {
            return true;
        }
        let mut cur = b;
        loop {
            if cur == a {
                return true;
            }
            match self.seq_owner[cur.0] {
                None => return false,
                Some((j, _)) => cur = self.infosets[j.0].parent_seq,
            }
        }
    }

    /// Maximum l1 norm over the sequence-form polytope.
    pub fn q_norm1(&self) -> R {
        self.q_norm1
    }

    /// Maximum l1 norm over the subtree polytope rooted at `j`.
    pub fn subtree_q_norm1(&self, j: InfosetId) -> R {
        self.subtree_norm1[j.0]
    }

    /// Depth of the player's decision tree (longest infoset chain).
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn max_branching(&self) -> usize {
        self.max_branching
    }

    /// Uniform behavioral strategy pushed forward to sequence form.
    pub fn uniform_seq_vec(&self) -> SeqVec<R> {
        let beh: Vec<Vec<R>> = self
            .infosets
            .iter()
            .map(|i| vec![R::one() / real(i.actions.len() as f64); i.actions.len()])
            .collect();
        self.seq_vec_from_behavioral(&beh)
    }

    /// Pushes per-infoset action distributions forward to sequence form.
    /// Distributions are normalized defensively; infosets appear in id
    /// order, so parents are filled before children.
    pub fn seq_vec_from_behavioral(&self, behavioral: &[Vec<R>]) -> SeqVec<R> {
        assert_eq!(behavioral.len(), self.infosets.len());
        let mut v = vec![R::zero(); self.num_seqs];
        v[0] = R::one();
        for (j_idx, info) in self.infosets.iter().enumerate() {
            let reach = v[info.parent_seq.0];
            let total = behavioral[j_idx]
                .iter()
                .fold(R::zero(), |a, b| a + *b);
            for a in 0..info.actions.len() {
                let p = if total > R::zero() {
                    behavioral[j_idx][a] / total
                } else {
                    R::one() / real(info.actions.len() as f64)
                };
                v[info.first_seq + a] = reach * p;
            }
        }
        SeqVec::new(self.player, v)
    }

    /// Uniform point of the subtree polytope at `j`, in local coordinates.
    pub fn uniform_subtree(&self, j: InfosetId) -> Vec<R> {
        self.subtrees[j.0].shape.uniform()
    }

    /// Checks the sequence-form constraints: root entry 1 and flow
    /// conservation within `tol`, all entries nonnegative within `tol`.
    pub fn validate_seq_vec(&self, v: &SeqVec<R>, tol: R) -> Result<(), GameError> {
        if v.player != self.player || v.values.len() != self.num_seqs {
            return Err(GameError::BadParameter(format!(
                "sequence vector does not match index of player {}",
                self.player.0
            )));
        }
        let ok = (v.values[0] - R::one()).abs() <= tol
            && v.values.iter().all(|x| *x >= -tol && x.is_finite())
            && self.infosets.iter().all(|info| {
                let sum = (0..info.actions.len())
                    .map(|a| v.values[info.first_seq + a])
                    .fold(R::zero(), |a, b| a + b);
                (sum - v.values[info.parent_seq.0]).abs() <= tol
            });
        if ok {
            Ok(())
        } else {
            Err(GameError::BadParameter(format!(
                "vector violates sequence-form constraints of player {}",
                self.player.0
            )))
        }
    }
}
