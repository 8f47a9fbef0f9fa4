//! Extensive-form games: the immutable game tree, per-player sequence-form
//! indexing, benchmark game constructors, and the linear-utility evaluation
//! machinery (gradients, best responses, expected values).
//!
//! A [`GameTree`] is a rooted tree of chance, decision and terminal nodes.
//! Payoffs are stored normalized to `[-1, 1]`; constructors divide raw
//! payoffs by the maximum absolute raw payoff of the instance. Trees are
//! immutable after construction and safe to share across threads.

pub mod games;
pub mod index;
pub mod values;

pub use games::{load_game, load_game_str, GameSpec};
pub use index::{InfosetId, PlayerTreeIndex, SeqId, SeqVec, SubtreeIndex};
pub use values::{best_response, expected_utilities, utility_gradient, TerminalTable};

use crate::scalar::{real, Real};

/// Identifies a node inside a [`GameTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

/// A player, 0-based. Reports and CSV output print players 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlayerId(pub usize);

/// One labelled action edge out of a decision node.
#[derive(Debug, Clone)]
pub struct Action {
    pub label: String,
    pub child: NodeId,
}

/// A node of the game tree.
#[derive(Debug, Clone)]
pub enum Node<R> {
    /// Chance node with a fixed distribution over outcomes.
    Chance { outcomes: Vec<(R, NodeId)> },
    /// Decision node owned by a player. Nodes with equal `(player,
    /// infoset_key)` belong to the same information set.
    Decision {
        player: PlayerId,
        infoset_key: String,
        actions: Vec<Action>,
    },
    /// Terminal node carrying one payoff per player.
    Terminal { payoffs: Vec<R> },
}

/// Structural problems detected while validating or indexing a game.
#[derive(Debug, Clone, thiserror::Error)]
pub enum GameError {
    #[error("unknown game name `{0}`")]
    UnknownGame(String),
    #[error("bad game parameter: {0}")]
    BadParameter(String),
    #[error("node {node} is not part of a tree (reached twice or unreachable)")]
    NotATree { node: usize },
    #[error("decision node {node} has no actions")]
    NoActions { node: usize },
    #[error("chance probabilities at node {node} sum to {sum} (must be 1 within 1e-12)")]
    ChanceSum { node: usize, sum: f64 },
    #[error("chance probability at node {node} is negative")]
    NegativeChance { node: usize },
    #[error("terminal {node} payoff {payoff} for player {player} lies outside [-1, 1]")]
    PayoffRange {
        node: usize,
        player: usize,
        payoff: f64,
    },
    #[error("terminal {node} has {got} payoffs, expected {expected}")]
    PayoffArity {
        node: usize,
        got: usize,
        expected: usize,
    },
    #[error("perfect recall violated at infoset `{infoset}` of player {player}")]
    PerfectRecall { infoset: String, player: usize },
    #[error("infoset `{infoset}` of player {player} has inconsistent action sets")]
    InconsistentActions { infoset: String, player: usize },
    #[error("player {0} out of range")]
    PlayerRange(usize),
}

/// An immutable extensive-form game tree.
#[derive(Debug, Clone)]
pub struct GameTree<R> {
    name: String,
    num_players: usize,
    root: NodeId,
    nodes: Vec<Node<R>>,
}

impl<R: Real> GameTree<R> {
    /// Builds and validates a tree. `nodes` must form a rooted tree under
    /// the child links of `root`.
    pub fn new(
        name: impl Into<String>,
        num_players: usize,
        root: NodeId,
        nodes: Vec<Node<R>>,
    ) -> Result<Self, GameError> {
        let tree = GameTree {
            name: name.into(),
            num_players,
            root,
            nodes,
        };
        tree.validate()?;
        Ok(tree)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node<R> {
        &self.nodes[id.0]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Ids of all terminal nodes, in depth-first order from the root.
    pub fn terminals(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            match self.node(id) {
                Node::Terminal { .. } => out.push(id),
                Node::Chance { outcomes } => {
                    stack.extend(outcomes.iter().rev().map(|(_, c)| *c));
                }
                Node::Decision { actions, .. } => {
                    stack.extend(actions.iter().rev().map(|a| a.child));
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<(), GameError> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        let mut reached = 0usize;
        while let Some(id) = stack.pop() {
            if seen[id.0] {
                return Err(GameError::NotATree { node: id.0 });
            }
            seen[id.0] = true;
            reached += 1;
            match self.node(id) {
                Node::Chance { outcomes } => {
                    if outcomes.is_empty() {
                        return Err(GameError::NoActions { node: id.0 });
                    }
                    let mut sum = R::zero();
                    for (p, child) in outcomes {
                        if *p < R::zero() {
                            return Err(GameError::NegativeChance { node: id.0 });
                        }
                        sum = sum + *p;
                        stack.push(*child);
                    }
                    if (sum - R::one()).abs() > real(1e-12) {
                        return Err(GameError::ChanceSum {
                            node: id.0,
                            sum: sum.to_f64().unwrap_or(f64::NAN),
                        });
                    }
                }
                Node::Decision { player, actions, .. } => {
                    if player.0 >= self.num_players {
                        return Err(GameError::PlayerRange(player.0));
                    }
                    if actions.is_empty() {
                        return Err(GameError::NoActions { node: id.0 });
                    }
                    for a in actions {
                        stack.push(a.child);
                    }
                }
                Node::Terminal { payoffs } => {
                    if payoffs.len() != self.num_players {
                        return Err(GameError::PayoffArity {
                            node: id.0,
                            got: payoffs.len(),
                            expected: self.num_players,
                        });
                    }
                    for (i, u) in payoffs.iter().enumerate() {
                        if u.abs() > R::one() + real(1e-12) || !u.is_finite() {
                            return Err(GameError::PayoffRange {
                                node: id.0,
                                player: i,
                                payoff: u.to_f64().unwrap_or(f64::NAN),
                            });
                        }
                    }
                }
            }
        }
        if reached != self.nodes.len() {
            let orphan = seen.iter().position(|s| !s).unwrap_or(0);
            return Err(GameError::NotATree { node: orphan });
        }
        Ok(())
    }
}
