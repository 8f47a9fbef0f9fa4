//! Benchmark game constructors and the `name:key=value,...` spec parser.
//!
//! All constructors build payoffs in raw units first and then divide every
//! terminal payoff by the maximum absolute raw payoff of the instance, so
//! stored payoffs always lie in `[-1, 1]`.
//!
//! Games:
//! - `micro` — a fixed two-player game with a chance root, one singleton
//!   infoset per chance branch for player 2, and two parallel two-action
//!   infosets (`A`, `B`) for player 1. Player 1's sequences enumerate as
//!   `{empty, 1, 2, 3, 4}`. Payoffs are a fixed generic general-sum table.
//! - `kuhn:players=N,ranks=R` — Kuhn poker with one ante, a deck of `R`
//!   ranks and a single bet round. After a bet, every other player folds or
//!   calls exactly once, in seat order after the bettor.
//! - `goofspiel:ranks=R` — bidding game over a shuffled prize deck (chance
//!   enumerates prize orders at the root). Players pick cards simultaneously
//!   each round, encoded sequentially with the second player not observing
//!   the first player's current pick; past picks are public. Tied bids
//!   discard the prize, which makes the game general-sum.
//! - `sheriff:v=..,p=..,s=..,mmax=..,bmax=..,rounds=..` — the smuggler loads
//!   `m` items secretly, then `rounds` rounds of public (bribe, accept)
//!   bargaining; only the final round binds. An accepted final bribe `b`
//!   pays the smuggler `p*m - b` and the sheriff `b`; on rejection the
//!   sheriff optionally inspects. Note that some descriptions of Sheriff
//!   award `v*m - b` for an accepted final bribe; this implementation
//!   deliberately awards `p*m - b`.

use super::{Action, GameError, GameTree, Node, NodeId, PlayerId};
use crate::scalar::{real, Real};

/// Parsed description of a benchmark game instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameSpec {
    Micro,
    Kuhn {
        players: usize,
        ranks: usize,
    },
    Goofspiel {
        ranks: usize,
    },
    Sheriff {
        v: i64,
        p: i64,
        s: i64,
        m_max: usize,
        b_max: usize,
        rounds: usize,
    },
}

impl GameSpec {
    /// Parses spec strings such as `kuhn:players=3,ranks=3` or `micro`.
    pub fn parse(text: &str) -> Result<Self, GameError> {
        let (name, args) = match text.split_once(':') {
            Some((n, a)) => (n.trim(), a),
            None => (text.trim(), ""),
        };
        let mut kv = std::collections::BTreeMap::new();
        for part in args.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| GameError::BadParameter(format!("expected key=value, got `{part}`")))?;
            let parsed: i64 = v
                .trim()
                .parse()
                .map_err(|_| GameError::BadParameter(format!("`{v}` is not an integer")))?;
            kv.insert(k.trim().to_string(), parsed);
        }
        let get = |key: &str, default: Option<i64>| -> Result<i64, GameError> {
            match kv.get(key) {
                Some(v) => Ok(*v),
                None => default.ok_or_else(|| GameError::BadParameter(format!("missing `{key}`"))),
            }
        };
        let as_usize = |v: i64, key: &str| -> Result<usize, GameError> {
            usize::try_from(v).map_err(|_| GameError::BadParameter(format!("`{key}` must be >= 0")))
        };
        match name {
            "micro" => Ok(GameSpec::Micro),
            "kuhn" => Ok(GameSpec::Kuhn {
                players: as_usize(get("players", Some(2))?, "players")?,
                ranks: as_usize(get("ranks", Some(3))?, "ranks")?,
            }),
            "goofspiel" => Ok(GameSpec::Goofspiel {
                ranks: as_usize(get("ranks", Some(3))?, "ranks")?,
            }),
            "sheriff" => Ok(GameSpec::Sheriff {
                v: get("v", Some(5))?,
                p: get("p", Some(1))?,
                s: get("s", Some(1))?,
                m_max: as_usize(get("mmax", Some(5))?, "mmax")?,
                b_max: as_usize(get("bmax", Some(2))?, "bmax")?,
                rounds: as_usize(get("rounds", Some(2))?, "rounds")?,
            }),
            other => Err(GameError::UnknownGame(other.to_string())),
        }
    }

    /// Canonical spec string (round-trips through [`GameSpec::parse`]).
    pub fn to_spec_string(&self) -> String {
        match self {
            GameSpec::Micro => "micro".to_string(),
            GameSpec::Kuhn { players, ranks } => format!("kuhn:players={players},ranks={ranks}"),
            GameSpec::Goofspiel { ranks } => format!("goofspiel:ranks={ranks}"),
            GameSpec::Sheriff {
                v,
                p,
                s,
                m_max,
                b_max,
                rounds,
            } => format!("sheriff:v={v},p={p},s={s},mmax={m_max},bmax={b_max},rounds={rounds}"),
        }
    }
}

/// Loads a validated game with payoffs normalized to `[-1, 1]`.
pub fn load_game<R: Real>(spec: &GameSpec) -> Result<GameTree<R>, GameError> {
    let mut builder = TreeBuilder::new();
    let (name, players) = match spec {
        GameSpec::Micro => {
            build_micro(&mut builder);
            ("micro".to_string(), 2)
        }
        GameSpec::Kuhn { players, ranks } => {
            if *players < 2 || *players > 3 {
                return Err(GameError::BadParameter(format!(
                    "kuhn supports 2 or 3 players, got {players}"
                )));
            }
            if ranks < players {
                return Err(GameError::BadParameter(format!(
                    "kuhn deck needs at least one card per player (players={players}, ranks={ranks})"
                )));
            }
            build_kuhn(&mut builder, *players, *ranks);
            (spec.to_spec_string(), *players)
        }
        GameSpec::Goofspiel { ranks } => {
            if *ranks == 0 || *ranks > 5 {
                return Err(GameError::BadParameter(format!(
                    "goofspiel ranks must be in 1..=5, got {ranks}"
                )));
            }
            build_goofspiel(&mut builder, *ranks);
            (spec.to_spec_string(), 2)
        }
        GameSpec::Sheriff {
            v,
            p,
            s,
            m_max,
            b_max,
            rounds,
        } => {
            if *rounds == 0 {
                return Err(GameError::BadParameter("sheriff needs rounds >= 1".into()));
            }
            build_sheriff(&mut builder, *v, *p, *s, *m_max, *b_max, *rounds);
            (spec.to_spec_string(), 2)
        }
    };
    builder.into_game(name, players)
}

/// Convenience wrapper: parse a spec string and load the game.
pub fn load_game_str<R: Real>(text: &str) -> Result<GameTree<R>, GameError> {
    load_game(&GameSpec::parse(text)?)
}

/// Accumulates nodes with raw payoffs; normalization happens in
/// [`TreeBuilder::into_game`].
struct TreeBuilder {
    nodes: Vec<RawNode>,
}

enum RawNode {
    Chance { outcomes: Vec<(f64, NodeId)> },
    Decision {
        player: usize,
        key: String,
        actions: Vec<(String, NodeId)>,
    },
    Terminal { payoffs: Vec<f64> },
}

impl TreeBuilder {
    fn new() -> Self {
        TreeBuilder { nodes: Vec::new() }
    }

    fn push(&mut self, node: RawNode) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    fn chance(&mut self, outcomes: Vec<(f64, NodeId)>) -> NodeId {
        self.push(RawNode::Chance { outcomes })
    }

    fn decision(&mut self, player: usize, key: String, actions: Vec<(String, NodeId)>) -> NodeId {
        self.push(RawNode::Decision {
            player,
            key,
            actions,
        })
    }

    fn terminal(&mut self, payoffs: Vec<f64>) -> NodeId {
        self.push(RawNode::Terminal { payoffs })
    }

    /// Normalizes payoffs by the maximum absolute raw payoff and assembles
    /// the validated tree. The root is the last node pushed.
    fn into_game<R: Real>(self, name: String, players: usize) -> Result<GameTree<R>, GameError> {
        let root = NodeId(self.nodes.len() - 1);
        let mut max_abs = 0f64;
        for node in &self.nodes {
            if let RawNode::Terminal { payoffs } = node {
                for p in payoffs {
                    max_abs = max_abs.max(p.abs());
                }
            }
        }
        let scale = if max_abs > 0.0 { 1.0 / max_abs } else { 1.0 };
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| match n {
                RawNode::Chance { outcomes } => Node::Chance {
                    outcomes: outcomes.into_iter().map(|(p, c)| (real(p), c)).collect(),
                },
                RawNode::Decision {
                    player,
                    key,
                    actions,
                } => Node::Decision {
                    player: PlayerId(player),
                    infoset_key: key,
                    actions: actions
                        .into_iter()
                        .map(|(label, child)| Action { label, child })
                        .collect(),
                },
                RawNode::Terminal { payoffs } => Node::Terminal {
                    payoffs: payoffs.into_iter().map(|p| real(p * scale)).collect(),
                },
            })
            .collect();
        GameTree::new(name, players, root, nodes)
    }
}

/// Fixed payoff table for the micro game, raw units, `(p1, p2)` per leaf in
/// the order (chance branch, player-2 action, player-1 action).
const MICRO_PAYOFFS: [[(f64, f64); 2]; 4] = [
    [(2.0, -1.0), (-1.0, 3.0)],  // left, p2 action 1: p1 actions 1, 2
    [(0.0, 1.0), (3.0, -2.0)],   // left, p2 action 2
    [(-2.0, 2.0), (1.0, -3.0)],  // right, p2 action 1: p1 actions 3, 4
    [(4.0, 0.0), (-3.0, 1.0)],   // right, p2 action 2
];

fn build_micro(b: &mut TreeBuilder) {
    let mut branch = |side: usize, p2_key: &str, p1_key: &str, labels: [&str; 2]| -> NodeId {
        let mut p2_children = Vec::new();
        for p2a in 0..2 {
            let row = MICRO_PAYOFFS[side * 2 + p2a];
            let leaves: Vec<(String, NodeId)> = (0..2)
                .map(|p1a| {
                    let (u1, u2) = row[p1a];
                    (labels[p1a].to_string(), b.terminal(vec![u1, u2]))
                })
                .collect();
            let p1 = b.decision(0, p1_key.to_string(), leaves);
            p2_children.push((format!("{}", p2a + 1), p1));
        }
        b.decision(1, p2_key.to_string(), p2_children)
    };
    let left = branch(0, "s", "A", ["1", "2"]);
    let right = branch(1, "r", "B", ["3", "4"]);
    b.chance(vec![(0.5, left), (0.5, right)]);
}

fn build_kuhn(b: &mut TreeBuilder, players: usize, ranks: usize) {
    let deals = ordered_deals(ranks, players);
    let prob = 1.0 / deals.len() as f64;
    let mut outcomes = Vec::with_capacity(deals.len());
    for deal in &deals {
        let child = kuhn_node(b, players, deal, &mut Vec::new());
        outcomes.push((prob, child));
    }
    b.chance(outcomes);
}

/// All ordered deals of `players` distinct cards from `0..ranks`.
fn ordered_deals(ranks: usize, players: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(ranks: usize, players: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == players {
            out.push(cur.clone());
            return;
        }
        for c in 0..ranks {
            if !cur.contains(&c) {
                cur.push(c);
                rec(ranks, players, cur, out);
                cur.pop();
            }
        }
    }
    rec(ranks, players, &mut cur, &mut out);
    out
}

#[derive(Clone, Copy, PartialEq)]
enum BetAct {
    Check,
    Bet,
    Fold,
    Call,
}

impl BetAct {
    fn label(self) -> &'static str {
        match self {
            BetAct::Check => "c",
            BetAct::Bet => "b",
            BetAct::Fold => "f",
            BetAct::Call => "k",
        }
    }
}

fn kuhn_node(b: &mut TreeBuilder, players: usize, deal: &[usize], hist: &mut Vec<BetAct>) -> NodeId {
    let bettor = hist.iter().position(|a| *a == BetAct::Bet);
    let (to_act, done) = match bettor {
        None => (hist.len(), hist.len() == players),
        Some(pos) => {
            let responses = hist.len() - pos - 1;
            ((pos + 1 + responses) % players, responses == players - 1)
        }
    };
    if done {
        return b.terminal(kuhn_payoffs(players, deal, hist));
    }
    let acts: &[BetAct] = if bettor.is_none() {
        &[BetAct::Check, BetAct::Bet]
    } else {
        &[BetAct::Fold, BetAct::Call]
    };
    let hist_label: String = hist.iter().map(|a| a.label()).collect();
    let key = format!("card={}|{}", deal[to_act], hist_label);
    let mut actions = Vec::with_capacity(acts.len());
    for act in acts {
        hist.push(*act);
        let child = kuhn_node(b, players, deal, hist);
        hist.pop();
        actions.push((act.label().to_string(), child));
    }
    b.decision(to_act, key, actions)
}

fn kuhn_payoffs(players: usize, deal: &[usize], hist: &[BetAct]) -> Vec<f64> {
    // Contribution: 1 ante each, +1 for the bettor and each caller.
    let mut contrib = vec![1.0f64; players];
    let mut in_showdown = vec![true; players];
    if let Some(pos) = hist.iter().position(|a| *a == BetAct::Bet) {
        contrib[pos] += 1.0;
        for (resp_idx, act) in hist[pos + 1..].iter().enumerate() {
            let seat = (pos + 1 + resp_idx) % players;
            match act {
                BetAct::Call => contrib[seat] += 1.0,
                BetAct::Fold => in_showdown[seat] = false,
                _ => unreachable!("responses are fold or call"),
            }
        }
    }
    let pot: f64 = contrib.iter().sum();
    let winner = (0..players)
        .filter(|i| in_showdown[*i])
        .max_by_key(|i| deal[*i])
        .expect("at least the bettor stays in");
    (0..players)
        .map(|i| {
            if i == winner {
                pot - contrib[i]
            } else {
                -contrib[i]
            }
        })
        .collect()
}

fn build_goofspiel(b: &mut TreeBuilder, ranks: usize) {
    let perms = permutations(ranks);
    let prob = 1.0 / perms.len() as f64;
    let mut outcomes = Vec::with_capacity(perms.len());
    for perm in &perms {
        let child = goofspiel_round(b, ranks, perm, &mut Vec::new(), &mut Vec::new(), None);
        outcomes.push((prob, child));
    }
    b.chance(outcomes);
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for c in 0..n {
            if !cur.contains(&c) {
                cur.push(c);
                rec(n, cur, out);
                cur.pop();
            }
        }
    }
    rec(n, &mut cur, &mut out);
    out
}

fn goofspiel_round(
    b: &mut TreeBuilder,
    ranks: usize,
    perm: &[usize],
    p0: &mut Vec<usize>,
    p1: &mut Vec<usize>,
    pending_p0: Option<usize>,
) -> NodeId {
    let round = p1.len();
    if round == ranks {
        let mut score = [0.0f64; 2];
        for (k, prize) in perm.iter().enumerate() {
            let value = (prize + 1) as f64;
            if p0[k] > p1[k] {
                score[0] += value;
            } else if p1[k] > p0[k] {
                score[1] += value;
            }
        }
        return b.terminal(vec![score[0], score[1]]);
    }
    // Public history: prizes revealed so far plus both players' past picks.
    let key = format!(
        "prizes={:?}|p0={:?}|p1={:?}",
        &perm[..=round],
        &p0[..round],
        p1
    );
    match pending_p0 {
        None => {
            let hand: Vec<usize> = (0..ranks).filter(|c| !p0.contains(c)).collect();
            let mut actions = Vec::with_capacity(hand.len());
            for card in hand {
                let child = goofspiel_round(b, ranks, perm, p0, p1, Some(card));
                actions.push((format!("{}", card + 1), child));
            }
            b.decision(0, key, actions)
        }
        Some(card0) => {
            let hand: Vec<usize> = (0..ranks).filter(|c| !p1.contains(c)).collect();
            let mut actions = Vec::with_capacity(hand.len());
            for card in hand {
                p0.push(card0);
                p1.push(card);
                let child = goofspiel_round(b, ranks, perm, p0, p1, None);
                p1.pop();
                p0.pop();
                actions.push((format!("{}", card + 1), child));
            }
            b.decision(1, key, actions)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn build_sheriff(b: &mut TreeBuilder, v: i64, p: i64, s: i64, m_max: usize, b_max: usize, rounds: usize) {
    let mut m_actions = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let child = sheriff_round(b, v, p, s, b_max, rounds, m, &mut Vec::new());
        m_actions.push((format!("m{m}"), child));
    }
    b.decision(0, "load".to_string(), m_actions);
}

/// One bargaining round: the smuggler announces a bribe, the sheriff
/// accepts or declines. Only the final round's decision binds.
#[allow(clippy::too_many_arguments)]
fn sheriff_round(
    b: &mut TreeBuilder,
    v: i64,
    p: i64,
    s: i64,
    b_max: usize,
    rounds: usize,
    m: usize,
    hist: &mut Vec<(usize, bool)>,
) -> NodeId {
    let round = hist.len();
    let public: String = hist
        .iter()
        .map(|(bribe, acc)| format!("b{bribe}{}", if *acc { "a" } else { "d" }))
        .collect();
    let mut bribe_actions = Vec::with_capacity(b_max + 1);
    for bribe in 0..=b_max {
        let mut sheriff_actions = Vec::with_capacity(2);
        for accept in [true, false] {
            let child = if round + 1 == rounds {
                if accept {
                    b.terminal(vec![(p * m as i64 - bribe as i64) as f64, bribe as f64])
                } else {
                    // Final decline: the sheriff chooses whether to inspect.
                    let pass = b.terminal(vec![(v * m as i64) as f64, 0.0]);
                    let inspect = if m > 0 {
                        b.terminal(vec![-(p * m as i64) as f64, (p * m as i64) as f64])
                    } else {
                        b.terminal(vec![s as f64, -s as f64])
                    };
                    b.decision(
                        1,
                        format!("{public}b{bribe}d|final"),
                        vec![("inspect".into(), inspect), ("pass".into(), pass)],
                    )
                }
            } else {
                hist.push((bribe, accept));
                let child = sheriff_round(b, v, p, s, b_max, rounds, m, hist);
                hist.pop();
                child
            };
            sheriff_actions.push((if accept { "accept" } else { "decline" }.to_string(), child));
        }
        let sheriff_node = b.decision(1, format!("{public}b{bribe}"), sheriff_actions);
        bribe_actions.push((format!("b{bribe}"), sheriff_node));
    }
    b.decision(0, format!("m{m}|{public}"), bribe_actions)
}
