//! Uncoupled no-regret learning dynamics for extensive-form correlated
//! equilibria.
//!
//! The crate runs synchronous learning dynamics in multiplayer
//! imperfect-information extensive-form games where each player minimizes
//! regret against trigger deviations (or coarse trigger deviations). The
//! construction composes:
//!
//! - one local regret minimizer per trigger, operating over the sequence-form
//!   polytope rooted at the trigger's infoset,
//! - a simplex regret minimizer mixing the triggers (the convex-hull regret
//!   circuit), and
//! - a fixed-point step mapping the mixed deviation back to a strategy,
//!   which turns external regret over the deviation set into deviation
//!   regret for the realized play.
//!
//! Local learners are either optimistic FTRL with a log barrier on a lifted
//! polytope (`lrl-oftrl`) or CFR-style regret matching (`cfr-rm`,
//! `cfr-rm+`). Everything is deterministic; all numerics are generic over
//! [`scalar::Real`] with `f64` aliases exported at the crate root.

#![forbid(unsafe_code)]

pub mod dynamics;
pub mod efg;
pub mod learners;
pub mod linalg;
pub mod scalar;
pub mod trigger;

pub use scalar::{real, Real};

/// Double-precision aliases for the main types.
pub type GameTree64 = efg::GameTree<f64>;
pub type PlayerTreeIndex64 = efg::PlayerTreeIndex<f64>;
pub type SeqVec64 = efg::SeqVec<f64>;
pub type TerminalTable64 = efg::TerminalTable<f64>;
pub type TriggerProfile64 = trigger::TriggerProfile<f64>;
pub type DynamicsLog64 = dynamics::DynamicsLog<f64>;
