//! The synchronous learning loop and its measurement machinery.
//!
//! [`run_dynamics`] plays all players' deviation-set minimizers against each
//! other: every round all players commit to strategies, then every player
//! observes the utility gradient induced by the others' time-t strategies
//! (full-information feedback). Hindsight regrets accumulate incrementally
//! and are snapshotted at the requested checkpoints; fixed-point residuals
//! are tracked every round. Everything is deterministic for a fixed
//! configuration; the seed is recorded for the log but nothing in the
//! algorithms draws randomness.

pub mod regret;

pub use regret::{
    external_regret_of_history, trigger_regret_of_history, RegretAccumulator, RegretReport,
};

use crate::efg::index::{build_index, PlayerTreeIndex, SeqVec};
use crate::efg::values::{utility_gradient, TerminalTable};
use crate::efg::{GameError, GameTree, PlayerId};
use crate::scalar::{is_positive, real, Real};
use crate::trigger::{AlgorithmKind, DeviationMode, PsiError, PsiMinimizer, TriggerProfile};
use std::sync::Arc;
use std::time::Instant;

/// Configuration and runtime failures of the dynamics loop.
#[derive(Debug, thiserror::Error)]
pub enum DynamicsError {
    #[error("bad configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("player {player}: {source}")]
    Player { player: usize, source: PsiError },
    #[error("history is empty or inconsistent")]
    EmptyHistory,
}

/// Checkpoint schedule: powers of two plus the final round, or an explicit
/// strictly increasing list (the final round is always included).
#[derive(Debug, Clone)]
pub enum CheckpointSpec {
    PowersOfTwo,
    Explicit(Vec<u64>),
}

impl CheckpointSpec {
    fn resolve(&self, horizon: u64) -> Result<Vec<u64>, DynamicsError> {
        let mut points = match self {
            CheckpointSpec::PowersOfTwo => {
                let mut p = Vec::new();
                let mut t = 1u64;
                while t <= horizon {
                    p.push(t);
                    t = t.saturating_mul(2);
                }
                p
            }
            CheckpointSpec::Explicit(list) => {
                if list.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(DynamicsError::Config(
                        "checkpoints must be strictly increasing".into(),
                    ));
                }
                if list.iter().any(|t| *t == 0 || *t > horizon) {
                    return Err(DynamicsError::Config(
                        "checkpoints must lie in 1..=T".into(),
                    ));
                }
                list.clone()
            }
        };
        if points.last() != Some(&horizon) {
            points.push(horizon);
        }
        Ok(points)
    }
}

/// One run's configuration.
#[derive(Debug, Clone)]
pub struct DynamicsSetup<R> {
    pub algorithm: AlgorithmKind,
    pub mode: DeviationMode,
    pub horizon: u64,
    pub eta: R,
    /// Mixing learner's rate; defaults to `eta / (2 |Sigma_i|)` per player.
    pub eta_delta: Option<R>,
    /// Recorded in the log; the dynamics themselves are deterministic.
    pub seed: u64,
    pub checkpoints: CheckpointSpec,
    /// Retain per-round strategies, utilities and profiles (memory scales
    /// with the horizon).
    pub keep_history: bool,
    /// Track multiplicative stability and utility-variation statistics.
    pub audit: bool,
}

impl<R: Real> DynamicsSetup<R> {
    pub fn new(algorithm: AlgorithmKind, mode: DeviationMode, horizon: u64, eta: R) -> Self {
        DynamicsSetup {
            algorithm,
            mode,
            horizon,
            eta,
            eta_delta: None,
            seed: 0,
            checkpoints: CheckpointSpec::PowersOfTwo,
            keep_history: false,
            audit: false,
        }
    }
}

/// Everything one round leaves behind when history is kept.
#[derive(Debug, Clone)]
pub struct RoundRecord<R> {
    pub strategies: Vec<SeqVec<R>>,
    pub utilities: Vec<SeqVec<R>>,
    pub profiles: Vec<TriggerProfile<R>>,
}

/// One player's regrets at one checkpoint.
#[derive(Debug, Clone)]
pub struct CheckpointRow<R> {
    pub t: u64,
    pub player: usize,
    pub trigger_regret: R,
    pub external_regret: R,
    /// External regret of the composed deviation-set minimizer.
    pub composed_regret: R,
    /// Circuit components at this checkpoint.
    pub mix_regret: R,
    pub local_regrets_pos_sum: R,
}

/// Per-player stability statistics over a whole run.
#[derive(Debug, Clone)]
pub struct PlayerAudit<R> {
    /// `max over t, triggers, sequences of |1 - q^{t+1}/q^t|`.
    pub max_ratio_continuation: R,
    /// `max over t, triggers of |1 - lambda^{t+1}/lambda^t|`.
    pub max_ratio_mix: R,
    /// `sum_t max entry of |u^{t+1} (x^{t+1})^T - u^t (x^t)^T| squared`.
    pub sum_matrix_diff_sq: R,
}

/// The run log: configuration echo, per-checkpoint regrets, residuals and
/// optional history/audit.
#[derive(Debug)]
pub struct DynamicsLog<R> {
    pub game: String,
    pub algorithm: AlgorithmKind,
    pub mode: DeviationMode,
    pub horizon: u64,
    pub eta: R,
    pub eta_delta: Vec<R>,
    pub seed: u64,
    pub checkpoints: Vec<u64>,
    pub rows: Vec<CheckpointRow<R>>,
    pub final_reports: Vec<RegretReport<R>>,
    pub max_fixed_point_residual: R,
    pub history: Option<Vec<RoundRecord<R>>>,
    pub audit: Option<Vec<PlayerAudit<R>>>,
    pub wall_clock_secs: f64,
}

impl<R: Real> DynamicsLog<R> {
    /// Rows of one checkpoint, ordered by player.
    pub fn rows_at(&self, t: u64) -> impl Iterator<Item = &CheckpointRow<R>> {
        self.rows.iter().filter(move |r| r.t == t)
    }

    pub fn num_players(&self) -> usize {
        self.final_reports.len()
    }
}

/// `max_i max(0, regret_i) / horizon` over per-player final regrets.
pub fn gap_from_final_regrets<R: Real>(regrets: &[R], horizon: u64) -> R {
    let t = real::<R>(horizon as f64);
    regrets
        .iter()
        .fold(R::zero(), |m, r| m.max(r.max(R::zero()) / t))
}

/// Equilibrium gap of a finished run: `max_i max(0, trigger regret) / T`.
pub fn equilibrium_gap<R: Real>(log: &DynamicsLog<R>) -> R {
    gap_from_final_regrets(
        &log.final_reports
            .iter()
            .map(|r| r.trigger_regret)
            .collect::<Vec<_>>(),
        log.horizon,
    )
}

/// Runs the synchronous uncoupled dynamics on a game.
pub fn run_dynamics<R: Real>(
    game: &GameTree<R>,
    setup: &DynamicsSetup<R>,
) -> Result<DynamicsLog<R>, DynamicsError> {
    if setup.horizon < 1 {
        return Err(DynamicsError::Config("T must be at least 1".into()));
    }
    if !is_positive(setup.eta) {
        return Err(DynamicsError::Config("eta must be positive".into()));
    }
    if let Some(ed) = setup.eta_delta {
        if !is_positive(ed) {
            return Err(DynamicsError::Config("eta-delta must be positive".into()));
        }
    }
    let started = Instant::now();
    let n = game.num_players();
    let indexes: Vec<Arc<PlayerTreeIndex<R>>> = (0..n)
        .map(|p| build_index(game, PlayerId(p)).map(Arc::new))
        .collect::<Result<_, _>>()?;
    let table = TerminalTable::build(game, &indexes)?;
    let eta_delta: Vec<R> = indexes
        .iter()
        .map(|idx| {
            setup
                .eta_delta
                .unwrap_or(setup.eta / (real::<R>(2.0) * real(idx.num_seqs() as f64)))
        })
        .collect();
    let mut minimizers: Vec<PsiMinimizer<R>> = Vec::with_capacity(n);
    for (i, idx) in indexes.iter().enumerate() {
        minimizers.push(
            PsiMinimizer::new(idx.clone(), setup.mode, setup.algorithm, setup.eta, eta_delta[i])
                .map_err(|source| DynamicsError::Player { player: i, source })?,
        );
    }
    let checkpoints = setup.checkpoints.resolve(setup.horizon)?;
    let mut accumulators: Vec<RegretAccumulator<R>> = indexes
        .iter()
        .map(|idx| RegretAccumulator::new(idx, setup.mode))
        .collect();
    let mut audits: Vec<PlayerAudit<R>> = (0..n)
        .map(|_| PlayerAudit {
            max_ratio_continuation: R::zero(),
            max_ratio_mix: R::zero(),
            sum_matrix_diff_sq: R::zero(),
        })
        .collect();
    type Round<R> = (Vec<TriggerProfile<R>>, Vec<SeqVec<R>>, Vec<SeqVec<R>>);
    let mut prev_round: Option<Round<R>> = None;

    let mut rows = Vec::new();
    let mut history = Vec::new();
    let mut max_residual = R::zero();
    let mut next_checkpoint = 0usize;

    for t in 1..=setup.horizon {
        let mut profiles = Vec::with_capacity(n);
        let mut strategies = Vec::with_capacity(n);
        for (i, psi) in minimizers.iter_mut().enumerate() {
            let (profile, strategy) = psi
                .next_strategy()
                .map_err(|source| DynamicsError::Player { player: i, source })?;
            let residual = profile
                .fixed_point_residual(&indexes[i], &strategy)
                .map_err(|source| DynamicsError::Player {
                    player: i,
                    source: source.into(),
                })?;
            max_residual = max_residual.max(residual);
            profiles.push(profile);
            strategies.push(strategy);
        }
        let utilities: Vec<SeqVec<R>> = (0..n)
            .map(|i| utility_gradient(&table, PlayerId(i), &strategies))
            .collect::<Result<_, _>>()?;
        for i in 0..n {
            accumulators[i].update(&indexes[i], &strategies[i], &utilities[i], Some(&profiles[i]));
            minimizers[i]
                .observe_utility(&utilities[i])
                .map_err(|source| DynamicsError::Player { player: i, source })?;
        }
        if setup.audit {
            if let Some((prev_profiles, prev_x, prev_u)) = &prev_round {
                for i in 0..n {
                    audit_round(
                        &mut audits[i],
                        &prev_profiles[i],
                        &profiles[i],
                        &prev_x[i],
                        &strategies[i],
                        &prev_u[i],
                        &utilities[i],
                    );
                }
            }
            prev_round = Some((profiles.clone(), strategies.clone(), utilities.clone()));
        }
        if setup.keep_history {
            history.push(RoundRecord {
                strategies: strategies.clone(),
                utilities: utilities.clone(),
                profiles: profiles.clone(),
            });
        }
        if next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] == t {
            next_checkpoint += 1;
            for i in 0..n {
                let report = accumulators[i].report(&indexes[i]);
                rows.push(CheckpointRow {
                    t,
                    player: i,
                    trigger_regret: report.trigger_regret,
                    external_regret: report.external_regret,
                    composed_regret: report.composed_regret.expect("profiles recorded"),
                    mix_regret: report.mix_regret.expect("profiles recorded"),
                    local_regrets_pos_sum: report
                        .local_regrets
                        .expect("profiles recorded")
                        .iter()
                        .fold(R::zero(), |a, v| a + v.max(R::zero())),
                });
            }
        }
    }
    let final_reports = (0..n).map(|i| accumulators[i].report(&indexes[i])).collect();
    Ok(DynamicsLog {
        game: game.name().to_string(),
        algorithm: setup.algorithm,
        mode: setup.mode,
        horizon: setup.horizon,
        eta: setup.eta,
        eta_delta,
        seed: setup.seed,
        checkpoints,
        rows,
        final_reports,
        max_fixed_point_residual: max_residual,
        history: setup.keep_history.then_some(history),
        audit: setup.audit.then_some(audits),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

#[allow(clippy::too_many_arguments)]
fn audit_round<R: Real>(
    audit: &mut PlayerAudit<R>,
    prev_profile: &TriggerProfile<R>,
    profile: &TriggerProfile<R>,
    prev_x: &SeqVec<R>,
    x: &SeqVec<R>,
    prev_u: &SeqVec<R>,
    u: &SeqVec<R>,
) {
    for (l_new, l_old) in profile.lambda.iter().zip(&prev_profile.lambda) {
        let ratio = (R::one() - *l_new / *l_old).abs();
        audit.max_ratio_mix = audit.max_ratio_mix.max(ratio);
    }
    for (q_new, q_old) in profile.continuations.iter().zip(&prev_profile.continuations) {
        for (a, b) in q_new.iter().zip(q_old) {
            let ratio = (R::one() - *a / *b).abs();
            audit.max_ratio_continuation = audit.max_ratio_continuation.max(ratio);
        }
    }
    let mut diff = R::zero();
    for (ur, ur_prev) in u.values.iter().zip(&prev_u.values) {
        for (xc, xc_prev) in x.values.iter().zip(&prev_x.values) {
            diff = diff.max((*ur * *xc - *ur_prev * *xc_prev).abs());
        }
    }
    audit.sum_matrix_diff_sq = audit.sum_matrix_diff_sq + diff * diff;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::games::load_game_str;

    #[test]
    fn rejects_bad_configuration() {
        let game = load_game_str::<f64>("micro").unwrap();
        let mut setup = DynamicsSetup::new(AlgorithmKind::CfrRm, DeviationMode::Efce, 0, 1.0);
        assert!(matches!(
            run_dynamics(&game, &setup),
            Err(DynamicsError::Config(_))
        ));
        setup.horizon = 1;
        setup.eta = 0.0;
        assert!(run_dynamics(&game, &setup).is_err());
        setup.eta = 1.0;
        setup.checkpoints = CheckpointSpec::Explicit(vec![2, 1]);
        assert!(run_dynamics(&game, &setup).is_err());
    }

    #[test]
    fn single_round_log_shape_and_residual() {
        let game = load_game_str::<f64>("micro").unwrap();
        for algorithm in [
            AlgorithmKind::LrlOftrl,
            AlgorithmKind::CfrRm,
            AlgorithmKind::CfrRmPlus,
        ] {
            let setup = DynamicsSetup::new(algorithm, DeviationMode::Efce, 1, 1.0);
            let log = run_dynamics(&game, &setup).unwrap();
            assert_eq!(log.checkpoints, vec![1]);
            assert_eq!(log.rows.len(), 2);
            assert!(log.max_fixed_point_residual <= 1e-9);
        }
    }

    #[test]
    fn powers_of_two_checkpoints_include_final() {
        let game = load_game_str::<f64>("micro").unwrap();
        let setup = DynamicsSetup::new(AlgorithmKind::CfrRm, DeviationMode::Efcce, 11, 1.0);
        let log = run_dynamics(&game, &setup).unwrap();
        assert_eq!(log.checkpoints, vec![1, 2, 4, 8, 11]);
    }

    #[test]
    fn eta_delta_defaults_to_half_over_sequences() {
        let game = load_game_str::<f64>("kuhn:players=2,ranks=3").unwrap();
        let setup = DynamicsSetup::new(AlgorithmKind::LrlOftrl, DeviationMode::Efce, 1, 1.0);
        let log = run_dynamics(&game, &setup).unwrap();
        for ed in &log.eta_delta {
            assert!((ed - 1.0 / 26.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gap_floors_at_zero_and_divides() {
        assert_eq!(gap_from_final_regrets::<f64>(&[-1.0, -2.5], 100), 0.0);
        assert!((gap_from_final_regrets::<f64>(&[5.0], 100) - 0.05).abs() < 1e-15);
        assert!((gap_from_final_regrets::<f64>(&[-1.0, 5.0, 2.0], 100) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn deterministic_logs() {
        let game = load_game_str::<f64>("micro").unwrap();
        let setup = DynamicsSetup::new(AlgorithmKind::LrlOftrl, DeviationMode::Efce, 20, 1.0);
        let a = run_dynamics(&game, &setup).unwrap();
        let b = run_dynamics(&game, &setup).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.trigger_regret, rb.trigger_regret);
            assert_eq!(ra.external_regret, rb.external_regret);
        }
    }
}
