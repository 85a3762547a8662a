//! Exhaustive search over pure profiles and best-response dynamics.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::game::{Game, GameError, StateProfile};

pub const DEFAULT_CAP: u128 = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("profile space {} exceeds cap {cap}", .profiles.map_or("overflow".to_string(), |p| p.to_string()))]
    CapExceeded { profiles: Option<u128>, cap: u128 },
    #[error("game has no pure Nash equilibrium")]
    NoEquilibrium,
    #[error("optimal social cost is zero")]
    ZeroOptimalCost,
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Profile number `index` in lexicographic order (player 0 most significant).
pub fn profile_at(game: &Game, mut index: u128) -> StateProfile {
    let n = game.num_players();
    let mut choice = vec![0usize; n];
    for p in (0..n).rev() {
        let k = game.strategies(p).len() as u128;
        choice[p] = (index % k) as usize;
        index /= k;
    }
    StateProfile(choice)
}

fn checked_count(game: &Game, cap: u128) -> Result<u64, EquilibriumError> {
    match game.profile_count() {
        Some(c) if c <= cap && c <= u64::MAX as u128 => Ok(c as u64),
        other => Err(EquilibriumError::CapExceeded { profiles: other, cap }),
    }
}

#[derive(Debug, Clone, Copy)]
struct Row {
    nash: bool,
    log_sc: f64,
}

fn scan(game: &Game, cap: u128) -> Result<Vec<Row>, EquilibriumError> {
    let count = checked_count(game, cap)?;
    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let s = profile_at(game, i as u128);
            let cm = game.congestion_unchecked(&s);
            Row { nash: game.nash_verdict(&s, &cm).is_nash(), log_sc: game.log_social_cost_of(&cm) }
        })
        .collect())
}

/// All pure Nash equilibria, in lexicographic profile order.
pub fn enumerate_nash(game: &Game, cap: u128) -> Result<Vec<StateProfile>, EquilibriumError> {
    let rows = scan(game, cap)?;
    Ok(rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.nash)
        .map(|(i, _)| profile_at(game, i as u128))
        .collect())
}

/// Minimum-social-cost profile; the earliest one wins ties.
pub fn optimal_state(game: &Game, cap: u128) -> Result<(StateProfile, f64), EquilibriumError> {
    let rows = scan(game, cap)?;
    let (idx, _) = argmin(rows.iter().map(|r| r.log_sc));
    let s = profile_at(game, idx as u128);
    let sc = game.social_cost(&s)?;
    Ok((s, sc))
}

fn argmin(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    let mut first = true;
    for (i, v) in values.enumerate() {
        if first || v < best.1 {
            best = (i, v);
            first = false;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub nash_states: Vec<StateProfile>,
    pub optimal_state: StateProfile,
    pub optimal_cost: f64,
    pub worst_nash_state: StateProfile,
    pub worst_nash_cost: f64,
    pub poa: f64,
    /// `ln poa`, finite even when both costs overflow f64.
    pub log_poa: f64,
    pub profiles: u64,
}

/// Exact price of anarchy by exhaustive enumeration.
pub fn price_of_anarchy(game: &Game, cap: u128) -> Result<EquilibriumReport, EquilibriumError> {
    let rows = scan(game, cap)?;
    let (opt_idx, opt_log) = argmin(rows.iter().map(|r| r.log_sc));
    let mut worst: Option<(usize, f64)> = None;
    let mut nash_states = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if r.nash {
            nash_states.push(profile_at(game, i as u128));
            if worst.is_none_or(|(_, w)| r.log_sc > w) {
                worst = Some((i, r.log_sc));
            }
        }
    }
    let (worst_idx, worst_log) = worst.ok_or(EquilibriumError::NoEquilibrium)?;
    if opt_log == f64::NEG_INFINITY {
        return Err(EquilibriumError::ZeroOptimalCost);
    }
    let optimal_state = profile_at(game, opt_idx as u128);
    let worst_nash_state = profile_at(game, worst_idx as u128);
    let optimal_cost = game.social_cost(&optimal_state)?;
    let worst_nash_cost = game.social_cost(&worst_nash_state)?;
    // direct quotient when representable, so equal costs give exactly 1
    let (poa, log_poa) = if optimal_cost.is_finite() && worst_nash_cost.is_finite() && optimal_cost > 0.0 {
        let q = (worst_nash_cost / optimal_cost).max(1.0);
        (q, q.ln())
    } else {
        let lp = (worst_log - opt_log).max(0.0);
        (lp.exp(), lp)
    };
    Ok(EquilibriumReport {
        nash_states,
        optimal_cost,
        optimal_state,
        worst_nash_cost,
        worst_nash_state,
        poa,
        log_poa,
        profiles: rows.len() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DynamicsOutcome {
    Converged { state: StateProfile, steps: usize },
    NonConvergence { last: StateProfile, steps: usize },
}

impl DynamicsOutcome {
    pub fn state(&self) -> &StateProfile {
        match self {
            DynamicsOutcome::Converged { state, .. } => state,
            DynamicsOutcome::NonConvergence { last, .. } => last,
        }
    }
}

/// One greedy move: the lowest-indexed improvable player switches to its
/// cheapest strategy. `None` at a Nash state.
pub fn best_response_step(game: &Game, state: &StateProfile) -> Result<Option<(usize, usize)>, GameError> {
    game.validate_state(state)?;
    let cm = game.congestion_unchecked(state);
    for p in 0..game.num_players() {
        if let Some((alt, cur, dev)) = game.best_improvement(state, &cm, p) {
            debug_assert!(!(dev > cur), "greedy move must not raise the mover's cost");
            return Ok(Some((p, alt)));
        }
    }
    Ok(None)
}

pub fn best_response_dynamics(
    game: &Game,
    start: &StateProfile,
    max_steps: usize,
) -> Result<DynamicsOutcome, GameError> {
    let mut state = start.clone();
    for steps in 0..=max_steps {
        match best_response_step(game, &state)? {
            None => return Ok(DynamicsOutcome::Converged { state, steps }),
            Some(_) if steps == max_steps => break,
            Some((p, alt)) => state.0[p] = alt,
        }
    }
    Ok(DynamicsOutcome::NonConvergence { last: state, steps: max_steps })
}
