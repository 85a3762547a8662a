//! Weighted unsplittable congestion games: congestion, player and social
//! cost, unilateral deviations and the pure Nash predicate.

use std::collections::HashSet;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latency::LatencyFunction;
use crate::numeric::log_sum_exp;
use crate::rational::{to_big, to_f64, Rational};

/// Relative tolerance under which two real-valued costs count as tied.
pub const EQ_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("game needs at least one player")]
    NoPlayers,
    #[error("game needs at least one resource")]
    NoResources,
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("player `{0}` has a non-positive weight")]
    NonPositiveWeight(String),
    #[error("player `{0}` has no strategies")]
    EmptyStrategySet(String),
    #[error("strategy of player `{player}` references unknown resource `{resource}`")]
    UnknownResource { player: String, resource: String },
    #[error("expected {expected} latency functions (one per resource), got {got}")]
    LatencyCount { expected: usize, got: usize },
    #[error("strategy sets given for {got} players, expected {expected}")]
    StrategyCount { expected: usize, got: usize },
    #[error("state has {got} entries for {expected} players")]
    StateLength { expected: usize, got: usize },
    #[error("player {player} has no strategy index {index}")]
    StrategyIndex { player: usize, index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Player {
    pub id: String,
    pub weight: Rational,
}

/// A pure strategy: a sorted set of resource indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Strategy(Vec<usize>);

impl Strategy {
    pub fn new(mut resources: Vec<usize>) -> Self {
        resources.sort_unstable();
        resources.dedup();
        Strategy(resources)
    }

    pub fn resources(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, r: usize) -> bool {
        self.0.binary_search(&r).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One chosen strategy index per player.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateProfile(pub Vec<usize>);

impl StateProfile {
    pub fn choices(&self) -> &[usize] {
        &self.0
    }
}

/// Exact congestion per resource.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongestionMap(Vec<Rational>);

impl CongestionMap {
    pub fn get(&self, r: usize) -> Rational {
        self.0[r]
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn total(&self) -> Rational {
        self.0.iter().copied().sum()
    }
}

/// Outcome of the Nash test. On failure, the first improving
/// (player, strategy) pair in lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NashVerdict {
    Stable,
    Improvable { player: usize, strategy: usize, current_cost: f64, deviation_cost: f64 },
}

impl NashVerdict {
    pub fn is_nash(&self) -> bool {
        matches!(self, NashVerdict::Stable)
    }
}

#[derive(Debug, Clone)]
pub struct Game {
    players: Vec<Player>,
    resources: Vec<String>,
    strategies: Vec<Vec<Strategy>>,
    latency: Vec<LatencyFunction>,
    w_max: Rational,
}

impl Game {
    /// Builds a game. `strategies[p]` lists player `p`'s strategies as
    /// resource indices; `latency[r]` is resource `r`'s latency.
    pub fn new(
        players: Vec<Player>,
        resources: Vec<String>,
        strategies: Vec<Vec<Vec<usize>>>,
        latency: Vec<LatencyFunction>,
    ) -> Result<Self, GameError> {
        if players.is_empty() {
            return Err(GameError::NoPlayers);
        }
        if resources.is_empty() {
            return Err(GameError::NoResources);
        }
        let mut seen = HashSet::new();
        for id in players.iter().map(|p| &p.id).chain(resources.iter()) {
            if !seen.insert(id.clone()) {
                return Err(GameError::DuplicateId(id.clone()));
            }
        }
        if latency.len() != resources.len() {
            return Err(GameError::LatencyCount { expected: resources.len(), got: latency.len() });
        }
        if strategies.len() != players.len() {
            return Err(GameError::StrategyCount { expected: players.len(), got: strategies.len() });
        }
        let zero = Rational::zero();
        for p in &players {
            if p.weight <= zero {
                return Err(GameError::NonPositiveWeight(p.id.clone()));
            }
        }
        let mut sets = Vec::with_capacity(players.len());
        for (p, set) in players.iter().zip(strategies) {
            if set.is_empty() {
                return Err(GameError::EmptyStrategySet(p.id.clone()));
            }
            let mut built = Vec::with_capacity(set.len());
            for s in set {
                if let Some(&bad) = s.iter().find(|&&r| r >= resources.len()) {
                    return Err(GameError::UnknownResource {
                        player: p.id.clone(),
                        resource: format!("#{bad}"),
                    });
                }
                built.push(Strategy::new(s));
            }
            sets.push(built);
        }
        let w_max = players.iter().map(|p| p.weight).max().expect("non-empty");
        Ok(Game { players, resources, strategies: sets, latency, w_max })
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn resources(&self) -> &[String] {
        &self.resources
    }

    pub fn num_resources(&self) -> usize {
        self.resources.len()
    }

    pub fn strategies(&self, player: usize) -> &[Strategy] {
        &self.strategies[player]
    }

    pub fn latency(&self, resource: usize) -> &LatencyFunction {
        &self.latency[resource]
    }

    pub fn latencies(&self) -> &[LatencyFunction] {
        &self.latency
    }

    pub fn weight(&self, player: usize) -> Rational {
        self.players[player].weight
    }

    pub fn w_max(&self) -> Rational {
        self.w_max
    }

    /// Distinct latency functions in resource order of first appearance.
    pub fn distinct_latencies(&self) -> Vec<&LatencyFunction> {
        let mut out: Vec<&LatencyFunction> = Vec::new();
        for l in &self.latency {
            if !out.contains(&l) {
                out.push(l);
            }
        }
        out
    }

    /// Number of pure profiles, `None` on overflow.
    pub fn profile_count(&self) -> Option<u128> {
        self.strategies.iter().try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128))
    }

    pub fn validate_state(&self, state: &StateProfile) -> Result<(), GameError> {
        if state.0.len() != self.players.len() {
            return Err(GameError::StateLength { expected: self.players.len(), got: state.0.len() });
        }
        for (p, &c) in state.0.iter().enumerate() {
            if c >= self.strategies[p].len() {
                return Err(GameError::StrategyIndex { player: p, index: c });
            }
        }
        Ok(())
    }

    pub(crate) fn chosen(&self, state: &StateProfile, player: usize) -> &Strategy {
        &self.strategies[player][state.0[player]]
    }

    pub fn congestion(&self, state: &StateProfile) -> Result<CongestionMap, GameError> {
        self.validate_state(state)?;
        Ok(self.congestion_unchecked(state))
    }

    pub(crate) fn congestion_unchecked(&self, state: &StateProfile) -> CongestionMap {
        let mut c = vec![Rational::zero(); self.resources.len()];
        for p in 0..self.players.len() {
            let w = self.players[p].weight;
            for &r in self.chosen(state, p).resources() {
                c[r] += w;
            }
        }
        CongestionMap(c)
    }

    pub fn player_cost(&self, state: &StateProfile, player: usize) -> Result<f64, GameError> {
        self.validate_state(state)?;
        let cm = self.congestion_unchecked(state);
        Ok(self.strategy_cost(&cm, self.chosen(state, player), None))
    }

    /// Player cost after switching to `alt`, everyone else fixed.
    pub fn deviation_cost(&self, state: &StateProfile, player: usize, alt: usize) -> Result<f64, GameError> {
        self.validate_state(state)?;
        if alt >= self.strategies[player].len() {
            return Err(GameError::StrategyIndex { player, index: alt });
        }
        let cm = self.congestion_unchecked(state);
        let cur = self.chosen(state, player);
        Ok(self.strategy_cost(&cm, &self.strategies[player][alt], Some((cur, self.players[player].weight))))
    }

    /// `Σ_{r ∈ s} l_r(C_r)`; when `mover = Some((current, w))`, resources of
    /// `s` not in `current` carry the mover's extra weight `w`.
    pub(crate) fn strategy_cost(&self, cm: &CongestionMap, s: &Strategy, mover: Option<(&Strategy, Rational)>) -> f64 {
        s.resources()
            .iter()
            .map(|&r| self.latency[r].eval_unchecked(to_f64(&self.load_after(cm, r, mover))))
            .sum()
    }

    fn strategy_log_cost(&self, cm: &CongestionMap, s: &Strategy, mover: Option<(&Strategy, Rational)>) -> f64 {
        log_sum_exp(
            s.resources()
                .iter()
                .map(|&r| self.latency[r].ln_unchecked(to_f64(&self.load_after(cm, r, mover)))),
        )
    }

    fn strategy_exact_cost(
        &self,
        cm: &CongestionMap,
        s: &Strategy,
        mover: Option<(&Strategy, Rational)>,
    ) -> Option<BigRational> {
        let mut acc = BigRational::zero();
        for &r in s.resources() {
            acc += self.latency[r].eval_exact(&to_big(&self.load_after(cm, r, mover)))?;
        }
        Some(acc)
    }

    fn load_after(&self, cm: &CongestionMap, r: usize, mover: Option<(&Strategy, Rational)>) -> Rational {
        match mover {
            Some((cur, w)) if !cur.contains(r) => cm.0[r] + w,
            _ => cm.0[r],
        }
    }

    /// `SC(S) = Σ_r C_r · l_r(C_r)`, unused resources contributing 0.
    pub fn social_cost(&self, state: &StateProfile) -> Result<f64, GameError> {
        self.validate_state(state)?;
        Ok(self.social_cost_of(&self.congestion_unchecked(state)))
    }

    pub fn social_cost_of(&self, cm: &CongestionMap) -> f64 {
        cm.0.iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(r, c)| {
                let x = to_f64(c);
                x * self.latency[r].eval_unchecked(x)
            })
            .sum()
    }

    /// `ln SC(S)`, safe for fast-growing latencies.
    pub fn log_social_cost_of(&self, cm: &CongestionMap) -> f64 {
        log_sum_exp(cm.0.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(r, c)| {
            let x = to_f64(c);
            x.ln() + self.latency[r].ln_unchecked(x)
        }))
    }

    pub fn log_social_cost(&self, state: &StateProfile) -> Result<f64, GameError> {
        self.validate_state(state)?;
        Ok(self.log_social_cost_of(&self.congestion_unchecked(state)))
    }

    pub fn is_nash(&self, state: &StateProfile) -> Result<NashVerdict, GameError> {
        self.validate_state(state)?;
        Ok(self.nash_verdict(state, &self.congestion_unchecked(state)))
    }

    pub(crate) fn nash_verdict(&self, state: &StateProfile, cm: &CongestionMap) -> NashVerdict {
        for p in 0..self.players.len() {
            if let Some((strategy, cur, dev)) = self.first_improvement(state, cm, p) {
                return NashVerdict::Improvable { player: p, strategy, current_cost: cur, deviation_cost: dev };
            }
        }
        NashVerdict::Stable
    }

    fn first_improvement(&self, state: &StateProfile, cm: &CongestionMap, p: usize) -> Option<(usize, f64, f64)> {
        let cur_idx = state.0[p];
        for alt in 0..self.strategies[p].len() {
            if alt == cur_idx {
                continue;
            }
            let cmp = self.compare_deviation(state, cm, p, alt);
            if cmp.improves {
                return Some((alt, cmp.current, cmp.deviation));
            }
        }
        None
    }

    /// Compares player `p`'s cost under `alt` with its current cost.
    ///
    /// Real-valued costs tie within `EQ_TOL · max(1, cost)`; when every
    /// latency involved has exact rational values, ties inside that band are
    /// resolved exactly.
    pub(crate) fn compare_deviation(&self, state: &StateProfile, cm: &CongestionMap, p: usize, alt: usize) -> DeviationCmp {
        let cur_s = self.chosen(state, p);
        let alt_s = &self.strategies[p][alt];
        let mover = Some((cur_s, self.players[p].weight));
        let cur = self.strategy_cost(cm, cur_s, None);
        let dev = self.strategy_cost(cm, alt_s, mover);
        let improves = if cur.is_finite() && dev.is_finite() {
            let eps = EQ_TOL * cur.abs().max(1.0);
            if dev < cur - eps {
                true
            } else if dev > cur + eps {
                false
            } else {
                let exact_ok = cur_s
                    .resources()
                    .iter()
                    .chain(alt_s.resources())
                    .all(|&r| self.latency[r].supports_exact());
                if exact_ok {
                    match (self.strategy_exact_cost(cm, cur_s, None), self.strategy_exact_cost(cm, alt_s, mover)) {
                        (Some(c), Some(d)) => d < c,
                        _ => false,
                    }
                } else {
                    false
                }
            }
        } else {
            let lc = self.strategy_log_cost(cm, cur_s, None);
            let ld = self.strategy_log_cost(cm, alt_s, mover);
            ld < lc - EQ_TOL
        };
        DeviationCmp { current: cur, deviation: dev, improves }
    }

    /// Lowest-cost improving strategy for `p` (ties by index), if any.
    pub(crate) fn best_improvement(&self, state: &StateProfile, cm: &CongestionMap, p: usize) -> Option<(usize, f64, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for alt in 0..self.strategies[p].len() {
            if alt == state.0[p] {
                continue;
            }
            let cmp = self.compare_deviation(state, cm, p, alt);
            if cmp.improves && best.is_none_or(|(_, _, d)| cmp.deviation < d) {
                best = Some((alt, cmp.current, cmp.deviation));
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DeviationCmp {
    pub current: f64,
    pub deviation: f64,
    pub improves: bool,
}
