//! Cyclic two-strategy lower-bound games.
//!
//! Resources form two rings `A` (size ζ₁) and `B` (size ζ₂) sharing one
//! latency function. Player `p` (0-based) of `N = κ₁ζ₁ = κ₂ζ₂` players of
//! weight `w` has two strategies:
//!
//! * `s_p`: α consecutive `A` resources from `p` and β consecutive `B`
//!   resources from `p`;
//! * `s̄_p`: the next γ `A` resources and the next δ `B` resources.
//!
//! Indices wrap modulo the ring size. In `S` everyone plays `s`, in `S̄`
//! everyone plays `s̄`; when `S` is an equilibrium, `SC(S)/SC(S̄)` is a lower
//! bound on the price of anarchy.

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::game::{Game, GameError, NashVerdict, Player, StateProfile, EQ_TOL};
use crate::latency::{LatencyFunction, LatencySpec};
use crate::numeric::log_sum_exp;
use crate::rational::{render_rational, to_big, to_f64, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LbError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("strategies overlap: need alpha+gamma <= zeta1 and beta+delta <= zeta2")]
    DisjointnessViolated,
    #[error("state S is not an equilibrium of the instance")]
    NotEquilibrium,
    #[error("no feasible parameters with N <= {0}")]
    NoFeasibleParams(u32),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LBParams {
    pub alpha: u32,
    pub beta: u32,
    pub gamma: u32,
    pub delta: u32,
    pub zeta1: u32,
    pub zeta2: u32,
    pub kappa1: u32,
    pub kappa2: u32,
    pub w: Rational,
    pub latency: LatencyFunction,
}

impl LBParams {
    pub fn n(&self) -> u32 {
        self.kappa1 * self.zeta1
    }

    pub fn validate(&self) -> Result<(), LbError> {
        let bad = |m: &str| Err(LbError::InvalidParams(m.to_string()));
        if self.zeta1 == 0 || self.zeta2 == 0 || self.kappa1 == 0 || self.kappa2 == 0 {
            return bad("zeta and kappa values must be positive");
        }
        if self.kappa1 as u64 * self.zeta1 as u64 != self.kappa2 as u64 * self.zeta2 as u64 {
            return bad("kappa1*zeta1 must equal kappa2*zeta2");
        }
        if self.alpha + self.beta == 0 || self.gamma + self.delta == 0 {
            return bad("both strategies must be non-empty");
        }
        if self.w <= Rational::zero() {
            return bad("w must be positive");
        }
        if self.alpha + self.gamma > self.zeta1 || self.beta + self.delta > self.zeta2 {
            return Err(LbError::DisjointnessViolated);
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "delta": self.delta,
            "zeta1": self.zeta1, "zeta2": self.zeta2, "kappa1": self.kappa1, "kappa2": self.kappa2,
            "w": render_rational(&self.w),
            "latency": LatencySpec::from(self.latency.clone()),
        })
    }

    /// Compact `key=value` form used in sweep tables.
    pub fn summary(&self) -> String {
        format!(
            "a={} b={} g={} d={} z1={} z2={} k1={} k2={} w={}",
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.zeta1,
            self.zeta2,
            self.kappa1,
            self.kappa2,
            render_rational(&self.w)
        )
    }
}

#[derive(Debug, Clone)]
pub struct LBInstance {
    pub params: LBParams,
    pub game: Game,
    pub state_s: StateProfile,
    pub state_sbar: StateProfile,
    pub j1: Rational,
    pub j2: Rational,
    pub t1: Rational,
    pub t2: Rational,
    pub lambda1: f64,
    pub lambda2: f64,
}

fn window(start: u32, len: u32, ring: u32, offset: usize) -> impl Iterator<Item = usize> {
    (0..len).map(move |m| offset + ((start + m) % ring) as usize)
}

pub fn build(params: LBParams) -> Result<LBInstance, LbError> {
    params.validate()?;
    let p = &params;
    let n = p.n();
    let (z1, z2) = (p.zeta1, p.zeta2);
    let resources: Vec<String> =
        (0..z1).map(|r| format!("a{r}")).chain((0..z2).map(|r| format!("b{r}"))).collect();
    let b_off = z1 as usize;
    let mut strategies = Vec::with_capacity(n as usize);
    for i in 0..n {
        let s: Vec<usize> = window(i % z1, p.alpha, z1, 0).chain(window(i % z2, p.beta, z2, b_off)).collect();
        let sbar: Vec<usize> = window((i + p.alpha) % z1, p.gamma, z1, 0)
            .chain(window((i + p.beta) % z2, p.delta, z2, b_off))
            .collect();
        if s.iter().any(|r| sbar.contains(r)) {
            return Err(LbError::DisjointnessViolated);
        }
        strategies.push(vec![s, sbar]);
    }
    let players = (0..n).map(|i| Player { id: format!("p{}", i + 1), weight: p.w }).collect();
    let game = Game::new(players, resources, strategies, vec![p.latency.clone(); (z1 + z2) as usize])?;

    let w = p.w;
    let j1 = w * Rational::from_integer((p.kappa1 * p.alpha) as i64);
    let t1 = w * Rational::from_integer((p.kappa1 * p.gamma) as i64);
    let j2 = w * Rational::from_integer((p.kappa2 * p.beta) as i64);
    let t2 = w * Rational::from_integer((p.kappa2 * p.delta) as i64);

    let state_s = StateProfile(vec![0; n as usize]);
    let state_sbar = StateProfile(vec![1; n as usize]);
    let cs = game.congestion(&state_s)?;
    let cb = game.congestion(&state_sbar)?;
    for r in 0..z1 as usize {
        assert_eq!((cs.get(r), cb.get(r)), (j1, t1), "ring A congestion");
    }
    for r in b_off..b_off + z2 as usize {
        assert_eq!((cs.get(r), cb.get(r)), (j2, t2), "ring B congestion");
    }

    let l = &p.latency;
    let part = |zeta: u32, c: Rational| ln_mass(l, zeta, c);
    let (m1, m2) = (part(z1, t1), part(z2, t2));
    let den = log_sum_exp([m1, m2]);
    let lambda1 = (m1 - den).exp();
    let lambda2 = (m2 - den).exp();
    Ok(LBInstance { params, game, state_s, state_sbar, j1, j2, t1, t2, lambda1, lambda2 })
}

/// `ln(ζ·c·l(c))`, `-inf` when `c = 0`.
fn ln_mass(l: &LatencyFunction, zeta: u32, c: Rational) -> f64 {
    if c.is_zero() {
        return f64::NEG_INFINITY;
    }
    let x = to_f64(&c);
    (zeta as f64).ln() + x.ln() + l.ln_unchecked(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NashCheck {
    /// Exhaustive unilateral-deviation test on the built game.
    pub game_nash: bool,
    /// The closed-form two-ring cost comparison.
    pub analytic_nash: bool,
    /// `min_p (deviation cost − current cost)`.
    pub worst_slack: f64,
    pub improving_player: Option<usize>,
}

impl NashCheck {
    pub fn holds(&self) -> bool {
        self.game_nash && self.analytic_nash
    }

    pub fn agree(&self) -> bool {
        self.game_nash == self.analytic_nash
    }
}

/// Ring costs for one player: current `α·l(j₁) + β·l(j₂)` against
/// deviating `γ·l(j₁+w) + δ·l(j₂+w)`, compared with the game's tie rules.
fn analytic_stable(p: &LBParams, j1: Rational, j2: Rational) -> bool {
    ring_stable(&p.latency, p.w, (p.alpha, p.beta, p.gamma, p.delta), j1, j2)
}

fn ring_stable(l: &LatencyFunction, w: Rational, lens: (u32, u32, u32, u32), j1: Rational, j2: Rational) -> bool {
    let (alpha, beta, gamma, delta) = lens;
    let term = |coef: u32, c: Rational| -> f64 {
        if coef == 0 {
            0.0
        } else {
            coef as f64 * l.eval_unchecked(to_f64(&c))
        }
    };
    let cur = term(alpha, j1) + term(beta, j2);
    let dev = term(gamma, j1 + w) + term(delta, j2 + w);
    if cur.is_finite() && dev.is_finite() {
        let eps = EQ_TOL * cur.abs().max(1.0);
        if dev < cur - eps {
            return false;
        }
        if dev > cur + eps || !l.supports_exact() {
            return true;
        }
        let ex = |coef: u32, c: Rational| -> BigRational {
            if coef == 0 {
                BigRational::zero()
            } else {
                l.eval_exact(&to_big(&c)).expect("exact latency") * BigRational::from_integer(coef.into())
            }
        };
        let cur = ex(alpha, j1) + ex(beta, j2);
        let dev = ex(gamma, j1 + w) + ex(delta, j2 + w);
        return dev >= cur;
    }
    let lterm = |coef: u32, c: Rational| -> f64 {
        if coef == 0 {
            f64::NEG_INFINITY
        } else {
            (coef as f64).ln() + l.ln_unchecked(to_f64(&c))
        }
    };
    let lc = log_sum_exp([lterm(alpha, j1), lterm(beta, j2)]);
    let ld = log_sum_exp([lterm(gamma, j1 + w), lterm(delta, j2 + w)]);
    ld >= lc - EQ_TOL
}

pub fn verify_nash(inst: &LBInstance) -> NashCheck {
    let g = &inst.game;
    let s = &inst.state_s;
    let verdict = g.is_nash(s).expect("state S is valid");
    let mut worst_slack = f64::INFINITY;
    for p in 0..g.num_players() {
        let cur = g.player_cost(s, p).expect("valid");
        let dev = g.deviation_cost(s, p, 1).expect("valid");
        worst_slack = worst_slack.min(dev - cur);
    }
    let (game_nash, improving_player) = match verdict {
        NashVerdict::Stable => (true, None),
        NashVerdict::Improvable { player, .. } => (false, Some(player)),
    };
    NashCheck {
        game_nash,
        analytic_nash: analytic_stable(&inst.params, inst.j1, inst.j2),
        worst_slack,
        improving_player,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    pub ratio: f64,
    pub log_ratio: f64,
    /// `λ₁·j₁l(j₁)/(t₁l(t₁)) + λ₂·j₂l(j₂)/(t₂l(t₂))`, plus the share of any
    /// ring left empty in `S̄`.
    pub decomposed: f64,
}

pub fn ratio_lower_bound(inst: &LBInstance) -> Result<LowerBound, LbError> {
    if !verify_nash(inst).holds() {
        return Err(LbError::NotEquilibrium);
    }
    Ok(lower_bound_unchecked(inst))
}

pub(crate) fn lower_bound_unchecked(inst: &LBInstance) -> LowerBound {
    let g = &inst.game;
    let log_ratio = g.log_social_cost(&inst.state_s).expect("valid") - g.log_social_cost(&inst.state_sbar).expect("valid");
    let p = &inst.params;
    let l = &p.latency;
    let den = log_sum_exp([ln_mass(l, p.zeta1, inst.t1), ln_mass(l, p.zeta2, inst.t2)]);
    let mut decomposed = 0.0;
    for (lambda, zeta, j, t) in [(inst.lambda1, p.zeta1, inst.j1, inst.t1), (inst.lambda2, p.zeta2, inst.j2, inst.t2)] {
        let mj = ln_mass(l, zeta, j);
        if t.is_zero() {
            decomposed += (mj - den).exp();
        } else if !j.is_zero() {
            decomposed += lambda * (mj - ln_mass(l, zeta, t)).exp();
        }
    }
    LowerBound { ratio: log_ratio.exp(), log_ratio, decomposed }
}

/// Both sides of the ring balance that holds when the two strategy costs
/// tie exactly: `λ₁·[j₁l(j₁)/(t₁l(t₁)) − l(j₁+w)/l(t₁)]` and
/// `λ₂·[l(j₂+w)/l(t₂) − j₂l(j₂)/(t₂l(t₂))]`. `None` if a ring is empty in `S̄`.
pub fn balance_sides(inst: &LBInstance) -> Option<(f64, f64)> {
    if inst.t1.is_zero() || inst.t2.is_zero() {
        return None;
    }
    let l = &inst.params.latency;
    let w = to_f64(&inst.params.w);
    let side = |j: Rational, t: Rational| {
        let (j, t) = (to_f64(&j), to_f64(&t));
        let lt = l.ln_unchecked(t);
        let own = if j == 0.0 { 0.0 } else { (j.ln() + l.ln_unchecked(j) - t.ln() - lt).exp() };
        own - (l.ln_unchecked(j + w) - lt).exp()
    };
    Some((inst.lambda1 * side(inst.j1, inst.t1), -inst.lambda2 * side(inst.j2, inst.t2)))
}

/// Whether player costs in `S` and after deviating tie exactly (rational
/// latencies only).
pub fn costs_tie_exactly(inst: &LBInstance) -> bool {
    let p = &inst.params;
    let l = &p.latency;
    if !l.supports_exact() {
        return false;
    }
    let ex = |coef: u32, c: Rational| l.eval_exact(&to_big(&c)).expect("exact") * BigRational::from_integer(coef.into());
    let cur = ex(p.alpha, inst.j1) + ex(p.beta, inst.j2);
    let dev = ex(p.gamma, inst.j1 + p.w) + ex(p.delta, inst.j2 + p.w);
    cur == dev
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub params: LBParams,
    pub ratio: f64,
    pub log_ratio: f64,
}

type Key = (u32, u32, u32, u32, u32, u32, u32);

#[derive(Debug, Clone, Copy)]
struct Cand {
    log_ratio: f64,
    key: Key,
}

/// Ratios within `1e-12` (in log) count as equal so that float noise
/// between equivalent tuples cannot override the key order.
fn cand_better(a: &Cand, b: &Cand) -> bool {
    if (a.log_ratio - b.log_ratio).abs() <= 1e-12 * a.log_ratio.abs().max(1.0) {
        a.key < b.key
    } else {
        a.log_ratio > b.log_ratio
    }
}

const KEEP: usize = 16;

fn keep_top(list: &mut Vec<Cand>, c: Cand) {
    if list.len() == KEEP && !cand_better(&c, list.last().expect("non-empty")) {
        return;
    }
    let pos = list.iter().position(|o| cand_better(&c, o)).unwrap_or(list.len());
    list.insert(pos, c);
    list.truncate(KEEP);
}

fn params_of(key: Key, f: &LatencyFunction, w: Rational) -> LBParams {
    let (n, zeta1, zeta2, alpha, beta, gamma, delta) = key;
    LBParams {
        alpha,
        beta,
        gamma,
        delta,
        zeta1,
        zeta2,
        kappa1: n / zeta1,
        kappa2: n / zeta2,
        w,
        latency: f.clone(),
    }
}

/// Best equilibrium ratio over every parameter tuple with `N <= n_max`.
///
/// Tuples are screened with the closed-form ring costs; the leading
/// candidates are rebuilt and confirmed with the full game-level check.
/// Equal ratios keep the lexicographically smallest
/// `(N, ζ₁, ζ₂, α, β, γ, δ)`.
pub fn search_params(f: &LatencyFunction, w: Rational, n_max: u32) -> Result<SearchResult, LbError> {
    if n_max == 0 || w <= Rational::zero() {
        return Err(LbError::InvalidParams("need n_max >= 1 and w > 0".into()));
    }
    let mut groups = Vec::new();
    for n in 1..=n_max {
        for z1 in (1..=n).filter(|z| n % z == 0) {
            for z2 in (1..=n).filter(|z| n % z == 0) {
                groups.push((n, z1, z2));
            }
        }
    }
    let wf = to_f64(&w);
    // ln l(c·w) for c = 0..=n_max+1
    let ln_l: Vec<f64> = (0..=n_max + 1).map(|c| f.ln_unchecked(c as f64 * wf)).collect();

    let tops: Vec<Vec<Cand>> = groups
        .par_iter()
        .map(|&(n, z1, z2)| {
            let (k1, k2) = (n / z1, n / z2);
            let mut top = Vec::new();
            let ring = |z: u32, k: u32| -> Vec<(u32, u32, f64, f64)> {
                // (len_s, len_sbar, ln ζ·j·l(j), ln ζ·t·l(t))
                let mut v = Vec::new();
                for a in 0..=z {
                    for c in 0..=(z - a) {
                        let m = |cnt: u32| {
                            if cnt == 0 {
                                f64::NEG_INFINITY
                            } else {
                                (z as f64).ln() + (cnt as f64 * wf).ln() + ln_l[cnt as usize]
                            }
                        };
                        v.push((a, c, m(k * a), m(k * c)));
                    }
                }
                v
            };
            let ra = ring(z1, k1);
            let rb = ring(z2, k2);
            for &(alpha, gamma, sa, ta) in &ra {
                for &(beta, delta, sb, tb) in &rb {
                    if alpha + beta == 0 || gamma + delta == 0 {
                        continue;
                    }
                    let log_ratio = log_sum_exp([sa, sb]) - log_sum_exp([ta, tb]);
                    let c = Cand { log_ratio, key: (n, z1, z2, alpha, beta, gamma, delta) };
                    if top.len() == KEEP && !cand_better(&c, top.last().expect("non-empty")) {
                        continue;
                    }
                    let j1 = w * Rational::from_integer((k1 * alpha) as i64);
                    let j2 = w * Rational::from_integer((k2 * beta) as i64);
                    if ring_stable(f, w, (alpha, beta, gamma, delta), j1, j2) {
                        keep_top(&mut top, c);
                    }
                }
            }
            top
        })
        .collect();

    let mut merged = Vec::new();
    for c in tops.into_iter().flatten() {
        keep_top(&mut merged, c);
    }
    for c in merged {
        let params = params_of(c.key, f, w);
        let inst = build(params.clone())?;
        if verify_nash(&inst).holds() {
            let lb = lower_bound_unchecked(&inst);
            return Ok(SearchResult { params, ratio: lb.ratio, log_ratio: lb.log_ratio });
        }
    }
    Err(LbError::NoFeasibleParams(n_max))
}

/// Sidecar describing a built instance next to its game file.
pub fn sidecar_json(inst: &LBInstance) -> Value {
    let lb = lower_bound_unchecked(inst);
    let check = verify_nash(inst);
    json!({
        "params": inst.params.to_json(),
        "state_s": inst.state_s,
        "state_sbar": inst.state_sbar,
        "j1": render_rational(&inst.j1),
        "j2": render_rational(&inst.j2),
        "t1": render_rational(&inst.t1),
        "t2": render_rational(&inst.t2),
        "lambda1": inst.lambda1,
        "lambda2": inst.lambda2,
        "nash": check.holds(),
        "worst_slack": finite_or_str(check.worst_slack),
        "ratio": finite_or_str(lb.ratio),
        "log_ratio": lb.log_ratio,
    })
}

fn finite_or_str(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else {
        json!(if x > 0.0 { "inf" } else { "-inf" })
    }
}
