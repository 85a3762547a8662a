//! Seeded random corpora, the property-check suite, and lower-bound sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::bounds::{analyze, Bound, BoundsError, SearchDomain};
use crate::decomposition::{
    build_classes, check_equilibrium_constraint, coordination_ratio_decomposed, side_matches_triple, ReferenceKind,
};
use crate::equilibrium::{enumerate_nash, price_of_anarchy, profile_at, EquilibriumError};
use crate::game::{Game, Player, StateProfile};
use crate::io::{game_to_json, read_game, GameFileError};
use crate::latency::{Family, LatencyFunction, LatencySpec};
use crate::lb::{self, LBParams};
use crate::numeric::rel_close;
use crate::rational::{parse_rational, to_f64, Rational, RationalParseError};

/// Polynomially bounded latencies drawn by the random generator. All are
/// positive for every positive load.
pub fn l3_pool() -> Vec<LatencyFunction> {
    let poly = |c: &[f64]| LatencyFunction::poly(c).expect("valid polynomial");
    let plp = |d: usize| {
        let mut p = vec![(d + 1) as f64];
        p.extend(std::iter::repeat_n(0.0, d));
        p.extend([1.0, 1.0, 0.0, 1.0]);
        LatencyFunction::new(Family::PolyLogProduct, p).expect("valid poly-log product")
    };
    vec![
        poly(&[0.0, 1.0]),
        poly(&[1.0, 1.0]),
        poly(&[0.0, 2.0]),
        poly(&[0.0, 0.0, 1.0]),
        poly(&[1.0, 0.0, 1.0]),
        LatencyFunction::constant(1.0).expect("valid"),
        LatencyFunction::constant(3.0).expect("valid"),
        plp(1),
    ]
}

pub const WEIGHTS: [(i64, i64); 3] = [(1, 1), (1, 2), (2, 1)];

/// One random game: at most 4 players, 4 resources and 3 distinct strategies
/// per player; weights from {1, 1/2, 2} (all 1 in a quarter of draws).
pub fn random_game(rng: &mut ChaCha8Rng, pool: &[LatencyFunction]) -> Game {
    let n_players = rng.gen_range(1..=4usize);
    let n_res = rng.gen_range(1..=4usize);
    let uniform = rng.gen_bool(0.25);
    let players = (0..n_players)
        .map(|k| {
            let (n, d) = if uniform { (1, 1) } else { *WEIGHTS.choose(rng).expect("non-empty") };
            Player { id: format!("p{}", k + 1), weight: Rational::new(n, d) }
        })
        .collect();
    let masks = (1u32 << n_res) - 1;
    let strategies = (0..n_players)
        .map(|_| {
            let want = rng.gen_range(1..=3usize).min(masks as usize);
            let mut chosen: Vec<u32> = Vec::new();
            while chosen.len() < want {
                let m = rng.gen_range(1..=masks);
                if !chosen.contains(&m) {
                    chosen.push(m);
                }
            }
            chosen.into_iter().map(|m| (0..n_res).filter(|r| m >> r & 1 == 1).collect()).collect()
        })
        .collect();
    let latency = (0..n_res).map(|_| pool.choose(rng).expect("non-empty pool").clone()).collect();
    let resources = (0..n_res).map(|r| format!("r{}", r + 1)).collect();
    Game::new(players, resources, strategies, latency).expect("generator builds valid games")
}

/// Instance `k` of the corpus for `seed`; independent of every other index.
pub fn instance_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

pub fn random_corpus(seed: u64, count: usize) -> Vec<Game> {
    let pool = l3_pool();
    (0..count).map(|k| random_game(&mut instance_rng(seed, k as u64), &pool)).collect()
}

/// Random lower-bound parameters with at most 10 players.
pub fn random_lb_params(rng: &mut ChaCha8Rng, pool: &[LatencyFunction]) -> LBParams {
    loop {
        let n = rng.gen_range(2..=10u32);
        let divisors: Vec<u32> = (1..=n).filter(|d| n % d == 0).collect();
        let z1 = *divisors.choose(rng).expect("non-empty");
        let z2 = *divisors.choose(rng).expect("non-empty");
        let alpha = rng.gen_range(0..=z1);
        let gamma = rng.gen_range(0..=z1 - alpha);
        let beta = rng.gen_range(0..=z2);
        let delta = rng.gen_range(0..=z2 - beta);
        if alpha + beta == 0 || gamma + delta == 0 {
            continue;
        }
        let (wn, wd) = *WEIGHTS.choose(rng).expect("non-empty");
        return LBParams {
            alpha,
            beta,
            gamma,
            delta,
            zeta1: z1,
            zeta2: z2,
            kappa1: n / z1,
            kappa2: n / z2,
            w: Rational::new(wn, wd),
            latency: pool.choose(rng).expect("non-empty").clone(),
        };
    }
}

/// Every valid parameter set with at most `n_max` players for one latency
/// and weight, in lexicographic order.
pub fn all_lb_params(latency: &LatencyFunction, w: Rational, n_max: u32) -> Vec<LBParams> {
    let mut out = Vec::new();
    for n in 1..=n_max {
        for z1 in (1..=n).filter(|d| n % d == 0) {
            for z2 in (1..=n).filter(|d| n % d == 0) {
                for alpha in 0..=z1 {
                    for gamma in 0..=z1 - alpha {
                        for beta in 0..=z2 {
                            for delta in 0..=z2 - beta {
                                if alpha + beta == 0 || gamma + delta == 0 {
                                    continue;
                                }
                                out.push(LBParams {
                                    alpha,
                                    beta,
                                    gamma,
                                    delta,
                                    zeta1: z1,
                                    zeta2: z2,
                                    kappa1: n / z1,
                                    kappa2: n / z2,
                                    w,
                                    latency: latency.clone(),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Exact-arithmetic latencies and weights swept exhaustively by the suite,
/// so that instances with tied strategy costs are always covered.
pub fn exhaustive_lb_params() -> Vec<LBParams> {
    let exact: Vec<LatencyFunction> = crate::latency::catalog().into_iter().filter(|l| l.supports_exact()).collect();
    let mut out = Vec::new();
    for l in &exact {
        for (n, d) in WEIGHTS {
            out.extend(all_lb_params(l, Rational::new(n, d), EXHAUSTIVE_N));
        }
    }
    out
}

pub const EXHAUSTIVE_N: u32 = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub checks: usize,
    pub failures: usize,
}

impl Tally {
    fn record(&mut self, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
        }
    }

    fn add(&mut self, o: Tally) {
        self.checks += o.checks;
        self.failures += o.failures;
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteCounts {
    pub games: usize,
    pub without_equilibrium: usize,
    pub over_cap: usize,
    pub identity: Tally,
    pub constraint: Tally,
    pub zero_mass: Tally,
    pub sides: Tally,
    pub soundness: Tally,
    pub generator: Tally,
    pub generator_ties: usize,
    /// Largest `|H − SC(S)/SC(S_ref)|` relative gap seen.
    pub max_identity_gap: f64,
    /// Smallest `bound − poa` seen.
    pub min_soundness_margin: f64,
}

impl SuiteCounts {
    fn merge(&mut self, o: &SuiteCounts) {
        self.games += o.games;
        self.without_equilibrium += o.without_equilibrium;
        self.over_cap += o.over_cap;
        self.identity.add(o.identity);
        self.constraint.add(o.constraint);
        self.zero_mass.add(o.zero_mass);
        self.sides.add(o.sides);
        self.soundness.add(o.soundness);
        self.generator.add(o.generator);
        self.generator_ties += o.generator_ties;
        self.max_identity_gap = self.max_identity_gap.max(o.max_identity_gap);
        self.min_soundness_margin = self.min_soundness_margin.min(o.min_soundness_margin);
    }

    pub fn failures(&self) -> usize {
        [self.identity, self.constraint, self.zero_mass, self.sides, self.soundness, self.generator]
            .iter()
            .map(|t| t.failures)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub property: &'static str,
    pub source: String,
    pub detail: String,
    pub repro: Value,
}

/// Per-latency ĝ and price-of-anarchy bounds, keyed by `(label, w_max)`.
#[derive(Debug, Default, Clone)]
pub struct BoundTable {
    entries: BTreeMap<(String, Rational), (f64, Bound)>,
}

impl BoundTable {
    /// Computes every missing `(latency, w_max)` pair used by `games`.
    pub fn warm(&mut self, games: &[&Game]) -> Result<(), BoundsError> {
        self.warm_pairs(games.iter().flat_map(|g| g.distinct_latencies().into_iter().map(|l| (l.clone(), g.w_max()))))
    }

    pub fn warm_pairs(&mut self, pairs: impl IntoIterator<Item = (LatencyFunction, Rational)>) -> Result<(), BoundsError> {
        let mut todo: BTreeMap<(String, Rational), LatencyFunction> = BTreeMap::new();
        for (l, w) in pairs {
            let key = (l.label(), w);
            if !self.entries.contains_key(&key) {
                todo.entry(key).or_insert(l);
            }
        }
        let done = todo
            .into_par_iter()
            .map(|((label, w), l)| {
                let wf = to_f64(&w);
                let rep = analyze(&l, wf, &SearchDomain::for_weight(wf))?;
                Ok(((label, w), (rep.g_hat.value.value(), rep.poa_bound.value)))
            })
            .collect::<Result<Vec<_>, BoundsError>>()?;
        self.entries.extend(done);
        Ok(())
    }

    /// `(ĝ, bound)` for one latency at maximum weight `w`; panics if not warmed.
    pub fn get(&self, l: &LatencyFunction, w: Rational) -> (f64, Bound) {
        self.entries[&(l.label(), w)]
    }

    /// `(max_k ĝ_k, max_k bound_k)` over the game's latencies.
    pub fn for_game(&self, g: &Game) -> (f64, f64) {
        g.distinct_latencies().iter().fold((0.0f64, 0.0f64), |(gh, b), l| {
            let (h, bound) = self.get(l, g.w_max());
            (gh.max(h), b.max(bound.value()))
        })
    }
}

const SUITE_CAP: u128 = 1 << 16;

/// Runs every game-level property on one game. `rng` picks the extra
/// random `(S, S_ref)` pair used for the ratio identity.
pub fn check_game(game: &Game, source: &str, rng: &mut ChaCha8Rng, bounds: &BoundTable) -> (SuiteCounts, Vec<Failure>) {
    let mut c = SuiteCounts { games: 1, min_soundness_margin: f64::INFINITY, ..Default::default() };
    let mut fails = Vec::new();
    let Some(total) = game.profile_count().filter(|&n| n <= SUITE_CAP) else {
        c.over_cap = 1;
        return (c, fails);
    };
    let repro = |s: &StateProfile, r: &StateProfile| json!({"game": game_to_json(game), "state": s, "reference": r});

    let s = profile_at(game, rng.gen_range(0..total));
    let r = profile_at(game, rng.gen_range(0..total));
    let identity = |s: &StateProfile, r: &StateProfile, c: &mut SuiteCounts, fails: &mut Vec<Failure>| {
        let Ok(table) = build_classes(game, s, r, ReferenceKind::Arbitrary) else { return };
        let h = coordination_ratio_decomposed(&table, game);
        let direct = (game.log_social_cost(s).expect("valid") - game.log_social_cost(r).expect("valid")).exp();
        let gap = (h - direct).abs() / direct.abs().max(f64::MIN_POSITIVE);
        let ok = rel_close(h, direct, 1e-9) && (table.lambda_total() - 1.0).abs() <= 1e-12;
        c.max_identity_gap = c.max_identity_gap.max(if h == direct { 0.0 } else { gap });
        c.identity.record(ok);
        if !ok {
            fails.push(Failure {
                property: "decomposition identity",
                source: source.to_string(),
                detail: format!("H={h} direct={direct} lambda_total={}", table.lambda_total()),
                repro: repro(s, r),
            });
        }
    };
    identity(&s, &r, &mut c, &mut fails);

    let report = match price_of_anarchy(game, SUITE_CAP) {
        Ok(rep) => rep,
        Err(EquilibriumError::NoEquilibrium) => {
            c.without_equilibrium = 1;
            return (c, fails);
        }
        Err(_) => {
            c.over_cap = 1;
            return (c, fails);
        }
    };
    let opt = &report.optimal_state;
    let (g_hat, bound) = bounds.for_game(game);
    for ne in &report.nash_states {
        identity(ne, opt, &mut c, &mut fails);
        let table = build_classes(game, ne, opt, ReferenceKind::Optimal).expect("positive optimum");
        let chk = check_equilibrium_constraint(&table);
        c.constraint.record(chk.holds);
        if !chk.holds {
            fails.push(Failure {
                property: "equilibrium constraint",
                source: source.to_string(),
                detail: format!("lhs={} rhs={}", chk.lhs, chk.rhs),
                repro: repro(ne, opt),
            });
        }
        let mass = table.zero_mass();
        let ok = mass <= g_hat + 1e-6;
        c.zero_mass.record(ok);
        if !ok {
            fails.push(Failure {
                property: "zero-class mass",
                source: source.to_string(),
                detail: format!("mass={mass} g_hat={g_hat}"),
                repro: repro(ne, opt),
            });
        }
        for row in &table.rows {
            let l = game.latency(row.resources[0]);
            for e in &row.entries {
                let (j, t, i) = (to_f64(&row.key.j), to_f64(&row.key.t), to_f64(&e.i));
                let ok = side_matches_triple(l, e.side, j, t, i);
                c.sides.record(ok);
                if !ok {
                    fails.push(Failure {
                        property: "side classification",
                        source: source.to_string(),
                        detail: format!("j={j} t={t} i={i} f={} side={:?}", e.f, e.side),
                        repro: repro(ne, opt),
                    });
                }
            }
        }
    }
    let ok = report.poa <= bound + 1e-6;
    c.min_soundness_margin = bound - report.poa;
    c.soundness.record(ok);
    if !ok {
        fails.push(Failure {
            property: "bound soundness",
            source: source.to_string(),
            detail: format!("poa={} bound={bound}", report.poa),
            repro: repro(&report.worst_nash_state, opt),
        });
    }
    (c, fails)
}

/// Checks one generated lower-bound instance against exhaustive search and
/// against the price-of-anarchy bound of its latency.
pub fn check_generator(params: LBParams, source: &str, bounds: &BoundTable) -> (SuiteCounts, Vec<Failure>) {
    let mut c = SuiteCounts { min_soundness_margin: f64::INFINITY, ..Default::default() };
    let mut fails = Vec::new();
    let summary = params.summary();
    let latency = LatencySpec::from(params.latency.clone());
    let fail = |detail: String, fails: &mut Vec<Failure>| {
        fails.push(Failure {
            property: "generator",
            source: source.to_string(),
            detail: format!("{summary}: {detail}"),
            repro: json!({"params": summary, "latency": latency}),
        })
    };
    let inst = match lb::build(params) {
        Ok(i) => i,
        Err(e) => {
            c.generator.record(false);
            fail(e.to_string(), &mut fails);
            return (c, fails);
        }
    };
    let p = &inst.params;
    let n = Rational::from_integer(p.n() as i64);
    let ident = inst.j1 * Rational::from_integer(p.zeta1 as i64) == n * Rational::from_integer(p.alpha as i64) * p.w
        && inst.t1 * Rational::from_integer(p.zeta1 as i64) == n * Rational::from_integer(p.gamma as i64) * p.w
        && inst.j2 * Rational::from_integer(p.zeta2 as i64) == n * Rational::from_integer(p.beta as i64) * p.w
        && inst.t2 * Rational::from_integer(p.zeta2 as i64) == n * Rational::from_integer(p.delta as i64) * p.w;
    c.generator.record(ident);
    if !ident {
        fail("congestion identity".into(), &mut fails);
    }
    let check = lb::verify_nash(&inst);
    let exhaustive = match enumerate_nash(&inst.game, 1 << 10) {
        Ok(ne) => Some(ne.contains(&inst.state_s)),
        Err(_) => None,
    };
    let agree = check.agree() && exhaustive.is_none_or(|e| e == check.holds());
    c.generator.record(agree);
    if !agree {
        fail(format!("nash disagreement {check:?} exhaustive={exhaustive:?}"), &mut fails);
    }
    let lam_ok = (inst.lambda1 + inst.lambda2 - 1.0).abs() <= 1e-12 && inst.lambda1 >= 0.0 && inst.lambda2 >= 0.0;
    c.generator.record(lam_ok);
    if !lam_ok {
        fail(format!("lambda sum {} + {}", inst.lambda1, inst.lambda2), &mut fails);
    }
    let lbv = lb::lower_bound_unchecked(&inst);
    if check.holds() {
        let bound = bounds.get(&p.latency, p.w).1.value();
        let ok = lbv.ratio <= bound + 1e-6;
        c.generator.record(ok);
        if !ok {
            fail(format!("ratio {} above bound {bound}", lbv.ratio), &mut fails);
        }
        if let Ok(rep) = price_of_anarchy(&inst.game, 1 << 10) {
            let ok = lbv.log_ratio <= rep.log_poa + 1e-9;
            c.generator.record(ok);
            if !ok {
                fail(format!("ratio {} above exhaustive poa {}", lbv.ratio, rep.poa), &mut fails);
            }
        }
    }
    let dec_ok = rel_close(lbv.ratio, lbv.decomposed, 1e-9) || !lbv.ratio.is_finite();
    c.generator.record(dec_ok);
    if !dec_ok {
        fail(format!("ratio {} vs decomposed {}", lbv.ratio, lbv.decomposed), &mut fails);
    }
    if lb::costs_tie_exactly(&inst) {
        if let Some((a, b)) = lb::balance_sides(&inst) {
            c.generator_ties += 1;
            let ok = (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
            c.generator.record(ok);
            if !ok {
                fail(format!("balance {a} vs {b}"), &mut fails);
            }
        }
    }
    (c, fails)
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("corpus file {file}: {source}")]
    Corpus { file: String, source: GameFileError },
    #[error("cannot list corpus directory {dir}: {source}")]
    CorpusDir { dir: String, source: std::io::Error },
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("cannot write reproduction file {path}: {source}")]
    Repro { path: String, source: std::io::Error },
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    pub count: usize,
    pub corpus: Option<PathBuf>,
    pub repro_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub seed: u64,
    pub count: usize,
    pub corpus_files: usize,
    pub counts: SuiteCounts,
    pub failures: Vec<Failure>,
    pub repro_file: Option<PathBuf>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Deterministic plain-text summary.
    pub fn summary(&self) -> String {
        let c = &self.counts;
        let mut s = String::new();
        let line = |s: &mut String, name: &str, t: Tally| {
            let _ = writeln!(s, "{name:<24} {:>7} checks {:>5} failures", t.checks, t.failures);
        };
        let _ = writeln!(s, "seed {} random games {} corpus files {}", self.seed, self.count, self.corpus_files);
        let _ = writeln!(
            s,
            "games {} without pure equilibrium {} over cap {}",
            c.games, c.without_equilibrium, c.over_cap
        );
        line(&mut s, "decomposition identity", c.identity);
        line(&mut s, "equilibrium constraint", c.constraint);
        line(&mut s, "zero-class mass", c.zero_mass);
        line(&mut s, "side classification", c.sides);
        line(&mut s, "bound soundness", c.soundness);
        line(&mut s, "generator", c.generator);
        let _ = writeln!(s, "generator exact ties {}", c.generator_ties);
        let _ = writeln!(s, "max identity gap {:.3e}", c.max_identity_gap);
        let _ = writeln!(s, "min bound margin {:.6}", c.min_soundness_margin);
        for f in self.failures.iter().take(10) {
            let _ = writeln!(s, "FAIL {} [{}] {}", f.property, f.source, f.detail);
        }
        let _ = writeln!(s, "{}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

pub fn load_corpus(dir: &Path) -> Result<Vec<(String, Game)>, VerifyError> {
    let rd = std::fs::read_dir(dir).map_err(|source| VerifyError::CorpusDir { dir: dir.display().to_string(), source })?;
    let mut files: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            read_game(&p).map(|g| (name.clone(), g)).map_err(|source| VerifyError::Corpus { file: name, source })
        })
        .collect()
}

/// Runs the property suite over `count` seeded random games, as many seeded
/// lower-bound instances, every small exact lower-bound instance, and every
/// game in the corpus directory.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport, VerifyError> {
    let corpus = match &cfg.corpus {
        Some(dir) => load_corpus(dir)?,
        None => Vec::new(),
    };
    let random = random_corpus(cfg.seed, cfg.count);
    let mut bounds = BoundTable::default();
    let all: Vec<&Game> = random.iter().chain(corpus.iter().map(|(_, g)| g)).collect();
    bounds.warm(&all)?;

    let pool = crate::latency::catalog();
    let generated: Vec<LBParams> = (0..cfg.count as u64)
        .map(|k| random_lb_params(&mut instance_rng(cfg.seed ^ 0x1b, k), &pool))
        .chain(exhaustive_lb_params())
        .collect();
    bounds.warm_pairs(generated.iter().map(|p| (p.latency.clone(), p.w)))?;
    let mut results: Vec<(SuiteCounts, Vec<Failure>)> = random
        .par_iter()
        .enumerate()
        .map(|(k, g)| {
            let mut rng = instance_rng(cfg.seed ^ 0x5eed, k as u64);
            check_game(g, &format!("random #{k}"), &mut rng, &bounds)
        })
        .collect();
    results.par_extend(corpus.par_iter().enumerate().map(|(k, (name, g))| {
        let mut rng = instance_rng(cfg.seed ^ 0xc0de, k as u64);
        check_game(g, name, &mut rng, &bounds)
    }));
    results.par_extend(generated.into_par_iter().enumerate().map(|(k, params)| {
        let source = if k < cfg.count { format!("generator #{k}") } else { format!("generator family #{}", k - cfg.count) };
        check_generator(params, &source, &bounds)
    }));

    let mut counts = SuiteCounts { min_soundness_margin: f64::INFINITY, ..Default::default() };
    let mut failures = Vec::new();
    for (c, f) in results {
        counts.merge(&c);
        failures.extend(f);
    }
    let mut repro_file = None;
    if let (Some(first), Some(dir)) = (failures.first(), &cfg.repro_dir) {
        let path = dir.join(format!("repro-seed{}.json", cfg.seed));
        let body = json!({
            "property": first.property,
            "source": first.source,
            "detail": first.detail,
            "instance": first.repro,
        });
        std::fs::write(&path, serde_json::to_string_pretty(&body).expect("serializable"))
            .map_err(|source| VerifyError::Repro { path: path.display().to_string(), source })?;
        repro_file = Some(path);
    }
    Ok(VerifyReport {
        seed: cfg.seed,
        count: cfg.count,
        corpus_files: corpus.len(),
        counts,
        failures,
        repro_file,
    })
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("malformed sweep config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("sweep weight: {0}")]
    Weight(#[from] RationalParseError),
    #[error("invalid sweep config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Lb(#[from] lb::LbError),
}

/// Sweep description, read from JSON:
/// `{"latency": {...}, "w": "1", "n_values": [8, 16, 32], "budget": 32}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub latency: LatencyFunction,
    #[serde(default = "default_w")]
    pub w: String,
    pub n_values: Vec<u32>,
    /// Largest player count the search may use; defaults to `max(n_values)`.
    #[serde(default)]
    pub budget: Option<u32>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_w() -> String {
    "1".into()
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, SweepError> {
        let cfg: SweepConfig = serde_json::from_str(text)?;
        cfg.weight()?;
        if cfg.n_values.is_empty() || cfg.n_values.windows(2).any(|w| w[0] >= w[1]) || cfg.n_values[0] == 0 {
            return Err(SweepError::Invalid("n_values must be positive and strictly increasing".into()));
        }
        if cfg.budget.is_some_and(|b| b < *cfg.n_values.last().expect("non-empty")) {
            return Err(SweepError::Invalid("budget must be at least max(n_values)".into()));
        }
        Ok(cfg)
    }

    pub fn weight(&self) -> Result<Rational, SweepError> {
        let w = parse_rational(&self.w)?;
        if w <= Rational::from_integer(0) {
            return Err(SweepError::Invalid("w must be positive".into()));
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: u32,
    pub best_ratio: f64,
    pub predicted_lb: f64,
    pub poa_bound: Bound,
    pub params: String,
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, SweepError> {
    let w = cfg.weight()?;
    let wf = to_f64(&w);
    let f = &cfg.latency;
    let bound = analyze(f, wf, &SearchDomain::for_weight(wf))?.poa_bound.value;
    let ts: Vec<f64> = cfg.n_values.iter().map(|&n| n as f64 * wf).collect();
    let predicted = crate::bounds::predict_scaling(f, wf, &ts)?;
    cfg.n_values
        .iter()
        .zip(predicted)
        .map(|(&n, (_, pred))| {
            let res = lb::search_params(f, w, n)?;
            Ok(SweepRow { n, best_ratio: res.ratio, predicted_lb: pred, poa_bound: bound, params: res.params.summary() })
        })
        .collect()
}

fn csv_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.10}")
    } else if x.is_nan() {
        "nan".into()
    } else {
        "inf".into()
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("n,best_ratio,predicted_lb,poa_bound,params\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},\"{}\"",
            r.n,
            csv_num(r.best_ratio),
            csv_num(r.predicted_lb),
            csv_num(r.poa_bound.value()),
            r.params
        );
    }
    out
}

/// JSON sidecar for a built lower-bound instance; re-exported for the CLI.
pub fn instance_files(inst: &lb::LBInstance) -> (Value, Value) {
    (game_to_json(&inst.game), lb::sidecar_json(inst))
}
