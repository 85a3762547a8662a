use anarchia::equilibrium::{best_response_step, profile_at};
use anarchia::experiments::{instance_rng, l3_pool, random_game, random_lb_params};
use anarchia::numeric::log_grid;
use anarchia::rational::{to_big, to_f64};
use anarchia::*;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::Rng;

fn exact_pool() -> Vec<LatencyFunction> {
    l3_pool().into_iter().filter(|l| l.supports_exact()).collect()
}

fn uniform(g: &Game) -> Game {
    let players = g.players().iter().map(|p| Player { id: p.id.clone(), weight: Rational::from_integer(1) }).collect();
    let strategies = (0..g.num_players())
        .map(|p| g.strategies(p).iter().map(|s| s.resources().to_vec()).collect())
        .collect();
    Game::new(players, g.resources().to_vec(), strategies, g.latencies().to_vec()).unwrap()
}

fn loads(g: &Game, s: &StateProfile) -> Vec<Rational> {
    let mut c = vec![Rational::from_integer(0); g.num_resources()];
    for (p, &k) in s.0.iter().enumerate() {
        for &r in g.strategies(p)[k].resources() {
            c[r] += g.weight(p);
        }
    }
    c
}

fn exact_cost(g: &Game, load: &[Rational], rs: &[usize]) -> BigRational {
    rs.iter().map(|&r| g.latency(r).eval_exact(&to_big(&load[r])).unwrap()).sum()
}

/// Double loop over every (player, alternative) pair in exact arithmetic.
fn nash_oracle(g: &Game, s: &StateProfile) -> bool {
    let load = loads(g, s);
    (0..g.num_players()).all(|p| {
        let cur = g.strategies(p)[s.0[p]].resources();
        let now = exact_cost(g, &load, cur);
        g.strategies(p).iter().all(|alt| {
            let mut moved = load.clone();
            for &r in alt.resources() {
                if !cur.contains(&r) {
                    moved[r] += g.weight(p);
                }
            }
            exact_cost(g, &moved, alt.resources()) >= now
        })
    })
}

fn rosenthal(g: &Game, s: &StateProfile) -> BigRational {
    let mut users = vec![0i64; g.num_resources()];
    for (p, &k) in s.0.iter().enumerate() {
        for &r in g.strategies(p)[k].resources() {
            users[r] += 1;
        }
    }
    let mut phi = BigRational::zero();
    for (r, &n) in users.iter().enumerate() {
        for m in 1..=n {
            phi += g.latency(r).eval_exact(&BigRational::from_integer(m.into())).unwrap();
        }
    }
    phi
}

fn random_state(g: &Game, seed: u64) -> StateProfile {
    let mut rng = instance_rng(seed, 99);
    profile_at(g, rng.gen_range(0..g.profile_count().unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cost_identities(seed in any::<u64>()) {
        let g = random_game(&mut instance_rng(seed, 0), &l3_pool());
        for k in 0..g.profile_count().unwrap() {
            let s = profile_at(&g, k);
            let sc = g.social_cost(&s).unwrap();
            let weighted: f64 = (0..g.num_players()).map(|p| to_f64(&g.weight(p)) * g.player_cost(&s, p).unwrap()).sum();
            prop_assert!((sc - weighted).abs() <= 1e-9 * sc.max(f64::MIN_POSITIVE));
            let conserved: Rational = (0..g.num_players())
                .map(|p| g.weight(p) * Rational::from_integer(g.strategies(p)[s.0[p]].resources().len() as i64))
                .sum();
            prop_assert_eq!(g.congestion(&s).unwrap().total(), conserved);
            for p in 0..g.num_players() {
                prop_assert_eq!(g.deviation_cost(&s, p, s.0[p]).unwrap(), g.player_cost(&s, p).unwrap());
            }
        }
    }

    #[test]
    fn nash_test_matches_exact_double_loop(seed in any::<u64>()) {
        let g = random_game(&mut instance_rng(seed, 1), &exact_pool());
        for k in 0..g.profile_count().unwrap() {
            let s = profile_at(&g, k);
            prop_assert_eq!(g.is_nash(&s).unwrap().is_nash(), nash_oracle(&g, &s), "state {:?}", s);
        }
    }

    #[test]
    fn enumeration_is_sound_and_complete(seed in any::<u64>()) {
        let g = random_game(&mut instance_rng(seed, 2), &l3_pool());
        let listed = enumerate_nash(&g, DEFAULT_CAP).unwrap();
        for k in 0..g.profile_count().unwrap() {
            let s = profile_at(&g, k);
            match g.is_nash(&s).unwrap() {
                NashVerdict::Stable => prop_assert!(listed.contains(&s)),
                NashVerdict::Improvable { player, strategy, current_cost, deviation_cost } => {
                    prop_assert!(!listed.contains(&s));
                    prop_assert!(deviation_cost <= current_cost);
                    prop_assert_eq!(g.deviation_cost(&s, player, strategy).unwrap(), deviation_cost);
                }
            }
        }
    }

    #[test]
    fn poa_dominates_every_nash_ratio(seed in any::<u64>()) {
        let g = random_game(&mut instance_rng(seed, 3), &l3_pool());
        let Ok(rep) = price_of_anarchy(&g, DEFAULT_CAP) else { return Ok(()) };
        prop_assert!(rep.poa >= 1.0);
        let r = random_state(&g, seed);
        let sc_r = g.social_cost(&r).unwrap();
        for ne in &rep.nash_states {
            prop_assert!(g.social_cost(ne).unwrap() / rep.optimal_cost <= rep.poa * (1.0 + 1e-12));
            prop_assert!(g.social_cost(ne).unwrap() / sc_r <= rep.poa * (1.0 + 1e-12));
        }
    }

    #[test]
    fn dynamics_improve_mover_and_potential(seed in any::<u64>()) {
        let g = uniform(&random_game(&mut instance_rng(seed, 4), &exact_pool()));
        let mut s = random_state(&g, seed);
        for _ in 0..200 {
            let Some((p, alt)) = best_response_step(&g, &s).unwrap() else { break };
            let before = g.player_cost(&s, p).unwrap();
            let phi = rosenthal(&g, &s);
            let load = loads(&g, &s);
            let exact_before = exact_cost(&g, &load, g.strategies(p)[s.0[p]].resources());
            s.0[p] = alt;
            let exact_after = exact_cost(&g, &loads(&g, &s), g.strategies(p)[alt].resources());
            prop_assert!(exact_after < exact_before);
            prop_assert!(g.player_cost(&s, p).unwrap() <= before);
            prop_assert!(rosenthal(&g, &s) < phi);
        }
        prop_assert!(g.is_nash(&s).unwrap().is_nash());
    }

    #[test]
    fn decomposition_invariants(seed in any::<u64>()) {
        let g = random_game(&mut instance_rng(seed, 5), &l3_pool());
        let s = random_state(&g, seed);
        let r = random_state(&g, seed ^ 1);
        let table = build_classes(&g, &s, &r, ReferenceKind::Arbitrary).unwrap();
        prop_assert!((table.lambda_total() - 1.0).abs() <= 1e-12);
        let direct = g.social_cost(&s).unwrap() / g.social_cost(&r).unwrap();
        let h = coordination_ratio_decomposed(&table, &g);
        prop_assert!((h - direct).abs() <= 1e-9 * direct.max(1e-300), "{} vs {}", h, direct);
        for row in &table.rows {
            for e in &row.entries {
                prop_assert_eq!(e.side, classify_triple_side(e.f, e.g));
                prop_assert!(e.lambda >= 0.0);
            }
        }
        if let Ok(rep) = price_of_anarchy(&g, DEFAULT_CAP) {
            for ne in &rep.nash_states {
                let t = build_classes(&g, ne, &rep.optimal_state, ReferenceKind::Optimal).unwrap();
                prop_assert!(check_equilibrium_constraint(&t).holds);
            }
        }
    }

    #[test]
    fn generator_invariants(seed in any::<u64>()) {
        let p = random_lb_params(&mut instance_rng(seed, 6), &catalog());
        let inst = build_lower_bound(p).unwrap();
        let q = &inst.params;
        let n = Rational::from_integer(q.n() as i64);
        let int = |x: u32| Rational::from_integer(x as i64);
        prop_assert_eq!(inst.j1 * int(q.zeta1), n * int(q.alpha) * q.w);
        prop_assert_eq!(inst.j2 * int(q.zeta2), n * int(q.beta) * q.w);
        prop_assert_eq!(inst.t1 * int(q.zeta1), n * int(q.gamma) * q.w);
        prop_assert_eq!(inst.t2 * int(q.zeta2), n * int(q.delta) * q.w);
        prop_assert!((inst.lambda1 + inst.lambda2 - 1.0).abs() <= 1e-12);
        prop_assert!(inst.lambda1 >= 0.0 && inst.lambda2 >= 0.0);
        let check = verify_nash(&inst);
        prop_assert!(check.agree());
        if let Ok(listed) = enumerate_nash(&inst.game, 1 << 10) {
            prop_assert_eq!(listed.contains(&inst.state_s), check.holds());
        }
        match ratio_lower_bound(&inst) {
            Ok(lb) => {
                prop_assert!(check.holds());
                if lb.ratio.is_finite() {
                    prop_assert!((lb.ratio - lb.decomposed).abs() <= 1e-9 * lb.ratio);
                }
            }
            Err(LbError::NotEquilibrium) => prop_assert!(!check.holds()),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn triples_are_ordered_with_small_residual(idx in 0usize..9, t in 0.01f64..100.0, frac in 0.01f64..1.0) {
        let f = &catalog()[idx];
        let i = t * frac;
        if let Some(tr) = find_triple(f, t, i).unwrap() {
            prop_assert!(tr.residual <= 1e-9);
            prop_assert!(tr.x >= t && t >= i);
        }
    }

    #[test]
    fn random_polynomials_and_exponentials_are_monotone(
        c in proptest::collection::vec(0.0f64..5.0, 1..5),
        base in 1.01f64..8.0,
        x1 in 1e-3f64..1e3,
        x2 in 1e-3f64..1e3,
    ) {
        prop_assume!(c.iter().any(|&v| v > 0.0));
        let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
        for f in [LatencyFunction::poly(&c).unwrap(), LatencyFunction::exp_base(base).unwrap()] {
            prop_assert!(f.eval(lo).unwrap() <= f.eval(hi).unwrap());
            prop_assert!(f.log_eval(lo).unwrap() <= f.log_eval(hi).unwrap());
        }
    }
}

#[test]
fn catalog_monotone_and_log_consistent() {
    let grid = log_grid(1e-3, 1e3, 1000);
    for f in catalog() {
        let vals: Vec<f64> = grid.iter().map(|&x| f.eval(x).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]), "{} not monotone", f.label());
        for (&x, &v) in grid.iter().zip(&vals) {
            if v > 0.0 && v <= 1e300 {
                let lv = f.log_eval(x).unwrap();
                assert!((lv - v.ln()).abs() <= 1e-9, "{} at {x}: {lv} vs {}", f.label(), v.ln());
            }
        }
    }
}

#[test]
fn growth_class_membership() {
    let grid = log_grid(1.0, 1e3, 200);
    for f in catalog() {
        let ratios: Vec<f64> = grid.iter().map(|&x| f.log_ratio(x + 1.0, x).unwrap()).collect();
        match f.class() {
            LatencyClass::L1 => {
                let floor = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                assert!(floor > 0.5, "{} ratio floor {floor}", f.label());
            }
            LatencyClass::L2 => {
                let tail = *ratios.last().unwrap();
                assert!(tail < 0.02 && tail < ratios[0] / 10.0, "{} tail {tail}", f.label());
            }
            LatencyClass::L3 => {}
        }
    }
}

#[test]
fn catalog_bound_orderings() {
    let dom = SearchDomain::for_weight(1.0);
    for f in catalog() {
        let rep = analyze(&f, 1.0, &dom).unwrap();
        let (gs, gh, pb) = (rep.g_star.value, rep.g_hat.value, rep.poa_bound.value);
        if let (Bound::Finite(s), Bound::Finite(h)) = (gs, gh) {
            assert!(h <= s + 1e-6, "{}: g_hat {h} > g* {s}", f.label());
        }
        if !rep.triples_found.is_empty() {
            assert!(pb.value() >= gs.value() - 1e-6, "{}", f.label());
        }
        match f.class() {
            LatencyClass::L3 if log_grid(dom.t_min, dom.t_max, 1000).iter().any(|&t| f.eval(t).unwrap() == 0.0) => {
                // vanishing latency: g blows up as t approaches the zero from above
                let trace = rep.g_star.divergence_evidence().unwrap();
                assert!(pb.is_infinite() && trace.windows(2).all(|w| w[1].t < w[0].t && w[1].log_value > w[0].log_value));
            }
            LatencyClass::L3 => {
                let doubled = analyze(&f, 1.0, &dom.with_t_max(2.0 * dom.t_max)).unwrap().poa_bound.value.value();
                assert!(!pb.is_infinite(), "{}", f.label());
                assert!((doubled - pb.value()).abs() <= 1e-3 * pb.value(), "{}: {} vs {doubled}", f.label(), pb.value());
            }
            LatencyClass::L1 | LatencyClass::L2 => {
                assert!(pb.is_infinite(), "{}", f.label());
                let trace = &rep.poa_bound.trace;
                assert!(trace.len() >= 4 && trace.windows(2).all(|w| w[1].log_value > w[0].log_value), "{}", f.label());
            }
        }
    }
}
