//! Resource equivalence classes between a state `S` and a reference state,
//! their λ-weights, and the per-weight load terms f and g.
//!
//! The coordination ratio `SC(S)/SC(S_ref)` splits into
//! `Σ λ·(j/t)·l(j)/l(t)` over classes used in the reference state plus
//! `Σ λ⁰·j·l(j)` over classes unused there. When `S` is a Nash equilibrium,
//! `Σ λ⁰·f⁰ + Σ_{f ≥ 0} λ·f ≤ Σ_{g > 0} λ·g` where `g = −f`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::find_triple;
use crate::game::{Game, GameError, StateProfile};
use crate::latency::LatencyFunction;
use crate::rational::{render_rational, to_f64, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompositionError {
    #[error("reference state has zero social cost")]
    RefCostZero,
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// The exhaustive optimum.
    Optimal,
    /// Any other state; the ratio identity still holds, the Nash constraint need not.
    Arbitrary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Overloaded,
    Underloaded,
}

/// `Overloaded` iff `f >= 0`.
pub fn classify_triple_side(f_value: f64, g_value: f64) -> Side {
    debug_assert!((f_value >= 0.0) != (g_value > 0.0) || f_value.is_nan());
    if f_value >= 0.0 {
        Side::Overloaded
    } else {
        Side::Underloaded
    }
}

/// Whether the f-sign classification agrees with `j >= x` for the triple
/// through `(t, i)`. Without a triple every `j` must be underloaded.
pub fn side_matches_triple(l: &LatencyFunction, side: Side, j: f64, t: f64, i: f64) -> bool {
    match find_triple(l, t, i) {
        Ok(Some(tr)) => {
            if (j - tr.x).abs() <= 1e-9 * tr.x.max(1.0) {
                return true;
            }
            (side == Side::Overloaded) == (j >= tr.x)
        }
        Ok(None) => side == Side::Underloaded,
        Err(_) => false,
    }
}

/// Equivalence key: congestion in `S`, congestion in the reference state,
/// latency label and the reference-state player mix as sorted
/// `(weight, count)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassKey {
    pub j: Rational,
    pub t: Rational,
    pub k: String,
    pub config: Vec<(Rational, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightEntry {
    pub i: Rational,
    pub lambda: f64,
    pub f: f64,
    pub g: f64,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassRow {
    pub key: ClassKey,
    pub resources: Vec<usize>,
    pub entries: Vec<WeightEntry>,
}

/// Resources unused in the reference state, grouped by `(j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroRow {
    pub j: Rational,
    pub k: String,
    pub resources: Vec<usize>,
    pub lambda: f64,
    /// `j·l(j)`
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassTable {
    pub rows: Vec<ClassRow>,
    pub zero_rows: Vec<ZeroRow>,
    pub sc_ref: f64,
    pub sc_state: f64,
    pub reference: ReferenceKind,
}

pub fn build_classes(
    game: &Game,
    state: &StateProfile,
    reference_state: &StateProfile,
    reference: ReferenceKind,
) -> Result<ClassTable, DecompositionError> {
    let cj = game.congestion(state)?;
    let ct = game.congestion(reference_state)?;
    let log_sc_ref = game.log_social_cost_of(&ct);
    if log_sc_ref == f64::NEG_INFINITY {
        return Err(DecompositionError::RefCostZero);
    }

    // reference-state player mix per resource
    let mut mix: Vec<BTreeMap<Rational, u32>> = vec![BTreeMap::new(); game.num_resources()];
    for p in 0..game.num_players() {
        for &r in game.chosen(reference_state, p).resources() {
            *mix[r].entry(game.weight(p)).or_insert(0) += 1;
        }
    }

    let mut groups: BTreeMap<ClassKey, Vec<usize>> = BTreeMap::new();
    let mut zero_groups: BTreeMap<(Rational, String), Vec<usize>> = BTreeMap::new();
    for r in 0..game.num_resources() {
        let k = game.latency(r).label();
        if ct.get(r).is_zero() {
            zero_groups.entry((cj.get(r), k)).or_default().push(r);
        } else {
            let config = mix[r].iter().map(|(&w, &c)| (w, c)).collect();
            groups.entry(ClassKey { j: cj.get(r), t: ct.get(r), k, config }).or_default().push(r);
        }
    }

    let rows = groups
        .into_iter()
        .map(|(key, resources)| {
            let l = game.latency(resources[0]);
            let (j, t) = (to_f64(&key.j), to_f64(&key.t));
            let lt = l.ln_unchecked(t);
            let ln_size = (resources.len() as f64).ln();
            // j·l(j)/(t·l(t)), zero when j = 0
            let ratio = if key.j.is_zero() { 0.0 } else { (j.ln() + l.ln_unchecked(j) - t.ln() - lt).exp() };
            let entries = key
                .config
                .iter()
                .map(|&(w, count)| {
                    let i = to_f64(&w);
                    let lambda = (ln_size + i.ln() + (count as f64).ln() + lt - log_sc_ref).exp();
                    let f = ratio - (l.ln_unchecked(j + i) - lt).exp();
                    let g = -f;
                    WeightEntry { i: w, lambda, f, g, side: classify_triple_side(f, g) }
                })
                .collect();
            ClassRow { key, resources, entries }
        })
        .collect();

    let zero_rows = zero_groups
        .into_iter()
        .map(|((j, k), resources)| {
            let l = game.latency(resources[0]);
            let jf = to_f64(&j);
            let f = if j.is_zero() { 0.0 } else { jf * l.eval_unchecked(jf) };
            ZeroRow { j, k, lambda: ((resources.len() as f64).ln() - log_sc_ref).exp(), resources, f }
        })
        .collect();

    Ok(ClassTable {
        rows,
        zero_rows,
        sc_ref: log_sc_ref.exp(),
        sc_state: game.social_cost_of(&cj),
        reference,
    })
}

impl ClassTable {
    pub fn lambda_total(&self) -> f64 {
        self.rows.iter().flat_map(|r| &r.entries).map(|e| e.lambda).sum()
    }

    /// `Σ λ⁰·f⁰`, the load placed on resources unused by the reference state.
    pub fn zero_mass(&self) -> f64 {
        self.zero_rows.iter().map(|z| z.lambda * z.f).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,t,k,config,i,lambda,f,g,side,resources\n");
        for row in &self.rows {
            let config: Vec<String> =
                row.key.config.iter().map(|(w, c)| format!("{}x{}", render_rational(w), c)).collect();
            for e in &row.entries {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{:.12e},{:.12e},{:.12e},{},{}",
                    render_rational(&row.key.j),
                    render_rational(&row.key.t),
                    quote(&row.key.k),
                    config.join(";"),
                    render_rational(&e.i),
                    e.lambda,
                    e.f,
                    e.g,
                    side_name(e.side),
                    row.resources.len()
                );
            }
        }
        for z in &self.zero_rows {
            let _ = writeln!(
                out,
                "{},0/1,{},,0/1,{:.12e},{:.12e},0,overloaded,{}",
                render_rational(&z.j),
                quote(&z.k),
                z.lambda,
                z.f,
                z.resources.len()
            );
        }
        out
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Overloaded => "overloaded",
        Side::Underloaded => "underloaded",
    }
}

fn quote(s: &str) -> String {
    if s.contains(',') {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}

/// `Σ λ·(j/t)·l(j)/l(t) + Σ λ⁰·j·l(j)`, equal to `SC(S)/SC(S_ref)`.
pub fn coordination_ratio_decomposed(table: &ClassTable, game: &Game) -> f64 {
    let mut total = 0.0;
    for row in &table.rows {
        let l = game.latency(row.resources[0]);
        let (j, t) = (to_f64(&row.key.j), to_f64(&row.key.t));
        let ratio = if row.key.j.is_zero() {
            0.0
        } else {
            (j.ln() + l.ln_unchecked(j) - t.ln() - l.ln_unchecked(t)).exp()
        };
        total += row.entries.iter().map(|e| e.lambda).sum::<f64>() * ratio;
    }
    total + table.zero_mass()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn check_equilibrium_constraint(table: &ClassTable) -> ConstraintCheck {
    let mut lhs = table.zero_mass();
    let mut rhs = 0.0;
    for e in table.rows.iter().flat_map(|r| &r.entries) {
        match e.side {
            Side::Overloaded => lhs += e.lambda * e.f,
            Side::Underloaded => rhs += e.lambda * e.g,
        }
    }
    ConstraintCheck { lhs, rhs, holds: lhs <= rhs + 1e-9 * rhs.abs().max(1.0) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{enumerate_nash, optimal_state, DEFAULT_CAP};
    use crate::game::tests::{lin, players, two_links};

    fn one() -> Rational {
        Rational::from_integer(1)
    }

    #[test]
    fn identical_states_give_unit_ratio() {
        let g = two_links(&[one(), one(), one()], lin());
        let s = StateProfile(vec![0, 0, 1]);
        let t = build_classes(&g, &s, &s, ReferenceKind::Arbitrary).unwrap();
        assert!(t.rows.iter().all(|r| r.key.j == r.key.t));
        assert!((t.lambda_total() - 1.0).abs() < 1e-12);
        assert!((coordination_ratio_decomposed(&t, &g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_class_has_half_lambda() {
        let g = two_links(&[one(), one()], lin());
        let s = StateProfile(vec![0, 1]);
        let t = build_classes(&g, &s, &s, ReferenceKind::Optimal).unwrap();
        assert_eq!(t.rows.len(), 1);
        let row = &t.rows[0];
        assert_eq!((row.key.j, row.key.t), (one(), one()));
        assert_eq!(row.resources, vec![0, 1]);
        assert_eq!(row.entries.len(), 1);
        // |R|·i·α·l(t)/SC = 2·1·1·1/2 = 1 for the class, 1/2 per resource
        assert!((row.entries[0].lambda - 1.0).abs() < 1e-12);
        assert!((row.entries[0].lambda / row.resources.len() as f64 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn resource_unused_in_reference_is_zero_row() {
        let g = Game::new(
            players(&[one()]),
            vec!["a".into(), "b".into()],
            vec![vec![vec![0], vec![1]]],
            vec![lin(), LatencyFunction::poly(&[0.0, 2.0]).unwrap()],
        )
        .unwrap();
        let s = StateProfile(vec![1]);
        let opt = StateProfile(vec![0]);
        let t = build_classes(&g, &s, &opt, ReferenceKind::Optimal).unwrap();
        let used = t.zero_rows.iter().find(|z| z.j == one()).unwrap();
        // λ⁰ = |R⁰|/SC(S*) = 1/1
        assert!((used.lambda - 1.0).abs() < 1e-12);
        let h = coordination_ratio_decomposed(&t, &g);
        assert!((h - 2.0).abs() < 1e-12);
        // S is not Nash here and the constraint is violated
        assert!(!check_equilibrium_constraint(&t).holds);
    }

    #[test]
    fn nash_states_satisfy_constraint() {
        let g = two_links(&[one(), Rational::new(1, 2), Rational::from_integer(2)], lin());
        let (opt, _) = optimal_state(&g, DEFAULT_CAP).unwrap();
        for s in enumerate_nash(&g, DEFAULT_CAP).unwrap() {
            let t = build_classes(&g, &s, &opt, ReferenceKind::Optimal).unwrap();
            let c = check_equilibrium_constraint(&t);
            assert!(c.holds, "{c:?}");
        }
    }

    #[test]
    fn side_examples() {
        // l(x)=x, j=3, t=1, i=1: f = 9 - 4 = 5
        let f = 9.0 - 4.0;
        assert_eq!(classify_triple_side(f, -f), Side::Overloaded);
        assert!(side_matches_triple(&lin(), Side::Overloaded, 3.0, 1.0, 1.0));
        assert_eq!(classify_triple_side(-1.0, 1.0), Side::Underloaded);
        assert!(side_matches_triple(&lin(), Side::Underloaded, 1.0, 1.0, 1.0));
        assert_eq!(classify_triple_side(0.0, 0.0), Side::Overloaded);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(side_matches_triple(&lin(), Side::Overloaded, phi, 1.0, 1.0));
    }

    #[test]
    fn zero_reference_cost_rejected() {
        let z = LatencyFunction::new(crate::latency::Family::PolyLogProduct, vec![2.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let g = Game::new(
            players(&[Rational::new(1, 8)]),
            vec!["r".into()],
            vec![vec![vec![0]]],
            vec![z],
        )
        .unwrap();
        let s = StateProfile(vec![0]);
        assert_eq!(build_classes(&g, &s, &s, ReferenceKind::Optimal).unwrap_err(), DecompositionError::RefCostZero);
    }

    #[test]
    fn csv_renders_exact_congestions() {
        let g = two_links(&[one(), Rational::new(1, 2)], lin());
        let s = StateProfile(vec![0, 0]);
        let r = StateProfile(vec![0, 1]);
        let csv = build_classes(&g, &s, &r, ReferenceKind::Arbitrary).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "j,t,k,config,i,lambda,f,g,side,resources");
        assert!(csv.contains("3/2,1/1,\"poly_sum[0,1]\",1/1x1,1/1,"));
        assert!(csv.contains("0/1,1/2,\"poly_sum[0,1]\",1/2x1,1/2,"));
    }
}
