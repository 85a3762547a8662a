//! Ordered triples, the two growth parameters g* and ĝ, and the upper bound
//! on the price of anarchy for a single latency function.
//!
//! Every maximization runs on fixed log-spaced grids refined by
//! golden-section search, so reports are reproducible. "Infinite" is a
//! witnessed verdict: the maximum keeps growing across three successive
//! doublings of the search range, or g keeps growing as t approaches the
//! point where a latency leaves zero.

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use serde_json::{json, Value};
use thiserror::Error;

use crate::latency::{LatencyClass, LatencyFunction};
use crate::numeric::{bisect_up, golden_max, log_diff_exp, log_grid, log_sum_exp};

/// Root scans stop at `X_CAP_FACTOR · t`.
pub const X_CAP_FACTOR: f64 = 1e6;
const ROOT_SCAN_PER_DECADE: usize = 64;
const ROOT_REL_TOL: f64 = 1e-12;
/// Relative growth per doubling above which a maximum counts as diverging.
pub const GROWTH_TOL: f64 = 1e-3;
const DOUBLINGS: usize = 3;
const J_SPAN: f64 = 1e3;
const J_POINTS: usize = 160;
const X_RATIO_RANGE: (f64, f64) = (1e-6, 1e3);
const DEGENERATE_REL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("invalid search domain: {0}")]
    InvalidDomain(String),
    #[error("triple search needs t >= i > 0, got t={t}, i={i}")]
    InvalidTripleArgs { t: f64, i: f64 },
    #[error("bound denominator vanishes at j={j}, t={t}, i={i}")]
    DegenerateDenominator { j: f64, t: f64, i: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchDomain {
    pub t_min: f64,
    pub t_max: f64,
    pub i_values: Vec<f64>,
    pub grid_points: usize,
    pub refine_tol: f64,
}

impl SearchDomain {
    /// Default domain for maximum weight `w`: t in [1e-3, 1e3] and
    /// i in {w, w/2, w/4, w/8}.
    pub fn for_weight(w: f64) -> Self {
        SearchDomain {
            t_min: 1e-3,
            t_max: 1e3,
            i_values: vec![w / 8.0, w / 4.0, w / 2.0, w],
            grid_points: 256,
            refine_tol: 1e-10,
        }
    }

    /// Adds player weights to `i_values` (kept sorted and distinct).
    pub fn with_weights(mut self, weights: impl IntoIterator<Item = f64>) -> Self {
        self.i_values.extend(weights);
        self.i_values.sort_by(f64::total_cmp);
        self.i_values.dedup();
        self
    }

    pub fn with_t_max(&self, t_max: f64) -> Self {
        SearchDomain { t_max, ..self.clone() }
    }

    pub fn validate(&self, w: f64) -> Result<(), BoundsError> {
        let bad = |m: &str| Err(BoundsError::InvalidDomain(m.to_string()));
        if !(w > 0.0 && w.is_finite()) {
            return bad("weight must be positive");
        }
        if !(self.t_min > 0.0 && self.t_max > self.t_min && self.t_max.is_finite()) {
            return bad("need 0 < t_min < t_max");
        }
        if self.grid_points < 64 {
            return bad("grid_points must be at least 64");
        }
        if self.i_values.is_empty() || self.i_values.iter().any(|&i| !(i > 0.0 && i <= w)) {
            return bad("i_values must be non-empty and lie in (0, w]");
        }
        if !(self.refine_tol > 0.0) {
            return bad("refine_tol must be positive");
        }
        Ok(())
    }

    fn sorted_i(&self) -> Vec<f64> {
        let mut v = self.i_values.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    fn t_grid(&self, lo: f64) -> Vec<f64> {
        let lo = lo.max(self.t_min);
        if lo >= self.t_max {
            return vec![lo];
        }
        log_grid(lo, self.t_max, self.grid_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderedTriple {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub residual: f64,
}

/// `ln x − ln t + ln l(x) − ln l(x+i)`; its zero is the triple at `(t, i)`.
fn triple_gap(f: &LatencyFunction, t: f64, i: f64, x: f64) -> f64 {
    x.ln() - t.ln() + f.ln_unchecked(x) - f.ln_unchecked(x + i)
}

/// Smallest `x >= t` with `l(x+i)/l(x) = x/t`, or `None` when
/// `x·l(x) < t·l(x+i)` over the whole scan `[t, 1e6·t]`.
pub fn find_triple(f: &LatencyFunction, t: f64, i: f64) -> Result<Option<OrderedTriple>, BoundsError> {
    if !(i > 0.0 && t >= i && t.is_finite()) {
        return Err(BoundsError::InvalidTripleArgs { t, i });
    }
    Ok(triple_root(f, t, i))
}

fn triple_root(f: &LatencyFunction, t: f64, i: f64) -> Option<OrderedTriple> {
    let h = |x: f64| {
        let v = triple_gap(f, t, i, x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let finish = |x: f64| OrderedTriple { x, y: t, z: i, residual: h(x).abs() };
    if h(t) >= 0.0 {
        return Some(finish(t));
    }
    let points = ROOT_SCAN_PER_DECADE * X_CAP_FACTOR.log10() as usize + 1;
    let grid = log_grid(t, t * X_CAP_FACTOR, points);
    let mut prev = t;
    for &x in &grid[1..] {
        if h(x) >= 0.0 {
            return Some(finish(bisect_up(h, prev, x, ROOT_REL_TOL)));
        }
        prev = x;
    }
    None
}

/// `ln g(t, i) = ln l(x+i) − ln l(t)` at the triple, with its root `x`.
fn log_g(f: &LatencyFunction, t: f64, i: f64) -> Option<(f64, f64)> {
    let lt = f.ln_unchecked(t);
    if !lt.is_finite() {
        return None;
    }
    let tr = triple_root(f, t, i)?;
    Some((f.ln_unchecked(tr.x + i) - lt, tr.x))
}

/// `g(t, i) = l(x+i)/l(t)` at the triple through `(t, i)`.
pub fn g_at(f: &LatencyFunction, t: f64, i: f64) -> Result<Option<f64>, BoundsError> {
    if !(i > 0.0 && t >= i) {
        return Err(BoundsError::InvalidTripleArgs { t, i });
    }
    Ok(log_g(f, t, i).map(|(lg, _)| lg.exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub j: f64,
    pub t: f64,
    pub i: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    Infinite,
}

impl Bound {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Bound::Infinite)
    }

    pub fn value(&self) -> f64 {
        match self {
            Bound::Finite(v) => *v,
            Bound::Infinite => f64::INFINITY,
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Bound::Finite(v) if v.is_finite() => s.serialize_f64(*v),
            _ => s.serialize_str("inf"),
        }
    }
}

/// One probe of a diverging maximum: the range end `t` of a doubling slab,
/// or a point approaching a zero of the latency from above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub log_value: f64,
}

/// A maximized quantity: verdict, `ln` of the value on the requested
/// domain, where it is attained, and its values under range doublings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: Bound,
    pub log_value: f64,
    pub witness: Witness,
    pub trace: Vec<TracePoint>,
}

impl Estimate {
    pub fn divergence_evidence(&self) -> Option<&[TracePoint]> {
        self.value.is_infinite().then_some(self.trace.as_slice())
    }
}

#[derive(Debug, Clone, Copy)]
struct Best {
    log_value: f64,
    witness: Witness,
}

impl Best {
    fn none() -> Self {
        Best { log_value: f64::NEG_INFINITY, witness: Witness { j: f64::NAN, t: f64::NAN, i: f64::NAN } }
    }

    /// Larger value wins; equal values keep the smaller (t, i, j).
    fn beats(&self, other: &Best) -> bool {
        let key = |b: &Best| (b.witness.t, b.witness.i, b.witness.j);
        self.log_value > other.log_value
            || (self.log_value == other.log_value
                && self.log_value > f64::NEG_INFINITY
                && key(self).partial_cmp(&key(other)) == Some(std::cmp::Ordering::Less))
    }

    fn offer(&mut self, other: Best) {
        if other.beats(self) {
            *self = other;
        }
    }
}

fn bracket(grid: &[f64], k: usize) -> (f64, f64) {
    (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)])
}

fn argbest(vals: &[Best]) -> Option<usize> {
    let mut idx: Option<usize> = None;
    for (k, v) in vals.iter().enumerate() {
        if idx.map_or(v.log_value > f64::NEG_INFINITY, |i| v.beats(&vals[i])) {
            idx = Some(k);
        }
    }
    idx
}

fn g_star_level(f: &LatencyFunction, dom: &SearchDomain) -> Best {
    let mut best = Best::none();
    for i in dom.sorted_i() {
        let ts = dom.t_grid(i);
        let vals: Vec<Best> = ts
            .par_iter()
            .map(|&t| match log_g(f, t, i) {
                Some((lg, x)) => Best { log_value: lg, witness: Witness { j: x, t, i } },
                None => Best::none(),
            })
            .collect();
        let Some(k) = argbest(&vals) else { continue };
        best.offer(vals[k]);
        let (a, b) = bracket(&ts, k);
        if a < b {
            let obj = |t: f64| log_g(f, t, i).map_or(f64::NEG_INFINITY, |(lg, _)| lg);
            let (t, lg) = golden_max(obj, a, b, dom.refine_tol, 200);
            if let Some((_, x)) = log_g(f, t, i) {
                best.offer(Best { log_value: lg, witness: Witness { j: x, t, i } });
            }
        }
    }
    best
}

/// `ln( l(x+z)/l(y) − x·l(x)/(y·l(y)) )`, `-inf` where the difference is not positive.
fn log_g_hat_objective(f: &LatencyFunction, x: f64, y: f64, z: f64) -> f64 {
    let ly = f.ln_unchecked(y);
    if !ly.is_finite() {
        return f64::NEG_INFINITY;
    }
    let a = f.ln_unchecked(x + z) - ly;
    let b = x.ln() + f.ln_unchecked(x) - y.ln() - ly;
    let v = log_diff_exp(a, b);
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn g_hat_level(f: &LatencyFunction, dom: &SearchDomain) -> Best {
    let ratios = log_grid(X_RATIO_RANGE.0, X_RATIO_RANGE.1, dom.grid_points);
    let mut best = Best::none();
    for z in dom.sorted_i() {
        let ys = dom.t_grid(z);
        // x -> 0 limit: l(z)/l(y), largest at the smallest admissible y
        if let Some(&y0) = ys.iter().find(|&&y| f.ln_unchecked(y).is_finite()) {
            best.offer(Best {
                log_value: f.ln_unchecked(z) - f.ln_unchecked(y0),
                witness: Witness { j: 0.0, t: y0, i: z },
            });
        }
        let rows: Vec<(usize, Best)> = ys
            .par_iter()
            .map(|&y| {
                let mut row = Best::none();
                let mut k_best = 0;
                for (k, &a) in ratios.iter().enumerate() {
                    let v = log_g_hat_objective(f, a * y, y, z);
                    if v > row.log_value {
                        row = Best { log_value: v, witness: Witness { j: a * y, t: y, i: z } };
                        k_best = k;
                    }
                }
                (k_best, row)
            })
            .collect();
        let cells: Vec<Best> = rows.iter().map(|r| r.1).collect();
        let Some(m) = argbest(&cells) else { continue };
        best.offer(cells[m]);

        // coordinate ascent on (x/y, y) inside the neighbouring grid cells
        let (mut a_lo, mut a_hi) = bracket(&ratios, rows[m].0);
        let (y_lo, y_hi) = bracket(&ys, m);
        let mut a;
        let mut y = cells[m].witness.t;
        for _ in 0..6 {
            let (na, va) = golden_max(|a| log_g_hat_objective(f, a * y, y, z), a_lo, a_hi, dom.refine_tol, 200);
            a = na;
            best.offer(Best { log_value: va, witness: Witness { j: a * y, t: y, i: z } });
            if y_lo < y_hi {
                let (ny, vy) = golden_max(|y| log_g_hat_objective(f, a * y, y, z), y_lo, y_hi, dom.refine_tol, 200);
                y = ny;
                best.offer(Best { log_value: vy, witness: Witness { j: a * y, t: y, i: z } });
            }
            // let the ratio drift if the optimum sits on the bracket edge
            a_lo = (a_lo.min(a) * 0.9).max(X_RATIO_RANGE.0);
            a_hi = (a_hi.max(a) * 1.1).min(X_RATIO_RANGE.1);
        }
    }
    best
}

/// `ln` of `ĝ·j·l(j) / (ĝ·t·l(t) + j·l(j) − t·l(j+i))`.
fn log_bound_expr(f: &LatencyFunction, ln_ghat: f64, j: f64, t: f64, i: f64) -> Result<f64, BoundsError> {
    let a = ln_ghat + t.ln() + f.ln_unchecked(t);
    let p = j.ln() + f.ln_unchecked(j);
    let q = t.ln() + f.ln_unchecked(j + i);
    let ln_d = if p >= q {
        log_sum_exp([a, log_diff_exp(p, q)])
    } else {
        log_diff_exp(log_sum_exp([a, p]), q)
    };
    if !(ln_d - a.max(p) > DEGENERATE_REL.ln()) {
        return Err(BoundsError::DegenerateDenominator { j, t, i });
    }
    Ok(ln_ghat + p - ln_d)
}

/// Best bound expression over `j >= x(t, i)` for one `(t, i)`.
fn best_over_j(f: &LatencyFunction, ln_ghat: f64, t: f64, i: f64, tol: f64) -> Result<Best, BoundsError> {
    let Some((lg, x)) = log_g(f, t, i) else { return Ok(Best::none()) };
    // at j = x the expression equals g(t, i)
    let mut best = Best { log_value: lg, witness: Witness { j: x, t, i } };
    let js = log_grid(x, x * J_SPAN, J_POINTS);
    let mut vals = vec![best];
    for &j in &js[1..] {
        vals.push(Best { log_value: log_bound_expr(f, ln_ghat, j, t, i)?, witness: Witness { j, t, i } });
    }
    if let Some(k) = argbest(&vals) {
        best.offer(vals[k]);
        let (a, b) = bracket(&js, k);
        let a = if k <= 1 { js[1] } else { a };
        if a < b {
            let obj = |j: f64| log_bound_expr(f, ln_ghat, j, t, i).unwrap_or(f64::NEG_INFINITY);
            let (j, v) = golden_max(obj, a, b, tol, 200);
            log_bound_expr(f, ln_ghat, j, t, i)?;
            best.offer(Best { log_value: v, witness: Witness { j, t, i } });
        }
    }
    Ok(best)
}

fn poa_level(f: &LatencyFunction, dom: &SearchDomain, ln_ghat: f64) -> Result<Best, BoundsError> {
    let mut best = Best::none();
    for i in dom.sorted_i() {
        let ts = dom.t_grid(i);
        let vals = ts
            .par_iter()
            .map(|&t| best_over_j(f, ln_ghat, t, i, dom.refine_tol))
            .collect::<Result<Vec<Best>, BoundsError>>()?;
        let Some(k) = argbest(&vals) else { continue };
        best.offer(vals[k]);
        let (a, b) = bracket(&ts, k);
        if a < b {
            let obj = |t: f64| best_over_j(f, ln_ghat, t, i, dom.refine_tol).map_or(f64::NEG_INFINITY, |b| b.log_value);
            let (t, _) = golden_max(obj, a, b, dom.refine_tol, 200);
            best.offer(best_over_j(f, ln_ghat, t, i, dom.refine_tol)?);
        }
    }
    Ok(best)
}

/// Maximum over the whole domain, plus the maxima over the slab
/// `[t_max·2^(k-1), t_max·2^k]` added by each doubling `k = 0..=3`.
struct Scan {
    full: Best,
    slabs: Vec<Best>,
}

fn slab(dom: &SearchDomain, k: usize) -> SearchDomain {
    let hi = dom.t_max * 2f64.powi(k as i32);
    SearchDomain { t_min: (hi / 2.0).max(dom.t_min), t_max: hi, ..dom.clone() }
}

fn scan(dom: &SearchDomain, eval: impl Fn(&SearchDomain) -> Best) -> Scan {
    Scan { full: eval(dom), slabs: (0..=DOUBLINGS).map(|k| eval(&slab(dom, k))).collect() }
}

/// The maximum keeps growing at the boundary: every doubling's slab beats
/// the previous one by more than `GROWTH_TOL`. An interior peak can hide
/// slow unbounded growth from the plain running maximum, hence the slabs.
fn grows(slabs: &[Best]) -> bool {
    slabs.len() > DOUBLINGS && slabs.windows(2).all(|w| w[1].log_value - w[0].log_value > GROWTH_TOL.ln_1p())
}

fn estimate(sc: &Scan, dom: &SearchDomain) -> Estimate {
    let infinite = grows(&sc.slabs);
    let last = sc.slabs[sc.slabs.len() - 1];
    Estimate {
        value: if infinite { Bound::Infinite } else { Bound::Finite(sc.full.log_value.exp()) },
        log_value: if infinite { f64::INFINITY } else { sc.full.log_value },
        witness: if infinite { last.witness } else { sc.full.witness },
        trace: sc
            .slabs
            .iter()
            .enumerate()
            .map(|(k, b)| TracePoint { t: dom.t_max * 2f64.powi(k as i32), log_value: b.log_value })
            .collect(),
    }
}

/// Smallest `t` in the domain above which `l` is positive, when `l`
/// vanishes somewhere inside the domain.
fn zero_edge(f: &LatencyFunction, dom: &SearchDomain) -> Option<f64> {
    let grid = log_grid(dom.t_min, dom.t_max, dom.grid_points);
    let positive = |t: f64| f.ln_unchecked(t).is_finite();
    let k = grid.windows(2).rposition(|w| !positive(w[0]) && positive(w[1]))?;
    let (mut lo, mut hi) = (grid[k], grid[k + 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if positive(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

const EDGE_OFFSETS: [f64; 4] = [1e-2, 1e-4, 1e-6, 1e-8];

/// g probed at `t0·(1+δ)` for shrinking `δ`, using the largest admissible
/// `i`. Diverges when `l(t)` tends to zero while the triple stays put.
fn edge_estimate(f: &LatencyFunction, dom: &SearchDomain) -> Option<Estimate> {
    let t0 = zero_edge(f, dom)?;
    let mut trace = Vec::new();
    let mut witness = None;
    for d in EDGE_OFFSETS {
        let t = t0 * (1.0 + d);
        let i = dom.sorted_i().into_iter().rfind(|&i| i <= t)?;
        let (lg, x) = log_g(f, t, i)?;
        trace.push(TracePoint { t, log_value: lg });
        witness = Some(Witness { j: x, t, i });
    }
    grows_along(&trace).then(|| Estimate {
        value: Bound::Infinite,
        log_value: f64::INFINITY,
        witness: witness.expect("non-empty trace"),
        trace,
    })
}

fn grows_along(trace: &[TracePoint]) -> bool {
    trace.len() > DOUBLINGS && trace.windows(2).all(|w| w[1].log_value - w[0].log_value > GROWTH_TOL.ln_1p())
}

fn g_star_estimate(sc: &Scan, f: &LatencyFunction, dom: &SearchDomain) -> Estimate {
    let est = estimate(sc, dom);
    if est.value.is_infinite() {
        return est;
    }
    edge_estimate(f, dom).unwrap_or(est)
}

pub fn g_star(f: &LatencyFunction, w: f64, dom: &SearchDomain) -> Result<Estimate, BoundsError> {
    dom.validate(w)?;
    Ok(g_star_estimate(&scan(dom, |d| g_star_level(f, d)), f, dom))
}

pub fn g_hat(f: &LatencyFunction, w: f64, dom: &SearchDomain) -> Result<Estimate, BoundsError> {
    dom.validate(w)?;
    Ok(estimate(&scan(dom, |d| g_hat_level(f, d)), dom))
}

pub fn poa_bound(f: &LatencyFunction, w: f64, dom: &SearchDomain) -> Result<Estimate, BoundsError> {
    Ok(analyze(f, w, dom)?.poa_bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Finite,
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub latency: String,
    pub w: f64,
    pub g_star: Estimate,
    pub g_hat: Estimate,
    pub poa_bound: Estimate,
    pub triples_found: Vec<OrderedTriple>,
    /// Multiple of the smallest `i` closest to the bound's witness `t`.
    pub nearest_achievable_t: f64,
}

impl BoundReport {
    pub fn verdict(&self) -> Verdict {
        if self.poa_bound.value.is_infinite() {
            Verdict::Infinite
        } else {
            Verdict::Finite
        }
    }

    pub fn to_json(&self) -> Value {
        let est = |e: &Estimate| serde_json::to_value(e.value).expect("bound serializes");
        let wit = |e: &Estimate| serde_json::to_value(e.witness).expect("witness serializes");
        let evidence = |e: &Estimate| serde_json::to_value(e.divergence_evidence()).expect("trace serializes");
        json!({
            "latency": self.latency,
            "w": self.w,
            "g_star": est(&self.g_star),
            "g_hat": est(&self.g_hat),
            "poa_bound": est(&self.poa_bound),
            "witnesses": {
                "g_star": wit(&self.g_star),
                "g_hat": wit(&self.g_hat),
                "poa_bound": wit(&self.poa_bound),
            },
            "verdict": self.verdict(),
            "triples": self.triples_found,
            "divergence_evidence": {
                "g_star": evidence(&self.g_star),
                "g_hat": evidence(&self.g_hat),
                "poa_bound": evidence(&self.poa_bound),
            },
            "nearest_achievable_t": self.nearest_achievable_t,
            "g_hat_z_range": "z in i_values, y >= z",
        })
    }
}

/// Computes g*, ĝ and the price-of-anarchy bound together.
pub fn analyze(f: &LatencyFunction, w: f64, dom: &SearchDomain) -> Result<BoundReport, BoundsError> {
    dom.validate(w)?;
    let gs = scan(dom, |d| g_star_level(f, d));
    let gh = scan(dom, |d| g_hat_level(f, d));
    let g_star = g_star_estimate(&gs, f, dom);
    let g_hat = estimate(&gh, dom);

    let poa_bound = if g_hat.value.is_infinite() || g_star.value.is_infinite() {
        let src = if g_star.value.is_infinite() { &g_star } else { &g_hat };
        Estimate { value: Bound::Infinite, log_value: f64::INFINITY, witness: src.witness, trace: src.trace.clone() }
    } else {
        let mut full = poa_level(f, dom, gh.full.log_value)?;
        full.offer(gs.full);
        // ĝ over the whole range up to each slab's end
        let mut ln_ghat = gh.full.log_value;
        let mut slabs = Vec::with_capacity(gs.slabs.len());
        for k in 0..gs.slabs.len() {
            ln_ghat = ln_ghat.max(gh.slabs[k].log_value);
            let mut b = poa_level(f, &slab(dom, k), ln_ghat)?;
            b.offer(gs.slabs[k]);
            slabs.push(b);
        }
        estimate(&Scan { full, slabs }, dom)
    };

    let mut triples_found = Vec::new();
    for wt in [g_star.witness, poa_bound.witness] {
        if wt.t.is_finite() && wt.i > 0.0 && wt.t >= wt.i {
            if let Some(tr) = triple_root(f, wt.t, wt.i) {
                if !triples_found.contains(&tr) {
                    triples_found.push(tr);
                }
            }
        }
    }
    let unit = dom.sorted_i()[0];
    let nearest_achievable_t = if poa_bound.witness.t.is_finite() {
        ((poa_bound.witness.t / unit).round().max(1.0)) * unit
    } else {
        f64::NAN
    };
    Ok(BoundReport { latency: f.label(), w, g_star, g_hat, poa_bound, triples_found, nearest_achievable_t })
}

/// Predicted lower-bound growth of the price of anarchy at each `t`.
///
/// Exponential-type functions use the ratio `x·l(x)/(t·l(t))` at the triple
/// through `(t, w)` when one exists, and `(1+δ)^{δt/w}` otherwise, where
/// `1+δ` is the limiting ratio `l(T+w)/l(T)`. Log-power functions use
/// `(1+ε)·(ln t)^ε`. Polynomially bounded functions repeat the constant bound.
pub fn predict_scaling(f: &LatencyFunction, w: f64, t_values: &[f64]) -> Result<Vec<(f64, f64)>, BoundsError> {
    match f.class() {
        LatencyClass::L1 => {
            let big_t = 1e3;
            let delta = f.ln_unchecked(big_t + w) - f.ln_unchecked(big_t);
            let delta = delta.exp_m1();
            Ok(t_values
                .iter()
                .map(|&t| {
                    let v = if t >= w {
                        log_g(f, t, w).map(|(_, x)| (x.ln() + f.ln_unchecked(x) - t.ln() - f.ln_unchecked(t)).exp())
                    } else {
                        None
                    };
                    (t, v.unwrap_or_else(|| (1.0 + delta).powf(delta * t / w)))
                })
                .collect())
        }
        LatencyClass::L2 => {
            let eps = f.epsilon().unwrap_or(1.0);
            Ok(t_values.iter().map(|&t| (t, (1.0 + eps) * t.ln().max(0.0).powf(eps))).collect())
        }
        LatencyClass::L3 => {
            let b = poa_bound(f, w, &SearchDomain::for_weight(w))?.value.value();
            Ok(t_values.iter().map(|&t| (t, b)).collect())
        }
    }
}
