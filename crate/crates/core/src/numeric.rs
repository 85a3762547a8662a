//! Log-domain arithmetic and deterministic 1-D search primitives.

/// `ln(Σ exp(v))` over the given log-values. Returns `-inf` for an empty
/// input or when every term is `-inf`.
pub fn log_sum_exp<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let vals: Vec<f64> = values.into_iter().collect();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = vals.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `ln(exp(a) - exp(b))`, or `-inf` when `b >= a` (non-positive difference).
pub fn log_diff_exp(a: f64, b: f64) -> f64 {
    if b >= a || a == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + (-(b - a).exp_m1()).ln()
}

/// `n` log-spaced points covering `[lo, hi]` inclusive. Both ends are
/// returned exactly.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo, "log_grid needs 0 < lo <= hi");
    if n <= 1 || hi == lo {
        return vec![lo];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|k| (llo + step * k as f64).exp()).collect();
    out[0] = lo;
    out[n - 1] = hi;
    out
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Returns `(x_best, f_best)`; the endpoints are evaluated as well so a
/// boundary maximum is never lost to the interior probes.
pub fn golden_max<F>(f: F, mut a: f64, mut b: f64, rel_tol: f64, max_iter: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (fa0, fb0) = (f(a), f(b));
    let (a0, b0) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    if fa0 >= best.1 {
        best = (a0, fa0);
    }
    if fb0 > best.1 {
        best = (b0, fb0);
    }
    best
}

/// Bisection for a sign change of `h` on `[lo, hi]` where `h(lo) < 0 <= h(hi)`.
/// Returns the smallest bracket end at which `h >= 0`, to relative `rel_tol`.
pub fn bisect_up<F>(h: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo) <= rel_tol * hi {
            break;
        }
        if h(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Relative closeness check used throughout the test-suites.
pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
