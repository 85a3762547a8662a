//! Latency functions: the built-in families, their growth classes, and
//! direct / log-domain evaluation.
//!
//! Every family is non-decreasing and positive on `x > 0` (the poly-log
//! product may touch zero below the root of its log factor). Direct
//! evaluation saturates to `+inf`; anything that forms ratios of latencies
//! should go through [`LatencyFunction::log_eval`] instead.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{log_grid, log_sum_exp};
use crate::rational::big_from_f64;

/// Argument at which `Γ(x + 1)` attains its minimum on `x > 0`.
const GAMMA_ARGMIN: f64 = 0.461_632_144_968_362_3;
/// Argument at which `x^x` attains its minimum (`1/e`).
const SELF_POWER_ARGMIN: f64 = 0.367_879_441_171_442_33;
/// `Γ(x + 1)` overflows f64 past this argument.
const GAMMA_OVERFLOW_ARG: f64 = 170.6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatencyError {
    #[error("latency argument must be positive, got {0}")]
    Domain(f64),
    #[error("unknown latency family `{0}`")]
    UnknownFamily(String),
    #[error("invalid parameters for {family}: {reason}")]
    InvalidParams { family: Family, reason: String },
    #[error("{family} with params {params:?} is not non-decreasing near x = {at}")]
    NotMonotone { family: Family, params: Vec<f64>, at: f64 },
}

/// Growth class of a latency function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LatencyClass {
    /// Superpolynomial with `lim l(x+i)/l(x) > 1` (exponential-type).
    L1,
    /// Superpolynomial of the form `a·exp(ln^{1+ε} x)`; the ratio limit is 1.
    L2,
    /// Bounded above by a polynomial.
    L3,
}

impl fmt::Display for LatencyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LatencyClass::L1 => "L1",
            LatencyClass::L2 => "L2",
            LatencyClass::L3 => "L3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    PolySum,
    PolyLogProduct,
    ExpBase,
    PowerSelf,
    Factorial,
    ExpLogPower,
    PowerLog,
    Constant,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::PolySum,
        Family::PolyLogProduct,
        Family::ExpBase,
        Family::PowerSelf,
        Family::Factorial,
        Family::ExpLogPower,
        Family::PowerLog,
        Family::Constant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::PolySum => "poly_sum",
            Family::PolyLogProduct => "poly_log_product",
            Family::ExpBase => "exp_base",
            Family::PowerSelf => "power_self",
            Family::Factorial => "factorial",
            Family::ExpLogPower => "exp_log_power",
            Family::PowerLog => "power_log",
            Family::Constant => "constant",
        }
    }

    /// Class membership is fixed per family.
    pub fn class(self) -> LatencyClass {
        match self {
            Family::ExpBase | Family::PowerSelf | Family::Factorial => LatencyClass::L1,
            Family::ExpLogPower | Family::PowerLog => LatencyClass::L2,
            Family::PolySum | Family::PolyLogProduct | Family::Constant => LatencyClass::L3,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = LatencyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| LatencyError::UnknownFamily(s.to_string()))
    }
}

/// Parsed, family-specific shape.
#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// `Σ a_q x^q`
    Poly { coeffs: Vec<f64> },
    /// `(Σ a_q x^q) · max(0, Σ b_q ln^q x)`
    PolyLog { poly: Vec<f64>, logpoly: Vec<f64> },
    /// `c · a^x`
    Exp { base: f64, coef: f64 },
    /// `c · y^y`, `y = max(x, 1/e)`
    SelfPower { coef: f64 },
    /// `c · Γ(max(x, x₀) + 1)`
    Gamma { coef: f64 },
    /// `c · exp(max(0, ln x)^{1+ε})`
    ExpLog { coef: f64, eps: f64 },
    /// `c · x^{ln^ε x}` for `x ≥ 1`, `c` below.
    PowLog { coef: f64, eps: f64 },
    Const { value: f64 },
}

/// Wire form: `{"family": "poly_sum", "params": [0, 1]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySpec {
    pub family: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

/// An immutable, validated latency function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatencySpec", into = "LatencySpec")]
pub struct LatencyFunction {
    family: Family,
    params: Vec<f64>,
    class: LatencyClass,
    shape: Shape,
}

impl TryFrom<LatencySpec> for LatencyFunction {
    type Error = LatencyError;

    fn try_from(spec: LatencySpec) -> Result<Self, Self::Error> {
        LatencyFunction::new(spec.family.parse()?, spec.params)
    }
}

impl From<LatencyFunction> for LatencySpec {
    fn from(f: LatencyFunction) -> Self {
        LatencySpec { family: f.family.name().to_string(), params: f.params }
    }
}

impl LatencyFunction {
    /// Builds and validates a catalog function.
    ///
    /// Parameter layouts:
    /// - `poly_sum`: `[a_0, a_1, …, a_d]`
    /// - `poly_log_product`: `[n_a, a_0 … a_{n_a-1}, b_0 … b_m]`
    /// - `exp_base`: `[a]` or `[a, coef]`, `a > 1`
    /// - `power_self`, `factorial`: `[]` or `[coef]`
    /// - `exp_log_power`, `power_log`: `[coef, ε]`, `ε > 0`
    /// - `constant`: `[c]`
    pub fn new(family: Family, params: Vec<f64>) -> Result<Self, LatencyError> {
        let bad = |reason: &str| LatencyError::InvalidParams { family, reason: reason.to_string() };
        if params.iter().any(|p| !p.is_finite()) {
            return Err(bad("parameters must be finite"));
        }
        let positive_coef = |p: Option<&f64>| -> Result<f64, LatencyError> {
            match p {
                None => Ok(1.0),
                Some(&c) if c > 0.0 => Ok(c),
                Some(_) => Err(bad("coefficient must be positive")),
            }
        };
        let shape = match family {
            Family::PolySum => {
                if params.is_empty() || params.iter().all(|&a| a == 0.0) {
                    return Err(bad("need at least one non-zero coefficient"));
                }
                Shape::Poly { coeffs: params.clone() }
            }
            Family::PolyLogProduct => {
                let n_a = params.first().copied().ok_or_else(|| bad("missing coefficient count"))?;
                if n_a < 1.0 || n_a.fract() != 0.0 || n_a as usize + 1 >= params.len() {
                    return Err(bad("layout is [n_a, a_0..a_{n_a-1}, b_0..b_m] with n_a >= 1 and m >= 0"));
                }
                let n_a = n_a as usize;
                let poly = params[1..=n_a].to_vec();
                let logpoly = params[n_a + 1..].to_vec();
                if poly.iter().all(|&a| a == 0.0) || logpoly.iter().all(|&b| b == 0.0) {
                    return Err(bad("both factors need a non-zero coefficient"));
                }
                Shape::PolyLog { poly, logpoly }
            }
            Family::ExpBase => {
                if params.is_empty() || params.len() > 2 {
                    return Err(bad("layout is [a] or [a, coef]"));
                }
                if params[0] <= 1.0 {
                    return Err(bad("base must exceed 1"));
                }
                Shape::Exp { base: params[0], coef: positive_coef(params.get(1))? }
            }
            Family::PowerSelf | Family::Factorial => {
                if params.len() > 1 {
                    return Err(bad("layout is [] or [coef]"));
                }
                let coef = positive_coef(params.first())?;
                if family == Family::PowerSelf {
                    Shape::SelfPower { coef }
                } else {
                    Shape::Gamma { coef }
                }
            }
            Family::ExpLogPower | Family::PowerLog => {
                if params.len() != 2 {
                    return Err(bad("layout is [coef, eps]"));
                }
                let coef = positive_coef(params.first())?;
                if params[1] <= 0.0 {
                    return Err(bad("eps must be positive"));
                }
                if family == Family::ExpLogPower {
                    Shape::ExpLog { coef, eps: params[1] }
                } else {
                    Shape::PowLog { coef, eps: params[1] }
                }
            }
            Family::Constant => {
                if params.len() != 1 || params[0] <= 0.0 {
                    return Err(bad("layout is [c] with c > 0"));
                }
                Shape::Const { value: params[0] }
            }
        };
        let f = LatencyFunction { family, params, class: family.class(), shape };
        f.validate_on_grid()?;
        Ok(f)
    }

    pub fn poly(coeffs: &[f64]) -> Result<Self, LatencyError> {
        Self::new(Family::PolySum, coeffs.to_vec())
    }

    pub fn constant(c: f64) -> Result<Self, LatencyError> {
        Self::new(Family::Constant, vec![c])
    }

    pub fn exp_base(base: f64) -> Result<Self, LatencyError> {
        Self::new(Family::ExpBase, vec![base])
    }

    pub fn factorial() -> Self {
        Self::new(Family::Factorial, vec![]).expect("factorial is always valid")
    }

    pub fn exp_log_power(coef: f64, eps: f64) -> Result<Self, LatencyError> {
        Self::new(Family::ExpLogPower, vec![coef, eps])
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn class(&self) -> LatencyClass {
        self.class
    }

    /// Stable identifier used to key resource classes, e.g. `poly_sum[0,1]`.
    pub fn label(&self) -> String {
        let ps: Vec<String> = self.params.iter().map(|p| format!("{p}")).collect();
        format!("{}[{}]", self.family.name(), ps.join(","))
    }

    /// The ε of an L2 family.
    pub fn epsilon(&self) -> Option<f64> {
        match self.shape {
            Shape::ExpLog { eps, .. } | Shape::PowLog { eps, .. } => Some(eps),
            _ => None,
        }
    }

    /// `l(x)`, saturating to `+inf`.
    pub fn eval(&self, x: f64) -> Result<f64, LatencyError> {
        check_arg(x)?;
        Ok(self.eval_unchecked(x))
    }

    /// `ln l(x)`, computed analytically per family.
    pub fn log_eval(&self, x: f64) -> Result<f64, LatencyError> {
        check_arg(x)?;
        Ok(self.ln_unchecked(x))
    }

    /// `ln(l(x) / l(y))`.
    pub fn log_ratio(&self, x: f64, y: f64) -> Result<f64, LatencyError> {
        check_arg(x)?;
        check_arg(y)?;
        if x == y {
            return Ok(0.0);
        }
        Ok(self.ln_unchecked(x) - self.ln_unchecked(y))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Poly { coeffs } => horner(coeffs, x),
            Shape::PolyLog { poly, logpoly } => {
                let lf = horner(logpoly, x.ln()).max(0.0);
                horner(poly, x) * lf
            }
            Shape::Exp { base, coef } => coef * base.powf(x),
            Shape::SelfPower { coef } => {
                let y = x.max(SELF_POWER_ARGMIN);
                coef * y.powf(y)
            }
            Shape::Gamma { coef } => {
                let y = x.max(GAMMA_ARGMIN);
                if y > GAMMA_OVERFLOW_ARG {
                    f64::INFINITY
                } else {
                    coef * libm::tgamma(y + 1.0)
                }
            }
            Shape::ExpLog { .. } | Shape::PowLog { .. } => self.ln_unchecked(x).exp(),
            Shape::Const { value } => *value,
        }
    }

    pub(crate) fn ln_unchecked(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Poly { coeffs } => ln_poly(coeffs, x),
            Shape::PolyLog { poly, logpoly } => {
                let lf = horner(logpoly, x.ln());
                if lf <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    ln_poly(poly, x) + lf.ln()
                }
            }
            Shape::Exp { base, coef } => coef.ln() + x * base.ln(),
            Shape::SelfPower { coef } => {
                let y = x.max(SELF_POWER_ARGMIN);
                coef.ln() + y * y.ln()
            }
            Shape::Gamma { coef } => coef.ln() + libm::lgamma(x.max(GAMMA_ARGMIN) + 1.0),
            Shape::ExpLog { coef, eps } => coef.ln() + x.ln().max(0.0).powf(1.0 + eps),
            Shape::PowLog { coef, eps } => {
                let u = x.ln().max(0.0);
                coef.ln() + u * u.powf(*eps)
            }
            Shape::Const { value } => value.ln(),
        }
    }

    /// Exact `l(x)` for families with rational values at rational points
    /// (polynomials with float coefficients, which are dyadic rationals).
    pub fn eval_exact(&self, x: &BigRational) -> Option<BigRational> {
        match &self.shape {
            Shape::Poly { coeffs } => {
                let mut acc = BigRational::zero();
                for &a in coeffs.iter().rev() {
                    acc = acc * x + big_from_f64(a)?;
                }
                Some(acc)
            }
            Shape::Const { value } => big_from_f64(*value),
            _ => None,
        }
    }

    pub fn supports_exact(&self) -> bool {
        matches!(self.shape, Shape::Poly { .. } | Shape::Const { .. })
    }

    fn validate_on_grid(&self) -> Result<(), LatencyError> {
        let grid = log_grid(1e-3, 1e3, 1000);
        let mut prev = f64::NEG_INFINITY;
        for &x in &grid {
            let l = self.ln_unchecked(x);
            let allow_zero = matches!(self.shape, Shape::PolyLog { .. });
            if l.is_nan() || (l == f64::NEG_INFINITY && !allow_zero) {
                return Err(LatencyError::InvalidParams {
                    family: self.family,
                    reason: format!("not positive at x = {x}"),
                });
            }
            if l < prev - 1e-12 * prev.abs().max(1.0) {
                return Err(LatencyError::NotMonotone {
                    family: self.family,
                    params: self.params.clone(),
                    at: x,
                });
            }
            prev = prev.max(l);
        }
        Ok(())
    }
}

impl fmt::Display for LatencyFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn check_arg(x: f64) -> Result<(), LatencyError> {
    if x > 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(LatencyError::Domain(x))
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// `ln Σ a_q x^q`; log-sum-exp when every coefficient is non-negative so
/// large arguments never overflow.
fn ln_poly(coeffs: &[f64], x: f64) -> f64 {
    if coeffs.iter().all(|&a| a >= 0.0) {
        let lx = x.ln();
        log_sum_exp(
            coeffs
                .iter()
                .enumerate()
                .filter(|(_, &a)| a > 0.0)
                .map(|(q, &a)| a.ln() + q as f64 * lx),
        )
    } else {
        let v = horner(coeffs, x);
        if v > 0.0 {
            v.ln()
        } else if v == 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::NAN
        }
    }
}

/// The small fixed catalog used by the CLI, corpus generators and tests.
pub fn catalog() -> Vec<LatencyFunction> {
    vec![
        LatencyFunction::poly(&[0.0, 1.0]).unwrap(),
        LatencyFunction::poly(&[0.0, 0.0, 1.0]).unwrap(),
        LatencyFunction::new(Family::PolyLogProduct, vec![3.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap(),
        LatencyFunction::constant(5.0).unwrap(),
        LatencyFunction::exp_base(2.0).unwrap(),
        LatencyFunction::new(Family::PowerSelf, vec![]).unwrap(),
        LatencyFunction::factorial(),
        LatencyFunction::exp_log_power(1.0, 1.0).unwrap(),
        LatencyFunction::new(Family::PowerLog, vec![1.0, 1.0]).unwrap(),
    ]
}
