//! Symmetric norms and Phi-moments evaluated exactly on step functions.
//!
//! `L_p + L_q` is evaluated through the Holmstedt expression
//! `(int_0^1 mu^p)^{1/p} + (int_1^infty mu^q)^{1/q}`, which is equivalent to
//! the K-functional norm up to constants but is not equal to it. Every norm
//! built on top of it (the `Z_E^p` family in particular) carries that
//! surrogate; [`NormSpec::uses_surrogate`] reports when this happens.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rearrangement::StepFunction;

pub const LUXEMBURG_RELATIVE_TOLERANCE: f64 = 1e-10;
pub const LUXEMBURG_MAX_ITERATIONS: usize = 200;
const LUXEMBURG_BRACKET: f64 = 1e12;

/// Grid used to validate convexity metadata of an Orlicz function.
const VALIDATION_POINTS: usize = 256;
const VALIDATION_SLACK: f64 = 1e-9;

#[derive(Clone)]
pub enum OrliczKind {
    /// `M_{p,q}(t) = p t^q` on `[0,1)`, `q t^p + p - q` on `[1, infty)`.
    Mpq { p: f64, q: f64 },
    /// `t^p`
    Power { p: f64 },
    /// `t^p log(1 + t^q)`
    PowerLog { p: f64, q: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for OrliczKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrliczKind::Mpq { p, q } => write!(f, "Mpq({p}, {q})"),
            OrliczKind::Power { p } => write!(f, "Power({p})"),
            OrliczKind::PowerLog { p, q } => write!(f, "PowerLog({p}, {q})"),
            OrliczKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// A convex `Phi` on `[0, infty)` together with its declared convexity
/// (`t -> Phi(t^{1/p})` convex) and concavity (`t -> Phi(t^{1/q})` concave)
/// exponents.
#[derive(Clone, Debug)]
pub struct OrliczFunction {
    kind: OrliczKind,
    p_convex: f64,
    q_concave: f64,
    label: String,
}

impl OrliczFunction {
    /// Builds and validates the declared metadata on a log-spaced grid.
    pub fn new(kind: OrliczKind, p_convex: f64, q_concave: f64, label: impl Into<String>) -> Result<Self> {
        let phi = OrliczFunction { kind, p_convex, q_concave, label: label.into() };
        phi.validate()?;
        Ok(phi)
    }

    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        p_convex: f64,
        q_concave: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        Self::new(OrliczKind::Custom(Arc::new(f)), p_convex, q_concave, label)
    }

    /// The `M_{p,q}` family; `p`-convex and `q`-concave.
    pub fn mpq(p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0 && q >= p && q.is_finite()) {
            return Err(Error::InvalidOrlicz(format!("M_{{p,q}} needs 1 <= p <= q < inf, got p={p}, q={q}")));
        }
        Self::new(OrliczKind::Mpq { p, q }, p, q, format!("M:{},{}", fmt_num(p), fmt_num(q)))
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidOrlicz(format!("t^p needs 1 <= p < inf, got {p}")));
        }
        Self::new(OrliczKind::Power { p }, p, p, format!("pow:{}", fmt_num(p)))
    }

    /// `t^p log(1 + t^q)`: `p`-convex and `(p+q)`-concave.
    pub fn power_log(p: f64, q: f64) -> Result<Self> {
        if !(p > 1.0 && q > 0.0) {
            return Err(Error::InvalidOrlicz(format!("t^p log(1+t^q) needs p > 1, q > 0, got p={p}, q={q}")));
        }
        Self::new(OrliczKind::PowerLog { p, q }, p, p + q, format!("tplog:{},{}", fmt_num(p), fmt_num(q)))
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        let t = t.abs();
        match &self.kind {
            OrliczKind::Mpq { p, q } => {
                if t < 1.0 {
                    p * t.powf(*q)
                } else {
                    q * t.powf(*p) + p - q
                }
            }
            OrliczKind::Power { p } => t.powf(*p),
            OrliczKind::PowerLog { p, q } => t.powf(*p) * t.powf(*q).ln_1p(),
            OrliczKind::Custom(f) => f(t),
        }
    }

    pub fn p_convex(&self) -> f64 {
        self.p_convex
    }

    pub fn q_concave(&self) -> f64 {
        self.q_concave
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &OrliczKind {
        &self.kind
    }

    fn validate(&self) -> Result<()> {
        let (p, q) = (self.p_convex, self.q_concave);
        if !(p >= 1.0 && q >= p && q.is_finite()) {
            return Err(Error::InvalidOrlicz(format!("{}: need 1 <= p_convex <= q_concave < inf", self.label)));
        }
        if self.evaluate(0.0) != 0.0 {
            return Err(Error::InvalidOrlicz(format!("{}: Phi(0) != 0", self.label)));
        }
        let grid: Vec<f64> = (0..VALIDATION_POINTS)
            .map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / (VALIDATION_POINTS - 1) as f64))
            .collect();
        let values: Vec<f64> = grid.iter().map(|&t| self.evaluate(t)).collect();
        for w in values.windows(2) {
            if w[1] < w[0] - VALIDATION_SLACK * (1.0 + w[0].abs()) {
                return Err(Error::InvalidOrlicz(format!("{}: not nondecreasing", self.label)));
            }
        }
        let three_point = |exponent: f64, convex: bool| -> bool {
            let g: Vec<f64> = grid.iter().map(|&s| self.evaluate(s.powf(1.0 / exponent))).collect();
            (1..grid.len() - 1).all(|i| {
                let (s0, s1, s2) = (grid[i - 1], grid[i], grid[i + 1]);
                let chord = g[i - 1] + (g[i + 1] - g[i - 1]) * (s1 - s0) / (s2 - s0);
                let slack = VALIDATION_SLACK * (1.0 + chord.abs());
                if convex {
                    g[i] <= chord + slack
                } else {
                    g[i] >= chord - slack
                }
            })
        };
        if !three_point(p, true) {
            return Err(Error::InvalidOrlicz(format!("{}: not {p}-convex", self.label)));
        }
        if !three_point(q, false) {
            return Err(Error::InvalidOrlicz(format!("{}: not {q}-concave", self.label)));
        }
        Ok(())
    }

    /// Parses `M:p,q`, `pow:p` or `tplog:p,q`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, args) = text
            .split_once(':')
            .ok_or_else(|| Error::MalformedSpec(format!("Orlicz function `{text}` lacks `name:args`")))?;
        let nums = parse_numbers(args)?;
        match (name.trim(), nums.as_slice()) {
            ("M", [p, q]) => Self::mpq(*p, *q),
            ("pow", [p]) => Self::power(*p),
            ("tplog", [p, q]) => Self::power_log(*p, *q),
            _ => Err(Error::MalformedSpec(format!("unknown Orlicz function `{text}`"))),
        }
    }
}

/// `tau(Phi(|x|)) = int_0^infty Phi(mu(t)) dt`
pub fn phi_moment(phi: &OrliczFunction, mu: &StepFunction) -> f64 {
    mu.steps().iter().map(|s| phi.evaluate(s.value) * s.length).sum()
}

/// `inf { lambda > 0 : int Phi(mu / lambda) <= 1 }` by geometric bisection.
pub fn luxemburg_norm(phi: &OrliczFunction, mu: &StepFunction) -> Result<f64> {
    if mu.is_zero() {
        return Ok(0.0);
    }
    let modular = |lambda: f64| phi_moment(phi, &mu.scale(1.0 / lambda));
    let top = mu.top();
    let (mut lo, mut hi) = (top / LUXEMBURG_BRACKET, top * LUXEMBURG_BRACKET);
    if modular(hi) > 1.0 || modular(lo) <= 1.0 {
        return Err(Error::BracketFailure);
    }
    for _ in 0..LUXEMBURG_MAX_ITERATIONS {
        if hi - lo <= LUXEMBURG_RELATIVE_TOLERANCE * hi {
            break;
        }
        let mid = (lo * hi).sqrt();
        if modular(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The norm of a symmetric space on `(0, infty)` (or `(0,1)` for inner
/// `Z_E` specs), identified by its kind and exponents.
#[derive(Clone, Debug)]
pub enum NormSpec {
    Lp(f64),
    /// `max(||f||_p, ||f||_q)`
    Cap(f64, f64),
    /// Holmstedt surrogate of `L_p + L_q`.
    Sum(f64, f64),
    Orlicz(OrliczFunction),
    /// `||mu chi_(0,1)||_E + ||f||_{L_1 + L_p}`
    ZE { inner: Box<NormSpec>, p: f64 },
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 || p == f64::INFINITY {
        Ok(())
    } else {
        Err(Error::MalformedSpec(format!("exponent {p} is below 1")))
    }
}

fn lp(mu: &StepFunction, p: f64) -> f64 {
    if p.is_infinite() {
        mu.top()
    } else {
        mu.integrate_power(p, 0.0, f64::INFINITY).expect("valid interval").powf(1.0 / p)
    }
}

impl NormSpec {
    pub fn ze(inner: NormSpec, p: f64) -> Self {
        NormSpec::ZE { inner: Box::new(inner), p }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NormSpec::Lp(p) => check_exponent(*p),
            NormSpec::Cap(p, q) | NormSpec::Sum(p, q) => {
                check_exponent(*p)?;
                check_exponent(*q)?;
                if p > q {
                    return Err(Error::MalformedSpec(format!("need p <= q, got ({p}, {q})")));
                }
                if p.is_infinite() && matches!(self, NormSpec::Sum(..)) {
                    return Err(Error::MalformedSpec("L_inf + L_inf is not supported".into()));
                }
                Ok(())
            }
            NormSpec::Orlicz(_) => Ok(()),
            NormSpec::ZE { inner, p } => {
                check_exponent(*p)?;
                inner.validate()
            }
        }
    }

    /// `||mu||` in this space.
    pub fn norm(&self, mu: &StepFunction) -> Result<f64> {
        self.validate()?;
        self.norm_unchecked(mu)
    }

    fn norm_unchecked(&self, mu: &StepFunction) -> Result<f64> {
        Ok(match self {
            NormSpec::Lp(p) => lp(mu, *p),
            NormSpec::Cap(p, q) => lp(mu, *p).max(lp(mu, *q)),
            NormSpec::Sum(p, q) => {
                let head = mu.integrate_power(*p, 0.0, 1.0)?.powf(1.0 / p);
                let tail = if q.is_infinite() {
                    // sup of mu over (1, inf) is mu(1) by right continuity
                    mu.eval(1.0)
                } else {
                    mu.integrate_power(*q, 1.0, f64::INFINITY)?.powf(1.0 / q)
                };
                head + tail
            }
            NormSpec::Orlicz(phi) => luxemburg_norm(phi, mu)?,
            NormSpec::ZE { inner, p } => {
                inner.norm_unchecked(&mu.restrict(0.0, 1.0)?)? + NormSpec::Sum(1.0, *p).norm_unchecked(mu)?
            }
        })
    }

    /// True when the value depends on the Holmstedt `L_p + L_q` surrogate.
    pub fn uses_surrogate(&self) -> bool {
        match self {
            NormSpec::Sum(p, q) => p != q,
            NormSpec::ZE { inner, p } => *p != 1.0 || inner.uses_surrogate(),
            _ => false,
        }
    }

    /// Smallest and largest finite exponents involved, used to check the
    /// `1 < p <= q < infty` hypotheses of the inequalities.
    pub fn exponent_range(&self) -> (f64, f64) {
        match self {
            NormSpec::Lp(p) => (*p, *p),
            NormSpec::Cap(p, q) | NormSpec::Sum(p, q) => (*p, *q),
            NormSpec::Orlicz(phi) => (phi.p_convex(), phi.q_concave()),
            NormSpec::ZE { inner, .. } => inner.exponent_range(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, body) = text
            .split_once('(')
            .filter(|_| text.ends_with(')'))
            .ok_or_else(|| Error::MalformedSpec(format!("`{text}` is not of the form name(args)")))?;
        let body = &body[..body.len() - 1];
        let spec = match head.trim() {
            "Lp" => match parse_numbers(body)?.as_slice() {
                [p] => NormSpec::Lp(*p),
                _ => return Err(Error::MalformedSpec(format!("`{text}` needs one exponent"))),
            },
            "cap" | "sum" => match parse_numbers(body)?.as_slice() {
                [p, q] if head.trim() == "cap" => NormSpec::Cap(*p, *q),
                [p, q] => NormSpec::Sum(*p, *q),
                _ => return Err(Error::MalformedSpec(format!("`{text}` needs two exponents"))),
            },
            "orlicz" => NormSpec::Orlicz(OrliczFunction::parse(body)?),
            h if h.starts_with("ZE") => {
                let p = parse_number(&h[2..])?;
                NormSpec::ze(NormSpec::parse(body)?, p)
            }
            _ => return Err(Error::MalformedSpec(format!("unknown norm `{head}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::Lp(p) => write!(f, "Lp({})", fmt_num(*p)),
            NormSpec::Cap(p, q) => write!(f, "cap({},{})", fmt_num(*p), fmt_num(*q)),
            NormSpec::Sum(p, q) => write!(f, "sum({},{})", fmt_num(*p), fmt_num(*q)),
            NormSpec::Orlicz(phi) => write!(f, "orlicz({})", phi.label()),
            NormSpec::ZE { inner, p } => write!(f, "ZE{}({inner})", fmt_num(*p)),
        }
    }
}

/// Splits a comma-separated list of specs, ignoring commas inside parentheses.
pub fn split_spec_list(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur).trim().to_string());
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

pub(crate) fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        "inf".to_string()
    } else {
        format!("{x}")
    }
}

fn parse_number(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|_| Error::MalformedSpec(format!("`{t}` is not a number"))),
    }
}

fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_number).collect()
}
