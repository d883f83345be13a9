//! Greedy approximation of rationals by products of minimum record holders.
//!
//! For a target `t` in `(1, a)`, `sigma_0` is the largest record `u` below
//! `t`; each further step multiplies by the first `u` (largest) below
//! `t / sigma_j`. Every product stays below `t`, so the product law never
//! wraps. Other positive targets are first scaled by a power of `a`.

use std::cmp::Ordering;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::decimal::{self, Quantity};
use crate::element::{Element, ElementRepr, ProductClass};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::power::PowerProduct;
use crate::records::PairSequence;

/// Default budget of greedy steps.
pub const DEFAULT_MAX_STEPS: u64 = 10_000;
/// Pair-sequence steps the lazy record chain may take per approximation.
const PAIR_BUDGET: u64 = 1_000_000;
const GAP_DIGITS: u32 = 6;

/// A positive rational, kept reduced.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Target(BigRational);

impl Target {
    pub fn new(r: BigRational) -> Result<Target> {
        if !r.is_positive() {
            return Err(Error::OutOfRange(format!("target {r} is not positive")));
        }
        Ok(Target(r))
    }

    pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Target> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::OutOfRange("zero denominator".into()));
        }
        Target::new(BigRational::new(num.into(), den))
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn num(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn den(&self) -> &BigInt {
        self.0.denom()
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Target> {
        Target::new(parse_rational(s)?)
    }
}

/// Parses `"n/d"`, decimals such as `"1.5"` or `"-0.25"`, and exponent forms
/// such as `"1e-6"`, all exactly.
pub fn parse_rational(input: &str) -> Result<BigRational> {
    let err = |reason: &str| Error::ParseRational {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    let s = input.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n.trim()).ok_or_else(|| err("bad numerator"))?;
        let d = parse_decimal(d.trim()).ok_or_else(|| err("bad denominator"))?;
        if d.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(n / d);
    }
    parse_decimal(s).ok_or_else(|| err("expected NUM/DEN or a decimal number"))
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("0{int}{frac}").parse().ok()?;
    let scale = exp as i64 - frac.len() as i64;
    let ten = BigInt::from(10u32);
    let mut r = if scale >= 0 {
        BigRational::from_integer(all * ten.pow(scale as u32))
    } else {
        BigRational::new(all, ten.pow((-scale) as u32))
    };
    if neg {
        r = -r;
    }
    Some(r)
}

fn exact_power_of(x: &BigInt, base: u64) -> Option<BigUint> {
    let mut x = x.to_biguint()?;
    let base = BigUint::from(base);
    let mut k = BigUint::zero();
    if x.is_zero() {
        return None;
    }
    while !x.is_one() {
        let (q, r) = x.div_rem(&base);
        if !r.is_zero() {
            return None;
        }
        x = q;
        k += 1u32;
    }
    Some(k)
}

fn in_unit_range(params: Params, t: &Target) -> bool {
    let a = BigRational::from_integer(params.a().into());
    *t.value() >= BigRational::one() && *t.value() < a
}

/// `Some(p)` when `t = phi(p)`. `t` must lie in `[1, a)`.
pub fn membership_test(params: Params, t: &Target) -> Result<Option<BigUint>> {
    if !in_unit_range(params, t) {
        return Err(Error::OutOfRange(format!("target {t} is outside [1, a)")));
    }
    let (Some(q), Some(p)) = (exact_power_of(t.num(), params.a()), exact_power_of(t.den(), params.b())) else {
        return Ok(None);
    };
    if q < p {
        return Ok(None);
    }
    let d = params.offset(&p)?;
    Ok((q == &p + d).then_some(p))
}

/// The strictly decreasing chain of distinct `u` values of the pair
/// sequence, generated on demand.
pub struct UChain {
    seq: PairSequence,
    chain: Vec<Element>,
    pair_steps: u64,
    budget: u64,
}

impl UChain {
    pub fn new(params: Params) -> Self {
        UChain::with_budget(params, PAIR_BUDGET)
    }

    pub fn with_budget(params: Params, budget: u64) -> Self {
        UChain {
            seq: PairSequence::new(params),
            chain: Vec::new(),
            pair_steps: 0,
            budget,
        }
    }

    pub fn terms(&self) -> &[Element] {
        &self.chain
    }

    /// Extends the chain by one distinct value; `false` once the budget is
    /// spent.
    fn grow(&mut self) -> Result<bool> {
        loop {
            if self.pair_steps > self.budget {
                return Ok(false);
            }
            let s = self.seq.next().expect("infinite sequence")?;
            self.pair_steps += 1;
            if self.chain.last() != Some(&s.u) {
                self.chain.push(s.u);
                return Ok(true);
            }
        }
    }

    /// Index of the first chain value strictly below `bound`, extending the
    /// chain as far as needed. `bound` must exceed 1.
    pub fn first_below(&mut self, bound: &PowerProduct) -> Result<Option<usize>> {
        let cap = |e: &Element| *e.params();
        let below = |e: &Element| -> Result<bool> {
            Ok(e.value().compare(bound, cap(e).bit_cap())? == Ordering::Less)
        };
        if self.chain.is_empty() && !self.grow()? {
            return Ok(None);
        }
        while !below(self.chain.last().unwrap())? {
            if !self.grow()? {
                return Ok(None);
            }
        }
        // decreasing chain: the predicate is false then true
        let (mut lo, mut hi) = (0usize, self.chain.len() - 1);
        if below(&self.chain[0])? {
            return Ok(Some(0));
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if below(&self.chain[mid])? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(hi))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxTrace {
    pub sigma: Vec<Element>,
    /// Chain index of the factor used at each step; entry 0 is `sigma_0`.
    pub u_indices: Vec<usize>,
    /// `t / sigma_j - 1` for each `j`, rounded.
    pub gaps: Vec<String>,
    /// Upper bound on the final `t / sigma - 1`.
    pub final_gap_bound: String,
    pub converged: bool,
    pub diagnostic: Option<String>,
}

fn ratio_gap(t: &PowerProduct, s: &Element) -> Quantity {
    Quantity::diff(t.div(&s.value()), PowerProduct::one())
}

/// Approximates `t` in `(1, a)` from below to relative tolerance `eps`.
pub fn approximate(params: Params, t: &Target, eps: &BigRational, max_steps: u64) -> Result<ApproxTrace> {
    if !eps.is_positive() {
        return Err(Error::OutOfRange("tolerance must be positive".into()));
    }
    if let Some(p) = membership_test(params, t)? {
        return Err(Error::TargetInF { p });
    }
    let cap = params.bit_cap();
    let tp = PowerProduct::from_rational(t.value());
    let goal = PowerProduct::from_rational(&(t.value() / (BigRational::one() + eps)));
    let mut chain = UChain::new(params);

    let Some(i0) = chain.first_below(&tp)? else {
        return Err(Error::OutOfRange("record chain budget exhausted before the first term".into()));
    };
    let mut sigma = vec![chain.terms()[i0].clone()];
    let mut u_indices = vec![i0];
    let mut gaps = vec![decimal::render(&ratio_gap(&tp, &sigma[0]), GAP_DIGITS, cap)?];
    let mut diagnostic = None;

    let mut converged = false;
    loop {
        let s = sigma.last().unwrap();
        // t < s (1 + eps)  <=>  s > t / (1 + eps)
        if s.value().compare(&goal, cap)? == Ordering::Greater {
            converged = true;
            break;
        }
        if sigma.len() as u64 > max_steps {
            diagnostic = Some(format!("step budget of {max_steps} exhausted"));
            break;
        }
        let rest = tp.div(&s.value());
        let Some(i) = chain.first_below(&rest)? else {
            diagnostic = Some("record chain budget exhausted".into());
            break;
        };
        let u = chain.terms()[i].clone();
        if s.product_class(&u)? != ProductClass::BelowA {
            return Err(Error::InvalidSequence("greedy product reached a".into()));
        }
        let next = s.star(&u)?;
        gaps.push(decimal::render(&ratio_gap(&tp, &next), GAP_DIGITS, cap)?);
        sigma.push(next);
        u_indices.push(i);
    }
    let final_gap_bound = decimal::render_upper(&ratio_gap(&tp, sigma.last().unwrap()), 3, cap)?;
    Ok(ApproxTrace {
        sigma,
        u_indices,
        gaps,
        final_gap_bound,
        converged,
        diagnostic,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledResult {
    pub k: i64,
    /// `x / a^k`, in `[1, a)`.
    pub scaled: Target,
    pub trace: Option<ApproxTrace>,
    pub exact_hit: Option<Element>,
}

/// The `k` with `a^k <= x < a^(k+1)`.
pub fn coset_exponent(params: Params, x: &Target) -> i64 {
    let ln = |v: &BigInt| {
        let bits = v.bits();
        let shift = bits.saturating_sub(60);
        (v >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
    };
    let a = BigRational::from_integer(params.a().into());
    let est = ((ln(x.num()) - ln(x.den())) / (params.a() as f64).ln()).floor() as i64;
    let mut k = est;
    while Pow::pow(&a, k) > *x.value() {
        k -= 1;
    }
    while Pow::pow(&a, k + 1) <= *x.value() {
        k += 1;
    }
    k
}

/// Approximates any positive rational inside the coset `a^k F`.
pub fn approximate_positive(params: Params, x: &Target, eps: &BigRational, max_steps: u64) -> Result<ScaledResult> {
    let k = coset_exponent(params, x);
    let a = BigRational::from_integer(params.a().into());
    let scaled = Target::new(x.value() / Pow::pow(&a, k))?;
    if let Some(p) = membership_test(params, &scaled)? {
        return Ok(ScaledResult {
            k,
            scaled,
            trace: None,
            exact_hit: Some(params.phi(p)?),
        });
    }
    let trace = approximate(params, &scaled, eps, max_steps)?;
    Ok(ScaledResult {
        k,
        scaled,
        trace: Some(trace),
        exact_hit: None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    #[serde(with = "crate::bigser")]
    pub sigma_p: BigUint,
    #[serde(with = "crate::bigser")]
    pub sigma_d: BigUint,
    pub u_index: usize,
    pub gap_approx: String,
}

/// JSON form of a trace or scaled result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceDocument {
    pub k: Option<i64>,
    pub target: String,
    pub steps: Vec<TraceStep>,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_gap_bound: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_hit: Option<ElementRepr>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl TraceDocument {
    pub fn from_trace(k: Option<i64>, target: &Target, trace: &ApproxTrace) -> Self {
        TraceDocument {
            k,
            target: target.to_string(),
            steps: trace
                .sigma
                .iter()
                .zip(&trace.u_indices)
                .zip(&trace.gaps)
                .map(|((s, &u_index), g)| TraceStep {
                    sigma_p: s.p().clone(),
                    sigma_d: s.d().clone(),
                    u_index,
                    gap_approx: g.clone(),
                })
                .collect(),
            converged: trace.converged,
            final_gap_bound: Some(trace.final_gap_bound.clone()),
            exact_hit: None,
            diagnostic: trace.diagnostic.clone(),
        }
    }

    pub fn from_scaled(r: &ScaledResult) -> Self {
        match (&r.trace, &r.exact_hit) {
            (Some(t), _) => TraceDocument::from_trace(Some(r.k), &r.scaled, t),
            (None, hit) => TraceDocument {
                k: Some(r.k),
                target: r.scaled.to_string(),
                steps: Vec::new(),
                converged: true,
                final_gap_bound: None,
                exact_hit: hit.as_ref().map(|e| e.repr()),
                diagnostic: None,
            },
        }
    }
}
