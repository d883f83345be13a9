//! Phase structure of the pair sequence.
//!
//! A phase is a maximal run of steps that all modify the same side. Phase
//! `eta` starts at pair index `head` and ends at `tail = head + lambda`; the
//! tail of one phase is the head of the next. Taking the tail of each phase
//! gives the synchronised sequences `tu`, `tv` and `tw = a / tv`.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::element::{BigRatio, Element, ProductClass};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::power::PowerProduct;
use crate::records::{generate_pairs, gaps, PairState, StopCriterion};

/// Which member of the pair a phase modifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    U,
    V,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::U => Side::V,
            Side::V => Side::U,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::U => "u",
            Side::V => "v",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub eta: u64,
    pub head: u64,
    pub tail: u64,
    pub lambda: u64,
    pub modifies: Side,
}

fn step_side(prev: &PairState, cur: &PairState) -> Result<Side> {
    if cur.index != prev.index + 1 {
        return Err(Error::InvalidSequence(format!("index {} follows {}", cur.index, prev.index)));
    }
    match (prev.u != cur.u, prev.v != cur.v) {
        (true, false) => Ok(Side::U),
        (false, true) => Ok(Side::V),
        _ => Err(Error::InvalidSequence(format!(
            "step {} must change exactly one of u and v",
            cur.index
        ))),
    }
}

/// Splits a prefix starting at `s_0` into its complete phases.
pub fn segment_phases(pairs: &[PairState]) -> Result<Vec<Phase>> {
    if pairs.first().map(|s| s.index) != Some(0) {
        return Err(Error::TooShort("the prefix must start at the initial pair".into()));
    }
    let sides = pairs
        .windows(2)
        .map(|w| step_side(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    let mut phases = Vec::new();
    let mut start = 0usize;
    for i in 1..=sides.len() {
        if i == sides.len() {
            break;
        }
        if sides[i] != sides[start] {
            phases.push(Phase {
                eta: phases.len() as u64 + 1,
                head: start as u64,
                tail: i as u64,
                lambda: (i - start) as u64,
                modifies: sides[start],
            });
            start = i;
        }
    }
    if phases.is_empty() {
        return Err(Error::TooShort("no complete phase in the prefix".into()));
    }
    Ok(phases)
}

/// Largest `n >= 0` with `holds(n)`, given that `holds` is true then false
/// and `holds(0)` is true. `est` is a starting guess.
fn highest(est: f64, holds: impl Fn(u64) -> Result<bool>) -> Result<u64> {
    let mut lo = if est.is_finite() && est > 0.0 {
        est.min(1e15) as u64
    } else {
        0
    };
    if !holds(lo)? {
        let mut hi = lo;
        let mut step = 1u64;
        loop {
            lo = hi.saturating_sub(step);
            if lo == 0 || holds(lo)? {
                break;
            }
            hi = lo;
            step *= 2;
        }
        return bisect(lo, hi, &holds);
    }
    let mut step = 1u64;
    loop {
        let hi = lo + step;
        if !holds(hi)? {
            return bisect(lo, hi, &holds);
        }
        lo = hi;
        step *= 2;
    }
}

/// `holds(lo)` is true, `holds(hi)` is false.
fn bisect(mut lo: u64, mut hi: u64, holds: &impl Fn(u64) -> Result<bool>) -> Result<u64> {
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Largest `n` with `x^n < y`, for `x > 1`.
fn highest_power_below(x: &PowerProduct, y: &PowerProduct, cap: u64) -> Result<u64> {
    let est = y.ln_approx() / x.ln_approx();
    highest(est, |n| Ok(x.pow(&BigInt::from(n)).compare(y, cap)? == Ordering::Less))
}

/// Length of the phase that starts with `(u_head, v_head)` and modifies
/// `side`: the largest `n` with `v u^n < a` for a `v` phase, and with
/// `1 < u (v/a)^n` for a `u` phase.
pub fn lambda_closed_form(u_head: &Element, v_head: &Element, side: Side) -> Result<u64> {
    let params = *u_head.params();
    params.ensure_same(v_head.params())?;
    let cap = params.bit_cap();
    let a = PowerProduct::integer(params.a());
    let u = u_head.value();
    let room = a.div(&v_head.value());
    match side {
        Side::V => highest_power_below(&u, &room, cap),
        Side::U => highest_power_below(&room, &u, cap),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartCase {
    /// `phi(1)^2 < a`: odd phases modify `v`.
    VFirst,
    /// `phi(1)^2 > a`: odd phases modify `u`.
    UFirst,
}

impl StartCase {
    pub fn of(params: Params) -> Result<StartCase> {
        let one = params.phi(1u32)?;
        Ok(match one.product_class(&one)? {
            ProductClass::BelowA => StartCase::VFirst,
            ProductClass::AtLeastA => StartCase::UFirst,
        })
    }

    fn first_side(self) -> Side {
        match self {
            StartCase::VFirst => Side::V,
            StartCase::UFirst => Side::U,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractedSequences {
    pub params: Params,
    pub tu: Vec<Element>,
    pub tv: Vec<Element>,
    pub tw: Vec<BigRatio>,
    pub start_case: StartCase,
}

/// `a / v = b^p / a^(q-1)`.
pub fn w_of(v: &Element) -> BigRatio {
    let params = v.params();
    let q = v.q();
    let den_exp = if q.is_zero() { BigUint::zero() } else { q - 1u32 };
    if v.p().is_zero() {
        return BigRatio::new(params.a(), BigUint::one(), 1, BigUint::zero());
    }
    BigRatio::new(params.b(), v.p().clone(), params.a(), den_exp)
}

/// Tails of phases `2i - 1` and `2i` give the `i`-th terms.
pub fn extract_sequences(pairs: &[PairState]) -> Result<ExtractedSequences> {
    let phases = segment_phases(pairs)?;
    if phases.len() < 2 {
        return Err(Error::TooShort("need at least two complete phases".into()));
    }
    let params = pairs[0].params();
    let start_case = StartCase::of(params)?;
    if phases[0].modifies != start_case.first_side() {
        return Err(Error::InvalidSequence("first phase disagrees with phi(1)^2 versus a".into()));
    }
    let one = pairs[0].u.clone();
    let mut tu = vec![one.clone()];
    let mut tv = vec![one];
    for pair in phases.chunks_exact(2) {
        for ph in pair {
            let tail = &pairs[ph.tail as usize];
            match ph.modifies {
                Side::U => tu.push(tail.u.clone()),
                Side::V => tv.push(tail.v.clone()),
            }
        }
    }
    let tw = tv.iter().map(w_of).collect();
    Ok(ExtractedSequences {
        params,
        tu,
        tv,
        tw,
        start_case,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RecursionReport {
    /// Number of transitions `i -> i + 1` checked.
    pub checked: usize,
    /// First `i` where the `(tu, tv)` recursion fails to reproduce term `i + 1`.
    pub uv_mismatch: Option<usize>,
    /// First `i` where the `(tu, tw)` recursion fails.
    pub uw_mismatch: Option<usize>,
    /// The exponent pair used at each step.
    pub lambdas: Vec<(u64, u64)>,
}

impl RecursionReport {
    pub fn matched(&self) -> bool {
        self.uv_mismatch.is_none() && self.uw_mismatch.is_none()
    }
}

fn same(x: &PowerProduct, y: &PowerProduct, cap: u64) -> Result<bool> {
    Ok(x.compare(y, cap)? == Ordering::Equal)
}

/// Recomputes every term from its predecessor by both recursions and
/// compares with the extracted terms.
pub fn verify_recursive_form(seqs: &ExtractedSequences) -> Result<RecursionReport> {
    let cap = seqs.params.bit_cap();
    let a = PowerProduct::integer(seqs.params.a());
    let n = seqs.tu.len().min(seqs.tv.len());
    let mut report = RecursionReport::default();
    for i in 0..n.saturating_sub(1) {
        report.checked += 1;
        let (u0, v0) = (seqs.tu[i].value(), seqs.tv[i].value());
        let (u1, v1) = (seqs.tu[i + 1].value(), seqs.tv[i + 1].value());
        let (w0, w1) = (seqs.tw[i].value(), seqs.tw[i + 1].value());

        let (l1, l2, uv_ok) = match seqs.start_case {
            StartCase::VFirst => {
                let l1 = highest_power_below(&u0, &a.div(&v0), cap)?;
                let nv = v0.mul(&u0.pow(&l1.into()));
                let l2 = highest_power_below(&a.div(&v1), &u0, cap)?;
                let nu = u0.mul(&v1.div(&a).pow(&l2.into()));
                (l1, l2, same(&nv, &v1, cap)? && same(&nu, &u1, cap)?)
            }
            StartCase::UFirst => {
                let l1 = highest_power_below(&a.div(&v0), &u0, cap)?;
                let nu = u0.mul(&v0.div(&a).pow(&l1.into()));
                let l2 = highest_power_below(&u1, &a.div(&v0), cap)?;
                let nv = v0.mul(&u1.pow(&l2.into()));
                (l1, l2, same(&nu, &u1, cap)? && same(&nv, &v1, cap)?)
            }
        };
        if !(uv_ok && l1 >= 1 && l2 >= 1) && report.uv_mismatch.is_none() {
            report.uv_mismatch = Some(i);
        }
        report.lambdas.push((l1, l2));

        let uw_ok = match seqs.start_case {
            StartCase::VFirst => {
                let k1 = highest_power_below(&u0, &w0, cap)?;
                let nw = w0.div(&u0.pow(&k1.into()));
                let k2 = highest_power_below(&w1, &u0, cap)?;
                let nu = u0.div(&w1.pow(&k2.into()));
                k1 >= 1 && k2 >= 1 && same(&nw, &w1, cap)? && same(&nu, &u1, cap)?
            }
            StartCase::UFirst => {
                let k1 = highest_power_below(&w0, &u0, cap)?;
                let nu = u0.div(&w0.pow(&k1.into()));
                let k2 = highest_power_below(&u1, &w0, cap)?;
                let nw = w0.div(&u1.pow(&k2.into()));
                k1 >= 1 && k2 >= 1 && same(&nu, &u1, cap)? && same(&nw, &w1, cap)?
            }
        };
        if !uw_ok && report.uw_mismatch.is_none() {
            report.uw_mismatch = Some(i);
        }
    }
    Ok(report)
}

/// First `i` at which the chain `1 < tu[i+1] < tw[i+1] < tu[i] < tw[i]`
/// (or, starting on `u`, `1 < tw[i+1] < tu[i+1] < tw[i] < tu[i]`) fails.
pub fn interleaving_failure(seqs: &ExtractedSequences) -> Result<Option<usize>> {
    let cap = seqs.params.bit_cap();
    let n = seqs.tu.len().min(seqs.tw.len());
    for i in 0..n.saturating_sub(1) {
        let u0 = seqs.tu[i].value();
        let u1 = seqs.tu[i + 1].value();
        let w0 = seqs.tw[i].value();
        let w1 = seqs.tw[i + 1].value();
        let chain = match seqs.start_case {
            StartCase::VFirst => [PowerProduct::one(), u1, w1, u0, w0],
            StartCase::UFirst => [PowerProduct::one(), w1, u1, w0, u0],
        };
        for pair in chain.windows(2) {
            if pair[0].compare(&pair[1], cap)? != Ordering::Less {
                return Ok(Some(i));
            }
        }
    }
    Ok(None)
}

/// First `i` at which `tv` fails to increase strictly.
pub fn tv_increase_failure(seqs: &ExtractedSequences) -> Result<Option<usize>> {
    for i in 0..seqs.tv.len().saturating_sub(1) {
        if seqs.tv[i].compare(&seqs.tv[i + 1])? != Ordering::Less {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Smallest `N` such that every sample after index `N` lies strictly inside
/// `(limit / (1 + eps), limit (1 + eps))`; `None` if the last sample is
/// outside (or there are no samples).
pub fn convergence_band(
    samples: &[PowerProduct],
    limit: &BigRational,
    eps: &BigRational,
    bit_cap: u64,
) -> Result<Option<usize>> {
    if *limit <= BigRational::zero() || *eps <= BigRational::zero() {
        return Err(Error::OutOfRange("limit and epsilon must be positive".into()));
    }
    let scale = BigRational::one() + eps;
    let lo = PowerProduct::from_rational(&(limit / &scale));
    let hi = PowerProduct::from_rational(&(limit * &scale));
    let inside = |x: &PowerProduct| -> Result<bool> {
        Ok(x.compare(&lo, bit_cap)? == Ordering::Greater && x.compare(&hi, bit_cap)? == Ordering::Less)
    };
    let Some(last) = samples.last() else {
        return Ok(None);
    };
    if !inside(last)? {
        return Ok(None);
    }
    for i in (0..samples.len()).rev() {
        if !inside(&samples[i])? {
            return Ok(Some(i));
        }
    }
    Ok(Some(0))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConvergenceReport {
    pub steps: u64,
    #[serde(with = "crate::bigser")]
    pub final_u_p: BigUint,
    #[serde(with = "crate::bigser")]
    pub final_v_p: BigUint,
    pub final_u_gap: String,
    pub final_v_gap: String,
    pub monotone_ok: bool,
}

/// First step at which `u` grows, `v` shrinks, or the two change together
/// or not at all.
pub fn monotonicity_failure(pairs: &[PairState]) -> Result<Option<u64>> {
    for w in pairs.windows(2) {
        let (s, t) = (&w[0], &w[1]);
        let du = t.u.compare(&s.u)?;
        let dv = t.v.compare(&s.v)?;
        let ok = matches!(
            (du, dv),
            (Ordering::Less, Ordering::Equal) | (Ordering::Equal, Ordering::Greater)
        );
        if !ok {
            return Ok(Some(t.index));
        }
    }
    Ok(None)
}

/// Runs `steps` steps and reports the final gaps `u - 1` and `a - v`.
pub fn convergence_report(params: Params, steps: u64, digits: u32) -> Result<ConvergenceReport> {
    if steps == 0 {
        return Err(Error::OutOfRange("at least one step is required".into()));
    }
    let pairs = generate_pairs(params, &StopCriterion::MaxSteps(steps))?;
    let last = pairs.last().expect("non-empty prefix");
    let (final_u_gap, final_v_gap) = gaps(last, digits)?;
    Ok(ConvergenceReport {
        steps,
        final_u_p: last.u.p().clone(),
        final_v_p: last.v.p().clone(),
        final_u_gap,
        final_v_gap,
        monotone_ok: monotonicity_failure(&pairs)?.is_none(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhaseRow {
    pub eta: u64,
    pub modifies: Side,
    pub head: u64,
    pub tail: u64,
    pub lambda: u64,
    #[serde(with = "crate::bigser")]
    pub u_p: BigUint,
    #[serde(with = "crate::bigser")]
    pub v_p: BigUint,
}

pub fn phase_rows(pairs: &[PairState], phases: &[Phase]) -> Vec<PhaseRow> {
    phases
        .iter()
        .map(|ph| {
            let head = &pairs[ph.head as usize];
            PhaseRow {
                eta: ph.eta,
                modifies: ph.modifies,
                head: ph.head,
                tail: ph.tail,
                lambda: ph.lambda,
                u_p: head.u.p().clone(),
                v_p: head.v.p().clone(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtractedRow {
    pub i: usize,
    #[serde(with = "crate::bigser")]
    pub tu_p: BigUint,
    #[serde(with = "crate::bigser")]
    pub tu_d: BigUint,
    #[serde(with = "crate::bigser")]
    pub tv_p: BigUint,
    #[serde(with = "crate::bigser")]
    pub tv_d: BigUint,
    pub tw_value_approx: String,
}

pub fn extracted_rows(seqs: &ExtractedSequences, digits: u32) -> Result<Vec<ExtractedRow>> {
    let cap = seqs.params.bit_cap();
    seqs.tu
        .iter()
        .zip(&seqs.tv)
        .zip(&seqs.tw)
        .enumerate()
        .map(|(i, ((u, v), w))| {
            Ok(ExtractedRow {
                i,
                tu_p: u.p().clone(),
                tu_d: u.d().clone(),
                tv_p: v.p().clone(),
                tv_d: v.d().clone(),
                tw_value_approx: w.approx(digits, cap)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prefix(a: u64, b: u64, steps: u64) -> Vec<PairState> {
        generate_pairs(Params::new(a, b).unwrap(), &StopCriterion::MaxSteps(steps)).unwrap()
    }

    #[test]
    fn two_three_phase_lengths() {
        let pairs = prefix(2, 3, 60);
        let phases = segment_phases(&pairs).unwrap();
        let l: Vec<u64> = phases.iter().map(|p| p.lambda).take(7).collect();
        assert_eq!(l, [1, 2, 2, 3, 1, 5, 2]);
        assert_eq!(phases[0].modifies, Side::V);
        for w in phases.windows(2) {
            assert_eq!(w[0].tail, w[1].head);
            assert_ne!(w[0].modifies, w[1].modifies);
        }
    }

    #[test]
    fn seven_eight_starts_with_u_phase() {
        let phases = segment_phases(&prefix(7, 8, 30)).unwrap();
        assert_eq!(phases[0].modifies, Side::U);
    }

    #[test]
    fn short_prefixes_rejected() {
        assert!(matches!(segment_phases(&prefix(2, 3, 1)), Err(Error::TooShort(_))));
        assert!(matches!(segment_phases(&prefix(2, 3, 0)), Err(Error::TooShort(_))));
        // one complete phase of length 1 once the second phase has begun
        assert_eq!(segment_phases(&prefix(2, 3, 2)).unwrap().len(), 1);
        assert!(matches!(extract_sequences(&prefix(2, 3, 2)), Err(Error::TooShort(_))));
    }

    #[test]
    fn closed_form_examples() {
        let p = Params::new(2, 3).unwrap();
        let (u, v) = (p.phi(1u32).unwrap(), p.phi(2u32).unwrap());
        assert_eq!(lambda_closed_form(&u, &v, Side::U).unwrap(), 2);
        let (u, v) = (p.phi(5u32).unwrap(), p.phi(2u32).unwrap());
        assert_eq!(lambda_closed_form(&u, &v, Side::V).unwrap(), 2);
        let (u, v) = (p.phi(41u32).unwrap(), p.phi(53u32).unwrap());
        assert_eq!(lambda_closed_form(&u, &v, Side::U).unwrap(), 5);
    }

    #[test]
    fn closed_form_matches_segments() {
        for (a, b) in [(2, 3), (3, 5), (7, 8)] {
            let pairs = prefix(a, b, 150);
            for ph in segment_phases(&pairs).unwrap() {
                let h = &pairs[ph.head as usize];
                assert_eq!(lambda_closed_form(&h.u, &h.v, ph.modifies).unwrap(), ph.lambda);
            }
        }
    }

    #[test]
    fn first_extracted_terms() {
        let seqs = extract_sequences(&prefix(2, 3, 30)).unwrap();
        assert_eq!(seqs.start_case, StartCase::VFirst);
        assert_eq!(seqs.tv[1].p(), &BigUint::from(2u32));
        assert_eq!(seqs.tu[1].p(), &BigUint::from(5u32));
        let cap = 1 << 20;
        let w0 = seqs.tw[0].value().compare(&PowerProduct::ratio(3u32, 2u32), cap).unwrap();
        let w1 = seqs.tw[1].value().compare(&PowerProduct::ratio(9u32, 8u32), cap).unwrap();
        assert_eq!((w0, w1), (Ordering::Equal, Ordering::Equal));
    }

    #[test]
    fn recursion_and_interleaving() {
        for (a, b, case) in [(2, 3, StartCase::VFirst), (7, 8, StartCase::UFirst)] {
            let seqs = extract_sequences(&prefix(a, b, 400)).unwrap();
            assert_eq!(seqs.start_case, case);
            assert!(seqs.tu.len() >= 11);
            let r = verify_recursive_form(&seqs).unwrap();
            assert!(r.matched(), "{a},{b}: {r:?}");
            assert_eq!(interleaving_failure(&seqs).unwrap(), None);
            assert_eq!(tv_increase_failure(&seqs).unwrap(), None);
        }
    }

    #[test]
    fn single_term_recursion_is_vacuous() {
        let mut seqs = extract_sequences(&prefix(2, 3, 30)).unwrap();
        seqs.tu.truncate(1);
        seqs.tv.truncate(1);
        seqs.tw.truncate(1);
        let r = verify_recursive_form(&seqs).unwrap();
        assert!(r.matched());
        assert_eq!(r.checked, 0);
    }

    #[test]
    fn band_indices() {
        let one = BigRational::one();
        let eps = BigRational::new(1.into(), 10.into());
        let constant = vec![PowerProduct::one(); 5];
        assert_eq!(convergence_band(&constant, &one, &eps, 1 << 20).unwrap(), Some(0));
        let seqs = extract_sequences(&prefix(2, 3, 200)).unwrap();
        let tu: Vec<_> = seqs.tu.iter().map(|e| e.value()).collect();
        assert!(convergence_band(&tu, &one, &eps, 1 << 20).unwrap().is_some());
        let outside = vec![PowerProduct::integer(2u32)];
        assert_eq!(convergence_band(&outside, &one, &eps, 1 << 20).unwrap(), None);
    }

    #[test]
    fn report_one_step_and_monotone() {
        let p = Params::new(2, 3).unwrap();
        let r = convergence_report(p, 1, 12).unwrap();
        // s_1 = (4/3, 16/9): gaps 1/3 and 2/9
        assert_eq!(r.final_u_gap, "0.333333333333");
        assert_eq!(r.final_v_gap, "0.222222222222");
        assert!(convergence_report(Params::new(7, 8).unwrap(), 50, 12).unwrap().monotone_ok);
    }
}
